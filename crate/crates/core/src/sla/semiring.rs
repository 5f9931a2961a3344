use std::fmt;

use num_traits::CheckedMul;

use crate::expr::{Rational, Value};

/// A c-semiring: `plus` selects the better of two values, `times` combines
/// them. Implementations must be commutative and associative in both
/// operations, `plus` idempotent with `zero` as identity, `times` with `one`
/// as identity and `zero` absorbing, and `times` distributing over `plus`.
pub trait CSemiring {
    type Elem: Clone + Eq + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn plus(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn times(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    /// The order induced by `plus`: `a` is at least as good as `b`.
    fn at_least(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.plus(a, b) == *a
    }
}

/// `({false, true}, or, and, false, true)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Boolean;

impl CSemiring for Boolean {
    type Elem = bool;

    fn zero(&self) -> bool {
        false
    }
    fn one(&self) -> bool {
        true
    }
    fn plus(&self, a: &bool, b: &bool) -> bool {
        *a || *b
    }
    fn times(&self, a: &bool, b: &bool) -> bool {
        *a && *b
    }
}

/// A fuzzy grade in `[0, 1]`, stored as a numerator over [`Grade::DENOM`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Grade(u32);

impl Grade {
    pub const DENOM: u32 = 1_000_000;
    pub const ZERO: Grade = Grade(0);
    pub const ONE: Grade = Grade(Grade::DENOM);

    /// Returns `None` unless `numer <= DENOM`.
    pub fn new(numer: u32) -> Option<Grade> {
        (numer <= Grade::DENOM).then_some(Grade(numer))
    }

    pub fn numer(self) -> u32 {
        self.0
    }

    /// Floors a rational in `[0, 1]` onto the grade lattice.
    pub fn from_rational(r: Rational) -> Option<Grade> {
        if r < Rational::from_integer(0) || r > Rational::from_integer(1) {
            return None;
        }
        let scaled = r.checked_mul(&Rational::from_integer(i64::from(Grade::DENOM)))?;
        Grade::new(scaled.floor().to_integer() as u32)
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / Grade::DENOM;
        let frac = self.0 % Grade::DENOM;
        if frac == 0 {
            return write!(f, "{whole}");
        }
        let digits = format!("{frac:06}");
        write!(f, "{whole}.{}", digits.trim_end_matches('0'))
    }
}

/// `([0, 1], max, min, 0, 1)` over fixed-denominator grades.
#[derive(Clone, Copy, Debug, Default)]
pub struct Fuzzy;

impl CSemiring for Fuzzy {
    type Elem = Grade;

    fn zero(&self) -> Grade {
        Grade::ZERO
    }
    fn one(&self) -> Grade {
        Grade::ONE
    }
    fn plus(&self, a: &Grade, b: &Grade) -> Grade {
        *a.max(b)
    }
    fn times(&self, a: &Grade, b: &Grade) -> Grade {
        *a.min(b)
    }
}

/// A weight: a natural number or infinity. Derived ordering puts
/// `Infinite` above every finite weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weight {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(n) => write!(f, "{n}"),
            Weight::Infinite => f.write_str("inf"),
        }
    }
}

/// `(N ∪ {∞}, min, +, ∞, 0)`. Addition saturates to infinity.
#[derive(Clone, Copy, Debug, Default)]
pub struct Weighted;

impl CSemiring for Weighted {
    type Elem = Weight;

    fn zero(&self) -> Weight {
        Weight::Infinite
    }
    fn one(&self) -> Weight {
        Weight::Finite(0)
    }
    fn plus(&self, a: &Weight, b: &Weight) -> Weight {
        *a.min(b)
    }
    fn times(&self, a: &Weight, b: &Weight) -> Weight {
        match (a, b) {
            (Weight::Finite(x), Weight::Finite(y)) => {
                x.checked_add(*y).map_or(Weight::Infinite, Weight::Finite)
            }
            _ => Weight::Infinite,
        }
    }
}

/// The builtin semirings, selectable by name in constraint files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemiringKind {
    Boolean,
    Fuzzy,
    Weighted,
}

impl SemiringKind {
    pub const ALL: [SemiringKind; 3] = [SemiringKind::Boolean, SemiringKind::Fuzzy, SemiringKind::Weighted];

    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Boolean => "boolean",
            SemiringKind::Fuzzy => "fuzzy",
            SemiringKind::Weighted => "weighted",
        }
    }

    pub fn from_name(s: &str) -> Option<SemiringKind> {
        SemiringKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Reads an evaluated constraint value as an element of this semiring.
    /// Boolean accepts `true`/`false` and the integers 0 and 1; fuzzy
    /// accepts numbers in `[0, 1]` (floored to the grade lattice) and
    /// booleans; weighted accepts naturals and `inf`.
    pub fn level_of(self, v: &Value) -> Option<Level> {
        let zero = Rational::from_integer(0);
        let one = Rational::from_integer(1);
        match (self, v) {
            (SemiringKind::Boolean, Value::Bool(b)) => Some(Level::Bool(*b)),
            (SemiringKind::Boolean, Value::Num(r)) if *r == zero || *r == one => {
                Some(Level::Bool(*r == one))
            }
            (SemiringKind::Fuzzy, Value::Bool(b)) => {
                Some(Level::Grade(if *b { Grade::ONE } else { Grade::ZERO }))
            }
            (SemiringKind::Fuzzy, Value::Num(r)) => Grade::from_rational(*r).map(Level::Grade),
            (SemiringKind::Weighted, Value::Inf) => Some(Level::Weight(Weight::Infinite)),
            (SemiringKind::Weighted, Value::Num(r)) if r.is_integer() && *r >= zero => {
                u64::try_from(r.to_integer()).ok().map(|n| Level::Weight(Weight::Finite(n)))
            }
            _ => None,
        }
    }

    /// Moves `l` into this semiring. Booleans embed anywhere as zero/one;
    /// any other cross-semiring move is refused.
    pub fn embed(self, l: Level) -> Option<Level> {
        match (self, l) {
            (_, Level::Bool(b)) => Some(if b { self.one() } else { self.zero() }),
            (SemiringKind::Fuzzy, Level::Grade(_)) | (SemiringKind::Weighted, Level::Weight(_)) => {
                Some(l)
            }
            _ => None,
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An element of one of the builtin semirings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Bool(bool),
    Grade(Grade),
    Weight(Weight),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Bool(b) => write!(f, "{b}"),
            Level::Grade(g) => write!(f, "{g}"),
            Level::Weight(w) => write!(f, "{w}"),
        }
    }
}

impl CSemiring for SemiringKind {
    type Elem = Level;

    fn zero(&self) -> Level {
        match self {
            SemiringKind::Boolean => Level::Bool(Boolean.zero()),
            SemiringKind::Fuzzy => Level::Grade(Fuzzy.zero()),
            SemiringKind::Weighted => Level::Weight(Weighted.zero()),
        }
    }

    fn one(&self) -> Level {
        match self {
            SemiringKind::Boolean => Level::Bool(Boolean.one()),
            SemiringKind::Fuzzy => Level::Grade(Fuzzy.one()),
            SemiringKind::Weighted => Level::Weight(Weighted.one()),
        }
    }

    fn plus(&self, a: &Level, b: &Level) -> Level {
        match (a, b) {
            (Level::Bool(x), Level::Bool(y)) => Level::Bool(Boolean.plus(x, y)),
            (Level::Grade(x), Level::Grade(y)) => Level::Grade(Fuzzy.plus(x, y)),
            (Level::Weight(x), Level::Weight(y)) => Level::Weight(Weighted.plus(x, y)),
            _ => panic!("plus on elements of different semirings: {a:?}, {b:?}"),
        }
    }

    fn times(&self, a: &Level, b: &Level) -> Level {
        match (a, b) {
            (Level::Bool(x), Level::Bool(y)) => Level::Bool(Boolean.times(x, y)),
            (Level::Grade(x), Level::Grade(y)) => Level::Grade(Fuzzy.times(x, y)),
            (Level::Weight(x), Level::Weight(y)) => Level::Weight(Weighted.times(x, y)),
            _ => panic!("times on elements of different semirings: {a:?}, {b:?}"),
        }
    }
}
