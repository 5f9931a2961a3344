//! Expression language shared by attribute policies, behaviour formulas,
//! connector glue and SLA constraint definitions.
//!
//! Numbers are exact rationals so that `amount * PERC / 100` compares
//! without truncation. Dates are integer day numbers and money is integer
//! minor units; both share the rational carrier at evaluation time and are
//! kept apart only by the typechecker.

use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};

use crate::report::FindingCode;

pub type Rational = Ratio<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dtype {
    Int,
    Nat,
    Bool,
    Money,
    Date,
    Str,
    Enum(Vec<String>),
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dtype::Int => f.write_str("int"),
            Dtype::Nat => f.write_str("nat"),
            Dtype::Bool => f.write_str("bool"),
            Dtype::Money => f.write_str("money"),
            Dtype::Date => f.write_str("date"),
            Dtype::Str => f.write_str("string"),
            Dtype::Enum(items) => write!(f, "enum({})", items.join(", ")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventTag {
    Init,
    Reply,
    Commit,
    Cancel,
    Revoke,
}

impl EventTag {
    pub const ALL: [EventTag; 5] = [
        EventTag::Init,
        EventTag::Reply,
        EventTag::Commit,
        EventTag::Cancel,
        EventTag::Revoke,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventTag::Init => "init",
            EventTag::Reply => "reply",
            EventTag::Commit => "commit",
            EventTag::Cancel => "cancel",
            EventTag::Revoke => "revoke",
        }
    }

    pub fn from_name(s: &str) -> Option<EventTag> {
        EventTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for EventTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Polarity of an event relative to the party whose specification is
/// being read: `!` is emitted by the party, `?` is received by it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Emit,
    Receive,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Emit => '!',
            Direction::Receive => '?',
        }
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::Emit => Direction::Receive,
            Direction::Receive => Direction::Emit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventExpr {
    pub interaction: String,
    pub tag: EventTag,
    pub direction: Direction,
}

impl EventExpr {
    pub fn new(interaction: impl Into<String>, tag: EventTag, direction: Direction) -> Self {
        EventExpr {
            interaction: interaction.into(),
            tag,
            direction,
        }
    }
}

impl fmt::Display for EventExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}{}",
            self.interaction,
            self.tag,
            self.direction.symbol()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => PREC_OR,
            BinOp::And => PREC_AND,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => PREC_CMP,
            BinOp::Add | BinOp::Sub => PREC_ADD,
            BinOp::Mul | BinOp::Div | BinOp::Mod => PREC_MUL,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == PREC_CMP
    }
}

pub(crate) const PREC_IF: u8 = 0;
pub(crate) const PREC_OR: u8 = 1;
pub(crate) const PREC_AND: u8 = 2;
pub(crate) const PREC_NOT: u8 = 3;
pub(crate) const PREC_CMP: u8 = 4;
pub(crate) const PREC_ADD: u8 = 5;
pub(crate) const PREC_MUL: u8 = 6;
pub(crate) const PREC_NEG: u8 = 7;
pub(crate) const PREC_ATOM: u8 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    /// The weighted-semiring infinity.
    Inf,
    /// Dotted reference such as `bookTrip.amount`, `TC.KD`, `KD` or `today`.
    Ref(Vec<String>),
    /// Event atom; legal only as a top-level conjunct of a behaviour guard.
    Event(EventExpr),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `x in [lo..hi]`, inclusive.
    InRange(Box<Expr>, i64, i64),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn reference(path: &str) -> Expr {
        Expr::Ref(path.split('.').map(str::to_owned).collect())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn precedence(&self) -> u8 {
        match self {
            Expr::Int(n) if *n < 0 => PREC_NEG,
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Inf | Expr::Ref(_) | Expr::Event(_) => {
                PREC_ATOM
            }
            Expr::Unary(UnOp::Neg, _) => PREC_NEG,
            Expr::Unary(UnOp::Not, _) => PREC_NOT,
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::InRange(..) => PREC_CMP,
            Expr::If(..) => PREC_IF,
        }
    }

    pub fn contains_event(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Event(_)) {
                found = true;
            }
        });
        found
    }

    /// All dotted references, in left-to-right order, duplicates kept.
    pub fn refs(&self) -> Vec<&[String]> {
        let mut out = Vec::new();
        collect_refs(self, &mut out);
        out
    }

    /// Flattens nested `and` into its operands.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        flatten_and(self, &mut out);
        out
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Unary(_, e) | Expr::InRange(e, _, _) => e.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::If(c, a, b) => {
                c.visit(f);
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Rebuilds the expression with every reference passed through `f`.
    pub fn map_refs(&self, f: &dyn Fn(&[String]) -> Expr) -> Expr {
        match self {
            Expr::Ref(path) => f(path),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_refs(f))),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.map_refs(f), b.map_refs(f)),
            Expr::InRange(e, lo, hi) => Expr::InRange(Box::new(e.map_refs(f)), *lo, *hi),
            Expr::If(c, a, b) => Expr::If(
                Box::new(c.map_refs(f)),
                Box::new(a.map_refs(f)),
                Box::new(b.map_refs(f)),
            ),
            other => other.clone(),
        }
    }
}

fn collect_refs<'a>(e: &'a Expr, out: &mut Vec<&'a [String]>) {
    match e {
        Expr::Ref(p) => out.push(p),
        Expr::Unary(_, x) | Expr::InRange(x, _, _) => collect_refs(x, out),
        Expr::Binary(_, a, b) => {
            collect_refs(a, out);
            collect_refs(b, out);
        }
        Expr::If(c, a, b) => {
            collect_refs(c, out);
            collect_refs(a, out);
            collect_refs(b, out);
        }
        _ => {}
    }
}

fn flatten_and<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    if let Expr::Binary(BinOp::And, a, b) = e {
        flatten_and(a, out);
        flatten_and(b, out);
    } else {
        out.push(e);
    }
}

pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl Expr {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let own = self.precedence();
        if own < min {
            f.write_str("(")?;
            self.fmt_prec(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Str(s) => f.write_str(&quote_str(s)),
            Expr::Inf => f.write_str("inf"),
            Expr::Ref(path) => f.write_str(&path.join(".")),
            Expr::Event(ev) => write!(f, "{ev}"),
            Expr::Unary(UnOp::Neg, e) => {
                f.write_str("-")?;
                // `--x` would read as two separate minus tokens; keep it legible
                if matches!(**e, Expr::Unary(UnOp::Neg, _) | Expr::Int(_)) {
                    f.write_str("(")?;
                    e.fmt_prec(f, 0)?;
                    f.write_str(")")
                } else {
                    e.fmt_prec(f, PREC_NEG)
                }
            }
            Expr::Unary(UnOp::Not, e) => {
                f.write_str("not ")?;
                e.fmt_prec(f, PREC_NOT)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let (lmin, rmin) = if op.is_comparison() {
                    (p + 1, p + 1)
                } else {
                    (p, p + 1)
                };
                a.fmt_prec(f, lmin)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, rmin)
            }
            Expr::InRange(e, lo, hi) => {
                e.fmt_prec(f, PREC_ADD)?;
                write!(f, " in [{lo}..{hi}]")
            }
            Expr::If(c, a, b) => {
                f.write_str("if ")?;
                c.fmt_prec(f, 0)?;
                f.write_str(" then ")?;
                a.fmt_prec(f, 0)?;
                f.write_str(" else ")?;
                b.fmt_prec(f, 0)
            }
        }
    }

    /// Renders at a minimum precedence, parenthesising when needed.
    pub fn display_at(&self, min: u8) -> String {
        struct At<'a>(&'a Expr, u8);
        impl fmt::Display for At<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_prec(f, self.1)
            }
        }
        At(self, min).to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Num(Rational),
    Bool(bool),
    Str(String),
    Inf,
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Num(Rational::from_integer(n))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) if r.is_integer() => write!(f, "{}", r.to_integer()),
            Value::Num(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(&quote_str(s)),
            Value::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound reference `{0}`")]
    Unbound(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    Overflow,
    #[error("event atom `{0}` cannot be evaluated as a value")]
    EventAtom(String),
}

/// Name resolution for evaluation.
pub trait Env {
    fn lookup(&self, path: &[String]) -> Option<Value>;
}

impl<F> Env for F
where
    F: Fn(&[String]) -> Option<Value>,
{
    fn lookup(&self, path: &[String]) -> Option<Value> {
        self(path)
    }
}

pub fn eval(e: &Expr, env: &dyn Env) -> Result<Value, EvalError> {
    match e {
        Expr::Int(n) => Ok(Value::int(*n)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Str(s) => Ok(Value::Str(s.clone())),
        Expr::Inf => Ok(Value::Inf),
        Expr::Ref(path) => env
            .lookup(path)
            .ok_or_else(|| EvalError::Unbound(path.join("."))),
        Expr::Event(ev) => Err(EvalError::EventAtom(ev.to_string())),
        Expr::Unary(UnOp::Not, x) => match eval(x, env)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            v => Err(EvalError::Type(format!("`not` applied to {v}"))),
        },
        Expr::Unary(UnOp::Neg, x) => match eval(x, env)? {
            Value::Num(r) => Rational::zero()
                .checked_sub(&r)
                .map(Value::Num)
                .ok_or(EvalError::Overflow),
            v => Err(EvalError::Type(format!("negation applied to {v}"))),
        },
        Expr::Binary(BinOp::And, a, b) => {
            if !truth(eval(a, env)?)? {
                return Ok(Value::Bool(false));
            }
            Ok(Value::Bool(truth(eval(b, env)?)?))
        }
        Expr::Binary(BinOp::Or, a, b) => {
            if truth(eval(a, env)?)? {
                return Ok(Value::Bool(true));
            }
            Ok(Value::Bool(truth(eval(b, env)?)?))
        }
        Expr::Binary(op, a, b) => {
            let l = eval(a, env)?;
            let r = eval(b, env)?;
            binary(*op, l, r)
        }
        Expr::InRange(x, lo, hi) => match eval(x, env)? {
            Value::Num(r) => Ok(Value::Bool(
                r >= Rational::from_integer(*lo) && r <= Rational::from_integer(*hi),
            )),
            v => Err(EvalError::Type(format!("range test on {v}"))),
        },
        Expr::If(c, a, b) => {
            if truth(eval(c, env)?)? {
                eval(a, env)
            } else {
                eval(b, env)
            }
        }
    }
}

fn truth(v: Value) -> Result<bool, EvalError> {
    v.as_bool()
        .ok_or_else(|| EvalError::Type(format!("expected a boolean, found {v}")))
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use Value::*;
    if op.is_comparison() {
        let ord = match (&l, &r) {
            (Num(a), Num(b)) => Some(a.cmp(b)),
            (Inf, Inf) => Some(std::cmp::Ordering::Equal),
            (Inf, Num(_)) => Some(std::cmp::Ordering::Greater),
            (Num(_), Inf) => Some(std::cmp::Ordering::Less),
            _ => None,
        };
        let result = match (op, ord) {
            (BinOp::Eq, _) => l == r,
            (BinOp::Ne, _) => l != r,
            (_, None) => return Err(EvalError::Type(format!("cannot order {l} and {r}"))),
            (BinOp::Lt, Some(o)) => o.is_lt(),
            (BinOp::Le, Some(o)) => o.is_le(),
            (BinOp::Gt, Some(o)) => o.is_gt(),
            (BinOp::Ge, Some(o)) => o.is_ge(),
            _ => unreachable!("non-comparison operator"),
        };
        return Ok(Bool(result));
    }
    match (op, l, r) {
        (BinOp::Add, Inf, Num(_) | Inf) | (BinOp::Add, Num(_), Inf) => Ok(Inf),
        (BinOp::Add, Num(a), Num(b)) => a.checked_add(&b).map(Num).ok_or(EvalError::Overflow),
        (BinOp::Sub, Num(a), Num(b)) => a.checked_sub(&b).map(Num).ok_or(EvalError::Overflow),
        (BinOp::Mul, Num(a), Num(b)) => a.checked_mul(&b).map(Num).ok_or(EvalError::Overflow),
        (BinOp::Div, Num(_), Num(b)) if b.is_zero() => Err(EvalError::DivisionByZero),
        (BinOp::Div, Num(a), Num(b)) => a.checked_div(&b).map(Num).ok_or(EvalError::Overflow),
        (BinOp::Mod, Num(_), Num(b)) if b.is_zero() => Err(EvalError::DivisionByZero),
        (BinOp::Mod, Num(a), Num(b)) if a.is_integer() && b.is_integer() => a
            .to_integer()
            .checked_rem(b.to_integer().abs())
            .map(Value::int)
            .ok_or(EvalError::Overflow),
        (op, l, r) => Err(EvalError::Type(format!(
            "operator `{}` not defined on {l} and {r}",
            op.symbol()
        ))),
    }
}

// ---------------------------------------------------------------------------
// Typing

/// Static type of an expression. `Lit` is an integer literal, which unifies
/// with every numeric dtype; `nat` is typed as `Int`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ty {
    Lit,
    Int,
    Money,
    Date,
    Bool,
    Str,
    Enum(Vec<String>),
    Inf,
}

impl From<&Dtype> for Ty {
    fn from(d: &Dtype) -> Ty {
        match d {
            Dtype::Int | Dtype::Nat => Ty::Int,
            Dtype::Bool => Ty::Bool,
            Dtype::Money => Ty::Money,
            Dtype::Date => Ty::Date,
            Dtype::Str => Ty::Str,
            Dtype::Enum(items) => Ty::Enum(items.clone()),
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Lit => f.write_str("integer literal"),
            Ty::Int => f.write_str("int"),
            Ty::Money => f.write_str("money"),
            Ty::Date => f.write_str("date"),
            Ty::Bool => f.write_str("bool"),
            Ty::Str => f.write_str("string"),
            Ty::Enum(items) => write!(f, "enum({})", items.join(", ")),
            Ty::Inf => f.write_str("inf"),
        }
    }
}

impl Ty {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Lit | Ty::Int | Ty::Money | Ty::Date | Ty::Inf)
    }
}

/// A typing problem: the finding code to report and a message.
pub type Issue = (FindingCode, String);

/// Name resolution for typing.
pub trait TypeEnv {
    fn resolve(&self, path: &[String]) -> Result<Ty, Issue>;
}

fn join(a: &Ty, b: &Ty) -> Option<Ty> {
    match (a, b) {
        _ if a == b => Some(a.clone()),
        (Ty::Lit, t) | (t, Ty::Lit) if t.is_numeric() => Some(t.clone()),
        (Ty::Inf, Ty::Int) | (Ty::Int, Ty::Inf) => Some(Ty::Inf),
        (Ty::Enum(_), Ty::Str) | (Ty::Str, Ty::Enum(_)) => Some(Ty::Str),
        _ => None,
    }
}

/// Infers the type of `e`, appending any problems to `issues`. Returns
/// `None` when the type cannot be determined; the cause is already in
/// `issues`.
pub fn infer(e: &Expr, env: &dyn TypeEnv, issues: &mut Vec<Issue>) -> Option<Ty> {
    let mismatch = |issues: &mut Vec<Issue>, msg: String| {
        issues.push((FindingCode::TypeMismatch, msg));
        None
    };
    match e {
        Expr::Int(_) => Some(Ty::Lit),
        Expr::Bool(_) => Some(Ty::Bool),
        Expr::Str(_) => Some(Ty::Str),
        Expr::Inf => Some(Ty::Inf),
        Expr::Ref(path) => match env.resolve(path) {
            Ok(t) => Some(t),
            Err(issue) => {
                issues.push(issue);
                None
            }
        },
        Expr::Event(ev) => mismatch(issues, format!("event atom `{ev}` used as a value")),
        Expr::Unary(UnOp::Not, x) => {
            let t = infer(x, env, issues)?;
            if t == Ty::Bool {
                Some(Ty::Bool)
            } else {
                mismatch(issues, format!("`not` applied to {t} in `{e}`"))
            }
        }
        Expr::Unary(UnOp::Neg, x) => {
            let t = infer(x, env, issues)?;
            if matches!(t, Ty::Lit | Ty::Int | Ty::Money) {
                Some(t)
            } else {
                mismatch(issues, format!("negation applied to {t} in `{e}`"))
            }
        }
        Expr::Binary(op, a, b) => {
            let ta = infer(a, env, issues);
            let tb = infer(b, env, issues);
            let (ta, tb) = (ta?, tb?);
            match binary_type(*op, &ta, &tb) {
                Some(t) => Some(t),
                None => mismatch(
                    issues,
                    format!("`{}` between {ta} and {tb} in `{e}`", op.symbol()),
                ),
            }
        }
        Expr::InRange(x, lo, hi) => {
            let t = infer(x, env, issues)?;
            if lo > hi {
                return mismatch(issues, format!("empty range [{lo}..{hi}] in `{e}`"));
            }
            if matches!(t, Ty::Lit | Ty::Int | Ty::Money | Ty::Date) {
                Some(Ty::Bool)
            } else {
                mismatch(issues, format!("range test on {t} in `{e}`"))
            }
        }
        Expr::If(c, a, b) => {
            let tc = infer(c, env, issues);
            let ta = infer(a, env, issues);
            let tb = infer(b, env, issues);
            if let Some(tc) = &tc {
                if *tc != Ty::Bool {
                    issues.push((
                        FindingCode::TypeMismatch,
                        format!("condition of `if` has type {tc}"),
                    ));
                }
            }
            let (ta, tb) = (ta?, tb?);
            match join(&ta, &tb) {
                Some(t) => Some(t),
                None => mismatch(issues, format!("branches of `if` have types {ta} and {tb}")),
            }
        }
    }
}

fn binary_type(op: BinOp, a: &Ty, b: &Ty) -> Option<Ty> {
    use Ty::*;
    match op {
        BinOp::And | BinOp::Or => (*a == Bool && *b == Bool).then_some(Bool),
        BinOp::Eq | BinOp::Ne => join(a, b).map(|_| Bool),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let j = join(a, b)?;
            j.is_numeric().then_some(Bool)
        }
        BinOp::Add => match (a, b) {
            (Lit, Lit) => Some(Lit),
            (Lit, t) | (t, Lit) if matches!(t, Int | Money | Date | Inf) => Some(t.clone()),
            (Int, Int) => Some(Int),
            (Money, Money) => Some(Money),
            (Date, Int) | (Int, Date) => Some(Date),
            (Inf, Int | Inf) | (Int, Inf) => Some(Inf),
            _ => None,
        },
        BinOp::Sub => match (a, b) {
            (Lit, Lit) => Some(Lit),
            (Lit, Int) | (Int, Lit) | (Int, Int) => Some(Int),
            (Money, Lit) | (Lit, Money) | (Money, Money) => Some(Money),
            (Date, Date) => Some(Int),
            (Date, Lit | Int) => Some(Date),
            _ => None,
        },
        BinOp::Mul => match (a, b) {
            (Lit, Lit) => Some(Lit),
            (Lit | Int, Int) | (Int, Lit) => Some(Int),
            (Money, Lit | Int) | (Lit | Int, Money) => Some(Money),
            _ => None,
        },
        BinOp::Div => match (a, b) {
            (Lit, Lit) => Some(Lit),
            (Lit | Int, Int) | (Int, Lit) => Some(Int),
            (Money, Lit | Int) => Some(Money),
            (Money, Money) => Some(Int),
            _ => None,
        },
        BinOp::Mod => match (a, b) {
            (Lit, Lit) => Some(Lit),
            (Lit | Int, Lit | Int) => Some(Int),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(path: &[String]) -> Option<Value> {
        match path.join(".").as_str() {
            "bookTrip.amount" => Some(Value::int(1000)),
            "PERC" => Some(Value::int(50)),
            "x" => Some(Value::int(7)),
            _ => None,
        }
    }

    #[test]
    fn percentage_is_exact() {
        let e = Expr::binary(
            BinOp::Div,
            Expr::binary(BinOp::Mul, Expr::reference("bookTrip.amount"), Expr::reference("PERC")),
            Expr::Int(100),
        );
        assert_eq!(eval(&e, &env).unwrap(), Value::int(500));
        let third = Expr::binary(BinOp::Div, Expr::Int(1), Expr::Int(3));
        assert_eq!(eval(&third, &env).unwrap(), Value::Num(Rational::new(1, 3)));
    }

    #[test]
    fn division_by_zero_and_overflow_are_errors() {
        let e = Expr::binary(BinOp::Div, Expr::Int(1), Expr::Int(0));
        assert_eq!(eval(&e, &env), Err(EvalError::DivisionByZero));
        let e = Expr::binary(BinOp::Mul, Expr::Int(i64::MAX), Expr::Int(2));
        assert_eq!(eval(&e, &env), Err(EvalError::Overflow));
    }

    #[test]
    fn unbound_reference() {
        assert_eq!(
            eval(&Expr::reference("nope"), &env),
            Err(EvalError::Unbound("nope".into()))
        );
    }

    #[test]
    fn infinity_orders_above_numbers() {
        let e = Expr::binary(BinOp::Lt, Expr::Int(5), Expr::Inf);
        assert_eq!(eval(&e, &env).unwrap(), Value::Bool(true));
        let e = Expr::binary(BinOp::Add, Expr::Inf, Expr::Int(5));
        assert_eq!(eval(&e, &env).unwrap(), Value::Inf);
    }

    #[test]
    fn display_parenthesises_by_precedence() {
        let e = Expr::binary(
            BinOp::Sub,
            Expr::reference("a"),
            Expr::binary(BinOp::Sub, Expr::reference("b"), Expr::reference("c")),
        );
        assert_eq!(e.to_string(), "a - (b - c)");
        let e = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::Int(1), Expr::Int(2)),
            Expr::Int(3),
        );
        assert_eq!(e.to_string(), "(1 + 2) * 3");
        let e = Expr::Unary(UnOp::Neg, Box::new(Expr::Int(-3)));
        assert_eq!(e.to_string(), "-(-3)");
    }

    struct Types;
    impl TypeEnv for Types {
        fn resolve(&self, path: &[String]) -> Result<Ty, Issue> {
            match path.join(".").as_str() {
                "amount" => Ok(Ty::Money),
                "out" => Ok(Ty::Date),
                "today" => Ok(Ty::Date),
                "KD" => Ok(Ty::Int),
                "flag" => Ok(Ty::Bool),
                other => Err((FindingCode::UnknownVariable, other.to_owned())),
            }
        }
    }

    fn ty(src: Expr) -> (Option<Ty>, Vec<Issue>) {
        let mut issues = Vec::new();
        let t = infer(&src, &Types, &mut issues);
        (t, issues)
    }

    #[test]
    fn date_arithmetic_types() {
        let e = Expr::binary(
            BinOp::Lt,
            Expr::binary(BinOp::Add, Expr::reference("today"), Expr::reference("KD")),
            Expr::reference("out"),
        );
        assert_eq!(ty(e), (Some(Ty::Bool), vec![]));
    }

    #[test]
    fn date_versus_bool_is_a_mismatch() {
        let (t, issues) = ty(Expr::binary(BinOp::Eq, Expr::reference("out"), Expr::reference("flag")));
        assert_eq!(t, None);
        assert_eq!(issues[0].0, FindingCode::TypeMismatch);
    }

    #[test]
    fn money_times_money_is_rejected() {
        let (t, _) = ty(Expr::binary(BinOp::Mul, Expr::reference("amount"), Expr::reference("amount")));
        assert_eq!(t, None);
    }
}
