//! Soft constraints over SLA variables, valued in a c-semiring, and
//! exhaustive optimisation for negotiating agreements.

mod semiring;

use std::collections::{BTreeMap, BTreeSet};

pub use semiring::{Boolean, CSemiring, Fuzzy, Grade, Level, SemiringKind, Weight, Weighted};

use crate::expr::{eval, EvalError, Expr, Value};
use crate::model::{ModelBundle, QualifiedName, VoModule};
use crate::span::Span;

/// Default bound on the number of assignments enumerated by
/// [`best_assignments`].
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

/// A `POLICY` block: a semiring-valued function of the scoped variables.
///
/// `params` optionally names the scope variables by position, so
/// `def(d, p)` over `TC.KD, TR.PERC` lets the body say `d` for `TC.KD`.
/// Qualified names are always in scope as well.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintDef {
    pub name: String,
    pub scope: Vec<QualifiedName>,
    pub semiring: SemiringKind,
    pub params: Vec<String>,
    pub def: Expr,
    pub span: Span,
}

impl ConstraintDef {
    /// Resolves a reference in the body against an assignment.
    fn lookup(&self, a: &Assignment, path: &[String]) -> Option<Value> {
        let q = match path {
            [single] => {
                let i = self.params.iter().position(|p| p == single)?;
                self.scope.get(i)?.clone()
            }
            [owner, var] => QualifiedName::new(owner.as_str(), var.as_str()),
            _ => return None,
        };
        if !self.scope.contains(&q) {
            return None;
        }
        a.get(&q).map(|v| Value::int(*v))
    }
}

/// An SLA variable with its finite, inclusive domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualifiedVar {
    pub name: QualifiedName,
    pub lo: i64,
    pub hi: i64,
}

impl QualifiedVar {
    pub fn new(name: QualifiedName, lo: i64, hi: i64) -> Self {
        QualifiedVar { name, lo, hi }
    }

    pub fn size(&self) -> u128 {
        if self.hi < self.lo {
            0
        } else {
            (i128::from(self.hi) - i128::from(self.lo) + 1) as u128
        }
    }
}

pub type Assignment = BTreeMap<QualifiedName, i64>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SlaError {
    #[error("assignment gives no value to `{0}`")]
    IncompleteAssignment(QualifiedName),
    #[error("value {value} of `{var}` is outside [{lo}..{hi}]")]
    OutOfDomain {
        var: QualifiedName,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("{size} assignments exceed the search cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u64 },
    #[error("no assignment achieves a value better than the semiring zero")]
    NoAgreement,
    #[error("constraint `{constraint}` scopes `{var}`, which is not a problem variable")]
    UnknownVariable { constraint: String, var: QualifiedName },
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(QualifiedName),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(QualifiedName),
    #[error("constraint `{constraint}`: {error}")]
    Evaluation { constraint: String, error: EvalError },
    #[error("constraint `{constraint}` produced {value}, which is not a {semiring} value")]
    NotInCarrier {
        constraint: String,
        value: String,
        semiring: SemiringKind,
    },
    #[error("constraint `{constraint}` is {declared} and cannot be combined in the {target} semiring")]
    SemiringMismatch {
        constraint: String,
        declared: SemiringKind,
        target: SemiringKind,
    },
    #[error("VO `{vo}` has no SLA variable `{var}` with a declared range")]
    UnresolvedSlaVariable { vo: String, var: QualifiedName },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintProblem {
    pub semiring: SemiringKind,
    pub variables: Vec<QualifiedVar>,
    pub constraints: Vec<ConstraintDef>,
}

impl ConstraintProblem {
    /// Checks that variables are distinct with non-empty domains and that
    /// every constraint scope is covered.
    pub fn new(
        semiring: SemiringKind,
        variables: Vec<QualifiedVar>,
        constraints: Vec<ConstraintDef>,
    ) -> Result<Self, SlaError> {
        let mut seen = BTreeSet::new();
        for v in &variables {
            if !seen.insert(&v.name) {
                return Err(SlaError::DuplicateVariable(v.name.clone()));
            }
            if v.size() == 0 {
                return Err(SlaError::EmptyDomain(v.name.clone()));
            }
        }
        for c in &constraints {
            if let Some(q) = c.scope.iter().find(|q| !seen.contains(q)) {
                return Err(SlaError::UnknownVariable {
                    constraint: c.name.clone(),
                    var: q.clone(),
                });
            }
        }
        Ok(ConstraintProblem {
            semiring,
            variables,
            constraints,
        })
    }

    /// Number of total assignments, saturating at `u128::MAX`.
    pub fn search_space(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.size()))
    }
}

/// The value of one constraint under `a`, embedded in `target`.
fn constraint_level(c: &ConstraintDef, a: &Assignment, target: SemiringKind) -> Result<Level, SlaError> {
    let env = |path: &[String]| c.lookup(a, path);
    let v = eval(&c.def, &env).map_err(|error| SlaError::Evaluation {
        constraint: c.name.clone(),
        error,
    })?;
    let level = c.semiring.level_of(&v).ok_or_else(|| SlaError::NotInCarrier {
        constraint: c.name.clone(),
        value: v.to_string(),
        semiring: c.semiring,
    })?;
    target.embed(level).ok_or(SlaError::SemiringMismatch {
        constraint: c.name.clone(),
        declared: c.semiring,
        target,
    })
}

/// Combines every constraint of `p` under the total assignment `a`.
pub fn evaluate(p: &ConstraintProblem, a: &Assignment) -> Result<Level, SlaError> {
    for v in &p.variables {
        let value = *a
            .get(&v.name)
            .ok_or_else(|| SlaError::IncompleteAssignment(v.name.clone()))?;
        if value < v.lo || value > v.hi {
            return Err(SlaError::OutOfDomain {
                var: v.name.clone(),
                value,
                lo: v.lo,
                hi: v.hi,
            });
        }
    }
    combine(p, a)
}

fn combine(p: &ConstraintProblem, a: &Assignment) -> Result<Level, SlaError> {
    let s = p.semiring;
    let mut acc = s.one();
    for c in &p.constraints {
        acc = s.times(&acc, &constraint_level(c, a, s)?);
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Refuse problems with more total assignments than this.
    pub cap: u64,
    /// Keep at most this many optimal assignments; the count is exact.
    pub keep: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            cap: DEFAULT_SEARCH_CAP,
            keep: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimum {
    pub value: Level,
    /// Optimal assignments in enumeration order, truncated to
    /// [`SearchOptions::keep`].
    pub assignments: Vec<Assignment>,
    /// Exact number of optimal assignments.
    pub count: u64,
    /// The optimal assignment that is largest in the lexicographic order of
    /// values, taken over variables sorted by qualified name.
    pub preferred: Assignment,
}

pub fn best_assignments(p: &ConstraintProblem) -> Result<Optimum, SlaError> {
    best_assignments_with(p, SearchOptions::default())
}

/// Exhaustive search. Variables are enumerated in qualified-name order with
/// the last one varying fastest, so assignments arrive in ascending
/// lexicographic order.
pub fn best_assignments_with(p: &ConstraintProblem, opts: SearchOptions) -> Result<Optimum, SlaError> {
    let size = p.search_space();
    if size > u128::from(opts.cap) {
        return Err(SlaError::SearchSpaceTooLarge { size, cap: opts.cap });
    }
    let s = p.semiring;
    let mut vars: Vec<&QualifiedVar> = p.variables.iter().collect();
    vars.sort();
    let mut current: Assignment = vars.iter().map(|v| (v.name.clone(), v.lo)).collect();

    let mut best = s.zero();
    let mut assignments = Vec::new();
    let mut count = 0u64;
    let mut preferred = current.clone();
    loop {
        let value = combine(p, &current)?;
        let joined = s.plus(&best, &value);
        if joined != best {
            // strictly better
            best = joined;
            assignments.clear();
            count = 0;
        }
        if value == best {
            count += 1;
            if assignments.len() < opts.keep {
                assignments.push(current.clone());
            }
            preferred = current.clone();
        }
        // advance the odometer
        let mut i = vars.len();
        loop {
            if i == 0 {
                return Ok(Optimum {
                    value: best,
                    assignments,
                    count,
                    preferred,
                });
            }
            i -= 1;
            let v = vars[i];
            let slot = current.get_mut(&v.name).expect("variable present");
            if *slot < v.hi {
                *slot += 1;
                break;
            }
            *slot = v.lo;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlaAgreement {
    pub assignment: Assignment,
    pub value: Level,
}

/// Solves the joint problem of a VO policy and customer preferences over
/// `variables`, which supplies the domains. Only variables in some scope
/// take part. Ties go to the lexicographically largest assignment over
/// variables sorted by qualified name.
pub fn negotiate(
    vo_policy: &[ConstraintDef],
    customer_prefs: &[ConstraintDef],
    semiring: SemiringKind,
    variables: &[QualifiedVar],
    opts: SearchOptions,
) -> Result<SlaAgreement, SlaError> {
    let constraints: Vec<ConstraintDef> = vo_policy.iter().chain(customer_prefs).cloned().collect();
    let mut used: Vec<QualifiedVar> = Vec::new();
    for c in &constraints {
        for q in &c.scope {
            if used.iter().any(|v| v.name == *q) {
                continue;
            }
            let v = variables.iter().find(|v| v.name == *q).ok_or_else(|| {
                SlaError::UnknownVariable {
                    constraint: c.name.clone(),
                    var: q.clone(),
                }
            })?;
            used.push(v.clone());
        }
    }
    let problem = ConstraintProblem::new(semiring, used, constraints)?;
    let opt = best_assignments_with(&problem, SearchOptions { keep: 0, ..opts })?;
    if opt.value == semiring.zero() {
        return Err(SlaError::NoAgreement);
    }
    Ok(SlaAgreement {
        assignment: opt.preferred,
        value: opt.value,
    })
}

/// The SLA variables a VO exposes, with domains taken from the component
/// specifications labelling their owner nodes.
pub fn vo_variables(vo: &VoModule, bundle: &ModelBundle) -> Result<Vec<QualifiedVar>, SlaError> {
    vo.external
        .sla_vars
        .iter()
        .map(|q| {
            vo.graph
                .node(&q.owner)
                .and_then(|n| bundle.spec(&n.label))
                .and_then(|s| s.sla_var(&q.var))
                .map(|d| QualifiedVar::new(q.clone(), d.lo, d.hi))
                .ok_or_else(|| SlaError::UnresolvedSlaVariable {
                    vo: vo.name.clone(),
                    var: q.clone(),
                })
        })
        .collect()
}

/// The semiring a set of constraints naturally lives in: the single
/// non-boolean semiring among them, or boolean when all are boolean.
/// Returns `None` when two different non-boolean semirings are mixed.
pub fn joint_semiring<'a>(constraints: impl IntoIterator<Item = &'a ConstraintDef>) -> Option<SemiringKind> {
    let mut joint = SemiringKind::Boolean;
    for c in constraints {
        match (joint, c.semiring) {
            (_, SemiringKind::Boolean) => {}
            (SemiringKind::Boolean, k) => joint = k,
            (j, k) if j == k => {}
            _ => return None,
        }
    }
    Some(joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp;

    fn q(s: &str) -> QualifiedName {
        let (o, v) = s.split_once('.').unwrap();
        QualifiedName::new(o, v)
    }

    fn def(name: &str, scope: &[&str], params: &[&str], k: SemiringKind, body: Expr) -> ConstraintDef {
        ConstraintDef {
            name: name.into(),
            scope: scope.iter().map(|s| q(s)).collect(),
            semiring: k,
            params: params.iter().map(|s| s.to_string()).collect(),
            def: body,
            span: Span::default(),
        }
    }

    #[test]
    fn constant_zero_makes_everything_optimal() {
        let p = ConstraintProblem::new(
            SemiringKind::Boolean,
            vec![QualifiedVar::new(q("A.x"), 0, 2), QualifiedVar::new(q("A.y"), 0, 3)],
            vec![def("z", &["A.x", "A.y"], &[], SemiringKind::Boolean, Expr::Bool(false))],
        )
        .unwrap();
        let opt = best_assignments(&p).unwrap();
        assert_eq!(opt.value, Level::Bool(false));
        assert_eq!(opt.count, 12);
        assert_eq!(opt.assignments.len(), 12);
    }

    #[test]
    fn weighted_minimum_at_zero() {
        let p = ConstraintProblem::new(
            SemiringKind::Weighted,
            vec![QualifiedVar::new(q("N.x"), 0, 3)],
            vec![def("w", &["N.x"], &["x"], SemiringKind::Weighted, Expr::reference("x"))],
        )
        .unwrap();
        let opt = best_assignments(&p).unwrap();
        assert_eq!(opt.value, Level::Weight(Weight::Finite(0)));
        assert_eq!(opt.assignments, vec![Assignment::from([(q("N.x"), 0)])]);
    }

    #[test]
    fn evaluate_rejects_partial_and_out_of_domain() {
        let p = ConstraintProblem::new(
            SemiringKind::Boolean,
            vec![QualifiedVar::new(q("A.x"), 0, 2)],
            vec![],
        )
        .unwrap();
        assert_eq!(
            evaluate(&p, &Assignment::new()),
            Err(SlaError::IncompleteAssignment(q("A.x")))
        );
        assert!(matches!(
            evaluate(&p, &Assignment::from([(q("A.x"), 5)])),
            Err(SlaError::OutOfDomain { value: 5, .. })
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let p = ConstraintProblem::new(
            SemiringKind::Boolean,
            vec![QualifiedVar::new(q("A.x"), 0, 99), QualifiedVar::new(q("A.y"), 0, 99)],
            vec![],
        )
        .unwrap();
        let r = best_assignments_with(&p, SearchOptions { cap: 9_999, keep: 1 });
        assert_eq!(r, Err(SlaError::SearchSpaceTooLarge { size: 10_000, cap: 9_999 }));
    }

    #[test]
    fn tie_break_prefers_larger_values() {
        // x + y <= 3 over [0..3]^2: optimal set is the triangle
        let body = Expr::binary(
            BinOp::Le,
            Expr::binary(BinOp::Add, Expr::reference("A.x"), Expr::reference("A.y")),
            Expr::Int(3),
        );
        let vars = [QualifiedVar::new(q("A.x"), 0, 3), QualifiedVar::new(q("A.y"), 0, 3)];
        let c = def("t", &["A.x", "A.y"], &[], SemiringKind::Boolean, body);
        let agreement = negotiate(&[c], &[], SemiringKind::Boolean, &vars, SearchOptions::default()).unwrap();
        assert_eq!(agreement.assignment, Assignment::from([(q("A.x"), 3), (q("A.y"), 0)]));
    }

    #[test]
    fn fuzzy_constraint_cannot_join_weighted_problem() {
        let c = def("f", &["A.x"], &[], SemiringKind::Fuzzy, Expr::Int(1));
        let p = ConstraintProblem::new(SemiringKind::Weighted, vec![QualifiedVar::new(q("A.x"), 0, 0)], vec![c]).unwrap();
        assert!(matches!(evaluate(&p, &Assignment::from([(q("A.x"), 0)])), Err(SlaError::SemiringMismatch { .. })));
    }

    #[test]
    fn joint_semiring_picks_the_non_boolean_one() {
        let b = def("b", &[], &[], SemiringKind::Boolean, Expr::Bool(true));
        let f = def("f", &[], &[], SemiringKind::Fuzzy, Expr::Int(1));
        let w = def("w", &[], &[], SemiringKind::Weighted, Expr::Int(1));
        assert_eq!(joint_semiring([&b]), Some(SemiringKind::Boolean));
        assert_eq!(joint_semiring([&b, &f]), Some(SemiringKind::Fuzzy));
        assert_eq!(joint_semiring([&f, &w]), None);
    }
}
