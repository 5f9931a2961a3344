//! Evolution of a business configuration by single actions.

use std::collections::BTreeSet;

use super::SessionLedger;
use crate::model::{
    validate_business_configuration, BusinessConfiguration, External, ModelBundle, Module,
    NodeKind, Partner, PartnerKind, PolicyDecl, ResourceDecl, ResourceKind,
};
use crate::report::ValidationReport;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvolutionAction {
    /// Adds the VO module `vo` of the bundle, its customer and whatever
    /// externals, associates and policies it brings along.
    AddVo {
        vo: String,
        customer: String,
        externals: Vec<External>,
        associates: Vec<Partner>,
        policies: Vec<PolicyDecl>,
    },
    RemoveVo(String),
    AddTask {
        task: String,
        associates: Vec<Partner>,
    },
    RemoveTask(String),
    AddAssociate {
        partner: Partner,
        resources: Vec<ResourceDecl>,
    },
    RemoveAssociate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvolutionError {
    #[error("VO `{vo}` still has open sessions: {}", .sessions.join(", "))]
    QuiescenceViolation { vo: String, sessions: Vec<String> },
    #[error("{0}")]
    UnknownTarget(String),
    #[error("evolved configuration is invalid:\n{0}")]
    ValidationFailed(ValidationReport),
}

/// Applies one action to `bc`. Removing a VO requires that the ledger shows
/// no open session for it. The result is validated against `bundle`.
pub fn apply_evolution(
    bc: &BusinessConfiguration,
    action: &EvolutionAction,
    ledger: &SessionLedger,
    bundle: &ModelBundle,
) -> Result<BusinessConfiguration, EvolutionError> {
    let mut next = bc.clone();
    match action {
        EvolutionAction::AddVo {
            vo,
            customer,
            externals,
            associates,
            policies,
        } => {
            if !matches!(bundle.module(vo), Some(Module::Vo(_))) {
                return Err(EvolutionError::UnknownTarget(format!("no VO module named `{vo}`")));
            }
            next.vos.push(vo.clone());
            next.customers.push(crate::model::CustomerEntry::new(vo, customer));
            next.externals.extend(externals.iter().cloned());
            next.associates.extend(associates.iter().cloned().map(as_associate));
            next.policies.extend(policies.iter().cloned());
        }
        EvolutionAction::RemoveVo(vo) => {
            if !next.vos.contains(vo) {
                return Err(EvolutionError::UnknownTarget(format!("`{vo}` is not a VO of {}", bc.name)));
            }
            let open = ledger.sessions(vo);
            if !open.is_empty() {
                return Err(EvolutionError::QuiescenceViolation {
                    vo: vo.clone(),
                    sessions: open.into_iter().map(String::from).collect(),
                });
            }
            next.vos.retain(|v| v != vo);
            next.customers.retain(|c| c.vo != *vo);
            collect_garbage(&mut next, bundle, vo);
        }
        EvolutionAction::AddTask { task, associates } => {
            if !matches!(bundle.module(task), Some(Module::Task(_))) {
                return Err(EvolutionError::UnknownTarget(format!("no task module named `{task}`")));
            }
            next.tasks.push(task.clone());
            next.associates.extend(associates.iter().cloned().map(as_associate));
        }
        EvolutionAction::RemoveTask(task) => {
            if !next.tasks.contains(task) {
                return Err(EvolutionError::UnknownTarget(format!("`{task}` is not a task of {}", bc.name)));
            }
            next.tasks.retain(|t| t != task);
            collect_garbage(&mut next, bundle, task);
        }
        EvolutionAction::AddAssociate { partner, resources } => {
            next.associates.push(as_associate(partner.clone()));
            next.transient_resources.extend(resources.iter().cloned().map(|mut r| {
                r.persistence = ResourceKind::Transient;
                r
            }));
        }
        EvolutionAction::RemoveAssociate(name) => {
            if !next.associates.iter().any(|a| a.name == *name) {
                return Err(EvolutionError::UnknownTarget(format!("`{name}` is not an associate of {}", bc.name)));
            }
            next.associates.retain(|a| a.name != *name);
            let gone = BTreeSet::from([name.clone()]);
            next.policies.retain(|p| !p.scope.iter().any(|e| gone.contains(e)));
        }
    }
    let report = validate_business_configuration(&next, &bundle.with_configuration(next.clone()));
    if report.is_clean() {
        Ok(next)
    } else {
        Err(EvolutionError::ValidationFailed(report))
    }
}

fn as_associate(mut p: Partner) -> Partner {
    p.persistence = PartnerKind::Associate;
    p
}

/// After `removed` leaves the configuration, drops the associates and
/// transient resources only it mapped to, the externals only it required,
/// and policies scoped over anything dropped.
fn collect_garbage(bc: &mut BusinessConfiguration, bundle: &ModelBundle, removed: &str) {
    let Some(gone) = bundle.module(removed) else { return };
    let remaining: Vec<&Module> = bundle
        .vbe
        .tasks
        .iter()
        .chain(&bc.tasks)
        .chain(&bc.vos)
        .filter_map(|n| bundle.module(n))
        .collect();
    let serves: BTreeSet<&str> = remaining
        .iter()
        .flat_map(|m| m.serves_map().iter().map(|s| s.target.as_str()))
        .collect();
    let uses: BTreeSet<&str> = remaining
        .iter()
        .flat_map(|m| m.uses_map().iter().map(|s| s.target.as_str()))
        .collect();
    let required: BTreeSet<&str> = remaining
        .iter()
        .flat_map(|m| m.graph().nodes.iter())
        .filter(|n| n.kind == NodeKind::Requires)
        .map(|n| n.label.as_str())
        .collect();

    let mut dropped: BTreeSet<String> = BTreeSet::new();
    for s in gone.serves_map() {
        if !serves.contains(s.target.as_str()) && bc.associates.iter().any(|a| a.name == s.target) {
            dropped.insert(s.target.clone());
        }
    }
    for u in gone.uses_map() {
        if !uses.contains(u.target.as_str()) && bc.transient_resources.iter().any(|r| r.id == u.target) {
            dropped.insert(u.target.clone());
        }
    }
    let gone_required: BTreeSet<&str> = gone
        .graph()
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Requires && !required.contains(n.label.as_str()))
        .map(|n| n.label.as_str())
        .collect();
    bc.associates.retain(|a| !dropped.contains(&a.name));
    bc.transient_resources.retain(|r| !dropped.contains(&r.id));
    bc.externals.retain(|e| !gone_required.contains(e.spec.as_str()));
    bc.policies.retain(|p| !p.scope.iter().any(|e| dropped.contains(e)));
}
