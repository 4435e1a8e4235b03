//! Explicit-state planning domains and action-slip error models.

mod errors;
mod io;

pub use errors::{Dist, ErrorModel, NeighborRule, ValidationReport, Violation, SUM_TOLERANCE};
pub use io::{
    load_domain, load_errors, parse_domain, parse_errors, save_domain, save_errors, domain_to_json,
    errors_to_json,
};

use thiserror::Error;

use crate::ltlf::{Interpretation, PropSet};

pub type StateId = u32;
pub type ActionId = u32;

/// Name treated as error-free when a file does not say otherwise.
pub const DO_NOTHING: &str = "do-nothing";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("schema error in `{field}` at {location}")]
    Schema { field: String, location: String },
    #[error("{context} refers to state {state}, but there are {count} states")]
    DanglingStateRef { state: u64, count: usize, context: String },
    #[error("{context} refers to action {action}, but there are {count} actions")]
    DanglingActionRef { action: u64, count: usize, context: String },
    #[error("state {0} has no applicable action")]
    EmptyApplicableSet(StateId),
    #[error("empty successor set at state {state}, action {action}")]
    EmptySuccessorSet { state: StateId, action: ActionId },
    #[error("duplicate transition at state {state}, action {action}")]
    DuplicateTransition { state: StateId, action: ActionId },
    #[error("action {action} is not applicable in state {state}")]
    NotApplicable { state: StateId, action: ActionId },
    #[error("no error distribution for state {state}, action {action}")]
    MissingRow { state: StateId, action: ActionId },
    #[error("error model is invalid: {0}")]
    InvalidErrorModel(ValidationReport),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainState {
    pub id: StateId,
    pub label: Interpretation,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub id: ActionId,
    pub name: Option<String>,
    pub error_free: bool,
}

impl Action {
    /// An action whose error-free flag defaults from its name.
    pub fn named(id: ActionId, name: impl Into<String>) -> Self {
        let name = name.into();
        Action {
            id,
            error_free: name == DO_NOTHING,
            name: Some(name),
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("a{}", self.id))
    }
}

/// A transition entry: from `from` under `action`, one of `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub action: ActionId,
    pub to: Vec<StateId>,
}

/// Domain whose transition function maps each applicable pair to a
/// nonempty set of successors chosen by the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct NondetDomain {
    props: PropSet,
    states: Vec<DomainState>,
    actions: Vec<Action>,
    initial: StateId,
    // per state, sorted by action id; successor sets sorted and deduplicated
    trans: Vec<Vec<(ActionId, Vec<StateId>)>>,
}

impl NondetDomain {
    /// Validates and builds a domain. States and actions must carry the ids
    /// `0..n` (in any order); applicability is implied by transition presence.
    pub fn new(
        props: PropSet,
        mut states: Vec<DomainState>,
        mut actions: Vec<Action>,
        initial: StateId,
        transitions: Vec<Transition>,
    ) -> Result<Self, DomainError> {
        states.sort_by_key(|s| s.id);
        for (i, s) in states.iter().enumerate() {
            if s.id as usize != i {
                return Err(DomainError::Schema {
                    field: "states.id".into(),
                    location: format!("ids must be exactly 0..{} (found {})", states.len(), s.id),
                });
            }
            if let Some(p) = s.label.iter().find(|p| !props.contains(p)) {
                return Err(DomainError::Schema {
                    field: "states.label".into(),
                    location: format!("state {}: undeclared proposition `{p}`", s.id),
                });
            }
        }
        actions.sort_by_key(|a| a.id);
        for (i, a) in actions.iter().enumerate() {
            if a.id as usize != i {
                return Err(DomainError::Schema {
                    field: "actions.id".into(),
                    location: format!("ids must be exactly 0..{} (found {})", actions.len(), a.id),
                });
            }
        }
        let n = states.len();
        let state_ref = |id: StateId, context: &str| {
            if (id as usize) < n {
                Ok(id)
            } else {
                Err(DomainError::DanglingStateRef {
                    state: id as u64,
                    count: n,
                    context: context.to_string(),
                })
            }
        };
        state_ref(initial, "initial")?;
        let mut trans: Vec<Vec<(ActionId, Vec<StateId>)>> = vec![Vec::new(); n];
        for t in transitions {
            state_ref(t.from, "transition.from")?;
            if t.action as usize >= actions.len() {
                return Err(DomainError::DanglingActionRef {
                    action: t.action as u64,
                    count: actions.len(),
                    context: format!("transition from state {}", t.from),
                });
            }
            if t.to.is_empty() {
                return Err(DomainError::EmptySuccessorSet {
                    state: t.from,
                    action: t.action,
                });
            }
            let mut to = t.to;
            for s in &to {
                state_ref(*s, &format!("transition ({}, {})", t.from, t.action))?;
            }
            to.sort_unstable();
            to.dedup();
            let row = &mut trans[t.from as usize];
            match row.binary_search_by_key(&t.action, |(a, _)| *a) {
                Ok(_) => {
                    return Err(DomainError::DuplicateTransition {
                        state: t.from,
                        action: t.action,
                    })
                }
                Err(pos) => row.insert(pos, (t.action, to)),
            }
        }
        if let Some(s) = trans.iter().position(|r| r.is_empty()) {
            return Err(DomainError::EmptyApplicableSet(s as StateId));
        }
        Ok(NondetDomain {
            props,
            states,
            actions,
            initial,
            trans,
        })
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn states(&self) -> &[DomainState] {
        &self.states
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, a: ActionId) -> &Action {
        &self.actions[a as usize]
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn label(&self, s: StateId) -> &Interpretation {
        &self.states[s as usize].label
    }

    /// Applicable actions `A(s)`, ascending.
    pub fn applicable(&self, s: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.trans[s as usize].iter().map(|(a, _)| *a)
    }

    pub fn is_applicable(&self, s: StateId, a: ActionId) -> bool {
        self.successors(s, a).is_some()
    }

    /// `F_n(s, a)`, sorted; `None` when `a ∉ A(s)`.
    pub fn successors(&self, s: StateId, a: ActionId) -> Option<&[StateId]> {
        let row = self.trans.get(s as usize)?;
        row.binary_search_by_key(&a, |(b, _)| *b)
            .ok()
            .map(|i| row[i].1.as_slice())
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.trans.iter().enumerate().flat_map(|(s, row)| {
            row.iter().map(move |(a, to)| Transition {
                from: s as StateId,
                action: *a,
                to: to.clone(),
            })
        })
    }

    pub fn is_deterministic(&self) -> bool {
        self.trans.iter().flatten().all(|(_, to)| to.len() == 1)
    }

    pub fn num_transitions(&self) -> usize {
        self.trans.iter().map(Vec::len).sum()
    }
}

/// Domain with exactly one successor per applicable pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DetDomain(NondetDomain);

impl DetDomain {
    pub fn new(
        props: PropSet,
        states: Vec<DomainState>,
        actions: Vec<Action>,
        initial: StateId,
        transitions: Vec<(StateId, ActionId, StateId)>,
    ) -> Result<Self, DomainError> {
        let transitions = transitions
            .into_iter()
            .map(|(from, action, to)| Transition {
                from,
                action,
                to: vec![to],
            })
            .collect();
        Self::try_from(NondetDomain::new(props, states, actions, initial, transitions)?)
    }

    /// `F_d(s, a)`; `None` when `a ∉ A(s)`.
    pub fn successor(&self, s: StateId, a: ActionId) -> Option<StateId> {
        self.0.successors(s, a).map(|t| t[0])
    }

    pub fn as_nondet(&self) -> &NondetDomain {
        &self.0
    }

    pub fn into_nondet(self) -> NondetDomain {
        self.0
    }
}

impl std::ops::Deref for DetDomain {
    type Target = NondetDomain;

    fn deref(&self) -> &NondetDomain {
        &self.0
    }
}

impl TryFrom<NondetDomain> for DetDomain {
    type Error = DomainError;

    fn try_from(n: NondetDomain) -> Result<Self, DomainError> {
        if let Some(t) = n.transitions().find(|t| t.to.len() != 1) {
            return Err(DomainError::Schema {
                field: "transitions.to".into(),
                location: format!(
                    "deterministic domain has {} successors at ({}, {})",
                    t.to.len(),
                    t.from,
                    t.action
                ),
            });
        }
        Ok(DetDomain(n))
    }
}

/// Either kind of domain, as loaded from a file.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Det(DetDomain),
    Nondet(NondetDomain),
}

impl Domain {
    pub fn as_nondet(&self) -> &NondetDomain {
        match self {
            Domain::Det(d) => d.as_nondet(),
            Domain::Nondet(n) => n,
        }
    }

    pub fn is_det(&self) -> bool {
        matches!(self, Domain::Det(_))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Three states; from s0 the actions a, a', a'' lead to s0, s1, s2.
    /// s1 and s2 only have a self-loop. s1 is labelled `goal`.
    pub fn three_way() -> DetDomain {
        let props = PropSet::new(["goal"]).unwrap();
        let goal = props.get("goal").unwrap().clone();
        let states = vec![
            DomainState { id: 0, label: Interpretation::new(), name: None },
            DomainState { id: 1, label: [goal].into_iter().collect(), name: None },
            DomainState { id: 2, label: Interpretation::new(), name: None },
        ];
        let actions = vec![Action::named(0, "a"), Action::named(1, "a1"), Action::named(2, "a2")];
        DetDomain::new(
            props,
            states,
            actions,
            0,
            vec![(0, 0, 1), (0, 1, 0), (0, 2, 2), (1, 0, 1), (2, 0, 2)],
        )
        .unwrap()
    }
}
