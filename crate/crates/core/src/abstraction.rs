//! Probabilistic abstractions of a domain under action slips.
//!
//! Both kinds of domain compile to an [`Mdpst`]: each applicable pair
//! `(s, a)` yields a list of successor *sets* with masses. A deterministic
//! domain gives only singleton sets, which is an ordinary MDP.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{ActionId, DetDomain, DomainError, ErrorModel, NondetDomain, StateId, SUM_TOLERANCE};
use crate::ltlf::{Interpretation, PropSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbstractionError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid MDPST at state {state}, action {action}: {reason}")]
    Invalid {
        state: StateId,
        action: ActionId,
        reason: String,
    },
}

/// One successor set `Θ` with its mass `T(s, a, Θ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub set: Vec<StateId>,
    pub mass: f64,
}

/// An applicable action and its set-valued successor distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Choice {
    pub action: ActionId,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mdpst {
    props: PropSet,
    labels: Vec<Interpretation>,
    initial: StateId,
    action_names: Vec<String>,
    rows: Vec<Vec<Choice>>,
    singleton: bool,
}

impl Mdpst {
    /// Checks the structural invariants: every state has a choice, sets are
    /// nonempty, sorted, in range and pairwise distinct per choice, masses
    /// are positive and sum to one.
    pub fn new(
        props: PropSet,
        labels: Vec<Interpretation>,
        initial: StateId,
        action_names: Vec<String>,
        rows: Vec<Vec<Choice>>,
    ) -> Result<Self, AbstractionError> {
        let n = labels.len();
        assert_eq!(rows.len(), n, "one row per state");
        assert!((initial as usize) < n, "initial state out of range");
        for (s, row) in rows.iter().enumerate() {
            let s = s as StateId;
            if row.is_empty() {
                return Err(AbstractionError::Invalid {
                    state: s,
                    action: 0,
                    reason: "no applicable action".into(),
                });
            }
            for c in row {
                let bad = |reason: String| AbstractionError::Invalid {
                    state: s,
                    action: c.action,
                    reason,
                };
                if c.action as usize >= action_names.len() {
                    return Err(bad("unknown action".into()));
                }
                let mut sum = 0.0;
                for (i, o) in c.outcomes.iter().enumerate() {
                    if o.set.is_empty() {
                        return Err(bad("empty successor set".into()));
                    }
                    if !o.set.windows(2).all(|w| w[0] < w[1]) {
                        return Err(bad("successor set not sorted".into()));
                    }
                    if o.set.iter().any(|t| *t as usize >= n) {
                        return Err(bad("successor out of range".into()));
                    }
                    if !(o.mass > 0.0) {
                        return Err(bad(format!("non-positive mass {}", o.mass)));
                    }
                    if c.outcomes[..i].iter().any(|p| p.set == o.set) {
                        return Err(bad("repeated successor set".into()));
                    }
                    sum += o.mass;
                }
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(bad(format!("masses sum to {sum}")));
                }
            }
        }
        let singleton = rows
            .iter()
            .flatten()
            .flat_map(|c| &c.outcomes)
            .all(|o| o.set.len() == 1);
        Ok(Mdpst {
            props,
            labels,
            initial,
            action_names,
            rows,
            singleton,
        })
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn label(&self, s: StateId) -> &Interpretation {
        &self.labels[s as usize]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.action_names[a as usize]
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    /// Choices at `s`, ascending by action.
    pub fn choices(&self, s: StateId) -> &[Choice] {
        &self.rows[s as usize]
    }

    pub fn choice(&self, s: StateId, a: ActionId) -> Option<&Choice> {
        let row = &self.rows[s as usize];
        row.binary_search_by_key(&a, |c| c.action).ok().map(|i| &row[i])
    }

    /// True when every successor set is a singleton (an MDP).
    pub fn is_singleton(&self) -> bool {
        self.singleton
    }

    /// Union of the successor sets at `(s, a)`, sorted.
    pub fn post(&self, s: StateId, a: ActionId) -> Vec<StateId> {
        let mut out: Vec<StateId> = self
            .choice(s, a)
            .map(|c| c.outcomes.iter().flat_map(|o| o.set.iter().copied()).collect())
            .unwrap_or_default();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `Σ_(s,a) Σ_Θ |Θ|`.
    pub fn num_transitions(&self) -> usize {
        self.rows
            .iter()
            .flatten()
            .flat_map(|c| &c.outcomes)
            .map(|o| o.set.len())
            .sum()
    }

    /// Largest successor family `max |F(s, a)|`.
    pub fn max_family_size(&self) -> usize {
        self.rows.iter().flatten().map(|c| c.outcomes.len()).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct StateOut<'a> {
            id: StateId,
            label: Vec<&'a str>,
            choices: &'a [Choice],
        }
        #[derive(Serialize)]
        struct Out<'a> {
            props: Vec<&'a str>,
            initial: StateId,
            singleton: bool,
            actions: &'a [String],
            states: Vec<StateOut<'a>>,
        }
        let out = Out {
            props: self.props.iter().map(|p| p.as_str()).collect(),
            initial: self.initial,
            singleton: self.singleton,
            actions: &self.action_names,
            states: (0..self.num_states())
                .map(|s| StateOut {
                    id: s as StateId,
                    label: self.labels[s].iter().map(|p| p.as_str()).collect(),
                    choices: &self.rows[s],
                })
                .collect(),
        };
        serde_json::to_string_pretty(&out).expect("mdpst serializes")
    }
}

/// MDP of a deterministic domain: the mass of successor `s'` at `(s, a)` is
/// the total slip mass of the actions `a'` with `F_d(s, a') = s'`.
pub fn mdp_from_det(d: &DetDomain, e: &ErrorModel) -> Result<Mdpst, AbstractionError> {
    build(d.as_nondet(), e)
}

/// MDPST of a nondeterministic domain: each distinct set `F_n(s, a')` over
/// the slip support receives the summed mass of the actions producing it.
pub fn mdpst_from_nondet(n: &NondetDomain, e: &ErrorModel) -> Result<Mdpst, AbstractionError> {
    build(n, e)
}

fn build(n: &NondetDomain, e: &ErrorModel) -> Result<Mdpst, AbstractionError> {
    e.validate(n).into_result()?;
    let mut rows = Vec::with_capacity(n.num_states());
    for s in 0..n.num_states() as StateId {
        let mut row = Vec::new();
        for a in n.applicable(s) {
            let mut outcomes: Vec<Outcome> = Vec::new();
            for (slipped, mass) in e.error_dist(n, s, a)? {
                let set = n.successors(s, slipped).ok_or(DomainError::NotApplicable {
                    state: s,
                    action: slipped,
                })?;
                match outcomes.iter_mut().find(|o| o.set == set) {
                    Some(o) => o.mass += mass,
                    None => outcomes.push(Outcome {
                        set: set.to_vec(),
                        mass,
                    }),
                }
            }
            row.push(Choice { action: a, outcomes });
        }
        rows.push(row);
    }
    Mdpst::new(
        n.props().clone(),
        n.states().iter().map(|s| s.label.clone()).collect(),
        n.initial(),
        n.actions().iter().map(|a| a.display_name()).collect(),
        rows,
    )
}
