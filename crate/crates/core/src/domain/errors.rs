use std::collections::HashMap;
use std::fmt;

use super::{ActionId, DomainError, NondetDomain, StateId};

/// Tolerance on the total mass of an error distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Sparse distribution over actions: positive entries only, ascending by id.
pub type Dist = Vec<(ActionId, f64)>;

/// Which actions an intended action may slip to under [`ErrorModel::UniformSlip`].
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborRule {
    /// Every other applicable action.
    AllOthers,
    /// Actions carry an optional `(row, column)` coordinate; neighbours are
    /// the applicable actions sharing exactly one coordinate with the
    /// intended one. Actions without a coordinate have no neighbours.
    SharedCoordinate(Vec<Option<(u32, u32)>>),
}

impl NeighborRule {
    fn is_neighbor(&self, intended: ActionId, other: ActionId) -> bool {
        if intended == other {
            return false;
        }
        match self {
            NeighborRule::AllOthers => true,
            NeighborRule::SharedCoordinate(coords) => {
                match (
                    coords.get(intended as usize).copied().flatten(),
                    coords.get(other as usize).copied().flatten(),
                ) {
                    (Some((r1, c1)), Some((r2, c2))) => (r1 == r2) != (c1 == c2),
                    _ => false,
                }
            }
        }
    }
}

/// The slip model `E`: for each state and intended action, the distribution
/// of the action actually instructed.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorModel {
    Explicit(HashMap<(StateId, ActionId), Dist>),
    /// Mass `1 - p` on the intended action and `p` spread evenly over its
    /// neighbours; a point mass when there are none.
    UniformSlip { p: f64, neighbors: NeighborRule },
}

impl ErrorModel {
    pub fn no_slip() -> Self {
        ErrorModel::UniformSlip {
            p: 0.0,
            neighbors: NeighborRule::AllOthers,
        }
    }

    pub fn uniform(p: f64) -> Self {
        ErrorModel::UniformSlip {
            p,
            neighbors: NeighborRule::AllOthers,
        }
    }

    /// Builds an explicit model from `(state, intended, dist)` rows.
    pub fn explicit(rows: impl IntoIterator<Item = (StateId, ActionId, Dist)>) -> Self {
        ErrorModel::Explicit(rows.into_iter().map(|(s, a, d)| ((s, a), d)).collect())
    }

    /// `err(s, a)` restricted to its support. Error-free actions always get
    /// a point mass on themselves.
    pub fn error_dist(&self, dom: &NondetDomain, s: StateId, a: ActionId) -> Result<Dist, DomainError> {
        if !dom.is_applicable(s, a) {
            return Err(DomainError::NotApplicable { state: s, action: a });
        }
        if dom.action(a).error_free {
            return Ok(vec![(a, 1.0)]);
        }
        match self {
            ErrorModel::Explicit(rows) => {
                let row = rows
                    .get(&(s, a))
                    .ok_or(DomainError::MissingRow { state: s, action: a })?;
                let mut dist: Dist = row.iter().copied().filter(|(_, p)| *p > 0.0).collect();
                dist.sort_by_key(|(b, _)| *b);
                Ok(dist)
            }
            ErrorModel::UniformSlip { p, neighbors } => {
                let others: Vec<ActionId> = dom
                    .applicable(s)
                    .filter(|b| neighbors.is_neighbor(a, *b))
                    .collect();
                if others.is_empty() || *p <= 0.0 {
                    return Ok(vec![(a, 1.0)]);
                }
                let share = p / others.len() as f64;
                let mut dist: Dist = others.into_iter().map(|b| (b, share)).collect();
                if *p < 1.0 {
                    dist.push((a, 1.0 - p));
                }
                dist.sort_by_key(|(b, _)| *b);
                Ok(dist)
            }
        }
    }

    /// `supp(err(s, a))`.
    pub fn support(&self, dom: &NondetDomain, s: StateId, a: ActionId) -> Result<Vec<ActionId>, DomainError> {
        Ok(self.error_dist(dom, s, a)?.into_iter().map(|(b, _)| b).collect())
    }

    /// Checks every model invariant against `dom`, collecting all violations.
    pub fn validate(&self, dom: &NondetDomain) -> ValidationReport {
        let mut report = ValidationReport::default();
        match self {
            ErrorModel::Explicit(rows) => {
                let mut keys: Vec<&(StateId, ActionId)> = rows.keys().collect();
                keys.sort();
                for &(s, a) in keys {
                    if s as usize >= dom.num_states() || !dom.is_applicable(s, a) {
                        report.push(s, a, "row for an inapplicable intended action".into());
                    }
                }
                for s in 0..dom.num_states() as StateId {
                    for a in dom.applicable(s) {
                        let Some(row) = rows.get(&(s, a)) else {
                            if !dom.action(a).error_free {
                                report.push(s, a, "missing row".into());
                            }
                            continue;
                        };
                        check_row(dom, s, a, row, &mut report);
                        if dom.action(a).error_free && !row.iter().all(|(b, p)| *b == a || *p == 0.0) {
                            report.push(s, a, "error-free action with slip mass".into());
                        }
                    }
                }
            }
            ErrorModel::UniformSlip { p, neighbors } => {
                if !(0.0..=1.0).contains(p) {
                    report.push(0, 0, format!("slip probability {p} outside [0, 1]"));
                }
                if let NeighborRule::SharedCoordinate(coords) = neighbors {
                    if coords.len() != dom.num_actions() {
                        report.push(
                            0,
                            0,
                            format!("{} coordinates for {} actions", coords.len(), dom.num_actions()),
                        );
                    }
                }
            }
        }
        report
    }
}

fn check_row(dom: &NondetDomain, s: StateId, a: ActionId, row: &Dist, report: &mut ValidationReport) {
    let mut sum = 0.0;
    for &(b, p) in row {
        if !p.is_finite() || p < 0.0 {
            report.push(s, a, format!("invalid probability {p} for action {b}"));
        }
        sum += p;
        if p > 0.0 && !dom.is_applicable(s, b) {
            report.push(s, a, format!("support ⊄ A(s): action {b}"));
        }
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        report.push(s, a, format!("sum={sum} at ({s},{a})"));
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub state: StateId,
    pub action: ActionId,
    pub message: String,
}

/// Every invariant violation found by [`ErrorModel::validate`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, state: StateId, action: ActionId, message: String) {
        self.violations.push(Violation { state, action, message });
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<(), DomainError> {
        if self.is_clean() {
            Ok(())
        } else {
            Err(DomainError::InvalidErrorModel(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "(s={}, a={}): {}", v.state, v.action, v.message)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::three_way;
    use crate::domain::{Action, DomainState, Transition};
    use crate::ltlf::{Interpretation, PropSet};

    #[test]
    fn explicit_row_support() {
        let d = three_way();
        let e = ErrorModel::explicit([(0, 0, vec![(0, 0.9), (1, 0.04), (2, 0.06)])]);
        assert_eq!(e.support(&d, 0, 0).unwrap(), vec![0, 1, 2]);
        assert_eq!(e.error_dist(&d, 0, 0).unwrap(), vec![(0, 0.9), (1, 0.04), (2, 0.06)]);
    }

    #[test]
    fn missing_explicit_row() {
        let d = three_way();
        let e = ErrorModel::explicit([(0, 0, vec![(0, 1.0)])]);
        assert_eq!(e.error_dist(&d, 0, 1), Err(DomainError::MissingRow { state: 0, action: 1 }));
    }

    #[test]
    fn zero_slip_is_point_mass() {
        let d = three_way();
        assert_eq!(ErrorModel::no_slip().error_dist(&d, 0, 1).unwrap(), vec![(1, 1.0)]);
    }

    #[test]
    fn uniform_slip_splits_evenly() {
        let d = three_way();
        let dist = ErrorModel::uniform(0.1).error_dist(&d, 0, 0).unwrap();
        assert_eq!(dist, vec![(0, 0.9), (1, 0.05), (2, 0.05)]);
        // no neighbours at s1: point mass regardless of p
        assert_eq!(ErrorModel::uniform(0.5).error_dist(&d, 1, 0).unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn do_nothing_never_slips() {
        let props = PropSet::default();
        let states = vec![DomainState { id: 0, label: Interpretation::new(), name: None }];
        let actions = vec![Action::named(0, "go"), Action::named(1, "do-nothing")];
        let d = NondetDomain::new(
            props,
            states,
            actions,
            0,
            vec![
                Transition { from: 0, action: 0, to: vec![0] },
                Transition { from: 0, action: 1, to: vec![0] },
            ],
        )
        .unwrap();
        assert_eq!(ErrorModel::uniform(0.3).error_dist(&d, 0, 1).unwrap(), vec![(1, 1.0)]);
        let e = ErrorModel::explicit([(0, 0, vec![(0, 0.5), (1, 0.5)])]);
        assert_eq!(e.error_dist(&d, 0, 1).unwrap(), vec![(1, 1.0)]);
        assert!(e.validate(&d).is_clean());
    }

    #[test]
    fn shared_coordinate_neighbors() {
        let rule = NeighborRule::SharedCoordinate(vec![Some((0, 1)), Some((0, 2)), Some((1, 1)), Some((1, 2)), None]);
        assert!(rule.is_neighbor(0, 1));
        assert!(rule.is_neighbor(0, 2));
        assert!(!rule.is_neighbor(0, 3));
        assert!(!rule.is_neighbor(0, 4));
        assert!(!rule.is_neighbor(0, 0));
    }

    #[test]
    fn validation_reports() {
        let d = three_way();
        let bad_sum = ErrorModel::explicit([
            (0, 0, vec![(0, 0.9), (1, 0.09)]),
            (0, 1, vec![(1, 1.0)]),
            (0, 2, vec![(2, 1.0)]),
            (1, 0, vec![(0, 1.0)]),
            (2, 0, vec![(0, 1.0)]),
        ]);
        let r = bad_sum.validate(&d);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].message.starts_with("sum=0.99"), "{r}");

        let off_support = ErrorModel::explicit([
            (0, 0, vec![(0, 1.0)]),
            (0, 1, vec![(1, 1.0)]),
            (0, 2, vec![(2, 1.0)]),
            (1, 0, vec![(0, 0.5), (1, 0.5)]),
            (2, 0, vec![(0, 1.0)]),
        ]);
        let r = off_support.validate(&d);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].message.contains("support ⊄ A(s)"));
        assert_eq!((r.violations[0].state, r.violations[0].action), (1, 0));

        assert!(ErrorModel::uniform(0.2).validate(&d).is_clean());
        assert!(!ErrorModel::uniform(1.5).validate(&d).is_clean());
    }
}
