use thiserror::Error;

use super::{Partition, ProdId, ProductMdpst, Region};
use crate::abstraction::Outcome;
use crate::domain::{ActionId, SUM_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubError {
    #[error("initial state cannot reach the goal")]
    EmptyRelevantRegion,
    #[error("malformed sub-model at state {state}: {reason}")]
    Malformed { state: u32, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZKind {
    /// In the accepting region; value fixed at 1.
    Goal,
    /// Relevant non-goal state; value computed.
    Live,
    /// Referenced from the relevant region but outside it; value fixed at 0.
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ZAction {
    Act(ActionId),
    /// The self-loop `a_ε` of goal and sink states.
    Loop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZChoice {
    pub action: ZAction,
    /// Successor sets over sub-model indices.
    pub outcomes: Vec<Outcome>,
}

/// The sub-MDPST `Z` on which values are computed.
///
/// Indices follow ascending product id over the relevant states and the
/// sinks they reference. Goal and sink states carry only the self-loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SubMdpst {
    kinds: Vec<ZKind>,
    choices: Vec<Vec<ZChoice>>,
    initial: u32,
    origin: Vec<Option<ProdId>>,
}

impl SubMdpst {
    /// Builds a sub-model directly, as used for generated test instances.
    /// Goal and sink states get their self-loop; `live_choices` supplies the
    /// choices of live states, in index order.
    pub fn new(kinds: Vec<ZKind>, mut live_choices: Vec<Vec<ZChoice>>, initial: u32) -> Result<Self, SubError> {
        let n = kinds.len();
        let mut choices = Vec::with_capacity(n);
        live_choices.reverse();
        for (i, k) in kinds.iter().enumerate() {
            match k {
                ZKind::Live => {
                    let row = live_choices.pop().ok_or_else(|| SubError::Malformed {
                        state: i as u32,
                        reason: "missing choices".into(),
                    })?;
                    choices.push(row);
                }
                _ => choices.push(vec![self_loop(i as u32)]),
            }
        }
        if !live_choices.is_empty() {
            return Err(SubError::Malformed {
                state: n as u32,
                reason: "more choice rows than live states".into(),
            });
        }
        let z = SubMdpst {
            kinds,
            choices,
            initial,
            origin: vec![None; n],
        };
        z.check()?;
        Ok(z)
    }

    fn check(&self) -> Result<(), SubError> {
        let n = self.kinds.len();
        if self.initial as usize >= n {
            return Err(SubError::Malformed {
                state: self.initial,
                reason: "initial out of range".into(),
            });
        }
        for (i, row) in self.choices.iter().enumerate() {
            let bad = |reason: &str| SubError::Malformed {
                state: i as u32,
                reason: reason.into(),
            };
            if row.is_empty() {
                return Err(bad("no choices"));
            }
            if !row.windows(2).all(|w| w[0].action < w[1].action) {
                return Err(bad("choices not sorted by action"));
            }
            for c in row {
                let mut sum = 0.0;
                for o in &c.outcomes {
                    if o.set.is_empty() || o.set.iter().any(|t| *t as usize >= n) {
                        return Err(bad("bad successor set"));
                    }
                    if !(o.mass > 0.0) {
                        return Err(bad("non-positive mass"));
                    }
                    sum += o.mass;
                }
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(bad("masses do not sum to one"));
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.kinds.len()
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn kind(&self, z: u32) -> ZKind {
        self.kinds[z as usize]
    }

    pub fn kinds(&self) -> &[ZKind] {
        &self.kinds
    }

    pub fn choices(&self, z: u32) -> &[ZChoice] {
        &self.choices[z as usize]
    }

    /// Product id this state came from (`None` for hand-built models).
    pub fn origin(&self, z: u32) -> Option<ProdId> {
        self.origin[z as usize]
    }

    pub fn live_states(&self) -> impl Iterator<Item = u32> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == ZKind::Live)
            .map(|(i, _)| i as u32)
    }

    /// `max |F_p(s, a)|` over all states and choices.
    pub fn max_family_size(&self) -> usize {
        self.choices.iter().flatten().map(|c| c.outcomes.len()).max().unwrap_or(0)
    }

    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }
}

fn self_loop(z: u32) -> ZChoice {
    ZChoice {
        action: ZAction::Loop,
        outcomes: vec![Outcome { set: vec![z], mass: 1.0 }],
    }
}

/// Restricts the product to the relevant region. Goal states become
/// absorbing through `a_ε`; successor-set members outside the region are
/// kept as absorbing value-0 sinks so that no set loses elements.
pub fn make_sub(p: &ProductMdpst, part: &Partition) -> Result<SubMdpst, SubError> {
    if part.region(p.initial()) != Region::Relevant {
        return Err(SubError::EmptyRelevantRegion);
    }
    let n = p.num_states();
    let mut keep = vec![false; n];
    for id in part.states_in(Region::Relevant) {
        keep[id as usize] = true;
        if !p.is_goal(id) {
            for t in p.choices(id).iter().flat_map(|c| &c.outcomes).flat_map(|o| &o.set) {
                keep[*t as usize] = true;
            }
        }
    }
    let mut local = vec![u32::MAX; n];
    let mut origin = Vec::new();
    for id in 0..n {
        if keep[id] {
            local[id] = origin.len() as u32;
            origin.push(Some(id as ProdId));
        }
    }
    let mut kinds = Vec::with_capacity(origin.len());
    let mut choices = Vec::with_capacity(origin.len());
    for (z, o) in origin.iter().enumerate() {
        let id = o.expect("set above");
        let z = z as u32;
        if part.region(id) != Region::Relevant {
            kinds.push(ZKind::Sink);
            choices.push(vec![self_loop(z)]);
        } else if p.is_goal(id) {
            kinds.push(ZKind::Goal);
            choices.push(vec![self_loop(z)]);
        } else {
            kinds.push(ZKind::Live);
            choices.push(
                p.choices(id)
                    .iter()
                    .map(|c| ZChoice {
                        action: ZAction::Act(c.action),
                        outcomes: c
                            .outcomes
                            .iter()
                            .map(|o| Outcome {
                                // local ids are monotone in product ids, so sets stay sorted
                                set: o.set.iter().map(|t| local[*t as usize]).collect(),
                                mass: o.mass,
                            })
                            .collect(),
                    })
                    .collect(),
            );
        }
    }
    Ok(SubMdpst {
        kinds,
        choices,
        initial: local[p.initial() as usize],
        origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::testutil::chain;
    use crate::product::{build_product, partition};

    #[test]
    fn goal_states_only_loop() {
        let (m, dfa) = chain(3, &[2]);
        let p = build_product(&m, &dfa);
        let z = make_sub(&p, &partition(&p)).unwrap();
        for i in 0..z.num_states() as u32 {
            if z.kind(i) == ZKind::Goal {
                assert_eq!(z.choices(i), &[self_loop(i)]);
                assert_eq!(z.choices(i)[0].outcomes[0].mass, 1.0);
            }
        }
    }

    #[test]
    fn live_states_keep_product_actions() {
        let (m, dfa) = chain(3, &[2]);
        let p = build_product(&m, &dfa);
        let z = make_sub(&p, &partition(&p)).unwrap();
        let live: Vec<u32> = z.live_states().collect();
        assert_eq!(live.len(), 2);
        for i in live {
            let pid = z.origin(i).unwrap();
            let acts: Vec<ZAction> = z.choices(i).iter().map(|c| c.action).collect();
            let expected: Vec<ZAction> = p.choices(pid).iter().map(|c| ZAction::Act(c.action)).collect();
            assert_eq!(acts, expected);
        }
    }

    #[test]
    fn dead_initial_state_is_an_error() {
        let (m, dfa) = chain(2, &[]);
        let p = build_product(&m, &dfa);
        assert_eq!(make_sub(&p, &partition(&p)), Err(SubError::EmptyRelevantRegion));
    }

    #[test]
    fn hand_built_models_are_checked() {
        let bad = SubMdpst::new(
            vec![ZKind::Live, ZKind::Goal],
            vec![vec![ZChoice {
                action: ZAction::Act(0),
                outcomes: vec![Outcome { set: vec![1], mass: 0.7 }],
            }]],
            0,
        );
        assert!(matches!(bad, Err(SubError::Malformed { .. })));
    }
}
