//! Product of an MDPST with a goal DFA, reachability partition, the
//! relevant sub-model, robust value iteration and strategy extraction.
//!
//! Product states pair a domain state with the DFA state reached after
//! reading the labels of every domain state visited so far, including the
//! current one. The initial product state is therefore
//! `(s0, step(q0, L(s0)))`, and a product state is a goal exactly when some
//! prefix ending at it satisfies the formula.

mod oracle;
mod solve;
mod strategy;
mod sub;

pub use oracle::{
    selection_backup, feasible_distribution, oracle_value, strategy_worst_value, NatureSelection, OracleError,
    ORACLE_MAX_ACTIONS, ORACLE_MAX_NATURES, ORACLE_MAX_STATES,
};
pub use solve::{backup, best_choice, robust_vi, robust_vi_with, Sweep, ValueFn, ViOptions, DEFAULT_EPSILON};
pub use strategy::{
    advance, extract_strategy, greedy_choices, synthesize, ExecError, Lookup, ProductState, SinkEntry, Strategy,
    StrategyEntry, Synthesis, Timings,
};
pub use sub::{make_sub, SubMdpst, SubError, ZAction, ZChoice, ZKind};

use std::collections::{HashMap, VecDeque};

use crate::abstraction::{Choice, Mdpst, Outcome};
use crate::dfa::{Dfa, DfaState};
use crate::domain::StateId;

/// Dense index of a product state.
pub type ProdId = u32;

/// Reachable part of `M × Aut_φ`.
#[derive(Debug, Clone)]
pub struct ProductMdpst {
    states: Vec<ProductState>,
    index: HashMap<ProductState, ProdId>,
    rows: Vec<Vec<Choice>>,
    goal: Vec<bool>,
}

impl ProductMdpst {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> ProdId {
        0
    }

    pub fn state(&self, p: ProdId) -> ProductState {
        self.states[p as usize]
    }

    pub fn id_of(&self, st: ProductState) -> Option<ProdId> {
        self.index.get(&st).copied()
    }

    pub fn is_goal(&self, p: ProdId) -> bool {
        self.goal[p as usize]
    }

    /// Lifted choices; successor sets hold product ids, sorted.
    pub fn choices(&self, p: ProdId) -> &[Choice] {
        &self.rows[p as usize]
    }

    pub fn num_transitions(&self) -> usize {
        self.rows
            .iter()
            .flatten()
            .flat_map(|c| &c.outcomes)
            .map(|o| o.set.len())
            .sum()
    }
}

/// Breadth-first construction of the reachable product.
pub fn build_product(m: &Mdpst, dfa: &Dfa) -> ProductMdpst {
    // q' depends only on (q, s') because labels are per state
    let mut next_q: HashMap<(DfaState, StateId), DfaState> = HashMap::new();
    let mut step = |q: DfaState, s: StateId| -> DfaState {
        *next_q.entry((q, s)).or_insert_with(|| dfa.step(q, m.label(s)))
    };

    let s0 = m.initial();
    let init = ProductState {
        s: s0,
        q: step(dfa.initial(), s0),
    };
    let mut states = vec![init];
    let mut index = HashMap::from([(init, 0 as ProdId)]);
    let mut rows: Vec<Vec<Choice>> = Vec::new();
    let mut queue = VecDeque::from([0 as ProdId]);
    while let Some(p) = queue.pop_front() {
        let ProductState { s, q } = states[p as usize];
        let mut row = Vec::with_capacity(m.choices(s).len());
        for c in m.choices(s) {
            let mut outcomes = Vec::with_capacity(c.outcomes.len());
            for o in &c.outcomes {
                let mut set: Vec<ProdId> = o
                    .set
                    .iter()
                    .map(|&t| {
                        let st = ProductState { s: t, q: step(q, t) };
                        *index.entry(st).or_insert_with(|| {
                            states.push(st);
                            let id = (states.len() - 1) as ProdId;
                            queue.push_back(id);
                            id
                        })
                    })
                    .collect();
                set.sort_unstable();
                outcomes.push(Outcome { set, mass: o.mass });
            }
            row.push(Choice {
                action: c.action,
                outcomes,
            });
        }
        // BFS pops in id order, so rows line up with ids
        debug_assert_eq!(rows.len(), p as usize);
        rows.push(row);
    }
    let goal = states.iter().map(|st| dfa.is_accepting(st.q)).collect();
    ProductMdpst {
        states,
        index,
        rows,
        goal,
    }
}

/// Which region of the product a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Not reachable from the initial state.
    Unreachable,
    /// Reachable, but cannot reach a goal state.
    Dead,
    /// Reachable and can reach a goal state.
    Relevant,
}

/// The `S_n / S_d / S_p` split of the product states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    region: Vec<Region>,
}

impl Partition {
    pub fn region(&self, p: ProdId) -> Region {
        self.region[p as usize]
    }

    pub fn count(&self, r: Region) -> usize {
        self.region.iter().filter(|x| **x == r).count()
    }

    pub fn states_in(&self, r: Region) -> impl Iterator<Item = ProdId> + '_ {
        self.region
            .iter()
            .enumerate()
            .filter(move |(_, x)| **x == r)
            .map(|(i, _)| i as ProdId)
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }
}

pub fn partition(p: &ProductMdpst) -> Partition {
    let n = p.num_states();
    let mut forward = vec![false; n];
    let mut preds: Vec<Vec<ProdId>> = vec![Vec::new(); n];
    for (s, row) in p.rows.iter().enumerate() {
        for t in row.iter().flat_map(|c| &c.outcomes).flat_map(|o| &o.set) {
            preds[*t as usize].push(s as ProdId);
        }
    }
    forward[p.initial() as usize] = true;
    let mut queue = VecDeque::from([p.initial()]);
    while let Some(s) = queue.pop_front() {
        for t in p.rows[s as usize].iter().flat_map(|c| &c.outcomes).flat_map(|o| &o.set) {
            if !forward[*t as usize] {
                forward[*t as usize] = true;
                queue.push_back(*t);
            }
        }
    }
    let mut backward = p.goal.clone();
    let mut queue: VecDeque<ProdId> = (0..n as ProdId).filter(|s| p.goal[*s as usize]).collect();
    while let Some(t) = queue.pop_front() {
        for &s in &preds[t as usize] {
            if !backward[s as usize] {
                backward[s as usize] = true;
                queue.push_back(s);
            }
        }
    }
    let region = (0..n)
        .map(|i| match (forward[i], backward[i]) {
            (false, _) => Region::Unreachable,
            (true, false) => Region::Dead,
            (true, true) => Region::Relevant,
        })
        .collect();
    Partition { region }
}
