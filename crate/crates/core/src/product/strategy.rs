use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::solve::{choice_value, robust_vi_with, ValueFn, ViOptions};
use super::sub::{make_sub, SubMdpst, ZAction, ZKind};
use super::{build_product, partition, Partition, ProductMdpst, Region};
use crate::abstraction::Mdpst;
use crate::dfa::{Dfa, DfaState};
use crate::domain::{ActionId, StateId};

/// A domain state paired with the DFA state reached after reading its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductState {
    pub s: StateId,
    pub q: DfaState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub s: StateId,
    /// Canonical formula of the DFA state.
    pub q: String,
    pub action: ActionId,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkEntry {
    pub s: StateId,
    pub q: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StrategyFile {
    value: f64,
    epsilon: f64,
    iterations: usize,
    residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    entries: Vec<StrategyEntry>,
    #[serde(default)]
    sinks: Vec<SinkEntry>,
}

/// Memoryless strategy over product states, keyed by domain state and the
/// printed DFA formula so it can be saved and reloaded against a freshly
/// compiled automaton.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub value: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub residual: f64,
    pub beta: Option<f64>,
    entries: Vec<StrategyEntry>,
    sinks: Vec<SinkEntry>,
    index: HashMap<(StateId, Arc<str>), usize>,
    sink_index: HashMap<(StateId, Arc<str>), ()>,
}

/// What the strategy says about a product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lookup {
    Act { action: ActionId, v: f64 },
    /// Outside the relevant region; the objective can no longer be met.
    Sink,
    Missing,
}

impl Strategy {
    fn from_parts(file: StrategyFile) -> Self {
        let mut entries = file.entries;
        entries.sort_by(|a, b| (a.s, &a.q).cmp(&(b.s, &b.q)));
        let mut sinks = file.sinks;
        sinks.sort_by(|a, b| (a.s, &a.q).cmp(&(b.s, &b.q)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| ((e.s, Arc::from(e.q.as_str())), i))
            .collect();
        let sink_index = sinks.iter().map(|e| ((e.s, Arc::from(e.q.as_str())), ())).collect();
        Strategy {
            value: file.value,
            epsilon: file.epsilon,
            iterations: file.iterations,
            residual: file.residual,
            beta: file.beta,
            entries,
            sinks,
            index,
            sink_index,
        }
    }

    /// The strategy for an instance whose goal is unreachable.
    pub fn empty(epsilon: f64) -> Self {
        Self::from_parts(StrategyFile {
            value: 0.0,
            epsilon,
            iterations: 0,
            residual: 0.0,
            beta: None,
            entries: vec![],
            sinks: vec![],
        })
    }

    pub fn entries(&self) -> &[StrategyEntry] {
        &self.entries
    }

    pub fn sinks(&self) -> &[SinkEntry] {
        &self.sinks
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, s: StateId, q: &str) -> Option<&StrategyEntry> {
        self.index.get(&(s, Arc::from(q))).map(|i| &self.entries[*i])
    }

    pub fn lookup(&self, dfa: &Dfa, st: ProductState) -> Lookup {
        let key = (st.s, dfa.state_name(st.q));
        if let Some(i) = self.index.get(&key) {
            let e = &self.entries[*i];
            Lookup::Act { action: e.action, v: e.v }
        } else if self.sink_index.contains_key(&key) {
            Lookup::Sink
        } else {
            Lookup::Missing
        }
    }

    /// Value of a product state as recorded by the solver: 1 on goals, the
    /// entry value on live states, 0 elsewhere.
    pub fn value_of(&self, dfa: &Dfa, st: ProductState) -> f64 {
        if dfa.is_accepting(st.q) {
            return 1.0;
        }
        match self.lookup(dfa, st) {
            Lookup::Act { v, .. } => v,
            _ => 0.0,
        }
    }

    pub fn meets_threshold(&self) -> bool {
        self.beta.is_none_or(|b| self.value >= b)
    }

    fn file(&self) -> StrategyFile {
        StrategyFile {
            value: self.value,
            epsilon: self.epsilon,
            iterations: self.iterations,
            residual: self.residual,
            beta: self.beta,
            entries: self.entries.clone(),
            sinks: self.sinks.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file()).expect("strategy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str::<StrategyFile>(text).map(Self::from_parts)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Per sub-model state, the index of the choice maximizing the backup.
///
/// Exact ties are resolved first by progress, then by the lowest action: a
/// tied choice qualifies at round `r` once one of its successor sets lies
/// entirely in states settled before round `r`, goals being settled at
/// round 0. Without this, a self-loop that ties with the goal-bound action
/// at value 1 could be chosen and never leave.
pub fn greedy_choices(z: &SubMdpst, v: &[f64]) -> Vec<usize> {
    let n = z.num_states();
    let mut chosen = vec![0; n];
    let mut tied: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in z.live_states() {
        let vals: Vec<f64> = z.choices(s).iter().map(|c| choice_value(c, v)).collect();
        let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        tied[s as usize] = (0..vals.len()).filter(|i| vals[*i] == best).collect();
        chosen[s as usize] = tied[s as usize][0];
    }
    let mut settled: Vec<bool> = z.kinds().iter().map(|k| *k == ZKind::Goal).collect();
    loop {
        let mut newly = Vec::new();
        for s in z.live_states() {
            if settled[s as usize] {
                continue;
            }
            let row = z.choices(s);
            let hit = tied[s as usize].iter().copied().find(|&i| {
                row[i]
                    .outcomes
                    .iter()
                    .any(|o| o.set.iter().all(|t| settled[*t as usize]))
            });
            if let Some(i) = hit {
                chosen[s as usize] = i;
                newly.push(s as usize);
            }
        }
        if newly.is_empty() {
            break;
        }
        for s in newly {
            settled[s] = true;
        }
    }
    chosen
}

/// Reads off the argmax action at every live state of `z`.
pub fn extract_strategy(p: &ProductMdpst, dfa: &Dfa, z: &SubMdpst, v: &ValueFn, epsilon: f64) -> Strategy {
    let key = |z_id: u32| {
        let pid = z.origin(z_id).expect("sub-model built from the product");
        let st = p.state(pid);
        (st.s, dfa.state_name(st.q).to_string())
    };
    let choices = greedy_choices(z, &v.values);
    let mut entries = Vec::new();
    let mut sinks = Vec::new();
    for s in 0..z.num_states() as u32 {
        match z.kind(s) {
            ZKind::Live => {
                let ZAction::Act(action) = z.choices(s)[choices[s as usize]].action else {
                    unreachable!("live states carry domain actions")
                };
                let (s_dom, q) = key(s);
                entries.push(StrategyEntry {
                    s: s_dom,
                    q,
                    action,
                    v: v.get(s),
                });
            }
            ZKind::Sink => {
                let (s_dom, q) = key(s);
                sinks.push(SinkEntry { s: s_dom, q });
            }
            ZKind::Goal => {}
        }
    }
    Strategy::from_parts(StrategyFile {
        value: v.get(z.initial()),
        epsilon,
        iterations: v.iterations,
        residual: v.residual,
        beta: None,
        entries,
        sinks,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub product: Duration,
    pub solve: Duration,
}

/// Everything produced while solving one instance.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub product: ProductMdpst,
    pub partition: Partition,
    /// `None` when the initial state cannot reach the goal.
    pub sub: Option<SubMdpst>,
    pub values: Option<ValueFn>,
    pub strategy: Strategy,
    pub value: f64,
    pub timings: Timings,
}

/// Product, partition, sub-model, value iteration and extraction in one go.
pub fn synthesize(m: &Mdpst, dfa: &Dfa, opts: ViOptions) -> Synthesis {
    let t0 = Instant::now();
    let product = build_product(m, dfa);
    let part = partition(&product);
    let t1 = Instant::now();
    if part.region(product.initial()) != Region::Relevant {
        return Synthesis {
            product,
            partition: part,
            sub: None,
            values: None,
            strategy: Strategy::empty(opts.epsilon),
            value: 0.0,
            timings: Timings {
                product: t1 - t0,
                solve: t1.elapsed(),
            },
        };
    }
    let z = make_sub(&product, &part).expect("initial state is relevant");
    let v = robust_vi_with(&z, opts);
    let strategy = extract_strategy(&product, dfa, &z, &v, opts.epsilon);
    Synthesis {
        value: strategy.value,
        product,
        partition: part,
        sub: Some(z),
        values: Some(v),
        strategy,
        timings: Timings {
            product: t1 - t0,
            solve: t1.elapsed(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("state {observed} is not a possible successor of state {s} under action {action}")]
    IllegalObservation { s: StateId, action: ActionId, observed: StateId },
    #[error("no strategy entry for product state (s={s}, q={q})")]
    StrategyGap { s: StateId, q: String },
}

/// Moves the product state along an observed domain transition.
pub fn advance(
    strategy: &Strategy,
    dfa: &Dfa,
    m: &Mdpst,
    current: ProductState,
    observed: StateId,
) -> Result<ProductState, ExecError> {
    let action = match strategy.lookup(dfa, current) {
        Lookup::Act { action, .. } => action,
        _ => {
            return Err(ExecError::StrategyGap {
                s: current.s,
                q: dfa.state_name(current.q).to_string(),
            })
        }
    };
    if !m.post(current.s, action).contains(&observed) {
        return Err(ExecError::IllegalObservation {
            s: current.s,
            action,
            observed,
        });
    }
    Ok(ProductState {
        s: observed,
        q: dfa.step(current.q, m.label(observed)),
    })
}
