//! Executing strategies in the original domain with sampled slips and a
//! pluggable nature.
//!
//! Randomness is drawn from a ChaCha8 stream keyed by `(seed, step)`, so a
//! run is a pure function of its inputs and runs can be spread over threads
//! without changing any outcome.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dfa::Dfa;
use crate::domain::{ActionId, DomainError, ErrorModel, NondetDomain, StateId};
use crate::ltlf::Trace;
use crate::product::{Lookup, ProductState, Strategy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("no strategy entry for product state (s={s}, q={q})")]
    StrategyGap { s: StateId, q: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("nature chose {chosen}, which is not among the successors {theta:?}")]
    IllegalChoice { chosen: StateId, theta: Vec<StateId> },
    #[error("the run has already ended")]
    Finished,
    #[error("no step is waiting for a nature choice")]
    NotPending,
    #[error("interactive natures cannot be used for batch runs")]
    InteractiveBatch,
}

/// What an interactive nature is shown before choosing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prompt {
    pub step: usize,
    pub s: StateId,
    pub q: String,
    pub intended: ActionId,
    pub instructed: ActionId,
    /// Possible successors, ascending.
    pub theta: Vec<StateId>,
    /// Solver value of each successor's product state.
    pub values: Vec<f64>,
}

impl Prompt {
    /// The choice the greedy adversary would make: lowest value, then
    /// lowest state id.
    pub fn greedy(&self) -> StateId {
        let mut best = 0;
        for i in 1..self.theta.len() {
            if self.values[i] < self.values[best] {
                best = i;
            }
        }
        self.theta[best]
    }
}

/// Resolves the environment's choice among the successors of an
/// instructed action.
pub enum NaturePolicy<'a> {
    /// Moves to a successor of least value, ties to the lowest state id.
    AdversarialGreedy,
    UniformRandom,
    /// Defers to the caller; the callback returns the chosen state.
    Interactive(Box<dyn FnMut(&Prompt) -> StateId + 'a>),
}

impl std::fmt::Debug for NaturePolicy<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NaturePolicy::AdversarialGreedy => "AdversarialGreedy",
            NaturePolicy::UniformRandom => "UniformRandom",
            NaturePolicy::Interactive(_) => "Interactive",
        })
    }
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub s: StateId,
    pub q: String,
    pub intended: ActionId,
    pub instructed: ActionId,
    pub theta: Vec<StateId>,
    pub chosen: StateId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    /// The goal automaton accepted.
    Goal,
    /// Reached a product state from which the goal is unreachable.
    LeftRelevant,
    /// Hit the step limit.
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub path: Vec<StepRecord>,
    pub success: bool,
    pub stop: Stop,
    pub seed: u64,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.path.len()
    }

    /// JSON lines, one record per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.path {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// The random stream for one step of one run.
pub fn step_rng(seed: u64, step: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step as u64);
    rng
}

fn sample(dist: &[(ActionId, f64)], u: f64) -> ActionId {
    let mut acc = 0.0;
    for (a, p) in dist {
        acc += p;
        if u < acc {
            return *a;
        }
    }
    dist.last().expect("nonempty distribution").0
}

/// Product state at the start of a run.
pub fn initial_state(dom: &NondetDomain, dfa: &Dfa) -> ProductState {
    let s = dom.initial();
    ProductState {
        s,
        q: dfa.step(dfa.initial(), dom.label(s)),
    }
}

/// A run driven one step at a time. Each step first samples the slip, then
/// waits for the nature to pick the successor.
pub struct Runner<'a> {
    dom: &'a NondetDomain,
    errors: &'a ErrorModel,
    strategy: &'a Strategy,
    dfa: &'a Dfa,
    seed: u64,
    max_steps: usize,
    current: ProductState,
    path: Vec<StepRecord>,
    pending: Option<(Prompt, ChaCha8Rng)>,
    stop: Option<Stop>,
}

impl<'a> Runner<'a> {
    pub fn new(
        dom: &'a NondetDomain,
        errors: &'a ErrorModel,
        strategy: &'a Strategy,
        dfa: &'a Dfa,
        seed: u64,
        max_steps: usize,
    ) -> Self {
        let current = initial_state(dom, dfa);
        let stop = dfa.is_accepting(current.q).then_some(Stop::Goal);
        Runner {
            dom,
            errors,
            strategy,
            dfa,
            seed,
            max_steps,
            current,
            path: Vec::new(),
            pending: None,
            stop,
        }
    }

    pub fn current(&self) -> ProductState {
        self.current
    }

    pub fn path(&self) -> &[StepRecord] {
        &self.path
    }

    pub fn stop(&self) -> Option<Stop> {
        self.stop
    }

    pub fn pending(&self) -> Option<&Prompt> {
        self.pending.as_ref().map(|(p, _)| p)
    }

    fn successor(&self, t: StateId) -> ProductState {
        ProductState {
            s: t,
            q: self.dfa.step(self.current.q, self.dom.label(t)),
        }
    }

    /// Samples the instructed action for the next step. Returns `None` when
    /// the run has ended instead.
    pub fn begin_step(&mut self) -> Result<Option<&Prompt>, SimError> {
        if self.pending.is_some() {
            return Ok(self.pending());
        }
        if self.stop.is_some() {
            return Ok(None);
        }
        if self.path.len() >= self.max_steps {
            self.stop = Some(Stop::Truncated);
            return Ok(None);
        }
        let ProductState { s, q } = self.current;
        let intended = match self.strategy.lookup(self.dfa, self.current) {
            Lookup::Act { action, .. } => action,
            Lookup::Sink => {
                self.stop = Some(Stop::LeftRelevant);
                return Ok(None);
            }
            Lookup::Missing => {
                return Err(SimError::StrategyGap {
                    s,
                    q: self.dfa.state_name(q).to_string(),
                })
            }
        };
        let step = self.path.len();
        let mut rng = step_rng(self.seed, step);
        let dist = self.errors.error_dist(self.dom, s, intended)?;
        let instructed = sample(&dist, rng.random::<f64>());
        let theta = self
            .dom
            .successors(s, instructed)
            .ok_or(DomainError::NotApplicable {
                state: s,
                action: instructed,
            })?
            .to_vec();
        let values = theta
            .iter()
            .map(|t| self.strategy.value_of(self.dfa, self.successor(*t)))
            .collect();
        let prompt = Prompt {
            step,
            s,
            q: self.dfa.state_name(q).to_string(),
            intended,
            instructed,
            theta,
            values,
        };
        self.pending = Some((prompt, rng));
        Ok(self.pending())
    }

    /// Applies the nature's choice for the pending step.
    pub fn resolve(&mut self, chosen: StateId) -> Result<(), SimError> {
        let Some((prompt, _)) = &self.pending else {
            return Err(if self.stop.is_some() { SimError::Finished } else { SimError::NotPending });
        };
        if !prompt.theta.contains(&chosen) {
            return Err(SimError::IllegalChoice {
                chosen,
                theta: prompt.theta.clone(),
            });
        }
        let (prompt, _) = self.pending.take().expect("checked above");
        self.current = self.successor(chosen);
        self.path.push(StepRecord {
            step: prompt.step,
            s: prompt.s,
            q: prompt.q,
            intended: prompt.intended,
            instructed: prompt.instructed,
            theta: prompt.theta,
            chosen,
        });
        if self.dfa.is_accepting(self.current.q) {
            self.stop = Some(Stop::Goal);
        }
        Ok(())
    }

    /// Picks the successor with a built-in policy.
    fn choose(&mut self, nature: &mut NaturePolicy) -> StateId {
        let (prompt, rng) = self.pending.as_mut().expect("pending step");
        match nature {
            NaturePolicy::AdversarialGreedy => prompt.greedy(),
            NaturePolicy::UniformRandom => prompt.theta[rng.random_range(0..prompt.theta.len())],
            NaturePolicy::Interactive(f) => f(prompt),
        }
    }

    pub fn finish(self) -> RunResult {
        let stop = self.stop.unwrap_or(Stop::Truncated);
        RunResult {
            path: self.path,
            success: stop == Stop::Goal,
            stop,
            seed: self.seed,
        }
    }
}

/// Runs one episode to completion.
pub fn run(
    dom: &NondetDomain,
    errors: &ErrorModel,
    strategy: &Strategy,
    dfa: &Dfa,
    nature: &mut NaturePolicy,
    seed: u64,
    max_steps: usize,
) -> Result<RunResult, SimError> {
    let mut r = Runner::new(dom, errors, strategy, dfa, seed, max_steps);
    while r.begin_step()?.is_some() {
        let chosen = r.choose(nature);
        r.resolve(chosen)?;
    }
    Ok(r.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub successes: usize,
    pub runs: usize,
    /// Outcome of the run with seed `base_seed + i`.
    pub outcomes: Vec<bool>,
}

/// Independent runs with seeds `base_seed .. base_seed + n_runs`, in
/// parallel. The result does not depend on the number of threads.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    dom: &NondetDomain,
    errors: &ErrorModel,
    strategy: &Strategy,
    dfa: &Dfa,
    nature: &NaturePolicy,
    n_runs: usize,
    base_seed: u64,
    max_steps: usize,
) -> Result<Estimate, SimError> {
    assert!(n_runs >= 1, "n_runs must be positive");
    let greedy = match nature {
        NaturePolicy::AdversarialGreedy => true,
        NaturePolicy::UniformRandom => false,
        NaturePolicy::Interactive(_) => return Err(SimError::InteractiveBatch),
    };
    let outcomes = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut nat = if greedy {
                NaturePolicy::AdversarialGreedy
            } else {
                NaturePolicy::UniformRandom
            };
            run(dom, errors, strategy, dfa, &mut nat, base_seed.wrapping_add(i), max_steps).map(|r| r.success)
        })
        .collect::<Result<Vec<bool>, _>>()?;
    let successes = outcomes.iter().filter(|b| **b).count();
    let n = n_runs as f64;
    let p = successes as f64 / n;
    Ok(Estimate {
        estimate: p,
        stderr: (p * (1.0 - p) / n).sqrt(),
        successes,
        runs: n_runs,
        outcomes,
    })
}

/// Checks that a run is a legal perturbed path: each instructed action is in
/// the slip support of the intended one, each successor was possible, the
/// states chain up, and the success flag agrees with the automaton on the
/// visited labels.
pub fn validate_run(dom: &NondetDomain, errors: &ErrorModel, dfa: &Dfa, r: &RunResult) -> Result<(), String> {
    let init = initial_state(dom, dfa);
    let mut cur = init;
    for (i, rec) in r.path.iter().enumerate() {
        if rec.step != i || rec.s != cur.s {
            return Err(format!("step {i}: expected state {}, log has {}", cur.s, rec.s));
        }
        if rec.q != *dfa.state_name(cur.q) {
            return Err(format!("step {i}: automaton state mismatch"));
        }
        let supp = errors.support(dom, rec.s, rec.intended).map_err(|e| e.to_string())?;
        if !supp.contains(&rec.instructed) {
            return Err(format!("step {i}: {} not in supp({}, {})", rec.instructed, rec.s, rec.intended));
        }
        let succ = dom.successors(rec.s, rec.instructed).unwrap_or(&[]);
        if succ != rec.theta.as_slice() || !succ.contains(&rec.chosen) {
            return Err(format!("step {i}: {} is not a successor", rec.chosen));
        }
        cur = ProductState {
            s: rec.chosen,
            q: dfa.step(cur.q, dom.label(rec.chosen)),
        };
    }
    let mut trace: Trace = vec![dom.label(init.s).clone()];
    trace.extend(r.path.iter().map(|rec| dom.label(rec.chosen).clone()));
    let accepted = dfa.accepts(&trace).map_err(|e| e.to_string())?;
    if accepted != r.success {
        return Err(format!("success flag {} but automaton says {accepted}", r.success));
    }
    Ok(())
}

/// Re-executes a logged run with the nature's choices taken from the log.
/// Returns the replayed result, which matches the log when the inputs are
/// the ones that produced it.
pub fn replay(
    dom: &NondetDomain,
    errors: &ErrorModel,
    strategy: &Strategy,
    dfa: &Dfa,
    log: &[StepRecord],
    seed: u64,
    max_steps: usize,
) -> Result<RunResult, SimError> {
    let mut choices = log.iter().map(|r| r.chosen);
    let mut nature = NaturePolicy::Interactive(Box::new(move |p: &Prompt| choices.next().unwrap_or(p.theta[0])));
    run(dom, errors, strategy, dfa, &mut nature, seed, max_steps)
}
