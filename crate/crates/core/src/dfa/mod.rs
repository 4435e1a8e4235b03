//! LTLf to DFA compilation by formula progression.
//!
//! States are canonical residual formulas. Transitions are computed on
//! demand and memoized, keyed on the state and the part of the input
//! interpretation that mentions atoms occurring in the state, so large
//! proposition sets never need to be enumerated.

mod explicit;

pub use explicit::{materialize, minimize, ExplicitDfa, MAX_EXPLICIT_PROPS};

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;
use thiserror::Error;

use crate::ltlf::{canonicalize, holds_on_empty, Formula, Interpretation, LtlfError, Prop, PropSet, Trace};

pub type DfaState = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfaError {
    #[error("alphabet too large: {0} propositions (limit {MAX_EXPLICIT_PROPS})")]
    AlphabetTooLarge(usize),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

/// Progression of `f` through one instant: the residual obligation on the
/// rest of the word, canonicalized.
pub fn progress(f: &Formula, sigma: &Interpretation) -> Formula {
    canonicalize(&progress_raw(f, sigma))
}

fn progress_raw(f: &Formula, sigma: &Interpretation) -> Formula {
    let not_end = || Formula::not(Formula::End);
    match f {
        Formula::True => Formula::True,
        Formula::False | Formula::End => Formula::False,
        Formula::Atom(p) => {
            if sigma.contains(p) {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(a) => Formula::not(progress_raw(a, sigma)),
        Formula::And(a, b) => Formula::and(progress_raw(a, sigma), progress_raw(b, sigma)),
        Formula::Or(a, b) => Formula::or(progress_raw(a, sigma), progress_raw(b, sigma)),
        Formula::Next(a) => Formula::and((**a).clone(), not_end()),
        Formula::WeakNext(a) => Formula::or((**a).clone(), Formula::End),
        Formula::Until(a, b) => Formula::or(
            progress_raw(b, sigma),
            Formula::and(progress_raw(a, sigma), Formula::and(f.clone(), not_end())),
        ),
        Formula::Release(a, b) => Formula::and(
            progress_raw(b, sigma),
            Formula::or(progress_raw(a, sigma), Formula::or(f.clone(), Formula::End)),
        ),
    }
}

/// Acceptance of a residual: its value on the empty remaining word.
pub fn eps_accepting(f: &Formula) -> bool {
    holds_on_empty(f)
}

#[derive(Default)]
struct Table {
    formulas: Vec<Formula>,
    names: Vec<Arc<str>>,
    atoms: Vec<Vec<Prop>>,
    accepting: Vec<bool>,
    index: HashMap<Formula, DfaState>,
    memo: HashMap<(DfaState, Interpretation), DfaState>,
}

impl Table {
    fn intern(&mut self, f: Formula) -> DfaState {
        if let Some(&q) = self.index.get(&f) {
            return q;
        }
        let q = self.formulas.len() as DfaState;
        self.names.push(Arc::from(f.to_string()));
        self.atoms.push(f.atoms());
        self.accepting.push(eps_accepting(&f));
        self.index.insert(f.clone(), q);
        self.formulas.push(f);
        q
    }
}

/// Lazily explored DFA for an LTLf formula.
///
/// `step` may be called concurrently; the memo table sits behind a lock and
/// interning is done under the write lock, so every caller observes the same
/// state numbering.
pub struct Dfa {
    props: PropSet,
    initial: DfaState,
    table: RwLock<Table>,
}

impl std::fmt::Debug for Dfa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dfa")
            .field("initial", &self.formula(self.initial))
            .field("discovered", &self.num_states())
            .finish()
    }
}

/// Compiles `f` (parsed over `props`, without `End`) into a lazy DFA.
pub fn compile(f: &Formula, props: &PropSet) -> Dfa {
    let mut table = Table::default();
    let initial = table.intern(canonicalize(f));
    Dfa {
        props: props.clone(),
        initial,
        table: RwLock::new(table),
    }
}

impl Dfa {
    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn initial(&self) -> DfaState {
        self.initial
    }

    /// Number of states discovered so far.
    pub fn num_states(&self) -> usize {
        self.table.read().formulas.len()
    }

    pub fn formula(&self, q: DfaState) -> Formula {
        self.table.read().formulas[q as usize].clone()
    }

    /// Printed canonical formula of `q`; stable across runs.
    pub fn state_name(&self, q: DfaState) -> Arc<str> {
        self.table.read().names[q as usize].clone()
    }

    pub fn lookup(&self, f: &Formula) -> Option<DfaState> {
        self.table.read().index.get(f).copied()
    }

    pub fn is_accepting(&self, q: DfaState) -> bool {
        self.table.read().accepting[q as usize]
    }

    pub fn step(&self, q: DfaState, sigma: &Interpretation) -> DfaState {
        let (key, formula) = {
            let t = self.table.read();
            let key = (q, sigma.restrict(&t.atoms[q as usize]));
            if let Some(&next) = t.memo.get(&key) {
                return next;
            }
            (key, t.formulas[q as usize].clone())
        };
        let residual = progress(&formula, &key.1);
        let mut t = self.table.write();
        let next = t.intern(residual);
        t.memo.insert(key, next);
        next
    }

    /// State reached after reading the whole trace from the initial state.
    pub fn run(&self, t: &[Interpretation]) -> DfaState {
        t.iter().fold(self.initial, |q, sigma| self.step(q, sigma))
    }

    pub fn accepts(&self, t: &Trace) -> Result<bool, DfaError> {
        if t.is_empty() {
            return Err(LtlfError::EmptyTrace.into());
        }
        Ok(self.is_accepting(self.run(t)))
    }
}

/// Free-function form of [`Dfa::accepts`].
pub fn accepts(d: &Dfa, t: &Trace) -> Result<bool, DfaError> {
    d.accepts(t)
}
