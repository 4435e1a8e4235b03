//! The block co-assembly benchmark: `N` blocks, a storage area and `N`
//! locations, a robot whose moves slip, and a human who may move one block
//! after each robot move until a budget of `K` moves is spent.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{mdpst_from_nondet, AbstractionError};
use crate::dfa::compile;
use crate::domain::{
    Action, DomainError, DomainState, ErrorModel, NeighborRule, NondetDomain, StateId, Transition, DO_NOTHING,
};
use crate::ltlf::{canonicalize, parse, Formula, Interpretation, LtlfError, Prop, PropSet};
use crate::product::{synthesize, ViOptions, DEFAULT_EPSILON};

/// Column index of the storage area.
pub const STORAGE: u8 = 0;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Which column constraint a placement matrix must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// Every location holds at most one block.
    #[default]
    Prose,
    /// Every location holds exactly one block. This excludes the
    /// all-in-storage state.
    Strict,
}

type Matrix = Vec<Vec<bool>>;

fn matrix_ok(m: &Matrix, pred: Predicate) -> bool {
    if !m.iter().all(|r| r.iter().filter(|x| **x).count() == 1) {
        return false;
    }
    let cols = m[0].len();
    (1..cols).all(|j| {
        let n = m.iter().filter(|r| r[j]).count();
        match pred {
            Predicate::Prose => n <= 1,
            Predicate::Strict => n == 1,
        }
    })
}

/// Where every block is. Row `i` of the matrix view has its single `true` at
/// column `pos[i]`; column 0 is storage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement {
    pos: Vec<u8>,
}

impl Placement {
    pub fn all_in_storage(n: usize) -> Self {
        Placement { pos: vec![STORAGE; n] }
    }

    /// From per-object columns. Fails if a location is shared or a column
    /// is out of range.
    pub fn from_positions(pos: Vec<u8>) -> Result<Self, BenchError> {
        let n = pos.len();
        let mut seen = vec![false; n + 1];
        for &c in &pos {
            if c as usize > n {
                return Err(BenchError::Config(format!("column {c} out of range for {n} objects")));
            }
            if c != STORAGE && std::mem::replace(&mut seen[c as usize], true) {
                return Err(BenchError::Config(format!("location {c} holds two blocks")));
            }
        }
        Ok(Placement { pos })
    }

    fn from_matrix(m: &Matrix) -> Self {
        Placement {
            pos: m.iter().map(|r| r.iter().position(|x| *x).expect("one-hot row") as u8).collect(),
        }
    }

    pub fn to_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.pos.len();
        self.pos
            .iter()
            .map(|&c| (0..=n).map(|j| j == c as usize).collect())
            .collect()
    }

    pub fn num_objects(&self) -> usize {
        self.pos.len()
    }

    pub fn positions(&self) -> &[u8] {
        &self.pos
    }

    /// Column of object `i` (0-based).
    pub fn column_of(&self, i: usize) -> u8 {
        self.pos[i]
    }

    pub fn occupant(&self, col: u8) -> Option<usize> {
        (col != STORAGE).then(|| self.pos.iter().position(|c| *c == col)).flatten()
    }

    /// Object `i` may go to `col` if it is not already there and `col` is
    /// storage or empty.
    pub fn can_move(&self, i: usize, col: u8) -> bool {
        self.pos[i] != col && (col == STORAGE || self.occupant(col).is_none())
    }

    pub fn moved(&self, i: usize, col: u8) -> Placement {
        let mut pos = self.pos.clone();
        pos[i] = col;
        Placement { pos }
    }

    /// Every legal single move, ordered by object then column.
    pub fn legal_moves(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        let n = self.pos.len();
        (0..n).flat_map(move |i| (0..=n as u8).map(move |c| (i, c))).filter(|(i, c)| self.can_move(*i, *c))
    }

    /// ASCII grid with one row per object and one column per place.
    pub fn render(&self) -> String {
        let n = self.pos.len();
        let mut out = String::from("     S");
        for j in 1..=n {
            out.push_str(&format!(" L{j}"));
        }
        out.push('\n');
        for (i, &c) in self.pos.iter().enumerate() {
            out.push_str(&format!("o{:<3}", i + 1));
            for j in 0..=n {
                let w = if j == 0 { 2 } else { 3 };
                let mark = if j == c as usize { "#" } else { "." };
                out.push_str(&format!("{mark:>w$}"));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self
            .pos
            .iter()
            .map(|c| if *c == STORAGE { "S".into() } else { format!("L{c}") })
            .collect();
        write!(f, "[{}]", cells.join(" "))
    }
}

fn unit_row(width: usize, col: usize) -> Vec<bool> {
    (0..width).map(|j| j == col).collect()
}

/// All placements of `n` objects meeting `pred`, built recursively from the
/// two-object case: each valid `(i-1)`-object matrix is widened by a new
/// column, every old row either keeps its place (a 0 appended) or moves to
/// the new column, and a fresh one-hot row is added for the new object.
/// Sorted.
pub fn prune_states(n: usize, pred: Predicate) -> Vec<Placement> {
    assert!(n >= 2, "at least two objects");
    let mut valid: BTreeSet<Matrix> = BTreeSet::new();
    for bits in 0u32..(1 << 6) {
        let m: Matrix = (0..2).map(|r| (0..3).map(|c| bits >> (r * 3 + c) & 1 == 1).collect()).collect();
        if matrix_ok(&m, pred) {
            valid.insert(m);
        }
    }
    for i in 3..=n {
        let width = i + 1;
        let fresh: Vec<Vec<bool>> = (0..width).map(|c| unit_row(width, c)).collect();
        let mut next = BTreeSet::new();
        for s in &valid {
            let options: Vec<[Vec<bool>; 2]> = s
                .iter()
                .map(|r| {
                    let mut kept = r.clone();
                    kept.push(false);
                    [kept, unit_row(width, i)]
                })
                .collect();
            for combo in 0u32..(1 << options.len()) {
                let mut m: Matrix = options
                    .iter()
                    .enumerate()
                    .map(|(k, o)| o[(combo >> k & 1) as usize].clone())
                    .collect();
                for row in &fresh {
                    m.push(row.clone());
                    if matrix_ok(&m, pred) {
                        next.insert(m.clone());
                    }
                    m.pop();
                }
            }
        }
        valid = next;
    }
    let mut out: Vec<Placement> = valid.iter().map(Placement::from_matrix).collect();
    out.sort();
    out
}

/// Filters all `2^(n(n+1))` boolean matrices. Reference for small `n`.
pub fn prune_brute_force(n: usize, pred: Predicate) -> Vec<Placement> {
    let cells = n * (n + 1);
    assert!(cells < 32, "too many matrices to enumerate");
    let mut out: Vec<Placement> = (0u32..(1 << cells))
        .filter_map(|bits| {
            let m: Matrix = (0..n)
                .map(|r| (0..=n).map(|c| bits >> (r * (n + 1) + c) & 1 == 1).collect())
                .collect();
            matrix_ok(&m, pred).then(|| Placement::from_matrix(&m))
        })
        .collect();
    out.sort();
    out
}

/// Parameters of one benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    /// Human move budget.
    pub k: u32,
    /// Slip probability of robot moves.
    pub p: f64,
    /// Target location (1-based) of each object; defaults to object `i` at
    /// location `i`.
    #[serde(default)]
    pub goal: Option<Vec<u8>>,
    /// Goal formula over `at_i_j` atoms; defaults to eventually reaching the
    /// goal configuration.
    #[serde(default)]
    pub formula: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl BenchConfig {
    pub fn new(n: usize, k: u32, p: f64) -> Self {
        BenchConfig {
            n,
            k,
            p,
            goal: None,
            formula: None,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn goal_locations(&self) -> Vec<u8> {
        self.goal.clone().unwrap_or_else(|| (1..=self.n as u8).collect())
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !(2..=6).contains(&self.n) {
            return Err(BenchError::Config(format!("N must be in 2..=6, got {}", self.n)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(BenchError::Config(format!("p must be in [0, 1], got {}", self.p)));
        }
        if !(self.epsilon > 0.0) {
            return Err(BenchError::Config("epsilon must be positive".into()));
        }
        let goal = self.goal_locations();
        if goal.len() != self.n {
            return Err(BenchError::Config(format!("goal lists {} objects, expected {}", goal.len(), self.n)));
        }
        let mut seen = BTreeSet::new();
        for &l in &goal {
            if l == STORAGE || l as usize > self.n || !seen.insert(l) {
                return Err(BenchError::Config(format!("goal location {l} is invalid or repeated")));
            }
        }
        Ok(())
    }
}

/// Proposition "object `i` is at location `j`", both 1-based.
pub fn at_atom(i: usize, j: u8) -> String {
    format!("at_{i}_{j}")
}

/// A placement together with the number of human moves used so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CounterState {
    pub placement: Placement,
    pub c: u32,
}

impl CounterState {
    pub fn name(&self) -> String {
        format!("{} c={}", self.placement, self.c)
    }
}

/// A generated instance.
#[derive(Debug, Clone)]
pub struct Coassembly {
    pub config: BenchConfig,
    pub domain: NondetDomain,
    pub errors: ErrorModel,
    pub formula: Formula,
    /// Domain state `id` is `states[id]`.
    pub states: Vec<CounterState>,
    /// Placements allowed before reachability is applied.
    pub pruned: usize,
}

impl Coassembly {
    /// Counter states before restricting to those reachable.
    pub fn augmented_states(&self) -> usize {
        self.pruned * (self.config.k as usize + 1)
    }

    pub fn do_nothing(&self) -> u32 {
        (self.config.n * (self.config.n + 1)) as u32
    }

    /// Robot action moving object `i` (0-based) to column `col`.
    pub fn move_action(&self, i: usize, col: u8) -> u32 {
        move_id(self.config.n, i, col)
    }

    /// `(object, column)` moved by an action, or `None` for do-nothing.
    pub fn decode_action(&self, a: u32) -> Option<(usize, u8)> {
        let w = self.config.n + 1;
        ((a as usize) < self.config.n * w).then(|| (a as usize / w, (a as usize % w) as u8))
    }

    pub fn state_id(&self, st: &CounterState) -> Option<StateId> {
        self.states.iter().position(|x| x == st).map(|i| i as StateId)
    }

    pub fn into_parts(self) -> (NondetDomain, ErrorModel, Formula) {
        (self.domain, self.errors, self.formula)
    }
}

fn move_id(n: usize, i: usize, col: u8) -> u32 {
    (i * (n + 1) + col as usize) as u32
}

fn column_name(c: u8) -> String {
    if c == STORAGE {
        "S".into()
    } else {
        format!("L{c}")
    }
}

/// Builds the domain reachable from all blocks in storage with no human
/// moves used. Each robot action is followed either by nothing or by one
/// legal human move while budget remains.
pub fn build_coassembly(cfg: &BenchConfig) -> Result<Coassembly, BenchError> {
    cfg.validate()?;
    let n = cfg.n;
    let goal = cfg.goal_locations();

    let every_atom: Vec<String> = (1..=n).flat_map(|i| (0..=n as u8).map(move |j| at_atom(i, j))).collect();
    let formula = match &cfg.formula {
        Some(text) => parse(text, &PropSet::new(&every_atom)?)?,
        None => Formula::eventually(Formula::conjunction(
            goal.iter().enumerate().map(|(i, &l)| Formula::atom(Prop::new(&at_atom(i + 1, l)).expect("valid name"))),
        )),
    };
    let formula = canonicalize(&formula);
    let mut names: BTreeSet<String> = goal.iter().enumerate().map(|(i, &l)| at_atom(i + 1, l)).collect();
    names.extend(formula.atoms().iter().map(|p| p.as_str().to_string()));
    let props = PropSet::new(&names)?;
    // (object, column) for each proposition
    let atom_pos: Vec<(Prop, usize, u8)> = props
        .iter()
        .map(|p| {
            let mut it = p.as_str()["at_".len()..].split('_').map(|x| x.parse::<usize>().expect("numeric"));
            let (i, j) = (it.next().unwrap(), it.next().unwrap());
            (p.clone(), i - 1, j as u8)
        })
        .collect();

    let pruned = prune_states(n, Predicate::Prose);
    let allowed: BTreeSet<&Placement> = pruned.iter().collect();

    let mut actions: Vec<Action> = Vec::new();
    let mut coords = Vec::new();
    for i in 0..n {
        for c in 0..=n as u8 {
            actions.push(Action::named(move_id(n, i, c), format!("o{}->{}", i + 1, column_name(c))));
            coords.push(Some((i as u32, c as u32)));
        }
    }
    let nothing = actions.len() as u32;
    actions.push(Action::named(nothing, DO_NOTHING));
    coords.push(None);

    let init = CounterState {
        placement: Placement::all_in_storage(n),
        c: 0,
    };
    let mut states = vec![init.clone()];
    let mut index = HashMap::from([(init, 0 as StateId)]);
    let mut transitions = Vec::new();
    let mut queue = VecDeque::from([0 as StateId]);
    while let Some(id) = queue.pop_front() {
        let cur = states[id as usize].clone();
        let robot: Vec<(u32, Placement)> = cur
            .placement
            .legal_moves()
            .map(|(i, c)| (move_id(n, i, c), cur.placement.moved(i, c)))
            .chain(std::iter::once((nothing, cur.placement.clone())))
            .collect();
        for (a, after) in robot {
            debug_assert!(allowed.contains(&after));
            let mut succ = vec![CounterState {
                placement: after.clone(),
                c: cur.c,
            }];
            if cur.c < cfg.k {
                succ.extend(after.legal_moves().map(|(i, c)| CounterState {
                    placement: after.moved(i, c),
                    c: cur.c + 1,
                }));
            }
            let mut to: Vec<StateId> = succ
                .into_iter()
                .map(|st| {
                    *index.entry(st.clone()).or_insert_with(|| {
                        states.push(st);
                        let new = (states.len() - 1) as StateId;
                        queue.push_back(new);
                        new
                    })
                })
                .collect();
            to.sort_unstable();
            to.dedup();
            transitions.push(Transition { from: id, action: a, to });
        }
    }

    let dom_states = states
        .iter()
        .enumerate()
        .map(|(id, st)| DomainState {
            id: id as StateId,
            label: atom_pos
                .iter()
                .filter(|(_, i, j)| st.placement.column_of(*i) == *j)
                .map(|(p, _, _)| p.clone())
                .collect::<Interpretation>(),
            name: Some(st.name()),
        })
        .collect();
    let domain = NondetDomain::new(props, dom_states, actions, 0, transitions)?;
    let errors = ErrorModel::UniformSlip {
        p: cfg.p,
        neighbors: NeighborRule::SharedCoordinate(coords),
    };
    errors.validate(&domain).into_result()?;
    Ok(Coassembly {
        config: cfg.clone(),
        domain,
        errors,
        formula,
        states,
        pruned: pruned.len(),
    })
}

/// One row of the scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: u32,
    pub p: f64,
    pub states: usize,
    pub transitions: usize,
    pub model_build_ms: f64,
    pub synthesis_ms: f64,
    pub value: f64,
}

/// Generates and solves one instance, timing both phases.
pub fn measure(cfg: &BenchConfig) -> Result<ScalingRecord, BenchError> {
    let t0 = Instant::now();
    let inst = build_coassembly(cfg)?;
    let m = mdpst_from_nondet(&inst.domain, &inst.errors)?;
    let dfa = compile(&inst.formula, inst.domain.props());
    let built = t0.elapsed();
    let t1 = Instant::now();
    let syn = synthesize(
        &m,
        &dfa,
        ViOptions {
            epsilon: cfg.epsilon,
            ..ViOptions::default()
        },
    );
    let solved = t1.elapsed();
    Ok(ScalingRecord {
        n: cfg.n,
        k: cfg.k,
        p: cfg.p,
        states: inst.domain.num_states(),
        transitions: m.num_transitions(),
        model_build_ms: built.as_secs_f64() * 1e3,
        synthesis_ms: solved.as_secs_f64() * 1e3,
        value: syn.value,
    })
}

pub fn write_csv<W: std::io::Write>(records: &[ScalingRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Measures every configuration in order and optionally writes the CSV.
pub fn run_scaling(configs: &[BenchConfig], out_csv: Option<&Path>) -> Result<Vec<ScalingRecord>, BenchError> {
    let records = configs.iter().map(measure).collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = out_csv {
        let f = std::fs::File::create(path).map_err(csv::Error::from)?;
        write_csv(&records, f)?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_objects_seven_placements() {
        assert_eq!(prune_states(2, Predicate::Prose).len(), 7);
        assert_eq!(prune_states(2, Predicate::Strict).len(), 2);
    }

    #[test]
    fn five_objects_count() {
        assert_eq!(prune_states(5, Predicate::Prose).len(), 1546);
    }

    #[test]
    fn example_matrix_is_valid() {
        let p = Placement::from_positions(vec![0, 1, 3]).unwrap();
        assert!(prune_states(3, Predicate::Prose).contains(&p));
        assert!(Placement::from_positions(vec![1, 1, 0]).is_err());
    }

    #[test]
    fn render_marks_positions() {
        let p = Placement::from_positions(vec![0, 2]).unwrap();
        let text = p.render();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("o1   #"));
        assert_eq!(p.to_string(), "[S L2]");
    }

    #[test]
    fn small_instance_shape() {
        let inst = build_coassembly(&BenchConfig::new(2, 1, 0.1)).unwrap();
        assert_eq!(inst.augmented_states(), 14);
        assert_eq!(inst.domain.initial(), 0);
        let dn = inst.do_nothing();
        for s in 0..inst.domain.num_states() as StateId {
            assert!(inst.domain.is_applicable(s, dn));
            assert_eq!(inst.errors.error_dist(&inst.domain, s, dn).unwrap(), vec![(dn, 1.0)]);
        }
        // counter never decreases and grows by at most one
        for t in inst.domain.transitions() {
            let c = inst.states[t.from as usize].c;
            for s2 in &t.to {
                let c2 = inst.states[*s2 as usize].c;
                assert!(c2 == c || c2 == c + 1);
            }
            if c == 1 {
                assert_eq!(t.to.len(), 1);
            }
        }
    }

    #[test]
    fn slips_share_a_coordinate() {
        let inst = build_coassembly(&BenchConfig::new(2, 0, 0.2)).unwrap();
        let a = inst.move_action(0, 1);
        let supp = inst.errors.support(&inst.domain, 0, a).unwrap();
        for b in supp {
            if b != a {
                let (i, c) = inst.decode_action(b).unwrap();
                assert!((i == 0) != (c == 1));
            }
        }
    }

    #[test]
    fn plain_planning_reaches_goal() {
        let r = measure(&BenchConfig::new(2, 0, 0.0)).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.states, 7);
    }

    #[test]
    fn custom_goal_and_formula() {
        let mut cfg = BenchConfig::new(2, 0, 0.0);
        cfg.goal = Some(vec![2, 1]);
        assert_eq!(build_coassembly(&cfg).unwrap().formula.to_string(), "(true U (at_1_2 & at_2_1))");
        cfg.formula = Some("F at_1_0 & F at_2_2".into());
        assert!(build_coassembly(&cfg).is_ok());
        cfg.goal = Some(vec![1, 1]);
        assert!(matches!(build_coassembly(&cfg), Err(BenchError::Config(_))));
    }
}
