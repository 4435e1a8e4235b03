//! Brute-force reference semantics for small sub-models. Used by tests and
//! the acceptance suite, never by the solver itself.

use thiserror::Error;

use super::sub::{SubMdpst, ZKind};

pub const ORACLE_MAX_STATES: usize = 8;
pub const ORACLE_MAX_ACTIONS: usize = 3;
/// Upper bound on stationary natures enumerated per strategy.
pub const ORACLE_MAX_NATURES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),
}

/// One element picked from every successor set of one choice at one state.
/// A stationary deterministic nature is one of these per (state, choice).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NatureSelection {
    pub state: u32,
    pub choice: usize,
    /// `picks[i]` is the position inside the i-th outcome's set.
    pub picks: Vec<usize>,
}

impl NatureSelection {
    /// Every selection for `(state, choice)`, in lexicographic order.
    pub fn all(z: &SubMdpst, state: u32, choice: usize) -> Vec<NatureSelection> {
        let sizes: Vec<usize> = z.choices(state)[choice].outcomes.iter().map(|o| o.set.len()).collect();
        odometer(&sizes)
            .into_iter()
            .map(|picks| NatureSelection { state, choice, picks })
            .collect()
    }

    pub fn is_valid(&self, z: &SubMdpst) -> bool {
        let Some(c) = z.choices(self.state).get(self.choice) else {
            return false;
        };
        c.outcomes.len() == self.picks.len() && c.outcomes.iter().zip(&self.picks).all(|(o, i)| *i < o.set.len())
    }
}

fn odometer(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; sizes.len()];
    if sizes.contains(&0) {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < sizes[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// The successor distribution induced by a selection, with equal targets
/// merged. Sorted by target.
pub fn feasible_distribution(z: &SubMdpst, sel: &NatureSelection) -> Vec<(u32, f64)> {
    let c = &z.choices(sel.state)[sel.choice];
    let mut d: Vec<(u32, f64)> = Vec::new();
    for (o, i) in c.outcomes.iter().zip(&sel.picks) {
        let t = o.set[*i];
        match d.iter_mut().find(|(x, _)| *x == t) {
            Some(e) => e.1 += o.mass,
            None => d.push((t, o.mass)),
        }
    }
    d.sort_by_key(|(t, _)| *t);
    d
}

/// Backup with the adversary ranging over every feasible distribution:
/// `max_a min_sel Σ_Θ T(s, a, Θ) · V(sel(Θ))`.
///
/// The sum is taken per set, in set order, so the minimizing selection
/// produces the same floating point operations as the robust backup.
pub fn selection_backup(z: &SubMdpst, s: u32, v: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (ci, c) in z.choices(s).iter().enumerate() {
        let mut worst = f64::INFINITY;
        for sel in NatureSelection::all(z, s, ci) {
            let val: f64 = c
                .outcomes
                .iter()
                .zip(&sel.picks)
                .map(|(o, i)| o.mass * v[o.set[*i] as usize])
                .sum();
            worst = worst.min(val);
        }
        best = best.max(worst);
    }
    best
}

fn check_size(z: &SubMdpst) -> Result<(), OracleError> {
    if z.num_states() > ORACLE_MAX_STATES {
        return Err(OracleError::InstanceTooLarge(format!("{} states", z.num_states())));
    }
    let widest = (0..z.num_states() as u32).map(|s| z.choices(s).len()).max().unwrap_or(0);
    if widest > ORACLE_MAX_ACTIONS {
        return Err(OracleError::InstanceTooLarge(format!("{widest} actions at one state")));
    }
    Ok(())
}

fn natures_for(z: &SubMdpst, strategy: &[usize]) -> Result<u64, OracleError> {
    let mut count: u64 = 1;
    for s in z.live_states() {
        for o in &z.choices(s)[strategy[s as usize]].outcomes {
            count = count.saturating_mul(o.set.len() as u64);
        }
    }
    if count > ORACLE_MAX_NATURES {
        return Err(OracleError::InstanceTooLarge(format!("{count} natures")));
    }
    Ok(count)
}

/// Probability of eventually hitting a goal state in the chain where live
/// state `s` moves according to `rows[s]`.
fn chain_reach(z: &SubMdpst, rows: &[Vec<(u32, f64)>]) -> Vec<f64> {
    let n = z.num_states();
    // states with a positive-probability path to a goal
    let mut can = vec![false; n];
    for (i, k) in z.kinds().iter().enumerate() {
        can[i] = *k == ZKind::Goal;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for s in z.live_states() {
            let s = s as usize;
            if !can[s] && rows[s].iter().any(|(t, _)| can[*t as usize]) {
                can[s] = true;
                changed = true;
            }
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|s| can[*s] && z.kinds()[*s] == ZKind::Live).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, s) in unknown.iter().enumerate() {
        pos[*s] = i;
    }
    // (I - P) x = b over the unknowns
    let m = unknown.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] = 1.0;
        for &(t, p) in &rows[s] {
            let t = t as usize;
            if z.kinds()[t] == ZKind::Goal {
                a[i][m] += p;
            } else if pos[t] != usize::MAX {
                a[i][pos[t]] -= p;
            }
        }
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|x, y| a[*x][col].abs().total_cmp(&a[*y][col].abs()))
            .expect("nonempty");
        a.swap(col, piv);
        let d = a[col][col];
        for j in col..=m {
            a[col][j] /= d;
        }
        for r in 0..m {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for j in col..=m {
                    a[r][j] -= f * a[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for (i, k) in z.kinds().iter().enumerate() {
        if *k == ZKind::Goal {
            x[i] = 1.0;
        }
    }
    for (i, &s) in unknown.iter().enumerate() {
        x[s] = a[i][m].clamp(0.0, 1.0);
    }
    x
}

fn worst_for(z: &SubMdpst, strategy: &[usize]) -> Result<Vec<f64>, OracleError> {
    natures_for(z, strategy)?;
    let live: Vec<u32> = z.live_states().collect();
    let options: Vec<Vec<Vec<(u32, f64)>>> = live
        .iter()
        .map(|&s| {
            NatureSelection::all(z, s, strategy[s as usize])
                .iter()
                .map(|sel| feasible_distribution(z, sel))
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = options.iter().map(Vec::len).collect();
    let mut rows = vec![Vec::new(); z.num_states()];
    let mut worst = vec![f64::INFINITY; z.num_states()];
    for pick in odometer(&sizes) {
        for (k, &s) in live.iter().enumerate() {
            rows[s as usize] = options[k][pick[k]].clone();
        }
        let x = chain_reach(z, &rows);
        for (w, v) in worst.iter_mut().zip(x) {
            *w = w.min(v);
        }
    }
    Ok(worst)
}

/// Reachability value of a fixed memoryless strategy (`strategy[s]` is a
/// choice index; ignored off live states) against its worst stationary
/// deterministic nature, per state.
pub fn strategy_worst_value(z: &SubMdpst, strategy: &[usize]) -> Result<Vec<f64>, OracleError> {
    check_size(z)?;
    worst_for(z, strategy)
}

/// `max` over memoryless deterministic strategies of `min` over stationary
/// deterministic natures of the probability of reaching a goal from the
/// initial state. Chains are solved exactly rather than iterated.
pub fn oracle_value(z: &SubMdpst) -> Result<f64, OracleError> {
    check_size(z)?;
    let n = z.num_states();
    let widths: Vec<usize> = (0..n as u32)
        .map(|s| if z.kind(s) == ZKind::Live { z.choices(s).len() } else { 1 })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for strategy in odometer(&widths) {
        let w = worst_for(z, &strategy)?;
        best = best.max(w[z.initial() as usize]);
    }
    Ok(best)
}
