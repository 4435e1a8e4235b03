use rayon::prelude::*;

use super::sub::{SubMdpst, ZChoice, ZKind};

/// Convergence threshold used unless overridden.
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// In-place updates in ascending state order.
    GaussSeidel,
    /// Each sweep reads only the previous vector; states are split across
    /// `workers` threads.
    Jacobi { workers: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViOptions {
    pub epsilon: f64,
    pub sweep: Sweep,
}

impl Default for ViOptions {
    fn default() -> Self {
        ViOptions {
            epsilon: DEFAULT_EPSILON,
            sweep: Sweep::GaussSeidel,
        }
    }
}

/// Values over the states of a [`SubMdpst`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFn {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub residual: f64,
}

impl ValueFn {
    pub fn get(&self, z: u32) -> f64 {
        self.values[z as usize]
    }
}

pub(crate) fn choice_value(c: &ZChoice, v: &[f64]) -> f64 {
    c.outcomes
        .iter()
        .map(|o| {
            let worst = o.set.iter().map(|t| v[*t as usize]).fold(f64::INFINITY, f64::min);
            o.mass * worst
        })
        .sum()
}

/// Index of the best choice at `z` and its value: the robust backup
/// `max_a Σ_Θ T(z, a, Θ) · min_{s' ∈ Θ} V(s')`. Ties go to the earliest
/// choice, i.e. the lowest action id.
pub fn best_choice(z: &SubMdpst, s: u32, v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in z.choices(s).iter().enumerate() {
        let val = choice_value(c, v);
        if val > best.1 {
            best = (i, val);
        }
    }
    best
}

/// Value of the robust backup at `s`.
pub fn backup(z: &SubMdpst, s: u32, v: &[f64]) -> f64 {
    best_choice(z, s, v).1
}

/// Robust value iteration with the default sweep order.
pub fn robust_vi(z: &SubMdpst, epsilon: f64) -> ValueFn {
    robust_vi_with(
        z,
        ViOptions {
            epsilon,
            sweep: Sweep::GaussSeidel,
        },
    )
}

/// Iterates the robust backup from `V = 1` on goals and `0` elsewhere until
/// a full sweep changes no value by `epsilon` or more.
///
/// The iterates are nondecreasing and bounded by one, so the loop ends.
pub fn robust_vi_with(z: &SubMdpst, opts: ViOptions) -> ValueFn {
    assert!(opts.epsilon > 0.0, "epsilon must be positive");
    let mut v: Vec<f64> = z
        .kinds()
        .iter()
        .map(|k| if *k == ZKind::Goal { 1.0 } else { 0.0 })
        .collect();
    let live: Vec<u32> = z.live_states().collect();
    let mut iterations = 0;
    let residual = match opts.sweep {
        Sweep::GaussSeidel => loop {
            iterations += 1;
            let mut delta: f64 = 0.0;
            for &s in &live {
                let new = backup(z, s, &v).clamp(0.0, 1.0);
                delta = delta.max((new - v[s as usize]).abs());
                v[s as usize] = new;
            }
            if delta < opts.epsilon {
                break delta;
            }
        },
        Sweep::Jacobi { workers } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .expect("thread pool");
            pool.install(|| loop {
                iterations += 1;
                let updates: Vec<f64> = live.par_iter().map(|&s| backup(z, s, &v).clamp(0.0, 1.0)).collect();
                let mut delta: f64 = 0.0;
                for (&s, new) in live.iter().zip(updates) {
                    delta = delta.max((new - v[s as usize]).abs());
                    v[s as usize] = new;
                }
                if delta < opts.epsilon {
                    break delta;
                }
            })
        }
    };
    ValueFn {
        values: v,
        iterations,
        residual,
    }
}
