//! Generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tremble_core::abstraction::{Mdpst, Outcome};
use tremble_core::domain::{Action, ActionId, DetDomain, DomainState, ErrorModel, NondetDomain, StateId, Transition};
use tremble_core::ltlf::{canonicalize, Formula, Interpretation, Prop, PropSet, Trace};
use tremble_core::product::{SubMdpst, ZAction, ZChoice, ZKind, ORACLE_MAX_NATURES};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn props(names: &[&str]) -> PropSet {
    PropSet::new(names).unwrap()
}

/// Every nonempty trace over `props` of length at most `max_len`.
pub fn all_traces(props: &PropSet, max_len: usize) -> Vec<Trace> {
    let letters: Vec<Interpretation> = (0..1usize << props.len())
        .map(|bits| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut layer: Vec<Trace> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for t in &layer {
            for l in &letters {
                let mut t2 = t.clone();
                t2.push(l.clone());
                next.push(t2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn unary(i: usize, f: Formula) -> Formula {
    match i {
        0 => Formula::not(f),
        1 => Formula::next(f),
        _ => Formula::weak_next(f),
    }
}

fn binary(i: usize, a: Formula, b: Formula) -> Formula {
    match i {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        2 => Formula::until(a, b),
        _ => Formula::release(a, b),
    }
}

/// Formulas of depth exactly one more than the inputs' maximum, built from
/// `lower` (all formulas of smaller depth) with at least one operand taken
/// from `top` (those of the previous depth).
pub fn grow(lower: &[Formula], top: &[Formula]) -> Vec<Formula> {
    let mut out = Vec::new();
    for f in top {
        for u in 0..3 {
            out.push(unary(u, f.clone()));
        }
    }
    let top_set: HashSet<&Formula> = top.iter().collect();
    for a in lower {
        for b in lower {
            if !top_set.contains(a) && !top_set.contains(b) {
                continue;
            }
            for op in 0..4 {
                out.push(binary(op, a.clone(), b.clone()));
            }
        }
    }
    out
}

pub fn leaves(props: &PropSet) -> Vec<Formula> {
    let mut v = vec![Formula::True, Formula::False];
    v.extend(props.iter().map(|p| Formula::atom(p.clone())));
    v
}

/// Canonical representatives of all formulas up to `depth`.
pub fn canonical_classes(props: &PropSet, depth: usize) -> Vec<Formula> {
    let mut seen: HashSet<Formula> = HashSet::new();
    let mut all: Vec<Formula> = Vec::new();
    let mut top: Vec<Formula> = Vec::new();
    for f in leaves(props) {
        let c = canonicalize(&f);
        if seen.insert(c.clone()) {
            all.push(c.clone());
            top.push(c);
        }
    }
    for _ in 0..depth {
        let mut new_top = Vec::new();
        for f in grow(&all, &top) {
            let c = canonicalize(&f);
            if seen.insert(c.clone()) {
                new_top.push(c);
            }
        }
        all.extend(new_top.iter().cloned());
        top = new_top;
    }
    all
}

/// A random formula of depth at most `depth`.
pub fn random_formula(r: &mut ChaCha8Rng, props: &PropSet, depth: usize) -> Formula {
    if depth == 0 || r.random_bool(0.2) {
        let l = leaves(props);
        return l[r.random_range(0..l.len())].clone();
    }
    match r.random_range(0..9) {
        0..=2 => unary(r.random_range(0..3), random_formula(r, props, depth - 1)),
        3 => Formula::eventually(random_formula(r, props, depth - 1)),
        4 => Formula::always(random_formula(r, props, depth - 1)),
        op => binary(
            op - 5,
            random_formula(r, props, depth - 1),
            random_formula(r, props, depth - 1),
        ),
    }
}

/// Proptest strategy for formulas over `names` without the internal
/// end-of-trace marker.
pub fn arb_formula(names: &'static [&'static str], depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        proptest::sample::select(names).prop_map(|n| Formula::atom(Prop::new(n).unwrap())),
    ];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::weak_next),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::release(a, b)),
        ]
    })
}

pub fn arb_trace(names: &'static [&'static str], max_len: usize) -> impl Strategy<Value = Trace> {
    let letter = proptest::collection::vec(any::<bool>(), names.len()).prop_map(move |bits| {
        names
            .iter()
            .zip(bits)
            .filter(|(_, b)| *b)
            .map(|(n, _)| Prop::new(n).unwrap())
            .collect::<Interpretation>()
    });
    proptest::collection::vec(letter, 1..=max_len)
}

fn random_dist(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn random_subset(r: &mut ChaCha8Rng, n: u32, max: usize) -> Vec<u32> {
    let mut all: Vec<u32> = (0..n).collect();
    all.shuffle(r);
    let k = r.random_range(1..=max.min(n as usize));
    let mut s = all[..k].to_vec();
    s.sort_unstable();
    s
}

/// Work the brute-force oracle would do: strategies times natures.
pub fn oracle_work(z: &SubMdpst) -> u64 {
    let mut strategies: u64 = 1;
    let mut natures: u64 = 1;
    for s in z.live_states() {
        strategies *= z.choices(s).len() as u64;
        let widest = z
            .choices(s)
            .iter()
            .map(|c| c.outcomes.iter().map(|o| o.set.len() as u64).product::<u64>())
            .max()
            .unwrap();
        natures = natures.saturating_mul(widest);
    }
    strategies.saturating_mul(natures)
}

/// A random sub-model with at most `max_states` states, `max_actions`
/// choices per live state and `max_sets` successor sets of at most
/// `max_set` elements. State 0 is live; at least one goal exists. Draws
/// again while the oracle would need more than `budget` chain solves.
pub fn random_sub(
    r: &mut ChaCha8Rng,
    max_states: usize,
    max_actions: usize,
    max_sets: usize,
    max_set: usize,
    budget: u64,
) -> SubMdpst {
    loop {
        let n = r.random_range(2..=max_states);
        let mut kinds = vec![ZKind::Live];
        kinds.push(ZKind::Goal);
        for _ in 2..n {
            kinds.push(match r.random_range(0..8) {
                0 => ZKind::Goal,
                1 => ZKind::Sink,
                _ => ZKind::Live,
            });
        }
        kinds[1..].shuffle(r);
        let live = kinds.iter().filter(|k| **k == ZKind::Live).count();
        let rows = (0..live)
            .map(|_| {
                let na = r.random_range(1..=max_actions);
                (0..na)
                    .map(|a| {
                        let ns = r.random_range(1..=max_sets);
                        let masses = random_dist(r, ns);
                        ZChoice {
                            action: ZAction::Act(a as u32),
                            outcomes: masses
                                .into_iter()
                                .map(|mass| Outcome {
                                    set: random_subset(r, n as u32, max_set),
                                    mass,
                                })
                                .collect(),
                        }
                    })
                    .collect()
            })
            .collect();
        let z = SubMdpst::new(kinds, rows, 0).unwrap();
        let per_strategy_ok = {
            let mut natures: u64 = 1;
            for s in z.live_states() {
                natures *= z
                    .choices(s)
                    .iter()
                    .map(|c| c.outcomes.iter().map(|o| o.set.len() as u64).product::<u64>())
                    .max()
                    .unwrap();
            }
            natures <= ORACLE_MAX_NATURES
        };
        if per_strategy_ok && oracle_work(&z) <= budget {
            return z;
        }
    }
}

/// A random sub-model whose successor sets are all singletons.
pub fn random_singleton_sub(r: &mut ChaCha8Rng, max_states: usize, max_actions: usize, max_sets: usize) -> SubMdpst {
    random_sub(r, max_states, max_actions, max_sets, 1, u64::MAX)
}

fn label_a(r: &mut ChaCha8Rng, a: &Prop, p: f64) -> Interpretation {
    if r.random_bool(p) {
        [a.clone()].into_iter().collect()
    } else {
        Interpretation::new()
    }
}

/// Random deterministic domain over `{a}` with every action applicable in
/// at least one state and every state having at least one action.
pub fn random_det_domain(r: &mut ChaCha8Rng, max_states: u32, max_actions: u32) -> DetDomain {
    let ps = props(&["a"]);
    let a = ps.get("a").unwrap().clone();
    let n = r.random_range(1..=max_states);
    let na = r.random_range(1..=max_actions);
    let states = (0..n)
        .map(|id| DomainState {
            id,
            label: label_a(r, &a, 0.3),
            name: None,
        })
        .collect();
    let actions = (0..na).map(|i| Action::named(i, format!("act{i}"))).collect();
    let mut trans = Vec::new();
    for s in 0..n {
        let applicable = random_subset(r, na, na as usize);
        for b in applicable {
            trans.push((s, b, r.random_range(0..n)));
        }
    }
    DetDomain::new(ps, states, actions, 0, trans).unwrap()
}

/// Random explicit slip model for `d`: each row puts random mass on a
/// random subset of the applicable actions that includes the intended one.
pub fn random_errors(r: &mut ChaCha8Rng, d: &NondetDomain) -> ErrorModel {
    let mut rows = Vec::new();
    for s in 0..d.num_states() as StateId {
        let app: Vec<u32> = d.applicable(s).collect();
        for &a in &app {
            let mut supp: Vec<u32> = app.iter().copied().filter(|b| *b != a && r.random_bool(0.5)).collect();
            supp.push(a);
            supp.sort_unstable();
            let m = random_dist(r, supp.len());
            rows.push((s, a, supp.into_iter().zip(m).collect()));
        }
    }
    ErrorModel::explicit(rows)
}

/// Random nondeterministic domain over `{a}` with successor sets of up to
/// `max_set` states.
pub fn random_nondet_domain(r: &mut ChaCha8Rng, max_states: u32, max_actions: u32, max_set: usize) -> NondetDomain {
    let ps = props(&["a"]);
    let a = ps.get("a").unwrap().clone();
    let n = r.random_range(2..=max_states);
    let na = r.random_range(1..=max_actions);
    let states = (0..n)
        .map(|id| DomainState {
            id,
            label: label_a(r, &a, 0.25),
            name: None,
        })
        .collect();
    let actions = (0..na).map(|i| Action::named(i, format!("act{i}"))).collect();
    let mut trans = Vec::new();
    for s in 0..n {
        for b in random_subset(r, na, na as usize) {
            trans.push(Transition {
                from: s,
                action: b,
                to: random_subset(r, n, max_set),
            });
        }
    }
    NondetDomain::new(ps, states, actions, 0, trans).unwrap()
}

/// Textbook value iteration for maximal reachability on a sub-model whose
/// sets are singletons, run to a fixed point.
pub fn classical_vi(z: &SubMdpst) -> Vec<f64> {
    let n = z.num_states();
    let mut v: Vec<f64> = (0..n as u32).map(|s| if z.kind(s) == ZKind::Goal { 1.0 } else { 0.0 }).collect();
    loop {
        let mut next = v.clone();
        for s in z.live_states() {
            let mut best: f64 = 0.0;
            for c in z.choices(s) {
                let mut total = 0.0;
                for o in &c.outcomes {
                    assert_eq!(o.set.len(), 1);
                    total += o.mass * v[o.set[0] as usize];
                }
                best = best.max(total);
            }
            next[s as usize] = best;
        }
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-13 {
            return v;
        }
    }
}

/// History-dependent intended action: indexed by (step, state).
pub type Plan = HashMap<(usize, StateId), ActionId>;

pub fn random_plan(r: &mut ChaCha8Rng, d: &DetDomain, horizon: usize) -> Plan {
    let mut plan = Plan::new();
    for k in 0..horizon {
        for s in 0..d.num_states() as StateId {
            let app: Vec<ActionId> = d.applicable(s).collect();
            plan.insert((k, s), app[r.random_range(0..app.len())]);
        }
    }
    plan
}

/// Probability of each state sequence by enumerating instructed actions.
pub fn by_slips(d: &DetDomain, e: &ErrorModel, plan: &Plan, horizon: usize) -> HashMap<Vec<StateId>, f64> {
    let mut out = HashMap::new();
    fn go(
        d: &DetDomain,
        e: &ErrorModel,
        plan: &Plan,
        horizon: usize,
        path: &mut Vec<StateId>,
        p: f64,
        out: &mut HashMap<Vec<StateId>, f64>,
    ) {
        if path.len() == horizon + 1 {
            *out.entry(path.clone()).or_insert(0.0) += p;
            return;
        }
        let s = *path.last().unwrap();
        let intended = plan[&(path.len() - 1, s)];
        for (instructed, q) in e.error_dist(d, s, intended).unwrap() {
            path.push(d.successor(s, instructed).unwrap());
            go(d, e, plan, horizon, path, p * q, out);
            path.pop();
        }
    }
    go(d, e, plan, horizon, &mut vec![d.initial()], 1.0, &mut out);
    out
}

/// Probability of each state sequence in the abstraction.
pub fn by_mdp(m: &Mdpst, plan: &Plan, horizon: usize) -> HashMap<Vec<StateId>, f64> {
    let mut layer = vec![(vec![m.initial()], 1.0)];
    for k in 0..horizon {
        let mut next = Vec::new();
        for (path, p) in layer {
            let s = *path.last().unwrap();
            let c = m.choice(s, plan[&(k, s)]).unwrap();
            for o in &c.outcomes {
                assert_eq!(o.set.len(), 1);
                let mut p2 = path.clone();
                p2.push(o.set[0]);
                next.push((p2, p * o.mass));
            }
        }
        layer = next;
    }
    layer.into_iter().collect()
}
