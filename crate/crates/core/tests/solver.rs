mod common;

use common::{classical_vi, random_det_domain, random_errors, random_nondet_domain, random_singleton_sub, random_sub, rng};
use rand::Rng;
use tremble_core::abstraction::{mdp_from_det, mdpst_from_nondet, Outcome};
use tremble_core::dfa::compile;
use tremble_core::ltlf::parse;
use tremble_core::product::{
    backup, build_product, selection_backup, greedy_choices, make_sub, oracle_value, partition, robust_vi, robust_vi_with,
    strategy_worst_value, synthesize, ProdId, Region, SubMdpst, Sweep, ViOptions, ZAction, ZChoice, ZKind,
};

#[test]
fn selection_backup_equals_backup_exactly() {
    for seed in 0..300 {
        let mut r = rng(seed);
        let z = random_sub(&mut r, 6, 3, 3, 3, u64::MAX);
        let vi = robust_vi(&z, 1e-6).values;
        let noise: Vec<f64> = (0..z.num_states()).map(|_| r.random::<f64>()).collect();
        for v in [&vi, &noise] {
            for s in z.live_states() {
                assert_eq!(selection_backup(&z, s, v), backup(&z, s, v), "seed {seed} state {s}");
            }
        }
    }
}

#[test]
fn value_iteration_matches_brute_force() {
    for seed in 0..40 {
        let mut r = rng(1000 + seed);
        let z = random_sub(&mut r, 6, 3, 3, 3, 200_000);
        let v = robust_vi(&z, 1e-9).get(z.initial());
        let o = oracle_value(&z).unwrap();
        assert!((v - o).abs() < 1e-4, "seed {seed}: vi {v} oracle {o}");
    }
}

#[test]
fn extracted_strategy_achieves_its_value() {
    for seed in 0..40 {
        let mut r = rng(2000 + seed);
        let z = random_sub(&mut r, 6, 3, 3, 3, 200_000);
        let v = robust_vi(&z, 1e-3);
        let sigma = greedy_choices(&z, &v.values);
        let worst = strategy_worst_value(&z, &sigma).unwrap();
        let init = z.initial() as usize;
        assert!(worst[init] >= v.values[init] - 1e-3, "seed {seed}: {} < {}", worst[init], v.values[init]);
    }
}

#[test]
fn singleton_models_agree_with_classical_iteration() {
    for seed in 0..100 {
        let mut r = rng(3000 + seed);
        let z = random_singleton_sub(&mut r, 8, 3, 3);
        let robust = robust_vi(&z, 1e-10);
        let classic = classical_vi(&z);
        for s in 0..z.num_states() {
            assert!((robust.values[s] - classic[s]).abs() < 1e-6, "seed {seed} state {s}");
        }
    }
}

#[test]
fn sweeps_are_monotone_and_end_near_a_fixed_point() {
    for seed in 0..50 {
        let mut r = rng(4000 + seed);
        let z = random_sub(&mut r, 6, 3, 3, 3, u64::MAX);
        let eps = 1e-4;
        let v = robust_vi(&z, eps);
        for s in z.live_states() {
            let b = backup(&z, s, &v.values);
            assert!(b >= v.values[s as usize] - 1e-15);
            assert!(b - v.values[s as usize] <= eps + 1e-12);
        }
        for (k, val) in v.values.iter().enumerate() {
            match z.kind(k as u32) {
                ZKind::Goal => assert_eq!(*val, 1.0),
                ZKind::Sink => assert_eq!(*val, 0.0),
                ZKind::Live => assert!((0.0..=1.0).contains(val)),
            }
        }
        let coarse = robust_vi(&z, 1e-2);
        assert!(coarse.values.iter().zip(&v.values).all(|(a, b)| a <= b));
    }
}

#[test]
fn jacobi_agrees_with_gauss_seidel() {
    for seed in 0..30 {
        let mut r = rng(5000 + seed);
        let z = random_sub(&mut r, 6, 3, 3, 3, u64::MAX);
        let gs = robust_vi(&z, 1e-8);
        let one = robust_vi_with(&z, ViOptions { epsilon: 1e-8, sweep: Sweep::Jacobi { workers: 1 } });
        let three = robust_vi_with(&z, ViOptions { epsilon: 1e-8, sweep: Sweep::Jacobi { workers: 3 } });
        assert_eq!(one, three, "parallel sweeps must not depend on the worker count");
        for (a, b) in gs.values.iter().zip(&one.values) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

/// Sub-model over the whole reachable product, with no restriction.
fn full_model(p: &tremble_core::product::ProductMdpst) -> SubMdpst {
    let n = p.num_states() as ProdId;
    let kinds = (0..n).map(|i| if p.is_goal(i) { ZKind::Goal } else { ZKind::Live }).collect();
    let rows = (0..n)
        .filter(|i| !p.is_goal(*i))
        .map(|i| {
            p.choices(i)
                .iter()
                .map(|c| ZChoice {
                    action: ZAction::Act(c.action),
                    outcomes: c.outcomes.iter().map(|o| Outcome { set: o.set.clone(), mass: o.mass }).collect(),
                })
                .collect()
        })
        .collect();
    SubMdpst::new(kinds, rows, p.initial()).unwrap()
}

#[test]
fn restriction_to_relevant_states_keeps_values() {
    let mut checked = 0;
    for seed in 0..200 {
        let mut r = rng(6000 + seed);
        let d = random_nondet_domain(&mut r, 6, 3, 3);
        let e = random_errors(&mut r, &d);
        let m = mdpst_from_nondet(&d, &e).unwrap();
        let dfa = compile(&parse("F a", d.props()).unwrap(), d.props());
        let p = build_product(&m, &dfa);
        let part = partition(&p);
        let full = robust_vi(&full_model(&p), 1e-12);
        for s in part.states_in(Region::Dead) {
            assert_eq!(full.values[s as usize], 0.0);
        }
        let Ok(z) = make_sub(&p, &part) else {
            assert_eq!(full.values[p.initial() as usize], 0.0);
            continue;
        };
        checked += 1;
        let restricted = robust_vi(&z, 1e-12);
        for k in 0..z.num_states() as u32 {
            let pid = z.origin(k).unwrap() as usize;
            assert!((restricted.values[k as usize] - full.values[pid]).abs() < 1e-9, "seed {seed}");
        }
        if full_model(&p).num_states() <= 8 {
            if let Ok(o) = oracle_value(&full_model(&p)) {
                assert!((o - full.values[p.initial() as usize]).abs() < 1e-6);
            }
        }
    }
    assert!(checked > 50);
}

#[test]
fn set_with_goal_and_dead_member_survives_intact() {
    use tremble_core::domain::{Action, DomainState, ErrorModel, NondetDomain, Transition};
    use tremble_core::ltlf::{Interpretation, PropSet};
    // s0 --go--> {s1 (goal), s2 (dead self-loop)}
    let ps = PropSet::new(["a"]).unwrap();
    let a = ps.get("a").unwrap().clone();
    let states = (0..3)
        .map(|id| DomainState {
            id,
            label: if id == 1 { [a.clone()].into_iter().collect() } else { Interpretation::new() },
            name: None,
        })
        .collect();
    let t = |from, to: Vec<u32>| Transition { from, action: 0, to };
    let d = NondetDomain::new(ps.clone(), states, vec![Action::named(0, "go")], 0, vec![t(0, vec![1, 2]), t(1, vec![1]), t(2, vec![2])]).unwrap();
    let m = mdpst_from_nondet(&d, &ErrorModel::no_slip()).unwrap();
    let dfa = compile(&parse("F a", &ps).unwrap(), &ps);
    let p = build_product(&m, &dfa);
    let part = partition(&p);
    let z = make_sub(&p, &part).unwrap();
    let init = z.initial();
    assert_eq!(z.choices(init)[0].outcomes[0].set.len(), 2);
    let kinds: Vec<ZKind> = z.choices(init)[0].outcomes[0].set.iter().map(|t| z.kind(*t)).collect();
    assert!(kinds.contains(&ZKind::Goal) && kinds.contains(&ZKind::Sink));
    assert_eq!(robust_vi(&z, 1e-3).get(init), 0.0);
}

#[test]
fn deterministic_pipeline_is_reproducible() {
    for seed in 0..20 {
        let mut r = rng(7000 + seed);
        let d = random_det_domain(&mut r, 5, 3);
        let e = random_errors(&mut r, &d);
        let m = mdp_from_det(&d, &e).unwrap();
        let dfa = compile(&parse("F a", d.props()).unwrap(), d.props());
        let a = synthesize(&m, &dfa, ViOptions::default()).strategy.to_json();
        let dfa2 = compile(&parse("F a", d.props()).unwrap(), d.props());
        let b = synthesize(&m, &dfa2, ViOptions::default()).strategy.to_json();
        assert_eq!(a, b);
    }
}
