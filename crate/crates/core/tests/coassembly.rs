use tremble_core::coassembly::{
    build_coassembly, measure, prune_brute_force, prune_states, run_scaling, BenchConfig, Placement, Predicate, STORAGE,
};
use tremble_core::domain::StateId;

#[test]
fn recursion_matches_brute_force() {
    for n in 2..=4 {
        for pred in [Predicate::Prose, Predicate::Strict] {
            assert_eq!(prune_states(n, pred), prune_brute_force(n, pred), "N={n} {pred:?}");
        }
    }
}

#[test]
fn placements_satisfy_the_constraints() {
    for p in prune_states(4, Predicate::Prose) {
        let m = p.to_matrix();
        assert!(m.iter().all(|r| r.iter().filter(|x| **x).count() == 1));
        for j in 1..=4 {
            assert!(m.iter().filter(|r| r[j]).count() <= 1);
        }
    }
    assert!(prune_states(4, Predicate::Prose).contains(&Placement::all_in_storage(4)));
    assert!(!prune_states(4, Predicate::Strict).contains(&Placement::all_in_storage(4)));
}

#[test]
fn states_grow_by_a_constant_slab_in_k() {
    for n in 2..=4 {
        let counts: Vec<usize> = (0..=3)
            .map(|k| build_coassembly(&BenchConfig::new(n, k, 0.05)).unwrap().domain.num_states())
            .collect();
        let slab = counts[1] - counts[0];
        assert!(counts.windows(2).all(|w| w[1] - w[0] == slab), "N={n}: {counts:?}");
    }
}

#[test]
fn augmented_count_is_a_product() {
    let inst = build_coassembly(&BenchConfig::new(3, 2, 0.0)).unwrap();
    assert_eq!(inst.augmented_states(), prune_states(3, Predicate::Prose).len() * 3);
}

#[test]
fn human_moves_are_budgeted() {
    let inst = build_coassembly(&BenchConfig::new(3, 2, 0.05)).unwrap();
    for t in inst.domain.transitions() {
        let from = &inst.states[t.from as usize];
        let mut same = 0;
        for s in &t.to {
            let to = &inst.states[*s as usize];
            assert!(to.c == from.c || to.c == from.c + 1);
            same += usize::from(to.c == from.c);
        }
        assert_eq!(same, 1, "exactly one outcome without a human move");
        if from.c == 2 {
            assert_eq!(t.to.len(), 1);
        }
    }
}

#[test]
fn robot_moves_follow_the_placement_rules() {
    let inst = build_coassembly(&BenchConfig::new(3, 0, 0.0)).unwrap();
    for s in 0..inst.domain.num_states() as StateId {
        let pl = &inst.states[s as usize].placement;
        for a in inst.domain.applicable(s) {
            if let Some((i, c)) = inst.decode_action(a) {
                assert_ne!(pl.column_of(i), c);
                assert!(c == STORAGE || pl.occupant(c).is_none());
            }
        }
    }
}

#[test]
fn plain_planning_instances_are_solved() {
    for n in 2..=4 {
        assert_eq!(measure(&BenchConfig::new(n, 0, 0.0)).unwrap().value, 1.0);
    }
}

#[test]
fn values_do_not_increase_with_adversary_or_slips() {
    // true values are all 1 here; computed values may differ within epsilon
    for n in 2..=3 {
        for p in [0.0, 0.05, 0.2] {
            let vals: Vec<f64> = (0..=3).map(|k| measure(&BenchConfig::new(n, k, p)).unwrap().value).collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + 1e-3, "N={n} p={p}: {vals:?}");
            }
        }
        for k in 0..=2 {
            let vals: Vec<f64> = [0.0, 0.05, 0.2].iter().map(|p| measure(&BenchConfig::new(n, k, *p)).unwrap().value).collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + 1e-3, "N={n} K={k}: {vals:?}");
            }
        }
    }
}

#[test]
fn scaling_csv_has_the_documented_header() {
    let dir = std::env::temp_dir().join(format!("tremble-scaling-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.csv");
    let recs = run_scaling(&[BenchConfig::new(2, 0, 0.0), BenchConfig::new(2, 1, 0.0)], Some(&path)).unwrap();
    assert_eq!(recs.len(), 2);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "N,K,p,states,transitions,model_build_ms,synthesis_ms,value");
    assert_eq!(text.lines().count(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}
