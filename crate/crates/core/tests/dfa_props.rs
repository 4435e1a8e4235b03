mod common;

use std::sync::Arc;

use common::{all_traces, arb_formula, arb_trace, props};
use proptest::prelude::*;
use tremble_core::dfa::{compile, eps_accepting, materialize, minimize, progress};
use tremble_core::ltlf::{evaluate, parse};

const NAMES: &[&str] = &["a", "b", "c"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn automaton_matches_semantics(f in arb_formula(NAMES, 6), t in arb_trace(NAMES, 6)) {
        let d = compile(&f, &props(NAMES));
        prop_assert_eq!(d.accepts(&t).unwrap(), evaluate(&f, &t).unwrap());
    }

    #[test]
    fn progression_reads_one_letter(f in arb_formula(NAMES, 5), t in arb_trace(NAMES, 5)) {
        let rest = progress(&f, &t[0]);
        let whole = evaluate(&f, &t).unwrap();
        if t.len() == 1 {
            prop_assert_eq!(eps_accepting(&rest), whole);
        } else {
            prop_assert_eq!(evaluate(&rest, &t[1..].to_vec()).unwrap(), whole);
        }
    }

    #[test]
    fn explicit_and_minimal_automata_agree(f in arb_formula(NAMES, 4)) {
        let ps = props(NAMES);
        let lazy = compile(&f, &ps);
        let full = materialize(&lazy).unwrap();
        let min = minimize(&full);
        prop_assert!(min.num_states() <= full.num_states());
        prop_assert_eq!(minimize(&min).num_states(), min.num_states());
        for t in all_traces(&ps, 3) {
            let expect = evaluate(&f, &t).unwrap();
            prop_assert_eq!(full.accepts(&t).unwrap(), expect);
            prop_assert_eq!(min.accepts(&t).unwrap(), expect);
        }
    }
}

#[test]
fn small_examples() {
    let ps = props(&["a"]);
    let d = compile(&parse("F a", &ps).unwrap(), &ps);
    let full = materialize(&d).unwrap();
    assert_eq!(full.num_states(), 2);
    let dot = full.to_dot();
    assert!(dot.starts_with("digraph"));
}

#[test]
fn concurrent_stepping_agrees() {
    let ps = props(NAMES);
    let f = parse("(a U b) & G (c -> X a)", &ps).unwrap();
    let d = Arc::new(compile(&f, &ps));
    let traces = all_traces(&ps, 3);
    std::thread::scope(|s| {
        for chunk in traces.chunks(traces.len() / 4 + 1) {
            let d = d.clone();
            let f = &f;
            s.spawn(move || {
                for t in chunk {
                    assert_eq!(d.accepts(t).unwrap(), evaluate(f, t).unwrap());
                }
            });
        }
    });
}
