"""Smoke test for the compiled `tremble` module.

Build and install it first, for example:

    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/tremble-*.whl
"""

import json
import math

import tremble

PROPS = ["goal"]

DOMAIN = {
    "kind": "det",
    "props": PROPS,
    "states": [
        {"id": 0, "name": "start", "label": []},
        {"id": 1, "name": "done", "label": ["goal"]},
        {"id": 2, "name": "stuck", "label": []},
    ],
    "actions": [{"id": 0, "name": "go"}, {"id": 1, "name": "stay"}],
    "initial": 0,
    "transitions": [
        {"from": s, "action": a, "to": [t]}
        for s, a, t in [(0, 0, 1), (0, 1, 2), (1, 0, 1), (1, 1, 1), (2, 0, 2), (2, 1, 2)]
    ],
}

ERRORS = {
    "kind": "explicit",
    "rows": [
        row
        for s in range(3)
        for row in (
            {"state": s, "intended": 0, "dist": [{"action": 0, "p": 0.9}, {"action": 1, "p": 0.1}]},
            {"state": s, "intended": 1, "dist": [{"action": 1, "p": 1.0}]},
        )
    ],
}


def check_formulas():
    assert tremble.holds("F goal", PROPS, [[], ["goal"]])
    assert not tremble.holds("G goal", PROPS, [[], ["goal"]])
    aut = tremble.Automaton("F goal", PROPS)
    assert aut.accepts([[], [], ["goal"]])
    assert not aut.accepts([[]])
    assert aut.minimal_states() == 2
    assert aut.to_dot().startswith("digraph")
    assert tremble.canonical("goal & goal", PROPS) == "goal"


def check_solve_and_simulate():
    problem = tremble.Problem(json.dumps(DOMAIN), json.dumps(ERRORS), "F goal")
    strategy = problem.solve()
    assert math.isclose(strategy.value, 0.9), strategy.value
    again = tremble.Strategy.from_json(strategy.to_json())
    assert again.value == strategy.value and len(again) == len(strategy)

    a = problem.simulate(strategy, nature="random", seed=7)
    b = problem.simulate(strategy, nature="random", seed=7)
    assert a["log"] == b["log"] and a["steps"] >= 1

    est, se = problem.monte_carlo(strategy, 10_000, seed=1)
    assert abs(est - 0.9) <= 3 * se, (est, se)


def check_coassembly():
    assert len(tremble.prune_states(2)) == 7
    rec = tremble.measure(2, 0, 0.0)
    assert rec["states"] == 7 and rec["value"] == 1.0
    problem = tremble.Problem.coassembly(3, 1, 0.05)
    strategy = problem.solve()
    assert 0.99 < strategy.value <= 1.0
    run = problem.simulate(strategy, seed=3)
    assert run["stop"] in {"goal", "left_relevant", "truncated"}


def main():
    check_formulas()
    check_solve_and_simulate()
    check_coassembly()
    try:
        tremble.Problem("{}", "{}", "F goal")
    except ValueError:
        pass
    else:
        raise AssertionError("bad domain accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
