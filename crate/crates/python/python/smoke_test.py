"""Smoke test for the pyevrp extension module."""

import json
import os
import tempfile

import pyevrp


def main():
    inst = pyevrp.Instance.generate(seed=3, preset="instance2")
    assert inst.validate() == [], inst.validate()
    assert inst == pyevrp.Instance.from_json(inst.to_json())
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "inst.json")
        inst.save(path)
        assert pyevrp.Instance.load(path) == inst
        assert json.load(open(path))["params"]
    assert pyevrp.Instance.generate(seed=3, preset="instance2") == inst
    assert inst.paths()

    fast = pyevrp.min_time(inst)
    cheap = pyevrp.min_cost(inst)
    front = pyevrp.epsilon_constraint(inst)
    assert abs(front[0].time_h - fast.time_h) <= 1e-9
    assert abs(front[-1].cost - cheap.cost) <= 1e-9
    assert all(a.time_h < b.time_h and a.cost > b.cost for a, b in zip(front, front[1:]))
    for p in front:
        t, c = pyevrp.evaluate(inst, p.solution)
        assert (t, c) == (p.time_h, p.cost)
        feasible, violations = pyevrp.check_feasible(inst, p.solution)
        assert feasible and violations == []

    bad = pyevrp.RouteSolution(fast.solution.path)
    feasible, violations = pyevrp.check_feasible(inst, bad)
    if not feasible:
        assert violations
        try:
            pyevrp.evaluate(inst, bad)
        except pyevrp.InfeasibleError:
            pass
        else:
            raise AssertionError("evaluate accepted an infeasible plan")

    pts = [(p.time_h, p.cost) for p in front]
    assert pyevrp.filter_nondominated(pts + [(1e9, 1e9)]) == pts
    assert pyevrp.dominates((1.0, 1.0), (2.0, 1.0))
    outcome = pyevrp.run_ga(inst, population=50, epochs=30, seed=3, weights=(1.0, 1.0))
    assert len(outcome.history) == 31
    best = [e.best_fitness for e in outcome.history]
    assert all(a >= b for a, b in zip(best, best[1:]))
    pso = pyevrp.run_pso(inst, population=50, epochs=30, seed=3)
    assert all(e.exploration_pct + e.exploitation_pct == 100.0 for e in pso.history)
    if outcome.feasible:
        cmp = pyevrp.front_compare(pts, [(outcome.time_h, outcome.cost)])
        assert cmp[3] and cmp[4][0] in ("dominated", "dominating", "nondominated")

    tiny = pyevrp.Instance.generate(seed=1, preset="instance1")
    try:
        oracle = pyevrp.grid_oracle(tiny, grid_n=10)
        assert all(pyevrp.check_feasible(tiny, p.solution)[0] for p in oracle)
    except pyevrp.InfeasibleError:
        pass
    try:
        pyevrp.Instance.generate(seed=1, levels=0, max_per_level=3, p_edge=0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("zero levels accepted")
    print(f"ok: {len(front)} front points, GA fitness {outcome.fitness:.4f}, PSO fitness {pso.fitness:.4f}")


if __name__ == "__main__":
    main()
