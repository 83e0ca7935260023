"""Smoke test for the bosonstar extension module."""

import json
import math

import bosonstar


def main():
    grid = bosonstar.Grid(1, 512, 64.0)
    psi = bosonstar.Field.initial(grid, json.dumps({"type": "modulated", "width": 2.0, "wave_vector": [0.5], "norm": 0.5}))
    assert len(psi.values()) == len(grid) == 512
    assert abs(bosonstar.mass(psi) - 0.25) < 1e-12

    moved = psi.free_propagate(10.0)
    assert abs(moved.norm() - psi.norm()) < 1e-12
    assert psi.distance(moved.free_propagate(-10.0)) < 1e-12

    kernel = bosonstar.Kernel(grid, json.dumps({"type": "yukawa", "kappa": -0.2, "mu": 1.0}))
    final, records = bosonstar.evolve(psi, kernel, 0.01, 2.0, stride=50)
    first, last = dict(records[0][1]), dict(records[-1][1])
    assert abs(last["mass"] - first["mass"]) < 1e-12
    assert abs(last["energy"] - first["energy"]) < 1e-5
    assert math.isclose(bosonstar.energy(final, kernel), last["energy"], rel_tol=1e-12)

    weak = bosonstar.Kernel(grid, json.dumps({"type": "yukawa", "kappa": 0.05, "mu": 1.0}))
    err = bosonstar.roundtrip(psi, weak, 10.0, 0.04)
    assert err < 5e-3, err

    config = {
        "experiment": {"name": "picard_contraction"},
        "grid": {"dim": 1, "n": 128, "length": 32.0},
        "potential": {"type": "gaussian", "kappa": 0.01, "sigma": 1.0},
        "initial": {"type": "gaussian", "width": 1.0, "norm": 0.5},
        "solver": {"dt": 0.02, "t_final": 0.2, "integrator": "picard", "picard_tol": 1e-12},
    }
    report = json.loads(bosonstar.run_experiment(json.dumps(config)))
    assert report["passed"], report

    try:
        bosonstar.Grid(1, 0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid grid accepted")

    print(f"ok: roundtrip error {err:.3e}, picard checks {[c['name'] for c in report['checks']]}")


if __name__ == "__main__":
    main()
