"""Smoke test for the rsjd_py extension.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`,
then run `python python/smoke_test.py` from the repository root.
"""
import math
from pathlib import Path

import rsjd_py

ROOT = Path(__file__).resolve().parent.parent

BROWNIAN = """
[dimensions]
d = 1
m = 1

[[regimes]]
diffusion = { matrix = [[0.5]] }
"""

RUN = """
region = { shape = "box", lo = [0.0], hi = [1.0] }

[sampler]
step = 1e-3
seed = 7
paths = 4000

[boundary]
uniform = { family = "indicator", set = { shape = "box", lo = [1.0], hi = [1e300] } }

[harmonic]
queries = [{ x = [0.25], regime = 1 }, { x = [0.5], regime = 1 }]
"""


def main():
    model = rsjd_py.Model(BROWNIAN)
    assert (model.dim, model.regimes) == (1, 1)
    report = model.validate()
    assert report["usable"], report

    two = rsjd_py.Model.from_file(str(ROOT / "configs" / "two_regime.toml"))
    assert two.regimes == 2
    assert math.isclose(two.rate([0.3], 1, 2) + two.rate([0.3], 1, 1), 0.0, abs_tol=1e-12)

    sim = rsjd_py.simulate(model, paths=3, horizon=0.1, seed=1)
    assert sim["exit_code"] == 0
    assert len(sim["outputs"]["trajectories"]) == 3

    res = rsjd_py.harmonic(model, RUN)
    rows = res["outputs"]["harmonic"]
    for row in rows:
        # u(x) = x for the right-face indicator
        z = abs(row["value"] - row["x"][0]) / row["stderr"]
        assert z < 4, row

    # workers never change a number
    again = rsjd_py.harmonic(model, RUN, workers=2)
    assert again["outputs"] == res["outputs"]

    try:
        rsjd_py.Model("[dimensions]\nd = 0\n")
    except ValueError:
        pass
    else:
        raise AssertionError("invalid model accepted")

    print("smoke test ok:", model, [round(r["value"], 4) for r in rows])


if __name__ == "__main__":
    main()
