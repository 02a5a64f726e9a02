"""Parameter study for the discrete estimate validator defaults.

Precomputes C(tau, xi') tables for the second-order demo scenario in
admissible and inadmissible weight configurations over candidate domain
lengths and curvatures; results feed the choice of shipped defaults.
"""

import itertools
import json
import sys
import time

import numpy as np

sys.path.insert(0, "src")

from carleman.symbols import (
    CoefficientField,
    OperatorSpec,
    Scenario,
    TransmissionOpSpec,
    TransmissionPair,
    WeightSide,
    WeightSpec,
)
from carleman.estimator import ModelProblem, carleman_ratio

DIM = 2
CF = CoefficientField.constant


def curv_weight(g, q):
    return WeightSide(
        value=lambda x: g * x[-1] + q * x[-1] ** 2,
        grad=lambda x: np.array([0.0] * (len(x) - 1) + [g + 2 * q * x[-1]]),
        hess=lambda x: np.diag([0.0] * (len(x) - 1) + [2 * q]),
    )


def diffusion2d(g1, g2, q):
    t1 = TransmissionPair(
        TransmissionOpSpec(DIM, "left", 1, 0, {(0, 0): CF(-1.0)}),
        TransmissionOpSpec(DIM, "right", 1, 0, {(0, 0): CF(1.0)}),
    )
    t2 = TransmissionPair(
        TransmissionOpSpec(DIM, "left", 2, 1, {(0, 1): CF(-1.0)}),
        TransmissionOpSpec(DIM, "right", 2, 1, {(0, 1): CF(1.0)}),
    )
    lap = OperatorSpec(DIM, 2, {(2, 0): CF(1.0), (0, 2): CF(1.0)})
    return Scenario(
        dim=DIM, left=lap, right=lap, transmission=(t1, t2),
        weight=WeightSpec(left=curv_weight(g1, q), right=curv_weight(g2, q)),
        x0=(0.0, 0.0),
    )


def main():
    taus = list(np.geomspace(5.0, 100.0, 20))
    xis = list(np.geomspace(0.5, 130.0, 26))
    out = {"taus": taus, "xis": xis, "cases": []}
    t0 = time.time()
    for L, q in itertools.product((1.0, 1.5), (0.15,)):
        for label, gg in (("good", (0.5, 1.0)), ("bad", (1.0, 0.5))):
            scn = diffusion2d(*gg, q)
            mp = ModelProblem(scn=scn, xi=(1.0,), length=L, n_grid=400)
            tab = []
            for tau in taus:
                row = []
                for xi in xis:
                    try:
                        row.append(carleman_ratio(mp.with_xi((xi,)), tau))
                    except Exception:
                        row.append(float("nan"))
                tab.append(row)
            out["cases"].append({"L": L, "q": q, "label": label, "C": tab})
            print(f"done L={L} q={q} {label} ({time.time()-t0:.0f}s)", flush=True)
    with open("/tmp/tune_estimator.json", "w") as f:
        json.dump(out, f)


if __name__ == "__main__":
    main()
