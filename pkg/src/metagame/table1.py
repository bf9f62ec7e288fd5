"""Numerical reproduction of the closed forms for ``f(x) = x0 + x0 * x1**2``.

All closed forms are expressed through ``x0`` and the interaction term
``I = x0 * x1**2`` (zero baseline).
"""

from __future__ import annotations

import time

import numpy as np

from .coalition import MaskedModel, mobius_transform
from .first_order import IntegratedGradients
from .interactions import integrated_hessians, serial_shapley, sop_pairwise, stii_pairwise
from .meta import meta_attribution_exact
from .zoo import table1_model

EXACT_TOL = 1e-6
QUADRATURE_TOL = 1e-3


def closed_forms(x0: float, x1: float) -> dict[str, np.ndarray]:
    I = x0 * x1 ** 2
    return {
        "serial_sv": np.array([x0 + I / 4, I / 4, I / 4, I / 4]),
        "ih": np.array([x0 + I / 9, 2 * I / 9, 2 * I / 9, 4 * I / 9]),
        "mobius": np.array([x0, 0.0, I]),
        "stii": np.array([x0, 0.0, I]),
        "sop": np.array([x0, 0.0, I / 3, 2 * I / 3, I]),
        "meta_gxi": np.array([x0, I, 2 * I, 0.0]),
        "meta_ig": np.array([x0, I / 3, 2 * I / 3, 0.0]),
        "meta_sv": np.array([x0, I / 2, I / 2, 0.0]),
    }


# (row name, layout of the compared vector, tolerance)
ROWS = [
    ("serial_sv", "psi00, psi01, psi10, psi11", EXACT_TOL),
    ("ih", "psi00, psi01, psi10, psi11", QUADRATURE_TOL),
    ("mobius", "m0, m1, m01", EXACT_TOL),
    ("stii", "single0, single1, pair01", EXACT_TOL),
    ("sop", "single0, single1, dir(1->0), dir(0->1), pair01", QUADRATURE_TOL),
    ("meta_gxi", "[0,0], [0,1], [1,0], [1,1]", EXACT_TOL),
    ("meta_ig", "[0,0], [0,1], [1,0], [1,1]", QUADRATURE_TOL),
    ("meta_sv", "[0,0], [0,1], [1,0], [1,1]", EXACT_TOL),
]


def compute(x0: float, x1: float, steps: int = 1024) -> dict[str, np.ndarray]:
    masked = MaskedModel(table1_model(), [x0, x1], [0.0, 0.0])
    exp = mobius_transform(masked)
    stii = stii_pairwise(masked)
    sop = sop_pairwise(masked, steps)
    return {
        "serial_sv": serial_shapley(masked).entries.ravel(),
        "ih": integrated_hessians(masked, steps).entries.ravel(),
        "mobius": np.array([exp[[0]], exp[[1]], exp[[0, 1]]]),
        "stii": np.array([stii.singles[0], stii.singles[1], stii.pairs[0, 1]]),
        "sop": np.array([sop.singles[0], sop.singles[1], sop.directional[0, 1],
                         sop.directional[1, 0], sop.pairs[0, 1]]),
        "meta_gxi": meta_attribution_exact("gxi", masked).entries.ravel(),
        "meta_ig": meta_attribution_exact(IntegratedGradients(steps), masked).entries.ravel(),
        "meta_sv": meta_attribution_exact("sv", masked).entries.ravel(),
    }


def run(x0: float = 2.0, x1: float = 3.0, steps: int = 1024) -> dict:
    """Compare every row against its closed form; ``passed`` is false if any tolerance is exceeded."""
    start = time.perf_counter()
    computed = compute(x0, x1, steps)
    analytic = closed_forms(x0, x1)
    rows = []
    for name, layout, tol in ROWS:
        dev = float(np.max(np.abs(computed[name] - analytic[name])))
        rows.append({
            "method": name,
            "layout": layout,
            "computed": computed[name].tolist(),
            "analytic": analytic[name].tolist(),
            "max_deviation": dev,
            "tolerance": tol,
            "passed": dev <= tol,
        })
    return {
        "x": [x0, x1],
        "baseline": [0.0, 0.0],
        "interaction": x0 * x1 ** 2,
        "steps": steps,
        "rows": rows,
        "passed": all(r["passed"] for r in rows),
        "seconds": time.perf_counter() - start,
    }
