"""Acceptance criteria 1-8, one test each; every test prints a single PASS/FAIL line."""

import time

import numpy as np

from conftest import permutation_shapley, random_masked
from metagame import (
    Budget,
    ExternalAttributionTable,
    IntegratedGradients,
    enumerate_game,
    estimate_shapley,
    fsii_via_mobius,
    get_method,
    integrated_hessians,
    meta_attribution_exact,
    mobius_evaluate,
    mobius_transform,
    random_mobius_game,
    serial_shapley,
    shapley_value_exact,
    sop_pairwise,
    stii_pairwise,
    symmetrize,
    two_shapley_via_mobius,
)
from metagame.cli import approx_bench
from metagame.coalition import MaskedModel
from metagame.interactions import shapley_via_mobius
from metagame.zoo import random_sparse_polynomial

EXACT_TOL = 1e-9
QUAD_TOL = 1e-3
STEPS = 256
SWEEP = [(seed, 3 + seed % 8) for seed in range(50)]


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})")
    assert ok, detail


def _max(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def test_criterion_1_table1_reproduction(capsys):
    from metagame.table1 import run

    start = time.perf_counter()
    result = run(2.0, 3.0, steps=1024)
    elapsed = time.perf_counter() - start
    expected = {
        "serial_sv": [6.5, 4.5, 4.5, 4.5],
        "ih": [4, 4, 4, 8],
        "mobius": [2, 0, 18],
        "stii": [2, 0, 18],
        "sop": [2, 0, 6, 12, 18],
        "meta_gxi": [2, 18, 36, 0],
        "meta_ig": [2, 6, 12, 0],
        "meta_sv": [2, 9, 9, 0],
    }
    quadrature = {"ih", "sop", "meta_ig"}
    worst = {}
    ok = elapsed < 1.0 and result["passed"]
    for row in result["rows"]:
        dev = _max(np.array(row["computed"]) - expected[row["method"]])
        worst[row["method"]] = dev
        ok &= dev <= (1e-3 if row["method"] in quadrature else 1e-6)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.3f} s"
    report(capsys, 1, "Table 1 reproduction at x=(2,3)", ok, detail)


def test_criterion_2_hierarchical_efficiency_of_interactions(capsys):
    start = time.perf_counter()
    worst_set = worst_serial = worst_ih = worst_sop = 0.0
    for seed, d in SWEEP:
        masked = random_masked(seed, d)
        phi = shapley_value_exact(masked).values
        exp = mobius_transform(masked)
        for index in (stii_pairwise(masked), fsii_via_mobius(exp), two_shapley_via_mobius(exp)):
            worst_set = max(worst_set, _max(index.decomposition() - phi))
        serial = serial_shapley(masked)
        worst_serial = max(worst_serial, _max(serial.row_sums() - serial.first_order), _max(serial.first_order - phi))
        ig = IntegratedGradients(STEPS).attribute(masked).values
        ih = integrated_hessians(masked, STEPS)
        worst_ih = max(worst_ih, _max(ih.row_sums() - ig))
        sop = sop_pairwise(masked, STEPS)
        worst_sop = max(worst_sop, _max(sop.singles + sop.directional.sum(axis=1) - ig))
    elapsed = time.perf_counter() - start
    ok = (worst_set < EXACT_TOL and worst_serial < EXACT_TOL and worst_ih < QUAD_TOL and worst_sop < QUAD_TOL
          and elapsed < 30)
    detail = (f"STII/FSII/2-SV {worst_set:.1e}, serial SV {worst_serial:.1e}, IH {worst_ih:.1e}, "
              f"SOP {worst_sop:.1e}; {len(SWEEP)} instances, {elapsed:.1f} s")
    report(capsys, 2, "interaction indices decompose first-order attributions", ok, detail)


def test_criterion_3_directional_variants(capsys):
    start = time.perf_counter()
    worst_sv = worst_ig = 0.0
    for seed, d in SWEEP:
        masked = random_masked(seed, d)
        meta_sv = meta_attribution_exact("sv", masked)
        stii = stii_pairwise(masked)
        sym = symmetrize(meta_sv)
        worst_sv = max(worst_sv, _max(sym.pairs - stii.pairs), _max(np.diag(meta_sv.entries) - stii.singles))
        meta_ig = meta_attribution_exact(IntegratedGradients(STEPS), masked)
        sop = sop_pairwise(masked, STEPS)
        sym = symmetrize(meta_ig)
        worst_ig = max(worst_ig, _max(sym.pairs - sop.pairs), _max(np.diag(meta_ig.entries) - sop.singles))
    elapsed = time.perf_counter() - start
    ok = worst_sv < EXACT_TOL and worst_ig < QUAD_TOL and elapsed < 30
    detail = f"Meta-SV vs STII {worst_sv:.1e}, Meta-IG vs SOP {worst_ig:.1e}; {elapsed:.1f} s"
    report(capsys, 3, "symmetrized meta-attributions equal STII and SOP", ok, detail)


def test_criterion_4_meta_hierarchical_efficiency(capsys):
    worst = {"SV": 0.0, "GxI": 0.0, "IG": 0.0, "external": 0.0}
    for seed, d in SWEEP:
        masked = random_masked(seed, d)
        full = (1 << d) - 1
        for name, method in (("SV", "sv"), ("GxI", "gxi"), ("IG", IntegratedGradients(STEPS))):
            dm = meta_attribution_exact(method, masked)
            base = get_method(method)
            phi = np.array([base.restricted(masked, full, i) for i in range(d)])
            worst[name] = max(worst[name], _max(dm.entries.sum(axis=1) - phi))
        # an arbitrary externally supplied method: random restricted attributions
        rng = np.random.default_rng(seed)
        tables = {i: rng.normal(size=1 << (d - 1)) for i in range(d)}
        dm = meta_attribution_exact(None, ExternalAttributionTable(d, tables))
        phi = np.array([tables[i][-1] for i in range(d)])
        worst["external"] = max(worst["external"], _max(dm.entries.sum(axis=1) - phi))
    ok = worst["SV"] < EXACT_TOL and worst["GxI"] < EXACT_TOL and worst["external"] < EXACT_TOL
    ok &= worst["IG"] < QUAD_TOL
    report(capsys, 4, "meta-attribution rows sum to the base attribution", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_5_separation_witness(capsys, table1_masked):
    serial = serial_shapley(table1_masked).entries[1, 1]
    exp = mobius_transform(table1_masked)
    effects = {
        "Meta-SV": meta_attribution_exact("sv", table1_masked).entries[1, 1],
        "STII": stii_pairwise(table1_masked).singles[1],
        "FSII": fsii_via_mobius(exp).singles[1],
        "2-SV": two_shapley_via_mobius(exp).singles[1],
        "SOP": sop_pairwise(table1_masked, 1024).singles[1],
    }
    ok = abs(serial - 4.5) < 1e-9 and all(abs(v) < 1e-9 for v in effects.values())
    detail = f"serial SV {serial:g}; " + ", ".join(f"{k} {v:g}" for k, v in effects.items())
    report(capsys, 5, "pure individual effect of feature 2 separated from the interaction", ok, detail)


def test_criterion_6_shapley_bruteforce(capsys):
    worst = 0.0
    for seed in range(20):
        d = 1 + seed % 8
        game = random_mobius_game(d, 0.5, seed)
        worst = max(worst, _max(shapley_value_exact(game).values - permutation_shapley(enumerate_game(game))))
    report(capsys, 6, "exact Shapley equals the all-permutations average", worst < EXACT_TOL,
           f"20 games d<=8, worst {worst:.1e}")


def test_criterion_7_mobius_roundtrip_and_shapley_form(capsys):
    worst_rt = worst_sv = 0.0
    for seed in range(50):
        d = 1 + seed % 10
        game = random_mobius_game(d, 0.3, 1000 + seed) if seed % 2 else random_masked(seed, d)
        table = enumerate_game(game)
        exp = mobius_transform(game)
        worst_rt = max(worst_rt, _max([mobius_evaluate(exp, S) - table[S] for S in range(1 << d)]))
        worst_sv = max(worst_sv, _max(shapley_via_mobius(exp) - shapley_value_exact(game).values))
    ok = worst_rt < EXACT_TOL and worst_sv < EXACT_TOL
    report(capsys, 7, "Möbius reconstruction and Shapley Möbius form", ok,
           f"roundtrip {worst_rt:.1e}, Shapley form {worst_sv:.1e}")


def _inversions(values):
    return sum(b > a for a, b in zip(values, values[1:]))


def test_criterion_8_approximator_convergence(capsys):
    start = time.perf_counter()
    d = 12
    game = MaskedModel(random_sparse_polynomial(d, 3, 24, 0), np.ones(d), np.zeros(d))
    budgets = [2 ** k for k in range(7, 14)]
    rows = approx_bench(game, budgets, ("mc", "regression"), reps=10, seed=0)
    mse = {name: [r["mse"] for r in rows if r["estimator"] == name] for name in ("mc", "regression")}
    exhaustive = [r["mse"] for r in rows if r["estimator"] == "regression" and r["budget"] >= 1 << d]

    pair_ok = True
    pair_detail = []
    for name in ("mc", "regression"):
        plain = np.mean([estimate_shapley(game, Budget(1024, s), name).stderr for s in range(50)])
        paired = np.mean([estimate_shapley(game, Budget(1024, s, True), name).stderr for s in range(50)])
        pair_ok &= paired <= plain
        pair_detail.append(f"{name} stderr paired {paired:.3g} <= {plain:.3g}")
    elapsed = time.perf_counter() - start
    ok = (_inversions(mse["mc"]) <= 1 and _inversions(mse["regression"]) <= 1 and max(exhaustive) < 1e-12
          and pair_ok and elapsed < 300)
    detail = (f"MC MSE {mse['mc'][0]:.2e}->{mse['mc'][-1]:.2e} ({_inversions(mse['mc'])} inversions), "
              f"regression {mse['regression'][0]:.2e}->{mse['regression'][-1]:.2e} "
              f"({_inversions(mse['regression'])} inversions), exhaustive {max(exhaustive):.1e}; "
              + "; ".join(pair_detail) + f"; {elapsed:.1f} s")
    report(capsys, 8, "estimators converge with budget, pairing helps", ok, detail)
