"""``metagame`` command line: compute, table1, verify, approx-bench, export.

Exit codes: 0 success, 1 failed check (``table1``/``verify``), 2 bad input,
3 game too large for exact enumeration, 4 estimation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .approx import Budget, estimate_shapley, make_rng, meta_attribution_approx
from .coalition import Game, MaskedModel, MobiusExpansion, MobiusGame, check_capacity, mobius_transform
from .exceptions import CapacityError, EstimationError, GameFileError, MetagameError
from .first_order import DEFAULT_STEPS, get_method, shapley_value_exact
from .interactions import (
    fsii_via_mobius,
    integrated_hessians,
    serial_shapley,
    sop_pairwise,
    stii_pairwise,
    two_shapley_via_mobius,
)
from .io import game_to_document, read_game, result_to_csv, result_to_document, write_game
from .meta import ExternalAttributionTable, attribution_table, meta_attribution_exact
from .zoo import additive_model, product_model, random_mobius_game, random_sparse_polynomial, table1_model

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_CAPACITY, EXIT_ESTIMATION = 0, 1, 2, 3, 4

METHODS = ("sv", "gxi", "ig", "serial-sv", "ih", "stii", "fsii", "2sv", "sop",
           "meta-sv", "meta-ig", "meta-gxi", "meta-ext")
APPROXIMABLE = ("sv", "meta-sv", "meta-ig", "meta-gxi", "meta-ext")


class UsageError(MetagameError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_model_spec(spec: str) -> tuple[str, dict]:
    """``name`` or ``name:key=value,...``; returns the name and integer/float parameters."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--model {spec!r}: expected key=value, got {item!r}")
        try:
            params[key.strip()] = int(value) if value.strip().lstrip("-").isdigit() else float(value)
        except ValueError:
            raise UsageError(f"--model {spec!r}: bad value for {key!r}") from None
    return name, params


def build_model(spec: str):
    """Return ``(model_or_game, resolved_params)``; models need an input point, games do not."""
    name, p = parse_model_spec(spec)
    known = {
        "table1": set(),
        "poly": {"d", "order", "terms", "seed"},
        "mobius": {"d", "sparsity", "seed"},
        "additive": {"d", "seed"},
        "product": {"d"},
    }
    if name not in known:
        raise UsageError(f"--model: unknown model {name!r}; choose from {sorted(known)}")
    extra = set(p) - known[name]
    if extra:
        raise UsageError(f"--model {name}: unknown parameters {sorted(extra)}")
    if name == "table1":
        return table1_model(), {"name": name}
    if "d" not in p:
        raise UsageError(f"--model {name}: parameter d is required")
    d = int(p["d"])
    if name == "poly":
        resolved = {"name": name, "d": d, "order": int(p.get("order", min(3, d))),
                    "terms": int(p.get("terms", 2 * d)), "seed": int(p.get("seed", 0))}
        model = random_sparse_polynomial(d, resolved["order"], resolved["terms"], resolved["seed"])
        return model, resolved
    if name == "mobius":
        resolved = {"name": name, "d": d, "sparsity": float(p.get("sparsity", 0.1)), "seed": int(p.get("seed", 0))}
        return random_mobius_game(d, resolved["sparsity"], resolved["seed"]), resolved
    if name == "additive":
        resolved = {"name": name, "d": d, "seed": int(p.get("seed", 0))}
        coefs = np.random.default_rng(resolved["seed"]).uniform(-1, 1, size=d)
        return additive_model(coefs), resolved
    return product_model(d), {"name": name, "d": d}


def resolve_source(args) -> tuple[object, dict]:
    """Build the game (or external table) from ``--model``/``--game`` and record what was used."""
    if (args.model is None) == (args.game is None):
        raise UsageError("give exactly one of --model or --game")
    if args.game is not None:
        obj = read_game(args.game)
        info = {"game": str(args.game)}
        if isinstance(obj, MobiusExpansion):
            obj = MobiusGame(obj)
        if isinstance(obj, MaskedModel):
            info.update(x=obj.x.tolist(), baseline=obj.baseline.tolist())
        return obj, info

    model, resolved = build_model(args.model)
    info = {"model": resolved}
    if isinstance(model, Game):
        if args.x is not None or args.baseline is not None:
            raise UsageError(f"--model {resolved['name']} is a game; --x and --baseline do not apply")
        return model, info
    d = model.d
    if args.x is None:
        x = [2.0, 3.0] if resolved["name"] == "table1" else [1.0] * d
    else:
        x = args.x
    baseline = args.baseline if args.baseline is not None else [0.0] * d
    if len(x) != d or len(baseline) != d:
        raise UsageError(f"--x and --baseline need {d} values")
    info.update(x=list(map(float, x)), baseline=list(map(float, baseline)))
    return MaskedModel(model, x, baseline), info


def _require_masked(source, method):
    if not isinstance(source, MaskedModel):
        raise UsageError(f"--method {method} needs a differentiable model (--model or a game file with monomials)")
    return source


def _require_game(source, method):
    if isinstance(source, ExternalAttributionTable):
        raise UsageError(f"--method {method} needs a game; attribution tables only support meta-ext")
    return source


def run_compute(args) -> dict:
    source, info = resolve_source(args)
    method = args.method
    if args.approx and method not in APPROXIMABLE:
        raise UsageError(f"--approx supports only {', '.join(APPROXIMABLE)}")
    budget = Budget(args.budget, args.seed, args.pairing) if args.approx else None
    steps = args.steps

    if method == "meta-ext":
        if not isinstance(source, ExternalAttributionTable):
            raise UsageError("--method meta-ext needs a --game file of kind attribution_table")
        if budget:
            return meta_attribution_approx(None, source, budget, args.targets, args.approx, args.threads), info
        return meta_attribution_exact(None, source, args.targets, args.threads), info
    game = _require_game(source, method)

    if method.startswith("meta-"):
        base = get_method(method[5:], steps)
        if base.name != "SV":
            _require_masked(game, method)
        if budget:
            return meta_attribution_approx(base, game, budget, args.targets, args.approx, args.threads), info
        return meta_attribution_exact(base, game, args.targets, args.threads), info
    if method == "sv":
        if budget:
            return estimate_shapley(game, budget, args.approx, make_rng(args.seed)), info
        return shapley_value_exact(game), info
    if method in ("gxi", "ig"):
        return get_method(method, steps).attribute(_require_masked(game, method)), info
    if method == "serial-sv":
        return serial_shapley(game), info
    if method == "ih":
        return integrated_hessians(_require_masked(game, method), steps), info
    if method == "stii":
        return stii_pairwise(game), info
    if method == "sop":
        return sop_pairwise(_require_masked(game, method), steps), info
    exp = mobius_transform(game)
    return (fsii_via_mobius(exp) if method == "fsii" else two_shapley_via_mobius(exp)), info


def _config(args, **extra) -> dict:
    cfg = {"command": args.command, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "func", "inject_fault") or key in extra:
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    cfg.update(extra)
    return cfg


def _emit(args, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _pretty_matrix(M) -> str:
    return "\n".join("  ".join(f"{v:>12.6g}" for v in row) for row in np.atleast_2d(M))


def pretty_result(doc: dict) -> str:
    lines = [f"{doc.get('kind')}  method={doc.get('method', '')}"]
    if "entries" in doc:
        rows = doc.get("rows") or range(len(doc["entries"]))
        lines.append("entries (row = target, column = source):")
        lines += [f"{i:>4}:" + _pretty_matrix(doc["entries"][i]) for i in rows]
        lines.append("first order: " + "  ".join(f"{doc['first_order'][i]:.6g}" for i in rows))
        lines.append("max residual: " + f"{max(doc['residuals'], default=0.0):.3g}")
    if "singles" in doc:
        lines += ["singles: " + "  ".join(f"{v:.6g}" for v in doc["singles"]), "pairs:", _pretty_matrix(doc["pairs"])]
    if doc.get("kind") in ("attribution_vector", "estimate"):
        lines.append("values: " + "  ".join(f"{v:.6g}" for v in doc["values"]))
        if doc.get("stderr") is not None:
            lines.append("stderr: " + "  ".join(f"{v:.3g}" for v in doc["stderr"]))
    return "\n".join(lines) + "\n"


def cmd_compute(args) -> int:
    result, info = run_compute(args)
    config = _config(args, **info)
    if args.format == "csv":
        _emit(args, "# config: " + json.dumps(config, sort_keys=True) + "\n" + result_to_csv(result))
        return EXIT_OK
    doc = result_to_document(result)
    if args.pretty:
        _emit(args, pretty_result(doc))
    else:
        _emit(args, json.dumps({"config": config, "result": doc}) + "\n")
    return EXIT_OK


def cmd_table1(args) -> int:
    from .table1 import run

    x = args.x if args.x is not None else [2.0, 3.0]
    if len(x) != 2:
        raise UsageError("--x needs two values for the table1 model")
    report = run(x[0], x[1], args.steps)
    if args.pretty:
        lines = [f"x = {report['x']}, I = {report['interaction']:g}, steps = {report['steps']}"]
        for r in report["rows"]:
            flag = "ok " if r["passed"] else "BAD"
            lines.append(f"{flag} {r['method']:<10} dev={r['max_deviation']:.2e} tol={r['tolerance']:.0e}  [{r['layout']}]")
            lines.append("      computed " + "  ".join(f"{v:.6g}" for v in r["computed"]))
            lines.append("      analytic " + "  ".join(f"{v:.6g}" for v in r["analytic"]))
        lines.append(f"{'PASS' if report['passed'] else 'FAIL'} in {report['seconds']:.3f} s")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, json.dumps({"config": _config(args, x=list(x)), "result": report}) + "\n")
    return EXIT_OK if report["passed"] else EXIT_CHECK


def cmd_verify(args) -> int:
    from .verify import run_suite

    start = time.perf_counter()
    results = run_suite(args.seed, args.repeats, fault=args.inject_fault)
    passed = all(r.passed for r in results)
    if args.pretty:
        lines = [f"{'ok ' if r.passed else 'BAD'} {r.name:<30} n={r.instances:<3} worst={r.worst:.2e} tol={r.tolerance:.0e}"
                 for r in results]
        _emit(args, "\n".join(lines) + "\n")
    else:
        report = {"config": _config(args), "checks": [r.as_dict() for r in results], "passed": passed}
        _emit(args, json.dumps(report) + "\n")
    for r in results:
        if not r.passed:
            print(f"verify: {r.name} failed at seed={r.failure['seed']} d={r.failure['d']} "
                  f"residual={r.failure['residual']:.3e} (tol {r.tolerance:g})", file=sys.stderr)
    print(f"verify: {'all checks passed' if passed else 'FAILED'} in {time.perf_counter() - start:.2f} s",
          file=sys.stderr)
    return EXIT_OK if passed else EXIT_CHECK


def approx_bench(game: Game, budgets, estimators=("mc", "regression"), reps: int = 10,
                 seed: int = 0, pairing: bool = False) -> list[dict]:
    """Mean squared error and mean reported stderr against the exact Shapley value."""
    check_capacity(game.d)
    exact = shapley_value_exact(game).values
    rows = []
    for name in estimators:
        for budget in budgets:
            errs, ses = [], []
            for r in range(reps):
                b = Budget(int(budget), seed + r, pairing)
                est = estimate_shapley(game, b, name)
                errs.append(np.mean((est.values - exact) ** 2))
                ses.append(np.mean(est.stderr))
            rows.append({"estimator": name, "budget": int(budget), "mse": float(np.mean(errs)),
                         "mean_stderr": float(np.mean(ses))})
    return rows


def cmd_approx_bench(args) -> int:
    source, info = resolve_source(args)
    game = _require_game(source, "approx-bench")
    budgets = args.budgets or [2 ** k for k in range(7, 14)]
    estimators = [args.approx] if args.approx else ["mc", "regression"]
    rows = approx_bench(game, budgets, estimators, args.reps, args.seed, args.pairing)
    if args.pretty:
        lines = [f"{'estimator':<11}{'budget':>8}{'mse':>14}{'mean stderr':>14}"]
        lines += [f"{r['estimator']:<11}{r['budget']:>8}{r['mse']:>14.4e}{r['mean_stderr']:>14.4e}" for r in rows]
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, json.dumps({"config": _config(args, budgets=budgets, **info), "rows": rows}) + "\n")
    return EXIT_OK


def cmd_export(args) -> int:
    source, _ = resolve_source(args)
    if args.kind == "attribution_table":
        obj = attribution_table(args.method or "sv", _require_masked(source, "export") if args.method in ("gxi", "ig")
                                else source, args.targets)
    elif args.kind == "mobius":
        obj = mobius_transform(_require_game(source, "export"))
    else:
        obj = _require_game(source, "export")
    if args.out:
        write_game(obj, args.out)
    else:
        sys.stdout.write(json.dumps(game_to_document(obj), indent=1) + "\n")
    return EXIT_OK


def _add_source(p):
    p.add_argument("--model", help="builtin model: table1, poly:d=..,order=..,terms=..,seed=.., "
                                   "mobius:d=..,sparsity=..,seed=.., additive:d=..,seed=.., product:d=..")
    p.add_argument("--game", type=Path, help="JSON game file")
    p.add_argument("--x", type=_floats, help="input point, comma-separated")
    p.add_argument("--baseline", type=_floats, help="baseline point, comma-separated (default zeros)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metagame", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="attributions, interaction indices and meta-attributions")
    _add_source(p)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS, help="quadrature nodes for IG, IH and SOP")
    p.add_argument("--approx", choices=("mc", "regression"), help="estimate instead of enumerating")
    p.add_argument("--budget", type=int, default=4096, help="oracle evaluations per estimate (per target for meta)")
    p.add_argument("--pairing", action="store_true", help="antithetic / complement pairing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--targets", type=_ints, help="meta-attribution rows to compute")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--pretty", action="store_true", help="human-readable output")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("table1", help="reproduce the closed forms for f(x) = x0 + x0 * x1**2")
    p.add_argument("--x", type=_floats)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--out", type=Path)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("verify", help="seeded sweep over all invariants")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=2, help="instances per parameter set")
    p.add_argument("--out", type=Path)
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("approx-bench", help="estimator MSE against exact Shapley values over a budget sweep")
    _add_source(p)
    p.add_argument("--budgets", type=_ints, help="default 2^7..2^13")
    p.add_argument("--approx", choices=("mc", "regression"), help="one estimator (default both)")
    p.add_argument("--pairing", action="store_true")
    p.add_argument("--reps", type=int, default=10, help="seeds averaged per budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_approx_bench, model_default="poly:d=12,order=3,terms=24,seed=0")

    p = sub.add_parser("export", help="write a game file")
    _add_source(p)
    p.add_argument("--kind", choices=("dense_game", "mobius", "attribution_table"), default="dense_game")
    p.add_argument("--method", choices=("sv", "gxi", "ig"), help="base method for attribution_table")
    p.add_argument("--targets", type=_ints)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "model_default", None) and args.model is None and getattr(args, "game", None) is None:
        args.model = args.model_default
    if hasattr(args, "model_default"):
        del args.model_default
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"metagame: {exc} (rerun compute with --approx)", file=sys.stderr)
        return EXIT_CAPACITY
    except EstimationError as exc:
        print(f"metagame: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (GameFileError, UsageError, MetagameError, ValueError) as exc:
        print(f"metagame: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
