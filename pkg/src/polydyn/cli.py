"""Command-line front end: run simulations, verify law suites, drive the
predictive-processing models, and emit the stochastic-path demo.

Everything is deterministic given (spec, flags, seed): exact runs propagate
finite laws, sampled runs use a counter-based generator, CSV floats are
printed with repr.  Exit codes: 0 all good, 1 a law suite failed, 2 usage or
spec errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dist import (
    Dirac,
    Rng,
    categorical,
    dirac,
    dist_to_json,
    finite_items,
    sample,
    uniform,
)
from .hier import (
    bayes_check,
    compose_hier,
    copy_system,
    discard_system,
    exact_bayes,
    id_hier,
    prior_system,
    quasi_bisim,
    stochastic_channel_system,
    swap_system,
    tensor_hier,
    trace,
)
from .laplace import LaplaceConfig, linear_channel, mk_state, run_stack
from .poly import linear
from .random_bundle import (
    check_bundle,
    check_measure_preserving,
    check_random_system,
    ou_demo,
)
from .spaces import finite, points
from .specio import (
    SpecError,
    biased_swap_example,
    bundle_example,
    dist_of,
    load_json,
    rotation_example,
    section_from_json,
    skew_random_example,
    system_from_json,
)
from .systems import check_flow, closure

_SUITES = ("flow", "measure", "rds", "bundle", "comonoid", "bayes")


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows) -> str:
    return "".join(",".join(str(c) for c in row) + "\n" for row in rows)


def _fail_usage(message: str) -> int:
    json.dump({"error": message}, sys.stderr)
    sys.stderr.write("\n")
    return 2


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    spec = load_json(args.spec)
    sys_ = system_from_json(spec["system"])
    sigma = section_from_json(sys_.interface, spec.get("section"))
    init = dist_of(sys_.states, spec.get("init", "uniform"))
    horizon = args.horizon if args.horizon is not None else int(spec.get("horizon", 8))
    mode = spec.get("mode", "exact")
    if mode == "exact":
        tr = trace(sys_, sigma, init, horizon)
        if all(isinstance(v, Dirac) for v in tr.values):
            rows = [("t", "output")]
            rows += [(t, v.point) for t, v in zip(tr.times, tr.values)]
        else:
            labels = list(points(sys_.interface.positions))
            rows = [tuple(["t"] + [f"p_{lab}" for lab in labels])]
            for t, v in zip(tr.times, tr.values):
                weights = dict(finite_items(v))
                rows.append(tuple([t] + [repr(weights.get(lab, 0.0)) for lab in labels]))
    elif mode == "sample":
        rng = Rng(args.seed)
        gen_state = sample(init, rng.child(0))
        cs = closure(sys_, sigma)
        rows = [("t", "output")]
        state = gen_state
        for t in range(horizon + 1):
            rows.append((t, sys_.output(1, state)))
            state = sample(cs.step(1, state), rng.child(t + 1))
    else:
        raise SpecError(f"unknown run mode {mode!r}")
    _emit(_csv(rows), args.out)
    return 0


# ---------------------------------------------------------------------------
# check suites


def _suite_flow(spec) -> dict:
    sys_ = system_from_json(spec["system"] if spec else {"named": "counter", "n": 6})
    report = check_flow(sys_)
    return {"suite": "flow", "checks": [report], "pass": report["pass"]}


def _suite_measure(spec) -> dict:
    checks = []
    if spec and "system" in spec:
        raise SpecError("the measure suite runs its built-in examples")
    good = rotation_example(6)
    checks.append(
        {"name": "rotation", **check_measure_preserving(good, (1, 2, 3))}
    )
    base, flow = biased_swap_example()
    from .random_bundle import MeasurePreservingSystem

    bad = MeasurePreservingSystem(base, flow)
    bad_report = check_measure_preserving(bad, (1, 2, 3))
    checks.append(
        {"name": "biased-swap", "expected_fail": True, **bad_report}
    )
    ok = checks[0]["pass"] and not bad_report["pass"]
    return {"suite": "measure", "checks": checks, "pass": ok}


def _suite_rds(spec) -> dict:
    rds = skew_random_example(4, 2)
    report = check_random_system(rds)
    return {"suite": "rds", "checks": [report], "pass": report["pass"]}


def _suite_bundle(spec) -> dict:
    bs = bundle_example(3, 2)
    report = check_bundle(bs)
    return {"suite": "bundle", "checks": [report], "pass": report["pass"]}


def _suite_comonoid(spec) -> dict:
    labels = (spec or {}).get("space", [0, 1, 2])
    horizon = int((spec or {}).get("horizon", 8))
    A = finite(*labels)
    Ay = linear(A)
    cp = copy_system(A)
    laws = [
        (
            "counit-left",
            compose_hier(cp, tensor_hier(discard_system(A), id_hier(Ay))),
            id_hier(Ay),
        ),
        (
            "counit-right",
            compose_hier(cp, tensor_hier(id_hier(Ay), discard_system(A))),
            id_hier(Ay),
        ),
        (
            "coassoc",
            compose_hier(cp, tensor_hier(cp, id_hier(Ay))),
            compose_hier(cp, tensor_hier(id_hier(Ay), cp)),
        ),
        ("cocomm", compose_hier(cp, swap_system(A, A)), cp),
    ]
    checks = []
    for name, lhs, rhs in laws:
        verdict = quasi_bisim(lhs, rhs, "exists", "exists", horizon=horizon, tol=0.0)
        checks.append({"name": name, **verdict})
    return {
        "suite": "comonoid",
        "checks": checks,
        "pass": all(c["related"] for c in checks),
    }


def _suite_bayes(spec) -> dict:
    if spec and "prior" in spec:
        xs = finite(*spec["labels_x"])
        ys = finite(*spec["labels_y"])
        pi = categorical(xs, dict(spec["prior"]))
        rows = {x: categorical(ys, dict(row)) for x, row in spec["channel"]}
        perturb = float(spec.get("perturb", 0.0))
    else:
        xs = finite("x1", "x2")
        ys = finite("y1", "y2")
        pi = categorical(xs, {"x1": 1 / 3, "x2": 2 / 3})
        rows = {
            "x1": categorical(ys, {"y1": 0.9, "y2": 0.1}),
            "x2": categorical(ys, {"y1": 0.3, "y2": 0.7}),
        }
        perturb = 0.0

    def chan(x):
        return rows[x]

    inv = exact_bayes(chan, pi, target=ys)

    def inv_fn(yv):
        d = inv(yv)
        if perturb == 0.0:
            return d
        weights = dict(finite_items(d))
        first = sorted(weights)[0]
        weights[first] += perturb
        total = sum(weights.values())
        return categorical(d.space, {k: w / total for k, w in weights.items()})

    verdict = bayes_check(
        stochastic_channel_system(chan, xs, ys),
        prior_system(pi),
        stochastic_channel_system(inv_fn, ys, xs),
        horizon=3,
        tol=1e-9,
    )
    return {"suite": "bayes", "checks": [verdict], "pass": verdict["related"]}


def cmd_check(args) -> int:
    spec = load_json(args.spec) if args.spec else None
    suite = args.suite
    if suite not in _SUITES:
        raise SpecError(f"unknown suite {suite!r}; choose from {', '.join(_SUITES)}")
    report = {
        "flow": _suite_flow,
        "measure": _suite_measure,
        "rds": _suite_rds,
        "bundle": _suite_bundle,
        "comonoid": _suite_comonoid,
        "bayes": _suite_bayes,
    }[suite](spec)
    text = json.dumps(report, indent=2, default=_json_default) + "\n"
    _emit(text, args.out)
    return 0 if report["pass"] else 1


def _json_default(obj):
    if isinstance(obj, tuple):
        return list(obj)
    try:
        return dist_to_json(obj)
    except Exception:
        return repr(obj)


# ---------------------------------------------------------------------------
# laplace


def cmd_laplace(args) -> int:
    spec = load_json(args.spec)
    levels = []
    for lvl in spec["levels"]:
        mean = lvl["mean"]
        if "linear" not in mean:
            raise SpecError(f"unknown mean description {mean!r}")
        levels.append(
            linear_channel(
                mean["linear"]["A"], mean["linear"].get("b"), lvl.get("cov")
            )
        )
    prior = spec["prior"]
    pi0 = mk_state(prior["mean"], prior["cov"])
    datum = spec["data"]
    cfg = LaplaceConfig(
        rate=float(spec.get("rate", 0.05)),
        iterations=int(spec.get("iterations", 10000)),
        tolerance=float(spec.get("tolerance", 1e-8)),
    )
    steps = args.horizon if args.horizon is not None else int(spec.get("steps", 200))
    rows_out = [
        tuple(
            ["step", "level"]
            + [f"mean_{k}" for k in range(max(ch.in_dim for ch in levels))]
            + ["free_energy"]
        )
    ]
    width = max(ch.in_dim for ch in levels)
    for step, level, mean, fl in run_stack(levels, cfg, pi0, datum, steps):
        cells = [repr(float(m)) for m in mean] + [""] * (width - len(mean))
        rows_out.append(tuple([step, level] + cells + [repr(fl)]))
    _emit(_csv(rows_out), args.out)
    return 0


# ---------------------------------------------------------------------------
# demo


def cmd_demo(args) -> int:
    spec = load_json(args.spec) if args.spec else {}
    text = ou_demo(
        theta_rate=float(spec.get("theta", 1.0)),
        sigma=float(spec.get("sigma", 0.5)),
        h=float(spec.get("h", 0.02)),
        horizon=args.horizon if args.horizon is not None else int(spec.get("horizon", 1000)),
        seed=args.seed,
        x0=float(spec.get("x0", 0.0)),
    )
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polydyn",
        description="Run, verify, and demo compositional dynamical systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "simulate a system spec and emit a CSV trajectory"),
        ("check", "run a law suite and emit a JSON report"),
        ("laplace", "run a predictive hierarchy and emit per-level CSV"),
        ("demo", "emit the stochastic-path demo CSV"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--spec", help="path to a JSON spec file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument("--out", help="write output to this path instead of stdout")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--suite", help="law suite name (check only)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "run":
            if not args.spec:
                return _fail_usage("run needs --spec")
            return cmd_run(args)
        if args.command == "check":
            if not args.suite:
                return _fail_usage("check needs --suite")
            return cmd_check(args)
        if args.command == "laplace":
            if not args.spec:
                return _fail_usage("laplace needs --spec")
            return cmd_laplace(args)
        if args.command == "demo":
            return cmd_demo(args)
        return _fail_usage(f"unknown command {args.command!r}")
    except (SpecError, ValueError, KeyError, OSError) as exc:
        return _fail_usage(f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
