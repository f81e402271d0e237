"""Command-line front end.

Subcommands: bounds, simulate, discrete-crit, figure-data, trinomial, selftest.
Every experiment parameter is a flag; ``--config FILE`` supplies defaults from
``key = value`` lines, and explicit flags override them.
"""

from __future__ import annotations

import argparse
import math
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import continuous, discrete, spectral
from .point_process import DEFAULT_SEED
from .results import RunResult, to_csv
from .survival import DEFAULT_CAP, DEFAULT_HORIZON, SurvivalEstimate, resolve_workers

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

DEFAULT_MEANS_LAMBDAS = (1.1, 1.3, 1.5)


class CommandError(Exception):
    """Failure reported to the user with a nonzero exit code."""


def read_config(path: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CommandError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        values["lam" if key == "lambda" else key] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            defaults = {}
            for a in sp._actions:
                if a.dest not in values:
                    continue
                value = values[a.dest]
                if isinstance(a, argparse._StoreTrueAction):
                    value = value.lower() in ("1", "true", "yes", "on")
                # a config value satisfies a required flag
                a.required = False
                defaults[a.dest] = value
            sp.set_defaults(**defaults)


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CommandError(f"cannot write {output}: {exc.strerror or exc}") from exc


def _seed(args) -> int:
    return secrets.randbits(63) if args.random_seed else args.seed


def _bounds_rows(m_max, tolerance):
    try:
        return spectral.bounds_table(m_max, tolerance)
    except spectral.ConvergenceError as exc:
        raise CommandError(str(exc)) from exc


def cmd_bounds(args) -> int:
    start = time.perf_counter()
    rows = _bounds_rows(args.m_max, args.tolerance)
    header = ["m", "lambda_x", "lambda_z", "gap", "log_gap"]
    table = [[r.m, r.lambda_x, r.lambda_z, r.gap, r.log_gap] for r in rows]
    ok = all(r.lambda_z <= r.lambda_x for r in rows)
    ok &= all(a.lambda_x >= b.lambda_x and a.lambda_z <= b.lambda_z for a, b in zip(rows, rows[1:]))
    if args.format == "csv":
        _emit(to_csv(header, table), args.output)
    else:
        payload = {"columns": header, "rows": table}
        result = RunResult("bounds", {"m_max": args.m_max, "tolerance": args.tolerance}, None, payload)
        result.duration = time.perf_counter() - start
        _emit(result.to_json(), args.output)
    last = rows[-1]
    if args.output not in (None, "-"):
        print(f"lambda_c bracket (m={last.m}): [{last.lambda_z:.9g}, {last.lambda_x:.9g}]")
    else:
        print(f"# lambda_c bracket (m={last.m}): [{last.lambda_z:.9g}, {last.lambda_x:.9g}]")
    if not ok:
        print("bounds table failed its ordering checks", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = _seed(args)
    workers = resolve_workers(args.workers, args.replicas)
    params = {
        "model": args.model,
        "lambda": args.lam,
        "replicas": args.replicas,
        "horizon": args.horizon,
        "population_cap": args.cap,
    }
    start = time.perf_counter()
    ok = True
    if args.model == "continuous":
        outcomes = continuous.run_continuous(args.lam, args.replicas, args.horizon, args.cap, seed, None, workers)
        est = SurvivalEstimate.from_outcomes(
            args.lam, [o.survived() for o in outcomes], args.horizon, args.cap
        )
        payload = {"survival": est.to_dict()}
    elif args.model == "coupled":
        if args.m is None:
            raise CommandError("--m is required for the coupled model")
        params["m"] = args.m
        estimates, violations, outcomes = continuous.estimate_coupled(
            args.lam, args.m, args.replicas, args.horizon, args.cap, seed, workers
        )
        payload = {
            "survival": estimates["y"].to_dict(),
            "survival_x": estimates["x"].to_dict(),
            "survival_z": estimates["z"].to_dict(),
            "invariant_violations": violations,
        }
        ok = violations == 0
    else:
        if args.L is None:
            raise CommandError("--L is required for the discrete model")
        params["L"] = args.L
        outcomes = discrete.run_discrete(args.lam, args.L, args.replicas, args.horizon, args.cap, seed, workers)
        est = SurvivalEstimate.from_outcomes(args.lam, [o.survived for o in outcomes], args.horizon, args.cap)
        payload = {"survival": est.to_dict(), "exact_critical": discrete.exact_critical(args.L)}
    payload["outcomes"] = [o.to_dict() for o in outcomes]
    result = RunResult("simulate", params, seed, payload)
    result.duration = time.perf_counter() - start
    _emit(result.to_json(), args.output)
    s = payload["survival"]
    lo, hi = s["wilson_ci"]
    print(
        f"proxy survival {s['proxy_survival_fraction']:.4f} "
        f"(95% CI [{lo:.4f}, {hi:.4f}], {s['replicas']} replicas)",
        file=sys.stderr,
    )
    if not ok:
        print(f"coupling invariant violated {payload['invariant_violations']} times", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_discrete_crit(args) -> int:
    rows = []
    for L in range(1, args.L_max + 1):
        diag = discrete.exact_critical_diagnostics(L)
        rows.append([L, diag.lambda_c, diag.printed_formula])
    ok = all(a[1] > b[1] > 1.0 for a, b in zip(rows, rows[1:])) and rows[-1][1] > 1.0
    header = ["L", "lambda_c", "printed_formula"]
    if args.format == "csv":
        _emit(to_csv(header, rows), args.output)
    else:
        result = RunResult("discrete-crit", {"L_max": args.L_max}, None, {"columns": header, "rows": rows})
        _emit(result.to_json(), args.output)
    if not ok:
        print("phase diagram is not strictly decreasing towards 1", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def figure_table(which: str, m_max: int = 12, L_max: int = 50, n_max: int = 30, lambdas=DEFAULT_MEANS_LAMBDAS,
                 tolerance: float = spectral.DEFAULT_TOL):
    """Plot-ready (header, rows): x column first, one column per series."""
    if which == "fig4":
        rows = _bounds_rows(m_max, tolerance)
        return ["m", "lambda_x", "lambda_z"], [[r.m, r.lambda_x, r.lambda_z] for r in rows]
    if which == "fig5":
        rows = _bounds_rows(m_max, tolerance)
        return ["m", "log_gap"], [[r.m, r.log_gap] for r in rows]
    if which == "fig6":
        return ["L", "lambda_c"], [[L, v] for L, v in discrete.phase_diagram(L_max)]
    if which == "means":
        header = ["n"] + [f"lambda={lam:g}" for lam in lambdas]
        return header, [[n] + [discrete.expected_count(n, 0, lam) for lam in lambdas] for n in range(n_max + 1)]
    raise CommandError(f"unknown figure {which!r}")


def cmd_figure_data(args) -> int:
    lambdas = tuple(float(x) for x in args.lambdas.split(",")) if args.lambdas else DEFAULT_MEANS_LAMBDAS
    header, rows = figure_table(args.which, args.m_max, args.L_max, args.n_max, lambdas, args.tolerance)
    _emit(to_csv(header, rows), args.output)
    return EXIT_OK


def cmd_trinomial(args) -> int:
    row = discrete.trinomial_row(args.n)
    _emit(" ".join(str(e) for e in row.entries) + "\n", args.output)
    return EXIT_OK


def selftest_checks():
    """Yield (name, passed) for the built-in oracle comparisons."""
    worst = 0.0
    for k in range(1, 17):
        for d in range(1, k + 1):
            T = spectral.BandedToeplitz(k, d)
            worst = max(worst, abs(spectral.perron(T, method="power").rho - spectral.dense_spectrum(T)[-1]))
    yield "power iteration vs dense eigensolve (k <= 16)", worst < 1e-8

    worst = max(
        abs(spectral.perron(spectral.BandedToeplitz(k, 2)).rho - (1 + 2 * math.cos(math.pi / (k + 1))))
        for k in (2, 3, 10, 65, 1000, 4000)
    )
    yield "tridiagonal Perron root vs closed form", worst < 1e-9

    rng = np.random.default_rng(0)
    v = rng.standard_normal(300)
    T = spectral.BandedToeplitz(300, 37)
    yield "O(k) matvec vs dense product", np.allclose(spectral.matvec(T, v), T.todense() @ v, rtol=1e-12, atol=1e-12)

    poly = np.array([1], dtype=object)
    ok = True
    for n in range(0, 41):
        ok &= tuple(poly.tolist()) == discrete.trinomial_row(n).entries
        poly = np.convolve(poly, np.array([1, 1, 1], dtype=object))
    yield "trinomial rows vs polynomial expansion (n <= 40)", ok

    try:
        for L in range(1, 21):
            discrete.exact_critical_diagnostics(L, validate=True)
        yield "discrete critical value vs numeric Perron root (L <= 20)", True
    except AssertionError:
        yield "discrete critical value vs numeric Perron root (L <= 20)", False

    yield "Perron root gap bound (m <= 8)", all(spectral.courant_fischer_check(m) for m in range(1, 9))

    _, violations, _ = continuous.estimate_coupled(1.5, 2, 50, horizon=30, population_cap=20_000, workers=1)
    yield "sandwich coupling X ⊆ Y ⊆ Z (50 replicas)", violations == 0


def cmd_selftest(args) -> int:
    failures = 0
    for name, passed in selftest_checks():
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        failures += not passed
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barrier-brw", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value file supplying option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--random-seed", action="store_true", help="draw a fresh master seed from OS entropy")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel replica workers (default: $BARRIER_BRW_WORKERS or automatic)")

    p = sub.add_parser("bounds", help="critical-value bounds from the sandwiching processes")
    p.add_argument("--m-max", type=int, default=12)
    p.add_argument("--tolerance", type=float, default=spectral.DEFAULT_TOL)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo survival proxy")
    p.add_argument("--model", choices=("continuous", "coupled", "discrete"), required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--m", type=int, help="refinement level (coupled model)")
    p.add_argument("--L", type=int, help="barrier position (discrete model)")
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--output", "-o")
    seeded(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("discrete-crit", help="exact critical values of the discrete model")
    p.add_argument("--L-max", type=int, default=20)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_discrete_crit)

    p = sub.add_parser("figure-data", help="plot-ready CSV for a figure")
    p.add_argument("which", choices=("fig4", "fig5", "fig6", "means"))
    p.add_argument("--m-max", type=int, default=12)
    p.add_argument("--L-max", type=int, default=50)
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("--lambdas", help="comma-separated lambda list for 'means'")
    p.add_argument("--tolerance", type=float, default=spectral.DEFAULT_TOL)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_figure_data)

    p = sub.add_parser("trinomial", help="print a row of the trinomial triangle")
    p.add_argument("n", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_trinomial)

    p = sub.add_parser("selftest", help="run the built-in oracle comparisons")
    p.set_defaults(func=cmd_selftest)
    return parser


def _validate(args) -> None:
    for name in ("m_max", "L_max", "replicas", "horizon", "cap", "m", "L"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise CommandError(f"--{name.replace('_', '-')} must be >= 1")
    if args.command == "trinomial" and args.n < 0:
        raise CommandError("n must be >= 0")
    lam = getattr(args, "lam", None)
    if lam is not None and not (math.isfinite(lam) and lam > 0):
        raise CommandError("--lambda must be positive")
    tol = getattr(args, "tolerance", None)
    if tol is not None and not tol > 0:
        raise CommandError("--tolerance must be positive")


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # Read --config first so its values become defaults before the full parse.
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument("--config")
    pre, _ = pre_parser.parse_known_args(argv)
    try:
        if pre.config:
            _apply_config(parser, read_config(pre.config))
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        _validate(args)
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
