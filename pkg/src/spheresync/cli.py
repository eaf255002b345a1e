"""Command-line front end.

Subcommands: simulate, sweep, verify, reduce-n3, align, hopf, bench.
Exit codes: 0 on success, 1 for validation or verification failures,
2 for missing or unreadable files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, analysis, benchmark, catalog, dynamics, geometry, io, kernels, reduced

WORKERS_ENV = "SPHERESYNC_WORKERS"


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; keep 2 for IO problems."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# verification checks (also importable for tests)


def _steady_tour(full: bool):
    specs = [
        catalog.ring_state(2, 7),
        catalog.ring_state(3, 8),
        catalog.ring_state(4, 6),
        catalog.ring_state(5, 9),
        catalog.basis_state(4),
        catalog.combined_state(2, 9, 1.0, 1.0),
        catalog.combined_state(3, 12, 0.3, 1.0),
        catalog.combined_state(5, 11, 0.02, 1.0),
    ]
    if full:
        specs += [
            catalog.ring_state(2, 7, kappa_dbody=-1.0),
            catalog.ring_state(3, 40),
            catalog.ring_state(4, 12),
            catalog.ring_state(5, 5, kappa_dbody=-1.0),
            catalog.basis_state(3),
            catalog.combined_state(3, 40, 0.31765511840436766, 1.0),
        ]
    return specs


def verification_checks(full: bool = False):
    """Run the self-check battery; returns (name, ok, detail) triples."""
    checks = []

    for spec in _steady_tour(full):
        x = catalog.exact_configuration(spec)
        params = catalog.matching_params(spec)
        speed = float(np.abs(dynamics.rhs(x, params)).max())
        checks.append(
            (f"steady-state {spec.family} n={spec.n}", speed < 1e-8, f"max speed {speed:.2e}")
        )

    for spec in _steady_tour(False):
        if spec.family == "basis":
            continue
        x = catalog.exact_configuration(spec)
        fit = catalog.verify_lambda_relation(
            x, kappa2=spec.kappa2, kappa_dbody=spec.kappa_dbody or 1.0
        )
        lam1, lam2 = catalog.closed_form_lambdas(spec)
        dev = max(abs(fit.lambda1 - lam1), abs(fit.lambda2 - lam2))
        dev /= max(1.0, abs(lam1), abs(lam2))
        ok = fit.residual < 1e-8 and dev < 1e-6
        checks.append(
            (
                f"multiplier-fit {spec.family} n={spec.n}",
                ok,
                f"residual {fit.residual:.2e}, closed-form deviation {dev:.2e}",
            )
        )

    sizes = [(2, 9), (3, 7), (4, 7), (5, 8)]
    if full:
        sizes += [(3, 12), (4, 9), (5, 9)]
    for d, n in sizes:
        x = geometry.random_unit_configuration(d, n, seed=d * 100 + n)
        ref = kernels.signature_sum_naive(x)
        fast = kernels.signature_sum(x)
        scale = max(1.0, float(np.abs(ref).max()))
        dev = float(np.abs(fast - ref).max()) / scale
        checks.append(
            (f"kernel fast-vs-enumerated d={d} n={n}", dev < 1e-10, f"rel dev {dev:.2e}")
        )
        if kernels.COMPILED_AVAILABLE:
            dev2 = float(
                np.abs(kernels.signature_sum_compiled(x) - kernels.signature_sum_pure(x)).max()
            ) / scale
            checks.append(
                (f"kernel compiled-vs-pure d={d} n={n}", dev2 < 1e-12, f"rel dev {dev2:.2e}")
            )

    trig = analysis.trig_oracles()
    worst = max(check.error for check in trig)
    n_bad = sum(not check.ok for check in trig)
    checks.append(
        (
            f"trig-identities ({len(trig)} sums)",
            n_bad == 0,
            f"worst deviation {worst:.2e}",
        )
    )
    return checks


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = io.load_run_config(args.config)
    overrides = {
        "trajectory": args.out_trajectory,
        "summary": args.out_summary,
        "state": args.out_state,
        "checkpoints": args.out_checkpoints,
    }
    overrides = {key: val for key, val in overrides.items() if val is not None}
    if overrides:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, **overrides))
    result, report = io.execute_run(cfg)
    print(
        f"classification={report.classification} r={report.r_final:.12g} "
        f"steady={report.steady} t={report.t_final:.6g} steps={report.n_steps}"
    )
    if args.verbose:
        json.dump(io.summary_document(report, cfg), sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _parse_grid(text: str) -> list:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise io.ConfigError(f"grid must be lo:hi:step or a comma list, got {text!r}")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0.0:
            raise io.ConfigError(f"grid step must be positive, got {step}")
        count = int(round((hi - lo) / step))
        values = [lo + i * step for i in range(count + 1)]
        if not values or values[-1] < hi - 1e-12 * max(1.0, abs(hi)):
            values.append(hi)
        return values
    return [float(p) for p in text.split(",") if p.strip()]


def _sweep_worker(task):
    index, cfg = task
    _, report = io.execute_run(cfg)
    return index, report


def cmd_sweep(args) -> int:
    base = io.load_run_config(args.config)
    values = _parse_grid(args.kappa2)
    if not values:
        raise io.ConfigError("empty sweep grid")
    os.makedirs(args.out_dir, exist_ok=True)

    tasks = []
    for index, value in enumerate(values):
        out = io.OutputSpec(
            summary=os.path.join(args.out_dir, f"point_{index:03d}.summary.json")
        )
        tasks.append((index, dataclasses.replace(base, kappa2=value, output=out)))

    workers = args.workers or int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, tasks))
    else:
        results = [_sweep_worker(task) for task in tasks]
    results.sort(key=lambda item: item[0])

    index_path = os.path.join(args.out_dir, "sweep.csv")
    with open(index_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("kappa2,classification,r_final,steady,t_final\n")
        for (index, report), value in zip(results, values):
            fh.write(
                f"{value:.17g},{report.classification},{report.r_final:.17g},"
                f"{int(report.steady)},{report.t_final:.17g}\n"
            )
    for (index, report), value in zip(results, values):
        print(f"kappa2={value:.6g} -> {report.classification} r={report.r_final:.9g}")
    print(f"wrote {index_path}")
    return 0


def cmd_verify(args) -> int:
    checks = verification_checks(full=args.full)
    n_fail = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        if not ok:
            n_fail += 1
        print(f"{status}  {name}: {detail}")
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return 0 if n_fail == 0 else 1


def cmd_reduce_n3(args) -> int:
    if not -1.0 <= args.u0 <= 1.0:
        raise io.ConfigError(f"--u0 must lie in [-1, 1], got {args.u0}")
    sign = 1 if args.volume_sign >= 0 else -1
    triple = reduced.triple_from_invariants(args.u0, args.c1, args.c2, volume_sign=sign)
    inv = reduced.constants_from_initial(*triple)
    roots = reduced.cubic_roots(inv.c1, inv.c2)
    cmp = reduced.compare_with_full(*triple, t_max=args.t_max, dt=args.dt)
    print(
        f"overlap window [{roots.r_minus:.9g}, {roots.r_plus:.9g}]"
        + ("" if not np.isfinite(roots.r_third) else f", outer root {roots.r_third:.9g}")
    )
    print(
        f"full-vs-reduced over t<={args.t_max:g}: "
        f"max |du|={cmp.max_dev_u:.3e}, max |dV|={cmp.max_dev_volume:.3e}"
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("t,u_full,u_reduced,volume_full,volume_reduced\n")
            rows = zip(
                cmp.times, cmp.u_full, cmp.u_reduced, cmp.volume_full, cmp.volume_reduced
            )
            for row in rows:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_align(args) -> int:
    state = io.load_state(args.state)
    rotation, aligned = geometry.align_to_axis(state, canonicalize=args.canonicalize)
    mean = aligned.mean(axis=0)
    r = float(np.linalg.norm(mean))
    off_axis = float(np.abs(mean[:-1]).max())
    print(f"r={r:.12g} residual off-axis component {off_axis:.3e}")
    if args.out:
        io.save_state(args.out, aligned)
        print(f"wrote {args.out}")
    if args.out_rotation:
        np.savetxt(args.out_rotation, rotation, delimiter=",", fmt="%.17g")
        print(f"wrote {args.out_rotation}")
    return 0


def cmd_hopf(args) -> int:
    state = io.load_state(args.state)
    if state.shape[1] != 4:
        raise io.ConfigError(f"hopf projection needs d=4 states, got d={state.shape[1]}")
    points = geometry.hopf_map(state)
    height = float(np.abs(points[:, 2]).max())
    print(f"projected {len(points)} nodes; max |z| = {height:.3e}")
    if args.out:
        io.save_state(args.out, points)
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    report = benchmark.run_benchmark(
        d=args.d, n=args.n, naive_n=args.naive_n, repeats=args.repeats
    )
    print(benchmark.format_report(report))
    if args.out:
        benchmark.write_report(args.out, report)
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="spheresync",
        description="Simulate pairwise and d-body synchronization on the unit sphere.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration file")
    p.add_argument("config", help="run-configuration JSON file")
    p.add_argument("--out-trajectory", help="trajectory CSV path (overrides config)")
    p.add_argument("--out-summary", help="summary JSON path (overrides config)")
    p.add_argument("--out-state", help="final-state CSV path (overrides config)")
    p.add_argument("--out-checkpoints", help="checkpoint directory (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true", help="print the full summary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rerun a configuration across pairwise couplings")
    p.add_argument("config", help="base run-configuration JSON file")
    p.add_argument(
        "--kappa2", required=True, help="grid as lo:hi:step or a comma-separated list"
    )
    p.add_argument("--out-dir", required=True, help="directory for per-point summaries")
    p.add_argument(
        "--workers",
        type=int,
        default=0,
        help=f"parallel processes (default: ${WORKERS_ENV} or 1)",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="self-check the kernels and the state catalog")
    p.add_argument("--full", action="store_true", help="larger tour, more sizes")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "reduce-n3", help="three-node triple flow vs its one-variable reduction"
    )
    p.add_argument("--u0", type=float, default=0.5, help="initial common overlap")
    p.add_argument("--c1", type=float, default=-0.75, help="first conserved overlap ratio")
    p.add_argument("--c2", type=float, default=1.0 / 3.0, help="second conserved overlap ratio")
    p.add_argument(
        "--volume-sign", type=int, default=-1, help="sign of the initial triple volume"
    )
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--dt", type=float, default=0.002)
    p.add_argument("--out", help="combined CSV of both time series")
    p.set_defaults(func=cmd_reduce_n3)

    p = sub.add_parser("align", help="rotate a state so its mean points up the last axis")
    p.add_argument("state", help="state CSV file")
    p.add_argument(
        "--canonicalize",
        action="store_true",
        help="also fix the residual rotation about the mean",
    )
    p.add_argument("--out", help="write the aligned state here")
    p.add_argument("--out-rotation", help="write the rotation matrix here")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("hopf", help="project a d=4 state to the 2-sphere")
    p.add_argument("state", help="state CSV file (4 columns)")
    p.add_argument("--out", help="write the projected points here")
    p.set_defaults(func=cmd_hopf)

    p = sub.add_parser("bench", help="time the d-body kernel backends")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--naive-n", type=int, default=10)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except io.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
