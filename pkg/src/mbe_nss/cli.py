"""Command-line front end.

Subcommands: converge, stabsweep, energycmp, coarsen, stability, resume.
Options common to the run-style commands: --config, --out, --seed, --nx,
--ny, --tau, --eta, --A, --tfinal, --stride, --dealias.  Values from a
configuration file are overridden by explicit flags.
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig, apply_overrides, load_config
from .diagnostics import check_dissipation_constraint
from .experiments import (
    resume_run,
    run_coarsening,
    run_convergence_study,
    run_energy_comparison,
    run_stabilization_sweep,
    run_stability_report,
)


def _parse_floats(text: str) -> tuple[float, ...]:
    """Comma-separated floats; plain fractions like 1/20 are accepted."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "/" in part:
            num, _, den = part.partition("/")
            values.append(float(num) / float(den))
        else:
            values.append(float(part))
    if not values:
        raise argparse.ArgumentTypeError(f"no numbers in {text!r}")
    return tuple(values)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--out", metavar="DIR", default="out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for random initial data")
    parser.add_argument("--nx", type=int)
    parser.add_argument("--ny", type=int)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--eta", type=float)
    parser.add_argument("--A", type=float, dest="stabilization_a",
                        help="stabilization parameter")
    parser.add_argument("--tfinal", type=float, dest="t_final")
    parser.add_argument("--stride", type=int, help="recording stride in steps")
    parser.add_argument("--dealias", action="store_const", const=True,
                        help="apply the 2/3 rule to the nonlinear term")
    parser.add_argument("--scheme", help="bdf1ep1 | bdf2ep2 | bdf3ep3 | bdf3ep3_stabilized")
    parser.add_argument("--ic", help="sine_product | random_uniform | from_checkpoint")
    parser.add_argument("--startup", help="chain | exact")


def _build_config(args: argparse.Namespace, **extra) -> RunConfig:
    overrides = dict(
        nx=args.nx, ny=args.ny, tau=args.tau, eta=args.eta,
        stabilization_a=args.stabilization_a, t_final=args.t_final,
        seed=args.seed, stride=args.stride, dealias=args.dealias,
        scheme=args.scheme, ic=args.ic, startup=args.startup,
        out_dir=args.out,
    )
    overrides.update(extra)
    if args.config:
        return load_config(args.config, **overrides)
    return apply_overrides(RunConfig(), **overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mbe-nss",
        description="Spectral IMEX solvers and diagnostics for the 2D "
                    "no-slope-selection thin-film equation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="manufactured-solution convergence study")
    _add_common(p)
    p.add_argument("--taus", type=_parse_floats, default=_parse_floats("1/20,1/40,1/80,1/160"),
                   help="decreasing comma-separated time steps (fractions allowed)")

    p = sub.add_parser("stabsweep", help="error growth across stabilization parameters")
    _add_common(p)
    p.add_argument("--taus", type=_parse_floats, default=_parse_floats("1/20,1/40,1/80,1/160"))
    p.add_argument("--avalues", type=_parse_floats, default=(0.0, 1.0, 5.0, 25.0),
                   help="comma-separated stabilization parameters")

    p = sub.add_parser("energycmp", help="standard vs augmented energy time series")
    _add_common(p)
    p.add_argument("--taus", type=_parse_floats, default=(0.01, 0.001))

    p = sub.add_parser("coarsen", help="long coarsening run with power-law fits")
    _add_common(p)
    p.add_argument("--checkpoint-every", type=int, dest="checkpoint_every")
    p.add_argument("--snapshots", type=_parse_floats, dest="snapshot_times",
                   help="comma-separated snapshot times")

    p = sub.add_parser("stability", help="companion-matrix sweeps and reports")
    p.add_argument("--out", metavar="DIR", default="out")
    p.add_argument("--s0", type=float, default=0.0909)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--kappa-lo", type=float, default=1e-4)
    p.add_argument("--kappa-hi", type=float, default=0.1)

    p = sub.add_parser("resume", help="continue a checkpointed run")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, metavar="PATH")

    args = parser.parse_args(argv)
    command = args.command

    if command == "converge":
        config = _build_config(args, forcing="manufactured")
        report = run_convergence_study(config, args.taus, out_dir=args.out)
        print("tau        l2            linf          order_l2  order_linf")
        for i, tau in enumerate(report.taus):
            o2 = f"{report.orders_l2[i-1]:8.3f}" if i else "      --"
            oi = f"{report.orders_linf[i-1]:8.3f}" if i else "      --"
            print(f"{tau:<10.6g} {report.l2_errors[i]:<13.6e} "
                  f"{report.linf_errors[i]:<13.6e} {o2}  {oi}")
        return 0

    if command == "stabsweep":
        config = _build_config(args, forcing="manufactured")
        sweep = run_stabilization_sweep(config, args.avalues, args.taus, out_dir=args.out)
        header = "tau        " + "  ".join(f"A={a:<10g}" for a in sweep.a_values)
        print(header + "  (l2 errors)")
        for i, tau in enumerate(args.taus):
            row = "  ".join(f"{r.l2_errors[i]:<12.6e}" for r in sweep.reports)
            print(f"{tau:<10.6g} {row}")
        print(f"errors monotone in A: {sweep.monotone_in_a}; "
              f"min err(A_max)/err(A_min) over tau: {sweep.worst_ratio:.1f}")
        return 0

    if command == "energycmp":
        config = _build_config(args, forcing="none")
        comparison = run_energy_comparison(config, args.taus, args.out)
        for tau, gap in zip(comparison.taus, comparison.max_gaps):
            print(f"tau={tau:g}: max augmented-energy gap {gap:.6e}")
        print(f"gaps shrink as tau shrinks: {comparison.gaps_shrink_with_tau}")
        return 0

    if command == "coarsen":
        config = _build_config(args, ic=args.ic or "random_uniform",
                               checkpoint_every=args.checkpoint_every,
                               snapshot_times=args.snapshot_times)
        verdict = check_dissipation_constraint(config.scheme_params())
        print(f"energy guarantee for these parameters: {verdict.value}")
        result = run_coarsening(config, args.out)
        print(f"series: {result.series_path}")
        print(f"E fit:  a={result.energy_fit.a:.4f} log(t) + {result.energy_fit.b:.4f}")
        print(f"H fit:  {result.height_fit.a:.4f} * t^{result.height_fit.b:.4f}")
        print(f"M fit:  {result.slope_fit.a:.4f} * t^{result.slope_fit.b:.4f}")
        if result.startup_ratio is not None:
            print(f"startup ratio (||d2||^2 + ||d1||^2)/tau = {result.startup_ratio:.6e}")
        return 0

    if command == "stability":
        report = run_stability_report(args.out, s0=args.s0, n_roots=args.samples,
                                      kappa_lo=args.kappa_lo, kappa_hi=args.kappa_hi)
        rr = report.root_report
        print(f"root sweep over (0, {args.s0}]: passed={rr.passed} "
              f"max closed-vs-eigen gap {rr.max_cross_check_gap:.2e}")
        for failure in rr.failures:
            print(f"  FAILED: {failure}")
        print(f"contraction: n0={report.contraction_exponent} "
              f"eps0={report.contraction_norm:.6f}")
        print(f"diagonalization sweep: min (1-max|lambda|)/kappa = "
              f"{report.limit_sweep.margin_rate:.4f}, "
              f"max ||N|| + ||N^-1|| = {report.limit_sweep.transform_bound:.4f}")
        return 0 if rr.passed else 1

    if command == "resume":
        config = _build_config(args)
        if args.t_final is None:
            parser.error("resume requires --tfinal")
        final = resume_run(config, args.checkpoint, args.t_final, out_dir=args.out)
        print(f"resumed to t={final.time:g} (step {final.step_index})")
        return 0

    parser.error(f"unknown command {command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
