"""Command-line interface: simulate, estimate, experiment, doa, ruler."""

import argparse
import sys

import numpy as np

from . import __version__
from .doa import estimate_frequencies, frequency_mse
from .errors import QtcovError
from .estimators import (EstimationReport, qscm, qtscm,
                         quantized_sample_covariance, relative_spectral_error)
from .harness import (config_to_text, default_config, parse_config,
                      resolve_ruler, run_experiment, write_outputs)
from .quantizer import QuantizationSpec, quantize_batch
from .qspa import qspa_solve
from .rulers import coverage_coefficient
from .sampling import (load_batch, random_toeplitz_covariance,
                       sample_complex_gaussian, save_batch)
from .toeplitz import HermitianToeplitz


def _add_common(p):
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--outdir", default=None,
                   help="output directory (default: config value or $QTCOV_OUTDIR)")


def _parse_delta(text):
    parts = text.split(",")
    if len(parts) == 1:
        return float(parts[0]), float(parts[0])
    return float(parts[0]), float(parts[1])


def _load_truth(path):
    gens = np.loadtxt(path, dtype=complex, ndmin=1)
    return HermitianToeplitz(gens)


def cmd_ruler(args):
    ruler = resolve_ruler(args.ruler, args.d)
    print(f"ruler {ruler.to_string()} (d={ruler.dim}, |ruler|={ruler.size})")
    print(f"coverage coefficient phi = {coverage_coefficient(ruler):.6f}")
    if args.lags:
        for s in range(ruler.dim):
            print(f"  lag {s:3d}: {ruler.lag_sizes[s]} pairs")
    return 0


def cmd_simulate(args):
    T = random_toeplitz_covariance(args.d, args.cov_seed)
    ruler = resolve_ruler(args.ruler, args.d)
    raw = sample_complex_gaussian(T, ruler, args.n, args.seed)
    dr, di = _parse_delta(args.delta)
    spec = QuantizationSpec(dr, di, args.bits)
    batch = quantize_batch(raw, spec)
    save_batch(batch, args.out)
    print(f"wrote {args.out}: n={args.n}, ruler={ruler.to_string()}, {spec}")
    if args.truth_out:
        np.savetxt(args.truth_out, T.generators)
        print(f"wrote ground-truth generators to {args.truth_out}")
    return 0


def cmd_estimate(args):
    batch = load_batch(args.batch)
    truth = _load_truth(args.truth) if args.truth else None
    rows = [EstimationReport.CSV_HEADER]
    for name in args.estimator:
        if name == "qtscm":
            est = qtscm(batch)
        elif name == "qscm":
            est = qscm(batch)
        elif name == "qspa":
            sol = qspa_solve(quantized_sample_covariance(batch), batch.ruler,
                             batch.spec, n=batch.count)
            if args.qspa_trace:
                with open(args.qspa_trace, "w") as fh:
                    fh.write(sol.trace_csv())
            est = sol.T_breve
        else:
            raise QtcovError(f"unknown estimator {name!r}")
        err = relative_spectral_error(est, truth) if truth is not None else None
        report = EstimationReport(est, name, batch.spec, batch.ruler,
                                  batch.count, batch.seed, err)
        rows.append(report.csv_row())
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args):
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        if args.profile:
            cfg = cfg.__class__(**{**cfg.__dict__, "profile": args.profile})
    else:
        cfg = default_config(args.preset, profile=args.profile or "ci",
                             outdir=args.outdir or "results")
    if args.seed is not None:
        cfg = cfg.__class__(**{**cfg.__dict__, "seed": args.seed})
    if args.show_config:
        sys.stdout.write(config_to_text(cfg))
        return 0
    table = run_experiment(cfg)
    csv_path, svg_path = write_outputs(cfg, table, args.outdir)
    print(f"wrote {csv_path}" + (f" and {svg_path}" if svg_path else ""))
    return 0


def cmd_doa(args):
    if args.scene:
        with open(args.scene) as fh:
            cfg = parse_config(fh.read())
        scene = cfg.scene
        if scene is None:
            raise QtcovError("scene config lacks scene_* keys")
    else:
        from .harness import FIVE_SOURCE_SCENE
        scene = FIVE_SOURCE_SCENE
    ruler = resolve_ruler(args.ruler, scene.d)
    R = scene.covariance()
    raw = sample_complex_gaussian(R, ruler, args.n, args.seed)
    dr, di = _parse_delta(args.delta)
    spec = QuantizationSpec(dr, di, args.bits)
    batch = quantize_batch(raw, spec)
    if args.estimator == "qtscm":
        est = qtscm(batch)
    elif args.estimator == "qscm":
        est = qscm(batch)
    else:
        est = qspa_solve(quantized_sample_covariance(batch), ruler, spec,
                         n=args.n).T_breve
    resolved, freqs = estimate_frequencies(est, scene.k_sources, args.grid)
    print("estimated frequencies:", " ".join(f"{f:.6f}" for f in freqs))
    if not resolved:
        print("warning: degenerate spectrum, output padded with largest grid points")
    print("true frequencies:     ", " ".join(f"{f:.6f}" for f in scene.freqs))
    print(f"frequency mse: {frequency_mse(freqs, scene.freqs):.6e}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="qtcov",
                                description="Toeplitz covariance estimation from "
                                            "quantized sparse observations")
    p.add_argument("--version", action="version", version=f"qtcov {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("ruler", help="inspect or validate a ruler")
    pr.add_argument("--d", type=int, required=True)
    pr.add_argument("--ruler", required=True,
                    help='"full", "alpha:X", "A", "B", or a comma list of indices')
    pr.add_argument("--lags", action="store_true", help="print per-lag pair counts")
    pr.set_defaults(func=cmd_ruler)

    ps = sub.add_parser("simulate", help="generate and quantize a sample batch")
    ps.add_argument("--d", type=int, default=16)
    ps.add_argument("--ruler", default="full")
    ps.add_argument("--n", type=int, default=1000)
    ps.add_argument("--cov-seed", type=int, default=0,
                    help="seed of the random ground-truth covariance")
    ps.add_argument("--delta", default="1,1", help="delta_r,delta_i (or one value)")
    ps.add_argument("--bits", type=int, default=None)
    ps.add_argument("--out", "-o", required=True)
    ps.add_argument("--truth-out", default=None,
                    help="also write the true generators to this file")
    _add_common(ps)
    ps.set_defaults(func=cmd_simulate)

    pe = sub.add_parser("estimate", help="estimate a covariance from a batch file")
    pe.add_argument("--batch", required=True)
    pe.add_argument("--estimator", nargs="+", default=["qtscm"],
                    choices=["qtscm", "qscm", "qspa"])
    pe.add_argument("--truth", default=None, help="file of true generators")
    pe.add_argument("--out", "-o", default=None)
    pe.add_argument("--qspa-trace", default=None,
                    help="write the fitting solver's per-iteration trace CSV here")
    pe.set_defaults(func=cmd_estimate)

    px = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    group = px.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=["exp1", "exp2", "exp3a", "exp3b",
                                            "exp4", "exp4b", "exp5"])
    group.add_argument("--config", help="config file path")
    px.add_argument("--profile", choices=["ci", "full"], default=None)
    px.add_argument("--show-config", action="store_true",
                    help="print the resolved config and exit")
    px.add_argument("--seed", type=int, default=None)
    px.add_argument("--outdir", default=None)
    px.set_defaults(func=cmd_experiment)

    pd = sub.add_parser("doa", help="estimate source frequencies from one batch")
    pd.add_argument("--scene", default=None, help="scene config file (scene_* keys)")
    pd.add_argument("--ruler", default="alpha:0.5")
    pd.add_argument("--n", type=int, default=1000)
    pd.add_argument("--delta", default="2,2")
    pd.add_argument("--bits", type=int, default=2)
    pd.add_argument("--estimator", default="qspa", choices=["qtscm", "qscm", "qspa"])
    pd.add_argument("--grid", type=int, default=4096)
    _add_common(pd)
    pd.set_defaults(func=cmd_doa)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QtcovError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
