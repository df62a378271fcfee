"""Command-line entry point.

Subcommands: prox-curve, synth, inpaint, msi, replay. Every run writes a
JSON manifest next to its outputs; ``nnsr replay MANIFEST`` re-runs it.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .imaging import (
    DegradeSpec, ImageFormatError, ImagePlane, degrade, msi_stack, msi_unstack, psnr,
    read_image, salt_pepper, snr_db_to_density, ssim, write_image, write_metrics_json,
)
from .matrix import NumericError, ShapeError, cardinality
from .prox import prox_how, prox_l1, prox_welsch
from .solver import SolverConfig, nnsr_solve, write_trace_csv
from .synth import (
    RepeatResult, SweepCellError, SweepRow, SweepSpec, SyntheticSpec, make_problem, rre, run_sweep, rng_for,
    write_report_csv, write_report_json,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def write_manifest(path, command: str, args: dict, outputs: list, started: str, **extra) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seed": args.get("seed"),
        "args": args,
        "outputs": [str(p) for p in outputs],
        "started": started,
        "finished": _now(),
        **extra,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _solver_config(a) -> SolverConfig:
    try:
        return SolverConfig(lambda_c=a.lambda_c, sigma=a.sigma, sigma_ratio=a.sigma_ratio,
                            rho0=a.rho0, mu=a.mu, tol=a.tol, max_iter=a.max_iter)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _config_dict(cfg: SolverConfig) -> dict:
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}


# -- prox-curve ----------------------------------------------------------------

def cmd_prox_curve(a) -> int:
    if not a.step > 0:
        raise UsageError("--step must be > 0")
    if not a.xmin < a.xmax:
        raise UsageError("--xmin must be < --xmax")
    if not a.sigma_curve > 0 or a.lam < 0:
        raise UsageError("need --lambda >= 0 and --sigma > 0")
    started = _now()
    count = int(math.floor((a.xmax - a.xmin) / a.step + 1e-9)) + 1
    xs = np.round(a.xmin + a.step * np.arange(count), 12)
    ph = prox_how(xs, a.lam, a.sigma_curve)
    pl = prox_l1(xs, a.lam)
    pw = prox_welsch(xs, a.sigma_curve)
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "prox_how", "prox_l1", "prox_welsch"])
        for row in zip(xs, ph, pl, pw):
            w.writerow([repr(float(v)) for v in row])
    write_manifest(out.with_suffix(".manifest.json"), "prox-curve", vars_of(a), [out], started,
                   rows=count)
    return EXIT_OK


# -- synth ---------------------------------------------------------------------

def cmd_synth(a) -> int:
    if (a.sweep_axis is None) != (a.sweep_values is None):
        raise UsageError("--sweep-axis and --sweep-values must be given together")
    cfg = _solver_config(a)
    try:
        base = SyntheticSpec(m=a.m, n=a.n, r=a.rank, gamma=a.gamma, alpha=a.alpha,
                             beta=a.beta, seed=a.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    started = _now()
    out_dir = Path(a.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_csv, report_json = out_dir / "report.csv", out_dir / "report.json"
    outputs = [report_csv, report_json]
    extra: dict = {}

    if a.sweep_axis is None:
        prob = make_problem(base)
        res = nnsr_solve(prob.x, prob.mask, cfg)
        trace_csv = out_dir / "trace.csv"
        write_trace_csv(res.trace, trace_csv)
        outputs.insert(0, trace_csv)
        rep = RepeatResult(seed=base.seed, rre=rre(prob.truth, res.m), iterations=res.iterations,
                           converged=res.converged, seconds=0.0, observed=cardinality(prob.mask))
        rows = [SweepRow(axis="none", value=float("nan"), mean_rre=rep.rre,
                         mean_iters=float(rep.iterations), mean_seconds=0.0, repeats=[rep])]
        extra["solver"] = _config_dict(res.config)
    else:
        try:
            values = tuple(float(v) for v in a.sweep_values.split(",") if v.strip())
            sweep = SweepSpec(axis=a.sweep_axis, values=values, repeats=a.repeats,
                              base=base, solver=cfg)
            for v in values:
                sweep.cell(v)[0]  # validates each cell's spec
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        rows = run_sweep(sweep, workers=a.workers)
        extra["solver"] = _config_dict(cfg)

    write_report_csv(rows, report_csv, timing=a.timing)
    write_report_json(rows, report_json)
    write_manifest(out_dir / "manifest.json", "synth", vars_of(a), outputs, started, **extra)
    return EXIT_OK


# -- inpaint -------------------------------------------------------------------

def cmd_inpaint(a) -> int:
    cfg = _solver_config(a)
    try:
        spec = DegradeSpec(mask_kind=a.mask, gamma=a.gamma, stripe_width=a.stripe_width,
                           stripe_period=a.stripe_period,
                           stripe_orientation=a.stripe_orientation, outlier_frac=a.outlier_frac,
                           outlier_mag=a.outlier_mag, seed=a.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    started = _now()
    plane = read_image(a.input)
    deg = degrade(plane, spec)
    res = nnsr_solve(deg.x, deg.mask, cfg)
    # metrics are taken on the image exactly as exported
    recovered = ImagePlane(res.m, plane.source_depth).quantized()
    write_image(recovered, a.out)
    p, s = psnr(plane, recovered), ssim(plane, recovered)
    write_metrics_json(a.metrics, p, s)
    manifest = Path(a.manifest) if a.manifest else Path(a.out).with_suffix(".manifest.json")
    write_manifest(manifest, "inpaint", vars_of(a), [a.out, a.metrics], started,
                   solver=_config_dict(res.config), iterations=res.iterations,
                   converged=res.converged, observed=cardinality(deg.mask),
                   masked_columns=deg.masked_columns, outlier_count=deg.outlier_count,
                   psnr_db=p, ssim=s)
    return EXIT_OK


# -- msi -----------------------------------------------------------------------

def load_bands(band_dir) -> list[ImagePlane]:
    paths = sorted(Path(band_dir).glob("*.pgm")) + sorted(Path(band_dir).glob("*.ppm"))
    if not paths:
        raise ImageFormatError(f"no .pgm/.ppm band files in {band_dir}")
    bands = [read_image(p) for p in paths]
    shape = bands[0].pixels.shape
    for p, b in zip(paths, bands):
        if b.pixels.shape != shape:
            raise ImageFormatError(f"band {p.name} has shape {b.pixels.shape}, expected {shape}")
    return bands


def cmd_msi(a) -> int:
    if not 0 <= a.missing_frac < 1:
        raise UsageError("--missing-frac must lie in [0, 1)")
    cfg = _solver_config(a)
    started = _now()
    bands = load_bands(a.band_dir)
    h, w = bands[0].pixels.shape
    depth = max(b.source_depth for b in bands)
    clean = msi_stack(bands)
    density = 0.0 if a.snr_db is None else snr_db_to_density(a.snr_db)
    noisy = salt_pepper(clean, density, a.seed)
    if a.missing_frac > 0:
        mask = rng_for(a.seed, 30).random(clean.shape) >= a.missing_frac
    else:
        mask = np.ones(clean.shape, dtype=bool)
    res = nnsr_solve(np.where(mask, noisy, 0.0), mask, cfg)

    out_dir = Path(a.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    recovered = msi_unstack(np.clip(res.m, 0.0, 1.0), w, h, depth)
    outputs = []
    per_band = []
    for i, (ref, rec) in enumerate(zip(bands, recovered)):
        path = out_dir / f"band_{i:02d}.pgm"
        write_image(rec, path)
        outputs.append(path)
        per_band.append({"band": i, "psnr_db": psnr(ref, rec), "ssim": ssim(ref, rec)})
    band_csv = out_dir / "per_band.csv"
    with open(band_csv, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["band", "psnr_db", "ssim"])
        for row in per_band:
            wr.writerow([row["band"], repr(row["psnr_db"]), repr(row["ssim"])])
    metrics = out_dir / "metrics.json"
    mean_psnr = float(np.mean([r["psnr_db"] for r in per_band]))
    mean_ssim = float(np.mean([r["ssim"] for r in per_band]))
    write_metrics_json(metrics, mean_psnr, mean_ssim, per_band)
    write_manifest(out_dir / "manifest.json", "msi", vars_of(a),
                   [band_csv, metrics, *outputs], started,
                   solver=_config_dict(res.config), density=density,
                   iterations=res.iterations, converged=res.converged,
                   bands=len(bands), matrix_shape=list(clean.shape))
    return EXIT_OK


# -- replay --------------------------------------------------------------------

def cmd_replay(a) -> int:
    with open(a.manifest) as fh:
        manifest = json.load(fh)
    args = argparse.Namespace(**manifest["args"])
    return COMMANDS[manifest["command"]](args)


COMMANDS = {
    "prox-curve": cmd_prox_curve,
    "synth": cmd_synth,
    "inpaint": cmd_inpaint,
    "msi": cmd_msi,
    "replay": cmd_replay,
}


def vars_of(a) -> dict:
    return {k: v for k, v in vars(a).items() if k != "command"}


def _add_solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--lambda-c", type=float, default=1.0,
                   help="outlier weight lambda = c / sqrt(max(m, n))")
    g.add_argument("--sigma", type=float, default=None,
                   help="fixed kernel size; default scales with each threshold")
    g.add_argument("--sigma-ratio", type=float, default=math.sqrt(2.0))
    g.add_argument("--mu", type=float, default=1.05)
    g.add_argument("--rho0", type=float, default=None,
                   help="initial penalty; default 1.25 / s_max(X)")
    g.add_argument("--max-iter", type=int, default=1000)
    g.add_argument("--tol", type=float, default=1e-7)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nnsr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nnsr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prox-curve", help="export HOW / l1 / Welsch proximity curves")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--sigma", dest="sigma_curve", type=float, default=math.sqrt(2.0))
    p.add_argument("--xmin", type=float, default=-3.0)
    p.add_argument("--xmax", type=float, default=3.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="synthetic recovery run or parameter sweep")
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--rank", type=int, default=5)
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--sweep-axis", choices=["gamma", "alpha", "beta", "rank", "lambda_c"])
    p.add_argument("--sweep-values", help="comma-separated axis values")
    p.add_argument("--workers", type=int, default=None, help="default: $NNSR_THREADS or CPU count")
    p.add_argument("--timing", action="store_true",
                   help="fill mean_seconds in report.csv (makes it non-reproducible)")
    p.add_argument("--out-dir", required=True)
    _add_solver_flags(p)

    p = sub.add_parser("inpaint", help="degrade and restore a grayscale image")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", choices=["random", "stripe"], default="random")
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--stripe-width", type=int, default=4)
    p.add_argument("--stripe-period", type=int, default=16)
    p.add_argument("--stripe-orientation", choices=["vertical", "diagonal"],
                   default="vertical")
    p.add_argument("--outlier-frac", type=float, default=0.2)
    p.add_argument("--outlier-mag", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", required=True)
    p.add_argument("--manifest", default=None)
    _add_solver_flags(p)

    p = sub.add_parser("msi", help="multispectral restoration from a directory of band images")
    p.add_argument("--band-dir", required=True)
    p.add_argument("--missing-frac", type=float, default=0.2)
    p.add_argument("--snr-db", type=float, default=None,
                   help="salt-and-pepper at density 1/SNR; omit for no impulse noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _add_solver_flags(p)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"nnsr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, SweepCellError, ImageFormatError, ShapeError, OSError) as exc:
        print(f"nnsr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
