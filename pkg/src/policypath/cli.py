"""Command-line entry point: ``policypath {train,analyze-change,analyze-svd,recon-check}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import path_metrics as pm
from .archive import read_path, write_csv, write_path
from .config import load_run_config
from .errors import InvalidConfig, InvalidRank, PolicyPathError
from .svd_analysis import DEFAULT_BETA_GRID, coordinate_curves, info_profile, path_svd

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DATA = 0, 2, 3, 4

log = logging.getLogger("policypath")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory {out}: {exc}") from None
    return out


def _load_archive(path: str) -> pm.ParameterPath:
    try:
        return read_path(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read archive {path}: {exc}") from None
    except PolicyPathError as exc:
        raise CliError(EXIT_DATA, f"malformed archive {path}: {exc}") from None


def _load_config(path: str):
    try:
        return load_run_config(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {path}: {exc}") from None
    except InvalidConfig as exc:
        raise CliError(EXIT_CONFIG, f"invalid config {path}: {exc}") from None


def _layer_views(path: pm.ParameterPath, layer: Optional[str]) -> list[tuple[str, pm.ParameterPath]]:
    if layer is not None:
        try:
            return [(layer, pm.slice_layer(path, layer))]
        except pm.UnknownLayer as exc:
            raise CliError(EXIT_CONFIG, str(exc)) from None
    return [(seg.name, pm.slice_layer(path, seg.name)) for seg in path.layers]


def _hist_rows(hist: pm.Histogram):
    return [(lo, hi, c) for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts)]


def _cdf_rows(hist: pm.Histogram):
    return [(hi, f) for hi, f in zip(hist.edges[1:], hist.cdf)]


def cmd_train(args) -> int:
    from .harness.training import train

    config = _load_config(args.config)
    out = _out_dir(args.out_dir)
    result = train(config)
    report = result.report
    try:
        write_path(result.path, out / "path.ppath")
        write_csv(out / "eval.csv", ["step", "avg_return"], report.checkpoints)
        write_csv(
            out / "summary.csv",
            ["seed", "score", "auc", "random_baseline", "transforms"],
            [(config.seed, report.score, report.auc, report.random_baseline, len(result.transforms))],
        )
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write results: {exc}") from None
    log.info("score %.4f auc %.4f (%d transforms)", report.score, report.auc, len(result.transforms))
    return EXIT_OK


def cmd_analyze_change(args) -> int:
    path = _load_archive(args.archive)
    out = _out_dir(args.out_dir)
    views = _layer_views(path, args.layer)
    if args.layer is None:
        views = [("all", path)] + views
    for name, sub in views:
        try:
            report = pm.change_report(sub)
        except pm.PathTooShort as exc:
            raise CliError(EXIT_DATA, str(exc)) from None
        apc_hist = pm.histogram(report.apc, args.bins)
        keep = pm.filter_top_fraction(np.arange(sub.m), report.apc, args.top_fraction)
        pud = report.pud[keep].compressed()
        pud = pm.clip_extremes(pud, args.clip_quantile)
        write_csv(out / f"{name}_apc_hist.csv", ["bin_left", "bin_right", "count"], _hist_rows(apc_hist))
        write_csv(out / f"{name}_apc_cdf.csv", ["bin_right", "cdf"], _cdf_rows(apc_hist))
        if pud.size:
            pud_hist = pm.histogram(pud, args.bins)
            write_csv(out / f"{name}_pud_hist.csv", ["bin_left", "bin_right", "count"], _hist_rows(pud_hist))
            write_csv(out / f"{name}_pud_cdf.csv", ["bin_right", "cdf"], _cdf_rows(pud_hist))
        else:
            write_csv(out / f"{name}_pud_hist.csv", ["bin_left", "bin_right", "count"], [])
            write_csv(out / f"{name}_pud_cdf.csv", ["bin_right", "cdf"], [])
    return EXIT_OK


def cmd_analyze_svd(args) -> int:
    path = _load_archive(args.archive)
    out = _out_dir(args.out_dir)
    grid = args.beta_grid
    try:
        info_profile([1.0], grid)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"--beta-grid: {exc}") from None
    if args.periods < 1:
        raise CliError(EXIT_CONFIG, "--periods must be >= 1")
    if args.layer is None:
        views = [("all", path)] + _layer_views(path, None)
    else:
        views = _layer_views(path, args.layer)
    labels = ["early", "middle", "later"] if args.periods == 3 else [f"p{k + 1}" for k in range(args.periods)]
    try:
        for name, sub in views:
            rows = []
            for label, part in zip(labels, pm.split_periods(sub, args.periods)):
                prof = info_profile(path_svd(part).sigma, grid)
                rows.extend((label, b, k) for b, k in zip(prof.thresholds, prof.major_dims))
            write_csv(out / f"{name}_major_dims.csv", ["period", "beta", "major_dims"], rows)

            svd = path_svd(sub)
            curves = coordinate_curves(svd)
            k = min(args.directions, svd.d)
            header = ["step"] + [f"u{j + 1}" for j in range(k)]
            write_csv(out / f"{name}_u_curves.csv", header,
                      ([s] + list(row[:k]) for s, row in zip(sub.steps, curves.curves)))
            detour = curves.per_direction_detour
            write_csv(
                out / f"{name}_u_directions.csv",
                ["direction", "sigma", "info_amount", "detour_ratio", "final_change"],
                (
                    (j + 1, svd.sigma[j], prof_all, None if detour.mask[j] else float(detour.data[j]),
                     curves.per_direction_final_change[j])
                    for j, prof_all in zip(range(k), info_profile(svd.sigma, grid).info_amount)
                ),
            )
    except pm.PathTooShort as exc:
        raise CliError(EXIT_DATA, str(exc)) from None
    return EXIT_OK


def cmd_recon_check(args) -> int:
    from .harness.training import reconstruction_check

    path = _load_archive(args.archive)
    config = _load_config(args.config)
    out = _out_dir(args.out_dir)
    policies = range(0, path.n, args.stride)
    try:
        rows = reconstruction_check(path, args.rt_grid, args.episodes, config, policies=policies, eval_seed=config.seed)
    except InvalidRank as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    except (pm.PathTooShort, ValueError) as exc:
        raise CliError(EXIT_DATA, str(exc)) from None
    write_csv(
        out / "recon_check.csv",
        ["major_dims", "avg_delta", "avg_delta_std", "avg_abs_delta", "avg_abs_delta_std", "max_delta", "min_delta"],
        ((r.r_t, r.avg, r.avg_std, r.avg_abs, r.avg_abs_std, r.max, r.min) for r in rows),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="policypath", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one seeded run and write its path archive and reports")
    p.add_argument("config")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze-change", help="per-parameter change and detour histograms")
    p.add_argument("archive")
    p.add_argument("out_dir")
    p.add_argument("--layer")
    p.add_argument("--top-fraction", type=float, default=pm.DEFAULT_TOP_FRACTION)
    p.add_argument("--clip-quantile", type=float, default=pm.DEFAULT_CLIP_QUANTILE)
    p.add_argument("--bins", type=int, default=pm.DEFAULT_BINS)
    p.set_defaults(func=cmd_analyze_change)

    p = sub.add_parser("analyze-svd", help="major-dimensionality curves and left-coordinate curves")
    p.add_argument("archive")
    p.add_argument("out_dir")
    p.add_argument("--layer")
    p.add_argument("--periods", type=int, default=3)
    p.add_argument("--beta-grid", type=_float_list, default=list(DEFAULT_BETA_GRID))
    p.add_argument("--directions", type=int, default=8)
    p.set_defaults(func=cmd_analyze_svd)

    p = sub.add_parser("recon-check", help="return change of rank-r_t reconstructions")
    p.add_argument("archive")
    p.add_argument("config")
    p.add_argument("out_dir")
    p.add_argument("--rt-grid", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64, 128])
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--stride", type=int, default=1, help="check every k-th stored policy")
    p.set_defaults(func=cmd_recon_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if getattr(args, "bins", 1) < 1 or not 0 < getattr(args, "top_fraction", 1) <= 1 \
            or not 0 < getattr(args, "clip_quantile", 1) <= 1:
        print("error: --bins >= 1, --top-fraction and --clip-quantile in (0, 1] required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
