"""Command-line front end: profile ingestion, region sweeps, comparisons.

All human-facing gains are in dB; internal math is linear.  Outputs are
tidy CSV/JSON (UTF-8, LF, '.' decimal) meant for downstream plotting; runs
are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import BoundaryPoint, Mode, RegionBoundary, TdfdPlan, mix_for_target
from .linkmodel import (
    LinkGains,
    PowerAllocation,
    RatePair,
    Tolerances,
    linear_to_db,
    max_rates,
    rate_improvement,
)
from .mcfixed import DiscretePowerGrid, max_rates_fixed, mc_corner_rates, tdfd_region_fixed
from .mcgeneral import altmax, pa_heuristic, restriction_bounds, sum_rate_max, tdfd_region_general
from .profiles import MS_PROFILES, synthetic_gains
from .singlechannel import classify_shape_rm, corner_rates, region_is_convex, tdfd_boundary_rm

__all__ = ["RunConfig", "ProfileError", "ingest_profile", "emit_profile", "run_region", "run_compare", "run_improve", "main"]

_PROFILE_HEADER = ["channel", "gamma_bm_db", "gamma_mb_db", "gamma_mm_db", "gamma_bb_db"]

MODES = ("single", "fixed", "general-altmax", "general-heuristic")


class ProfileError(ValueError):
    """Malformed gain profile file."""


@dataclass
class RunConfig:
    """One region/comparison run.

    Exactly one gains source: `profile` (CSV path) or `gains_db` (four dB
    values, a K=1 instance).  The sweep is either `n_points` evenly spaced
    downlink targets or an explicit `rb_list`.
    """

    mode: str = "single"
    profile: Optional[Path] = None
    gains_db: Optional[Tuple[float, float, float, float]] = None
    n_points: Optional[int] = 41
    rb_list: Optional[Tuple[float, ...]] = None
    eps: float = 1e-6
    restarts: int = 8
    seed: int = 42
    jobs: int = 1
    out_dir: Path = Path(".")
    fmt: str = "csv"
    debug_hull: bool = False
    levels: int = 0  # fixed mode: >0 switches to the discrete-power TDFD hull

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if (self.profile is None) == (self.gains_db is None):
            raise ValueError("exactly one gains source (profile or inline dB values)")
        if self.rb_list is None and (self.n_points is None or self.n_points < 2):
            raise ValueError("n_points must be at least 2")
        if self.fmt not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    def tolerances(self) -> Tolerances:
        return Tolerances(eps_rate=self.eps, max_iters=400)

    def load_gains(self) -> LinkGains:
        if self.profile is not None:
            return ingest_profile(self.profile)
        return LinkGains.from_db(*[[v] for v in self.gains_db])


def ingest_profile(path) -> LinkGains:
    """Parse a per-channel dB gain profile CSV.

    Expects the header channel,gamma_bm_db,gamma_mb_db,gamma_mm_db,
    gamma_bb_db with contiguous channel numbers 1..K; malformed content
    raises ProfileError naming the offending row.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ProfileError(f"{path}: empty file")
        if [h.strip() for h in header] != _PROFILE_HEADER:
            raise ProfileError(f"{path}: expected header {','.join(_PROFILE_HEADER)}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise ProfileError(f"{path}:{i}: expected 5 columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ProfileError(f"{path}:{i}: non-numeric cell")
    if not rows:
        raise ProfileError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    channels = [int(r[0]) for r in rows]
    if channels != list(range(1, len(rows) + 1)):
        raise ProfileError(f"{path}: channels must be contiguous 1..K, got {channels}")
    arr = np.array(rows)
    return LinkGains.from_db(arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4])


def emit_profile(path, g: LinkGains) -> None:
    """Write a gain profile CSV (inverse of ingest_profile)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_PROFILE_HEADER)
        for k in range(g.K):
            w.writerow(
                [k + 1]
                + [repr(float(linear_to_db(v[k]))) for v in (g.gamma_bm, g.gamma_mb, g.gamma_mm, g.gamma_bb)]
            )


def _alloc_json(a: Optional[PowerAllocation]):
    if a is None:
        return None
    return {"alpha_b": [float(x) for x in a.alpha_b], "alpha_m": [float(x) for x in a.alpha_m]}


def _plan_json(plan: TdfdPlan):
    if plan.endpoints is not None:
        return {
            "endpoints": [
                {"rb": p.r_b, "rm": p.r_m, **(_alloc_json(p.allocation) or {})}
                for p in plan.endpoints
            ],
            "lambda": plan.lam,
        }
    return _alloc_json(plan.point.allocation if plan.point else None)


@dataclass
class _Row:
    rb: float
    rm: float
    mode: str
    lam: Optional[float]
    alphas: dict | None


def _rows_from_hull(hull: RegionBoundary, targets: Sequence[float]) -> List[_Row]:
    rows = []
    for rb in targets:
        rb_c = min(max(rb, hull.rb()[0]), hull.rb()[-1])
        rm, plan = mix_for_target(hull, rb_c)
        rows.append(_Row(rb_c, rm, plan.mode.value if plan.endpoints else Mode.FD.value,
                         plan.lam, _plan_json(plan)))
    return rows


def _general_point(args):
    g, rb, method, eps, restarts, seed = args
    tol = Tolerances(eps_rate=eps, max_iters=400)
    if method == "altmax":
        res = altmax(g, rb, tol, restarts=restarts, seed=seed)
        return (res.rates.r_b, res.rates.r_m, res.allocation, res.iterations)
    rm, alloc, _ = pa_heuristic(g, rb, tol)
    from .linkmodel import rate_dl  # local to keep worker imports light

    return (rate_dl(g, alloc), rm, alloc, 0)


def _targets(cfg: RunConfig, rb_max: float) -> List[float]:
    if cfg.rb_list is not None:
        bad = [x for x in cfg.rb_list if not (0.0 <= x <= rb_max + 1e-9)]
        if bad:
            raise ValueError(f"rb targets {bad} outside [0, {rb_max}]")
        return sorted(cfg.rb_list)
    return list(np.linspace(0.0, rb_max, cfg.n_points))


def _is_convex_polyline(rbs: np.ndarray, rms: np.ndarray, tol: float = 1e-9) -> bool:
    if len(rbs) < 3:
        return True
    slopes = np.diff(rms) / np.maximum(np.diff(rbs), 1e-300)
    return bool(np.all(np.diff(slopes) <= tol))


def _write_rows(path: Path, rows: List[_Row], fmt: str) -> None:
    if fmt == "json":
        payload = [
            {"rb": r.rb, "rm": r.rm, "mode": r.mode, "lambda": r.lam, "alphas": r.alphas}
            for r in rows
        ]
        path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rb", "rm", "mode", "lambda", "alphas_json"])
        for r in rows:
            w.writerow(
                [
                    repr(r.rb),
                    repr(r.rm),
                    r.mode,
                    "" if r.lam is None else repr(r.lam),
                    json.dumps(r.alphas, sort_keys=True, separators=(",", ":")),
                ]
            )


def run_region(cfg: RunConfig) -> int:
    """Sweep the region boundary per cfg; writes region.csv/json + summary.json.

    Returns the process exit status (0 on success).
    """
    g = cfg.load_gains()
    tol = cfg.tolerances()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats: dict = {"mode": cfg.mode, "restarts": cfg.restarts, "eps": cfg.eps}
    shape_class = None
    convex: bool

    if cfg.mode == "single":
        if g.K != 1:
            raise ValueError("single mode requires a K=1 instance")
        r_bar_b, r_bar_m, _, _ = max_rates(g, tol)
        cr = corner_rates(g)
        shape_class = classify_shape_rm(g).kind.value
        convex = region_is_convex(g)
        rows = []
        for rb in _targets(cfg, r_bar_b):
            rm, plan = tdfd_boundary_rm(g, rb, tol, debug_hull_check=cfg.debug_hull)
            rows.append(_Row(rb, rm, plan.mode.value, plan.lam, _plan_json(plan)))
    elif cfg.mode == "fixed":
        r_bar_b, r_bar_m = max_rates_fixed(g)
        cr = mc_corner_rates(g)
        targets = _targets(cfg, r_bar_b)
        if cfg.levels > 0:
            grid = DiscretePowerGrid(tuple((i + 1) / cfg.levels for i in range(cfg.levels)))
            hull = tdfd_region_fixed(g, grid, tol)
            rows = _rows_from_hull(hull, targets)
        else:
            from .mcfixed import mcfind_rm

            rows = []
            for rb in targets:
                rm, alloc = mcfind_rm(g, rb, tol)
                rows.append(_Row(rb, rm, Mode.FD.value, None, _alloc_json(alloc)))
        convex = _is_convex_polyline(np.array([r.rb for r in rows]), np.array([r.rm for r in rows]))
    else:
        method = "altmax" if cfg.mode == "general-altmax" else "heuristic"
        r_bar_b, r_bar_m, alloc_b, alloc_m = max_rates(g, tol)
        corner, _ = sum_rate_max(g, tol)
        cr = corner
        targets = _targets(cfg, r_bar_b)
        work = [(g, rb, method, cfg.eps, cfg.restarts, cfg.seed) for rb in targets]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
                results = list(ex.map(_general_point, work))
        else:
            results = [_general_point(w) for w in work]
        pts = [
            BoundaryPoint(0.0, r_bar_m, alloc_m, Mode.FD),
            BoundaryPoint(r_bar_b, 0.0, alloc_b, Mode.FD),
        ]
        iters_total = 0
        for rb, rm, alloc, iters in results:
            pts.append(BoundaryPoint(rb, rm, alloc, Mode.FD))
            iters_total += iters
        from .geometry import upper_hull

        hull = upper_hull(pts, source="tdfd")
        rows = _rows_from_hull(hull, targets)
        stats["iterations_total"] = iters_total
        convex = True  # hull output by construction

    p_max = 0.0
    for r in rows:
        if r_bar_b > 0 and r_bar_m > 0:
            p_max = max(p_max, rate_improvement(RatePair(r.rb, r.rm), r_bar_b, r_bar_m))
    stats["points"] = len(rows)

    region_path = out / ("region.csv" if cfg.fmt == "csv" else "region.json")
    _write_rows(region_path, rows, cfg.fmt)
    summary = {
        "r_bar_b": r_bar_b,
        "r_bar_m": r_bar_m,
        "s_b": cr.s_b,
        "s_m": cr.s_m,
        "shape_class": shape_class,
        "convex": convex,
        "max_rate_improvement": p_max,
        "solver_stats": stats,
        "seed": cfg.seed,
    }
    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    return 0


def run_compare(cfg: RunConfig) -> int:
    """Head-to-head of the two general-power solvers; writes compare.csv."""
    g = cfg.load_gains()
    tol = cfg.tolerances()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    r_bar_b, _, _, _ = max_rates(g, tol)
    corner, _ = sum_rate_max(g, tol)
    targets = _targets(cfg, r_bar_b)
    rows = []
    for rb in targets:
        res = altmax(g, rb, tol, restarts=cfg.restarts, seed=cfg.seed)
        rm_h, _, _ = pa_heuristic(g, rb, tol)
        side = "below_sb" if rb <= corner.s_b else "above_sb"
        restrictive = restriction_bounds(g, side).restrictive
        rows.append((rb, res.rates.r_m, rm_h, rm_h - res.rates.r_m, restrictive))
    path = out / "compare.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rb", "rm_altmax", "rm_heuristic", "gap", "c1c2_restrictive"])
        for rb, rma, rmh, gap, restr in rows:
            w.writerow([repr(float(rb)), repr(float(rma)), repr(float(rmh)), repr(float(gap)), str(restr).lower()])
    return 0


def run_improve(cfg: RunConfig, snr_db_grid: Sequence[float]) -> int:
    """Max rate improvement over an SNR grid; writes improve.csv.

    Each cell re-synthesizes the instance with flat per-channel SNRs at the
    grid value (profiles keep their XINR rows) and reports the largest rate
    improvement along that instance's boundary.
    """
    g0 = cfg.load_gains()
    tol = cfg.tolerances()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = g0.K
    rows = []
    for bm_db in snr_db_grid:
        for mb_db in snr_db_grid:
            g = LinkGains(
                np.full(k, k * 10 ** (bm_db / 10.0)),
                np.full(k, k * 10 ** (mb_db / 10.0)),
                g0.gamma_mm,
                g0.gamma_bb,
            )
            if cfg.mode == "single":
                if k != 1:
                    raise ValueError("single mode requires a K=1 instance")
                r_bar_b, r_bar_m, _, _ = max_rates(g, tol)
                p = 0.0
                for rb in np.linspace(0.0, r_bar_b, cfg.n_points or 41):
                    rm, _ = tdfd_boundary_rm(g, rb, tol)
                    p = max(p, rate_improvement(RatePair(rb, rm), r_bar_b, r_bar_m))
            else:
                r_bar_b, r_bar_m = max_rates_fixed(g)
                from .mcfixed import mcfind_rm

                p = 0.0
                for rb in np.linspace(0.0, r_bar_b, cfg.n_points or 41):
                    rm, _ = mcfind_rm(g, rb, tol)
                    p = max(p, rate_improvement(RatePair(rb, rm), r_bar_b, r_bar_m))
            rows.append((bm_db, mb_db, p))
    path = out / "improve.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma_bm_db", "gamma_mb_db", "p_max"])
        for bm, mb, p in rows:
            w.writerow([repr(float(bm)), repr(float(mb)), repr(float(p))])
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=MODES, default="single")
    p.add_argument("--profile", type=Path, help="per-channel dB gain profile CSV")
    p.add_argument("--gamma-bm-db", type=float, help="DL SNR, dB (K=1 inline instance)")
    p.add_argument("--gamma-mb-db", type=float, help="UL SNR, dB")
    p.add_argument("--gamma-mm-db", type=float, help="MS XINR, dB")
    p.add_argument("--gamma-bb-db", type=float, help="BS XINR, dB")
    p.add_argument("--points", type=int, default=41, help="sweep point count")
    p.add_argument("--rb-list", type=str, help="comma-separated downlink targets")
    p.add_argument("--eps", type=float, default=1e-6, help="additive rate tolerance")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--debug-hull", action="store_true")
    p.add_argument("--levels", type=int, default=0, help="fixed mode: discrete power levels for the TDFD hull")


def _cfg_from_args(args) -> RunConfig:
    inline = [args.gamma_bm_db, args.gamma_mb_db, args.gamma_mm_db, args.gamma_bb_db]
    has_inline = any(v is not None for v in inline)
    if has_inline and any(v is None for v in inline):
        raise ValueError("all four --gamma-*-db values are required together")
    rb_list = None
    if args.rb_list:
        rb_list = tuple(float(x) for x in args.rb_list.split(","))
    return RunConfig(
        mode=args.mode,
        profile=args.profile,
        gains_db=tuple(inline) if has_inline else None,
        n_points=args.points,
        rb_list=rb_list,
        eps=args.eps,
        restarts=args.restarts,
        seed=args.seed,
        jobs=args.jobs,
        out_dir=args.out,
        fmt=args.format,
        debug_hull=args.debug_hull,
        levels=args.levels,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="fdcap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_region = sub.add_parser("region", help="sweep a capacity-region boundary")
    _add_common(p_region)

    p_cmp = sub.add_parser("compare", help="general-power solvers head to head")
    _add_common(p_cmp)

    p_imp = sub.add_parser("improve", help="rate-improvement heatmap over an SNR grid")
    _add_common(p_imp)
    p_imp.add_argument("--snr-min-db", type=float, default=0.0)
    p_imp.add_argument("--snr-max-db", type=float, default=50.0)
    p_imp.add_argument("--snr-steps", type=int, default=6)

    p_gen = sub.add_parser("gen-profile", help="write a synthetic gain profile CSV")
    p_gen.add_argument("--channels", type=int, default=52)
    p_gen.add_argument("--snr-dl-db", type=float, default=40.0)
    p_gen.add_argument("--snr-ul-db", type=float, default=40.0)
    p_gen.add_argument("--ms-profile", choices=sorted(MS_PROFILES), default="wideband")
    p_gen.add_argument("--out", type=Path, required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "gen-profile":
            g = synthetic_gains(args.channels, args.snr_dl_db, args.snr_ul_db, args.ms_profile)
            emit_profile(args.out, g)
            return 0
        cfg = _cfg_from_args(args)
        if args.command == "region":
            return run_region(cfg)
        if args.command == "compare":
            return run_compare(cfg)
        grid = list(np.linspace(args.snr_min_db, args.snr_max_db, args.snr_steps))
        return run_improve(cfg, grid)
    except (ValueError, ProfileError, FileNotFoundError) as exc:
        print(f"fdcap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
