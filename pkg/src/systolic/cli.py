"""Command-line front end: constants, alpha curves, defect reports, verification, Pu curves."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import Profile, ProfileFormatError, SurfaceKind, SurfaceSpec, read_profile_csv
from .measure import curve_length
from .optimal import (ALPHA_KLEIN, ALPHA_RP2, ALPHA_TORUS, BETA0, BETA1, QUARTER_PI, DomainError,
                      optimal_profile, optimal_summary, phi0, pu_curve, sphere_chart)
from .projections import defect_report
from .systole import GridConfig, systole_estimate
from .verify import ALL_CRITERIA, VerifyConfig, alpha_curve_grid, check_user_profile, run_checks

OUT_DIR_ENV = "SYSTOLIC_OUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict = field(default_factory=dict)
    version: str = __version__
    timestamp: str = ""

    @classmethod
    def create(cls, command: str, parameters: dict) -> RunManifest:
        now = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return cls(command, dict(parameters), __version__, now)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RunManifest:
        return cls(**json.loads(text))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _resolve_out(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, out: str | None) -> None:
    p = _resolve_out(out)
    if p is None:
        sys.stdout.write(text)
    else:
        p.write_text(text)


def _json_report(manifest: RunManifest, body: dict) -> str:
    return json.dumps({"manifest": asdict(manifest), **body}, indent=2, default=str) + "\n"


def parse_grid(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 256x256, got {text!r}")
    if nx < 8 or ny < 8:
        raise argparse.ArgumentTypeError("grid sides must be at least 8")
    return nx, ny


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _grid_config(args) -> GridConfig:
    return GridConfig(args.grid[0], args.grid[1], args.stencil, (args.kmax, args.mmax))


def _surface(args) -> SurfaceSpec:
    if args.beta is None:
        raise UsageError("--beta is required")
    return SurfaceSpec(SurfaceKind(args.surface), args.beta)


def _load_profile(args, surface: SurfaceSpec) -> Profile:
    prof = read_profile_csv(args.profile)
    if not math.isclose(prof.beta, surface.beta, rel_tol=1e-9):
        raise UsageError(f"profile ends at y = {prof.beta}, expected beta = {surface.beta}")
    # snap the sample grid end exactly onto beta
    ys = np.array(prof.ys)
    ys[-1] = surface.beta
    return Profile.sampled(ys, prof.values)


# --- commands -----------------------------------------------------------------


def cmd_constants(args) -> int:
    values = {
        "beta0": BETA0,
        "beta1": BETA1,
        "quarter_pi": QUARTER_PI,
        "alpha_klein": ALPHA_KLEIN,
        "alpha_torus": ALPHA_TORUS,
        "alpha_rp2": ALPHA_RP2,
    }
    if args.json:
        text = json.dumps({k: float(f"{v:.15g}") for k, v in values.items()}, indent=2) + "\n"
    else:
        text = "".join(f"{k:12s} {v:.15g}\n" for k, v in values.items())
    _emit(text, args.out)
    return EXIT_OK


def cmd_alpha_curve(args) -> int:
    if not (0 < args.beta_min < args.beta_max):
        raise UsageError("need 0 < --beta-min < --beta-max")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beta", "case", "s_beta", "sys", "area", "alpha_sys"])
    for b in alpha_curve_grid(args.beta_min, args.beta_max, args.step):
        s = optimal_summary(SurfaceSpec(SurfaceKind(args.surface), float(b)))
        w.writerow([_fmt(float(b)), s.case_tag, _fmt(s.s_beta), _fmt(s.sys), _fmt(s.area),
                    _fmt(s.alpha_sys)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_systole(args) -> int:
    surface = _surface(args)
    grid = _grid_config(args)
    profile = _load_profile(args, surface) if args.profile else None
    if profile is None:
        profile = optimal_profile(surface)
    est = systole_estimate(surface, profile, grid)
    manifest = RunManifest.create("systole", {"surface": surface.kind.value, "beta": surface.beta,
                                              "grid": [grid.nx, grid.ny],
                                              "stencil": grid.neighbor_stencil,
                                              "profile": args.profile})
    body = {"systole": est.value, "word": str(est.word), "grid_value": est.grid_value,
            "note": est.discretization_note}
    if args.witness:
        est.witness.to_csv(_resolve_out(args.witness))
    _emit(_json_report(manifest, body), args.out)
    return EXIT_OK


def cmd_defect(args) -> int:
    surface = _surface(args)
    if not args.profile:
        raise UsageError("--profile is required")
    profile = _load_profile(args, surface)
    grid = _grid_config(args)
    report = defect_report(surface, profile, grid)
    sys_tol = args.tol if args.tol is not None else 0.02
    manifest = RunManifest.create("defect", {
        "surface": surface.kind.value, "beta": surface.beta, "profile": args.profile,
        "grid": list(args.grid), "stencil": args.stencil, "kmax": args.kmax, "mmax": args.mmax,
        "systole_tol": sys_tol})
    body = {"report": report.to_dict(), "budget": report.budget(sys_tol=sys_tol)}
    _emit(_json_report(manifest, body), args.out)
    return EXIT_OK


def _parse_criteria(text: str | None) -> tuple[int, ...]:
    if not text:
        return ALL_CRITERIA
    try:
        vals = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"--checks expects comma separated integers, got {text!r}")
    bad = [v for v in vals if v not in ALL_CRITERIA]
    if bad:
        raise UsageError(f"unknown criteria {bad}")
    return vals


def cmd_verify(args) -> int:
    criteria = _parse_criteria(args.checks)
    cfg = VerifyConfig(grid=args.grid, stencil=args.stencil, word_bounds=(args.kmax, args.mmax),
                       suite_grid=args.suite_grid,
                       sys_tol=args.tol if args.tol is not None else 0.02,
                       trials=args.trials, seed=args.seed)
    user = None
    if args.profile:
        surface = _surface(args)
        user = (surface, _load_profile(args, surface))

    def progress(res):
        print(res.line(), file=sys.stderr)

    results = run_checks(cfg, criteria, progress) if criteria else []
    if user is not None:
        res = check_user_profile(cfg, *user, label=args.profile)
        progress(res)
        results.append(res)
    manifest = RunManifest.create("verify", {**asdict(cfg), "checks": list(criteria),
                                             "profile": args.profile})
    passed = all(r.passed for r in results)
    body = {"passed": passed, "checks": [asdict(r) for r in results]}
    _emit(_json_report(manifest, body), args.out)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_export_curves(args) -> int:
    beta = args.beta
    if beta is None:
        raise UsageError("--beta is required")
    taus = args.taus
    for t in taus:
        if not 0 <= t < beta:
            raise DomainError(f"need 0 <= tau < beta, got tau={t}")
    base = os.environ.get(OUT_DIR_ENV, ".")
    out_dir = Path(args.out_dir) if args.out_dir else Path(base)
    out_dir.mkdir(parents=True, exist_ok=True)
    g0 = Profile.expression(beta, phi0, "phi0")
    surface = SurfaceSpec.mobius(beta)
    summary = io.StringIO()
    w = csv.writer(summary, lineterminator="\n")
    w.writerow(["tau", "g0_length", "sphere_polyline_length", "endpoint_sum_norm", "strip_file",
                "sphere_file"])
    for i, t in enumerate(taus):
        curve = pu_curve(beta, t, args.resolution)
        strip_file = out_dir / f"pu_curve_{i:02d}_strip.csv"
        sphere_file = out_dir / f"pu_curve_{i:02d}_sphere.csv"
        curve.to_csv(strip_file)
        # centre the curve on x = 0 so it lies in the chart's domain
        pts = curve.vertices - np.array([0.5 * math.pi, 0.0])
        xyz = sphere_chart(beta, pts)
        with open(sphere_file, "w", newline="") as fh:
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(["X", "Y", "Z"])
            cw.writerows([[_fmt(float(c)) for c in row] for row in xyz])
        length = curve_length(surface, g0, curve)
        poly = float(np.sum(np.linalg.norm(np.diff(xyz, axis=0), axis=1)))
        ends = float(np.linalg.norm(xyz[0] + xyz[-1]))
        w.writerow([_fmt(float(t)), _fmt(length), _fmt(poly), _fmt(ends), strip_file.name,
                    sphere_file.name])
    (out_dir / "pu_curves.csv").write_text(summary.getvalue())
    sys.stdout.write(summary.getvalue())
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def _add_surface(p, beta_required=False):
    p.add_argument("--surface", choices=[k.value for k in SurfaceKind], default="klein")
    p.add_argument("--beta", type=_positive, required=beta_required)


def _add_grid(p, default=(256, 256)):
    p.add_argument("--grid", type=parse_grid, default=default, metavar="NXxNY")
    p.add_argument("--stencil", type=int, choices=(8, 16, 32), default=16)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--mmax", type=int, default=2)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="systolic", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print the threshold widths and systolic constants")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("alpha-curve", help="CSV of the optimal systolic area against beta")
    p.add_argument("--surface", choices=[k.value for k in SurfaceKind], default="klein")
    p.add_argument("--beta-min", type=_positive, default=0.2)
    p.add_argument("--beta-max", type=_positive, default=3.0)
    p.add_argument("--step", type=_positive, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_alpha_curve)

    p = sub.add_parser("systole", help="grid systole estimate of a profile (default: optimal)")
    _add_surface(p, beta_required=True)
    _add_grid(p)
    p.add_argument("--profile", help="CSV with header y,phi")
    p.add_argument("--witness", help="write the witness polyline CSV here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_systole)

    p = sub.add_parser("defect", help="JSON defect report for a profile CSV")
    _add_surface(p, beta_required=True)
    _add_grid(p)
    p.add_argument("--profile", required=True, help="CSV with header y,phi")
    p.add_argument("--tol", type=_positive, help="relative systole tolerance for the budget")
    p.add_argument("--out")
    p.set_defaults(func=cmd_defect)

    p = sub.add_parser("verify", help="run the acceptance checks")
    _add_surface(p)
    _add_grid(p)
    p.add_argument("--suite-grid", type=parse_grid, default=(128, 128), metavar="NXxNY")
    p.add_argument("--tol", type=_positive, help="relative systole tolerance (default 0.02)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--checks", help="comma separated criterion numbers (default: all)")
    p.add_argument("--profile", help="also check the defect invariants of this profile CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-curves", help="write Pu curves in strip and sphere coordinates")
    p.add_argument("--beta", type=_positive, required=True)
    p.add_argument("--taus", type=_float_list, default=[0.0, 0.25, 0.5, 0.75])
    p.add_argument("--resolution", type=int, default=257)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_export_curves)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProfileFormatError as exc:
        print(f"profile error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
