"""Command line: ``rtdiffraction {predict,simulate,compare,render} --config PATH``.

Exit codes: 0 success, 1 a comparison check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from ._validation import ValidationError
from .config import RunConfig
from .experiments import run_compare, run_predict, run_simulate
from .io import write_comb_csv, write_intensity_csv, write_peaks_json, write_pgm

__all__ = ["main", "builtin_configs", "resolve_config"]

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def builtin_configs() -> list:
    """Names of the configurations shipped with the package."""
    root = resources.files("rtdiffraction") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def resolve_config(name: str) -> str:
    """A path as given, or the shipped configuration of that name."""
    if os.path.exists(name):
        return name
    cand = resources.files("rtdiffraction") / "configs" / (name if name.endswith(".ini") else name + ".ini")
    if cand.is_file():
        return str(cand)
    raise ValidationError(f"no config file or shipped config named {name!r}")


def _json_ready(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if k.startswith("_"):
            continue
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, complex):
            v = [v.real, v.imag]
        out[k] = v
    return out


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=float)
        fh.write("\n")


def _write_grid(out, stem, grid, values, meta):
    write_intensity_csv(os.path.join(out, stem + ".csv"), grid, values)
    if grid.dimension == 2:
        write_pgm(os.path.join(out, stem + ".pgm"), np.asarray(values).reshape(grid.shape), meta)


def _window_box(grid):
    lo = np.array(grid.origin)
    hi = lo + np.array(grid.step) * (np.array(grid.counts) - 1)
    return lo, hi


def cmd_predict(cfg: RunConfig, out: str) -> int:
    pred = run_predict(cfg)
    if pred.peaks is not None:
        if pred.grid is not None:
            lo, hi = _window_box(pred.grid)
            write_peaks_json(os.path.join(out, "peaks.json"), pred.peaks, lo, hi)
        else:
            write_peaks_json(os.path.join(out, "peaks.json"), pred.peaks)
    if pred.density is not None:
        _write_grid(out, "density", pred.grid, pred.density,
                    {"kind": "diffuse density", "origin": pred.grid.origin, "step": pred.grid.step})
    _dump(os.path.join(out, "predict.json"),
          {"quantities": _json_ready(pred.quantities), "config": cfg.effective()})
    for k, v in _json_ready(pred.quantities).items():
        print(f"{k} = {v}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: str) -> int:
    sim = run_simulate(cfg)
    for g in sim.grids:
        stem = f"intensity_vol{g.volume:g}"
        _write_grid(out, stem, g.grid, g.values,
                    {"kind": "periodogram", "volume": g.volume, "samples": g.n_samples,
                     "origin": g.grid.origin, "step": g.grid.step})
    if sim.image_grid is not None and all(sim.image_grid is not g for g in sim.grids):
        g = sim.image_grid
        _write_grid(out, "intensity_fine", g.grid, g.values,
                    {"kind": "periodogram", "volume": g.volume, "samples": g.n_samples})
    if sim.comb is not None:
        write_comb_csv(os.path.join(out, "comb.csv"), sim.comb)
    _dump(os.path.join(out, "simulate.json"),
          {"summary": _json_ready(sim.summary), "config": cfg.effective()})
    for k, v in _json_ready(sim.summary).items():
        print(f"{k} = {v}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out: str) -> int:
    checks, pred, sim, secs = run_compare(cfg)
    ok = all(c.passed for c in checks)
    report = {
        "family": cfg.family,
        "seed": cfg.seed,
        "passed": ok,
        "checks": [c.as_dict() for c in checks],
        "quantities": _json_ready(pred.quantities) if pred is not None else {},
        "summary": _json_ready(sim.summary) if sim is not None else {},
        "config": cfg.effective(),
    }
    _dump(os.path.join(out, "report.json"), report)
    lines = [c.line() for c in checks]
    lines.append(f"{'PASS' if ok else 'FAIL'}  overall ({sum(c.passed for c in checks)}/{len(checks)} checks, "
                 f"{secs:.1f} s)")
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_render(cfg: RunConfig, out: str, simulated: bool) -> int:
    pred = run_predict(cfg)
    if pred.grid is None or pred.grid.dimension != 2:
        raise ValidationError("render needs a two-dimensional model with a k-window")
    grid = pred.grid
    img = np.zeros(grid.shape) if pred.density is None else np.array(pred.density, float)
    if pred.peaks is not None:
        # Bragg weight per pixel: intensity / pixel area, drawn on the nearest grid point
        img = img + pred.peaks.intensity_at(grid.points()).reshape(grid.shape) / np.prod(grid.step)
    meta = {"kind": "predicted map", "origin": grid.origin, "step": grid.step, "scale": "log1p"}
    write_pgm(os.path.join(out, "map.pgm"), np.log1p(np.maximum(img, 0.0)), meta)
    print(f"wrote {os.path.join(out, 'map.pgm')}")
    if simulated:
        sim = run_simulate(cfg)
        g = sim.image_grid
        meta = {"kind": "simulated map", "volume": g.volume, "samples": g.n_samples,
                "origin": g.grid.origin, "step": g.grid.step, "scale": "log1p"}
        write_pgm(os.path.join(out, "map_simulated.pgm"), np.log1p(g.values), meta)
        print(f"wrote {os.path.join(out, 'map_simulated.pgm')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rtdiffraction", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("predict", "exact peaks and diffuse density"),
                        ("simulate", "seeded Monte Carlo periodograms"),
                        ("compare", "predict, simulate and check tolerances"),
                        ("render", "two-dimensional PGM maps")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="INI file or name of a shipped config")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")
        if name == "render":
            p.add_argument("--simulated", action="store_true", help="also render a Monte Carlo map")
    sub.add_parser("list", help="names of the shipped configs")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.command == "list":
        print("\n".join(builtin_configs()))
        return EXIT_OK
    try:
        cfg = RunConfig.from_file(resolve_config(args.config))
        for item in args.set:
            lhs, sep, value = item.partition("=")
            sec, dot, key = lhs.strip().partition(".")
            if not sep or not dot or not key:
                raise ValidationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
            cfg.set(sec, key, value.strip())
        if args.seed is not None:
            cfg.with_seed(args.seed)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "predict":
            return cmd_predict(cfg, args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out)
        if args.command == "compare":
            return cmd_compare(cfg, args.out)
        return cmd_render(cfg, args.out, args.simulated)
    except (ValidationError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
