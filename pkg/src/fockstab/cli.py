"""Command-line entry point.

Subcommands:
  run       execute every scenario in a config, one artifact directory per
            scenario plus a checksummed manifest
  validate  parse a config and report the derived per-tone pump rates
  wigner    recompute a Wigner map from a stored final state

Exit codes: 0 success, 2 config or validation error, 3 numerical failure,
4 missing artifact. Artifacts are written with repr-exact floats and sorted
JSON keys so reruns of the same config are byte-identical (the manifest
carries wall-clock timings and is exempt).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, units
from .config import PRESETS, load_config
from .hilbert import DensityMatrix, SpaceLayout
from .lindblad import WignerGrid, wigner
from .mitigation import ReadoutCalibration, wigner_normalize
from .numerics import DomainError, NumericalError, SchemaError
from .rate import stabilization_rate
from .scenarios import ScenarioSpec, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_MISSING = 4


# ------------------------------------------------------------ serialization

def _cell(v) -> str:
    if isinstance(v, float):          # incl. np.float64; plain-float repr round-trips
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _write_wigner_csv(path: Path, grid: WignerGrid) -> None:
    ny, nx = grid.values.shape
    rows = []
    for iy in range(ny):
        for ix in range(nx):
            a = grid.alphas[iy, ix]
            rows.append((float(a.real), float(a.imag), float(grid.values[iy, ix])))
    _write_csv(path, ("re_alpha", "im_alpha", "w"), rows)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_json_atomic(path: Path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _execute(spec: ScenarioSpec, out_root: Path) -> dict:
    t0 = time.perf_counter()
    result = run_scenario(spec)
    sdir = out_root / spec.label
    sdir.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}

    if result.populations is not None:
        p = sdir / "populations.csv"
        _write_csv(p, result.population_header, result.populations)
        files[p.name] = _sha256(p)
    for key, (header, rows) in result.tables.items():
        p = sdir / f"{key}.csv"
        _write_csv(p, header, rows)
        files[p.name] = _sha256(p)
    for key, grid in result.wigner_grids.items():
        p = sdir / f"{key}.csv"
        _write_wigner_csv(p, grid)
        files[p.name] = _sha256(p)
    if result.final_state is not None and spec.outputs.final_state:
        p = sdir / "final_state.npy"
        np.save(p, result.final_state.data)
        files[p.name] = _sha256(p)

    summary = dict(result.summary)
    summary["label"] = spec.label
    summary["version"] = __version__
    if spec.calibration is not None:
        cal = spec.calibration
        summary["calibration"] = {"f_g": cal.f_g, "f_e": cal.f_e, "w0": cal.w0}
    p = sdir / "summary.json"
    _write_json(p, summary)
    files[p.name] = _sha256(p)

    return {
        "label": spec.label,
        "scenario": spec.name,
        "model_level": spec.model_level,
        "elapsed_s": round(time.perf_counter() - t0, 3),
        "files": files,
    }


# ---------------------------------------------------------------- commands

def cmd_run(args) -> int:
    cfg, source, data = load_config(args.config, args.override)
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)

    entries: list[dict | None] = [None] * len(cfg.scenarios)

    def job(item) -> None:
        idx, spec = item
        entries[idx] = _execute(spec, out_root)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(job, enumerate(cfg.scenarios)))
    else:
        for item in enumerate(cfg.scenarios):
            job(item)

    manifest = {
        "tool": "fockstab",
        "version": __version__,
        "config": source,
        "config_sha256": hashlib.sha256(data).hexdigest(),
        "overrides": list(args.override),
        "seed": args.seed,
        "workers": args.workers,
        "scenarios": entries,
    }
    _write_json_atomic(out_root / "manifest.json", manifest)

    for entry in entries:
        print(f"{entry['label']}: {len(entry['files'])} file(s) "
              f"in {entry['elapsed_s']:.3f} s")
    print(f"manifest: {out_root / 'manifest.json'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg, source, _ = load_config(args.config, args.override)
    p = cfg.params
    print(f"config {source}: {len(cfg.scenarios)} scenario(s)")
    print(f"system: kappa_c = {p.kappa_c_khz:.1f} kHz, "
          f"kappa_r = {p.kappa_r_khz:.1f} kHz, "
          f"chi_qc = {units.as_mhz(p.chi_qc):.2f} MHz")
    for spec in cfg.scenarios:
        line = f"  {spec.label}: {spec.name} [{spec.model_level}]"
        if spec.duration_us > 0:
            line += f", {spec.duration_us:g} us"
        print(line)
        if spec.comb is not None:
            for t in spec.comb.tones:
                lam = stabilization_rate(t.omega_khz, t.j_khz, p.kappa_r_khz)
                print(f"    tone {t.i}: omega = {t.omega_khz:g} kHz, "
                      f"j = {t.j_khz:g} kHz -> lambda = {lam:.2f} kHz")
        if spec.comb_set is not None:
            print(f"    comb set with {len(spec.comb_set)} entries")
    print("ok")
    return EXIT_OK


def cmd_wigner(args) -> int:
    bundle = Path(args.bundle)
    state_path = bundle / "final_state.npy"
    summary_path = bundle / "summary.json"
    if not state_path.is_file():
        print(f"missing artifact: {state_path}", file=sys.stderr)
        return EXIT_MISSING
    summary = {}
    if summary_path.is_file():
        summary = json.loads(summary_path.read_text())
    data = np.load(state_path)
    dims = tuple(summary.get("layout_dims", (data.shape[0],)))
    state = DensityMatrix(SpaceLayout(dims), data)
    grid = wigner(state, args.alpha_max, args.points)

    note = ""
    if args.normalize:
        w0 = args.w0
        if w0 is None:
            w0 = summary.get("calibration", {}).get(
                "w0", ReadoutCalibration().w0)
        grid = wigner_normalize(grid, ReadoutCalibration(w0=w0))
        note = f", normalized by w0 = {w0:g}"
    out = Path(args.out) if args.out else bundle / "wigner_recomputed.csv"
    _write_wigner_csv(out, grid)
    print(f"wrote {out} ({args.points}x{args.points} grid, "
          f"alpha_max = {args.alpha_max:g}{note})")
    for w in grid.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fockstab",
        description="Driven-dissipative Fock-state stabilization simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every scenario in a config")
    run_p.add_argument("--config", required=True,
                       help=f"TOML path or bundled preset ({', '.join(PRESETS)})")
    run_p.add_argument("--out", default=os.environ.get("FOCKSTAB_OUT", "runs"),
                       help="output directory (default: $FOCKSTAB_OUT or ./runs)")
    run_p.add_argument("--override", action="append", default=[],
                       metavar="PATH=VALUE",
                       help="dotted-path config edit, repeatable "
                            "(e.g. scenario.0.duration_us=50)")
    run_p.add_argument("--workers", type=int, default=1,
                       help="scenarios run in parallel threads")
    run_p.add_argument("--seed", type=int, default=None,
                       help="recorded in the manifest; no stage draws "
                            "random numbers yet")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate",
                           help="parse a config and print derived pump rates")
    val_p.add_argument("--config", required=True)
    val_p.add_argument("--override", action="append", default=[],
                       metavar="PATH=VALUE")
    val_p.set_defaults(func=cmd_validate)

    wig_p = sub.add_parser("wigner",
                           help="recompute a Wigner map from a stored state")
    wig_p.add_argument("--bundle", required=True,
                       help="scenario output directory holding final_state.npy")
    wig_p.add_argument("--alpha-max", type=float, default=2.5)
    wig_p.add_argument("--points", type=int, default=61)
    wig_p.add_argument("--normalize", action="store_true",
                       help="divide by the vacuum contrast w0")
    wig_p.add_argument("--w0", type=float, default=None)
    wig_p.add_argument("--out", default=None,
                       help="output CSV (default: <bundle>/wigner_recomputed.csv)")
    wig_p.set_defaults(func=cmd_wigner)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
