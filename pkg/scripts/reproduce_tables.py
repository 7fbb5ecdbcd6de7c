#!/usr/bin/env python3
"""Print the closed-form rate-model tables for the calibrated drive combs.

Pure birth-death arithmetic, no master-equation integration: per-tone pump
rates, steady-state target fidelities for the full stabilizing cascades, and
lifetimes of fed versus bare Fock levels. The device table and the comb grid
come from the named config (default: the bundled paper_tables preset).
"""
import argparse

from fockstab.config import load_config
from fockstab.scenarios import run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="paper_tables",
                    help="preset name or TOML path (default: paper_tables)")
    args = ap.parse_args()

    cfg, source, _ = load_config(args.config)
    print(f"config: {source}  (kappa_c = {cfg.params.kappa_c_khz:g} kHz)")
    for spec in cfg.scenarios:
        if spec.name != "rate-analytics":
            print(f"skipping {spec.label!r}: not a rate-analytics scenario")
            continue
        header, rows = run_scenario(spec).tables["rate_analytics"]
        print()
        print(f"{header[0]:<16} {header[1]:>8}  {header[2]:<22} "
              f"{header[3]:>15} {header[4]:>8}")
        for label, n, lam, fid, tau in rows:
            lam_txt = ";".join(f"{float(v):.3f}" for v in lam.split(";")) if lam else "-"
            fid_txt = f"{float(fid):.4f}" if fid else "-"
            tau_txt = f"{float(tau):.1f}" if tau else "-"
            print(f"{label:<16} {n:>8}  {lam_txt:<22} {fid_txt:>15} {tau_txt:>8}")


if __name__ == "__main__":
    main()
