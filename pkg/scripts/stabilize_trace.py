#!/usr/bin/env python3
"""Integrate one stabilization run and print the population trace.

Drives the cavity from vacuum toward a chosen Fock level with the calibrated
comb for that level and reports the target population versus time, then the
steady-state window average against the rate-model prediction.
"""
import argparse

from fockstab.config import load_config
from fockstab.model import DriveComb
from fockstab.scenarios import STABILIZE_TONES, ScenarioSpec, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target", type=int, default=2, choices=(1, 2, 3),
                    help="Fock level to stabilize (default: 2)")
    ap.add_argument("--duration", type=float, default=120.0,
                    help="horizon in us (default: 120)")
    ap.add_argument("--sample", type=float, default=5.0,
                    help="print/sample spacing in us (default: 5)")
    ap.add_argument("--model", default="lindblad-ideal",
                    choices=("rate", "lindblad-ideal", "lindblad-spurious"),
                    help="model level (default: lindblad-ideal)")
    ap.add_argument("--config", default="paper_tables",
                    help="config supplying the device table (default preset)")
    args = ap.parse_args()

    cfg, _, _ = load_config(args.config)
    spec = ScenarioSpec(name="stabilize", label=f"stabilize_n{args.target}",
                        params=cfg.params, model_level=args.model,
                        comb=DriveComb(STABILIZE_TONES[args.target]),
                        duration_us=args.duration, sample_dt_us=args.sample)
    res = run_scenario(spec)

    n = args.target
    col = res.population_header.index(f"p{n}")
    print(f"{'t_us':>8} {'p_' + str(n):>10}")
    for row in res.populations:
        print(f"{row[0]:>8.2f} {row[col]:>10.6f}")

    s = res.summary
    print()
    print(f"steady window <p_{n}>   : {s['steady_p_target']:.4f}")
    print(f"rate-model prediction : {s['rate_steady_fidelity']:.4f}")
    print(f"gap                   : {s['gap_to_rate_model']:+.4f}")
    if "diagnostics" in s:
        d = s["diagnostics"]
        print(f"integrator            : dt = {d['dt_us']:.2e} us, "
              f"{d['steps']} steps, trace drift {d['trace_drift_max']:.1e}")


if __name__ == "__main__":
    main()
