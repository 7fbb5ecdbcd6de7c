#!/usr/bin/env python3
"""Sweep the feeding rate below a Fock level and print the lifetime gain.

Rate-model study of lifetime protection: feed level n from n-1 with a single
tone whose coupler amplitude is swept, and compare the protected decay time
of level n against the bare cascade. Runs in milliseconds per point.
"""
import argparse

import numpy as np

from fockstab.config import load_config
from fockstab.model import DriveComb, ToneSpec
from fockstab.rate import decay_time, stabilization_rate
from fockstab.scenarios import STABILIZE_TONES, rate_model_for


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--level", type=int, default=2, choices=(1, 2, 3),
                    help="protected Fock level (default: 2)")
    ap.add_argument("--j-min", type=float, default=100.0,
                    help="lowest coupler amplitude in kHz (default: 100)")
    ap.add_argument("--j-max", type=float, default=500.0,
                    help="highest coupler amplitude in kHz (default: 500)")
    ap.add_argument("--points", type=int, default=9,
                    help="sweep points (default: 9)")
    ap.add_argument("--config", default="paper_tables",
                    help="config supplying the device table (default preset)")
    args = ap.parse_args()

    cfg, _, _ = load_config(args.config)
    n = args.level
    dim = n + 1
    bare = decay_time(rate_model_for(DriveComb(()), cfg.params, dim), n)
    # reuse the calibrated qubit-drive amplitude of the tone we are rescaling
    omega = STABILIZE_TONES[n][-1].omega_khz

    print(f"protected level n = {n}, bare lifetime = {bare:.1f} us")
    print(f"{'j_khz':>8} {'lambda_khz':>11} {'tau_us':>10} {'gain':>7}")
    for j in np.linspace(args.j_min, args.j_max, args.points):
        comb = DriveComb((ToneSpec(n - 1, omega, float(j)),))
        lam = stabilization_rate(omega, float(j), cfg.params.kappa_r_khz)
        tau = decay_time(rate_model_for(comb, cfg.params, dim), n)
        print(f"{j:>8.1f} {lam:>11.3f} {tau:>10.1f} {tau / bare:>7.2f}")


if __name__ == "__main__":
    main()
