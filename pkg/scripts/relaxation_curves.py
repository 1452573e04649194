"""Closed-form relaxation curves: widths, spreads, covariances, energy.

Everything here is analytic (no sampling): the width flow from a spread of
starting values, the stationary covariance growth of the packet center, and
the mean-energy approach to its floor.  Output is one tidy CSV per family,
ready for plotting.

    python scripts/relaxation_curves.py --out results/relaxation
"""

import argparse
import os

import numpy as np

from dcollapse import gaussian as ge
from dcollapse import master as ms
from dcollapse.gaussian import GaussianState
from dcollapse.model import ModelParams, derive_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--collapse-rate", type=float, default=0.1)
    ap.add_argument("--momentum-coupling", type=float, default=0.5)
    ap.add_argument("--t-max", type=float, default=None,
                    help="default 12 / omega1")
    ap.add_argument("--out", default="relaxation_curves")
    args = ap.parse_args()

    p = ModelParams(mass=1.0, collapse_rate=args.collapse_rate,
                    momentum_coupling=args.momentum_coupling, hbar=1.0)
    d = derive_constants(p, boltzmann=1.0)
    t_max = args.t_max if args.t_max is not None else 12.0 / d.omega1
    t = np.linspace(0.0, t_max, 481)
    os.makedirs(args.out, exist_ok=True)

    print(f"omega1 = {d.omega1:.6g}, stationary sigma_q = "
          f"{d.sigma_q_bar:.6g}, sigma_p = {d.sigma_p_bar:.6g}")

    # width flow from narrow, stationary and wide starts
    starts = {
        "narrow": 4.0 * d.a_inf.real + 1j * d.a_inf.imag,
        "stationary": d.a_inf,
        "wide": 0.25 * d.a_inf.real + 1j * d.a_inf.imag,
        "squeezed": d.a_inf.real - 1.5j * abs(d.a_inf),
    }
    path = os.path.join(args.out, "widths.csv")
    with open(path, "w") as f:
        cols = [f"sigma_q_{k}" for k in starts] + [f"sigma_p_{k}" for k in starts]
        f.write("t," + ",".join(cols) + "\n")
        trs = {k: ge.spreads(ge.a_closed_form(a0, t, p), p)
               for k, a0 in starts.items()}
        for i, ti in enumerate(t):
            row = [f"{trs[k].sigma_q[i]:.8g}" for k in starts]
            row += [f"{trs[k].sigma_p[i]:.8g}" for k in starts]
            f.write(f"{ti:.6g}," + ",".join(row) + "\n")
    print(f"wrote {path}")

    # covariance growth of the packet center in the stationary regime
    cov = ge.stationary_covariance(t, p, d)
    path = os.path.join(args.out, "center_covariance.csv")
    with open(path, "w") as f:
        f.write("t,cov_qq,cov_qp,cov_pp\n")
        for i, ti in enumerate(t):
            f.write(f"{ti:.6g},{cov.qq[i]:.8g},{cov.qp[i]:.8g},"
                    f"{cov.pp[i]:.8g}\n")
    print(f"wrote {path}")

    # mean energy approach for hot and cold starts
    hot = GaussianState(a=starts["narrow"], xbar=0.0, kbar=1.5)
    cold = GaussianState(a=d.a_inf, xbar=0.0, kbar=0.0)
    e_hot = ge.gaussian_energy(hot, p)
    e_cold = ge.gaussian_energy(cold, p)
    path = os.path.join(args.out, "energy.csv")
    with open(path, "w") as f:
        f.write("t,energy_hot,energy_cold,energy_floor\n")
        eh = ms.mean_energy(e_hot, t, p)
        ec = ms.mean_energy(e_cold, t, p)
        for i, ti in enumerate(t):
            f.write(f"{ti:.6g},{eh[i]:.8g},{ec[i]:.8g},"
                    f"{d.energy_inf:.8g}\n")
    print(f"wrote {path}; floor {d.energy_inf:.6g}, hot start {e_hot:.6g}")


if __name__ == "__main__":
    main()
