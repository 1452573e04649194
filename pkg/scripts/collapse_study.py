"""Reduction of a two-packet superposition, trajectory by trajectory.

Runs an ensemble of nonlinear trajectories started from a weighted pair of
stationary-width packets, then reports how fast the position spread contracts
to the stationary value and how often each branch wins.  Writes the
localized-fraction curve and the per-trajectory outcomes to CSV.

    python scripts/collapse_study.py --n-traj 400 --out results/collapse
"""

import argparse
import os

import numpy as np

from dcollapse.grid import (Grid, NoiseStream, RECORD_FIELDS,
                            build_superposition, evolve_batch)
from dcollapse.model import ModelParams, derive_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-traj", type=int, default=400)
    ap.add_argument("--batch", type=int, default=200)
    ap.add_argument("--steps", type=int, default=900)
    ap.add_argument("--dt", type=float, default=0.008)
    ap.add_argument("--centers", type=float, nargs=2, default=(-5.0, 5.0))
    ap.add_argument("--weights", type=float, nargs=2, default=(0.3, 0.7))
    ap.add_argument("--collapse-rate", type=float, default=0.1)
    ap.add_argument("--momentum-coupling", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=2025)
    ap.add_argument("--out", default="collapse_study")
    args = ap.parse_args()

    p = ModelParams(mass=1.0, collapse_rate=args.collapse_rate,
                    momentum_coupling=args.momentum_coupling, hbar=1.0)
    d = derive_constants(p, boltzmann=1.0)
    grid = Grid(-32.0, 32.0, 256)
    w = np.asarray(args.weights, dtype=float)
    w = w / w.sum()
    psi0 = build_superposition(grid, d.a_inf, list(args.centers), w)

    blocks, flags = [], []
    times = None
    for start in range(0, args.n_traj, args.batch):
        n_b = min(args.batch, args.n_traj - start)
        inc = np.stack([
            NoiseStream(args.seed, start + j).increments(args.steps, args.dt)
            for j in range(n_b)
        ])
        psis = np.broadcast_to(psi0, (n_b, grid.n)).copy()
        times, rec, _, ab = evolve_batch(psis, grid, p, args.dt, args.steps,
                                         inc, "nonlinear", record_every=5,
                                         d=d)
        blocks.append(rec)
        flags.append(ab)
    records = np.concatenate(blocks, axis=1)
    aborted = np.concatenate(flags)
    ok = ~aborted
    print(f"{args.n_traj} trajectories, {aborted.sum()} aborted")

    i_s = RECORD_FIELDS.index("sigma_q_sq")
    i_q = RECORD_FIELDS.index("q_mean")
    sig_q = np.sqrt(records[:, ok, i_s])
    qm = records[:, ok, i_q]
    within = np.abs(sig_q - d.sigma_q_bar) <= 0.05 * d.sigma_q_bar
    frac = within.mean(axis=1)

    # branch outcome at the start of each trajectory's final localized stretch
    n_rec, n_ok = within.shape
    last_not = n_rec - 1 - np.argmax(~within[::-1], axis=0)
    seal = np.minimum(last_not + 1, n_rec - 1)
    settled = within[-1]
    picks = qm[seal, np.arange(n_ok)][settled] > 0.0
    se = np.sqrt(w[1] * w[0] / max(picks.size, 1))
    print(f"localized at end: {settled.mean():.3f}")
    print(f"right-branch fraction: {picks.mean():.4f} "
          f"(weight {w[1]:.3f}, binomial se {se:.4f})")
    t_seal = times[seal][settled]
    print(f"reduction time: median {np.median(t_seal):.3f}, "
          f"90th pct {np.percentile(t_seal, 90):.3f}")

    os.makedirs(args.out, exist_ok=True)
    curve = os.path.join(args.out, "localized_fraction.csv")
    with open(curve, "w") as f:
        f.write("t,localized_fraction,mean_sigma_q\n")
        for i, t in enumerate(times):
            f.write(f"{t:.6g},{frac[i]:.6g},{sig_q[i].mean():.6g}\n")
    outcomes = os.path.join(args.out, "outcomes.csv")
    with open(outcomes, "w") as f:
        f.write("trajectory,settled,t_reduce,branch_right\n")
        idx = np.nonzero(ok)[0]
        for col, traj in enumerate(idx):
            f.write(f"{traj},{int(within[-1, col])},"
                    f"{times[seal[col]]:.6g},{int(qm[seal[col], col] > 0)}\n")
    print(f"wrote {curve} and {outcomes}")


if __name__ == "__main__":
    main()
