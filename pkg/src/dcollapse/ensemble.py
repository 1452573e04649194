"""Ensemble runner: thousands of trajectories, reproducible to the byte.

Reproducibility contract: every trajectory index owns a counter-based noise
stream keyed by (master_seed, index), trajectories are grouped into batches
of config.batch_size aligned to the index, and batch results are reduced in
index order.  Worker processes only ever receive whole batches, so the
arrays each FFT sees are identical no matter how many workers run; the
summary is therefore bit-identical for any worker count, and changes only
when the master seed (or the physics) changes.

compare_to_master cross-validates the simulated ensemble against the
closed-form master-equation moments: means, second moments, energy, and the
final spatial density.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gaussian import GaussianState
from .grid import (RECORD_FIELDS, Grid, NoiseStream, build_gaussian,
                   build_superposition, evolve_batch)
from .master import coeff_flow, coefficients_from_gaussian, moments_from_coefficients
from .model import ModelParams, derive_constants
from .constants import HBAR

_FLOAT_TUPLE_FIELDS = {"centers", "weights", "kbars"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one ensemble experiment.

    hbar=None resolves to 1 in natural units and to the SI value otherwise.
    a0_real/a0_imag=None start packets at the stationary width.
    """

    units: str = "natural"
    mass: float = 1.0
    collapse_rate: float = 0.1
    momentum_coupling: float = 0.5
    hbar: float | None = None
    equation: str = "nonlinear"
    initial: str = "gaussian"
    a0_real: float | None = None
    a0_imag: float | None = None
    xbar0: float = 0.0
    kbar0: float = 0.0
    centers: tuple = (-5.0, 5.0)
    weights: tuple = (0.5, 0.5)
    kbars: tuple = ()
    x_min: float = -16.0
    x_max: float = 16.0
    n_points: int = 256
    dt: float = 0.01
    n_steps: int = 200
    record_every: int = 10
    n_trajectories: int = 100
    master_seed: int = 2025
    batch_size: int = 128
    n_workers: int = 1

    def params(self) -> ModelParams:
        hb = self.hbar
        if hb is None:
            hb = 1.0 if self.units == "natural" else HBAR
        return ModelParams(mass=self.mass, collapse_rate=self.collapse_rate,
                           momentum_coupling=self.momentum_coupling, hbar=hb)

    def grid(self) -> Grid:
        return Grid(x_min=self.x_min, x_max=self.x_max, n=self.n_points)

    def initial_gaussian(self) -> GaussianState:
        p = self.params()
        if self.a0_real is None:
            a = derive_constants(p, boltzmann=1.0).a_inf
            if self.a0_imag is not None:
                a = complex(a.real, self.a0_imag)
        else:
            a = complex(self.a0_real, self.a0_imag or 0.0)
        return GaussianState(a=a, xbar=self.xbar0, kbar=self.kbar0)

    def initial_psi(self, grid: Grid) -> np.ndarray:
        if self.initial == "gaussian":
            return build_gaussian(grid, self.initial_gaussian())
        if self.initial == "superposition":
            g = self.initial_gaussian()
            kbars = self.kbars if self.kbars else None
            return build_superposition(grid, g.a, self.centers, self.weights,
                                       kbars=kbars)
        raise ValueError(f"unknown initial state: {self.initial}")

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    # -- flat-file and JSON round trips ------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in _FLOAT_TUPLE_FIELDS:
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kw = dict(d)
        for k in _FLOAT_TUPLE_FIELDS:
            if k in kw and kw[k] is not None:
                kw[k] = tuple(float(v) for v in kw[k])
        return cls(**kw)

    def to_file(self, path: str) -> None:
        if path.endswith(".json"):
            with open(path, "w") as f:
                json.dump(self.to_dict(), f, indent=2, sort_keys=True)
                f.write("\n")
            return
        lines = []
        for f_ in dataclasses.fields(self):
            v = getattr(self, f_.name)
            if isinstance(v, tuple):
                v = ",".join(repr(float(x)) for x in v)
            lines.append(f"{f_.name} = {v}")
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path) as f:
            text = f.read()
        if text.lstrip().startswith("{"):
            return cls.from_dict(json.loads(text))
        types = {f_.name: f_ for f_ in dataclasses.fields(cls)}
        kw = {}
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
            kw[key] = _parse_value(key, val)
        return cls(**kw)


def _parse_value(key: str, val: str):
    if key in _FLOAT_TUPLE_FIELDS:
        val = val.strip()
        if not val:
            return ()
        return tuple(float(v) for v in val.split(","))
    if val == "None":
        return None
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            pass
    return val


@dataclass(frozen=True)
class EnsembleSummary:
    """Reduced ensemble statistics: per-record mean and standard error of
    every moment column, the final-position histogram, and the mean final
    spatial density over non-aborted trajectories."""

    times: np.ndarray
    mean: np.ndarray
    sem: np.ndarray
    n_trajectories: int
    n_aborted: int
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    density_x: np.ndarray
    density: np.ndarray
    config: ExperimentConfig

    def column(self, name: str, which: str = "mean") -> np.ndarray:
        j = RECORD_FIELDS.index(name)
        return (self.mean if which == "mean" else self.sem)[:, j]

    def to_json(self) -> str:
        cfg = self.config.to_dict()
        cfg.pop("n_workers", None)  # scheduling detail, not physics
        payload = {
            "schema": "ensemble-summary-v1",
            "config": cfg,
            "fields": list(RECORD_FIELDS),
            "times": self.times.tolist(),
            "mean": self.mean.tolist(),
            "sem": self.sem.tolist(),
            "n_trajectories": self.n_trajectories,
            "n_aborted": self.n_aborted,
            "hist_edges": self.hist_edges.tolist(),
            "hist_counts": self.hist_counts.tolist(),
            "density_x": self.density_x.tolist(),
            "density": self.density.tolist(),
        }
        return json.dumps(payload, sort_keys=True, indent=1)

    def save(self, out_dir: str, fmt: str = "json") -> list:
        os.makedirs(out_dir, exist_ok=True)
        written = []
        if fmt == "json":
            path = os.path.join(out_dir, "summary.json")
            with open(path, "w") as f:
                f.write(self.to_json() + "\n")
            written.append(path)
        elif fmt == "csv":
            path = os.path.join(out_dir, "moments.csv")
            cols = ["t"]
            for name in RECORD_FIELDS[1:]:
                cols += [f"mean_{name}", f"sem_{name}"]
            body = np.empty((len(self.times), len(cols)))
            body[:, 0] = self.times
            for j, name in enumerate(RECORD_FIELDS[1:], start=1):
                body[:, 2 * j - 1] = self.mean[:, j]
                body[:, 2 * j] = self.sem[:, j]
            _write_csv(path, "ensemble-moments-v1", cols, body)
            written.append(path)
            path = os.path.join(out_dir, "density.csv")
            _write_csv(path, "ensemble-density-v1", ["x", "density"],
                       np.column_stack([self.density_x, self.density]))
            written.append(path)
            path = os.path.join(out_dir, "final_q_hist.csv")
            centers = 0.5 * (self.hist_edges[:-1] + self.hist_edges[1:])
            _write_csv(path, "ensemble-hist-v1", ["q_center", "count"],
                       np.column_stack([centers, self.hist_counts]))
            written.append(path)
        else:
            raise ValueError(f"unknown format: {fmt}")
        return written


def _write_csv(path: str, schema: str, cols, body: np.ndarray) -> None:
    with open(path, "w") as f:
        f.write(f"# schema={schema}\n")
        f.write(",".join(cols) + "\n")
        for row in np.atleast_2d(body):
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _run_batch(cfg: ExperimentConfig, start: int, count: int):
    p = cfg.params()
    grid = cfg.grid()
    d = derive_constants(p, boltzmann=1.0)
    psi0 = cfg.initial_psi(grid)
    psi = np.broadcast_to(psi0, (count, grid.n)).copy()
    incr = np.empty((count, cfg.n_steps))
    for row, idx in enumerate(range(start, start + count)):
        incr[row] = NoiseStream(cfg.master_seed, idx).increments(
            cfg.n_steps, cfg.dt)
    times, records, final_psi, aborted = evolve_batch(
        psi, grid, p, cfg.dt, cfg.n_steps, incr, equation=cfg.equation,
        record_every=cfg.record_every, d=d,
    )
    ok = ~aborted
    prob = np.abs(final_psi) ** 2
    norm = prob.sum(axis=-1, keepdims=True) * grid.dx
    prob = prob / norm
    density_sum = prob[ok].sum(axis=0)
    return {
        "start": start,
        "times": times,
        "records": records,
        "aborted": aborted,
        "density_sum": density_sum,
        "n_ok": int(ok.sum()),
    }


def _batch_args(cfg: ExperimentConfig):
    starts = list(range(0, cfg.n_trajectories, cfg.batch_size))
    return [(cfg, s, min(cfg.batch_size, cfg.n_trajectories - s))
            for s in starts]


def _worker(args):
    cfg, start, count = args
    return _run_batch(cfg, start, count)


def run_ensemble(cfg: ExperimentConfig, return_records: bool = False):
    """Run the configured ensemble and reduce it to an EnsembleSummary.

    With return_records=True also returns the raw per-trajectory record
    tensor of shape (n_records, n_trajectories, len(RECORD_FIELDS)) in
    trajectory-index order (useful for paired statistics; aborted rows are
    flagged, not removed).
    """
    args = _batch_args(cfg)
    if cfg.n_workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_workers) as ex:
            results = list(ex.map(_worker, args))
    else:
        results = [_worker(a) for a in args]
    results.sort(key=lambda r: r["start"])

    times = results[0]["times"]
    records = np.concatenate([r["records"] for r in results], axis=1)
    aborted = np.concatenate([r["aborted"] for r in results])
    density_sum = np.zeros_like(results[0]["density_sum"])
    n_ok = 0
    for r in results:
        density_sum = density_sum + r["density_sum"]
        n_ok += r["n_ok"]
    grid = cfg.grid()
    density = density_sum / max(n_ok, 1)

    ok = ~aborted
    kept = records[:, ok, :]
    nv = kept.shape[1]
    mean = kept.mean(axis=1)
    if nv > 1:
        sem = kept.std(axis=1, ddof=1) / math.sqrt(nv)
    else:
        sem = np.zeros_like(mean)
    q_final = records[-1, ok, RECORD_FIELDS.index("q_mean")]
    edges = np.linspace(cfg.x_min, cfg.x_max, 65)
    counts, _ = np.histogram(q_final, bins=edges)

    summary = EnsembleSummary(
        times=times, mean=mean, sem=sem,
        n_trajectories=cfg.n_trajectories, n_aborted=int(aborted.sum()),
        hist_edges=edges, hist_counts=counts,
        density_x=grid.x, density=density, config=cfg,
    )
    if return_records:
        return summary, records, aborted
    return summary


@dataclass(frozen=True)
class MasterComparison:
    """z-scores of the ensemble means against the closed-form master
    moments, plus the L1 distance of the final density."""

    times: np.ndarray
    z_q_mean: np.ndarray
    z_p_mean: np.ndarray
    z_q_second: np.ndarray
    z_p_second: np.ndarray
    max_abs_z: float
    l1_density: float

    def passed(self, z_threshold: float = 3.0, l1_tol: float = 0.02) -> bool:
        return self.max_abs_z < z_threshold and self.l1_density < l1_tol


def compare_to_master(cfg: ExperimentConfig, summary: EnsembleSummary,
                      records: np.ndarray, aborted: np.ndarray) -> MasterComparison:
    """Cross-validate an ensemble run against the master-equation moments.

    Requires a Gaussian initial state (the closed-form reference).  Second
    moments are compared as <q^2> = var_q + <q>^2 built per trajectory, so
    the Monte Carlo error bars are honest standard errors of the mean.
    """
    if cfg.initial != "gaussian":
        raise ValueError("master comparison needs a Gaussian initial state")
    p = cfg.params()
    hb = p.hbar
    c0 = coefficients_from_gaussian(cfg.initial_gaussian(), p)
    ok = ~aborted
    kept = records[:, ok, :]
    nv = kept.shape[1]

    def col(name):
        return kept[:, :, RECORD_FIELDS.index(name)]

    q2 = col("sigma_q_sq") + col("q_mean") ** 2
    p2 = col("sigma_p_sq") + col("p_mean") ** 2
    samples = {
        "q_mean": col("q_mean"), "p_mean": col("p_mean"),
        "q_second": q2, "p_second": p2,
    }
    theory = {k: np.empty(len(summary.times)) for k in samples}
    for i, t in enumerate(summary.times):
        mom = moments_from_coefficients(coeff_flow(c0, float(t), p), p)
        theory["q_mean"][i] = mom.q_mean
        theory["p_mean"][i] = mom.p_mean
        theory["q_second"][i] = mom.var_q + mom.q_mean**2
        theory["p_second"][i] = mom.var_p + mom.p_mean**2
    z = {}
    for k, sample in samples.items():
        mu = sample.mean(axis=1)
        se = sample.std(axis=1, ddof=1) / math.sqrt(nv)
        diff = mu - theory[k]
        # a degenerate sample (all trajectories identical, e.g. the t=0
        # record) carries no standard error; compare directly instead
        scale = 1.0 + np.abs(theory[k])
        degenerate = se <= 1e-12 * scale
        safe = np.where(degenerate, 1.0, se)
        z[k] = np.where(degenerate,
                        np.where(np.abs(diff) <= 1e-9 * scale, 0.0, np.inf),
                        diff / safe)

    c_t = coeff_flow(c0, float(summary.times[-1]), p)
    mom = moments_from_coefficients(c_t, p)
    var = mom.var_q
    ref = np.exp(-((summary.density_x - mom.q_mean) ** 2) / (2.0 * var)) \
        / math.sqrt(2.0 * math.pi * var)
    dx = float(summary.density_x[1] - summary.density_x[0])
    l1 = float(np.abs(summary.density - ref).sum() * dx)
    max_z = max(float(np.nanmax(np.abs(v))) for v in z.values())
    return MasterComparison(
        times=summary.times, z_q_mean=z["q_mean"], z_p_mean=z["p_mean"],
        z_q_second=z["q_second"], z_p_second=z["p_second"],
        max_abs_z=max_z, l1_density=l1,
    )


__all__ = [
    "ExperimentConfig", "EnsembleSummary", "MasterComparison",
    "run_ensemble", "compare_to_master",
]
