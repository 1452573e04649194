"""Split-step spectral integrator for the collapse SDE on a periodic grid.

States live on a uniform grid of 2^k points; momentum acts diagonally in the
FFT basis (p = hbar k per mode), position acts by multiplication.  One time
step is a Strang splitting: half a kinetic step, an Euler-Maruyama update of
the interaction part (noise coupling, its drift counterterm, and the
coupling-induced correction to the Hamiltonian), and another half kinetic
step.

Two equations are offered.  The linear form propagates the unnormalized
state whose squared norm is the probability martingale of the unravelling:

    d phi = [-(i/hbar) H - (lam/2) A^dag A] phi dt + sqrt(lam) A phi dxi,

with A = q + i (alpha/hbar) p and H = p^2/2m + (lam alpha / 2)(qp + pq).
The nonlinear (physical) form keeps the state normalized and localizes.  Its
step uses the packet-centred operators: with r = <q>,

    d psi = [-(i/hbar) H - (lam/2) Ac^dag Ac + i (lam alpha r / hbar) p] psi dt
            + sqrt(lam) Ac psi dW,         Ac = (q - r) + i (alpha/hbar) p,

followed by renormalization.  This is the same dynamics as the linear step
driven by the mean-shifted increment (they differ by a state-independent
scalar that renormalization removes), but the operator norms seen by the
Euler update scale with the packet width instead of the packet position,
which is what keeps wandering trajectories inside the trusted step-size
budget.

Noise is counter-based: NoiseStream(master_seed, trajectory_index) yields
the increments of that trajectory as a pure function of the pair, so
ensembles can be partitioned across workers without changing any draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InstabilityError, NormLossError, ResolutionError
from .gaussian import GaussianState
from .model import DerivedConstants, ModelParams, derive_constants

RECORD_FIELDS = (
    "t", "q_mean", "p_mean", "sigma_q_sq", "sigma_p_sq", "sigma_qp_sq",
    "sigma_O_sq", "energy", "norm_sq",
)

_ALIAS_FRACTION = 1e-6
_BOUNDARY_FRACTION = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with 2^k points (k >= 6)."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 64 or (self.n & (self.n - 1)) != 0:
            raise ValueError("n must be a power of two, at least 64")
        if not self.x_max > self.x_min:
            raise ValueError("empty grid interval")

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n, endpoint=False)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers of the FFT modes."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.dx)


@dataclass(frozen=True)
class GridState:
    psi: np.ndarray
    t: float
    norm_sq: float


@dataclass(frozen=True)
class MomentRecord:
    t: float
    q_mean: float
    p_mean: float
    sigma_q_sq: float
    sigma_p_sq: float
    sigma_qp_sq: float
    sigma_O_sq: float
    energy: float
    norm_sq: float


@dataclass(frozen=True)
class TrajectoryResult:
    """Moment records (rows ordered as RECORD_FIELDS), final state, and the
    abort flag raised when a validity check failed mid-run."""

    records: np.ndarray
    final: GridState
    aborted: bool
    abort_reason: str | None = None


@dataclass(frozen=True)
class NoiseStream:
    """Counter-based Gaussian increments for one trajectory.

    increment j is a pure function of (master_seed, trajectory_index, j),
    independent of how many trajectories run or on which worker.
    """

    master_seed: int
    trajectory_index: int

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.trajectory_index],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def increments(self, n_steps: int, dt: float) -> np.ndarray:
        """Brownian increments over n_steps intervals of width dt."""
        return self.generator().standard_normal(n_steps) * math.sqrt(dt)


def grid_norm_sq(psi: np.ndarray, grid: Grid):
    return np.sum(np.abs(psi) ** 2, axis=-1) * grid.dx


def build_gaussian(grid: Grid, g: GaussianState) -> np.ndarray:
    """Gaussian packet, normalized in the discrete grid norm."""
    dxv = grid.x - g.xbar
    psi = np.exp(-g.a * dxv * dxv + 1j * g.kbar * dxv)
    return psi / math.sqrt(float(grid_norm_sq(psi, grid)))


def build_superposition(grid: Grid, a: complex, centers, weights,
                        kbars=None) -> np.ndarray:
    """Sum of Gaussian packets with given centres and probability weights,
    normalized on the grid.  kbars optionally gives each packet a mean
    momentum (hbar k units)."""
    centers = np.asarray(centers, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if kbars is None:
        kbars = np.zeros_like(centers)
    kbars = np.asarray(kbars, dtype=float)
    psi = np.zeros(grid.n, dtype=complex)
    for c, w, kb in zip(centers, weights, kbars):
        dxv = grid.x - c
        psi += math.sqrt(w) * np.exp(-a * dxv * dxv + 1j * kb * dxv)
    return psi / math.sqrt(float(grid_norm_sq(psi, grid)))


def _fft(psi):
    return np.fft.fft(psi, axis=-1)


def _ifft(phi):
    return np.fft.ifft(phi, axis=-1)


def apply_momentum(psi: np.ndarray, grid: Grid, p: ModelParams) -> np.ndarray:
    """p-hat psi evaluated spectrally."""
    return _ifft(p.hbar * grid.k * _fft(psi))


def apply_qp_operator(psi: np.ndarray, grid: Grid, p: ModelParams,
                      coef_q: complex, coef_p: complex) -> np.ndarray:
    """(coef_q * q-hat + coef_p * p-hat) psi for any complex coefficients."""
    return coef_q * grid.x * psi + coef_p * apply_momentum(psi, grid, p)


def aliasing_fraction(psi: np.ndarray, grid: Grid):
    """Spectral mass in the top third of |k|, relative to the total."""
    power = np.abs(_fft(psi)) ** 2
    cut = (2.0 / 3.0) * float(np.max(np.abs(grid.k)))
    mask = np.abs(grid.k) >= cut
    return power[..., mask].sum(axis=-1) / power.sum(axis=-1)


def apply_A(psi: np.ndarray, grid: Grid, p: ModelParams,
            check: bool = True) -> np.ndarray:
    """Apply the coupling operator A = q + i (alpha/hbar) p.

    With check=True the spectral tail is inspected first and a state that
    has started aliasing raises ResolutionError.
    """
    if check:
        frac = aliasing_fraction(psi, grid)
        if np.any(frac > _ALIAS_FRACTION):
            raise ResolutionError(
                "state carries spectral weight near the Nyquist edge"
            )
    return apply_qp_operator(psi, grid, p, 1.0, 1j * p.momentum_coupling / p.hbar)


def suggest_dt(psi: np.ndarray, grid: Grid, p: ModelParams,
               budget: float = 0.05) -> float:
    """Step size keeping lam * max(dx^2, (alpha/hbar)^2 dp^2) * dt below
    budget, where dx/dp are the state's support half-widths measured from
    its centres (the scales the centred interaction operators see)."""
    lam, al, hb = p.collapse_rate, p.momentum_coupling, p.hbar
    if lam == 0.0:
        return math.inf
    prob = np.abs(psi) ** 2
    prob = prob / prob.sum()
    qm = float(np.sum(grid.x * prob))
    live = prob > 1e-12
    x_half = float(np.max(np.abs(grid.x[live] - qm)))
    power = np.abs(_fft(psi)) ** 2
    power = power / power.sum()
    pm = float(np.sum(hb * grid.k * power))
    livek = power > 1e-12
    p_half = float(np.max(np.abs(hb * grid.k[livek] - pm)))
    scale = max(x_half**2, (al / hb) ** 2 * p_half**2)
    return budget / (lam * scale)


def _kinetic_half(grid: Grid, p: ModelParams, dt: float) -> np.ndarray:
    return np.exp(-0.25j * p.hbar * grid.k**2 * dt / p.mass)


def _interaction_terms(psi, grid, p):
    """Shared spectral pieces: (fft psi, p psi, p^2 psi)."""
    fpsi = _fft(psi)
    hbk = p.hbar * grid.k
    ppsi = _ifft(hbk * fpsi)
    p2psi = _ifft(hbk * hbk * fpsi)
    return ppsi, p2psi


def _step_batch(psi, grid, p, dxi_col, dt, kin, equation):
    """One Strang step on a (B, n) batch.  Returns the new batch, and for the
    nonlinear equation renormalizes in place, returning the pre-renorm norms.
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    x = grid.x
    psi = _ifft(kin * _fft(psi))
    ppsi, p2psi = _interaction_terms(psi, grid, p)
    anti = 2.0 * x * ppsi - 1j * hb * psi
    root = math.sqrt(lam)
    beta = al / hb
    if equation == "nonlinear":
        prob = np.abs(psi) ** 2
        norm = prob.sum(axis=-1, keepdims=True) * grid.dx
        r = (x * prob).sum(axis=-1, keepdims=True) * grid.dx / norm
        xc = x - r
        a_psi = xc * psi + 1j * beta * ppsi
        ada_psi = xc * xc * psi + beta * beta * p2psi - al * psi
        drift = (
            -0.5j * lam * al / hb * anti
            - 0.5 * lam * ada_psi
            + (1j * lam * al / hb) * r * ppsi
        )
    else:
        a_psi = x * psi + 1j * beta * ppsi
        ada_psi = x * x * psi + beta * beta * p2psi - al * psi
        drift = -0.5j * lam * al / hb * anti - 0.5 * lam * ada_psi
    psi = psi + drift * dt + root * a_psi * dxi_col
    psi = _ifft(kin * _fft(psi))
    if equation == "nonlinear":
        n2 = grid_norm_sq(psi, grid)[..., None]
        bad = n2[..., 0] < 1e-280
        if np.any(bad):
            n2 = np.where(n2 < 1e-280, 1.0, n2)
        psi = psi / np.sqrt(n2)
        return psi, n2[..., 0], bad
    return psi, grid_norm_sq(psi, grid), np.zeros(psi.shape[0], dtype=bool)


def linear_step(state: GridState, grid: Grid, p: ModelParams,
                dxi: float, dt: float) -> GridState:
    """One step of the unnormalized linear equation driven by dxi."""
    psi = np.atleast_2d(state.psi)
    kin = _kinetic_half(grid, p, dt)
    new, n2, _ = _step_batch(psi, grid, p, np.array([[dxi]]), dt, kin, "linear")
    n2 = float(n2[0])
    if state.norm_sq > 0.0 and n2 > 100.0 * state.norm_sq:
        raise InstabilityError("norm grew more than tenfold in one step")
    return GridState(psi=new[0], t=state.t + dt, norm_sq=n2)


def nonlinear_step(state: GridState, grid: Grid, p: ModelParams,
                   dW: float, dt: float) -> GridState:
    """One renormalized step of the physical (localizing) equation."""
    psi = np.atleast_2d(state.psi)
    kin = _kinetic_half(grid, p, dt)
    new, _, bad = _step_batch(psi, grid, p, np.array([[dW]]), dt, kin,
                              "nonlinear")
    if bad[0]:
        raise NormLossError("state norm collapsed during a nonlinear step")
    return GridState(psi=new[0], t=state.t + dt, norm_sq=1.0)


def _moments_batch(psi, grid, p, a_inf):
    """Moment dictionary for a (B, n) batch; normalization is divided out,
    and the raw squared norm reported alongside."""
    m, hb = p.mass, p.hbar
    x = grid.x
    prob = np.abs(psi) ** 2
    w = prob.sum(axis=-1) * grid.dx
    qm = (x * prob).sum(axis=-1) * grid.dx / w
    q2 = (x * x * prob).sum(axis=-1) * grid.dx / w
    fpsi = _fft(psi)
    pw = np.abs(fpsi) ** 2
    pwsum = pw.sum(axis=-1)
    hbk = hb * grid.k
    pm = (hbk * pw).sum(axis=-1) / pwsum
    p2 = (hbk * hbk * pw).sum(axis=-1) / pwsum
    ppsi = _ifft(hbk * fpsi)
    qp = (np.conj(psi) * x * ppsi).sum(axis=-1).real * grid.dx / w
    o_psi = ppsi - 2j * hb * a_inf * (x * psi)
    oval = (np.conj(psi) * o_psi).sum(axis=-1) * grid.dx / w
    o2 = (np.abs(o_psi) ** 2).sum(axis=-1) * grid.dx / w
    return {
        "q_mean": qm,
        "p_mean": pm,
        "sigma_q_sq": q2 - qm * qm,
        "sigma_p_sq": p2 - pm * pm,
        "sigma_qp_sq": qp - qm * pm,
        "sigma_O_sq": o2 - np.abs(oval) ** 2,
        "energy": p2 / (2.0 * m),
        "norm_sq": w,
    }


def observables(state: GridState, grid: Grid, p: ModelParams,
                d: DerivedConstants | None = None) -> MomentRecord:
    """Moments of a single state (normalization divided out)."""
    d = d or derive_constants(p, boltzmann=1.0)
    mom = _moments_batch(np.atleast_2d(state.psi), grid, p, d.a_inf)
    return MomentRecord(t=state.t, **{k: float(v[0]) for k, v in mom.items()})


def _check_batch(psi, grid):
    """Aliasing and boundary-leak flags for a (B, n) batch."""
    alias = aliasing_fraction(psi, grid) > _ALIAS_FRACTION
    amp = np.abs(psi)
    peak = amp.max(axis=-1)
    edge = np.maximum(amp[..., :2].max(axis=-1), amp[..., -2:].max(axis=-1))
    leak = edge > _BOUNDARY_FRACTION * peak
    return alias, leak


def evolve_batch(psi0, grid: Grid, p: ModelParams, dt: float, n_steps: int,
                 increments, equation: str = "nonlinear",
                 record_every: int = 10,
                 d: DerivedConstants | None = None):
    """Evolve a (B, n) batch with per-trajectory increments of shape
    (B, n_steps).

    Returns (times, records, final_psi, aborted) where records has
    shape (n_records, B, len(RECORD_FIELDS)).  Validity checks (spectral
    aliasing, boundary leakage, norm collapse or blow-up) run at record
    times; a failing trajectory is flagged in `aborted` and its subsequent
    records are not meaningful.
    """
    if equation not in ("nonlinear", "linear"):
        raise ValueError("equation must be 'nonlinear' or 'linear'")
    d = d or derive_constants(p, boltzmann=1.0)
    psi = np.array(psi0, dtype=complex, copy=True)
    if psi.ndim == 1:
        psi = psi[None, :]
    increments = np.asarray(increments, dtype=float)
    n_batch = psi.shape[0]
    if increments.shape != (n_batch, n_steps):
        raise ValueError(
            "increments must have shape (batch, n_steps) = "
            f"({n_batch}, {n_steps}), got {increments.shape}")
    kin = _kinetic_half(grid, p, dt)
    rec_steps = list(range(0, n_steps + 1, record_every))
    if rec_steps[-1] != n_steps:
        rec_steps.append(n_steps)
    records = np.empty((len(rec_steps), n_batch, len(RECORD_FIELDS)))
    aborted = np.zeros(n_batch, dtype=bool)
    prev_norm = grid_norm_sq(psi, grid)

    def take_record(slot, step):
        t = step * dt
        mom = _moments_batch(psi, grid, p, d.a_inf)
        records[slot, :, 0] = t
        for j, name in enumerate(RECORD_FIELDS[1:], start=1):
            records[slot, :, j] = mom[name]
        alias, leak = _check_batch(psi, grid)
        np.logical_or(aborted, alias | leak, out=aborted)

    slot = 0
    take_record(slot, 0)
    slot += 1
    for step in range(1, n_steps + 1):
        dxi_col = increments[:, step - 1][:, None]
        psi, n2, bad = _step_batch(psi, grid, p, dxi_col, dt, kin, equation)
        np.logical_or(aborted, bad, out=aborted)
        if equation == "linear":
            blown = n2 > 100.0 * prev_norm
            np.logical_or(aborted, blown, out=aborted)
            prev_norm = n2
        if step == rec_steps[slot]:
            take_record(slot, step)
            slot += 1
    times = np.asarray(rec_steps, dtype=float) * dt
    return times, records, psi, aborted


def evolve_trajectory(psi0: np.ndarray, grid: Grid, p: ModelParams, dt: float,
                      n_steps: int, noise: NoiseStream,
                      equation: str = "nonlinear", record_every: int = 10,
                      d: DerivedConstants | None = None) -> TrajectoryResult:
    """Evolve one trajectory from the (normalized) initial wavefunction.

    Moment records are taken every record_every steps (plus the endpoint) and
    returned as an array with columns RECORD_FIELDS.
    """
    incr = noise.increments(n_steps, dt)[None, :]
    times, records, psi, aborted = evolve_batch(
        psi0, grid, p, dt, n_steps, incr, equation=equation,
        record_every=record_every, d=d,
    )
    recs = records[:, 0, :]
    final = GridState(psi=psi[0], t=float(times[-1]),
                      norm_sq=float(recs[-1, RECORD_FIELDS.index("norm_sq")]))
    return TrajectoryResult(
        records=recs, final=final, aborted=bool(aborted[0]),
        abort_reason="validity check failed" if aborted[0] else None,
    )


__all__ = [
    "RECORD_FIELDS", "Grid", "GridState", "MomentRecord", "TrajectoryResult",
    "NoiseStream", "grid_norm_sq", "build_gaussian", "build_superposition",
    "apply_momentum", "apply_qp_operator", "apply_A", "aliasing_fraction",
    "suggest_dt", "linear_step", "nonlinear_step", "observables",
    "evolve_batch", "evolve_trajectory",
]
