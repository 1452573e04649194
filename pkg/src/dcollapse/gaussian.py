"""Closed-form dynamics of Gaussian trajectory states.

A Gaussian state is parametrized as

    psi(x) ~ exp(-a (x - xbar)^2 + i kbar (x - xbar)),   Re a > 0.

Under the nonlinear stochastic dynamics the class is preserved: the complex
width parameter a obeys a deterministic Riccati equation

    da/dt = -(2 i hbar / m) a^2 - 4 lam alpha a + lam,

while the centres (xbar, kbar) pick up the noise.  The Riccati flow is solved
in closed form through a Moebius substitution: with

    A = -2 i lam alpha m / hbar,
    B = (m omega / (sqrt(2) hbar)) e^{i theta}   (so B^2 = -A^2 + 2 i lam m/hbar),

the solution is

    a_t = -A/2 - (i B / 2) (tau0 + T) / (1 + tau0 T),
    T   = tanh((hbar/m) B t),     tau0 = i (2 a0 + A) / B.

tau0 = 1 is the attracting fixed point a_inf = -(A + i B)/2; every Re a0 > 0
initial condition converges to it at the complex rate omega1 + i omega2.
The equivalent trig-hyperbolic width formula is exposed through
phase_constants / sigma_q_of_t, with phi1 = +inf denoting a start exactly at
the fixed point (phi2 only enters through sin/cos and is defined mod 2 pi).

Centre-of-packet statistics over the ensemble of noise realizations obey
linear ODEs with a-dependent coefficients; integrate_covariance solves them
for any width path, and stationary_covariance gives the closed form for a
trajectory sitting at a_inf, organised so that every term is a non-negative
product of the cancellation-safe kernels in `numerics`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import InstabilityError
from .model import DerivedConstants, ModelParams, derive_constants

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GaussianState:
    """Width parameter and centres of one Gaussian trajectory state."""

    a: complex
    xbar: float = 0.0
    kbar: float = 0.0

    def __post_init__(self):
        if not complex(self.a).real > 0.0:
            raise ValueError("Re a must be positive for a normalizable state")


@dataclass(frozen=True)
class SpreadTriple:
    """Spreads of a Gaussian state.  sigma_qp_sq is the symmetrized
    correlation (1/2)<{q,p}> - <q><p>, which can take either sign, so the
    square is what is stored."""

    sigma_q: float
    sigma_p: float
    sigma_qp_sq: float


@dataclass(frozen=True)
class PhaseConstants:
    """Constants of the trig-hyperbolic width representation."""

    A: complex
    B: complex
    k: complex
    phi1: float
    phi2: float


@dataclass(frozen=True)
class CovarianceMatrix:
    """Ensemble covariances of the packet centres (position units for qq,
    mixed for qp, momentum units for pp)."""

    qq: float
    qp: float
    pp: float


@dataclass(frozen=True)
class CovariancePath:
    t: np.ndarray
    qq: np.ndarray
    qp: np.ndarray
    pp: np.ndarray


@dataclass(frozen=True)
class Ell:
    """Coefficient of the leading secular term of the position covariance,
    split into the momentum-tilt and width contributions."""

    value: float
    tilt_term: float
    width_term: float


def _riccati_constants(p: ModelParams, d: DerivedConstants | None = None):
    d = d or derive_constants(p, boltzmann=1.0)
    A = -2j * p.collapse_rate * p.momentum_coupling * p.mass / p.hbar
    B = (p.mass * d.omega / (_SQRT2 * p.hbar)) * np.exp(1j * d.theta)
    return A, B, d


def a_closed_form(a0, t, p: ModelParams):
    """Width parameter at time t for the initial value a0.

    Broadcasts over array a0 and t.  The collapse-free limit is the familiar
    free-spreading law a0 / (1 + 2 i hbar a0 t / m).
    """
    a0 = np.asarray(a0, dtype=complex)
    t = np.asarray(t, dtype=float)
    if np.any(a0.real <= 0.0):
        raise ValueError("Re a0 must be positive")
    m, hb = p.mass, p.hbar
    if p.collapse_rate == 0.0:
        out = a0 / (1.0 + 2j * hb * a0 * t / m)
    else:
        A, B, _ = _riccati_constants(p)
        tau0 = 1j * (2.0 * a0 + A) / B
        T = np.tanh((hb / m) * B * t)
        out = -A / 2.0 - 0.5j * B * (tau0 + T) / (1.0 + tau0 * T)
    return complex(out) if out.ndim == 0 else out


def integrate_a_ode(a0, t_grid, p: ModelParams, substeps: int = 1):
    """Runge-Kutta integration of the width Riccati flow along t_grid.

    Vectorizes over array a0.  A step on which |a| more than doubles while
    sitting far above every physical scale aborts with InstabilityError;
    refine the grid in that case.
    """
    a0 = np.asarray(a0, dtype=complex)
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    d = derive_constants(p, boltzmann=1.0)
    scale = max(float(np.max(np.abs(a0))), abs(d.a_inf), 1e-300)

    def rhs(_t, a):
        return -(2j * hb / m) * a * a - 4.0 * lam * al * a + lam

    path = np.empty((len(t_grid),) + a0.shape, dtype=complex)
    path[0] = a0
    y = a0
    for i in range(len(t_grid) - 1):
        seg = numerics.rk4_path(rhs, y, [t_grid[i], t_grid[i + 1]], substeps=substeps)
        y_new = seg[-1]
        grew = np.abs(y_new) > 2.0 * np.abs(y)
        huge = np.abs(y_new) > 10.0 * scale
        if np.any(grew & huge):
            raise InstabilityError(
                "width parameter doubled in one step; refine the time grid"
            )
        y = y_new
        path[i + 1] = y
    return path


def phase_constants(a0: complex, p: ModelParams) -> PhaseConstants:
    """Map an initial width to the constants (A, B, k, phi1, phi2) of the
    trig-hyperbolic representation.  a0 at the fixed point gives phi1 = +inf.
    """
    if p.collapse_rate == 0.0:
        raise ValueError("no relaxation constants at zero collapse rate")
    if not complex(a0).real > 0.0:
        raise ValueError("Re a0 must be positive")
    A, B, d = _riccati_constants(p)
    tau0 = 1j * (2.0 * complex(a0) + A) / B
    if abs(tau0 - 1.0) < 1e-14:
        return PhaseConstants(A=complex(A), B=complex(B),
                              k=complex(math.inf, 0.0), phi1=math.inf, phi2=0.0)
    if abs(tau0 + 1.0) < 1e-14:
        raise ValueError("a0 sits on the repelling fixed point")
    k = np.arctanh(tau0 + 0j)
    return PhaseConstants(A=complex(A), B=complex(B), k=complex(k),
                          phi1=2.0 * float(k.real), phi2=2.0 * float(k.imag))


def sigma_q_of_t(t, pc: PhaseConstants, p: ModelParams,
                 d: DerivedConstants | None = None):
    """Position spread along the relaxation, stabilized against overflow.

    Evaluates sigma_q(t) from the trig-hyperbolic representation

        sigma_q^2 = (hbar / (sqrt(2) m omega)) *
                    (cosh(w1 t + phi1) + cos(w2 t + phi2)) /
                    (sin(theta) sinh(w1 t + phi1) + cos(theta) sin(w2 t + phi2))

    with numerator and denominator divided by cosh so that arguments of any
    size (including phi1 = +inf) are safe.
    """
    d = d or derive_constants(p, boltzmann=1.0)
    t = np.asarray(t, dtype=float)
    arg1 = d.omega1 * t + pc.phi1
    arg2 = d.omega2 * t + pc.phi2
    tanh1 = np.tanh(arg1)
    sech1 = np.where(np.abs(arg1) > 700.0, 0.0,
                     1.0 / np.cosh(np.clip(arg1, -700.0, 700.0)))
    sin_t, cos_t = math.sin(d.theta), math.cos(d.theta)
    num = 1.0 + np.cos(arg2) * sech1
    den = sin_t * tanh1 + cos_t * np.sin(arg2) * sech1
    if np.any(den <= 0.0):
        raise ValueError("width parameter outside the physical half plane")
    out = np.sqrt((p.hbar / (_SQRT2 * p.mass * d.omega)) * num / den)
    return float(out) if out.ndim == 0 else out


def spreads(a, p: ModelParams):
    """Position/momentum spreads and correlation of a Gaussian with width a.

    For array input returns a SpreadTriple of arrays.  The product
    sigma_q * sigma_p equals (hbar/2) sqrt(1 + (Im a / Re a)^2), so the
    uncertainty relation is saturated exactly when a is real.
    """
    a = np.asarray(a, dtype=complex)
    if np.any(a.real <= 0.0):
        raise ValueError("Re a must be positive")
    ar, ai = a.real, a.imag
    hb = p.hbar
    sq = 0.5 / np.sqrt(ar)
    sp = hb * np.sqrt((ar * ar + ai * ai) / ar)
    sqp = -0.5 * hb * ai / ar
    if a.ndim == 0:
        return SpreadTriple(float(sq), float(sp), float(sqp))
    return SpreadTriple(sq, sp, sqp)


def gaussian_energy(g: GaussianState, p: ModelParams) -> float:
    """Mean kinetic energy <p^2>/2m of the state."""
    tr = spreads(g.a, p)
    return ((p.hbar * g.kbar) ** 2 + tr.sigma_p ** 2) / (2.0 * p.mass)


def wavefunction(g: GaussianState, x, p: ModelParams):
    """Normalized position wavefunction of the state on the points x."""
    x = np.asarray(x, dtype=float)
    ar = complex(g.a).real
    norm = (2.0 * ar / math.pi) ** 0.25
    dx = x - g.xbar
    return norm * np.exp(-g.a * dx * dx + 1j * g.kbar * dx)


def free_evolve(g: GaussianState, t: float, p: ModelParams) -> GaussianState:
    """Collapse-free (unitary) evolution of a Gaussian state for time t."""
    free = dataclasses.replace(p, collapse_rate=0.0)
    a_t = a_closed_form(g.a, t, free)
    return GaussianState(a=a_t, xbar=g.xbar + p.hbar * g.kbar * t / p.mass,
                         kbar=g.kbar)


def step_means(g: GaussianState, dW: float, dt: float, p: ModelParams) -> GaussianState:
    """One Euler-Maruyama update of the packet centres for a given width.

    dW is the Brownian increment over dt.  The width itself is deterministic
    and is advanced separately (a_closed_form / integrate_a_ode); the returned
    state keeps the input a.
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    ar, ai = complex(g.a).real, complex(g.a).imag
    root = math.sqrt(lam)
    s = 0.5 / ar - al
    xbar = g.xbar + (hb / m) * g.kbar * dt + root * s * dW
    kbar = g.kbar - 2.0 * lam * al * g.kbar * dt - root * (ai / ar) * dW
    return dataclasses.replace(g, xbar=xbar, kbar=kbar)


def simulate_means(a0: complex, x0, k0, t_grid, p: ModelParams, increments):
    """Euler-Maruyama paths of the packet centres for an ensemble.

    increments has shape (len(t_grid) - 1,) + E where E is any ensemble shape,
    each entry a Brownian increment for its interval.  x0, k0 broadcast
    against E.  The width follows the closed-form flow from a0 (common to all
    members).  Returns (xbar, kbar) with shape (len(t_grid),) + E.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    increments = np.asarray(increments, dtype=float)
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    root = math.sqrt(lam)
    shape = increments.shape[1:]
    x = np.broadcast_to(np.asarray(x0, dtype=float), shape).copy()
    k = np.broadcast_to(np.asarray(k0, dtype=float), shape).copy()
    xs = np.empty((len(t_grid),) + shape)
    ks = np.empty_like(xs)
    xs[0], ks[0] = x, k
    for i in range(len(t_grid) - 1):
        dt = t_grid[i + 1] - t_grid[i]
        a = a_closed_form(a0, t_grid[i], p)
        ar, ai = a.real, a.imag
        s = 0.5 / ar - al
        dW = increments[i]
        x = x + (hb / m) * k * dt + root * s * dW
        k = k - 2.0 * lam * al * k * dt - root * (ai / ar) * dW
        xs[i + 1], ks[i + 1] = x, k
    return xs, ks


def expected_momentum(p0, t, p: ModelParams):
    """Ensemble mean momentum: exponential damping at rate 2 lam alpha."""
    t = np.asarray(t, dtype=float)
    out = np.asarray(p0, dtype=float) * np.exp(
        -2.0 * p.collapse_rate * p.momentum_coupling * t
    )
    return float(out) if out.ndim == 0 else out


def integrate_covariance(a_of_t, t_grid, p: ModelParams, c0=(0.0, 0.0, 0.0),
                         substeps: int = 4) -> CovariancePath:
    """Runge-Kutta solution of the centre-covariance ODE system.

        d Cqq = 2 Cqp / m + lam s(a)^2
        d Cqp = Cpp / m - 2 lam alpha Cqp + lam hbar c(a) s(a)
        d Cpp = -4 lam alpha Cpp + lam hbar^2 c(a)^2

    with s(a) = 1/(2 Re a) - alpha and c(a) = -Im a / Re a.  a_of_t maps a
    time to the width parameter (for example a closed-form flow).
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar

    def rhs(t, y):
        a = complex(a_of_t(t))
        s = 0.5 / a.real - al
        c = -a.imag / a.real
        qq, qp, pp = y
        return np.array([
            2.0 * qp / m + lam * s * s,
            pp / m - 2.0 * lam * al * qp + lam * hb * c * s,
            -4.0 * lam * al * pp + lam * hb * hb * c * c,
        ])

    t_grid = np.asarray(t_grid, dtype=float)
    path = numerics.rk4_path(rhs, np.asarray(c0, dtype=float), t_grid,
                             substeps=substeps)
    return CovariancePath(t=t_grid, qq=path[:, 0], qp=path[:, 1], pp=path[:, 2])


def ell(p: ModelParams, d: DerivedConstants | None = None) -> Ell:
    """Secular coefficient of the stationary position covariance.

    Cqq grows like lam * width_term^2 * t at early times and like
    lam * value^2 * t once the damping time 1/(2 lam alpha) has passed.
    """
    d = d or derive_constants(p, boltzmann=1.0)
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    if lam == 0.0:
        return Ell(0.0, 0.0, 0.0)
    c = 2.0 * d.sigma_qp_bar_sq / hb
    width = 2.0 * d.sigma_q_bar**2 - al
    tilt = math.inf if al == 0.0 else hb * c / (2.0 * lam * al * m)
    return Ell(value=tilt + width, tilt_term=tilt, width_term=width)


def stationary_covariance(t, p: ModelParams,
                          d: DerivedConstants | None = None) -> CovarianceMatrix:
    """Closed-form centre covariances for a trajectory with a = a_inf.

    Vectorizes over t.  Organised as sums of non-negative kernel terms, so the
    result keeps full relative precision even in SI units where the damping
    exponent is ~1e-20 for laboratory times.
    """
    d = d or derive_constants(p, boltzmann=1.0)
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    t = np.asarray(t, dtype=float)
    if lam == 0.0:
        z = np.zeros_like(t)
        out = CovarianceMatrix(qq=z, qp=z, pp=z)
        return _scalarize(out) if t.ndim == 0 else out
    c = 2.0 * d.sigma_qp_bar_sq / hb
    s = 2.0 * d.sigma_q_bar**2 - al
    if al == 0.0:
        qq = lam * s * s * t + lam * hb * c * s * t * t / m \
            + lam * hb * hb * c * c * t**3 / (3.0 * m * m)
        qp = lam * hb * c * s * t + lam * hb * hb * c * c * t * t / (2.0 * m)
        pp = lam * hb * hb * c * c * t
    else:
        u = 2.0 * lam * al * t
        h = hb * c / (2.0 * lam * al * m)
        qq = (s * s * u / 2.0 + h * s * numerics.f2(u)
              + 0.25 * h * h * (-numerics.k1(u))) / al
        gam = numerics.one_minus_exp(u)
        qp = gam * (hb * hb * c * c * gam / (4.0 * al * m)
                    + lam * hb * c * s) / (2.0 * lam * al)
        pp = (hb * hb * c * c / (4.0 * al)) * numerics.one_minus_exp(2.0 * u)
    out = CovarianceMatrix(qq=qq, qp=qp, pp=pp)
    return _scalarize(out) if t.ndim == 0 else out


def _scalarize(cm: CovarianceMatrix) -> CovarianceMatrix:
    return CovarianceMatrix(qq=float(cm.qq), qp=float(cm.qp), pp=float(cm.pp))


def stationary_covariance_rates(p: ModelParams,
                                d: DerivedConstants | None = None):
    """Early-time growth rates (d/dt at t=0) of (Cqq, Cqp, Cpp) at a_inf."""
    d = d or derive_constants(p, boltzmann=1.0)
    lam, al, hb = p.collapse_rate, p.momentum_coupling, p.hbar
    if lam == 0.0:
        return 0.0, 0.0, 0.0
    c = 2.0 * d.sigma_qp_bar_sq / hb
    s = 2.0 * d.sigma_q_bar**2 - al
    return lam * s * s, lam * hb * c * s, lam * hb * hb * c * c


__all__ = [
    "GaussianState", "SpreadTriple", "PhaseConstants", "CovarianceMatrix",
    "CovariancePath", "Ell",
    "a_closed_form", "integrate_a_ode", "phase_constants", "sigma_q_of_t",
    "spreads", "gaussian_energy", "wavefunction", "free_evolve",
    "step_means", "simulate_means", "expected_momentum",
    "integrate_covariance", "ell", "stationary_covariance",
    "stationary_covariance_rates",
]
