"""Ensemble (master equation) dynamics in characteristic-function form.

Averaging the trajectory ensemble gives a translation-covariant master
equation for the density matrix.  Its characteristic function

    rho~_t(k, x) = exp{ -c1 k^2 - c2 k x - c3 x^2 - i c4 k - i c5 x + c6 }

stays Gaussian-exponential for Gaussian data, with the moment dictionary

    <q> = -hbar c4          var_q  = 2 hbar^2 c1
    <p> = -hbar c5          var_p  = 2 hbar^2 c3
    cov_qp (symmetrized) = hbar^2 c2

coeff_flow advances the coefficient vector by the closed-form solution of

    c1' = c2/m + lam alpha^2 / (2 hbar^2)      c4' = c5/m
    c2' = 2 c3/m - 2 lam alpha c2              c5' = -2 lam alpha c5
    c3' = lam/2 - 4 lam alpha c3               c6' = 0

For general states the same dynamics is carried by a Green identity: the full
characteristic function is the freely sheared one evaluated at a damped
argument times an explicit Gaussian weight.  green_factors exposes that
identity, evolve_characteristic pushes a coefficient vector through it (an
arithmetic route independent of coeff_flow, used for cross-validation), and
position_density performs the double quadrature that turns the identity into
the spatial probability density, either exactly or in its short-time and
smoothed approximations.

All long-time kernels are evaluated through `numerics`, so the formulas hold
from u = 2*lam*alpha*t ~ 1e-20 (SI, laboratory times) up to saturation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import numerics
from .errors import ResolutionError
from .gaussian import GaussianState, free_evolve, spreads, wavefunction
from .model import ModelParams


@dataclass(frozen=True)
class CharCoefficients:
    """Coefficient vector of the exponential characteristic function."""

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float = 0.0


@dataclass(frozen=True)
class StateMoments:
    q_mean: float
    p_mean: float
    var_q: float
    var_p: float
    cov_qp: float


@dataclass(frozen=True)
class GreenFactors:
    """Pullback data: rho~_t(k, x) = exp(log_weight) * rho~_0(k0, x0)."""

    k0: float
    x0: float
    log_weight: float


@dataclass(frozen=True)
class DensityProfile:
    x: np.ndarray
    density: np.ndarray
    method: str
    norm: float
    beta: float | None = None


def coefficients_from_gaussian(g: GaussianState, p: ModelParams) -> CharCoefficients:
    """Coefficient vector of a pure Gaussian state."""
    a = complex(g.a)
    ar, ai = a.real, a.imag
    hb = p.hbar
    return CharCoefficients(
        c1=1.0 / (8.0 * hb * hb * ar),
        c2=-ai / (2.0 * hb * ar),
        c3=(ar * ar + ai * ai) / (2.0 * ar),
        c4=-g.xbar / hb,
        c5=-g.kbar,
        c6=0.0,
    )


def moments_from_coefficients(c: CharCoefficients, p: ModelParams) -> StateMoments:
    hb = p.hbar
    return StateMoments(
        q_mean=-hb * c.c4,
        p_mean=-hb * c.c5,
        var_q=2.0 * hb * hb * c.c1,
        var_p=2.0 * hb * hb * c.c3,
        cov_qp=hb * hb * c.c2,
    )


def purity(c: CharCoefficients, p: ModelParams) -> float:
    """Tr rho^2; equals 1 exactly for a pure Gaussian coefficient vector."""
    disc = 4.0 * c.c1 * c.c3 - c.c2 * c.c2
    if disc <= 0.0:
        raise ValueError("coefficient vector is not a physical state")
    return 1.0 / (2.0 * p.hbar * math.sqrt(disc))


def energy_from_coefficients(c: CharCoefficients, p: ModelParams) -> float:
    """Ensemble mean kinetic energy <p^2>/2m."""
    hb = p.hbar
    return hb * hb * (2.0 * c.c3 + c.c5 * c.c5) / (2.0 * p.mass)


def mean_energy(e0: float, t, p: ModelParams):
    """Closed-form ensemble energy: relaxation to the asymptotic value at
    rate 4 lam alpha, or linear heating when the momentum coupling is zero."""
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    t = np.asarray(t, dtype=float)
    if lam == 0.0:
        out = np.broadcast_to(np.asarray(e0, dtype=float), t.shape).copy()
    elif al == 0.0:
        out = e0 + lam * hb * hb * t / (2.0 * m)
    else:
        e_inf = hb * hb / (8.0 * m * al)
        out = e_inf + (e0 - e_inf) * np.exp(-4.0 * lam * al * t)
    return float(out) if out.ndim == 0 else out


def coeff_flow(c: CharCoefficients, t: float, p: ModelParams) -> CharCoefficients:
    """Closed-form coefficient vector after time t.

    Uses the cancellation-safe kernels throughout, with explicit branches for
    the free (lam = 0) and undamped (alpha = 0) limits.
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    if lam == 0.0 or al == 0.0:
        # free shear, plus linear noise growth when lam > 0
        return CharCoefficients(
            c1=c.c1 + c.c2 * t / m + c.c3 * t * t / (m * m)
            + lam * t**3 / (6.0 * m * m),
            c2=c.c2 + 2.0 * c.c3 * t / m + lam * t * t / (2.0 * m),
            c3=c.c3 + 0.5 * lam * t,
            c4=c.c4 + c.c5 * t / m,
            c5=c.c5,
            c6=c.c6,
        )
    u = 2.0 * lam * al * t
    d = math.exp(-u)
    gam = float(numerics.one_minus_exp(u))
    # written so every term is a product of well-scaled factors; the naive
    # fixed-point-plus-deviation form 1/(8 al) + (c3 - 1/(8 al)) d^2 cancels
    # catastrophically when c3 << 1/(8 al) and u is at laboratory scale
    gam2 = float(numerics.one_minus_exp(2.0 * u))
    return CharCoefficients(
        c1=c.c1 + lam * al * al * t / (2.0 * hb * hb)
        + c.c2 * gam / (2.0 * m * lam * al)
        + c.c3 * gam * gam / (4.0 * m * m * lam * lam * al * al)
        + (-float(numerics.k1(u))) / (32.0 * m * m * lam * lam * al**3),
        c2=c.c2 * d + c.c3 * gam * d / (m * lam * al)
        + gam * gam / (8.0 * m * lam * al * al),
        c3=c.c3 * d * d + gam2 / (8.0 * al),
        c4=c.c4 + c.c5 * gam / (2.0 * m * lam * al),
        c5=c.c5 * d,
        c6=c.c6,
    )


def green_factors(k: float, x: float, t: float, p: ModelParams) -> GreenFactors:
    """Pullback of the characteristic function to its initial data.

    rho~_t(k, x) = exp(log_weight) * rho~_0(k, x0) with

        x0 = x e^{-u} + k gamma(u) / (2 m lam alpha),   u = 2 lam alpha t,

    and a log-weight quadratic in (x0, x) whose kernel coefficients are the
    k1/k2/k3 combinations (all non-positive, so the weight damps).  The
    alpha = 0 limit reduces to the pure position-noise kernel
    -(lam t / 6)(x0^2 + x x0 + x^2) with x0 = x + k t / m.
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    if lam == 0.0 or t == 0.0:
        return GreenFactors(k0=k, x0=x + k * t / m, log_weight=0.0)
    if al == 0.0:
        x0 = x + k * t / m
        return GreenFactors(
            k0=k, x0=x0,
            log_weight=-(lam * t / 6.0) * (x0 * x0 + x * x0 + x * x),
        )
    u = 2.0 * lam * al * t
    gam = float(numerics.one_minus_exp(u))
    x0 = x * math.exp(-u) + k * gam / (2.0 * m * lam * al)
    quad = (
        x0 * x0 * float(numerics.k1(u))
        + 2.0 * x * x0 * float(numerics.k2(u))
        + x * x * float(numerics.k3(u))
    ) / (8.0 * al * gam * gam)
    log_w = -lam * al * al * k * k * t / (2.0 * hb * hb) + quad
    return GreenFactors(k0=k, x0=x0, log_weight=log_w)


def evolve_characteristic(c: CharCoefficients, t: float, p: ModelParams) -> CharCoefficients:
    """Advance a coefficient vector through the Green identity.

    Composes the free shear with the damped-argument substitution and the
    quadratic weight, term by term.  Algebraically this equals coeff_flow, but
    the arithmetic path is different, which makes the agreement of the two a
    real consistency check.
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    if lam == 0.0 or al == 0.0 or t == 0.0:
        return coeff_flow(c, t, p)
    c1s = c.c1 + c.c2 * t / m + c.c3 * t * t / (m * m)
    c2s = c.c2 + 2.0 * c.c3 * t / m
    c3s = c.c3
    c4s = c.c4 + c.c5 * t / m
    c5s = c.c5
    u = 2.0 * lam * al * t
    d = math.exp(-u)
    gam = float(numerics.one_minus_exp(u))
    gsh = gam / (2.0 * m * lam * al)
    ss = -float(numerics.f2(u)) / (2.0 * m * lam * al)
    q1 = float(numerics.k1(u))
    q2 = float(numerics.k2(u))
    q3 = float(numerics.k3(u))
    denom = 8.0 * al * gam * gam
    return CharCoefficients(
        c1=c1s + c2s * ss + c3s * ss * ss
        + lam * al * al * t / (2.0 * hb * hb) - gsh * gsh * q1 / denom,
        c2=d * (c2s + 2.0 * c3s * ss) - gsh * (d * q1 + q2) / (0.5 * denom),
        c3=c3s * d * d - (d * d * q1 + 2.0 * d * q2 + q3) / denom,
        c4=c4s + c5s * ss,
        c5=c5s * d,
        c6=c.c6,
    )


def beta_t(t: float, p: ModelParams) -> float:
    """Width parameter of the Gaussian that the Green weight approaches.

    The smoothed density is the free density convolved with a Gaussian kernel
    exp(-beta y^2); beta decays like t^-3 for short damping times.
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    if lam == 0.0 or t == 0.0:
        return math.inf
    ratio = m * al / (hb * t)
    return 1.5 * (m * m) / (hb * hb * lam * (1.0 + 3.0 * ratio * ratio) * t**3)


def _density_quadrature(g0: GaussianState, t: float, p: ModelParams, x,
                        b_weight: float, shift_coef: float,
                        nk: int, ny: int):
    """Shared double quadrature for the exact and short-time densities.

    The density is

        p_t(x) = (1/2 pi hbar) int dk dy e^{-iky/hbar} e^{-b_weight k^2}
                 psi_S(x + y + s k) conj(psi_S(x + y - s k)),   s = shift_coef,

    with psi_S the freely evolved initial state.  Window sizes follow the
    Gaussian decay scales of the integrand; resolution follows the fastest
    phase present.
    """
    m, hb = p.mass, p.hbar
    gs = free_evolve(g0, t, p)
    a_s = complex(gs.a)
    tr = spreads(a_s, p)
    sig = tr.sigma_q
    x = np.asarray(x, dtype=float)

    b_k = sig * sig / (2.0 * hb * hb) + b_weight \
        + 2.0 * a_s.real * shift_coef * shift_coef
    k_max = 8.0 / math.sqrt(b_k)
    # integrate y around the packet centre for each x: y = y0 + v with
    # y0 = xbar_S - x, so the Gaussian support always sits inside the window
    v_half = 7.0 * sig + abs(shift_coef) * k_max
    w_max = v_half + abs(shift_coef) * k_max
    # fastest v-oscillation: outer transform plus the state's own chirp
    v_fast = k_max / hb + abs(gs.kbar) + 2.0 * (abs(a_s.imag) + a_s.real) * w_max
    ny_needed = int(10 * v_half * v_fast / math.pi) + 1
    ny = max(ny, ny_needed)
    ny += (ny + 1) % 2
    # fastest k-oscillation: transform phase over the full |y| range plus the
    # chirp the k-dependent shift drags through the state
    y_abs_max = float(np.max(np.abs(gs.xbar - x))) + v_half
    k_fast = y_abs_max / hb + abs(shift_coef) * (
        2.0 * (abs(a_s.imag) + a_s.real) * w_max + abs(gs.kbar))
    nk_needed = int(10 * k_max * k_fast / math.pi) + 1
    nk = max(nk, nk_needed)
    nk += (nk + 1) % 2
    if nk * ny > 6_000_000:
        raise ResolutionError("density quadrature grid would exceed limits")

    kg = np.linspace(-k_max, k_max, nk)
    vg = np.linspace(-v_half, v_half, ny)
    weight = np.exp(-b_weight * kg * kg)
    out = np.empty(x.shape)
    kv = np.exp(-1j * np.outer(kg, vg) / hb)
    shift = shift_coef * kg[:, None]
    for i, xi in np.ndenumerate(x):
        y0 = gs.xbar - xi
        base = gs.xbar + vg[None, :]
        vals = wavefunction(gs, base + shift, p) * np.conj(
            wavefunction(gs, base - shift, p)
        )
        integrand = kv * vals * weight[:, None]
        inner = simpson(integrand, x=vg, axis=1)
        inner *= np.exp(-1j * kg * y0 / hb)
        out[i] = simpson(inner, x=kg).real / (2.0 * math.pi * hb)
    return out


def position_density(g0: GaussianState, t: float, p: ModelParams, x,
                     method: str = "exact", nk: int = 257, ny: int = 513) -> DensityProfile:
    """Spatial probability density of the evolved ensemble.

    method:
      'exact'     full quadrature of the Green identity
      'expansion' same quadrature with the short-time (cubic) weight
      'smoothed'  free density convolved with the beta_t Gaussian
      'free'      the freely evolved density itself (baseline)

    The initial state is the pure Gaussian g0.  Returns the density sampled
    on x, along with its quadrature norm as a self-check (should be 1 to
    within the quadrature tolerance).
    """
    lam, al, m, hb = p.collapse_rate, p.momentum_coupling, p.mass, p.hbar
    x = np.asarray(x, dtype=float)
    beta = None
    if method == "exact":
        if lam == 0.0 or t == 0.0:
            dens = np.abs(wavefunction(free_evolve(g0, t, p), x, p)) ** 2
        else:
            u = 2.0 * lam * al * t
            if al == 0.0:
                b_w = lam * t**3 / (6.0 * m * m)
                s_c = 0.0
            else:
                b_w = lam * al * al * t / (2.0 * hb * hb) \
                    - float(numerics.k1(u)) / (32.0 * m * m * lam * lam * al**3)
                s_c = float(numerics.f2(u)) / (4.0 * m * lam * al)
            dens = _density_quadrature(g0, t, p, x, b_w, s_c, nk, ny)
    elif method == "expansion":
        b_w = lam * t**3 / (6.0 * m * m) + lam * al * al * t / (2.0 * hb * hb)
        s_c = lam * al * t * t / (2.0 * m)
        dens = _density_quadrature(g0, t, p, x, b_w, s_c, nk, ny)
    elif method == "smoothed":
        beta = beta_t(t, p)
        gs = free_evolve(g0, t, p)
        if not math.isfinite(beta):
            dens = np.abs(wavefunction(gs, x, p)) ** 2
        else:
            half = 8.0 * (1.0 / math.sqrt(2.0 * beta) + spreads(gs.a, p).sigma_q)
            yg = np.linspace(-half, half, max(ny, 513))
            kern = np.sqrt(beta / math.pi) * np.exp(-beta * yg * yg)
            frees = np.abs(wavefunction(gs, x[:, None] + yg[None, :], p)) ** 2
            dens = simpson(frees * kern[None, :], x=yg, axis=1)
    elif method == "free":
        dens = np.abs(wavefunction(free_evolve(g0, t, p), x, p)) ** 2
    else:
        raise ValueError(f"unknown density method: {method}")
    norm = float(np.trapezoid(dens, x))
    return DensityProfile(x=x, density=dens, method=method, norm=norm, beta=beta)


def interval_probability(profile: DensityProfile, lo: float, hi: float) -> float:
    """Probability assigned to [lo, hi] by trapezoid integration of the
    profile, with linear interpolation at the interval ends."""
    if hi < lo:
        lo, hi = hi, lo
    x, d = profile.x, profile.density
    lo = max(lo, float(x[0]))
    hi = min(hi, float(x[-1]))
    if hi <= lo:
        return 0.0
    inside = (x > lo) & (x < hi)
    xs = np.concatenate(([lo], x[inside], [hi]))
    ds = np.concatenate(([np.interp(lo, x, d)], d[inside], [np.interp(hi, x, d)]))
    return float(np.trapezoid(ds, xs))


__all__ = [
    "CharCoefficients", "StateMoments", "GreenFactors", "DensityProfile",
    "coefficients_from_gaussian", "moments_from_coefficients", "purity",
    "energy_from_coefficients", "mean_energy", "coeff_flow", "green_factors",
    "evolve_characteristic", "beta_t", "position_density",
    "interval_probability",
]
