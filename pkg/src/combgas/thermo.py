"""Integrated density of states, Bose densities, and transience.

Energies are measured for the pure hopping Hamiltonian H = shift - A with the
shift at (or above) the top of the adjacency spectrum, so the bottom of the
spectrum sits at h = 0 in the infinite-volume limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .spectral import dense_spectrum, extrapolate


def _quad(func, a, b, **kw):
    # round-off warnings from near-converged tails are expected and harmless
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, a, b, **kw)
    return val, err

INF = float("inf")


class ThermoError(ValueError):
    pass


@dataclass
class StepMeasure:
    """Right-continuous empirical measure: jump `weights[i]` at `points[i]`."""

    points: np.ndarray
    weights: np.ndarray
    origin: str = "empirical"

    @classmethod
    def from_values(cls, values, weights=None, origin="empirical"):
        values = np.asarray(values, dtype=float)
        if weights is None:
            weights = np.full(values.size, 1.0 / max(values.size, 1))
        weights = np.asarray(weights, dtype=float)
        order = np.argsort(values)
        return cls(values[order], weights[order], origin)

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def mass_below(self, lam):
        """N(lam) = total weight at points <= lam (right-continuous)."""
        return float(self.weights[self.points <= lam].sum())


@dataclass
class ThermoParams:
    beta: float
    mu: float = 0.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ThermoError("beta must be positive")


def ids_finite(g, shift, cap=4096):
    """Empirical IDS of H = shift - A with weights 1/|V|."""
    vals = dense_spectrum(g, cap=cap)
    return StepMeasure.from_values(shift - vals[::-1])


def ids_from_spectrum(vals, weights, shift):
    return StepMeasure.from_values(shift - np.asarray(vals), weights)


def trace_functional(family, phi, ns):
    """Per-site trace of phi(A_{Lambda_n}) extrapolated over the volumes ns.

    The finite-volume error is boundary-driven, so the limit is read off a
    least-squares fit value_n = L + b * folner_ratio(n).
    """
    ns = sorted(ns)
    values = []
    ratios = []
    for n in ns:
        vals, w = family.spectrum(n)
        values.append(float(np.sum(w * phi(vals))))
        ratios.append(float(family.folner(n)))
    a_mat = np.stack([np.ones(len(ns)), np.asarray(ratios)], axis=1)
    coef, *_ = np.linalg.lstsq(a_mat, np.asarray(values), rcond=None)
    resid = float(np.max(np.abs(a_mat @ coef - values)))
    unc = max(resid, abs(values[-1] - (coef[0] + coef[1] * ratios[-1])), 1e-15)
    return float(coef[0]), unc, values


def e0_em(family, ns, mass_tol=2e-3, grid_points=400):
    """Estimate (E0, Em, gap) of H = ||A|| - A from finite-volume spectra.

    E0 comes from the extrapolated finite-volume spectral tops; Em is the
    smallest energy where the extrapolated IDS mass stays positive, the mass
    below decaying like the Folner ratio (boundary states only).
    """
    ns = sorted(ns)
    spectra = [family.spectrum(n) for n in ns]
    tops = [float(v.max()) for v, _ in spectra]
    norm_est, norm_unc = extrapolate(tops)
    e0 = norm_est - tops[-1]
    e0_seq = [norm_est - t for t in tops]
    e0_lim, _ = extrapolate(e0_seq)
    e0_lim = max(e0_lim, 0.0)
    hmax = norm_est - min(float(v.min()) for v, _ in spectra)
    grid = np.linspace(0.0, 0.6 * hmax, grid_points)
    ratios = np.asarray([float(family.folner(n)) for n in ns])
    a_mat = np.stack([np.ones(len(ns)), ratios], axis=1)
    masses = np.empty((len(ns), grid.size))
    for i, (vals, w) in enumerate(spectra):
        h = norm_est - vals
        order = np.argsort(h)
        hs = h[order]
        cum = np.cumsum(w[order])
        idx = np.searchsorted(hs, grid, side="right")
        masses[i] = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    limits, *_ = np.linalg.lstsq(a_mat, masses, rcond=None)
    limit_mass = limits[0]
    above = np.nonzero(limit_mass > mass_tol)[0]
    if above.size == 0:
        raise ThermoError("no IDS mass found below the scan ceiling")
    em = float(grid[above[0]])
    return e0_lim, em, em - e0_lim


def _bose_factor(x):
    # 1/(e^x - 1), x > 0
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def bose_density(measure, beta, mu):
    """rho(beta, mu) = integral of dN(h) / (e^{beta(h-mu)} - 1).

    `measure` is a StepMeasure of H or the string "chain_arcsine" for the
    closed-form measure of the infinite chain with shift 2 (see
    `bose_density_arcsine` for other shifts).  Returns +inf (a value, not an
    exception) when the h -> bottom divergence is non-integrable.
    """
    if beta <= 0:
        raise ThermoError("beta must be positive")
    if mu > 0:
        raise ThermoError("mu must be <= 0")
    if isinstance(measure, str):
        if measure != "chain_arcsine":
            raise ThermoError("unknown closed-form measure %r" % (measure,))
        return bose_density_arcsine(beta, mu, shift=2.0)
    hs = measure.points
    gap = float(hs.min()) - mu
    if gap < 0:
        raise ThermoError("mu above the spectral bottom")
    if gap == 0.0:
        return INF
    vals = np.array([_bose_factor(beta * (h - mu)) for h in hs])
    return float(np.sum(measure.weights * vals))


def bose_density_arcsine(beta, mu, shift=2.0):
    """Bose density for the chain measure dN(a) = da/(pi sqrt(4-a^2)).

    With h = shift - a the substitution a = 2 cos(phi) gives
    (1/pi) * integral_0^pi dphi / (e^{beta(shift - 2cos(phi) - mu)} - 1).
    """
    if beta <= 0:
        raise ThermoError("beta must be positive")
    gap = shift - 2.0 - mu
    if gap < 0:
        raise ThermoError("mu above the spectral bottom")
    if gap == 0.0:
        return INF  # 1/(h) ~ 1/phi^2 at the band edge is non-integrable

    def integrand(phi):
        return _bose_factor(beta * (shift - 2.0 * math.cos(phi) - mu))

    val, _ = _quad(integrand, 0.0, math.pi, limit=400,
                            epsabs=1e-13, epsrel=1e-12)
    return val / math.pi


def critical_density_shifted(beta, norm_gap):
    """Critical density of a perturbed chain via the shifted base measure.

    A norm-raising perturbation shifts the effective chemical potential of
    the unperturbed chain to -norm_gap = ||A_base|| - ||A_perturbed||.
    """
    if norm_gap <= 0:
        raise ThermoError("norm_gap must be positive")
    return bose_density_arcsine(beta, -norm_gap, shift=2.0)


def finite_volume_density(vals, weights, shift, beta, mu):
    """Per-site Bose density from an adjacency spectrum: H = shift - A."""
    h = shift - np.asarray(vals, dtype=float)
    gap = float(h.min()) - mu
    if gap <= 0:
        raise ThermoError("mu not below the finite-volume bottom")
    x = beta * (h - mu)
    out = np.zeros_like(x)
    small = x < 700
    out[small] = 1.0 / np.expm1(x[small])
    return float(np.sum(np.asarray(weights) * out))


def solve_mu(vals, weights, shift, beta, rho, tol=1e-12, max_steps=200):
    """Chemical potential with prescribed finite-volume density rho.

    Bisection on the strictly increasing map mu -> rho(beta, mu) over
    [h_min - 50/beta, h_min - tiny], where h_min is the finite-volume bottom.
    """
    if rho <= 0:
        raise ThermoError("rho must be positive")
    h_min = float((shift - np.asarray(vals)).min())
    lo = h_min - 50.0 / beta
    hi = h_min - 1e-14
    f_lo = finite_volume_density(vals, weights, shift, beta, lo) - rho
    if f_lo > 0:
        raise ThermoError("rho below reachable range at this beta")
    a, b = lo, hi
    for _ in range(max_steps):
        mid = 0.5 * (a + b)
        try:
            fm = finite_volume_density(vals, weights, shift, beta, mid) - rho
        except ThermoError:
            b = mid
            continue
        if fm < 0:
            a = mid
        else:
            b = mid
        if b - a < tol * max(1.0, abs(a)):
            break
    return 0.5 * (a + b)


def mollifier_linear(h, eps):
    """The continuous cutoff: 0 on [0,eps], linear on [eps,2eps], 1 above."""
    return np.clip((np.asarray(h, dtype=float) - eps) / eps, 0.0, 1.0)


def mollifier_smoothstep(h, eps):
    t = np.clip((np.asarray(h, dtype=float) - eps) / eps, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def condensate_split(vals, weights, shift, beta, mu, eps, mollifier="linear"):
    """Split the finite-volume density as rho = n0 + rho_normal.

    n0 collects the occupation within [0, 2eps] of the spectral bottom via
    the mollifier cutoff; the split is asymptotically independent of the
    mollifier shape.
    """
    f = {"linear": mollifier_linear, "smoothstep": mollifier_smoothstep}[mollifier]
    h = shift - np.asarray(vals, dtype=float)
    x = beta * (h - mu)
    occ = np.zeros_like(x)
    small = x < 700
    occ[small] = 1.0 / np.expm1(x[small])
    cut = f(h, eps)
    w = np.asarray(weights)
    n0 = float(np.sum(w * (1.0 - cut) * occ))
    rho_normal = float(np.sum(w * cut * occ))
    return n0, rho_normal


# ---------------------------------------------------------------------------
# transience


def green_lattice(d):
    """Diagonal Green value integral over the torus, via Bessel transform.

    integral over T^d of dm / sum_i (1 - cos theta_i)
      = integral_0^infty (e^{-t} I_0(t))^d dt,
    finite exactly when d >= 3.
    """
    if d < 3:
        return INF
    val, _ = _quad(lambda t: special.ive(0, t) ** d, 0.0, np.inf,
                            limit=400, epsabs=1e-12, epsrel=1e-11)
    return float(val)


def green_lattice_eps(d, eps):
    """Regularized Green integral with +eps in the denominator.

    Uses the exact circle average (1/2pi) int dtheta/(a - cos theta)
    = 1/sqrt(a^2-1) to peel off one angle; d >= 3 integrates the Bessel
    transform, which stays integrable there.
    """
    if eps <= 0:
        raise ThermoError("eps must be positive")
    if d == 1:
        return 1.0 / math.sqrt(eps * (eps + 2.0))
    if d == 2:
        def integrand(phi):
            a = 2.0 + eps - math.cos(phi)
            return 1.0 / math.sqrt(a * a - 1.0)
        val, _ = _quad(integrand, 0.0, math.pi, limit=400,
                                epsabs=1e-12, epsrel=1e-11)
        return float(val / math.pi)
    val, _ = _quad(
        lambda t: math.exp(-eps * t) * special.ive(0, t) ** d, 0.0, np.inf,
        limit=400, epsabs=1e-12, epsrel=1e-11)
    return float(val)


def transience(d, eps_schedule=None):
    """Classify the d-dimensional lattice by the refining Green integrals.

    The regularizer eps is shrunk geometrically: Cauchy increments mean a
    finite Green value (transient); non-shrinking increments mean divergence
    (recurrent).  Never decided by a magnitude threshold alone.
    """
    if eps_schedule is None:
        eps_schedule = [10.0 ** (-k) for k in range(1, 9)]
    seq = [green_lattice_eps(d, e) for e in eps_schedule]
    incs = [b - a for a, b in zip(seq, seq[1:])]
    ratios = [b / a for a, b in zip(incs, incs[1:]) if a > 0]
    shrinking = ratios and ratios[-1] < 0.5 and incs[-1] < 1e-2 * max(seq[-1], 1.0)
    if shrinking:
        return ("transient", green_lattice(d), seq)
    if seq[-1] > 1e12 or (ratios and ratios[-1] >= 0.5):
        return ("recurrent", None, seq)
    return ("inconclusive", None, seq)
