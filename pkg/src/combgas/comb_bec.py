"""Condensation engine for the comb graphs Z^d -| Z.

Finite volumes are X_n -| Y_n with X_n the periodic box (Z_{2n+1})^d and Y_n
the chain [-n,n].  Everything routes through the tensor decomposition

    H_n^{-1} = I (x) R_{Y_n}(lam_n)
             + Phi_n (x) R_{Y_n}(lam_n) P_0 R_{Y_n}(lam_n),

with lam_n = ||A|| - mu_n, so no computation ever assembles the full
(2n+1)^(d+1) operator for large volumes; the backbone factor Phi_n reduces to
d-dimensional lattice sums (k_n^0, k_n^+, Q_n) and the fiber factors to
closed-form chain kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy import integrate, linalg as dla, special

from . import thermo
from .families import CombFamily
from .resolvent import (finite_chain_resolvent_entry, kernel_finite_chain,
                        kernel_line, theta_of)


class CombError(ValueError):
    pass


def norm_limit(d):
    return 2.0 * math.sqrt(d * d + 1.0)


def lambda_n(d, mu):
    if mu >= 0:
        raise CombError("mu must be negative")
    return norm_limit(d) - mu


def eps_n(d, n, mu):
    """The backbone self-energy: <d0, R_{Y_n}(lam_n) d0> = 1/(2(d+eps_n))."""
    lam = lambda_n(d, mu)
    tau = theta_of(lam)
    return math.sqrt(lam * lam - 4.0) / (2.0 * math.tanh((n + 1) * tau)) - d


def comb_norm_finite(d, n, tol=1e-14):
    """||A_{Lambda_n}|| from 2d * <d0, R_{Y_n}(t) d0> = 1 by bisection."""
    lo, hi = 2.0 + 1e-13, norm_limit(d)

    def f(t):
        return 2.0 * d * kernel_finite_chain(t, n, 0) - 1.0

    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if f(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# lattice sums over the discrete torus


def _torus_grids(d, n):
    side = 2 * n + 1
    theta1 = 2.0 * np.pi * np.arange(-n, n + 1) / side
    cos1 = np.cos(theta1)
    shape = [1] * d
    cos_axes = []
    theta_axes = []
    for ax in range(d):
        sh = shape.copy()
        sh[ax] = side
        cos_axes.append(cos1.reshape(sh))
        theta_axes.append(theta1.reshape(sh))
    s = np.zeros([side] * d)
    csum = np.zeros([side] * d)
    for ax in range(d):
        s = s + (1.0 - cos_axes[ax])
        csum = csum + cos_axes[ax]
    return theta_axes, csum, s


def lattice_coeffs(d, n, eps):
    """(k_n^0, k_n^+): zero mode 1/((2n+1)^d eps) and the rest of the sum
    of 1/(eps + sum_i (1-cos theta_i)) over the discrete torus."""
    if eps <= 0:
        raise CombError("eps must be positive")
    side = 2 * n + 1
    vol = side ** d
    _, _, s = _torus_grids(d, n)
    flat = s.ravel()
    k0 = 1.0 / (vol * eps)
    mask = flat > 1e-12
    kplus = float(np.sum(1.0 / (eps + flat[mask]))) / vol
    return k0, kplus


def q_entry(d, n, eps, delta):
    """Q_n(Delta): exact lattice sum of the normalized-numerator kernel."""
    if eps <= 0:
        raise CombError("eps must be positive")
    delta = tuple(delta)
    if len(delta) != d:
        raise CombError("delta must have %d components" % d)
    side = 2 * n + 1
    vol = side ** d
    theta_axes, csum, s = _torus_grids(d, n)
    phase = np.zeros([side] * d)
    for ax in range(d):
        phase = phase + delta[ax] * theta_axes[ax]
    num = (csum / d) * np.cos(phase) - 1.0
    return float(np.sum(num / (eps + s))) / vol


def q_limit(d, delta, tol=1e-10):
    """Q(Delta) on the continuous torus via the Bessel-transform quadrature.

    1/(eps + s) -> int e^{-st} dt turns each angle average into a scaled
    modified Bessel factor; the two divergent pieces cancel inside one
    absolutely convergent t-integral (the numerator vanishes at theta = 0).
    """
    delta = tuple(delta)
    if len(delta) != d:
        raise CombError("delta must have %d components" % d)
    if d == 1:
        # cos(t)cos(Dt) - 1 = -[ (1-cos((D+1)t)) + (1-cos((D-1)t)) ]/2 and
        # the Fejer integral of (1-cos(mt))/(1-cos t) equals |m|.
        m = delta[0]
        return -0.5 * (abs(m + 1) + abs(m - 1))

    def integrand(t):
        base = [special.ive(abs(m), t) for m in delta]
        prod_all = float(np.prod(base))
        acc = 0.0
        for ax in range(d):
            fac = 0.5 * (special.ive(abs(delta[ax] - 1), t)
                         + special.ive(abs(delta[ax] + 1), t))
            rest = prod_all / base[ax] if base[ax] != 0.0 else float(
                np.prod([b for i, b in enumerate(base) if i != ax]))
            acc += fac * rest
        return acc / d - special.ive(0, t) ** d

    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, 0.0, np.inf, limit=600,
                                  epsabs=tol * 1e-2, epsrel=tol * 1e-2)
    return float(val)


def phi_entry_limit(d, delta):
    """<delta_j, Phi delta_k> of the limiting backbone operator, d >= 3."""
    if d < 3:
        raise CombError("limit backbone operator needs d >= 3 (transience)")
    return 2.0 * d * d * (thermo.green_lattice(d) + q_limit(d, delta))


# ---------------------------------------------------------------------------
# test vectors and run configuration


@dataclass
class FockVector:
    """Finitely supported amplitudes on (base coordinate, fiber coordinate)."""

    entries: dict = field(default_factory=dict)

    @classmethod
    def delta(cls, jvec, j):
        return cls({(tuple(jvec), int(j)): 1.0})

    def fibers(self):
        out = {}
        for (jvec, j), amp in self.entries.items():
            out.setdefault(jvec, {})[j] = amp
        return out

    def support_radius(self):
        r = 0
        for (jvec, j) in self.entries:
            r = max(r, abs(j), *(abs(c) for c in jvec) if jvec else (0,))
        return r

    def norm(self):
        return math.sqrt(sum(abs(a) ** 2 for a in self.entries.values()))


@dataclass
class CombRunConfig:
    d: int
    beta: float
    mu_schedule: object = ("condensate_scaled", 1.0)
    n_range: tuple = (2, 8)

    def mu_of(self, n):
        kind = self.mu_schedule[0]
        if kind == "explicit":
            return float(self.mu_schedule[1][n])
        if kind == "condensate_scaled":
            c = float(self.mu_schedule[1])
            return -1.0 / (c * (2 * n + 1) ** self.d)
        if kind == "power":
            # mu_n = -n^{-p}
            p = float(self.mu_schedule[1])
            return -float(n) ** (-p)
        raise CombError("unknown mu schedule %r" % (self.mu_schedule,))


# ---------------------------------------------------------------------------
# bounded correction and its Chebyshev application


def bounded_correction(x):
    """f(x) = 1/(e^x - 1) - 1/x, continuously extended by f(0) = -1/2.

    Series below x = 1e-4 for stability: f = -1/2 + x/12 - x^3/720 + ...
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = -0.5 + xs / 12.0 - xs ** 3 / 720.0
    xl = x[~small]
    with np.errstate(over="ignore"):
        out[~small] = np.where(xl > 700, -1.0 / xl,
                               1.0 / np.expm1(np.clip(xl, None, 700)) - 1.0 / xl)
    return out


def chebyshev_coeffs(func, lo, hi, tol=1e-12, max_deg=4096):
    """Adaptive Chebyshev expansion of func on [lo, hi]."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    deg = 32
    while True:
        coeffs = npcheb.chebinterpolate(lambda u: func(mid + half * u), deg)
        scale = np.max(np.abs(coeffs))
        if np.all(np.abs(coeffs[-4:]) < tol * scale) or deg >= max_deg:
            break
        deg *= 2
    keep = np.nonzero(np.abs(coeffs) >= 1e-16 * scale)[0]
    return coeffs[: keep[-1] + 1] if keep.size else coeffs[:1]


def chebyshev_apply(mat, coeffs, lo, hi, vec):
    """Clenshaw evaluation of sum_k c_k T_k(scaled mat) applied to vec."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)

    def xhat(v):
        return (mat @ v - mid * v) / half

    b1 = np.zeros_like(vec)
    b2 = np.zeros_like(vec)
    for k in range(len(coeffs) - 1, 0, -1):
        b1, b2 = coeffs[k] * vec + 2.0 * xhat(b1) - b2, b1
    return coeffs[0] * vec + xhat(b1) - b2


def _comb_index(d, n, jvec, j):
    side = 2 * n + 1
    idx = 0
    for c in jvec:
        if abs(c) > n:
            raise CombError("support escapes the volume")
        idx = idx * side + (c + n)
    if abs(j) > n:
        raise CombError("support escapes the volume")
    return idx * side + (j + n)


def _to_full(d, n, fv):
    vec = np.zeros((2 * n + 1) ** (d + 1))
    for (jvec, j), amp in fv.entries.items():
        vec[_comb_index(d, n, jvec, j)] += amp
    return vec


def smooth_term_cheb(d, n, beta, mu, xi, eta, tol=1e-12):
    """<eta, f(beta H_n) xi> by a Chebyshev expansion in A_{Lambda_n}."""
    lam = lambda_n(d, mu)
    mat = CombFamily(d).matrix(n)
    radius = norm_limit(d)
    lo, hi = -radius - 1e-9, radius + 1e-9
    coeffs = chebyshev_coeffs(
        lambda a: bounded_correction(beta * (lam - a)), lo, hi, tol=tol)
    vxi = _to_full(d, n, xi)
    veta = _to_full(d, n, eta)
    return float(veta @ chebyshev_apply(mat, coeffs, lo, hi, vxi)), len(coeffs)


def block_matrix_element(d, n, func, xi, eta):
    """Exact <eta, func(A_{Lambda_n}) xi> via base-Fourier fiber blocks.

    In the base eigenbasis the comb adjacency splits into chain-plus-impurity
    tridiagonal blocks A_Y + a_p P_0; matrix elements reduce to lattice sums
    of per-block fiber elements, deduplicated over equal base eigenvalues.
    The eigenvalue grid is built on the same theta grid as the phases so that
    each a_p is paired with its own Fourier mode.
    """
    side = 2 * n + 1
    theta_axes, csum, _ = _torus_grids(d, n)
    base = np.round(2.0 * csum, 10)
    uniq, uinv = np.unique(base, return_inverse=True)
    fib_xi = {jv: _fiber_vec(n, f) for jv, f in xi.fibers().items()}
    fib_eta = {jv: _fiber_vec(n, f) for jv, f in eta.fibers().items()}
    pairs = [(jv_e, jv_x) for jv_e in fib_eta for jv_x in fib_xi]
    off = np.ones(side - 1)
    elem = np.zeros((len(pairs), uniq.size))
    for ui, a in enumerate(uniq):
        diag = np.zeros(side)
        diag[n] = a
        w, u = dla.eigh_tridiagonal(diag, off)
        fw = func(w)
        proj_xi = {jv: u.T @ v for jv, v in fib_xi.items()}
        proj_eta = {jv: u.T @ v for jv, v in fib_eta.items()}
        for pi, (jv_e, jv_x) in enumerate(pairs):
            elem[pi, ui] = float(np.sum(proj_eta[jv_e] * fw * proj_xi[jv_x]))
    total = 0.0
    vol = side ** d
    grid_elem = elem[:, uinv.ravel()]
    for pi, (jv_e, jv_x) in enumerate(pairs):
        delta = tuple(e - x for e, x in zip(jv_e, jv_x))
        if any(delta):
            phase = np.zeros([side] * d)
            for ax in range(d):
                phase = phase + delta[ax] * theta_axes[ax]
            total += float(np.sum(np.cos(phase).ravel() * grid_elem[pi])) / vol
        else:
            total += float(np.sum(grid_elem[pi])) / vol
    return total


def _fiber_vec(n, fiber_map):
    v = np.zeros(2 * n + 1)
    for j, amp in fiber_map.items():
        if abs(j) > n:
            raise CombError("support escapes the volume")
        v[j + n] = amp
    return v


# ---------------------------------------------------------------------------
# two-point function, finite volume and limit


@dataclass
class TwoPointBreakdown:
    smooth_term: float
    line_term: float
    q_term: float
    condensate_term: float
    total: float
    n: int
    mu: float
    eps: float
    k0: float
    kplus: float


def two_point_finite(cfg, n, xi, eta, smooth="cheb"):
    """omega_n(a+(xi) a(eta)) = <eta, (e^{beta H_n} - 1)^{-1} xi>
    through the tensor decomposition of H_n^{-1}."""
    d, beta = cfg.d, cfg.beta
    mu = cfg.mu_of(n)
    if mu >= 0:
        raise CombError("mu must be negative")
    lam = lambda_n(d, mu)
    eps = eps_n(d, n, mu)
    k0, kplus = lattice_coeffs(d, n, eps)
    fib_xi = {jv: _fiber_vec(n, f) for jv, f in xi.fibers().items()}
    fib_eta = {jv: _fiber_vec(n, f) for jv, f in eta.fibers().items()}

    # fiber-diagonal part I (x) R_{Y_n}
    line = 0.0
    rmat = None
    for jv, ve in fib_eta.items():
        if jv in fib_xi:
            if rmat is None:
                rmat = _chain_resolvent(lam, n)
            line += float(ve @ rmat @ fib_xi[jv])

    # rank-one fiber factor: overlaps with z_n = R_{Y_n}(lam) delta_0
    z = np.array([kernel_finite_chain(lam, n, j) for j in range(-n, n + 1)])
    a_eta = {jv: float(v @ z) for jv, v in fib_eta.items()}
    a_xi = {jv: float(v @ z) for jv, v in fib_xi.items()}
    pref = 2.0 * d * (d + eps)
    qpart = 0.0
    for jv_e, ae in a_eta.items():
        for jv_x, ax in a_xi.items():
            delta = tuple(e - x for e, x in zip(jv_e, jv_x))
            qpart += (kplus + q_entry(d, n, eps, delta)) * ae * ax
    qpart *= pref
    cond = pref * k0 * sum(a_eta.values()) * sum(a_xi.values())

    if smooth == "cheb":
        sm, _ = smooth_term_cheb(d, n, beta, mu, xi, eta)
    else:
        sm = block_matrix_element(
            d, n, lambda a: bounded_correction(beta * (lam - a)), xi, eta)
    total = sm + (line + qpart + cond) / beta
    return TwoPointBreakdown(sm, line / beta, qpart / beta, cond / beta,
                             total, n, mu, eps, k0, kplus)


def _chain_resolvent(lam, n):
    size = 2 * n + 1
    out = np.empty((size, size))
    for j in range(-n, n + 1):
        for k in range(j, n + 1):
            v = finite_chain_resolvent_entry(lam, n, j, k)
            out[j + n, k + n] = v
            out[k + n, j + n] = v
    return out


def pf_overlap(d, fv, normalized=True):
    """Overlap <v, fv> with the generalized PF vector v = u (x) w.

    u is constant 1 on the backbone; w is R_Z(||A||) delta_0, normalized to
    a unit fiber vector by default (||w_tilde||^2 = sqrt(d^2+1)/(4 d^3)).
    """
    lam = norm_limit(d)
    acc = 0.0
    for (jvec, j), amp in fv.entries.items():
        acc += kernel_line(lam, j) * amp
    if normalized:
        acc /= math.sqrt(math.sqrt(d * d + 1.0) / (4.0 * d ** 3))
    return acc


def two_point_limit(cfg_or_d, beta=None, c=None, xi=None, eta=None,
                    smooth_n=None):
    """Infinite-volume two-point function under the condensate scaling.

    Only meaningful in the transient regime d >= 3; for d <= 2 the finite
    volume values diverge and this refuses with a divergence verdict.
    """
    if isinstance(cfg_or_d, CombRunConfig):
        cfg = cfg_or_d
        d, beta = cfg.d, cfg.beta
        if cfg.mu_schedule[0] != "condensate_scaled":
            raise CombError("limit defined for the condensate scaling")
        c = float(cfg.mu_schedule[1])
    else:
        d = cfg_or_d
    if d <= 2:
        raise CombError(
            "divergent: no locally normal limit state for d <= 2")
    lam = norm_limit(d)
    fib_xi = xi.fibers()
    fib_eta = eta.fibers()

    line = 0.0
    for jv, fe in fib_eta.items():
        if jv in fib_xi:
            fx = fib_xi[jv]
            for j, aj in fe.items():
                for k, ak in fx.items():
                    line += aj * ak * kernel_line(lam, j - k)

    wt = {jv: sum(a * kernel_line(lam, j) for j, a in f.items())
          for jv, f in fib_eta.items()}
    wx = {jv: sum(a * kernel_line(lam, j) for j, a in f.items())
          for jv, f in fib_xi.items()}
    green = thermo.green_lattice(d)
    phi_part = 0.0
    qcache = {}
    for jv_e, ae in wt.items():
        for jv_x, ax in wx.items():
            delta = tuple(e - x for e, x in zip(jv_e, jv_x))
            key = tuple(sorted(abs(t) for t in delta))
            if key not in qcache:
                qcache[key] = q_limit(d, delta)
            phi_part += 2.0 * d * d * (green + qcache[key]) * ae * ax
    wnorm2 = math.sqrt(d * d + 1.0) / (4.0 * d ** 3)
    cond = c * sum(wt.values()) * sum(wx.values()) / wnorm2

    if smooth_n is None:
        smooth_n = {3: 30}.get(d, 24)
    lam_shift = lam  # mu -> 0 in the limit
    sm_small = block_matrix_element(
        d, smooth_n - 8, lambda a: bounded_correction(beta * (lam_shift - a)),
        xi, eta)
    sm = block_matrix_element(
        d, smooth_n, lambda a: bounded_correction(beta * (lam_shift - a)),
        xi, eta)
    sm_unc = abs(sm - sm_small)
    total = sm + (line + phi_part + cond) / beta
    return {
        "total": total,
        "smooth_term": sm,
        "smooth_uncertainty": sm_unc,
        "line_term": line / beta,
        "phi_term": phi_part / beta,
        "condensate_term": cond / beta,
        "condensate_slope": cond / beta / c if c else None,
    }


def condensate_coefficient(cfg, n, xi=None, eta=None):
    """k'_n = (2d(d+eps_n) k_n / beta) ||R_{Y_n}(lam_n) delta_0||^2 and the
    overlaps with the finite-volume PF vector v_n = u_n (x) w_n."""
    d, beta = cfg.d, cfg.beta
    mu = cfg.mu_of(n)
    lam = lambda_n(d, mu)
    eps = eps_n(d, n, mu)
    k0, kplus = lattice_coeffs(d, n, eps)
    z = np.array([kernel_finite_chain(lam, n, j) for j in range(-n, n + 1)])
    znorm2 = float(z @ z)
    kprime = 2.0 * d * (d + eps) * (k0 + kplus) * znorm2 / beta
    overlaps = {}
    for name, fv in (("xi", xi), ("eta", eta)):
        if fv is None:
            continue
        acc = 0.0
        for (jvec, j), amp in fv.entries.items():
            acc += z[j + n] * amp
        overlaps[name] = acc / math.sqrt(znorm2)
    return kprime, overlaps


# ---------------------------------------------------------------------------
# densities


def density_finite(d, n, beta, mu):
    """Per-site density on Lambda_n via the exact block spectrum."""
    vals, w = CombFamily(d).spectrum(n)
    return thermo.finite_volume_density(vals, w, norm_limit(d), beta, mu)


def density_limit(cfg, ns=None):
    """Extrapolated per-site density under the condensate scaling.

    The finite-size error is boundary-driven (~ 1/(2n+1)), so the limit is a
    power-law fit in the inverse side length.
    """
    if ns is None:
        ns = list(range(cfg.n_range[0], cfg.n_range[1] + 1))
    vals = [density_finite(cfg.d, n, cfg.beta, cfg.mu_of(n)) for n in ns]
    sides = np.asarray([2 * n + 1 for n in ns], dtype=float)
    from .spectral import extrapolate_power
    limit, unc = extrapolate_power(sides, vals, p=1, terms=3)
    return limit, unc, list(zip(ns, vals))


def fixed_density_mu(d, n, beta, rho):
    """Finite-volume chemical potential pinned by the density constraint."""
    vals, w = CombFamily(d).spectrum(n)
    return thermo.solve_mu(vals, w, norm_limit(d), beta, rho)


def pf_projection_term(d, n, mu, xi, eta):
    """<eta, H_n^{-1} P_{v_n} xi> with v_n the finite-volume PF eigenvector."""
    lam0 = comb_norm_finite(d, n)
    z = np.array([kernel_finite_chain(lam0, n, j) for j in range(-n, n + 1)])
    znorm2 = float(z @ z)
    vol = (2 * n + 1) ** d
    gap = (norm_limit(d) - mu) - lam0

    def overlap(fv):
        acc = 0.0
        for (jvec, j), amp in fv.entries.items():
            acc += z[j + n] * amp
        return acc / math.sqrt(znorm2 * vol)

    return overlap(eta) * overlap(xi) / gap


def sweep_rows(cfg, ns, xi, eta, with_density=True, smooth="cheb"):
    """Rows (n, mu, eps, k0, kplus, kprime, two_point_total, density)."""
    rows = []
    for n in ns:
        bd = two_point_finite(cfg, n, xi, eta, smooth=smooth)
        kprime, _ = condensate_coefficient(cfg, n, xi, eta)
        dens = (density_finite(cfg.d, n, cfg.beta, cfg.mu_of(n))
                if with_density else float("nan"))
        rows.append((n, bd.mu, bd.eps, bd.k0, bd.kplus, kprime, bd.total,
                     dens))
    return rows


def sweep_csv(rows):
    header = "n,mu_n,eps_n,k0_n,kplus_n,kprime_n,two_point_total,density_n"
    lines = [header]
    for r in rows:
        lines.append("%d," % r[0] + ",".join("%.17g" % v for v in r[1:]))
    return "\n".join(lines) + "\n"
