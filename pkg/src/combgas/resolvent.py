"""Closed-form resolvent kernels for chain-like graphs and numeric solves.

All kernels are entries of (lam*I - A)^{-1} for lam above the spectral radius,
written in the hyperbolic parametrization 2*cosh(theta) = lam.  The finite
chain [-n,n] admits a fully closed form, which the infinite-line and
half-line kernels are limits of.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sla


class ResolventDomainError(ValueError):
    pass


def theta_of(lam):
    # arccosh(lam/2) via log form, stable for lam -> 2+
    if lam <= 2.0:
        raise ResolventDomainError("lam must exceed 2, got %r" % lam)
    half = lam / 2.0
    return math.log(half + math.sqrt(half * half - 1.0))


def kernel_half_line(lam):
    """<delta_0, R(lam) delta_0> at the endpoint of the half-infinite chain."""
    if lam <= 2.0:
        raise ResolventDomainError("half-line kernel needs lam > 2")
    return 2.0 / (lam + math.sqrt(lam * lam - 4.0))


def kernel_line(lam, j=0):
    """<delta_j, R(lam) delta_0> on the two-sided infinite chain."""
    if lam <= 2.0:
        raise ResolventDomainError("line kernel needs lam > 2")
    th = theta_of(lam)
    return math.exp(-abs(j) * th) / (2.0 * math.sinh(th))


def kernel_box(lam):
    """End-corner diagonal kernel of the half-infinite chain of squares."""
    if lam <= 2.0 * math.sqrt(2.0):
        raise ResolventDomainError("box kernel needs lam > 2*sqrt(2)")
    return 2.0 / (lam + math.sqrt(lam * lam - 8.0))


def kernel_finite_chain(lam, n, j):
    """z(lam,n)_j = <delta_j, R(lam) delta_0> on the chain [-n,n].

    Hyperbolic closed form, valid for lam > 2; at j=0 this equals
    tanh((n+1)theta)/sqrt(lam^2-4).
    """
    if abs(j) > n:
        raise ResolventDomainError("|j| <= n required")
    th = theta_of(lam)
    # sinh((n+1-|j|)th) / (2 sinh th cosh((n+1)th)), guarded against overflow
    a = (n + 1 - abs(j)) * th
    b = (n + 1) * th
    # sinh(a)/cosh(b) = (e^{a-b} - e^{-a-b}) / (1 + e^{-2b})
    val = (math.exp(a - b) - math.exp(-a - b)) / (1.0 + math.exp(-2.0 * b))
    return val / (2.0 * math.sinh(th))


def finite_chain_resolvent_entry(lam, n, j, k):
    """General entry <delta_j, R(lam) delta_k> on the chain [-n,n], lam > 2."""
    if abs(j) > n or abs(k) > n:
        raise ResolventDomainError("indices must lie in [-n,n]")
    th = theta_of(lam)
    # with 1-based positions a <= b in a path of N = 2n+1 vertices:
    # G_ab = sinh(a th) sinh((N+1-b) th) / (sinh th sinh((N+1) th))
    a = min(j, k) + n + 1
    b = max(j, k) + n + 1
    big = 2 * n + 2
    # exponential-form ratio to avoid overflow at large n*th
    num = ((math.exp((a + big - b - big) * th) - math.exp((-a + big - b - big) * th))
           - (math.exp((a - big + b - big) * th) - math.exp((-a + b - 2 * big) * th)))
    den = 2.0 * (1.0 - math.exp(-2.0 * big * th))
    return num / den / math.sinh(th)


def finite_chain_resolvent_matrix(lam, n):
    """Dense (2n+1)x(2n+1) resolvent of the chain [-n,n] via the closed form."""
    size = 2 * n + 1
    out = np.empty((size, size))
    for j in range(-n, n + 1):
        for k in range(j, n + 1):
            v = finite_chain_resolvent_entry(lam, n, j, k)
            out[j + n, k + n] = v
            out[k + n, j + n] = v
    return out


def transfer_matrix(lam):
    """2x2 step matrix of the chain finite-difference system; det = 1."""
    return np.array([[-1.0, lam], [-lam, lam * lam - 1.0]])


def transfer_step(lam, state):
    x, y = state
    return (-x + lam * y, -lam * x + (lam * lam - 1.0) * y)


def transfer_eigen(lam):
    """Eigenvalues mu+- (product 1) and eigenvectors (2, lam +- sqrt(lam^2-4))."""
    s = math.sqrt(lam * lam - 4.0)
    mu_plus = (lam * lam - 2.0 + lam * s) / 2.0
    mu_minus = (lam * lam - 2.0 - lam * s) / 2.0
    v_plus = np.array([2.0, lam + s])
    v_minus = np.array([2.0, lam - s])
    return (mu_plus, mu_minus), (v_plus, v_minus)


def resolvent_solve(g, lam, rhs, tol=1e-10, top=None, margin=1e-8):
    """Solve (lam*I - A) x = rhs on a finite graph by conjugate gradients.

    Requires lam above the spectrum by `margin`; pass `top` to skip the
    eigenvalue estimate.  Residual is verified against tol*||rhs||.
    """
    a = g if sparse.issparse(g) else g.adjacency_matrix()
    nvert = a.shape[0]
    rhs = np.asarray(rhs, dtype=float)
    if not np.any(rhs):
        return np.zeros(nvert)
    if top is None:
        if nvert <= 2:
            top = float(np.max(np.linalg.eigvalsh(a.toarray()))) if nvert else 0.0
        else:
            top = float(sla.eigsh(a, k=1, which="LA", v0=np.ones(nvert),
                                  return_eigenvectors=False)[0])
    if lam <= top + margin:
        raise ResolventDomainError(
            "lam=%g not above spectrum top %g + margin" % (lam, top))
    m = (sparse.identity(nvert) * lam - a).tocsr()
    x, info = sla.cg(m, rhs, rtol=min(tol, 1e-12), atol=0.0, maxiter=20 * nvert)
    res = np.linalg.norm(m @ x - rhs)
    if info != 0 or res > tol * np.linalg.norm(rhs):
        raise ResolventDomainError("cg failed: info=%d residual=%g" % (info, res))
    return x


def perturbed_resolvent_apply(system, lam, v, base_solve=None):
    """Apply R_{A_p}(lam) to v = (x on base, y on attached) in block form.

    `system` carries (D, C, B) on a finite support together with a base
    resolvent oracle; the correction reduces to the finite linear solve
    (I - S(lam)) z = (D R_A + C R_B C^t R_A) x + C R_B y on the support, then

        base part     = R_A (x + z)
        attached part = R_B (C^t R_A x + y + C^t R_A z).
    """
    nb = system.b_dim
    v = np.asarray(v, dtype=float)
    x, y = v[: v.size - nb], v[v.size - nb:]
    if base_solve is None:
        base_solve = system.base_solve
    rb = system.rb(lam)
    sup = np.asarray(system.support_indices, dtype=int)
    rax = base_solve(lam, x)
    dc = system.d_block + system.c_block @ rb @ system.c_block.T
    rhs_sup = dc @ rax[sup]
    if nb:
        rhs_sup = rhs_sup + system.c_block @ (rb @ y)
    s_mat = system.secular_matrix_on_support(lam)
    eye = np.eye(len(sup))
    if np.linalg.cond(eye - s_mat) > 1e12:
        raise ResolventDomainError(
            "I - S(lam) numerically singular; lam too close to the perturbed norm")
    z_sup = np.linalg.solve(eye - s_mat, rhs_sup)
    z = np.zeros_like(x)
    z[sup] = z_sup
    raz = base_solve(lam, z)
    base_part = rax + raz
    if nb:
        att = rb @ (system.c_block.T @ (rax[sup] + raz[sup]) + y)
        return np.concatenate([base_part, att])
    return base_part
