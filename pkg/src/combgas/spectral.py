"""Finite-volume spectra, Perron-Frobenius eigenpairs, and norm sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sla
from scipy.sparse.csgraph import connected_components

from .resolvent import theta_of

DENSE_CAP = 4096


class SpectralError(RuntimeError):
    pass


@dataclass
class SpectralResult:
    top_eigenvalue: float
    pf_vector: np.ndarray  # positive, normalized to 1 at the anchor vertex
    residual: float
    full_spectrum: np.ndarray | None = None


@dataclass
class PFLimitReport:
    ns: list
    norms: list
    extrapolated_norm: float
    uncertainty: float
    pf_pointwise: dict


def _as_matrix(g):
    return g if sparse.issparse(g) else g.adjacency_matrix()


def dense_spectrum(g, cap=DENSE_CAP):
    """All adjacency eigenvalues, ascending; refuses above the dense cap."""
    a = _as_matrix(g)
    if a.shape[0] > cap:
        raise SpectralError("dense cap exceeded: %d > %d" % (a.shape[0], cap))
    if a.shape[0] == 0:
        return np.array([])
    return np.linalg.eigvalsh(a.toarray())


def top_eigenpair(g, tol=1e-10, anchor=None):
    """Largest adjacency eigenvalue with its positive PF eigenvector.

    Lanczos (ARPACK) on A + d_max*I with a deterministic all-ones start; the
    diagonal shift keeps bipartite +-lambda pairs separated at the top.
    """
    a = _as_matrix(g)
    nvert = a.shape[0]
    if nvert == 0:
        raise SpectralError("empty graph")
    ncomp, _ = connected_components(a, directed=False)
    if ncomp > 1:
        raise SpectralError("graph is disconnected; PF eigenpair undefined")
    if anchor is None:
        anchor = 0
        if hasattr(g, "labels"):
            zeros = [i for i, lab in enumerate(g.labels) if not any(lab)]
            if zeros:
                anchor = zeros[0]
    dmax = float(a.sum(axis=1).max())
    if nvert <= 8:
        vals, vecs = np.linalg.eigh(a.toarray())
        lam, vec = float(vals[-1]), vecs[:, -1]
    else:
        shifted = (a + sparse.identity(nvert) * dmax).tocsr()
        try:
            vals, vecs = sla.eigsh(shifted, k=1, which="LA",
                                   v0=np.ones(nvert), tol=tol, maxiter=100000)
        except sla.ArpackNoConvergence as exc:
            raise SpectralError("eigensolver did not converge: %s" % exc)
        lam, vec = float(vals[0]) - dmax, vecs[:, 0]
    if vec[anchor] < 0:
        vec = -vec
    residual = float(np.linalg.norm(a @ vec - lam * vec) / np.linalg.norm(vec))
    if np.min(vec) <= 0:
        # tiny negative entries can appear at round-off level on huge graphs
        if np.min(vec) < -1e-8 * np.max(vec):
            raise SpectralError("PF vector not positive; graph connected?")
        vec = np.maximum(vec, np.finfo(float).tiny)
    vec = vec / vec[anchor]
    return SpectralResult(lam, vec, residual)


def aitken(seq):
    """Aitken delta-squared acceleration; returns the accelerated sequence."""
    seq = np.asarray(seq, dtype=float)
    if len(seq) < 3:
        return seq.copy()
    d1 = seq[1:-1] - seq[:-2]
    d2 = seq[2:] - 2.0 * seq[1:-1] + seq[:-2]
    out = seq[2:].copy()
    ok = np.abs(d2) > 1e-300
    out[ok] = seq[:-2][ok] - d1[ok] ** 2 / d2[ok]
    return out


def extrapolate(seq):
    """Aitken-extrapolated limit with an honest uncertainty estimate."""
    seq = list(seq)
    if len(seq) < 3:
        return seq[-1], abs(seq[-1] - seq[0]) if len(seq) > 1 else 0.0
    acc = aitken(seq)
    est = float(acc[-1])
    unc = abs(est - acc[-2]) if len(acc) >= 2 else abs(est - seq[-1])
    unc = max(unc, 1e-15 * max(1.0, abs(est)))
    return est, unc


def extrapolate_power(ns, vals, p=2, terms=2):
    """Least-squares limit of vals_n = L + a/n^p + b/n^(p+1) + ...

    For families whose norms converge with a known power law (free-boundary
    bases), this is far more reliable than Aitken on linearly spaced n.
    """
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(vals, dtype=float)
    cols = [np.ones_like(ns)] + [ns ** (-(p + i)) for i in range(terms)]
    a_mat = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(a_mat, vals, rcond=None)
    fit = a_mat @ coef
    resid = float(np.max(np.abs(fit - vals)))
    return float(coef[0]), max(resid, 1e-15)


def norm_sequence(family, ns, tol=1e-10, window=None, method="aitken", power=2):
    """Norms ||A_{Lambda_n}|| over ns with an extrapolated limit.

    The sequence must be strictly increasing (up to solver tolerance); a
    violation means an eigensolver bug and raises.
    """
    ns = sorted(ns)
    if len(ns) < 2 or ns[-1] < 2:
        raise SpectralError("need at least two volumes with n_max >= 2")
    norms = []
    last_result = None
    for n in ns:
        mat = family.matrix(n)
        last_result = top_eigenpair(mat, tol=tol, anchor=family.anchor_index(n))
        norms.append(last_result.top_eigenvalue)
    for a, b in zip(norms, norms[1:]):
        if b < a - 10.0 * tol * max(1.0, abs(a)):
            raise SpectralError("norm sequence not increasing: %r" % (norms,))
    if method == "power":
        est, unc = extrapolate_power(ns, norms, p=power)
    else:
        est, unc = extrapolate(norms)
    est = max(est, norms[-1])
    pf_pointwise = {}
    if window is not None:
        nlast = ns[-1]
        for lab in window:
            idx = family.index_of(nlast, lab)
            if idx is not None:
                pf_pointwise[tuple(lab)] = float(last_result.pf_vector[idx])
    return PFLimitReport(ns, norms, est, unc, pf_pointwise)


def pf_generalized_vector_comb(d, j):
    """Component e^{-|j|theta}/(2 sinh theta) of the comb PF vector.

    cosh(theta) = sqrt(d^2+1); the value depends only on the fiber coordinate.
    """
    if d < 1:
        raise SpectralError("d >= 1 required")
    lam = 2.0 * math.sqrt(d * d + 1.0)
    th = theta_of(lam)
    return math.exp(-abs(j) * th) / (2.0 * math.sinh(th))


def spectrum_csv(rows):
    """CSV export (n, volume, norm, residual) with full precision."""
    lines = ["n,volume,norm,residual"]
    for n, vol, norm, res in rows:
        lines.append("%d,%d,%.17g,%.17g" % (n, vol, norm, res))
    return "\n".join(lines) + "\n"
