import math

import numpy as np
import pytest

from combgas import spectral
from combgas.families import CombFamily, family
from combgas.graphs import build_chain, build_cycle, from_edges


def test_dense_spectrum_chain_closed_form():
    g = build_chain(5)  # path on 11 vertices
    vals = spectral.dense_spectrum(g)
    want = np.sort(2 * np.cos(np.pi * np.arange(1, 12) / 12.0))
    assert np.allclose(vals, want, atol=1e-12)


def test_dense_cap_refused():
    fam = CombFamily(1)
    with pytest.raises(spectral.SpectralError):
        spectral.dense_spectrum(fam.matrix(40), cap=100)


def test_top_eigenpair_cycle():
    g = build_cycle(9)
    res = spectral.top_eigenpair(g)
    assert res.top_eigenvalue == pytest.approx(2.0, abs=1e-9)
    assert res.residual < 1e-8
    assert np.all(res.pf_vector > 0)
    # PF vector of a vertex-transitive graph is constant (anchor-normalized)
    assert np.allclose(res.pf_vector, 1.0, atol=1e-6)


def test_top_eigenpair_disconnected_refused():
    g = from_edges([(0,), (1,), (2,), (3,)], [((0,), (1,)), ((2,), (3,))])
    with pytest.raises(spectral.SpectralError):
        spectral.top_eigenpair(g)


def test_pf_vector_reconstruction_residual():
    fam = family("comb", d=1)
    mat = fam.matrix(30)
    res = spectral.top_eigenpair(mat, anchor=fam.anchor_index(30))
    err = np.linalg.norm(mat @ res.pf_vector
                         - res.top_eigenvalue * res.pf_vector)
    assert err / np.linalg.norm(res.pf_vector) < 1e-6


def test_aitken_accelerates_geometric():
    seq = [1.0 - 0.5 ** k for k in range(1, 10)]
    acc = spectral.aitken(seq)
    assert abs(acc[-1] - 1.0) < 1e-12


def test_extrapolate_power_recovers_power_law():
    ns = np.array([10, 20, 40, 80, 160], dtype=float)
    vals = 3.0 - 2.0 / ns ** 2 + 0.5 / ns ** 3
    est, unc = spectral.extrapolate_power(ns, vals, p=2)
    assert est == pytest.approx(3.0, abs=1e-10)


def test_norm_sequence_comb_d1():
    report = spectral.norm_sequence(family("comb", d=1), [6, 10, 14, 18])
    assert all(a < b for a, b in zip(report.norms, report.norms[1:]))
    assert report.extrapolated_norm == pytest.approx(2 * math.sqrt(2),
                                                     abs=1e-6)


def test_norm_sequence_window_pf_values():
    fam = family("comb", d=1)
    report = spectral.norm_sequence(fam, [10, 14, 18],
                                    window=[(0, 0), (0, 1), (0, 2)])
    # anchor-normalized PF vector decays along the fiber like the
    # generalized eigenvector e^{-|j| theta}
    th = math.acosh(math.sqrt(2.0))
    v0 = report.pf_pointwise[(0, 0)]
    assert v0 == pytest.approx(1.0, abs=1e-12)
    assert report.pf_pointwise[(0, 1)] / v0 == pytest.approx(
        math.exp(-th), abs=1e-3)


def test_pf_generalized_vector_comb_values():
    # ratio between consecutive fiber entries is e^{-theta}
    for d in (1, 2, 3):
        lam = 2.0 * math.sqrt(d * d + 1.0)
        th = math.acosh(lam / 2.0)
        r = (spectral.pf_generalized_vector_comb(d, 3)
             / spectral.pf_generalized_vector_comb(d, 2))
        assert r == pytest.approx(math.exp(-th), abs=1e-12)
    assert spectral.pf_generalized_vector_comb(1, 0) == pytest.approx(
        0.5 / math.sinh(math.acosh(math.sqrt(2.0))), abs=1e-14)


def test_comb_block_spectrum_matches_dense():
    # block eigenvalues carry multiplicity weights; compare weighted moments
    # and the spectral edges against the dense assembly
    fam = CombFamily(1)
    for n in (3, 6):
        vals_blocks, w = fam.spectrum(n)
        vals_dense = np.linalg.eigvalsh(fam.matrix(n).toarray())
        assert np.isclose(w.sum(), 1.0)
        assert np.isclose(vals_blocks.max(), vals_dense.max(), atol=1e-10)
        assert np.isclose(vals_blocks.min(), vals_dense.min(), atol=1e-10)
        for k in range(1, 7):
            assert np.isclose(np.sum(w * vals_blocks ** k),
                              np.mean(vals_dense ** k), atol=1e-10)


def test_bipartite_odd_trace_vanishes():
    g = build_chain(6)
    vals = spectral.dense_spectrum(g)
    assert abs(np.sum(vals ** 3)) < 1e-10
    assert abs(np.sum(vals ** 5)) < 1e-10


def test_spectrum_csv_format():
    text = spectral.spectrum_csv([(2, 5, 2.1213203435999999, 1e-12)])
    lines = text.strip().split("\n")
    assert lines[0] == "n,volume,norm,residual"
    assert lines[1].startswith("2,5,2.1213203435999")  # 17 significant digits
