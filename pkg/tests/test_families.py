import math
from fractions import Fraction

import numpy as np
import pytest

from combgas import families
from combgas.families import CombFamily, FiberUnionFamily, family
from combgas.spectral import top_eigenpair


def test_catalog_names_complete():
    names = families.catalog_names()
    for want in ("chain", "comb", "star", "star_box", "nail_chain",
                 "h_graph", "ladder", "modified_ladder", "polygonal_star",
                 "polygonal_star_box", "lattice", "fiber_union"):
        assert want in names
    with pytest.raises(families.FamilyError):
        family("no_such_family")


def test_chain_closed_form_spectrum():
    fam = family("chain")
    vals, w = fam.spectrum(5)
    dense = np.linalg.eigvalsh(fam.matrix(5).toarray())
    assert np.allclose(np.sort(vals), dense, atol=1e-12)


def test_folner_ratios():
    assert family("chain").folner(10) == Fraction(2, 21)
    assert family("comb", d=1).folner(5) == Fraction(2 * 11, 11 ** 2)
    assert family("lattice", d=2, boundary="periodic").folner(4) == 0


def test_volumes_and_matrix_shapes():
    for name, params, vol in (
        ("comb", {"d": 2}, 5 ** 3),
        ("star", {"k": 4}, None),
        ("h_graph", {"k": 1}, None),
    ):
        fam = family(name, **params)
        m = fam.matrix(2)
        assert m.shape[0] == m.shape[1]
        if vol is not None:
            assert m.shape[0] == vol
        a = m.toarray()
        assert np.array_equal(a, a.T)


def test_comb_graph_matches_matrix():
    fam = CombFamily(1)
    g = fam.graph(3)
    a_graph = g.adjacency_matrix().toarray()
    # same multiset of eigenvalues regardless of vertex ordering
    e1 = np.linalg.eigvalsh(a_graph)
    e2 = np.linalg.eigvalsh(fam.matrix(3).toarray())
    assert np.allclose(e1, e2, atol=1e-10)


def test_comb_anchor_and_index():
    fam = CombFamily(2)
    n = 3
    idx = fam.index_of(n, (0, 0, 0))
    assert idx == fam.anchor_index(n)
    assert fam.index_of(n, (4, 0, 0)) is None


def test_fiber_union_is_comb_without_backbone():
    comb = CombFamily(1).matrix(4)
    fibers = FiberUnionFamily(1).matrix(4)
    diff = (comb - fibers).toarray()
    # difference supported on fiber-origin rows only, one backbone circulant
    # 9 backbone cycle edges, each contributing two symmetric entries
    assert (diff != 0).sum() == 2 * (2 * 4 + 1)


def test_truncation_norms_monotone():
    fam = family("nail_chain")
    tops = [top_eigenpair(fam.matrix(n)).top_eigenvalue for n in (5, 10, 20)]
    assert tops[0] < tops[1] < tops[2] < math.sqrt(2 + math.sqrt(5))


def test_modified_ladder_matrix_weights():
    fam = family("modified_ladder", k=3, nrem=1)
    a = fam.matrix(4).toarray()
    assert a.max() == 3.0  # the k-fold origin rung
    assert np.array_equal(a, a.T)


def test_comb_base_eigenvalues_periodic():
    fam = CombFamily(1)
    base = fam.base_eigenvalues(3)
    want = 2 * np.cos(2 * np.pi * np.arange(7) / 7)
    assert np.allclose(np.sort(base), np.sort(want), atol=1e-12)
