import math

import numpy as np
import pytest

from combgas import comb_bec as cb
from combgas.comb_bec import (CombRunConfig, FockVector, block_matrix_element,
                              bounded_correction, comb_norm_finite,
                              condensate_coefficient, density_finite,
                              density_limit, eps_n, fixed_density_mu,
                              lattice_coeffs, norm_limit, pf_overlap,
                              pf_projection_term, q_entry, q_limit,
                              smooth_term_cheb, sweep_csv, sweep_rows,
                              two_point_finite, two_point_limit)
from combgas.families import CombFamily


def full_vector(d, n, fv):
    v = np.zeros((2 * n + 1) ** (d + 1))
    for (jv, j), a in fv.entries.items():
        v[cb._comb_index(d, n, jv, j)] += a
    return v


def dense_two_point(d, n, beta, mu, xi, eta):
    a = CombFamily(d).matrix(n).toarray()
    lam = norm_limit(d) - mu
    w, u = np.linalg.eigh(lam * np.eye(a.shape[0]) - a)
    vx = full_vector(d, n, xi)
    ve = full_vector(d, n, eta)
    return float(ve @ u @ np.diag(1.0 / np.expm1(beta * w)) @ u.T @ vx)


def test_eps_n_matches_center_kernel():
    # <d0, R_{Y_n}(lam_n) d0> = 1/(2(d+eps_n)) by construction
    from combgas.resolvent import kernel_finite_chain

    for d, n, mu in ((1, 10, -0.1), (3, 6, -0.02)):
        lam = norm_limit(d) - mu
        eps = eps_n(d, n, mu)
        assert kernel_finite_chain(lam, n, 0) == pytest.approx(
            1.0 / (2.0 * (d + eps)), rel=1e-12)
        assert eps > 0


def test_comb_norm_finite_combnorm_identity():
    # the finite-volume norm satisfies 2d <d0, R_{Y_n}(norm) d0> = 1
    from combgas.resolvent import kernel_finite_chain
    from combgas.spectral import top_eigenpair

    for d, n in ((1, 8), (2, 4)):
        lam0 = comb_norm_finite(d, n)
        assert 2 * d * kernel_finite_chain(lam0, n, 0) == pytest.approx(
            1.0, abs=1e-8)
        top = top_eigenpair(CombFamily(d).matrix(n)).top_eigenvalue
        assert lam0 == pytest.approx(top, abs=1e-8)


def test_k0_condensate_scaling_limit():
    # k_n^0 -> c * 2d/sqrt(d^2+1) under mu_n = -1/(c (2n+1)^d)
    for d, n in ((1, 400), (3, 12)):
        c = 1.7
        mu = -1.0 / (c * (2 * n + 1) ** d)
        k0, _ = lattice_coeffs(d, n, eps_n(d, n, mu))
        assert k0 == pytest.approx(c * 2 * d / math.sqrt(d * d + 1),
                                   rel=2e-3)


def test_kplus_converges_to_green_value():
    from combgas.thermo import green_lattice

    _, kplus = lattice_coeffs(3, 40, 1e-9)
    assert kplus == pytest.approx(green_lattice(3), abs=6e-3)


def test_q_limit_diagonal_value():
    for d in (1, 2, 3):
        assert q_limit(d, (0,) * d) == pytest.approx(-1.0 / d, abs=1e-8)


def test_q_entry_converges_to_q_limit():
    assert q_entry(1, 400, 1e-8, (0,)) == pytest.approx(q_limit(1, (0,)),
                                                        abs=5e-3)
    assert q_entry(3, 30, 1e-6, (1, 0, 0)) == pytest.approx(
        q_limit(3, (1, 0, 0)), abs=1e-4)


def test_bounded_correction_series_and_value():
    assert bounded_correction(0.0) == pytest.approx(-0.5, abs=1e-14)
    # series branch agrees with the direct formula at the same point
    x = 1.01e-4  # direct branch
    direct = float(bounded_correction(x))
    series = -0.5 + x / 12.0 - x ** 3 / 720.0
    assert direct == pytest.approx(series, abs=1e-12)
    assert bounded_correction(50.0) == pytest.approx(-1 / 50.0, abs=1e-12)


def test_chebyshev_vs_dense_matrix_function():
    # spec-level invariant: Chebyshev application within 1e-8 of dense
    d, n, beta, mu = 1, 4, 1.0, -0.3
    xi = FockVector.delta((0,), 0)
    eta = FockVector.delta((2,), -1)
    sm, deg = smooth_term_cheb(d, n, beta, mu, xi, eta)
    a = CombFamily(d).matrix(n).toarray()
    lam = norm_limit(d) - mu
    w, u = np.linalg.eigh(a)
    f = bounded_correction(beta * (lam - w))
    want = float(full_vector(d, n, eta) @ u @ np.diag(f) @ u.T
                 @ full_vector(d, n, xi))
    assert sm == pytest.approx(want, abs=1e-8)


def test_block_matrix_element_exact():
    d, n, beta, mu = 2, 2, 0.7, -0.33
    lam = norm_limit(d) - mu
    xi = FockVector({((0, 0), 0): 1.0, ((1, -1), 1): 0.5})
    eta = FockVector({((0, 1), 0): 1.0, ((-2, 0), -2): -0.25})
    got = block_matrix_element(d, n,
                               lambda a: 1.0 / np.expm1(beta * (lam - a)),
                               xi, eta)
    want = dense_two_point(d, n, beta, mu, xi, eta)
    assert got == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("d,n,mu,beta", [(1, 3, -0.2, 1.0), (2, 2, -0.33, 0.7)])
def test_two_point_decomposition_identity(d, n, mu, beta):
    # tensor-decomposition total equals the dense evaluation to 1e-8
    cfg = CombRunConfig(d=d, beta=beta, mu_schedule=("explicit", {n: mu}))
    xi = FockVector.delta((0,) * d, 0)
    eta = FockVector.delta((1,) + (0,) * (d - 1), min(2, n))
    bd = two_point_finite(cfg, n, xi, eta)
    want = dense_two_point(d, n, beta, mu, xi, eta)
    assert bd.total == pytest.approx(want, abs=1e-8)
    # off-fiber pair: the fiber-diagonal term must vanish
    assert bd.line_term == 0.0


def test_two_point_breakdown_diagonal():
    cfg = CombRunConfig(d=1, beta=1.0, mu_schedule=("explicit", {3: -0.2}))
    xi = FockVector.delta((0,), 0)
    bd = two_point_finite(cfg, 3, xi, xi)
    want = dense_two_point(1, 3, 1.0, -0.2, xi, xi)
    assert bd.total == pytest.approx(want, abs=1e-10)
    assert bd.line_term > 0
    assert bd.condensate_term > 0


def test_pf_overlap_normalization():
    d = 3
    wnorm2 = math.sqrt(d * d + 1.0) / (4.0 * d ** 3)
    xi = FockVector.delta((0, 0, 0), 0)
    from combgas.resolvent import kernel_line
    want = kernel_line(norm_limit(d), 0) / math.sqrt(wnorm2)
    assert pf_overlap(d, xi) == pytest.approx(want, rel=1e-12)
    # normalized overlap squared for the origin vector: d/sqrt(d^2+1)
    assert pf_overlap(d, xi) ** 2 == pytest.approx(d / math.sqrt(d * d + 1),
                                                   rel=1e-12)


def test_two_point_limit_refuses_low_dimension():
    cfg = CombRunConfig(d=2, beta=1.0, mu_schedule=("condensate_scaled", 1.0))
    xi = FockVector.delta((0, 0), 0)
    with pytest.raises(cb.CombError):
        two_point_limit(cfg, xi=xi, eta=xi)


def test_two_point_limit_linear_in_c():
    xi = FockVector.delta((0, 0, 0), 0)
    lims = []
    for c in (0.5, 1.0, 2.0):
        cfg = CombRunConfig(d=3, beta=1.0,
                            mu_schedule=("condensate_scaled", c))
        lims.append(two_point_limit(cfg, xi=xi, eta=xi, smooth_n=16))
    slope1 = (lims[1]["total"] - lims[0]["total"]) / 0.5
    slope2 = (lims[2]["total"] - lims[1]["total"]) / 1.0
    assert slope1 == pytest.approx(slope2, rel=1e-9)
    assert slope1 == pytest.approx(3 / math.sqrt(10), rel=1e-9)
    assert lims[0]["condensate_slope"] == pytest.approx(slope1, rel=1e-9)


def test_condensate_coefficient_divergence_d1():
    cfg = CombRunConfig(d=1, beta=1.0, mu_schedule=("power", 1.0))
    xi = FockVector.delta((0,), 0)
    ks = []
    for n in (10, 40, 160):
        kprime, overlaps = condensate_coefficient(cfg, n, xi, xi)
        ks.append(kprime)
        assert 0 < overlaps["xi"] <= 1.0
    assert ks[0] < ks[1] < ks[2]
    # k'_n ~ sqrt(n): quadrupling n doubles the coefficient
    assert ks[2] / ks[1] == pytest.approx(2.0, rel=0.15)


def test_density_finite_and_limit():
    from combgas import thermo

    rho = density_finite(3, 6, 1.0, -0.01)
    assert rho > 0
    cfg = CombRunConfig(d=3, beta=1.0, mu_schedule=("condensate_scaled", 1.0))
    limit, unc, seq = density_limit(cfg, ns=[6, 8, 10, 12])
    target = thermo.critical_density_shifted(1.0, 2 * math.sqrt(10) - 2)
    assert limit == pytest.approx(target, abs=5e-3)


def test_fixed_density_mu_and_projection():
    from combgas import thermo

    rho = thermo.critical_density_shifted(1.0, 2 * math.sqrt(10) - 2) + 0.1
    mu = fixed_density_mu(3, 6, 1.0, rho)
    assert mu < 0
    xi = FockVector.delta((0, 0, 0), 0)
    term = pf_projection_term(3, 6, mu, xi, xi)
    assert term > 0


def test_sweep_csv_shape():
    cfg = CombRunConfig(d=1, beta=1.0, mu_schedule=("power", 1.0))
    xi = FockVector.delta((0,), 0)
    rows = sweep_rows(cfg, [2, 4], xi, xi)
    text = sweep_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0].startswith("n,mu_n,eps_n")
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "2"
