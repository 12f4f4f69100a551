"""System construction, flux/entropy evaluation, structural predicates."""

import numpy as np
import pytest

from consym import expr as ex
from consym import system as sy
from consym.errors import NumericalError, SpecError


def box(lower, upper, guards=()):
    return sy.DomainBox(np.array(lower, float), np.array(upper, float), guards)


def fd_flux(sys_, p, h=1e-6):
    """Finite-difference Jacobian of psi_at, the oracle for flux_at."""
    p = np.asarray(p, dtype=float)
    cols = []
    for j in range(p.size):
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        cols.append((sys_.psi_at(up) - sys_.psi_at(dn)) / (2 * h))
    return np.stack(cols, axis=-1)


def simple_zsystem():
    dom = box([-1, -1], [1, 1])
    return sy.make_zsystem(ex.parse("z1 + 0.5*z2^2", 2), ex.parse("1", 2), dom)


def test_make_zsystem_direct_differentiation():
    sys_ = simple_zsystem()
    p = np.array([0.3, 0.7])
    assert np.allclose(sys_.psi_at(p), [1.0, 0.7])
    assert np.allclose(sys_.flux_at(p), [[0.0, 0.0], [0.0, 1.0]])
    psis = sys_.psi_exprs()
    assert ex.to_text(psis[0]) == "1"
    assert ex.to_text(psis[1]) == "z2"


def test_make_zsystem_self_scale():
    zeta = ex.parse("z1 + 0.5*z2^2", 2)
    dom = box([0.5, -1], [2, 1])
    sys_ = sy.make_zsystem(zeta, zeta, dom)
    p = np.array([1.0, 0.0])
    assert np.allclose(sys_.flux_at(p), np.eye(2))
    for q in dom.sample(20, 3):
        assert np.allclose(sys_.flux_at(q), fd_flux(sys_, q), rtol=1e-6, atol=1e-7)


def test_make_zsystem_rejects_vanishing_scale():
    dom = box([-1, -1], [1, 1])
    with pytest.raises(SpecError):
        sy.make_zsystem(ex.parse("z1", 2), ex.parse("0", 2), dom)
    with pytest.raises(SpecError):
        sy.make_zsystem(ex.parse("z1", 2), ex.parse("z1", 2), dom)  # sign change inside box


def test_eos_identity_sigma():
    zeta = ex.parse("z1 + 0.5*z2^2", 2)
    dom = box([0.5, -1], [2, 1])
    sys_ = sy.make_zsystem_eos(zeta, ex.parse("z1", 1), None, dom)
    pts = sys_.samples(32)
    xi = sys_.terms[0].scale.value(pts)
    assert np.allclose(xi, ex.evaluate(zeta, pts), rtol=0, atol=1e-12)


def test_eos_gamma_law_residual():
    gamma = 1.4
    sigma = ex.parse(f"{gamma / (gamma - 1)}*z1^{(gamma - 1) / gamma}", 1)
    zeta = ex.parse("z1 + 0.5*z2^2", 2)
    dom = box([2.9, -0.5], [4.0, 0.5])
    sys_ = sy.make_zsystem_eos(zeta, sigma, None, dom)
    pts = sys_.samples(64)
    xi = sys_.terms[0].scale.value(pts)
    resid = np.abs(ex.evaluate(sigma, xi[:, None]) - ex.evaluate(zeta, pts))
    assert resid.max() <= 1e-12 * (1.0 + np.abs(ex.evaluate(zeta, pts)).max())


def test_eos_decreasing_sigma_rejected():
    zeta = ex.parse("z1 + 0.5*z2^2", 2)
    dom = box([0.5, -1], [2, 1])
    with pytest.raises(SpecError):
        sy.make_zsystem_eos(zeta, ex.parse("-z1", 1), None, dom)


def test_eos_flux_matches_finite_differences():
    gamma = 1.4
    sigma = ex.parse(f"{gamma / (gamma - 1)}*z1^{(gamma - 1) / gamma}", 1)
    zeta = ex.parse("z1 + 0.5*(z2^2 + z3^2)", 3)
    dom = box([3.0, -0.5, -0.5], [4.0, 0.5, 0.5])
    sys_ = sy.make_zsystem_eos(zeta, sigma, None, dom)
    for p in sys_.samples(20, 5):
        assert np.allclose(sys_.flux_at(p), fd_flux(sys_, p), rtol=1e-6, atol=1e-6)


def test_eos_with_state_variable_flux():
    # sigma(x, w) = x*w relates zeta = x * z2 with state w = z2
    sigma = ex.parse("z1*z2", 2)
    zeta = ex.parse("z1*z2", 2)  # then xi(z) = z1 exactly
    dom = box([0.5, 0.5], [2.0, 2.0])
    sys_ = sy.make_zsystem_eos(zeta, sigma, ex.parse("z2", 2), dom)
    pts = sys_.samples(16)
    xi = sys_.terms[0].scale.value(pts)
    assert np.allclose(xi, pts[:, 0], atol=1e-11)
    for p in pts[:8]:
        assert np.allclose(sys_.flux_at(p), fd_flux(sys_, p), rtol=1e-5, atol=1e-6)


def test_entropy_direct_formula():
    dom = box([0.5, -1, -1], [2, 1, 1])
    sys_ = sy.make_zsystem(ex.parse("z1", 3), ex.parse("1", 3), dom)
    p = np.array([0.8, 0.1, -0.2])
    pair = sy.entropy_at(sys_, p)
    a = sys_.flux_at(p)
    assert np.isclose(pair.q[0], a[0] @ p - 1.0)
    assert np.allclose(pair.psi, [1.0, 0.0, 0.0])


def test_check_closed_homogeneous_degree_zero():
    dom = box([0.5, 0.5], [2.0, 2.0])
    closed = sy.make_zsystem(ex.parse("z2/z1", 2), ex.parse("1", 2), dom)
    assert sy.check_closed(closed)
    open_sys = simple_zsystem()
    assert not sy.check_closed(open_sys)


def test_check_symmetric_ahat():
    sys_ = simple_zsystem()
    assert sy.check_symmetric_ahat(sys_)
    zeta = ex.parse("z1 + 0.5*z2^2", 2)
    dom = box([0.5, -1], [2, 1])
    assert sy.check_symmetric_ahat(sy.make_zsystem(zeta, zeta, dom))

    # psi built from one scale but tested against an unrelated one fails
    dom2 = box([0.5, 0.5], [2.0, 2.0])
    hand = sy.make_explicit([ex.parse("z1", 2), ex.parse("z1*z2", 2)], dom2)
    assert not sy.check_symmetric_ahat(hand, xi=ex.parse("exp(z2)", 2))

    exact = sy.make_zsystem(ex.parse("z1", 2), ex.parse("1", 2), box([-1, -1], [1, 1]))
    assert sy.check_symmetric_ahat(exact, tol=1e-15)


def test_build_from_wy():
    dom = box([3.0, -0.5], [4.0, 0.5])
    sys_ = sy.build_from_WY(np.diag([0.0, 1.0]), np.array([1.0, 0.0]), ex.parse("1", 2), dom)
    assert ex.to_text(sys_.recipe["zeta"]) in ("z1 + 0.5*(z2*z2)", "z1 + 0.5*z2^2", "z1 + 0.5*(z2*z2)")
    pts = sys_.samples(8)
    assert np.allclose(ex.evaluate(sys_.recipe["zeta"], pts), pts[:, 0] + 0.5 * pts[:, 1] ** 2)

    lin = sy.build_from_WY(np.zeros((2, 2)), np.array([1.0, 0.0]), ex.parse("1", 2), dom)
    assert np.allclose(lin.psi_at(np.array([3.3, 0.1])), [1.0, 0.0])

    with pytest.raises(SpecError):
        sy.build_from_WY(np.eye(2), np.array([1.0, 0.0]), ex.parse("1", 2), dom)


def test_rank_flux():
    dom = box([0.5, -1], [2, 1])
    ident = sy.make_zsystem(ex.parse("z1 + 0.5*z2^2", 2), ex.parse("z1 + 0.5*z2^2", 2), dom)
    assert sy.rank_flux(ident, ident.samples(32)) == 2
    # zeta = z1 puts all flux content in row 1 (a constant scale would zero it out)
    one_row = sy.make_zsystem(ex.parse("z1", 2), ex.parse("exp(z1)", 2), box([-1, -1], [1, 1]))
    assert sy.rank_flux(one_row, one_row.samples(32)) == 1
    flat = sy.make_zsystem(ex.parse("z1", 2), ex.parse("1", 2), box([-1, -1], [1, 1]))
    assert sy.rank_flux(flat, flat.samples(8)) == 0


def test_multi_single_term_equals_zsystem():
    zeta = ex.parse("z1 + 0.5*z2^2", 2)
    xi = ex.parse("2 + z2", 2)
    dom = box([-1, -0.5], [1, 0.5])
    multi = sy.make_multi([(zeta, {"xi": xi})], dom)
    plain = sy.make_zsystem(zeta, xi, dom)
    pts = dom.sample(16, 1)
    assert np.array_equal(multi.psi_at(pts), plain.psi_at(pts))
    assert np.array_equal(multi.flux_at(pts), plain.flux_at(pts))


def test_multi_psi_is_sum_of_terms():
    z1 = ex.parse("z1 + 0.5*z2^2", 2)
    z2 = ex.parse("z2 + 0.25*z1^2", 2)
    x1 = ex.parse("1 + 0.1*z1", 2)
    x2 = ex.parse("2 + 0.1*z2", 2)
    dom = box([-0.5, -0.5], [0.5, 0.5])
    multi = sy.make_multi([(z1, {"xi": x1}), (z2, {"xi": x2})], dom)
    a = sy.make_zsystem(z1, x1, dom)
    b = sy.make_zsystem(z2, x2, dom)
    pts = dom.sample(16, 2)
    assert np.allclose(multi.psi_at(pts), a.psi_at(pts) + b.psi_at(pts), atol=1e-14)


def test_domain_guard_filtering_and_center_check():
    with pytest.raises(SpecError):
        box([-1, -1], [1, 1], (ex.parse("z1 - 10", 2),))
    dom = box([-1, -1], [1, 1], (ex.parse("z1 + z2 + 1.5", 2),))
    pts = dom.sample(100, 0)
    assert pts.shape == (100, 2)
    assert np.all(pts[:, 0] + pts[:, 1] + 1.5 > 0)


def test_samples_deterministic():
    dom = box([-1, -1], [1, 1])
    assert np.array_equal(dom.sample(64, 9), dom.sample(64, 9))
    assert not np.array_equal(dom.sample(64, 9), dom.sample(64, 10))


def test_legendre_consistency_along_flux_perturbations():
    # dq_i/dt == sum_j z_j * d(a_ij)/dt along any smooth path z(t)
    gamma = 1.4
    sigma = ex.parse(f"{gamma / (gamma - 1)}*z1^{(gamma - 1) / gamma}", 1)
    zeta = ex.parse("z1 + 0.5*z2^2", 2)
    dom = box([2.9, -0.5], [4.0, 0.5])
    sys_ = sy.make_zsystem_eos(zeta, sigma, None, dom)
    rng = np.random.default_rng(21)
    h = 1e-6
    for _ in range(10):
        p = dom.sample(1, int(rng.integers(1000)))[0]
        d = rng.normal(size=2)
        d /= np.linalg.norm(d)
        up, dn = p + h * d, p - h * d
        q_up = sy.entropy_at(sys_, up).q
        q_dn = sy.entropy_at(sys_, dn).q
        dq = (q_up - q_dn) / (2 * h)
        da = (sys_.flux_at(up) - sys_.flux_at(dn)) / (2 * h)
        assert np.allclose(dq, da @ p, rtol=1e-4, atol=1e-5)
