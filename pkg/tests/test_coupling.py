"""Block assembly, constraint coupling and shared-level mixing."""

import numpy as np
import pytest

from consym import catalog as cat
from consym import coupling as cp
from consym import expr as ex
from consym import hyperbolicity as hy
from consym import symmetry as sm
from consym import system as sy
from consym.errors import SpecError


def fd_flux(s, p, h=1e-6):
    cols = []
    for j in range(p.size):
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        cols.append((s.psi_at(up) - s.psi_at(dn)) / (2 * h))
    return np.stack(cols, axis=-1)


def test_assemble_single_constituent_matches():
    s = cat.euler_isentropic(2)
    block = cp.assemble_block([s])
    pts = s.samples(16, 1)
    assert np.array_equal(block.psi_at(pts), s.psi_at(pts))


def test_block_entropy_is_sum_of_constituents():
    s1 = cat.euler_isentropic(2, gamma=1.4)
    s2 = cat.euler_isentropic(2, gamma=5 / 3)
    block = cp.assemble_block([s1, s2])
    pts = block.samples(24, 2)
    pair = sy.entropy_at(block, pts)
    q1 = sy.entropy_at(s1, pts[:, :2]).q
    q2 = sy.entropy_at(s2, pts[:, 2:]).q
    assert np.abs(pair.q - (q1 + q2)).max() <= 1e-12


def test_block_contains_paired_generators():
    s = cat.euler_isentropic(3)
    space = sm.solve_zsystem(s)
    block = cp.assemble_block([s, s])
    block_space = sm.solve_zsystem(block)
    paired = cp.block_generators([s, s], [[g, g] for g in space.zero_part])
    for g in paired:
        assert block_space.residual(g) <= 1e-8


def test_couple_a_two_identical_hyperbolic():
    iso = cat.euler_isentropic(2)
    space = sm.solve_zsystem(iso)
    lam = np.array([1.0, -1.0]) / np.sqrt(2)
    spec = cp.spec_a_identical(iso, 2, np.array([0.0, 1.0]), lam, 0.0)
    gens = cp.block_generators([iso, iso], [[g, g] for g in space.zero_part])
    coupled, transported = cp.couple_a(spec, generators=gens)
    assert (coupled.n, coupled.m) == (3, 2)
    pts = coupled.samples(64, 3)
    H = coupled.hess_dir(np.array([1.0, 0.0]), pts)
    mins = [np.linalg.eigvalsh(H[k])[0] for k in range(len(pts))]
    assert min(mins) >= 0
    for g in transported.basis:
        assert sm.constraint_residual(coupled, g, pts[:32]) <= 1e-8


def test_couple_a_congruence_against_fd():
    iso = cat.euler_isentropic(2)
    lam = np.array([1.0, -1.0]) / np.sqrt(2)
    spec = cp.spec_a_identical(iso, 2, np.array([0.0, 1.0]), lam, 0.0)
    coupled, _ = cp.couple_a(spec)
    e = np.array([1.0, 0.0])
    for p in coupled.samples(5, 4):
        exact = coupled.hess_dir(e, p[None])[0]
        fd = np.zeros_like(exact)
        h = 1e-5
        f = lambda q: float(e @ coupled.psi_at(q))
        n = p.size
        for i in range(n):
            for j in range(n):
                pp, pm, mp, mm = (p.copy() for _ in range(4))
                pp[i] += h; pp[j] += h
                pm[i] += h; pm[j] -= h
                mp[i] -= h; mp[j] += h
                mm[i] -= h; mm[j] -= h
                fd[i, j] = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h)
        assert np.abs(exact - 0.5 * (fd + fd.T)).max() <= 1e-4


def test_couple_a_gradient_structure():
    iso = cat.euler_isentropic(2)
    lam = np.array([1.0, -1.0]) / np.sqrt(2)
    spec = cp.spec_a_identical(iso, 2, np.array([0.0, 1.0]), lam, 0.0)
    coupled, _ = cp.couple_a(spec)
    for p in coupled.samples(10, 5):
        assert np.allclose(coupled.flux_at(p), fd_flux(coupled, p), rtol=1e-5, atol=1e-6)


def test_couple_a_shift_with_constraint_value():
    iso = cat.euler_isentropic(2)
    space = sm.solve_zsystem(iso)
    lam = np.array([1.0, -1.0]) / np.sqrt(2)
    gens = cp.block_generators([iso, iso], [[g, g] for g in space.zero_part])
    spec0 = cp.spec_a_identical(iso, 2, np.array([0.0, 1.0]), lam, 0.0)
    spec1 = cp.spec_a_identical(iso, 2, np.array([0.0, 1.0]), lam, 0.7)
    _, t0 = cp.couple_a(spec0, generators=gens)
    _, t1 = cp.couple_a(spec1, generators=gens)
    g0, g1 = t0.basis[0], t1.basis[0]
    # with a zero constraint value the shift is the plain projection; a nonzero
    # value adds the projected column action
    assert np.allclose(g0.Z, g1.Z, atol=1e-12)
    assert not np.allclose(g0.omega, g1.omega, atol=1e-12)


def test_couple_a_rejects_incompatible_generator():
    iso = cat.euler_isentropic(2)
    lam = np.array([1.0, 1.0]) / np.sqrt(2)  # weights no longer cancel shifts
    spec = cp.spec_a_identical(iso, 2, np.array([0.0, 1.0]), lam, 0.0)
    space = sm.solve_zsystem(iso)
    gens = cp.block_generators([iso, iso], [[g, g] for g in space.zero_part])
    with pytest.raises(SpecError):
        cp.couple_a(spec, generators=gens)


def test_couple_b_identity_matches_block_exactly():
    s1 = cat.euler_isentropic(3, gamma=1.4)
    s2 = cat.euler_isentropic(3, gamma=5 / 3)
    block = cp.assemble_block([s1, s2])
    mixed = cp.couple_b(cp.CouplingSpecB(constituents=[s1, s2], B=np.eye(2)))
    pts = block.samples(48, 6)
    assert np.array_equal(block.psi_at(pts), mixed.psi_at(pts))
    assert np.array_equal(block.flux_at(pts), mixed.flux_at(pts))


def test_couple_b_requires_shared_level():
    s1 = cat.euler_isentropic(3)
    s2 = cat.euler_extended(3)
    with pytest.raises(SpecError):
        cp.couple_b(cp.CouplingSpecB(constituents=[s1, s2], B=np.eye(2)))


def test_couple_b_block_partition_warning():
    s1 = cat.euler_isentropic(2, gamma=1.4)
    s2 = cat.euler_isentropic(2, gamma=5 / 3)
    mixed = cp.couple_b(cp.CouplingSpecB(constituents=[s1, s2], B=np.diag([1.0, 2.0])))
    assert any("partitionable" in note for note in mixed.notes)


def test_couple_b_generator_transport_is_identity():
    s1 = cat.euler_isentropic(3, gamma=1.4)
    s2 = cat.euler_isentropic(3, gamma=5 / 3)
    mixed = cp.couple_b(cp.CouplingSpecB(constituents=[s1, s2],
                                         B=np.array([[1.0, 0.5], [0.5, 1.0]])))
    sp1 = sm.solve_zsystem(s1)
    paired = cp.couple_b_generators([s1, s2], [[g, g] for g in sp1.zero_part])
    mixed_space = sm.solve_zsystem(mixed)
    for g in paired:
        assert mixed_space.residual(g) <= 1e-8


def test_two_fluid_rank_one():
    rng = np.random.default_rng(7)
    for _ in range(5):
        a, b = rng.uniform(0.3, 3.0, size=2)
        B = cp.rank_one_mixing(a, b)
        assert np.linalg.matrix_rank(B) == 1
        assert np.all(B > 0)
    with pytest.raises(SpecError):
        cp.rank_one_mixing(-1.0, 1.0)


def test_two_fluid_equal_weights_share_pressure_average():
    tf = cp.two_fluid(1.0, 1.0, cat.gamma_law_sigma(1.4), cat.gamma_law_sigma(5 / 3))
    pts = tf.samples(50, 8)
    scales = cp.mixed_scales(tf, pts)
    xi1 = tf.terms[0].scale.fields[0].value(pts)
    xi2 = tf.terms[0].scale.fields[1].value(pts)
    B = cp.rank_one_mixing(1.0, 1.0)
    for k in range(2):
        p_tilde = scales[:, k] / B[k].sum()
        assert np.abs(p_tilde - 0.5 * (xi1 + xi2)).max() <= 1e-12


def test_two_fluid_velocity_average():
    tf = cp.two_fluid(1.0, 2.0, cat.gamma_law_sigma(1.4), cat.gamma_law_sigma(5 / 3))
    pts = tf.samples(40, 9)
    psi = tf.psi_at(pts)
    u1, u2 = pts[:, 1], pts[:, 4]
    expected = (2.0 * u1 + 0.5 * u2) / 2.5
    assert np.abs(psi[:, 1] / psi[:, 0] - expected).max() <= 1e-12


def test_two_fluid_hyperbolic():
    tf = cp.two_fluid(1.0, 1.0, cat.gamma_law_sigma(1.4), cat.gamma_law_sigma(5 / 3))
    rep = hy.hessian_check(tf, np.array([1.0, 0.0, 0.0]), tf.samples(96, 10))
    assert rep.verdict in ("uniform", "hyperbolic")
    assert rep.min_eig >= 0


def test_coupled_entropy_duality():
    # q_i = sum_j a_ij z_j - psi_i holds for mixed systems by construction;
    # cross-check against finite-difference fluxes
    tf = cp.two_fluid(1.5, 0.8, cat.gamma_law_sigma(1.4), cat.gamma_law_sigma(5 / 3))
    pts = tf.samples(6, 11)
    pair = sy.entropy_at(tf, pts)
    for k, p in enumerate(pts):
        a_fd = fd_flux(tf, p)
        q_fd = a_fd @ p - tf.psi_at(p)
        assert np.allclose(pair.q[k], q_fd, rtol=1e-5, atol=1e-6)
