"""Dissipation forms, invariance defects, and discrete-field quadrature."""

import numpy as np
import pytest

from consym import dissipation as di
from consym import symmetry as sm
from consym.errors import SpecError


def make_space(pairs):
    gens = [sm.Generator(Z=np.asarray(Z, float), omega=np.asarray(w, float))
            for Z, w in pairs]
    return sm.SymmetrySpace(basis=gens, parts={"zero": list(range(len(gens)))},
                            tol=1e-9, sample_count=0)


def test_defect_zero_for_antisymmetric_generator():
    Z = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.5], [0.0, -0.5, 0.0]])
    tilde = di.a_tilde(np.eye(3), -Z.T, Z)
    assert np.abs(tilde).max() == 0.0


def test_defect_zero_matrices():
    assert np.abs(di.a_tilde(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))).max() == 0.0


def test_defect_shear_magnitude_two():
    Z = np.array([[0.0, 1.0], [0.0, 0.0]])
    tilde = di.a_tilde(np.eye(2), -Z.T, Z)
    assert np.array_equal(tilde, 2.0 * (Z + Z.T))
    assert np.abs(tilde).max() == 2.0
    # symmetric whenever A is symmetric
    assert np.array_equal(tilde, tilde.T)


def test_defect_shape_mismatch():
    with pytest.raises(SpecError):
        di.a_tilde(np.eye(2), np.eye(3), np.eye(2))


def test_invariance_check_mixed_basis():
    rot = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    shear = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    space = make_space([(rot, np.zeros(3)), (shear, [0.0, -1.0, 0.0])])
    rep = di.invariance_check(np.eye(3), space)
    assert rep["generators"][0]["passes"] is True
    assert rep["generators"][1]["passes"] is False
    assert "sub-span" in rep["generators"][1]["note"]
    assert rep["invariant_span_dim"] == 1
    assert rep["all_pass"] is False


def test_invariance_via_least_squares_construction():
    # for a given shear, solve Z^T A + A Z = 0 over symmetric A by least
    # squares; the resulting form is invariant under that generator
    Z = np.array([[0.0, 1.0], [0.0, 0.0]])
    idx = [(0, 0), (0, 1), (1, 1)]
    rows = []
    rhs = []
    for i in range(2):
        for j in range(2):
            row = np.zeros(3)
            for k, (a, b) in enumerate(idx):
                A = np.zeros((2, 2))
                A[a, b] = A[b, a] = 1.0
                row[k] = (Z.T @ A + A @ Z)[i, j]
            rows.append(row)
            rhs.append(0.0)
    rows.append(np.array([1.0, 0.0, 1.0]))  # normalization: trace one
    rhs.append(1.0)
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    A = np.zeros((2, 2))
    for k, (a, b) in enumerate(idx):
        A[a, b] = A[b, a] = sol[k]
    space = make_space([(Z, [0.0, -1.0])])
    rep = di.invariance_check(A, space)
    assert rep["all_pass"] is True


def test_dissipation_nodewise_nonnegative_random_fields():
    rng = np.random.default_rng(3)
    for trial in range(3):
        nx, ny = 12, 9
        vals = rng.normal(size=(nx, ny, 2))
        fld = di.DiscreteField(values=vals, spacing=np.array([0.1, 0.2]))
        A = rng.normal(size=(2, 2))
        A = 0.5 * (A + A.T)
        node, integral = di.dissipation_value(di.DissipationForm(A), fld, fld)
        assert node.min() >= 0.0
        assert integral >= 0.0


def test_dissipation_constant_field_zero():
    vals = np.ones((8, 8, 2)) * 3.7
    fld = di.DiscreteField(values=vals, spacing=np.array([0.5, 0.5]))
    node, integral = di.dissipation_value(di.DissipationForm(np.eye(2)), fld, fld)
    assert np.abs(node).max() == 0.0
    assert integral == 0.0


def test_dissipation_linear_field_hand_value():
    # v(x) = M x gives the constant contracted scalar sum_ij A_ij (M_ji + M_ij)
    M = np.array([[1.0, 2.0], [0.5, 0.75]])
    x = np.linspace(0.0, 1.0, 21)
    y = np.linspace(0.0, 2.0, 31)
    XX, YY = np.meshgrid(x, y, indexing="ij")
    vals = np.stack([M[0, 0] * XX + M[0, 1] * YY,
                     M[1, 0] * XX + M[1, 1] * YY], axis=-1)
    fld = di.DiscreteField(values=vals, spacing=np.array([x[1] - x[0], y[1] - y[0]]))
    node, integral = di.dissipation_value(di.DissipationForm(np.eye(2)), fld, fld)
    s = 2.0 * (M[0, 0] + M[1, 1])
    assert np.abs(node - s * s).max() <= 1e-10
    assert abs(integral - s * s * 1.0 * 2.0) <= 1e-8


def test_grid_mismatch():
    a = di.DiscreteField(values=np.zeros((4, 4, 2)), spacing=np.array([1.0, 1.0]))
    b = di.DiscreteField(values=np.zeros((4, 5, 2)), spacing=np.array([1.0, 1.0]))
    with pytest.raises(SpecError):
        di.dissipation_value(di.DissipationForm(np.eye(2)), a, b)


def test_field_io_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    vals = rng.normal(size=(5, 7, 3, 3))
    fld = di.DiscreteField(values=vals, spacing=np.array([0.1, 0.25, 0.5]))
    path = tmp_path / "field.bin"
    di.write_field(path, fld)
    back = di.read_field(path)
    assert np.array_equal(back.values, fld.values)
    assert np.array_equal(back.spacing, fld.spacing)
    # header is little-endian: first 16 bytes are m and n
    raw = path.read_bytes()
    assert int.from_bytes(raw[:8], "little") == 3
    assert int.from_bytes(raw[8:16], "little") == 3
