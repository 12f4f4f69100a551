"""Symmetric-gradient dissipation forms and their invariance under generators.

The invariance defect of a form with matrix A under a generator (X, Z) is
A~ = Z^T A + A Z - A X^T - X A.  For X = -Z^T this reduces to 2(Z^T A + A Z),
which vanishes for A-antisymmetric Z (e.g. rotations with A = I) but not in
general; the check reports the defect honestly per generator instead of
assuming it away."""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import NumericalError, SpecError


@dataclass(frozen=True)
class DissipationForm:
    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise SpecError("dissipation matrix must be square")
        if np.abs(A - A.T).max() > 1e-12 * max(1.0, np.abs(A).max()):
            A = 0.5 * (A + A.T)
        object.__setattr__(self, "A", A)


def a_tilde(A, X, Z):
    """Invariance defect Z^T A + A Z - A X^T - X A."""
    A = np.asarray(A, dtype=float)
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if A.shape != X.shape or A.shape != Z.shape:
        raise SpecError("matrix dimensions must agree")
    return Z.T @ A + A @ Z - A @ X.T - X @ A


def invariance_check(A, space, tol=1e-10):
    """Defect report per generator plus the sub-span on which the form is
    invariant.  A failing generator with X = -Z^T is flagged explicitly:
    the defect is symmetric but has no reason to vanish in general."""
    A = DissipationForm(np.asarray(A, dtype=float)).A
    reports = []
    defects = []
    for g in space.basis:
        X = g.X if g.X is not None else -g.Z.T
        tilde = a_tilde(A, X, g.Z)
        fro = float(np.linalg.norm(tilde))
        passes = bool(fro <= tol * max(1.0, float(np.linalg.norm(A))))
        note = ""
        if not passes and np.allclose(X, -g.Z.T):
            note = "defect nonzero despite X = -Z^T; invariance holds only on a sub-span"
        reports.append({"frobenius": fro, "passes": passes, "note": note,
                        "defect_max": float(np.abs(tilde).max())})
        defects.append(tilde.ravel())
    if defects:
        D = np.stack(defects, axis=1)
        if np.abs(D).max() == 0.0:
            span_dim = len(defects)
        else:
            span_dim = la.nullspace(D, tol=1e-9).dim
    else:
        span_dim = 0
    return {"generators": reports, "invariant_span_dim": span_dim,
            "all_pass": all(r["passes"] for r in reports)}


# ---------------------------------------------------------------------------
# discrete fields on regular grids

@dataclass
class DiscreteField:
    """Values on a regular lattice: shape dims + (components,)."""

    values: np.ndarray
    spacing: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.spacing = np.asarray(self.spacing, dtype=float)
        if self.values.ndim < 2:
            raise SpecError("field values need grid axes plus a component axis")
        if self.spacing.size != self.values.ndim - 1:
            raise SpecError("one spacing per grid axis required")
        if np.any(self.spacing <= 0):
            raise SpecError("grid spacing must be positive")
        if not np.all(np.isfinite(self.values)):
            raise SpecError("field values must be finite")

    @property
    def m(self):
        return self.values.ndim - 1

    @property
    def n(self):
        return self.values.shape[-1]


def symmetric_gradient_scalar(A, fld):
    """sum_ij A_ij (v_{j,x_i} + v_{i,x_j}) at every node."""
    A = np.asarray(A, dtype=float)
    m, n = fld.m, fld.n
    if m != n or A.shape != (n, n):
        raise SpecError("form needs as many grid axes as components")
    grads = [np.gradient(fld.values[..., j], *fld.spacing, edge_order=1)
             for j in range(n)]
    # grads[j][i] = d v_j / d x_i
    if n == 1:
        grads = [[g] for g in grads]
    out = np.zeros(fld.values.shape[:-1])
    for i in range(n):
        for j in range(n):
            if A[i, j] != 0.0:
                out += A[i, j] * (grads[j][i] + grads[i][j])
    return out


def dissipation_value(form, fld, theta):
    """Nodewise product of the two contracted symmetric-gradient scalars and
    its trapezoidal integral over the grid."""
    if fld.values.shape != theta.values.shape or not np.array_equal(fld.spacing, theta.spacing):
        raise SpecError("field and test function must share the grid")
    A = form.A if isinstance(form, DissipationForm) else DissipationForm(form).A
    s_field = symmetric_gradient_scalar(A, fld)
    s_theta = symmetric_gradient_scalar(A, theta)
    nodewise = s_field * s_theta
    integral = nodewise
    for axis in range(fld.m - 1, -1, -1):
        integral = np.trapezoid(integral, dx=fld.spacing[axis], axis=axis)
    return nodewise, float(integral)


# ---------------------------------------------------------------------------
# flat binary grid I/O: little-endian header (m, n, dims, spacing) + values

def write_field(path, fld):
    dims = fld.values.shape[:-1]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qq", fld.m, fld.n))
        fh.write(struct.pack(f"<{fld.m}q", *dims))
        fh.write(struct.pack(f"<{fld.m}d", *fld.spacing))
        fh.write(np.ascontiguousarray(fld.values, dtype="<f8").tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16:
            raise NumericalError("truncated field file")
        m, n = struct.unpack("<qq", head)
        if m <= 0 or n <= 0:
            raise NumericalError("invalid field header")
        dims = struct.unpack(f"<{m}q", fh.read(8 * m))
        spacing = np.array(struct.unpack(f"<{m}d", fh.read(8 * m)))
        count = int(np.prod(dims)) * n
        values = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
        if values.size != count:
            raise NumericalError("truncated field payload")
    return DiscreteField(values=values.reshape(*dims, n).copy(), spacing=spacing)
