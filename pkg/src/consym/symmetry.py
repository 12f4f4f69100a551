"""Symmetry-generator computation by sampled linear constraints.

Infinitesimal generators act as x* = Xx, z* = Zz + omega.  For systems in
potential-split form the generator space is cut out by linear conditions on
(Z, omega) and a handful of scalar constants, assembled row-by-row at sample
points and extracted as an SVD nullspace.  The space splits into a part that
fixes every level/scale field, a one-dimensional level-advancing part, and
scaling-type remainders (reported as informational).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .errors import NumericalError, SpecError
from .system import EosField, MixedField, SymbolicField

DEFAULT_TOL = 1e-9


@dataclass
class Generator:
    """One symmetry triple; X = -Z^T for square potential-split systems."""

    Z: np.ndarray
    omega: np.ndarray
    c_z: float = 0.0
    c_xi: np.ndarray = None
    c_zeta: np.ndarray = None
    X: np.ndarray = None

    def __post_init__(self):
        n = self.Z.shape[0]
        if self.c_xi is None:
            self.c_xi = np.zeros(1)
        if self.c_zeta is None:
            self.c_zeta = np.zeros(1)
        if self.X is None and self.Z.shape[0] == self.Z.shape[1]:
            self.X = -self.Z.T

    @property
    def N(self):
        return self.Z - self.c_z * np.eye(self.Z.shape[0])

    def flat(self):
        return np.concatenate([self.Z.ravel(), self.omega])


@dataclass
class SymmetrySpace:
    """Orthonormal generator basis plus its split and solve metadata."""

    basis: list
    parts: dict
    tol: float
    sample_count: int
    matrix: np.ndarray = None
    layout: dict = None
    notes: tuple = ()

    @property
    def dim(self):
        return len(self.basis)

    def part(self, name):
        return [self.basis[i] for i in self.parts.get(name, [])]

    @property
    def zero_part(self):
        return self.part("zero")

    @property
    def zeta_rep(self):
        reps = self.part("zeta")
        return reps[0] if reps else None

    @property
    def scaling_part(self):
        return self.part("scaling")

    def hha_generators(self):
        """Generators fixing every scale field with c_Z = 0 (level shifts allowed)."""
        out = self.zero_part[:]
        if self.zeta_rep is not None:
            out.append(self.zeta_rep)
        return out

    def residual(self, gen, c_z=None, c_xi=None, c_zeta=None):
        """Constraint residual of a generator against the assembled rows."""
        if self.matrix is None:
            raise NumericalError("space carries no constraint matrix")
        u = self._pack(gen, c_z, c_xi, c_zeta)
        smax = np.linalg.svd(self.matrix, compute_uv=False)[0]
        return float(np.linalg.norm(self.matrix @ u) / (smax * np.linalg.norm(u)))

    def _pack(self, gen, c_z=None, c_xi=None, c_zeta=None):
        lay = self.layout
        u = np.zeros(lay["dim"])
        n = lay["n"]
        u[: n * n] = gen.Z.ravel()
        u[n * n: n * n + n] = gen.omega
        if lay.get("general"):
            mm = lay["m"]
            u = np.zeros(lay["dim"])
            u[: mm * mm] = gen.X.ravel()
            u[mm * mm: mm * mm + n * n] = gen.Z.ravel()
            u[mm * mm + n * n: mm * mm + n * n + n] = gen.omega
            u[-1] = gen.c_z if c_z is None else c_z
            return u
        u[lay["c_z"]] = gen.c_z if c_z is None else c_z
        cxi = gen.c_xi if c_xi is None else np.atleast_1d(c_xi)
        czeta = gen.c_zeta if c_zeta is None else np.atleast_1d(c_zeta)
        for t, (ix, iz) in enumerate(lay["terms"]):
            u[ix] = cxi[t] if t < len(cxi) else cxi[-1]
            u[iz] = czeta[t] if t < len(czeta) else czeta[-1]
        return u


@dataclass
class LambdaClassification:
    """Phase-space split into visible / indirect / inert directions."""

    lambda_v: la.SubspaceBasis
    lambda_i: la.SubspaceBasis
    lambda_perp: la.SubspaceBasis
    L: int
    flags: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# constraint assembly for potential-split systems

def _terms_layout(sys_):
    n = sys_.n
    T = len(sys_.terms)
    dim = n * n + n + 1 + 2 * T
    terms = []
    base = n * n + n + 1
    for t in range(T):
        terms.append((base + 2 * t, base + 2 * t + 1))
    return {"dim": dim, "n": n, "c_z": n * n + n, "terms": terms, "general": False}


def _assemble_split_rows(sys_, pts):
    """Rows of the linear system cutting out (Z, omega, c_Z, c_xi_t, c_zeta_t)."""
    n = sys_.n
    lay = _terms_layout(sys_)
    dim = lay["dim"]
    rows = []
    for t_idx, term in enumerate(sys_.terms):
        ix, iz = lay["terms"][t_idx]
        zv = term.zeta.value(pts)
        zg = term.zeta.grad(pts)
        block = np.zeros((pts.shape[0], dim))
        block[:, : n * n] = np.einsum("nj,nk->njk", zg, pts).reshape(pts.shape[0], -1)
        block[:, n * n: n * n + n] = zg
        block[:, lay["c_z"]] = -zv
        block[:, ix] = zv
        block[:, iz] = -1.0
        rows.append(block)
        scale = term.scale
        if isinstance(scale, EosField) or isinstance(scale, MixedField):
            fields = scale.fields if isinstance(scale, MixedField) else [scale]
            for f in fields:
                if isinstance(f, EosField) and f.state is not None:
                    wg = f.state.grad(pts)
                    srow = np.zeros((pts.shape[0], dim))
                    srow[:, : n * n] = np.einsum("nj,nk->njk", wg, pts).reshape(pts.shape[0], -1)
                    srow[:, n * n: n * n + n] = wg
                    rows.append(srow)
            pin = np.zeros((1, dim))
            pin[0, ix] = 1.0
            rows.append(pin)
        else:
            xv = scale.value(pts)
            xg = scale.grad(pts)
            block = np.zeros((pts.shape[0], dim))
            block[:, : n * n] = np.einsum("nj,nk->njk", xg, pts).reshape(pts.shape[0], -1)
            block[:, n * n: n * n + n] = xg
            block[:, ix] = -xv
            rows.append(block)
    mat = np.vstack(rows)
    row_scale = np.median(np.linalg.norm(mat, axis=1)) or 1.0
    return mat, lay, row_scale


def _identity_direction(lay):
    u = np.zeros(lay["dim"])
    n = lay["n"]
    u[: n * n] = np.eye(n).ravel()
    return u / np.linalg.norm(u)


def _sub_nullspace(mat, lay, tol, pins, row_scale):
    """Nullspace after appending unit rows that zero the pinned coordinates."""
    extra = []
    for idx in pins:
        row = np.zeros(lay["dim"])
        row[idx] = row_scale
        extra.append(row)
    full = np.vstack([mat] + [np.array(extra)]) if extra else mat
    return la.nullspace(full, tol)


def _vec_to_generator(u, lay, m=None):
    n = lay["n"]
    if lay.get("general"):
        mm = lay["m"]
        X = u[: mm * mm].reshape(mm, mm)
        Z = u[mm * mm: mm * mm + n * n].reshape(n, n)
        omega = u[mm * mm + n * n: mm * mm + n * n + n]
        return Generator(Z=Z, omega=omega, c_z=float(u[-1]), X=X)
    Z = u[: n * n].reshape(n, n)
    omega = u[n * n: n * n + n]
    c_z = float(u[lay["c_z"]])
    c_xi = np.array([u[ix] for ix, _ in lay["terms"]])
    c_zeta = np.array([u[iz] for _, iz in lay["terms"]])
    X = -Z.T if (m is None or m == n) else None
    return Generator(Z=Z, omega=omega, c_z=c_z, c_xi=c_xi, c_zeta=c_zeta, X=X)


def solve_zsystem(sys_, samples=None, tol=DEFAULT_TOL):
    """Generator space of a potential-split system, splitting included."""
    if sys_.terms is None:
        raise SpecError("solve_zsystem needs a potential-split system")
    pts = sys_.samples() if samples is None else np.atleast_2d(np.asarray(samples, float))
    mat, lay, row_scale = _assemble_split_rows(sys_, pts)
    if mat.shape[0] < lay["dim"]:
        raise NumericalError(
            f"insufficient samples: {mat.shape[0]} constraint rows for {lay['dim']} unknowns")
    notes = []
    ident = _identity_direction(lay)
    full = la.nullspace(mat, tol)
    extra_rows = []
    if full.contains(ident, tol=1e-7):
        extra_rows.append(ident * row_scale)
        notes.append("identity z-scaling generator excluded by convention")
    if extra_rows:
        mat = np.vstack([mat, np.array(extra_rows)])
        full = la.nullspace(mat, tol)

    const_idx = [lay["c_z"]] + [i for pair in lay["terms"] for i in pair]
    hha_idx = [lay["c_z"]] + [ix for ix, _ in lay["terms"]]
    zero_basis = _sub_nullspace(mat, lay, tol, const_idx, row_scale)
    hha_basis = _sub_nullspace(mat, lay, tol, hha_idx, row_scale)

    gens, parts = [], {"zero": [], "zeta": [], "scaling": []}
    for j in range(zero_basis.dim):
        parts["zero"].append(len(gens))
        gens.append(_vec_to_generator(zero_basis.vectors[:, j], lay, sys_.m))

    # ladder quotient: level-advancing representative, sign-normalized
    rep = _quotient(hha_basis.vectors, zero_basis.vectors, tol)
    if rep.shape[1] > 0:
        for j in range(rep.shape[1]):
            u = rep[:, j]
            czeta = np.array([u[iz] for _, iz in lay["terms"]])
            if czeta.sum() < 0:
                u = -u
            parts["zeta"].append(len(gens))
            gens.append(_vec_to_generator(u, lay, sys_.m))

    scal = _quotient(full.vectors, np.hstack([zero_basis.vectors, rep]), tol)
    for j in range(scal.shape[1]):
        parts["scaling"].append(len(gens))
        gens.append(_vec_to_generator(scal[:, j], lay, sys_.m))

    return SymmetrySpace(basis=gens, parts=parts, tol=tol, sample_count=pts.shape[0],
                         matrix=mat, layout=lay, notes=tuple(notes))


def _quotient(big, small, tol):
    """Orthonormal basis of span(big) orthogonal to span(small)."""
    if big.shape[1] == 0:
        return big
    if small.shape[1] == 0:
        return big
    proj = small.T @ big
    coeff = la.nullspace(proj, tol=1e-8).vectors if proj.size else np.eye(big.shape[1])
    out = big @ coeff
    return la.orthonormalize(out) if out.size else out.reshape(big.shape[0], 0)


def split_space(space, sys_=None):
    """The split is computed during the solve; kept for interface symmetry."""
    return space


# ---------------------------------------------------------------------------
# general solve (no potential-split structure assumed)

def solve_general(sys_, samples=None, tol=DEFAULT_TOL):
    """Generator space of a(z)(Zz+omega) = (X + c_Z I) psi(z) at samples.

    The ever-present x-scaling triple (X=I, c_Z=-1) and any constant-shift
    directions with a(z) omega = 0 are projected out and reported in notes.
    """
    pts = sys_.samples() if samples is None else np.atleast_2d(np.asarray(samples, float))
    n, m = sys_.n, sys_.m
    dim = m * m + n * n + n + 1
    a = sys_.flux_at(pts)
    psi = sys_.psi_at(pts)
    N = pts.shape[0]
    rows = np.zeros((N, m, dim))
    rows[:, :, m * m: m * m + n * n] = np.einsum(
        "nij,nk->nijk", a, pts).reshape(N, m, n * n)
    rows[:, :, m * m + n * n: m * m + n * n + n] = a
    for i in range(m):
        rows[:, i, i * m: (i + 1) * m] -= psi
    rows[:, :, -1] = -psi
    mat = rows.reshape(N * m, dim)
    if mat.shape[0] < dim:
        raise NumericalError(f"insufficient samples: {mat.shape[0]} rows for {dim} unknowns")
    row_scale = np.median(np.linalg.norm(mat, axis=1)) or 1.0

    notes = []
    triv = []
    u_scale = np.zeros(dim)
    u_scale[: m * m] = np.eye(m).ravel()
    u_scale[-1] = -1.0
    triv.append(u_scale / np.linalg.norm(u_scale))
    notes.append("x-scaling triple excluded as trivial")
    shift_dirs = la.nullspace(a.reshape(N * m, n), tol)
    for j in range(shift_dirs.dim):
        u = np.zeros(dim)
        u[m * m + n * n: m * m + n * n + n] = shift_dirs.vectors[:, j]
        triv.append(u)
        notes.append("constant z-shift direction excluded as trivial")
    mat = np.vstack([mat, row_scale * np.array(triv)])
    basis = la.nullspace(mat, tol)
    lay = {"dim": dim, "n": n, "m": m, "general": True}
    gens = [_vec_to_generator(basis.vectors[:, j], lay) for j in range(basis.dim)]
    return SymmetrySpace(basis=gens, parts={"general": list(range(len(gens)))},
                         tol=tol, sample_count=N, matrix=mat, layout=lay,
                         notes=tuple(notes))


def constraint_residual(sys_, gen, samples=None, c_z=0.0):
    """Max-norm residual of a(z)(Zz+w) = (X + c_Z I) psi(z) over samples."""
    pts = sys_.samples() if samples is None else np.atleast_2d(np.asarray(samples, float))
    a = sys_.flux_at(pts)
    psi = sys_.psi_at(pts)
    lhs = np.einsum("nij,nj->ni", a, pts @ gen.Z.T + gen.omega)
    X = gen.X if gen.X is not None else -gen.Z.T
    rhs = psi @ X.T + c_z * psi
    scale = max(1.0, np.abs(a).max(), np.abs(psi).max())
    norm = max(np.linalg.norm(gen.flat()), 1e-300)
    return float(np.abs(lhs - rhs).max() / (scale * norm))


# ---------------------------------------------------------------------------
# phase-space classification

def blind_directions(sys_, pts=None, tol=1e-8):
    """Phase directions annihilated by every level gradient at every sample."""
    pts = sys_.samples(min(64, sys_.sampling[0])) if pts is None else pts
    stacked = np.vstack([t.zeta.grad(pts) for t in sys_.terms])
    return la.nullspace(stacked, tol)


def classify_lambda(space, sys_, tol=1e-8):
    """Split phase space by how the level-preserving generators act on it.

    Directions the level functions never see are conventionally inert: the
    generator set is first restricted to members acting trivially on them (no
    generality is lost because the fields cannot distinguish such actions)."""
    n = sys_.n
    gens = space.hha_generators()
    if gens and sys_.terms is not None:
        blind = blind_directions(sys_, tol=tol)
        if blind.dim:
            restricted = SymmetrySpace(
                basis=gens, parts={"hha": list(range(len(gens)))},
                tol=space.tol, sample_count=space.sample_count)
            for k in range(blind.dim):
                restricted = filter_generators(
                    restricted, ("fix_component", blind.vectors[:, k]))
            gens = restricted.basis
    if not gens:
        eye = np.eye(n)
        return LambdaClassification(
            lambda_v=la.SubspaceBasis(0, eye[:, :0], tol),
            lambda_i=la.SubspaceBasis(0, eye[:, :0], tol),
            lambda_perp=la.SubspaceBasis(n, eye, tol),
            L=0)
    stacked_all = np.vstack([np.vstack([g.Z, g.Z.T, g.omega[None, :]]) for g in gens])
    perp = la.nullspace(stacked_all, tol)
    stacked_zt = np.vstack([np.vstack([g.Z.T, g.omega[None, :]]) for g in gens])
    inert_or_indirect = la.nullspace(stacked_zt, tol)
    indirect_vectors = _quotient(inert_or_indirect.vectors, perp.vectors, tol)
    lam_i = la.SubspaceBasis(indirect_vectors.shape[1], indirect_vectors, tol)
    span_vi = np.hstack([perp.vectors, indirect_vectors])
    visible = _quotient(np.eye(n), span_vi, tol)
    lam_v = la.SubspaceBasis(visible.shape[1], visible, tol)
    return LambdaClassification(lambda_v=lam_v, lambda_i=lam_i, lambda_perp=perp,
                                L=n - perp.dim)


FLAG_NAMES = ("W", "C", "perp", "T", "T*", "q", "q*", "I", "I*", "omega", "omega*")


def classify_subclasses(sys_, space, samples=None, tol=1e-8):
    """Structural subclass predicates with numeric evidence attached."""
    pts = sys_.samples() if samples is None else np.atleast_2d(np.asarray(samples, float))
    flags = {}

    single = sys_.terms is not None and len(sys_.terms) == 1
    if single:
        zeta = sys_.terms[0].zeta
        third_max = _third_derivative_max(zeta, pts)
        W, Y = _wy_of(zeta, sys_.domain.center())
        holds = bool(third_max <= tol and np.abs(W).max() > tol and np.linalg.norm(Y) > tol)
        flags["W"] = {"holds": holds, "evidence": float(third_max)}
    else:
        flags["W"] = {"holds": None, "evidence": "needs a single-term system"}

    if sys_.is_square:
        psi = sys_.psi_at(pts)
        resid = float(np.abs(np.einsum("nj,nj->n", pts, psi)).max())
        flags["C"] = {"holds": bool(resid <= tol * max(1.0, np.abs(psi).max())),
                      "evidence": resid}
    else:
        flags["C"] = {"holds": None, "evidence": "needs m == n"}

    if single:
        zg = sys_.terms[0].zeta.grad(pts)
        blind = la.nullspace(zg, 1e-8)
        flags["perp"] = {"holds": bool(blind.dim > 0), "evidence": blind.dim}
    else:
        flags["perp"] = {"holds": None, "evidence": "needs a single-term system"}

    eos = _eos_fields(sys_)
    has_state = bool(eos) and all(f.state is not None for f in eos)
    flags["T"] = {"holds": bool(eos) and has_state, "evidence": len(eos)}
    flags["T*"] = {"holds": bool(eos) and not has_state, "evidence": len(eos)}

    from .system import entropy_at
    pair = entropy_at(sys_, pts)
    qmax = float(np.abs(pair.q).max())
    flags["q*"] = {"holds": bool(qmax <= tol * max(1.0, np.abs(pair.psi).max())), "evidence": qmax}
    if single and eos and has_state:
        # entropy flux aligned with the potential vector: q_i = factor(z) psi_i
        psi2 = np.einsum("ni,ni->n", pair.psi, pair.psi)
        factor = np.einsum("ni,ni->n", pair.q, pair.psi) / np.where(psi2 == 0, 1.0, psi2)
        resid = float(np.abs(pair.q - factor[:, None] * pair.psi).max())
        flags["q"] = {"holds": bool(resid <= 1e-9 * max(1.0, qmax)), "evidence": resid}
    else:
        flags["q"] = {"holds": None, "evidence": "needs a single-term equation of state with state variable"}

    lam = classify_lambda(space, sys_)
    flags["I"] = {"holds": bool(lam.lambda_i.dim > 0), "evidence": lam.lambda_i.dim}
    flags["I*"] = {"holds": bool(lam.lambda_i.dim == 0), "evidence": lam.lambda_i.dim}

    omax = max((float(np.abs(g.omega).max()) for g in space.zero_part), default=0.0)
    flags["omega"] = {"holds": bool(omax > 1e-8), "evidence": omax}
    flags["omega*"] = {"holds": bool(omax <= 1e-8), "evidence": omax}
    return flags


def _third_derivative_max(zeta_field, pts):
    out = 0.0
    n = zeta_field.n
    hess = zeta_field.hess_exprs()
    from . import expr as ex
    for i in range(n):
        for j in range(i, n):
            for k in range(1, n + 1):
                d = ex.diff(hess[i][j], k)
                if d.op == "const" and d.value == 0.0:
                    continue
                out = max(out, float(np.abs(ex.evaluate(d, pts)).max()))
    return out


def _wy_of(zeta_field, center):
    W = zeta_field.hess(center[None, :])[0]
    Y = zeta_field.grad(center[None, :])[0] - W @ center
    return W, Y


def _eos_fields(sys_):
    if sys_.terms is None:
        return []
    out = []
    for t in sys_.terms:
        sc = t.scale
        cand = sc.fields if isinstance(sc, MixedField) else [sc]
        out.extend([f for f in cand if isinstance(f, EosField)])
    return out


# ---------------------------------------------------------------------------
# generator filtering for reductions / self-similar solutions / exchanges

def filter_generators(space, constraint, tol=1e-9):
    """Sub-basis satisfying a linear compatibility constraint, re-orthonormalized.

    constraint is one of ("stationary", mu), ("self_similar", e),
    ("fix_component", e), ("exchange_row", l).
    """
    gens = space.basis
    if not gens:
        return space
    kind = constraint[0]
    rows = []
    for g in gens:
        rows.append(_filter_values(g, constraint))
    C = np.stack(rows, axis=-1)  # conditions x generators
    coeff = _nullspace_abs(C, tol=1e-8) if C.size else None
    out = []
    if coeff is not None:
        flat = np.stack([np.concatenate([g.Z.ravel(), g.omega,
                                         [g.c_z], g.c_xi, g.c_zeta]) for g in gens], axis=1)
        newvecs = la.orthonormalize(flat @ coeff.vectors)
        n = gens[0].Z.shape[0]
        T = len(gens[0].c_xi)
        for j in range(newvecs.shape[1]):
            u = newvecs[:, j]
            Z = u[: n * n].reshape(n, n)
            omega = u[n * n: n * n + n]
            c_z = float(u[n * n + n])
            c_xi = u[n * n + n + 1: n * n + n + 1 + T]
            c_zeta = u[n * n + n + 1 + T:]
            out.append(Generator(Z=Z, omega=omega, c_z=c_z, c_xi=c_xi, c_zeta=c_zeta))
    return SymmetrySpace(basis=out, parts={"filtered": list(range(len(out)))},
                         tol=space.tol, sample_count=space.sample_count,
                         matrix=space.matrix, layout=space.layout,
                         notes=space.notes + (f"filtered by {kind}",))


def _nullspace_abs(mat, tol=1e-8):
    """Nullspace with an absolute singular-value floor: generators are unit
    vectors, so constraint values far below the floor count as satisfied."""
    m = np.atleast_2d(np.asarray(mat, dtype=float))
    _, svals, vt = np.linalg.svd(m, full_matrices=True)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > tol * max(1.0, smax)))
    basis = vt[rank:].T.copy()
    return la.SubspaceBasis(dim=basis.shape[1], vectors=basis, tol=tol)


def _filter_values(g, constraint):
    kind = constraint[0]
    X = g.X if g.X is not None else -g.Z.T
    if kind == "stationary":
        mu = np.asarray(constraint[1], float)
        return X @ mu
    if kind == "self_similar":
        e = np.asarray(constraint[1], float)
        return np.concatenate([X @ e, X.T @ e])
    if kind == "fix_component":
        e = np.asarray(constraint[1], float)
        return np.concatenate([g.Z.T @ e, [g.omega @ e]])
    if kind == "exchange_row":
        l = int(constraint[1])
        return np.concatenate([g.Z[l - 1, :], [g.omega[l - 1]]])
    raise SpecError(f"unknown filter constraint '{kind}'")


# ---------------------------------------------------------------------------
# prescribed-symmetry construction from quadratic level sets

def wy_generators(W, Y, tol=DEFAULT_TOL):
    """Basis of Z with W Z antisymmetric, Z^T y = 0 on the joint kernel and
    Z^T Y in range(W), each paired with its unique shift vector."""
    W = np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    kernel = la.nullspace(np.vstack([W, Y[None, :]]), tol)  # directions blind to the level set
    rng_w = la.orthonormalize(W)
    if rng_w.shape[1] == 0:
        comp_w = np.eye(n)
    elif rng_w.shape[1] < n:
        comp_w = la.nullspace(rng_w.T, tol).vectors
    else:
        comp_w = np.zeros((n, 0))

    rows = []
    for i in range(n):
        for j in range(i, n):
            row = np.zeros((n, n))
            # coefficient of Z_kl in (WZ)_ij + (WZ)_ji
            for k in range(n):
                row[k, j] += W[i, k]
                row[k, i] += W[j, k]
            rows.append(row.ravel())
    for b in range(kernel.dim):
        y = kernel.vectors[:, b]
        for i in range(n):
            row = np.zeros((n, n))
            row[:, i] = y
            rows.append(row.ravel())
    for b in range(comp_w.shape[1]):
        c = comp_w[:, b]
        row = np.outer(Y, c)
        rows.append(row.ravel())
    basis = la.nullspace(np.array(rows), tol) if rows else la.nullspace(np.zeros((1, n * n)), tol)

    gens = []
    solve_rows = np.vstack([Y[None, :], kernel.vectors.T, W])
    for j in range(basis.dim):
        Z = basis.vectors[:, j].reshape(n, n)
        rhs = np.concatenate([[0.0], np.zeros(kernel.dim), -Z.T @ Y])
        omega, res, _, _ = np.linalg.lstsq(solve_rows, rhs, rcond=None)
        resid = np.linalg.norm(solve_rows @ omega - rhs)
        if resid > 1e-8 * max(1.0, np.linalg.norm(rhs)):
            raise NumericalError("shift-vector solve inconsistent: Z^T Y escapes range(W)")
        gens.append(Generator(Z=Z, omega=omega))
    return SymmetrySpace(basis=gens, parts={"zero": list(range(len(gens)))},
                         tol=tol, sample_count=0)


def flat_span(gens):
    """Matrix whose columns are flattened (Z, omega) pairs."""
    if not gens:
        return np.zeros((0, 0))
    return np.stack([g.flat() for g in gens], axis=1)
