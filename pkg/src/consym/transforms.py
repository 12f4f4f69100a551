"""System transformations: linear changes of variables, dimension reduction by
fixing a component, entropy/energy exchange, and level reparameterization.

Each transform rewrites the system's symbolic recipe (so exact differentiation
stays available downstream) and carries the induced map on symmetry
generators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import SpecError
from .symmetry import Generator, SymmetrySpace, filter_generators
from .system import DomainBox, SystemDef, build_from_recipe

_ITERTOOLS_CORNERS = 2


@dataclass(frozen=True)
class TransformRecord:
    kind: str  # "qu" | "reduce" | "exchange" | "zeta_f"
    params: dict
    source: str

    def note(self):
        parts = " ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"transform: {self.kind} {parts} source={self.source}"


def _linear_substitution(M, n):
    """Assignments z_i -> sum_j M[i, j] z_j as expressions."""
    repl = {}
    for i in range(n):
        acc = ex.const(0.0, n)
        for j in range(n):
            if M[i, j] != 0.0:
                acc = acc + ex.const(float(M[i, j]), n) * ex.var(j + 1, n)
        repl[i + 1] = ex.simplify(acc)
    return repl


def _subst(e, repl, n):
    if e is None:
        return None
    return ex.simplify(ex.with_arity(ex.substitute(ex.with_arity(e, n), repl), n))


def _is_signed_permutation(Q):
    absq = np.abs(Q)
    return (np.all(np.isin(absq, (0.0, 1.0)))
            and np.all(absq.sum(axis=0) == 1.0) and np.all(absq.sum(axis=1) == 1.0))


def _transform_box(dom, Q, repl, n):
    center = Q @ dom.center()
    half = 0.5 * np.abs(Q) @ (dom.upper - dom.lower)
    lower, upper = center - half, center + half
    guards = [g for g in (_subst(g, repl, n) for g in dom.guards)]
    if not _is_signed_permutation(Q):
        for i in range(n):
            expr_i = repl[i + 1]
            guards.append(ex.simplify(expr_i - ex.const(float(dom.lower[i]), n)))
            guards.append(ex.simplify(ex.const(float(dom.upper[i]), n) - expr_i))
    return DomainBox(lower, upper, tuple(guards))


def t_qu(sys_, Q):
    """Linear change of dependent variable z -> Qz with fluxes mixed by Q^-T."""
    Q = np.asarray(Q, dtype=float)
    n = sys_.n
    if Q.shape != (n, n):
        raise SpecError(f"Q must be {n}x{n}")
    if abs(np.linalg.det(Q)) < 1e-12:
        raise SpecError("Q must be nonsingular")
    Qinv = np.linalg.inv(Q)
    U = Qinv.T
    repl = _linear_substitution(Qinv, n)
    rec = dict(sys_.recipe)
    kind = rec.get("kind")
    if kind in ("zsystem", "zsystem-eos"):
        rec["zeta"] = _subst(rec["zeta"], repl, n)
        if kind == "zsystem":
            rec["xi"] = _subst(rec["xi"], repl, n)
        else:
            rec["zzeta"] = _subst(rec.get("zzeta"), repl, n)
    elif kind == "multi":
        rec["terms"] = [
            {k: (_subst(v, repl, n) if k in ("zeta", "xi", "zzeta") and v is not None else v)
             for k, v in t.items()} for t in rec["terms"]]
    elif kind == "explicit":
        subbed = [_subst(p, repl, n) for p in rec["psi"]]
        mixed = []
        for i in range(sys_.m):
            acc = ex.const(0.0, n)
            for k in range(sys_.m):
                if U[i, k] != 0.0:
                    acc = acc + ex.const(float(U[i, k]), n) * subbed[k]
            mixed.append(ex.simplify(acc))
        rec["psi"] = mixed
    else:
        raise SpecError(f"cannot apply linear change of variables to kind '{kind}'")
    dom = _transform_box(sys_.domain, Q, repl, n)
    e_H = None
    if sys_.e_H is not None:
        e_new = Q @ sys_.e_H
        e_H = e_new / np.linalg.norm(e_new)
    record = TransformRecord("qu", {"Q": Q.tolist()}, sys_.name)
    out = build_from_recipe(rec, dom, name=sys_.name + "-qu", sampling=sys_.sampling, e_H=e_H)
    out.notes = sys_.notes + (record.note(),)
    return out


def map_generators_qu(space, Q):
    """Similarity map of generators under the linear change of variables."""
    Q = np.asarray(Q, dtype=float)
    Qinv = np.linalg.inv(Q)
    U = Qinv.T
    Uinv = Q.T
    gens = []
    for g in space.basis:
        X = None if g.X is None else U @ g.X @ Uinv
        gens.append(Generator(Z=Q @ g.Z @ Qinv, omega=Q @ g.omega, c_z=g.c_z,
                              c_xi=g.c_xi.copy(), c_zeta=g.c_zeta.copy(), X=X))
    return SymmetrySpace(basis=gens, parts={k: list(v) for k, v in space.parts.items()},
                         tol=space.tol, sample_count=space.sample_count,
                         notes=space.notes + ("mapped by linear change of variables",))


def _permutation_to_last(n, axis):
    Q = np.eye(n)
    Q[[axis - 1, n - 1]] = Q[[n - 1, axis - 1]]
    return Q


def _fix_last(e, c_e, n):
    if e is None:
        return None
    fixed = ex.substitute(ex.with_arity(e, n), {n: ex.const(float(c_e), n)})
    return ex.simplify(ex.with_arity(fixed, n - 1))


def t_reduce(sys_, c_e, axis=None):
    """Fix the last component at c_e and drop it, keeping n-1 dimensions.

    A different axis is first moved into last position by a permutation."""
    n = sys_.n
    if axis is not None and axis != n:
        return t_reduce(t_qu(sys_, _permutation_to_last(n, axis)), c_e)
    if not sys_.is_square or sys_.terms is None:
        raise SpecError("reduction needs a square potential-split system")
    if sys_.recipe.get("mixing") is not None:
        raise SpecError("reduction of mixed multi-term systems is not supported")
    rec = dict(sys_.recipe)
    kind = rec.get("kind")
    m = n - 1
    if kind == "zsystem":
        rec["zeta"] = _fix_last(rec["zeta"], c_e, n)
        rec["xi"] = _fix_last(rec["xi"], c_e, n)
    elif kind == "zsystem-eos":
        rec["zeta"] = _fix_last(rec["zeta"], c_e, n)
        state = rec.get("zzeta")
        if state is not None:
            fixed_state = _fix_last(state, c_e, n)
            if fixed_state.op == "const":
                rec["sigma"] = ex.simplify(ex.substitute(
                    rec["sigma"], {2: ex.const(fixed_state.value, rec["sigma"].arity)}))
                rec["sigma"] = ex.with_arity(rec["sigma"], 1)
                rec["zzeta"] = None
            else:
                rec["zzeta"] = fixed_state
    elif kind == "multi":
        rec["terms"] = [
            {k: (_fix_last(v, c_e, n) if k in ("zeta", "xi", "zzeta") and v is not None else v)
             for k, v in t.items()} for t in rec["terms"]]
    else:
        raise SpecError(f"cannot reduce kind '{kind}'")
    guards = []
    for g in sys_.domain.guards:
        fixed = _fix_last(g, c_e, n)
        if fixed.op == "const":
            if fixed.value <= 0:
                raise SpecError("slice lies outside the domain guards")
            continue
        guards.append(fixed)
    try:
        dom = DomainBox(sys_.domain.lower[:m], sys_.domain.upper[:m], tuple(guards))
    except SpecError as err:
        raise SpecError(f"slice outside domain: {err}") from err
    e_H = None
    if sys_.e_H is not None and abs(sys_.e_H[-1]) < 1e-12:
        e_H = sys_.e_H[:m] / np.linalg.norm(sys_.e_H[:m])
    record = TransformRecord("reduce", {"axis": n, "c_e": c_e}, sys_.name)
    out = build_from_recipe(rec, dom, name=sys_.name + "-reduced",
                            sampling=sys_.sampling, e_H=e_H)
    out.notes = sys_.notes + (record.note(),)
    return out


def reduce_generators(space, c_e):
    """Generators surviving the reduction: last row of Z and last shift entry
    vanish; the fixed value feeds the last column into the shift."""
    if not space.basis:
        return []
    n = space.basis[0].Z.shape[0]
    kept = filter_generators(space, ("exchange_row", n))
    out = []
    for g in kept.basis:
        Z = g.Z[: n - 1, : n - 1]
        omega = g.omega[: n - 1] + g.Z[: n - 1, n - 1] * c_e
        out.append(Generator(Z=Z, omega=omega, c_z=g.c_z,
                             c_xi=g.c_xi.copy(), c_zeta=g.c_zeta.copy()))
    return out


def exchange_point(z, l, c_e):
    """The involutive point map of the entropy/energy exchange."""
    z = np.asarray(z, dtype=float)
    out = z.copy()
    zl = z[..., l - 1]
    out *= (c_e / zl)[..., None] if z.ndim > 1 else c_e / zl
    out[..., l - 1] = c_e**2 / zl
    return out


def t_exchange(sys_, l, c_e):
    """Exchange the conserved level with constituent equation l.

    Requires the l-th coordinate bounded away from zero with the sign of c_e
    on the whole domain; the map is an exact involution."""
    n = sys_.n
    if c_e == 0:
        raise SpecError("exchange needs a nonzero fixed value")
    if not 1 <= l <= n:
        raise SpecError(f"exchange coordinate {l} outside 1..{n}")
    lo, hi = sys_.domain.lower[l - 1], sys_.domain.upper[l - 1]
    if lo * hi <= 0 or np.sign(lo) != np.sign(c_e):
        raise SpecError("domain must keep the exchanged coordinate away from zero "
                        "with the sign of the fixed value")
    rec = dict(sys_.recipe)
    kind = rec.get("kind")
    if kind not in ("zsystem", "zsystem-eos"):
        raise SpecError(f"cannot exchange on kind '{kind}'")
    if rec.get("zeta_map") is not None:
        raise SpecError("exchange after a level map is not supported")
    zl = ex.var(l, n)
    repl = {l: ex.simplify(ex.const(float(c_e) ** 2, n) / zl)}
    for j in range(1, n + 1):
        if j != l:
            repl[j] = ex.simplify(ex.const(float(c_e), n) * ex.var(j, n) / zl)
    rec["zeta"] = _subst(rec["zeta"], repl, n)
    if kind == "zsystem":
        factor = ex.simplify((zl * zl) / ex.const(float(c_e) ** 2, n))
        rec["xi"] = ex.simplify(factor * _subst(rec["xi"], repl, n))
    else:
        state = rec.get("zzeta")
        if state is not None and state != ex.var(l, n):
            raise SpecError("exchange supports a state variable only when it is "
                            "the exchanged coordinate itself")
        sigma = rec["sigma"]
        x1, x2 = ex.var(1, 2), ex.var(2, 2)
        scale_arg = ex.simplify(x1 * ex.const(float(c_e) ** 2, 2) / (x2 * x2))
        if state is None:
            rec["sigma"] = ex.simplify(ex.substitute(ex.with_arity(sigma, 2), {1: scale_arg}))
        else:
            state_arg = ex.simplify(ex.const(float(c_e) ** 2, 2) / x2)
            rec["sigma"] = ex.simplify(ex.substitute(ex.with_arity(sigma, 2),
                                                     {1: scale_arg, 2: state_arg}))
        rec["zzeta"] = ex.var(l, n)

    lower, upper = np.empty(n), np.empty(n)
    for j in range(n):
        if j == l - 1:
            vals = [c_e**2 / lo, c_e**2 / hi]
        else:
            vals = [c_e * b / zb for b in (sys_.domain.lower[j], sys_.domain.upper[j])
                    for zb in (lo, hi)]
        lower[j], upper[j] = min(vals), max(vals)
        if lower[j] == upper[j]:
            lower[j] -= 0.5
            upper[j] += 0.5
    guards = [_subst(g, repl, n) for g in sys_.domain.guards]
    guards.append(ex.simplify(ex.const(float(np.sign(c_e)), n) * ex.var(l, n)))
    dom = DomainBox(lower, upper, tuple(guards))
    record = TransformRecord("exchange", {"l": l, "c_e": c_e}, sys_.name)
    out = build_from_recipe(rec, dom, name=sys_.name + "-exchanged",
                            sampling=sys_.sampling, e_H=sys_.e_H)
    out.notes = sys_.notes + (record.note(),)
    return out


def exchange_generators(space, l, c_e):
    """Generator map under the exchange: the l-th column of Z and the shift
    vector trade places (scaled by c_e); only generators with a vanishing
    l-th row and shift entry survive."""
    if not space.basis:
        return []
    kept = filter_generators(space, ("exchange_row", l))
    out = []
    for g in kept.basis:
        Z = g.Z.copy()
        omega = c_e * g.Z[:, l - 1]
        Z[:, l - 1] = g.omega / c_e
        Z[l - 1, :] = 0.0
        omega[l - 1] = 0.0
        out.append(Generator(Z=Z, omega=omega, c_z=g.c_z,
                             c_xi=g.c_xi.copy(), c_zeta=g.c_zeta.copy()))
    return out


def t_zeta_f(sys_, f):
    """Reparameterize the level function by f (monotone on the level range);
    potentials are unchanged and the symmetry group is preserved."""
    from .system import apply_level_map

    out = apply_level_map(sys_, f)
    record = TransformRecord("zeta_f", {"f": ex.to_text(f)}, sys_.name)
    out.notes = sys_.notes + (record.note(),)
    return out
