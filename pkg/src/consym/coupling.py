"""Coupling of constituent systems.

Strategy A assembles a block system, imposes one linear constraint on the
stacked dependent variable and reduces through an orthogonal completion;
gradient structure, entropy extension and hyperbolicity survive by congruence.
Strategy B keeps the stacked variable and mixes equation-of-state scales with
a matrix acting across constituents that share a level function."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import SpecError
from .linalg import orthogonal_completion
from .symmetry import Generator, SymmetrySpace
from .system import (DomainBox, EosField, SymbolicField, SystemDef, Term,
                     make_multi)


@dataclass
class CouplingSpecA:
    constituents: list
    e_lambda: np.ndarray
    c_lambda: float
    generators: list = None  # block-level (Z_k, omega_k) per constituent, shared X


@dataclass
class CouplingSpecB:
    constituents: list
    B: np.ndarray
    require_nonnegative: bool = False


def _offsets(constituents):
    offs = [0]
    for s in constituents:
        offs.append(offs[-1] + s.n)
    return offs


def assemble_block(constituents):
    """Stack constituents sharing the flux count m into one block system."""
    if not constituents:
        raise SpecError("need at least one constituent")
    m = constituents[0].m
    if any(s.m != m for s in constituents):
        raise SpecError("constituents must share the independent-variable count")
    if any(s.terms is None for s in constituents):
        raise SpecError("block assembly needs potential-split constituents")
    offs = _offsets(constituents)
    n_bar = offs[-1]
    terms = []
    recipes = []
    serializable = len(set(s.n for s in constituents)) == 1
    for k, s in enumerate(constituents):
        if len(s.terms) != 1:
            serializable = False
        for t in s.terms:
            zeta = ex.remap(t.zeta.expr, n_bar, offset=offs[k])
            zf = SymbolicField(zeta, n_bar)
            rec = {"zeta": zeta}
            if "xi" in t.recipe:
                scale = SymbolicField(ex.remap(t.recipe["xi"], n_bar, offset=offs[k]), n_bar)
                rec["xi"] = scale.expr
            else:
                state = t.recipe.get("zzeta")
                sf = SymbolicField(ex.remap(state, n_bar, offset=offs[k]), n_bar) if state is not None else None
                scale = EosField(zf, t.recipe["sigma"], sf,
                                 bracket=t.scale.bracket if isinstance(t.scale, EosField) else (1e-6, 1e6))
                rec["sigma"] = t.recipe["sigma"]
                rec["zzeta"] = None if sf is None else sf.expr
            comp = tuple(offs[k] + c for c in t.comp)
            terms.append(Term(zf, scale, comp, rec))
            recipes.append(rec)
    lower = np.concatenate([s.domain.lower for s in constituents])
    upper = np.concatenate([s.domain.upper for s in constituents])
    guards = []
    for k, s in enumerate(constituents):
        guards.extend(ex.remap(g, n_bar, offset=offs[k]) for g in s.domain.guards)
    dom = DomainBox(lower, upper, tuple(guards))
    recipe = {"kind": "multi", "terms": recipes, "mixing": np.eye(len(terms))} if serializable else {}
    e_H = constituents[0].e_H
    return SystemDef("block(" + ",".join(s.name for s in constituents) + ")", "multi",
                     n_bar, m, dom, terms=terms, sampling=constituents[0].sampling,
                     e_H=e_H, recipe=recipe)


def block_generators(constituents, per_block):
    """Block-diagonal generators from per-constituent (Z, omega) pairs."""
    offs = _offsets(constituents)
    n_bar = offs[-1]
    out = []
    for gens in per_block:
        Z = np.zeros((n_bar, n_bar))
        omega = np.zeros(n_bar)
        for k, g in enumerate(gens):
            sl = slice(offs[k], offs[k + 1])
            Z[sl, sl] = g.Z
            omega[sl] = g.omega
        out.append(Generator(Z=Z, omega=omega, X=gens[0].X if gens[0].X is not None else -gens[0].Z.T))
    return out


def spec_a_identical(system, K, e_unit, lam, c_lambda, generators=None):
    """Constraint data for K copies of one system, with the constraint built
    from a phase direction e and weight vector lam (unit K-vector)."""
    e_unit = np.asarray(e_unit, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if lam.size != K:
        raise SpecError("weight vector length must match the copy count")
    if not np.isclose(np.linalg.norm(lam), 1.0, atol=1e-10):
        raise SpecError("weight vector must be unit length")
    if not np.isclose(np.linalg.norm(e_unit), 1.0, atol=1e-10):
        raise SpecError("phase direction must be unit length")
    e_lambda = np.concatenate([lk * e_unit for lk in lam])
    return CouplingSpecA(constituents=[system] * K, e_lambda=e_lambda,
                         c_lambda=float(c_lambda), generators=generators)


def spec_a_shared_zeta(systems, e_unit, lam, c_lambda, generators=None):
    """Same constraint data for distinct systems sharing one level function."""
    z0 = systems[0].recipe.get("zeta")
    if z0 is None or any(s.recipe.get("zeta") != z0 for s in systems):
        raise SpecError("shared-level coupling needs structurally equal level functions")
    spec = spec_a_identical(systems[0], len(systems), e_unit, lam, c_lambda, generators)
    spec.constituents = list(systems)
    return spec


def couple_a(spec, generators=None, tol=1e-9):
    """Constraint coupling: returns the reduced system and transported generators."""
    block = assemble_block(spec.constituents)
    n_bar = block.n
    e_l = np.asarray(spec.e_lambda, dtype=float)
    if e_l.size != n_bar or not np.isclose(np.linalg.norm(e_l), 1.0, atol=1e-10):
        raise SpecError("constraint direction must be a unit vector of the stacked dimension")
    full = orthogonal_completion(e_l[None, :])
    gamma = full[1:]                      # n x n_bar, rows orthonormal, all orthogonal to e_l
    n = n_bar - 1
    P = gamma.T                           # z_bar = P z + c_lambda * e_l
    b = spec.c_lambda * e_l

    center_bar = block.domain.center()
    center_slice = center_bar + (spec.c_lambda - e_l @ center_bar) * e_l
    half = 0.5 * (block.domain.upper - block.domain.lower)
    z_center = gamma @ center_slice
    z_half = np.abs(gamma) @ half
    n_sub = {}
    for j in range(n_bar):
        acc = ex.const(float(b[j]), n)
        for i in range(n):
            if P[j, i] != 0.0:
                acc = acc + ex.const(float(P[j, i]), n) * ex.var(i + 1, n)
        n_sub[j] = ex.simplify(acc)
    guards = []
    for g in block.domain.guards:
        guards.append(ex.simplify(ex.with_arity(
            ex.substitute(ex.with_arity(g, n_bar), {j + 1: n_sub[j] for j in range(n_bar)}), n)))
    for j in range(n_bar):
        guards.append(ex.simplify(n_sub[j] - ex.const(float(block.domain.lower[j]), n)))
        guards.append(ex.simplify(ex.const(float(block.domain.upper[j]), n) - n_sub[j]))
    dom = DomainBox(z_center - z_half, z_center + z_half, tuple(guards))

    recipe = {}
    block_psis = block.psi_exprs()
    if block_psis is not None:
        sub = {j + 1: n_sub[j] for j in range(n_bar)}
        recipe = {"kind": "explicit",
                  "psi": [ex.simplify(ex.with_arity(ex.substitute(ex.with_arity(p, n_bar), sub), n))
                          for p in block_psis]}
    coupled = SystemDef("coupled(" + ",".join(s.name for s in spec.constituents) + ")",
                        "coupled", n, block.m, dom, inner=block, pull_matrix=P,
                        pull_offset=b, sampling=block.sampling, e_H=block.e_H,
                        recipe=recipe, notes=("strategy-A coupling",))

    gens = generators if generators is not None else spec.generators
    transported = []
    if gens:
        for g in gens:
            if np.linalg.norm(g.Z.T @ e_l) > 1e-8 or abs(g.omega @ e_l) > 1e-8:
                raise SpecError("generator violates the constraint compatibility conditions")
            Z = gamma @ g.Z @ gamma.T
            omega = gamma @ g.omega + spec.c_lambda * gamma @ (g.Z @ e_l)
            transported.append(Generator(Z=Z, omega=omega, X=g.X))
    space = SymmetrySpace(basis=transported,
                          parts={"transported": list(range(len(transported)))},
                          tol=tol, sample_count=0)
    return coupled, space


def couple_b(spec):
    """Shared-level mixing: K constituents, scales mixed by the matrix B."""
    systems = spec.constituents
    K = len(systems)
    B = np.asarray(spec.B, dtype=float)
    if B.shape != (K, K):
        raise SpecError(f"mixing matrix must be {K}x{K}")
    if spec.require_nonnegative and np.any(B < 0):
        raise SpecError("mixing matrix must be entrywise nonnegative")
    z0 = systems[0].recipe.get("zeta")
    if z0 is None or any(s.recipe.get("zeta") != z0 for s in systems):
        raise SpecError("shared-level coupling needs structurally equal level functions")
    m = systems[0].m
    if any(s.m != m or s.n != m for s in systems):
        raise SpecError("constituents must be square systems of equal size")
    offs = _offsets(systems)
    n_bar = offs[-1]
    pairs = []
    for k, s in enumerate(systems):
        t = s.terms[0]
        zeta = ex.remap(t.zeta.expr, n_bar, offset=offs[k])
        if "xi" in t.recipe:
            pairs.append((zeta, {"xi": ex.remap(t.recipe["xi"], n_bar, offset=offs[k])}))
        else:
            state = t.recipe.get("zzeta")
            pairs.append((zeta, {"sigma": t.recipe["sigma"],
                                 "zzeta": None if state is None else ex.remap(state, n_bar, offset=offs[k])}))
    lower = np.concatenate([s.domain.lower for s in systems])
    upper = np.concatenate([s.domain.upper for s in systems])
    guards = []
    for k, s in enumerate(systems):
        guards.extend(ex.remap(g, n_bar, offset=offs[k]) for g in s.domain.guards)
    dom = DomainBox(lower, upper, tuple(guards))
    out = make_multi(pairs, dom, name="mixed(" + ",".join(s.name for s in systems) + ")",
                     sampling=systems[0].sampling, e_H=systems[0].e_H, mixing=B)
    if not _support_irreducible(B):
        out.notes = out.notes + ("warning: mixing matrix support is block-partitionable",)
    return out


def couple_b_generators(systems, per_block):
    """Strategy-B transport is the identity on block generators."""
    return block_generators(systems, per_block)


def _support_irreducible(B):
    K = B.shape[0]
    adj = (np.abs(B) > 0) | (np.abs(B.T) > 0)
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in range(K):
            if adj[i, j] and j not in seen:
                seen.add(j)
                frontier.append(j)
    return len(seen) == K


def mixed_scales(sys_, pts):
    """Per-term mixed scale values s_k of a strategy-B system."""
    if sys_.terms is None:
        raise SpecError("mixed scales need a potential-split system")
    return np.stack([t.scale.value(np.atleast_2d(pts)) for t in sys_.terms], axis=-1)


def rank_one_mixing(alpha, beta):
    """The two-constituent rank-one mixing matrix with weights alpha, beta > 0."""
    if alpha <= 0 or beta <= 0:
        raise SpecError("mixing weights must be positive")
    return np.array([[alpha * beta, alpha / beta],
                     [beta / alpha, 1.0 / (alpha * beta)]])


def two_fluid(alpha, beta, eos1, eos2, m=3, base=None):
    """Two equal-size constituents sharing the quadratic velocity head, mixed
    by the rank-one matrix; eos1/eos2 are scale relations in one variable."""
    from .catalog import euler_isentropic

    s1 = euler_isentropic(m, sigma=eos1) if base is None else base[0]
    s2 = euler_isentropic(m, sigma=eos2) if base is None else base[1]
    spec = CouplingSpecB(constituents=[s1, s2], B=rank_one_mixing(alpha, beta))
    return couple_b(spec)
