"""Conservation-law systems defined through potential functions.

A system is specified either by explicit potential components psi_i(z), or in
potential-split form psi = sum_t s_t(z) * grad zeta_t(z) where each scale
field s_t is an explicit expression or implicitly defined by an equation of
state s.t. sigma(s_t, z_state) = zeta_t.  Flux matrices are exact derivatives
of psi; all point evaluations are vectorized over sample batches.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import ExprDomainError, NumericalError, SpecError

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)

DEFAULT_SAMPLE_COUNT = 256
DEFAULT_SEED = 0
DEFAULT_XI_BRACKET = (1e-6, 1e6)


# ---------------------------------------------------------------------------
# sampling domain

@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned sampling box plus guard expressions required positive."""

    lower: np.ndarray
    upper: np.ndarray
    guards: tuple = ()

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "guards", tuple(self.guards))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise SpecError("domain bounds must be equal-length vectors")
        if not np.all(lower < upper):
            raise SpecError("domain requires lower < upper componentwise")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise SpecError("domain bounds must be finite")
        center = self.center()
        for g in self.guards:
            try:
                val = ex.evaluate(g, center)
            except ExprDomainError as err:
                raise SpecError(f"guard '{ex.to_text(g)}' undefined at box center: {err}") from err
            if not val > 0:
                raise SpecError(f"guard '{ex.to_text(g)}' fails at box center")

    @property
    def dim(self):
        return self.lower.size

    def center(self):
        return 0.5 * (self.lower + self.upper)

    def guard_mask(self, pts):
        mask = np.ones(pts.shape[0], dtype=bool)
        for g in self.guards:
            try:
                mask &= ex.evaluate(g, pts) > 0
            except ExprDomainError:
                for i in range(pts.shape[0]):
                    if not mask[i]:
                        continue
                    try:
                        mask[i] = ex.evaluate(g, pts[i]) > 0
                    except ExprDomainError:
                        mask[i] = False
        return mask

    def sample(self, count=DEFAULT_SAMPLE_COUNT, seed=DEFAULT_SEED):
        """Low-discrepancy lattice plus seeded uniform points, guard-filtered."""
        n = self.dim
        width = self.upper - self.lower
        rng = np.random.default_rng(seed)
        out = []
        have = 0
        lat_pos = 0
        for attempt in range(64):
            batch = max(count - have, 8)
            half = (batch + 1) // 2
            lat = _lattice(lat_pos, half, n)
            lat_pos += half
            uni = rng.random((batch - half, n))
            cand = self.lower + np.vstack([lat, uni]) * width
            mask = self.guard_mask(cand)
            kept = cand[mask]
            if kept.size:
                out.append(kept)
                have += kept.shape[0]
            if have >= count:
                return np.vstack(out)[:count]
        raise NumericalError("guard predicates reject too many sample candidates")


def _lattice(start, count, n):
    alpha = np.array([np.sqrt(p) % 1.0 for p in _PRIMES[:n]])
    k = np.arange(start + 1, start + count + 1)[:, None]
    return (k * alpha[None, :]) % 1.0


# ---------------------------------------------------------------------------
# scalar fields: value / gradient / hessian over sample batches

class SymbolicField:
    """Scalar field backed by an expression; derivatives are exact and cached."""

    def __init__(self, e, n):
        self.expr = ex.simplify(ex.with_arity(e, n)) if e.arity != n else ex.simplify(e)
        self.n = n
        self._grad = None
        self._hess = None

    def grad_exprs(self):
        if self._grad is None:
            self._grad = [ex.diff(self.expr, i) for i in range(1, self.n + 1)]
        return self._grad

    def hess_exprs(self):
        if self._hess is None:
            grads = self.grad_exprs()
            rows = [[None] * self.n for _ in range(self.n)]
            for i in range(self.n):
                for j in range(i, self.n):
                    d = ex.diff(grads[i], j + 1)
                    rows[i][j] = d
                    rows[j][i] = d
            self._hess = rows
        return self._hess

    def value(self, pts):
        return ex.evaluate(self.expr, pts)

    def grad(self, pts):
        return np.stack([ex.evaluate(g, pts) for g in self.grad_exprs()], axis=-1)

    def hess(self, pts):
        rows = self.hess_exprs()
        N = pts.shape[0]
        out = np.empty((N, self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                v = ex.evaluate(rows[i][j], pts)
                out[:, i, j] = v
                out[:, j, i] = v
        return out


class EosField:
    """Scale field implicitly defined by sigma(value, state) = zeta.

    sigma is an expression in one variable (the scale) or two (scale, state).
    The value is recovered per point by safeguarded Newton + bisection inside
    a configured bracket.
    """

    def __init__(self, zeta_field, sigma, state_field=None, bracket=DEFAULT_XI_BRACKET, rtol=1e-13):
        if sigma.arity not in (1, 2):
            raise SpecError("equation of state must have one or two arguments")
        if sigma.arity == 2 and state_field is None:
            raise SpecError("equation of state uses a state variable but none was given")
        self.zeta = zeta_field
        self.sigma = sigma
        self.state = state_field if sigma.arity == 2 else None
        self.bracket = (float(bracket[0]), float(bracket[1]))
        self.rtol = rtol
        self.n = zeta_field.n
        self._d = {}
        self._cache = {}

    def _sig(self, which):
        if which not in self._d:
            s = self.sigma
            table = {
                "x": lambda: ex.diff(s, 1),
                "w": lambda: ex.diff(s, 2),
                "xx": lambda: ex.diff(ex.diff(s, 1), 1),
                "xw": lambda: ex.diff(ex.diff(s, 1), 2),
                "ww": lambda: ex.diff(ex.diff(s, 2), 2),
            }
            self._d[which] = table[which]()
        return self._d[which]

    def _sigma_eval(self, e, x, w):
        args = x[:, None] if self.state is None else np.stack([x, w], axis=-1)
        return ex.evaluate(e, args)

    def state_value(self, pts):
        return self.state.value(pts) if self.state is not None else None

    def value(self, pts):
        key = pts.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit.copy()
        t = np.atleast_1d(self.zeta.value(pts))
        w = self.state_value(pts)
        x = self._solve(t, w)
        if len(self._cache) > 16:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = x.copy()
        return x

    def _solve(self, t, w):
        lo = np.full_like(t, self.bracket[0])
        hi = np.full_like(t, self.bracket[1])
        f_lo = self._sigma_eval(self.sigma, lo, w) - t
        f_hi = self._sigma_eval(self.sigma, hi, w) - t
        if np.any(f_lo > f_hi):
            raise NumericalError("equation of state is not increasing in the scale variable")
        if np.any(f_lo > 0) or np.any(f_hi < 0):
            raise NumericalError(
                f"scale root not bracketed within [{self.bracket[0]:g}, {self.bracket[1]:g}]")
        x = np.sqrt(lo * hi) if self.bracket[0] > 0 else 0.5 * (lo + hi)
        target = self.rtol * (1.0 + np.abs(t))
        conv = np.zeros_like(t, dtype=bool)
        for _ in range(200):
            fx = self._sigma_eval(self.sigma, x, w) - t
            lo = np.where(fx < 0, x, lo)
            hi = np.where(fx >= 0, x, hi)
            conv = np.abs(fx) <= target
            if np.all(conv):
                break
            dfx = self._sigma_eval(self._sig("x"), x, w)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x - fx / dfx
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi) & (dfx > 0)
            x = np.where(conv, x, np.where(ok, newton, 0.5 * (lo + hi)))
        if not np.all(conv):
            raise NumericalError("scale root solve did not converge")
        slope = self._sigma_eval(self._sig("x"), x, w)
        if np.any(slope <= 0):
            raise NumericalError("equation of state slope is nonpositive at a sample")
        return x

    def grad(self, pts):
        x = self.value(pts)
        w = self.state_value(pts)
        zg = self.zeta.grad(pts)
        sx = self._sigma_eval(self._sig("x"), x, w)
        if self.state is None:
            return zg / sx[:, None]
        sw = self._sigma_eval(self._sig("w"), x, w)
        wg = self.state.grad(pts)
        return (zg - sw[:, None] * wg) / sx[:, None]

    def hess(self, pts):
        x = self.value(pts)
        w = self.state_value(pts)
        xg = self.grad(pts)
        zh = self.zeta.hess(pts)
        sx = self._sigma_eval(self._sig("x"), x, w)
        sxx = self._sigma_eval(self._sig("xx"), x, w)
        num = zh - sxx[:, None, None] * np.einsum("ni,nj->nij", xg, xg)
        if self.state is not None:
            sw = self._sigma_eval(self._sig("w"), x, w)
            sxw = self._sigma_eval(self._sig("xw"), x, w)
            sww = self._sigma_eval(self._sig("ww"), x, w)
            wg = self.state.grad(pts)
            wh = self.state.hess(pts)
            cross = np.einsum("ni,nj->nij", xg, wg)
            num = num - sxw[:, None, None] * (cross + cross.transpose(0, 2, 1))
            num = num - sww[:, None, None] * np.einsum("ni,nj->nij", wg, wg)
            num = num - sw[:, None, None] * wh
        return num / sx[:, None, None]


class QuotientField:
    """Field num/den for a general numerator field and symbolic denominator."""

    def __init__(self, num, den):
        self.num = num
        self.den = den
        self.n = num.n

    def value(self, pts):
        return self.num.value(pts) / self.den.value(pts)

    def grad(self, pts):
        nv, dv = self.num.value(pts), self.den.value(pts)
        ng, dg = self.num.grad(pts), self.den.grad(pts)
        return (ng * dv[:, None] - nv[:, None] * dg) / dv[:, None] ** 2

    def hess(self, pts):
        nv, dv = self.num.value(pts), self.den.value(pts)
        ng, dg = self.num.grad(pts), self.den.grad(pts)
        nh, dh = self.num.hess(pts), self.den.hess(pts)
        cross = np.einsum("ni,nj->nij", ng, dg)
        ddg = np.einsum("ni,nj->nij", dg, dg)
        d = dv[:, None, None]
        nvv = nv[:, None, None]
        return nh / d - (cross + cross.transpose(0, 2, 1)) / d**2 - nvv * dh / d**2 + 2 * nvv * ddg / d**3


class MixedField:
    """Linear combination sum_k c_k * field_k."""

    def __init__(self, coeffs, fields):
        self.coeffs = [float(c) for c in coeffs]
        self.fields = list(fields)
        self.n = fields[0].n

    def value(self, pts):
        return sum(c * f.value(pts) for c, f in zip(self.coeffs, self.fields))

    def grad(self, pts):
        return sum(c * f.grad(pts) for c, f in zip(self.coeffs, self.fields))

    def hess(self, pts):
        return sum(c * f.hess(pts) for c, f in zip(self.coeffs, self.fields))


@dataclass
class Term:
    """One potential-split term: scale * grad(zeta), selecting m components."""

    zeta: SymbolicField
    scale: object
    comp: tuple
    recipe: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EntropyPair:
    """Entropy density/flux vector and potential vector at evaluation points."""

    q: np.ndarray
    psi: np.ndarray


# ---------------------------------------------------------------------------
# system definition

class SystemDef:
    """A conservation-law system with gradient fluxes a = d(psi)/dz."""

    def __init__(self, name, kind, n, m, domain, terms=None, psi_fields=None,
                 inner=None, pull_matrix=None, pull_offset=None, e_H=None,
                 sampling=(DEFAULT_SAMPLE_COUNT, DEFAULT_SEED), recipe=None, notes=()):
        self.name = name
        self.kind = kind
        self.n = n
        self.m = m
        self.domain = domain
        self.terms = terms
        self.psi_fields = psi_fields
        self.inner = inner
        self.pull_matrix = pull_matrix
        self.pull_offset = pull_offset
        self.e_H = None if e_H is None else np.asarray(e_H, dtype=float)
        self.sampling = (int(sampling[0]), int(sampling[1]))
        self.recipe = recipe or {}
        self.notes = tuple(notes)
        self._dir_cache = {}
        if domain.dim != n:
            raise SpecError(f"domain dimension {domain.dim} != system dimension {n}")

    # -- sampling ----------------------------------------------------------
    def samples(self, count=None, seed=None):
        return self.domain.sample(
            self.sampling[0] if count is None else count,
            self.sampling[1] if seed is None else seed,
        )

    @property
    def is_potential_split(self):
        return self.terms is not None

    @property
    def is_square(self):
        return self.m == self.n

    # -- evaluation --------------------------------------------------------
    def _pts(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        return (pts[None, :] if single else pts), single

    def psi_at(self, points):
        pts, single = self._pts(points)
        if self.inner is not None:
            out = self.inner.psi_at(pts @ self.pull_matrix.T + self.pull_offset)
        elif self.terms is not None:
            out = np.zeros((pts.shape[0], self.m))
            for t in self.terms:
                s = t.scale.value(pts)
                zg = t.zeta.grad(pts)
                out += s[:, None] * zg[:, list(t.comp)]
        else:
            out = np.stack([f.value(pts) for f in self.psi_fields], axis=-1)
        return out[0] if single else out

    def flux_at(self, points):
        pts, single = self._pts(points)
        if self.inner is not None:
            abar = self.inner.flux_at(pts @ self.pull_matrix.T + self.pull_offset)
            out = np.einsum("nij,jk->nik", abar, self.pull_matrix)
        elif self.terms is not None:
            out = np.zeros((pts.shape[0], self.m, self.n))
            for t in self.terms:
                s = t.scale.value(pts)
                sg = t.scale.grad(pts)
                zg = t.zeta.grad(pts)
                zh = t.zeta.hess(pts)
                out += s[:, None, None] * zh[:, list(t.comp), :]
                out += np.einsum("ni,nj->nij", zg[:, list(t.comp)], sg)
        else:
            out = np.stack([f.grad(pts) for f in self.psi_fields], axis=1)
        return out[0] if single else out

    def hess_dir(self, e, points):
        """Hessian of (e . psi) with exact (or implicit-function) derivatives."""
        pts, single = self._pts(points)
        e = np.asarray(e, dtype=float)
        if self.inner is not None:
            h_in = self.inner.hess_dir(e, pts @ self.pull_matrix.T + self.pull_offset)
            out = np.einsum("ji,njk,kl->nil", self.pull_matrix, h_in, self.pull_matrix)
        elif self.terms is not None:
            out = np.zeros((pts.shape[0], self.n, self.n))
            for idx, t in enumerate(self.terms):
                g = self._dir_field(idx, e)
                gv, gg, gh = g.value(pts), g.grad(pts), g.hess(pts)
                sv, sg, sh = t.scale.value(pts), t.scale.grad(pts), t.scale.hess(pts)
                cross = np.einsum("ni,nj->nij", sg, gg)
                out += sh * gv[:, None, None] + cross + cross.transpose(0, 2, 1) + sv[:, None, None] * gh
        else:
            out = np.zeros((pts.shape[0], self.n, self.n))
            for ei, f in zip(e, self.psi_fields):
                if ei != 0.0:
                    out += ei * f.hess(pts)
        out = 0.5 * (out + out.transpose(0, 2, 1))
        return out[0] if single else out

    def _dir_field(self, term_index, e):
        key = (term_index, e.tobytes())
        if key not in self._dir_cache:
            t = self.terms[term_index]
            grads = t.zeta.grad_exprs()
            combo = ex.const(0.0, self.n)
            for ei, ci in zip(e, t.comp):
                if ei != 0.0:
                    combo = combo + ex.const(float(ei), self.n) * grads[ci]
            self._dir_cache[key] = SymbolicField(ex.simplify(combo), self.n)
        return self._dir_cache[key]

    def psi_exprs(self):
        """Symbolic potential components when every scale is an expression."""
        if self.psi_fields is not None:
            return [f.expr for f in self.psi_fields]
        if self.terms is None or any(not isinstance(t.scale, SymbolicField)
                                     or "xi" not in t.recipe for t in self.terms):
            return None
        out = []
        for i in range(self.m):
            acc = ex.const(0.0, self.n)
            for t in self.terms:
                acc = acc + t.recipe["xi"] * t.zeta.grad_exprs()[t.comp[i]]
            out.append(ex.simplify(acc))
        return out


# ---------------------------------------------------------------------------
# constructors

def make_zsystem(zeta, xi, domain, name="zsystem", sampling=(DEFAULT_SAMPLE_COUNT, DEFAULT_SEED),
                 e_H=None):
    """System with psi = xi * grad(zeta); xi must not vanish on the domain."""
    n = domain.dim
    zf = SymbolicField(zeta, n)
    xf = SymbolicField(xi, n)
    if xf.expr.op == "const" and xf.expr.value == 0.0:
        raise SpecError("scale expression is identically zero")
    sys_ = SystemDef(name, "zsystem", n, n, domain,
                     terms=[Term(zf, xf, tuple(range(n)), {"xi": xf.expr, "zeta": zf.expr})],
                     sampling=sampling, e_H=e_H,
                     recipe={"kind": "zsystem", "zeta": zf.expr, "xi": xf.expr})
    vals = xf.value(sys_.samples(min(64, sampling[0])))
    if np.any(vals == 0.0) or vals.min() < 0 < vals.max():
        raise SpecError("scale expression vanishes inside the domain")
    return sys_


def make_zsystem_eos(zeta, sigma, z_state, domain, name="zsystem-eos",
                     sampling=(DEFAULT_SAMPLE_COUNT, DEFAULT_SEED), e_H=None,
                     bracket=DEFAULT_XI_BRACKET):
    """System with the scale recovered from an equation of state.

    sigma is an expression in (scale,) or (scale, state); z_state gives the
    state variable as a function of z (None when sigma has one argument).
    """
    n = domain.dim
    zf = SymbolicField(zeta, n)
    sf = SymbolicField(z_state, n) if z_state is not None else None
    scale = EosField(zf, sigma, sf, bracket=bracket)
    recipe = {"kind": "zsystem-eos", "zeta": zf.expr, "sigma": sigma,
              "zzeta": None if sf is None else sf.expr}
    term = Term(zf, scale, tuple(range(n)),
                {"zeta": zf.expr, "sigma": sigma, "zzeta": None if sf is None else sf.expr})
    sys_ = SystemDef(name, "zsystem-eos", n, n, domain, terms=[term],
                     sampling=sampling, e_H=e_H, recipe=recipe)
    try:
        scale.value(sys_.samples(min(64, sampling[0])))
    except NumericalError as err:
        raise SpecError(f"equation of state invalid on domain: {err}") from err
    return sys_


def make_multi(pairs, domain, name="multi", sampling=(DEFAULT_SAMPLE_COUNT, DEFAULT_SEED),
               e_H=None, bracket=DEFAULT_XI_BRACKET, mixing=None):
    """Multi-term system psi = sum_k s_k * grad(zeta_k).

    Each pair is (zeta, spec) with spec either {"xi": Expr} or
    {"sigma": Expr, "zzeta": Expr|None}.  An optional K x K mixing matrix
    couples equation-of-state scales: s_k = sum_l B[l][k] * xi_l.
    """
    n = domain.dim
    terms = []
    raw_scales = []
    for zeta, spec in pairs:
        zf = SymbolicField(zeta, n)
        if "xi" in spec and spec["xi"] is not None:
            sc = SymbolicField(spec["xi"], n)
            rec = {"zeta": zf.expr, "xi": sc.expr}
        else:
            state = spec.get("zzeta")
            sf = SymbolicField(state, n) if state is not None else None
            sc = EosField(zf, spec["sigma"], sf, bracket=bracket)
            rec = {"zeta": zf.expr, "sigma": spec["sigma"],
                   "zzeta": None if sf is None else sf.expr}
        raw_scales.append(sc)
        terms.append(Term(zf, sc, tuple(range(min(n, zf.n))), rec))
    K = len(terms)
    if mixing is not None:
        B = np.asarray(mixing, dtype=float)
        if B.shape != (K, K):
            raise SpecError(f"mixing matrix must be {K}x{K}")
        if n % K != 0:
            raise SpecError("mixed multi-term system needs equal-width blocks")
        m = n // K
        for k, t in enumerate(terms):
            t.scale = MixedField(B[:, k], raw_scales)
            t.comp = tuple(range(k * m, (k + 1) * m))
    else:
        m = n
    recipe = {"kind": "multi", "terms": [t.recipe for t in terms],
              "mixing": None if mixing is None else np.asarray(mixing, float)}
    return SystemDef(name, "multi", n, m, domain, terms=terms, sampling=sampling,
                     e_H=e_H, recipe=recipe)


def make_explicit(psis, domain, name="explicit", sampling=(DEFAULT_SAMPLE_COUNT, DEFAULT_SEED),
                  e_H=None):
    """System given by explicit potential components."""
    n = domain.dim
    fields = [SymbolicField(p, n) for p in psis]
    return SystemDef(name, "explicit", n, len(fields), domain, psi_fields=fields,
                     sampling=sampling, e_H=e_H,
                     recipe={"kind": "explicit", "psi": [f.expr for f in fields]})


def build_from_recipe(recipe, domain, name="system", sampling=(DEFAULT_SAMPLE_COUNT, DEFAULT_SEED),
                      e_H=None, bracket=DEFAULT_XI_BRACKET):
    """Construct a system from its serializable description."""
    kind = recipe["kind"]
    if kind == "explicit":
        return make_explicit(recipe["psi"], domain, name=name, sampling=sampling, e_H=e_H)
    if kind == "zsystem":
        return make_zsystem(recipe["zeta"], recipe["xi"], domain, name=name,
                            sampling=sampling, e_H=e_H)
    if kind == "zsystem-eos":
        sys_ = make_zsystem_eos(recipe["zeta"], recipe["sigma"], recipe.get("zzeta"),
                                domain, name=name, sampling=sampling, e_H=e_H,
                                bracket=bracket)
        fmap = recipe.get("zeta_map")
        if fmap is not None:
            sys_ = apply_level_map(sys_, fmap)
        return sys_
    if kind == "multi":
        pairs = []
        for t in recipe["terms"]:
            if t.get("xi") is not None:
                pairs.append((t["zeta"], {"xi": t["xi"]}))
            else:
                pairs.append((t["zeta"], {"sigma": t["sigma"], "zzeta": t.get("zzeta")}))
        return make_multi(pairs, domain, name=name, sampling=sampling, e_H=e_H,
                          bracket=bracket, mixing=recipe.get("mixing"))
    raise SpecError(f"unknown system kind '{kind}'")


def apply_level_map(sys_, fmap):
    """Reparameterize the level function of a scalar-relation system:
    zeta -> f(zeta) with the scale divided by f'(zeta); potentials unchanged."""
    if sys_.terms is None or len(sys_.terms) != 1 or not isinstance(sys_.terms[0].scale, EosField):
        raise SpecError("level reparameterization needs a single scalar-relation term")
    base = sys_.terms[0]
    if base.scale.state is not None:
        raise SpecError("level reparameterization needs a state-free scalar relation")
    n = sys_.n
    zeta = base.zeta.expr
    fz = ex.diff(fmap, 1)
    f_of = ex.remap(fmap, n, assignments={1: zeta})
    fz_of = ex.remap(fz, n, assignments={1: zeta})
    slope = ex.evaluate(fz_of, sys_.samples(min(64, sys_.sampling[0])))
    if np.any(slope == 0.0) or (slope.min() < 0 < slope.max()):
        raise SpecError("level map derivative vanishes on the level range")
    prior = sys_.recipe.get("zeta_map")
    combined = fmap if prior is None else ex.remap(fmap, 1, assignments={1: prior})
    recipe = {"kind": "zsystem-eos", "zeta": zeta, "sigma": sys_.recipe["sigma"],
              "zzeta": None, "zeta_map": combined}
    term = Term(SymbolicField(f_of, n), QuotientField(base.scale, SymbolicField(fz_of, n)),
                base.comp, dict(recipe))
    return SystemDef(sys_.name + "-mapped", "zsystem-eos", n, sys_.m, sys_.domain,
                     terms=[term], sampling=sys_.sampling, e_H=sys_.e_H, recipe=recipe,
                     notes=sys_.notes)


def build_from_WY(W, Y, xi, domain, name="wy-system", **kw):
    """Z-system with zeta(z) = Y.z + z.Wz/2 for symmetric W with WY = 0."""
    W = np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    if W.shape != (n, n):
        raise SpecError("W must be square and match Y")
    if np.abs(W - W.T).max() > 1e-12 * max(1.0, np.abs(W).max()):
        raise SpecError("W must be symmetric")
    if np.linalg.norm(W @ Y) > 1e-12 * max(1.0, np.abs(W).max()) * max(1.0, np.linalg.norm(Y)):
        raise SpecError("W Y must vanish")
    zeta = quadratic_expr(Y, W, n)
    return make_zsystem(zeta, xi, domain, name=name, **kw)


def quadratic_expr(Y, W, n):
    """Expression Y.z + z.Wz/2 over arity n."""
    acc = ex.const(0.0, n)
    for i in range(n):
        if Y[i] != 0.0:
            acc = acc + ex.const(float(Y[i]), n) * ex.var(i + 1, n)
    for i in range(n):
        for j in range(n):
            if W[i, j] != 0.0:
                term = ex.const(0.5 * float(W[i, j]), n) * (ex.var(i + 1, n) * ex.var(j + 1, n))
                acc = acc + term
    return ex.simplify(acc)


# ---------------------------------------------------------------------------
# pointwise structure checks

def psi_at(sys_, p):
    return sys_.psi_at(p)


def flux_at(sys_, p):
    return sys_.flux_at(p)


def entropy_at(sys_, points):
    """Entropy pair at points: q_i = sum_j a_ij z_j - psi_i."""
    pts, single = sys_._pts(points)
    a = sys_.flux_at(pts)
    psi = sys_.psi_at(pts)
    q = np.einsum("nij,nj->ni", a, pts[:, :sys_.n]) - psi
    if single:
        return EntropyPair(q=q[0], psi=psi[0])
    return EntropyPair(q=q, psi=psi)


def check_closed(sys_, samples=None, tol=1e-9):
    """True iff sum_j z_j psi_j(z) vanishes at all samples."""
    if not sys_.is_square:
        raise SpecError("closedness check needs a square system (m == n)")
    pts = sys_.samples() if samples is None else np.atleast_2d(samples)
    psi = sys_.psi_at(pts)
    resid = np.abs(np.einsum("nj,nj->n", pts, psi))
    scale = max(1.0, np.abs(psi).max())
    return bool(resid.max() <= tol * scale)


def check_symmetric_ahat(sys_, samples=None, tol=1e-9, xi=None):
    """Whether a_ij - psi_i * xi_zj / xi is symmetric at every sample."""
    pts = sys_.samples() if samples is None else np.atleast_2d(samples)
    if xi is not None:
        xf = SymbolicField(xi, sys_.n)
    else:
        if sys_.terms is None or len(sys_.terms) != 1:
            raise SpecError("symmetric-part check needs a single-term system or explicit xi")
        xf = sys_.terms[0].scale
    xv = xf.value(pts)
    if np.any(xv == 0.0):
        raise NumericalError("scale vanishes at a sample")
    xg = xf.grad(pts)
    a = sys_.flux_at(pts)
    psi = sys_.psi_at(pts)
    ahat = a - np.einsum("ni,nj->nij", psi, xg) / xv[:, None, None]
    asym = np.abs(ahat - ahat.transpose(0, 2, 1)).max()
    return bool(asym <= tol * max(1.0, np.abs(ahat).max()))


def rank_flux(sys_, samples=None, tol=1e-9):
    """Minimum numerical rank of the flux matrix over the samples."""
    pts = sys_.samples() if samples is None else np.atleast_2d(samples)
    a = sys_.flux_at(pts)
    ranks = []
    for k in range(a.shape[0]):
        svals = np.linalg.svd(a[k], compute_uv=False)
        smax = svals[0] if svals.size else 0.0
        ranks.append(int(np.sum(svals > tol * smax)))
    return min(ranks)
