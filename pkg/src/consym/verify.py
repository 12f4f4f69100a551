"""Self-contained invariant suite for a system definition.

Each check returns a record {name, passed, detail}; checks that do not apply
to the given system are skipped silently.  Used by the verify command and by
the acceptance tests."""
from __future__ import annotations

import numpy as np

from . import hyperbolicity as hy
from . import symmetry as sm
from .errors import ConsymError
from .system import entropy_at, rank_flux


def _record(name, passed, detail=""):
    return {"name": name, "passed": bool(passed), "detail": str(detail)}


def verify(sys_, samples=None, seed=None, tol=1e-9):
    """Run the invariant suite; returns (all_passed, records)."""
    count = sys_.sampling[0] if samples is None else int(samples)
    seed = sys_.sampling[1] if seed is None else int(seed)
    pts = sys_.samples(count, seed)
    checks = []

    checks.append(_gradient_structure(sys_, pts))
    if sys_.terms is not None:
        checks.extend(_potential_split_checks(sys_, pts, count, seed, tol))
    expect = sys_.recipe.get("expect")
    if expect and sys_.terms is not None:
        checks.extend(_expect_checks(sys_, pts, expect, tol))
    return all(c["passed"] for c in checks), checks


def _gradient_structure(sys_, pts, h=1e-6, rtol=1e-5):
    sub = pts[: min(100, len(pts))]
    a = sys_.flux_at(sub)
    worst = 0.0
    for j in range(sys_.n):
        up = sub.copy()
        dn = sub.copy()
        up[:, j] += h
        dn[:, j] -= h
        fd = (sys_.psi_at(up) - sys_.psi_at(dn)) / (2 * h)
        worst = max(worst, float(np.abs(a[:, :, j] - fd).max() / max(1.0, np.abs(a).max())))
    return _record("gradient-structure", worst <= rtol, f"max rel deviation {worst:.2e}")


def _potential_split_checks(sys_, pts, count, seed, tol):
    checks = []
    space = sm.solve_zsystem(sys_, pts, tol=tol)

    residuals = [space.residual(g) for g in space.basis]
    rmax = max(residuals, default=0.0)
    checks.append(_record("generator-residuals", rmax <= 10 * tol, f"max residual {rmax:.2e}"))

    worst_sum = 0.0
    basis = space.basis
    for i in range(len(basis)):
        for j in range(i + 1, min(i + 3, len(basis))):
            g, h_ = basis[i], basis[j]
            u = space._pack(g) + space._pack(h_)
            smax = np.linalg.svd(space.matrix, compute_uv=False)[0]
            worst_sum = max(worst_sum, float(np.linalg.norm(space.matrix @ u)
                                             / (smax * max(np.linalg.norm(u), 1e-300))))
    checks.append(_record("closure-under-addition", worst_sum <= 10 * tol,
                          f"max pair residual {worst_sum:.2e}"))

    lam = sm.classify_lambda(space, sys_)
    worst_perp = 0.0
    for k in range(lam.lambda_perp.dim):
        e = lam.lambda_perp.vectors[:, k]
        for g in space.hha_generators():
            worst_perp = max(worst_perp, float(np.linalg.norm(g.Z @ e)
                                               + np.linalg.norm(g.Z.T @ e)
                                               + abs(g.omega @ e)))
    checks.append(_record("inert-direction-consistency", worst_perp <= 1e-7,
                          f"max action on inert directions {worst_perp:.2e}"))

    space2 = sm.solve_zsystem(sys_, sys_.samples(2 * count, seed), tol=tol)
    same = (len(space2.zero_part) == len(space.zero_part)
            and len(space2.part("zeta")) == len(space.part("zeta")))
    checks.append(_record("sample-count-independence", same,
                          f"dims at {count} vs {2 * count} samples"))

    checks.append(_entropy_transport(sys_, space, pts))
    checks.append(_flow_invariance(sys_, space, pts))

    from .report import select_timelike

    cand, e_H, _ = select_timelike(space, sys_)
    if e_H is not None:
        rep = hy.hessian_check(sys_, e_H, pts, tol=tol)
        checklist = hy.sufficient_checklist(sys_, e_H, pts)
        if hy.checklist_passes(checklist):
            checks.append(_record("checklist-implies-hessian", rep.verdict != "fails",
                                  f"checklist passes, verdict {rep.verdict}"))
        if rank_flux(sys_, pts[:32]) == sys_.n and len(space.part("zeta")) == 1:
            checks.append(_record("richness-at-least-two", lam.L >= 2, f"L = {lam.L}"))
    return checks


def _entropy_transport(sys_, space, pts, h=1e-6, rtol=2e-4):
    """Along a level-fixing generator, the entropy flux moves by
    (X + c_Z I) q + a omega (checked with finite differences)."""
    worst = 0.0
    sub = pts[: min(40, len(pts))]
    for g in space.zero_part:
        X = g.X if g.X is not None else -g.Z.T
        vel = sub @ g.Z.T + g.omega
        q_up = entropy_at(sys_, sub + h * vel).q
        q_dn = entropy_at(sys_, sub - h * vel).q
        fd = (q_up - q_dn) / (2 * h)
        a = sys_.flux_at(sub)
        pred = entropy_at(sys_, sub).q @ X.T + np.einsum("nij,j->ni", a, g.omega)
        worst = max(worst, float(np.abs(fd - pred).max() / max(1.0, np.abs(pred).max())))
    return _record("entropy-flux-transport", worst <= rtol, f"max rel deviation {worst:.2e}")


def _flow_invariance(sys_, space, pts, tau=0.1, tol=1e-6):
    """Transporting points and co-transporting directions along a generator
    flow leaves the directional-Hessian quadratic form unchanged; the
    definiteness verdict is preserved as well."""
    if sys_.e_H is None:
        return _record("flow-invariance", True, "skipped: no time-like direction")
    e_H = sys_.e_H
    sub = pts[: min(20, len(pts))]
    rng = np.random.default_rng(0)
    thetas = rng.normal(size=sub.shape)
    worst = 0.0
    for g in space.zero_part[:3]:
        if np.linalg.norm(g.Z @ e_H) > 1e-8:
            continue
        moved = hy.transport_points(g, sub, tau)
        mask = sys_.domain.guard_mask(moved)
        if not mask.any():
            continue
        th_moved = hy.transport_directions(g, thetas, tau)
        h0 = sys_.hess_dir(e_H, sub[mask])
        h1 = sys_.hess_dir(e_H, moved[mask])
        q0 = np.einsum("ni,nij,nj->n", thetas[mask], h0, thetas[mask])
        q1 = np.einsum("ni,nij,nj->n", th_moved[mask], h1, th_moved[mask])
        worst = max(worst, float(np.abs(q0 - q1).max() / max(1.0, np.abs(q0).max())))
    return _record("flow-invariance", worst <= tol, f"max form deviation {worst:.2e}")


def _expect_checks(sys_, pts, expect, tol):
    checks = []
    space = sm.solve_zsystem(sys_, pts, tol=tol)
    lam = sm.classify_lambda(space, sys_)
    if "dim_zero" in expect:
        checks.append(_record("expect-dim-zero", len(space.zero_part) == expect["dim_zero"],
                              f"got {len(space.zero_part)}, expected {expect['dim_zero']}"))
    if "L" in expect:
        checks.append(_record("expect-richness", lam.L == expect["L"],
                              f"got {lam.L}, expected {expect['L']}"))
    if "dim_lambda_i" in expect:
        checks.append(_record("expect-indirect-dim", lam.lambda_i.dim == expect["dim_lambda_i"],
                              f"got {lam.lambda_i.dim}, expected {expect['dim_lambda_i']}"))
    if "dim_lambda_perp" in expect:
        checks.append(_record("expect-inert-dim", lam.lambda_perp.dim == expect["dim_lambda_perp"],
                              f"got {lam.lambda_perp.dim}, expected {expect['dim_lambda_perp']}"))
    if "flags" in expect:
        flags = sm.classify_subclasses(sys_, space, pts)
        missing = [f for f in expect["flags"] if not flags.get(f, {}).get("holds")]
        checks.append(_record("expect-flags", not missing,
                              f"missing flags: {missing}" if missing else "all expected flags hold"))
    if "verdict" in expect:
        from .report import select_timelike
        _, e_H, _ = select_timelike(space, sys_)
        verdict = "fails" if e_H is None else hy.hessian_check(sys_, e_H, pts, tol=tol).verdict
        checks.append(_record("expect-verdict", verdict == expect["verdict"],
                              f"got {verdict}, expected {expect['verdict']}"))
    return checks
