"""Hyperbolicity testing: time-like directions and definiteness of the
directional potential Hessian, plus the sufficient-condition checklist for
systems with an equation of state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import SpecError
from .system import EosField

# "almost everywhere" surrogate: strict positivity must hold on at least this
# fraction of samples for the non-uniform verdict (a choice, flagged in reports)
AE_FRACTION = 0.9


@dataclass
class HyperbolicityReport:
    e_H: np.ndarray
    min_eig: float
    verdict: str  # "uniform" | "hyperbolic" | "fails"
    frac_strict: float
    tol: float
    checklist: dict = None
    ae_fraction: float = AE_FRACTION


def timelike_candidates(space, n):
    """Joint nullspace of Z over the level-fixing part; the transposed action
    is allowed to be nonzero.  An empty generator set leaves all directions."""
    gens = space.zero_part
    if not gens:
        return la.SubspaceBasis(n, np.eye(n), space.tol)
    return la.joint_nullspace([g.Z for g in gens], space.tol)


def hessian_check(sys_, e_H, samples=None, tol=1e-9):
    """Definiteness sweep of the Hessian of (e_H . psi) over samples."""
    e_H = np.asarray(e_H, dtype=float)
    nrm = np.linalg.norm(e_H)
    if not np.isclose(nrm, 1.0, atol=1e-8):
        raise SpecError("time-like direction must be a unit vector")
    pts = sys_.samples() if samples is None else np.atleast_2d(np.asarray(samples, float))
    hess = sys_.hess_dir(e_H, pts)
    mins = np.empty(pts.shape[0])
    scales = np.empty(pts.shape[0])
    for k in range(hess.shape[0]):
        eigs = np.linalg.eigvalsh(hess[k])
        mins[k] = eigs[0]
        scales[k] = max(1.0, np.abs(eigs).max())
    thresh = tol * scales
    strict = mins > thresh
    nonneg = mins >= -thresh
    if np.all(strict):
        verdict = "uniform"
    elif np.all(nonneg) and strict.mean() >= AE_FRACTION:
        verdict = "hyperbolic"
    else:
        verdict = "fails"
    return HyperbolicityReport(e_H=e_H, min_eig=float(mins.min()), verdict=verdict,
                               frac_strict=float(strict.mean()), tol=tol)


def _single_eos(sys_):
    if sys_.terms is None or len(sys_.terms) != 1:
        return None
    sc = sys_.terms[0].scale
    return sc if isinstance(sc, EosField) else None


def sufficient_checklist(sys_, e_H, samples=None, tol=1e-9):
    """Per-condition sufficient tests for definiteness of the directional
    Hessian; entries are marked not-applicable when the structure is absent.

    Conditions: sign pattern of the state relation and directional slope,
    convexity of the directional head, the mixed matrix bound, alignment of
    the directional gradient with the state direction, and concavity of the
    state relation in its state argument.
    """
    checklist = {name: {"holds": None, "evidence": "not applicable"}
                 for name in ("signs", "head_convexity", "mixed_matrix",
                              "state_alignment", "state_concavity")}
    eos = _single_eos(sys_)
    if eos is None:
        return checklist
    e_H = np.asarray(e_H, dtype=float)
    pts = sys_.samples() if samples is None else np.atleast_2d(np.asarray(samples, float))
    term = sys_.terms[0]
    zeta = term.zeta
    gfield = sys_._dir_field(0, e_H)
    g = gfield.value(pts)
    g_z = gfield.grad(pts)
    g_zz = gfield.hess(pts)
    zg = zeta.grad(pts)
    zh = zeta.hess(pts)
    x = eos.value(pts)
    w = eos.state_value(pts)
    sx = eos._sigma_eval(eos._sig("x"), x, w)
    sxx = eos._sigma_eval(eos._sig("xx"), x, w)

    mins = {"xi": float(x.min()), "sigma_slope": float(sx.min()),
            "neg_curvature": float((-sxx).min()), "head_slope": float(g.min())}
    checklist["signs"] = {"holds": bool(all(v > 0 for v in mins.values())), "evidence": mins}

    head_min = min(np.linalg.eigvalsh(g_zz[k])[0] for k in range(pts.shape[0]))
    checklist["head_convexity"] = {"holds": bool(head_min >= -tol), "evidence": float(head_min)}

    cross = np.einsum("ni,nj->nij", g_z, zg)
    outer = np.einsum("ni,nj->nij", zg, zg)
    mixed = (cross + cross.transpose(0, 2, 1)
             + g[:, None, None] * zh
             - (sxx / sx**2 * g)[:, None, None] * outer)
    mixed_min = min(np.linalg.eigvalsh(0.5 * (mixed[k] + mixed[k].T))[0]
                    for k in range(pts.shape[0]))
    checklist["mixed_matrix"] = {"holds": bool(mixed_min >= -tol), "evidence": float(mixed_min)}

    if eos.state is not None:
        state = eos.state
        state_hess_max = float(np.abs(state.hess(pts)).max())
        if state_hess_max <= tol:
            e_state = state.grad(pts[:1])[0]
            e_unit = e_state / np.linalg.norm(e_state)
            off_axis = g_z - np.outer(g_z @ e_unit, e_unit)
            aligned = float(np.abs(off_axis).max())
            sw = eos._sigma_eval(eos._sig("w"), x, w)
            signed = float((sw * (g_z @ e_state)).max())
            checklist["state_alignment"] = {
                "holds": bool(aligned <= tol * max(1.0, np.abs(g_z).max()) and signed <= tol),
                "evidence": {"off_axis": aligned, "signed": signed}}
            sww = eos._sigma_eval(eos._sig("ww"), x, w)
            checklist["state_concavity"] = {"holds": bool(sww.max() <= tol),
                                            "evidence": float(sww.max())}
        else:
            note = {"holds": None, "evidence": "state variable is not linear"}
            checklist["state_alignment"] = dict(note)
            checklist["state_concavity"] = dict(note)
    return checklist


def checklist_passes(checklist):
    """True when every applicable condition holds and the sign test ran."""
    if checklist["signs"]["holds"] is None:
        return False
    return all(entry["holds"] for entry in checklist.values() if entry["holds"] is not None)


def transport_points(gen, pts, tau, steps=4):
    """Integrate dz/dt = Zz + omega from the samples with classic RK4."""
    z = np.asarray(pts, dtype=float).copy()
    h = tau / steps
    for _ in range(steps):
        k1 = z @ gen.Z.T + gen.omega
        k2 = (z + 0.5 * h * k1) @ gen.Z.T + gen.omega
        k3 = (z + 0.5 * h * k2) @ gen.Z.T + gen.omega
        k4 = (z + h * k3) @ gen.Z.T + gen.omega
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def transport_directions(gen, thetas, tau, steps=4):
    """Co-transport direction vectors along d(theta)/dt = Z theta."""
    th = np.asarray(thetas, dtype=float).copy()
    h = tau / steps
    for _ in range(steps):
        k1 = th @ gen.Z.T
        k2 = (th + 0.5 * h * k1) @ gen.Z.T
        k3 = (th + 0.5 * h * k2) @ gen.Z.T
        k4 = (th + h * k3) @ gen.Z.T
        th = th + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return th
