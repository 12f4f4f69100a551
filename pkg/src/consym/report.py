"""Analysis pipeline and machine-readable report assembly.

The report is a plain JSON-compatible dictionary; the canonical serialization
(sorted keys, compact separators, shortest-roundtrip floats) is byte-stable
for identical inputs, seeds and tolerances."""
from __future__ import annotations

import json

import numpy as np

from . import __version__
from . import hyperbolicity as hy
from . import symmetry as sm
from .errors import ConsymError
from .system import entropy_at

SCHEMA_VERSION = 1


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


def _generator_entry(gen, part):
    entry = {"Z": gen.Z, "omega": gen.omega, "c_z": gen.c_z,
             "c_xi": gen.c_xi, "c_zeta": gen.c_zeta, "part": part}
    entry["X"] = gen.X if gen.X is not None else None
    entry["N"] = gen.N
    return entry


def select_timelike(space, sys_, tol=1e-8):
    """Admissible time-like direction: the configured one when compatible,
    otherwise the first coordinate direction or the first candidate."""
    cand = hy.timelike_candidates(space, sys_.n)
    note = ""
    e_H = None
    if sys_.e_H is not None:
        if cand.contains(sys_.e_H, tol=tol):
            e_H = sys_.e_H / np.linalg.norm(sys_.e_H)
        else:
            note = "configured direction is not invariant; fell back to candidates"
    if e_H is None and cand.dim > 0:
        e1 = np.zeros(sys_.n)
        e1[0] = 1.0
        e_H = e1 if cand.contains(e1, tol=tol) else cand.vectors[:, 0]
    return cand, e_H, note


def analyze(sys_, samples=None, seed=None, tol=1e-9, spec_sha=None):
    """Full pipeline: symmetry space, phase-space split, subclass flags,
    hyperbolicity, entropy checks."""
    count = sys_.sampling[0] if samples is None else int(samples)
    seed = sys_.sampling[1] if seed is None else int(seed)
    pts = sys_.samples(count, seed)

    report = {
        "schema": SCHEMA_VERSION,
        "tool": {"name": "consym", "version": __version__},
        "system": {"name": sys_.name, "kind": sys_.kind, "n": sys_.n, "m": sys_.m,
                   "notes": list(sys_.notes), "spec_sha256": spec_sha},
        "inputs": {"samples": count, "seed": seed, "tol": tol,
                   "ae_fraction": hy.AE_FRACTION},
    }

    if sys_.terms is not None:
        space = sm.solve_zsystem(sys_, pts, tol=tol)
        residuals = [space.residual(g) for g in space.basis]
        gens = []
        for name in ("zero", "zeta", "scaling"):
            for g in space.part(name):
                gens.append(_generator_entry(g, name))
        report["symmetry"] = {
            "dim_total": space.dim,
            "dim_zero": len(space.zero_part),
            "dim_zeta": len(space.part("zeta")),
            "dim_scaling": len(space.scaling_part),
            "generators": gens,
            "notes": list(space.notes),
            "residual_max": max(residuals, default=0.0),
        }
        lam = sm.classify_lambda(space, sys_)
        report["lambda"] = {
            "L": lam.L,
            "dim_v": lam.lambda_v.dim, "dim_i": lam.lambda_i.dim,
            "dim_perp": lam.lambda_perp.dim,
            "basis_v": lam.lambda_v.vectors.T, "basis_i": lam.lambda_i.vectors.T,
            "basis_perp": lam.lambda_perp.vectors.T,
        }
        report["flags"] = sm.classify_subclasses(sys_, space, pts)
        cand, e_H, note = select_timelike(space, sys_)
        hyp = {"candidates_dim": cand.dim, "note": note, "e_H": e_H}
        if e_H is not None:
            rep = hy.hessian_check(sys_, e_H, pts, tol=tol)
            checklist = hy.sufficient_checklist(sys_, e_H, pts)
            hyp.update({"verdict": rep.verdict, "min_eig": rep.min_eig,
                        "frac_strict": rep.frac_strict, "checklist": checklist,
                        "checklist_pass": hy.checklist_passes(checklist)})
        else:
            hyp.update({"verdict": "fails", "min_eig": None, "frac_strict": 0.0,
                        "checklist": None, "checklist_pass": False})
        report["hyperbolicity"] = hyp
        report["entropy"] = _entropy_checks(sys_, pts)
    else:
        space = sm.solve_general(sys_, pts, tol=tol)
        report["symmetry"] = {
            "dim_total": space.dim,
            "generators": [_generator_entry(g, "general") for g in space.basis],
            "notes": list(space.notes),
            "residual_max": max((space.residual(g) for g in space.basis), default=0.0),
        }
        report["lambda"] = None
        report["flags"] = None
        if sys_.e_H is not None:
            rep = hy.hessian_check(sys_, sys_.e_H, pts, tol=tol)
            report["hyperbolicity"] = {"e_H": sys_.e_H, "verdict": rep.verdict,
                                       "min_eig": rep.min_eig,
                                       "frac_strict": rep.frac_strict,
                                       "checklist": None, "checklist_pass": False,
                                       "candidates_dim": None, "note": ""}
        else:
            report["hyperbolicity"] = None
        report["entropy"] = _entropy_checks(sys_, pts) if sys_.is_square else None

    return _clean(report)


def _entropy_checks(sys_, pts):
    out = {}
    pair = entropy_at(sys_, pts)
    if sys_.is_square:
        weighted = np.einsum("nj,nj->n", pts, pair.psi)
        resid = float(np.abs(weighted).max())
        out["closed"] = bool(resid <= 1e-9 * max(1.0, float(np.abs(pair.psi).max())))
        out["closed_residual"] = resid
        if out["closed"]:
            wq = np.einsum("nj,nj->n", pts[:, : pair.q.shape[1]], pair.q)
            out["weighted_flux_residual"] = float(np.abs(wq).max())
        else:
            out["weighted_flux_residual"] = None
    else:
        out["closed"] = None
        out["closed_residual"] = None
        out["weighted_flux_residual"] = None

    out["flux_relation_residual"] = None
    from .symmetry import _eos_fields
    eos = _eos_fields(sys_)
    if (sys_.terms is not None and len(sys_.terms) == 1 and len(eos) == 1
            and eos[0].state is not None and out.get("closed")):
        # for a closed level with a linear state variable the alignment factor
        # is fixed by the state relation: q = -(2 + w sigma_w/(xi sigma_xi)) psi
        f = eos[0]
        x = f.value(pts)
        w = f.state_value(pts)
        sx = f._sigma_eval(f._sig("x"), x, w)
        sw = f._sigma_eval(f._sig("w"), x, w)
        pred = -(2.0 + w * sw / (x * sx))[:, None] * pair.psi
        out["flux_relation_residual"] = float(np.abs(pair.q - pred).max())
    return out


def to_canonical_json(report):
    """Deterministic serialization: sorted keys, compact separators."""
    return json.dumps(report, sort_keys=True, separators=(",", ":"), allow_nan=False)


def human_summary(report):
    """Terse table view of the machine report."""
    lines = []
    s = report["system"]
    lines.append(f"system {s['name']}  kind={s['kind']}  n={s['n']}  m={s['m']}")
    sym = report["symmetry"]
    if "dim_zero" in sym:
        lines.append(f"symmetry dims: total={sym['dim_total']} zero={sym['dim_zero']} "
                     f"zeta={sym['dim_zeta']} scaling={sym['dim_scaling']} "
                     f"(max residual {sym['residual_max']:.2e})")
    else:
        lines.append(f"symmetry dims: total={sym['dim_total']} (general solve)")
    lam = report.get("lambda")
    if lam:
        lines.append(f"phase split: L={lam['L']} visible={lam['dim_v']} "
                     f"indirect={lam['dim_i']} inert={lam['dim_perp']}")
    flags = report.get("flags")
    if flags:
        held = [k for k, v in flags.items() if v["holds"] is True]
        lines.append("flags: " + (" ".join(sorted(held)) if held else "(none)"))
    hyp = report.get("hyperbolicity")
    if hyp:
        me = hyp.get("min_eig")
        lines.append(f"hyperbolicity: verdict={hyp['verdict']} "
                     f"min_eig={'n/a' if me is None else format(me, '.6g')} "
                     f"e_H={hyp.get('e_H')}")
    ent = report.get("entropy")
    if ent:
        lines.append(f"entropy: closed={ent['closed']} "
                     f"closed_residual={ent['closed_residual']}")
    for note in s.get("notes", []):
        lines.append(f"note: {note}")
    return "\n".join(lines)
