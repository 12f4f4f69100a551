"""Sectioned key-value system spec files.

Sections: [system] (name, kind, n, m), [zeta]/[xi]/[sigma]/[zzeta]/[zeta_map]
(expr = "..." or exprN = "..." for multi-term systems; [sigma] also accepts
bracket = [lo, hi]), [psi] (expr1.. for explicit systems), [coupling]
(B = [[..], ..] for mixed multi-term systems), [domain] (lower, upper,
guards), [sampling] (count, seed), [hyperbolicity] (e_H), [expect] (reference
dimensions/flags checked by the verify command).  Lines starting with '#' are
comments; unknown sections or keys are rejected with their line number."""
from __future__ import annotations

import hashlib
import re

import numpy as np

from . import expr as ex
from .errors import ExprSyntaxError, SpecError
from .system import DEFAULT_XI_BRACKET, DomainBox, SystemDef, build_from_recipe

KINDS = ("explicit", "zsystem", "zsystem-eos", "multi")

_ALLOWED = {
    "system": {"name", "kind", "n", "m"},
    "zeta": None, "xi": None, "sigma": None, "zzeta": None, "zeta_map": None,
    "psi": None,
    "coupling": {"B"},
    "domain": {"lower", "upper", "guards"},
    "sampling": {"count", "seed"},
    "hyperbolicity": {"e_H"},
    "expect": {"dim_zero", "L", "dim_lambda_i", "dim_lambda_perp", "flags", "verdict"},
}

_EXPR_KEY = re.compile(r"expr(\d*)$")


def _parse_value(text, line):
    text = text.strip()
    if not text:
        raise SpecError("empty value", line)
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise SpecError("unterminated string", line)
        return text[1:-1]
    if text.startswith("["):
        return _parse_list(text, line)
    try:
        if re.fullmatch(r"[+-]?\d+", text):
            return int(text)
        return float(text)
    except ValueError as err:
        raise SpecError(f"cannot parse value '{text}'", line) from err


def _parse_list(text, line):
    buf = ""
    stack = []
    cur = []
    for ch in text:
        if ch == "[":
            stack.append(cur)
            new = []
            cur.append(new)
            cur = new
            buf = ""
        elif ch == "]":
            if buf.strip():
                cur.append(_parse_value(buf, line))
            buf = ""
            cur = stack.pop()
        elif ch == ",":
            if buf.strip():
                cur.append(_parse_value(buf, line))
            buf = ""
        else:
            buf += ch
    if buf.strip() or stack:
        raise SpecError("malformed list value", line)
    root = cur[0] if len(cur) == 1 else cur
    return root


def parse_sections(text):
    """Raw sections as {section: {key: (value, line)}} with validation."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SpecError("unterminated section header", lineno)
            name = line[1:-1].strip()
            if name not in _ALLOWED:
                raise SpecError(f"unknown section [{name}]", lineno)
            current = sections.setdefault(name, {})
            continue
        if current is None:
            raise SpecError("key before any section header", lineno)
        if "=" not in line:
            raise SpecError("expected key = value", lineno, col=len(raw) - len(raw.lstrip()) + 1)
        key, _, value = line.partition("=")
        key = key.strip()
        section_name = [k for k, v in sections.items() if v is current][0]
        allowed = _ALLOWED[section_name]
        if allowed is None:
            if not (_EXPR_KEY.fullmatch(key) or (section_name == "sigma" and key == "bracket")):
                raise SpecError(f"unknown key '{key}' in [{section_name}]", lineno)
        elif key not in allowed:
            raise SpecError(f"unknown key '{key}' in [{section_name}]", lineno)
        if key in current:
            raise SpecError(f"duplicate key '{key}'", lineno)
        current[key] = (_parse_value(value, lineno), lineno)
    if "system" not in sections:
        raise SpecError("missing [system] section", 1)
    return sections


def _raw_exprs(sections, name):
    sec = sections.get(name)
    if sec is None:
        return None
    out = {}
    for k in sec:
        match = _EXPR_KEY.fullmatch(k)
        if not match:
            continue
        value, line = sec[k]
        idx = match.group(1)
        out[int(idx) if idx else 0] = (str(value), line)
    return out


def _parse_expr(text, line, arity, context):
    try:
        return ex.parse(text, arity)
    except ExprSyntaxError as err:
        raise SpecError(f"{context}: {err}", line) from err


def _exprs_from(sections, name, n, count=None, arity=None):
    raw = _raw_exprs(sections, name)
    if raw is None:
        return None
    out = {k: _parse_expr(text, line, arity if arity is not None else n, f"[{name}]")
           for k, (text, line) in raw.items()}
    if count is not None and sorted(out) != list(range(1, count + 1)):
        raise SpecError(f"[{name}] must define expr1..expr{count}", 1)
    return out


def _get(sections, section, key, default=None, required=False):
    sec = sections.get(section, {})
    if key not in sec:
        if required:
            raise SpecError(f"missing {key} in [{section}]", 1)
        return default
    return sec[key][0]


def load(text):
    """Parse a spec file into a SystemDef."""
    sections = parse_sections(text)
    name = str(_get(sections, "system", "name", "system"))
    kind = _get(sections, "system", "kind", required=True)
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {KINDS}, got '{kind}'", 1)
    n = int(_get(sections, "system", "n", required=True))
    m = int(_get(sections, "system", "m", n))

    lower = np.array(_get(sections, "domain", "lower", required=True), dtype=float)
    upper = np.array(_get(sections, "domain", "upper", required=True), dtype=float)
    guard_texts = _get(sections, "domain", "guards", [])
    if isinstance(guard_texts, str):
        guard_texts = [guard_texts]
    guards = tuple(ex.parse(str(g), n) for g in guard_texts)
    domain = DomainBox(lower, upper, guards)

    count = int(_get(sections, "sampling", "count", 256))
    seed = int(_get(sections, "sampling", "seed", 0))
    e_raw = _get(sections, "hyperbolicity", "e_H")
    e_H = None if e_raw is None else np.asarray(e_raw, dtype=float)
    bracket = _get(sections, "sigma", "bracket", list(DEFAULT_XI_BRACKET))
    bracket = (float(bracket[0]), float(bracket[1]))

    has_state = "zzeta" in sections
    sigma_arity = 2 if has_state else 1

    if kind == "explicit":
        psis = _exprs_from(sections, "psi", n, count=m)
        recipe = {"kind": "explicit", "psi": [psis[i] for i in range(1, m + 1)]}
    elif kind == "zsystem":
        recipe = {"kind": "zsystem",
                  "zeta": _single_expr(sections, "zeta", n),
                  "xi": _single_expr(sections, "xi", n)}
    elif kind == "zsystem-eos":
        recipe = {"kind": "zsystem-eos",
                  "zeta": _single_expr(sections, "zeta", n),
                  "sigma": _single_expr(sections, "sigma", n, arity=sigma_arity),
                  "zzeta": _single_expr(sections, "zzeta", n) if has_state else None}
        if "zeta_map" in sections:
            recipe["zeta_map"] = _single_expr(sections, "zeta_map", n, arity=1)
    else:  # multi
        zetas = _exprs_from(sections, "zeta", n)
        if not zetas or 0 in zetas:
            raise SpecError("[zeta] must use expr1..exprK for multi systems", 1)
        K = max(zetas)
        xis = _exprs_from(sections, "xi", n) or {}
        states = _exprs_from(sections, "zzeta", n) or {}
        raw_sigmas = _raw_exprs(sections, "sigma") or {}
        terms = []
        for k in range(1, K + 1):
            if k not in zetas:
                raise SpecError(f"[zeta] missing expr{k}", 1)
            if k in xis:
                terms.append({"zeta": zetas[k], "xi": xis[k]})
            elif k in raw_sigmas:
                text, line = raw_sigmas[k]
                sig = _parse_expr(text, line, 2 if states.get(k) is not None else 1, "[sigma]")
                terms.append({"zeta": zetas[k], "sigma": sig, "zzeta": states.get(k)})
            else:
                raise SpecError(f"term {k} needs [xi] expr{k} or [sigma] expr{k}", 1)
        mixing = _get(sections, "coupling", "B")
        recipe = {"kind": "multi", "terms": terms,
                  "mixing": None if mixing is None else np.asarray(mixing, dtype=float)}

    sys_ = build_from_recipe(recipe, domain, name=name, sampling=(count, seed),
                             e_H=e_H, bracket=bracket)
    expect = sections.get("expect")
    if expect:
        sys_.recipe["expect"] = {k: v[0] for k, v in expect.items()}
    return sys_


def _single_expr(sections, name, n, arity=None):
    found = _exprs_from(sections, name, n, arity=arity)
    if not found or 0 not in found or len(found) != 1:
        raise SpecError(f"[{name}] must define a single expr", 1)
    return found[0]


# ---------------------------------------------------------------------------
# emission

def _fmt_value(v):
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        items = ", ".join(_fmt_value(x) for x in np.asarray(v).tolist()) \
            if isinstance(v, np.ndarray) else ", ".join(_fmt_value(x) for x in v)
        return f"[{items}]"
    raise SpecError(f"cannot serialize value {v!r}")


def emit(sys_, comments=(), expect=None):
    """Serialize a system back to spec-file text (provenance as comments)."""
    rec = sys_.recipe
    if not rec or "kind" not in rec:
        raise SpecError(f"system '{sys_.name}' has no serializable description")
    lines = [f"# consym spec"]
    for c in tuple(comments) + tuple(sys_.notes):
        lines.append(f"# {c}")
    lines += ["", "[system]", f'name = "{sys_.name}"', f'kind = "{rec["kind"]}"',
              f"n = {sys_.n}", f"m = {sys_.m}"]

    def expr_section(name, entries):
        lines.append("")
        lines.append(f"[{name}]")
        for key, e in entries:
            lines.append(f'{key} = "{ex.to_text(e)}"')

    kind = rec["kind"]
    if kind == "explicit":
        expr_section("psi", [(f"expr{i+1}", e) for i, e in enumerate(rec["psi"])])
    elif kind == "zsystem":
        expr_section("zeta", [("expr", rec["zeta"])])
        expr_section("xi", [("expr", rec["xi"])])
    elif kind == "zsystem-eos":
        expr_section("zeta", [("expr", rec["zeta"])])
        expr_section("sigma", [("expr", rec["sigma"])])
        if rec.get("zzeta") is not None:
            expr_section("zzeta", [("expr", rec["zzeta"])])
        if rec.get("zeta_map") is not None:
            expr_section("zeta_map", [("expr", rec["zeta_map"])])
    else:
        terms = rec["terms"]
        expr_section("zeta", [(f"expr{k+1}", t["zeta"]) for k, t in enumerate(terms)])
        xi_entries = [(f"expr{k+1}", t["xi"]) for k, t in enumerate(terms) if t.get("xi") is not None]
        if xi_entries:
            expr_section("xi", xi_entries)
        sig_entries = [(f"expr{k+1}", t["sigma"]) for k, t in enumerate(terms) if t.get("sigma") is not None]
        if sig_entries:
            expr_section("sigma", sig_entries)
        st_entries = [(f"expr{k+1}", t["zzeta"]) for k, t in enumerate(terms) if t.get("zzeta") is not None]
        if st_entries:
            expr_section("zzeta", st_entries)
        if rec.get("mixing") is not None:
            lines += ["", "[coupling]", f'B = {_fmt_value(rec["mixing"])}']

    lines += ["", "[domain]",
              f"lower = {_fmt_value(sys_.domain.lower)}",
              f"upper = {_fmt_value(sys_.domain.upper)}"]
    if sys_.domain.guards:
        guard_list = ", ".join(f'"{ex.to_text(g)}"' for g in sys_.domain.guards)
        lines.append(f"guards = [{guard_list}]")
    lines += ["", "[sampling]", f"count = {sys_.sampling[0]}", f"seed = {sys_.sampling[1]}"]
    if sys_.e_H is not None:
        lines += ["", "[hyperbolicity]", f"e_H = {_fmt_value(sys_.e_H)}"]
    expect = expect if expect is not None else sys_.recipe.get("expect")
    if expect:
        lines += ["", "[expect]"]
        for k in ("dim_zero", "L", "dim_lambda_i", "dim_lambda_perp", "flags", "verdict"):
            if k in expect:
                lines.append(f"{k} = {_fmt_value(expect[k])}")
    return "\n".join(lines) + "\n"


def spec_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()
