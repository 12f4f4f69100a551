"""Built-in parameterized gas-dynamics systems used as fixtures and oracles.

Sign conventions (documented because they fix the transform parameters):
  * euler-isentropic: z = (specific-enthalpy-like head, velocities).
  * euler-extended: last component z_n = -1/T < 0, so the reduction to the
    isentropic family uses the fixed value -1 and the exchange image of the
    entropy-conserving family uses c_e = -1.
  * euler-entropy-conserving: last component z_n = -T < 0; its level function
    does not involve z_n at all (the extension lives in the equation of state).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import SpecError
from .system import DomainBox, SystemDef, make_zsystem_eos

CATALOG_IDS = ("euler-isentropic", "euler-extended", "euler-entropy-conserving",
               "gex-counterexample")

DEFAULT_GAMMA = 1.4
DEFAULT_CP = 3.5
DEFAULT_R = 1.0


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    n: int
    params: dict
    expected: dict
    system: SystemDef


def gamma_law_sigma(gamma=DEFAULT_GAMMA):
    """Scale relation c * x^((gamma-1)/gamma) with positive, concave slope."""
    if gamma <= 1:
        raise SpecError("gamma must exceed 1")
    c = gamma / (gamma - 1.0)
    alpha = (gamma - 1.0) / gamma
    return ex.parse(f"{c!r}*z1^{alpha!r}", 1)


def ideal_gas_gibbs_sigma(cp=DEFAULT_CP, R=DEFAULT_R, temperature_slot="-1/z2",
                          pressure_slot="z1"):
    """Gibbs-style relation cp*T*(1 - log T) + R*T*log P in slots (z1, z2)."""
    T = f"({temperature_slot})"
    P = f"({pressure_slot})"
    return ex.parse(f"{cp!r}*{T}*(1 - log({T})) + {R!r}*{T}*log({P})", 2)


def _quadratic_head(n, upto):
    """z1 + sum_{j=2}^{upto} z_j^2 / 2."""
    text = "z1"
    for j in range(2, upto + 1):
        text += f" + 0.5*z{j}^2"
    return ex.parse(text, n)


def euler_isentropic(n, gamma=DEFAULT_GAMMA, sigma=None, sampling=(256, 0)):
    """Pressure-scale system with quadratic velocity head; uniformly hyperbolic."""
    if n < 2:
        raise SpecError("isentropic family needs n >= 2")
    if sigma is None:
        sigma = gamma_law_sigma(gamma)
    zeta = _quadratic_head(n, n)
    s_half = ex.evaluate(sigma, [0.5])
    s_lo = ex.evaluate(sigma, [1.0])
    s_hi = ex.evaluate(sigma, [2.0])
    u_b = min(0.8, np.sqrt((s_hi - s_lo) / (n - 1)))
    lower = np.concatenate([[s_lo], -u_b * np.ones(n - 1)])
    upper = np.concatenate([[s_hi - 0.5 * (n - 1) * u_b**2], u_b * np.ones(n - 1)])
    guards = (ex.simplify(zeta - ex.const(s_half, n)),
              ex.simplify(ex.const(s_hi, n) - zeta + ex.const(0.5, n)))
    dom = DomainBox(lower, upper, guards)
    sys_ = make_zsystem_eos(zeta, sigma, None, dom, name=f"euler-isentropic-{n}",
                            sampling=sampling, e_H=np.eye(n)[0])
    return sys_


def euler_extended(n, cp=DEFAULT_CP, R=DEFAULT_R, sigma=None, sampling=(256, 0)):
    """Energy-conserving family: z_n = -1/T, closed level function."""
    if n < 3:
        raise SpecError("extended family needs n >= 3")
    parts = [f"-z1/z{n}"]
    for j in range(2, n):
        parts.append(f"0.5*z{j}^2/z{n}^2")
    zeta = ex.parse(" + ".join(parts), n)
    if sigma is None:
        sigma = ideal_gas_gibbs_sigma(cp, R, temperature_slot="-1/z2",
                                      pressure_slot="z1/z2^2")
    z_state = ex.var(n, n)
    lower = np.concatenate([[1.0], -0.4 * np.ones(n - 2), [-1.0]])
    upper = np.concatenate([[3.0], 0.4 * np.ones(n - 2), [-0.5]])
    dom = DomainBox(lower, upper, (ex.simplify(-ex.var(n, n)),))
    return make_zsystem_eos(zeta, sigma, z_state, dom, name=f"euler-extended-{n}",
                            sampling=sampling, e_H=np.eye(n)[0])


def euler_entropy_conserving(n, cp=DEFAULT_CP, R=DEFAULT_R, sigma=None, sampling=(256, 0)):
    """Entropy-conserving variant: z_n = -T; level function ignores z_n."""
    if n < 3:
        raise SpecError("entropy-conserving family needs n >= 3")
    zeta = _quadratic_head(n, n - 1)
    if sigma is None:
        sigma = ideal_gas_gibbs_sigma(cp, R, temperature_slot="-z2", pressure_slot="z1")
    z_state = ex.var(n, n)
    lower = np.concatenate([[2.3], -0.4 * np.ones(n - 2), [-2.0]])
    upper = np.concatenate([[3.8], 0.4 * np.ones(n - 2), [-1.0]])
    dom = DomainBox(lower, upper, (ex.simplify(-ex.var(n, n)),))
    return make_zsystem_eos(zeta, sigma, z_state, dom,
                            name=f"euler-entropy-conserving-{n}",
                            sampling=sampling, e_H=np.eye(n)[0])


def gex_counterexample(gamma=DEFAULT_GAMMA, sampling=(256, 0)):
    """Quartic two-plane example: rich enough to pass the indirect-dimension
    test yet structurally different from the quadratic-head hierarchy."""
    n = 4
    zeta = ex.parse("z1 + 0.5*z2^2 + (z3^2 + z4^2)^2", n)
    sigma = gamma_law_sigma(gamma)
    lower = np.array([3.0, -0.5, -0.5, -0.5])
    upper = np.array([4.0, 0.5, 0.5, 0.5])
    dom = DomainBox(lower, upper)
    return make_zsystem_eos(zeta, sigma, None, dom, name="gex-counterexample",
                            sampling=sampling, e_H=np.eye(n)[0])


def expected_properties(entry_id, n):
    """Reference dimensions and subclass flags for catalog entries."""
    if entry_id == "euler-isentropic":
        return {"dim_zero": n * (n - 1) // 2, "L": n, "dim_lambda_i": 0,
                "dim_lambda_perp": 0, "flags": ["W", "I*", "omega", "T*"],
                "verdict": "uniform"}
    if entry_id == "euler-extended":
        return {"dim_zero": (n - 1) * (n - 2) // 2, "L": n, "dim_lambda_i": 1,
                "dim_lambda_perp": 0, "flags": ["C", "T", "omega*", "q", "I"],
                "verdict": "uniform"}
    if entry_id == "euler-entropy-conserving":
        # strict definiteness holds on the default bounded box even though the
        # blind direction precludes it on an unbounded domain
        return {"dim_zero": (n - 1) * (n - 2) // 2, "L": n - 1, "dim_lambda_i": 0,
                "dim_lambda_perp": 1, "flags": ["W", "perp", "T", "I*", "omega"],
                "verdict": "uniform"}
    if entry_id == "gex-counterexample":
        return {"dim_zero": 2, "L": 4, "dim_lambda_i": 0, "dim_lambda_perp": 0,
                "flags": ["I*", "omega", "T*"], "verdict": "uniform"}
    raise SpecError(f"unknown catalog id '{entry_id}'")


def build(entry_id, n=None, **params):
    """Construct a catalog system (with defaults) by id."""
    if entry_id == "euler-isentropic":
        sys_ = euler_isentropic(n or 3, **params)
    elif entry_id == "euler-extended":
        sys_ = euler_extended(n or 3, **params)
    elif entry_id == "euler-entropy-conserving":
        sys_ = euler_entropy_conserving(n or 3, **params)
    elif entry_id == "gex-counterexample":
        sys_ = gex_counterexample(**params)
    else:
        raise SpecError(f"unknown catalog id '{entry_id}' (choose from {CATALOG_IDS})")
    return sys_


def entry(entry_id, n=None, **params):
    sys_ = build(entry_id, n=n, **params)
    return CatalogEntry(id=entry_id, n=sys_.n, params=params,
                        expected=expected_properties(entry_id, sys_.n), system=sys_)
