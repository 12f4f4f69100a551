"""Expression parsing, evaluation and exact differentiation."""

import numpy as np
import pytest

from consym import expr as ex
from consym.errors import ExprDomainError, ExprSyntaxError


def fd_gradient(e, p, h=1e-5):
    """Central finite differences, the independent oracle for diff()."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    for i in range(p.size):
        up, dn = p.copy(), p.copy()
        up[i] += h
        dn[i] -= h
        out[i] = (ex.evaluate(e, up) - ex.evaluate(e, dn)) / (2 * h)
    return out


def fd_hessian(e, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    n = p.size
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            pp, pm, mp, mm = (p.copy() for _ in range(4))
            pp[i] += h; pp[j] += h
            pm[i] += h; pm[j] -= h
            mp[i] -= h; mp[j] += h
            mm[i] -= h; mm[j] -= h
            out[i, j] = (ex.evaluate(e, pp) - ex.evaluate(e, pm)
                         - ex.evaluate(e, mp) + ex.evaluate(e, mm)) / (4 * h * h)
    return out


def random_expr(rng, arity, depth=3):
    """Random AST over safe-positive argument ranges (for exp/log use shifts)."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return ex.const(rng.uniform(-2, 2), arity)
        return ex.var(rng.integers(1, arity + 1), arity)
    op = rng.choice(["add", "sub", "mul", "neg", "exp", "poly"])
    a = random_expr(rng, arity, depth - 1)
    if op == "neg":
        return -a
    if op == "exp":
        return ex.func("exp", ex.const(0.3, arity) * a)
    if op == "poly":
        return a * a + ex.const(1.0, arity)
    b = random_expr(rng, arity, depth - 1)
    return {"add": a + b, "sub": a - b, "mul": a * b}[op]


def test_parse_basic_shapes():
    e = ex.parse("z1 + 0.5*z2^2", 2)
    assert e.op == "add"
    assert e.args[0].op == "var" and e.args[0].index == 1
    assert e.args[1].op == "mul"
    assert e.args[1].args[1].op == "pow"


def test_parse_unknown_variable():
    with pytest.raises(ExprSyntaxError, match="unknown variable z3"):
        ex.parse("exp(z1)*z3", 2)


def test_parse_simplifies_identity_to_zero():
    e = ex.parse("-(z1 - z1)", 1)
    assert e.op == "const" and e.value == 0.0


def test_parse_precedence():
    # ^ binds tighter than unary minus and *
    assert ex.evaluate(ex.parse("-z1^2", 1), [3.0]) == -9.0
    assert ex.evaluate(ex.parse("2*z1^2", 1), [3.0]) == 18.0
    assert ex.evaluate(ex.parse("1 - 2 - 3", 1), [0.0]) == -4.0  # left assoc
    assert ex.evaluate(ex.parse("8/2/2", 1), [0.0]) == 2.0


def test_parse_errors_carry_offset():
    with pytest.raises(ExprSyntaxError, match="offset"):
        ex.parse("z1 + + z2", 2)
    with pytest.raises(ExprSyntaxError):
        ex.parse("sin(z1)", 1)
    with pytest.raises(ExprSyntaxError, match="exponent"):
        ex.parse("z1^z2", 2)


def test_eval_examples():
    assert ex.evaluate(ex.parse("z1+0.5*z2^2", 2), [1.0, 2.0]) == 3.0
    assert ex.evaluate(ex.parse("z1^0", 1), [7.0]) == 1.0
    with pytest.raises(ExprDomainError, match="log"):
        ex.evaluate(ex.parse("log(z1)", 1), [-1.0])
    with pytest.raises(ExprDomainError, match="division"):
        ex.evaluate(ex.parse("1/z1", 1), [0.0])
    with pytest.raises(ExprDomainError, match="non-integer"):
        ex.evaluate(ex.parse("z1^0.5", 1), [-2.0])


def test_diff_trivial_cases():
    d = ex.diff(ex.parse("z1+0.5*z2^2", 2), 2)
    assert ex.to_text(d) == "z2"
    d = ex.diff(ex.parse("exp(z1)", 1), 1)
    assert ex.to_text(d) == "exp(z1)"


def test_diff_matches_finite_differences():
    rng = np.random.default_rng(7)
    exprs = [
        ex.parse("z1 + 0.5*z2^2 + exp(0.3*z3)", 3),
        ex.parse("log(z1 + 3)*sqrt(z2 + 3)", 3),
        ex.parse("z1*z2/(z3 + 4) - z2^3", 3),
        ex.parse("exp(z1)*z2 + z3^0.25", 3),
    ]
    for e in exprs:
        grads = ex.gradient(e)
        for _ in range(100):
            p = rng.uniform(0.5, 1.5, size=3)
            exact = np.array([ex.evaluate(g, p) for g in grads])
            approx = fd_gradient(e, p)
            assert np.allclose(exact, approx, rtol=1e-6, atol=1e-8)


def test_hessian_examples_and_fd():
    e = ex.parse("0.5*(z2^2+z3^2)", 3)
    h = ex.hessian(e)
    p = np.array([0.3, -1.2, 2.0])
    hv = np.array([[ex.evaluate(h[i][j], p) for j in range(3)] for i in range(3)])
    assert np.array_equal(hv, np.diag([0.0, 1.0, 1.0]))

    e2 = ex.parse("z1*z2", 2)
    h2 = ex.hessian(e2)
    hv2 = np.array([[ex.evaluate(h2[i][j], [0.4, 0.7]) for j in range(2)] for i in range(2)])
    assert np.array_equal(hv2, np.array([[0.0, 1.0], [1.0, 0.0]]))

    rng = np.random.default_rng(11)
    e3 = ex.parse("exp(0.5*z1)*z2 + z1*z2^2", 2)
    h3 = ex.hessian(e3)
    for _ in range(20):
        p = rng.uniform(0.2, 1.0, size=2)
        exact = np.array([[ex.evaluate(h3[i][j], p) for j in range(2)] for i in range(2)])
        assert np.allclose(exact, fd_hessian(e3, p), rtol=1e-4, atol=1e-4)


def test_hessian_structurally_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(25):
        e = random_expr(rng, 3)
        h = ex.hessian(e)
        for i in range(3):
            for j in range(3):
                assert h[i][j] == h[j][i]


def test_roundtrip_print_parse():
    rng = np.random.default_rng(5)
    for _ in range(30):
        e = random_expr(rng, 3)
        text = ex.to_text(e)
        back = ex.parse(text, 3)
        pts = rng.uniform(-1.5, 1.5, size=(100, 3))
        assert np.allclose(ex.evaluate(e, pts), ex.evaluate(back, pts), rtol=0, atol=1e-12)


def test_diff_is_linear():
    rng = np.random.default_rng(9)
    for _ in range(20):
        e1 = random_expr(rng, 2)
        e2 = random_expr(rng, 2)
        a, b = rng.uniform(-2, 2, size=2)
        combo = ex.const(a, 2) * e1 + ex.const(b, 2) * e2
        d_combo = ex.diff(combo, 1)
        d_split = ex.const(a, 2) * ex.diff(e1, 1) + ex.const(b, 2) * ex.diff(e2, 1)
        pts = rng.uniform(-1.0, 1.0, size=(100, 2))
        lhs = ex.evaluate(d_combo, pts)
        rhs = ex.evaluate(d_split, pts)
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * max(1.0, np.abs(lhs).max()))


def test_simplify_idempotent():
    rng = np.random.default_rng(13)
    for _ in range(50):
        e = random_expr(rng, 3, depth=4)
        once = ex.simplify(e)
        assert ex.simplify(once) == once


def test_substitute_remap():
    e = ex.parse("z1 + z2^2", 2)
    shifted = ex.remap(e, 4, offset=2)
    assert ex.evaluate(shifted, [9.0, 9.0, 1.0, 2.0]) == 5.0
    swapped = ex.remap(e, 2, assignments={1: ex.var(2, 2), 2: ex.var(1, 2)})
    assert ex.evaluate(swapped, [3.0, 1.0]) == 10.0
