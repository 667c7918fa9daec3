import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csl import jets
from csl.expr import ExprSyntaxError, jet_eval, parse_field, plain_eval
from csl.jets import JetDomainError, TaylorJet, multi_indices, n_coeffs


def test_coefficient_count_matches_multi_indices():
    for nv in (1, 2, 3):
        for order in range(1, 7):
            assert len(multi_indices(nv, order)) == n_coeffs(nv, order) == math.comb(nv + order, order)
    assert n_coeffs(3, 6) == 84


def test_exp_taylor_coefficients():
    j = jet_eval("exp(x)", [0.0], 1, 2)
    np.testing.assert_allclose(j.coeffs, [1.0, 1.0, 0.5])


def test_polynomial_value_and_gradient():
    j = jet_eval("x*x + y", [2.0, 3.0], 2, 1)
    assert j.value == pytest.approx(7.0)
    np.testing.assert_allclose(j.gradient(), [4.0, 1.0])


def test_log_chain_rule_against_central_difference():
    j = jet_eval("2*ln(1+0.3*x)", [0.0], 1, 1)
    assert j.value == pytest.approx(0.0, abs=1e-15)
    h = 1e-5
    fd = (plain_eval("2*ln(1+0.3*x)", [h]) - plain_eval("2*ln(1+0.3*x)", [-h])) / (2 * h)
    assert j.gradient()[0] == pytest.approx(0.6, abs=1e-14)
    assert j.gradient()[0] == pytest.approx(float(fd), rel=1e-9)


def test_constant_term_of_product_is_product_of_constants(rng):
    a = TaylorJet(rng.normal(size=n_coeffs(3, 4)), 3, 4)
    b = TaylorJet(rng.normal(size=n_coeffs(3, 4)), 3, 4)
    c = a * b
    assert c.value == pytest.approx(a.value * b.value)
    assert (c.num_vars, c.order) == (3, 4)


def test_division_matches_reciprocal_product(rng):
    a = TaylorJet(rng.normal(size=n_coeffs(2, 5)), 2, 5)
    b = TaylorJet(rng.normal(size=n_coeffs(2, 5)), 2, 5) + 3.0
    np.testing.assert_allclose(((a / b) * b).coeffs, a.coeffs, atol=1e-12)


def test_domain_errors():
    with pytest.raises(JetDomainError):
        jet_eval("ln(x)", [-1.0], 1, 2)
    with pytest.raises(JetDomainError):
        jet_eval("sqrt(x)", [0.0], 1, 2)
    with pytest.raises(JetDomainError):
        jet_eval("1/x", [0.0], 1, 2)


def test_order_limit():
    with pytest.raises(ValueError):
        TaylorJet.variable(0.0, 0, 1, jets.MAX_ORDER + 1)


def test_derivatives_recover_known_partials():
    # f = sin(x) exp(2y): d^3/dx dy^2 = cos(x) * 4 exp(2y)
    j = jet_eval("sin(x)*exp(2*y)", [0.3, -0.2], 2, 4)
    assert j.partial((1, 2)) == pytest.approx(4 * math.cos(0.3) * math.exp(-0.4), rel=1e-13)
    assert j.partial((3, 0)) == pytest.approx(-math.cos(0.3) * math.exp(-0.4), rel=1e-13)


def test_batched_jets_evaluate_pointwise(rng):
    pts = rng.uniform(-1, 1, size=(3, 7))
    j = jet_eval("x*y + cos(z)", pts, 3, 3)
    for k in range(7):
        jk = jet_eval("x*y + cos(z)", pts[:, k], 3, 3)
        np.testing.assert_allclose(j.coeffs[:, k], jk.coeffs, rtol=1e-14, atol=1e-15)


# -- fuzz corpus --------------------------------------------------------

LEAVES = ["x", "y", "0.5", "1.3", "(x-0.2)", "(y+0.1)"]


def random_expr(rng, depth=3):
    """Random well-defined expression in x, y (arguments of ln/sqrt kept positive)."""
    if depth == 0 or rng.random() < 0.25:
        return LEAVES[rng.integers(len(LEAVES))]
    kind = rng.integers(7)
    a = random_expr(rng, depth - 1)
    if kind == 0:
        return f"({a}+{random_expr(rng, depth - 1)})"
    if kind == 1:
        return f"({a}-{random_expr(rng, depth - 1)})"
    if kind == 2:
        return f"{a}*{random_expr(rng, depth - 1)}"
    if kind == 3:
        return f"sin({a})"
    if kind == 4:
        return f"exp(0.3*{a})"
    if kind == 5:
        return f"ln(2+cos({a}))"
    return f"({a})^{int(rng.integers(0, 4))}"


def corpus(n, seed=7):
    rng = np.random.default_rng(seed)
    return [random_expr(rng) for _ in range(n)]


def test_product_rule_on_random_expressions(rng):
    exprs = corpus(40, seed=1)
    for p, q in zip(exprs[::2], exprs[1::2]):
        pt = rng.uniform(-0.8, 0.8, 2)
        jp = jet_eval(p, pt, 2, 4)
        jq = jet_eval(q, pt, 2, 4)
        jpq = jet_eval(f"({p})*({q})", pt, 2, 4)
        scale = max(1.0, float(np.max(np.abs(jpq.coeffs))))
        np.testing.assert_allclose((jp * jq).coeffs, jpq.coeffs, rtol=1e-12, atol=1e-12 * scale)


def _richardson(fun, h):
    def d(step):
        return (fun(step) - fun(-step)) / (2 * step)
    return (4 * d(h / 2) - d(h)) / 3


def test_first_and_second_coefficients_match_finite_differences(rng):
    for text in corpus(60, seed=2):
        pt = rng.uniform(-0.8, 0.8, 2)
        j = jet_eval(text, pt, 2, 2)

        def f(dx=0.0, dy=0.0):
            return float(plain_eval(text, pt + np.array([dx, dy])))
        gx = _richardson(lambda s: f(dx=s), 1e-3)
        gy = _richardson(lambda s: f(dy=s), 1e-3)
        hxx = _richardson(lambda s: (f(dx=s) - f(dx=-s)) / 2 / s if s else 0.0, 1e-3)
        # second derivative: Richardson on the symmetric second difference
        h = 1e-3
        d2 = [(f(dx=t) - 2 * f() + f(dx=-t)) / t ** 2 for t in (h, h / 2)]
        fxx = (4 * d2[1] - d2[0]) / 3
        del hxx
        g = j.gradient()
        for an, fd in ((g[0], gx), (g[1], gy), (j.partial((2, 0)), fxx)):
            assert abs(an - fd) <= 1e-7 * max(1.0, abs(fd)), (text, an, fd)


def test_round_trip_of_thousand_expressions(rng):
    for text in corpus(1000, seed=3):
        e = parse_field(text)
        again = parse_field(str(e))
        assert str(again) == str(e)
        pt = rng.uniform(-0.7, 0.7, 2)
        a = jet_eval(e, pt, 2, 2).coeffs
        b = jet_eval(again, pt, 2, 2).coeffs
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_sin_cos_identity(x, y):
    j = jet_eval("sin(x+y)^2 + cos(x+y)^2", [x, y], 2, 4)
    np.testing.assert_allclose(j.coeffs, np.eye(1, j.coeffs.size)[0], atol=1e-12)


@given(st.floats(-3, 3))
def test_exp_ln_inverse(x):
    j = jet_eval("ln(exp(x))", [x], 1, 5)
    np.testing.assert_allclose(j.coeffs, [x, 1, 0, 0, 0, 0], atol=1e-11)


def test_malformed_input_reports_offset():
    with pytest.raises(ExprSyntaxError) as exc:
        parse_field("sin(")
    assert exc.value.offset == 4
