from __future__ import annotations

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from pytest import mark, raises

from rcpos.dsl import (
    Domain,
    build_metric,
    catalog,
    evaluate,
    jet,
    jet_fd_discrepancy,
    load_metric,
    parse_expression,
    parse_metric,
    resolve_metric,
    to_source,
)
from rcpos.dsl.expr import Expr, absq, conj_node, exp, log
from rcpos.errors import (
    BadParameter,
    MissingDiagonal,
    NonHermitianSpec,
    OutOfDomain,
    ParseError,
    SingularExpression,
    UnknownCatalogEntry,
)

N = 2
Z1, Z2 = Expr.z(0), Expr.z(1)

leaves = st.sampled_from([Z1, Z2, Expr.zbar(0), Expr.zbar(1)]) | st.builds(
    Expr.const, st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False).map(lambda c: complex(round(c.real, 3), round(c.imag, 3)))
)


def _grow(children):
    return st.one_of(
        st.builds(lambda a, b: a + b, children, children),
        st.builds(lambda a, b: a - b, children, children),
        st.builds(lambda a, b: a * b, children, children),
        st.builds(lambda a, b: a / (1.5 + absq(b)), children, children),
        st.builds(lambda a: log(2.0 + absq(a)), children),
        st.builds(lambda a: exp(0.1 * a), children),
        st.builds(absq, children),
        st.builds(conj_node, children),
        st.builds(lambda a, k: a**k, children, st.integers(min_value=0, max_value=3)),
        st.builds(lambda a: -a, children),
    )


exprs = st.recursive(leaves, _grow, max_leaves=8)
points = st.tuples(*[st.floats(-0.8, 0.8)] * 4).map(lambda t: np.array([t[0] + 1j * t[1], t[2] + 1j * t[3]]))


def fd_scalar(e: Expr, z0: np.ndarray, h: float = 1e-4):
    """Wirtinger derivatives of a scalar expression by central differences."""
    dirs = [np.eye(N)[k] * s for s in (1, 1j) for k in range(N)]

    def f(z):
        return complex(evaluate(e, z))

    first = np.array([(f(z0 + h * d) - f(z0 - h * d)) / (2 * h) for d in dirs])
    second = np.empty((2 * N, 2 * N), dtype=complex)
    for a, da in enumerate(dirs):
        for b, db in enumerate(dirs):
            second[a, b] = (
                f(z0 + h * (da + db)) - f(z0 + h * (da - db)) - f(z0 - h * (da - db)) + f(z0 - h * (da + db))
            ) / (4 * h * h)
    dx, dy = first[:N], first[N:]
    xx, xy, yx, yy = second[:N, :N], second[:N, N:], second[N:, :N], second[N:, N:]
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy), 0.25 * (xx + 1j * xy - 1j * yx + yy)


@given(exprs, points)
def test_jet_matches_finite_differences(e, z0):
    j = jet(e, z0)
    dz, dzbar, ddz = fd_scalar(e, z0)
    scale = max(1.0, abs(complex(j.value)), np.abs(j.dz).max(), np.abs(j.dzdzbar).max())
    assert np.isclose(complex(j.value), complex(evaluate(e, z0)), atol=1e-12 * scale)
    np.testing.assert_allclose(j.dz, dz, atol=2e-5 * scale)
    np.testing.assert_allclose(j.dzbar, dzbar, atol=2e-5 * scale)
    np.testing.assert_allclose(j.dzdzbar, ddz, atol=2e-4 * scale)


@given(exprs, points)
def test_source_round_trip(e, z0):
    back = parse_expression(to_source(e), n_vars=N)
    a, b = evaluate(e, z0), evaluate(back, z0)
    assert np.isclose(complex(a), complex(b), rtol=1e-12, atol=1e-12)


@given(exprs, points)
def test_jet_conjugation(e, z0):
    # conj(f) has d/dz conj(f) = conj(d f / dzbar)
    j, jc = jet(e, z0), jet(conj_node(e), z0)
    np.testing.assert_allclose(jc.dz, np.conj(j.dzbar), atol=1e-10)
    np.testing.assert_allclose(jc.dzdzbar, np.conj(j.dzdzbar).T, atol=1e-10)


@mark.parametrize(
    "source, z, expected",
    [
        ("1 + 2*3", [0, 0], 7),
        ("(2^3)^2", [0, 0], 64),
        ("z1^(-2)", [2, 0], 0.25),
        ("-z1^2", [2, 0], -4),
        ("absq(z1)", [1 + 1j, 0], 2),
        ("conj(z2)*I", [0, 1j], 1),
        ("log(exp(z1))", [0.5, 0], 0.5),
        ("(1 + z1)^-1", [1, 0], 0.5),
        ("z1 / z2", [3, 2], 1.5),
        ("1.5e1 - .5", [0, 0], 14.5),
    ],
)
def test_expression_values(source, z, expected):
    assert np.isclose(complex(evaluate(parse_expression(source, 2), np.array(z, dtype=complex))), expected)


def test_fs1_entry_jet_at_origin():
    m = parse_metric("metric fs1 dim=1 rank=1\nh[1][1] = (1 + absq(z1))^-2\n")
    j = m.jet(np.array([0.0]))
    assert np.isclose(j.h[0, 0], 1.0) and np.isclose(j.dh[0, 0, 0], 0.0)
    assert np.isclose(j.ddh[0, 0, 0, 0], -2.0, atol=1e-14)


def test_holomorphic_derivatives():
    j = jet(parse_expression("z1^3 * conj(z2)", 2), np.array([2.0, 1j]))
    np.testing.assert_allclose(j.dz, [12 * -1j, 0])
    np.testing.assert_allclose(j.dzbar, [0, 8])
    np.testing.assert_allclose(j.dzdzbar, [[0, 12], [0, 0]])


@mark.parametrize(
    "source, line, col",
    [
        ("1 +", 1, 4),
        ("z3", 1, 1),
        ("foo(z1)", 1, 1),
        ("1 + $", 1, 5),
        ("(z1", 1, 4),
        ("z1 z2", 1, 4),
        ("2^3^2", 1, 4),
        ("z1^1.5", 1, 4),
    ],
)
def test_expression_errors_carry_position(source, line, col):
    with raises(ParseError) as info:
        parse_expression(source, 2)
    assert (info.value.line, info.value.column) == (line, col)


def test_singular_expressions():
    with raises(SingularExpression):
        evaluate(parse_expression("1/z1", 1), np.array([0.0]))
    with raises(SingularExpression):
        evaluate(parse_expression("log(z1)", 1), np.array([0.0]))


FS2_SOURCE = """
# comment line
metric fs dim=2 rank=2 kahler=true
h[1][1] = (1 + absq(z1) + absq(z2))^-1 - absq(z1)*(1 + absq(z1) + absq(z2))^-2
h[2][1] = -z1*conj(z2)*(1 + absq(z1) + absq(z2))^-2
h[2][2] = (1 + absq(z1) + absq(z2))^-1 - absq(z2)*(1 + absq(z1) + absq(z2))^-2
"""


def test_metric_file_completes_by_conjugation():
    m = parse_metric(FS2_SOURCE)
    ref = catalog("fubini_study", 2)
    pts = ref.sample_points(20, seed=3)
    np.testing.assert_allclose(m.value(pts), ref.value(pts), atol=1e-14)
    assert m.kahler_claimed and m.is_tangent


def test_shipped_metric_files(tmp_path):
    m = load_metric("metrics/fs2.hmet")
    pts = m.sample_points(10, seed=1)
    np.testing.assert_allclose(m.value(pts), catalog("fubini_study", 2).value(pts), atol=1e-14)
    r2 = load_metric("metrics/rank2_test.hmet")
    assert not r2.is_tangent
    np.testing.assert_allclose(r2.value(pts), catalog("rank2_test").value(pts), atol=1e-14)
    p = tmp_path / "again.hmet"
    p.write_text(r2.to_source())
    np.testing.assert_allclose(load_metric(str(p)).value(pts), r2.value(pts), atol=1e-14)


@mark.parametrize(
    "source, exc, line",
    [
        ("metric x dim=1 rank=1\nh[1][1] = 1 +\n", ParseError, 2),
        ("metric x dim=1 rank=1\nh[1][2] = 1\n", ParseError, 2),
        ("metric x dim=1 rank=1\nh[1][1] = 1\nh[1][1] = 2\n", ParseError, 3),
        ("metric x dim=1 rank=1\nh[1][1] = z2\n", ParseError, 2),
        ("metric x rank=1\nh[1][1] = 1\n", ParseError, 1),
        ("metric x dim=1 rank=1 colour=red\nh[1][1] = 1\n", ParseError, 1),
        ("metric x dim=1 rank=2 bundle=tangent\nh[1][1] = 1\nh[2][2] = 1\n", ParseError, 1),
        ("metric x dim=1 rank=2\nh[1][1] = 1\n", MissingDiagonal, None),
        ("metric x dim=1 rank=2\nh[1][1] = 1\nh[2][2] = 1\nh[1][2] = z1\nh[2][1] = z1\n", NonHermitianSpec, None),
    ],
)
def test_metric_file_errors(source, exc, line):
    with raises(exc) as info:
        parse_metric(source)
    if line is not None:
        assert info.value.line == line


def test_bundle_header():
    m = parse_metric("metric x dim=2 rank=2 bundle=vector\nh[1][1] = 1\nh[2][2] = 1\n")
    assert not m.is_tangent
    assert parse_metric("metric x dim=2 rank=2\nh[1][1] = 1\nh[2][2] = 1\n").is_tangent


def test_domain_membership():
    m = catalog("poincare_disc", 1)
    with raises(OutOfDomain):
        m.jet(np.array([1.5]))
    d = Domain.single("shell", 2, 2.0, 0.5)
    assert d.contains(np.array([1.0, 0.0]))
    assert not d.contains(np.array([0.1, 0.0]))
    pts = d.sample(np.random.default_rng(0), 50)
    assert all(d.contains(p) for p in pts)


@mark.parametrize(
    "selector, n, r",
    [
        ("fubini_study:3", 3, 3),
        ("flat", 1, 1),
        ("fs_perturbed:2,0.05", 2, 2),
        ("fs_perturbed:n=2,eps=0.01", 2, 2),
        ("product(fubini_study:1, flat:2)", 3, 3),
        ("conformal(fubini_study:2, \"exp(absq(z1))\")", 2, 2),
        ("rank2_test", 2, 2),
        ("griffiths_rank2:0.1", 2, 2),
        ("hopf:3", 3, 3),
    ],
)
def test_selectors(selector, n, r):
    m = resolve_metric(selector)
    assert (m.n, m.r) == (n, r)


@mark.parametrize(
    "selector, exc",
    [
        ("nope:2", UnknownCatalogEntry),
        ("fubini_study:0", BadParameter),
        ("fubini_study:two", BadParameter),
        ("fs_perturbed:2,-1", BadParameter),
        ("product(flat:1)", BadParameter),
        ("flat:1,2,3", BadParameter),
    ],
)
def test_selector_errors(selector, exc):
    with raises(exc):
        resolve_metric(selector)


@mark.parametrize("selector", ["fubini_study:1", "fubini_study:3", "hopf:2", "poincare_disc:2", "griffiths_rank2", "conformal(flat:2, \"1 + absq(z1)\")"])
def test_metric_jets_match_finite_differences(selector):
    m = resolve_metric(selector)
    for z in m.sample_points(5, seed=11):
        assert jet_fd_discrepancy(m, z) < 1e-6


def test_build_metric_off_diagonal_default():
    m = build_metric("d", 1, 2, {(0, 0): Expr.const(1), (1, 1): Expr.const(2) + absq(Z1)})
    np.testing.assert_allclose(m.value(np.array([[1.0]]))[0], np.diag([1, 3]))
