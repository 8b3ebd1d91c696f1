from __future__ import annotations

import math

import numpy as np
from hypothesis import example, given
from hypothesis import strategies as st
from pytest import mark, raises

from conftest import random_unitary
from rcpos.config import Tolerances
from rcpos.bundles import Base, Det, Dual, derived_curvature
from rcpos.curvature import CurvaturePoint, chern_curvature
from rcpos.dsl import catalog, resolve_metric
from rcpos.errors import DimensionMismatch, NotKahler, RankMismatch
from rcpos.linalg import Tensor4
from rcpos.positivity import (
    CERTIFIED,
    INCONCLUSIVE,
    REFUTED,
    RELATIONS,
    certify_griffiths,
    certify_hsc_sign,
    certify_q_positive,
    certify_rc_negative,
    certify_rc_positive,
    curvature_scale,
    grid_hsc_min,
    grid_minmax,
    hsc_extremum,
    q_positivity_count,
    structured_seeds,
    verify_minimizer_lemma,
    verify_trace_implication,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
small = st.integers(min_value=1, max_value=2)

FS_FROB = {n: math.sqrt(2 * n * n + 2 * n) for n in (1, 2, 3)}


def tensor_point(R, g=None, h=None):
    n, r = R.shape[0], R.shape[2]
    return CurvaturePoint(
        Tensor4(R),
        np.eye(n, dtype=complex) if g is None else g,
        np.eye(r, dtype=complex) if h is None else h,
        np.zeros(n),
    )


def random_tensor(rng, n, r):
    x = rng.standard_normal((n, n, r, r)) + 1j * rng.standard_normal((n, n, r, r))
    return x + np.conj(x.transpose(1, 0, 3, 2))


def at(selector, z=None):
    m = resolve_metric(selector)
    z = m.sample_points(1, seed=0)[0] if z is None else np.asarray(z, dtype=complex)
    return chern_curvature(m, z)


# ---------------------------------------------------------------------------
# closed-form verdicts
# ---------------------------------------------------------------------------


@mark.parametrize("n", [1, 2, 3])
def test_fubini_study_margins(n):
    # orthonormal R = dd + dd: H_a = |a|^2 I + a a^*, eigenvalues 1 (n-1 times) and 2
    cp = at(f"fubini_study:{n}")
    rc = certify_rc_positive(cp)
    gr = certify_griffiths(cp)
    assert rc.verdict == CERTIFIED and gr.verdict == CERTIFIED
    assert math.isclose(rc.objective, 2.0, abs_tol=1e-9)
    assert math.isclose(gr.objective, 1.0 if n > 1 else 2.0, abs_tol=1e-9)
    assert math.isclose(rc.scale, FS_FROB[n], rel_tol=1e-12)
    assert certify_rc_negative(cp).verdict == REFUTED


@mark.parametrize(
    "selector, rc_pos, rc_neg, griffiths",
    [
        ("fubini_study:2", CERTIFIED, REFUTED, CERTIFIED),
        ("poincare_disc:2", REFUTED, CERTIFIED, REFUTED),
        ("flat:2", INCONCLUSIVE, INCONCLUSIVE, INCONCLUSIVE),
        ("hopf:2", CERTIFIED, INCONCLUSIVE, INCONCLUSIVE),
        ("griffiths_rank2", CERTIFIED, REFUTED, CERTIFIED),
        # block-diagonal: a section in the flat or negative factor sees no positive direction
        ("product(fubini_study:1, flat:1)", INCONCLUSIVE, INCONCLUSIVE, INCONCLUSIVE),
        ("product(fubini_study:1, poincare_disc:1)", INCONCLUSIVE, INCONCLUSIVE, REFUTED),
    ],
)
def test_catalog_verdicts(selector, rc_pos, rc_neg, griffiths):
    cp = at(selector)
    assert certify_rc_positive(cp).verdict == rc_pos
    assert certify_rc_negative(cp).verdict == rc_neg
    assert certify_griffiths(cp).verdict == griffiths


def test_dual_of_positive_line_bundle():
    cp = derived_curvature(Dual(Base()), at("fubini_study:1"))
    assert certify_rc_positive(cp).verdict == REFUTED
    assert certify_rc_negative(cp).verdict == CERTIFIED


def test_zero_curvature_is_inconclusive_with_zero_scale():
    c = certify_rc_positive(tensor_point(np.zeros((2, 2, 2, 2))))
    assert c.verdict == INCONCLUSIVE and c.scale == 0.0 and c.margin == 0.0


def test_structured_seeds():
    s = structured_seeds(3)
    assert len(s) == 3 + 3 * 4
    np.testing.assert_allclose(np.linalg.norm(s, axis=1), 1.0)
    assert len(structured_seeds(3, limit=5)) == 5


def test_metric_shape_checked():
    cp = CurvaturePoint(Tensor4(np.zeros((2, 2, 1, 1))), np.eye(3), np.eye(1), np.zeros(2))
    with raises(DimensionMismatch):
        certify_rc_positive(cp)


# ---------------------------------------------------------------------------
# invariances and soundness
# ---------------------------------------------------------------------------


@given(seeds, small, small, st.floats(0.01, 100.0))
def test_scale_equivariance(seed, n, r, c):
    R = random_tensor(np.random.default_rng(seed), n, r)
    a, b = certify_rc_positive(tensor_point(R)), certify_rc_positive(tensor_point(c * R))
    assert math.isclose(a.margin, b.margin, abs_tol=1e-7)
    assert math.isclose(c * a.objective, b.objective, rel_tol=1e-6, abs_tol=1e-7 * b.scale)


@given(seeds, small, small)
@example(62958897, 2, 2)  # slow valley that once stopped short of the minimum
def test_unitary_frame_invariance(seed, n, r):
    rng = np.random.default_rng(seed)
    R = random_tensor(rng, n, r)
    R2 = Tensor4(R).change_frames(base=random_unitary(rng, n), bundle=random_unitary(rng, r)).data
    for certify in (certify_rc_positive, certify_griffiths):
        a, b = certify(tensor_point(R)), certify(tensor_point(R2))
        assert math.isclose(a.scale, b.scale, rel_tol=1e-12)
        assert math.isclose(a.margin, b.margin, abs_tol=1e-7)


@given(seeds, small, small)
def test_non_orthonormal_frames(seed, n, r):
    # the same curvature written in a non-orthonormal frame certifies identically
    rng = np.random.default_rng(seed)
    R = random_tensor(rng, n, r)
    P = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
    Q = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r)) + 3 * np.eye(r)
    Pi, Qi = np.linalg.inv(P), np.linalg.inv(Q)
    R2 = Tensor4(R).change_frames(base=Pi, bundle=Qi).data
    g = Pi.T @ Pi.conj()
    h = Qi.T @ Qi.conj()
    a, b = certify_rc_positive(tensor_point(R)), certify_rc_positive(tensor_point(R2, g, h))
    assert math.isclose(a.margin, b.margin, abs_tol=1e-7)
    assert math.isclose(b.witness_value, b.objective, rel_tol=1e-8, abs_tol=1e-10 * b.scale)


@given(seeds, small, small)
def test_duality(seed, n, r):
    # rc+ of E and rc- of the dual bundle share their worst case
    R = random_tensor(np.random.default_rng(seed), n, r)
    cp = tensor_point(R)
    dual = derived_curvature(Dual(Base()), cp)
    assert math.isclose(certify_rc_positive(cp).margin, certify_rc_negative(dual).margin, abs_tol=1e-7)


@mark.parametrize("selector", ["fubini_study:2", "griffiths_rank2", "hopf:2", "rank2_test"])
def test_duality_on_metrics(selector):
    cp = at(selector)
    dual = derived_curvature(Dual(Base()), cp)
    assert certify_rc_positive(cp).verdict == certify_rc_negative(dual).verdict
    assert math.isclose(certify_rc_positive(cp).margin, certify_rc_negative(dual).margin, abs_tol=1e-7)


@given(seeds, small, small)
def test_witness_reevaluates_to_objective(seed, n, r):
    cp = tensor_point(random_tensor(np.random.default_rng(seed), n, r))
    for c, sign in ((certify_rc_positive(cp), 1), (certify_rc_negative(cp), -1), (certify_griffiths(cp), 1)):
        v, a = c.witness_direction, c.witness_section
        assert math.isclose(np.linalg.norm(v), 1.0) and math.isclose(np.linalg.norm(a), 1.0)
        assert math.isclose(sign * cp.R.contract(v, a), c.objective, abs_tol=1e-10 * c.scale)
        if c.verdict == REFUTED:
            assert c.witness_value <= 0


@given(seeds, small, small)
def test_griffiths_below_rc(seed, n, r):
    cp = tensor_point(random_tensor(np.random.default_rng(seed), n, r))
    assert certify_griffiths(cp).objective <= certify_rc_positive(cp).objective + 1e-10


@given(seeds, small, small)
def test_optimizer_matches_grid_oracle(seed, n, r):
    cp = tensor_point(random_tensor(np.random.default_rng(seed), n, r))
    for certify in (certify_rc_positive, certify_griffiths):
        c = certify(cp, grid=True)
        assert c.grid_size > 0
        # the grid only ever sees feasible points, so it cannot beat a true minimum
        assert c.grid_margin >= c.margin - 1e-9
        assert abs(c.grid_margin - c.margin) <= 1e-4


def test_grid_oracle_rejects_large_rank():
    with raises(DimensionMismatch):
        grid_minmax(np.zeros((2, 2, 3, 3)))
    with raises(DimensionMismatch):
        grid_hsc_min(np.zeros((3, 3, 3, 3)))


def test_restart_count_and_determinism():
    cp = tensor_point(random_tensor(np.random.default_rng(0), 2, 2))
    a = certify_rc_positive(cp, seed=5)
    b = certify_rc_positive(cp, seed=5)
    assert a.margin == b.margin and np.array_equal(a.witness_section, b.witness_section)
    assert certify_rc_positive(cp, restarts=3).restarts == len(structured_seeds(2)) + 3


def test_escalation_searches_more_and_never_loses_ground():
    cp = tensor_point(random_tensor(np.random.default_rng(3), 2, 2))
    wide = Tolerances(margin=1e3)  # every verdict lands in the band
    base = certify_rc_positive(cp, seed=1, restarts=2, tol=wide)
    more = certify_rc_positive(cp, seed=1, restarts=2, tol=wide.replace(escalate_rounds=2))
    per_run = len(structured_seeds(2))
    assert base.restarts == per_run + 2
    assert more.restarts == 3 * per_run + 2 + 8 + 32
    assert more.margin <= base.margin
    assert more.verdict == INCONCLUSIVE


def test_escalation_skips_decided_verdicts():
    cp = chern_curvature(resolve_metric("fubini_study:2"), np.array([0.1, 0.2j]))
    plain = certify_rc_positive(cp, seed=4)
    esc = certify_rc_positive(cp, seed=4, tol=Tolerances(escalate_rounds=3))
    assert esc.verdict == plain.verdict == CERTIFIED
    assert esc.restarts == plain.restarts and esc.margin == plain.margin


# ---------------------------------------------------------------------------
# q-positivity
# ---------------------------------------------------------------------------


def test_q_count_signature():
    c = q_positivity_count(np.diag([2.0, -1.0, 0.0]))
    assert (c.positive, c.negative, c.zero) == (1, 1, 1)
    np.testing.assert_allclose(c.eigenvalues, [-1, 0, 2])


@given(seeds, st.integers(1, 4))
def test_q_count_is_congruence_invariant(seed, n):
    # Sylvester: the signature does not depend on the metric used
    rng = np.random.default_rng(seed)
    w = rng.choice([-1.0, 0.0, 1.0], size=n) * rng.uniform(0.5, 2.0, size=n)
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
    form = x.T @ np.diag(w) @ x.conj()
    g = x.T @ x.conj()
    c = q_positivity_count(form, g)
    assert (c.positive, c.zero, c.negative) == (int(np.sum(w > 0)), int(np.sum(w == 0)), int(np.sum(w < 0)))


def test_q_positive_fs_anticanonical():
    cp = derived_curvature(Det(Base()), at("fubini_study:2"))
    c = q_positivity_count(cp.R.data[:, :, 0, 0], cp.g)
    assert (c.positive, c.zero, c.negative) == (2, 0, 0)
    assert certify_q_positive(cp, 0).verdict == CERTIFIED


def test_q_positive_hopf_determinant():
    # det of the Hopf metric is flat along the radial direction
    cp = derived_curvature(Det(Base()), at("hopf:2", [1.0, 0.5j]))
    c = q_positivity_count(cp.R.data[:, :, 0, 0], cp.g)
    assert (c.positive, c.zero, c.negative) == (1, 1, 0)
    assert certify_q_positive(cp, 1).verdict == CERTIFIED
    assert certify_q_positive(cp, 0).verdict == INCONCLUSIVE


def test_q_positive_requires_line_bundle():
    with raises(DimensionMismatch):
        certify_q_positive(at("fubini_study:2"), 0)
    with raises(DimensionMismatch):
        certify_q_positive(derived_curvature(Det(Base()), at("fubini_study:2")), 2)


def test_q_positive_refuted():
    cp = derived_curvature(Det(Base()), at("poincare_disc:2"))
    c = certify_q_positive(cp, 1)
    assert c.verdict == REFUTED and c.witness_value < 0


# ---------------------------------------------------------------------------
# holomorphic sectional curvature
# ---------------------------------------------------------------------------


@mark.parametrize(
    "selector, lo, hi",
    [
        ("fubini_study:2", 2.0, 2.0),
        ("fubini_study:3", 2.0, 2.0),
        ("flat:2", 0.0, 0.0),
        ("product(fubini_study:1, fubini_study:1)", 1.0, 2.0),
        ("poincare_disc:2", -2.0, -2.0),
    ],
)
def test_hsc_extremes(selector, lo, hi):
    ext = hsc_extremum(at(selector), grid=True)
    assert math.isclose(ext.min_value, lo, abs_tol=1e-9)
    assert math.isclose(ext.max_value, hi, abs_tol=1e-9)
    if ext.grid_min is not None:
        assert abs(ext.grid_min - ext.min_value) <= 1e-4 * max(ext.scale, 1.0)


def test_hsc_product_minimizer_is_balanced():
    ext = hsc_extremum(at("product(fubini_study:1, fubini_study:1)", [0.0, 0.0]))
    np.testing.assert_allclose(np.abs(ext.argmin), [1 / math.sqrt(2)] * 2, atol=1e-6)


def test_hsc_hopf():
    z = np.array([1.2, 0.3j])
    ext = hsc_extremum(at("hopf:2", z))
    assert abs(ext.min_value) <= 1e-12
    # the radial direction has zero holomorphic sectional curvature
    radial = z / np.linalg.norm(z)
    assert abs(abs(np.vdot(radial, ext.argmin / np.linalg.norm(ext.argmin))) - 1) <= 1e-6


@given(seeds)
def test_hsc_first_variation_vanishes(seed):
    R = random_tensor(np.random.default_rng(seed), 2, 2)
    # make R Kahler-symmetric so H is a genuine quartic form
    R = 0.5 * (R + R.transpose(2, 1, 0, 3))
    R = 0.5 * (R + np.conj(R.transpose(1, 0, 3, 2)))
    ext = hsc_extremum(tensor_point(R), grid=True)
    assert abs(ext.f1_prime) <= 1e-6 * ext.scale and abs(ext.f2_prime) <= 1e-6 * ext.scale
    assert ext.f1_second >= -1e-6 * ext.scale and ext.f2_second >= -1e-6 * ext.scale
    assert abs(ext.grid_min - ext.min_value) <= 1e-4 * ext.scale


def test_hsc_sign_certificate():
    assert certify_hsc_sign(at("fubini_study:2")).verdict == CERTIFIED
    assert certify_hsc_sign(at("poincare_disc:2")).verdict == REFUTED
    assert certify_hsc_sign(at("hopf:2")).verdict == INCONCLUSIVE
    with raises(RankMismatch):
        hsc_extremum(tensor_point(np.zeros((2, 2, 1, 1))))


# ---------------------------------------------------------------------------
# minimizer relations
# ---------------------------------------------------------------------------


@mark.parametrize("selector", ["fubini_study:2", "fubini_study:3", "product(fubini_study:1, fubini_study:1)", "flat:2", "product(fubini_study:2, fubini_study:1)"])
def test_minimizer_lemma_holds_on_kahler(selector):
    m = resolve_metric(selector)
    for k, z in enumerate(m.sample_points(3, seed=1)):
        rep = verify_minimizer_lemma(chern_curvature(m, z), trials=200, seed=k)
        assert rep.mode == "assert"
        assert rep.passed, rep.worst
        assert set(rep.worst) == set(RELATIONS)
        assert rep.worst_residual <= 1e-6


def test_minimizer_lemma_hopf_expect_failure():
    rep = verify_minimizer_lemma(at("hopf:2", [1.0, 0.3]), trials=50)
    assert rep.mode == "expect-failure"
    assert rep.violation_found
    assert rep.failures and rep.failures[0].relation in RELATIONS


def test_minimizer_lemma_strict():
    with raises(NotKahler):
        verify_minimizer_lemma(at("hopf:2"), strict=True)
    verify_minimizer_lemma(at("fubini_study:2"), strict=True, trials=5)
    with raises(DimensionMismatch):
        verify_minimizer_lemma(at("fubini_study:1"))


def test_minimizer_lemma_detects_non_minimizer():
    # feeding the maximizer instead of the minimizer breaks the inequalities
    cp = at("product(fubini_study:1, fubini_study:1)", [0.0, 0.0])
    ext = hsc_extremum(cp)
    fake = ext.__class__(**{**ext.__dict__, "argmin": ext.argmax, "min_value": ext.max_value})
    rep = verify_minimizer_lemma(cp, extremum=fake, trials=50)
    assert not rep.passed


# ---------------------------------------------------------------------------
# trace implication
# ---------------------------------------------------------------------------


@mark.parametrize(
    "selector, met",
    [
        ("fubini_study:2", True),
        ("fubini_study:3", True),
        ("product(fubini_study:1, fubini_study:1)", True),
        ("griffiths_rank2", True),
        ("poincare_disc:2", False),
        ("flat:2", False),
    ],
)
def test_trace_implication(selector, met):
    res = verify_trace_implication(at(selector))
    assert res.hypothesis_met == met
    assert res.conclusion_verified == met
    if met:
        r = at(selector).r
        expected = {f"ext(base,{p})" for p in range(1, r + 1)} | {f"tensor(base,{k})" for k in (1, 2, 3)}
        assert set(res.certificates) == expected
    else:
        assert res.certificates == {}


def test_curvature_scale_is_frobenius():
    assert curvature_scale(np.ones((2, 2, 1, 1))) == 2.0
