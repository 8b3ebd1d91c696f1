"""Point sweeps: the ``check`` certification run and the fixed battery of
curvature identities and inequalities run by ``paper-suite``.

Per-point work only depends on the metric selector, the point and a per-point
seed spawned from the master seed, so results do not depend on how points are
distributed over worker processes.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np

from rcpos.bundles import Base, Dual, parse_bundle, derived_curvature, projectivization_curvature, sub_quotient_curvature, monotonicity_margin
from rcpos.config import Tolerances, resolve
from rcpos.curvature import chern_curvature, kahler_residuals, scalar_panel_from, sphere_average_hsc_from
from rcpos.dsl.catalog import resolve_metric
from rcpos.dsl.metric import MetricField
from rcpos.positivity import (
    CERTIFIED,
    INCONCLUSIVE,
    REFUTED,
    PositivityCertificate,
    certify_griffiths,
    certify_hsc_sign,
    certify_q_positive,
    certify_rc_negative,
    certify_rc_positive,
    hsc_extremum,
    verify_minimizer_lemma,
    verify_trace_implication,
)
from rcpos.report import certificate_item, cvec, make_report

NOTIONS = ("rc+", "rc-", "griffiths+", "hsc_sign")


def point_seeds(seed: int, count: int) -> list[int]:
    """Independent per-point seeds by spawning from the master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def parallel_map(fn, tasks: list, jobs: int | None) -> list:
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


@lru_cache(maxsize=16)
def _metric(selector: str) -> MetricField:
    return resolve_metric(selector)


def certify(notion: str, cp, seed, tol: Tolerances, grid: bool = False) -> PositivityCertificate:
    notion = notion.strip()
    if notion == "rc+":
        return certify_rc_positive(cp, seed=seed, tol=tol, grid=grid)
    if notion == "rc-":
        return certify_rc_negative(cp, seed=seed, tol=tol, grid=grid)
    if notion == "griffiths+":
        return certify_griffiths(cp, seed=seed, tol=tol, grid=grid)
    if notion == "hsc_sign":
        return certify_hsc_sign(cp, seed=seed, tol=tol, grid=grid)
    if notion.startswith("q_positive(") and notion.endswith(")"):
        return certify_q_positive(cp, int(notion[len("q_positive(") : -1]), tol=tol)
    raise ValueError(f"unknown notion {notion!r}; expected one of {', '.join(NOTIONS)} or q_positive(q)")


def validate_notion(notion: str) -> None:
    if notion in NOTIONS:
        return
    if notion.startswith("q_positive(") and notion.endswith(")"):
        try:
            int(notion[len("q_positive(") : -1])
            return
        except ValueError:
            pass
    raise ValueError(f"unknown notion {notion!r}; expected one of {', '.join(NOTIONS)} or q_positive(q)")


def notion_sign(notion: str) -> float:
    return -1.0 if notion == "rc-" else 1.0


def _tol_from(overrides: dict) -> Tolerances:
    return resolve(None).replace(**overrides) if overrides else resolve(None)


def _points_block(points) -> list:
    return [{"id": f"p{k:03d}", "z": cvec(z)} for k, z in enumerate(points)]


def _overall(verdicts: list[str]) -> tuple[str, int]:
    if any(v == REFUTED for v in verdicts):
        return REFUTED, 1
    if any(v == INCONCLUSIVE for v in verdicts):
        return INCONCLUSIVE, 2
    return CERTIFIED, 0


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _check_point(task):
    selector, bundle_text, notions, idx, z, pseed, tol_over = task
    tol = _tol_from(tol_over)
    m = _metric(selector)
    cp = derived_curvature(parse_bundle(bundle_text), chern_curvature(m, z, tol=tol), tol)
    out = []
    for k, notion in enumerate(notions):
        cert = certify(notion, cp, (pseed, k), tol)
        out.append(
            certificate_item(f"check/p{idx:03d}/{notion}", cert, metric=selector, bundle=bundle_text, point_id=f"p{idx:03d}", z=z)
        )
    return out


def run_check(
    metric: str,
    bundle: str = "tangent",
    notions=("rc+",),
    points: int = 10,
    seed: int = 0,
    tol_overrides: dict | None = None,
    jobs: int | None = 1,
    out_format: str = "json",
) -> dict:
    """Certify each notion at ``points`` sampled points; returns the report."""
    start = time.perf_counter()
    notions = tuple(n.strip() for n in notions)
    for n in notions:
        validate_notion(n)
    tol_overrides = dict(tol_overrides or {})
    tol = _tol_from(tol_overrides)
    m = _metric(metric)
    expr = parse_bundle(bundle)
    if expr.rank(m.r) > tol.rank_cap:
        derived_curvature(expr, chern_curvature(m, m.sample_points(1, seed)[0], tol=tol), tol)
    pts = m.sample_points(points, seed)
    seeds = point_seeds(seed, points)
    tasks = [(metric, bundle, notions, k, pts[k], seeds[k], tol_overrides) for k in range(points)]
    items = [it for chunk in parallel_map(_check_point, tasks, jobs) for it in chunk]
    verdict, code = _overall([it["verdict"] for it in items])
    config = {
        "metric": metric,
        "bundle": bundle,
        "notions": list(notions),
        "points": points,
        "seed": seed,
        "tolerances": tol_overrides,
        "format": out_format,
    }
    timing = {"wall_seconds": time.perf_counter() - start, "jobs": jobs or 1}
    return make_report("check", config, _points_block(pts), items, [], verdict, code, timing)


# ---------------------------------------------------------------------------
# paper suite
# ---------------------------------------------------------------------------

ROWS = (
    "kahler_relation",
    "averaging_identity",
    "sub_quotient_monotonicity",
    "rc_duality",
    "trace_implication",
    "projectivization",
    "minimizer_lemma",
    "certifier_soundness",
)

AVERAGING_POINTS = 3
AVERAGING_SAMPLES = 100_000
PROJECTIVIZATION_DIRECTIONS = 2
MONOTONICITY_SECTIONS = 8


def _record(row: dict, hyp: bool, concl: bool | None, residual: float, failure: dict | None = None):
    """Accumulate one check; ``concl`` is only meaningful when ``hyp`` holds."""
    row["checked"] += 1
    row["worst_residual"] = max(row["worst_residual"], float(residual))
    if hyp:
        row["hypothesis_met"] += 1
        if concl:
            row["conclusion_verified"] += 1
        elif failure is not None:
            row["failures"].append(failure)


def _identity(row: dict, ok: bool, failure: dict | None = None):
    row["identity_checks"] += 1
    if not ok:
        row["identity_failures"] += 1
        if failure is not None:
            row["failures"].append(failure)


def _new_row() -> dict:
    return {
        "checked": 0,
        "hypothesis_met": 0,
        "conclusion_verified": 0,
        "identity_checks": 0,
        "identity_failures": 0,
        "worst_residual": 0.0,
        "failures": [],
        "details": [],
    }


def _suite_point(task):
    selector, idx, z, pseed, kahler_metric, trials, tol_over = task
    tol = _tol_from(tol_over)
    m = _metric(selector)
    pid = f"p{idx:03d}"
    rng = np.random.default_rng(pseed)
    rows = {name: _new_row() for name in ROWS}
    items = []
    cp = chern_curvature(m, z, tol=tol)
    bundle = "tangent" if m.is_tangent else "base"
    n, r = cp.n, cp.r
    certs = []

    def cert_item(tag, cert, bundle_label):
        item = certificate_item(f"suite/{pid}/{tag}", cert, metric=selector, bundle=bundle_label, point_id=pid, z=z)
        items.append(item)
        certs.append((item, cert))
        return cert

    # Kahler relation: curvature symmetry and s = s_hat for Kahler metrics
    if m.is_tangent:
        kp = kahler_residuals(cp)
        panel = scalar_panel_from(cp, tol)
        scale = max(cp.orthonormal().R.max_norm(), 1e-300)
        ds = abs(panel.s - panel.s_hat) / scale
        res = max(kp.symmetry, ds)
        ok = res <= tol.kahler_rel
        _record(
            rows["kahler_relation"],
            kahler_metric,
            ok,
            res if kahler_metric else 0.0,
            {"point": pid, "symmetry": kp.symmetry, "s": panel.s, "s_hat": panel.s_hat},
        )
        rows["kahler_relation"]["details"].append(
            {"point": pid, "torsion": kp.torsion, "symmetry": kp.symmetry, "s": panel.s, "s_hat": panel.s_hat}
        )

    # sphere average of the holomorphic sectional curvature
    if m.is_tangent and idx < AVERAGING_POINTS:
        avg = sphere_average_hsc_from(cp, AVERAGING_SAMPLES, pseed, tol)
        _record(
            rows["averaging_identity"],
            True,
            avg.z_score <= 3.0,
            avg.z_score,
            {"point": pid, "mean": avg.mean, "predicted": avg.predicted, "z_score": avg.z_score},
        )
        rows["averaging_identity"]["details"].append(
            {"point": pid, "mean": avg.mean, "predicted": avg.predicted, "stderr": avg.stderr, "z_score": avg.z_score}
        )

    # sub/quotient curvature decreasing/increasing
    if r >= 2:
        subsets = [(k,) for k in range(r)] + [tuple(range(s)) for s in range(2, r)]
        for sub in subsets:
            sq = sub_quotient_curvature(cp.jet, sub, tol)
            s = len(sub)
            scale = max(sq.R_E.max_norm(), 1e-300)
            _identity(
                rows["sub_quotient_monotonicity"],
                sq.residual <= tol.cross_check,
                {"point": pid, "subframe": [i + 1 for i in sub], "residual_S": sq.residual_S, "residual_Q": sq.residual_Q},
            )
            sec_s = rng.standard_normal((MONOTONICITY_SECTIONS, s)) + 1j * rng.standard_normal((MONOTONICITY_SECTIONS, s))
            sec_q = rng.standard_normal((MONOTONICITY_SECTIONS, r - s)) + 1j * rng.standard_normal((MONOTONICITY_SECTIONS, r - s))
            sec_s /= np.linalg.norm(sec_s, axis=1, keepdims=True)
            sec_q /= np.linalg.norm(sec_q, axis=1, keepdims=True)
            diff_s = sq.R_E.data[:, :, :s, :s] - sq.R_S.data
            diff_q = sq.R_Q.data - sq.R_E.data[:, :, s:, s:]
            mono = min(monotonicity_margin(diff_s, sec_s), monotonicity_margin(diff_q, sec_q)) / scale
            _record(
                rows["sub_quotient_monotonicity"],
                True,
                mono >= -tol.monotonicity,
                max(0.0, -mono),
                {"point": pid, "subframe": [i + 1 for i in sub], "min_eigenvalue": mono},
            )
            rows["sub_quotient_monotonicity"]["worst_residual"] = max(
                rows["sub_quotient_monotonicity"]["worst_residual"], sq.residual
            )

    # duality: E rc+ iff E* rc-
    c_pos = cert_item("rc_duality/rc+", certify_rc_positive(cp, seed=(pseed, 1), tol=tol), bundle)
    dual_cp = derived_curvature(Dual(Base()), cp, tol)
    c_neg = cert_item("rc_duality/dual/rc-", certify_rc_negative(dual_cp, seed=(pseed, 2), tol=tol), f"dual({bundle})")
    _record(
        rows["rc_duality"],
        True,
        c_pos.verdict == c_neg.verdict,
        abs(c_pos.margin - c_neg.margin),
        {"point": pid, "rc+": c_pos.verdict, "dual rc-": c_neg.verdict},
    )

    # positive trace forces RC-positive exterior and tensor powers
    ti = verify_trace_implication(cp, max_tensor=3, seed=(pseed, 3), tol=tol)
    for label, c in ti.certificates.items():
        cert_item(f"trace_implication/{label}", c, label.replace("base", bundle))
    _record(
        rows["trace_implication"],
        ti.hypothesis_met,
        ti.conclusion_verified,
        max([0.0] + [max(0.0, -c.margin) for c in ti.certificates.values()]),
        {"point": pid, "trace_min_eig": ti.trace_min_eig, "verdicts": {k: c.verdict for k, c in ti.certificates.items()}},
    )
    rows["trace_implication"]["details"].append({"point": pid, "trace_min_eig": ti.trace_min_eig, "hypothesis_met": ti.hypothesis_met})

    # tautological line bundle over P(E*)
    for d in range(PROJECTIVIZATION_DIRECTIONS):
        a = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        pp = projectivization_curvature(cp.jet, a, tol)
        fail = {"point": pid, "direction": cvec(a), "residual": pp.residual, "positive": pp.positive_count, "eigenvalues": pp.eigenvalues}
        _identity(rows["projectivization"], pp.residual <= tol.cross_check, fail)
        hyp = c_pos.verdict == CERTIFIED
        _record(rows["projectivization"], hyp, pp.positive_count >= r, pp.residual, fail)

    # minimizer of the holomorphic sectional curvature
    if m.is_tangent and n >= 2:
        kahler_here = kahler_metric and kahler_residuals(cp).residual <= tol.kahler_rel
        ext = hsc_extremum(cp, seed=(pseed, 4), tol=tol, grid=n <= 2)
        rep = verify_minimizer_lemma(cp, ext, trials=trials, seed=(pseed, 5), tol=tol, kahler=kahler_here)
        row = rows["minimizer_lemma"]
        failure = None
        if rep.failures:
            f = max(rep.failures, key=lambda x: x.residual)
            failure = {
                "point": pid,
                "mode": rep.mode,
                "relation": f.relation,
                "residual": f.residual,
                "e1": cvec(f.e1),
                "e2": cvec(f.e2),
                "w": None if f.w is None else cvec(f.w),
            }
        _record(row, rep.mode == "assert", rep.passed, rep.worst_residual if rep.mode == "assert" else 0.0, failure)
        if rep.mode != "assert" and failure is not None:
            row["failures"].append(failure)
        row["details"].append(
            {
                "point": pid,
                "mode": rep.mode,
                "kahler_residual": rep.kahler_residual,
                "e1": cvec(rep.e1),
                "min_hsc": rep.min_hsc,
                "relations": rep.worst,
                "violation_found": rep.violation_found,
            }
        )
        # the grid may undercut the optimizer by less than the verdict band
        if ext.grid_min is not None:
            scale = max(ext.scale, 1e-300)
            gap = (ext.grid_min - ext.min_value) / scale
            _record(
                rows["certifier_soundness"],
                True,
                -tol.margin <= gap <= tol.grid_agreement,
                abs(gap),
                {"point": pid, "check": "hsc grid", "optimizer": ext.min_value, "grid": ext.grid_min},
            )

    # certifier soundness: grid agreement and witness re-evaluation
    if n <= 2 and r <= 2:
        for tag, fn in (("rc+", certify_rc_positive), ("griffiths+", certify_griffiths)):
            c = cert_item(f"certifier_soundness/{tag}", fn(cp, seed=(pseed, 6), tol=tol, grid=True), bundle)
            gap = c.grid_margin - c.margin
            _record(
                rows["certifier_soundness"],
                True,
                -tol.margin <= gap <= tol.grid_agreement,
                abs(gap),
                {"point": pid, "check": f"{tag} grid", "optimizer": c.margin, "grid": c.grid_margin},
            )
    for item, c in certs:
        if c.verdict != REFUTED:
            continue
        value = c.witness_value
        ok = value / c.scale <= tol.margin and abs(value - c.objective) <= 1e-9 * c.scale
        _record(
            rows["certifier_soundness"],
            True,
            ok,
            abs(value - c.objective) / c.scale,
            {"item": item["id"], "witness_value": value, "objective": c.objective},
        )
    return rows, items


def _row_mode(name: str, row: dict, lemma_modes: list[str]) -> str:
    if name != "minimizer_lemma":
        return "assert"
    if not lemma_modes:
        return "not-applicable"
    if all(m == "assert" for m in lemma_modes):
        return "assert"
    if all(m != "assert" for m in lemma_modes):
        return "expect-failure"
    return "mixed"


def metric_is_kahler(m: MetricField, points, tol: Tolerances) -> tuple[bool, float]:
    """Kahler verdict for the metric from the torsion residual at all points."""
    if not m.is_tangent:
        return False, float("nan")
    worst = max(kahler_residuals(chern_curvature(m, z, tol=tol)).torsion for z in points)
    return worst <= tol.kahler_rel, worst


def run_paper_suite(
    metric: str,
    points: int = 10,
    seed: int = 0,
    trials: int = 200,
    tol_overrides: dict | None = None,
    jobs: int | None = 1,
    out_format: str = "json",
) -> dict:
    """Run the fixed battery over sampled points; returns the report."""
    start = time.perf_counter()
    tol_overrides = dict(tol_overrides or {})
    tol = _tol_from(tol_overrides)
    m = _metric(metric)
    pts = m.sample_points(points, seed)
    seeds = point_seeds(seed, points)
    kahler, torsion = metric_is_kahler(m, pts, tol)
    tasks = [(metric, k, pts[k], seeds[k], kahler, trials, tol_overrides) for k in range(points)]
    results = parallel_map(_suite_point, tasks, jobs)
    items = [it for _rows, chunk in results for it in chunk]
    lemmas = []
    for name in ROWS:
        agg = _new_row()
        modes = []
        for rows, _ in results:
            row = rows[name]
            for key in ("checked", "hypothesis_met", "conclusion_verified", "identity_checks", "identity_failures"):
                agg[key] += row[key]
            agg["worst_residual"] = max(agg["worst_residual"], row["worst_residual"])
            agg["failures"] += row["failures"]
            agg["details"] += row["details"]
            if name == "minimizer_lemma":
                modes += [d["mode"] for d in row["details"]]
        agg["failures"] = agg["failures"][:50]
        mode = _row_mode(name, agg, modes)
        passed = agg["hypothesis_met"] == agg["conclusion_verified"] and agg["identity_failures"] == 0
        entry = {"id": f"lemma/{name}", "name": name, "mode": mode, "passed": passed, **agg}
        if name == "minimizer_lemma":
            entry["violations_found"] = sum(1 for d in agg["details"] if d["violation_found"] and d["mode"] != "assert")
        if name == "kahler_relation":
            entry["metric_kahler"] = kahler
            entry["max_torsion"] = torsion
        lemmas.append(entry)
    ok = all(row["passed"] for row in lemmas)
    config = {
        "metric": metric,
        "bundle": "tangent" if m.is_tangent else "base",
        "points": points,
        "seed": seed,
        "trials": trials,
        "tolerances": tol_overrides,
        "format": out_format,
    }
    timing = {"wall_seconds": time.perf_counter() - start, "jobs": jobs or 1}
    return make_report("paper-suite", config, _points_block(pts), items, lemmas, "pass" if ok else "fail", 0 if ok else 1, timing)
