"""Chern curvature of a Hermitian metric and its traces.

Index conventions: ``R[i, j, a, b]`` is the component with base indices ``i, jbar``
and bundle indices ``a, bbar``.  Inverse metrics are raised with
``h^{c dbar} = inv(h)[d, c]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rcpos.config import Tolerances, resolve
from rcpos.dsl.metric import MetricField, MetricJet, eval_jet
from rcpos.errors import RankMismatch, SingularMetric
from rcpos.linalg import Tensor4, orthonormal_frame, sample_unit_sphere


@dataclass(frozen=True)
class CurvaturePoint:
    """Curvature of one bundle metric at one point.

    ``g`` is the base (Kahler form) metric used for traces and base unit
    vectors; ``h`` the bundle metric at the point.
    """

    R: Tensor4
    g: np.ndarray
    h: np.ndarray
    point: np.ndarray
    jet: MetricJet | None = None
    kahler_verified: bool | None = None

    @property
    def n(self) -> int:
        return self.R.n

    @property
    def r(self) -> int:
        return self.R.r

    def orthonormal(self) -> "CurvaturePoint":
        """Same curvature expressed in g- and h-orthonormal frames."""
        p = orthonormal_frame(self.g)
        q = orthonormal_frame(self.h)
        return CurvaturePoint(
            self.R.change_frames(base=p, bundle=q),
            np.eye(self.n, dtype=complex),
            np.eye(self.r, dtype=complex),
            self.point,
            None,
            self.kahler_verified,
        )


def _check_pd(h: np.ndarray, tol: Tolerances, what: str) -> np.ndarray:
    if not np.all(np.isfinite(h)):
        raise SingularMetric(f"{what} has non-finite entries")
    w = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    if w[-1] <= 0 or w[0] <= tol.pd_ratio * w[-1]:
        raise SingularMetric(f"{what} is not positive definite (eigenvalues {w})")
    return np.linalg.inv(h)


def curvature_from_jet(jet: MetricJet, tol: Tolerances | None = None) -> Tensor4:
    """``R = -d dbar h + dh h^{-1} dbar h`` from exact jets."""
    tol = resolve(tol)
    hinv = _check_pd(jet.h, tol, "bundle metric")
    quad = np.einsum("iad,dc,jcb->ijab", jet.dh, hinv, jet.dhbar)
    return Tensor4(-jet.ddh + quad)


def chern_curvature(
    m: MetricField,
    point,
    base_metric: np.ndarray | None = None,
    tol: Tolerances | None = None,
) -> CurvaturePoint:
    """Chern curvature of ``m`` at ``point``.

    For a tangent-bundle metric (``r == n``) the base metric defaults to the
    metric itself; otherwise to the Euclidean one unless ``base_metric`` is given.
    """
    tol = resolve(tol)
    z = np.asarray(point, dtype=complex).reshape(m.n)
    jet = eval_jet(m, z)
    R = curvature_from_jet(jet, tol)
    if base_metric is None:
        g = jet.h if m.is_tangent else np.eye(m.n, dtype=complex)
    else:
        g = np.asarray(base_metric, dtype=complex)
    return CurvaturePoint(R, g, jet.h, z, jet)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarPanel:
    s: float
    s_hat: float
    ricci1: np.ndarray
    ricci2: np.ndarray


def scalar_panel_from(cp: CurvaturePoint, tol: Tolerances | None = None) -> ScalarPanel:
    if cp.n != cp.r:
        raise RankMismatch(f"scalar curvatures need the tangent bundle (n={cp.n}, r={cp.r})")
    ginv = _check_pd(cp.g, resolve(tol), "base metric")
    R = cp.R.data
    ricci1 = np.einsum("lk,ijkl->ij", ginv, R)
    ricci2 = np.einsum("ji,ijkl->kl", ginv, R)
    s = np.einsum("ji,ij->", ginv, ricci1)
    s_hat = np.einsum("li,jk,ijkl->", ginv, ginv, R)
    return ScalarPanel(float(s.real), float(s_hat.real), ricci1, ricci2)


def scalar_panel(g: MetricField, point, tol: Tolerances | None = None) -> ScalarPanel:
    """Chern scalar curvature ``s``, ``s_hat`` and both Chern-Ricci tensors."""
    if not g.is_tangent:
        raise RankMismatch(f"scalar curvatures need the tangent bundle (n={g.n}, r={g.r})")
    return scalar_panel_from(chern_curvature(g, point, tol=tol), tol)


def trace_endomorphism(cp: CurvaturePoint) -> np.ndarray:
    """``g^{i jbar} R_{i jbar a bbar}`` as a Hermitian form on the bundle."""
    ginv = np.linalg.inv(cp.g)
    return np.einsum("ji,ijab->ab", ginv, cp.R.data)


def trace_form(cp: CurvaturePoint) -> np.ndarray:
    """``h^{a bbar} R_{i jbar a bbar}`` as a Hermitian form on the base."""
    hinv = np.linalg.inv(cp.h)
    return np.einsum("ba,ijab->ij", hinv, cp.R.data)


# ---------------------------------------------------------------------------
# Kahler test
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KahlerPoint:
    point: np.ndarray
    torsion: float
    symmetry: float

    @property
    def residual(self) -> float:
        return max(self.torsion, self.symmetry)


@dataclass(frozen=True)
class KahlerVerdict:
    kahler: bool
    worst_residual: float
    worst_point: np.ndarray | None
    points: tuple[KahlerPoint, ...]


def kahler_residuals(cp: CurvaturePoint) -> KahlerPoint:
    """Scale-free residuals of ``dg_{k lbar}/dz^i = dg_{i lbar}/dz^k`` and of the
    curvature symmetry ``R_{i jbar k lbar} = R_{k jbar i lbar}``."""
    if cp.jet is None or cp.n != cp.r:
        raise RankMismatch("Kahler test needs tangent-bundle jets")
    dg = cp.jet.dh
    scale_g = max(np.max(np.abs(cp.jet.h)), 1e-300)
    torsion = float(np.max(np.abs(dg - dg.transpose(1, 0, 2))) / scale_g)
    R = cp.R.data
    scale_r = np.max(np.abs(R))
    sym = float(np.max(np.abs(R - R.transpose(2, 1, 0, 3))) / scale_r) if scale_r > 0 else 0.0
    return KahlerPoint(cp.point, torsion, sym)


def kahler_check(g: MetricField, points, tol: Tolerances | None = None) -> KahlerVerdict:
    """Numerical Kahler verdict over sample points.

    Kahler iff at every point both the first-derivative torsion residual and the
    curvature-symmetry residual are at most ``tol.kahler_rel``.
    """
    tol = resolve(tol)
    if not g.is_tangent:
        raise RankMismatch(f"Kahler test needs the tangent bundle (n={g.n}, r={g.r})")
    results = tuple(kahler_residuals(chern_curvature(g, z, tol=tol)) for z in np.atleast_2d(points))
    worst = max(results, key=lambda k: k.residual)
    return KahlerVerdict(worst.residual <= tol.kahler_rel, worst.residual, worst.point, results)


def is_kahler_at(cp: CurvaturePoint, tol: Tolerances | None = None) -> bool:
    return kahler_residuals(cp).residual <= resolve(tol).kahler_rel


# ---------------------------------------------------------------------------
# sphere averaging
# ---------------------------------------------------------------------------


def hsc_values(R: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """``R(xi, xibar, xi, xibar)`` for each row of ``xi``."""
    xc = np.conj(xi)
    return np.real(np.einsum("ijkl,si,sj,sk,sl->s", R, xi, xc, xi, xc, optimize=True))


@dataclass(frozen=True)
class SphereAverage:
    mean: float
    predicted: float
    stderr: float
    z_score: float
    samples: int


def sphere_average_hsc_from(cp: CurvaturePoint, samples: int, seed: int, tol: Tolerances | None = None) -> SphereAverage:
    panel = scalar_panel_from(cp, tol)
    on = cp.orthonormal()
    n = cp.n
    xi = sample_unit_sphere(n, samples, seed)
    vals = hsc_values(on.R.data, xi)
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    predicted = (panel.s + panel.s_hat) / (n * (n + 1))
    floor = 1e-12 * max(on.R.max_norm(), 1e-300)
    z = abs(mean - predicted) / max(stderr, floor)
    return SphereAverage(mean, predicted, stderr, float(z), samples)


def sphere_average_hsc(g: MetricField, point, samples: int = 100_000, seed: int = 0, tol: Tolerances | None = None) -> SphereAverage:
    """Monte-Carlo mean of the holomorphic sectional curvature over the unit
    sphere at ``point``, against the closed form ``(s + s_hat) / (n (n + 1))``.

    The frame is orthonormalized first so the sphere is the g-unit sphere.
    """
    if not g.is_tangent:
        raise RankMismatch("holomorphic sectional curvature needs the tangent bundle")
    return sphere_average_hsc_from(chern_curvature(g, point, tol=tol), samples, seed, tol)
