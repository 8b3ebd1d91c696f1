"""Pointwise positivity certificates for curvature tensors.

RC-positivity is decided as ``min_a lambda_max(H_a)`` with
``H_a[i, j] = sum R[i, j, a, b] a^a conj(a^b)``: the inner maximum over base
directions is an exact eigenproblem and only the outer minimum over the bundle
sphere is iterative.  All work happens in orthonormal frames for ``g`` and ``h``,
and margins are divided by the tensor's Frobenius norm so verdict thresholds
are scale-free.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from rcpos.config import Tolerances, resolve
from rcpos.curvature import CurvaturePoint, hsc_values, kahler_residuals
from rcpos.errors import DimensionMismatch, NotKahler, RankMismatch
from rcpos.linalg import Tensor4, hermitian_eig, orthonormal_frame

CERTIFIED, REFUTED, INCONCLUSIVE = "certified", "refuted", "inconclusive"


@dataclass(frozen=True)
class PositivityCertificate:
    """Verdict for one positivity notion at one point.

    ``margin`` is the worst-case objective divided by ``scale``, the Frobenius
    norm of ``R`` in orthonormal frames (invariant under unitary frame changes); ``objective`` is the same value before normalizing and
    is what the witness pair re-evaluates to.  Witnesses are unit vectors in the
    caller's frames: ``witness_direction`` for ``g``, ``witness_section`` for ``h``.
    """

    notion: str
    verdict: str
    margin: float
    objective: float
    scale: float
    witness_section: np.ndarray
    witness_direction: np.ndarray
    witness_value: float
    restarts: int = 0
    iterations: int = 0
    grid_size: int = 0
    grid_margin: float | None = None

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED


def curvature_scale(R: np.ndarray) -> float:
    """Frobenius norm of an orthonormal-frame tensor; unlike the max-norm it does
    not depend on which orthonormal frames were chosen."""
    return float(np.linalg.norm(R))


def _verdict(margin: float, scale: float, tol: Tolerances) -> str:
    if scale == 0.0 or abs(margin) <= tol.margin:
        return INCONCLUSIVE
    return CERTIFIED if margin > 0 else REFUTED


def _frames(cp: CurvaturePoint):
    R = cp.R
    g = np.asarray(cp.g, dtype=complex)
    h = np.asarray(cp.h, dtype=complex)
    if g.shape != (R.n, R.n) or h.shape != (R.r, R.r):
        raise DimensionMismatch(f"curvature has shape {R.data.shape} but g is {g.shape} and h is {h.shape}")
    p = orthonormal_frame(g)
    q = orthonormal_frame(h)
    return p, q, R.change_frames(base=p, bundle=q).data


# ---------------------------------------------------------------------------
# batched projected gradient on a product of complex unit spheres
# ---------------------------------------------------------------------------


def structured_seeds(dim: int, limit: int | None = None) -> np.ndarray:
    """Coordinate vectors, then two-coordinate diagonals with phases 1, i, -1, -i."""
    seeds = [np.eye(dim, dtype=complex)[k] for k in range(dim)]
    for j, k in itertools.combinations(range(dim), 2):
        for phase in (1, 1j, -1, -1j):
            v = np.zeros(dim, dtype=complex)
            v[j], v[k] = 1 / math.sqrt(2), phase / math.sqrt(2)
            seeds.append(v)
    if limit is not None:
        seeds = seeds[:limit]
    return np.array(seeds)


def _gaussian_seeds(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _normalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _descend(objective, starts: np.ndarray, scale: float, max_iter: int = 400, gtol: float = 1e-12, stall: bool = True):
    """Minimize ``objective`` over unit vectors from every start at once.

    ``objective(X)`` returns ``(values, grads)`` where ``grads`` is the real
    gradient encoded as ``2 d/d conj(x)``.  Armijo backtracking per start with a
    step that doubles after each success.  The sufficient-decrease constant is
    large on purpose: with 1e-4 the doubling/halving rhythm settles near the
    step 2/L and zig-zags with a contraction factor close to 1.  ``stall`` drops
    starts whose value stops improving, which only makes sense for the nonsmooth
    min-max objectives; smooth ones run to the gradient tolerance.
    """
    x = _normalize(np.array(starts, dtype=complex))
    f, grad = objective(x)
    step = np.full(len(x), 1.0 / max(scale, 1e-300))
    active = np.ones(len(x), dtype=bool)
    checkpoint = f.copy()
    iters = 0
    for iters in range(1, max_iter + 1):
        if stall and iters % 25 == 0:
            # stalled starts (typically crawling along an eigenvalue crossing)
            active &= checkpoint - f > 1e-10 * scale
            checkpoint = f.copy()
        d = -grad
        d = d - np.real(np.sum(np.conj(x) * d, axis=1))[:, None] * x
        dn2 = np.real(np.sum(np.conj(d) * d, axis=1))
        active &= (np.sqrt(dn2) > gtol * scale) & (step > 1e-16 / max(scale, 1e-300))
        if not active.any():
            break
        idx = np.flatnonzero(active)
        trial = _normalize(x[idx] + step[idx, None] * d[idx])
        ft, gt = objective(trial)
        # a decrease must clear rounding noise, or the step random-walks forever
        good = (ft <= f[idx] - 0.25 * step[idx] * dn2[idx]) & (ft < f[idx] - 8 * np.finfo(float).eps * scale)
        sel = idx[good]
        x[sel], f[sel], grad[sel] = trial[good], ft[good], gt[good]
        ok = np.zeros(len(x), dtype=bool)
        ok[sel] = True
        step = np.where(ok, np.minimum(step * 2.0, 1e3 / max(scale, 1e-300)), np.where(active, step * 0.5, step))
    return x, f, iters


def _form_extreme(R: np.ndarray, A: np.ndarray, top: bool):
    """Extreme eigenvalue of ``H_a`` for each row ``a`` of ``A`` with the matching
    base witness (as a vector ``v`` with ``R(v, vbar, a, abar)`` equal to it)."""
    n, r = R.shape[0], R.shape[2]
    M = np.tensordot(A, R.reshape(n * n, r, r), axes=([1], [1]))  # (s, n*n, r)
    H = np.einsum("sxb,sb->sx", M, np.conj(A)).reshape(-1, n, n)
    H = 0.5 * (H + np.conj(np.swapaxes(H, 1, 2)))
    w, U = np.linalg.eigh(H)
    k = -1 if top else 0
    return w[:, k], np.conj(U[:, :, k])


def _minmax_objective(R: np.ndarray, top: bool):
    def fn(A):
        vals, V = _form_extreme(R, A, top)
        n, r = R.shape[0], R.shape[2]
        VV = (V[:, :, None] * np.conj(V)[:, None, :]).reshape(len(A), n * n)
        # K^T a with K[a, b] = sum_ij R[i, j, a, b] v^i conj(v^j)
        RA = np.tensordot(A, R.reshape(n * n, r, r), axes=([1], [1]))  # (s, n*n, b)
        grad = 2.0 * np.einsum("sx,sxb->sb", VV, RA)
        return vals, grad

    return fn


def _minimize_form(R: np.ndarray, top: bool, seed, restarts: int | None, tol: Tolerances):
    """``min_a lambda_top(H_a)`` (or ``lambda_min`` when ``top`` is false)."""
    r = R.shape[2]
    rng = np.random.default_rng(seed)
    count = 2 * r * r if restarts is None else restarts
    starts = np.concatenate([structured_seeds(r, 32), _gaussian_seeds(r, count, rng)])
    scale = float(np.max(np.abs(R)))
    if scale == 0.0:
        a = starts[:1]
        vals, V = _form_extreme(R, a, top)
        return a[0], V[0], 0.0, len(starts), 0
    objective = _minmax_objective(R, top)
    x, f, iters = _descend(objective, starts, scale)
    # ill-conditioned valleys need far more than the batch budget; polish the leaders
    lead = np.argsort(f)[:4]
    x, f, more = _descend(objective, x[lead], scale, max_iter=5000)
    iters += more
    best = int(np.argmin(f))
    a = x[best]
    # emission: reference eigensolver
    H = np.einsum("ijab,a,b->ij", R, a, np.conj(a))
    w, U = hermitian_eig(0.5 * (H + H.conj().T), tol)
    k = -1 if top else 0
    return a, np.conj(U[:, k]), float(w[k]), len(starts), iters


def _certify_form(cp: CurvaturePoint, notion: str, top: bool, sign: float, seed, restarts, tol, grid) -> PositivityCertificate:
    tol = resolve(tol)
    p, q, R = _frames(cp)
    R = sign * R
    scale = curvature_scale(R)
    a, v, val, nstart, iters = _minimize_form(R, top, seed, restarts, tol)
    margin = val / scale if scale else 0.0
    count = 2 * R.shape[2] ** 2 if restarts is None else restarts
    extra_seeds = np.random.default_rng(seed).integers(0, 2**63, size=tol.escalate_rounds) + 1
    for k in range(tol.escalate_rounds):
        if not scale or _verdict(margin, scale, tol) != INCONCLUSIVE:
            break
        count *= 4
        res = _minimize_form(R, top, int(extra_seeds[k]), count, tol)
        nstart, iters = nstart + res[3], iters + res[4]
        if res[2] < val:
            a, v, val = res[:3]
            margin = val / scale
    grid_size, grid_margin = 0, None
    if grid and R.shape[0] <= 2 and R.shape[2] <= 2:
        g_val, g_a, grid_size = grid_minmax(R, top)
        grid_margin = g_val / scale if scale else 0.0
    a_orig = q @ a
    v_orig = p @ v
    value = sign * cp.R.contract(v_orig, a_orig)
    return PositivityCertificate(
        notion,
        _verdict(margin, scale, tol),
        float(margin),
        float(val),
        scale,
        a_orig,
        v_orig,
        float(value),
        nstart,
        iters,
        grid_size,
        grid_margin,
    )


def certify_rc_positive(cp: CurvaturePoint, seed=0, restarts: int | None = None, tol: Tolerances | None = None, grid: bool = False) -> PositivityCertificate:
    """RC-positivity: for every ``a != 0`` some ``v`` has ``R(v, vbar, a, abar) > 0``.

    The witness ``a`` attains the minimum of ``lambda_max(H_a)`` and ``v`` is the
    top eigenvector there, so the witness value equals the objective.
    """
    return _certify_form(cp, "rc+", True, 1.0, seed, restarts, tol, grid)


def certify_rc_negative(cp: CurvaturePoint, seed=0, restarts: int | None = None, tol: Tolerances | None = None, grid: bool = False) -> PositivityCertificate:
    """RC-negativity, i.e. RC-positivity of ``-R``; objectives and witness values
    are reported for ``-R``."""
    return _certify_form(cp, "rc-", True, -1.0, seed, restarts, tol, grid)


def certify_griffiths(cp: CurvaturePoint, seed=0, restarts: int | None = None, tol: Tolerances | None = None, grid: bool = False) -> PositivityCertificate:
    """Griffiths positivity: ``min`` over unit ``(v, a)`` of ``R(v, vbar, a, abar)``."""
    return _certify_form(cp, "griffiths+", False, 1.0, seed, restarts, tol, grid)


# ---------------------------------------------------------------------------
# grid oracles (n, r <= 2)
# ---------------------------------------------------------------------------


def _sphere2(t: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(t) + 0j, np.sin(t) * np.exp(1j * phi)], axis=-1)


def _grid_search(fn, dim: int, points: int = 10_000, zoom_levels: int = 10, keep: int = 8):
    """Brute-force minimum of ``fn`` over the projective line of unit vectors in
    C^2 (a point for C^1): a ``sqrt(points)``-square grid in ``(t, phi)`` with
    ``a = (cos t, sin t e^{i phi})``, then nested 11x11 zooms around the best
    cells to remove the grid's resolution error."""
    if dim == 1:
        a = np.ones((1, 1), dtype=complex)
        return float(fn(a)[0]), a[0], 1
    side = int(round(math.sqrt(points)))
    t = np.linspace(0.0, math.pi / 2, side)
    phi = np.linspace(0.0, 2 * math.pi, side, endpoint=False)
    T, P = np.meshgrid(t, phi, indexing="ij")
    A = _sphere2(T.ravel(), P.ravel())
    vals = fn(A)
    evaluated = len(A)
    ht, hp = t[1] - t[0], phi[1] - phi[0]
    best_val, best_a = float(np.min(vals)), A[int(np.argmin(vals))]
    for c in np.argsort(vals)[:keep]:
        tc, pc = T.ravel()[c], P.ravel()[c]
        wt, wp = ht, hp
        for _ in range(zoom_levels):
            lt = np.clip(tc + np.linspace(-wt, wt, 11), 0.0, math.pi / 2)
            lp = pc + np.linspace(-wp, wp, 11)
            TT, PP = np.meshgrid(lt, lp, indexing="ij")
            Z = _sphere2(TT.ravel(), PP.ravel())
            zv = fn(Z)
            evaluated += len(Z)
            k = int(np.argmin(zv))
            tc, pc = TT.ravel()[k], PP.ravel()[k]
            if zv[k] < best_val:
                best_val, best_a = float(zv[k]), Z[k]
            wt, wp = wt / 5.0, wp / 5.0
    return best_val, best_a, evaluated


def grid_minmax(R: np.ndarray, top: bool = True):
    """Grid-oracle value of ``min_a lambda_top(H_a)`` (``lambda_min`` if not
    ``top``) for an orthonormal-frame tensor with ``r <= 2``."""
    if R.shape[2] > 2:
        raise DimensionMismatch("grid oracle is limited to rank <= 2")
    return _grid_search(lambda A: _form_extreme(R, A, top)[0], R.shape[2])


def grid_hsc_min(R: np.ndarray):
    """Grid-oracle minimum of the holomorphic sectional curvature for n <= 2."""
    if R.shape[0] > 2:
        raise DimensionMismatch("grid oracle is limited to dimension <= 2")
    return _grid_search(lambda W: hsc_values(R, W), R.shape[0])


# ---------------------------------------------------------------------------
# q-positivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenCounts:
    positive: int
    zero: int
    negative: int
    eigenvalues: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)


def q_positivity_count(form: np.ndarray, g: np.ndarray | None = None, tol: Tolerances | None = None) -> EigenCounts:
    """Signature of a Hermitian form against ``g`` with a zero band of
    ``zero_band_rel * max|lambda|``.  Eigenvectors are returned as base vectors
    in the caller's frame (columns), ascending."""
    tol = resolve(tol)
    form = np.asarray(form, dtype=complex)
    n = form.shape[0]
    p = orthonormal_frame(np.eye(n) if g is None else g)
    m = p.T @ form @ np.conj(p)
    w, U = hermitian_eig(0.5 * (m + m.conj().T), tol)
    band = tol.zero_band_rel * max(float(np.max(np.abs(w))), 0.0)
    pos = int(np.sum(w > band))
    neg = int(np.sum(w < -band))
    return EigenCounts(pos, n - pos - neg, neg, w, p @ np.conj(U))


def certify_q_positive(cp: CurvaturePoint, q: int, tol: Tolerances | None = None) -> PositivityCertificate:
    """Line-bundle q-positivity: at least ``n - q`` positive eigenvalues of the
    curvature form against ``g``."""
    tol = resolve(tol)
    if cp.r != 1:
        raise DimensionMismatch(f"q-positivity is defined for line bundles; got rank {cp.r} (try det(...))")
    n = cp.n
    if not 0 <= q < n:
        raise DimensionMismatch(f"q must satisfy 0 <= q < n = {n}")
    form = cp.R.data[:, :, 0, 0]
    counts = q_positivity_count(form, cp.g, tol)
    need = n - q
    lam = counts.eigenvalues[n - need]  # need-th largest
    scale = float(np.max(np.abs(counts.eigenvalues)))
    margin = lam / scale if scale else 0.0
    if counts.positive >= need:
        verdict = CERTIFIED
    elif counts.positive + counts.zero >= need:
        verdict = INCONCLUSIVE
    else:
        verdict = REFUTED
    v = counts.vectors[:, n - need]
    a = np.array([1.0 / math.sqrt(float(np.real(cp.h[0, 0])))], dtype=complex)
    value = cp.R.contract(v, a)
    return PositivityCertificate(f"q_positive({q})", verdict, float(margin), float(lam), scale, a, v, float(value))


# ---------------------------------------------------------------------------
# holomorphic sectional curvature
# ---------------------------------------------------------------------------


def _wbar_grad(R: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``d H / d conj(W)`` for ``H(W) = R(W, Wbar, W, Wbar)``."""
    Wc = np.conj(W)
    return np.einsum("ijkl,si,sk,sl->sj", R, W, W, Wc, optimize=True) + np.einsum(
        "ijkl,si,sj,sk->sl", R, W, Wc, W, optimize=True
    )


def _hsc_vals_grads(R: np.ndarray):
    def fn(W):
        return hsc_values(R, W), 2.0 * _wbar_grad(R, W)

    return fn


@dataclass(frozen=True)
class HscExtremum:
    """Extremes of ``H(W) = R(W, Wbar, W, Wbar)`` over the g-unit sphere.

    Vectors are in the caller's frame.  The variations are along the test
    direction ``e2`` (a unit vector orthogonal to ``e1``): ``f1(t) = H(cos t e1 +
    sin t e2)`` and ``f2(t) = H(cos t e1 + i sin t e2)``.
    """

    min_value: float
    argmin: np.ndarray
    max_value: float
    argmax: np.ndarray
    scale: float
    e2: np.ndarray | None
    f1_prime: float
    f1_second: float
    f2_prime: float
    f2_second: float
    restarts: int
    iterations: int
    grid_min: float | None = None
    grid_size: int = 0

    @property
    def spread(self) -> float:
        return self.max_value - self.min_value


def _quartic(R, w1, w2, w3, w4) -> complex:
    return complex(np.einsum("ijkl,i,j,k,l->", R, w1, np.conj(w2), w3, np.conj(w4)))


def _variations(R: np.ndarray, e1: np.ndarray, w1: np.ndarray, w2: np.ndarray) -> tuple[float, float]:
    """First and second derivative at 0 of ``H(W(t))`` with ``W(0) = e1``,
    ``W'(0) = w1``, ``W''(0) = w2``, by slot substitution in the quartic form."""
    first = 0.0 + 0j
    second = 0.0 + 0j
    for s in range(4):
        slots = [e1] * 4
        slots[s] = w1
        first += _quartic(R, *slots)
        slots[s] = w2
        second += _quartic(R, *slots)
    for s, t in itertools.permutations(range(4), 2):
        slots = [e1] * 4
        slots[s] = slots[t] = w1
        second += _quartic(R, *slots)
    return float(first.real), float(second.real)


def _orthogonal_unit(e1: np.ndarray, rng: np.random.Generator) -> np.ndarray | None:
    n = e1.size
    if n < 2:
        return None
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x = x - np.vdot(e1, x) * e1
    return x / np.linalg.norm(x)


def hsc_extremum(cp: CurvaturePoint, seed=0, restarts: int | None = None, tol: Tolerances | None = None, grid: bool = False) -> HscExtremum:
    """Global minimum (and maximum) of the holomorphic sectional curvature.

    Multistart projected gradient from all coordinate vectors, all two-coordinate
    diagonals with phases 1, i, -1, -i, and ``4 n^2`` Gaussian starts.
    """
    tol = resolve(tol)
    if cp.n != cp.r:
        raise RankMismatch("holomorphic sectional curvature needs the tangent bundle")
    p = orthonormal_frame(cp.g)
    R = cp.R.change_frames(base=p, bundle=p).data
    n = cp.n
    rng = np.random.default_rng(seed)
    count = 4 * n * n if restarts is None else restarts
    starts = np.concatenate([structured_seeds(n), _gaussian_seeds(n, count, rng)])
    scale = curvature_scale(R)
    if scale == 0.0:
        e = starts[0]
        e2 = _orthogonal_unit(e, rng)
        return HscExtremum(0.0, p @ e, 0.0, p @ e, 0.0, None if e2 is None else p @ e2, 0.0, 0.0, 0.0, 0.0, len(starts), 0,
                           0.0 if grid and n <= 2 else None, 0)
    fn = _hsc_vals_grads(R)
    xmin, fmin, it1 = _descend(fn, starts, scale, max_iter=3000, gtol=1e-13, stall=False)
    neg = lambda W: tuple(-x for x in fn(W))  # noqa: E731
    xmax, fmax, it2 = _descend(neg, starts, scale, max_iter=3000, gtol=1e-13, stall=False)
    i_min, i_max = int(np.argmin(fmin)), int(np.argmin(fmax))
    e1 = xmin[i_min]
    e2 = _orthogonal_unit(e1, rng)
    f1p = f1pp = f2p = f2pp = 0.0
    if e2 is not None:
        f1p, f1pp = _variations(R, e1, e2, -e1)
        f2p, f2pp = _variations(R, e1, 1j * e2, -e1)
    grid_min, grid_size = None, 0
    if grid and n <= 2:
        grid_min, _, grid_size = grid_hsc_min(R)
    return HscExtremum(
        float(fmin[i_min]),
        p @ e1,
        float(-fmax[i_max]),
        p @ xmax[i_max],
        scale,
        None if e2 is None else p @ e2,
        f1p,
        f1pp,
        f2p,
        f2pp,
        len(starts),
        max(it1, it2),
        grid_min,
        grid_size,
    )


def certify_hsc_sign(cp: CurvaturePoint, seed=0, tol: Tolerances | None = None, grid: bool = False) -> PositivityCertificate:
    """Positive holomorphic sectional curvature at the point (min over the sphere > 0)."""
    tol = resolve(tol)
    ext = hsc_extremum(cp, seed=seed, tol=tol, grid=grid)
    margin = ext.min_value / ext.scale if ext.scale else 0.0
    value = cp.R.contract(ext.argmin, ext.argmin)
    grid_margin = None
    if ext.grid_min is not None:
        grid_margin = ext.grid_min / ext.scale if ext.scale else 0.0
    return PositivityCertificate(
        "hsc_sign",
        _verdict(margin, ext.scale, tol),
        float(margin),
        ext.min_value,
        ext.scale,
        ext.argmin,
        ext.argmin,
        float(value),
        ext.restarts,
        ext.iterations,
        ext.grid_size,
        grid_margin,
    )


# ---------------------------------------------------------------------------
# the minimizer lemma
# ---------------------------------------------------------------------------

RELATIONS = ("f1_variation", "f2_variation", "mixed_vanish", "two_plane_bound", "final_inequality")


@dataclass(frozen=True)
class RelationFailure:
    relation: str
    residual: float
    e1: np.ndarray
    e2: np.ndarray
    w: np.ndarray | None


@dataclass(frozen=True)
class MinimizerLemmaReport:
    """Worst scale-normalized violation per relation (0 when satisfied).

    ``mode`` is ``"assert"`` at Kahler-verified points and ``"expect-failure"``
    otherwise; in the latter case ``violation_found`` records whether any
    relation broke.
    """

    point: np.ndarray
    mode: str
    kahler_residual: float
    e1: np.ndarray
    min_hsc: float
    scale: float
    trials: int
    worst: dict
    failures: tuple[RelationFailure, ...]
    passed: bool

    @property
    def violation_found(self) -> bool:
        return not self.passed

    @property
    def worst_residual(self) -> float:
        return max(self.worst.values())


def _closed_forms(R: np.ndarray) -> dict:
    """Expansion coefficients in the frame ``(e1, e2, ...)``; indices are 0-based."""
    R1111, R1122 = R[0, 0, 0, 0], R[0, 0, 1, 1]
    R1112, R2111 = R[0, 0, 0, 1], R[1, 0, 0, 0]
    R1212, R2121 = R[0, 1, 0, 1], R[1, 0, 1, 0]
    return {
        "f1p": 2 * (R1112 + R2111),
        "f1pp": 2 * (4 * R1122 + R1212 + R2121) - 4 * R1111,
        "f2p": 2j * (-R1112 + R2111),
        "f2pp": 2 * (4 * R1122 - R1212 - R2121) - 4 * R1111,
    }


def verify_minimizer_lemma(
    cp: CurvaturePoint,
    extremum: HscExtremum | None = None,
    trials: int = 200,
    seed=0,
    strict: bool = False,
    tol: Tolerances | None = None,
    kahler: bool | None = None,
) -> MinimizerLemmaReport:
    """Check the relations satisfied at a minimizer ``e1`` of the holomorphic
    sectional curvature of a Kahler metric, over ``trials`` random unit ``e2``
    orthogonal to ``e1`` and random unit ``W``:

    - ``f1'(0) = 0``, ``f1''(0) >= 0`` and their closed forms,
    - the same for ``f2`` (the ``i e2`` variation),
    - ``R_{1 1bar 1 2bar} = R_{1 1bar 2 1bar} = 0``,
    - ``2 R_{1 1bar 2 2bar} >= R_{1 1bar 1 1bar}``,
    - ``2 R(e1, e1bar, W, Wbar) >= (1 + |<W, e1>|^2) R(e1, e1bar, e1, e1bar)``.

    The closed forms use the Kahler symmetry, so at non-Kahler points the check
    runs in expect-failure mode (or raises ``NotKahler`` when ``strict``).  The
    Kahler verdict is taken from the point's residuals unless ``kahler`` is given
    (a metric-level verdict, for instance).
    """
    tol = resolve(tol)
    if cp.n != cp.r:
        raise RankMismatch("the minimizer lemma concerns the tangent bundle")
    if cp.n < 2:
        raise DimensionMismatch("the minimizer lemma needs dimension >= 2")
    kres = kahler_residuals(cp).residual if cp.jet is not None else 0.0
    if kahler is None:
        kahler = kres <= tol.kahler_rel if cp.jet is not None else bool(cp.kahler_verified)
    if not kahler and strict:
        raise NotKahler(f"Kahler residual {kres:.3e} exceeds {tol.kahler_rel:g}")
    mode = "assert" if kahler else "expect-failure"
    ext = extremum if extremum is not None else hsc_extremum(cp, seed=seed, tol=tol)
    p = orthonormal_frame(cp.g)
    Ron = cp.R.change_frames(base=p, bundle=p).data
    pinv = np.linalg.inv(p)
    e1 = pinv @ ext.argmin
    e1 = e1 / np.linalg.norm(e1)
    scale = float(np.max(np.abs(Ron)))
    denom = scale if scale > 0 else 1.0
    rng = np.random.default_rng(seed)
    n = cp.n
    worst = {k: 0.0 for k in RELATIONS}
    failures: list[RelationFailure] = []
    limit = tol.lemma_rel

    def record(name, residual, e2, w=None):
        res = float(residual) / denom
        if res > worst[name]:
            worst[name] = res
        if res > limit and len(failures) < 50:
            failures.append(RelationFailure(name, res, p @ e1, p @ e2, None if w is None else p @ w))

    R11 = _quartic(Ron, e1, e1, e1, e1).real
    for _ in range(trials):
        e2 = _orthogonal_unit(e1, rng)
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w /= np.linalg.norm(w)
        # frame (e1, e2, completion) so the closed forms read off components
        basis = np.column_stack([e1, e2] + [np.zeros(n)] * (n - 2))
        if n > 2:
            qm, _ = np.linalg.qr(np.column_stack([e1, e2, rng.standard_normal((n, n - 2))]))
            basis[:, 2:] = qm[:, 2:]
        Rf = Tensor4(Ron).change_frames(base=basis, bundle=basis).data
        closed = _closed_forms(Rf)
        f1p, f1pp = _variations(Ron, e1, e2, -e1)
        f2p, f2pp = _variations(Ron, e1, 1j * e2, -e1)
        record(
            "f1_variation",
            max(abs(f1p), abs(closed["f1p"] - f1p), abs(closed["f1pp"] - f1pp), max(0.0, -f1pp), max(0.0, -closed["f1pp"].real)),
            e2,
        )
        record(
            "f2_variation",
            max(abs(f2p), abs(closed["f2p"] - f2p), abs(closed["f2pp"] - f2pp), max(0.0, -f2pp), max(0.0, -closed["f2pp"].real)),
            e2,
        )
        record("mixed_vanish", max(abs(Rf[0, 0, 0, 1]), abs(Rf[0, 0, 1, 0])), e2)
        record("two_plane_bound", max(0.0, -(2 * Rf[0, 0, 1, 1].real - Rf[0, 0, 0, 0].real)), e2)
        lhs = 2 * _quartic(Ron, e1, e1, w, w).real
        rhs = (1 + abs(np.vdot(e1, w)) ** 2) * R11
        record("final_inequality", max(0.0, rhs - lhs), e2, w)
    passed = all(v <= limit for v in worst.values())
    return MinimizerLemmaReport(
        cp.point, mode, kres, p @ e1, ext.min_value, scale, trials, worst, tuple(failures), passed
    )


# ---------------------------------------------------------------------------
# trace implication
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceImplicationPoint:
    point: np.ndarray
    trace_min_eig: float
    hypothesis_met: bool
    certificates: dict  # bundle label -> PositivityCertificate
    conclusion_verified: bool


def verify_trace_implication(cp: CurvaturePoint, max_ext: int | None = None, max_tensor: int = 3, seed=0, tol: Tolerances | None = None) -> TraceImplicationPoint:
    """If ``tr_g R`` is positive definite on the bundle, every exterior power
    ``ext(E, p)`` (``p <= r``) and tensor power ``tensor(E, k)`` (``k <= max_tensor``)
    must be certified RC-positive."""
    from rcpos.bundles import Base, ExtPow, TensorPow, derived_curvature

    tol = resolve(tol)
    p, q, R = _frames(cp)
    tr = np.einsum("iiab->ab", R)
    scale = max(curvature_scale(R), 1e-300)
    lam = float(np.linalg.eigvalsh(0.5 * (tr + tr.conj().T))[0]) / scale
    met = lam > tol.monotonicity
    certs = {}
    ok = True
    if met:
        exprs = [ExtPow(Base(), k) for k in range(1, (max_ext or cp.r) + 1)]
        exprs += [TensorPow(Base(), k) for k in range(1, max_tensor + 1)]
        for i, e in enumerate(exprs):
            c = certify_rc_positive(derived_curvature(e, cp, tol), seed=(seed, i), tol=tol)
            certs[e.label()] = c
            ok &= c.certified
    return TraceImplicationPoint(cp.point, lam, met, certs, bool(met and ok))


__all__ = [
    "CERTIFIED",
    "REFUTED",
    "INCONCLUSIVE",
    "PositivityCertificate",
    "certify_rc_positive",
    "certify_rc_negative",
    "certify_griffiths",
    "certify_q_positive",
    "certify_hsc_sign",
    "q_positivity_count",
    "EigenCounts",
    "HscExtremum",
    "hsc_extremum",
    "grid_minmax",
    "grid_hsc_min",
    "structured_seeds",
    "MinimizerLemmaReport",
    "verify_minimizer_lemma",
    "TraceImplicationPoint",
    "verify_trace_implication",
]
