"""Curvature of bundles built from a Hermitian bundle at a point.

Dual, tensor/exterior/symmetric powers and the determinant act fiberwise on the
curvature endomorphism through the derivation extension
``A -> sum_t 1 x .. x A x .. x 1``; they are computed in an orthonormal bundle
frame so induced metrics are the identity.  Sub- and quotient bundles and the
tautological line bundle over the projectivized dual need metric jets, and each
is computed two independent ways that are cross-checked.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from rcpos.config import Tolerances, resolve
from rcpos.curvature import CurvaturePoint, curvature_from_jet
from rcpos.dsl.expr import WirtingerJet
from rcpos.dsl.metric import MetricJet
from rcpos.errors import BadIndexSet, FrameDegenerate, GaugeFailure, RankOverflow
from rcpos.linalg import Tensor4, orthonormal_frame

# ---------------------------------------------------------------------------
# bundle expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BundleExpr:
    def rank(self, r: int) -> int:
        raise NotImplementedError

    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Base(BundleExpr):
    def rank(self, r: int) -> int:
        return r

    def label(self) -> str:
        return "base"


@dataclass(frozen=True)
class Dual(BundleExpr):
    e: BundleExpr

    def rank(self, r: int) -> int:
        return self.e.rank(r)

    def label(self) -> str:
        return f"dual({self.e.label()})"


@dataclass(frozen=True)
class TensorPow(BundleExpr):
    e: BundleExpr
    k: int

    def rank(self, r: int) -> int:
        return self.e.rank(r) ** self.k

    def label(self) -> str:
        return f"tensor({self.e.label()},{self.k})"


@dataclass(frozen=True)
class ExtPow(BundleExpr):
    e: BundleExpr
    p: int

    def rank(self, r: int) -> int:
        return math.comb(self.e.rank(r), self.p)

    def label(self) -> str:
        return f"ext({self.e.label()},{self.p})"


@dataclass(frozen=True)
class SymPow(BundleExpr):
    e: BundleExpr
    p: int

    def rank(self, r: int) -> int:
        return math.comb(self.e.rank(r) + self.p - 1, self.p)

    def label(self) -> str:
        return f"sym({self.e.label()},{self.p})"


@dataclass(frozen=True)
class Sub(BundleExpr):
    e: BundleExpr
    indices: tuple[int, ...]

    def rank(self, r: int) -> int:
        return len(self.indices)

    def label(self) -> str:
        return f"sub({self.e.label()},{';'.join(str(i + 1) for i in self.indices)})"


@dataclass(frozen=True)
class Quot(BundleExpr):
    e: BundleExpr
    indices: tuple[int, ...]

    def rank(self, r: int) -> int:
        return self.e.rank(r) - len(self.indices)

    def label(self) -> str:
        return f"quot({self.e.label()},{';'.join(str(i + 1) for i in self.indices)})"


@dataclass(frozen=True)
class Det(BundleExpr):
    e: BundleExpr

    def rank(self, r: int) -> int:
        return 1

    def label(self) -> str:
        return f"det({self.e.label()})"


def parse_bundle(text: str) -> BundleExpr:
    """Parse ``base`` / ``tangent``, ``dual(X)``, ``tensor(X,k)``, ``ext(X,p)``,
    ``sym(X,p)``, ``det(X)``, ``sub(X,1;2)``, ``quot(X,1)``; indices are 1-based."""
    text = text.strip()
    if text in ("base", "tangent"):
        return Base()
    head, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise ValueError(f"cannot parse bundle expression {text!r}")
    inner = rest[:-1]
    depth, split = 0, None
    for pos, ch in enumerate(inner):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            split = pos
    arg_text, extra = (inner, None) if split is None else (inner[:split], inner[split + 1 :].strip())
    arg = parse_bundle(arg_text)
    head = head.strip()
    try:
        if head == "dual" and extra is None:
            return Dual(arg)
        if head == "det" and extra is None:
            return Det(arg)
        if head in ("tensor", "ext", "sym") and extra is not None:
            k = int(extra)
            if k < 1:
                raise ValueError
            return {"tensor": TensorPow, "ext": ExtPow, "sym": SymPow}[head](arg, k)
        if head in ("sub", "quot") and extra is not None:
            idx = tuple(int(x) - 1 for x in extra.split(";"))
            return (Sub if head == "sub" else Quot)(arg, idx)
    except ValueError:
        pass
    raise ValueError(f"cannot parse bundle expression {text!r}")


# ---------------------------------------------------------------------------
# fiberwise linear algebra
# ---------------------------------------------------------------------------


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


@lru_cache(maxsize=64)
def exterior_basis(r: int, p: int) -> np.ndarray:
    """Orthonormal embedding of Lambda^p C^r into (C^r)^{x p}; columns follow
    lexicographic multi-indices."""
    cols = []
    norm = 1.0 / math.sqrt(math.factorial(p))
    for idx in itertools.combinations(range(r), p):
        col = np.zeros(r**p)
        for perm in itertools.permutations(range(p)):
            flat = 0
            for t in perm:
                flat = flat * r + idx[t]
            col[flat] += _perm_sign(perm) * norm
        cols.append(col)
    return np.array(cols).T.reshape(r**p, len(cols))


@lru_cache(maxsize=64)
def symmetric_basis(r: int, p: int) -> np.ndarray:
    """Orthonormal embedding of Sym^p C^r into (C^r)^{x p}; columns follow sorted
    multisets, each the normalized sum over its distinct orderings."""
    cols = []
    for idx in itertools.combinations_with_replacement(range(r), p):
        words = set(itertools.permutations(idx))
        col = np.zeros(r**p)
        for w in words:
            flat = 0
            for t in w:
                flat = flat * r + t
            col[flat] = 1.0
        cols.append(col / math.sqrt(len(words)))
    return np.array(cols).T.reshape(r**p, len(cols))


def derivation_power(m: np.ndarray, k: int) -> np.ndarray:
    """``sum_t 1 x .. x m x .. x 1`` with ``k`` tensor factors."""
    r = m.shape[0]
    out = np.zeros((r**k, r**k), dtype=complex)
    eye = np.eye(r)
    for t in range(k):
        term = np.ones((1, 1))
        for s in range(k):
            term = np.kron(term, m if s == t else eye)
        out += term
    return out


def _apply_blocks(R: np.ndarray, fn) -> np.ndarray:
    n = R.shape[0]
    blocks = [[fn(R[i, j]) for j in range(n)] for i in range(n)]
    rr = blocks[0][0].shape[0]
    out = np.empty((n, n, rr, rr), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i, j] = blocks[i][j]
    return out


# ---------------------------------------------------------------------------
# derived curvature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Node:
    """Curvature ``R`` and metric value ``h`` in one frame, with the metric jets
    in that frame when they are available."""

    R: np.ndarray
    h: np.ndarray
    jet: MetricJet | None

    def orthonormal(self) -> np.ndarray:
        q = orthonormal_frame(self.h)
        return Tensor4(self.R).change_frames(bundle=q).data


def derived_curvature(expr: BundleExpr, base: CurvaturePoint, tol: Tolerances | None = None) -> CurvaturePoint:
    """Curvature of ``expr`` built over the bundle of ``base``.

    Frame indices in ``sub``/``quot`` refer to the frame of ``base`` (or its dual
    frame).  Powers and determinants are returned in an orthonormal frame; the
    returned ``h`` is the metric in whatever frame the result is expressed in.
    The base metric ``g`` is kept.
    """
    tol = resolve(tol)
    rank = expr.rank(base.r)
    if rank > tol.rank_cap:
        raise RankOverflow(f"{expr.label()} has rank {rank} > cap {tol.rank_cap}")
    node = _derive(expr, _Node(base.R.data, base.h, base.jet), tol)
    R = Tensor4(node.R)
    if R.r != rank:
        raise AssertionError(f"derived rank {R.r} does not match structural rank {rank}")
    return CurvaturePoint(R, base.g, node.h, base.point, node.jet, base.kahler_verified)


def _derive(expr: BundleExpr, node: _Node, tol: Tolerances) -> _Node:
    if isinstance(expr, Base):
        return node
    inner = _derive(expr.e, node, tol)
    if isinstance(expr, Dual):
        if inner.jet is not None:
            dj = inner.jet.dual()
            return _Node(curvature_from_jet(dj, tol).data, dj.h, dj)
        return _Node(-np.swapaxes(inner.orthonormal(), 2, 3), np.eye(inner.R.shape[2], dtype=complex), None)
    if isinstance(expr, (Sub, Quot)):
        if inner.jet is None:
            raise BadIndexSet(f"{expr.label()} needs metric jets; only base and dual bundles carry them")
        res = sub_quotient_curvature(inner.jet, expr.indices, tol=tol)
        if isinstance(expr, Sub):
            return _Node(res.R_S.data, res.jet_S.h, res.jet_S)
        return _Node(res.R_Q.data, res.jet_Q.h, res.jet_Q)
    R = inner.orthonormal()
    r = R.shape[2]
    if isinstance(expr, Det):
        out = np.trace(R, axis1=2, axis2=3)[:, :, None, None]
    elif isinstance(expr, TensorPow):
        out = _apply_blocks(R, lambda m: derivation_power(m, expr.k))
    elif isinstance(expr, ExtPow):
        if not 1 <= expr.p <= r:
            raise BadIndexSet(f"exterior power {expr.p} outside 1..{r}")
        u = exterior_basis(r, expr.p)
        out = _apply_blocks(R, lambda m: u.T @ derivation_power(m, expr.p) @ u)
    elif isinstance(expr, SymPow):
        u = symmetric_basis(r, expr.p)
        out = _apply_blocks(R, lambda m: u.T @ derivation_power(m, expr.p) @ u)
    else:
        raise TypeError(f"unknown bundle expression {expr!r}")
    return _Node(out, np.eye(out.shape[2], dtype=complex), None)


# ---------------------------------------------------------------------------
# sub- and quotient bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubQuotient:
    """Curvatures of ``S`` (spanned by the chosen frame members) and ``Q = E/S``.

    All tensors are in the frame produced by Gram-Schmidt at the point, so the
    first ``s`` members are an orthonormal basis of ``S`` and the rest of its
    orthogonal complement (identified with ``Q``).
    """

    R_E: Tensor4
    R_S: Tensor4
    R_Q: Tensor4
    second_fundamental: np.ndarray  # R_E|_S - R_S by the off-block formula
    quotient_correction: np.ndarray  # R_Q - R_E|_Q by the off-block formula
    residual_S: float
    residual_Q: float
    frame: np.ndarray
    jet_S: MetricJet
    jet_Q: MetricJet

    @property
    def residual(self) -> float:
        return max(self.residual_S, self.residual_Q)


def gram_schmidt_frame(h: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Upper-triangular ``t`` with ``t.T @ h @ conj(t) = I``; the span of the
    first ``k`` frame members is unchanged for every ``k``."""
    tol = resolve(tol)
    h = 0.5 * (h + h.conj().T)
    try:
        low = np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        raise FrameDegenerate("metric is not positive definite on the frame") from None
    scale = math.sqrt(np.max(np.abs(h)))
    pivots = np.abs(np.diag(low))
    if np.min(pivots) < tol.frame_pivot * scale:
        raise FrameDegenerate(f"Gram-Schmidt pivot {np.min(pivots):.3e} below threshold")
    upper = np.linalg.inv(low).conj().T
    return np.conj(upper)


def sub_quotient_curvature(jet: MetricJet, indices, tol: Tolerances | None = None) -> SubQuotient:
    """Curvature of the subbundle spanned by frame members ``indices`` and of the
    quotient by it.

    ``R_S`` is computed from the restricted metric directly and compared with
    ``R_E|_S - sum_{c > s} dh_{a cbar} dbar h_{c bbar}``; ``R_Q`` comes from the
    annihilator subbundle of the dual and is compared with
    ``R_E|_Q + sum_{c <= s} dh_{c bbar} dbar h_{a cbar}``.
    """
    tol = resolve(tol)
    r = jet.r
    idx = tuple(int(i) for i in indices)
    if not idx or len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= r or len(idx) >= r:
        raise BadIndexSet(f"bad subframe {tuple(i + 1 for i in idx)} for rank {r}")
    order = list(idx) + [i for i in range(r) if i not in idx]
    perm = np.eye(r)[:, order]
    t = perm @ gram_schmidt_frame(jet.change_frame(perm).h, tol)
    j = jet.change_frame(t)
    s = len(idx)
    R_E = curvature_from_jet(j, tol).data
    jet_S = j.restrict(range(s))
    R_S = curvature_from_jet(jet_S, tol).data
    second = np.einsum("iac,jcb->ijab", j.dh[:, :s, s:], j.dhbar[:, s:, :s])
    dual = j.dual()
    jet_Qstar = dual.restrict(range(s, r))
    R_Q = -np.swapaxes(curvature_from_jet(jet_Qstar, tol).data, 2, 3)
    correction = np.einsum("icb,jac->ijab", j.dh[:, :s, s:], j.dhbar[:, s:, :s])
    scale = max(np.max(np.abs(R_E)), np.max(np.abs(j.ddh)), 1e-300)
    res_s = float(np.max(np.abs(R_E[:, :, :s, :s] - R_S - second)) / scale)
    res_q = float(np.max(np.abs(R_Q - R_E[:, :, s:, s:] - correction)) / scale)
    return SubQuotient(
        Tensor4(R_E),
        Tensor4(R_S),
        Tensor4(R_Q),
        second,
        correction,
        res_s,
        res_q,
        t,
        jet_S,
        jet_Qstar.dual(),
    )


def monotonicity_margin(difference: np.ndarray, sections: np.ndarray) -> float:
    """Smallest eigenvalue, over the given sections ``a``, of the base form
    ``sum D[i, j, a, b] a^a conj(a^b)``; non-negative when ``D`` is Griffiths
    semi-positive along those sections."""
    worst = np.inf
    for a in np.atleast_2d(sections):
        form = np.einsum("ijab,a,b->ij", difference, a, np.conj(a))
        worst = min(worst, float(np.linalg.eigvalsh(0.5 * (form + form.conj().T))[0]))
    return worst


# ---------------------------------------------------------------------------
# tautological line bundle over P(E*)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectivizationPoint:
    """Curvature of O_E(1) at ``(z, [a])`` in chart coordinates ``(z, w)`` where
    ``w`` are the affine fiber coordinates ``W_c / W_last`` after moving the
    largest component of ``a`` to the last slot (``chart_order``)."""

    direction: np.ndarray
    chart_order: tuple[int, ...]
    direct: np.ndarray
    block: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    positive_count: int


def _lift(value, dz, dzbar, ddz, n_total) -> WirtingerJet:
    n = dz.shape[0]
    pad_dz = np.zeros(n_total, dtype=complex)
    pad_dzb = np.zeros(n_total, dtype=complex)
    pad_m = np.zeros((n_total, n_total), dtype=complex)
    pad_dz[:n], pad_dzb[:n], pad_m[:n, :n] = dz, dzbar, ddz
    return WirtingerJet(np.asarray(value, dtype=complex), pad_dz, pad_dzb, pad_m)


def _fiber_variable(value: complex, k: int, n_total: int) -> WirtingerJet:
    dz = np.zeros(n_total, dtype=complex)
    dz[k] = 1.0
    return WirtingerJet(np.asarray(value, dtype=complex), dz, np.zeros(n_total, dtype=complex), np.zeros((n_total, n_total), dtype=complex))


def _inverse_jet(jet: MetricJet) -> MetricJet:
    """Jets of the plain matrix inverse ``H^{-1}``."""
    d = jet.dual()
    tr = lambda x: np.swapaxes(x, -1, -2)  # noqa: E731
    return MetricJet(d.h.T, tr(d.dh), tr(d.dhbar), tr(d.ddh))


def _direct_route(jet: MetricJet, w0: np.ndarray) -> np.ndarray:
    """``d dbar log(sum h^{a bbar} W_a conj(W_b))`` by forward AD in ``(z, w)``."""
    n, r = jet.n, jet.r
    nt = n + r - 1
    inv = _inverse_jet(jet)
    W = [_fiber_variable(w0[a], n + a, nt) for a in range(r - 1)]
    W.append(WirtingerJet.constant(1.0, (), nt))
    phi = WirtingerJet.constant(0.0, (), nt)
    for b in range(r):
        wb = W[b].conj()
        for a in range(r):
            k = _lift(inv.h[b, a], inv.dh[:, b, a], inv.dhbar[:, b, a], inv.ddh[:, :, b, a], nt)
            phi = phi + wb * k * W[a]
    v = phi.value
    return np.asarray(phi.chain(np.log(v), 1.0 / v, -1.0 / v**2).dzdzbar)


def projectivization_curvature(
    jet: MetricJet, direction, tol: Tolerances | None = None
) -> ProjectivizationPoint:
    """Curvature of the tautological line bundle at the point of P(E*) over the
    jet's base point with homogeneous fiber coordinates ``direction``.

    Computed (A) by AD of the log of the induced metric and (B) from the
    curvature of E after gauging to a holomorphic frame with ``h = I`` and
    ``dh = 0`` at the point, where it splits into a base block
    ``R(., ., a, a)/|a|^2`` and the Fubini-Study block of the fiber; (B) is pulled
    back to the coordinates of (A) through the Jacobian of the frame change.
    """
    tol = resolve(tol)
    n, r = jet.n, jet.r
    a = np.asarray(direction, dtype=complex).reshape(r)
    if not np.any(a):
        raise ValueError("fiber direction must be nonzero")
    last = int(np.argmax(np.abs(a)))
    order = tuple([i for i in range(r) if i != last] + [last])
    perm = np.eye(r)[:, list(order)]
    jet_p = jet.change_frame(perm)
    W0 = a[list(order)] / a[last]  # chart W_r = 1
    direct = _direct_route(jet_p, W0[:-1])

    # (B) gauge: constant Gram-Schmidt frame then a z-linear holomorphic correction
    t0 = gram_schmidt_frame(jet_p.h, tol)
    j1 = jet_p.change_frame(t0)
    C = -np.swapaxes(j1.dh, 1, 2)  # C[i] = -(dh1_i)^T
    Cb = np.conj(C)
    dh_g = np.einsum("iba,bc->iac", C, j1.h) + j1.dh
    dhb_g = np.einsum("ab,jbc->jac", j1.h, Cb) + j1.dhbar
    gauge_res = max(np.max(np.abs(dh_g)), np.max(np.abs(dhb_g))) / max(np.max(np.abs(j1.dh)), 1.0)
    if gauge_res > tol.gauge:
        raise GaugeFailure(f"normal frame leaves first derivatives of size {gauge_res:.3e}")
    ddh_g = (
        j1.ddh
        + np.einsum("iba,jbc->ijac", C, j1.dhbar)
        + np.einsum("iab,jbc->ijac", j1.dh, Cb)
        + np.einsum("iba,bd,jdc->ijac", C, j1.h, Cb)
    )
    R_g = -ddh_g  # h = I, dh = 0 in the gauged frame
    a_g = t0.T @ W0  # W' = F^T W at the point
    c = int(np.argmax(np.abs(a_g)))
    others = [k for k in range(r) if k != c]
    a_n = a_g / a_g[c]
    nrm2 = float(np.real(np.vdot(a_n, a_n)))
    base_block = np.einsum("ijab,a,b->ij", R_g, np.conj(a_n), a_n) / nrm2
    w = a_n[others]
    fiber_block = (np.eye(r - 1) - np.outer(np.conj(w), w) / nrm2) / nrm2
    block = np.zeros((n + r - 1, n + r - 1), dtype=complex)
    block[:n, :n] = base_block
    block[n:, n:] = fiber_block

    # Jacobian of (z, w) -> (z, w'), w'_k = W'_k / W'_c
    jac = np.zeros((n + r - 1, n + r - 1), dtype=complex)
    jac[:n, :n] = np.eye(n)
    dW = np.zeros((r, n + r - 1), dtype=complex)
    dW[:, :n] = np.einsum("iba,b->ai", C, t0.T @ W0)
    dW[:, n:] = t0.T[:, : r - 1]
    for row, k in enumerate(others):
        jac[n + row] = (dW[k] - a_n[k] * dW[c]) / a_g[c]
    pulled = jac.T @ block @ np.conj(jac)

    scale = max(np.max(np.abs(direct)), 1e-300)
    residual = float(np.max(np.abs(direct - pulled)) / scale)
    herm = 0.5 * (direct + direct.conj().T)
    evals = np.linalg.eigvalsh(herm)
    band = tol.zero_band_rel * max(np.max(np.abs(evals)), 1e-300)
    return ProjectivizationPoint(
        direction=a,
        chart_order=order,
        direct=direct,
        block=pulled,
        residual=residual,
        eigenvalues=evals,
        positive_count=int(np.sum(evals > band)),
    )
