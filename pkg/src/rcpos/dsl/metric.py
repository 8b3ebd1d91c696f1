"""Hermitian metric fields on a single coordinate chart."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rcpos.config import Tolerances, resolve
from rcpos.dsl import expr as ex
from rcpos.dsl.expr import Expr, WirtingerJet
from rcpos.dsl.parser import parse_source
from rcpos.errors import (
    MissingDiagonal,
    NonHermitianSpec,
    NotHermitian,
    NotPositiveDefinite,
    OutOfDomain,
    ParseError,
    SingularExpression,
)


@dataclass(frozen=True)
class DomainBlock:
    """Region for a contiguous block of ``dims`` coordinates.

    kind is one of ``entire``, ``polydisc`` (each |z_k| < radius), ``ball``
    (|z| < radius) or ``shell`` (inner < |z| < radius).
    """

    kind: str
    dims: int
    radius: float = float("inf")
    inner: float = 0.0

    def contains(self, z: np.ndarray) -> bool:
        if self.kind == "entire":
            return True
        if self.kind == "polydisc":
            return bool(np.all(np.abs(z) < self.radius))
        rho = np.linalg.norm(z)
        if self.kind == "ball":
            return bool(rho < self.radius)
        return bool(self.inner < rho < self.radius)

    def sample(self, rng: np.random.Generator, count: int, box: float) -> np.ndarray:
        d = self.dims
        if self.kind in ("entire", "polydisc"):
            lim = min(box, 0.9 * self.radius)
            rad = lim * np.sqrt(rng.random((count, d)))
            return rad * np.exp(2j * np.pi * rng.random((count, d)))
        direction = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        if self.kind == "ball":
            outer = min(box, 0.9 * self.radius)
            rad = outer * rng.random(count) ** (1.0 / (2 * d))
        else:
            lo = self.inner + 0.1 * (self.radius - self.inner)
            hi = self.radius - 0.1 * (self.radius - self.inner)
            rad = lo + (hi - lo) * rng.random(count)
        return rad[:, None] * direction

    def describe(self) -> str:
        if self.kind == "entire":
            return "entire"
        if self.kind == "shell":
            return f"shell:{self.inner!r}:{self.radius!r}"
        return f"{self.kind}:{self.radius!r}"


@dataclass(frozen=True)
class Domain:
    blocks: tuple[DomainBlock, ...]

    @staticmethod
    def single(kind: str, dims: int, radius: float = float("inf"), inner: float = 0.0) -> "Domain":
        return Domain((DomainBlock(kind, dims, radius, inner),))

    @staticmethod
    def parse(text: str, dims: int) -> "Domain":
        parts = text.split(":")
        kind = parts[0]
        try:
            if kind == "entire" and len(parts) == 1:
                return Domain.single("entire", dims)
            if kind in ("polydisc", "ball") and len(parts) == 2:
                return Domain.single(kind, dims, float(parts[1]))
            if kind == "shell" and len(parts) == 3:
                return Domain.single("shell", dims, float(parts[2]), float(parts[1]))
        except ValueError:
            pass
        raise ValueError(f"bad domain descriptor {text!r}")

    @property
    def dims(self) -> int:
        return sum(b.dims for b in self.blocks)

    def _split(self, z: np.ndarray):
        start = 0
        for b in self.blocks:
            yield b, z[..., start : start + b.dims]
            start += b.dims

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=complex)
        return all(b.contains(part) for b, part in self._split(z))

    def sample(self, rng: np.random.Generator, count: int, box: float = 1.0) -> np.ndarray:
        return np.concatenate([b.sample(rng, count, box) for b in self.blocks], axis=1)

    def describe(self) -> str:
        return " x ".join(b.describe() for b in self.blocks)


@dataclass(frozen=True)
class MetricJet:
    """Jets of all metric entries at one point.

    ``h[a, b] = h_{a bbar}``; ``dh[i, a, b] = d h_{a bbar} / dz^i``;
    ``dhbar[j, a, b] = d h_{a bbar} / dzbar^j``;
    ``ddh[i, j, a, b] = d^2 h_{a bbar} / dz^i dzbar^j``.
    """

    h: np.ndarray
    dh: np.ndarray
    dhbar: np.ndarray
    ddh: np.ndarray

    @property
    def n(self) -> int:
        return self.dh.shape[0]

    @property
    def r(self) -> int:
        return self.h.shape[0]

    def entry(self, a: int, b: int) -> WirtingerJet:
        return WirtingerJet(self.h[a, b], self.dh[:, a, b], self.dhbar[:, a, b], self.ddh[:, :, a, b])

    def change_frame(self, t: np.ndarray) -> "MetricJet":
        """Jets in the constant frame ``e'_a = sum_b e_b t[b, a]``."""
        tb = np.conj(t)
        return MetricJet(
            t.T @ self.h @ tb,
            np.einsum("ca,icd,db->iab", t, self.dh, tb),
            np.einsum("ca,icd,db->iab", t, self.dhbar, tb),
            np.einsum("ca,ijcd,db->ijab", t, self.ddh, tb),
        )

    def restrict(self, idx) -> "MetricJet":
        idx = np.asarray(idx)
        sel = np.ix_(idx, idx)
        return MetricJet(
            self.h[sel],
            self.dh[:, idx][:, :, idx],
            self.dhbar[:, idx][:, :, idx],
            self.ddh[:, :, idx][:, :, :, idx],
        )

    def dual(self) -> "MetricJet":
        """Jets of the dual metric ``(h^{-1})^T`` in the dual frame."""
        hinv = np.linalg.inv(self.h)
        dinv = -np.einsum("ab,ibc,cd->iad", hinv, self.dh, hinv)
        dbinv = -np.einsum("ab,ibc,cd->iad", hinv, self.dhbar, hinv)
        # d dbar (H^-1) = H^-1 (dH H^-1 dbarH + dbarH H^-1 dH - d dbar H) H^-1
        inner = (
            np.einsum("iab,bc,jcd->ijad", self.dh, hinv, self.dhbar)
            + np.einsum("jab,bc,icd->ijad", self.dhbar, hinv, self.dh)
            - self.ddh
        )
        ddinv = np.einsum("ab,ijbc,cd->ijad", hinv, inner, hinv)
        tr = lambda x: np.swapaxes(x, -1, -2)  # noqa: E731
        return MetricJet(hinv.T, tr(dinv), tr(dbinv), tr(ddinv))

    def max_norm(self) -> float:
        return float(max(np.max(np.abs(x)) for x in (self.h, self.dh, self.dhbar, self.ddh)))


@dataclass(frozen=True)
class MetricField:
    """A Hermitian metric ``h_{a bbar}(z, zbar)`` of rank ``r`` over an
    ``n``-dimensional chart, given by one expression tree per entry."""

    name: str
    n: int
    r: int
    entries: tuple[tuple[Expr, ...], ...]
    domain: Domain
    params: tuple = ()
    kahler_claimed: bool = False
    sample_box: float = 1.0
    source: str | None = field(default=None, compare=False, repr=False)
    tangent: bool | None = None

    @property
    def is_tangent(self) -> bool:
        """Metric on the tangent bundle; defaults to ``n == r`` unless set."""
        return self.n == self.r if self.tangent is None else self.tangent and self.n == self.r

    def value(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape[:-1] + (self.r, self.r), dtype=complex)
        for a in range(self.r):
            for b in range(self.r):
                out[..., a, b] = ex.evaluate(self.entries[a][b], z)
        return out

    def jet(self, z) -> MetricJet:
        return eval_jet(self, z)

    def sample_points(self, count: int, seed, box: float | None = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.domain.sample(rng, count, self.sample_box if box is None else box)

    def validate(self, points, tol: Tolerances | None = None) -> None:
        """Check that the value is Hermitian positive definite at ``points``."""
        tol = resolve(tol)
        vals = self.value(np.atleast_2d(points))
        for z, h in zip(np.atleast_2d(points), vals):
            scale = np.max(np.abs(h))
            if not np.all(np.isfinite(h)) or np.max(np.abs(h - h.conj().T)) > tol.hermitian_rel * max(scale, 1e-300):
                raise NotHermitian(f"metric {self.name} is not Hermitian at z={z}")
            w = np.linalg.eigvalsh(h)
            if w[0] <= tol.pd_ratio * w[-1] or w[-1] <= 0:
                raise NotPositiveDefinite(f"metric {self.name} is not positive definite at z={z} (eigenvalues {w})")

    def to_source(self) -> str:
        head = f"metric {self.name} dim={self.n} rank={self.r}"
        if len(self.domain.blocks) == 1 and self.domain.blocks[0].kind != "entire":
            head += f" domain={self.domain.blocks[0].describe()}"
        if self.kahler_claimed:
            head += " kahler=true"
        if self.n == self.r and not self.is_tangent:
            head += " bundle=vector"
        if self.sample_box != 1.0:
            head += f" box={self.sample_box!r}"
        lines = [head]
        for a in range(self.r):
            for b in range(self.r):
                e = self.entries[a][b]
                if a == b or not e.is_zero():
                    lines.append(f"h[{a + 1}][{b + 1}] = {ex.to_source(e)}")
        return "\n".join(lines) + "\n"


def eval_jet(m: MetricField, point, check_domain: bool = True) -> MetricJet:
    """Exact jets of every metric entry at ``point``."""
    z = np.asarray(point, dtype=complex).reshape(m.n)
    if check_domain and not m.domain.contains(z):
        raise OutOfDomain(f"point {z} lies outside the chart domain {m.domain.describe()}")
    r, n = m.r, m.n
    h = np.empty((r, r), dtype=complex)
    dh = np.empty((n, r, r), dtype=complex)
    dhb = np.empty((n, r, r), dtype=complex)
    ddh = np.empty((n, n, r, r), dtype=complex)
    for a in range(r):
        for b in range(r):
            j = ex.jet(m.entries[a][b], z)
            h[a, b], dh[:, a, b], dhb[:, a, b], ddh[:, :, a, b] = j.value, j.dz, j.dzbar, j.dzdzbar
    return MetricJet(h, dh, dhb, ddh)


def fd_jet(m: MetricField, point, step: float | None = None, tol: Tolerances | None = None) -> MetricJet:
    """Jets by central differences in the real coordinates, one Richardson step.

    An independent cross-check for :func:`eval_jet`; only metric values are
    evaluated.
    """
    tol = resolve(tol)
    step = tol.fd_step if step is None else step
    z0 = np.asarray(point, dtype=complex).reshape(m.n)
    n = m.n
    dirs = np.concatenate([np.eye(n), 1j * np.eye(n)]).astype(complex)  # x_1..x_n, y_1..y_n

    def derivs(h: float):
        pts = [z0]
        for d in dirs:
            pts += [z0 + h * d, z0 - h * d]
        for a in range(2 * n):
            for b in range(2 * n):
                da, db = dirs[a], dirs[b]
                pts += [z0 + h * (da + db), z0 + h * (da - db), z0 - h * (da - db), z0 - h * (da + db)]
        vals = m.value(np.array(pts))
        v0 = vals[0]
        first = np.empty((2 * n,) + v0.shape, dtype=complex)
        k = 1
        for a in range(2 * n):
            first[a] = (vals[k] - vals[k + 1]) / (2 * h)
            k += 2
        second = np.empty((2 * n, 2 * n) + v0.shape, dtype=complex)
        for a in range(2 * n):
            for b in range(2 * n):
                second[a, b] = (vals[k] - vals[k + 1] - vals[k + 2] + vals[k + 3]) / (4 * h * h)
                k += 4
        return v0, first, second

    v0, f1, s1 = derivs(step)
    _, f2, s2 = derivs(step / 2)
    first = (4 * f2 - f1) / 3
    second = (4 * s2 - s1) / 3
    dx, dy = first[:n], first[n:]
    dz = 0.5 * (dx - 1j * dy)
    dzbar = 0.5 * (dx + 1j * dy)
    xx, xy, yx, yy = second[:n, :n], second[:n, n:], second[n:, :n], second[n:, n:]
    ddz = 0.25 * (xx + 1j * xy - 1j * yx + yy)
    return MetricJet(v0, dz, dzbar, ddz)


def jet_fd_discrepancy(m: MetricField, point, tol: Tolerances | None = None) -> float:
    """Relative max-norm difference between AD jets and finite-difference jets."""
    ad = eval_jet(m, point)
    fd = fd_jet(m, point, tol=tol)
    scale = max(ad.max_norm(), 1e-300)
    diff = max(
        np.max(np.abs(ad.h - fd.h)),
        np.max(np.abs(ad.dh - fd.dh)),
        np.max(np.abs(ad.dhbar - fd.dhbar)),
        np.max(np.abs(ad.ddh - fd.ddh)),
    )
    return float(diff / scale)


def build_metric(
    name: str,
    n: int,
    r: int,
    entries: dict,
    domain: Domain | None = None,
    *,
    params: tuple = (),
    kahler_claimed: bool = False,
    sample_box: float = 1.0,
    consistency_points: int = 5,
    seed: int = 0,
    source: str | None = None,
    tol: Tolerances | None = None,
    tangent: bool | None = None,
) -> MetricField:
    """Assemble a metric from a partial entry map ``(a, b) -> Expr``.

    Missing entries are completed by Hermitian symmetry, then set to zero off the
    diagonal; a missing diagonal entry raises :class:`MissingDiagonal`.  When
    both ``(a, b)`` and ``(b, a)`` are given they are compared at a few random
    points.
    """
    tol = resolve(tol)
    domain = domain or Domain.single("entire", n)
    pts = domain.sample(np.random.default_rng(seed), consistency_points, sample_box)
    grid: list[list[Expr | None]] = [[None] * r for _ in range(r)]
    for (a, b), e in entries.items():
        grid[a][b] = e
    for a in range(r):
        if grid[a][a] is None:
            raise MissingDiagonal(f"diagonal entry h[{a + 1}][{a + 1}] is missing")
        for b in range(a + 1, r):
            upper, lower = grid[a][b], grid[b][a]
            if upper is None and lower is None:
                grid[a][b] = grid[b][a] = Expr.const(0.0)
            elif lower is None:
                grid[b][a] = ex.conjugate(upper)
            elif upper is None:
                grid[a][b] = ex.conjugate(lower)
            else:
                try:
                    u = ex.evaluate(upper, pts)
                    lw = ex.evaluate(lower, pts)
                except SingularExpression:
                    continue
                scale = max(np.max(np.abs(u)), 1.0)
                if np.max(np.abs(u - np.conj(lw))) > 1e-10 * scale:
                    raise NonHermitianSpec(f"h[{a + 1}][{b + 1}] and h[{b + 1}][{a + 1}] are not conjugate")
    return MetricField(
        name=name,
        n=n,
        r=r,
        entries=tuple(tuple(row) for row in grid),
        domain=domain,
        params=params,
        kahler_claimed=kahler_claimed,
        sample_box=sample_box,
        source=source,
        tangent=tangent,
    )


def parse_metric(source: str, tol: Tolerances | None = None) -> MetricField:
    """Build a :class:`MetricField` from ``.hmet`` text."""
    src = parse_source(source)
    opts = dict(src.options)
    try:
        domain = Domain.parse(opts.pop("domain", "entire"), src.dim)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None
    kahler = opts.pop("kahler", "false").lower() in ("true", "yes", "1")
    box = float(opts.pop("box", 1.0))
    kind = opts.pop("bundle", "tangent" if src.dim == src.rank else "vector")
    if kind not in ("tangent", "vector") or (kind == "tangent" and src.dim != src.rank):
        raise ParseError(f"bundle={kind} is not valid for dim={src.dim} rank={src.rank}", 1, 1)
    if opts:
        raise ParseError(f"unknown header option(s): {', '.join(sorted(opts))}", 1, 1)
    entries = {k: e for k, (e, _tok) in src.entries.items()}
    return build_metric(
        src.name,
        src.dim,
        src.rank,
        entries,
        domain,
        kahler_claimed=kahler,
        sample_box=box,
        source=source,
        tol=tol,
        tangent=kind == "tangent",
    )


def load_metric(path) -> MetricField:
    with open(path, encoding="utf-8") as fh:
        return parse_metric(fh.read())
