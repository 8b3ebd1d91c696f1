"""Built-in chart metrics and the textual selector used by the CLI.

Selectors look like ``fubini_study:2``, ``fs_perturbed:2,0.05``,
``product(fubini_study:1, poincare_disc:1)`` or
``conformal(fubini_study:2, "1 + absq(z1)")``; a path ending in ``.hmet`` loads a
metric file.
"""

from __future__ import annotations

import re

import numpy as np

from rcpos.dsl import expr as ex
from rcpos.dsl.expr import Expr
from rcpos.dsl.metric import Domain, MetricField, build_metric, load_metric
from rcpos.dsl.parser import parse_expression
from rcpos.errors import BadParameter, NotHermitian, NotPositiveDefinite, ParseError, UnknownCatalogEntry


def _norm_sq(n: int) -> Expr:
    s = ex.absq(Expr.z(0))
    for k in range(1, n):
        s = s + ex.absq(Expr.z(k))
    return s


def _check_dim(n) -> int:
    try:
        n = int(n)
    except (TypeError, ValueError):
        raise BadParameter(f"dimension must be an integer, got {n!r}") from None
    if n < 1:
        raise BadParameter(f"dimension must be at least 1, got {n}")
    return n


def flat(n=1) -> MetricField:
    n = _check_dim(n)
    entries = {(a, a): Expr.const(1.0) for a in range(n)}
    return build_metric(f"flat_{n}", n, n, entries, params=(("n", n),), kahler_claimed=True)


def fubini_study(n=1) -> MetricField:
    """Tangent metric ``g = dd-bar log(1 + |z|^2)`` on the affine chart of P^n."""
    n = _check_dim(n)
    a = 1 + _norm_sq(n)
    entries = {}
    for i in range(n):
        for j in range(n):
            term = -(Expr.zbar(i) * Expr.z(j)) * a**-2
            entries[(i, j)] = a**-1 + term if i == j else term
    return build_metric(f"fubini_study_{n}", n, n, entries, params=(("n", n),), kahler_claimed=True)


def poincare_disc(n=1) -> MetricField:
    """Tangent metric ``g = -dd-bar log(1 - |z|^2)`` on the unit ball."""
    n = _check_dim(n)
    b = 1 - _norm_sq(n)
    entries = {}
    for i in range(n):
        for j in range(n):
            term = Expr.zbar(i) * Expr.z(j) * b**-2
            entries[(i, j)] = b**-1 + term if i == j else term
    dom = Domain.single("ball", n, 1.0)
    return build_metric(
        f"poincare_disc_{n}", n, n, entries, dom, params=(("n", n),), kahler_claimed=True, sample_box=0.8
    )


def hopf(n=2) -> MetricField:
    """``g = delta / |z|^2`` on the shell 1/2 < |z| < 2 (descends to a Hopf manifold)."""
    n = _check_dim(n)
    inv = _norm_sq(n) ** -1
    entries = {(i, i): inv for i in range(n)}
    dom = Domain.single("shell", n, 2.0, 0.5)
    return build_metric(f"hopf_{n}", n, n, entries, dom, params=(("n", n),), kahler_claimed=False)


def fs_perturbed(n=2, eps=0.05) -> MetricField:
    """Fubini-Study plus ``eps |z|^2 delta``; not Kahler once ``n >= 2`` and ``eps != 0``."""
    n = _check_dim(n)
    try:
        eps = float(eps)
    except (TypeError, ValueError):
        raise BadParameter(f"eps must be a number, got {eps!r}") from None
    if not np.isfinite(eps) or eps < 0:
        # negative eps loses positivity for large |z| on the entire chart
        raise BadParameter(f"eps must be finite and non-negative, got {eps}")
    base = fubini_study(n)
    bump = Expr.const(eps) * _norm_sq(n)
    entries = {}
    for i in range(n):
        for j in range(n):
            e = base.entries[i][j]
            entries[(i, j)] = e + bump if i == j else e
    return build_metric(
        f"fs_perturbed_{n}",
        n,
        n,
        entries,
        params=(("n", n), ("eps", eps)),
        kahler_claimed=(eps == 0.0 or n == 1),
    )


def product(m1: MetricField, m2: MetricField) -> MetricField:
    """Block-diagonal metric on the product chart; the second factor's
    coordinates are renumbered after the first's."""
    n, r = m1.n + m2.n, m1.r + m2.r
    entries = {}
    for a in range(m1.r):
        for b in range(m1.r):
            entries[(a, b)] = m1.entries[a][b]
    for a in range(m2.r):
        for b in range(m2.r):
            entries[(m1.r + a, m1.r + b)] = ex.shift_variables(m2.entries[a][b], m1.n)
    dom = Domain(m1.domain.blocks + m2.domain.blocks)
    return build_metric(
        f"product_{m1.name}__{m2.name}",
        n,
        r,
        entries,
        dom,
        params=(("m1", m1.name), ("m2", m2.name)),
        kahler_claimed=m1.kahler_claimed and m2.kahler_claimed and m1.is_tangent and m2.is_tangent,
        sample_box=min(m1.sample_box, m2.sample_box),
        tangent=m1.is_tangent and m2.is_tangent,
    )


def conformal(m: MetricField, factor) -> MetricField:
    """``factor * m`` for a real, positive factor expression in the same coordinates."""
    if isinstance(factor, str):
        try:
            factor_expr = parse_expression(factor, m.n)
        except ParseError as exc:
            raise BadParameter(f"bad conformal factor: {exc}") from None
    else:
        factor_expr = factor
    pts = m.sample_points(20, seed=0)
    vals = ex.evaluate(factor_expr, pts)
    if np.max(np.abs(vals.imag)) > 1e-12 * max(1.0, np.max(np.abs(vals))) or np.min(vals.real) <= 0:
        raise BadParameter("conformal factor must be real and positive on the chart")
    entries = {(a, b): factor_expr * m.entries[a][b] for a in range(m.r) for b in range(m.r)}
    out = build_metric(
        f"conformal_{m.name}",
        m.n,
        m.r,
        entries,
        m.domain,
        params=(("m", m.name), ("factor", ex.to_source(factor_expr))),
        kahler_claimed=m.kahler_claimed and m.n == 1,
        sample_box=m.sample_box,
        tangent=m.is_tangent,
    )
    return out


def rank2_test(n=2) -> MetricField:
    """Rank-2 bundle metric ``h = delta + z_a conj(z_b)`` over a 2-dim base
    (off-diagonal entry ``z1 conj(z2)``); not the tangent metric."""
    n = _check_dim(n)
    if n != 2:
        raise BadParameter("rank2_test lives over a 2-dimensional base")
    entries = {(a, b): (1 + Expr.z(a) * Expr.zbar(b)) if a == b else Expr.z(a) * Expr.zbar(b) for a in range(2) for b in range(2)}
    return build_metric("rank2_test", 2, 2, entries, params=(("n", 2),), tangent=False)


def griffiths_rank2(eps=0.2) -> MetricField:
    """``O(1) x C^2`` over the chart of P^2 plus ``eps z_a conj(z_b) / (1 + |z|^2)^2``.

    Griffiths positive for small ``eps`` on the sampling box (checked numerically,
    not proven).
    """
    try:
        eps = float(eps)
    except (TypeError, ValueError):
        raise BadParameter(f"eps must be a number, got {eps!r}") from None
    if not np.isfinite(eps) or eps < 0:
        raise BadParameter(f"eps must be finite and non-negative, got {eps}")
    a = 1 + _norm_sq(2)
    entries = {}
    for i in range(2):
        for j in range(2):
            bump = Expr.const(eps) * Expr.z(i) * Expr.zbar(j) * a**-2
            entries[(i, j)] = a**-1 + bump if i == j else bump
    return build_metric("griffiths_rank2", 2, 2, entries, params=(("eps", eps),), tangent=False)


CATALOG = {
    "fubini_study": (fubini_study, "n", "Fubini-Study tangent metric on the affine chart of P^n"),
    "flat": (flat, "n", "Euclidean metric on C^n"),
    "poincare_disc": (poincare_disc, "n", "Bergman-type metric -dd-bar log(1-|z|^2) on the unit ball"),
    "product": (product, "m1, m2", "block-diagonal product of two catalog metrics"),
    "hopf": (hopf, "n", "delta/|z|^2 on the shell 1/2 < |z| < 2 (non-Kahler)"),
    "conformal": (conformal, "m, factor", "metric multiplied by a positive factor expression"),
    "fs_perturbed": (fs_perturbed, "n, eps", "Fubini-Study plus eps*|z|^2*delta (non-Kahler for n >= 2)"),
    "rank2_test": (rank2_test, "n=2", "rank-2 bundle metric delta + z_a conj(z_b) over C^2"),
    "griffiths_rank2": (griffiths_rank2, "eps", "O(1) x C^2 over P^2 plus a small positive perturbation"),
}


def catalog(name: str, *args, **params) -> MetricField:
    """Build a catalog metric, e.g. ``catalog("fubini_study", n=2)``."""
    if name not in CATALOG:
        raise UnknownCatalogEntry(f"unknown catalog metric {name!r}; known: {', '.join(sorted(CATALOG))}")
    builder = CATALOG[name][0]
    try:
        m = builder(*args, **params)
    except TypeError as exc:
        raise BadParameter(f"bad parameters for {name}: {exc}") from None
    try:
        m.validate(m.sample_points(10, seed=0))
    except (NotHermitian, NotPositiveDefinite) as exc:
        raise BadParameter(f"{name} is not a metric with these parameters: {exc}") from None
    return m


# ---------------------------------------------------------------------------
# selector strings
# ---------------------------------------------------------------------------

_ATOM = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*")


def _split_args(text: str) -> list[str]:
    parts, depth, cur, quote = [], 0, [], False
    for ch in text:
        if ch == '"':
            quote = not quote
        if not quote:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append("".join(cur))
                cur = []
                continue
        cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _scalar(text: str):
    text = text.strip()
    if text.startswith('"') and text.endswith('"'):
        return text[1:-1]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def resolve_metric(selector: str) -> MetricField:
    """Resolve a CLI metric selector or ``.hmet`` path."""
    sel = selector.strip()
    if sel.endswith(".hmet"):
        return load_metric(sel)
    m = _ATOM.match(sel)
    if not m:
        raise UnknownCatalogEntry(f"cannot parse metric selector {selector!r}")
    name, rest = m.group(1), sel[m.end() :]
    if name in ("product", "conformal"):
        if not (rest.startswith("(") and rest.endswith(")")):
            raise BadParameter(f"{name} takes arguments in parentheses, e.g. {name}(fubini_study:1, flat:1)")
        args = _split_args(rest[1:-1])
        if name == "product":
            if len(args) != 2:
                raise BadParameter("product takes exactly two metrics")
            return catalog("product", resolve_metric(args[0]), resolve_metric(args[1]))
        if len(args) != 2:
            raise BadParameter("conformal takes a metric and a factor expression")
        return catalog("conformal", resolve_metric(args[0]), str(_scalar(args[1])))
    if not rest:
        return catalog(name)
    if not rest.startswith(":"):
        raise BadParameter(f"cannot parse metric selector {selector!r}")
    args, kwargs = [], {}
    for piece in _split_args(rest[1:]):
        if "=" in piece:
            k, v = piece.split("=", 1)
            kwargs[k.strip()] = _scalar(v)
        else:
            args.append(_scalar(piece))
    return catalog(name, *args, **kwargs)


def describe_catalog() -> list[tuple[str, str, str]]:
    return [(name, sig, doc) for name, (_f, sig, doc) in sorted(CATALOG.items())]


__all__ = [
    "CATALOG",
    "catalog",
    "resolve_metric",
    "describe_catalog",
    "flat",
    "fubini_study",
    "poincare_disc",
    "hopf",
    "fs_perturbed",
    "product",
    "conformal",
    "rank2_test",
    "griffiths_rank2",
]
