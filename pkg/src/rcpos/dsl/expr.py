"""Expression trees in z and conj(z) with forward-mode Wirtinger differentiation.

``z`` and ``conj(z)`` are treated as independent variables, so one forward pass
yields the value, all ``d/dz^i``, all ``d/dzbar^j`` and the mixed second
derivatives ``d^2/dz^i dzbar^j`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rcpos.errors import SingularExpression

SINGULAR_THRESHOLD = 1e-14

LEAF_OPS = {"const", "z", "zbar"}
UNARY_OPS = {"neg", "log", "exp", "absq", "conj"}
BINARY_OPS = {"add", "sub", "mul", "div"}


@dataclass(frozen=True)
class Expr:
    """One node of an expression tree.

    ``arg`` holds the payload of leaves and of ``pow``: the constant for
    ``const``, the zero-based coordinate index for ``z``/``zbar``, the integer
    exponent for ``pow``.
    """

    op: str
    children: tuple["Expr", ...] = ()
    arg: complex | int | None = None

    # convenience constructors -------------------------------------------------
    @staticmethod
    def const(c) -> "Expr":
        return Expr("const", (), complex(c))

    @staticmethod
    def z(i: int) -> "Expr":
        return Expr("z", (), int(i))

    @staticmethod
    def zbar(i: int) -> "Expr":
        return Expr("zbar", (), int(i))

    def __add__(self, other) -> "Expr":
        return Expr("add", (self, _lift(other)))

    def __radd__(self, other) -> "Expr":
        return Expr("add", (_lift(other), self))

    def __sub__(self, other) -> "Expr":
        return Expr("sub", (self, _lift(other)))

    def __rsub__(self, other) -> "Expr":
        return Expr("sub", (_lift(other), self))

    def __mul__(self, other) -> "Expr":
        return Expr("mul", (self, _lift(other)))

    def __rmul__(self, other) -> "Expr":
        return Expr("mul", (_lift(other), self))

    def __truediv__(self, other) -> "Expr":
        return Expr("div", (self, _lift(other)))

    def __neg__(self) -> "Expr":
        return Expr("neg", (self,))

    def __pow__(self, k: int) -> "Expr":
        if int(k) != k:
            raise ValueError("only integer powers are supported")
        return Expr("pow", (self,), int(k))

    def max_variable(self) -> int:
        """Largest coordinate index used, or -1 for a constant expression."""
        if self.op in ("z", "zbar"):
            return int(self.arg)
        return max((c.max_variable() for c in self.children), default=-1)

    def is_zero(self) -> bool:
        return self.op == "const" and self.arg == 0


def _lift(x) -> Expr:
    return x if isinstance(x, Expr) else Expr.const(x)


def log(e: Expr) -> Expr:
    return Expr("log", (e,))


def exp(e: Expr) -> Expr:
    return Expr("exp", (e,))


def absq(e: Expr) -> Expr:
    return Expr("absq", (e,))


def conj_node(e: Expr) -> Expr:
    return Expr("conj", (e,))


def conjugate(e: Expr) -> Expr:
    """Tree for the complex conjugate of ``e`` (no ``conj`` node left at the top)."""
    if e.op == "const":
        return Expr.const(np.conj(e.arg))
    if e.op == "z":
        return Expr.zbar(e.arg)
    if e.op == "zbar":
        return Expr.z(e.arg)
    if e.op == "conj":
        return e.children[0]
    if e.op == "absq":
        return e
    return Expr(e.op, tuple(conjugate(c) for c in e.children), e.arg)


def shift_variables(e: Expr, offset: int) -> Expr:
    """Rename ``z_k -> z_{k+offset}`` throughout."""
    if e.op in ("z", "zbar"):
        return Expr(e.op, (), int(e.arg) + offset)
    if not e.children:
        return e
    return Expr(e.op, tuple(shift_variables(c, offset) for c in e.children), e.arg)


# ---------------------------------------------------------------------------
# Values (vectorized over leading point axes)
# ---------------------------------------------------------------------------


def _check_nonsingular(x, what: str):
    if np.any(np.abs(x) < SINGULAR_THRESHOLD):
        raise SingularExpression(f"{what} of a value smaller than {SINGULAR_THRESHOLD:g} in magnitude")


def evaluate(e: Expr, z: np.ndarray) -> np.ndarray:
    """Value of ``e`` at points ``z`` of shape ``(..., n)``."""
    z = np.asarray(z, dtype=complex)
    op = e.op
    if op == "const":
        return np.full(z.shape[:-1], e.arg, dtype=complex)
    if op == "z":
        return z[..., e.arg]
    if op == "zbar":
        return np.conj(z[..., e.arg])
    vals = [evaluate(c, z) for c in e.children]
    if op == "add":
        return vals[0] + vals[1]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "div":
        _check_nonsingular(vals[1], "division")
        return vals[0] / vals[1]
    if op == "neg":
        return -vals[0]
    if op == "pow":
        k = e.arg
        if k < 0:
            _check_nonsingular(vals[0], "negative power")
        return vals[0] ** k
    if op == "log":
        _check_nonsingular(vals[0], "logarithm")
        return np.log(vals[0])
    if op == "exp":
        return np.exp(vals[0])
    if op == "absq":
        return vals[0] * np.conj(vals[0])
    if op == "conj":
        return np.conj(vals[0])
    raise ValueError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# Wirtinger jets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WirtingerJet:
    """Value and Wirtinger derivatives up to the mixed second order.

    ``dzdzbar[i, j]`` is ``d^2 f / dz^i dzbar^j``.  All arrays may carry the same
    leading batch shape.
    """

    value: np.ndarray
    dz: np.ndarray
    dzbar: np.ndarray
    dzdzbar: np.ndarray = field(repr=False)

    @staticmethod
    def constant(c, batch: tuple, n: int) -> "WirtingerJet":
        return WirtingerJet(
            np.full(batch, c, dtype=complex),
            np.zeros(batch + (n,), dtype=complex),
            np.zeros(batch + (n,), dtype=complex),
            np.zeros(batch + (n, n), dtype=complex),
        )

    def __add__(self, o: "WirtingerJet") -> "WirtingerJet":
        return WirtingerJet(self.value + o.value, self.dz + o.dz, self.dzbar + o.dzbar, self.dzdzbar + o.dzdzbar)

    def __sub__(self, o: "WirtingerJet") -> "WirtingerJet":
        return WirtingerJet(self.value - o.value, self.dz - o.dz, self.dzbar - o.dzbar, self.dzdzbar - o.dzdzbar)

    def __neg__(self) -> "WirtingerJet":
        return WirtingerJet(-self.value, -self.dz, -self.dzbar, -self.dzdzbar)

    def __mul__(self, o: "WirtingerJet") -> "WirtingerJet":
        f, g = self, o
        fv, gv = f.value[..., None], g.value[..., None]
        mixed = (
            f.dzdzbar * gv[..., None]
            + fv[..., None] * g.dzdzbar
            + f.dz[..., :, None] * g.dzbar[..., None, :]
            + g.dz[..., :, None] * f.dzbar[..., None, :]
        )
        return WirtingerJet(f.value * g.value, f.dz * gv + fv * g.dz, f.dzbar * gv + fv * g.dzbar, mixed)

    def chain(self, d0, d1, d2) -> "WirtingerJet":
        """Compose with a holomorphic scalar function given its value and first
        two derivatives evaluated at ``self.value``."""
        d0, d1, d2 = np.asarray(d0), np.asarray(d1), np.asarray(d2)
        d1e, d2e = d1[..., None], d2[..., None, None]
        mixed = d1e[..., None] * self.dzdzbar + d2e * self.dz[..., :, None] * self.dzbar[..., None, :]
        return WirtingerJet(d0, d1e * self.dz, d1e * self.dzbar, mixed)

    def conj(self) -> "WirtingerJet":
        return WirtingerJet(
            np.conj(self.value),
            np.conj(self.dzbar),
            np.conj(self.dz),
            np.conj(np.swapaxes(self.dzdzbar, -1, -2)),
        )

    def power(self, k: int) -> "WirtingerJet":
        v = self.value
        if k == 0:
            return WirtingerJet.constant(1.0, v.shape, self.dz.shape[-1])
        if k < 0:
            _check_nonsingular(v, "negative power")
        return self.chain(v**k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2) if k != 1 else np.zeros_like(v))

    def reciprocal(self) -> "WirtingerJet":
        return self.power(-1)


def jet(e: Expr, z: np.ndarray) -> WirtingerJet:
    """Exact Wirtinger jet of ``e`` at points ``z`` of shape ``(..., n)``."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    batch = z.shape[:-1]
    return _jet(e, z, n, batch)


def _jet(e: Expr, z, n, batch) -> WirtingerJet:
    op = e.op
    if op == "const":
        return WirtingerJet.constant(e.arg, batch, n)
    if op in ("z", "zbar"):
        k = e.arg
        unit = np.zeros(batch + (n,), dtype=complex)
        unit[..., k] = 1.0
        zero = np.zeros(batch + (n,), dtype=complex)
        mixed = np.zeros(batch + (n, n), dtype=complex)
        if op == "z":
            return WirtingerJet(z[..., k].copy(), unit, zero, mixed)
        return WirtingerJet(np.conj(z[..., k]), zero, unit, mixed)
    kids = [_jet(c, z, n, batch) for c in e.children]
    if op == "add":
        return kids[0] + kids[1]
    if op == "sub":
        return kids[0] - kids[1]
    if op == "mul":
        return kids[0] * kids[1]
    if op == "div":
        _check_nonsingular(kids[1].value, "division")
        return kids[0] * kids[1].reciprocal()
    if op == "neg":
        return -kids[0]
    if op == "pow":
        return kids[0].power(e.arg)
    if op == "log":
        v = kids[0].value
        _check_nonsingular(v, "logarithm")
        return kids[0].chain(np.log(v), 1.0 / v, -1.0 / v**2)
    if op == "exp":
        ev = np.exp(kids[0].value)
        return kids[0].chain(ev, ev, ev)
    if op == "absq":
        return kids[0] * kids[0].conj()
    if op == "conj":
        return kids[0].conj()
    raise ValueError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _fmt_const(c: complex) -> str:
    c = complex(c)
    if c.imag == 0.0:
        return repr(float(c.real)) if c.real >= 0 else f"({float(c.real)!r})"
    if c.real == 0.0:
        return f"({float(c.imag)!r}*I)"
    return f"({float(c.real)!r} + {float(c.imag)!r}*I)"


def to_source(e: Expr) -> str:
    """Render ``e`` in the metric language; parsing the output gives back an
    expression with identical values."""
    return _src(e, 0)


def _src(e: Expr, parent: int) -> str:
    op = e.op
    if op == "const":
        return _fmt_const(e.arg)
    if op == "z":
        return f"z{e.arg + 1}"
    if op == "zbar":
        return f"conj(z{e.arg + 1})"
    if op in ("log", "exp", "absq", "conj"):
        return f"{op}({_src(e.children[0], 0)})"
    prec = _PREC[op]
    if op == "neg":
        text = f"-{_src(e.children[0], prec)}"
    elif op == "pow":
        text = f"{_src(e.children[0], prec + 1)}^{e.arg}"
    else:
        sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
        # left-associative: parenthesize a right operand of equal precedence
        text = f"{_src(e.children[0], prec)} {sym} {_src(e.children[1], prec + 1)}"
    return f"({text})" if prec < parent else text
