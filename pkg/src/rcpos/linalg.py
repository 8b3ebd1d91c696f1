"""Small dense complex linear algebra.

Matrices here are tiny (base dimension and bundle rank are at most ~8), so the
eigensolver is a plain cyclic Jacobi iteration written for clarity rather than
speed.  Hot loops in the optimizers call LAPACK through :func:`numpy.linalg.eigh`
instead; :func:`hermitian_eig` is the reference path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rcpos.config import Tolerances, resolve
from rcpos.errors import DimensionMismatch, NoConvergence, NotHermitian


def hermitian_residual(m: np.ndarray) -> float:
    """Relative distance of ``m`` from its conjugate transpose."""
    m = np.asarray(m)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)) / scale)


def check_hermitian(m: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    tol = resolve(tol)
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotHermitian("matrix has non-finite entries")
    res = hermitian_residual(m)
    if res > tol.hermitian_rel:
        raise NotHermitian(f"matrix is not Hermitian (relative residual {res:.3e})")
    return m


def hermitian_eig(
    m: np.ndarray, tol: Tolerances | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with real eigenvalues in ascending order and the
    columns of the unitary ``V`` the matching eigenvectors, so ``m @ V = V @ diag``.

    Raises :class:`NotHermitian` if ``m`` is not Hermitian to the configured
    tolerance and :class:`NoConvergence` if the sweep cap is hit.
    """
    tol = resolve(tol)
    a = check_hermitian(m, tol).copy()
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    threshold = tol.jacobi_offdiag_rel * norm

    def off_norm(x: np.ndarray) -> float:
        return float(np.linalg.norm(x - np.diag(np.diag(x))))

    sweeps = 0
    while off_norm(a) > threshold:
        if sweeps >= tol.jacobi_max_sweeps:
            raise NoConvergence(f"Jacobi iteration did not converge in {sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # phase-fix column q, then a real plane rotation
                u = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ u
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sample_unit_sphere(dim: int, count: int, seed: int) -> np.ndarray:
    """Uniform samples on the unit sphere of C^dim, one per row.

    Gaussian components normalized; deterministic for a fixed seed.
    """
    if dim < 1 or count < 1:
        raise ValueError("dim and count must both be at least 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def unit_vector(v: np.ndarray, metric: np.ndarray | None = None) -> np.ndarray:
    """Rescale ``v`` to unit length for ``metric`` (rows-lowered convention
    ``|v|^2 = sum metric[i, j] v^i conj(v^j)``)."""
    v = np.asarray(v, dtype=complex)
    nrm2 = np.real(v @ (metric if metric is not None else np.eye(v.size)) @ v.conj())
    if nrm2 <= 0:
        raise ValueError("cannot normalize a zero vector")
    return v / np.sqrt(nrm2)


def orthonormal_frame(metric: np.ndarray) -> np.ndarray:
    """Matrix ``P`` with ``P.T @ metric @ P.conj() = I``.

    Columns of ``P`` are the components of a metric-orthonormal frame in the
    lowered-index convention ``metric[i, j] = h(e_i, e_j)``.
    """
    metric = np.asarray(metric, dtype=complex)
    # metric = L L^*  =>  L^{-1} metric L^{-*} = I with P = L^{-T}
    lower = np.linalg.cholesky(metric)
    return np.linalg.inv(lower).T


@dataclass(frozen=True)
class Tensor4:
    """Components ``R[i, j, a, b]`` of a (1,1)-form valued Hermitian form.

    Base indices ``i, j`` run to ``n``; bundle indices ``a, b`` run to ``r``.
    """

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.ndim != 4 or d.shape[0] != d.shape[1] or d.shape[2] != d.shape[3]:
            raise DimensionMismatch(f"bad Tensor4 shape {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def r(self) -> int:
        return self.data.shape[2]

    def conjugate_symmetry_residual(self) -> float:
        d = self.data
        scale = np.max(np.abs(d)) if d.size else 0.0
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(d - np.conj(d.transpose(1, 0, 3, 2)))) / scale)

    def is_conjugate_symmetric(self, tol: Tolerances | None = None) -> bool:
        return self.conjugate_symmetry_residual() <= resolve(tol).tensor_symmetry_rel

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def contract(self, v: np.ndarray, a: np.ndarray) -> float:
        """R(v, v-bar, a, a-bar)."""
        return float(np.real(np.einsum("ijab,i,j,a,b->", self.data, v, np.conj(v), a, np.conj(a))))

    def base_form(self, a: np.ndarray) -> np.ndarray:
        """Hermitian matrix ``sum_ab R[i, j, a, b] a^a conj(a^b)`` on base directions."""
        return np.einsum("ijab,a,b->ij", self.data, a, np.conj(a))

    def bundle_form(self, v: np.ndarray) -> np.ndarray:
        """Hermitian matrix ``sum_ij R[i, j, a, b] v^i conj(v^j)`` on bundle directions."""
        return np.einsum("ijab,i,j->ab", self.data, v, np.conj(v))

    def change_frames(self, base: np.ndarray | None = None, bundle: np.ndarray | None = None) -> "Tensor4":
        """Components in new frames whose members are the columns of ``base`` / ``bundle``."""
        d = self.data
        if base is not None:
            d = np.einsum("klab,ki,lj->ijab", d, base, np.conj(base))
        if bundle is not None:
            d = np.einsum("ijcd,ca,db->ijab", d, bundle, np.conj(bundle))
        return Tensor4(d)

    def __neg__(self) -> "Tensor4":
        return Tensor4(-self.data)

    def __mul__(self, c: float) -> "Tensor4":
        return Tensor4(self.data * c)

    __rmul__ = __mul__
