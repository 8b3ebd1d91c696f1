"""Central tolerance record.

Every numerical operation takes an optional ``tol`` argument; when omitted it
falls back to :data:`DEFAULT_TOLERANCES`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian_rel: float = 1e-12
    tensor_symmetry_rel: float = 1e-10
    unit_norm: float = 1e-12
    # Jacobi eigensolver
    jacobi_offdiag_rel: float = 1e-13
    jacobi_max_sweeps: int = 100
    # metric fields
    pd_ratio: float = 1e-12
    singular_division: float = 1e-14
    fd_step: float = 1e-4
    fd_rel: float = 1e-6
    # curvature engine
    kahler_rel: float = 1e-8
    # bundle algebra
    rank_cap: int = 256
    frame_pivot: float = 1e-10
    gauge: float = 1e-8
    cross_check: float = 1e-6
    # positivity certifier
    margin: float = 1e-7
    zero_band_rel: float = 1e-9
    lemma_rel: float = 1e-6
    monotonicity: float = 1e-8
    grid_agreement: float = 1e-4
    # extra searches (4x restarts each) after an inconclusive verdict
    escalate_rounds: int = 0

    def replace(self, **overrides) -> "Tolerances":
        return dataclasses.replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT_TOLERANCES if tol is None else tol
