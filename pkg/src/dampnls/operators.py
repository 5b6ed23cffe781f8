"""Linearized operators about the ground state.

``L+ = -d^2 + 1 - 5 Q^4`` and ``L- = -d^2 + 1 - Q^4`` act on real fields,
matrix-free through spectral differentiation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import _check_finite
from .groundstate import GroundStateTable


@dataclass(frozen=True)
class LinearizedPair:
    tables: GroundStateTable
    v_plus: np.ndarray = field(init=False, repr=False)
    v_minus: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        q4 = self.tables.Q ** 4
        object.__setattr__(self, "v_minus", q4)
        object.__setattr__(self, "v_plus", 5.0 * q4)

    @property
    def grid(self):
        return self.tables.grid

    def _kinetic(self, f):
        f = _check_finite(f)
        return -self.grid.derivative(f, 2) + f

    def lplus(self, f: np.ndarray) -> np.ndarray:
        return self._kinetic(f) - self.v_plus * f

    def lminus(self, f: np.ndarray) -> np.ndarray:
        return self._kinetic(f) - self.v_minus * f


def apply_lplus(tables: GroundStateTable, f: np.ndarray) -> np.ndarray:
    return LinearizedPair(tables).lplus(f)


def apply_lminus(tables: GroundStateTable, f: np.ndarray) -> np.ndarray:
    return LinearizedPair(tables).lminus(f)


def identity_residuals(tables: GroundStateTable) -> list[tuple[str, float]]:
    """L2 norms of the five algebraic identities satisfied by ``Q``."""
    op = LinearizedPair(tables)
    g = tables.grid
    t = tables
    return [
        ("L+ Q_d + 2 Q", g.l2_norm(op.lplus(t.Q_d) + 2.0 * t.Q)),
        ("L+ Q_y", g.l2_norm(op.lplus(t.Q_y))),
        ("L- Q", g.l2_norm(op.lminus(t.Q))),
        ("L- yQ + 2 Q_y", g.l2_norm(op.lminus(t.yQ) + 2.0 * t.Q_y)),
        ("L- y^2 Q + 4 Q_d", g.l2_norm(op.lminus(t.y2Q) + 4.0 * t.Q_d)),
    ]
