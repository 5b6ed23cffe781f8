"""Quintic ground state ``Q`` and the profiles built from it.

``Q(x) = 3**(1/4) * sech(2x)**(1/2)`` solves ``-Q'' + Q = Q**5``.  It only
decays like ``exp(-|x|)``, so on a torus of half-width 16 the tails still
sit near 1e-7.  Sampling the raw closed form would leave a kink at the seam
that spectral derivatives amplify; every table profile is therefore the
periodic sum of the closed form over its images, which is smooth on the
torus and agrees with the real-line function to the size of the tails.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import solve_ivp

from .grid import Grid

Q0 = 3.0 ** 0.25
MASS_SQ = math.sqrt(3.0) * math.pi / 2.0
GRAD_SQ = MASS_SQ / 2.0
SIXTH_POWER = 3.0 * GRAD_SQ
YQ_SQ = math.sqrt(3.0) * math.pi ** 3 / 32.0
G_STAR = math.pi ** 2 / 4.0


def q_closed_form(x):
    """``3**(1/4) sech(2x)**(1/2)``, overflow-safe for large ``|x|``."""
    ax = np.abs(np.asarray(x, dtype=float))
    # sech(2x) = 2 e^{-2|x|} / (1 + e^{-4|x|})
    e = np.exp(-2.0 * ax)
    return Q0 * np.sqrt(2.0 * e / (1.0 + e * e))


def qy_closed_form(x):
    x = np.asarray(x, dtype=float)
    return -np.tanh(2.0 * x) * q_closed_form(x)


def _profiles(y: np.ndarray) -> dict[str, np.ndarray]:
    q = q_closed_form(y)
    qy = qy_closed_form(y)
    qyy = q - q ** 5
    qd = 0.5 * q + y * qy
    qdd = 0.5 * qd + 1.5 * y * qy + y * y * qyy
    return {"Q": q, "Q_y": qy, "Q_d": qd, "Q_dd": qdd, "yQ": y * q, "y2Q": y * y * q}


def periodized_profiles(grid: Grid) -> dict[str, np.ndarray]:
    """Closed-form profiles summed over periodic images until the tails vanish."""
    period = grid.length
    # images beyond |y| ~ 40 contribute below 1e-16 even after the y**2 factor
    n_img = int(math.ceil(45.0 / period))
    out = {}
    for shift in range(-n_img, n_img + 1):
        for key, val in _profiles(grid.x + shift * period).items():
            out[key] = out.get(key, 0.0) + val
    return out


@dataclass(frozen=True)
class GroundStateTable:
    grid: Grid
    Q: np.ndarray
    Q_y: np.ndarray
    Q_d: np.ndarray
    Q_dd: np.ndarray
    yQ: np.ndarray
    y2Q: np.ndarray
    W: np.ndarray
    nu: float
    mass_sq: float
    grad_sq: float
    yq_sq: float
    sixth_power: float

    @property
    def energy(self) -> float:
        return 0.5 * self.grad_sq - self.sixth_power / 6.0

    @property
    def grad_norm(self) -> float:
        return math.sqrt(self.grad_sq)

    def constants(self) -> dict[str, float]:
        return {
            "nu": self.nu,
            "mass_sq": self.mass_sq,
            "grad_sq": self.grad_sq,
            "yq_sq": self.yq_sq,
            "sixth_power": self.sixth_power,
            "energy": self.energy,
            "qd_sq": self.grid.inner(self.Q_d, self.Q_d),
            "q_qdd": self.grid.inner(self.Q, self.Q_dd),
        }


def build_tables(grid: Grid, periodized: bool = True) -> GroundStateTable:
    """Profiles and constants on ``grid``.

    ``periodized=False`` samples the real-line closed forms instead; those are
    not smooth across the seam, so they suit pairings but not spectral
    derivatives.
    """
    if float(q_closed_form(grid.half_width)) > 1e-6:
        raise ValueError(f"half_width {grid.half_width} too small to hold the ground state")
    p = periodized_profiles(grid) if periodized else _profiles(np.array(grid.x))
    Q, Q_dd = p["Q"], p["Q_dd"]
    q_qdd = grid.inner(Q, Q_dd)
    if abs(q_qdd) < 1e-12:
        raise ValueError("(Q, Q_dd) vanishes on this grid; nu is undefined")
    nu = -grid.inner(p["y2Q"], Q_dd) / q_qdd
    for arr in p.values():
        arr.flags.writeable = False
    W = p["y2Q"] + nu * Q
    W.flags.writeable = False
    return GroundStateTable(
        grid=grid,
        W=W,
        nu=nu,
        mass_sq=grid.inner(Q, Q),
        grad_sq=grid.inner(p["Q_y"], p["Q_y"]),
        yq_sq=grid.inner(p["yQ"], p["yQ"]),
        sixth_power=float(grid.integrate(Q ** 6)),
        **p,
    )


def ode_residual(table: GroundStateTable) -> np.ndarray:
    Q = table.Q
    return -table.grid.derivative(Q, 2) + Q - Q ** 5


class ShootingError(RuntimeError):
    pass


def _shoot(q0: float, x_end: float) -> int:
    """+1 if the orbit from ``(q0, 0)`` crosses zero, -1 if it turns back up, 0 if neither."""

    def rhs(x, z):
        return [z[1], z[0] - z[0] ** 5]

    def crosses(x, z):
        return z[0]
    crosses.terminal = True
    crosses.direction = -1

    def turns(x, z):
        return z[1]
    turns.terminal = True
    turns.direction = 1

    sol = solve_ivp(rhs, (0.0, x_end), [q0, 0.0], method="DOP853", rtol=1e-13,
                    atol=1e-24, events=(crosses, turns))
    if sol.t_events[0].size:
        return 1
    if sol.t_events[1].size:
        return -1
    return 0


def shooting_oracle(tolerance: float = 1e-10, x_max: float = 8.0,
                    n_samples: int = 801, bracket=(1.1, 1.6)) -> tuple[np.ndarray, np.ndarray]:
    """Ground state from the ODE alone, independent of the closed form.

    Bisects on ``Q(0)`` between orbits that overshoot (cross zero) and orbits
    that fall back (``Q'`` turns positive) until double precision is exhausted,
    then integrates the midpoint orbit on ``[0, x_max]``.  The unstable
    direction grows like ``exp(x)``, so ``x_max`` should stay well short of
    ``-log(eps)``.  Returns ``(x, Q)``.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    lo, hi = bracket
    horizon = 60.0
    if _shoot(lo, horizon) != -1 or _shoot(hi, horizon) != 1:
        raise ShootingError(f"Q(0) bracket {bracket} does not straddle the ground state")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        side = _shoot(mid, horizon)
        if side == 0:
            break
        lo, hi = (lo, mid) if side == 1 else (mid, hi)
    if hi - lo > tolerance:
        raise ShootingError(f"bisection stalled with bracket width {hi - lo:.3e}")
    q0 = 0.5 * (lo + hi)
    xs = np.linspace(0.0, x_max, n_samples)
    sol = solve_ivp(lambda x, z: [z[1], z[0] - z[0] ** 5], (0.0, x_max), [q0, 0.0],
                    method="DOP853", rtol=1e-13, atol=1e-24, t_eval=xs)
    q = sol.y[0]
    if np.any(np.diff(q) >= 0) or q[-1] <= 0:
        raise ShootingError("shooting profile is not positive and decreasing")
    return xs, q


def variational_G(grid: Grid, u: np.ndarray) -> float:
    """Weinstein functional ``|u_x|^2 |u|^4 / |u|_6^6``, minimised by ``Q``."""
    six = float(np.real(grid.integrate(np.abs(u) ** 6)))
    if six < 1e-300:
        raise ValueError("G is undefined for the zero function")
    grad = float(np.real(grid.integrate(np.abs(grid.derivative(u)) ** 2)))
    mass = float(np.real(grid.integrate(np.abs(u) ** 2)))
    return grad * mass ** 2 / six
