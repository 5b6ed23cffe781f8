"""Split-step pseudo-spectral evolution of ``i u_t + u_xx + |u|^4 u + i a(x) u = 0``.

The scheme is Strang splitting between the exact dispersive flow (diagonal
in Fourier space) and the exact pointwise flow of ``i u_t + |u|^4 u + i a u = 0``:
the modulus decays as ``|u0| exp(-a t)`` and the phase advances by
``|u0|^4 (1 - exp(-4 a t)) / (4 a)``.  With dealiasing on, the pointwise flow
is applied on a 3x zero-padded grid and truncated back.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
import logging
import math
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicSpline

from .grid import Grid, _check_finite
from .groundstate import GRAD_SQ, MASS_SQ, periodized_profiles

log = logging.getLogger(__name__)

DAMPING_KINDS = ("zero", "constant", "gaussian", "tanh-step", "tabulated")
PAD_FACTOR = 3
# fourth-order triple jump built from the symmetric Strang step
_YOSHIDA_OUTER = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_YOSHIDA_INNER = 1.0 - 2.0 * _YOSHIDA_OUTER


class BlowupDetected(RuntimeError):
    """A step produced non-finite values."""


# --------------------------------------------------------------------------- damping


@dataclass(frozen=True)
class DampingProfile:
    kind: str
    params: dict
    grid: Grid
    a: np.ndarray = field(repr=False)
    a_x: np.ndarray = field(repr=False)
    _func: Callable = field(repr=False, compare=False)

    @property
    def sup_a(self) -> float:
        return float(np.max(np.abs(self.a)))

    @property
    def sup_ax(self) -> float:
        return float(np.max(np.abs(self.a_x)))

    @property
    def w1inf(self) -> float:
        return max(self.sup_a, self.sup_ax)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    @property
    def is_constant(self) -> bool:
        return self.kind in ("zero", "constant")

    def __call__(self, z) -> np.ndarray:
        """``a`` at arbitrary points, wrapped onto the torus."""
        z = self.grid.wrap(np.asarray(z, dtype=float))
        return self._func(z)[0]

    def derivative_at(self, z) -> np.ndarray:
        z = self.grid.wrap(np.asarray(z, dtype=float))
        return self._func(z)[1]

    def summary(self) -> dict:
        return {"kind": self.kind, "params": self.params, "sup_a": self.sup_a,
                "sup_ax": self.sup_ax, "w1inf": self.w1inf}


def make_damping(grid: Grid, kind: str = "zero", params: dict | None = None) -> DampingProfile:
    params = dict(params or {})
    if kind == "zero":
        def func(z):
            return np.zeros_like(z), np.zeros_like(z)
    elif kind == "constant":
        a0 = float(params["value"])

        def func(z):
            return np.full_like(z, a0), np.zeros_like(z)
    elif kind == "gaussian":
        amp = float(params["amplitude"])
        w = float(params.get("width", 1.0))
        c = float(params.get("center", 0.0))

        def func(z):
            r = (z - c) / w
            g = amp * np.exp(-r * r)
            return g, -2.0 * r / w * g
    elif kind == "tanh-step":
        amp = float(params["amplitude"])
        w = float(params.get("width", 1.0))
        c = float(params.get("center", 0.0))
        off = float(params.get("offset", 0.0))

        def func(z):
            th = np.tanh((z - c) / w)
            return off + amp * th, amp * (1.0 - th * th) / w
    elif kind == "tabulated":
        xs = np.asarray(params["x"], dtype=float)
        ys = np.asarray(params["a"], dtype=float)
        if xs.shape != ys.shape or xs.size < 4 or np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated damping needs >= 4 strictly increasing nodes")
        spline = CubicSpline(xs, ys, extrapolate=True)
        lo, hi = xs[0], xs[-1]

        def func(z):
            inside = (z >= lo) & (z <= hi)
            zc = np.clip(z, lo, hi)
            val = np.where(inside, spline(zc), np.where(z < lo, ys[0], ys[-1]))
            der = np.where(inside, spline(zc, 1), 0.0)
            return val, der
    else:
        raise ValueError(f"unknown damping kind {kind!r}; expected one of {DAMPING_KINDS}")
    a, a_x = func(np.array(grid.x))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(a_x))):
        raise ValueError("damping profile is not bounded on the grid")
    a.flags.writeable = False
    a_x.flags.writeable = False
    return DampingProfile(kind=kind, params=params, grid=grid, a=a, a_x=a_x, _func=func)


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class SolverConfig:
    n_points: int = 1024
    half_width: float = 16.0
    dt0: float = 1e-3
    dt_min: float = 1e-12
    safety: float = 1.0
    grad_stop: float = 1e3
    tail_tol: float = 1e-10
    dealias: bool = True
    cadence: int = 10
    t_max: float = 1.0
    order: int = 2

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError("order must be 2 (Strang) or 4 (triple-jump Strang)")
        if not self.dt0 > self.dt_min > 0:
            raise ValueError("need dt0 > dt_min > 0")
        if not self.grad_stop > math.sqrt(GRAD_SQ):
            raise ValueError("grad_stop must exceed |Q_x|_2")
        if self.cadence < 1:
            raise ValueError("cadence must be a positive step count")

    @property
    def grid(self) -> Grid:
        return Grid(self.n_points, self.half_width)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------- observables


def grad_norm(grid: Grid, u: np.ndarray) -> float:
    return _grad_from_power(grid, _power(u))


def _power(u):
    uh = sfft.fft(u)
    return uh.real ** 2 + uh.imag ** 2


def _grad_from_power(grid, p):
    return float(np.sqrt(grid.spacing * np.dot(grid.k ** 2, p) / grid.n_points))


def _tail_from_power(grid, p, fraction=2.0 / 3.0):
    total = p.sum()
    if total == 0.0:
        return 0.0
    return float(p[np.abs(grid.k) > fraction * grid.k_max].sum() / total)


def mass(grid: Grid, u: np.ndarray) -> float:
    return float(grid.spacing * np.sum(np.abs(u) ** 2))


# --------------------------------------------------------------------------- initial data


@dataclass
class InitialData:
    u: np.ndarray
    kind: str
    params: dict
    mass: float
    energy: float
    momentum: float
    alpha: float
    flags: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {"kind": self.kind, "params": self.params, "mass": self.mass,
                "energy": self.energy, "momentum": self.momentum, "alpha": self.alpha,
                "flags": list(self.flags)}


def _boosted_profile(grid: Grid, v: float) -> np.ndarray:
    """Periodic sum of ``exp(i v x / 2) Q(x)`` over the torus images."""
    from .groundstate import q_closed_form

    n_img = int(math.ceil(45.0 / grid.length))
    out = np.zeros(grid.n_points, dtype=complex)
    for shift in range(-n_img, n_img + 1):
        z = grid.x + shift * grid.length
        out += np.exp(0.5j * v * z) * q_closed_form(z)
    return out


def make_initial_data(grid: Grid, kind: str, params: dict | None = None,
                      config: SolverConfig | None = None) -> InitialData:
    """Build ``u0`` from a kind name: scaled_ground_state, boosted, file or warm_start."""
    from .invariants import conserved_quantities

    params = dict(params or {})
    flags: list[str] = []
    if kind == "scaled_ground_state":
        c = float(params.get("c", 1.0))
        if c < 1.0:
            raise ValueError(f"scaled_ground_state needs c >= 1 (c={c} gives E >= 0 below the critical mass)")
        if c == 1.0:
            flags.append("inadmissible: c = 1 gives E = 0 and alpha = 0")
        u = c * periodized_profiles(grid)["Q"].astype(complex)
    elif kind == "boosted":
        v = float(params.get("v", 1.0))
        c = float(params.get("c", 1.0))
        u = c * _boosted_profile(grid, v)
    elif kind == "file":
        u = load_field(params["path"], grid)
    elif kind == "warm_start":
        c = float(params.get("c", 1.05))
        t_star = float(params.get("t_star", 0.0))
        u = warm_start(grid, c, t_star, config)
    else:
        raise ValueError(f"unknown initial-data kind {kind!r}")
    u = _check_finite(u, "initial data")
    C, E, M = conserved_quantities(grid, u)
    alpha = 2.0 * (C - MASS_SQ)
    if abs(M) > 1e-10:
        flags.append("momentum-nonzero: M(u0) != 0")
    if alpha <= 0:
        flags.append("alpha-nonpositive: mass does not exceed |Q|^2")
    if E >= 0:
        flags.append("energy-nonnegative: E(u0) >= 0")
    return InitialData(u=u, kind=kind, params=params, mass=C, energy=E, momentum=M,
                       alpha=alpha, flags=flags)


def load_field(path, grid: Grid) -> np.ndarray:
    """Read a snapshot written by :func:`dampnls.io.write_field`."""
    from .io import read_field

    x, u = read_field(path)
    if u.size != grid.n_points or not np.allclose(x, grid.x, atol=1e-12 * grid.half_width):
        raise ValueError(f"field in {path} does not live on {grid}")
    return u


# --------------------------------------------------------------------------- stepping


class SplitStepper:
    """Strang step ``local(dt/2) . dispersion(dt) . local(dt/2)`` on one grid."""

    def __init__(self, grid: Grid, damping: DampingProfile | None = None, dealias: bool = True,
                 order: int = 2):
        self.grid = grid
        self.order = order
        self.damping = damping if damping is not None else make_damping(grid, "zero")
        if self.damping.grid != grid:
            raise ValueError("damping profile lives on a different grid")
        self.dealias = dealias
        n = grid.n_points
        if dealias:
            m = PAD_FACTOR * n
            fine_x = -grid.half_width + (2.0 * grid.half_width / m) * np.arange(m)
            self._a_local = self.damping(fine_x)
        else:
            self._a_local = np.array(self.damping.a)
        if self.damping.is_zero:
            self._a_local = None
        self._k2 = grid.k ** 2

    def local(self, u: np.ndarray, tau: float) -> np.ndarray:
        if not self.dealias:
            return self._local_flow(u, tau)
        n = self.grid.n_points
        m = PAD_FACTOR * n
        uh = sfft.fft(u)
        pad = np.zeros(m, dtype=complex)
        pad[: n // 2] = uh[: n // 2]
        pad[-(n // 2):] = uh[-(n // 2):]
        v = sfft.ifft(pad) * PAD_FACTOR
        v = self._local_flow(v, tau)
        vh = sfft.fft(v) / PAD_FACTOR
        out = np.empty(n, dtype=complex)
        out[: n // 2] = vh[: n // 2]
        out[-(n // 2):] = vh[-(n // 2):]
        return sfft.ifft(out)

    def _local_flow(self, v: np.ndarray, tau: float) -> np.ndarray:
        a = self._a_local
        r4 = v.real ** 2 + v.imag ** 2
        r4 *= r4
        if a is None:
            phase = r4 * tau
            return v * (np.cos(phase) + 1j * np.sin(phase))
        at = a * tau
        small = np.abs(at) < 1e-12
        safe_a = np.where(small, 1.0, a)
        # phase = |v|^4 (1 - exp(-4 a tau)) / (4 a), -> |v|^4 tau as a tau -> 0
        phase = np.where(small, r4 * tau, -r4 * np.expm1(-4.0 * at) / (4.0 * safe_a))
        return v * np.exp(-at) * (np.cos(phase) + 1j * np.sin(phase))

    def dispersion(self, u: np.ndarray, tau: float) -> np.ndarray:
        return sfft.ifft(np.exp(-1j * self._k2 * tau) * sfft.fft(u))

    def strang(self, u: np.ndarray, dt: float) -> np.ndarray:
        u = self.local(u, 0.5 * dt)
        u = self.dispersion(u, dt)
        return self.local(u, 0.5 * dt)

    def step(self, u: np.ndarray, dt: float) -> np.ndarray:
        # overflow surfaces as the non-finite check below, not as warnings
        with np.errstate(over="ignore", invalid="ignore"):
            if self.order == 4:
                u = self.strang(u, _YOSHIDA_OUTER * dt)
                u = self.strang(u, _YOSHIDA_INNER * dt)
                u = self.strang(u, _YOSHIDA_OUTER * dt)
            else:
                u = self.strang(u, dt)
        if not np.all(np.isfinite(u)):
            raise BlowupDetected("non-finite values after split step")
        return u


def step(u: np.ndarray, dt: float, damping: DampingProfile, dealias: bool = True,
         order: int = 2) -> np.ndarray:
    """One Strang step of size ``dt`` (negative ``dt`` runs the scheme backwards)."""
    _check_finite(u, "u")
    return SplitStepper(damping.grid, damping, dealias, order).step(u, dt)


# --------------------------------------------------------------------------- trajectories


@dataclass
class TrajectorySample:
    t: float
    dt_used: float
    mass: float
    energy: float
    momentum: float
    grad_norm: float
    u: np.ndarray | None = field(default=None, repr=False)
    step_index: int = 0
    stop_reason: str | None = None

    @property
    def lambda_est(self) -> float:
        return math.sqrt(GRAD_SQ) / self.grad_norm


@dataclass
class Trajectory(Sequence):
    grid: Grid
    samples: list[TrajectorySample]
    stop_reason: str
    damping: DampingProfile
    config: SolverConfig | None = None
    n_steps: int = 0

    def __getitem__(self, i):
        return self.samples[i]

    def __len__(self):
        return len(self.samples)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def fields(self) -> list[np.ndarray]:
        return [s.u for s in self.samples]

    @property
    def growth(self) -> float:
        g = self.column("grad_norm")
        return float(g.max() / g[0])


def _sample(grid, u, t, dt, n, store):
    from .invariants import conserved_quantities

    C, E, M = conserved_quantities(grid, u)
    return TrajectorySample(t=t, dt_used=dt, mass=C, energy=E, momentum=M,
                            grad_norm=grad_norm(grid, u), u=u.copy() if store else None,
                            step_index=n)


def evolve(u0: np.ndarray, config: SolverConfig, damping: DampingProfile | None = None,
           observers: Iterable[Callable[[TrajectorySample], None]] = (),
           t0: float = 0.0, store_fields: bool = True, fixed_dt: float | None = None,
           max_steps: int | None = None) -> Trajectory:
    """Advance ``u0`` until ``t_max`` or a stopping rule fires.

    The step is ``dt = clamp(safety*dt0*(|Q_x|/|u_x|)^2, dt_min, dt0)``, i.e.
    proportional to the squared scale; ``fixed_dt`` overrides it (tests).
    Stops on: the blow-up proxy ``|u_x| >= grad_stop``, the step target
    falling below ``dt_min``, spectral tail above ``tail_tol``, non-finite
    values, or ``t_max``.
    """
    grid = config.grid
    damping = damping if damping is not None else make_damping(grid, "zero")
    stepper = SplitStepper(grid, damping, config.dealias, config.order)
    u = np.asarray(_check_finite(u0, "u0"), dtype=complex).copy()
    observers = list(observers)
    q_grad = math.sqrt(GRAD_SQ)
    t = t0
    n = 0
    dt = 0.0
    samples = [_sample(grid, u, t, 0.0, 0, store_fields)]
    for obs in observers:
        obs(samples[-1])
    stop = None
    last_sampled = 0
    while stop is None:
        p = _power(u)
        g = _grad_from_power(grid, p)
        if g >= config.grad_stop:
            stop = "blowup-proxy"
            break
        if _tail_from_power(grid, p) > config.tail_tol:
            stop = "resolution-exhausted"
            break
        if t >= config.t_max - 1e-14 * max(1.0, abs(config.t_max)):
            stop = "t_max"
            break
        if max_steps is not None and n >= max_steps:
            stop = "max-steps"
            break
        if fixed_dt is None:
            target = config.safety * config.dt0 * (q_grad / g) ** 2
            if target < config.dt_min:
                stop = "dt-floor"
                break
            dt = min(max(target, config.dt_min), config.dt0)
        else:
            dt = fixed_dt
        remaining = config.t_max - t
        # absorb a trailing sliver instead of taking a round-off sized last step
        if dt >= remaining or remaining - dt < 0.01 * dt:
            dt = remaining
        try:
            u = stepper.step(u, dt)
        except BlowupDetected:
            stop = "non-finite"
            break
        t += dt
        n += 1
        if n % config.cadence == 0:
            samples.append(_sample(grid, u, t, dt, n, store_fields))
            last_sampled = n
            for obs in observers:
                obs(samples[-1])
    if last_sampled != n:
        samples.append(_sample(grid, u, t, dt, n, store_fields))
        for obs in observers:
            obs(samples[-1])
    samples[-1].stop_reason = stop
    log.info("evolve stopped at t=%.6g after %d steps: %s", t, n, stop)
    return Trajectory(grid=grid, samples=samples, stop_reason=stop, damping=damping,
                      config=config, n_steps=n)


class WarmStartError(RuntimeError):
    def __init__(self, reached: float, reason: str):
        super().__init__(f"undamped warm start stopped at t={reached:.6g} ({reason}) before t*")
        self.reached = reached
        self.reason = reason


def warm_start(grid: Grid, c: float, t_star: float, config: SolverConfig | None = None) -> np.ndarray:
    """State of the undamped flow from ``c Q`` at time ``t_star``."""
    if c <= 1.0:
        raise ValueError("warm start needs c > 1")
    u0 = c * periodized_profiles(grid)["Q"].astype(complex)
    if t_star <= 0.0:
        return u0
    base = config or SolverConfig(n_points=grid.n_points, half_width=grid.half_width)
    cfg = SolverConfig(**{**base.to_dict(), "t_max": t_star,
                          "cadence": max(base.cadence, 10 ** 9)})
    traj = evolve(u0, cfg, make_damping(grid, "zero"), store_fields=True)
    if traj.stop_reason != "t_max":
        raise WarmStartError(traj[-1].t, traj.stop_reason)
    return traj[-1].u
