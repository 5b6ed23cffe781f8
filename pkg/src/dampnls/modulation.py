"""Geometric decomposition ``u -> (lambda, x, theta, epsilon)`` near the ground state.

The residue is

    eps(y) = lambda**0.5 * exp(i theta) * u(lambda y + x) - Q(y),

with the three parameters fixed by ``(eps_1, Q_d) = (eps_2, Q_dd) = (eps_1, yQ) = 0``.
``u`` lives on the solver grid (coordinate ``z``); ``eps`` lives on a separate
``y``-grid whose profiles are the real-line closed forms.  The rescaled field
and its first two ``y``-derivatives come from band-limited interpolation of
``u``, so ``eps`` never needs to be periodic on the ``y``-grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import DEFAULT_KAPPA, Grid, _check_finite
from .groundstate import GRAD_SQ, MASS_SQ, GroundStateTable, build_tables, q_closed_form, qy_closed_form

TOL_ORTH = 1e-9
MAX_NEWTON = 50


def default_frame(n_points: int = 1024, half_width: float = 16.0) -> GroundStateTable:
    """Real-line ground-state profiles on the ``y``-grid used for residues."""
    return build_tables(Grid(n_points, half_width), periodized=False)


# --------------------------------------------------------------------------- admissibility


@dataclass(frozen=True)
class Admissibility:
    passed: bool
    mass_excess: float
    mass_margin: float
    energy_margin: float

    def as_dict(self) -> dict:
        return {"passed": self.passed, "mass_excess": self.mass_excess,
                "mass_margin": self.mass_margin, "energy_margin": self.energy_margin}


def admissibility(grid: Grid, u: np.ndarray, alpha: float, mass_tol: float = 1e-10) -> Admissibility:
    """``0 < |u|^2 - |Q|^2 < alpha`` and ``E(u) <= alpha |u_x|^2``.

    ``mass_margin`` is the smaller distance to the two ends of the mass
    window; an excess within ``mass_tol`` of zero counts as zero.
    """
    from .invariants import conserved_quantities

    if not alpha > 0:
        raise ValueError("alpha must be positive")
    C, E, _ = conserved_quantities(grid, u)
    ux2 = float(np.real(grid.integrate(np.abs(grid.derivative(np.asarray(u, dtype=complex))) ** 2)))
    excess = C - MASS_SQ
    if abs(excess) <= mass_tol:
        excess = 0.0
    mass_margin = min(excess, alpha - excess)
    energy_margin = alpha * ux2 - E
    passed = excess > 0.0 and mass_margin > 0.0 and energy_margin >= 0.0
    return Admissibility(passed, excess, mass_margin, energy_margin)


# --------------------------------------------------------------------------- states


@dataclass
class ModulationState:
    t: float
    lam: float
    x: float
    theta: float
    eps: np.ndarray = field(repr=False)
    eps_y: np.ndarray = field(repr=False)
    eps_yy: np.ndarray | None = field(default=None, repr=False)
    s: float = 0.0
    e2_qd: float = 0.0
    e1_q: float = 0.0
    e2_qy: float = 0.0
    eps_norm: float = 0.0
    orth: tuple = (0.0, 0.0, 0.0)
    converged: bool = False
    newton_iters: int = 0
    proximity_grad: float = float("nan")
    proximity_mass: float = float("nan")
    alpha_used: float | None = None
    admissible: bool | None = None
    message: str = ""

    @property
    def eps1(self) -> np.ndarray:
        return self.eps.real

    @property
    def eps2(self) -> np.ndarray:
        return self.eps.imag

    def row(self) -> dict:
        return {"t": self.t, "s": self.s, "lambda": self.lam, "x": self.x, "theta": self.theta,
                "e2_qd": self.e2_qd, "e1_q": self.e1_q, "e2_qy": self.e2_qy,
                "eps_norm": self.eps_norm, "converged": int(self.converged),
                "newton_iters": self.newton_iters, "proximity_grad": self.proximity_grad,
                "proximity_mass": self.proximity_mass}


MODULATION_COLUMNS = ["t", "s", "lambda", "x", "theta", "e2_qd", "e1_q", "e2_qy", "eps_norm",
                      "converged", "newton_iters", "proximity_grad", "proximity_mass"]


def _rescaled(grid: Grid, u: np.ndarray, frame: GroundStateTable, lam: float, x: float,
              theta: float, orders=(0, 1)) -> list[np.ndarray]:
    """``d^k/dy^k [lam^(1/2) e^(i theta) u(lam y + x)]`` on the frame's ``y``-grid."""
    y = frame.grid
    start = lam * y.x[0] + x
    step = lam * y.spacing
    phase = math.sqrt(lam) * np.exp(1j * theta)
    return [phase * lam ** k * grid.evaluate_affine(u, start, step, y.n_points, order=k)
            for k in orders]


def _pairings(frame: GroundStateTable, eps: np.ndarray) -> np.ndarray:
    y = frame.grid
    return np.array([y.inner(eps.real, frame.Q_d), y.inner(eps.imag, frame.Q_dd),
                     y.inner(eps.real, frame.yQ)])


def _jacobian(frame: GroundStateTable, v: np.ndarray, v_y: np.ndarray, lam: float) -> np.ndarray:
    y = frame.grid
    dv = [(0.5 * v + y.x * v_y) / lam, v_y / lam, 1j * v]
    J = np.empty((3, 3))
    for j, d in enumerate(dv):
        J[0, j] = y.inner(d.real, frame.Q_d)
        J[1, j] = y.inner(d.imag, frame.Q_dd)
        J[2, j] = y.inner(d.real, frame.yQ)
    return J


def default_guess(grid: Grid, u: np.ndarray) -> tuple[float, float, float]:
    """Scale from the gradient, center from the circular mean of ``|u|^2``, phase at the peak."""
    from .dynamics import grad_norm

    lam = math.sqrt(GRAD_SQ) / grad_norm(grid, u)
    r2 = np.abs(u) ** 2
    angle = np.angle(np.sum(r2 * np.exp(1j * np.pi * grid.x / grid.half_width)))
    x = float(angle * grid.half_width / np.pi)
    theta = float(-np.angle(u[int(np.argmax(r2))]))
    return lam, x, theta


def _wrap_phase(theta: float) -> float:
    """Map onto ``(-pi, pi]``."""
    th = math.remainder(theta, 2.0 * math.pi)
    return math.pi if th == -math.pi else th


def decompose(grid: Grid, u: np.ndarray, frame: GroundStateTable | None = None,
              guess: tuple[float, float, float] | None = None, t: float = 0.0,
              tol: float = TOL_ORTH, max_iter: int = MAX_NEWTON, alpha: float | None = None,
              override: bool = False, kappa: float = DEFAULT_KAPPA) -> ModulationState:
    """Newton solve of the three orthogonality conditions for ``(lambda, x, theta)``.

    When ``alpha`` is given the admissibility window is checked first; a
    failure raises unless ``override`` is set, in which case it is recorded
    on the state.  Divergence returns a state with ``converged=False``.
    """
    u = np.asarray(_check_finite(u, "u"), dtype=complex)
    frame = frame if frame is not None else default_frame()
    admissible = None
    if alpha is not None:
        adm = admissibility(grid, u, alpha)
        admissible = adm.passed
        if not adm.passed and not override:
            raise ValueError(f"u is outside the admissible window: {adm.as_dict()}")
    lam, x, theta = guess if guess is not None else default_guess(grid, u)
    if not lam > 0:
        raise ValueError("initial scale must be positive")
    p = np.array([lam, x, theta], dtype=float)
    msg = ""
    converged = False
    it = 0
    v, v_y = _rescaled(grid, u, frame, *p)
    F = _pairings(frame, v - frame.Q)
    for it in range(1, max_iter + 1):
        J = _jacobian(frame, v, v_y, p[0])
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            msg = "singular Jacobian"
            break
        # damp the step until the scale stays positive and the residual drops
        f0 = np.max(np.abs(F))
        mu = 1.0
        for _ in range(40):
            trial = p + mu * delta
            if trial[0] > 0:
                v_t, vy_t = _rescaled(grid, u, frame, *trial)
                F_t = _pairings(frame, v_t - frame.Q)
                if np.max(np.abs(F_t)) < f0 or f0 <= tol:
                    break
            mu *= 0.5
        else:
            msg = "line search failed"
            break
        step_size = np.max(np.abs(mu * delta))
        p, v, v_y, F = trial, v_t, vy_t, F_t
        if np.max(np.abs(F)) <= tol and step_size <= 1e-12 * (1.0 + np.max(np.abs(p))):
            converged = True
            break
        if not np.all(np.isfinite(p)):
            msg = "non-finite parameters"
            break
    else:
        msg = "iteration cap reached"
    if not converged and np.max(np.abs(F)) <= tol and not msg.startswith(("singular", "non-finite")):
        converged = True
    if not converged and not msg:
        msg = "not converged"
    lam, x, theta = float(p[0]), float(p[1]), _wrap_phase(float(p[2]))
    return _finish(grid, u, frame, lam, x, theta, t, converged, it, msg, kappa,
                   alpha, admissible)


def _finish(grid, u, frame, lam, x, theta, t, converged, iters, msg, kappa, alpha, admissible):
    from .dynamics import grad_norm

    v, v_y, v_yy = _rescaled(grid, u, frame, lam, x, theta, orders=(0, 1, 2))
    y = frame.grid
    eps = v - frame.Q
    eps_y = v_y - frame.Q_y
    eps_yy = v_yy - (frame.Q - frame.Q ** 5)
    g = grad_norm(grid, u)
    return ModulationState(
        t=t, lam=lam, x=x, theta=theta, eps=eps, eps_y=eps_y, eps_yy=eps_yy,
        e2_qd=y.inner(eps.imag, frame.Q_d), e1_q=y.inner(eps.real, frame.Q),
        e2_qy=y.inner(eps.imag, frame.Q_y),
        eps_norm=y.weighted_norm(eps, kappa, derivative=eps_y),
        orth=tuple(float(f) for f in _pairings(frame, eps)), converged=converged,
        newton_iters=iters, proximity_grad=1.0 - lam * g / math.sqrt(GRAD_SQ),
        proximity_mass=1.0 - lam * g / math.sqrt(MASS_SQ), alpha_used=alpha,
        admissible=admissible, message=msg)


def reconstruct(grid: Grid, lam: float, x: float, theta: float, eps: np.ndarray | None = None,
                frame: GroundStateTable | None = None) -> np.ndarray:
    """``u(z) = lam^(-1/2) e^(-i theta) (Q + eps)((z - x)/lam)`` on ``grid``.

    ``Q`` is summed over the torus images; ``eps`` is interpolated from the
    frame grid and taken as zero outside it, so it should vanish near the
    frame edges.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    z = np.array(grid.x)
    n_img = int(math.ceil(45.0 * lam / grid.length)) + 1
    q = np.zeros_like(z)
    for shift in range(-n_img, n_img + 1):
        q += q_closed_form((z - x + shift * grid.length) / lam)
    v = q.astype(complex)
    if eps is not None:
        frame = frame if frame is not None else default_frame()
        y = frame.grid
        yz = grid.wrap(z - x) / lam
        # the wrapped coordinate is affine except for one jump; evaluate both pieces
        jump = int(np.argmax(np.diff(yz) < 0)) + 1 if np.any(np.diff(yz) < 0) else yz.size
        e = np.zeros(z.size, dtype=complex)
        for lo, hi in ((0, jump), (jump, yz.size)):
            if hi > lo:
                e[lo:hi] = y.evaluate_affine(np.asarray(eps, dtype=complex), yz[lo],
                                             grid.spacing / lam, hi - lo)
        e[np.abs(yz) >= y.half_width] = 0.0
        v = v + e
    return v * np.exp(-1j * theta) / math.sqrt(lam)


# --------------------------------------------------------------------------- series


def rescaled_time(t, lam) -> np.ndarray:
    """``s(t) = int_0^t lambda^(-2)``, trapezoid rule on the sample times."""
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise ValueError("lambda must be positive and finite")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must increase strictly")
    return cumulative_trapezoid(1.0 / lam ** 2, t, initial=0.0)


def decompose_series(grid: Grid, times, fields, frame: GroundStateTable | None = None,
                     guess=None, **kwargs) -> list[ModulationState]:
    """Decompose a run sample by sample, seeding each solve with the previous one.

    Phases are unwrapped along the series so that ``theta`` can be
    differenced; ``s`` is filled in from the converged scales.
    """
    frame = frame if frame is not None else default_frame()
    states = []
    prev = guess
    for t, u in zip(times, fields):
        st = decompose(grid, u, frame, guess=prev, t=float(t), **kwargs)
        if not st.converged:
            st_fresh = decompose(grid, u, frame, guess=None, t=float(t), **kwargs)
            if st_fresh.converged:
                st = st_fresh
        states.append(st)
        if st.converged:
            prev = (st.lam, st.x, st.theta)
    theta = np.unwrap([st.theta for st in states])
    lam = np.array([st.lam if st.converged else np.nan for st in states])
    ok = np.isfinite(lam) & (lam > 0)
    s = np.full(len(states), np.nan)
    if ok.sum() >= 2:
        s[ok] = rescaled_time(np.array(times, dtype=float)[ok], lam[ok])
    elif ok.sum() == 1:
        s[ok] = 0.0
    for st, th, si in zip(states, theta, s):
        st.theta = float(th)
        st.s = float(si)
    return states


# --------------------------------------------------------------------------- identities


def momentum_identity_check(grid: Grid, state: ModulationState, u: np.ndarray) -> dict:
    """``M(u)`` against ``(1/lambda)[Im int conj(eps) eps_y - 2 (eps_2, Q_y)]``.

    The right side is assembled on the solver points mapped to ``y`` (one full
    torus period), with ``Q`` summed over the images of that period, so both
    integrals cover the same set.
    """
    from .invariants import conserved_quantities

    u = np.asarray(u, dtype=complex)
    _, _, M = conserved_quantities(grid, u)
    lam, x, theta = state.lam, state.x, state.theta
    phase = math.sqrt(lam) * np.exp(1j * theta)
    v = phase * u
    v_y = phase * lam * grid.derivative(u)
    y = grid.wrap(np.array(grid.x) - x) / lam
    period = grid.length / lam
    n_img = int(math.ceil(45.0 / period)) + 1
    q = np.zeros_like(y)
    qy = np.zeros_like(y)
    for shift in range(-n_img, n_img + 1):
        q += q_closed_form(y + shift * period)
        qy += qy_closed_form(y + shift * period)
    eps = v - q
    eps_y = v_y - qy
    dy = grid.spacing / lam
    rhs = (dy * np.sum(np.imag(np.conj(eps) * eps_y)) - 2.0 * dy * np.sum(eps.imag * qy)) / lam
    return {"momentum": M, "identity": float(rhs), "residual": abs(M - float(rhs))}


def remainder_terms(Q: np.ndarray, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of ``|Q+eps|^4 (Q+eps) - Q^5 - (5 Q^4 eps_1 + i Q^4 eps_2)``."""
    eps = np.asarray(_check_finite(eps, "eps"), dtype=complex)
    v = Q + eps
    r = np.abs(v) ** 4 * v - Q ** 5 - (5.0 * Q ** 4 * eps.real + 1j * Q ** 4 * eps.imag)
    return r.real, r.imag


def _rate(s0, s1, s2, f0, f1, f2):
    h0, h1 = s1 - s0, s2 - s1
    return (-h1 / (h0 * (h0 + h1)) * f0 + (h1 - h0) / (h0 * h1) * f1 + h0 / (h1 * (h0 + h1)) * f2)


@dataclass
class EpsResiduals:
    t: np.ndarray
    s: np.ndarray
    index: np.ndarray
    eq1_l2: np.ndarray
    eq2_l2: np.ndarray
    weighted: np.ndarray
    skipped: list[int]

    @property
    def max_weighted(self) -> float:
        return float(np.max(self.weighted)) if self.weighted.size else float("nan")

    @property
    def max_l2(self) -> float:
        """Largest L2 residual over both equations and all samples."""
        if not self.eq1_l2.size:
            return float("nan")
        return float(max(np.max(self.eq1_l2), np.max(self.eq2_l2)))


def eps_equation_residuals(states: list[ModulationState], frame: GroundStateTable,
                           damping=None, stride: int = 1,
                           kappa: float = DEFAULT_KAPPA) -> EpsResiduals:
    """Residuals of the two real equations satisfied by ``eps_1`` and ``eps_2`` in ``s``.

        d_s eps_1 - L- eps_2 = (lam_s/lam)(Q_d + (eps_1)_d) + (x_s/lam)(Q_y + (eps_1)_y)
                               + th_s eps_2 - R_2 - a lam^2 (Q + eps_1)
        d_s eps_2 + L+ eps_1 = -th_s (Q + eps_1) + (lam_s/lam)(eps_2)_d
                               + (x_s/lam)(eps_2)_y + R_1 - a lam^2 eps_2

    with ``th_s = -1 - theta_s``, ``f_d = f/2 + y f_y`` and ``a`` evaluated at
    ``lam y + x``.  Rates in ``s`` are three-point centered differences over
    samples ``i - stride, i, i + stride``, so the residual falls at second
    order as the sample spacing shrinks.
    """
    y = frame.grid
    yy = np.array(y.x)
    Q = frame.Q
    q4 = Q ** 4
    out_i, out1, out2, outw, skipped = [], [], [], [], []
    n = len(states)
    for i in range(stride, n - stride):
        a_, b_, c_ = states[i - stride], states[i], states[i + stride]
        if not (a_.converged and b_.converged and c_.converged) or b_.eps_yy is None:
            skipped.append(i)
            continue
        s0, s1, s2 = a_.s, b_.s, c_.s
        eps_s = _rate(s0, s1, s2, a_.eps, b_.eps, c_.eps)
        lam_s = _rate(s0, s1, s2, math.log(a_.lam), math.log(b_.lam), math.log(c_.lam))
        x_s = _rate(s0, s1, s2, a_.x, b_.x, c_.x)
        th_s = -1.0 - _rate(s0, s1, s2, a_.theta, b_.theta, c_.theta)
        lam, e, ey, eyy = b_.lam, b_.eps, b_.eps_y, b_.eps_yy
        e1, e2 = e.real, e.imag
        R1, R2 = remainder_terms(Q, e)
        lminus_e2 = -eyy.imag + e2 - q4 * e2
        lplus_e1 = -eyy.real + e1 - 5.0 * q4 * e1
        if damping is None or damping.is_zero:
            a_loc = 0.0
        else:
            a_loc = damping(lam * yy + b_.x) * lam ** 2
        e1_d = 0.5 * e1 + yy * ey.real
        e2_d = 0.5 * e2 + yy * ey.imag
        r1 = (eps_s.real - lminus_e2
              - (lam_s * (frame.Q_d + e1_d) + x_s / lam * (frame.Q_y + ey.real)
                 + th_s * e2 - R2 - a_loc * (Q + e1)))
        r2 = (eps_s.imag + lplus_e1
              - (-th_s * (Q + e1) + lam_s * e2_d + x_s / lam * ey.imag + R1 - a_loc * e2))
        r = r1 + 1j * r2
        out_i.append(i)
        out1.append(y.l2_norm(r1))
        out2.append(y.l2_norm(r2))
        outw.append(y.weighted_norm(r, kappa, derivative=np.gradient(r, y.spacing)))
    idx = np.array(out_i, dtype=int)
    return EpsResiduals(
        t=np.array([states[i].t for i in idx]), s=np.array([states[i].s for i in idx]),
        index=idx, eq1_l2=np.array(out1), eq2_l2=np.array(out2), weighted=np.array(outw),
        skipped=skipped)


def e2qy_bound_check(e2_qy, eps_norm, head_fraction: float = 0.1, factor: float = 2.0) -> dict:
    """Check that ``|(eps_2, Q_y)| <= factor * kappa6 * |eps|`` along a series.

    ``kappa6`` is the largest ratio ``|(eps_2, Q_y)| / |eps|`` over the first
    ``head_fraction`` of the samples, so the check asks that the bound does
    not degrade along the run.
    """
    e2_qy = np.abs(np.asarray(e2_qy, dtype=float))
    eps_norm = np.asarray(eps_norm, dtype=float)
    if e2_qy.size == 0 or e2_qy.shape != eps_norm.shape:
        raise ValueError("need matching, nonempty e2_qy and eps_norm series")
    head = max(1, int(math.ceil(head_fraction * e2_qy.size)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(eps_norm > 0, e2_qy / eps_norm, 0.0)
    kappa6 = float(np.max(ratio[:head]))
    margin = factor * kappa6 * eps_norm - e2_qy
    return {"passed": bool(np.all(margin >= 0)), "kappa6": kappa6,
            "worst_margin": float(margin.min()), "margins": margin}


@dataclass(frozen=True)
class RefinedResidue:
    eps_tilde: np.ndarray
    eps_tilde_y: np.ndarray
    coefficient: float
    norm: float


def refine(eps: np.ndarray, eps_y: np.ndarray, frame: GroundStateTable,
           kappa: float = DEFAULT_KAPPA) -> RefinedResidue:
    """``eps + i (eps_2, Q_d)/|yQ|^2 W`` and its weighted norm."""
    y = frame.grid
    eps = np.asarray(eps, dtype=complex)
    c = y.inner(eps.imag, frame.Q_d) / frame.yq_sq
    yy = np.array(y.x)
    w_y = 2.0 * yy * frame.Q + yy * yy * frame.Q_y + frame.nu * frame.Q_y
    et = eps + 1j * c * frame.W
    et_y = np.asarray(eps_y, dtype=complex) + 1j * c * w_y
    return RefinedResidue(et, et_y, c, y.weighted_norm(et, kappa, derivative=et_y))


def refined_residue(state: ModulationState, frame: GroundStateTable,
                    kappa: float = DEFAULT_KAPPA) -> RefinedResidue:
    if not state.converged:
        raise ValueError("refined residue needs a converged decomposition")
    return refine(state.eps, state.eps_y, frame, kappa)
