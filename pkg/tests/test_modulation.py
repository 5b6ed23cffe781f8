import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dampnls.dynamics import SolverConfig, evolve, make_damping, make_initial_data, warm_start
from dampnls.grid import Grid
from dampnls.groundstate import MASS_SQ, periodized_profiles
from dampnls.modulation import (MODULATION_COLUMNS, TOL_ORTH, admissibility, decompose,
                                decompose_series, e2qy_bound_check, eps_equation_residuals,
                                momentum_identity_check, reconstruct, refine, refined_residue,
                                remainder_terms, rescaled_time)
from synthetic import synthetic_eps

ZGRID = Grid(2048, 32.0)


def assert_orthogonal(state):
    assert max(abs(o) for o in state.orth) < TOL_ORTH


def same_phase(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))


# ---- admissibility


def test_admissibility_examples(grid, tables):
    u = 1.05 * tables.Q
    alpha = 2 * (1.05 ** 2 - 1) * MASS_SQ
    res = admissibility(grid, u, alpha)
    assert res.passed
    assert res.mass_margin == pytest.approx(alpha / 2, rel=1e-8)
    assert not admissibility(grid, tables.Q, alpha).passed
    assert admissibility(grid, tables.Q, alpha).mass_excess == 0.0
    assert not admissibility(grid, 2 * tables.Q, alpha).passed
    with pytest.raises(ValueError):
        admissibility(grid, u, 0.0)


# ---- decompose examples


def test_decompose_rescaled_ground_state(frame):
    u = reconstruct(ZGRID, 0.7, 1.3, -0.4)  # = mu^-1/2 Q((z - 1.3)/0.7) e^{0.4 i}
    st_ = decompose(ZGRID, u, frame)
    assert st_.converged
    assert st_.lam == pytest.approx(0.7, abs=1e-9)
    assert st_.x == pytest.approx(1.3, abs=1e-9)
    assert same_phase(st_.theta, -0.4) < 1e-9
    assert frame.grid.l2_norm(st_.eps) < 1e-9
    assert_orthogonal(st_)


def test_decompose_identity(frame):
    st_ = decompose(ZGRID, reconstruct(ZGRID, 1.0, 0.0, 0.0), frame)
    assert st_.converged
    assert abs(st_.lam - 1) < 1e-10 and abs(st_.x) < 1e-10 and abs(st_.theta) < 1e-10
    assert frame.grid.l2_norm(st_.eps) < 1e-9


def test_decompose_scaled_real_data(grid, frame):
    u = 1.05 * periodized_profiles(grid)["Q"]
    alpha = 2 * (1.05 ** 2 - 1) * MASS_SQ
    st_ = decompose(grid, u, frame, alpha=alpha)
    assert st_.converged and st_.admissible
    assert_orthogonal(st_)
    assert abs(st_.theta) < 1e-12
    assert np.max(np.abs(st_.eps.imag)) < 1e-12
    assert abs(st_.e2_qd) < 1e-12
    back = reconstruct(grid, st_.lam, st_.x, st_.theta, st_.eps, frame)
    # the frame residue jumps by about Q(L_y) at its seam, so interpolation rings near the edge
    inside = np.abs(np.asarray(grid.x) - st_.x) < 0.75 * st_.lam * frame.grid.half_width
    assert np.max(np.abs(back - u)[inside]) < 1e-8


def test_decompose_refuses_inadmissible(grid, tables, frame):
    alpha = 0.1
    with pytest.raises(ValueError):
        decompose(grid, 2 * tables.Q, frame, alpha=alpha)
    st_ = decompose(grid, 1.02 * tables.Q, frame, alpha=1e-3, override=True)
    assert st_.admissible is False and st_.alpha_used == 1e-3


def test_decompose_reports_divergence(frame):
    u = reconstruct(ZGRID, 0.5, 2.0, 0.3)
    st_ = decompose(ZGRID, u, frame, guess=(1.0, 0.0, 0.0), max_iter=1)
    assert not st_.converged
    assert st_.message == "iteration cap reached"
    assert st_.newton_iters == 1


def test_theta_range(frame):
    st_ = decompose(ZGRID, reconstruct(ZGRID, 0.9, 0.0, 3.1), frame)
    assert -math.pi < st_.theta <= math.pi
    assert same_phase(st_.theta, 3.1) < 1e-9


def test_default_guess_proximity_ratios(frame):
    st_ = decompose(ZGRID, reconstruct(ZGRID, 0.8, 0.0, 0.0), frame)
    assert abs(st_.proximity_grad) < 1e-8
    # the mass-normalized ratio differs by the factor |Q_y|/|Q| = 1/sqrt(2)
    assert st_.proximity_mass == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-8)


# ---- round trip and covariances


@pytest.mark.parametrize("case", range(20))
def test_round_trip(frame, case):
    rng = np.random.default_rng(1000 + case)
    lam = rng.uniform(0.6, 1.2)
    x0 = rng.uniform(-3, 3)
    th = rng.uniform(-math.pi, math.pi)
    eps = synthetic_eps(frame, rng, rng.uniform(0.005, 0.05))
    assert frame.grid.weighted_norm(eps) <= 0.05 + 1e-12
    u = reconstruct(ZGRID, lam, x0, th, eps, frame)
    st_ = decompose(ZGRID, u, frame)
    assert st_.converged
    assert abs(st_.lam - lam) < 1e-8
    assert abs(st_.x - x0) < 1e-8
    assert same_phase(st_.theta, th) < 1e-8
    assert frame.grid.l2_norm(st_.eps - eps) < 1e-8


@pytest.fixture(scope="module")
def base_case(frame):
    rng = np.random.default_rng(7)
    eps = synthetic_eps(frame, rng, 0.04)
    u = reconstruct(ZGRID, 0.85, 0.3, 0.2, eps, frame)
    return u, decompose(ZGRID, u, frame)


@pytest.mark.parametrize("phi", [0.1, 1.0, 3.0])
def test_gauge_covariance(frame, base_case, phi):
    u, ref = base_case
    st_ = decompose(ZGRID, np.exp(1j * phi) * u, frame)
    assert same_phase(st_.theta, ref.theta - phi) < 1e-8
    assert abs(st_.lam - ref.lam) < 1e-8 and abs(st_.x - ref.x) < 1e-8
    assert frame.grid.l2_norm(st_.eps - ref.eps) < 1e-8


@pytest.mark.parametrize("d", [0.5, 2.0])
def test_translation_covariance(frame, base_case, d):
    u, ref = base_case
    shift = int(round(d / ZGRID.spacing))
    assert shift * ZGRID.spacing == d
    st_ = decompose(ZGRID, np.roll(u, shift), frame)
    assert st_.x == pytest.approx(ref.x + d, abs=1e-8)
    assert abs(st_.lam - ref.lam) < 1e-8 and same_phase(st_.theta, ref.theta) < 1e-8
    assert frame.grid.l2_norm(st_.eps - ref.eps) < 1e-8


@pytest.mark.parametrize("mu", [0.8, 1.25])
def test_scaling_covariance(frame, base_case, mu):
    u, ref = base_case
    g = ZGRID
    scaled = mu ** -0.5 * g.evaluate_affine(u, g.x[0] / mu, g.spacing / mu, g.n_points)
    st_ = decompose(g, scaled, frame)
    assert st_.lam == pytest.approx(ref.lam * mu, abs=1e-8)
    assert st_.x == pytest.approx(ref.x * mu, abs=1e-8)
    assert same_phase(st_.theta, ref.theta) < 1e-8
    assert frame.grid.l2_norm(st_.eps - ref.eps) < 1e-8


@settings(max_examples=10)
@given(st.floats(0.7, 1.1), st.floats(-2, 2), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_round_trip_property(lam, x0, th, seed):
    from dampnls.modulation import default_frame

    frame = default_frame()
    eps = synthetic_eps(frame, np.random.default_rng(seed), 0.02)
    st_ = decompose(ZGRID, reconstruct(ZGRID, lam, x0, th, eps, frame), frame)
    assert st_.converged
    assert abs(st_.lam - lam) < 1e-8 and abs(st_.x - x0) < 1e-8
    assert frame.grid.l2_norm(st_.eps - eps) < 1e-8


# ---- rescaled time


def test_rescaled_time_examples():
    t = np.linspace(0, 1, 11)
    assert np.allclose(rescaled_time(t, np.ones_like(t)), t, atol=1e-15)
    assert np.allclose(rescaled_time(t, 2 * np.ones_like(t)), t / 4, atol=1e-15)
    t = np.arange(0, 0.9 + 5e-5, 1e-4)
    s = rescaled_time(t, np.sqrt(1 - t))
    assert s[0] == 0.0 and np.all(np.diff(s) > 0)
    assert np.max(np.abs(s + np.log(1 - t))) < 1e-6


def test_rescaled_time_rejects():
    with pytest.raises(ValueError):
        rescaled_time([0, 1, 2], [1, 0, 1])
    with pytest.raises(ValueError):
        rescaled_time([0, 1, 1], [1, 1, 1])


# ---- momentum identity


def test_momentum_identity_ground_states(frame):
    for lam, x0, th in ((1.0, 0.0, 0.0), (0.7, 1.3, -0.4)):
        u = reconstruct(ZGRID, lam, x0, th)
        res = momentum_identity_check(ZGRID, decompose(ZGRID, u, frame), u)
        assert abs(res["momentum"]) < 1e-12 and abs(res["identity"]) < 1e-12


def test_momentum_identity_warm_started(frame):
    grid = Grid(1024, 16.0)
    cfg = SolverConfig(tail_tol=1e-8, grad_stop=100.0)
    u = warm_start(grid, 1.05, 0.4, cfg)
    u = u * np.exp(0.3j * np.sin(np.pi * np.asarray(grid.x) / 16.0))  # give it momentum
    st_ = decompose(grid, u, frame)
    res = momentum_identity_check(grid, st_, u)
    assert abs(res["momentum"]) > 1e-3
    assert res["residual"] < 1e-8


# ---- remainders


def test_remainder_zero(frame):
    R1, R2 = remainder_terms(frame.Q, np.zeros(frame.grid.n_points))
    assert np.max(np.abs(R1)) < 1e-14 and np.max(np.abs(R2)) < 1e-14


@pytest.mark.parametrize("unit", [1.0, 1j])
def test_remainder_quadratic(frame, unit):
    y = frame.grid
    base = unit / np.cosh(np.asarray(y.x))
    norms = []
    for c in (1e-2, 1e-3, 1e-4):
        R1, R2 = remainder_terms(frame.Q, c * base)
        norms.append(math.hypot(y.l2_norm(R1), y.l2_norm(R2)) / c ** 2)
    assert norms[1] == pytest.approx(norms[2], rel=0.05)
    assert norms[0] == pytest.approx(norms[1], rel=0.05)


def test_remainder_imaginary_part_is_quadratic(frame):
    y = frame.grid
    base = 1j / np.cosh(np.asarray(y.x))
    r2 = [y.l2_norm(remainder_terms(frame.Q, c * base)[1]) for c in (1e-2, 1e-3)]
    # eps purely imaginary: Im(|Q+eps|^4 (Q+eps)) - Q^4 eps_2 = O(c^3) (odd in eps_2)
    assert r2[0] / r2[1] > 99


# ---- refined residue


def test_refine_examples(frame):
    y = frame.grid
    zero = np.zeros(y.n_points, dtype=complex)
    assert np.all(refine(zero, zero, frame).eps_tilde == 0)
    real = 0.01 / np.cosh(np.asarray(y.x)) + 0j
    r = refine(real, np.gradient(real, y.spacing), frame)
    assert np.array_equal(r.eps_tilde, real) and r.coefficient == 0.0
    qd = 1j * frame.Q_d
    r = refine(qd, 1j * np.gradient(frame.Q_d, y.spacing), frame)
    coeff = y.integrate(frame.Q_d ** 2) / frame.yq_sq
    assert r.coefficient == pytest.approx(coeff, rel=1e-12)
    assert np.max(np.abs(r.eps_tilde.imag - (frame.Q_d + coeff * frame.W))) < 1e-14


def test_refined_residue_needs_converged(frame):
    st_ = decompose(ZGRID, reconstruct(ZGRID, 1.0, 0.0, 0.0), frame)
    assert np.max(np.abs(refined_residue(st_, frame).eps_tilde - st_.eps)) < 1e-9
    st_.converged = False
    with pytest.raises(ValueError):
        refined_residue(st_, frame)


# ---- the (eps_2, Q_y) bound


def test_e2qy_bound_check():
    eps = np.linspace(0.1, 0.01, 50)
    ok = e2qy_bound_check(0.5 * eps, eps)
    assert ok["passed"] and ok["kappa6"] == pytest.approx(0.5)
    edge = 0.5 * eps.copy()
    edge[-1] = 2.0 * 0.5 * eps[-1]
    assert e2qy_bound_check(edge, eps)["passed"]
    edge[-1] *= 1.05
    res = e2qy_bound_check(edge, eps)
    assert not res["passed"] and res["worst_margin"] < 0


# ---- eps equations


def complex_form_residuals(states, frame, damping, i):
    """Independent oracle: d_s v - [(lam_s/lam) v_d + (x_s/lam) v_y + i th_s v
    + i (v_yy + |v|^4 v) - a lam^2 v] with v = Q + eps and th_s = d theta/ds."""
    a_, b_, c_ = states[i - 1], states[i], states[i + 1]
    s = np.array([a_.s, b_.s, c_.s])

    def ds(f0, f1, f2):
        return np.polynomial.polynomial.polyfit(s - s[1], np.array([f0, f1, f2]), 2)[1]

    y = np.asarray(frame.grid.x)
    v = frame.Q + b_.eps
    v_y = frame.Q_y + b_.eps_y
    v_yy = (frame.Q - frame.Q ** 5) + b_.eps_yy
    v_s = ds(a_.eps.real, b_.eps.real, c_.eps.real) + 1j * ds(a_.eps.imag, b_.eps.imag, c_.eps.imag)
    lam_s = ds(*np.log([a_.lam, b_.lam, c_.lam]))
    x_s = ds(a_.x, b_.x, c_.x)
    th_s = ds(a_.theta, b_.theta, c_.theta)
    a_loc = damping(b_.lam * y + b_.x) * b_.lam ** 2 if damping is not None else 0.0
    rhs = (lam_s * (0.5 * v + y * v_y) + x_s / b_.lam * v_y + 1j * th_s * v
           + 1j * (v_yy + np.abs(v) ** 4 * v) - a_loc * v)
    r = v_s - rhs
    return frame.grid.l2_norm(r.real), frame.grid.l2_norm(r.imag)


@pytest.fixture(scope="module")
def damped_states():
    from dampnls.modulation import default_frame

    frame = default_frame()
    cfg = SolverConfig(t_max=0.1, cadence=2, order=4)
    grid = cfg.grid
    damping = make_damping(grid, "gaussian", {"amplitude": 0.5, "width": 2.0})
    u0 = make_initial_data(grid, "scaled_ground_state", {"c": 1.05}).u
    traj = evolve(u0, cfg, damping)
    states = decompose_series(grid, traj.t, traj.fields, frame)
    return frame, damping, states


def test_eps_residual_matches_complex_form(damped_states):
    frame, damping, states = damped_states
    res = eps_equation_residuals(states, frame, damping)
    for j, i in enumerate(res.index[:5]):
        o1, o2 = complex_form_residuals(states, frame, damping, i)
        assert res.eq1_l2[j] == pytest.approx(o1, rel=1e-8, abs=1e-13)
        assert res.eq2_l2[j] == pytest.approx(o2, rel=1e-8, abs=1e-13)


def test_eps_residual_max_l2_covers_both_equations(damped_states):
    frame, damping, states = damped_states
    res = eps_equation_residuals(states, frame, damping)
    assert res.max_l2 == max(res.eq1_l2.max(), res.eq2_l2.max())
    assert np.isnan(eps_equation_residuals(states[:2], frame, damping).max_l2)


def test_eps_residual_needs_damping_terms(damped_states):
    frame, damping, states = damped_states
    with_a = eps_equation_residuals(states, frame, damping)
    without = eps_equation_residuals(states, frame, None)
    assert with_a.max_weighted < 1e-3 * without.max_weighted


def test_eps_residual_second_order_in_spacing(damped_states):
    frame, damping, states = damped_states
    r1 = eps_equation_residuals(states, frame, damping, stride=1)
    r2 = eps_equation_residuals(states, frame, damping, stride=2)
    ratio = np.median(r2.weighted) / np.median(r1.weighted)
    assert 3.0 < ratio < 5.0


def test_eps_residual_skips_unconverged(damped_states):
    frame, damping, states = damped_states
    sub = [st_ for st_ in states[:8]]
    import copy

    sub = copy.deepcopy(sub)
    sub[3].converged = False
    res = eps_equation_residuals(sub, frame, damping)
    assert set(res.skipped) == {2, 3, 4}
    assert 3 not in res.index


def test_modulation_rows(damped_states):
    _, _, states = damped_states
    row = states[1].row()
    assert list(row) == MODULATION_COLUMNS
    assert states[0].s == 0.0 and all(b.s > a.s for a, b in zip(states, states[1:]))
