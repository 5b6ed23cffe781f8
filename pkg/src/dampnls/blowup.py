"""Blow-up diagnostics built from a trajectory and its modulation series.

Every universal constant of the asymptotic analysis (the gap constant ``D``,
the exponential-bound constants ``B'`` and ``B*`` with their exponent
``sigma``, and the rate constant ``C*``) is treated as a fit output with a
stability criterion, never as a known input.  Every check carries a
worst-case margin: positive means satisfied.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import math

import numpy as np
from scipy.integrate import trapezoid

from .groundstate import GRAD_SQ, MASS_SQ, YQ_SQ
from .modulation import e2qy_bound_check

SIGMAS = (0.0, 0.5, 1.0, 2.0)
TRANSIENT_FACTOR = 3.0


class NoBlowupError(ValueError):
    """The series shows no collapse to fit."""


@dataclass(frozen=True)
class Check:
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"passed": bool(self.passed), "margin": _num(self.margin), **_num(self.detail)}


def _num(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_num(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def post_transient_mask(grad, factor: float = TRANSIENT_FACTOR) -> np.ndarray:
    """Samples from the first time ``|u_x| >= factor |Q_x|`` onwards."""
    grad = np.asarray(grad, dtype=float)
    hit = np.nonzero(grad >= factor * math.sqrt(GRAD_SQ))[0]
    mask = np.zeros(grad.size, dtype=bool)
    if hit.size:
        mask[hit[0]:] = True
    return mask


# --------------------------------------------------------------------------- blow-up time


@dataclass(frozen=True)
class TFit:
    T: float
    slope: float
    rel_residual: float
    n_points: int
    lambda_range: tuple


def estimate_T(t, lam, decade: float = 10.0) -> TFit:
    """Fit ``lambda^2 = c (T - t)`` over the final decade of ``lambda``."""
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if t.size < 3 or lam.max() < 4.0 * lam[-1]:
        raise NoBlowupError("no blow-up detected: lambda does not fall by a factor 4")
    above = np.nonzero(lam > decade * lam[-1])[0]
    start = above[-1] + 1 if above.size else 0
    tw, l2 = t[start:], lam[start:] ** 2
    if tw.size < 3:
        raise NoBlowupError("too few samples in the final decade of lambda")
    slope, intercept = np.polyfit(tw, l2, 1)
    if not slope < 0:
        raise NoBlowupError("lambda^2 is not decreasing over the fit window")
    T = -intercept / slope
    res = l2 - (intercept + slope * tw)
    rel = float(np.sqrt(np.mean(res ** 2)) / np.sqrt(np.mean(l2 ** 2)))
    return TFit(T=float(T), slope=float(slope), rel_residual=rel, n_points=int(tw.size),
                lambda_range=(float(lam[start:].min()), float(lam[start:].max())))


# --------------------------------------------------------------------------- ladder


@dataclass(frozen=True)
class LadderEntry:
    k: int
    t_k: float
    lambda_k: float
    gap: float


def ladder_start_level(lam0: float) -> int:
    """``k0`` with ``2^-k0 >= lam0 > 2^-(k0+1)``."""
    if not lam0 > 0:
        raise ValueError("lambda(0) must be positive")
    return int(math.floor(-math.log2(lam0)))


def build_ladder(t, lam, min_levels: int = 3) -> list[LadderEntry]:
    """Times of first crossing ``lambda(t_k) = 2^-k``, interpolated in ``log lambda``.

    The first rung is ``k0`` and sits at the first sample by convention.
    """
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be positive")
    k0 = ladder_start_level(lam[0])
    times = [float(t[0])]
    ks = [k0]
    loglam = np.log(lam)
    k = k0 + 1
    while True:
        target = -k * math.log(2.0)
        idx = np.nonzero(loglam <= target)[0]
        if not idx.size:
            break
        i = int(idx[0])
        if i == 0:
            tk = float(t[0])
        else:
            w = (loglam[i - 1] - target) / (loglam[i - 1] - loglam[i])
            tk = float(t[i - 1] + w * (t[i] - t[i - 1]))
        times.append(tk)
        ks.append(k)
        k += 1
    if len(ks) < min_levels:
        raise ValueError(f"lambda spans {len(ks)} dyadic levels, need {min_levels}")
    gaps = np.append(np.diff(times), np.nan)
    return [LadderEntry(k=kk, t_k=tk, lambda_k=2.0 ** -kk, gap=float(g))
            for kk, tk, g in zip(ks, times, gaps)]


@dataclass(frozen=True)
class GapCheck:
    D_fit: float
    ratios: np.ndarray
    ks: np.ndarray
    stability: float
    stable: bool
    h3: Check
    h3_tilde: Check


def ladder_gap_check(ladder: list[LadderEntry], lam0: float, sigma: float = 0.0,
                     stability_factor: float = 3.0) -> GapCheck:
    """``gap_k / (|log(lam0^sigma lam_k)|^(1/2) lam_k^2)`` per rung and its maximum ``D_fit``.

    The opening rung is excluded (its time is a convention, not a crossing),
    as is any rung where the logarithm vanishes.  Also checks the crude gap
    bounds ``gap <= lam^(3/2)`` and ``gap < lam^(7/4)``.
    """
    rungs = [e for e in ladder[1:] if math.isfinite(e.gap)]
    ks, ratios, m3, m74 = [], [], [], []
    for e in rungs:
        lg = abs(sigma * math.log(lam0) + math.log(e.lambda_k))
        m3.append(e.lambda_k ** 1.5 - e.gap)
        m74.append(e.lambda_k ** 1.75 - e.gap)
        if lg == 0.0:
            continue
        ks.append(e.k)
        ratios.append(e.gap / (math.sqrt(lg) * e.lambda_k ** 2))
    ratios = np.array(ratios)
    D = float(ratios.max()) if ratios.size else float("nan")
    stab = float(ratios.max() / ratios.min()) if ratios.size else float("nan")
    h3_margin = float(min(m3)) if m3 else float("nan")
    h3t_margin = float(min(m74)) if m74 else float("nan")
    return GapCheck(
        D_fit=D, ratios=ratios, ks=np.array(ks), stability=stab,
        stable=bool(ratios.size >= 2 and stab <= stability_factor),
        h3=Check(bool(m3) and h3_margin >= 0.0, h3_margin),
        h3_tilde=Check(bool(m74) and h3t_margin > 0.0, h3t_margin))


# --------------------------------------------------------------------------- monotony


def forward_max_ratio(lam) -> np.ndarray:
    """``max_{later} lambda / lambda`` at every sample."""
    lam = np.asarray(lam, dtype=float)
    later = np.maximum.accumulate(lam[::-1])[::-1]
    return later / lam


def quasi_monotony_check(lam) -> dict:
    """Worst rebound ``max_{t' >= t} lambda(t') / lambda(t)`` against 2 and 3/2."""
    lam = np.asarray(lam, dtype=float)
    if lam.size == 0:
        raise ValueError("empty series")
    ratio = float(forward_max_ratio(lam).max())
    return {"ratio": ratio, "two": Check(ratio < 2.0, 2.0 - ratio),
            "three_halves": Check(ratio < 1.5, 1.5 - ratio)}


# --------------------------------------------------------------------------- positivity


@dataclass(frozen=True)
class PositivityResult:
    status: str
    first_positive_time: float
    positive_on_tail: Check
    bprime: dict
    bstar: dict
    exp_bound: dict


def positivity_and_exp_bound(t, e2qd, lam, lam0: float, sigmas=SIGMAS,
                             degenerate_tol: float = 1e-6) -> PositivityResult:
    """Positivity of ``(eps_2, Q_d)`` and the fitted exponential-bound constants.

    On the tail where the pairing stays positive, for each ``sigma``:

        B'(sigma) = min (eps_2, Q_d)^2 |log(lam0^(2 sigma) lam^2)|
        B*(sigma) = min (eps_2, Q_d)   |log(lam0^sigma lam)|^(1/2)

    so ``lam0^(2 sigma) lam^2 <= exp(-B'/(eps_2,Q_d)^2)`` holds on that tail
    with ``B' = B'(sigma)``; the bound is meaningful when ``B' > 0``.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e2qd, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.max(np.abs(e)) < degenerate_tol:
        nan = float("nan")
        none = {s: nan for s in sigmas}
        return PositivityResult("degenerate, no blow-up regime", nan,
                                Check(False, nan), none, none,
                                {s: Check(False, nan) for s in sigmas})
    bad = np.nonzero(e <= 0.0)[0]
    start = int(bad[-1]) + 1 if bad.size else 0
    if start >= e.size:
        nan = float("nan")
        none = {s: nan for s in sigmas}
        return PositivityResult("never positive: (eps_2, Q_d) > 0 not achieved", nan,
                                Check(False, float(e[-1])), none, none,
                                {s: Check(False, nan) for s in sigmas})
    tail = slice(start, None)
    bprime, bstar, expb = {}, {}, {}
    for s in sigmas:
        lg = np.abs(2.0 * s * math.log(lam0) + 2.0 * np.log(lam[tail]))
        bp = float(np.min(e[tail] ** 2 * lg))
        bprime[s] = bp
        bstar[s] = float(np.min(e[tail] * np.sqrt(0.5 * lg)))
        lhs = 2.0 * s * math.log(lam0) + 2.0 * np.log(lam[tail])
        # log-form margin: -B'/(eps_2,Q_d)^2 - log(lam0^(2 sigma) lam^2) >= 0
        margin = float(np.min(-bp / e[tail] ** 2 - lhs))
        expb[s] = Check(bp > 0.0 and margin >= -1e-12, bp, {"log_margin": margin})
    status = "positive on tail" if start > 0 else "positive throughout"
    return PositivityResult(status, float(t[start]),
                            Check(True, float(np.min(e[tail])), {"start_index": start}),
                            bprime, bstar, expb)


# --------------------------------------------------------------------------- integral inequality


@dataclass(frozen=True)
class IntegralTerms:
    s1: float
    s2: float
    A: float
    B: float
    C: float

    @property
    def slack_lower(self) -> float:
        return self.B - self.A

    @property
    def slack_upper(self) -> float:
        return self.C - self.B

    @property
    def relative(self) -> float:
        if self.B == 0.0:
            return 0.0
        return max(abs(self.slack_lower), abs(self.slack_upper)) / abs(self.B)


def integral_terms(s, e2qd, lam, s1: float, s2: float, require_halving: bool = True,
                   yq_sq: float = YQ_SQ) -> IntegralTerms:
    """``A = 3 int (eps_2,Q_d)``, ``B = -|yQ|^2 log(lam(s2)/lam(s1))``, ``C = 5 int (eps_2,Q_d)``."""
    s = np.asarray(s, dtype=float)
    e = np.asarray(e2qd, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if s2 < s1:
        raise ValueError("window must have s2 >= s1")
    if s1 < s[0] or s2 > s[-1]:
        raise ValueError("window lies outside the series")
    if s1 == s2:
        return IntegralTerms(s1, s2, 0.0, 0.0, 0.0)
    l1 = float(np.exp(np.interp(s1, s, np.log(lam))))
    l2 = float(np.exp(np.interp(s2, s, np.log(lam))))
    if require_halving and not l2 <= 0.5 * l1 * (1.0 + 1e-9):
        raise ValueError("window too short: lambda does not halve across it")
    inside = (s > s1) & (s < s2)
    ss = np.concatenate(([s1], s[inside], [s2]))
    ee = np.concatenate(([np.interp(s1, s, e)], e[inside], [np.interp(s2, s, e)]))
    integral = float(trapezoid(ee, ss))
    return IntegralTerms(s1, s2, 3.0 * integral, -yq_sq * math.log(l2 / l1), 5.0 * integral)


def integral_inequality_check(s, t, e2qd, lam, ladder: list[LadderEntry]) -> dict:
    """Integral sandwich over each dyadic halving ``[s(t_k), s(t_k+1)]`` of the ladder."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    windows = []
    for a, b in zip(ladder[:-1], ladder[1:]):
        if a is ladder[0]:
            continue  # the opening rung is a convention, not a halving
        s1 = float(np.interp(a.t_k, t, s))
        s2 = float(np.interp(b.t_k, t, s))
        windows.append((a.k, integral_terms(s, e2qd, lam, s1, s2)))
    if not windows:
        return {"windows": [], "max_relative_slack": float("nan"), "bounded": Check(False, float("nan"))}
    rel = max(w.relative for _, w in windows)
    return {"windows": [{"k": k, "s1": w.s1, "s2": w.s2, "A": w.A, "B": w.B, "C": w.C,
                         "slack_lower": w.slack_lower, "slack_upper": w.slack_upper,
                         "relative": w.relative} for k, w in windows],
            "max_relative_slack": rel, "bounded": Check(rel < 1.0, 1.0 - rel)}


# --------------------------------------------------------------------------- hypotheses


@dataclass
class HypothesisRecord:
    t: np.ndarray
    h1_bound: float
    margins: dict
    first_violation: dict
    lemma5_product: np.ndarray

    def check(self, name: str) -> Check:
        m = self.margins[name]
        worst = float(np.min(m)) if np.size(m) else float("nan")
        return Check(bool(np.size(m)) and worst >= 0.0, worst,
                     {"first_violation": self.first_violation[name]})


def _first_violation(t, margin):
    bad = np.nonzero(np.asarray(margin) < 0.0)[0]
    return float(t[bad[0]]) if bad.size else None


def h1_time_bound(sup_a: float, alpha: float) -> float:
    """``log((|Q|^2 + alpha)/(|Q|^2 + alpha/2)) / (2 |a|_inf)``; infinite without damping."""
    if sup_a == 0.0:
        return math.inf
    return math.log((MASS_SQ + alpha) / (MASS_SQ + 0.5 * alpha)) / (2.0 * sup_a)


def hypotheses_monitor(t, lam, energy, grad, eps_norm, sup_a: float, alpha: float,
                       ladder: list[LadderEntry] | None = None) -> HypothesisRecord:
    """Margins of (H1)-(H5) at every sample, and the product ``E lambda^(3/2)``.

    (H1) elapsed time within the damping bound; (H2) ``E <= alpha |u_x|^2``;
    (H3) ladder gaps ``<= lambda^(3/2)``; (H4) ``lambda(t') <= 2 lambda(t)``
    for later ``t'``; (H5) ``lambda^(1/2) <= |eps|^2``.
    """
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    energy = np.asarray(energy, dtype=float)
    grad = np.asarray(grad, dtype=float)
    eps_norm = np.asarray(eps_norm, dtype=float)
    bound = h1_time_bound(sup_a, alpha)
    margins = {
        "H1": (bound - (t - t[0])) if math.isfinite(bound) else np.full(t.size, math.inf),
        "H2": alpha * grad ** 2 - energy,
        "H4": 2.0 - forward_max_ratio(lam),
        "H5": eps_norm ** 2 - np.sqrt(lam),
    }
    if ladder:
        gaps = [(e.t_k, e.lambda_k ** 1.5 - e.gap) for e in ladder if math.isfinite(e.gap)]
        margins["H3"] = np.array([g for _, g in gaps])
        first_h3 = next((tk for tk, g in gaps if g < 0), None)
    else:
        margins["H3"] = np.array([])
        first_h3 = None
    first = {k: _first_violation(t, v) for k, v in margins.items() if k != "H3"}
    first["H3"] = first_h3
    return HypothesisRecord(t=t, h1_bound=bound, margins=margins, first_violation=first,
                            lemma5_product=energy * lam ** 1.5)


# --------------------------------------------------------------------------- rate


@dataclass(frozen=True)
class RateFit:
    slope: float
    C_star: float
    window_c_stars: np.ndarray
    window_edges: np.ndarray
    stability: float
    stable: bool
    slope_ok: bool


def rate_fit(t, grad, T: float, floor: float | None = None,
             slope_range=(-0.60, -0.45)) -> RateFit:
    """Power law of ``|u_x|`` in ``T - t`` and the constant of the log-corrected bound.

    ``C* = max |u_x| (T-t)^(1/2) / |log(T-t)|^(1/4)`` over the samples with
    ``|u_x| >= floor``; the same maximum over every decade-wide gradient
    window whose lower edge steps by half a decade measures stability.
    """
    t = np.asarray(t, dtype=float)
    g = np.asarray(grad, dtype=float)
    floor = TRANSIENT_FACTOR * math.sqrt(GRAD_SQ) if floor is None else floor
    keep = post_transient_mask(g, floor / math.sqrt(GRAD_SQ)) & (t < T)
    tw, gw = t[keep], g[keep]
    if tw.size < 3 or gw.max() < 10.0 * floor:
        raise ValueError("window too short: less than one decade of gradient growth")
    tau = T - tw
    slope = float(np.polyfit(np.log(tau), np.log(gw), 1)[0])
    cs = gw * np.sqrt(tau) / np.abs(np.log(tau)) ** 0.25
    edges, stars = [], []
    lo = floor
    while 10.0 * lo <= gw.max():
        sel = (gw >= lo) & (gw <= 10.0 * lo)
        edges.append(lo)
        stars.append(float(cs[sel].max()))
        lo *= math.sqrt(10.0)
    stars = np.array(stars)
    stab = float(stars.max() / stars.min())
    return RateFit(slope=slope, C_star=float(cs.max()), window_c_stars=stars,
                   window_edges=np.array(edges), stability=stab,
                   stable=bool(stab < 2.0),
                   slope_ok=bool(slope_range[0] <= slope <= slope_range[1]))


# --------------------------------------------------------------------------- report


@dataclass
class ModulationSeries:
    """Scalar columns of a modulation run (what the diagnostics consume)."""
    t: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    e2_qd: np.ndarray
    eps_norm: np.ndarray
    converged: np.ndarray
    e2_qy: np.ndarray | None = None

    @classmethod
    def from_states(cls, states) -> "ModulationSeries":
        def col(name):
            return np.array([getattr(st, name) for st in states], dtype=float)
        return cls(t=col("t"), s=col("s"), lam=col("lam"), e2_qd=col("e2_qd"),
                   eps_norm=col("eps_norm"),
                   converged=np.array([bool(st.converged) for st in states], dtype=bool),
                   e2_qy=col("e2_qy"))

    @classmethod
    def from_columns(cls, cols: dict) -> "ModulationSeries":
        return cls(t=np.asarray(cols["t"], float), s=np.asarray(cols["s"], float),
                   lam=np.asarray(cols["lambda"], float), e2_qd=np.asarray(cols["e2_qd"], float),
                   eps_norm=np.asarray(cols["eps_norm"], float),
                   converged=np.asarray(cols["converged"], float) > 0,
                   e2_qy=np.asarray(cols["e2_qy"], float) if "e2_qy" in cols else None)

    def converged_only(self) -> "ModulationSeries":
        m = self.converged & np.isfinite(self.s)
        return ModulationSeries(self.t[m], self.s[m], self.lam[m], self.e2_qd[m],
                                self.eps_norm[m], self.converged[m],
                                None if self.e2_qy is None else self.e2_qy[m])

    def __len__(self):
        return int(self.t.size)


@dataclass
class BlowupReport:
    stop_reason: str
    T_est: float | None
    T_fit: dict
    ladder: list[LadderEntry]
    fits: dict
    checks: dict
    window: dict
    notes: list[str] = field(default_factory=list)
    samples: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stop_reason": self.stop_reason,
            "T_est": _num(self.T_est) if self.T_est is not None else None,
            "T_fit": {k: _num(v) for k, v in self.T_fit.items()},
            "ladder": [{k: _num(v) for k, v in asdict(e).items()} for e in self.ladder],
            "fits": _num(self.fits),
            "checks": {k: (v.as_dict() if isinstance(v, Check) else _num(v))
                       for k, v in self.checks.items()},
            "window": {k: _num(v) for k, v in self.window.items()},
            "notes": list(self.notes),
        }


REPORT_COLUMNS = ["t", "s", "lambda", "grad_norm", "energy", "e2_qd", "eps_norm", "post_transient",
                  "rebound_ratio", "H1", "H2", "H4", "H5", "E_lambda_3_2"]


def blowup_report(traj_t, traj_grad, traj_energy, series: ModulationSeries, stop_reason: str,
                  sup_a: float, alpha: float, sigmas=SIGMAS) -> BlowupReport:
    """Assemble every diagnostic for one run.

    ``traj_*`` are the full trajectory columns; ``series`` holds the
    modulation scalars from the warm-started initial time onwards.  Checks
    that need a post-transient window use the samples with ``|u_x| >= 3 |Q_x|``.
    """
    traj_t = np.asarray(traj_t, dtype=float)
    traj_grad = np.asarray(traj_grad, dtype=float)
    traj_energy = np.asarray(traj_energy, dtype=float)
    notes: list[str] = []
    checks: dict = {}
    fits: dict = {"sigma_used": list(sigmas)}
    lam_est = math.sqrt(GRAD_SQ) / traj_grad
    try:
        tf = estimate_T(traj_t, lam_est)
        T = tf.T
        T_fit = {"T": tf.T, "slope": tf.slope, "rel_residual": tf.rel_residual,
                 "n_points": tf.n_points, "lambda_min": tf.lambda_range[0],
                 "lambda_max": tf.lambda_range[1]}
        checks["T_beyond_last_sample"] = Check(T > traj_t[-1], T - traj_t[-1])
    except NoBlowupError as exc:
        T, T_fit = None, {}
        notes.append(str(exc))
    growth = float(traj_grad.max() / traj_grad[0])
    checks["growth_100"] = Check(growth >= 100.0, growth - 100.0, {"growth": growth})

    n_all = len(series)
    ms = series.converged_only()
    if len(ms) < n_all:
        notes.append(f"{n_all - len(ms)} modulation states did not converge and were dropped")
    window = {"stop_reason": stop_reason, "growth": growth, "n_states": len(ms),
              "t_first": traj_t[0], "t_last": traj_t[-1]}
    ladder: list[LadderEntry] = []
    samples: list[dict] = []
    if len(ms):
        ts, ss, lam, e2qd, eps_norm = ms.t, ms.s, ms.lam, ms.e2_qd, ms.eps_norm
        idx = np.clip(np.searchsorted(traj_t, ts), 0, traj_t.size - 1)
        grad_m, energy_m = traj_grad[idx], traj_energy[idx]
        lam0 = float(lam[0])
        window.update({"lambda_start": lam0, "lambda_end": float(lam[-1]),
                       "t_warm_start": float(ts[0])})
        post = post_transient_mask(grad_m)
        window["t_post_transient"] = float(ts[post][0]) if post.any() else float("nan")
        try:
            ladder = build_ladder(ts, lam)
        except ValueError as exc:
            notes.append(str(exc))
        if ladder:
            gc = {s: ladder_gap_check(ladder, lam0, s) for s in sigmas}
            fits["D_fit"] = {s: gc[s].D_fit for s in sigmas}
            fits["D_stability"] = {s: gc[s].stability for s in sigmas}
            g0 = gc[sigmas[0]]
            checks["D_fit_stable"] = Check(g0.stable, 3.0 - g0.stability)
            checks["H3"] = g0.h3
            checks["H3_tilde"] = g0.h3_tilde
            checks["ladder_entries"] = Check(len(ladder) >= 4, len(ladder) - 4.0,
                                             {"count": len(ladder)})
            integ = integral_inequality_check(ss, ts, e2qd, lam, ladder)
            checks["integral_inequality"] = integ["bounded"]
            fits["integral_windows"] = integ["windows"]
        win = post if post.any() else np.ones(ts.size, dtype=bool)
        if not post.any():
            notes.append("no post-transient samples (|u_x| never reached 3 |Q_x|); "
                         "positivity evaluated on all states")
        pos = positivity_and_exp_bound(ts[win], e2qd[win], lam[win], lam0, sigmas)
        fits["Bprime_fit"] = pos.bprime
        fits["Bstar_fit"] = pos.bstar
        window["positivity_status"] = pos.status
        checks["e2qd_positive_after"] = Check(
            pos.positive_on_tail.passed and pos.first_positive_time == ts[win][0],
            pos.positive_on_tail.margin,
            {"first_positive_time": pos.first_positive_time, "status": pos.status})
        checks["exp_bound"] = pos.exp_bound[sigmas[0]]
        if post.any():
            qm = quasi_monotony_check(lam[post])
            checks["quasi_monotony_2"] = qm["two"]
            checks["quasi_monotony_3_2"] = qm["three_halves"]
            hyp = hypotheses_monitor(ts[post], lam[post], energy_m[post], grad_m[post],
                                     eps_norm[post], sup_a, alpha, ladder)
            for h in ("H1", "H2", "H3", "H4", "H5"):
                checks[h] = hyp.check(h)
            prod = hyp.lemma5_product
            checks["lemma5_product"] = Check(True, float(np.max(prod)),
                                             {"max_E_lambda_3_2": float(np.max(prod))})
        if ms.e2_qy is not None:
            b = e2qy_bound_check(ms.e2_qy, eps_norm)
            checks["e2qy_bound"] = Check(b["passed"], b["worst_margin"], {"kappa6": b["kappa6"]})
        full = hypotheses_monitor(ts, lam, energy_m, grad_m, eps_norm, sup_a, alpha)
        rebound = forward_max_ratio(lam)
        for i in range(ts.size):
            samples.append({"t": ts[i], "s": ss[i], "lambda": lam[i], "grad_norm": grad_m[i],
                            "energy": energy_m[i], "e2_qd": e2qd[i], "eps_norm": eps_norm[i],
                            "post_transient": int(post[i]), "rebound_ratio": rebound[i],
                            "H1": full.margins["H1"][i], "H2": full.margins["H2"][i],
                            "H4": full.margins["H4"][i], "H5": full.margins["H5"][i],
                            "E_lambda_3_2": full.lemma5_product[i]})
    if T is not None:
        try:
            rf = rate_fit(traj_t, traj_grad, T)
            fits["C_star"] = rf.C_star
            fits["rate_slope"] = rf.slope
            fits["C_star_windows"] = rf.window_c_stars
            checks["rate_slope"] = Check(rf.slope_ok, min(rf.slope + 0.60, -0.45 - rf.slope),
                                         {"slope": rf.slope})
            checks["C_star_stable"] = Check(rf.stable, 2.0 - rf.stability,
                                            {"stability": rf.stability})
        except ValueError as exc:
            notes.append(f"rate fit: {exc}")
    return BlowupReport(stop_reason=stop_reason, T_est=T, T_fit=T_fit, ladder=ladder,
                        fits=fits, checks=checks, window=window, notes=notes, samples=samples)
