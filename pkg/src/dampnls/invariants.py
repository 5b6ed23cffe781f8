"""Mass, energy and momentum, and their evolution laws under damping.

With ``a = 0`` the three quantities are conserved.  Otherwise

    dC/dt = -2 int a |u|^2
    dE/dt = -int a |u_x|^2 + int a |u|^6 - Re int (u_x a_x) conj(u)
    dM/dt = -2 int a Im(u_x conj(u))

and the mass obeys |u0| exp(-|a|_inf t) <= |u(t)| <= |u0| exp(|a|_inf t).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, _check_finite


def conserved_quantities(grid: Grid, u: np.ndarray) -> tuple[float, float, float]:
    """``(C, E, M)`` = mass, energy, momentum of ``u``."""
    u = _check_finite(u, "u")
    ux = grid.derivative(np.asarray(u, dtype=complex))
    r2 = np.abs(u) ** 2
    C = float(grid.spacing * np.sum(r2))
    E = float(grid.spacing * np.sum(0.5 * np.abs(ux) ** 2 - r2 ** 3 / 6.0))
    M = float(grid.spacing * np.sum(np.imag(np.conj(u) * ux)))
    return C, E, M


def law_rhs(grid: Grid, u: np.ndarray, damping) -> tuple[float, float, float]:
    """Right-hand sides of the mass, energy and momentum laws at one instant."""
    a, a_x = damping.a, damping.a_x
    ux = grid.derivative(np.asarray(u, dtype=complex))
    r2 = np.abs(u) ** 2
    h = grid.spacing
    rhs_c = -2.0 * h * np.sum(a * r2)
    rhs_e = h * np.sum(-a * np.abs(ux) ** 2 + a * r2 ** 3 - np.real(ux * a_x * np.conj(u)))
    rhs_m = -2.0 * h * np.sum(a * np.imag(ux * np.conj(u)))
    return float(rhs_c), float(rhs_e), float(rhs_m)


def centered_rate(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second-order three-point derivative on a non-uniform grid, interior points only."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    return (-h1 / (h0 * (h0 + h1)) * y[:-2]
            + (h1 - h0) / (h0 * h1) * y[1:-1]
            + h0 / (h1 * (h0 + h1)) * y[2:])


@dataclass
class EvolutionLedger:
    t: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    momentum: np.ndarray
    rhs_mass: np.ndarray
    rhs_energy: np.ndarray
    rhs_momentum: np.ndarray
    # interior samples only (centered differences)
    rate_mass: np.ndarray
    rate_energy: np.ndarray
    rate_momentum: np.ndarray

    @property
    def t_interior(self) -> np.ndarray:
        return self.t[1:-1]

    def residual(self, law: str) -> np.ndarray:
        return getattr(self, f"rate_{law}") - getattr(self, f"rhs_{law}")[1:-1]

    def relative_residual(self, law: str) -> np.ndarray:
        rhs = np.abs(getattr(self, f"rhs_{law}")[1:-1])
        return np.abs(self.residual(law)) / np.where(rhs > 0, rhs, np.inf)

    def max_abs(self, law: str) -> float:
        return float(np.max(np.abs(self.residual(law))))

    def rows(self) -> list[dict]:
        out = []
        for i, t in enumerate(self.t):
            row = {"t": t, "mass": self.mass[i], "energy": self.energy[i],
                   "momentum": self.momentum[i], "rhs_mass": self.rhs_mass[i],
                   "rhs_energy": self.rhs_energy[i], "rhs_momentum": self.rhs_momentum[i]}
            for law in ("mass", "energy", "momentum"):
                if 0 < i < len(self.t) - 1:
                    r = self.residual(law)[i - 1]
                    rel = self.relative_residual(law)[i - 1]
                    row[f"rate_{law}"] = getattr(self, f"rate_{law}")[i - 1]
                    row[f"res_{law}"] = r
                    row[f"relres_{law}"] = rel if np.isfinite(rel) else float("nan")
                else:
                    row[f"rate_{law}"] = row[f"res_{law}"] = row[f"relres_{law}"] = float("nan")
            out.append(row)
        return out


LEDGER_COLUMNS = ["t", "mass", "energy", "momentum", "rhs_mass", "rhs_energy", "rhs_momentum",
                  "rate_mass", "res_mass", "relres_mass", "rate_energy", "res_energy",
                  "relres_energy", "rate_momentum", "res_momentum", "relres_momentum"]


def law_residuals(times: np.ndarray, fields: list[np.ndarray], grid: Grid, damping) -> EvolutionLedger:
    """Compare centered-difference rates of C, E, M with the law right-hand sides."""
    if len(fields) < 3:
        raise ValueError("law residuals need at least 3 samples")
    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must increase strictly")
    q = np.array([conserved_quantities(grid, u) for u in fields])
    r = np.array([law_rhs(grid, u, damping) for u in fields])
    return EvolutionLedger(
        t=t, mass=q[:, 0], energy=q[:, 1], momentum=q[:, 2],
        rhs_mass=r[:, 0], rhs_energy=r[:, 1], rhs_momentum=r[:, 2],
        rate_mass=centered_rate(t, q[:, 0]), rate_energy=centered_rate(t, q[:, 1]),
        rate_momentum=centered_rate(t, q[:, 2]),
    )


def trajectory_ledger(traj) -> EvolutionLedger:
    return law_residuals(traj.t, traj.fields, traj.grid, traj.damping)


@dataclass
class MassBoundResult:
    passed: bool
    worst_margin: float
    lower_slack: np.ndarray
    upper_slack: np.ndarray


def mass_bound_check(times, masses, sup_a: float, rtol: float = 1e-10) -> MassBoundResult:
    """Check ``|u0| e^{-|a| t} <= |u(t)| <= |u0| e^{|a| t}`` at every sample.

    Slacks are relative to ``|u0|``; a sample passes when both slacks exceed
    ``-rtol`` (allowance for the solver's mass drift in the equality case).
    """
    t = np.asarray(times, dtype=float) - float(times[0])
    norms = np.sqrt(np.asarray(masses, dtype=float))
    n0 = norms[0]
    lower = (norms - n0 * np.exp(-sup_a * t)) / n0
    upper = (n0 * np.exp(sup_a * t) - norms) / n0
    worst = float(min(lower.min(), upper.min()))
    return MassBoundResult(passed=worst >= -rtol, worst_margin=worst,
                           lower_slack=lower, upper_slack=upper)
