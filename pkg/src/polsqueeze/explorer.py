"""Parameter-space tools: optimum search, squeezing-region boundary, sweeps,
and the equal-amplitude experimental preset."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import fock_oracle
from .criteria import S1_AXIS, Direction, assess, s1_factor, VERDICT_MARGIN
from .stokes_core import (
    StokesMoments,
    check_time,
    closed_form,
    make_coherent_input,
    variance_stokes,
)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_RESOLUTION = math.pi / 1440.0
OPTIMUM_TIE_TOL = 1e-9


class DegenerateOptimumError(ValueError):
    """At T = 0 the S1 factor never drops below 1; there is nothing to optimize."""


class BudgetExceededError(ValueError):
    def __init__(self, count: int, budget: int, method: str):
        self.count = count
        self.budget = budget
        super().__init__(f"{method} sweep of {count} points exceeds the budget of {budget}")


def golden_section(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


@dataclass(frozen=True)
class OptimumReport:
    T: float
    theta_star: float
    phase_sum_star: float
    factor_min: float
    degree_max: float
    grid_resolution: float
    grid_factor_min: float
    all_optima: list

    def as_dict(self) -> dict:
        return {
            "T": self.T,
            "theta_star": self.theta_star,
            "phase_sum_star": self.phase_sum_star,
            "factor_min": self.factor_min,
            "degree_max": self.degree_max,
            "grid_resolution": self.grid_resolution,
            "grid_factor_min": self.grid_factor_min,
            "all_optima": [list(p) for p in self.all_optima],
        }


def optimize_factor(T, grid_resolution: float = DEFAULT_RESOLUTION, refine_rounds: int = 4) -> OptimumReport:
    """Minimize the S1 squeezing factor over ``theta`` and ``u = phi_x + phi_y``.

    A full grid scan over ``theta in [0, pi/2]``, ``u in [0, 2 pi)`` is followed
    by alternating golden-section line searches inside the best grid cell.
    """
    T = check_time(T)
    if T == 0:
        raise DegenerateOptimumError("no squeezing at T=0: the S1 factor is >= 1 everywhere")
    if not 0 < grid_resolution <= 0.1:
        raise ValueError(f"grid_resolution must lie in (0, 0.1], got {grid_resolution}")

    n_theta = int(math.ceil((math.pi / 2) / grid_resolution)) + 1
    n_u = int(math.ceil(2 * math.pi / grid_resolution))
    thetas = np.linspace(0.0, math.pi / 2, n_theta)
    us = np.arange(n_u) * (2 * math.pi / n_u)
    grid = s1_factor(thetas[:, None], us[None, :], T)

    best = float(np.min(grid))
    ii, jj = np.nonzero(grid <= best + OPTIMUM_TIE_TOL)
    optima = sorted((float(thetas[i]), float(us[j])) for i, j in zip(ii, jj))
    theta0, u0 = optima[0]
    dth, du = thetas[1] - thetas[0], us[1] - us[0]

    theta, u, value = theta0, u0, best
    for _ in range(refine_rounds):
        theta, value = golden_section(
            lambda t: float(s1_factor(t, u, T)),
            max(0.0, theta0 - dth), min(math.pi / 2, theta0 + dth))
        u, value = golden_section(lambda x: float(s1_factor(theta, x, T)), u0 - du, u0 + du)
    # golden section may end a hair off a grid point that was already optimal
    if best <= value:
        theta, u, value = theta0, u0, best
    u = math.fmod(u, 2 * math.pi) % (2 * math.pi)
    return OptimumReport(T, theta, u, value, 1.0 - value, grid_resolution, best, optima)


@dataclass(frozen=True)
class BoundaryCurve:
    samples: list  # (T, phi1, phi2)

    def as_rows(self):
        return [("T", "phi1", "phi2"), *self.samples]


def boundary_phase(T):
    """Lower edge ``arcsin(tanh T)`` of the no-squeezing band at ``theta = pi/4``."""
    return np.arcsin(np.tanh(T))


def boundary_curve(T_max: float, steps: int) -> BoundaryCurve:
    """Samples at ``T = T_max * i / steps``, ``i = 1..steps`` (never ``T = 0``).

    For ``theta = pi/4`` the S1 factor is ``1/(cosh 2T - sinh 2T sin u)``; it
    equals 1 exactly at ``sin u = tanh T``, i.e. at ``phi1`` and ``pi - phi1``.
    """
    T_max = check_time(T_max)
    if not T_max > 0:
        raise ValueError(f"T_max must be > 0, got {T_max}")
    if int(steps) != steps or steps < 2:
        raise ValueError(f"steps must be an integer >= 2, got {steps}")
    samples = []
    for i in range(1, int(steps) + 1):
        T = T_max * i / steps
        phi1 = float(boundary_phase(T))
        samples.append((T, phi1, math.pi - phi1))
    return BoundaryCurve(samples)


SWEEP_AXES = ("A", "theta", "phi_x", "phi_y", "T")
SWEEP_DEFAULTS = {"A": 1.0, "theta": math.pi / 4, "phi_x": 3 * math.pi / 4,
                  "phi_y": 3 * math.pi / 4, "T": 1.0}
SWEEP_COLUMNS = ("A", "theta", "phi_x", "phi_y", "T", "S0", "S1", "S2", "S3",
                 "V1", "V2", "V3", "factor", "degree", "luis_max")
ANALYTIC_BUDGET = 10**6
ORACLE_BUDGET = 10**3


@dataclass
class SweepTable:
    columns: tuple
    rows: list = field(default_factory=list)
    method: str = "analytic"

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def _grid_points(grid: dict):
    unknown = set(grid) - set(SWEEP_AXES)
    if unknown:
        raise ValueError(f"unknown sweep axes {sorted(unknown)}; choose from {SWEEP_AXES}")
    axes = [np.atleast_1d(np.asarray(grid.get(k, SWEEP_DEFAULTS[k]), dtype=float))
            for k in SWEEP_AXES]
    return axes, math.prod(len(a) for a in axes)


def _record(point, m: StokesMoments, n: Direction, margin: float) -> tuple:
    a = assess(m, n, margin)
    return (*point, float(m.s0), *map(float, m.s_vec), *map(float, m.variances),
            a.factor, a.degree, a.verdicts["luis_max"])


def _max_rel_delta(a: StokesMoments, b: StokesMoments) -> float:
    x = np.concatenate([[a.s0], a.s_vec, a.variances])
    y = np.concatenate([[b.s0], b.s_vec, b.variances])
    scale = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1e-2)
    return float(np.max(np.abs(x - y) / scale))


def sweep(grid: dict, method: str = "analytic", direction=S1_AXIS,
          policy: fock_oracle.TruncationPolicy | None = None,
          analytic_budget: int = ANALYTIC_BUDGET, oracle_budget: int = ORACLE_BUDGET,
          margin: float = VERDICT_MARGIN) -> SweepTable:
    """Evaluate moments and the squeezing assessment on a rectangular grid.

    Axes not in ``grid`` are held at the optimum preset (``A = 1``,
    ``theta = pi/4``, ``phi_x = phi_y = 3 pi/4``, ``T = 1``).  Rows come out in
    lexicographic order over ``(A, theta, phi_x, phi_y, T)``.  ``method="both"``
    reports the analytic values with an extra ``max_rel_delta`` column against
    the oracle.
    """
    if method not in ("analytic", "fock", "both"):
        raise ValueError(f"method must be analytic, fock or both, got {method!r}")
    n = direction if isinstance(direction, Direction) else Direction.parse(str(direction))
    axes, count = _grid_points(grid)
    if count > analytic_budget:
        raise BudgetExceededError(count, analytic_budget, "analytic")
    if method != "analytic" and count > oracle_budget:
        raise BudgetExceededError(count, oracle_budget, "oracle")
    for T in axes[4]:
        check_time(T)
    if np.any(axes[0] < 0) or not np.all(np.isfinite(np.concatenate(axes))):
        raise ValueError("sweep grid values must be finite with A >= 0")

    columns = SWEEP_COLUMNS + (("max_rel_delta",) if method == "both" else ())
    table = SweepTable(columns, method=method)

    if method == "analytic" and n.principal_axis() is not None:
        table.rows = _analytic_rows(axes, n.principal_axis(), margin)
        return table

    for point in itertools.product(*(a.tolist() for a in axes)):
        inp = make_coherent_input(*point[:4])
        if method == "fock":
            table.rows.append(_record(point, fock_oracle.oracle_moments(inp, point[4], policy), n, margin))
            continue
        am = variance_stokes(inp, point[4])
        row = _record(point, am, n, margin)
        if method == "both":
            om = fock_oracle.oracle_moments(inp, point[4], policy)
            row = (*row, _max_rel_delta(am, om))
        table.rows.append(row)
    return table


def _analytic_rows(axes, j: int, margin: float) -> list:
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    s0, s1, s2, s3, v1, v23 = np.broadcast_arrays(*closed_form(*flat))
    s = np.stack([s1, s2, s3])
    v = np.stack([v1, v23, v23])
    v_n = v[j]
    others = [k for k in range(3) if k != j]
    rhs = np.hypot(s[others[0]], s[others[1]])
    ok = rhs >= 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(ok, v_n / rhs, np.nan)
    luis = ok & (v_n < rhs - margin * np.maximum(np.abs(rhs), np.abs(v_n)))
    rows = []
    for i in range(len(flat[0])):
        f = float(factor[i])
        fac = None if math.isnan(f) else f
        rows.append((*(float(c[i]) for c in flat), float(s0[i]), float(s1[i]), float(s2[i]),
                     float(s3[i]), float(v1[i]), float(v23[i]), float(v23[i]),
                     fac, None if fac is None else 1.0 - fac, bool(luis[i])))
    return rows


RECOMMENDED_PHASE = 3 * math.pi / 4


@dataclass(frozen=True)
class ScenarioReport:
    A: float
    T: float
    phase: float
    moments: StokesMoments
    I_plus: float
    I_minus: float
    I_R: float
    I_L: float
    assessment: object
    recommended_phase: float = RECOMMENDED_PHASE

    @property
    def s2_readout(self) -> float:
        return self.I_plus - self.I_minus

    @property
    def s3_readout(self) -> float:
        return self.I_R - self.I_L

    def as_dict(self) -> dict:
        return {
            "input": {"A": self.A, "theta": math.pi / 4, "phi_x": self.phase,
                      "phi_y": self.phase, "T": self.T},
            "intensities": {"I_plus": self.I_plus, "I_minus": self.I_minus,
                            "I_R": self.I_R, "I_L": self.I_L},
            "stokes_check": {"S2": self.s2_readout, "S3": self.s3_readout,
                             "S0": float(self.moments.s0)},
            "moments": self.moments.as_dict(),
            "assessment": self.assessment.as_dict(),
            "recommended_phase": self.recommended_phase,
        }


def scenario_section4(A, T, phase: float = RECOMMENDED_PHASE,
                      policy: fock_oracle.TruncationPolicy | None = None) -> ScenarioReport:
    """Equal-amplitude, equal-phase input and its intensity readouts.

    Light plane-polarized midway between x and y gives ``theta = pi/4`` and
    ``phi_x = phi_y = phase``.  The readouts are the ±45° linear intensities
    ``I+ , I-`` and circular intensities ``I_R, I_L`` with
    ``S2 = I+ - I-``, ``S3 = I_R - I_L``.  ``phase = 3 pi/4`` puts
    ``phi_x + phi_y`` at ``3 pi/2``, where the S1 squeezing is largest.
    """
    inp = make_coherent_input(A, math.pi / 4, phase, phase)
    m = fock_oracle.oracle_moments(inp, T, policy)
    s0, (_, s2, s3) = float(m.s0), m.s_vec
    return ScenarioReport(
        A=inp.amplitude_A, T=float(T), phase=float(phase), moments=m,
        I_plus=(s0 + s2) / 2, I_minus=(s0 - s2) / 2,
        I_R=(s0 + s3) / 2, I_L=(s0 - s3) / 2,
        assessment=assess(m, S1_AXIS),
    )


@dataclass(frozen=True)
class DirectionScan:
    s1_factor: float | None
    best_factor: float | None
    best_direction: tuple | None
    samples: int
    seed: int


def direction_scan(moments: StokesMoments, samples: int = 2000, seed: int = 0) -> DirectionScan:
    """Search random unit directions for a factor below the S1 factor.

    Needs a full covariance (oracle moments).  Diagnostic only.
    """
    if not moments.has_full_covariance:
        raise ValueError("direction scan needs oracle moments with a full covariance")
    rng = np.random.default_rng(seed)
    ns = rng.normal(size=(samples, 3))
    ns /= np.linalg.norm(ns, axis=1, keepdims=True)
    best, best_n = None, None
    for v in ns:
        f = assess(moments, Direction(v, normalize=True)).factor
        if f is not None and (best is None or f < best):
            best, best_n = f, tuple(float(x) for x in v)
    return DirectionScan(assess(moments, S1_AXIS).factor, best, best_n, samples, seed)
