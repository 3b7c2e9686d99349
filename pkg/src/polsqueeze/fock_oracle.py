"""Brute-force truncated Fock-space evolution used to check the closed forms.

The pair-creation Hamiltonian ``H = k (ax^+ ay^+ + ax ay)`` conserves the
photon-number difference ``d = nx - ny``, so the two-mode state splits into
independent sectors.  Sector ``d`` is spanned by the ladder ``|n + d, n>``
(``d >= 0``) or ``|n, n - d>`` (``d < 0``), ``n = 0, 1, ...``, and ``H``
restricted to it is a real symmetric tridiagonal matrix with off-diagonal
``sqrt((n + 1)(n + |d| + 1))``.  Each sector is propagated exactly (up to
rounding) through its eigendecomposition.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, xlogy
from scipy.stats import poisson

from .stokes_core import CoherentInput, StokesMoments, check_time, expect_stokes

log = logging.getLogger(__name__)


class CapacityError(RuntimeError):
    """The truncation needed for the requested accuracy exceeds ``max_cutoff``."""

    def __init__(self, needed: int, max_cutoff: int, what: str = "ladder cutoff"):
        self.needed = needed
        self.max_cutoff = max_cutoff
        super().__init__(f"{what} of {needed} needed, exceeds max_cutoff={max_cutoff}")


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict):
        self.diagnostics = diagnostics
        super().__init__(f"{message}: {diagnostics}")


class SelfCheckFailure(AssertionError):
    pass


@dataclass(frozen=True)
class TruncationPolicy:
    epsilon_trunc: float = 1e-10
    observable_tol: float = 1e-8
    max_cutoff: int = 512
    growth_guard: float = 1.5
    max_enlargements: int = 8
    # re-run at a larger cutoff and require every moment to agree
    verify: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon_trunc < 1:
            raise ValueError(f"epsilon_trunc must lie in (0, 1), got {self.epsilon_trunc}")
        if not self.observable_tol > 0:
            raise ValueError(f"observable_tol must be > 0, got {self.observable_tol}")
        if self.max_cutoff < 2:
            raise ValueError(f"max_cutoff must be >= 2, got {self.max_cutoff}")
        if not self.growth_guard > 0:
            raise ValueError(f"growth_guard must be > 0, got {self.growth_guard}")


@dataclass(frozen=True)
class SectorVector:
    difference_d: int
    amplitudes: np.ndarray

    @property
    def cutoff(self) -> int:
        return len(self.amplitudes)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def occupations(self) -> tuple[np.ndarray, np.ndarray]:
        """Photon numbers ``(nx, ny)`` of every ladder level."""
        n = np.arange(self.cutoff)
        d = self.difference_d
        return n + max(d, 0), n + max(-d, 0)


@dataclass(frozen=True)
class FockState:
    sectors: tuple[SectorVector, ...]
    epsilon_trunc: float
    coherent_input: CoherentInput | None = None
    T: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ds = [s.difference_d for s in self.sectors]
        if len(set(ds)) != len(ds):
            raise ValueError("duplicate sector indices")

    @property
    def cutoff(self) -> int:
        return max(s.cutoff for s in self.sectors)

    @property
    def norm2(self) -> float:
        return math.fsum(s.norm2 for s in self.sectors)

    def sector(self, d: int) -> SectorVector | None:
        for s in self.sectors:
            if s.difference_d == d:
                return s
        return None

    def to_grid(self, pad: int = 1) -> np.ndarray:
        """Dense amplitude array ``psi[nx, ny]`` with ``pad`` empty rows/columns."""
        size = self.cutoff + max(abs(s.difference_d) for s in self.sectors) + pad
        grid = np.zeros((size, size), dtype=complex)
        for s in self.sectors:
            nx, ny = s.occupations()
            grid[nx, ny] = s.amplitudes
        return grid


def _poisson_cut(mean: float, eps: float) -> int:
    """Smallest N with P(n > N) <= eps for a Poisson law of the given mean.

    Past the mode the tail is bounded by the geometric series
    ``pmf(N + 1) / (1 - mean / (N + 2))``.
    """
    if mean == 0:
        return 0
    log_eps = math.log(eps)
    N = int(mean) + 1
    while True:
        ratio = mean / (N + 2)
        if ratio < 1:
            log_tail = (-mean + (N + 1) * math.log(mean) - math.lgamma(N + 2)
                        - math.log1p(-ratio))
            if log_tail <= log_eps:
                return N
        N += 1


def _sector_amplitudes(inp: CoherentInput, d: int, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    nx = n + max(d, 0)
    ny = n + max(-d, 0)
    a, b = inp.alpha, inp.beta
    # xlogy keeps 0**0 = 1 for an empty mode
    log_mag = (-0.5 * inp.amplitude_A**2
               + xlogy(nx, abs(a)) + xlogy(ny, abs(b))
               - 0.5 * (gammaln(nx + 1) + gammaln(ny + 1)))
    phase = nx * np.angle(a) + ny * np.angle(b)
    return np.exp(log_mag + 1j * phase)


def _select_sectors(inp: CoherentInput, eps: float) -> tuple[list[int], int]:
    """Sector indices to keep and the ladder length needed at T = 0."""
    mx, my = abs(inp.alpha) ** 2, abs(inp.beta) ** 2
    # S2, S3 couple neighbouring sectors, so a dropped sector biases second
    # moments linearly in its amplitude; cut at eps**2 in probability.
    eps = max(eps * eps, 1e-300)
    nx_max = _poisson_cut(mx, eps / 4)
    ny_max = _poisson_cut(my, eps / 4)
    ladder = min(nx_max, ny_max) + 1

    # d = nx - ny; scan |d| outward from the mean imbalance until the
    # remaining sector mass is below eps / 2
    ds = np.arange(-ny_max, nx_max + 1)
    px = poisson.pmf(np.arange(nx_max + 1), mx) if mx else np.eye(1, nx_max + 1)[0]
    py = poisson.pmf(np.arange(ny_max + 1), my) if my else np.eye(1, ny_max + 1)[0]
    weight = np.convolve(px, py[::-1])
    order = np.argsort(np.abs(ds - round(mx - my)), kind="stable")
    kept, dropped = [], 1.0 - math.fsum(weight)
    remaining = math.fsum(weight)
    for i in order:
        if remaining + dropped <= eps / 2 and kept:
            break
        kept.append(int(ds[i]))
        remaining -= weight[i]
    return sorted(kept), ladder


def decompose_input(inp: CoherentInput, policy: TruncationPolicy | None = None,
                    cutoff: int | None = None) -> FockState:
    """Two-mode coherent state regrouped into photon-difference sectors."""
    policy = policy or TruncationPolicy()
    if inp.amplitude_A == 0:
        L = cutoff or 1
        amps = np.zeros(L, dtype=complex)
        amps[0] = 1.0
        return FockState((SectorVector(0, amps),), policy.epsilon_trunc, inp, 0.0)

    ds, ladder = _select_sectors(inp, policy.epsilon_trunc)
    L = max(ladder, cutoff or 0)
    if L > policy.max_cutoff:
        raise CapacityError(L, policy.max_cutoff)
    sectors = tuple(SectorVector(d, _sector_amplitudes(inp, d, L)) for d in ds)
    state = FockState(sectors, policy.epsilon_trunc, inp, 0.0)
    lost = 1.0 - state.norm2
    if lost > policy.epsilon_trunc:
        raise ConvergenceError("input decomposition lost too much probability",
                               {"lost": lost, "sectors": len(ds), "ladder": L})
    return state


def sector_hamiltonian(d: int, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of ``H_d`` in units of ``k``."""
    n = np.arange(cutoff - 1)
    return np.zeros(cutoff), np.sqrt((n + 1.0) * (n + abs(d) + 1.0))


def sector_propagator(d: int, cutoff: int, T: float) -> np.ndarray:
    """Dense ``exp(-i H_d T)``."""
    w, Q = eigh_tridiagonal(*sector_hamiltonian(d, cutoff))
    return (Q * np.exp(-1j * w * T)) @ Q.T


def _evolve_sector(vec: SectorVector, T: float) -> SectorVector:
    w, Q = eigh_tridiagonal(*sector_hamiltonian(vec.difference_d, vec.cutoff))
    out = Q @ (np.exp(-1j * w * T) * (Q.T @ vec.amplitudes))
    return SectorVector(vec.difference_d, out)


def _evolve_at(inp: CoherentInput, T: float, L: int, policy: TruncationPolicy) -> FockState:
    start = decompose_input(inp, policy, cutoff=L)
    sectors = tuple(_evolve_sector(s, T) for s in start.sectors)
    return FockState(sectors, policy.epsilon_trunc, inp, T)


def _edge_leakage(state: FockState) -> float:
    return math.fsum(float(np.sum(np.abs(s.amplitudes[-2:]) ** 2)) for s in state.sectors)


def initial_cutoff(inp: CoherentInput, T: float, policy: TruncationPolicy) -> int:
    """Ladder length to try first.

    The input Poisson ladder is scaled by the expected growth of the total
    photon number, estimated from the closed-form ``<S0(T)>``.
    """
    if inp.amplitude_A == 0:
        base = 2
    else:
        base = _select_sectors(inp, policy.epsilon_trunc)[1] + 2
    if T == 0:
        return base
    growth = (expect_stokes(inp, T).s0 + 1.0) / (expect_stokes(inp, 0.0).s0 + 1.0)
    return int(math.ceil(base * max(1.0, policy.growth_guard * growth)))


def evolve(state: FockState, T, policy: TruncationPolicy | None = None) -> FockState:
    """Schrödinger evolution of a decomposed coherent input to time ``T``.

    The ladder is enlarged until the probability in the top two levels of the
    evolved state is below ``epsilon_trunc``.  With ``policy.verify`` the run is
    repeated at a larger cutoff and every Stokes moment must agree to within
    ``observable_tol``.
    """
    policy = policy or TruncationPolicy()
    T = check_time(T)
    if T == 0:
        return replace(state, T=0.0)
    inp = state.coherent_input
    if inp is None:
        sectors = tuple(_evolve_sector(s, T) for s in state.sectors)
        return FockState(sectors, state.epsilon_trunc, None, state.T + T)

    L = max(state.cutoff, min(initial_cutoff(inp, T, policy), policy.max_cutoff))
    # the confirmation run may use up to twice the working bound
    check_policy = replace(policy, max_cutoff=2 * policy.max_cutoff)
    history = []
    for _ in range(policy.max_enlargements + 1):
        out = _evolve_at(inp, T, L, policy)
        leak = _edge_leakage(out)
        diagnostics = {"cutoff": L, "edge_leakage": leak, "history": history,
                       "norm": out.norm2}
        if leak <= policy.epsilon_trunc:
            if not policy.verify:
                history.append((L, leak, None))
                break
            check = _evolve_at(inp, T, 2 * L, check_policy)
            delta = max(_moment_delta(measure_moments(out), measure_moments(check)))
            history.append((L, leak, delta))
            diagnostics.update(check_cutoff=2 * L, check_delta=delta)
            if delta < policy.observable_tol:
                break
        else:
            history.append((L, leak, None))
        if L >= policy.max_cutoff:
            raise CapacityError(int(math.ceil(L * 1.5)), policy.max_cutoff)
        L = min(int(math.ceil(L * 1.5)), policy.max_cutoff)
    else:
        raise ConvergenceError("truncation did not converge", {"history": history, "T": T})

    log.debug("evolved to T=%g: %s", T, diagnostics)
    return replace(out, diagnostics=diagnostics)


def _moment_delta(a: StokesMoments, b: StokesMoments):
    """Relative changes (absolute below unit scale) of every reported moment."""
    pairs = [(a.s0, b.s0), *zip(a.s_vec, b.s_vec), *zip(a.covariance.ravel(), b.covariance.ravel())]
    for x, y in pairs:
        yield abs(x - y) / max(1.0, abs(x), abs(y))


def evolve_input(inp: CoherentInput, T, policy: TruncationPolicy | None = None) -> FockState:
    policy = policy or TruncationPolicy()
    return evolve(decompose_input(inp, policy), T, policy)


def _apply_stokes(psi: np.ndarray) -> list[np.ndarray]:
    """``[S0 psi, S1 psi, S2 psi, S3 psi]`` on a padded ``psi[nx, ny]`` grid."""
    size = psi.shape[0]
    n = np.arange(size, dtype=float)
    nx, ny = n[:, None], n[None, :]
    s0 = (nx + ny) * psi
    s1 = (nx - ny) * psi
    # K = ax^+ ay : |nx, ny> -> sqrt((nx + 1) ny) |nx + 1, ny - 1>
    k = np.zeros_like(psi)
    k[1:, :-1] = np.sqrt(nx[1:] * (ny[:, :-1] + 1.0)) * psi[:-1, 1:]
    kd = np.zeros_like(psi)
    kd[:-1, 1:] = np.sqrt((nx[:-1] + 1.0) * ny[:, 1:]) * psi[1:, :-1]
    s2 = k + kd
    s3 = -1j * (k - kd)
    return [s0, s1, s2, s3]


def measure_moments(state: FockState) -> StokesMoments:
    """Stokes means and full symmetrized covariance of a Fock state."""
    psi = state.to_grid(pad=1)
    norm = float(np.vdot(psi, psi).real)
    if not norm > 0:
        raise ValueError("cannot measure a zero state")
    applied = _apply_stokes(psi)
    means = np.array([np.vdot(psi, v).real for v in applied]) / norm
    vecs = applied[1:]
    second = np.empty((3, 3))
    for j in range(3):
        for k in range(j, 3):
            second[j, k] = second[k, j] = np.vdot(vecs[j], vecs[k]).real / norm
    cov = second - np.outer(means[1:], means[1:])
    meta = {"T": state.T, "norm": norm, "cutoff": state.cutoff}
    if state.coherent_input is not None:
        meta.update(state.coherent_input.as_dict())
    return StokesMoments(means[0], means[1:], cov, "fock_oracle", meta)


def oracle_moments(inp: CoherentInput, T, policy: TruncationPolicy | None = None) -> StokesMoments:
    """Evolve and measure in one call."""
    state = evolve_input(inp, T, policy)
    m = measure_moments(state)
    return replace(m, meta={**m.meta, **state.diagnostics})


@dataclass(frozen=True)
class SelfCheckReport:
    cutoff: int
    residuals: dict
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def stokes_matrices(cutoff: int) -> list[np.ndarray]:
    """Explicit ``S0..S3`` on the space ``nx, ny < cutoff`` (index ``nx*cutoff + ny``)."""
    a = np.diag(np.sqrt(np.arange(1.0, cutoff)), 1)
    eye = np.eye(cutoff)
    ax, ay = np.kron(a, eye), np.kron(eye, a)
    nx, ny = ax.T @ ax, ay.T @ ay
    k = ax.T @ ay
    return [nx + ny, nx - ny, k + k.T, -1j * (k - k.T)]


def operator_selfcheck(cutoff: int = 16, tolerance: float = 1e-10) -> SelfCheckReport:
    """Check the Stokes commutation relations on the truncation interior.

    Only basis states with ``nx, ny <= cutoff - 2`` are compared: two ladder
    hops from them never leave the truncated space.
    """
    if cutoff < 4:
        raise ValueError(f"cutoff must be >= 4, got {cutoff}")
    S = stokes_matrices(cutoff)
    n = np.arange(cutoff)
    interior = ((n[:, None] <= cutoff - 2) & (n[None, :] <= cutoff - 2)).ravel()
    sub = np.ix_(interior, interior)

    def comm(x, y):
        return x @ y - y @ x

    residuals = {}
    for j in (1, 2, 3):
        residuals[f"[S0,S{j}]"] = float(np.max(np.abs(comm(S[0], S[j])[sub])))
    for j, k, l in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        r = comm(S[j], S[k]) - 2j * S[l]
        residuals[f"[S{j},S{k}]-2iS{l}"] = float(np.max(np.abs(r[sub])))
    report = SelfCheckReport(cutoff, residuals, max(residuals.values()), tolerance)
    if not report.passed:
        raise SelfCheckFailure(f"operator self-check failed: {residuals}")
    return report
