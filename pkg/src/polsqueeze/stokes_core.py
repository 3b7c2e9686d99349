"""Closed-form Stokes moments of coherent light after non-degenerate
parametric amplification.

The two polarization modes evolve under ``H = k (ax^+ ay^+ + ax ay)``, whose
Heisenberg solution is the Bogoliubov map

    ax(T) = cosh(T) ax - i sinh(T) ay^+
    ay(T) = cosh(T) ay - i sinh(T) ax^+

with ``T = k t``.  For a coherent input ``|alpha, beta>`` with
``alpha = A cos(theta) exp(i phi_x)`` and ``beta = A sin(theta) exp(i phi_y)``
every first and second Stokes moment is a closed-form function of
``(A, theta, phi_x, phi_y, T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# sinh(4T) is the fastest-growing term (variances); keep it finite.
MAX_INTERACTION_TIME = 175.0


class InvalidInputError(ValueError):
    """An input parameter is non-finite or out of its allowed range."""

    def __init__(self, field_name: str, value, reason: str):
        self.field = field_name
        self.value = value
        super().__init__(f"invalid {field_name}={value!r}: {reason}")


class InteractionTimeOverflow(OverflowError):
    def __init__(self, T: float):
        self.T = T
        self.max_supported = MAX_INTERACTION_TIME
        super().__init__(
            f"interaction time T={T!r} overflows double precision; "
            f"max supported T is {MAX_INTERACTION_TIME}"
        )


def check_time(T: float) -> float:
    """Validate a dimensionless interaction time ``T = k t``."""
    try:
        T = float(T)
    except (TypeError, ValueError):
        raise InvalidInputError("T", T, "not a real number") from None
    if not math.isfinite(T) or T < 0:
        raise InvalidInputError("T", T, "must be finite and >= 0")
    if T > MAX_INTERACTION_TIME:
        raise InteractionTimeOverflow(T)
    return T


def _finite(name: str, value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(name, value, "not a real number") from None
    if not math.isfinite(value):
        raise InvalidInputError(name, value, "must be finite")
    return value


@dataclass(frozen=True)
class CoherentInput:
    """Canonical coherent input: ``theta`` in [0, pi/2], phases in [0, 2 pi)."""

    amplitude_A: float
    theta: float
    phi_x: float
    phi_y: float

    @property
    def alpha(self) -> complex:
        return self.amplitude_A * math.cos(self.theta) * complex(
            math.cos(self.phi_x), math.sin(self.phi_x)
        )

    @property
    def beta(self) -> complex:
        return self.amplitude_A * math.sin(self.theta) * complex(
            math.cos(self.phi_y), math.sin(self.phi_y)
        )

    @property
    def phase_sum(self) -> float:
        return self.phi_x + self.phi_y

    def as_dict(self) -> dict:
        return {
            "A": self.amplitude_A,
            "theta": self.theta,
            "phi_x": self.phi_x,
            "phi_y": self.phi_y,
        }


def make_coherent_input(A, theta, phi_x, phi_y) -> CoherentInput:
    """Build a canonical :class:`CoherentInput`.

    A negative ``cos(theta)`` or ``sin(theta)`` is absorbed into the phase of
    the corresponding mode, so the mode amplitudes ``alpha`` and ``beta`` are
    the same before and after normalization.
    """
    A = _finite("amplitude_A", A)
    if A < 0:
        raise InvalidInputError("amplitude_A", A, "must be >= 0")
    theta = _finite("theta", theta)
    phi_x = _finite("phi_x", phi_x)
    phi_y = _finite("phi_y", phi_y)

    c, s = math.cos(theta), math.sin(theta)
    if c < 0:
        phi_x += math.pi
    if s < 0:
        phi_y += math.pi
    theta_c = math.atan2(abs(s), abs(c))
    # exact quarter turns survive the round trip through cos/sin
    if math.isclose(theta_c, math.pi / 2, rel_tol=0, abs_tol=1e-15):
        theta_c = math.pi / 2
    return CoherentInput(A, theta_c, _wrap(phi_x), _wrap(phi_y))


def _wrap(phi: float) -> float:
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return phi


@dataclass(frozen=True)
class BogoliubovCoefficients:
    c: float
    s: float

    @property
    def residual(self) -> float:
        """``c**2 - s**2 - 1``; zero up to rounding."""
        return (self.c - self.s) * (self.c + self.s) - 1.0


def bogoliubov(T) -> BogoliubovCoefficients:
    T = check_time(T)
    return BogoliubovCoefficients(math.cosh(T), math.sinh(T))


@dataclass(frozen=True)
class StokesMoments:
    """First and second moments of the Stokes operators.

    ``covariance`` is the symmetrized covariance
    ``Cov(Sj, Sk) = <{Sj, Sk}>/2 - <Sj><Sk>``.  Entries that a source does not
    provide are NaN (the closed forms give only the diagonal).
    """

    s0: float
    s_vec: np.ndarray
    covariance: np.ndarray
    source: str = "analytic"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s_vec = np.asarray(self.s_vec, dtype=float).reshape(3)
        cov = np.asarray(self.covariance, dtype=float).reshape(3, 3)
        s_vec.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "s_vec", s_vec)
        object.__setattr__(self, "covariance", cov)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.covariance).copy()

    @property
    def has_full_covariance(self) -> bool:
        return bool(np.all(np.isfinite(self.covariance)))

    @property
    def has_variances(self) -> bool:
        return bool(np.all(np.isfinite(np.diag(self.covariance))))

    def as_dict(self) -> dict:
        cov = [[None if math.isnan(v) else float(v) for v in row] for row in self.covariance]
        return {
            "source": self.source,
            "S0": float(self.s0),
            "S": [float(v) for v in self.s_vec],
            "V": [None if math.isnan(v) else float(v) for v in np.diag(self.covariance)],
            "covariance": cov,
        }


def closed_form(A, theta, phi_x, phi_y, T):
    """Vectorized closed forms ``(S0, S1, S2, S3, V1, V23)``.

    Accepts raw (unnormalized) angles and broadcasts over numpy arrays; the
    expressions depend on the angles only through ``alpha`` and ``beta``.
    """
    A2 = np.square(A)
    ch2, sh2 = np.cosh(2 * T), np.sinh(2 * T)
    cos2, sin2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    sin2th = np.sin(2 * theta)
    dphi = phi_x - phi_y
    pump = sin2th * np.sin(phi_x + phi_y)
    s1 = A2 * np.cos(2 * theta) + 0.0 * T
    s2 = A2 * (ch2 * sin2th * np.cos(dphi)
               - sh2 * (cos2 * np.sin(2 * phi_x) + sin2 * np.sin(2 * phi_y)))
    s3 = A2 * (-ch2 * sin2th * np.sin(dphi)
               - sh2 * (cos2 * np.cos(2 * phi_x) - sin2 * np.cos(2 * phi_y)))
    s0 = A2 * ch2 + ch2 - 1.0 - A2 * sh2 * pump
    v1 = A2 + 0.0 * T
    v23 = A2 * ch2**2 + (A2 + 1.0) * sh2**2 - A2 * np.sinh(4 * T) * pump
    return s0, s1, s2, s3, v1, v23


def _means(inp: CoherentInput, T: float) -> tuple[float, np.ndarray]:
    s0, s1, s2, s3, _, _ = closed_form(inp.amplitude_A, inp.theta, inp.phi_x, inp.phi_y, T)
    return float(s0), np.array([s1, s2, s3], dtype=float)


def expect_stokes(inp: CoherentInput, T) -> StokesMoments:
    """Expectation values only; the covariance is left unspecified (NaN)."""
    T = check_time(T)
    s0, s_vec = _means(inp, T)
    return StokesMoments(s0, s_vec, np.full((3, 3), np.nan), "analytic",
                         {"T": T, **inp.as_dict()})


def _principal_variances(inp: CoherentInput, T: float) -> np.ndarray:
    _, _, _, _, v1, v23 = closed_form(inp.amplitude_A, inp.theta, inp.phi_x, inp.phi_y, T)
    return np.array([v1, v23, v23], dtype=float)


def variance_stokes(inp: CoherentInput, T) -> StokesMoments:
    """Means plus the principal variances ``V1, V2, V3``.

    Off-diagonal covariances are not available in closed form and are NaN.
    """
    T = check_time(T)
    s0, s_vec = _means(inp, T)
    cov = np.full((3, 3), np.nan)
    np.fill_diagonal(cov, _principal_variances(inp, T))
    return StokesMoments(s0, s_vec, cov, "analytic", {"T": T, **inp.as_dict()})


analytic_moments = variance_stokes


def r_closed_form(theta, phase_sum, T):
    """Vectorized ``R = [cosh 2T - sinh 2T sin 2theta sin(phi_x + phi_y)]^2 - cos^2 2theta``."""
    lead = np.cosh(2 * T) - np.sinh(2 * T) * np.sin(2 * theta) * np.sin(phase_sum)
    # exactly non-negative; clip rounding
    return np.maximum(lead**2 - np.cos(2 * theta) ** 2, 0.0)


def r_parameter(inp: CoherentInput, T) -> float:
    """``R = (<S2>^2 + <S3>^2) / A^4`` in its compact closed form."""
    T = check_time(T)
    return float(r_closed_form(inp.theta, inp.phase_sum, T))
