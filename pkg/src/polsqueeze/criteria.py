"""Polarization-squeezing criteria, squeezing factor and degree.

A Stokes component ``S_n`` is squeezed when its variance drops below the
largest mean Stokes component perpendicular to ``n``:

    V_n < max |<S_perp>| = sqrt(|<S>|^2 - <S_n>^2)

The squeezing factor is the ratio of the two sides and the degree of squeezing
is ``1 - factor``.  Three weaker or differently normalized criteria are
reported alongside for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stokes_core import StokesMoments, r_closed_form

# denominators below this (photon units) make the factor meaningless
NOT_APPLICABLE_BELOW = 1e-12
# relative margin a strict inequality must clear before it counts as met;
# keeps coherent states (equality) from flipping on rounding noise
VERDICT_MARGIN = 1e-9

AXES = {
    "x": (1.0, 0.0, 0.0), "s1": (1.0, 0.0, 0.0), "1": (1.0, 0.0, 0.0),
    "y": (0.0, 1.0, 0.0), "s2": (0.0, 1.0, 0.0), "2": (0.0, 1.0, 0.0),
    "z": (0.0, 0.0, 1.0), "s3": (0.0, 0.0, 1.0), "3": (0.0, 0.0, 1.0),
}


class UnsupportedDirectionError(ValueError):
    pass


class Direction:
    """Unit vector on the Poincaré sphere."""

    __slots__ = ("_n",)

    def __init__(self, n, normalize: bool = False):
        v = np.asarray(n, dtype=float).reshape(3)
        norm = float(np.linalg.norm(v))
        if not np.all(np.isfinite(v)) or norm == 0:
            raise ValueError(f"direction must be a finite non-zero 3-vector, got {n!r}")
        if normalize:
            v = v / norm
        elif abs(norm - 1.0) > 1e-12:
            raise ValueError(f"direction must have unit length, |n| = {norm!r}")
        v.setflags(write=False)
        self._n = v

    @classmethod
    def parse(cls, text: str) -> "Direction":
        """``x|y|z`` (Stokes axes 1, 2, 3) or ``"nx,ny,nz"`` (normalized)."""
        key = text.strip().lower()
        if key in AXES:
            return cls(AXES[key])
        try:
            parts = [float(p) for p in key.split(",")]
        except ValueError:
            raise ValueError(f"cannot parse direction {text!r}") from None
        if len(parts) != 3:
            raise ValueError(f"direction needs 3 components, got {text!r}")
        return cls(parts, normalize=True)

    @property
    def n(self) -> np.ndarray:
        return self._n

    def principal_axis(self) -> int | None:
        """Index of the Stokes axis this direction lies on, if any."""
        j = int(np.argmax(np.abs(self._n)))
        if abs(abs(self._n[j]) - 1.0) <= 1e-12:
            return j
        return None

    def __iter__(self):
        return iter(self._n)

    def __repr__(self):
        return f"Direction({self._n.tolist()})"

    def __eq__(self, other):
        return isinstance(other, Direction) and bool(np.array_equal(self._n, other._n))

    def __hash__(self):
        return hash(tuple(self._n))


S1_AXIS = Direction((1.0, 0.0, 0.0))


def _as_direction(n) -> Direction:
    return n if isinstance(n, Direction) else Direction(n)


def variance_along(moments: StokesMoments, n) -> float:
    """``n^T Cov n``.

    The closed forms only provide principal variances, so an analytic moment
    set accepts principal axes only.
    """
    n = _as_direction(n)
    if moments.has_full_covariance:
        return float(n.n @ moments.covariance @ n.n)
    j = n.principal_axis()
    if j is None or not math.isfinite(moments.covariance[j, j]):
        raise UnsupportedDirectionError(
            f"{moments.source} moments only carry principal variances; "
            f"variance along {n.n.tolist()} needs the Fock oracle"
        )
    return float(moments.covariance[j, j])


def perpendicular_component(s_vec, n) -> np.ndarray:
    """Part of the mean Stokes vector orthogonal to ``n``."""
    n = _as_direction(n)
    s = np.asarray(s_vec, dtype=float)
    return s - (s @ n.n) * n.n


def max_perp_expectation(moments: StokesMoments, n) -> float:
    """``max |<S> . m|`` over unit ``m`` perpendicular to ``n``.

    Equal to ``sqrt(|<S>|^2 - <S_n>^2)``; evaluated as the norm of the
    orthogonal projection, which cannot go negative.
    """
    return float(np.linalg.norm(perpendicular_component(moments.s_vec, n)))


def db_of_factor(factor: float) -> float:
    if not factor > 0:
        raise ValueError(f"squeezing factor must be > 0 for a dB value, got {factor!r}")
    return 10.0 * math.log10(factor)


def factor_of_db(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _below(lhs: float, rhs: float, margin: float) -> bool:
    return lhs < rhs - margin * max(abs(rhs), abs(lhs))


@dataclass(frozen=True)
class SqueezingAssessment:
    direction: Direction
    variance_along: float
    rhs_luis: float
    factor: float | None
    degree: float | None
    db: float | None
    # chirkin: V_n < <S0>
    # heersink: V_n < |<S_perp>| < V_m, m = n x perp
    # luis_pair: V_n < |<S_perp>| with perp = direction of the largest
    #   perpendicular mean (then identical to luis_max)
    # luis_max: V_n < sqrt(|<S>|^2 - <S_n>^2)
    verdicts: dict
    perp_direction: tuple | None
    s0: float

    @property
    def applicable(self) -> bool:
        return self.factor is not None

    def as_dict(self) -> dict:
        return {
            "direction": self.direction.n.tolist(),
            "variance_along": self.variance_along,
            "rhs_luis": self.rhs_luis,
            "factor": self.factor,
            "degree": self.degree,
            "db": self.db,
            "verdicts": dict(self.verdicts),
            "perp_direction": None if self.perp_direction is None else list(self.perp_direction),
            "perp_choice": "largest perpendicular mean component",
        }


def assess(moments: StokesMoments, n=S1_AXIS, margin: float = VERDICT_MARGIN) -> SqueezingAssessment:
    n = _as_direction(n)
    v_n = variance_along(moments, n)
    perp = perpendicular_component(moments.s_vec, n)
    rhs = float(np.linalg.norm(perp))

    if rhs < NOT_APPLICABLE_BELOW:
        factor = degree = db = None
        perp_dir = None
    else:
        factor = v_n / rhs
        degree = 1.0 - factor
        db = db_of_factor(factor) if factor > 0 else None
        perp_dir = tuple(float(x) for x in perp / rhs)

    heersink = False
    if perp_dir is not None:
        m = np.cross(n.n, perp_dir)
        try:
            v_m = variance_along(moments, Direction(m, normalize=True))
        except UnsupportedDirectionError:
            heersink = None
        else:
            heersink = _below(v_n, rhs, margin) and _below(rhs, v_m, margin)

    luis = perp_dir is not None and _below(v_n, rhs, margin)
    verdicts = {
        "chirkin": _below(v_n, float(moments.s0), margin),
        "heersink": heersink,
        "luis_pair": luis,
        "luis_max": luis,
    }
    return SqueezingAssessment(n, v_n, rhs, factor, degree, db, verdicts, perp_dir,
                               float(moments.s0))


@dataclass(frozen=True)
class StringencyReport:
    variance: float
    scaled: float  # <S_perp>^2 / <S0>
    perp: float
    s0: float
    precondition: bool  # |<S_perp>| <= <S0>
    chain_holds: bool


def stringency_chain(moments: StokesMoments, n=S1_AXIS) -> StringencyReport:
    """Evaluate the ordering ``<S_perp>^2/<S0> <= |<S_perp>| <= <S0>``.

    The ordering needs ``|<S_perp>| <= <S0>``; states where that fails are
    reported, not rejected.
    """
    n = _as_direction(n)
    perp = max_perp_expectation(moments, n)
    s0 = float(moments.s0)
    scaled = perp**2 / s0 if s0 > 0 else math.inf
    tol = 1e-12 * max(1.0, s0)
    return StringencyReport(
        variance=variance_along(moments, n),
        scaled=scaled,
        perp=perp,
        s0=s0,
        precondition=perp <= s0 + tol,
        chain_holds=scaled <= perp + tol and perp <= s0 + tol,
    )


def s1_factor(theta, phase_sum, T):
    """Vectorized squeezing factor of ``S1`` for a coherent input (``A > 0``).

    ``V1 = A^2`` and the perpendicular mean is ``A^2 sqrt(R)``, so the factor
    is ``1/sqrt(R)`` and independent of ``A``.
    """
    r = r_closed_form(theta, phase_sum, T)
    with np.errstate(divide="ignore"):
        return 1.0 / np.sqrt(r)
