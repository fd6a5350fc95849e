"""Closed-form quantities: unit-ball volume, the LLN limit constant, the
d=1 limit mu(1, alpha), the expected-gain leading term, and the predicted
mean/variance regimes that the experiment planner validates against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RegimeError

MEAN_LLN = "lln"
MEAN_LOG = "log"
MEAN_BOUNDED_LIMIT = "bounded-limit"
VARIANCE_POWER = "power"
VARIANCE_LOG = "log"
VARIANCE_BOUNDED = "bounded"


def unit_ball_volume(d: int) -> float:
    """v_d = pi^(d/2) / Gamma(1 + d/2)."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return math.pi ** (d / 2.0) / math.gamma(1.0 + d / 2.0)


def lln_constant(d: int, alpha: float) -> float:
    """The limit of n^((alpha-d)/d) * total weight for alpha in (0, d):
    (d/(d-alpha)) * v_d^(-alpha/d) * Gamma(1 + alpha/d).
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if not 0 < alpha < d:
        raise RegimeError(
            f"lln_constant needs 0 < alpha < d; alpha={alpha}, d={d} falls in the "
            "log regime (alpha == d) or the bounded-limit regime (alpha > d)"
        )
    vd = unit_ball_volume(d)
    return (d / (d - alpha)) * vd ** (-alpha / d) * math.gamma(1.0 + alpha / d)


def mu_1d(alpha: float) -> float:
    """mu(1, alpha) = (2 / (alpha (alpha+1))) * (1 + 2^(-alpha) / (alpha-1))."""
    if not alpha > 1:
        raise RegimeError(f"mu(1, alpha) has a closed form only for alpha > 1, got {alpha}")
    return (2.0 / (alpha * (alpha + 1.0))) * (1.0 + 2.0 ** (-alpha) / (alpha - 1.0))


def gain_leading(d: int, alpha: float, n: int) -> float:
    """Leading term of E[Z_n^alpha]: v_d^(-alpha/d) Gamma(1 + alpha/d) n^(-alpha/d)."""
    if d < 1:
        raise ValueError("d must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < alpha <= d:
        raise RegimeError(f"the gain law covers 0 < alpha <= d, got alpha={alpha}, d={d}")
    vd = unit_ball_volume(d)
    return vd ** (-alpha / d) * math.gamma(1.0 + alpha / d) * float(n) ** (-alpha / d)


@dataclass(frozen=True)
class RegimePrediction:
    """Mean regime (Prop-style trichotomy at alpha vs d) and variance regime
    (power / log / bounded at alpha vs d/2)."""

    d: int
    alpha: float
    mean_regime: str
    variance_regime: str
    variance_exponent: float | None

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "alpha": self.alpha,
            "mean_regime": self.mean_regime,
            "variance_regime": self.variance_regime,
            "variance_exponent": self.variance_exponent,
        }


def predicted_regimes(d: int, alpha: float) -> RegimePrediction:
    if d < 1:
        raise ValueError("d must be at least 1")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha < d:
        mean_regime = MEAN_LLN
    elif alpha == d:
        mean_regime = MEAN_LOG
    else:
        mean_regime = MEAN_BOUNDED_LIMIT
    half = d / 2.0
    if alpha < half:
        variance_regime = VARIANCE_POWER
        variance_exponent: float | None = 1.0 - 2.0 * alpha / d
    elif alpha == half:
        variance_regime = VARIANCE_LOG
        variance_exponent = None
    else:
        variance_regime = VARIANCE_BOUNDED
        variance_exponent = None
    return RegimePrediction(
        d=d,
        alpha=alpha,
        mean_regime=mean_regime,
        variance_regime=variance_regime,
        variance_exponent=variance_exponent,
    )


@dataclass(frozen=True)
class TheoryConstants:
    """All closed-form quantities available at (d, alpha); out-of-regime
    entries are None rather than guessed."""

    d: int
    alpha: float
    v_d: float
    mean_regime: str
    lln_constant: float | None
    mu_1d: float | None
    variance_regime: str
    variance_exponent: float | None
    gain_leading_coefficient: float | None

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "alpha": self.alpha,
            "v_d": self.v_d,
            "mean_regime": self.mean_regime,
            "lln_constant": self.lln_constant,
            "mu_1d": self.mu_1d,
            "variance_regime": self.variance_regime,
            "variance_exponent": self.variance_exponent,
            "gain_leading_coefficient": self.gain_leading_coefficient,
        }


def theory_constants(d: int, alpha: float) -> TheoryConstants:
    regimes = predicted_regimes(d, alpha)
    vd = unit_ball_volume(d)
    return TheoryConstants(
        d=d,
        alpha=float(alpha),
        v_d=vd,
        mean_regime=regimes.mean_regime,
        lln_constant=lln_constant(d, alpha) if alpha < d else None,
        mu_1d=mu_1d(alpha) if d == 1 and alpha > 1 else None,
        variance_regime=regimes.variance_regime,
        variance_exponent=regimes.variance_exponent,
        gain_leading_coefficient=(
            vd ** (-alpha / d) * math.gamma(1.0 + alpha / d) if alpha <= d else None
        ),
    )
