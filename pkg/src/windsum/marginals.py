"""Single wind-farm output distributions.

A farm's output is its wind speed pushed through an aggregate piecewise-linear
power curve.  Speeds below cut-in or at/above cut-out give zero output, speeds
between rated and cut-out give rated output, so the output law has atoms at 0
and at rated power and a density on the ramp in between.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DomainError
from .mixed import MixedDistribution

DEFAULT_CUT_IN = 3.0
DEFAULT_RATED_SPEED = 12.0
DEFAULT_CUT_OUT = 25.0
DEFAULT_RATED_POWER = 100.0


def _check_level(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("probability level must lie in the open interval (0, 1)")
    return u


@dataclass(frozen=True)
class Weibull:
    """Weibull wind-speed law with shape ``k`` and scale ``lam`` (m/s)."""

    k: float
    lam: float

    def __post_init__(self):
        if not (self.k > 0 and self.lam > 0 and np.isfinite(self.k) and np.isfinite(self.lam)):
            raise ConstructionError(f"Weibull needs k > 0 and lam > 0, got k={self.k}, lam={self.lam}")

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        z = np.where(v > 0, v, 1.0) / self.lam
        dens = (self.k / self.lam) * z ** (self.k - 1.0) * np.exp(-z ** self.k)
        return np.where(v > 0, dens, 0.0)

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        z = np.maximum(v, 0.0) / self.lam
        return -np.expm1(-z ** self.k)

    def sf(self, v):
        v = np.asarray(v, dtype=float)
        z = np.maximum(v, 0.0) / self.lam
        return np.exp(-z ** self.k)

    def quantile(self, u):
        return self._ppf(_check_level(u))

    def _ppf(self, u):
        return self.lam * (-np.log1p(-u)) ** (1.0 / self.k)

    def to_dict(self):
        return {"family": "weibull", "shape": self.k, "scale": self.lam}


@dataclass(frozen=True)
class GumbelMax:
    """Gumbel (maximum) wind-speed law with location ``mu`` and scale ``beta``."""

    mu: float
    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.mu) and np.isfinite(self.beta)):
            raise ConstructionError(f"Gumbel needs beta > 0, got beta={self.beta}")

    def _tail(self, v):
        z = (np.asarray(v, dtype=float) - self.mu) / self.beta
        with np.errstate(over="ignore"):
            return z, np.exp(-z)

    def pdf(self, v):
        z, t = self._tail(v)
        return np.where(np.isinf(t), 0.0, np.exp(-np.minimum(z + t, 745.0)) / self.beta)

    def cdf(self, v):
        return np.exp(-self._tail(v)[1])

    def sf(self, v):
        return -np.expm1(-self._tail(v)[1])

    def quantile(self, u):
        return self._ppf(_check_level(u))

    def _ppf(self, u):
        return self.mu - self.beta * np.log(-np.log(u))

    def to_dict(self):
        return {"family": "gumbel", "location": self.mu, "scale": self.beta}


SpeedDistribution = Weibull | GumbelMax


def speed_pdf(d, v):
    return d.pdf(v)


def speed_cdf(d, v):
    return d.cdf(v)


def speed_quantile(d, u):
    return d.quantile(u)


@dataclass(frozen=True)
class PowerCurve:
    """Aggregate farm power curve: linear ramp from cut-in to rated speed."""

    v_ci: float = DEFAULT_CUT_IN
    v_r: float = DEFAULT_RATED_SPEED
    v_co: float = DEFAULT_CUT_OUT
    rated: float = DEFAULT_RATED_POWER

    def __post_init__(self):
        if not (0 < self.v_ci < self.v_r < self.v_co):
            raise ConstructionError(
                f"power curve needs 0 < v_ci < v_r < v_co, got {self.v_ci}, {self.v_r}, {self.v_co}")
        if not self.rated > 0:
            raise ConstructionError(f"rated power must be positive, got {self.rated}")

    @property
    def slope(self):
        """Speed change per MW along the ramp."""
        return (self.v_r - self.v_ci) / self.rated

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        ramp = self.rated * (v - self.v_ci) / (self.v_r - self.v_ci)
        out = np.where(v < self.v_r, ramp, self.rated)
        return np.where((v < self.v_ci) | (v >= self.v_co), 0.0, out)

    def speed_at(self, p):
        """Ramp speed producing output ``p``."""
        return self.v_ci + np.asarray(p, dtype=float) * self.slope

    def to_dict(self):
        return {"v_ci": self.v_ci, "v_r": self.v_r, "v_co": self.v_co, "rated": self.rated}


class RampContinuous:
    """Closed-form continuous part of a farm output on ``(0, rated)``."""

    breakpoints = ()

    def __init__(self, speed, curve):
        self.speed = speed
        self.curve = curve
        self.lo = 0.0
        self.hi = curve.rated
        self._cdf_ci = float(speed.cdf(curve.v_ci))
        self.mass = float(speed.cdf(curve.v_r)) - self._cdf_ci

    def pdf(self, p):
        p = np.asarray(p, dtype=float)
        return np.where((p > 0) & (p < self.hi), self.pdf_closed(p), 0.0)

    def pdf_closed(self, p):
        """Ramp density extended continuously to ``[0, rated]``."""
        p = np.clip(np.asarray(p, dtype=float), 0.0, self.hi)
        return self.speed.pdf(self.curve.speed_at(p)) * self.curve.slope

    def cdf(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, self.hi)
        return self.speed.cdf(self.curve.speed_at(p)) - self._cdf_ci


class FarmOutput(MixedDistribution):
    """Output law of one farm, with a closed-form quantile."""

    def __init__(self, speed, curve):
        self.speed = speed
        self.curve = curve
        zero = float(speed.cdf(curve.v_ci) + speed.sf(curve.v_co))
        full = float(speed.cdf(curve.v_co) - speed.cdf(curve.v_r))
        self.zero_mass = zero
        self.rated_mass = full
        self._sf_co = float(speed.sf(curve.v_co))
        super().__init__(0.0, curve.rated, [0.0, curve.rated], [zero, full],
                         RampContinuous(speed, curve), kind="marginal", check=False)
        if self.audit_normalization() > 1e-9:
            raise ConstructionError("farm output mass does not sum to one")

    @property
    def rated(self):
        return self.curve.rated

    def cdf_ramp(self, p):
        """CDF ignoring the rated atom; equals ``W(p^-)`` at the rated power."""
        return self.zero_mass + self.continuous.cdf(p)

    def _ppf(self, u):
        u = np.asarray(u, dtype=float)
        below = self.zero_mass
        above = 1.0 - self.rated_mass
        inner = np.clip(u, below, above)
        level = np.clip(inner - self._sf_co, 1e-300, 1.0 - 1e-16)
        v = self.speed._ppf(level)
        p = np.clip((v - self.curve.v_ci) / self.curve.slope, 0.0, self.curve.rated)
        p = np.where(u <= below, 0.0, p)
        return np.where(u > above, self.curve.rated, p)


def farm_output_distribution(speed, curve=None):
    """Mixed output distribution of a farm with the given speed law and curve."""
    return FarmOutput(speed, curve if curve is not None else PowerCurve())
