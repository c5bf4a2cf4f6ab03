"""Sampleable test distributions with exact means, CDFs and moment bounds.

Every spec exposes the same surface: ``mean``, ``variance_ub``, ``cdf``,
``cdf_left`` (``Pr(X < t)``), ``cdf_integral`` (the integral of the CDF over
``[a, b]``), ``sample``, ``kth_moment_ub`` and ``subgaussian_param``.
``exact_region_quantities`` builds the region probabilities ``p_a``/``p_b``
on top of these; it is the reference the refinement stage is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Optional, Union

import numpy as np
from scipy import integrate, special, stats

from .core import ParamError


class _Base:
    # Shared helpers built from cdf/cdf_left.

    def prob_interval(self, lo, hi, lo_closed=True, hi_closed=True):
        """Pr(X in <lo, hi>) for scalar or array endpoints."""
        upper = self.cdf(hi) if hi_closed else self.cdf_left(hi)
        lower = self.cdf_left(lo) if lo_closed else self.cdf(lo)
        return np.clip(upper - lower, 0.0, 1.0)

    def gray_prob(self, level: int, lam: float) -> float:
        """Pr(g_level((X + lam) / (2 lam)) = 1) with the clamp to [0, 1]."""
        if level == 1:
            return float(1.0 - self.cdf_left(0.0))
        m = np.arange(2 ** (level - 2), dtype=float)
        lo_p = (4 * m + 1) / 2.0**level
        hi_p = (4 * m + 3) / 2.0**level
        lo = 2 * lam * lo_p - lam
        hi = 2 * lam * hi_p - lam
        return float(np.clip(np.sum(self.cdf_left(hi) - self.cdf_left(lo)), 0.0, 1.0))

    def variance_ub(self) -> float:
        return self.variance()

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update(asdict(self))
        return d


@dataclass(frozen=True)
class PointMass(_Base):
    x: float
    kind = "point_mass"

    def mean(self):
        return self.x

    def variance(self):
        return 0.0

    def cdf(self, t):
        return np.where(np.asarray(t, dtype=float) >= self.x, 1.0, 0.0)

    def cdf_left(self, t):
        return np.where(np.asarray(t, dtype=float) > self.x, 1.0, 0.0)

    def cdf_integral(self, a, b):
        return max(0.0, b - max(a, self.x))

    def sample(self, rng, size=None):
        if size is None:
            return float(self.x)
        return np.full(size, float(self.x))

    def kth_moment_ub(self, k):
        return 0.0

    def subgaussian_param(self):
        return 0.0


@dataclass(frozen=True)
class TwoPoint(_Base):
    """Atoms at ``x1`` (probability ``p1``) and ``x2``."""

    x1: float
    x2: float
    p1: float
    kind = "two_point"

    def __post_init__(self):
        if not 0.0 <= self.p1 <= 1.0:
            raise ParamError(f"TwoPoint needs p1 in [0, 1], got {self.p1}")

    def mean(self):
        return self.p1 * self.x1 + (1 - self.p1) * self.x2

    def variance(self):
        return self.p1 * (1 - self.p1) * (self.x2 - self.x1) ** 2

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return self.p1 * (t >= self.x1) + (1 - self.p1) * (t >= self.x2)

    def cdf_left(self, t):
        t = np.asarray(t, dtype=float)
        return self.p1 * (t > self.x1) + (1 - self.p1) * (t > self.x2)

    def cdf_integral(self, a, b):
        return (self.p1 * max(0.0, b - max(a, self.x1))
                + (1 - self.p1) * max(0.0, b - max(a, self.x2)))

    def sample(self, rng, size=None):
        u = rng.random(size)
        return np.where(u < self.p1, self.x1, self.x2) if size is not None else (
            float(self.x1) if u < self.p1 else float(self.x2))

    def kth_moment_ub(self, k):
        mu = self.mean()
        return self.p1 * abs(self.x1 - mu) ** k + (1 - self.p1) * abs(self.x2 - mu) ** k

    def subgaussian_param(self):
        # bounded support: Hoeffding's lemma
        return abs(self.x2 - self.x1) / 2


@dataclass(frozen=True)
class Uniform(_Base):
    a: float
    b: float
    kind = "uniform"

    def __post_init__(self):
        if not self.a < self.b:
            raise ParamError(f"Uniform needs a < b, got [{self.a}, {self.b}]")

    def mean(self):
        return 0.5 * (self.a + self.b)

    def variance(self):
        return (self.b - self.a) ** 2 / 12.0

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    cdf_left = cdf

    def _antideriv(self, t):
        w = self.b - self.a
        if t <= self.a:
            return 0.0
        if t >= self.b:
            return w / 2 + (t - self.b)
        return (t - self.a) ** 2 / (2 * w)

    def cdf_integral(self, a, b):
        return self._antideriv(b) - self._antideriv(a)

    def sample(self, rng, size=None):
        return rng.uniform(self.a, self.b, size)

    def kth_moment_ub(self, k):
        h = (self.b - self.a) / 2
        return h**k / (k + 1)

    def subgaussian_param(self):
        return (self.b - self.a) / 2


@dataclass(frozen=True)
class Gaussian(_Base):
    mu: float
    sd: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.sd > 0:
            raise ParamError(f"Gaussian needs sd > 0, got {self.sd}")

    def mean(self):
        return self.mu

    def variance(self):
        return self.sd**2

    def cdf(self, t):
        return special.ndtr((np.asarray(t, dtype=float) - self.mu) / self.sd)

    cdf_left = cdf

    def _antideriv(self, t):
        if t == -math.inf:
            return 0.0
        z = (t - self.mu) / self.sd
        return self.sd * (z * special.ndtr(z) + math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi))

    def cdf_integral(self, a, b):
        return self._antideriv(b) - self._antideriv(a)

    def sample(self, rng, size=None):
        return rng.normal(self.mu, self.sd, size)

    def kth_moment_ub(self, k):
        return self.sd**k * 2 ** (k / 2) * math.gamma((k + 1) / 2) / math.sqrt(math.pi)

    def subgaussian_param(self):
        return self.sd


@dataclass(frozen=True)
class ScaledStudentT(_Base):
    """``mu + scale * t_dof``; heavy tails with moments only below ``dof``."""

    mu: float
    scale: float
    dof: float
    kind = "student_t"

    def __post_init__(self):
        if not (self.scale > 0 and self.dof > 2):
            raise ParamError("ScaledStudentT needs scale > 0 and dof > 2")

    def mean(self):
        return self.mu

    def variance(self):
        return self.scale**2 * self.dof / (self.dof - 2)

    def cdf(self, t):
        return stats.t.cdf((np.asarray(t, dtype=float) - self.mu) / self.scale, self.dof)

    cdf_left = cdf

    def cdf_integral(self, a, b):
        val, _ = integrate.quad(lambda s: float(self.cdf(s)), a, b, epsabs=1e-11, epsrel=1e-11, limit=200)
        return val

    def sample(self, rng, size=None):
        return self.mu + self.scale * rng.standard_t(self.dof, size)

    def kth_moment_ub(self, k):
        if k >= self.dof:
            return math.inf
        v = self.dof
        logm = (k * math.log(self.scale) + (k / 2) * math.log(v)
                + special.gammaln((k + 1) / 2) + special.gammaln((v - k) / 2)
                - 0.5 * math.log(math.pi) - special.gammaln(v / 2))
        return math.exp(logm)

    def subgaussian_param(self):
        return None


@dataclass(frozen=True)
class HardInstance(_Base):
    """Two-point member of the lower-bound family D_{j,sign}.

    Centre ``c_j = -lam + 2 j sigma``, atoms ``c_j -/+ sigma/2`` and
    ``Pr(upper atom) = 1/2 + sign * eps / sigma``.
    """

    j: int
    sign: int
    lam: float
    sigma: float
    eps: float
    kind = "hard_instance"

    @property
    def center(self) -> float:
        return -self.lam + 2 * self.j * self.sigma

    @property
    def _tp(self) -> TwoPoint:
        c = self.center
        p_up = 0.5 + self.sign * self.eps / self.sigma
        return TwoPoint(c - self.sigma / 2, c + self.sigma / 2, 1.0 - p_up)

    def mean(self):
        return self.center + self.sign * self.eps

    def variance(self):
        return self._tp.variance()

    def cdf(self, t):
        return self._tp.cdf(t)

    def cdf_left(self, t):
        return self._tp.cdf_left(t)

    def cdf_integral(self, a, b):
        return self._tp.cdf_integral(a, b)

    def sample(self, rng, size=None):
        return self._tp.sample(rng, size)

    def kth_moment_ub(self, k):
        return self._tp.kth_moment_ub(k)

    def subgaussian_param(self):
        return self.sigma / 2


DistributionSpec = Union[PointMass, TwoPoint, Uniform, Gaussian, ScaledStudentT, HardInstance]

_KINDS = {cls.kind: cls for cls in (PointMass, TwoPoint, Uniform, Gaussian, ScaledStudentT, HardInstance)}


def spec_from_dict(d: dict) -> DistributionSpec:
    d = dict(d)
    kind = d.pop("kind")
    if kind not in _KINDS:
        raise ParamError(f"unknown distribution kind {kind!r}")
    if kind == "hard_instance":
        return make_hard_instance(int(d["j"]), int(d["sign"]), float(d["lam"]),
                                  float(d["sigma"]), float(d["eps"]))
    return _KINDS[kind](**{k: float(v) for k, v in d.items()})


def make_hard_instance(j: int, sign: int, lam: float, sigma: float, eps: float) -> HardInstance:
    n_centers = round(lam / sigma) - 1
    if sign not in (1, -1):
        raise ParamError(f"sign must be +1 or -1, got {sign}")
    if not eps < sigma / 2:
        raise ParamError(f"eps must be < sigma/2 for the hard family (eps={eps}, sigma={sigma})")
    if not 1 <= j <= n_centers:
        raise ParamError(f"j out of range: need 1 <= j <= {n_centers}, got {j}")
    return HardInstance(j, sign, lam, sigma, eps)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyCheck:
    in_family: bool
    witness: Optional[str] = None


def family_check(spec: DistributionSpec, lam: float, sigma: float) -> FamilyCheck:
    """Membership in D(lam, sigma): |mean| <= lam and variance <= sigma^2."""
    mu = spec.mean()
    if abs(mu) > lam * (1 + 1e-12):
        return FamilyCheck(False, f"mean bound: |mean|={abs(mu)} > lambda={lam}")
    var = spec.variance_ub()
    if var > sigma**2 * (1 + 1e-12):
        return FamilyCheck(False, f"variance bound: {var} > sigma^2={sigma**2}")
    return FamilyCheck(True, None)


def exact_region_quantities(spec: DistributionSpec, a: float, b: float,
                            left_closed: bool = True, right_closed: bool = False):
    """Exact ``(p_a, p_b, mu_i)`` for the region ``<a, b>``.

    With ``T ~ Unif(a, b)``, ``p_a = Pr(X in <a, T])`` and ``p_b = Pr(X in [T, b>)``
    where the outer brackets follow the region's own closedness. Both are
    obtained from the mean of the CDF over the region, so atoms are handled.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ParamError("exact_region_quantities needs a bounded region")
    if not a < b:
        raise ParamError(f"empty region [{a}, {b})")
    avg_f = spec.cdf_integral(a, b) / (b - a)
    f_lo = float(spec.cdf_left(a) if left_closed else spec.cdf(a))
    f_hi = float(spec.cdf(b) if right_closed else spec.cdf_left(b))
    p_a = min(max(avg_f - f_lo, 0.0), 1.0)
    p_b = min(max(f_hi - avg_f, 0.0), 1.0)
    return p_a, p_b, a * p_a + b * p_b
