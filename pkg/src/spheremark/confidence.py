"""Spherical confidence scoring for recovered payload vectors.

Under the null hypothesis that a recovered vector is a uniformly
random direction, the cosine c between it and any fixed unit vector
in dimension d has the two-sided tail

    Pr(|cos| >= c) = I_{1-c^2}((d-1)/2, 1/2),        c > 0,

where I_x(a, b) is the regularized incomplete beta function.  The
score is reported as ell = -log10(p): the number of decimal orders
of magnitude by which chance alignment is ruled out.

The incomplete beta here is evaluated by a modified Lentz continued
fraction with the symmetry I_x(a,b) = 1 - I_{1-x}(b,a), plus a
log-space variant: payload cosines near 1 drive p below the smallest
positive float, so the linear-space value alone cannot discriminate
genuine detections from each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .codec import Codec, idempotence_check
from .errors import DimensionError, DomainError
from .sphere import UnitVector, cosine

# Reported ell when p underflows to exactly 0 (below ~1e-323).  The
# cap exceeds every representable -log10(p), so capped scores still
# order above all finite-p scores.
ELL_CAP = 700.0

# Switch to log-space evaluation when 1 - c^2 drops below this.
_LOG_SPACE_X = 1e-4

# Lentz continued-fraction controls.
_MAX_ITER = 500
_LENTZ_EPS = 1e-15
_FPMIN = 1e-300

# Tolerance for cosines that exceed |1| through upstream rounding.
_COS_SLACK = 1e-12

VERDICT_TRUSTED = "trusted"
VERDICT_UNTRUSTED = "untrusted"


def _ln_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, by modified Lentz.

    Converges for x < (a + 1)/(a + b + 2); the caller routes the
    complementary range through the symmetry relation.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= _LENTZ_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction stalled at a={a}, b={b}, x={x}")


def _check_beta_args(x: float, a: float, b: float) -> None:
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    x : float
        Integration limit in [0, 1].
    a, b : float
        Positive shape parameters.

    Returns
    -------
    float
        I_x(a, b) to about 1e-12 relative accuracy over the tested
        parameter range (a, b up to a few hundred).
    """
    _check_beta_args(x, a, b)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = a * math.log(x) + b * math.log1p(-x) - _ln_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(ln_front) * _beta_cf(a, b, x) / a
    # front factor is symmetric in (a <-> b, x <-> 1-x)
    return 1.0 - math.exp(ln_front) * _beta_cf(b, a, 1.0 - x) / b


def log_reg_inc_beta(x: float, a: float, b: float) -> float:
    """Natural log of I_x(a, b); finite even where the value underflows."""
    _check_beta_args(x, a, b)
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return 0.0
    ln_front = a * math.log(x) + b * math.log1p(-x) - _ln_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return ln_front + math.log(_beta_cf(a, b, x) / a)
    tail = math.exp(ln_front) * _beta_cf(b, a, 1.0 - x) / b
    return math.log1p(-tail)


def spherical_p_value(c: float, dim: int) -> float:
    """Chance probability of cosine alignment at least |c| in dimension d.

    Non-positive cosines carry no alignment evidence and map to 1.
    Cosines beyond |1| by more than a rounding tolerance are domain
    errors; within it they are clamped.
    """
    if dim < 2:
        raise DimensionError(f"dimension {dim} < 2")
    if not math.isfinite(c) or abs(c) > 1.0 + _COS_SLACK:
        raise DomainError(f"cosine {c} outside [-1, 1]")
    c = min(1.0, max(-1.0, c))
    if c <= 0.0:
        return 1.0
    x = (1.0 - c) * (1.0 + c)  # 1 - c^2 without cancellation at c ~ 1
    a = (dim - 1) / 2.0
    if x == 0.0:
        return 0.0
    if x < _LOG_SPACE_X:
        return math.exp(log_reg_inc_beta(x, a, 0.5))  # may underflow to 0.0
    return reg_inc_beta(x, a, 0.5)


def spherical_log10_p(c: float, dim: int) -> float:
    """log10 of spherical_p_value, finite through the underflow range.

    Diagnostic accessor: reported ell values come from the p-value
    itself so that ell == -log10(p_value) holds exactly.
    """
    if dim < 2:
        raise DimensionError(f"dimension {dim} < 2")
    if not math.isfinite(c) or abs(c) > 1.0 + _COS_SLACK:
        raise DomainError(f"cosine {c} outside [-1, 1]")
    c = min(1.0, max(-1.0, c))
    if c <= 0.0:
        return 0.0
    x = (1.0 - c) * (1.0 + c)
    if x == 0.0:
        return -math.inf
    return log_reg_inc_beta(x, (dim - 1) / 2.0, 0.5) / math.log(10.0)


@dataclass(frozen=True)
class ConfidenceReport:
    """Outcome of scoring one recovered vector against a codec."""

    cosine: float
    p_value: float
    ell: float
    idempotent: bool
    verdict: str

    CSV_HEADER = "cosine,p_value,ell,idempotent,verdict"

    def to_csv_row(self) -> str:
        return (f"{self.cosine:.10f},{self.p_value:.10e},{self.ell:.6f},"
                f"{str(self.idempotent).lower()},{self.verdict}")

    def to_json_dict(self) -> dict:
        return {
            "cosine": self.cosine,
            "p_value": self.p_value,
            "ell": self.ell,
            "idempotent": self.idempotent,
            "verdict": self.verdict,
        }


def ell_from_p(p_value: float) -> float:
    """-log10(p), with underflowed p reported as the documented cap."""
    if not 0.0 <= p_value <= 1.0:
        raise DomainError(f"p_value {p_value} outside [0, 1]")
    if p_value == 0.0:
        return ELL_CAP
    return -math.log10(p_value)


def assess(codec: Codec, v: UnitVector, ell_threshold: float) -> ConfidenceReport:
    """Score a recovered vector: self-consistency, then tail probability.

    The vector is decoded and re-encoded; failure of byte-exact
    idempotence is an immediate rejection.  Otherwise the cosine to
    the re-encoded vector is converted to a p-value and the verdict
    compares ell = -log10(p) against the caller's threshold.
    """
    passes, reencoded, _ = idempotence_check(codec, v)
    c = cosine(v, reencoded)
    if not passes:
        return ConfidenceReport(cosine=c, p_value=1.0, ell=0.0,
                                idempotent=False, verdict=VERDICT_UNTRUSTED)
    p = spherical_p_value(c, v.dim)
    ell = ell_from_p(p)
    verdict = VERDICT_TRUSTED if ell >= ell_threshold else VERDICT_UNTRUSTED
    return ConfidenceReport(cosine=c, p_value=p, ell=ell,
                            idempotent=True, verdict=verdict)
