"""Closed-form predictions for weakly measured critical Ising chains.

Effective central charge of uniform-outcome states, the equivalent bond-defect
strength, spin-spin defect exponents, replica-limit effective couplings for
forced and biased-forced ensembles, and the mean-field optimal bias.

Conventions:
    lam      measurement strength in [0, 1] (lam = tanh(beta))
    t_       tanh(2 beta) = 2 lam / (1 + lam^2)
    c_       cosh(2 beta) = (1 + lam^2) / (1 - lam^2)
    x        t_ * <sigma^x>, with <sigma^x> = 2/pi on the infinite critical chain
"""

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import spence, xlogy

from weakisingsim.errors import (
    InvalidArgumentError,
    OutOfValidityError,
    SingularParameterError,
)

SIGMA_X_CRITICAL = 2.0 / math.pi

# forced-ensemble prediction is only trusted below this strength
FORCED_VALIDITY_MAX = 0.7

_SINGULAR = 1e-12


def _check_lambda(lam: float, allow_one: bool = True):
    upper_ok = lam <= 1.0 if allow_one else lam < 1.0
    if not (lam >= 0.0 and upper_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise InvalidArgumentError(f"Measurement strength must lie in {bound}, got {lam}")


def tanh_two_beta(lam: float) -> float:
    return 2.0 * lam / (1.0 + lam * lam)


def dilog(z: float) -> float:
    """Real dilogarithm Li2(z) = sum_k z^k / k^2 for |z| <= 1.

    Examples:
        >>> round(dilog(1.0), 12) == round(math.pi**2 / 6, 12)
        True
    """
    if not (-1.0 <= z <= 1.0):
        raise InvalidArgumentError(f"dilog is evaluated on [-1, 1], got {z}")
    # scipy's spence(w) is Li2(1 - w)
    return float(spence(1.0 - z))


def s_parameter(lam: float) -> float:
    """s = 1/cosh(4 beta) = (1 - lam^2)^2 / (lam^4 + 6 lam^2 + 1)."""
    _check_lambda(lam)
    l2 = lam * lam
    return (1.0 - l2) ** 2 / (l2 * l2 + 6.0 * l2 + 1.0)


def c_eff_uniform(lam: float) -> float:
    """Effective central charge of the uniform-outcome post-measurement state."""
    s = s_parameter(lam)
    if lam == 0.0:
        return 0.5
    if s == 0.0:
        return 0.0
    bracket = (xlogy(1.0 + s, 1.0 + s) + xlogy(1.0 - s, 1.0 - s)) * math.log(s)
    value = -3.0 / math.pi**2 * (
        bracket + (1.0 + s) * dilog(-s) + (1.0 - s) * dilog(s)
    )
    return float(min(max(value, 0.0), 0.5))


def defect_strength_t(lam: float) -> float:
    """Bond-defect transmission t = ((1 - lam)/(1 + lam))^2; s = 2/(t + 1/t)."""
    _check_lambda(lam)
    return ((1.0 - lam) / (1.0 + lam)) ** 2


def delta_z(lam: float, branch: Union[int, str]) -> float:
    """Scaling dimension of sigma^z in the uniform state with outcome `branch` (+1/-1)."""
    _check_lambda(lam)
    sign = _branch_sign(branch)
    numerator = 1.0 + sign * lam
    denominator = 1.0 - sign * lam
    ratio = math.inf if denominator == 0.0 else (numerator / denominator) ** 2
    return 2.0 / math.pi**2 * math.atan(ratio) ** 2


def _branch_sign(branch: Union[int, str]) -> int:
    if branch in (1, "+", "plus"):
        return 1
    if branch in (-1, "-", "minus"):
        return -1
    raise InvalidArgumentError(f"Branch must be + or -, got {branch!r}")


class ReplicaParams(BaseModel):
    """Inputs of the replica expansion of the averaged measurement operator."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(alias="lambda", ge=0.0, lt=1.0)
    R: float
    sigma_x_mean: float = Field(default=SIGMA_X_CRITICAL, ge=-1.0, le=1.0)

    @property
    def t_(self) -> float:
        return tanh_two_beta(self.lam)

    @property
    def c_(self) -> float:
        return (1.0 + self.lam**2) / (1.0 - self.lam**2)

    @property
    def x(self) -> float:
        return self.t_ * self.sigma_x_mean


def _nonsingular(value: float, what: str) -> float:
    if abs(value) < _SINGULAR:
        raise SingularParameterError(f"{what} vanishes ({value:.3e})")
    return value


def replica_g(params: ReplicaParams) -> float:
    """Bare single-replica coupling g of the linearized cosh expansion."""
    x, r1 = params.x, params.R - 1.0
    q = ((1.0 - x) / (1.0 + x)) ** r1
    denominator = _nonsingular((1.0 - r1 * x) + (1.0 + r1 * x) * q, "replica g denominator")
    return params.t_ * (1.0 - q) / denominator


def replica_A(params: ReplicaParams) -> float:
    x, r1 = params.x, params.R - 1.0
    return (
        params.c_**params.R
        * ((1.0 - x) ** r1 * (r1 * x + 1.0) - (1.0 + x) ** r1 * (r1 * x - 1.0))
        / 2.0
    )


def replica_g_tilde(params: ReplicaParams) -> float:
    """Renormalized coupling g~ = g / (1 + (R-1) <sigma^x> g)."""
    g = replica_g(params)
    denominator = 1.0 + (params.R - 1.0) * params.sigma_x_mean * g
    return g / _nonsingular(denominator, "g~ denominator")


def replica_A_tilde(params: ReplicaParams) -> float:
    g = replica_g(params)
    sx, R = params.sigma_x_mean, params.R
    outer = 1.0 + (R - 1.0) * sx * g
    inner = _nonsingular(1.0 + R * sx * g, "A~ denominator")
    return replica_A(params) * outer**R / inner ** (R - 1.0)


def replica_g_tilde_limit(lam: float, R: int, sigma_x_mean: float = SIGMA_X_CRITICAL) -> float:
    """Closed-form g~ at R -> 1 (Born ensemble) and R -> 0 (forced ensemble)."""
    _check_lambda(lam, allow_one=False)
    if R == 1:
        return 0.0
    if R == 0:
        return -tanh_two_beta(lam) ** 2 * sigma_x_mean
    raise InvalidArgumentError(f"Replica limit is defined for R in {{0, 1}}, got {R}")


def effective_lambda_forced(lam: float, sigma_x_mean: float = SIGMA_X_CRITICAL) -> float:
    """lam~ = tanh(arctanh(t_^2 <sigma^x>) / 2)."""
    _check_lambda(lam)
    return math.tanh(0.5 * math.atanh(tanh_two_beta(lam) ** 2 * sigma_x_mean))


def c_eff_forced_prediction(lam: float, sigma_x_mean: float = SIGMA_X_CRITICAL) -> float:
    """c_eff of the unbiased forced ensemble, c_eff_uniform(lam~)."""
    if lam > FORCED_VALIDITY_MAX:
        warnings.warn(
            f"Forced-measurement prediction at lambda={lam} lies beyond "
            f"{FORCED_VALIDITY_MAX}; neglected terms are not small there",
            RuntimeWarning,
            stacklevel=2,
        )
    return c_eff_uniform(effective_lambda_forced(lam, sigma_x_mean))


def optimal_bias(lam: float, sigma_x_mean: float = SIGMA_X_CRITICAL) -> float:
    """Single-site Born probability of outcome + on the ground state: (1 + x)/2."""
    _check_lambda(lam)
    return 0.5 + lam / (1.0 + lam * lam) * sigma_x_mean


def g_tilde_prime_limit(
    lam: float, delta_p: float, sigma_x_mean: float = SIGMA_X_CRITICAL
) -> float:
    """R -> 0 coupling of the biased forced ensemble, 2 t_ dp / ((1 - x^2) - 2 x dp)."""
    _check_lambda(lam)
    t_ = tanh_two_beta(lam)
    x = t_ * sigma_x_mean
    denominator = _nonsingular((1.0 - x * x) - 2.0 * x * delta_p, "g~' denominator")
    return 2.0 * t_ * delta_p / denominator


def effective_lambda_biased(
    lam: float, delta_p: float, sigma_x_mean: float = SIGMA_X_CRITICAL
) -> float:
    g = abs(g_tilde_prime_limit(lam, delta_p, sigma_x_mean))
    if g >= 1.0:
        raise OutOfValidityError(
            f"|g~'| = {g:.4f} >= 1 at lambda={lam}, delta_p={delta_p}; "
            "the linearized biased prediction does not apply"
        )
    return math.tanh(0.5 * math.atanh(g))


def c_eff_biased_prediction(
    lam: float, p_plus: float, sigma_x_mean: float = SIGMA_X_CRITICAL
) -> float:
    """c_eff of the biased forced ensemble with bias p_plus."""
    if not (0.0 <= p_plus <= 1.0):
        raise InvalidArgumentError(f"p_plus must lie in [0, 1], got {p_plus}")
    delta_p = p_plus - optimal_bias(lam, sigma_x_mean)
    return c_eff_uniform(effective_lambda_biased(lam, delta_p, sigma_x_mean))


# ==================== Tabulation ====================


@dataclass
class AnalyticCurve:
    """A closed-form quantity sampled on a lambda grid."""

    name: str
    formula: str
    points: list = field(default_factory=list)
    equation: Optional[int] = None

    def __post_init__(self):
        lams = [p[0] for p in self.points]
        if any(not (0.0 <= v <= 1.0) for v in lams):
            raise InvalidArgumentError(f"Curve {self.name}: lambda grid leaves [0, 1]")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise InvalidArgumentError(f"Curve {self.name}: lambda grid must increase strictly")

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def header(self) -> list[str]:
        label = f"{self.name} = {self.formula}"
        if self.equation is not None:
            label = f"{label} (eq. {self.equation})"
        return ["lambda", label]

    def to_csv(self, path: Path) -> Path:
        from weakisingsim.export import write_csv

        return write_csv(path, self.header(), self.points)


@dataclass(frozen=True)
class _CurveSpec:
    formula: str
    func: Callable[..., float]


CURVES: dict[str, _CurveSpec] = {
    "c_eff_uniform": _CurveSpec(
        "-(3/pi^2){[(1+s)log(1+s)+(1-s)log(1-s)]log s+(1+s)Li2(-s)+(1-s)Li2(s)}",
        lambda lam, **kw: c_eff_uniform(lam),
    ),
    "s_parameter": _CurveSpec(
        "(1-lam^2)^2/(lam^4+6lam^2+1)", lambda lam, **kw: s_parameter(lam)
    ),
    "defect_strength_t": _CurveSpec(
        "((1-lam)/(1+lam))^2", lambda lam, **kw: defect_strength_t(lam)
    ),
    "delta_z_plus": _CurveSpec(
        "(2/pi^2)arctan^2(((1+lam)/(1-lam))^2)", lambda lam, **kw: delta_z(lam, 1)
    ),
    "delta_z_minus": _CurveSpec(
        "(2/pi^2)arctan^2(((1-lam)/(1+lam))^2)", lambda lam, **kw: delta_z(lam, -1)
    ),
    "effective_lambda_forced": _CurveSpec(
        "tanh(arctanh(t^2 <sx>)/2)",
        lambda lam, sigma_x_mean=SIGMA_X_CRITICAL, **kw: effective_lambda_forced(
            lam, sigma_x_mean
        ),
    ),
    "c_eff_forced": _CurveSpec(
        "c_eff_uniform(effective_lambda_forced)",
        lambda lam, sigma_x_mean=SIGMA_X_CRITICAL, **kw: c_eff_forced_prediction(
            lam, sigma_x_mean
        ),
    ),
    "c_eff_biased": _CurveSpec(
        "c_eff_uniform(tanh(arctanh|g'|/2)), p_plus = optimal_bias + delta_p",
        lambda lam, delta_p=0.0, sigma_x_mean=SIGMA_X_CRITICAL, **kw: c_eff_uniform(
            effective_lambda_biased(lam, delta_p, sigma_x_mean)
        ),
    ),
    "optimal_bias": _CurveSpec(
        "1/2 + lam <sx>/(1+lam^2)",
        lambda lam, sigma_x_mean=SIGMA_X_CRITICAL, **kw: optimal_bias(lam, sigma_x_mean),
    ),
    "g_tilde_forced": _CurveSpec(
        "-t^2 <sx>",
        lambda lam, sigma_x_mean=SIGMA_X_CRITICAL, **kw: replica_g_tilde_limit(
            lam, 0, sigma_x_mean
        ),
    ),
    "replica_g_tilde": _CurveSpec(
        "g / (1 + (R-1) <sx> g), R = replicas (default 2)",
        lambda lam, replicas=2.0, sigma_x_mean=SIGMA_X_CRITICAL, **kw: replica_g_tilde(
            ReplicaParams(lam=lam, R=replicas, sigma_x_mean=sigma_x_mean)
        ),
    ),
    "replica_A_tilde": _CurveSpec(
        "A (1 + (R-1) <sx> g)^R / (1 + R <sx> g)^(R-1), R = replicas (default 2)",
        lambda lam, replicas=2.0, sigma_x_mean=SIGMA_X_CRITICAL, **kw: replica_A_tilde(
            ReplicaParams(lam=lam, R=replicas, sigma_x_mean=sigma_x_mean)
        ),
    ),
}

# curves are numbered in registry order; the README lists them under the same numbers
CURVE_EQUATIONS: dict[str, int] = {name: k for k, name in enumerate(CURVES, start=1)}


def curve(name: str, grid: Sequence[float], **params) -> AnalyticCurve:
    """Tabulate the registered curve `name` on `grid`.

    Extra keyword params (delta_p, sigma_x_mean) are passed to curves that use them.
    """
    if name not in CURVES:
        raise InvalidArgumentError(
            f"Unknown curve '{name}'. Available: {', '.join(sorted(CURVES))}"
        )
    entry = CURVES[name]
    with warnings.catch_warnings():
        if name == "c_eff_forced":
            warnings.simplefilter("ignore", RuntimeWarning)
        points = [(float(lam), float(entry.func(float(lam), **params))) for lam in grid]
    return AnalyticCurve(
        name=name, formula=entry.formula, points=points, equation=CURVE_EQUATIONS[name]
    )


def parse_grid(text: str) -> np.ndarray:
    """Parse 'start:stop:count' (inclusive linspace) or a comma-separated list.

    Examples:
        >>> parse_grid("0:0.9:10")[-1]
        0.9
        >>> parse_grid("0.2,0.5").tolist()
        [0.2, 0.5]
    """
    text = text.strip()
    try:
        if ":" in text:
            start_s, stop_s, count_s = text.split(":")
            start, stop, count = float(start_s), float(stop_s), int(count_s)
            if count < 1:
                raise InvalidArgumentError(f"Grid count must be >= 1, got {count}")
            if count > 1 and not start < stop:
                raise InvalidArgumentError(f"Grid needs start < stop, got '{text}'")
            grid = np.linspace(start, stop, count) if count > 1 else np.array([start])
        else:
            grid = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as e:
        if isinstance(e, InvalidArgumentError):
            raise
        raise InvalidArgumentError(f"Cannot parse lambda grid '{text}': {e}")

    if grid.size == 0:
        raise InvalidArgumentError("Lambda grid is empty")
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise InvalidArgumentError(f"Lambda grid '{text}' leaves [0, 1]")
    if np.any(np.diff(grid) <= 0.0):
        raise InvalidArgumentError(f"Lambda grid '{text}' must increase strictly")
    return grid


def predicted_c_eff(scheme_name: str, lam: float, p_plus: Optional[float] = None) -> float:
    """Prediction matching a measurement scheme, for side-by-side sweep tables."""
    if scheme_name in ("uniform-plus", "uniform-minus"):
        return c_eff_uniform(lam)
    if scheme_name == "born":
        return 0.5
    if scheme_name == "forced":
        return c_eff_forced_prediction(lam)
    if scheme_name == "biased":
        return c_eff_biased_prediction(lam, p_plus)
    raise InvalidArgumentError(f"No prediction for scheme '{scheme_name}'")
