"""Weak x-axis measurements on Majorana covariance states.

Kraus operators K_{j,m} = (1 + m*lam*sigma^x_j) / sqrt(2(1 + lam^2)) with
outcomes m = +-1. sigma^x_j is the Majorana bilinear i g_{2j-1} g_{2j}, so a
measured Gaussian state stays Gaussian and the update is a Schur complement
over the measured 2x2 block.

Every formula is written in lam itself; beta = arctanh(lam) is never formed.
"""

import math
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from weakisingsim.config import NUMERICS_CONFIG
from weakisingsim.errors import InvalidArgumentError, MeasurementInconsistencyError
from weakisingsim.gaussian import OMEGA, CovarianceState, _check_site


class SchemeKind(str, Enum):
    BORN = "born"
    FORCED = "forced"
    BIASED = "biased"
    UNIFORM_PLUS = "uniform-plus"
    UNIFORM_MINUS = "uniform-minus"


class MeasurementScheme(BaseModel):
    """How outcomes are chosen: Born rule, (biased) forced, or fixed uniform outcome."""

    model_config = ConfigDict(frozen=True)

    kind: SchemeKind
    p_plus: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_bias(self):
        if self.kind == SchemeKind.FORCED:
            if self.p_plus not in (None, 0.5):
                raise ValueError("Forced measurements use p_plus = 0.5")
            object.__setattr__(self, "p_plus", 0.5)
        elif self.kind == SchemeKind.BIASED:
            if self.p_plus is None:
                raise ValueError("Biased measurements need p_plus")
        elif self.p_plus is not None:
            raise ValueError(f"Scheme {self.kind.value} takes no p_plus")
        return self

    @classmethod
    def born(cls) -> "MeasurementScheme":
        return cls(kind=SchemeKind.BORN)

    @classmethod
    def forced(cls) -> "MeasurementScheme":
        return cls(kind=SchemeKind.FORCED)

    @classmethod
    def biased(cls, p_plus: float) -> "MeasurementScheme":
        return cls(kind=SchemeKind.BIASED, p_plus=p_plus)

    @classmethod
    def uniform(cls, sign: int) -> "MeasurementScheme":
        if sign not in (1, -1):
            raise InvalidArgumentError(f"Uniform outcome must be +1 or -1, got {sign}")
        return cls(kind=SchemeKind.UNIFORM_PLUS if sign > 0 else SchemeKind.UNIFORM_MINUS)

    @classmethod
    def parse(cls, name: str, p_plus: Optional[float] = None) -> "MeasurementScheme":
        """Build a scheme from its CLI name (born|forced|biased|uniform-plus|uniform-minus)."""
        try:
            kind = SchemeKind(name.strip().lower())
        except ValueError:
            raise InvalidArgumentError(
                f"Unknown scheme '{name}'. Must be one of "
                + ", ".join(k.value for k in SchemeKind)
            )
        if kind == SchemeKind.FORCED:
            p_plus = None
        return cls(kind=kind, p_plus=p_plus)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def samples(self) -> bool:
        return self.kind not in (SchemeKind.UNIFORM_PLUS, SchemeKind.UNIFORM_MINUS)

    @property
    def fixed_outcome(self) -> Optional[int]:
        if self.kind == SchemeKind.UNIFORM_PLUS:
            return 1
        if self.kind == SchemeKind.UNIFORM_MINUS:
            return -1
        return None


class MeasurementRecord(BaseModel):
    """Provenance of one trajectory: outcomes, scheme, strength and seed."""

    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", ge=0.0, le=1.0)
    scheme: MeasurementScheme
    outcomes: list[int]
    seed: int = Field(ge=0, lt=2**64)
    log_born_weight: float

    @field_validator("outcomes")
    @classmethod
    def _check_outcomes(cls, outcomes):
        if any(m not in (1, -1) for m in outcomes):
            raise ValueError("Outcomes must be +1 or -1")
        return outcomes

    @field_validator("log_born_weight")
    @classmethod
    def _check_weight(cls, value):
        if value > 1e-12:
            raise ValueError(f"log Born weight must be <= 0, got {value}")
        return min(value, 0.0)

    @property
    def n_plus(self) -> int:
        return sum(1 for m in self.outcomes if m > 0)

    @property
    def n_minus(self) -> int:
        return len(self.outcomes) - self.n_plus

    @property
    def log_scheme_weight(self) -> float:
        """log of the probability the sampling scheme assigns to these outcomes."""
        kind = self.scheme.kind
        if kind == SchemeKind.BORN:
            return self.log_born_weight
        if kind in (SchemeKind.UNIFORM_PLUS, SchemeKind.UNIFORM_MINUS):
            return 0.0
        p = self.scheme.p_plus
        total = 0.0
        for count, prob in ((self.n_plus, p), (self.n_minus, 1.0 - p)):
            if count:
                total += count * math.log(prob) if prob > 0 else float("-inf")
        return total

    def to_json(self) -> dict:
        data = {"lambda": self.lam, "scheme": self.scheme.name}
        if self.scheme.p_plus is not None:
            data["p_plus"] = self.scheme.p_plus
        data.update(
            seed=self.seed, outcomes=list(self.outcomes), log_born_weight=self.log_born_weight
        )
        return data

    @classmethod
    def from_json(cls, data: dict) -> "MeasurementRecord":
        scheme = MeasurementScheme.parse(data["scheme"], data.get("p_plus"))
        return cls(
            lam=data["lambda"],
            scheme=scheme,
            outcomes=data["outcomes"],
            seed=data["seed"],
            log_born_weight=data["log_born_weight"],
        )


def _check_lambda(lam: float):
    if not (0.0 <= lam <= 1.0):
        raise InvalidArgumentError(f"Measurement strength must lie in [0, 1], got {lam}")


def _check_outcome(outcome: int):
    if outcome not in (1, -1):
        raise InvalidArgumentError(f"Outcome must be +1 or -1, got {outcome}")


def born_probability_x(state: CovarianceState, site: int, lam: float, outcome: int) -> float:
    """p(m) = (1 + lam^2 + 2 m lam <sigma^x_j>) / (2 (1 + lam^2))."""
    _check_site(state, site)
    _check_lambda(lam)
    _check_outcome(outcome)
    sx = state.gamma[2 * site - 2, 2 * site - 1]
    return float((1.0 + lam * lam + 2.0 * outcome * lam * sx) / (2.0 * (1.0 + lam * lam)))


def apply_weak_x(state: CovarianceState, site: int, lam: float, outcome: int) -> CovarianceState:
    """Normalized post-measurement state K_{site,outcome}|psi> as a covariance matrix.

    Gamma' = A - B M^{-1} C with the measured pair (2j-1, 2j), n1 = -2 m lam/(1+lam^2),
    n2 = (1-lam^2)/(1+lam^2) and M = [[Gamma_mm, 1], [-1, n1*OMEGA]].
    """
    p = born_probability_x(state, site, lam, outcome)
    if p <= NUMERICS_CONFIG["impossible_probability"]:
        raise MeasurementInconsistencyError(
            f"Outcome {outcome:+d} at site {site} has probability {p:.3e} (lambda={lam})"
        )
    if lam == 0.0:
        return state

    denom = 1.0 + lam * lam
    n1 = -2.0 * outcome * lam / denom
    n2 = (1.0 - lam * lam) / denom
    kernel = n1 * OMEGA

    m = [2 * site - 2, 2 * site - 1]
    gamma = state.gamma

    eye2 = np.eye(2)
    middle = np.block([[gamma[np.ix_(m, m)], eye2], [-eye2, kernel]])
    inv = np.linalg.inv(middle)
    x11, x12 = inv[:2, :2], inv[:2, 2:]
    x21, x22 = inv[2:, :2], inv[2:, 2:]

    # Gamma_{rest, m} and Gamma_{m, rest}, zero on the measured pair itself
    col = gamma[:, m].copy()
    col[m, :] = 0.0
    row = gamma[m, :].copy()
    row[:, m] = 0.0

    new = gamma - col @ x11 @ row
    new[:, m] = -n2 * (col @ x12)
    new[m, :] = n2 * (x21 @ row)
    new[np.ix_(m, m)] = -kernel + n2 * n2 * x22

    result = CovarianceState(0.5 * (new - new.T))
    result.require_pure(f"measurement at site {site}", rows=m)
    return result


def sample_outcome(
    state: CovarianceState,
    site: int,
    lam: float,
    scheme: MeasurementScheme,
    rng: np.random.Generator,
) -> int:
    """Draw one outcome: Born from the current state, forced/biased with a fixed p_plus."""
    if not scheme.samples:
        raise InvalidArgumentError(f"Scheme {scheme.name} has a fixed outcome, nothing to sample")
    if scheme.kind == SchemeKind.BORN:
        p_plus = born_probability_x(state, site, lam, 1)
    else:
        _check_site(state, site)
        _check_lambda(lam)
        p_plus = scheme.p_plus
    return 1 if rng.random() < p_plus else -1


def trajectory_seed(master_seed: int, index: int) -> int:
    """64-bit seed of trajectory `index`; independent of execution order."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def run_trajectory(
    ground: CovarianceState, lam: float, scheme: MeasurementScheme, seed: int
) -> tuple[MeasurementRecord, CovarianceState]:
    """Measure every site once, left to right, and return record and final state."""
    _check_lambda(lam)
    rng = np.random.default_rng(seed)
    fixed = scheme.fixed_outcome

    state = ground
    outcomes = []
    log_weight = 0.0
    for site in range(1, ground.l_spin + 1):
        outcome = fixed if fixed is not None else sample_outcome(state, site, lam, scheme, rng)
        p = born_probability_x(state, site, lam, outcome)
        state = apply_weak_x(state, site, lam, outcome)
        log_weight += math.log(p)
        outcomes.append(outcome)
    state.require_pure("trajectory end")

    record = MeasurementRecord(
        lam=lam, scheme=scheme, outcomes=outcomes, seed=seed, log_born_weight=log_weight
    )
    return record, state


def apply_outcomes(
    state: CovarianceState,
    lam: float,
    outcomes: Sequence[int],
    order: Optional[Sequence[int]] = None,
) -> tuple[CovarianceState, float]:
    """Apply a given outcome string (one per site) in `order` (1-based sites).

    Returns the final state and the log of the joint Born probability.
    """
    if len(outcomes) != state.l_spin:
        raise InvalidArgumentError(
            f"Need {state.l_spin} outcomes, got {len(outcomes)}"
        )
    order = range(1, state.l_spin + 1) if order is None else order
    if sorted(order) != list(range(1, state.l_spin + 1)):
        raise InvalidArgumentError("Measurement order must visit every site exactly once")

    log_weight = 0.0
    for site in order:
        outcome = outcomes[site - 1]
        log_weight += math.log(born_probability_x(state, site, lam, outcome))
        state = apply_weak_x(state, site, lam, outcome)
    state.require_pure("outcome string")
    return state, log_weight
