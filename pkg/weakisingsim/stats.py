"""Ensembles and fits: entropy profiles, effective central charges, power laws.

Entropy fits use the open-chain chord length: S(l) is regressed on
(1/6) log[(2L/pi) sin(pi l / L)], whose slope is the (effective) central
charge. At l = L/2 the abscissa reduces to (1/6) log L + const.
"""

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from weakisingsim.config import FIT_CONFIG
from weakisingsim.errors import FitFailureError, InvalidArgumentError
from weakisingsim.gaussian import (
    CovarianceState,
    SpinInterval,
    connected_xx_correlator,
    entanglement_entropy,
    zz_correlator_abs,
)
from weakisingsim.measurement import (
    MeasurementRecord,
    MeasurementScheme,
    run_trajectory,
    trajectory_seed,
)


@dataclass(frozen=True)
class ProfileSample:
    ell: int
    mean: float
    stderr: float
    n: int


@dataclass
class EntropyProfile:
    """Mean entanglement entropy of the blocks [1, ell] with standard errors."""

    l_spin: int
    samples: list[ProfileSample] = field(default_factory=list)

    def __post_init__(self):
        for s in self.samples:
            if not (1 <= s.ell <= self.l_spin - 1):
                raise InvalidArgumentError(f"Cut {s.ell} outside 1-{self.l_spin - 1}")
            if s.stderr < 0 or s.n < 1:
                raise InvalidArgumentError(f"Invalid sample {s}")

    @classmethod
    def from_single(cls, l_spin: int, cut_entropies: Sequence[tuple[int, float]]) -> "EntropyProfile":
        return cls(l_spin, [ProfileSample(int(ell), float(s), 0.0, 1) for ell, s in cut_entropies])

    @property
    def ells(self) -> np.ndarray:
        return np.array([s.ell for s in self.samples])

    @property
    def means(self) -> np.ndarray:
        return np.array([s.mean for s in self.samples])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([s.stderr for s in self.samples])

    def scaled(self, factor: float) -> "EntropyProfile":
        return EntropyProfile(
            self.l_spin,
            [ProfileSample(s.ell, factor * s.mean, abs(factor) * s.stderr, s.n) for s in self.samples],
        )

    def to_csv(self, path: Path) -> Path:
        from weakisingsim.export import write_csv

        rows = [(s.ell, s.mean, s.stderr, s.n) for s in self.samples]
        return write_csv(path, ["ell", "mean_S", "stderr_S", "n"], rows)


@dataclass(frozen=True)
class FitResult:
    """Linear fit y = coefficient * x + intercept over a window of the data."""

    coefficient: float
    intercept: float
    residual_rms: float
    window: tuple[float, float]
    n_points: int
    kind: str = "c_eff"
    coefficient_stderr: float = float("nan")

    @property
    def delta(self) -> float:
        """Scaling dimension of a power-law fit, C ~ r^(-2 Delta)."""
        return -0.5 * self.coefficient

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "coefficient": self.coefficient,
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
            "window": list(self.window),
            "n_points": self.n_points,
            "coefficient_stderr": self.coefficient_stderr,
        }


def chord_abscissa(l_spin: int, ell) -> np.ndarray:
    """(1/6) log[(2L/pi) sin(pi ell / L)]."""
    ell = np.asarray(ell, dtype=np.float64)
    return np.log(2.0 * l_spin / np.pi * np.sin(np.pi * ell / l_spin)) / 6.0


def default_window(l_spin: int) -> tuple[int, int]:
    low = math.ceil(FIT_CONFIG["window_low_fraction"] * l_spin)
    high = math.floor(FIT_CONFIG["window_high_fraction"] * l_spin)
    return max(low, 1), min(high, l_spin - 1)


def _linear_fit(x, y, sigma, window, kind) -> FitResult:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < FIT_CONFIG["min_points"]:
        raise FitFailureError(
            f"{kind} fit needs >= {FIT_CONFIG['min_points']} points in window {window}, got {x.size}"
        )
    if np.ptp(x) == 0.0:
        raise FitFailureError(f"{kind} fit has a degenerate design (all abscissae equal)")

    weights = None
    if sigma is not None and np.all(np.asarray(sigma) > 0):
        # polyfit weights multiply residuals: 1/sigma gives 1/sigma^2 least squares
        weights = 1.0 / np.asarray(sigma, dtype=np.float64)
    try:
        slope, intercept = np.polyfit(x, y, 1, w=weights)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise FitFailureError(f"{kind} fit failed: {e}")

    slope_err = float("nan")
    if x.size > 3:
        # unscaled covariance when the weights are genuine 1/sigma
        scaling = "unscaled" if weights is not None else True
        _, cov = np.polyfit(x, y, 1, w=weights, cov=scaling)
        slope_err = float(np.sqrt(max(cov[0, 0], 0.0)))

    residual = y - (slope * x + intercept)
    return FitResult(
        coefficient=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(residual**2))),
        window=(float(window[0]), float(window[1])),
        n_points=int(x.size),
        kind=kind,
        coefficient_stderr=slope_err,
    )


def fit_c_eff(profile: EntropyProfile, window: Optional[tuple[int, int]] = None) -> FitResult:
    """Effective central charge from an entropy profile (chord-length abscissa)."""
    window = default_window(profile.l_spin) if window is None else window
    ells, means, errs = profile.ells, profile.means, profile.stderrs
    mask = (ells >= window[0]) & (ells <= window[1])
    return _linear_fit(
        chord_abscissa(profile.l_spin, ells[mask]), means[mask], errs[mask], window, "c_eff"
    )


def fit_power_law(
    pairs: Sequence[tuple[float, float]],
    window: Optional[tuple[float, float]] = None,
    l_spin: Optional[int] = None,
) -> FitResult:
    """Fit log C = coefficient * log r + b; the coefficient is -2 Delta.

    Default window is [power_law_r_min, power_law_r_max_fraction * L] when L is
    known, otherwise up to the largest r. Points with C <= 0 are dropped with a warning.
    """
    if window is None:
        r_max = (
            FIT_CONFIG["power_law_r_max_fraction"] * l_spin
            if l_spin is not None
            else max(r for r, _ in pairs)
        )
        window = (FIT_CONFIG["power_law_r_min"], r_max)

    inside = [(r, c) for r, c in pairs if window[0] <= r <= window[1]]
    kept = [(r, c) for r, c in inside if c > 0]
    dropped = len(inside) - len(kept)
    if dropped:
        warnings.warn(
            f"Power-law fit excluded {dropped} non-positive correlator values", RuntimeWarning
        )
    if not kept:
        raise FitFailureError(f"No positive correlator values in window {window}")

    r = np.array([p[0] for p in kept], dtype=np.float64)
    c = np.array([p[1] for p in kept], dtype=np.float64)
    return _linear_fit(np.log(r), np.log(c), None, window, "power_law")


def fit_half_chain_scaling(
    lengths: Sequence[int],
    entropies: Sequence[float],
    stderrs: Optional[Sequence[float]] = None,
) -> FitResult:
    """S(L/2) = (c/6) log L + b across a sweep of chain lengths."""
    lengths = np.asarray(lengths, dtype=np.float64)
    if np.any(lengths < 2):
        raise InvalidArgumentError("Chain lengths must be >= 2")
    window = (float(lengths.min()), float(lengths.max()))
    return _linear_fit(np.log(lengths) / 6.0, entropies, stderrs, window, "half_chain")


# ==================== Profiles from states ====================


def default_cuts(l_spin: int) -> list[int]:
    return list(range(1, l_spin))


def cut_entropies(state: CovarianceState, cuts: Sequence[int]) -> np.ndarray:
    return np.array([entanglement_entropy(state, SpinInterval(1, ell)) for ell in cuts])


def profile_from_state(state: CovarianceState, cuts: Optional[Sequence[int]] = None) -> EntropyProfile:
    cuts = default_cuts(state.l_spin) if cuts is None else list(cuts)
    values = cut_entropies(state, cuts)
    return EntropyProfile.from_single(state.l_spin, list(zip(cuts, values)))


def centred_pair(l_spin: int, r: int) -> tuple[int, int]:
    """Sites (j, j + r) placed symmetrically about the chain centre."""
    if not (1 <= r <= l_spin - 1):
        raise InvalidArgumentError(f"Separation {r} outside 1-{l_spin - 1}")
    j = (l_spin - r) // 2 + 1
    return j, j + r


def zz_profile(state: CovarianceState, separations: Optional[Sequence[int]] = None) -> list[tuple]:
    """(r, j, j', |<s^z_j s^z_j'>|, log|...|) for centred pairs."""
    separations = range(1, state.l_spin) if separations is None else separations
    rows = []
    for r in separations:
        j, jp = centred_pair(state.l_spin, r)
        zz = zz_correlator_abs(state, j, jp)
        rows.append((r, j, jp, zz.value, zz.log_value))
    return rows


def xx_profile(state: CovarianceState, separations: Optional[Sequence[int]] = None) -> list[tuple]:
    """(r, j, j', connected <s^x_j s^x_j'>) for centred pairs."""
    separations = range(1, state.l_spin) if separations is None else separations
    rows = []
    for r in separations:
        j, jp = centred_pair(state.l_spin, r)
        rows.append((r, j, jp, connected_xx_correlator(state, j, jp)))
    return rows


# ==================== Ensembles ====================


def compensated_mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error with math.fsum, independent of summation order."""
    n = len(values)
    if n == 0:
        raise InvalidArgumentError("Cannot average an empty sample")
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(variance / n)


def _trajectory_entropies(ground, lam, scheme, seed, cuts):
    record, state = run_trajectory(ground, lam, scheme, seed)
    return record, cut_entropies(state, cuts)


@dataclass
class EnsembleResult:
    profile: EntropyProfile
    records: list[MeasurementRecord]


def run_ensemble(
    ground: CovarianceState,
    lam: float,
    scheme: MeasurementScheme,
    n_traj: int,
    master_seed: int,
    cuts: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
    progress: bool = False,
) -> EnsembleResult:
    """Independent trajectories with per-index seeds; results do not depend on `threads`."""
    if n_traj < 1:
        raise InvalidArgumentError(f"Need at least one trajectory, got {n_traj}")
    cuts = default_cuts(ground.l_spin) if cuts is None else list(cuts)
    seeds = [trajectory_seed(master_seed, k) for k in range(n_traj)]

    jobs = (delayed(_trajectory_entropies)(ground, lam, scheme, seed, cuts) for seed in seeds)
    n_jobs = -1 if threads is None else threads
    if n_jobs == 1:
        results = (_trajectory_entropies(ground, lam, scheme, seed, cuts) for seed in seeds)
    else:
        results = Parallel(n_jobs=n_jobs, return_as="generator")(jobs)
    results = list(
        tqdm(
            results,
            total=n_traj,
            desc=f"{scheme.name} lambda={lam:g}",
            unit="traj",
            disable=not progress,
        )
    )

    records = [r for r, _ in results]
    table = np.array([s for _, s in results])
    samples = []
    for col, ell in enumerate(cuts):
        mean, stderr = compensated_mean_stderr(table[:, col].tolist())
        samples.append(ProfileSample(int(ell), mean, stderr, n_traj))
    return EnsembleResult(EntropyProfile(ground.l_spin, samples), records)


def ensemble_entropy(
    ground: CovarianceState,
    lam: float,
    scheme: MeasurementScheme,
    n_traj: int,
    master_seed: int,
    cuts: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
    progress: bool = False,
) -> EntropyProfile:
    """Trajectory-averaged entropy profile (mean and standard error per cut)."""
    return run_ensemble(ground, lam, scheme, n_traj, master_seed, cuts, threads, progress).profile
