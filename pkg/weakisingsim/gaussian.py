"""Majorana covariance-matrix engine for the critical transverse-field Ising chain.

A spin chain of L sites maps (Jordan-Wigner) onto 2L Majorana modes with

    sigma^x_j               = i g_{2j-1} g_{2j}
    sigma^z_j sigma^z_{j+1} = i g_{2j} g_{2j+1}

so the open cTFIM is the uniform Majorana chain H = -sum_k i g_k g_{k+1}.
Pure Gaussian states are represented by the real antisymmetric covariance
matrix Gamma_{jk} = (i/2) <[g_j, g_k]>, Gamma @ Gamma = -1.

Spin sites are 1-based in the public API, array indices are 0-based.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from scipy.linalg import schur
from scipy.special import xlogy

from weakisingsim.config import NUMERICS_CONFIG
from weakisingsim.errors import InvalidArgumentError, NumericalFailureError
from weakisingsim.pfaffian import pfaffian_log

# 2x2 symplectic block [[0, 1], [-1, 0]]
OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class SpinInterval:
    """Contiguous block of spins [first, last], 1-based and inclusive."""

    first: int
    last: int

    def __post_init__(self):
        if self.first < 1 or self.last < self.first:
            raise InvalidArgumentError(
                f"Invalid interval [{self.first}, {self.last}]: need 1 <= first <= last"
            )

    @property
    def length(self) -> int:
        return self.last - self.first + 1

    def majorana_range(self) -> np.ndarray:
        """0-based Majorana indices; spin j owns Majoranas 2j-1 and 2j (1-based)."""
        return np.arange(2 * self.first - 2, 2 * self.last)

    def complement(self, l_spin: int) -> list["SpinInterval"]:
        parts = []
        if self.first > 1:
            parts.append(SpinInterval(1, self.first - 1))
        if self.last < l_spin:
            parts.append(SpinInterval(self.last + 1, l_spin))
        return parts


@dataclass(frozen=True, eq=False)
class CovarianceState:
    """Pure Gaussian state of n_majorana Majorana modes.

    The matrix is made read-only on construction; updates always return a
    new state, so ground states can be shared between trajectory workers.
    """

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=np.float64)
        n = gamma.shape[0]
        if gamma.ndim != 2 or gamma.shape != (n, n) or n == 0 or n % 2:
            raise InvalidArgumentError(
                f"Covariance matrix must be square with even positive size, got {gamma.shape}"
            )
        skew = float(np.max(np.abs(gamma + gamma.T)))
        if skew > NUMERICS_CONFIG["antisymmetry_tolerance"]:
            raise InvalidArgumentError(
                f"Covariance matrix is not antisymmetric: |G + G^T| = {skew:.3e}"
            )
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_majorana(self) -> int:
        return self.gamma.shape[0]

    @property
    def l_spin(self) -> int:
        return self.gamma.shape[0] // 2

    def antisymmetry_error(self) -> float:
        return float(np.max(np.abs(self.gamma + self.gamma.T)))

    def purity_error(self, rows=None) -> float:
        """max |Gamma^2 + 1|, optionally over the given rows only."""
        if rows is None:
            return float(np.max(np.abs(self.gamma @ self.gamma + np.eye(self.n_majorana))))
        rows = np.asarray(rows)
        square = self.gamma[rows, :] @ self.gamma
        square[np.arange(rows.size), rows] += 1.0
        return float(np.max(np.abs(square)))

    def check(self) -> dict:
        """Invariant deviations: antisymmetry, purity and entry bound."""
        return {
            "antisymmetry": self.antisymmetry_error(),
            "purity": self.purity_error(),
            "max_entry": float(np.max(np.abs(self.gamma))),
        }

    def require_pure(self, context: str = "state", rows=None) -> float:
        """Fail loudly when purity drift exceeds the failure threshold.

        Drift is monitored and never repaired.
        """
        drift = self.purity_error(rows)
        if drift > NUMERICS_CONFIG["purity_failure"]:
            raise NumericalFailureError(
                f"Purity drift {drift:.3e} in {context} exceeds "
                f"{NUMERICS_CONFIG['purity_failure']:.1e}"
            )
        if drift > NUMERICS_CONFIG["purity_tolerance"]:
            warnings.warn(f"Purity drift {drift:.3e} in {context}", RuntimeWarning)
        return drift

    def sub(self, interval: SpinInterval) -> np.ndarray:
        """Restriction of Gamma to the Majoranas of an interval."""
        _check_interval(self, interval)
        idx = interval.majorana_range()
        return self.gamma[np.ix_(idx, idx)]


def _check_interval(state: CovarianceState, interval: SpinInterval):
    if interval.last > state.l_spin:
        raise InvalidArgumentError(
            f"Interval [{interval.first}, {interval.last}] exceeds chain of {state.l_spin} spins"
        )


def _check_site(state: CovarianceState, site: int):
    if not (1 <= site <= state.l_spin):
        raise InvalidArgumentError(f"Site {site} out of range 1-{state.l_spin}")


# ============================================================================
# Ground state
# ============================================================================


def majorana_coupling_matrix(n_majorana: int) -> np.ndarray:
    """Real antisymmetric h with H = (i/4) sum_jk h_jk g_j g_k = -sum_k i g_k g_{k+1}."""
    h = np.zeros((n_majorana, n_majorana))
    k = np.arange(n_majorana - 1)
    h[k, k + 1] = -2.0
    h[k + 1, k] = 2.0
    return h


def build_ground_state(l_spin: int) -> CovarianceState:
    """Ground state of the open critical Ising chain of l_spin spins.

    The coupling matrix is brought to real Schur form h = Z T Z^T with 2x2
    blocks [[0, a], [-a, 0]]; each block is filled with the negative-energy
    orientation -sign(a) * OMEGA and rotated back.
    """
    if l_spin < 2:
        raise InvalidArgumentError(f"Chain length must be >= 2, got {l_spin}")

    n = 2 * l_spin
    h = majorana_coupling_matrix(n)
    t, z = schur(h, output="real")

    blocks = np.zeros((n, n))
    for k in range(0, n, 2):
        # 2L+1 is odd, so the open chain has no zero modes and every block is 2x2
        a = t[k, k + 1]
        blocks[k : k + 2, k : k + 2] = -np.sign(a) * OMEGA

    gamma = z @ blocks @ z.T
    state = CovarianceState(0.5 * (gamma - gamma.T))
    state.require_pure("ground state")
    return state


def single_particle_energies(l_spin: int) -> np.ndarray:
    """Non-negative single-particle energies of the open chain, eps_k = 4 cos(pi k / (2L+1))."""
    h = majorana_coupling_matrix(2 * l_spin)
    eigs = np.linalg.eigvalsh(1j * h)
    return np.sort(eigs[eigs > 0])


def ground_state_energy(l_spin: int) -> float:
    """E_0 = -(1/2) sum_k eps_k over the positive single-particle energies."""
    return -0.5 * float(np.sum(single_particle_energies(l_spin)))


def product_state_x(l_spin: int, sign: int = 1) -> CovarianceState:
    """Fully x-polarized product state, <sigma^x_j> = sign on every site."""
    return CovarianceState(sign * np.kron(np.eye(l_spin), OMEGA))


# ============================================================================
# Entropies
# ============================================================================


def _binary_entropy_from_nu(nu: np.ndarray) -> float:
    nu = np.clip(nu, 0.0, 1.0)
    # modes with nu ~ 1 are pure and contribute exactly zero
    nu = np.where(nu > 1.0 - 1e-12, 1.0, nu)
    p = 0.5 * (1.0 + nu)
    q = 0.5 * (1.0 - nu)
    return float(-np.sum(xlogy(p, p) + xlogy(q, q)))


def entropy_of_block(gamma_sub: np.ndarray) -> float:
    """Von Neumann entropy (nats) of a Majorana block from the spectrum of i*Gamma_sub."""
    eigs = np.linalg.eigvalsh(1j * gamma_sub)
    m = gamma_sub.shape[0] // 2
    # eigenvalues come in pairs +-nu; keep the non-negative half
    nu = np.sort(np.abs(eigs))[::2][:m]
    return _binary_entropy_from_nu(nu)


def entanglement_entropy(state: CovarianceState, interval: SpinInterval) -> float:
    """Entanglement entropy of a spin interval with the rest of the chain."""
    return entropy_of_block(state.sub(interval))


def half_chain_entropy(state: CovarianceState) -> float:
    return entanglement_entropy(state, SpinInterval(1, state.l_spin // 2))


def interval_entropies(state: CovarianceState, intervals: Iterable[SpinInterval]) -> np.ndarray:
    return np.array([entanglement_entropy(state, iv) for iv in intervals])


# ============================================================================
# Correlators
# ============================================================================


def sigma_x_expectation(state: CovarianceState, site: int) -> float:
    _check_site(state, site)
    return float(state.gamma[2 * site - 2, 2 * site - 1])


def nn_zz_expectation(state: CovarianceState, site: int) -> float:
    """<sigma^z_j sigma^z_{j+1}> = Gamma_{2j, 2j+1}."""
    _check_site(state, site)
    _check_site(state, site + 1)
    return float(state.gamma[2 * site - 1, 2 * site])


def connected_xx_correlator(state: CovarianceState, j: int, jp: int) -> float:
    """<sigma^x_j sigma^x_j'> - <sigma^x_j><sigma^x_j'> by Wick's theorem."""
    _check_site(state, j)
    _check_site(state, jp)
    if j == jp:
        raise InvalidArgumentError(f"Connected correlator needs distinct sites, got {j} twice")
    g = state.gamma
    a, b = 2 * j - 2, 2 * j - 1
    c, d = 2 * jp - 2, 2 * jp - 1
    return float(-g[a, c] * g[b, d] + g[a, d] * g[b, c])


class ZZCorrelation(NamedTuple):
    """|<sigma^z_j sigma^z_j'>| with its logarithm; underflow marks a value below exp(-700)."""

    value: float
    log_value: float
    underflow: bool


def string_flip(state: CovarianceState, j: int, jp: int) -> CovarianceState:
    """Covariance of sigma^z_j sigma^z_j' |psi>: Lambda Gamma Lambda with -1 on Majoranas 2j..2j'-1."""
    diag = np.ones(state.n_majorana)
    diag[2 * j - 1 : 2 * jp - 1] = -1.0
    return CovarianceState(diag[:, None] * state.gamma * diag[None, :])


def overlap_log(state: CovarianceState, other: CovarianceState) -> float:
    """log |<other|state>| for two pure Gaussian states on the same modes.

    |<a|b>|^2 = 2^{-L} |Pf([[G_a, 1], [-1, -G_b]])| with L complex modes; this is
    the Pfaffian of [[iG_a, 1], [-1, iG_b]] after a unit-determinant congruence.
    """
    n = state.n_majorana
    eye = np.eye(n)
    block = np.block([[state.gamma, eye], [-eye, -other.gamma]])
    pf = pfaffian_log(block)
    if pf.sign == 0:
        return float("-inf")
    return 0.5 * (pf.log_magnitude - state.l_spin * np.log(2.0))


def zz_correlator_abs(state: CovarianceState, j: int, jp: int) -> ZZCorrelation:
    """|<sigma^z_j sigma^z_j'>| from the Gaussian overlap <psi| sigma^z sigma^z |psi>."""
    _check_site(state, j)
    _check_site(state, jp)
    if not j < jp:
        raise InvalidArgumentError(f"zz correlator needs j < j', got ({j}, {jp})")

    log_value = overlap_log(state, string_flip(state, j, jp))
    if log_value < NUMERICS_CONFIG["underflow_log"]:
        return ZZCorrelation(0.0, log_value, True)
    return ZZCorrelation(float(np.exp(log_value)), log_value, False)


# ============================================================================
# Debug dumps
# ============================================================================


def dump_covariance(state: CovarianceState, path: Path, fmt: str = "bin") -> Path:
    """Write Gamma row-major with n_majorana as header (int64 for bin, first row for csv)."""
    path = Path(path)
    if fmt == "bin":
        with open(path, "wb") as f:
            np.array([state.n_majorana], dtype=np.int64).tofile(f)
            np.ascontiguousarray(state.gamma, dtype=np.float64).tofile(f)
    elif fmt == "csv":
        with open(path, "w") as f:
            f.write(f"{state.n_majorana}\n")
            np.savetxt(f, state.gamma, delimiter=",", fmt="%.17g")
    else:
        raise InvalidArgumentError(f"Unknown dump format '{fmt}'. Must be bin or csv")
    return path


def load_covariance(path: Path) -> CovarianceState:
    path = Path(path)
    if path.suffix == ".csv":
        with open(path) as f:
            n = int(f.readline())
            gamma = np.loadtxt(f, delimiter=",", ndmin=2)
    else:
        with open(path, "rb") as f:
            n = int(np.fromfile(f, dtype=np.int64, count=1)[0])
            gamma = np.fromfile(f, dtype=np.float64, count=n * n).reshape(n, n)
    if gamma.shape != (n, n):
        raise InvalidArgumentError(f"Dump {path} holds {gamma.shape}, header says {n}")
    return CovarianceState(gamma)
