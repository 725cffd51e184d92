"""Dense-statevector reference for small chains (L <= 16).

Independent ground truth for the Majorana engine, and the only route to the
non-Gaussian sigma^z measurements. Computational basis: sigma^z eigenstates,
site 1 is the most significant bit, bit 0 means sigma^z = +1.

Outcome strings are indexed the same way: bit 0 of site j means m_j = +1.
"""

from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np
import scipy.sparse as sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.special import xlogy

from weakisingsim.config import NUMERICS_CONFIG
from weakisingsim.errors import (
    ImpossibleOutcomeError,
    InvalidArgumentError,
    NumericalFailureError,
)

SIGMA = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
}
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def _check_length(l_spin: int):
    max_length = NUMERICS_CONFIG["max_oracle_length"]
    if not (2 <= l_spin <= max_length):
        raise InvalidArgumentError(f"Dense oracle needs 2 <= L <= {max_length}, got {l_spin}")


def _check_axis(axis: str):
    if axis not in ("x", "z"):
        raise InvalidArgumentError(f"Measurement axis must be x or z, got '{axis}'")


@dataclass(frozen=True, eq=False)
class DenseState:
    """Normalized state vector of an L-spin chain."""

    l_spin: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.l_spin,):
            raise InvalidArgumentError(
                f"Need {2 ** self.l_spin} amplitudes for L={self.l_spin}, got {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgumentError(f"State norm {norm:.15f} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, l_spin: int, vector: np.ndarray) -> "DenseState":
        vector = np.asarray(vector, dtype=np.complex128)
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            raise ImpossibleOutcomeError("Zero-norm vector cannot be normalized")
        return cls(l_spin, vector / norm)

    @property
    def is_real(self) -> bool:
        return bool(np.max(np.abs(self.amplitudes.imag)) < 1e-12)


# ============================================================================
# Operators
# ============================================================================


def _site_operator(l_spin: int, site: int, op: np.ndarray) -> sparse.csr_matrix:
    """1 x ... x op (at site) x ... x 1 as a sparse matrix."""
    left = sparse.identity(2 ** (site - 1), format="csr")
    right = sparse.identity(2 ** (l_spin - site), format="csr")
    return sparse.kron(sparse.kron(left, sparse.csr_matrix(op)), right, format="csr")


def _apply_local(vector: np.ndarray, l_spin: int, site: int, op: np.ndarray) -> np.ndarray:
    """Apply a 2x2 operator on one site without forming the full matrix."""
    tensor = vector.reshape(2 ** (site - 1), 2, 2 ** (l_spin - site))
    return np.einsum("ab,ibj->iaj", op, tensor).reshape(-1)


def hamiltonian_ed(l_spin: int) -> sparse.csr_matrix:
    """H = -sum_j sigma^z_j sigma^z_{j+1} - sum_j sigma^x_j, open boundaries (real)."""
    _check_length(l_spin)
    sz = SIGMA["z"].real
    sx = SIGMA["x"].real
    z_ops = [_site_operator(l_spin, j, sz) for j in range(1, l_spin + 1)]
    x_ops = [_site_operator(l_spin, j, sx) for j in range(1, l_spin + 1)]

    dim = 2**l_spin
    h = sparse.csr_matrix((dim, dim))
    for j in range(l_spin - 1):
        h = h - z_ops[j] @ z_ops[j + 1]
    for op in x_ops:
        h = h - op
    return h.tocsr()


def _lowest_eigenpair(h: sparse.csr_matrix, l_spin: int) -> tuple[float, np.ndarray]:
    if l_spin <= NUMERICS_CONFIG["dense_diagonalization_max"]:
        values, vectors = eigh(h.toarray(), subset_by_index=[0, 0])
        return float(values[0]), vectors[:, 0]

    try:
        values, vectors = eigsh(
            h, k=1, which="SA", tol=NUMERICS_CONFIG["lanczos_tolerance"], ncv=40
        )
    except ArpackNoConvergence as e:
        raise NumericalFailureError(f"Lanczos did not converge for L={l_spin}: {e}")
    energy, vector = float(values[0]), vectors[:, 0]
    residual = np.linalg.norm(h @ vector - energy * vector)
    if residual > 1e-10:
        raise NumericalFailureError(f"Lanczos residual {residual:.2e} above 1e-10 for L={l_spin}")
    return energy, vector


def ground_energy_ed(l_spin: int) -> float:
    _check_length(l_spin)
    return _lowest_eigenpair(hamiltonian_ed(l_spin), l_spin)[0]


def ground_state_ed(l_spin: int) -> DenseState:
    """Ground state with the largest-magnitude amplitude made real and positive."""
    _check_length(l_spin)
    _, vector = _lowest_eigenpair(hamiltonian_ed(l_spin), l_spin)
    vector = np.asarray(vector, dtype=np.complex128)
    pivot = vector[np.argmax(np.abs(vector))]
    state = DenseState.from_vector(l_spin, vector * (abs(pivot) / pivot))
    if not state.is_real:
        raise NumericalFailureError(
            f"Ground state at L={l_spin} is not real after fixing the phase"
        )
    return state


# ============================================================================
# Weak measurements
# ============================================================================


def kraus_operator(axis: str, lam: float, outcome: int) -> np.ndarray:
    """Single-site K_m = (1 + m lam sigma) / sqrt(2 (1 + lam^2))."""
    _check_axis(axis)
    if not (0.0 <= lam <= 1.0):
        raise InvalidArgumentError(f"Measurement strength must lie in [0, 1], got {lam}")
    if outcome not in (1, -1):
        raise InvalidArgumentError(f"Outcome must be +1 or -1, got {outcome}")
    return (np.eye(2) + outcome * lam * SIGMA[axis]) / np.sqrt(2.0 * (1.0 + lam * lam))


def apply_kraus_ed(
    state: DenseState, site: int, axis: str, lam: float, outcome: int
) -> tuple[DenseState, float]:
    """Post-measurement state and outcome probability ||K psi||^2."""
    if not (1 <= site <= state.l_spin):
        raise InvalidArgumentError(f"Site {site} out of range 1-{state.l_spin}")
    kraus = kraus_operator(axis, lam, outcome)
    vector = _apply_local(state.amplitudes, state.l_spin, site, kraus)
    probability = float(np.vdot(vector, vector).real)
    if probability < NUMERICS_CONFIG["oracle_impossible_probability"]:
        raise ImpossibleOutcomeError(
            f"Outcome {outcome:+d} on {axis} at site {site} has probability {probability:.3e}"
        )
    return DenseState(state.l_spin, vector / np.sqrt(probability)), probability


def uniform_state_ed(l_spin: int, lam: float, axis: str = "z", sign: int = 1) -> DenseState:
    """prod_j (1 + sign lam sigma_j) |ground>, normalized (every outcome equal to sign)."""
    _check_length(l_spin)
    if sign not in (1, -1):
        raise InvalidArgumentError(f"Sign must be +1 or -1, got {sign}")
    state = ground_state_ed(l_spin)
    for site in range(1, l_spin + 1):
        state, _ = apply_kraus_ed(state, site, axis, lam, sign)
    return state


def uniform_z_state(l_spin: int, lam: float, sign: int = 1) -> DenseState:
    return uniform_state_ed(l_spin, lam, "z", sign)


def outcome_strings(l_spin: int) -> np.ndarray:
    """All 2^L outcome strings in index order, shape (2^L, L), entries +-1."""
    return np.array(list(product((1, -1), repeat=l_spin)), dtype=np.int64)


def joint_born_distribution(
    l_spin: int, lam: float, axis: str = "x", state: Optional[DenseState] = None
) -> np.ndarray:
    """Probabilities of all 2^L outcome strings for one measurement per site.

    Both Kraus operators are diagonal in the measurement eigenbasis, so
    p(m) = sum_s |psi(s)|^2 prod_j (1 + m_j lam s_j)^2 / (2 (1 + lam^2)).
    """
    _check_axis(axis)
    state = ground_state_ed(l_spin) if state is None else state
    if state.l_spin != l_spin:
        raise InvalidArgumentError(f"State has L={state.l_spin}, expected {l_spin}")

    vector = state.amplitudes
    if axis == "x":
        for site in range(1, l_spin + 1):
            vector = _apply_local(vector, l_spin, site, HADAMARD)
    weights = np.abs(vector) ** 2

    eig = np.array([1.0, -1.0])
    transfer = (1.0 + lam * np.outer(eig, eig)) ** 2 / (2.0 * (1.0 + lam * lam))
    for site in range(1, l_spin + 1):
        weights = _apply_local(weights.astype(np.complex128), l_spin, site, transfer).real
    return weights


def kl_divergence_biased(distribution: np.ndarray, p_plus: float) -> float:
    """D(p || p') between a joint outcome distribution and the product law p_plus^N+ (1-p_plus)^N-."""
    distribution = np.asarray(distribution, dtype=np.float64)
    l_spin = int(round(np.log2(distribution.size)))
    if 2**l_spin != distribution.size:
        raise InvalidArgumentError(f"Distribution size {distribution.size} is not 2^L")
    if not (0.0 < p_plus < 1.0):
        raise InvalidArgumentError(f"p_plus must lie in (0, 1), got {p_plus}")

    n_plus = (outcome_strings(l_spin) > 0).sum(axis=1)
    log_product = n_plus * np.log(p_plus) + (l_spin - n_plus) * np.log1p(-p_plus)
    positive = distribution > 0
    cross = np.sum(distribution[positive] * log_product[positive])
    return float(np.sum(xlogy(distribution, distribution)) - cross)


def optimal_bias_ed(distribution: np.ndarray) -> float:
    """Minimizer of kl_divergence_biased: the mean fraction of + outcomes."""
    distribution = np.asarray(distribution, dtype=np.float64)
    l_spin = int(round(np.log2(distribution.size)))
    n_plus = (outcome_strings(l_spin) > 0).sum(axis=1)
    return float(np.dot(distribution, n_plus) / (l_spin * distribution.sum()))


# ============================================================================
# Observables
# ============================================================================


def _schmidt_entropy(matrix: np.ndarray) -> float:
    singular = np.linalg.svd(matrix, compute_uv=False)
    p = singular**2
    return float(-np.sum(xlogy(p, p)))


def ee_ed(state: DenseState, cut_after: int) -> float:
    """Entropy of sites 1..cut_after from the Schmidt values at the cut."""
    if not (1 <= cut_after <= state.l_spin - 1):
        raise InvalidArgumentError(f"Cut must lie in 1-{state.l_spin - 1}, got {cut_after}")
    return _schmidt_entropy(state.amplitudes.reshape(2**cut_after, -1))


def interval_entropy_ed(state: DenseState, first: int, last: int) -> float:
    """Entropy of the contiguous block [first, last] (1-based, inclusive)."""
    l_spin = state.l_spin
    if not (1 <= first <= last <= l_spin):
        raise InvalidArgumentError(f"Invalid interval [{first}, {last}] for L={l_spin}")
    if first == 1 and last == l_spin:
        return 0.0
    tensor = state.amplitudes.reshape(2 ** (first - 1), 2 ** (last - first + 1), 2 ** (l_spin - last))
    block = tensor.transpose(1, 0, 2).reshape(2 ** (last - first + 1), -1)
    return _schmidt_entropy(block)


def sigma_expectation(state: DenseState, site: int, axis: str) -> float:
    if axis not in SIGMA:
        raise InvalidArgumentError(f"Axis must be x, y or z, got '{axis}'")
    image = _apply_local(state.amplitudes, state.l_spin, site, SIGMA[axis])
    return float(np.vdot(state.amplitudes, image).real)


def two_point_ed(
    state: DenseState, j: int, jp: int, axis: str, connected: bool = False
) -> float:
    """<sigma_j sigma_j'> (minus <sigma_j><sigma_j'> when connected)."""
    if j == jp:
        raise InvalidArgumentError(f"Two-point function needs distinct sites, got {j} twice")
    image = _apply_local(state.amplitudes, state.l_spin, jp, SIGMA[axis])
    image = _apply_local(image, state.l_spin, j, SIGMA[axis])
    value = float(np.vdot(state.amplitudes, image).real)
    if connected:
        value -= sigma_expectation(state, j, axis) * sigma_expectation(state, jp, axis)
    return value


def _apply_majorana(vector: np.ndarray, l_spin: int, k: int) -> np.ndarray:
    site = (k + 1) // 2
    vector = _apply_local(vector, l_spin, site, SIGMA["z"] if k % 2 else SIGMA["y"])
    for string_site in range(1, site):
        vector = _apply_local(vector, l_spin, string_site, SIGMA["x"])
    return vector


def majorana_operator(l_spin: int, k: int) -> sparse.csr_matrix:
    """g_k (1-based): (prod_{i<j} sigma^x_i) sigma^z_j for k = 2j-1, ... sigma^y_j for k = 2j."""
    _check_length(l_spin)
    if not (1 <= k <= 2 * l_spin):
        raise InvalidArgumentError(f"Majorana index {k} out of range 1-{2 * l_spin}")
    site = (k + 1) // 2
    op = _site_operator(l_spin, site, SIGMA["z"] if k % 2 else SIGMA["y"])
    for string_site in range(1, site):
        op = _site_operator(l_spin, string_site, SIGMA["x"]) @ op
    return op.tocsr()


def covariance_from_dense(state: DenseState) -> np.ndarray:
    """Gamma_kl = <i g_k g_l> (k != l) of an arbitrary pure state; real antisymmetric."""
    l_spin = state.l_spin
    images = np.stack(
        [_apply_majorana(state.amplitudes, l_spin, k) for k in range(1, 2 * l_spin + 1)],
        axis=1,
    )
    # <g_k g_l> = (g_k psi)^dagger (g_l psi)
    gram = images.conj().T @ images
    gamma = (1j * gram).real
    np.fill_diagonal(gamma, 0.0)
    return 0.5 * (gamma - gamma.T)


def global_flip(state: DenseState) -> DenseState:
    """prod_j sigma^x_j |psi>: flips every bit, i.e. reverses the amplitude order."""
    return DenseState(state.l_spin, state.amplitudes[::-1])


def fidelity(a: DenseState, b: DenseState) -> float:
    if a.l_spin != b.l_spin:
        raise InvalidArgumentError(f"States live on L={a.l_spin} and L={b.l_spin}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# ============================================================================
# z-axis diagnostics
# ============================================================================


@dataclass
class ZDiagnostics:
    """Entanglement and spin correlations of a uniform z-outcome state."""

    l_spin: int
    lam: float
    sign: int
    cut_entropies: list  # (ell, S) for the block [1, ell]
    interval_entropies: list  # (first, last, S) for every contiguous block
    zz_connected: list  # (j, j', <s^z_j s^z_j'>_c) for j < j'

    def profile(self):
        from weakisingsim.stats import EntropyProfile

        return EntropyProfile.from_single(self.l_spin, self.cut_entropies)

    def saturation(self) -> dict:
        """Largest interval entropy per interval length."""
        best: dict[int, float] = {}
        for first, last, s in self.interval_entropies:
            length = last - first + 1
            best[length] = max(best.get(length, 0.0), s)
        return dict(sorted(best.items()))


def z_diagnostics(l_spin: int, lam: float, sign: int = 1) -> ZDiagnostics:
    state = uniform_z_state(l_spin, lam, sign)
    cuts = [(ell, ee_ed(state, ell)) for ell in range(1, l_spin)]
    intervals = [
        (first, last, interval_entropy_ed(state, first, last))
        for first in range(1, l_spin + 1)
        for last in range(first, l_spin + 1)
        if not (first == 1 and last == l_spin)
    ]
    correlators = [
        (j, jp, two_point_ed(state, j, jp, "z", connected=True))
        for j in range(1, l_spin + 1)
        for jp in range(j + 1, l_spin + 1)
    ]
    return ZDiagnostics(l_spin, lam, sign, cuts, intervals, correlators)
