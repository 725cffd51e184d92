"""Log-domain Pfaffian of real antisymmetric matrices.

Built on the pivoted Parlett-Reid factorization P^T A P = L T L^T from pfapack.
Pf(A) = det(P) * prod T[2k, 2k+1]; the product is kept as a sign and a sum of
logarithms so overlaps of 1000-mode Gaussian states stay representable.
"""

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from pfapack.pfaffian import skew_LTL

from weakisingsim.errors import InvalidArgumentError


class LogPfaffian(NamedTuple):
    """Pf = sign * exp(log_magnitude); sign 0 means Pf == 0 (log_magnitude = -inf)."""

    sign: int
    log_magnitude: float

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * float(np.exp(self.log_magnitude))


def permutation_sign(perm) -> int:
    """Parity of a permutation given as a matrix (dense or sparse) or an index vector."""
    if sp.issparse(perm):
        perm = perm.toarray()
    perm = np.asarray(perm)
    if perm.ndim == 2:
        perm = np.argmax(np.abs(perm), axis=1)
    perm = perm.astype(np.int64)
    seen = np.zeros(perm.size, dtype=bool)
    sign = 1
    for start in range(perm.size):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def pfaffian_log(skew: np.ndarray) -> LogPfaffian:
    """Pfaffian of a real antisymmetric matrix as (sign, log|Pf|).

    The input is antisymmetrized before the factorization, so round-off
    asymmetry of order 1e-10 does not bias the result.

    Examples:
        >>> pfaffian_log(np.array([[0.0, 2.0], [-2.0, 0.0]])).value
        2.0
    """
    a = np.array(skew, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"Pfaffian needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n % 2:
        raise InvalidArgumentError(f"Pfaffian of odd dimension {n} is undefined")
    if n == 0:
        return LogPfaffian(1, 0.0)

    a = 0.5 * (a - a.T)
    tridiagonal, _, perm = skew_LTL(a, overwrite_a=True)
    pivots = np.real(np.diagonal(tridiagonal, offset=1)[::2])
    if np.any(pivots == 0.0):
        return LogPfaffian(0, float("-inf"))

    sign = permutation_sign(perm)
    if np.count_nonzero(pivots < 0.0) % 2:
        sign = -sign
    return LogPfaffian(sign, float(np.sum(np.log(np.abs(pivots)))))


def pfaffian(skew: np.ndarray) -> float:
    """Pfaffian value; overflows/underflows for large matrices, use pfaffian_log there."""
    return pfaffian_log(skew).value
