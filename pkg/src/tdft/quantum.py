"""Small dense quantum linear algebra: operators, reduced states, entropy.

Matrices are plain complex numpy arrays. Single-site basis ordering is
``(|g>, |e>)``, so a two-atom product index is ``2 * atom1 + atom2`` and the
two-atom basis reads ``(|gg>, |ge>, |eg>, |ee>)``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
NEGATIVE_EIG_TOL = 1e-10

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.conj().T
SIGMA_Z = np.array([[0, 0], [0, 1]], dtype=complex)  # |e><e|
IDENTITY_2 = np.eye(2, dtype=complex)


def annihilation(dim: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on Fock states ``0 .. dim-1``."""
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def basis_state(dim: int, index: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def projector(psi: np.ndarray) -> np.ndarray:
    """Return ``|psi><psi|``."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors), left to right."""
    if not ops:
        raise ValueError("tensor_product needs at least one operand")
    for op in ops:
        if np.size(op) == 0:
            raise ValueError("tensor_product operands must be non-empty")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in ops))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``ab - ba`` for square matrices of equal shape.

    Leading batch dimensions are allowed and broadcast as in ``@``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-2:] != b.shape[-2:] or a.shape[-1] != a.shape[-2]:
        raise ValueError(
            f"commutator needs square matrices of equal size, got {a.shape} and {b.shape}"
        )
    return a @ b - b @ a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.swapaxes(np.asarray(m), -1, -2).conj()


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.all(np.abs(m - dagger(m)) <= tol))


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises
    ------
    ValueError
        If ``rho`` is not square, not hermitian within ``1e-12``, or its trace
        differs from one by more than ``1e-9``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if not is_hermitian(rho):
        raise ValueError("density matrix is not hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"density matrix trace {tr.real:.3e} differs from 1")
    return rho


def partial_trace_first(rho: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Reduced state of subsystem A for a state on ``A (x) B``.

    Traces out the second factor, so ``rho`` must be laid out as
    ``tensor_product(rho_a, rho_b)`` would be.
    """
    rho = np.asarray(rho, dtype=complex)
    if dim_a < 1 or dim_b < 1:
        raise ValueError("subsystem dimensions must be positive")
    if rho.shape != (dim_a * dim_b, dim_a * dim_b):
        raise ValueError(
            f"state of shape {rho.shape} does not match dim_a * dim_b = {dim_a * dim_b}"
        )
    return np.einsum("ajbj->ab", rho.reshape(dim_a, dim_b, dim_a, dim_b))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy ``-Tr(rho log2 rho)`` in bits.

    Eigenvalues in ``[-1e-10, 0]`` are treated as zero; anything more negative
    means the input is not a valid state and raises ``ValueError``.
    """
    rho = check_density_matrix(rho)
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -NEGATIVE_EIG_TOL:
        raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")
    evals = evals[evals > 0.0]
    return float(max(0.0, -np.sum(evals * np.log2(evals))))


def binary_entropy(p):
    """Shannon entropy in bits of the distribution ``(p, 1 - p)``; vectorized."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    h = h + 0.0  # no negative zero
    return h if h.ndim else float(h)


def random_unitary(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Unitary ``exp(A)`` for a random anti-hermitian ``A``."""
    from scipy.linalg import expm

    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return expm(scale * (m - m.conj().T) / 2)
