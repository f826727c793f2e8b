"""Dense complex linear algebra with multi-factor tensor bookkeeping.

All composite indices are row-major with the leftmost tensor factor most
significant: |i> ⊗ |j> sits at index i*dim_j + j.  Everything here works on
plain complex ndarrays and is pure (inputs are never mutated).
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

# Tolerance conventions used across the package.  Frobenius-norm residuals are
# compared as ||a - b||_F <= tol * max(1, ||b||_F); positivity allows
# eigenvalues down to -POS_TOL * max(1, lambda_max).
EQ_TOL = 1e-8
HERM_TOL = 1e-8
POS_TOL = 1e-9

# Threshold below which an eigenvector entry counts as zero for the phase fix.
_PHASE_EPS = 1e-10


def dag(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def frob(m: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(m))


def rel_residual(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||_F scaled by max(1, ||b||_F)."""
    return frob(np.asarray(a) - np.asarray(b)) / max(1.0, frob(np.asarray(b)))


def hermiticity_residual(m: np.ndarray) -> float:
    return rel_residual(m, dag(m))


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return hermiticity_residual(m) <= tol


def min_eig_floor(lam_min: float, lam_max: float, tol: float = POS_TOL) -> bool:
    """Positivity verdict for an eigenvalue range."""
    return lam_min >= -tol * max(1.0, lam_max)


def is_positive_semidefinite(m: np.ndarray, tol: float = POS_TOL) -> bool:
    """Check m >= 0 within the eigenvalue tolerance (m assumed Hermitian)."""
    w = np.linalg.eigvalsh((m + dag(m)) / 2.0)
    return min_eig_floor(float(w[0]), float(w[-1]), tol)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, left factor most significant."""
    return np.kron(np.asarray(a), np.asarray(b))


def _check_square(m: np.ndarray, dims: Sequence[int]) -> tuple[np.ndarray, int]:
    m = np.asarray(m)
    total = int(np.prod(dims))
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != total:
        raise ValueError(
            f"matrix shape {m.shape} inconsistent with tensor factors {tuple(dims)}"
        )
    return m, total


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    ``dims`` gives the factor dimensions left to right; ``keep`` holds the
    indices of the factors to retain (in their original order).
    """
    m, _ = _check_square(m, dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    t = m.reshape(*dims, *dims)
    # Build einsum subscripts: traced factors share the row/column axis label.
    row = [chr(ord("a") + i) for i in range(n)]
    col = [row[i] if i not in keep else chr(ord("a") + n + i) for i in range(n)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    kept = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum("".join(row + col) + "->" + "".join(out), t).reshape(kept, kept)


def partial_transpose(m: np.ndarray, dims: Sequence[int], which: int) -> np.ndarray:
    """Transpose the selected factor in the computational basis."""
    m, total = _check_square(m, dims)
    n = len(dims)
    if which < 0 or which >= n:
        raise ValueError(f"factor index {which} out of range for {n} factors")
    t = m.reshape(*dims, *dims)
    return np.swapaxes(t, which, n + which).reshape(total, total)


def permute_systems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor i is input factor perm[i]."""
    m, total = _check_square(m, dims)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{tuple(perm)} is not a permutation of {n} factors")
    t = m.reshape(*dims, *dims)
    axes = [int(p) for p in perm] + [int(p) + n for p in perm]
    return t.transpose(axes).reshape(total, total)


def permutation_matrix(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary U with U|x_0,...> = |x_perm[0],...>, so permute_systems(m) = U m U†."""
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{tuple(perm)} is not a permutation of {n} factors")
    total = int(np.prod(dims))
    u = np.zeros((total, total))
    new_dims = [dims[p] for p in perm]
    for idx in np.ndindex(*dims):
        src = int(np.ravel_multi_index(idx, dims))
        dst = int(np.ravel_multi_index([idx[p] for p in perm], new_dims))
        u[dst, src] = 1.0
    return u


def matrix_units(dim: int) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield (a, b, |a><b|) over the matrix-unit basis of dim x dim operators."""
    for a in range(dim):
        for b in range(dim):
            unit = np.zeros((dim, dim), dtype=complex)
            unit[a, b] = 1.0
            yield a, b, unit


def eigh_sorted(m: np.ndarray, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition, eigenvalues descending, phases fixed.

    Each eigenvector is rescaled so its first entry above the phase threshold
    is real positive, which makes downstream canonical Kraus sets
    deterministic.  Raises ValueError if m is not Hermitian within ``tol``.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        raise ValueError(
            f"matrix is not Hermitian within tolerance (residual {hermiticity_residual(m):.3e})"
        )
    w, v = np.linalg.eigh((m + dag(m)) / 2.0)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        nz = np.nonzero(np.abs(col) > _PHASE_EPS)[0]
        if nz.size:
            pivot = col[nz[0]]
            v[:, k] = col * (pivot.conjugate() / abs(pivot))
    return w, v


def complete_isometry(partial: np.ndarray, tol: float = EQ_TOL) -> np.ndarray:
    """Extend a matrix with orthonormal columns to a full square unitary.

    The given columns are preserved exactly; the complement comes from the
    SVD null space of partial†, so the result is deterministic.  A square
    input is returned unchanged.
    """
    partial = np.asarray(partial, dtype=complex)
    rows, cols = partial.shape
    if cols > rows:
        raise ValueError(f"cannot complete {rows}x{cols}: more columns than rows")
    gram = dag(partial) @ partial
    if rel_residual(gram, np.eye(cols)) > tol:
        raise ValueError("input columns are not orthonormal")
    if cols == rows:
        return partial.copy()
    u = np.linalg.svd(partial, full_matrices=True)[0]
    return np.hstack([partial, u[:, cols:]])


def as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_isometry(rows: int, cols: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-style random isometry (orthonormal columns), deterministic per seed."""
    if cols > rows:
        raise ValueError(f"cannot build a {rows}x{cols} isometry: more columns than rows")
    rng = as_rng(seed)
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r).copy()
    d[np.abs(d) < 1e-300] = 1.0
    return q * (d / np.abs(d))


def random_density(dim: int, seed: int | np.random.Generator) -> np.ndarray:
    """Random full-rank density matrix (Hilbert-Schmidt style)."""
    rng = as_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ dag(g)
    return rho / np.trace(rho).real
