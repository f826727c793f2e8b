"""Quantum operations as Choi operators, with Kraus interconversion.

A quantum operation maps states on an input space (dimension ``dim_in``) to
unnormalized states on an output space (``dim_out``).  It is stored through
its Choi operator on the composite out ⊗ in space, built against the
unnormalized maximally entangled vector |I> = sum_n |n>|n>:

    choi = sum_j vec(E_j) vec(E_j)†        (row-major vec)

Applying the map contracts the input factor:

    E(rho) = Tr_in[(I ⊗ rho^T) choi]

Transposition is always taken in the computational basis.  States are
operations with ``dim_in == 1``, effects are operations with ``dim_out == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    EQ_TOL,
    HERM_TOL,
    POS_TOL,
    dag,
    eigh_sorted,
    frob,
    kron,
    min_eig_floor,
    permute_systems,
    random_isometry,
    rel_residual,
    as_rng,
)


def choi_residuals(choi: np.ndarray, dim_in: int, dim_out: int) -> dict:
    """Diagnostics for a candidate Choi operator.

    Returns hermiticity residual, extreme eigenvalues, the trace-non-increase
    violation (largest eigenvalue of effect − I, clipped at 0) and the
    Frobenius distance of the effect from the identity (channel residual).
    """
    choi = np.asarray(choi, dtype=complex)
    herm = rel_residual(choi, dag(choi))
    sym = (choi + dag(choi)) / 2.0
    eigs = np.linalg.eigvalsh(sym)
    effect = np.einsum(
        "nanb->ab", sym.reshape(dim_out, dim_in, dim_out, dim_in)
    )
    eff_eigs = np.linalg.eigvalsh((effect + dag(effect)) / 2.0)
    return {
        "hermiticity": herm,
        "min_eig": float(eigs[0]),
        "max_eig": float(eigs[-1]),
        "trace_increase": max(0.0, float(eff_eigs[-1]) - 1.0),
        "channel_residual": frob(effect - np.eye(dim_in)),
    }


@dataclass(frozen=True, eq=False)
class QuantumOperation:
    """Completely positive trace-non-increasing map in Choi form.

    The Choi operator lives on out ⊗ in (out factor first) and is validated
    at construction: Hermitian, positive semidefinite, and with effect
    Tr_out[choi] <= I, all within the package tolerances.
    """

    dim_in: int
    dim_out: int
    choi: np.ndarray

    def __post_init__(self):
        if self.dim_in < 1 or self.dim_out < 1:
            raise ValueError("dimensions must be positive")
        choi = np.asarray(self.choi, dtype=complex)
        d = self.dim_out * self.dim_in
        if choi.shape != (d, d):
            raise ValueError(f"Choi operator must be {d}x{d}, got {choi.shape}")
        if not np.all(np.isfinite(choi)):
            raise ValueError("Choi operator has non-finite entries")
        res = choi_residuals(choi, self.dim_in, self.dim_out)
        if res["hermiticity"] > HERM_TOL:
            raise ValueError(
                f"Choi operator not Hermitian (residual {res['hermiticity']:.3e})"
            )
        if not min_eig_floor(res["min_eig"], res["max_eig"]):
            raise ValueError(
                f"Choi operator not positive semidefinite (min eigenvalue {res['min_eig']:.3e})"
            )
        if res["trace_increase"] > POS_TOL * max(1.0, res["max_eig"]):
            raise ValueError(
                f"operation increases trace (effect exceeds identity by {res['trace_increase']:.3e})"
            )
        choi = choi.copy()
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)

    @property
    def choi4(self) -> np.ndarray:
        """Choi reshaped to (out, in, out, in) axes."""
        return self.choi.reshape(self.dim_out, self.dim_in, self.dim_out, self.dim_in)


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Operator-sum representation: E(rho) = sum_j E_j rho E_j†."""

    dim_in: int
    dim_out: int
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(e, dtype=complex) for e in self.operators)
        for e in ops:
            if e.shape != (self.dim_out, self.dim_in):
                raise ValueError(
                    f"Kraus operator shape {e.shape} != ({self.dim_out}, {self.dim_in})"
                )
            if not np.all(np.isfinite(e)):
                raise ValueError("Kraus operator has non-finite entries")
        bound = sum((dag(e) @ e for e in ops), np.zeros((self.dim_in, self.dim_in)))
        eigs = np.linalg.eigvalsh((bound + dag(bound)) / 2.0)
        excess = float(eigs[-1]) - 1.0
        if excess > POS_TOL * max(1.0, float(eigs[-1])):
            raise ValueError(
                f"Kraus bound violated: sum E†E exceeds identity by {excess:.3e}"
            )
        object.__setattr__(self, "operators", ops)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Direct operator-sum action, sum_j E_j rho E_j†."""
        out = np.zeros((self.dim_out, self.dim_out), dtype=complex)
        for e in self.operators:
            out += e @ rho @ dag(e)
        return out


def identity_operation(dim: int) -> QuantumOperation:
    """The identity channel on a dim-dimensional system."""
    vec_i = np.eye(dim, dtype=complex).reshape(-1)
    return QuantumOperation(dim, dim, np.outer(vec_i, vec_i.conj()))


def kraus_to_choi(k: KrausSet) -> QuantumOperation:
    """Choi operator of a Kraus set: sum_j vec(E_j) vec(E_j)†."""
    d = k.dim_out * k.dim_in
    choi = np.zeros((d, d), dtype=complex)
    for e in k.operators:
        v = e.reshape(-1)
        choi += np.outer(v, v.conj())
    return QuantumOperation(k.dim_in, k.dim_out, choi)


def choi_to_kraus(op: QuantumOperation) -> KrausSet:
    """Canonical Kraus set from the Choi eigendecomposition.

    Operators are sqrt(eigenvalue) times the unvectorized eigenvectors, kept
    only above the positivity threshold; they come out pairwise orthogonal in
    the Hilbert-Schmidt inner product and reproduce the Choi operator.
    """
    w, v = eigh_sorted(op.choi)
    cutoff = POS_TOL * max(1.0, float(w[0]))
    ops = [
        np.sqrt(w[j]) * v[:, j].reshape(op.dim_out, op.dim_in)
        for j in range(w.size)
        if w[j] > cutoff
    ]
    return KrausSet(op.dim_in, op.dim_out, tuple(ops))


def apply_operation(op: QuantumOperation, rho: np.ndarray) -> np.ndarray:
    """Unnormalized output Tr_in[(I ⊗ rho^T) choi]; its trace is the probability."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (op.dim_in, op.dim_in):
        raise ValueError(f"state shape {rho.shape} != ({op.dim_in}, {op.dim_in})")
    return np.einsum("namb,ab->nm", op.choi4, rho)


def effect_of(op: QuantumOperation) -> np.ndarray:
    """The effect P = Tr_out[choi]; probabilities are Tr[rho^T P]."""
    return np.einsum("nanb->ab", op.choi4)


def is_channel(op: QuantumOperation, tol: float = EQ_TOL) -> bool:
    """True iff the effect equals the identity, i.e. the map preserves trace."""
    return frob(effect_of(op) - np.eye(op.dim_in)) <= tol * np.sqrt(op.dim_in)


def compose(second: QuantumOperation, first: QuantumOperation) -> QuantumOperation:
    """Sequential composition second ∘ first at the Choi level."""
    if first.dim_out != second.dim_in:
        raise ValueError(
            f"cannot compose: first outputs dim {first.dim_out}, second expects {second.dim_in}"
        )
    # Contract the intermediate space on both sides of the Choi operators.
    c = np.einsum("ijkl,jmlp->imkp", second.choi4, first.choi4)
    d = second.dim_out * first.dim_in
    return QuantumOperation(first.dim_in, second.dim_out, c.reshape(d, d))


def tensor(a: QuantumOperation, b: QuantumOperation) -> QuantumOperation:
    """Parallel composition a ⊗ b with canonical (out_a, out_b, in_a, in_b) order."""
    raw = kron(a.choi, b.choi)
    dims = [a.dim_out, a.dim_in, b.dim_out, b.dim_in]
    choi = permute_systems(raw, dims, [0, 2, 1, 3])
    return QuantumOperation(a.dim_in * b.dim_in, a.dim_out * b.dim_out, choi)


def random_channel(
    dim_in: int, dim_out: int, kraus_rank: int, seed: int | np.random.Generator
) -> QuantumOperation:
    """Random channel from a Haar-style Stinespring isometry.

    Requires dim_out * kraus_rank >= dim_in so the isometry exists.
    """
    if kraus_rank < 1:
        raise ValueError("kraus_rank must be at least 1")
    if dim_out * kraus_rank < dim_in:
        raise ValueError(
            f"no isometry into dim {dim_out}x{kraus_rank} from dim {dim_in}"
        )
    v = random_isometry(dim_out * kraus_rank, dim_in, seed)
    blocks = v.reshape(dim_out, kraus_rank, dim_in)
    ops = tuple(blocks[:, j, :] for j in range(kraus_rank))
    return kraus_to_choi(KrausSet(dim_in, dim_out, ops))


def random_operation(
    dim_in: int, dim_out: int, kraus_rank: int, seed: int | np.random.Generator
) -> QuantumOperation:
    """Random trace-non-increasing operation (scaled random channel)."""
    rng = as_rng(seed)
    scale = rng.uniform(0.2, 1.0)
    ch = random_channel(dim_in, dim_out, kraus_rank, rng)
    return QuantumOperation(dim_in, dim_out, scale * ch.choi)
