"""Process POVMs: testers assigning outcome probabilities to operations.

A tester on operations from H_in to H_out is a finite set of positive
operators {P_j} on H_out ⊗ H_in normalized as sum_j P_j = I ⊗ sigma for a
state sigma on H_in.  Outcome probabilities are p_j = Tr[E P_j] on the Choi
operator E, and they sum to one on channels.  Testers are exactly the
probabilistic supermaps with one-dimensional output spaces whose sum is
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    EQ_TOL,
    POS_TOL,
    eigh_sorted,
    is_positive_semidefinite,
    kron,
    partial_trace,
    rel_residual,
)
from .operations import QuantumOperation
from .supermap import Supermap


@dataclass(frozen=True, eq=False)
class Tester:
    """Validated process POVM with its normalization state."""

    h_in: int
    h_out: int
    effects: tuple
    sigma: np.ndarray

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Outcome probabilities of a tester on one operation."""

    probabilities: np.ndarray

    def __iter__(self):
        return iter(self.probabilities)

    def __getitem__(self, j: int) -> float:
        return float(self.probabilities[j])

    def __len__(self) -> int:
        return len(self.probabilities)


def make_tester(effects, h_out: int, h_in: int, tol: float = EQ_TOL) -> Tester:
    """Validate effects and extract the normalization state.

    Each effect must be positive and the sum must factor as I ⊗ sigma with
    sigma a state on H_in; the residual of that factorization is reported on
    failure.
    """
    effects = tuple(np.asarray(p, dtype=complex) for p in effects)
    d = h_out * h_in
    if not effects:
        raise ValueError("tester needs at least one effect")
    total = np.zeros((d, d), dtype=complex)
    for p in effects:
        if p.shape != (d, d):
            raise ValueError(f"effect shape {p.shape} != ({d}, {d})")
        if not is_positive_semidefinite(p):
            raise ValueError("tester effect is not positive semidefinite")
        total += p
    sigma = partial_trace(total, [h_out, h_in], keep=[1]) / h_out
    residual = rel_residual(total, kron(np.eye(h_out), sigma))
    trace_gap = abs(np.trace(sigma) - 1.0)
    if residual > tol or trace_gap > tol:
        raise ValueError(
            f"effects do not normalize to I ⊗ sigma (residual {residual:.3e}, "
            f"trace gap {trace_gap:.3e})"
        )
    return Tester(h_in=h_in, h_out=h_out, effects=effects, sigma=sigma)


def evaluate(t: Tester, op: QuantumOperation, tol: float = EQ_TOL) -> OutcomeDistribution:
    """Outcome probabilities p_j = Tr[choi P_j], clamped to [0, 1] within slack."""
    if (op.dim_in, op.dim_out) != (t.h_in, t.h_out):
        raise ValueError(
            f"operation spaces ({op.dim_in}, {op.dim_out}) do not match tester "
            f"spaces ({t.h_in}, {t.h_out})"
        )
    probs = []
    for p in t.effects:
        val = complex(np.trace(op.choi @ p))
        x = val.real
        if -tol <= x < 0.0:
            x = 0.0
        elif 1.0 < x <= 1.0 + tol:
            x = 1.0
        probs.append(x)
    return OutcomeDistribution(np.array(probs))


def discrimination_probability(t: Tester, ops, priors) -> float:
    """Bayes success probability when outcome j is read as "channel j"."""
    ops = list(ops)
    priors = np.asarray(priors, dtype=float)
    if len(ops) != t.n_outcomes or priors.size != t.n_outcomes:
        raise ValueError(
            f"need one channel and one prior per outcome ({t.n_outcomes}), "
            f"got {len(ops)} channels and {priors.size} priors"
        )
    if abs(priors.sum() - 1.0) > EQ_TOL:
        raise ValueError("priors must sum to 1")
    return float(
        sum(priors[j] * evaluate(t, ops[j])[j] for j in range(t.n_outcomes))
    )


def is_informationally_complete(t: Tester, tol: float = 1e-8) -> bool:
    """True iff the effects span the full operator space on H_out ⊗ H_in.

    Decided by the rank of the stacked vectorized effects at a relative
    singular-value threshold.
    """
    d2 = (t.h_out * t.h_in) ** 2
    stacked = np.stack([p.reshape(-1) for p in t.effects])
    svals = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(svals > tol * svals[0])) if svals.size else 0
    return rank == d2


def prepare_measure_tester(rho: np.ndarray, povm, h_out: int) -> Tester:
    """Tester that feeds the state rho into the operation and measures a POVM.

    Effects are M_j ⊗ rho^T, so probabilities reproduce Tr[E(rho) M_j]; the
    normalization state is sigma = rho^T.
    """
    rho = np.asarray(rho, dtype=complex)
    effects = [kron(np.asarray(m, dtype=complex), rho.T) for m in povm]
    return make_tester(effects, h_out, rho.shape[0])


def tester_from_circuit(input_state: np.ndarray, povm, h_in: int, h_out: int) -> Tester:
    """Tester from a bipartite input state and a joint POVM on output ⊗ ancilla.

    ``input_state`` lives on H_in ⊗ B and each POVM element on H_out ⊗ B.
    The ancilla is contracted so that Tr[(E ⊗ I)(input_state) M_j] = Tr[E P_j]
    for every operation E.
    """
    x = np.asarray(input_state, dtype=complex)
    if x.shape[0] % h_in:
        raise ValueError("input state dimension is not a multiple of h_in")
    b = x.shape[0] // h_in
    if not is_positive_semidefinite(x) or abs(np.trace(x) - 1.0) > EQ_TOL:
        raise ValueError("input state is not a density matrix")
    povm = [np.asarray(m, dtype=complex) for m in povm]
    total = sum(povm)
    if rel_residual(total, np.eye(h_out * b)) > EQ_TOL:
        raise ValueError("joint POVM does not sum to the identity")
    for m in povm:
        if m.shape != (h_out * b, h_out * b):
            raise ValueError(f"POVM element shape {m.shape} != ({h_out * b}, {h_out * b})")
        if not is_positive_semidefinite(m):
            raise ValueError("POVM element is not positive semidefinite")
    x4 = x.reshape(h_in, b, h_in, b)
    effects = []
    for m in povm:
        m4 = m.reshape(h_out, b, h_out, b)
        # P[(a,alpha),(c,gamma)] = sum_{b,d} X[(gamma,b),(alpha,d)] M[(a,d),(c,b)]
        p4 = np.einsum("gbad,edcb->eacg", x4, m4)
        effects.append(p4.reshape(h_out * h_in, h_out * h_in))
    return make_tester(effects, h_out, h_in)


def as_supermap_parts(t: Tester) -> list[Supermap]:
    """Encode each effect as a supermap with one-dimensional output spaces.

    Effect eigenvectors become bra-vector Kraus operators, so each part maps
    a Choi operator E to the scalar Tr[E P_j]; the parts sum to a
    deterministic supermap exactly when the tester is normalized.
    """
    parts = []
    d = t.h_out * t.h_in
    for p in t.effects:
        w, v = eigh_sorted(p)
        cutoff = POS_TOL * max(1.0, float(w[0]))
        ops = [
            np.sqrt(w[j]) * v[:, j].conj().reshape(1, d)
            for j in range(w.size)
            if w[j] > cutoff
        ]
        if not ops:
            ops = [np.zeros((1, d), dtype=complex)]
        parts.append(Supermap(t.h_in, t.h_out, 1, 1, tuple(ops)))
    return parts
