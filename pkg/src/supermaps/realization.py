"""Circuit realization of supermaps as two isometries plus ancillas.

Every deterministic supermap factors as

    S(E)(rho) = Tr_A[ W (E ⊗ I_B)(V rho V†) W† ],

where V is an isometry from K_in into B ⊗ H_in (ancilla B carried alongside
the input), and W an isometry from H_out ⊗ B into K_out ⊗ A (ancilla A
discarded at the end).  Probabilistic supermaps arise from the same circuit
by measuring A projectively and post-selecting:

    S_j(E)(rho) = Tr_A[ (I ⊗ P_j) W (E ⊗ I_B)(V rho V†) W† (I ⊗ P_j) ].

Space-ordering convention: the composite after V is (B, H_in); the composite
after W is (K_out, A).  All interleavings are produced by explicit
permutations.

The construction goes through the effect map N of the supermap: with
canonical Kraus operators N_j of N, the operator Z = sum_j |b_j> ⊗ N_j†
connects the two Kraus decompositions of E -> Tr_Kout[S(E)], and V is the
partial transpose of Z on its second factor.  W's matrix elements are inner
products of the supermap's Kraus blocks against the canonical right-hand
Kraus set {<h_m| ⊗ N_j†}, which is Hilbert-Schmidt orthogonal, so the
coefficient solve is a plain projection and the result is automatically an
isometry for consistent input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    EQ_TOL,
    as_rng,
    dag,
    frob,
    kron,
    partial_trace,
    permute_systems,
    random_density,
    rel_residual,
)
from .operations import (
    QuantumOperation,
    apply_operation,
    identity_operation,
    random_channel,
    tensor,
)
from .supermap import (
    NotDeterministicError,
    Supermap,
    apply_supermap,
    effect_map_of,
    is_deterministic,
    sum_supermaps,
)


@dataclass(eq=False)
class CircuitRealization:
    """Two isometries and ancilla bookkeeping realizing a supermap.

    ``v``: (dim_b * h_in) x k_in isometry into the (B, H_in) composite.
    ``w``: (k_out * dim_a) x (h_out * dim_b) isometry into (K_out, A).
    ``projectors``: optional orthogonal projectors on A summing to the
    identity, one per probabilistic alternative.
    """

    v: np.ndarray
    w: np.ndarray
    dim_a: int
    dim_b: int
    projectors: tuple | None = None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex)
        self.w = np.asarray(self.w, dtype=complex)
        if self.v.shape[0] % self.dim_b or self.w.shape[0] % self.dim_a:
            raise ValueError("isometry shapes inconsistent with ancilla dimensions")
        for name, m in (("V", self.v), ("W", self.w)):
            if rel_residual(dag(m) @ m, np.eye(m.shape[1])) > EQ_TOL:
                raise ValueError(f"{name} is not an isometry within tolerance")
        if self.projectors is not None:
            projs = tuple(np.asarray(p, dtype=complex) for p in self.projectors)
            total = np.zeros((self.dim_a, self.dim_a), dtype=complex)
            for i, p in enumerate(projs):
                if p.shape != (self.dim_a, self.dim_a):
                    raise ValueError("projector shape does not match ancilla A")
                if rel_residual(p, dag(p)) > EQ_TOL or rel_residual(p @ p, p) > EQ_TOL:
                    raise ValueError("ancilla projectors must be Hermitian idempotents")
                for q in projs[:i]:
                    if frob(p @ q) > EQ_TOL * self.dim_a:
                        raise ValueError("ancilla projectors must be mutually orthogonal")
                total += p
            if rel_residual(total, np.eye(self.dim_a)) > EQ_TOL:
                raise ValueError("ancilla projectors must sum to the identity")
            self.projectors = projs

    @property
    def k_in(self) -> int:
        return self.v.shape[1]

    @property
    def h_in(self) -> int:
        return self.v.shape[0] // self.dim_b

    @property
    def h_out(self) -> int:
        return self.w.shape[1] // self.dim_b

    @property
    def k_out(self) -> int:
        return self.w.shape[0] // self.dim_a


def realize(s: Supermap, tol: float = EQ_TOL) -> CircuitRealization:
    """Factor a deterministic supermap into isometries V and W.

    The ancilla B has one dimension per canonical Kraus operator of the
    effect map; A has one per Kraus operator of the supermap itself.
    Raises NotDeterministicError for non-deterministic input, ValueError if
    the coefficient solve fails to produce an isometry (numerically
    inconsistent input).
    """
    if not is_deterministic(s, tol):
        raise NotDeterministicError("cannot realize: supermap is not deterministic")
    n_ops = effect_map_of(s, tol).kraus
    dim_b = len(n_ops)
    dim_a = len(s.kraus)

    # V stacks the conjugated effect-map Kraus operators along ancilla B.
    v = np.zeros((dim_b, s.h_in, s.k_in), dtype=complex)
    for j, n in enumerate(n_ops):
        v[j] = n.conj()
    v = v.reshape(dim_b * s.h_in, s.k_in)

    # W_{ni,mj} = <(<h_m| ⊗ N_j†), (<k_n| ⊗ I) S_i> / ||N_j||²  by
    # Hilbert-Schmidt orthogonality of the canonical right-hand set.
    ss = np.stack(s.kraus).reshape(dim_a, s.k_out, s.k_in, s.h_out, s.h_in)
    nn = np.stack(n_ops)
    weights = np.array([np.vdot(n, n).real for n in n_ops])
    w4 = np.einsum("jek,inkme->nimj", nn, ss) / weights
    w = w4.reshape(s.k_out * dim_a, s.h_out * dim_b)

    gram_gap = rel_residual(dag(w) @ w, np.eye(s.h_out * dim_b))
    if gram_gap > tol:
        raise ValueError(
            f"connecting isometry failed its contract (||W†W − I|| residual {gram_gap:.3e}); "
            "input Kraus operators are numerically inconsistent"
        )
    return CircuitRealization(v=v, w=w, dim_a=dim_a, dim_b=dim_b)


def realize_probabilistic(parts, tol: float = EQ_TOL) -> CircuitRealization:
    """Realize alternative supermaps jointly, one ancilla projector each.

    The parts must sum to a deterministic supermap.  Part j receives the
    projector onto the ancilla-A basis indices of its Kraus operators in the
    concatenated realization.
    """
    parts = list(parts)
    total = sum_supermaps(parts)
    circuit = realize(total, tol)
    projectors = []
    offset = 0
    for p in parts:
        diag = np.zeros(circuit.dim_a)
        diag[offset : offset + len(p.kraus)] = 1.0
        projectors.append(np.diag(diag).astype(complex))
        offset += len(p.kraus)
    return CircuitRealization(
        v=circuit.v,
        w=circuit.w,
        dim_a=circuit.dim_a,
        dim_b=circuit.dim_b,
        projectors=tuple(projectors),
    )


def _kraus_from_circuit(c: CircuitRealization) -> list[np.ndarray]:
    """Reconstruct Kraus operators S_i = (I ⊗ <a_i| ⊗ I)(W ⊗ I)(I ⊗ Z)."""
    k_in, h_in = c.k_in, c.h_in
    h_out, k_out = c.h_out, c.k_out
    # Z is the partial transpose of V on the second factor: a map from H_in
    # into (B, K_in).
    z = c.v.reshape(c.dim_b, h_in, k_in).transpose(0, 2, 1).reshape(c.dim_b * k_in, h_in)
    full = kron(c.w, np.eye(k_in)) @ kron(np.eye(h_out), z)
    blocks = full.reshape(k_out, c.dim_a, k_in, h_out * h_in)
    return [
        blocks[:, i, :, :].reshape(k_out * k_in, h_out * h_in)
        for i in range(c.dim_a)
    ]


def circuit_to_supermap(c: CircuitRealization, dims: tuple[int, int, int, int]):
    """Evaluate a circuit back into Kraus form.

    ``dims`` is (h_in, h_out, k_in, k_out) and must match the isometries.
    Without projectors, returns the single (deterministic) supermap; with
    projectors, returns one supermap per projector, grouping the ancilla
    components in its range.
    """
    h_in, h_out, k_in, k_out = dims
    if (c.h_in, c.h_out, c.k_in, c.k_out) != (h_in, h_out, k_in, k_out):
        raise ValueError(
            f"circuit spaces {(c.h_in, c.h_out, c.k_in, c.k_out)} do not match dims {dims}"
        )
    kraus = _kraus_from_circuit(c)
    if c.projectors is None:
        return Supermap(h_in, h_out, k_in, k_out, tuple(kraus))
    maps = []
    for p in c.projectors:
        w, vecs = np.linalg.eigh((p + dag(p)) / 2.0)
        cols = [vecs[:, j] for j in range(w.size) if w[j] > 0.5]
        if cols:
            ops = tuple(
                sum(u[i].conjugate() * kraus[i] for i in range(c.dim_a)) for u in cols
            )
        else:
            ops = (np.zeros_like(kraus[0]),)
        maps.append(Supermap(h_in, h_out, k_in, k_out, ops))
    return maps


def run_circuit(
    c: CircuitRealization,
    op: QuantumOperation,
    rho: np.ndarray,
    outcome: int | None = None,
) -> np.ndarray:
    """Physically evaluate the circuit on an operation and an input state.

    Returns the unnormalized output state on K_out.  With ``outcome`` set,
    the corresponding ancilla projector is applied before discarding A
    (post-selection); the trace of the result is that outcome's probability.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (c.k_in, c.k_in):
        raise ValueError(f"input state shape {rho.shape} != ({c.k_in}, {c.k_in})")
    if (op.dim_in, op.dim_out) != (c.h_in, c.h_out):
        raise ValueError("operation spaces do not match the circuit's open ports")
    state = c.v @ rho @ dag(c.v)  # on (B, H_in)
    out = apply_operation(tensor(identity_operation(c.dim_b), op), state)  # (B, H_out)
    out = permute_systems(out, [c.dim_b, c.h_out], [1, 0])  # (H_out, B)
    out = c.w @ out @ dag(c.w)  # (K_out, A)
    if outcome is not None:
        if c.projectors is None:
            raise ValueError("circuit has no measurement projectors")
        sel = kron(np.eye(c.k_out), c.projectors[outcome])
        out = sel @ out @ sel
    return partial_trace(out, [c.k_out, c.dim_a], keep=[0])


@dataclass
class DelayedReadingReport:
    """Residuals from checking post-selected circuit outcomes against direct actions."""

    trials: int
    max_action_residual: float
    max_probability_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.max_action_residual <= self.tol
            and self.max_probability_residual <= self.tol
        )


def delayed_reading_check(
    parts, trials: int, seed: int | np.random.Generator, tol: float = EQ_TOL
) -> DelayedReadingReport:
    """Verify that one final ancilla measurement reproduces every alternative.

    Builds the joint realization of the parts and compares, over random
    channels and states, each outcome's post-selected output state against
    the direct action of that part, and the total outcome probability
    against 1.
    """
    parts = list(parts)
    circuit = realize_probabilistic(parts, tol)
    rng = as_rng(seed)
    worst_action = 0.0
    worst_prob = 0.0
    h_in, h_out, k_in = circuit.h_in, circuit.h_out, circuit.k_in
    for _ in range(trials):
        rank = int(rng.integers(1, 4))
        channel = random_channel(h_in, h_out, max(rank, -(-h_in // h_out)), rng)
        rho = random_density(k_in, rng)
        total_p = 0.0
        for j, part in enumerate(parts):
            direct = apply_operation(apply_supermap(part, channel), rho)
            circ = run_circuit(circuit, channel, rho, outcome=j)
            worst_action = max(worst_action, frob(direct - circ))
            total_p += float(np.trace(circ).real)
        worst_prob = max(worst_prob, abs(total_p - 1.0))
    return DelayedReadingReport(
        trials=trials,
        max_action_residual=worst_action,
        max_probability_residual=worst_prob,
        tol=tol,
    )
