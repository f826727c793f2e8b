"""Supermaps: completely positive maps acting on Choi operators.

A supermap takes operations from an input space pair (H_in -> H_out) to
operations on an output pair (K_in -> K_out).  It is stored in Kraus form,
acting on Choi operators as

    S(E) = sum_i S_i E S_i†,

with each S_i mapping the composite H_out ⊗ H_in space to K_out ⊗ K_in.

A supermap is deterministic when it sends channels to channels.  That holds
exactly when the dual map S_*(O) = sum_i S_i† O S_i satisfies

    S_*(I_Kout ⊗ rho) = I_Hout ⊗ N_*(rho)

for a channel N_* from states on K_in to states on H_in; equivalently, when
there is an identity-preserving CP map N with
Tr_Kout[S(E)] = N(Tr_Hout[E]) for every E.  N is the effect map of the
supermap: it transports input effects to output effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    EQ_TOL,
    HERM_TOL,
    POS_TOL,
    dag,
    eigh_sorted,
    frob,
    kron,
    matrix_units,
    min_eig_floor,
    partial_trace,
    rel_residual,
)
from .operations import QuantumOperation


class NotDeterministicError(ValueError):
    """Raised when an operation requires a channel-preserving supermap."""


@dataclass(eq=False)
class DeterminismCertificate:
    """Residuals backing a determinism verdict; tolerance-independent."""

    product_residual: float  # worst ||S_*(I ⊗ unit) − I ⊗ candidate|| over the basis
    herm_residual: float  # hermiticity of the candidate map's Choi operator
    tp_residual: float  # ||Tr_out[choi_n] − I|| / sqrt(k_in)
    min_eig: float
    max_eig: float
    choi_n: np.ndarray  # Choi of the candidate N_* on H_in ⊗ K_in

    def verdict(self, tol: float = EQ_TOL) -> bool:
        return (
            self.product_residual <= tol
            and self.herm_residual <= tol
            and self.tp_residual <= tol
            and min_eig_floor(self.min_eig, self.max_eig)
        )

    @property
    def residual(self) -> float:
        return max(self.product_residual, self.herm_residual, self.tp_residual)


@dataclass(eq=False)
class Supermap:
    """CP map on Choi operators in Kraus form.

    ``h_in``/``h_out`` are the input operation's spaces, ``k_in``/``k_out``
    the output operation's.  Each Kraus operator has shape
    (k_out*k_in, h_out*h_in).
    """

    h_in: int
    h_out: int
    k_in: int
    k_out: int
    kraus: tuple
    _certificate: DeterminismCertificate | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        if min(self.h_in, self.h_out, self.k_in, self.k_out) < 1:
            raise ValueError("space dimensions must be positive")
        ops = tuple(np.array(s, dtype=complex) for s in self.kraus)
        if not ops:
            raise ValueError("supermap needs at least one Kraus operator")
        shape = (self.k_out * self.k_in, self.h_out * self.h_in)
        for s in ops:
            if s.shape != shape:
                raise ValueError(f"Kraus operator shape {s.shape} != {shape}")
            if not np.all(np.isfinite(s)):
                raise ValueError("Kraus operator has non-finite entries")
            s.setflags(write=False)
        self.kraus = ops

    def act(self, choi: np.ndarray) -> np.ndarray:
        """Raw action sum_i S_i choi S_i† on an arbitrary matrix."""
        choi = np.asarray(choi, dtype=complex)
        out = np.zeros((self.k_out * self.k_in,) * 2, dtype=complex)
        for s in self.kraus:
            out += s @ choi @ dag(s)
        return out


def identity_supermap(dim_in: int, dim_out: int) -> Supermap:
    """Supermap leaving operations from dim_in to dim_out untouched."""
    d = dim_out * dim_in
    return Supermap(dim_in, dim_out, dim_in, dim_out, (np.eye(d, dtype=complex),))


def apply_supermap(s: Supermap, op: QuantumOperation) -> QuantumOperation:
    """Transform an operation; the result is validated as an operation."""
    if (op.dim_in, op.dim_out) != (s.h_in, s.h_out):
        raise ValueError(
            f"operation spaces ({op.dim_in}, {op.dim_out}) do not match "
            f"supermap input spaces ({s.h_in}, {s.h_out})"
        )
    return QuantumOperation(s.k_in, s.k_out, s.act(op.choi))


def dual_supermap(s: Supermap, o: np.ndarray) -> np.ndarray:
    """Dual action sum_i S_i† O S_i, satisfying Tr[O S(E)] = Tr[S_*(O) E]."""
    o = np.asarray(o, dtype=complex)
    d = s.k_out * s.k_in
    if o.shape != (d, d):
        raise ValueError(f"operator shape {o.shape} != ({d}, {d})")
    out = np.zeros((s.h_out * s.h_in,) * 2, dtype=complex)
    for k in s.kraus:
        out += dag(k) @ o @ k
    return out


def is_normalization_functional(
    c: np.ndarray, dims: tuple[int, int], tol: float = EQ_TOL
) -> tuple[bool, np.ndarray | None]:
    """Decide whether Tr[c E] = 1 for every channel Choi operator E.

    That holds exactly for c = I ⊗ rho with a unit-trace rho on the input
    factor; returns (True, rho) in that case and (False, None) otherwise.
    ``dims`` is (out dimension, in dimension) of the space c lives on.
    """
    d_out, d_in = dims
    c = np.asarray(c, dtype=complex)
    if c.shape != (d_out * d_in, d_out * d_in):
        raise ValueError(f"operator shape {c.shape} inconsistent with dims {dims}")
    rho = partial_trace(c, [d_out, d_in], keep=[1]) / d_out
    if rel_residual(c, kron(np.eye(d_out), rho)) <= tol and abs(np.trace(rho) - 1.0) <= tol:
        return True, rho
    return False, None


def _determinism_certificate(s: Supermap) -> DeterminismCertificate:
    """Probe the dual map on the matrix-unit basis of operators on K_in.

    For each unit |a><b| on K_in the dual of I_Kout ⊗ |a><b| must factor as
    I_Hout ⊗ (candidate); the candidates assemble into the Choi operator of
    the induced map N_*, which must additionally be CP and trace preserving.
    """
    if s._certificate is not None:
        return s._certificate
    eye_kout = np.eye(s.k_out)
    choi_n = np.zeros((s.h_in * s.k_in,) * 2, dtype=complex)
    worst = 0.0
    for a, b, unit in matrix_units(s.k_in):
        x = dual_supermap(s, kron(eye_kout, unit))
        cand = partial_trace(x, [s.h_out, s.h_in], keep=[1]) / s.h_out
        worst = max(worst, rel_residual(x, kron(np.eye(s.h_out), cand)))
        choi_n4 = choi_n.reshape(s.h_in, s.k_in, s.h_in, s.k_in)
        choi_n4[:, a, :, b] += cand
    herm = rel_residual(choi_n, dag(choi_n))
    marg = partial_trace(choi_n, [s.h_in, s.k_in], keep=[1])
    tp = frob(marg - np.eye(s.k_in)) / np.sqrt(s.k_in)
    eigs = np.linalg.eigvalsh((choi_n + dag(choi_n)) / 2.0)
    cert = DeterminismCertificate(
        product_residual=worst,
        herm_residual=herm,
        tp_residual=tp,
        min_eig=float(eigs[0]),
        max_eig=float(eigs[-1]),
        choi_n=choi_n,
    )
    s._certificate = cert
    return cert


def is_deterministic(s: Supermap, tol: float = EQ_TOL) -> bool:
    """True iff the supermap sends every channel to a channel."""
    return _determinism_certificate(s).verdict(tol)


def is_deterministic_effectwise(s: Supermap, tol: float = EQ_TOL) -> bool:
    """Independent determinism verifier through effect factorization.

    Builds a candidate map N on input effects from probe operators with a
    maximally mixed output factor, then demands Tr_Kout[S(G)] = N(Tr_Hout[G])
    on the full matrix-unit basis G of the input Choi space, with N identity
    preserving and CP.  Shares no code path with the dual-map test.
    """
    eye_like = np.eye(s.h_out) / s.h_out
    n_of_unit = {}
    for a, b, unit in matrix_units(s.h_in):
        probe = kron(eye_like, unit)
        n_of_unit[(a, b)] = partial_trace(
            s.act(probe), [s.k_out, s.k_in], keep=[1]
        )
    # Factorization: the output effect of a matrix unit |m,mu><n,nu| must be
    # delta_mn N(|mu><nu|).
    for m, n, _ in matrix_units(s.h_out):
        for mu, nu, unit in matrix_units(s.h_in):
            g = np.zeros((s.h_out * s.h_in,) * 2, dtype=complex)
            g[m * s.h_in + mu, n * s.h_in + nu] = 1.0
            lhs = partial_trace(s.act(g), [s.k_out, s.k_in], keep=[1])
            rhs = n_of_unit[(mu, nu)] if m == n else np.zeros_like(lhs)
            if rel_residual(lhs, rhs) > tol:
                return False
    # Identity preservation: N(I) = I on K_in.
    n_eye = sum(n_of_unit[(a, a)] for a in range(s.h_in))
    if rel_residual(n_eye, np.eye(s.k_in)) > tol:
        return False
    # Complete positivity of N via its Choi operator on K_in ⊗ H_in.
    choi = np.zeros((s.k_in * s.h_in,) * 2, dtype=complex)
    choi4 = choi.reshape(s.k_in, s.h_in, s.k_in, s.h_in)
    for (a, b), val in n_of_unit.items():
        choi4[:, a, :, b] += val
    if rel_residual(choi, dag(choi)) > tol:
        return False
    eigs = np.linalg.eigvalsh((choi + dag(choi)) / 2.0)
    return min_eig_floor(float(eigs[0]), float(eigs[-1]))


@dataclass(frozen=True, eq=False)
class EffectMap:
    """Identity-preserving CP map relating input and output effects.

    Stored through Kraus operators N_l from K_in to H_in, acting on effects
    as N(P) = sum_l N_l† P N_l and on states as N_*(rho) = sum_l N_l rho N_l†.
    Identity preservation (sum_l N_l† N_l = I) is validated at construction.
    """

    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(n, dtype=complex) for n in self.kraus)
        if not ops:
            raise ValueError("effect map needs at least one Kraus operator")
        k_in = ops[0].shape[1]
        gram = sum((dag(n) @ n for n in ops), np.zeros((k_in, k_in), dtype=complex))
        if rel_residual(gram, np.eye(k_in)) > EQ_TOL:
            raise ValueError("effect map is not identity preserving")
        object.__setattr__(self, "kraus", ops)

    @property
    def dim_out_effects(self) -> int:
        """Dimension of the space the transported effects act on (K_in)."""
        return self.kraus[0].shape[1]

    @property
    def dim_in_effects(self) -> int:
        """Dimension of the space the input effects act on (H_in)."""
        return self.kraus[0].shape[0]

    def on_effect(self, p: np.ndarray) -> np.ndarray:
        """Transport an input effect: N(P) = sum_l N_l† P N_l."""
        out = np.zeros((self.dim_out_effects,) * 2, dtype=complex)
        for n in self.kraus:
            out += dag(n) @ p @ n
        return out

    def on_state(self, rho: np.ndarray) -> np.ndarray:
        """Trace-preserving dual action: N_*(rho) = sum_l N_l rho N_l†."""
        out = np.zeros((self.dim_in_effects,) * 2, dtype=complex)
        for n in self.kraus:
            out += n @ rho @ dag(n)
        return out


def effect_map_of(s: Supermap, tol: float = EQ_TOL) -> EffectMap:
    """Canonical Kraus form of the effect map of a deterministic supermap."""
    cert = _determinism_certificate(s)
    if not cert.verdict(tol):
        raise NotDeterministicError(
            f"supermap is not deterministic (residual {cert.residual:.3e})"
        )
    w, v = eigh_sorted(cert.choi_n, tol=max(HERM_TOL, cert.herm_residual * 2))
    cutoff = POS_TOL * max(1.0, float(w[0]))
    ops = tuple(
        np.sqrt(w[j]) * v[:, j].reshape(s.h_in, s.k_in)
        for j in range(w.size)
        if w[j] > cutoff
    )
    return EffectMap(ops)


def is_probability_preserving(s: Supermap, tol: float = EQ_TOL) -> bool:
    """True iff the effect map acts as the identity (requires h_in == k_in)."""
    if s.h_in != s.k_in:
        raise ValueError(
            f"probability preservation needs matching input spaces, got {s.h_in} != {s.k_in}"
        )
    cert = _determinism_certificate(s)
    if not cert.verdict(tol):
        raise NotDeterministicError(
            f"supermap is not deterministic (residual {cert.residual:.3e})"
        )
    d = s.h_in
    vec_i = np.eye(d, dtype=complex).reshape(-1)
    return rel_residual(cert.choi_n, np.outer(vec_i, vec_i.conj())) <= tol


def _interleave(op: np.ndarray, row_dims, col_dims) -> np.ndarray:
    """Reorder a Kraus operator of a product supermap to canonical space order.

    Rows come in as (k_out_a, k_in_a, k_out_b, k_in_b) and leave as
    (k_out_a, k_out_b, k_in_a, k_in_b); columns likewise for the H spaces.
    """
    t = op.reshape(*row_dims, *col_dims)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7)
    return t.reshape(int(np.prod(row_dims)), int(np.prod(col_dims)))


def tensor_supermaps(a: Supermap, b: Supermap) -> Supermap:
    """Parallel composition acting on tensor products of operations."""
    row_dims = (a.k_out, a.k_in, b.k_out, b.k_in)
    col_dims = (a.h_out, a.h_in, b.h_out, b.h_in)
    ops = tuple(
        _interleave(kron(sa, sb), row_dims, col_dims)
        for sa in a.kraus
        for sb in b.kraus
    )
    return Supermap(
        a.h_in * b.h_in, a.h_out * b.h_out, a.k_in * b.k_in, a.k_out * b.k_out, ops
    )


def sum_supermaps(parts) -> Supermap:
    """Coarse-grain alternative supermaps by concatenating their Kraus lists."""
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one supermap")
    dims = (parts[0].h_in, parts[0].h_out, parts[0].k_in, parts[0].k_out)
    ops = []
    for p in parts:
        if (p.h_in, p.h_out, p.k_in, p.k_out) != dims:
            raise ValueError("summed supermaps must share all four space dimensions")
        ops.extend(p.kraus)
    return Supermap(*dims, tuple(ops))


def action_distance(a: Supermap, b: Supermap) -> float:
    """Extensional distance: worst Frobenius gap of actions over matrix units.

    Supermaps with different Kraus lists can be the same map, so equality is
    decided by comparing actions on a spanning basis of input Choi operators.
    """
    if (a.h_in, a.h_out, a.k_in, a.k_out) != (b.h_in, b.h_out, b.k_in, b.k_out):
        raise ValueError("supermaps act on different spaces")
    worst = 0.0
    for _, _, unit in matrix_units(a.h_out * a.h_in):
        worst = max(worst, frob(a.act(unit) - b.act(unit)))
    return worst
