"""Circuit factorization of supermaps and its probabilistic extension."""

import numpy as np
import pytest

from supermaps.linalg import dag, kron, random_density, random_isometry
from supermaps.operations import apply_operation, choi_to_kraus, random_channel
from supermaps.realization import (
    CircuitRealization,
    circuit_to_supermap,
    delayed_reading_check,
    realize,
    realize_probabilistic,
    run_circuit,
)
from supermaps.supermap import (
    NotDeterministicError,
    Supermap,
    action_distance,
    apply_supermap,
    identity_supermap,
    is_deterministic,
    sum_supermaps,
)

from test_supermap import random_circuit_supermap


def postprocessing_supermap(channel):
    """E -> D ∘ E for a channel D, as Kraus operators D_k ⊗ I."""
    ops = choi_to_kraus(channel).operators
    return Supermap(
        channel.dim_in,
        channel.dim_in,
        channel.dim_in,
        channel.dim_out,
        tuple(kron(d, np.eye(channel.dim_in)) for d in ops),
    )


class TestRealize:
    def test_identity_supermap(self):
        c = realize(identity_supermap(2, 2))
        assert c.dim_a == c.dim_b == 1
        rebuilt = circuit_to_supermap(c, (2, 2, 2, 2))
        assert action_distance(rebuilt, identity_supermap(2, 2)) <= 1e-12

    def test_postprocessing(self, rng):
        s = postprocessing_supermap(random_channel(2, 3, 2, rng))
        c = realize(s)
        assert c.dim_b == 1  # nothing flows past the input side
        rebuilt = circuit_to_supermap(c, (2, 2, 2, 3))
        assert action_distance(rebuilt, s) <= 1e-8

    def test_random_deterministic_roundtrip(self, rng):
        for _ in range(10):
            dims = tuple(int(d) for d in rng.integers(2, 4, size=4))
            s = random_circuit_supermap(rng, dims=dims)
            c = realize(s)
            rebuilt = circuit_to_supermap(c, dims)
            assert action_distance(rebuilt, s) <= 1e-8

    def test_isometry_contracts(self, rng):
        s = random_circuit_supermap(rng)
        c = realize(s)
        assert np.linalg.norm(dag(c.v) @ c.v - np.eye(c.v.shape[1])) <= 1e-8
        assert np.linalg.norm(dag(c.w) @ c.w - np.eye(c.w.shape[1])) <= 1e-8

    def test_ancilla_bookkeeping(self, rng):
        s = random_circuit_supermap(rng, dim_a=3, dim_b=2)
        c = realize(s)
        assert c.dim_a == len(s.kraus)
        # dim_b equals the canonical Kraus count of the effect map
        from supermaps.supermap import effect_map_of

        assert c.dim_b == len(effect_map_of(s).kraus)

    def test_not_deterministic_raises(self):
        s = Supermap(2, 2, 2, 2, (np.sqrt(0.5) * np.eye(4),))
        with pytest.raises(NotDeterministicError):
            realize(s)

    def test_degenerate_one_dimensional_outputs(self, rng):
        # effect-like supermap: k_in = k_out = 1 (a one-outcome tester)
        rho = random_density(2, rng)
        effect = kron(np.eye(2), rho.T)
        w, v = np.linalg.eigh(effect)
        ops = tuple(
            np.sqrt(w[j]) * v[:, j].conj().reshape(1, 4)
            for j in range(4)
            if w[j] > 1e-12
        )
        s = Supermap(2, 2, 1, 1, ops)
        assert is_deterministic(s)
        c = realize(s)
        rebuilt = circuit_to_supermap(c, (2, 2, 1, 1))
        assert action_distance(rebuilt, s) <= 1e-8


class TestKrausFormConsistency:
    def test_contraction_form_equals_operator_sum(self, rng):
        # Tr_A[W (I⊗Z) E (I⊗Z†) W†] == sum_i S_i E S_i† for the realization
        s = random_circuit_supermap(rng, dims=(2, 2, 2, 2))
        c = realize(s)
        h_in, h_out, k_in, k_out = 2, 2, 2, 2
        z = c.v.reshape(c.dim_b, h_in, k_in).transpose(0, 2, 1).reshape(
            c.dim_b * k_in, h_in
        )
        big_w = kron(c.w, np.eye(k_in))
        big_z = kron(np.eye(h_out), z)
        for _ in range(5):
            e = random_channel(h_in, h_out, 2, rng).choi
            lifted = big_w @ big_z @ e @ dag(big_z) @ dag(big_w)
            # lifted lives on (K_out, A, K_in); trace out A
            t = lifted.reshape(k_out, c.dim_a, k_in, k_out, c.dim_a, k_in)
            contracted = np.einsum("nakmal->nkml", t).reshape(
                k_out * k_in, k_out * k_in
            )
            assert np.linalg.norm(contracted - s.act(e)) <= 1e-9


class TestCircuitToSupermap:
    def test_trivial_circuit_is_identity(self):
        c = CircuitRealization(v=np.eye(2, dtype=complex), w=np.eye(2, dtype=complex),
                               dim_a=1, dim_b=1)
        s = circuit_to_supermap(c, (2, 2, 2, 2))
        assert action_distance(s, identity_supermap(2, 2)) <= 1e-12

    def test_random_circuits_are_deterministic(self, rng):
        for _ in range(5):
            v = random_isometry(2 * 2, 2, rng)
            w = random_isometry(2 * 2, 2 * 2, rng)
            c = CircuitRealization(v=v, w=w, dim_a=2, dim_b=2)
            s = circuit_to_supermap(c, (2, 2, 2, 2))
            assert is_deterministic(s)

    def test_rejects_non_isometry(self):
        with pytest.raises(ValueError, match="isometry"):
            CircuitRealization(v=np.ones((2, 2)), w=np.eye(2), dim_a=1, dim_b=1)

    def test_dims_mismatch_raises(self, rng):
        s = random_circuit_supermap(rng)
        c = realize(s)
        with pytest.raises(ValueError):
            circuit_to_supermap(c, (3, 2, 2, 2))


class TestRealizeProbabilistic:
    def test_single_part_projector_is_identity(self, rng):
        s = random_circuit_supermap(rng)
        c = realize_probabilistic([s])
        assert len(c.projectors) == 1
        np.testing.assert_allclose(c.projectors[0], np.eye(c.dim_a), atol=1e-14)

    def test_split_identity_into_halves(self, rng):
        half = Supermap(2, 2, 2, 2, (np.sqrt(0.5) * np.eye(4),))
        c = realize_probabilistic([half, half])
        assert [int(np.trace(p).real) for p in c.projectors] == [1, 1]
        e = random_channel(2, 2, 2, rng)
        rho = random_density(2, rng)
        for j in range(2):
            out = run_circuit(c, e, rho, outcome=j)
            expected = apply_operation(e, rho) / 2
            assert np.linalg.norm(out - expected) <= 1e-10

    def test_parts_recovered_by_grouping(self, rng):
        s = random_circuit_supermap(rng, dim_a=3)
        parts = [
            Supermap(s.h_in, s.h_out, s.k_in, s.k_out, s.kraus[:1]),
            Supermap(s.h_in, s.h_out, s.k_in, s.k_out, s.kraus[1:]),
        ]
        c = realize_probabilistic(parts)
        rebuilt = circuit_to_supermap(c, (s.h_in, s.h_out, s.k_in, s.k_out))
        for part, back in zip(parts, rebuilt):
            assert action_distance(part, back) <= 1e-8

    def test_projector_completeness_and_sum(self, rng):
        s = random_circuit_supermap(rng, dim_a=3)
        parts = [
            Supermap(s.h_in, s.h_out, s.k_in, s.k_out, s.kraus[:2]),
            Supermap(s.h_in, s.h_out, s.k_in, s.k_out, s.kraus[2:]),
        ]
        c = realize_probabilistic(parts)
        np.testing.assert_allclose(sum(c.projectors), np.eye(c.dim_a), atol=1e-14)
        e = random_channel(s.h_in, s.h_out, 2, rng)
        rho = random_density(s.k_in, rng)
        total = sum(run_circuit(c, e, rho, outcome=j) for j in range(2))
        joint = run_circuit(c, e, rho)
        assert np.linalg.norm(total - joint) <= 1e-10

    def test_sum_must_be_deterministic(self):
        half = Supermap(2, 2, 2, 2, (np.sqrt(0.5) * np.eye(4),))
        with pytest.raises(NotDeterministicError):
            realize_probabilistic([half, half, half])


class TestRunCircuit:
    def test_matches_direct_action_on_channels(self, rng):
        s = random_circuit_supermap(rng, dims=(2, 3, 2, 2))
        c = realize(s)
        for _ in range(5):
            e = random_channel(2, 3, 2, rng)
            rho = random_density(2, rng)
            direct = apply_operation(apply_supermap(s, e), rho)
            assert np.linalg.norm(run_circuit(c, e, rho) - direct) <= 1e-9

    def test_channel_output_has_unit_trace(self, rng):
        s = random_circuit_supermap(rng)
        c = realize(s)
        e = random_channel(2, 2, 2, rng)
        rho = random_density(2, rng)
        assert abs(np.trace(run_circuit(c, e, rho)) - 1.0) <= 1e-10


class TestDelayedReading:
    def test_single_deterministic_part(self, rng):
        s = random_circuit_supermap(rng)
        report = delayed_reading_check([s], trials=5, seed=2)
        assert report.passed
        assert report.max_action_residual <= 1e-10

    def test_two_part_identity_split_probabilities(self, rng):
        half = Supermap(2, 2, 2, 2, (np.sqrt(0.5) * np.eye(4),))
        c = realize_probabilistic([half, half])
        e = random_channel(2, 2, 2, rng)
        rho = random_density(2, rng)
        probs = [float(np.trace(run_circuit(c, e, rho, outcome=j)).real) for j in range(2)]
        np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-10)

    def test_random_three_part_decomposition(self, rng):
        s = random_circuit_supermap(rng, dim_a=3)
        parts = [
            Supermap(s.h_in, s.h_out, s.k_in, s.k_out, (k,)) for k in s.kraus
        ]
        report = delayed_reading_check(parts, trials=50, seed=7)
        assert report.max_action_residual <= 1e-8
        assert report.max_probability_residual <= 1e-8


class TestProjectorValidation:
    def test_non_orthogonal_projectors_rejected(self, rng):
        s = random_circuit_supermap(rng, dim_a=2)
        c = realize(s)
        p = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(ValueError, match="orthogonal"):
            CircuitRealization(v=c.v, w=c.w, dim_a=2, dim_b=c.dim_b,
                               projectors=(p, p))

    def test_incomplete_projectors_rejected(self, rng):
        s = random_circuit_supermap(rng, dim_a=2)
        c = realize(s)
        p = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(ValueError, match="sum"):
            CircuitRealization(v=c.v, w=c.w, dim_a=2, dim_b=c.dim_b,
                               projectors=(p,))

    def test_rotated_projector_basis_grouping(self, rng):
        # projectors need not be diagonal in the ancilla basis: rotate a
        # two-part split by a unitary on A and check the grouped actions
        s = random_circuit_supermap(rng, dim_a=2)
        u = random_isometry(2, 2, rng)
        rotated_kraus = tuple(
            sum(u[i, j] * s.kraus[i] for i in range(2)) for j in range(2)
        )
        rotated = Supermap(s.h_in, s.h_out, s.k_in, s.k_out, rotated_kraus)
        c = realize(rotated)
        projs = (
            u @ np.diag([1.0, 0.0]).astype(complex) @ dag(u),
            u @ np.diag([0.0, 1.0]).astype(complex) @ dag(u),
        )
        measured = CircuitRealization(v=c.v, w=c.w, dim_a=2, dim_b=c.dim_b,
                                      projectors=projs)
        parts = circuit_to_supermap(measured, (s.h_in, s.h_out, s.k_in, s.k_out))
        total = sum_supermaps(parts)
        assert action_distance(total, rotated) <= 1e-8
