import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esbox.qcore import (
    I2,
    X,
    Z,
    DensityMatrix,
    NotMaxEntangled,
    QCoreError,
    Register,
    RegisterError,
    StateError,
    StateVector,
    UnitaryOp,
    apply,
    cond_mutual_information,
    haar_unitary,
    max_entangled_factor,
    mutual_information,
    partial_trace,
    purify,
    random_density,
    random_state,
    shannon_entropy,
    tensor,
    trace_distance,
    vn_entropy,
)

SQ2 = 1 / np.sqrt(2)
PSI_PLUS = np.array([SQ2, 0, 0, SQ2])


def ket(bits, labels):
    v = np.zeros(2 ** len(bits))
    v[int(bits, 2)] = 1
    return StateVector(v, Register.qubits(*labels))


def bell(labels=("A", "B")):
    return StateVector(PSI_PLUS, Register.qubits(*labels))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestRegister:
    def test_labels_unique(self):
        with pytest.raises(RegisterError):
            Register.qubits("A", "A")

    def test_dimension_floor(self):
        with pytest.raises(RegisterError):
            Register((("A", 1),))

    def test_total_dim(self):
        assert Register((("A", 2), ("E", 16))).total_dim == 32


class TestTensor:
    def test_basis_product(self):
        out = tensor(ket("0", "A"), ket("0", "B"))
        assert out.register.labels == ("A", "B")
        np.testing.assert_allclose(out.amplitudes, [1, 0, 0, 0])

    def test_identity_scaling(self):
        half_a = DensityMatrix(np.eye(2) / 2, Register.qubits("A"))
        half_b = DensityMatrix(np.eye(2) / 2, Register.qubits("B"))
        np.testing.assert_allclose(tensor(half_a, half_b).matrix, np.eye(4) / 4)

    def test_canonical_input_is_16_dim_unit_vector(self):
        out = tensor(bell(("A", "C1")), bell(("B", "C2")))
        assert out.register.labels == ("A", "C1", "B", "C2")
        assert out.amplitudes.shape == (16,)
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1, abs=1e-12)

    def test_label_collision_rejected(self):
        with pytest.raises(RegisterError):
            tensor(ket("0", "A"), ket("1", "A"))


class TestPartialTrace:
    def test_bell_marginal(self):
        np.testing.assert_allclose(partial_trace(bell(), "A").matrix, np.eye(2) / 2, atol=1e-12)

    def test_ghz_marginal(self):
        ghz = StateVector(np.array([SQ2, 0, 0, 0, 0, 0, 0, SQ2]), Register.qubits("A", "B", "C"))
        expected = np.diag([0.5, 0, 0, 0.5])
        np.testing.assert_allclose(partial_trace(ghz, ("A", "B")).matrix, expected, atol=1e-12)

    def test_product_state(self, rng):
        ra = random_density(2, seed=rng, register=Register.qubits("A"))
        rb = random_density(2, seed=rng, register=Register.qubits("B"))
        np.testing.assert_allclose(partial_trace(tensor(ra, rb), "B").matrix, rb.matrix, atol=1e-12)

    def test_keep_order_is_respected(self, rng):
        rho = random_density(8, seed=rng, register=Register.qubits("A", "B", "C"))
        ab = partial_trace(rho, ("A", "B"))
        ba = partial_trace(rho, ("B", "A"))
        assert ba.register.labels == ("B", "A")
        np.testing.assert_allclose(ba.reorder(("A", "B")).matrix, ab.matrix, atol=1e-12)

    def test_unknown_label(self):
        with pytest.raises(RegisterError):
            partial_trace(bell(), "Q")

    def test_composition_500_states(self):
        reg = Register.qubits("A", "B", "C")
        for seed in range(500):
            rho = random_density(8, seed=seed, register=reg)
            direct = partial_trace(rho, "A")
            stepwise = partial_trace(partial_trace(rho, ("A", "B")), "A")
            assert trace_distance(direct, stepwise) <= 1e-10


class TestApply:
    def test_phase_flip(self):
        out = apply(UnitaryOp.on(Z, "C1"), bell(("A", "C1")))
        np.testing.assert_allclose(out.amplitudes, [SQ2, 0, 0, -SQ2], atol=1e-12)

    def test_identity(self, rng):
        rho = random_density(4, seed=rng, register=Register.qubits("A", "B"))
        out = apply(UnitaryOp.on(np.eye(2), "A"), rho)
        np.testing.assert_allclose(out.matrix, rho.matrix)

    def test_dense_coding_flip(self):
        out = apply(UnitaryOp.on(X, "C2"), bell(("A'", "C2")))
        np.testing.assert_allclose(out.amplitudes, [0, SQ2, SQ2, 0], atol=1e-12)

    def test_dimension_mismatch(self):
        op = UnitaryOp(np.eye(4), Register((("A", 4),)))
        with pytest.raises(RegisterError):
            apply(op, bell())

    def test_respects_factor_order(self):
        # X on the second factor of |00> gives |01>
        out = apply(UnitaryOp.on(X, "B"), ket("00", "AB"))
        np.testing.assert_allclose(out.amplitudes, [0, 1, 0, 0])

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_preserves_state_invariants(self, seed):
        reg = Register.qubits("A", "B", "C")
        rho = random_density(8, seed=seed, register=reg)
        u = haar_unitary(4, seed + 1, Register.qubits("C", "A"))
        out = apply(u, rho)
        assert abs(np.trace(out.matrix) - 1) <= 1e-10
        assert np.max(np.abs(out.matrix - out.matrix.conj().T)) <= 1e-10


class TestEntropy:
    def test_pure(self):
        assert vn_entropy(bell().dm()) == pytest.approx(0, abs=1e-12)

    def test_maximally_mixed(self):
        assert vn_entropy(DensityMatrix(np.eye(4) / 4, Register.qubits("A", "B"))) == pytest.approx(2)

    def test_diagonal_against_formula(self):
        expected = -2 * (3 / 8) * math.log2(3 / 8) - 2 * (1 / 8) * math.log2(1 / 8)
        rho = DensityMatrix(np.diag([3 / 8, 3 / 8, 1 / 8, 1 / 8]), Register.qubits("A", "B"))
        assert vn_entropy(rho) == pytest.approx(expected, abs=1e-12)
        assert vn_entropy(rho) == pytest.approx(1.811278, abs=1e-6)

    def test_shannon(self):
        assert shannon_entropy([1, 0, 0, 0]) == 0
        assert shannon_entropy([0.25] * 4) == pytest.approx(2)
        assert shannon_entropy([0.5, 0.5]) == pytest.approx(1)

    def test_shannon_rejects_negative(self):
        with pytest.raises(QCoreError):
            shannon_entropy([1.5, -0.5])

    def test_subadditivity_and_araki_lieb(self):
        reg = Register.qubits("A", "B")
        for seed in range(500):
            rho = random_density(4, seed=seed, register=reg)
            sab = vn_entropy(rho)
            sa = vn_entropy(partial_trace(rho, "A"))
            sb = vn_entropy(partial_trace(rho, "B"))
            assert sa + sb - sab >= -1e-9
            assert sab - abs(sa - sb) >= -1e-9


class TestMutualInformation:
    def test_bell(self):
        assert mutual_information(bell(), ("A", "B")) == pytest.approx(2, abs=1e-10)

    def test_product(self, rng):
        ra = random_density(2, seed=rng, register=Register.qubits("A"))
        rb = random_density(2, seed=rng, register=Register.qubits("B"))
        assert mutual_information(tensor(ra, rb), ("A", "B")) == pytest.approx(0, abs=1e-10)

    def test_classical_correlated_bit(self):
        # S(A) = S(B) = S(AB) = 1
        rho = DensityMatrix(np.diag([0.5, 0, 0, 0.5]), Register.qubits("A", "B"))
        assert mutual_information(rho, ("A", "B")) == pytest.approx(1, abs=1e-12)

    def test_partition_must_cover(self):
        rho = DensityMatrix(np.eye(8) / 8, Register.qubits("A", "B", "C"))
        with pytest.raises(RegisterError):
            mutual_information(rho, ("A", "B"))

    def test_cmi_product(self, rng):
        parts = [random_density(2, seed=rng, register=Register.qubits(lab)) for lab in "ABR"]
        rho = tensor(tensor(parts[0], parts[1]), parts[2])
        assert cond_mutual_information(rho, ("A", "B", "R")) == pytest.approx(0, abs=1e-10)

    def test_cmi_uncorrelated_flag(self, rng):
        sigma = random_density(4, seed=rng, register=Register.qubits("A", "B"))
        flags = DensityMatrix(np.diag([0.3, 0.7]), Register.qubits("R"))
        rho = tensor(sigma, flags)
        assert cond_mutual_information(rho, ("A", "B", "R")) == pytest.approx(
            mutual_information(sigma, ("A", "B")), abs=1e-10
        )

    def test_cmi_bell_ensemble(self):
        paulis = [I2, Z, X, X @ Z]
        mat = np.zeros((16, 16), dtype=complex)
        for i, s in enumerate(paulis):
            v = np.kron(I2, s) @ PSI_PLUS
            flag = np.zeros((4, 4))
            flag[i, i] = 1
            mat += 0.25 * np.kron(np.outer(v, v.conj()), flag)
        rho = DensityMatrix(mat, Register((("A", 2), ("B", 2), ("R", 4))))
        assert cond_mutual_information(rho, ("A", "B", "R")) == pytest.approx(2, abs=1e-10)

    def test_bad_partition(self):
        rho = DensityMatrix(np.eye(8) / 8, Register.qubits("A", "B", "R"))
        with pytest.raises(RegisterError):
            cond_mutual_information(rho, ("A", "A", "R"))

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_nonnegative(self, seed):
        rho = random_density(8, seed=seed, register=Register.qubits("A", "B", "R"))
        assert mutual_information(partial_trace(rho, ("A", "B")), ("A", "B")) >= -1e-9
        assert cond_mutual_information(rho, ("A", "B", "R")) >= -1e-9


class TestPurify:
    def test_pure_input(self):
        psi = bell()
        phi = purify(psi.dm())
        assert phi.register.labels == ("A", "B", "E")
        assert partial_trace(phi, "E").matrix[3, 3].real == pytest.approx(1)

    def test_maximally_mixed_qubit(self):
        phi = purify(DensityMatrix(np.eye(2) / 2, Register.qubits("A")))
        assert mutual_information(phi, ("A", "E")) == pytest.approx(2, abs=1e-10)

    def test_round_trip_100(self):
        reg = Register.qubits("A", "B")
        for seed in range(100):
            rho = random_density(4, rank=1 + seed % 4, seed=seed, register=reg)
            back = partial_trace(purify(rho), ("A", "B"))
            assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-9


class TestRandom:
    def test_haar_unitary_1000_seeds(self):
        for seed in range(1000):
            u = haar_unitary(4, seed).matrix
            assert np.linalg.norm(u.conj().T @ u - np.eye(4)) <= 1e-10

    def test_haar_deterministic(self):
        np.testing.assert_array_equal(haar_unitary(2, 5).matrix, haar_unitary(2, 5).matrix)

    def test_random_density_1000_seeds(self):
        for seed in range(1000):
            random_density(4, rank=1 + seed % 4, seed=seed)  # invariants checked on construction

    def test_empirical_twirl_matches_isotropic_projection(self, rng):
        sigma = random_density(4, seed=rng).matrix
        acc = np.zeros((4, 4), dtype=complex)
        n = 10_000
        for _ in range(n):
            u = haar_unitary(2, rng).matrix
            w = np.kron(u, u.conj())
            acc += w @ sigma @ w.conj().T
        f = np.real(PSI_PLUS @ sigma @ PSI_PLUS)
        p = np.outer(PSI_PLUS, PSI_PLUS)
        exact = f * p + (1 - f) * (np.eye(4) - p) / 3
        assert trace_distance(acc / n, exact) <= 1e-2


class TestMaxEntangledFactor:
    def test_psi_plus(self):
        np.testing.assert_allclose(max_entangled_factor(bell()).matrix, np.eye(2), atol=1e-12)

    def test_z_rotated(self):
        psi = StateVector(np.kron(Z, I2) @ PSI_PLUS, Register.qubits("A", "B"))
        np.testing.assert_allclose(max_entangled_factor(psi).matrix, Z, atol=1e-12)

    def test_product_state(self):
        with pytest.raises(NotMaxEntangled):
            max_entangled_factor(ket("00", "AB"))

    def test_round_trip(self):
        for seed in range(200):
            u = haar_unitary(2, seed).matrix
            psi = StateVector(np.kron(u, I2) @ PSI_PLUS, Register.qubits("A", "B"))
            m = max_entangled_factor(psi).matrix
            np.testing.assert_allclose(np.kron(m, I2) @ PSI_PLUS, psi.amplitudes, atol=1e-10)
        with pytest.raises(NotMaxEntangled):
            max_entangled_factor(random_state(4, 3, Register.qubits("A", "B")))


def test_state_invariants_enforced():
    with pytest.raises(StateError):
        StateVector(np.array([1, 1]), Register.qubits("A"))
    with pytest.raises(StateError):
        DensityMatrix(np.diag([1.5, -0.5]), Register.qubits("A"))
    with pytest.raises(StateError):
        UnitaryOp.on(np.diag([1, 0.5]), "A")
