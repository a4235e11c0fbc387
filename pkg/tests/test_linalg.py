import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gibbstraj.linalg import (
    ChannelValidityError,
    DomainError,
    InvalidInputError,
    RankError,
    apply_kraus,
    apply_superoperator,
    choi_matrix,
    eig_hermitian,
    kraus_from_superoperator,
    matrix_function,
    random_density_matrix,
    random_unitary,
    to_superoperator,
    trace_norm,
    unvec,
    vec,
    weighted_inner,
)
from gibbstraj.models import GibbsState, hamiltonian_from_matrix, ising3, ising_energy_table

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def random_hermitian(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return A + A.conj().T


def random_kraus(rng, d, n):
    """Kraus operators from a random isometry ``d -> n d``."""
    G = rng.normal(size=(n * d, d)) + 1j * rng.normal(size=(n * d, d))
    Q, _ = np.linalg.qr(G)
    return [Q[k * d:(k + 1) * d] for k in range(n)]


class TestEigHermitian:
    def test_pauli_z(self):
        spec = eig_hermitian(Z)
        np.testing.assert_allclose(spec.eigenvalues, [-1, 1])
        np.testing.assert_allclose(spec.projectors[0], np.diag([0, 1]), atol=1e-12)
        np.testing.assert_allclose(spec.projectors[1], np.diag([1, 0]), atol=1e-12)

    def test_identity_single_eigenspace(self):
        spec = eig_hermitian(np.eye(4))
        assert spec.eigenvalues.tolist() == [1.0]
        assert spec.multiplicities.tolist() == [4]
        np.testing.assert_allclose(spec.projectors[0], np.eye(4), atol=1e-12)

    def test_ising_spectrum_matches_enumeration(self):
        H = ising3(1.0, 0.5, 0.25)
        # the eight configurations by hand: -a z1 z2 - h (z1 + z2) - g z3
        by_hand = []
        for z1 in (1, -1):
            for z2 in (1, -1):
                for z3 in (1, -1):
                    by_hand.append(-1.0 * z1 * z2 - 0.5 * (z1 + z2) - 0.25 * z3)
        np.testing.assert_allclose(np.sort(H.spectrum.raw_eigenvalues), np.sort(by_hand), atol=1e-12)
        np.testing.assert_allclose(np.real(np.diag(H.dense)), ising_energy_table(1.0, 0.5, 0.25), atol=1e-12)

    def test_rejects_non_square_and_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            eig_hermitian(np.ones((2, 3)))
        with pytest.raises(InvalidInputError):
            eig_hermitian(np.array([[0, 1], [0, 0]]))

    def test_degenerate_grouping(self):
        A = np.diag([0.0, 1.0, 1.0 + 1e-13, 2.0])
        spec = eig_hermitian(A)
        assert spec.multiplicities.tolist() == [1, 2, 1]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
    def test_resolution_of_identity(self, d, seed):
        rng = np.random.default_rng(seed)
        A = random_hermitian(rng, d)
        spec = eig_hermitian(A)
        scale = max(1.0, np.linalg.norm(A, 2))
        np.testing.assert_allclose(sum(spec.projectors), np.eye(d), atol=1e-10)
        np.testing.assert_allclose(spec.reconstruct(), A, atol=1e-10 * scale)
        for i, P in enumerate(spec.projectors):
            for j, Q in enumerate(spec.projectors):
                np.testing.assert_allclose(P @ Q, P if i == j else 0 * P, atol=1e-10)
        assert np.all(np.diff(spec.eigenvalues) > 0)


class TestMatrixFunction:
    def test_identity_function(self, rng):
        A = random_hermitian(rng, 4)
        np.testing.assert_allclose(matrix_function(A, lambda x: x), A, atol=1e-12)

    def test_exp_diagonal(self):
        out = matrix_function(np.diag([0.0, np.log(2.0)]), np.exp)
        np.testing.assert_allclose(out, np.diag([1.0, 2.0]), atol=1e-12)

    def test_square_of_x(self):
        np.testing.assert_allclose(matrix_function(X, lambda x: x ** 2), np.eye(2), atol=1e-12)

    def test_domain_error_names_eigenvalue(self):
        with pytest.raises(DomainError, match="-1"):
            matrix_function(Z, np.log)


class TestTraceNorm:
    def test_pauli_z(self):
        assert trace_norm(Z) == pytest.approx(2.0)

    def test_rank_one(self, rng):
        psi = rng.normal(size=3) + 1j * rng.normal(size=3)
        phi = rng.normal(size=3) + 1j * rng.normal(size=3)
        psi /= np.linalg.norm(psi)
        phi /= np.linalg.norm(phi)
        assert trace_norm(np.outer(psi, phi.conj())) == pytest.approx(1.0)

    def test_difference_of_states_against_projector_oracle(self, rng):
        r1 = random_density_matrix(4, rng)
        r2 = random_density_matrix(4, rng)
        diff = r1 - r2
        # Helstrom: ||r1 - r2||_1 = 2 max_P tr(P (r1 - r2)), attained by the positive eigenprojector
        w, V = np.linalg.eigh(diff)
        P = V[:, w > 0] @ V[:, w > 0].conj().T
        assert trace_norm(diff) == pytest.approx(2 * np.real(np.trace(P @ diff)), abs=1e-12)
        assert trace_norm(diff) == pytest.approx(np.sum(np.abs(w)), abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
    def test_unitary_invariance_and_trace_bound(self, d, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        U, V = random_unitary(d, rng), random_unitary(d, rng)
        assert trace_norm(U @ A @ V) == pytest.approx(trace_norm(A), rel=1e-10)
        assert trace_norm(A) >= abs(np.trace(A)) - 1e-10


class TestWeightedInner:
    def test_identity_gives_one(self, rng):
        rho = random_density_matrix(3, rng)
        for s in (0.0, 0.3, 1.0):
            assert weighted_inner(np.eye(3), np.eye(3), rho, s) == pytest.approx(1.0)

    def test_maximally_mixed(self, rng):
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        val = weighted_inner(A, B, np.eye(4) / 4, 0.4)
        assert val == pytest.approx(np.trace(A.conj().T @ B) / 4)

    def test_zz_half_two_ways(self):
        H = hamiltonian_from_matrix(-Z)
        g = GibbsState(H, 1.0)
        direct = weighted_inner(Z, Z, g, 0.5)
        # spectral formula: Z diagonal, so <Z, Z>_{1/2} = sum_k p_k z_k^2 = 1
        p = np.exp([1.0, -1.0]) / (np.e + 1 / np.e)
        assert direct == pytest.approx(np.sum(p * 1.0), abs=1e-12)
        explicit = np.trace(Z @ g.power(0.5) @ Z @ g.power(0.5))
        assert direct == pytest.approx(explicit, abs=1e-12)

    def test_rank_error(self):
        with pytest.raises(RankError):
            weighted_inner(X, X, np.diag([1.0, 0.0]), 0.5)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0, 1), st.integers(0, 2 ** 32 - 1))
    def test_inner_product_axioms(self, s, seed):
        rng = np.random.default_rng(seed)
        rho = random_density_matrix(3, rng)
        A, B, C = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
        a = complex(rng.normal(), rng.normal())
        assert weighted_inner(A, B, rho, s) == pytest.approx(np.conj(weighted_inner(B, A, rho, s)), abs=1e-10)
        assert weighted_inner(A, A, rho, s).real > 0
        lhs = weighted_inner(A, a * B + C, rho, s)
        rhs = a * weighted_inner(A, B, rho, s) + weighted_inner(A, C, rho, s)
        assert lhs == pytest.approx(rhs, abs=1e-9)


class TestSuperoperator:
    def test_identity_kraus(self):
        np.testing.assert_allclose(to_superoperator([np.eye(3)]), np.eye(9))

    def test_depolarizing_eigenvalues(self):
        p = 0.3
        ks = [np.sqrt(1 - 3 * p / 4) * np.eye(2), np.sqrt(p / 4) * X, np.sqrt(p / 4) * Y, np.sqrt(p / 4) * Z]
        ev = np.sort(np.linalg.eigvals(to_superoperator(ks)).real)
        np.testing.assert_allclose(ev, [1 - p] * 3 + [1.0], atol=1e-12)

    def test_completeness_violation(self):
        with pytest.raises(ChannelValidityError) as err:
            to_superoperator([0.9 * np.eye(2)])
        assert err.value.residual == pytest.approx(0.19)

    def test_dual_is_conjugate_transpose(self, rng):
        ks = random_kraus(rng, 3, 3)
        S = to_superoperator(ks)
        S_dual = to_superoperator([K.conj().T for K in ks], check=False)
        np.testing.assert_allclose(S_dual, S.conj().T, atol=1e-12)
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        TB = apply_superoperator(S, B)
        TdA = apply_superoperator(S.conj().T, A)
        assert np.trace(A.conj().T @ TB) == pytest.approx(np.trace(TdA.conj().T @ B), abs=1e-12)

    def test_matches_kraus_on_random_inputs(self, rng):
        ks = random_kraus(rng, 4, 3)
        S = to_superoperator(ks)
        for _ in range(20):
            Xr = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            np.testing.assert_allclose(apply_superoperator(S, Xr), apply_kraus(ks, Xr), atol=1e-12)

    def test_vec_roundtrip_and_identity_action(self, rng):
        Xr = rng.normal(size=(3, 3))
        np.testing.assert_array_equal(unvec(vec(Xr)), Xr)
        ks = random_kraus(rng, 3, 2)
        S = to_superoperator(ks)
        np.testing.assert_allclose(apply_superoperator(S, np.eye(3)), apply_kraus(ks, np.eye(3)), atol=1e-12)

    def test_choi_refactorization(self, rng):
        ks = random_kraus(rng, 3, 2)
        S = to_superoperator(ks)
        J = choi_matrix(S)
        assert np.linalg.eigvalsh(0.5 * (J + J.conj().T)).min() > -1e-12
        np.testing.assert_allclose(to_superoperator(kraus_from_superoperator(S)), S, atol=1e-10)

    def test_non_cp_map_rejected(self):
        # transpose map is positive but not completely positive
        S = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                S[j + 2 * i, i + 2 * j] = 1
        with pytest.raises(ChannelValidityError):
            kraus_from_superoperator(S)
