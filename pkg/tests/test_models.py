import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gibbstraj.models import (
    GibbsState,
    ModelError,
    PauliTerm,
    birth_death,
    bohr_decompose,
    build_hamiltonian,
    ground_state_projector,
    hamiltonian_from_matrix,
    ising3,
    model_from_config,
    pauli_string,
)


def test_pauli_string_kron_order():
    # qubit 0 is the most significant factor
    Z0 = pauli_string(2, {0: "Z"})
    np.testing.assert_allclose(np.diag(Z0).real, [1, 1, -1, -1])
    X1 = pauli_string(2, {1: "X"})
    assert X1[0, 1] == 1 and X1[0, 2] == 0


def test_bad_terms_rejected():
    with pytest.raises(ModelError):
        build_hamiltonian(2, [PauliTerm(1.0, {2: "Z"})])
    with pytest.raises(ModelError):
        build_hamiltonian(1, [PauliTerm(1.0, {0: "W"})])
    with pytest.raises(ModelError):
        build_hamiltonian(1, [PauliTerm(float("nan"), {0: "Z"})])


def test_ising3_structure():
    H = ising3(2.0, 0.5, 0.25)
    assert H.n_qubits == 3 and H.dim == 8
    assert H.kappa == 4
    assert H.norm_bound == pytest.approx(3.25)
    assert H.is_diagonal()
    assert H.norm() <= H.norm_bound + 1e-12
    # |000> has energy -alpha - 2h - gamma
    assert H.dense[0, 0].real == pytest.approx(-2.0 - 1.0 - 0.25)


def test_norm_bound_exceeds_term_count():
    H = ising3(3.0, 1.0, 0.25)
    assert H.norm() > H.kappa
    assert H.norm() <= H.norm_bound


class TestGibbs:
    def test_infinite_temperature(self):
        g = GibbsState(ising3(1, 0.5, 0.25), 0.0)
        np.testing.assert_allclose(g.rho, np.eye(8) / 8, atol=1e-14)

    def test_single_qubit_closed_form(self):
        H = hamiltonian_from_matrix(-pauli_string(1, {0: "Z"}))
        for beta in (0.1, 1.0, 5.0):
            g = GibbsState(H, beta)
            p_up = 1 / (1 + math.exp(-2 * beta))
            np.testing.assert_allclose(np.diag(g.rho).real, [p_up, 1 - p_up], atol=1e-14)

    def test_boltzmann_ratios(self):
        g = GibbsState(ising3(3.0, 1.0, 0.25), 5.0)
        d = np.diag(g.rho).real
        # |000> vs |110>: energy difference 4h
        assert d[0] / d[6] == pytest.approx(math.exp(4 * 5.0 * 1.0), rel=1e-10)

    def test_large_beta_no_overflow(self):
        g = GibbsState(ising3(1, 0.5, 0.25), 1000.0)
        assert np.all(np.isfinite(g.rho))
        assert g.rho[0, 0].real == pytest.approx(1.0)

    def test_negative_beta_rejected(self):
        with pytest.raises(ModelError):
            GibbsState(ising3(1, 0.5, 0.25), -1.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 10), st.floats(0.05, 0.95))
    def test_powers_compose(self, beta, s):
        g = GibbsState(ising3(1.0, 0.5, 0.25), beta)
        np.testing.assert_allclose(g.power(s) @ g.power(1 - s), g.rho, atol=1e-12)
        assert np.trace(g.rho).real == pytest.approx(1.0)

    def test_ground_projector(self):
        P = ground_state_projector(ising3(1.0, 0.0, 0.25))
        # alpha term favours aligned pairs, h = 0 leaves |000> and |110> degenerate
        assert np.trace(P).real == pytest.approx(1.0)
        assert P[0, 0].real == pytest.approx(0.5) and P[6, 6].real == pytest.approx(0.5)


class TestBohr:
    def test_components_sum_to_operator(self, two_qubit, rng):
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        bohr = bohr_decompose(A, two_qubit)
        np.testing.assert_allclose(bohr.total(), A, atol=1e-12)

    def test_components_rotate_with_phase(self, two_qubit):
        X0 = pauli_string(2, {0: "X"})
        Hm = two_qubit.dense
        for nu, C in bohr_decompose(X0, two_qubit).components.items():
            np.testing.assert_allclose(Hm @ C - C @ Hm, nu * C, atol=1e-10)

    def test_diagonal_observable_has_zero_frequency_only(self):
        H = ising3(1, 0.5, 0.25)
        bohr = bohr_decompose(H.dense @ H.dense, H)
        nonzero = [nu for nu, C in bohr.components.items() if np.max(np.abs(C)) > 1e-12]
        assert nonzero == [pytest.approx(0.0)]


class TestBirthDeath:
    @pytest.mark.parametrize("m", [2, 8, 33])
    def test_stochastic_and_reversible(self, m):
        chain = birth_death(m, 1.0)
        np.testing.assert_allclose(chain.transition.sum(axis=1), 1.0, atol=1e-14)
        pi = chain.stationary
        np.testing.assert_allclose(pi @ chain.transition, pi, atol=1e-14)
        flux = pi[:, None] * chain.transition
        np.testing.assert_allclose(flux, flux.T, atol=1e-15)

    def test_geometric_stationary(self):
        chain = birth_death(10, 0.7)
        np.testing.assert_allclose(chain.stationary[1:] / chain.stationary[:-1], math.exp(-0.7), rtol=1e-12)

    def test_invalid(self):
        with pytest.raises(ModelError):
            birth_death(1, 1.0)
        with pytest.raises(ModelError):
            birth_death(4, 0.0)


def test_model_from_config():
    H = model_from_config({"name": "pauli", "n": 2, "terms": [
        {"coefficient": -1.0, "paulis": {"0": "Z", "1": "Z"}}, {"coefficient": 0.5, "paulis": {"1": "X"}}]})
    expected = -pauli_string(2, {0: "Z", 1: "Z"}) + 0.5 * pauli_string(2, {1: "X"})
    np.testing.assert_allclose(H.dense, expected)
    with pytest.raises(ModelError):
        model_from_config({"name": "heisenberg"})
