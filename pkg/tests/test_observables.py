"""Reduced states, entropies, negativity, and expectations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickesim.hilbert import SparseOperator, SystemParams, parity_operator
from dickesim.observables import (
    checkpoint_record,
    expectation,
    negativity,
    negativity_from_schmidt,
    reduce_field,
    reduce_matter,
    schmidt_spectrum,
    truncation_monitor,
    von_neumann_entropy,
)
from dickesim.hamiltonian import broken_symmetry_state
from dickesim.lindblad import OpenSystemParams, thermal_initial_state
from dickesim.state import QuantumState, coherent_amplitudes, initial_state


def random_pure(spin_dim, field_dim, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=spin_dim * field_dim) + 1j * rng.normal(
        size=spin_dim * field_dim
    )
    psi /= np.linalg.norm(psi)
    return QuantumState(
        kind="pure", data=psi, spin_dim=spin_dim, field_dim=field_dim
    )


class TestReductions:
    def test_product_state_matter_projector(self):
        params = SystemParams(N=3, n_max=4)
        st0 = initial_state(params)
        rho_q = reduce_matter(st0)
        want = np.zeros((4, 4))
        want[0, 0] = 1.0
        assert np.allclose(rho_q, want)

    def test_product_state_field_vacuum(self):
        params = SystemParams(N=3, n_max=4)
        rho_b = reduce_field(initial_state(params))
        want = np.zeros((5, 5))
        want[0, 0] = 1.0
        assert np.allclose(rho_b, want)

    def test_even_cat_half_half_spectrum(self):
        params = SystemParams(N=6, n_max=90)
        cat = broken_symmetry_state(params, 2.0, np.pi / 4, 0.0)
        w = np.sort(np.linalg.eigvalsh(reduce_matter(cat)))[::-1]
        # coherent-branch overlap oracle: eigenvalues (1 +- e^{-2 b^2})/2
        b = 2.0 * np.sqrt(6.0)  # lambda sqrt(N)/omega
        eps = np.exp(-2.0 * b**2)
        assert w[0] == pytest.approx(0.5 * (1 + eps), abs=1e-9)
        assert w[1] == pytest.approx(0.5 * (1 - eps), abs=1e-9)
        assert np.all(w[2:] < 1e-9)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=25, deadline=None)
    def test_schmidt_spectra_match_both_reductions(self, seed):
        state = random_pure(4, 7, seed)
        wq = np.sort(np.linalg.eigvalsh(reduce_matter(state)))[::-1]
        wb = np.sort(np.linalg.eigvalsh(reduce_field(state)))[::-1]
        k = min(wq.size, wb.size)
        assert np.abs(wq[:k] - wb[:k]).max() < 1e-10
        assert np.abs(np.trace(reduce_field(state)) - 1.0) < 1e-12

    def test_thermal_marginal_geometric(self):
        params = SystemParams(N=2, n_max=40)
        rho = thermal_initial_state(params, OpenSystemParams(kappa=0.1, nbar=0.3))
        pops = np.real(np.diag(reduce_field(rho)))
        ratio = 0.3 / 1.3
        want = ratio ** np.arange(41) / 1.3
        want /= want.sum()
        assert np.abs(pops - want).max() < 1e-12


class TestEntropy:
    def test_pure_projector_zero(self):
        assert von_neumann_entropy(np.diag([1.0, 0.0, 0.0])) == 0.0

    def test_equal_mixture_log2(self):
        s = von_neumann_entropy(np.diag([0.5, 0.5]))
        assert s == pytest.approx(np.log(2.0), abs=1e-12)
        s2 = von_neumann_entropy(np.diag([0.5, 0.5]), base="base2")
        assert s2 == pytest.approx(1.0, abs=1e-12)

    def test_biased_mixture_frozen_value(self):
        # direct formula oracle: -0.9 ln 0.9 - 0.1 ln 0.1
        assert von_neumann_entropy(np.diag([0.9, 0.1])) == pytest.approx(
            0.3250829733914482, abs=1e-12
        )

    def test_rejects_negative_matrix(self):
        with pytest.raises(ValueError):
            von_neumann_entropy(np.diag([1.1, -0.1]))

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=25, deadline=None)
    def test_entropy_symmetry_random_pure(self, seed):
        state = random_pure(5, 6, seed)
        sq = von_neumann_entropy(reduce_matter(state))
        sb = von_neumann_entropy(reduce_field(state))
        assert abs(sq - sb) < 1e-8


class TestNegativity:
    def test_product_state_zero(self):
        params = SystemParams(N=3, n_max=5)
        res = negativity(initial_state(params))
        assert res["negativity"] == pytest.approx(0.0, abs=1e-12)
        assert res["log_negativity"] == pytest.approx(0.0, abs=1e-12)

    def test_half_half_schmidt_gives_one_ebit(self):
        # |00> + |11> over a 2x2 cut embedded in the product space
        psi = np.zeros((2, 3), dtype=complex)
        psi[0, 0] = psi[1, 1] = 1.0 / np.sqrt(2.0)
        state = QuantumState(kind="pure", data=psi.ravel(), spin_dim=2, field_dim=3)
        res = negativity(state)
        assert res["negativity"] == pytest.approx(0.5, abs=1e-12)
        assert res["log_negativity"] == pytest.approx(1.0, abs=1e-12)

    def test_biased_schmidt_frozen_value(self):
        # spectrum identity oracle: 2N+1 = (sqrt(.9)+sqrt(.1))^2 = 1.6
        psi = np.zeros((2, 3), dtype=complex)
        psi[0, 0] = np.sqrt(0.9)
        psi[1, 1] = np.sqrt(0.1)
        state = QuantumState(kind="pure", data=psi.ravel(), spin_dim=2, field_dim=3)
        res = negativity(state)
        assert res["negativity"] == pytest.approx(0.3, abs=1e-12)
        sch = negativity_from_schmidt(np.array([0.9, 0.1]))
        assert sch["negativity"] == pytest.approx(0.3, abs=1e-12)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=15, deadline=None)
    def test_partial_transpose_matches_schmidt_identity(self, seed):
        state = random_pure(3, 5, seed)
        p = schmidt_spectrum(state)
        direct = negativity(state)
        via_schmidt = negativity_from_schmidt(p)
        assert direct["negativity"] == pytest.approx(
            via_schmidt["negativity"], abs=1e-8
        )

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=10, deadline=None)
    def test_invariant_under_local_unitaries(self, seed):
        state = random_pure(3, 4, seed)
        rng = np.random.default_rng(seed + 1)

        def haar(n):
            z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            q, r = np.linalg.qr(z)
            return q * (np.diagonal(r) / np.abs(np.diagonal(r)))

        uq, ub = haar(3), haar(4)
        psi = state.as_spin_field()
        rotated = QuantumState(
            kind="pure",
            data=(uq @ psi @ ub.T).ravel(),
            spin_dim=3,
            field_dim=4,
        )
        n0 = negativity(state)["negativity"]
        n1 = negativity(rotated)["negativity"]
        assert n1 == pytest.approx(n0, abs=1e-8)

    def test_density_input_partial_transpose(self):
        # classically correlated state has zero negativity
        rho = np.zeros((6, 6), dtype=complex)
        rho[0, 0] = 0.5  # |m0,n0>
        rho[4, 4] = 0.5  # |m1,n1>
        state = QuantumState(kind="density", data=rho, spin_dim=2, field_dim=3)
        assert negativity(state)["negativity"] == pytest.approx(0.0, abs=1e-12)


class TestExpectation:
    def test_jz_on_initial(self):
        params = SystemParams(N=5, n_max=4)
        from dickesim.hilbert import build_collective_spin, embed_product

        jz = embed_product(
            build_collective_spin(5)["J_z"],
            SparseOperator(np.eye(5), hermitian=True),
            params,
        )
        assert expectation(jz, initial_state(params)) == pytest.approx(-2.5)

    def test_photon_number_on_coherent(self):
        params = SystemParams(N=1, n_max=40)
        beta = 1.7
        amps = coherent_amplitudes(beta, 40)
        psi = np.zeros((2, 41), dtype=complex)
        psi[0] = amps
        state = QuantumState(kind="pure", data=psi.ravel(), spin_dim=2, field_dim=41)
        from dickesim.hilbert import build_boson, embed_product

        n_op = embed_product(
            SparseOperator(np.eye(2), hermitian=True),
            build_boson(40)["n_op"],
            params,
        )
        assert expectation(n_op, state) == pytest.approx(beta**2, abs=1e-8)

    def test_parity_on_even_cat(self):
        params = SystemParams(N=4, n_max=60)
        cat = broken_symmetry_state(params, 1.8, np.pi / 4, 0.0)
        assert expectation(parity_operator(params), cat) == pytest.approx(
            1.0, abs=1e-10
        )

    def test_dimension_mismatch(self):
        params = SystemParams(N=3, n_max=4)
        from dickesim.errors import ConfigError

        with pytest.raises(ConfigError):
            expectation(
                SparseOperator(np.eye(7), hermitian=True), initial_state(params)
            )

    def test_hermitian_output_is_real(self):
        params = SystemParams(N=2, n_max=3)
        val = expectation(parity_operator(params), initial_state(params))
        assert isinstance(val, float)


class TestTruncationMonitor:
    def test_vacuum_zero(self):
        params = SystemParams(N=4, n_max=10)
        assert truncation_monitor(initial_state(params)) == 0.0

    def test_coherent_poisson_tail(self):
        # analytic Poisson-tail oracle
        from scipy.stats import poisson

        params = SystemParams(N=1, n_max=60)
        beta = 2.0
        amps = coherent_amplitudes(beta, 60)
        psi = np.zeros((2, 61), dtype=complex)
        psi[1] = amps
        state = QuantumState(kind="pure", data=psi.ravel(), spin_dim=2, field_dim=61)
        tail = truncation_monitor(state, 0.1)
        # top 10% of 61 levels -> 6 levels, n >= 55
        oracle = poisson(mu=beta**2).sf(54)
        assert tail < 1e-10
        assert tail == pytest.approx(oracle, rel=1e-4)

    def test_saturating_state_flags(self):
        params = SystemParams(N=1, n_max=9)
        psi = np.zeros((2, 10), dtype=complex)
        psi[0, 9] = 1.0
        state = QuantumState(kind="pure", data=psi.ravel(), spin_dim=2, field_dim=10)
        assert truncation_monitor(state, 0.1) == pytest.approx(1.0)

    def test_frac_validation(self):
        params = SystemParams(N=1, n_max=5)
        from dickesim.errors import ConfigError

        with pytest.raises(ConfigError):
            truncation_monitor(initial_state(params), 0.7)


class TestCheckpointRecord:
    def test_initial_record_values(self):
        params = SystemParams(N=5, n_max=8)
        rec = checkpoint_record(initial_state(params), params)
        assert rec.S_N == 0.0
        assert rec.negativity == 0.0
        assert rec.parity == pytest.approx(1.0)
        assert rec.jz == pytest.approx(-2.5)
        assert rec.n_photons == 0.0
        assert rec.schmidt_spectrum is not None
        rec.validate()

    def test_density_record_uses_partial_transpose(self):
        params = SystemParams(N=2, n_max=14)
        rho = thermal_initial_state(params, OpenSystemParams(kappa=0.1, nbar=0.2))
        rec = checkpoint_record(rho, params, entropy_is_witness=False)
        assert rec.negativity == pytest.approx(0.0, abs=1e-12)
        assert rec.schmidt_spectrum is None
        assert not rec.entropy_is_witness
        rec.validate()
