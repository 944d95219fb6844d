"""Pure-state propagation: accuracy, conservation laws, and guards."""

import numpy as np
import pytest

from dickesim.errors import ConfigError, TruncationError
from dickesim.hamiltonian import dicke_hamiltonian, make_ramp
from dickesim.hilbert import SystemParams
from dickesim.observables import reduce_field, reduce_matter, von_neumann_entropy
from dickesim.state import QuantumState, initial_state
from dickesim.unitary import convergence_check, evolve_pure, propagate_constant


def expm_oracle_final_state(params, schedule, substeps_per_checkpoint=10):
    """Independent reference: piecewise-constant midpoint coupling advanced
    by dense eigendecomposition at substeps of the checkpoint grid."""
    psi = initial_state(params).data.copy()
    t_grid = schedule.checkpoint_times()
    for k in range(t_grid.size - 1):
        dt = (t_grid[k + 1] - t_grid[k]) / substeps_per_checkpoint
        for s in range(substeps_per_checkpoint):
            t_mid = t_grid[k] + (s + 0.5) * dt
            h = dicke_hamiltonian(params, schedule.lam(t_mid)).toarray()
            w, v = np.linalg.eigh(h)
            psi = v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))
    return psi


class TestInitialState:
    def test_product_zero_entropy(self):
        params = SystemParams(N=6, n_max=9)
        st0 = initial_state(params)
        assert von_neumann_entropy(reduce_matter(st0)) == 0.0

    def test_parity_plus_one(self):
        from dickesim.hilbert import parity_operator
        from dickesim.observables import expectation

        params = SystemParams(N=6, n_max=9)
        assert expectation(
            parity_operator(params), initial_state(params)
        ) == pytest.approx(1.0)

    def test_energy_minus_half_epsilon_n(self):
        from dickesim.observables import expectation
        from dickesim.hilbert import SparseOperator

        params = SystemParams(N=6, n_max=9, epsilon=1.3)
        h0 = dicke_hamiltonian(params, 0.0)
        assert expectation(
            SparseOperator(h0.matrix, hermitian=True), initial_state(params)
        ) == pytest.approx(-1.3 * 3.0)


class TestEvolvePure:
    def test_matches_dense_expm_oracle(self):
        params = SystemParams(N=3, n_max=10, tail_threshold=1.0)
        schedule = make_ramp(0.25, lambda_d=2.0)
        traj = evolve_pure(initial_state(params), params, schedule, tol=1e-8)
        ref = expm_oracle_final_state(params, schedule)
        num = traj.final_state.data
        fid = abs(np.vdot(ref, num / np.linalg.norm(num))) ** 2
        assert fid > 1.0 - 1e-6

    def test_norm_and_parity_preserved(self):
        params = SystemParams(N=5, n_max=116)
        schedule = make_ramp(2.0**-1.5, lambda_d=2.0)
        tol = 1e-8
        traj = evolve_pure(initial_state(params), params, schedule, tol=tol)
        duration = schedule.t_final
        assert abs(np.linalg.norm(traj.final_state.data) - 1.0) < 10 * tol * max(
            1.0, duration
        )
        assert np.abs(traj.column("parity") - 1.0).max() < 10 * tol * max(
            1.0, duration
        )

    def test_entropy_symmetry_at_checkpoints(self):
        params = SystemParams(N=4, n_max=40)
        schedule = make_ramp(0.5, lambda_d=1.5, checkpoint_dlambda=0.25)
        traj = evolve_pure(initial_state(params), params, schedule)
        # recompute both reductions from the final state
        st = traj.final_state
        assert abs(
            von_neumann_entropy(reduce_matter(st))
            - von_neumann_entropy(reduce_field(st))
        ) < 1e-8

    def test_records_match_checkpoint_grid(self):
        params = SystemParams(N=3, n_max=92)
        schedule = make_ramp(1.0, lambda_d=2.0, checkpoint_dlambda=0.01)
        traj = evolve_pure(initial_state(params), params, schedule)
        assert len(traj.records) == 201
        traj.validate()

    def test_truncation_abort_names_remedy(self):
        params = SystemParams(N=5, n_max=12)
        schedule = make_ramp(0.05, lambda_d=2.0)
        with pytest.raises(TruncationError, match="raise n_max"):
            evolve_pure(initial_state(params), params, schedule)

    def test_requires_normalized_pure_state(self):
        params = SystemParams(N=2, n_max=5)
        bad = initial_state(params)
        bad.data = bad.data * 2.0
        with pytest.raises(ConfigError):
            evolve_pure(bad, params, make_ramp(1.0))

    def test_tolerance_ordering_against_oracle(self):
        # halving the budget must reduce the deviation from the reference
        params = SystemParams(N=3, n_max=10, tail_threshold=1.0)
        schedule = make_ramp(1.0, lambda_d=2.0, checkpoint_dlambda=0.1)
        ref = expm_oracle_final_state(params, schedule, substeps_per_checkpoint=200)
        devs = {}
        for tol in (1e-4, 1e-6, 1e-8):
            traj = evolve_pure(initial_state(params), params, schedule, tol=tol)
            devs[tol] = np.linalg.norm(traj.final_state.data - ref)
        assert devs[1e-6] < devs[1e-4]
        assert devs[1e-8] < devs[1e-6]


class TestPropagateConstant:
    def test_energy_drift_bounded(self):
        from dickesim.hilbert import SparseOperator
        from dickesim.observables import expectation

        params = SystemParams(N=4, n_max=30)
        lam = 0.8
        tol = 1e-8
        h = SparseOperator(dicke_hamiltonian(params, lam).matrix, hermitian=True)
        # start from a superposition that actually evolves
        rng = np.random.default_rng(0)
        psi = np.zeros(params.dim, dtype=complex)
        psi[:40] = rng.normal(size=40) + 1j * rng.normal(size=40)
        psi /= np.linalg.norm(psi)
        state0 = QuantumState(
            kind="pure", data=psi, spin_dim=params.spin_dim, field_dim=params.field_dim
        )
        e0 = expectation(h, state0)
        traj = propagate_constant(state0, params, lam, duration=100.0, tol=tol)
        ef = expectation(h, traj.final_state)
        assert abs(ef - e0) < tol * 100.0 * 10


class TestConvergenceCheck:
    def test_decoupled_run_zero_deviation(self):
        params = SystemParams(N=3, n_max=8)
        schedule = make_ramp(1.0, lambda_d=0.2, checkpoint_dlambda=0.05)
        rep = convergence_check(params, schedule, tol=1e-8)
        assert rep.passed
        assert rep.max_deviation_S_N < 1e-6

    def test_adequate_basis_passes(self):
        params = SystemParams(N=5, n_max=116)
        schedule = make_ramp(2.0**-2, lambda_d=2.0, checkpoint_dlambda=0.05)
        rep = convergence_check(params, schedule, tol=1e-8)
        assert rep.passed, f"deviation {rep.max_deviation_S_N}"

    def test_deliberately_small_basis_reports_failure(self):
        params = SystemParams(N=5, n_max=18, tail_threshold=1.0)
        schedule = make_ramp(2.0**-2, lambda_d=2.0, checkpoint_dlambda=0.05)
        rep = convergence_check(params, schedule, tol=1e-8)
        assert not rep.passed
