"""Sweep assembly, boundary extraction, and scaling fits."""

import numpy as np
import pytest

from dickesim.errors import ConfigError
from dickesim.hamiltonian import make_ramp
from dickesim.hilbert import SystemParams
from dickesim.sweep import (
    PhaseBoundary,
    SweepGrid,
    default_threshold,
    extract_boundaries,
    fit_scaling,
    moving_average,
    suggest_n_max,
    velocity_sweep,
)


def synthetic_grid(N, log2_star_up, log2_star_down, log2_lo=-8, log2_hi=3, n=23):
    """Step-profile sweep: entropy = log2-plateau below the EER, high inside
    [up, down], ~zero above."""
    l2 = np.linspace(log2_lo, log2_hi, n)
    ups = 2.0**l2
    lams = np.linspace(0.0, 2.0, 21)
    s = np.where(
        l2 < log2_star_up,
        np.log(2.0),
        np.where(l2 < log2_star_down, 1.8, 0.01),
    )
    grid = np.tile(s[:, None], (1, lams.size))
    # only the ordered-phase columns carry the plateau structure
    grid[:, lams < 0.5] = 0.01
    return SweepGrid(
        N=N,
        upsilon_values=ups,
        lambda_checkpoints=lams,
        S_N_grid=grid,
        logneg_grid=grid / np.log(2.0),
    )


class TestMovingAverage:
    def test_window_one_is_identity(self):
        y = np.array([1.0, 4.0, 2.0, 8.0])
        assert np.allclose(moving_average(y, 1), y)

    def test_constant_preserved(self):
        y = np.full(11, 3.3)
        assert np.allclose(moving_average(y, 5), y)

    def test_rejects_even_window(self):
        with pytest.raises(ConfigError):
            moving_average(np.arange(5.0), 4)

    def test_step_not_moved_beyond_half_window(self):
        y = np.zeros(41)
        y[20:] = 1.0
        for window in (3, 5, 7):
            sm = moving_average(y, window)
            cross = np.searchsorted(sm > 0.5, True)
            assert abs(cross - 20) <= window // 2


class TestExtraction:
    def test_recovers_synthetic_step_within_cell(self):
        g1 = synthetic_grid(9, -4.1, 1.2)
        g2 = synthetic_grid(15, -4.9, 1.2)
        g3 = synthetic_grid(21, -5.3, 1.2)
        b = extract_boundaries([g1, g2, g3], smoothing_window=1)
        cell = 0.5
        for (N, u), want in zip(b.upsilon_min_of_N, (-4.1, -4.9, -5.3)):
            assert abs(np.log2(u) - want) <= cell
        for lam_d, u in b.upsilon_max_of_lambda:
            assert abs(np.log2(u) - 1.2) <= cell

    def test_undefined_slices_reported_not_fatal(self):
        flat = synthetic_grid(9, -4.0, 1.0)
        flat.S_N_grid[:] = 0.01  # never crosses
        b = extract_boundaries([flat], smoothing_window=1)
        assert b.upsilon_min_of_N == []
        assert ("upsilon_min", 9) in b.undefined_slices
        assert ("upsilon_max", 2.0) in b.undefined_slices

    def test_threshold_must_exceed_log2(self):
        with pytest.raises(ConfigError):
            extract_boundaries([synthetic_grid(9, -4, 1)], threshold=0.5)


class TestScalingFit:
    def test_recovers_constructed_power_law(self):
        b = PhaseBoundary(
            upsilon_min_of_N=[(n, 3.7 * n**-2.0) for n in (9, 15, 21, 27)],
            upsilon_max_of_lambda=[
                (l, 1.3 * (l - 0.5) ** 2.0) for l in (0.8, 1.1, 1.4, 1.7, 2.0)
            ],
            threshold=default_threshold(),
            smoothing_window=1,
        )
        fits = fit_scaling(b)
        assert fits["adiabatic"].exponent == pytest.approx(-2.0, abs=1e-6)
        assert fits["quench"].exponent == pytest.approx(2.0, abs=1e-6)
        assert fits["adiabatic"].stderr < 1e-8

    def test_too_few_points_raises(self):
        b = PhaseBoundary(
            upsilon_min_of_N=[(9, 0.1), (15, 0.05)],
            upsilon_max_of_lambda=[],
            threshold=default_threshold(),
            smoothing_window=1,
        )
        with pytest.raises(ConfigError):
            fit_scaling(b)


class TestVelocitySweep:
    def test_single_velocity_reduces_to_trajectory(self):
        from dickesim.state import initial_state
        from dickesim.unitary import evolve_pure

        params = SystemParams(N=2, n_max=70)
        template = make_ramp(1.0, lambda_d=1.0, checkpoint_dlambda=0.05)
        grid = velocity_sweep(params, np.array([0.5]), template)
        sch = make_ramp(0.5, lambda_d=1.0, checkpoint_dlambda=0.05)
        traj = evolve_pure(initial_state(params), params, sch, tol=1e-8)
        assert np.abs(grid.S_N_grid[0] - traj.column("S_N")).max() < 1e-12
        assert np.abs(grid.logneg_grid[0] - traj.column("log_negativity")).max() < 1e-12

    def test_equal_time_contours_exact(self):
        params = SystemParams(N=2, n_max=70)
        template = make_ramp(1.0, lambda_d=2.0, checkpoint_dlambda=0.1)
        ups = np.array([0.125, 0.25, 0.5])
        grid = velocity_sweep(params, ups, template, equal_times=(2.0, 4.0))
        for t, pts in grid.equal_time_contours:
            for u, lam in pts:
                assert lam == pytest.approx(u * t)
                assert 0 < lam <= 2.0

    def test_workers_give_identical_grid(self):
        params = SystemParams(N=2, n_max=70)
        template = make_ramp(1.0, lambda_d=1.0, checkpoint_dlambda=0.1)
        ups = np.array([0.25, 0.5, 1.0])
        g1 = velocity_sweep(params, ups, template, workers=1)
        g2 = velocity_sweep(params, ups, template, workers=2)
        assert np.array_equal(g1.S_N_grid, g2.S_N_grid)
        assert np.array_equal(g1.logneg_grid, g2.logneg_grid)

    def test_unsorted_upsilons_rejected(self):
        params = SystemParams(N=2, n_max=40)
        template = make_ramp(1.0, lambda_d=1.0)
        with pytest.raises(ConfigError):
            velocity_sweep(params, np.array([0.5, 0.25]), template)

    def test_auto_extension_rescues_small_basis(self):
        params = SystemParams(N=3, n_max=30)  # too small for lambda_d=2 rows
        template = make_ramp(1.0, lambda_d=2.0, checkpoint_dlambda=0.1)
        grid = velocity_sweep(params, np.array([1.0]), template, auto_extend=3)
        assert grid.n_max_used[0] > 30

    def test_failure_identifies_upsilon(self):
        from dickesim.errors import TruncationError

        params = SystemParams(N=5, n_max=12)
        template = make_ramp(1.0, lambda_d=2.0, checkpoint_dlambda=0.1)
        with pytest.raises(TruncationError, match="upsilon=0.2"):
            velocity_sweep(params, np.array([0.2]), template, auto_extend=0)


class TestSuggestNMax:
    def test_tracks_displacement_quadratically(self):
        assert suggest_n_max(9, 2.0) >= 1.5 * 36
        assert suggest_n_max(21, 2.0) > suggest_n_max(9, 2.0)

    def test_scaling_with_omega(self):
        assert suggest_n_max(9, 2.0, omega=2.0) < suggest_n_max(9, 2.0, omega=1.0)
