import math

import numpy as np
import pytest

import singlimit as sl


def uniform_state(grid, ni, nu, time=0.0):
    return sl.PopulationState(sl.Field.constant(ni, grid), sl.Field.constant(nu, grid), time)


def test_extinction_state_reduces_to_manifold(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1)
    ext = sl.equilibria(model)[0]
    reduced = sl.to_reduced(model, uniform_state(grid601, ext.ni, ext.nu))
    assert np.max(np.abs(reduced.n.values - 0.241071)) < 1e-5
    assert np.max(np.abs(reduced.n.values - sl.slow_manifold(model, 0.0))) < 1e-12
    assert np.array_equal(reduced.p.values, np.zeros(grid601.nx))
    assert np.max(np.abs(reduced.m.values)) < 1e-12


def test_equal_densities_give_half(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1)
    reduced = sl.to_reduced(model, uniform_state(grid601, 2.3, 2.3))
    assert np.array_equal(reduced.p.values, np.full(grid601.nx, 0.5))


def test_vacuum_convention(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1)
    reduced = sl.to_reduced(model, uniform_state(grid601, 0.0, 0.0))
    assert np.array_equal(reduced.p.values, np.zeros(grid601.nx))
    assert np.array_equal(reduced.n.values, np.full(grid601.nx, 10.0))


def test_all_equilibria_sit_on_manifold(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1)
    for eq in sl.equilibria(model)[:3]:
        reduced = sl.to_reduced(model, uniform_state(grid601, eq.ni, eq.nu))
        assert np.max(np.abs(reduced.m.values)) < 1e-9


def test_round_trip_is_exact_algebra(fig1_params):
    model = sl.ScaledModel(fig1_params, 0.1)
    grid = sl.Grid1D(0.0, 1.0, 101)
    rng = np.random.default_rng(2)
    ni = rng.uniform(0.0, 4.0, grid.nx)
    nu = rng.uniform(0.1, 4.0, grid.nx)
    state = sl.PopulationState(sl.Field(ni, grid), sl.Field(nu, grid))
    back = sl.reduced_to_state(model, sl.to_reduced(model, state))
    assert np.max(np.abs(back.ni.values - ni) / np.maximum(ni, 1e-3)) < 1e-12
    assert np.max(np.abs(back.nu.values - nu) / np.maximum(nu, 1e-3)) < 1e-12


def test_alternative_scaling_reduction(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1, sl.Variant.ALTERNATIVE)
    reduced = sl.to_reduced(model, uniform_state(grid601, 2.0, 3.0))
    assert np.array_equal(reduced.n.values, np.full(grid601.nx, 0.1 * 1.0 * 5.0))
    assert reduced.m is None
    back = sl.reduced_to_state(model, reduced)
    assert np.max(np.abs(back.ni.values - 2.0)) < 1e-12


def test_error_norms_identical_series(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1)
    times = np.linspace(0.0, 2.0, 11)
    reduced = [sl.to_reduced(model, uniform_state(grid601, 1.0, 3.0, t)) for t in times]
    limit = [(t, r.p) for t, r in zip(times, reduced)]
    err_p, err_m = sl.error_norms(reduced, limit)
    assert err_p == 0.0
    m_norm = sl.l2_spacetime([(t, r.m) for t, r in zip(times, reduced)], 2.0)
    assert err_m == m_norm


def test_error_norms_constant_difference(fig1_params, grid601):
    # p == 1 against a vanishing limit over [0, 2] integrates to sqrt(60)
    model = sl.ScaledModel(fig1_params, 0.1)
    times = np.linspace(0.0, 2.0, 21)
    reduced = [sl.to_reduced(model, uniform_state(grid601, 2.0, 0.0, t)) for t in times]
    zero = sl.Field.constant(0.0, grid601)
    err_p, _ = sl.error_norms(reduced, [(t, zero) for t in times])
    assert err_p == pytest.approx(math.sqrt(60), abs=1e-10)


def test_error_norms_reject_mismatch(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1)
    times = [0.0, 1.0, 2.0]
    reduced = [sl.to_reduced(model, uniform_state(grid601, 1.0, 1.0, t)) for t in times]
    zero = sl.Field.constant(0.0, grid601)
    with pytest.raises(ValueError):
        sl.error_norms(reduced, [(t, zero) for t in times[:-1]])
    with pytest.raises(ValueError):
        sl.error_norms(reduced, [(t + 0.5, zero) for t in times])
    other = sl.Grid1D(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        sl.error_norms(reduced, [(t, sl.Field.constant(0.0, other)) for t in times])


def test_error_norms_need_manifold_residual(fig1_params, grid601):
    model = sl.ScaledModel(fig1_params, 0.1, sl.Variant.ALTERNATIVE)
    times = [0.0, 1.0]
    reduced = [sl.to_reduced(model, uniform_state(grid601, 1.0, 1.0, t)) for t in times]
    zero = sl.Field.constant(0.0, grid601)
    with pytest.raises(ValueError):
        sl.error_norms(reduced, [(t, zero) for t in times])
