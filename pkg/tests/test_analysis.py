import numpy as np
import pytest

import analysis
import bell
from analysis import SqueezingUndefinedError
from bell import BellSettings
from fock import PureState
from states import bec_state, noon_state, squeezed_state, toy_mixed_state, two_copy


TSIRELSON = 2 * np.sqrt(2)


def pair(first, second=None):
    return two_copy(first, first if second is None else second)


def test_optimize_single_particle():
    result = analysis.optimize_bell(pair(bec_state(1)), grid_points_per_angle=16)
    assert abs(result.best_value - (1 + np.sqrt(2))) < 1e-6
    assert result.violation
    assert result.best_settings.phases[0] == 0.0
    assert np.isclose(result.best_value, bell.bell_term(pair(bec_state(1)), result.best_settings))


def test_optimize_two_particles():
    result = analysis.optimize_bell(pair(bec_state(2)), grid_points_per_angle=32)
    assert abs(result.best_value - 2.36) < 0.01
    assert result.best_value >= result.grid_value


def test_optimize_weak_squeezing():
    result = analysis.optimize_bell(pair(squeezed_state(0.1)), grid_points_per_angle=32)
    assert abs(result.best_value - 2.032) < 0.002


def test_optimize_near_noon():
    result = analysis.optimize_bell(pair(squeezed_state(0.7)), grid_points_per_angle=32)
    assert abs(result.best_value - 2.413) < 0.002


@pytest.mark.parametrize('c, expected', [(0.2, 2.116), (0.3, 2.220), (0.4, 2.307), (0.6, 2.394), (0.65, 2.405)])
def test_optimize_squeezed(c, expected):
    result = analysis.optimize_bell(pair(squeezed_state(c)), grid_points_per_angle=32)
    assert abs(result.best_value - expected) < 0.002


def test_optimum_grows_with_squeezing():
    frame = analysis.squeezing_comparison([0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7], grid_points_per_angle=32)
    assert np.all(np.diff(frame['max_bell'].to_numpy()) > -1e-9)
    assert np.isclose(frame['max_bell'][0], 2.0, atol=1e-9)


def test_optimize_unequal_copies_with_free_transmissivity():
    result = analysis.optimize_bell(pair(bec_state(1), bec_state(2)), grid_points_per_angle=16, optimize_transmissivity=True)
    assert result.best_value <= 2 + 1e-9
    assert not result.violation


def test_optimize_product_state_is_local():
    state = pair(squeezed_state(0.0))
    result = analysis.optimize_bell(state, grid_points_per_angle=16)
    assert result.best_value <= 2 + 1e-9
    assert not result.violation


def test_optimize_postselected():
    result = analysis.optimize_bell(pair(bec_state(1)), grid_points_per_angle=16, alice_particles=1)
    assert abs(result.best_value - TSIRELSON) < 1e-6
    assert result.as_dict()['alice_particles'] == 1


def test_optimize_rejects_coarse_grid():
    with pytest.raises(ValueError):
        analysis.optimize_bell(pair(bec_state(1)), grid_points_per_angle=4)


def test_optimize_is_deterministic():
    state = pair(bec_state(2))
    first = analysis.optimize_bell(state, grid_points_per_angle=16, workers=1)
    second = analysis.optimize_bell(state, grid_points_per_angle=16, workers=2)
    assert first.best_value == second.best_value
    assert first.best_settings.phases == second.best_settings.phases


def test_optimize_without_refinement_stays_on_grid():
    result = analysis.optimize_bell(pair(bec_state(1)), grid_points_per_angle=8, refine=False)
    assert not result.refined
    assert result.best_value == pytest.approx(result.grid_value, abs=1e-12)
    h = 2 * np.pi / 8
    for p in result.best_settings.phases:
        assert np.isclose(p / h, round(p / h))


def test_optimize_transmissivity():
    state = pair(toy_mixed_state(1.0))
    balanced = analysis.optimize_bell(state, grid_points_per_angle=8, refine=False, binning=bell.single_particle_binning)
    free = analysis.optimize_bell(state, grid_points_per_angle=8, refine=False, binning=bell.single_particle_binning,
                                  optimize_transmissivity=True, transmissivity_points=5)
    assert free.grid_value >= balanced.grid_value - 1e-9


def test_optimization_result_as_dict():
    result = analysis.optimize_bell(pair(bec_state(1)), grid_points_per_angle=8, refine=False)
    out = result.as_dict()
    assert set(out) == {'best_value', 'best_settings', 'grid_resolution', 'grid_value', 'refined', 'violation'}
    assert set(out['best_settings']) == {'phi_A1', 'phi_A2', 'phi_B1', 'phi_B2', 'alpha_A', 'alpha_B'}


def test_surface_shape():
    surface = analysis.bell_surface(pair(bec_state(1)), fixed=(0.0, 0.0), resolution=2)
    frame = surface.to_frame()
    assert list(frame.columns) == ['angle1', 'angle2', 'bell_term']
    assert len(frame) == 4
    assert frame['angle1'].tolist() == pytest.approx([0, 0, 2 * np.pi, 2 * np.pi])


def test_surface_reaches_optimum():
    surface = analysis.bell_surface(pair(bec_state(1)), resolution=61)
    assert 2.40 <= surface.max() <= 1 + np.sqrt(2) + 1e-9
    a1, a2 = surface.argmax()
    assert 0 <= a1 <= 2 * np.pi and 0 <= a2 <= 2 * np.pi


def test_surface_translation_invariance():
    state = pair(bec_state(2))
    shift = 0.3
    base = analysis.bell_surface(state, fixed=(0.1, 0.7), resolution=11)
    moved = analysis.bell_surface(state, fixed=(0.1 + shift, 0.7 + shift), resolution=11,
                                  sweep=((shift, 2 * np.pi + shift), (shift, 2 * np.pi + shift)))
    assert np.allclose(base.values, moved.values, atol=1e-10)


def test_surface_of_product_state_is_flat():
    surface = analysis.bell_surface(pair(squeezed_state(0.0)), fixed=(0.0, 0.0), resolution=9)
    assert np.allclose(surface.values, 2.0, atol=1e-10)


def test_surfaces_coincide_for_noon_pairs():
    fixed = (0.0, np.pi / 4)
    first = analysis.bell_surface(pair(noon_state(2, 0)), fixed=fixed, resolution=9)
    second = analysis.bell_surface(pair(noon_state(4, 1)), fixed=fixed, resolution=9)
    assert np.max(np.abs(first.values - second.values)) <= 1e-10


def test_surface_rejects_bad_input():
    with pytest.raises(ValueError):
        analysis.bell_surface(pair(bec_state(1)), fixed=(0.0, 0.0), resolution=1)
    with pytest.raises(ValueError):
        analysis.bell_surface(pair(bec_state(1)), fixed=(0.0,), resolution=5)


def test_surface_matches_bell_term():
    state = pair(noon_state(2, 0))
    surface = analysis.bell_surface(state, fixed=(0.2, 1.1), resolution=5)
    i, k = 3, 1
    settings = BellSettings.from_phases([0.2, surface.angle1[i], 1.1, surface.angle2[k]])
    assert np.isclose(surface.values[i, k], bell.bell_term(state, settings))


def test_squeezing_condensate():
    for axis in ('z', 'y'):
        assert np.isclose(analysis.squeezing_parameter(bec_state(2), axis), 1.0)


@pytest.mark.parametrize('c', [0.1, 0.3, 0.45, 0.6, 0.7])
def test_squeezing_closed_forms(c):
    s = squeezed_state(c)
    assert np.isclose(analysis.squeezing_parameter(s, 'z'), 1 / np.sqrt(2 * (1 - 2 * c**2)))
    assert np.isclose(analysis.squeezing_parameter(s, 'y'), 1 / (2 * c))


def test_squeezing_undefined():
    for axis in ('z', 'y'):
        with pytest.raises(SqueezingUndefinedError):
            analysis.squeezing_parameter(squeezed_state(0.0), axis)
    with pytest.raises(SqueezingUndefinedError):
        analysis.squeezing_parameter(PureState.basis_state((0, 0)))


def test_squeezing_rejects_bad_input():
    with pytest.raises(ValueError):
        analysis.squeezing_parameter(PureState.basis_state((1, 0, 1)))
    with pytest.raises(ValueError):
        analysis.squeezing_parameter(bec_state(2), 'x')


@pytest.mark.parametrize('state, expected', [
    (bec_state(1), 1.0),
    (bec_state(2), 1.5),
    (squeezed_state(0.0), 0.0),
    (noon_state(3, 0), 1.0),
])
def test_entanglement_entropy(state, expected):
    assert np.isclose(analysis.entanglement_entropy(state), expected, atol=1e-9)


def test_projected_entropy_single_particle():
    assert np.isclose(analysis.projected_entropy(pair(bec_state(1))), 0.5)


@pytest.mark.parametrize('N', [2, 3, 4])
def test_projected_entropy_noon(N):
    assert np.isclose(analysis.projected_entropy(pair(noon_state(N, 0))), 0.5, atol=1e-9)


def test_projected_entropy_product_and_mixed():
    product = two_copy(PureState.basis_state((1, 0)), PureState.basis_state((0, 1)))
    assert np.isclose(analysis.projected_entropy(product), 0.0, atol=1e-9)
    with pytest.raises(ValueError):
        analysis.projected_entropy(pair(toy_mixed_state(0.3)))


def test_cglmp_two_outcomes_is_chsh(rng):
    state = pair(bec_state(2))
    for phases in rng.uniform(0, 2 * np.pi, size=(5, 4)):
        settings = BellSettings.from_phases(phases)
        e11, e12, e21, e22 = (bell.correlation(state, a, b) for a, b in settings.pairs())
        value = analysis.cglmp_value(bell.bell_distributions(state, settings), analysis.epsilon_outcome_map, d=2)
        assert np.isclose(value, e11 + e12 - e21 + e22, atol=1e-10)


def test_cglmp_is_bounded(rng):
    state = pair(bec_state(2))
    for phases in rng.uniform(0, 2 * np.pi, size=(5, 4)):
        dists = bell.bell_distributions(state, BellSettings.from_phases(phases))
        value = analysis.cglmp_value(dists)
        assert abs(value) <= 4 + 1e-9


@pytest.mark.parametrize('N', [1, 2])
def test_cglmp_local_at_optimal_settings(N):
    state = pair(bec_state(N))
    result = analysis.optimize_bell(state, grid_points_per_angle=32)
    assert result.violation
    assert analysis.cglmp_value(bell.bell_distributions(state, result.best_settings)) <= 2 + 1e-9


def test_cglmp_rejects_bad_input():
    state = pair(bec_state(1))
    dists = bell.bell_distributions(state, BellSettings.from_phases([0, 1, 2, 3]))
    with pytest.raises(ValueError):
        analysis.cglmp_value(dists[:3])
    with pytest.raises(ValueError):
        analysis.cglmp_value(dists, d=1)


def test_outcome_table_sums_to_one():
    state = pair(bec_state(2))
    dist = bell.joint_distribution(state, *BellSettings.from_phases([0, 1, 2, 3]).pairs()[0])
    table = analysis.outcome_table(dist, analysis.default_outcome_map, 5)
    assert table.shape == (5, 5)
    assert np.isclose(table.sum(), 1.0)


def test_default_workers(monkeypatch):
    monkeypatch.delenv('SSRBELL_THREADS', raising=False)
    assert analysis.default_workers() == 1
    monkeypatch.setenv('SSRBELL_THREADS', '3')
    assert analysis.default_workers() == 3
    for bad in ('0', 'many'):
        monkeypatch.setenv('SSRBELL_THREADS', bad)
        with pytest.raises(ValueError):
            analysis.default_workers()


def test_squeezing_comparison():
    frame = analysis.squeezing_comparison([0.0, 0.5], grid_points_per_angle=8, refine=False)
    assert list(frame.columns) == ['c', 'squeezing_z', 'squeezing_y', 'entanglement_entropy', 'max_bell']
    assert frame['squeezing_z'].isna().tolist() == [True, False]
    assert frame['squeezing_y'].isna().tolist() == [True, False]
    assert np.isclose(frame['entanglement_entropy'][1], 1.5)
    assert frame['max_bell'][0] <= 2 + 1e-9
