import numpy as np
import pytest

import optics
from fock import PureState
from optics import BeamsplitterParams


H = 1 / np.sqrt(2)


def phase_shift(state, mode, phase):
    # exp(-i n phase) on every ket, n the occupation of `mode`
    occ = np.array([v[mode] for v in state.basis.vectors])
    return PureState(state.basis, state.amplitudes * np.exp(-1j * phase * occ))


def test_params_validation():
    with pytest.raises(ValueError):
        BeamsplitterParams(0.5, 0.5)
    with pytest.raises(ValueError):
        BeamsplitterParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        BeamsplitterParams.from_transmissivity(1.2)
    p = BeamsplitterParams.from_angle(2.0, 0.3)
    assert np.isclose(p.alpha**2 + p.beta**2, 1.0)
    assert p.with_phase(1.0).phase == 1.0


def test_single_particle_matrix_limits():
    assert np.allclose(optics.single_particle_matrix(BeamsplitterParams(1.0, 0.0)), [[1, 0], [0, -1]])
    assert np.allclose(optics.single_particle_matrix(BeamsplitterParams.balanced()), H * np.array([[1, 1], [1, -1]]))


def test_single_particle_matrix_unitary(rng):
    for theta, phase in rng.uniform(0, 2 * np.pi, size=(100, 2)):
        u = optics.single_particle_matrix(BeamsplitterParams.from_angle(theta, phase))
        assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)


def test_beamsplitter_single_particle():
    out = optics.apply_beamsplitter(PureState.basis_state((1, 0)), (0, 1), BeamsplitterParams.balanced())
    assert np.isclose(out.amplitude((1, 0)), H)
    assert np.isclose(out.amplitude((0, 1)), H)


def test_beamsplitter_vacuum(rng):
    vac = PureState.basis_state((0, 0))
    out = optics.apply_beamsplitter(vac, (0, 1), BeamsplitterParams.from_angle(*rng.uniform(0, 3, 2)))
    assert out.allclose(vac)


def test_beamsplitter_two_particle_interference():
    out = optics.apply_beamsplitter(PureState.basis_state((1, 1)), (0, 1), BeamsplitterParams.balanced())
    assert np.isclose(out.amplitude((2, 0)), H)
    assert np.isclose(out.amplitude((1, 1)), 0.0)
    assert np.isclose(out.amplitude((0, 2)), -H)


def test_projector_amplitudes_one_particle():
    phi = 0.7
    v = optics.measurement_projector_amplitudes(1, 0, BeamsplitterParams.balanced(phi), 1)
    assert np.allclose(v, [H, H * np.exp(-1j * phi)])


def test_projector_amplitudes_two_particles():
    phi = 0.4
    v = optics.measurement_projector_amplitudes(2, 0, BeamsplitterParams.balanced(phi), 2)
    assert np.allclose(v, [0.5, H * np.exp(-1j * phi), 0.5 * np.exp(-2j * phi)])


@pytest.mark.parametrize('total', range(0, 9))
def test_projector_amplitudes_normalized(rng, total):
    params = BeamsplitterParams.from_angle(*rng.uniform(0, 2 * np.pi, 2))
    for m in range(total + 1):
        v = optics.measurement_projector_amplitudes(total - m, m, params, total)
        assert np.isclose(np.sum(np.abs(v)**2), 1.0)


def test_projector_amplitudes_rejects_mismatch():
    with pytest.raises(ValueError):
        optics.measurement_projector_amplitudes(1, 1, BeamsplitterParams.balanced(), 3)


def test_lift_rejects_large_totals():
    with pytest.raises(ValueError):
        optics.sector_lift(BeamsplitterParams.balanced(), optics.MAX_TOTAL + 1)


@pytest.mark.parametrize('total', [1, 4, 12])
def test_lift_unitary(rng, total):
    params = BeamsplitterParams.from_angle(*rng.uniform(0, 2 * np.pi, 2))
    lift = optics.sector_lift(params, total)
    assert np.allclose(lift @ lift.conj().T, np.eye(total + 1), rtol=0.0, atol=1e-10)


def test_beamsplitter_agrees_with_projector(rng):
    params = BeamsplitterParams.from_angle(*rng.uniform(0, 2 * np.pi, 2))
    total = 4
    for n_in in range(total + 1):
        out = optics.apply_beamsplitter(PureState.basis_state((n_in, total - n_in)), (0, 1), params)
        for m in range(total + 1):
            v = optics.measurement_projector_amplitudes(total - m, m, params, total)
            # input ket (n_in, total - n_in) sits at index total - n_in
            assert np.isclose(out.amplitude((total - m, m)), np.conj(v[total - n_in]), atol=1e-10)


def test_beamsplitter_preserves_norm_and_inverts(rng, random_state):
    for _ in range(1000):
        total = int(rng.integers(0, 9))
        s = random_state(4, total)
        params = BeamsplitterParams.from_angle(*rng.uniform(0, 2 * np.pi, 2))
        pair = tuple(rng.permutation(4)[:2])
        out = optics.apply_beamsplitter(s, pair, params)
        assert out.total == total
        assert np.isclose(out.norm(), 1.0, atol=1e-9)
        back = optics.apply_beamsplitter(out, pair, params, inverse=True)
        assert back.allclose(s, atol=1e-9)


def test_beamsplitter_keeps_other_modes(random_state):
    s = random_state(4, 3)
    out = optics.apply_beamsplitter(s, (0, 1), BeamsplitterParams.balanced(0.3))
    # probability of each (b, B) pattern is untouched
    def bob_marginal(state):
        probs = {}
        for v, a in zip(state.basis.vectors, state.amplitudes):
            probs[v[2:]] = probs.get(v[2:], 0.0) + abs(a)**2
        return probs
    before, after = bob_marginal(s), bob_marginal(out)
    assert all(np.isclose(before[k], after[k]) for k in before)


def test_beamsplitter_rejects_bad_pair():
    s = PureState.basis_state((1, 0, 0, 1))
    with pytest.raises(ValueError):
        optics.apply_beamsplitter(s, (1, 1), BeamsplitterParams.balanced())
    with pytest.raises(ValueError):
        optics.apply_beamsplitter(s, (0, 4), BeamsplitterParams.balanced())


def test_phase_on_second_input_matches_beamsplitter_phase(random_state):
    # a phase phi on the beamsplitter equals a phase shift of -phi on mode A beforehand
    s = random_state(2, 3)
    direct = optics.apply_beamsplitter(s, (0, 1), BeamsplitterParams.balanced(0.9))
    shifted = optics.apply_beamsplitter(phase_shift(s, 1, -0.9), (0, 1), BeamsplitterParams.balanced())
    assert direct.allclose(shifted, atol=1e-12)
