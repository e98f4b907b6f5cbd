import os
import logging
import concurrent.futures
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize

import fock
import bell
from bell import BellSettings, epsilon
from optics import BeamsplitterParams
from states import ALICE_MODES, squeezed_state, two_copy


TWO_PI = 2 * np.pi
MIN_GRID = 8
DENOM_TOL = 1e-12
XATOL = 1e-6
FATOL = 1e-12


class SqueezingUndefinedError(ValueError):
    '''
    Mean spin in the plane of the squeezing parameter vanishes
    '''


def default_workers():
    '''
    Worker threads for grid evaluation, capped by SSRBELL_THREADS
    '''
    raw = os.environ.get('SSRBELL_THREADS', '1')
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SSRBELL_THREADS must be a positive integer, got '{raw}'")
    if n < 1:
        raise ValueError(f"SSRBELL_THREADS must be a positive integer, got '{raw}'")
    return n


def _map(func, items, workers=None):
    # ordered results whatever the scheduling
    workers = workers or default_workers()
    if workers == 1:
        return [func(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def _wrap(phi):
    return float(np.mod(phi, TWO_PI))


@dataclass(frozen=True)
class OptimizationResult:
    best_value: float
    best_settings: BellSettings
    grid_resolution: int
    refined: bool
    grid_value: float = float('nan')
    alice_particles: Optional[int] = None

    @property
    def violation(self):
        return self.best_value > 2.0 + 1e-9

    def as_dict(self):
        out = {
            'best_value': self.best_value,
            'best_settings': self.best_settings.as_dict(),
            'grid_resolution': self.grid_resolution,
            'grid_value': self.grid_value,
            'refined': self.refined,
            'violation': self.violation,
        }
        if self.alice_particles is not None:
            out['alice_particles'] = self.alice_particles
        return out


def _params(alpha, phase):
    return BeamsplitterParams.balanced(phase) if alpha is None else BeamsplitterParams.from_transmissivity(alpha, phase)


def _delta_table(state, grid, alice_alpha, bob_alpha, binning, workers):
    # E depends on phi_A - phi_B only
    h = TWO_PI / grid
    bob = _params(bob_alpha, 0.0)
    return np.array(_map(lambda g: bell.correlation(state, _params(alice_alpha, g * h), bob, binning), range(grid), workers))


def _grid_maximum(table):
    '''
    Best (phi_A2, phi_B1, phi_B2) cell with phi_A1 = 0, ties going to the
    smallest index tuple
    '''
    G = len(table)
    i = np.arange(G)[:, None, None]
    j = np.arange(G)[None, :, None]
    k = np.arange(G)[None, None, :]
    values = np.abs(table[(-j) % G] + table[(-k) % G] + table[(i - j) % G] - table[(i - k) % G])
    flat = int(np.argmax(values))
    return float(values.flat[flat]), np.unravel_index(flat, values.shape)


def _settings(x, alice_alpha, bob_alpha):
    return BellSettings.from_phases((0.0, _wrap(x[0]), _wrap(x[1]), _wrap(x[2])), alice_alpha, bob_alpha)


def optimize_bell(state, grid_points_per_angle=64, refine=True, alice_particles=None, optimize_transmissivity=False,
                  alpha=None, binning=epsilon, transmissivity_points=9, workers=None):
    '''
    Maximize the Bell term over the four phases. phi_A1 is pinned to 0 by
    phase covariance; the remaining three angles are searched on a grid,
    then refined with Nelder-Mead from the best cell.

    alice_particles: post-select on Alice's particle number first.
    optimize_transmissivity: also search one transmissivity per party,
    otherwise both parties use `alpha` (balanced when None).
    '''
    G = int(grid_points_per_angle)
    if G < MIN_GRID:
        raise ValueError(f"grid_points_per_angle must be at least {MIN_GRID}, got {G}")
    if alice_particles is not None:
        state, prob = bell.project_alice_total(state, alice_particles)
        logging.info(f"post-selected on {alice_particles} particles for Alice (probability {prob:.6g})")

    if optimize_transmissivity:
        thetas = np.linspace(0.0, np.pi / 2, transmissivity_points)
        candidates = [(ta, tb) for ta in thetas for tb in thetas]
    else:
        candidates = [(None, None)]

    best = None
    for ta, tb in candidates:
        a_alpha = alpha if ta is None else abs(np.cos(ta))
        b_alpha = alpha if tb is None else abs(np.cos(tb))
        value, cell = _grid_maximum(_delta_table(state, G, a_alpha, b_alpha, binning, workers))
        # strict comparison keeps the first candidate on ties
        if best is None or value > best[0] + 1e-12:
            best = (value, cell, ta, tb)
    grid_value, cell, ta, tb = best
    h = TWO_PI / G
    x0 = [c * h for c in cell]
    logging.debug(f"grid maximum {grid_value:.12g} on {G}^3 cells at {x0}")

    def alphas(x):
        if optimize_transmissivity:
            return abs(np.cos(x[3])), abs(np.cos(x[4]))
        return alpha, alpha

    def objective(x):
        a_alpha, b_alpha = alphas(x)
        return -bell.bell_term(state, _settings(x, a_alpha, b_alpha), binning)

    if optimize_transmissivity:
        x0 = x0 + [ta, tb]
    x_best = np.array(x0, dtype=float)
    if refine:
        res = minimize(objective, x_best, method='Nelder-Mead',
                       options={'xatol': XATOL, 'fatol': FATOL, 'maxiter': 20000, 'maxfev': 40000})
        if -res.fun >= grid_value:
            x_best = res.x
        logging.debug(f"Nelder-Mead: {res.message} after {res.nit} iterations")

    a_alpha, b_alpha = alphas(x_best)
    settings = _settings(x_best, a_alpha, b_alpha)
    value = bell.bell_term(state, settings, binning)
    logging.info(f"maximum Bell term {value:.6f} at phases {tuple(round(p, 4) for p in settings.phases)}")
    return OptimizationResult(value, settings, G, bool(refine), grid_value, alice_particles)


@dataclass(frozen=True, eq=False)
class BellSurface:
    '''
    Bell term over (phi_A2, phi_B2) with (phi_A1, phi_B1) held fixed
    '''
    angle1: np.ndarray
    angle2: np.ndarray
    values: np.ndarray
    fixed: Tuple[float, float]
    alpha: Optional[float] = None

    def max(self):
        return float(self.values.max())

    def argmax(self):
        i, k = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.angle1[i]), float(self.angle2[k])

    def to_frame(self):
        a1, a2 = np.meshgrid(self.angle1, self.angle2, indexing='ij')
        return pd.DataFrame({'angle1': a1.ravel(), 'angle2': a2.ravel(), 'bell_term': self.values.ravel()})


def bell_surface(state, fixed=None, sweep=((0.0, TWO_PI), (0.0, TWO_PI)), resolution=101, alpha=None,
                 binning=epsilon, workers=None):
    '''
    Sweep phi_A2 and phi_B2 over inclusive ranges; when `fixed` is None,
    (phi_A1, phi_B1) come from optimize_bell
    '''
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    if fixed is None:
        opt = optimize_bell(state, alpha=alpha, binning=binning, workers=workers)
        fixed = (opt.best_settings.phases[0], opt.best_settings.phases[2])
    if len(fixed) != 2:
        raise ValueError(f"two fixed angles expected, got {len(fixed)}")
    phi_a1, phi_b1 = float(fixed[0]), float(fixed[1])
    angle1 = np.linspace(sweep[0][0], sweep[0][1], resolution)
    angle2 = np.linspace(sweep[1][0], sweep[1][1], resolution)
    a1 = _params(alpha, phi_a1)
    b1 = _params(alpha, phi_b1)

    e11 = bell.correlation(state, a1, b1, binning)
    e12 = np.array([bell.correlation(state, a1, _params(alpha, p), binning) for p in angle2])
    e21 = np.array([bell.correlation(state, _params(alpha, p), b1, binning) for p in angle1])

    def row(p):
        a2 = _params(alpha, p)
        return [bell.correlation(state, a2, _params(alpha, q), binning) for q in angle2]

    e22 = np.array(_map(row, angle1, workers))
    values = np.abs(e11 + e12[None, :] + e21[:, None] - e22)
    logging.info(f"surface of {resolution}x{resolution} points, maximum {values.max():.6f}")
    return BellSurface(angle1, angle2, values, (phi_a1, phi_b1), alpha)


def _spin_operators(total):
    # S_x, S_y, S_z on the two-mode sector, basis index k = occupation of the second mode
    k = np.arange(total + 1)
    sz = np.diag(0.5 * (total - 2 * k)).astype(complex)
    raise_a = np.zeros((total + 1, total + 1), dtype=complex)
    # a+ b |N-k, k> = sqrt((N-k+1) k) |N-k+1, k-1>
    raise_a[k[1:] - 1, k[1:]] = np.sqrt((total - k[1:] + 1) * k[1:])
    sx = 0.5 * (raise_a + raise_a.conj().T)
    sy = 0.5j * (raise_a - raise_a.conj().T)
    return {'x': sx, 'y': sy, 'z': sz}


def squeezing_parameter(state, axis='z'):
    '''
    E_S^2 = N Var(S_axis) / (sum of the squared means of the other two
    components). axis='z' is the number-difference form; axis='y' uses the
    phase quadrature. E_S < 1 signals spin squeezing.
    '''
    if state.mode_count != 2:
        raise ValueError(f"squeezing is defined for two-mode states, got {state.mode_count} modes")
    if axis not in ('z', 'y'):
        raise ValueError(f"axis must be 'z' or 'y', got '{axis}'")
    N = state.total
    if N == 0:
        raise SqueezingUndefinedError("the vacuum carries no spin")
    ops = _spin_operators(N)
    psi = state.amplitudes
    mean = {a: float(np.real(np.vdot(psi, ops[a] @ psi))) for a in ops}
    var = float(np.real(np.vdot(psi, ops[axis] @ ops[axis] @ psi))) - mean[axis]**2
    denom = sum(mean[a]**2 for a in ops if a != axis)
    if denom <= DENOM_TOL:
        raise SqueezingUndefinedError(f"mean spin orthogonal to S_{axis} vanishes")
    return float(np.sqrt(max(0.0, N * var / denom)))


def entanglement_entropy(state):
    '''
    Mode entanglement of a two-mode pure state, in bits
    '''
    if state.mode_count != 2:
        raise ValueError(f"expected a two-mode state, got {state.mode_count} modes")
    return fock.von_neumann_entropy(fock.reduced_density(state, [0]))


def projected_entropy(state):
    '''
    Average over Alice's particle number M of the entanglement entropy of
    the renormalized projection, weighted by its probability
    '''
    if not state.is_pure:
        raise ValueError("projected entropy is defined for pure two-copy states")
    total = 0.0
    for M, q in bell.alice_total_probabilities(state).items():
        if q <= bell.PROB_TOL:
            continue
        projected, prob = bell.project_alice_total(state, M)
        s = fock.von_neumann_entropy(fock.reduced_density(projected.composite, ALICE_MODES))
        logging.debug(f"Alice total {M}: probability {prob:.6g}, entropy {s:.6g}")
        total += prob * s
    return total


def default_outcome_map(n, m):
    '''
    Outcome index of (n, m): rank by n - m within the local sector,
    which is the occupation m of the second output
    '''
    return m


def epsilon_outcome_map(n, m):
    # 0 for eps = +1, 1 for eps = -1
    return 0 if epsilon(n, m) == 1 else 1


def outcome_table(dist, outcome_map, d):
    '''
    P[x, y] over folded outcome indices x, y in 0..d-1
    '''
    table = np.zeros((d, d))
    for (nc, mc, nd, md), p in dist.entries.items():
        table[outcome_map(nc, mc) % d, outcome_map(nd, md) % d] += p
    return table


def cglmp_value(dists, outcome_map=default_outcome_map, d=None):
    '''
    CGLMP combination I_d for the distributions (A1B1, A1B2, A2B1, A2B2).
    Local realistic bound 2. d defaults to the number of particles + 1.
    '''
    if len(dists) != 4:
        raise ValueError(f"four joint distributions expected, got {len(dists)}")
    if d is None:
        d = dists[0].total + 1
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    P = {key: outcome_table(dist, outcome_map, d) for key, dist in zip(('11', '12', '21', '22'), dists)}
    x = np.arange(d)

    def p_diff(key, k, swap=False):
        # P(X = Y + k mod d) with X Alice's outcome, or Bob's when swap
        t = P[key].T if swap else P[key]
        return float(sum(t[(y + k) % d, y] for y in x))

    value = 0.0
    for k in range(d // 2):
        weight = 1.0 - 2.0 * k / (d - 1)
        value += weight * (
            p_diff('11', k) + p_diff('21', k + 1, swap=True) + p_diff('22', k) + p_diff('12', k, swap=True)
            - p_diff('11', -k - 1) - p_diff('21', -k, swap=True) - p_diff('22', -k - 1) - p_diff('12', -k - 1, swap=True))
    return value


def squeezing_comparison(cs, grid_points_per_angle=32, refine=True, workers=None):
    '''
    For each c: both squeezing parameters, the single-copy mode entanglement
    and the maximal Bell term of two copies of the squeezed state
    '''
    rows = []
    for c in cs:
        s = squeezed_state(c)
        row = {'c': float(c)}
        for axis in ('z', 'y'):
            try:
                row[f'squeezing_{axis}'] = squeezing_parameter(s, axis)
            except SqueezingUndefinedError:
                row[f'squeezing_{axis}'] = np.nan
        row['entanglement_entropy'] = entanglement_entropy(s)
        row['max_bell'] = optimize_bell(two_copy(s, s), grid_points_per_angle, refine, workers=workers).best_value
        rows.append(row)
    return pd.DataFrame(rows, columns=['c', 'squeezing_z', 'squeezing_y', 'entanglement_entropy', 'max_bell'])
