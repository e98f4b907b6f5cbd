import logging
import functools
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import fock
import optics
from optics import BeamsplitterParams
from states import ALICE_MODES, TwoCopyArrangement


PROB_TOL = 1e-12
SUM_TOL = 1e-9

# one party's setting is its beamsplitter
MeasurementSetting = BeamsplitterParams

Binning = Callable[[int, int], int]


class ProjectionError(ValueError):
    '''
    Post-selection onto an outcome of vanishing probability
    '''


def epsilon(n: int, m: int) -> int:
    '''
    Sharp binning of the outcome (n, m): (-1)^(m + (n+m)(n+m+1)/2)
    '''
    if n < 0 or m < 0:
        raise ValueError(f"occupations must be non-negative: ({n}, {m})")
    t = n + m
    return -1 if (m + t * (t + 1) // 2) % 2 else 1


def single_particle_binning(n: int, m: int) -> int:
    '''
    +1 for a particle in the first output, -1 for the second,
    0 for any outcome outside the one-particle sector
    '''
    if (n, m) == (1, 0):
        return 1
    if (n, m) == (0, 1):
        return -1
    return 0


@functools.lru_cache(maxsize=None)
def _binning_vector(binning, total):
    vec = np.array([binning(total - k, k) for k in range(total + 1)], dtype=float)
    vec.flags.writeable = False
    return vec


@dataclass(frozen=True)
class BellSettings:
    alice: Tuple[MeasurementSetting, MeasurementSetting]
    bob: Tuple[MeasurementSetting, MeasurementSetting]

    @classmethod
    def from_phases(cls, phases: Sequence[float], alice_alpha: Optional[float] = None, bob_alpha: Optional[float] = None) -> 'BellSettings':
        '''
        phases = (phi_A1, phi_A2, phi_B1, phi_B2); alpha None means balanced
        '''
        if len(phases) != 4:
            raise ValueError(f"four phases expected, got {len(phases)}")
        a = [BeamsplitterParams.balanced(p) if alice_alpha is None else BeamsplitterParams.from_transmissivity(alice_alpha, p) for p in phases[:2]]
        b = [BeamsplitterParams.balanced(p) if bob_alpha is None else BeamsplitterParams.from_transmissivity(bob_alpha, p) for p in phases[2:]]
        return cls(tuple(a), tuple(b))

    @property
    def phases(self) -> Tuple[float, float, float, float]:
        return (self.alice[0].phase, self.alice[1].phase, self.bob[0].phase, self.bob[1].phase)

    def pairs(self) -> List[Tuple[MeasurementSetting, MeasurementSetting]]:
        '''
        (A1,B1), (A1,B2), (A2,B1), (A2,B2)
        '''
        return [(a, b) for a in self.alice for b in self.bob]

    def shifted(self, offset: float) -> 'BellSettings':
        return BellSettings(tuple(s.with_phase(s.phase + offset) for s in self.alice),
                            tuple(s.with_phase(s.phase + offset) for s in self.bob))

    def as_dict(self) -> Dict[str, float]:
        return {
            'phi_A1': self.alice[0].phase, 'phi_A2': self.alice[1].phase,
            'phi_B1': self.bob[0].phase, 'phi_B2': self.bob[1].phase,
            'alpha_A': self.alice[0].alpha, 'alpha_B': self.bob[0].alpha,
        }


@dataclass(frozen=True, eq=False)
class JointDistribution:
    '''
    Probabilities of the outcomes (n_c, m_C, n_d, m_D) for one setting pair
    '''
    entries: Dict[Tuple[int, int, int, int], float]
    total: int

    def __post_init__(self):
        s = sum(self.entries.values())
        if abs(s - 1.0) > SUM_TOL:
            raise ValueError(f"joint distribution sums to {s:.12g}")
        if any(sum(k) != self.total for k in self.entries):
            raise ValueError(f"outcomes must all carry {self.total} particles")

    def probability(self, outcome: Sequence[int]) -> float:
        return self.entries.get(tuple(outcome), 0.0)

    def marginal(self, party: str) -> Dict[Tuple[int, int], float]:
        if party not in ('alice', 'bob'):
            raise ValueError(f"party must be 'alice' or 'bob', got '{party}'")
        out = {}
        for k, p in self.entries.items():
            key = k[:2] if party == 'alice' else k[2:]
            out[key] = out.get(key, 0.0) + p
        return out

    def expectation(self, binning: Binning = epsilon) -> float:
        return float(sum(binning(*k[:2]) * binning(*k[2:]) * p for k, p in self.entries.items()))

    def to_frame(self) -> pd.DataFrame:
        rows = [list(k) + [p] for k, p in sorted(self.entries.items(), reverse=True)]
        return pd.DataFrame(rows, columns=['n_c', 'm_C', 'n_d', 'm_D', 'probability'])


@functools.lru_cache(maxsize=None)
def _party_layout(total):
    # basis indices as (M, block[A, B]) with M = a + A the particles on Alice's side
    basis = fock.enumerate_basis(4, total)
    blocks = {}
    for idx, (a, A, b, B) in enumerate(basis.vectors):
        M = a + A
        block = blocks.setdefault(M, np.empty((M + 1, total - M + 1), dtype=np.intp))
        block[A, B] = idx
    return tuple((M, blocks[M]) for M in sorted(blocks))


def _outcome_tables(state: TwoCopyArrangement, alice: MeasurementSetting, bob: MeasurementSetting) -> Dict[int, np.ndarray]:
    '''
    Per Alice total M, the table P[k, l] of outcome (M-k, k ; T-M-l, l)
    '''
    tables = {}
    for w, pure in state.components():
        T = pure.total
        for M, block in _party_layout(T):
            psi = pure.amplitudes[block]
            out = optics.sector_lift(alice, M) @ psi @ optics.sector_lift(bob, T - M).T
            tables[M] = tables.get(M, 0.0) + w * np.abs(out)**2
    return tables


def joint_distribution(state: TwoCopyArrangement, alice: MeasurementSetting, bob: MeasurementSetting) -> JointDistribution:
    '''
    Alice's beamsplitter on (a, A), Bob's on (b, B); probabilities are the
    squared output amplitudes, averaged over the ensemble
    '''
    T = state.components()[0][1].total
    entries = {}
    for M, table in _outcome_tables(state, alice, bob).items():
        if table.min() < -PROB_TOL:
            raise ValueError(f"negative probability {table.min():.3g} in sector {M}")
        table = np.clip(table, 0.0, None)
        for k in range(M + 1):
            for l in range(T - M + 1):
                entries[(M - k, k, T - M - l, l)] = float(table[k, l])
    return JointDistribution(entries, T)


def correlation(state: TwoCopyArrangement, alice: MeasurementSetting, bob: MeasurementSetting, binning: Binning = epsilon) -> float:
    '''
    E = sum eps(n_c, m_C) eps(n_d, m_D) P(n_c m_C; n_d m_D)
    '''
    T = state.components()[0][1].total
    e = 0.0
    for M, table in _outcome_tables(state, alice, bob).items():
        e += _binning_vector(binning, M) @ table @ _binning_vector(binning, T - M)
    return float(e)


def bell_term(state: TwoCopyArrangement, settings: BellSettings, binning: Binning = epsilon) -> float:
    '''
    |E(A1,B1) + E(A1,B2) + E(A2,B1) - E(A2,B2)|
    '''
    e11, e12, e21, e22 = (correlation(state, a, b, binning) for a, b in settings.pairs())
    return abs(e11 + e12 + e21 - e22)


def bell_distributions(state: TwoCopyArrangement, settings: BellSettings) -> List[JointDistribution]:
    '''
    Joint distributions for (A1,B1), (A1,B2), (A2,B1), (A2,B2)
    '''
    return [joint_distribution(state, a, b) for a, b in settings.pairs()]


def alice_outcome_count(total: int) -> int:
    '''
    Number of outcomes (n_c, m_C) with n_c + m_C <= total: (total/2 + 1)(total + 1)
    '''
    if total < 0:
        raise ValueError(f"total must be non-negative: {total}")
    return (total + 1) * (total + 2) // 2


def alice_total_probabilities(state: TwoCopyArrangement) -> Dict[int, float]:
    '''
    Probability of each number of particles on Alice's side
    '''
    probs = {}
    for w, pure in state.components():
        for v, a in zip(pure.basis.vectors, pure.amplitudes):
            M = sum(v[k] for k in ALICE_MODES)
            probs[M] = probs.get(M, 0.0) + w * abs(a)**2
    return dict(sorted(probs.items()))


def project_alice_total(state: TwoCopyArrangement, alice_particles: int) -> Tuple[TwoCopyArrangement, float]:
    '''
    Project onto `alice_particles` particles on Alice's side and renormalize.
    Returns the projected arrangement and the projection probability.
    '''
    T = state.total
    if not 0 <= alice_particles <= T:
        raise ValueError(f"alice_particles must lie in [0, {T}], got {alice_particles}")
    comps = []
    for w, pure in state.components():
        mask = np.array([sum(v[k] for k in ALICE_MODES) == alice_particles for v in pure.basis.vectors])
        kept = np.where(mask, pure.amplitudes, 0.0)
        q = float(np.vdot(kept, kept).real)
        if w * q > PROB_TOL:
            comps.append((w * q, fock.PureState(pure.basis, kept / np.sqrt(q))))
    prob = sum(w for w, _ in comps)
    if prob <= PROB_TOL:
        raise ProjectionError(f"projection onto {alice_particles} particles for Alice has zero probability")
    if state.is_pure:
        projected = comps[0][1]
    else:
        projected = fock.MixedState(tuple((w / prob, s) for w, s in comps))
    logging.debug(f"projected onto Alice total {alice_particles} with probability {prob:.12g}")
    return TwoCopyArrangement(projected, state.copy_totals), prob


def postselected_bell_term(state: TwoCopyArrangement, settings: BellSettings, alice_particles: int, binning: Binning = epsilon) -> float:
    '''
    Bell term of the state conditioned on Alice holding `alice_particles`
    '''
    projected, _ = project_alice_total(state, alice_particles)
    return bell_term(projected, settings, binning)


def number_basis_correlation(state) -> float:
    '''
    Single copy, each party measures the parity of its own mode's
    occupation: E = sum P(n, m) (-1)^(n + m)
    '''
    if state.mode_count != 2:
        raise ValueError(f"a single copy has 2 modes, got {state.mode_count}")
    e = 0.0
    for w, pure in fock.ensemble(state):
        signs = np.array([(-1.0)**(n + m) for n, m in pure.basis.vectors])
        e += w * float(np.sum(signs * np.abs(pure.amplitudes)**2))
    return e
