import logging
import functools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import comb


NORM_TOL = 1e-9
WEIGHT_TOL = 1e-12
DENSITY_TOL = 1e-8


class NormalizationError(ValueError):
    '''
    The amplitudes of a state are not normalized within NORM_TOL
    '''


class FockVector(tuple):
    '''
    Occupation numbers over an ordered list of modes
    '''
    def __new__(cls, occupations: Iterable[int]):
        occ = tuple(int(n) for n in occupations)
        if any(n < 0 for n in occ):
            raise ValueError(f"occupation numbers must be non-negative: {occ}")
        return super().__new__(cls, occ)

    def total(self) -> int:
        return sum(self)


def _compositions(mode_count, total):
    # lexicographic descending: the first mode takes the most particles first
    if mode_count == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(mode_count - 1, total - first):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    '''
    All occupation vectors with a fixed number of modes and particles.
    The order is lexicographic descending and never changes, so indices
    (and the rows of every CSV written from them) are stable across runs.
    '''
    mode_count: int
    total_particles: int
    vectors: Tuple[FockVector, ...]

    def __post_init__(self):
        object.__setattr__(self, '_index', {v: i for i, v in enumerate(self.vectors)})

    def __len__(self):
        return len(self.vectors)

    def index(self, occupations: Sequence[int]) -> int:
        try:
            return self._index[tuple(occupations)]
        except KeyError:
            raise ValueError(f"{tuple(occupations)} is not in the basis of {self.mode_count} modes and {self.total_particles} particles")


@functools.lru_cache(maxsize=None)
def enumerate_basis(mode_count: int, total: int) -> FockBasis:
    '''
    Enumerate the Fock basis of one particle-number sector
    '''
    if mode_count < 1:
        raise ValueError(f"mode_count must be positive: {mode_count}")
    if total < 0:
        raise ValueError(f"total must be non-negative: {total}")
    vectors = tuple(FockVector(v) for v in _compositions(mode_count, total))
    assert len(vectors) == int(comb(total + mode_count - 1, mode_count - 1, exact=True))
    return FockBasis(mode_count, total, vectors)


@dataclass(frozen=True, eq=False)
class PureState:
    '''
    Normalized amplitudes over a single particle-number sector
    '''
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise NormalizationError(f"state norm is {norm:.12g}, outside tolerance {NORM_TOL}")
        amps.flags.writeable = False
        object.__setattr__(self, 'amplitudes', amps)

    @classmethod
    def from_dict(cls, mode_count: int, amplitudes: Dict[Sequence[int], complex], normalize: bool = False) -> 'PureState':
        '''
        Build a state from {occupations: amplitude}. All occupations must
        share one total; normalize=True rescales instead of rejecting.
        '''
        if not amplitudes:
            raise ValueError("a state needs at least one amplitude")
        totals = {sum(k) for k in amplitudes}
        if len(totals) != 1:
            raise ValueError(f"amplitudes span several particle-number sectors: {sorted(totals)}")
        basis = enumerate_basis(mode_count, totals.pop())
        amps = np.zeros(len(basis), dtype=complex)
        for occ, a in amplitudes.items():
            if len(occ) != mode_count:
                raise ValueError(f"{tuple(occ)} does not have {mode_count} modes")
            amps[basis.index(occ)] += a
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise NormalizationError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(basis, amps)

    @classmethod
    def basis_state(cls, occupations: Sequence[int]) -> 'PureState':
        return cls.from_dict(len(occupations), {tuple(occupations): 1.0})

    @property
    def mode_count(self) -> int:
        return self.basis.mode_count

    @property
    def total(self) -> int:
        return self.basis.total_particles

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, occupations: Sequence[int]) -> complex:
        if sum(occupations) != self.total or len(occupations) != self.mode_count:
            return 0j
        return complex(self.amplitudes[self.basis.index(occupations)])

    def as_dict(self, tol: float = 0.0) -> Dict[FockVector, complex]:
        return {v: complex(a) for v, a in zip(self.basis.vectors, self.amplitudes) if abs(a) > tol}

    def allclose(self, other: 'PureState', atol: float = 1e-12) -> bool:
        if self.mode_count != other.mode_count or self.total != other.total:
            return False
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class MixedState:
    '''
    Weighted ensemble of pure states. Each component sits in one sector,
    so the ensemble is block-diagonal in particle number.
    '''
    components: Tuple[Tuple[float, PureState], ...]

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise ValueError("a mixed state needs at least one component")
        if any(w < 0 for w, _ in comps):
            raise ValueError("ensemble weights must be non-negative")
        if abs(sum(w for w, _ in comps) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"ensemble weights sum to {sum(w for w, _ in comps):.15g}")
        if len({s.mode_count for _, s in comps}) != 1:
            raise ValueError("all ensemble components must share the mode count")
        object.__setattr__(self, 'components', comps)

    @property
    def mode_count(self) -> int:
        return self.components[0][1].mode_count

    @property
    def totals(self) -> Tuple[int, ...]:
        return tuple(sorted({s.total for _, s in self.components}))


State = Union[PureState, MixedState]


def ensemble(state: State) -> List[Tuple[float, PureState]]:
    '''
    View any state as a list of (weight, PureState)
    '''
    if isinstance(state, PureState):
        return [(1.0, state)]
    return list(state.components)


@functools.lru_cache(maxsize=None)
def _tensor_layout(left_modes, left_total, right_modes, right_total):
    left = enumerate_basis(left_modes, left_total)
    right = enumerate_basis(right_modes, right_total)
    out = enumerate_basis(left_modes + right_modes, left_total + right_total)
    idx = np.array([out.index(u + v) for u in left.vectors for v in right.vectors], dtype=np.intp)
    return out, idx


def tensor(left: PureState, right: PureState) -> PureState:
    '''
    Tensor product; the modes of `left` come first
    '''
    basis, idx = _tensor_layout(left.mode_count, left.total, right.mode_count, right.total)
    amps = np.zeros(len(basis), dtype=complex)
    amps[idx] = np.outer(left.amplitudes, right.amplitudes).ravel()
    return PureState(basis, amps)


def _check_permutation(permutation, mode_count):
    perm = [int(p) for p in permutation]
    if sorted(perm) != list(range(mode_count)):
        raise ValueError(f"{list(permutation)} is not a permutation of {mode_count} modes")
    return perm


def inverse_permutation(permutation: Sequence[int]) -> List[int]:
    perm = _check_permutation(permutation, len(permutation))
    return [int(i) for i in np.argsort(perm)]


def permute_modes(state: PureState, permutation: Sequence[int]) -> PureState:
    '''
    Reorder modes: mode k of the result is mode permutation[k] of the input.
    Bosonic, so amplitudes keep their sign.
    '''
    perm = _check_permutation(permutation, state.mode_count)
    basis = state.basis
    amps = np.zeros(len(basis), dtype=complex)
    for v, a in zip(basis.vectors, state.amplitudes):
        amps[basis.index(tuple(v[p] for p in perm))] = a
    return PureState(basis, amps)


def occupations_up_to(mode_count: int, max_total: int) -> List[FockVector]:
    '''
    All occupation vectors with total <= max_total, by increasing total
    '''
    out = []
    for t in range(max_total + 1):
        out.extend(enumerate_basis(mode_count, t).vectors)
    return out


@dataclass(frozen=True, eq=False)
class ReducedDensity:
    labels: Tuple[FockVector, ...]
    matrix: np.ndarray


def reduced_density(state: PureState, kept_modes: Iterable[int]) -> ReducedDensity:
    '''
    Partial trace over the modes not in kept_modes
    '''
    kept = sorted(set(int(k) for k in kept_modes))
    n = state.mode_count
    if not kept or len(kept) >= n or kept[0] < 0 or kept[-1] >= n:
        raise ValueError(f"kept modes {kept} must be a non-empty proper subset of {n} modes")
    traced = [k for k in range(n) if k not in kept]
    kept_labels = occupations_up_to(len(kept), state.total)
    traced_labels = occupations_up_to(len(traced), state.total)
    ik = {l: i for i, l in enumerate(kept_labels)}
    it = {l: i for i, l in enumerate(traced_labels)}
    psi = np.zeros((len(kept_labels), len(traced_labels)), dtype=complex)
    for v, a in zip(state.basis.vectors, state.amplitudes):
        psi[ik[tuple(v[k] for k in kept)], it[tuple(v[k] for k in traced)]] = a
    rho = psi @ psi.conj().T
    return ReducedDensity(tuple(kept_labels), rho)


def von_neumann_entropy(rho: Union[ReducedDensity, np.ndarray]) -> float:
    '''
    S = -sum(l log2 l) over the eigenvalues, in bits
    '''
    m = rho.matrix if isinstance(rho, ReducedDensity) else np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, rtol=0.0, atol=DENSITY_TOL):
        raise ValueError("density matrix is not Hermitian")
    tr = np.real(np.trace(m))
    if abs(tr - 1.0) > DENSITY_TOL:
        raise ValueError(f"density matrix has trace {tr:.12g}")
    evals = scipy.linalg.eigvalsh(m)
    if evals.min() < -DENSITY_TOL:
        raise ValueError(f"density matrix is not positive semidefinite (eigenvalue {evals.min():.3g})")
    # 0 log 0 = 0
    evals = evals[evals > 1e-14]
    s = float(-np.sum(evals * np.log2(evals)))
    logging.debug(f"von Neumann entropy {s:.12g} over dimension {m.shape[0]}")
    return max(s, 0.0)
