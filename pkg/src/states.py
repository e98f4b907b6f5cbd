import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import comb

import fock
from fock import MixedState, PureState


# Alice owns (a, A), Bob owns (b, B)
ALICE_MODES = (0, 1)
BOB_MODES = (2, 3)
# copy order (a, b, A, B) -> party order (a, A, b, B)
PARTY_ORDER = (0, 2, 1, 3)


@dataclass(frozen=True, eq=False)
class TwoCopyArrangement:
    '''
    Two copies of a two-mode state laid out as (a, A, b, B)
    '''
    composite: Union[PureState, MixedState]
    copy_totals: Tuple[int, int]

    def __post_init__(self):
        if self.composite.mode_count != 4:
            raise ValueError(f"a two-copy arrangement has 4 modes, got {self.composite.mode_count}")
        for _, pure in fock.ensemble(self.composite):
            if pure.total != sum(self.copy_totals):
                raise ValueError(f"ensemble component with {pure.total} particles does not match copy totals {tuple(self.copy_totals)}")

    @property
    def is_pure(self) -> bool:
        return isinstance(self.composite, PureState)

    @property
    def total(self) -> int:
        return sum(self.copy_totals)

    def components(self):
        return fock.ensemble(self.composite)


def vacuum(mode_count: int = 2) -> PureState:
    return PureState.basis_state((0,) * mode_count)


def bec_state(N: int) -> PureState:
    '''
    Non-interacting condensate split over two modes:
    2^{-N/2} sum_n sqrt(C(N, n)) |n, N - n>
    '''
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    n = np.arange(N, -1, -1)
    amps = np.sqrt(comb(N, n) / 2.0**N)
    return PureState(fock.enumerate_basis(2, N), amps)


def noon_state(N: int, m: int) -> PureState:
    '''
    (|N-m, m> + |m, N-m>)/sqrt(2); m = 0 is the N00N state
    '''
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    if m < 0 or 2 * m >= N:
        raise ValueError(f"m must satisfy 0 <= m < N/2, got N={N}, m={m}")
    h = 1 / np.sqrt(2)
    return PureState.from_dict(2, {(N - m, m): h, (m, N - m): h})


def squeezed_state(c: float) -> PureState:
    '''
    c|20> + sqrt(1 - 2c^2)|11> + c|02>, 0 <= c <= 1/sqrt(2)
    '''
    if not 0.0 <= c <= np.sqrt(0.5) + 1e-15:
        raise ValueError(f"c must lie in [0, 1/sqrt(2)], got {c}")
    mid = np.sqrt(max(0.0, 1.0 - 2.0 * c**2))
    return PureState(fock.enumerate_basis(2, 2), [c, mid, c])


def toy_mixed_state(p: float) -> MixedState:
    '''
    p|psi+><psi+| + (1-p)|psi-><psi-|, psi(+/-) = (|01> +/- |10>)/sqrt(2)
    '''
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    h = 1 / np.sqrt(2)
    plus = PureState.from_dict(2, {(0, 1): h, (1, 0): h})
    minus = PureState.from_dict(2, {(0, 1): h, (1, 0): -h})
    return MixedState(((p, plus), (1.0 - p, minus)))


def custom_state(amplitudes: Dict[str, object]) -> PureState:
    '''
    Two-mode state from {"n,m": amplitude}, complex amplitudes given as
    [re, im]; rescaled to unit norm
    '''
    if not amplitudes:
        raise ValueError("a custom state needs at least one amplitude")
    parsed = {}
    for key, a in amplitudes.items():
        try:
            occ = tuple(int(x) for x in str(key).split(','))
            value = complex(*a) if isinstance(a, (list, tuple)) else complex(a)
        except (TypeError, ValueError):
            raise ValueError(f"custom amplitudes map 'n,m' to a number or [re, im], got {key!r}: {a!r}")
        if len(occ) != 2:
            raise ValueError(f"custom amplitudes are indexed by 'n,m', got '{key}'")
        parsed[occ] = value
    return PureState.from_dict(2, parsed, normalize=True)


def _pair(first: PureState, second: PureState) -> PureState:
    return fock.permute_modes(fock.tensor(first, second), PARTY_ORDER)


def two_copy(first: Union[PureState, MixedState], second: Union[PureState, MixedState]) -> TwoCopyArrangement:
    '''
    Give mode a of the first copy and mode A of the second to Alice,
    b and B to Bob. Mixed inputs multiply out into an ensemble.
    '''
    for s in (first, second):
        if s.mode_count != 2:
            raise ValueError(f"each copy must be a two-mode state, got {s.mode_count} modes")
    if isinstance(first, PureState) and isinstance(second, PureState):
        return TwoCopyArrangement(_pair(first, second), (first.total, second.total))
    totals = {(s1.total, s2.total) for _, s1 in fock.ensemble(first) for _, s2 in fock.ensemble(second)}
    if len(totals) != 1:
        raise ValueError(f"every ensemble component must carry the same copy totals, got {sorted(totals)}")
    comps = []
    for w1, s1 in fock.ensemble(first):
        for w2, s2 in fock.ensemble(second):
            if w1 * w2 > 0:
                comps.append((w1 * w2, _pair(s1, s2)))
    logging.debug(f"two-copy ensemble with {len(comps)} components")
    copy_totals = totals.pop()
    # renormalize away float drift in the product weights
    norm = sum(w for w, _ in comps)
    return TwoCopyArrangement(MixedState(tuple((w / norm, s) for w, s in comps)), copy_totals)


def family_state(family: str, n: int = 1, m: int = 0, c: float = 0.5, p: float = 0.5,
                 amplitudes: Optional[Dict[str, object]] = None) -> Union[PureState, MixedState]:
    '''
    Single-copy constructor by family name
    '''
    if family == 'bec':
        return bec_state(n)
    elif family == 'noon':
        return noon_state(n, m)
    elif family == 'squeezed':
        return squeezed_state(c)
    elif family == 'toy_mixed':
        return toy_mixed_state(p)
    elif family == 'custom':
        return custom_state(amplitudes or {})
    else:
        raise ValueError(f"unknown state family '{family}'. Try with: bec, noon, squeezed, toy_mixed, custom")
