import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import comb, factorial

import fock


PARAM_TOL = 1e-12
MAX_TOTAL = 34

# float factorials; exact in double precision up to 22!
_FACTORIALS = factorial(np.arange(MAX_TOTAL + 1), exact=False)


@dataclass(frozen=True)
class BeamsplitterParams:
    '''
    Transmissivity amplitudes and phase of one local beamsplitter:
        c = alpha a + exp(-i phase) beta A
        C = beta a - exp(-i phase) alpha A
    '''
    alpha: float
    beta: float
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'alpha', float(self.alpha))
        object.__setattr__(self, 'beta', float(self.beta))
        object.__setattr__(self, 'phase', float(self.phase))
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(f"transmissivity amplitudes must be non-negative: alpha={self.alpha}, beta={self.beta}")
        if abs(self.alpha**2 + self.beta**2 - 1.0) > PARAM_TOL:
            raise ValueError(f"alpha^2 + beta^2 must be 1, got {self.alpha**2 + self.beta**2:.15g}")

    @classmethod
    def balanced(cls, phase: float = 0.0) -> 'BeamsplitterParams':
        return cls(np.sqrt(0.5), np.sqrt(0.5), phase)

    @classmethod
    def from_transmissivity(cls, alpha: float, phase: float = 0.0) -> 'BeamsplitterParams':
        '''
        Build from alpha alone, beta = sqrt(1 - alpha^2)
        '''
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        return cls(alpha, np.sqrt(max(0.0, 1.0 - alpha**2)), phase)

    @classmethod
    def from_angle(cls, theta: float, phase: float = 0.0) -> 'BeamsplitterParams':
        '''
        alpha = |cos(theta)|, beta = |sin(theta)|; any real theta is valid,
        which is what the unconstrained optimizer needs
        '''
        return cls(abs(np.cos(theta)), abs(np.sin(theta)), phase)

    def with_phase(self, phase: float) -> 'BeamsplitterParams':
        return BeamsplitterParams(self.alpha, self.beta, phase)


def single_particle_matrix(params: BeamsplitterParams) -> np.ndarray:
    '''
    U = [[alpha, beta e^{-i phase}], [beta, -alpha e^{-i phase}]]
    Row k holds the coefficients of output mode k over the input modes.
    '''
    e = np.exp(-1j * params.phase)
    return np.array([[params.alpha, params.beta * e],
                     [params.beta, -params.alpha * e]], dtype=complex)


def _check_total(total):
    if total < 0:
        raise ValueError(f"particle number must be non-negative: {total}")
    if total > MAX_TOTAL:
        raise ValueError(f"particle number {total} exceeds the supported maximum {MAX_TOTAL}")


def _powers(x, k):
    # x**0 .. x**k without relying on 0**0
    return np.cumprod(np.concatenate(([1.0 + 0j], np.full(k, x, dtype=complex))))


def _binomial_row(x, y, k):
    # coefficients of (x + y z)**k by powers of z
    j = np.arange(k + 1)
    return comb(k, j) * _powers(x, k)[::-1] * _powers(y, k)


def _output_ket(u, n_out, m_out):
    # (u00 a+ + u01 A+)^n (u10 a+ + u11 A+)^m |0> / sqrt(n! m!), coefficients by powers of A+
    first = _binomial_row(u[0, 0], u[0, 1], n_out)
    second = _binomial_row(u[1, 0], u[1, 1], m_out)
    coef = np.convolve(first, second)
    total = n_out + m_out
    q = np.arange(total + 1)
    norm = np.sqrt(_FACTORIALS[total - q] * _FACTORIALS[q] / (_FACTORIALS[n_out] * _FACTORIALS[m_out]))
    # index q is the input ket (total - q, q), i.e. descending basis order
    return coef * norm


def measurement_projector_amplitudes(n_out: int, m_out: int, params: BeamsplitterParams, total: int) -> np.ndarray:
    '''
    Expansion of the measured output ket |n_out, m_out> over the input kets
    |total - q, q>, q = 0..total (descending basis order).
    '''
    if n_out < 0 or m_out < 0:
        raise ValueError(f"output occupations must be non-negative: ({n_out}, {m_out})")
    if n_out + m_out != total:
        raise ValueError(f"output occupations ({n_out}, {m_out}) do not add up to {total}")
    _check_total(total)
    return _output_ket(single_particle_matrix(params), n_out, m_out)


@functools.lru_cache(maxsize=4096)
def _sector_lift(alpha, beta, phase, total):
    u = single_particle_matrix(BeamsplitterParams(alpha, beta, phase))
    rows = [_output_ket(u, total - m, m) for m in range(total + 1)]
    lift = np.conj(np.array(rows, dtype=complex))
    lift.flags.writeable = False
    return lift


def sector_lift(params: BeamsplitterParams, total: int) -> np.ndarray:
    '''
    Fock-space matrix of the beamsplitter on one two-mode sector:
    lift[out, in] = <out|in>, both in descending basis order.
    Cached per (params, total).
    '''
    _check_total(total)
    return _sector_lift(params.alpha, params.beta, params.phase, total)


@functools.lru_cache(maxsize=None)
def _pair_layout(mode_count, total, pair):
    '''
    Basis indices grouped by the pair's particle number t into arrays of
    shape (groups, t + 1): each row shares the occupations of the other
    modes, the column is the pair-sector index (occupation of the second
    pair mode).
    '''
    i, j = pair
    basis = fock.enumerate_basis(mode_count, total)
    groups = {}
    for idx, v in enumerate(basis.vectors):
        t = v[i] + v[j]
        rest = tuple(n for k, n in enumerate(v) if k != i and k != j)
        row = groups.setdefault(t, {}).setdefault(rest, np.empty(t + 1, dtype=np.intp))
        row[v[j]] = idx
    layout = []
    for t in sorted(groups):
        rows = np.array([groups[t][rest] for rest in sorted(groups[t], reverse=True)], dtype=np.intp)
        layout.append((t, rows))
    return tuple(layout)


def apply_beamsplitter(state: fock.PureState, mode_pair: Sequence[int], params: BeamsplitterParams, inverse: bool = False) -> fock.PureState:
    '''
    Rewrite the state in the output basis of a beamsplitter acting on
    mode_pair = (a, A). inverse=True applies the adjoint, undoing a
    previous call with the same params.
    '''
    pair = tuple(int(k) for k in mode_pair)
    n = state.mode_count
    if len(pair) != 2 or pair[0] == pair[1] or min(pair) < 0 or max(pair) >= n:
        raise ValueError(f"invalid mode pair {tuple(mode_pair)} for {n} modes")
    _check_total(state.total)
    amps = np.array(state.amplitudes)
    out = np.empty_like(amps)
    for t, rows in _pair_layout(n, state.total, pair):
        lift = sector_lift(params, t)
        if inverse:
            lift = lift.conj().T
        # sectors never mix: each block only reads and writes its own indices
        out[rows] = amps[rows] @ lift.T
    return fock.PureState(state.basis, out)
