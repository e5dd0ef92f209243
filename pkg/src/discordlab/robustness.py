"""Moments measured with two slightly different sources.

With sources L and R the copies entering the boxes alternate
(L, R) for M1 and (L, R, L, R) for M2; the resulting Q' is compared with
the exact Q of the average state (rho_L + rho_R) / 2.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discord import Moments, Side, m1_operator, m2_operator, multicopy_trace, q_indicator, q_of_state
from .seeding import seed_sequence
from .states import fidelity, random_state_pair_with_fidelity, validate_state

HISTOGRAM_BINS = 50


def mismatch_moments(rho_l, rho_r, side=Side.A):
    """``(M1', M2')`` with copies alternating between the two sources.

    The result need not satisfy the spectral moment inequalities.
    """
    rho_l, rho_r = validate_state(rho_l), validate_state(rho_r)
    side = Side(side)
    m1 = multicopy_trace(m1_operator(side), [rho_l, rho_r])
    m2 = multicopy_trace(m2_operator(side), [rho_l, rho_r, rho_l, rho_r])
    return Moments(m1, m2, side)


@dataclass(frozen=True)
class MismatchResult:
    q_prime: float
    q_exact: float
    fidelity: float
    delta: float
    clamped: bool = False


def mismatch_q(rho_l, rho_r):
    """Q' from mismatched side-A moments against Q_A of the average state."""
    m = mismatch_moments(rho_l, rho_r, Side.A)
    clamped = m.radicand < 0
    q_prime = q_indicator(m, clamp=True)
    q_exact = q_of_state((rho_l + rho_r) / 2, Side.A)
    return MismatchResult(q_prime, q_exact, fidelity(rho_l, rho_r), abs(q_prime - q_exact), clamped)


@dataclass(frozen=True, eq=False)
class RobustnessSummary:
    n_pairs: int
    f_min: float
    max_delta: float
    clamped_count: int
    histogram: np.ndarray = field(repr=False)
    bin_edges: np.ndarray = field(repr=False)
    rows: list = field(repr=False)

    def to_dict(self):
        return {"n_pairs": self.n_pairs, "f_min": self.f_min, "max_delta": self.max_delta,
                "clamped_count": self.clamped_count}


def _pair_results(args):
    seed, f_min, start, stop = args
    out = []
    for i in range(start, stop):
        rho_l, rho_r = random_state_pair_with_fidelity(seed_sequence(seed, i), f_min)
        out.append(mismatch_q(rho_l, rho_r))
    return out


def robustness_sweep(n_pairs, f_min, seed, workers=1, chunk=256):
    """Sample ``n_pairs`` source pairs with fidelity >= ``f_min``.

    Pair ``i`` uses the substream ``(seed, i)``, so a given seed yields the
    same underlying draws for every ``f_min``. The histogram is over
    ``|Q' - Q|`` on ``[0, 0.1]`` (overflow goes into the last bin).
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if not 0 < f_min < 1:
        raise ValueError("f_min must lie strictly between 0 and 1")
    jobs = [(seed, f_min, s, min(s + chunk, n_pairs)) for s in range(0, n_pairs, chunk)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_pair_results, jobs))
    else:
        parts = [_pair_results(j) for j in jobs]
    results = [r for part in parts for r in part]
    deltas = np.array([r.delta for r in results])
    edges = np.linspace(0.0, 0.1, HISTOGRAM_BINS + 1)
    hist, _ = np.histogram(np.minimum(deltas, edges[-1]), bins=edges)
    rows = [(r.q_exact, r.q_prime, r.fidelity) for r in results]
    return RobustnessSummary(n_pairs, f_min, float(deltas.max()), sum(r.clamped for r in results),
                             hist, edges, rows)
