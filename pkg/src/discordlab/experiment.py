"""Monte Carlo of the two-box coincidence experiment and its rate budget.

Each iteration feeds two (M1) or four (M2) copies of the state into the
U/V boxes. Box outcomes are sampled jointly from ``Tr[(E (x) E ...) rho^(x)k]``
with the box POVM elements taken from :mod:`discordlab.optics`, so the
correlations between the A-side and B-side boxes carried by the state are
kept. Iterations are grouped into fixed-size blocks with one random
substream per block; results do not depend on the number of workers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from functools import lru_cache
from itertools import product
import math

import numpy as np

from .discord import Moments, Side, q_indicator, qubit_index
from .errors import InsufficientStatistics
from .optics import OUTCOMES, BoxKind, DetectorModel, box_effects, outcome_value
from .seeding import substream
from .states import validate_state

BLOCK_SIZE = 1 << 16
BOOTSTRAP_RESAMPLES = 200

_STREAM_M1 = 1
_STREAM_M2 = 2
_STREAM_BOOTSTRAP = 3


class DelayScheme(str, Enum):
    DETERMINISTIC = "deterministic"
    PROBABILISTIC = "probabilistic"

    @classmethod
    def parse(cls, value):
        aliases = {"det": cls.DETERMINISTIC, "prob": cls.PROBABILISTIC}
        if isinstance(value, str) and value in aliases:
            return aliases[value]
        return cls(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Source, detector and timing parameters.

    ``delay_success_p`` is the success probability of one probabilistic
    delay; an M2 round needs two of them. ``two_pair_prob`` is the chance of
    getting both photon pairs from one pump pulse; with
    ``derive_two_pair_prob`` it is replaced by ``pair_gen_prob ** 2``.
    """

    eta: float = 1.0
    tau_ns: float = 50.0
    delay_scheme: DelayScheme = DelayScheme.PROBABILISTIC
    delay_success_p: float = 0.25
    pair_gen_prob: float = 0.1
    two_pair_prob: float = 0.01
    derive_two_pair_prob: bool = False
    pulse_pick_factor: float = 0.5
    strict_delay_factor: bool = False
    iterations: int = 10 ** 6
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "delay_scheme", DelayScheme.parse(self.delay_scheme))
        if self.derive_two_pair_prob:
            object.__setattr__(self, "two_pair_prob", self.pair_gen_prob ** 2)
        for name in ("eta", "delay_success_p", "pair_gen_prob", "two_pair_prob", "pulse_pick_factor"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not self.tau_ns > 0:
            raise ValueError("tau_ns must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @property
    def detector(self):
        return DetectorModel(self.eta)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        d = asdict(self)
        d["delay_scheme"] = self.delay_scheme.value
        return d


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Ratio estimate ``sum(outcome products) / #(all-identity events)``.

    ``counts[c]`` is how many iterations ended in joint outcome class ``c``
    and ``products[c]`` is the product of box values for that class; both
    are kept so the estimate can be resampled.
    """

    moment: str
    value: float
    n_success: int
    n_total: int
    std_error: float
    counts: np.ndarray = field(repr=False)
    products: np.ndarray = field(repr=False)
    success_product: int = field(repr=False, default=2)

    def to_dict(self, config=None):
        out = {"moment": self.moment, "value": self.value, "std_error": self.std_error,
               "n_success": self.n_success, "n_total": self.n_total}
        if config is not None:
            out["wall_config"] = config.to_dict()
        return out


def _box_layout(moment, side):
    """List of (kind, (q1, q2)) boxes for one iteration."""
    x, y = (Side.A, Side.B) if Side(side) is Side.A else (Side.B, Side.A)
    if moment == "m1":
        return [(BoxKind.U, (qubit_index(x, 1), qubit_index(x, 2))),
                (BoxKind.V, (qubit_index(y, 1), qubit_index(y, 2)))]
    return [(BoxKind.U, (qubit_index(x, 1), qubit_index(x, 4))),
            (BoxKind.U, (qubit_index(x, 2), qubit_index(x, 3))),
            (BoxKind.V, (qubit_index(y, 1), qubit_index(y, 2))),
            (BoxKind.V, (qubit_index(y, 3), qubit_index(y, 4)))]


@lru_cache(maxsize=None)
def _joint_layout(moment, side, eta):
    """einsum subscripts, stacked effect tensor and value products."""
    layout = _box_layout(moment, side)
    n_copies = 2 if moment == "m1" else 4
    effects = np.stack(box_effects(DetectorModel(eta))).reshape(3, 2, 2, 2, 2)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    # row and column index letters of every qubit
    row = [next(letters) for _ in range(2 * n_copies)]
    col = [next(letters) for _ in range(2 * n_copies)]
    outs = [next(letters) for _ in layout]
    # Tr[O R]: the column index of O is the row index of R and vice versa
    terms = [row[2 * k] + row[2 * k + 1] + col[2 * k] + col[2 * k + 1] for k in range(n_copies)]
    terms += [o + col[q1] + col[q2] + row[q1] + row[q2] for o, (_, (q1, q2)) in zip(outs, layout)]
    subscripts = ",".join(terms) + "->" + "".join(outs)
    products = np.array([math.prod(outcome_value(OUTCOMES[o], kind) for o, (kind, _) in zip(combo, layout))
                         for combo in product(range(3), repeat=len(layout))], dtype=np.int64)
    return subscripts, effects, products, n_copies


def joint_outcome_distribution(rho, moment, side, eta):
    """Probabilities of all joint box outcomes and their value products.

    Returns ``(probs, products)`` over ``3 ** n_boxes`` classes ordered by
    ``itertools.product`` over (C14, C23, other) per box.
    """
    rho = validate_state(rho)
    subscripts, effects, products, n_copies = _joint_layout(moment, Side(side).value, float(eta))
    t = rho.reshape(2, 2, 2, 2)
    n_boxes = len(subscripts.split("->")[1])
    probs = np.einsum(subscripts, *([t] * n_copies), *([effects] * n_boxes), optimize=True)
    probs = np.real(probs).ravel()
    probs = np.where(probs < 0, 0.0, probs)
    return probs / probs.sum(), products


def _sample_block(args):
    probs, seed, stream, block, size, delay_p = args
    rng = substream(seed, stream, block)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    classes = np.searchsorted(cdf, rng.random(size), side="right")
    counts = np.bincount(classes, minlength=len(probs)).astype(np.int64)
    failed = 0
    if delay_p is not None:
        # two probabilistic delays per round; a round survives only if both succeed
        ok = (rng.random(size) < delay_p) & (rng.random(size) < delay_p)
        counts = np.bincount(classes[ok], minlength=len(probs)).astype(np.int64)
        failed = int(size - ok.sum())
    return counts, failed


def _simulate_counts(probs, n, seed, stream, delay_p=None, workers=1):
    blocks = [(probs, seed, stream, b, min(BLOCK_SIZE, n - b * BLOCK_SIZE), delay_p)
              for b in range(-(-n // BLOCK_SIZE))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sample_block, blocks))
    else:
        results = [_sample_block(b) for b in blocks]
    counts = sum(r[0] for r in results)
    failed = sum(r[1] for r in results)
    return counts, failed


def ratio_estimate(counts, products, success_product):
    """Return ``(value, n_success, std_error)`` for the ratio estimator.

    Standard error from the linearised variance of
    ``sum(a) / sum(delta)``.
    """
    success = products == success_product
    n_success = int(counts[success].sum())
    if n_success == 0:
        return math.nan, 0, math.nan
    value = float(np.dot(counts, products) / n_success)
    resid = products - value * success
    # rounds lost in a delay carry a = 0 and delta = 0, so they drop out here
    var = float(np.dot(counts, resid ** 2))
    return value, n_success, math.sqrt(var) / n_success


def _estimate(rho, cfg, moment, side, workers):
    probs, products = joint_outcome_distribution(rho, moment, side, cfg.eta)
    delay_p = None
    stream = _STREAM_M1
    if moment == "m2":
        stream = _STREAM_M2
        if cfg.delay_scheme is DelayScheme.PROBABILISTIC:
            delay_p = cfg.delay_success_p
    counts, _ = _simulate_counts(probs, cfg.iterations, cfg.seed, stream, delay_p, workers)
    success_product = 2 if moment == "m1" else 4
    value, n_success, se = ratio_estimate(counts, products, success_product)
    if n_success == 0:
        raise InsufficientStatistics(
            f"no all-identity coincidences for {moment.upper()} in {cfg.iterations} iterations")
    return MomentEstimate(moment.upper(), value, n_success, cfg.iterations, se,
                          counts, products, success_product)


def estimate_m1(rho, cfg, side=Side.A, workers=1):
    """Simulate ``cfg.iterations`` two-copy rounds and estimate M1."""
    return _estimate(rho, cfg, "m1", side, workers)


def estimate_m2(rho, cfg, side=Side.A, workers=1):
    """Simulate ``cfg.iterations`` four-copy rounds and estimate M2.

    Boxes pair the copies as U(X1, X4), U(X2, X3), V(Y1, Y2), V(Y3, Y4).
    Under the probabilistic scheme a round is kept only when both delays
    succeed (probability ``delay_success_p ** 2``).
    """
    return _estimate(rho, cfg, "m2", side, workers)


@dataclass(frozen=True)
class QEstimate:
    value: float
    std_error: float
    m1: MomentEstimate
    m2: MomentEstimate
    n_bootstrap: int

    def to_dict(self, config=None):
        out = {"q": self.value, "q_std_error": self.std_error, "n_bootstrap": self.n_bootstrap,
               "m1": self.m1.to_dict(), "m2": self.m2.to_dict()}
        if config is not None:
            out["wall_config"] = config.to_dict()
        return out


def _q_value(m1, m2):
    return q_indicator(Moments(m1, m2), clamp=True)


def _resample(rng, est):
    # iid bootstrap over iterations is a multinomial draw on the outcome counts
    n = int(est.counts.sum())
    if n == 0:
        return math.nan
    counts = rng.multinomial(n, est.counts / n)
    value, n_success, _ = ratio_estimate(counts, est.products, est.success_product)
    return value if n_success else math.nan


def estimate_q(rho, cfg, side=Side.A, n_bootstrap=BOOTSTRAP_RESAMPLES, workers=1):
    """Q from simulated M1 and M2 with a bootstrap error bar.

    A negative radicand in the estimated moments is clamped to zero.
    """
    if n_bootstrap < 200:
        raise ValueError("use at least 200 bootstrap resamples")
    m1 = estimate_m1(rho, cfg, side, workers)
    m2 = estimate_m2(rho, cfg, side, workers)
    rng = substream(cfg.seed, _STREAM_BOOTSTRAP)
    boots = []
    for _ in range(n_bootstrap):
        a, b = _resample(rng, m1), _resample(rng, m2)
        if not (math.isnan(a) or math.isnan(b)):
            boots.append(_q_value(a, b))
    se = float(np.std(boots, ddof=1)) if len(boots) > 1 else math.nan
    return QEstimate(_q_value(m1.value, m2.value), se, m1, m2, n_bootstrap)


@dataclass(frozen=True)
class ThroughputReport:
    """Successful-event rates and the time to collect ``n_target`` of each.

    ``rate_m2_hz`` is the rate for the configured delay scheme. Times in
    seconds and in repetition periods tau.
    """

    eta: float
    rate_m1_hz: float
    rate_m2_hz: float
    rate_m2_prob_hz: float
    rate_m2_det_hz: float
    time_m1_s: float
    time_m2_s: float
    time_for_target_s: float
    time_for_target_tau: float
    n_target: int
    strict_delay_factor: bool

    def to_dict(self):
        return asdict(self)


def success_probabilities(cfg):
    """Per-pulse success probabilities ``(p1, p2_prob, p2_det)``.

    ``R = eta^2 / 2`` is the success rate of one box, ``p1 = R^2`` times
    the two-pair probability. By default ``p2 = p1^2`` times the pulse-pick
    factor, which reproduces the commonly quoted 15.8 kHz / 6.25 Hz at
    eta = 0.75 and 20 MHz. ``strict_delay_factor`` multiplies ``p2`` by the
    delay success ``p^2`` as well. The deterministic scheme is ``2 / p^2``
    times more efficient than the probabilistic one.
    """
    big_r = cfg.eta ** 2 / 2
    p1 = big_r ** 2 * cfg.two_pair_prob
    p = cfg.delay_success_p
    p2_prob = p1 ** 2 * cfg.pulse_pick_factor
    if cfg.strict_delay_factor:
        p2_prob *= p ** 2
    p2_det = p2_prob * 2 / p ** 2 if p > 0 else math.inf
    return p1, p2_prob, p2_det


def throughput(cfg, n_target=1000):
    rep_rate = 1e9 / cfg.tau_ns
    p1, p2_prob, p2_det = success_probabilities(cfg)
    rate_m1 = p1 * rep_rate
    rate_prob, rate_det = p2_prob * rep_rate, p2_det * rep_rate
    rate_m2 = rate_det if cfg.delay_scheme is DelayScheme.DETERMINISTIC else rate_prob

    def t(rate):
        return n_target / rate if rate > 0 else math.inf

    t1, t2 = t(rate_m1), t(rate_m2)
    total = t1 + t2
    return ThroughputReport(cfg.eta, rate_m1, rate_m2, rate_prob, rate_det, t1, t2, total,
                            total * rep_rate, n_target, cfg.strict_delay_factor)


THROUGHPUT_COLUMNS = ("eta", "rate_m1_hz", "rate_m2_hz_prob", "rate_m2_hz_det",
                      "t_units_tau_m1", "t_units_tau_m2")


def throughput_curve(cfg, etas, n_target=1000):
    """Rows for the rate-versus-efficiency table, one per ``eta``.

    ``t_units_tau_m2`` follows ``cfg.delay_scheme``.
    """
    rows = []
    for eta in etas:
        c = ExperimentConfig(**{**cfg.to_dict(), "eta": float(eta)})
        rep = throughput(c, n_target)
        rep_rate = 1e9 / c.tau_ns
        rows.append({"eta": float(eta), "rate_m1_hz": rep.rate_m1_hz,
                     "rate_m2_hz_prob": rep.rate_m2_prob_hz, "rate_m2_hz_det": rep.rate_m2_det_hz,
                     "t_units_tau_m1": rep.time_m1_s * rep_rate,
                     "t_units_tau_m2": rep.time_m2_s * rep_rate})
    return rows
