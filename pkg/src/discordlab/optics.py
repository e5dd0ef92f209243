"""Fock-space model of the three-beam-splitter U/V box.

Input ports are c, m, n, d. The signal photons enter m and n; c and d
carry vacuum. BS1 mixes (c, m): one output goes to detector D1, the other
to the central splitter. BS2 mixes (n, d) the same way towards D4. The
central splitter mixes the two inner arms onto D2 and D3.

Coincidence D1&D4 realises ``(eta^2/4) I`` and D2&D3 realises
``(eta^2/4) P-`` on the polarisation state of the (m, n) photon pair.
"""

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product
from math import comb, factorial, sqrt

import numpy as np

from .errors import UnknownMode
from .states import validate_state, PAULIS, I2

POLS = ("H", "V")
BOX_MODES = ("c", "m", "n", "d")
# (mode_a, mode_b) order for each splitter: first output stays in mode_a
BOX_SPLITTERS = (("c", "m"), ("n", "d"), ("m", "n"))
# after the three splitters the spatial slots hold the detector outputs
DETECTOR_OF_MODE = {"c": 1, "m": 2, "n": 3, "d": 4}


class PolarizedFockState:
    """Sparse amplitudes over occupations of (spatial mode, polarisation).

    An occupation is a tuple of length ``2 * len(modes)`` ordered
    ``(m0_H, m0_V, m1_H, m1_V, ...)``.
    """

    def __init__(self, modes, amplitudes=None):
        self.modes = tuple(modes)
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("mode names must be distinct")
        self.amplitudes = {}
        for occ, amp in (amplitudes or {}).items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != 2 * len(self.modes) or min(occ) < 0:
                raise ValueError(f"bad occupation {occ}")
            if amp != 0:
                self.amplitudes[occ] = complex(amp)

    @classmethod
    def from_creators(cls, modes, terms):
        """Build ``sum coef * prod a^dag_{mode,pol} |0>``.

        ``terms`` is an iterable of ``(coef, [(mode, pol), ...])``; the
        result is not renormalised.
        """
        modes = tuple(modes)
        amps = defaultdict(complex)
        for coef, creators in terms:
            occ = [0] * (2 * len(modes))
            for mode, pol in creators:
                occ[_slot(modes, mode, pol)] += 1
            # prod (a^dag)^n |0> = prod sqrt(n!) |n>
            amps[tuple(occ)] += coef * sqrt(np.prod([factorial(n) for n in occ]))
        return cls(modes, amps)

    def slot(self, mode, pol):
        return _slot(self.modes, mode, pol)

    def norm(self):
        return sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def photon_numbers(self):
        return {sum(occ) for occ in self.amplitudes}

    def mode_counts(self, occ):
        """Total photons per spatial mode for an occupation tuple."""
        return {m: occ[2 * i] + occ[2 * i + 1] for i, m in enumerate(self.modes)}

    def inner(self, other):
        """``<self|other>``."""
        return sum(a.conjugate() * other.amplitudes.get(occ, 0) for occ, a in self.amplitudes.items())

    def allclose(self, other, atol=1e-12, up_to_phase=False):
        phase = 1.0
        if up_to_phase:
            ov = self.inner(other)
            if abs(ov) > 0:
                phase = ov / abs(ov)
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(phase * self.amplitudes.get(k, 0) - other.amplitudes.get(k, 0)) <= atol
                   for k in keys)

    def __repr__(self):
        return f"PolarizedFockState(modes={self.modes}, amplitudes={self.amplitudes})"


def _slot(modes, mode, pol):
    try:
        return 2 * modes.index(mode) + POLS.index(pol)
    except ValueError:
        raise UnknownMode(f"unknown mode/polarisation {mode!r}/{pol!r}") from None


def _split_powers(na, nb):
    """Expand ``(a+b)^na (a-b)^nb / sqrt(2)^(na+nb)`` into ``{(ka, kb): coef}``."""
    out = defaultdict(float)
    scale = sqrt(2) ** -(na + nb)
    for i in range(na + 1):
        for j in range(nb + 1):
            coef = comb(na, i) * comb(nb, j) * (-1) ** (nb - j) * scale
            out[(i + j, na + nb - i - j)] += coef
    return out


def apply_beam_splitter(state, mode_a, mode_b):
    """50:50 splitter acting identically on H and V.

    Creation operators map as ``a -> (a + b)/sqrt(2)``,
    ``b -> (a - b)/sqrt(2)``. The transformation is real, symmetric and
    its own inverse.
    """
    if mode_a == mode_b:
        raise UnknownMode("beam splitter needs two distinct modes")
    slots = [(state.slot(mode_a, p), state.slot(mode_b, p)) for p in POLS]
    out = defaultdict(complex)
    for occ, amp in state.amplitudes.items():
        # per polarisation: list of ((ka, kb), amplitude factor)
        branches = []
        for sa, sb in slots:
            na, nb = occ[sa], occ[sb]
            norm_in = sqrt(factorial(na) * factorial(nb))
            branches.append([((ka, kb), c * sqrt(factorial(ka) * factorial(kb)) / norm_in)
                             for (ka, kb), c in _split_powers(na, nb).items() if c != 0])
        for combo in product(*branches):
            new = list(occ)
            coef = amp
            for (sa, sb), ((ka, kb), c) in zip(slots, combo):
                new[sa], new[sb] = ka, kb
                coef *= c
            out[tuple(new)] += coef
    return PolarizedFockState(state.modes, {k: v for k, v in out.items() if abs(v) > 1e-15})


class Outcome(str, Enum):
    C14 = "C14"
    C23 = "C23"
    OTHER = "other"


OUTCOMES = (Outcome.C14, Outcome.C23, Outcome.OTHER)


@dataclass(frozen=True)
class DetectorModel:
    """Bucket detectors with quantum efficiency ``eta`` and no dark counts."""

    eta: float = 1.0

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def r(self):
        """Success factor of either coincidence, ``eta^2 / 4``."""
        return self.eta ** 2 / 4


@dataclass(frozen=True)
class BoxOutcomeDistribution:
    p14: float
    p23: float
    p_other: float


def box_input_state(i, j):
    """One photon with polarisation ``i`` in m and one with ``j`` in n."""
    return PolarizedFockState.from_creators(BOX_MODES, [(1.0, [("m", POLS[i]), ("n", POLS[j])])])


def run_box(state):
    """Propagate a Fock state on (c, m, n, d) through the three splitters."""
    for a, b in BOX_SPLITTERS:
        state = apply_beam_splitter(state, a, b)
    return state


@lru_cache(maxsize=None)
def _box_transfer():
    """Output occupations and the 4-column map from polarisation kets.

    Column ``2*i + j`` holds the output amplitudes for input ``|ij>``.
    """
    outputs = []
    for i in range(2):
        for j in range(2):
            inp = box_input_state(i, j)
            out = run_box(inp)
            # two photons in, two photons out: nothing emerges from the vacuum ports
            assert out.photon_numbers() == {2}, out.photon_numbers()
            assert abs(out.norm() - 1) < 1e-12
            outputs.append(out)
    occs = sorted(set().union(*(o.amplitudes for o in outputs)))
    a = np.array([[o.amplitudes.get(f, 0) for o in outputs] for f in occs], dtype=complex)
    return tuple(occs), a


def _click_weights(eta):
    """Probability of each outcome given each output occupation."""
    occs, _ = _box_transfer()
    w = np.zeros((3, len(occs)))
    miss = 1 - eta
    for idx, occ in enumerate(occs):
        counts = {DETECTOR_OF_MODE[m]: occ[2 * i] + occ[2 * i + 1] for i, m in enumerate(BOX_MODES)}
        occupied = [d for d, n in counts.items() if n > 0]
        # thinning: enumerate which occupied detectors fire
        for fires in product((False, True), repeat=len(occupied)):
            p = 1.0
            clicked = set()
            for det, fire in zip(occupied, fires):
                p_click = 1 - miss ** counts[det]
                p *= p_click if fire else 1 - p_click
                if fire:
                    clicked.add(det)
            if clicked == {1, 4}:
                w[0, idx] += p
            elif clicked == {2, 3}:
                w[1, idx] += p
            else:
                w[2, idx] += p
    return w


def box_effects(det):
    """POVM elements ``(E14, E23, E_other)`` of the box on the (m, n) qubits.

    ``p(outcome) = Tr[E rho]``. Computed directly from the Fock transfer map
    as ``A^dag diag(w) A``.
    """
    _, a = _box_transfer()
    w = _click_weights(det.eta)
    effects = []
    for row in w:
        e = a.conj().T @ (row[:, None] * a)
        effects.append((e + e.conj().T) / 2)
    return tuple(effects)


def uv_box_distribution(rho_mn, det):
    """Outcome probabilities for the polarisation state ``rho_mn`` of (m, n)."""
    rho_mn = validate_state(rho_mn)
    occs, a = _box_transfer()
    p_occ = np.real(np.einsum("fi,ij,fj->f", a, rho_mn, a.conj()))
    w = _click_weights(det.eta)
    p14, p23, p_other = (float(x) for x in w @ p_occ)
    return BoxOutcomeDistribution(p14, p23, p_other)


def tomography_inputs():
    """16 product states from {H, V, D, R} on each qubit."""
    kets = [np.array([1, 0]), np.array([0, 1]),
            np.array([1, 1]) / sqrt(2), np.array([1, 1j]) / sqrt(2)]
    states = []
    for k1 in kets:
        for k2 in kets:
            psi = np.kron(k1, k2).astype(complex)
            states.append(np.outer(psi, psi.conj()))
    return states


def reconstruct_coincidence_operators(det):
    """Recover the C14 and C23 POVM elements by linear inversion.

    The box is simulated on a tomographically complete set of 16 inputs and
    ``E = sum_ab c_ab s_a (x) s_b / 4`` is solved for from
    ``p_k = Tr[E rho_k]``.
    """
    basis = [np.kron(s1, s2) for s1 in (I2,) + PAULIS for s2 in (I2,) + PAULIS]
    inputs = tomography_inputs()
    design = np.array([[np.real(np.trace(rho @ b)) / 4 for b in basis] for rho in inputs])
    dists = [uv_box_distribution(rho, det) for rho in inputs]
    ops = []
    for probs in ([d.p14 for d in dists], [d.p23 for d in dists]):
        coeffs = np.linalg.solve(design, np.array(probs))
        ops.append(sum(c * b for c, b in zip(coeffs, basis)) / 4)
    return ops[0], ops[1]


class BoxKind(str, Enum):
    U = "U"
    V = "V"


def outcome_value(outcome, kind):
    """Number assigned to a box outcome: -4 for C23, 1 (U) or 2 (V) for C14, else 0."""
    if outcome is Outcome.C23:
        return -4
    if outcome is Outcome.C14:
        return 1 if BoxKind(kind) is BoxKind.U else 2
    return 0


def sample_uv_outcome(rng, rho_mn, det, kind, size=None):
    """Shots of a single box: -4 (C23), 1 or 2 (C14, for U or V), else 0.

    Returns an int, or an int array of length ``size`` when given.
    """
    dist = uv_box_distribution(rho_mn, det)
    u = rng.random(size)
    values = np.where(u < dist.p23, -4,
                      np.where(u < dist.p23 + dist.p14, outcome_value(Outcome.C14, kind), 0))
    return int(values) if size is None else values.astype(np.int64)
