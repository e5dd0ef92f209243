"""Two-qubit density matrices: validation, Bloch form, fidelity, PPT and
random ensembles.

All matrices use the basis order |HH>, |HV>, |VH>, |VV> (equivalently
|00>, |01>, |10>, |11> with H = 0 = spin up).
"""

from dataclasses import dataclass
from enum import Enum
import json

import numpy as np

from .errors import InvalidState, NotAState, SamplingExhausted
from .seeding import seed_sequence, substream

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

KET_H = np.array([1, 0], dtype=complex)
KET_V = np.array([0, 1], dtype=complex)


def ket_to_dm(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def singlet():
    """Projector onto (|HV> - |VH>)/sqrt(2)."""
    return ket_to_dm([0, 1, -1, 0])


def bell_states():
    """Dict of the four Bell projectors keyed by name."""
    return {
        "phi+": ket_to_dm([1, 0, 0, 1]),
        "phi-": ket_to_dm([1, 0, 0, -1]),
        "psi+": ket_to_dm([0, 1, 1, 0]),
        "psi-": ket_to_dm([0, 1, -1, 0]),
    }


def maximally_mixed():
    return np.eye(4, dtype=complex) / 4


def werner(p):
    """p |Psi-><Psi-| + (1 - p) I/4."""
    return p * singlet() + (1 - p) * maximally_mixed()


def product_state(rho_a, rho_b):
    return np.kron(rho_a, rho_b)


def classical_quantum(probs, basis, rhos_b):
    """sum_k p_k |k><k| (x) rho_k with ``basis`` an orthonormal qubit basis.

    ``basis`` is a 2x2 unitary whose columns are the kets |k>.
    """
    out = np.zeros((4, 4), dtype=complex)
    for p, k, rho_b in zip(probs, np.asarray(basis, dtype=complex).T, rhos_b):
        out += p * np.kron(np.outer(k, k.conj()), rho_b)
    return out


def validate_state(rho):
    """Return ``rho`` as a complex 4x4 array or raise :class:`InvalidState`.

    Checks are Hermiticity (max |rho - rho^dag| <= 1e-12), unit trace
    (within 1e-12) and positivity (smallest eigenvalue >= -1e-10).
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidState(f"expected a 4x4 matrix, got shape {rho.shape}", "shape")
    if not np.all(np.isfinite(rho)):
        raise InvalidState("matrix has non-finite entries", "finite")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL:
        raise InvalidState(f"not Hermitian: max |rho - rho^dag| = {herm:.3g}", "hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > TRACE_TOL:
        raise InvalidState(f"trace is {tr.real:.15g}, expected 1", "trace")
    lam = np.linalg.eigvalsh(rho)[0]
    if lam < -PSD_TOL:
        raise InvalidState(f"not positive semidefinite: min eigenvalue {lam:.3g}", "positive")
    return rho


@dataclass(frozen=True, eq=False)
class BlochForm:
    """Local Bloch vectors ``x`` (side A), ``y`` (side B) and correlations ``T``."""

    x: np.ndarray
    y: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(3))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=float).reshape(3, 3))


def bloch_decompose(rho):
    """Pauli coefficients of a two-qubit state.

    ``x_i = Tr[rho (s_i x I)]``, ``y_i = Tr[rho (I x s_i)]`` and
    ``T_ij = Tr[rho (s_i x s_j)]``.
    """
    rho = validate_state(rho)
    t = rho.reshape(2, 2, 2, 2)
    # Tr[rho (A x B)] = sum rho[a b, a' b'] A[a', a] B[b', b]
    rho_a = np.einsum("abcb->ac", t)
    rho_b = np.einsum("abad->bd", t)
    x = np.array([np.trace(rho_a @ s) for s in PAULIS])
    y = np.array([np.trace(rho_b @ s) for s in PAULIS])
    T = np.einsum("abcd,ica,jdb->ij", t, np.array(PAULIS), np.array(PAULIS))
    coeffs = np.concatenate([x, y, T.ravel()])
    residue = np.max(np.abs(coeffs.imag))
    if residue > 1e-12:
        raise InvalidState(f"Pauli coefficients have imaginary part {residue:.3g}", "hermitian")
    return BlochForm(x.real, y.real, T.real)


def bloch_compose(b):
    """Inverse of :func:`bloch_decompose`.

    Raises :class:`NotAState` when the resulting matrix has an eigenvalue
    below -1e-10.
    """
    x, y, T = b.x, b.y, b.T
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(T))):
        raise NotAState("Bloch data has non-finite entries", "finite")
    rho = np.kron(I2, I2).astype(complex)
    for i, s in enumerate(PAULIS):
        rho += x[i] * np.kron(s, I2) + y[i] * np.kron(I2, s)
        for j, s2 in enumerate(PAULIS):
            rho += T[i, j] * np.kron(s, s2)
    rho = rho / 4
    rho = (rho + rho.conj().T) / 2
    lam = np.linalg.eigvalsh(rho)[0]
    if lam < -PSD_TOL:
        raise NotAState(f"Bloch data gives a non-positive matrix (min eigenvalue {lam:.3g})", "positive")
    return rho


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    w = np.where(w < 0, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(a, b):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``, clipped to [0, 1]."""
    return _fidelity(validate_state(a), validate_state(b))


def _fidelity(a, b):
    sa = _psd_sqrt(a)
    m = sa @ b @ sa
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    w = np.where(w < 0, 0.0, w)
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(f, 0.0), 1.0)


def partial_transpose(rho):
    """Transpose over subsystem B."""
    return np.asarray(rho).reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def ppt_min_eigenvalue(rho):
    """Smallest eigenvalue of the partial transpose; negative iff entangled."""
    rho = validate_state(rho)
    return float(np.linalg.eigvalsh(partial_transpose(rho))[0])


def purity(rho):
    return float(np.real(np.trace(rho @ rho)))


class Measure(str, Enum):
    HILBERT_SCHMIDT = "hs"
    PURE_HAAR = "haar"


@dataclass(frozen=True)
class RandomEnsembleSpec:
    measure: Measure = Measure.HILBERT_SCHMIDT
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        object.__setattr__(self, "measure", Measure(self.measure))


def random_state(rng, measure=Measure.HILBERT_SCHMIDT):
    """Draw one state from ``rng``.

    Hilbert-Schmidt states are ``G G^dag / Tr(G G^dag)`` with ``G`` a 4x4
    complex Ginibre matrix; pure states are normalised complex Gaussian
    vectors.
    """
    measure = Measure(measure)
    if measure is Measure.HILBERT_SCHMIDT:
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = g @ g.conj().T
    else:
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        rho = np.outer(psi, psi.conj())
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_states(spec):
    """Generate ``spec.count`` states; state ``i`` uses substream ``(seed, i)``."""
    return [random_state(substream(spec.seed, i), spec.measure) for i in range(spec.count)]


def random_local_unitary(rng):
    """Haar-random U1 (x) U2."""
    def haar2():
        z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        q, r = np.linalg.qr(z)
        d = np.diag(r)
        return q * (d / np.abs(d))
    return np.kron(haar2(), haar2())


GRID_POINTS = 33


def random_state_pair_with_fidelity(seed, f_min, max_attempts=100, refinements=8):
    """Draw ``(rho_l, rho_r)`` with ``f_min <= F(rho_l, rho_r) < 1``.

    ``rho_l`` is Hilbert-Schmidt distributed. A second Hilbert-Schmidt state
    ``sigma`` and a target fidelity ``t`` uniform on ``[f_min, 1)`` are drawn,
    and ``rho_r = (1 - eps) rho_l + eps sigma`` with ``eps`` the largest
    mixing weight (to about ``32**-refinements``) that keeps ``F >= t``. If
    even ``eps = 1`` keeps ``F >= t``, ``rho_r = sigma``.

    ``seed`` may be an int or a ``SeedSequence``; attempt ``k`` uses the
    substream ``(seed, k)``.
    """
    if not 0 < f_min < 1:
        raise ValueError("f_min must lie strictly between 0 and 1")
    for attempt in range(max_attempts):
        rng = substream(seed_sequence(seed), attempt)
        rho_l = random_state(rng)
        sigma = random_state(rng)
        target = f_min + rng.random() * (1 - f_min)

        def mix(eps):
            return (1 - eps) * rho_l + eps * sigma

        # F(rho_l, mix(eps)) via one eigvalsh per step, sqrt(rho_l) fixed
        sa = _psd_sqrt(rho_l)
        m_l, m_s = sa @ rho_l @ sa, sa @ sigma @ sa

        def fid(eps):
            m = (1 - eps)[:, None, None] * m_l + eps[:, None, None] * m_s
            w = np.linalg.eigvalsh((m + np.swapaxes(m.conj(), 1, 2)) / 2)
            return np.sum(np.sqrt(np.where(w < 0, 0.0, w)), axis=1) ** 2

        if fid(np.ones(1))[0] >= target:
            rho_r = sigma
        else:
            # F is non-increasing in eps: refine the bracket [lo, hi] on a grid
            lo, hi = 0.0, 1.0
            for _ in range(refinements):
                grid = np.linspace(lo, hi, GRID_POINTS)
                ok = np.nonzero(fid(grid) >= target)[0]
                last = ok[-1] if len(ok) else 0
                lo, hi = grid[last], grid[min(last + 1, GRID_POINTS - 1)]
            rho_r = mix(lo)
        f = fidelity(rho_l, rho_r)
        if f_min <= f < 1:
            return rho_l, rho_r
    raise SamplingExhausted(f"no pair with fidelity in [{f_min}, 1) after {max_attempts} attempts")


class StateFileError(ValueError):
    """State file is not valid JSON or does not follow the schema."""


def state_from_dict(data):
    """Build a density matrix from the JSON schema.

    Exactly one of ``{"rho_re", "rho_im"}`` (row-major 4x4 lists) or
    ``{"bloch": {"x", "y", "T"}}`` must be present.
    """
    if not isinstance(data, dict):
        raise StateFileError("state file must contain a JSON object")
    has_rho = "rho_re" in data or "rho_im" in data
    has_bloch = "bloch" in data
    if has_rho == has_bloch:
        raise StateFileError("exactly one of 'rho_re'/'rho_im' or 'bloch' must be present")
    try:
        if has_rho:
            re = np.array(data["rho_re"], dtype=float)
            im = np.array(data.get("rho_im", np.zeros((4, 4))), dtype=float)
            if re.shape != (4, 4) or im.shape != (4, 4):
                raise StateFileError("rho_re and rho_im must be 4x4")
            return validate_state(re + 1j * im)
        b = data["bloch"]
        form = BlochForm(np.array(b["x"], dtype=float), np.array(b["y"], dtype=float),
                         np.array(b["T"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (InvalidState, StateFileError)):
            raise
        raise StateFileError(f"malformed state data: {exc}") from exc
    return validate_state(bloch_compose(form))


def state_to_dict(rho):
    rho = np.asarray(rho, dtype=complex)
    return {"rho_re": rho.real.tolist(), "rho_im": rho.imag.tolist()}


def load_state(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"{path}: invalid JSON: {exc}") from exc
    return state_from_dict(data)
