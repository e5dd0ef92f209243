"""Geometric discord and moment-based discord indicators.

Two independent routes to the moments ``M1 = Tr K`` and ``M2 = Tr K^2``:

* spectral, from the 3x3 matrix ``K = x x^T + T T^T`` (side A) or
  ``y y^T + T^T T`` (side B);
* operator traces over two and four copies of the state, using
  ``U = I - 4 P-`` and ``V = U + I`` built from the singlet projector.

Copies are ordered A1 B1 A2 B2 (A3 B3 A4 B4): qubit ``A_k`` sits at
position ``2(k-1)`` and ``B_k`` at ``2k - 1``.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import math

import numpy as np

from .errors import InvalidMoments
from .states import bloch_decompose, validate_state, singlet

RADICAND_TOL = 1e-10


class Side(str, Enum):
    A = "A"
    B = "B"


def jacobi_eigenvalues(a, tol=1e-14, max_sweeps=64):
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the Frobenius norm of the off-diagonal part is at most
    ``tol``. Returned in descending order.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    a = ((a + a.T) / 2).tolist()
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[p][q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                a[p][q] = a[q][p] = 0.0
    return np.array(sorted((a[i][i] for i in range(n)), reverse=True))


@dataclass(frozen=True, eq=False)
class CorrelationMatrixK:
    k: np.ndarray
    side: Side

    def eigenvalues(self):
        return jacobi_eigenvalues(self.k)


def k_matrix(b, side=Side.A):
    """``x x^T + T T^T`` for side A, ``y y^T + T^T T`` for side B.

    ``T[i, j]`` pairs sigma_i on A with sigma_j on B, so side B uses the
    transpose; this makes K_B of a state equal K_A of its A/B swap.
    """
    side = Side(side)
    if side is Side.A:
        return CorrelationMatrixK(np.outer(b.x, b.x) + b.T @ b.T.T, side)
    return CorrelationMatrixK(np.outer(b.y, b.y) + b.T.T @ b.T, side)


def geometric_discord(k):
    """``-(lambda_max - sum(lambda)) / 4``, floored at 0."""
    lam = k.eigenvalues()
    d = -0.25 * (lam[0] - lam.sum())
    return float(d) if d > 0 else 0.0


@dataclass(frozen=True)
class Moments:
    m1: float
    m2: float
    side: Side = Side.A

    @property
    def radicand(self):
        """``6 m2 - 2 m1^2``, the argument of the square root in Q."""
        return 6 * self.m2 - 2 * self.m1 ** 2

    def check(self, tol=RADICAND_TOL):
        """True when the moments can come from three nonnegative eigenvalues."""
        return (self.m1 >= -tol and self.m2 >= -tol
                and self.m2 <= self.m1 ** 2 + tol
                and 3 * self.m2 >= self.m1 ** 2 - tol)


def moments_from_k(k):
    lam = k.eigenvalues()
    return Moments(float(lam.sum()), float(np.sum(lam ** 2)), k.side)


def q_indicator(m, clamp=False):
    """``(2 m1 - sqrt(6 m2 - 2 m1^2)) / 12``.

    A radicand in ``[-1e-10, 0)`` is treated as zero and the result is
    floored at zero. With ``clamp`` true (moments of mismatched sources,
    which need not come from a spectrum) any negative radicand is set to
    zero and the raw value is returned unfloored.
    """
    rad = m.radicand
    if rad < 0:
        if rad < -RADICAND_TOL and not clamp:
            raise InvalidMoments(f"6*m2 - 2*m1^2 = {rad:.3g} < 0")
        rad = 0.0
    q = (2 * m.m1 - math.sqrt(rad)) / 12
    if clamp:
        return q
    return q if q > 0 else 0.0


def v_indicator(m):
    """``sqrt(m2 - m1^2)``, or ``None`` when the radicand is negative.

    For any nonnegative spectrum ``m2 <= m1^2``, so the value is only
    defined when ``K`` has at most one nonzero eigenvalue.
    """
    rad = m.m2 - m.m1 ** 2
    if rad < 0:
        if rad >= -RADICAND_TOL:
            return 0.0
        return None
    return math.sqrt(rad)


@dataclass(frozen=True, eq=False)
class MultiCopyOperators:
    singlet_projector: np.ndarray
    u_op: np.ndarray
    v_op: np.ndarray


def build_multicopy_operators():
    p = singlet().real
    u = np.eye(4) - 4 * p
    return MultiCopyOperators(p, u, u + np.eye(4))


def qubit_index(subsystem, copy):
    """Position of qubit ``subsystem`` (``"A"``/``"B"``) of copy ``copy`` (1-based)."""
    return 2 * (copy - 1) + (0 if Side(subsystem) is Side.A else 1)


def embed_operator(factors, n_qubits):
    """Tensor product of two-qubit operators placed on arbitrary qubits.

    ``factors`` is a sequence of ``(op, (q1, q2))``; together the pairs must
    cover each of the ``n_qubits`` positions exactly once. The product is
    first formed in factor order and then its tensor legs are permuted into
    ascending qubit order.
    """
    order = [q for _, qs in factors for q in qs]
    if sorted(order) != list(range(n_qubits)):
        raise ValueError(f"qubit pairs {order} do not cover 0..{n_qubits - 1} exactly once")
    big = np.ones((1, 1))
    for op, _ in factors:
        big = np.kron(big, op)
    legs = big.reshape([2] * (2 * n_qubits))
    perm = [order.index(q) for q in range(n_qubits)]
    legs = legs.transpose(perm + [n_qubits + p for p in perm])
    return legs.reshape(2 ** n_qubits, 2 ** n_qubits)


def _roles(side):
    # side A: U on the A qubits, V on the B qubits; side B swaps them
    ops = build_multicopy_operators()
    if Side(side) is Side.A:
        return ops.u_op, ops.v_op, Side.A, Side.B
    return ops.u_op, ops.v_op, Side.B, Side.A


@lru_cache(maxsize=None)
def m1_operator(side=Side.A):
    """``U_{X1X2} (x) V_{Y1Y2}`` on two copies, X the measured side."""
    u, v, x, y = _roles(side)
    op = embed_operator([(u, (qubit_index(x, 1), qubit_index(x, 2))),
                         (v, (qubit_index(y, 1), qubit_index(y, 2)))], 4)
    op.setflags(write=False)
    return op


@lru_cache(maxsize=None)
def m2_operator(side=Side.A):
    """``U_{X1X4} (x) U_{X2X3} (x) V_{Y1Y2} (x) V_{Y3Y4}`` on four copies."""
    u, v, x, y = _roles(side)
    op = embed_operator([(u, (qubit_index(x, 1), qubit_index(x, 4))),
                         (u, (qubit_index(x, 2), qubit_index(x, 3))),
                         (v, (qubit_index(y, 1), qubit_index(y, 2))),
                         (v, (qubit_index(y, 3), qubit_index(y, 4)))], 8)
    op.setflags(write=False)
    return op


def multicopy_trace(op, states):
    """``Tr[op (states[0] (x) states[1] (x) ...)]`` as a real number.

    Copies are traced out one at a time from the left, which never forms
    the full product state.
    """
    m = np.asarray(op)
    for s in states:
        d = m.shape[0] // 4
        m = np.einsum("iajb,ji->ab", m.reshape(4, d, 4, d), s)
    return float(np.real(m[0, 0]))


def m1_multicopy(rho, side=Side.A):
    rho = validate_state(rho)
    return multicopy_trace(m1_operator(Side(side)), [rho, rho])


def m2_multicopy(rho, side=Side.A):
    rho = validate_state(rho)
    return multicopy_trace(m2_operator(Side(side)), [rho] * 4)


@dataclass(frozen=True)
class DiscordReport:
    d_a: float
    d_b: float
    q_a: float
    q_b: float
    v_a: float | None
    v_b: float | None
    q_s: float

    def to_dict(self):
        return {"d_a": self.d_a, "d_b": self.d_b, "q_a": self.q_a, "q_b": self.q_b,
                "v_a": self.v_a, "v_b": self.v_b, "q_s": self.q_s}


def side_indicators(rho, side=Side.A):
    """``(D, Q, V)`` for one side, from the spectrum of K."""
    k = k_matrix(bloch_decompose(rho), side)
    m = moments_from_k(k)
    return geometric_discord(k), q_indicator(m), v_indicator(m)


def q_of_state(rho, side=Side.A):
    return side_indicators(rho, side)[1]


def discord_report(rho):
    b = bloch_decompose(rho)
    vals = {}
    for side in Side:
        k = k_matrix(b, side)
        m = moments_from_k(k)
        vals[side] = (geometric_discord(k), q_indicator(m), v_indicator(m))
    (d_a, q_a, v_a), (d_b, q_b, v_b) = vals[Side.A], vals[Side.B]
    return DiscordReport(d_a, d_b, q_a, q_b, v_a, v_b, q_a + q_b)
