"""Dense state-vector and density-matrix algebra for a handful of qubits.

States are plain ``numpy`` arrays: a pure state on ``n`` qubits is a complex
vector of length ``2**n`` and a density matrix is a ``2**n x 2**n`` complex
array.  Qubits are labelled ``1..n`` and qubit 1 is the most significant bit
of the basis index, so ``|q1 q2 q3 q4>`` has index ``8*q1 + 4*q2 + 2*q3 + q4``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ImpossibleOutcomeError

ALGEBRA_TOL = 1e-12
EIGEN_TOL = 1e-9

SQRT2 = np.sqrt(2.0)

# Polarisation dictionary: 0=H, 1=V, +=D, -=A, R=(|0>+i|1>)/sqrt2, L=(|0>-i|1>)/sqrt2
KETS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / SQRT2,
    "-": np.array([1, -1], dtype=complex) / SQRT2,
    "R": np.array([1, 1j], dtype=complex) / SQRT2,
    "L": np.array([1, -1j], dtype=complex) / SQRT2,
}

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = (X + Z) / SQRT2
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CPHASE = np.diag([1, 1, 1, -1]).astype(complex)

_FIXED_GATES = {"I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "CNOT": CNOT, "CPHASE": CPHASE}


def rz(alpha: float) -> np.ndarray:
    """``exp(-i alpha Z / 2)``."""
    if not np.isfinite(alpha):
        raise ConfigurationError(f"rotation angle must be finite, got {alpha!r}")
    return np.diag([np.exp(-0.5j * alpha), np.exp(0.5j * alpha)])


def standard_gate(name: str, alpha: float | None = None) -> np.ndarray:
    """Return the matrix of a named gate.

    ``name`` is one of ``I, X, Y, Z, H, RZ, CNOT, CPHASE``; ``RZ`` needs
    ``alpha``.  A fresh copy is returned so callers may mutate it.
    """
    key = name.upper()
    if key == "RZ":
        if alpha is None:
            raise ConfigurationError("RZ requires an angle")
        return rz(alpha)
    try:
        return _FIXED_GATES[key].copy()
    except KeyError:
        raise ConfigurationError(f"unknown gate {name!r}") from None


def ket(labels: str) -> np.ndarray:
    """Product state from a label string, e.g. ``ket("+-")``."""
    try:
        return tensor(*(KETS[c] for c in labels))
    except KeyError as exc:
        raise ConfigurationError(f"unknown single-qubit label {exc.args[0]!r}") from None


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product with the first factor on the most significant qubit."""
    if not factors:
        raise ConfigurationError("tensor needs at least one factor")
    return reduce(np.kron, factors)


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ConfigurationError(f"dimension {dim} is not a power of two")
    return n


def _check_targets(targets: Sequence[int], n: int, k: int) -> list[int]:
    targets = list(targets)
    if len(targets) != k:
        raise ConfigurationError(f"gate acts on {k} qubits but {len(targets)} targets given")
    if len(set(targets)) != k or any(not 1 <= t <= n for t in targets):
        raise ConfigurationError(f"invalid targets {targets} for {n} qubits")
    return targets


def apply(state: np.ndarray, gate: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``gate`` to the listed (1-based) qubits of a pure state."""
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state.shape[0])
    k = num_qubits(gate.shape[0])
    targets = _check_targets(targets, n, k)
    if k == 1:
        t = targets[0]
        psi = state.reshape(2 ** (t - 1), 2, 2 ** (n - t))
        return np.matmul(gate, psi).reshape(-1)
    axes = [t - 1 for t in targets]
    psi = state.reshape((2,) * n)
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


def embed(gate: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2**n`` operator acting as ``gate`` on ``targets``."""
    d = 2**n
    basis = np.eye(d, dtype=complex)
    return np.stack([apply(basis[:, c], gate, targets) for c in range(d)], axis=1)


def apply_dm(rho: np.ndarray, gate: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Conjugate a density matrix by ``gate`` on ``targets``."""
    n = num_qubits(rho.shape[0])
    u = embed(gate, targets, n)
    return u @ rho @ u.conj().T


def density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    """True when two normalized kets differ by at most a global phase."""
    return abs(abs(np.vdot(a, b)) - 1.0) <= tol


@dataclass(frozen=True)
class MeasurementBasis:
    """Single-qubit projective basis.

    ``kind`` is ``"computational"`` for ``{|0>, |1>}`` or ``"equatorial"`` for
    ``{(|0> + e^{i alpha}|1>)/sqrt2, (|0> - e^{i alpha}|1>)/sqrt2}``.  With
    ``swapped`` the outcome labels are exchanged, so outcome 0 refers to the
    second vector (this is how ``{|1>, |0>}`` is written).
    """

    kind: str
    alpha: float = 0.0
    swapped: bool = False

    def __post_init__(self):
        if self.kind not in ("computational", "equatorial"):
            raise ConfigurationError(f"unknown basis kind {self.kind!r}")
        if not np.isfinite(self.alpha):
            raise ConfigurationError("basis angle must be finite")

    @classmethod
    def computational(cls, swapped: bool = False) -> "MeasurementBasis":
        return cls("computational", 0.0, swapped)

    @classmethod
    def equatorial(cls, alpha: float, swapped: bool = False) -> "MeasurementBasis":
        return cls("equatorial", float(alpha), swapped)

    @cached_property
    def _pair(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "computational":
            v0, v1 = KETS["0"], KETS["1"]
        else:
            phase = np.exp(1j * self.alpha)
            v0 = np.array([1, phase]) / SQRT2
            v1 = np.array([1, -phase]) / SQRT2
        return (v1, v0) if self.swapped else (v0, v1)

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """The kets for outcome 0 and outcome 1, in that order."""
        return self._pair

    def vector(self, outcome: int) -> np.ndarray:
        if outcome not in (0, 1):
            raise ConfigurationError(f"outcome must be 0 or 1, got {outcome!r}")
        return self._pair[outcome]

    def __str__(self):
        if self.kind == "computational":
            return "{|1>,|0>}" if self.swapped else "{|0>,|1>}"
        s = f"B({self.alpha / np.pi:g}pi)"
        return s + " swapped" if self.swapped else s


def project_measure(state: np.ndarray, qubit: int, basis: MeasurementBasis, outcome: int):
    """Project ``qubit`` onto the ``outcome`` vector of ``basis``.

    Accepts a pure state (1-D) or density matrix (2-D).  Returns
    ``(probability, post_state)`` where the measured qubit has been removed
    and the post-measurement state is renormalized.

    Raises
    ------
    ImpossibleOutcomeError
        If the branch probability is below ``1e-12``.
    """
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state.shape[0])
    if not 1 <= qubit <= n:
        raise ConfigurationError(f"qubit {qubit} out of range for {n} qubits")
    bra = basis.vector(outcome).conj()
    left, right = 2 ** (qubit - 1), 2 ** (n - qubit)
    if state.ndim == 1:
        psi = np.matmul(bra, state.reshape(left, 2, right)).reshape(-1)
        prob = float(np.real(np.vdot(psi, psi)))
        if prob <= ALGEBRA_TOL:
            raise ImpossibleOutcomeError(
                f"outcome {outcome} on qubit {qubit} has probability {prob:.3g}"
            )
        return prob, psi / np.sqrt(prob)
    # contract <v| on the row index and |v> on the column index
    t = state.reshape(left, 2, right, left, 2, right)
    d = 2 ** (n - 1)
    rho = np.einsum("i,aibcjd,j->abcd", bra, t, bra.conj()).reshape(d, d)
    prob = float(np.real(np.trace(rho)))
    if prob <= ALGEBRA_TOL:
        raise ImpossibleOutcomeError(
            f"outcome {outcome} on qubit {qubit} has probability {prob:.3g}"
        )
    return prob, rho / prob


def outcome_probability(state: np.ndarray, qubit: int, basis: MeasurementBasis, outcome: int) -> float:
    """Born probability of one outcome, without raising on zero."""
    try:
        prob, _ = project_measure(state, qubit, basis, outcome)
    except ImpossibleOutcomeError:
        return 0.0
    return prob


def sample_measure(state: np.ndarray, qubit: int, basis: MeasurementBasis, rng: np.random.Generator):
    """Measure ``qubit`` with Born-rule sampling; returns ``(outcome, post_state)``."""
    try:
        p0, post0 = project_measure(state, qubit, basis, 0)
    except ImpossibleOutcomeError:
        return 1, project_measure(state, qubit, basis, 1)[1]
    if rng.random() < p0 or p0 >= 1.0 - ALGEBRA_TOL:
        return 0, post0
    return 1, project_measure(state, qubit, basis, 1)[1]


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the (1-based) qubits in ``keep``.

    Kept qubits retain their original relative order regardless of the order
    given in ``keep``.
    """
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits(rho.shape[0])
    keep = sorted(set(keep))
    if not keep:
        raise ConfigurationError("partial trace needs at least one kept qubit")
    if any(not 1 <= q <= n for q in keep):
        raise ConfigurationError(f"keep set {keep} out of range for {n} qubits")
    traced = [q - 1 for q in range(1, n + 1) if q not in keep]
    kept = [q - 1 for q in keep]
    t = rho.reshape((2,) * (2 * n))
    t = t.transpose(kept + traced + [n + q for q in kept] + [n + q for q in traced])
    dk, dt = 2 ** len(kept), 2 ** len(traced)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """``<psi|rho|psi>``, clamped to ``[0, 1]`` after a reality check."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise ConfigurationError(
            f"dimension mismatch: rho {rho.shape} vs psi {psi.shape}"
        )
    f = np.vdot(psi, rho @ psi)
    if abs(f.imag) > 1e-10:
        raise ConfigurationError(f"fidelity has imaginary part {f.imag:.3g}; rho not Hermitian?")
    return float(min(1.0, max(0.0, f.real)))


def partial_transpose(rho: np.ndarray, qubit: int = 2) -> np.ndarray:
    """Transpose the indices of one qubit of a two-qubit density matrix."""
    t = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if qubit == 1:
        return t.transpose(2, 1, 0, 3).reshape(4, 4)
    if qubit == 2:
        return t.transpose(0, 3, 2, 1).reshape(4, 4)
    raise ConfigurationError(f"cut must be qubit 1 or 2, got {qubit!r}")


def negativity(rho: np.ndarray, cut: int = 2) -> float:
    """Negativity ``(||rho^T_B||_1 - 1) / 2`` of a two-qubit state.

    ``cut`` chooses which qubit is transposed; for two qubits both choices
    give the same value.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ConfigurationError(f"negativity needs a two-qubit state, got shape {rho.shape}")
    pt = partial_transpose(rho, cut)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(max(0.0, (np.abs(ev).sum() - 1.0) / 2.0))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    ev = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.abs(ev).sum())


def check_density(rho: np.ndarray, tol: float = 1e-10) -> None:
    """Raise ``ConfigurationError`` unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConfigurationError(f"density matrix must be square, got {rho.shape}")
    num_qubits(rho.shape[0])
    if not np.all(np.isfinite(rho)):
        raise ConfigurationError("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ConfigurationError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ConfigurationError(f"density matrix trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -EIGEN_TOL:
        raise ConfigurationError("density matrix has a negative eigenvalue")


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (Ginibre) random density matrix on ``n`` qubits."""
    d = 2**n
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)
