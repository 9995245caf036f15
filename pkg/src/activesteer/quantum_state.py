"""Pure-state vectors for N system qubits.

Qubits are labelled 1..N. Qubit 1 is the most significant bit of the
computational-basis index, so ``amplitudes[0b100]`` is |100> for N=3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-10
ENTROPY_CLIP = 1e-12

AXES = {"x": 1, "y": 2, "z": 3}
AXIS_NAMES = {1: "x", 2: "y", 3: "z"}

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)


def axis_index(axis: int | str) -> int:
    """Map 'x'/'y'/'z' (or 1/2/3) to the Pauli index 1..3."""
    if isinstance(axis, str):
        try:
            return AXES[axis.lower()]
        except KeyError:
            raise ValueError(f"unknown Pauli axis {axis!r}") from None
    if axis not in (1, 2, 3):
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return int(axis)


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if amps.size != 2**self.n_qubits:
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, got {amps.size}"
            )
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("zero state vector")
        if abs(norm - 1.0) > NORM_TOL:
            amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> StateVector:
        n = len(bits)
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[int(bits, 2)] = 1.0
        return cls(n, amps)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> StateVector:
        """Haar-random pure state."""
        v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
        return cls(n_qubits, v)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __len__(self):
        return self.amplitudes.size


@dataclass(frozen=True)
class ReducedDensityMatrix:
    kept_qubits: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.kept_qubits)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class TargetStateSpec:
    """Named target-state family.

    ``kind`` is one of ``product``, ``bell``, ``ghz``, ``w``, ``belltype``,
    ``custom``.  ``bits`` is used by ``product``; ``xi``/``eta`` select the
    Bell state; ``u``/``theta`` parametrize ``belltype``.
    """

    kind: str
    bits: str | None = None
    xi: int = 0
    eta: int = 1
    u: float = 1.0
    theta: float = 0.0
    amplitudes: tuple[complex, ...] | None = None

    @classmethod
    def parse(cls, text: str) -> TargetStateSpec:
        """Parse 'ghz', 'w', 'bell', 'bell:1,-1', 'product:0101',
        'belltype:0.6,0.3'."""
        kind, _, arg = text.strip().lower().partition(":")
        kind = kind.strip()
        if kind == "product":
            return cls("product", bits=arg.strip())
        if kind == "bell":
            if arg:
                xi, eta = (int(v) for v in arg.split(","))
                return cls("bell", xi=xi, eta=eta)
            return cls("bell")
        if kind == "belltype":
            u, theta = (float(v) for v in arg.split(","))
            return cls("belltype", u=u, theta=theta)
        if kind in ("ghz", "w"):
            return cls(kind)
        raise ValueError(f"unknown target state {text!r}")

    def label(self) -> str:
        if self.kind == "product":
            return f"product:{self.bits}"
        if self.kind == "bell":
            return f"bell:{self.xi},{self.eta}"
        if self.kind == "belltype":
            return f"belltype:{self.u!r},{self.theta!r}"
        return self.kind


def make_target(spec: TargetStateSpec, n_qubits: int) -> StateVector:
    kind = spec.kind
    dim = 2**n_qubits
    amps = np.zeros(dim, dtype=np.complex128)
    if kind == "product":
        bits = spec.bits if spec.bits else "0" * n_qubits
        if len(bits) != n_qubits or set(bits) - {"0", "1"}:
            raise ValueError(f"bitstring {bits!r} incompatible with N={n_qubits}")
        amps[int(bits, 2)] = 1.0
    elif kind == "bell":
        if n_qubits != 2:
            raise ValueError("Bell states require N=2")
        if spec.xi not in (0, 1) or spec.eta not in (1, -1):
            raise ValueError("Bell labels must be xi in {0,1}, eta in {+1,-1}")
        # |Phi_{xi,eta}> = (|0,xi> + eta |1,1-xi>)/sqrt2
        amps[spec.xi] = 1.0
        amps[2 + (1 - spec.xi)] = spec.eta
    elif kind == "ghz":
        amps[0] = amps[-1] = 1.0
    elif kind == "w":
        for j in range(n_qubits):
            amps[1 << (n_qubits - 1 - j)] = 1.0
    elif kind == "belltype":
        if n_qubits != 2:
            raise ValueError("Bell-type states require N=2")
        if not 0.0 <= spec.u <= 1.0:
            raise ValueError(f"u={spec.u} outside [0, 1]")
        amps[0] = spec.u
        amps[3] = np.exp(1j * spec.theta) * np.sqrt(1.0 - spec.u**2)
    elif kind == "custom":
        amps = np.asarray(spec.amplitudes, dtype=np.complex128)
        if amps.size != dim:
            raise ValueError("custom amplitudes do not match N")
    else:
        raise ValueError(f"unknown target kind {kind!r}")
    return StateVector(n_qubits, amps)


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 1 <= qubit <= state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range 1..{state.n_qubits}")


def apply_local(amplitudes: np.ndarray, n_qubits: int, qubits: Sequence[int], op: np.ndarray) -> np.ndarray:
    """Apply a 2^k x 2^k operator on the listed qubits (1-based, in the
    operator's own bit order) to a raw amplitude vector."""
    k = len(qubits)
    psi = amplitudes.reshape((2,) * n_qubits)
    axes = [q - 1 for q in qubits]
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


def apply_pauli(state: StateVector, qubit: int, axis: int | str) -> StateVector:
    _check_qubit(state, qubit)
    a = axis_index(axis)
    return StateVector(state.n_qubits, apply_local(state.amplitudes, state.n_qubits, [qubit], PAULI[a]))


def overlap(target: StateVector, state: StateVector) -> complex:
    """<target|state>."""
    if target.n_qubits != state.n_qubits:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(target.amplitudes, state.amplitudes))


def fidelity(state: StateVector, target: StateVector) -> float:
    return float(min(1.0, abs(overlap(target, state))))


def _check_subset(keep: Iterable[int], n_qubits: int) -> tuple[int, ...]:
    keep = tuple(int(q) for q in keep)
    if not keep:
        raise ValueError("empty qubit subset")
    if any(b <= a for a, b in zip(keep, keep[1:])):
        raise ValueError(f"subset {keep} must be strictly increasing")
    if keep[0] < 1 or keep[-1] > n_qubits:
        raise ValueError(f"subset {keep} not within 1..{n_qubits}")
    return keep


def partial_trace(state: StateVector, keep: Iterable[int]) -> ReducedDensityMatrix:
    keep = _check_subset(keep, state.n_qubits)
    n = state.n_qubits
    traced = [q - 1 for q in range(1, n + 1) if q not in keep]
    psi = np.moveaxis(state.tensor, [q - 1 for q in keep] + traced, range(n))
    psi = psi.reshape(2 ** len(keep), -1)
    rho = psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return ReducedDensityMatrix(keep, rho)


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho)
    w = w[w > ENTROPY_CLIP]
    return float(max(0.0, -np.sum(w * np.log(w))))


def entanglement_entropy(state: StateVector, subset_a: Iterable[int]) -> float:
    subset_a = _check_subset(subset_a, state.n_qubits)
    if len(subset_a) == state.n_qubits:
        raise ValueError("subset A must be a proper subset")
    return von_neumann_entropy(partial_trace(state, subset_a).matrix)
