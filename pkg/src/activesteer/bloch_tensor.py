"""Bloch tensor R_S = <Psi|S|Psi> over all 4^N Pauli strings.

Strings are indexed in base 4 with qubit 1 as the most significant digit
(0 = identity, 1,2,3 = x,y,z).  Reduced-density-matrix tensors are slices
of the full tensor with the traced-out digits pinned to 0.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .quantum_state import PAULI, ReducedDensityMatrix, StateVector, _check_subset

IMAG_TOL = 1e-12


def pauli_index(mu: Sequence[int]) -> int:
    """Base-4 linear index of a Pauli string (mu_1 most significant)."""
    idx = 0
    for m in mu:
        if m not in (0, 1, 2, 3):
            raise ValueError(f"invalid Pauli index {m}")
        idx = 4 * idx + m
    return idx


def pauli_digits(index: int, n_qubits: int) -> tuple[int, ...]:
    digits = []
    for _ in range(n_qubits):
        index, d = divmod(index, 4)
        digits.append(d)
    return tuple(reversed(digits))


@dataclass(frozen=True)
class PauliString:
    mu: tuple[int, ...]

    def __post_init__(self):
        mu = tuple(int(m) for m in self.mu)
        if any(m not in (0, 1, 2, 3) for m in mu):
            raise ValueError(f"invalid Pauli string {mu}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def parse(cls, text: str) -> PauliString:
        table = {"i": 0, "0": 0, "x": 1, "y": 2, "z": 3}
        return cls(tuple(table[c] for c in text.lower()))

    @property
    def index(self) -> int:
        return pauli_index(self.mu)

    @property
    def weight(self) -> int:
        return sum(1 for m in self.mu if m)

    def __len__(self):
        return len(self.mu)


@dataclass(frozen=True)
class BlochTensor:
    n_qubits: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        if c.size != 4**self.n_qubits:
            raise ValueError(f"expected {4**self.n_qubits} coefficients, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def tensor(self) -> np.ndarray:
        return self.coeffs.reshape((4,) * self.n_qubits)

    def __getitem__(self, mu) -> float:
        if isinstance(mu, PauliString):
            mu = mu.mu
        return float(self.tensor[tuple(mu)])

    def purity_sum(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs))


@dataclass(frozen=True)
class RdmBlochTensor:
    kept_qubits: tuple[int, ...]
    coeffs: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.kept_qubits)

    @property
    def tensor(self) -> np.ndarray:
        return self.coeffs.reshape((4,) * self.rank)


@lru_cache(maxsize=None)
def _bloch_einsum(n: int) -> str:
    letters = string.ascii_letters
    mus = letters[:n]
    sig = letters[n : 2 * n]
    sigp = letters[2 * n : 3 * n]
    paulis = ",".join(f"{mus[j]}{sig[j]}{sigp[j]}" for j in range(n))
    return f"{sig},{sigp},{paulis}->{mus}"


def bloch_coeffs(amplitudes: np.ndarray, n_qubits: int) -> np.ndarray:
    """Raw 4^N coefficient array for a state vector."""
    psi = amplitudes.reshape((2,) * n_qubits)
    # R_S = sum C*_s C_s' prod_j <s_j|P_mu_j|s'_j>
    r = np.einsum(_bloch_einsum(n_qubits), psi.conj(), psi, *([PAULI] * n_qubits), optimize=True)
    if np.max(np.abs(r.imag), initial=0.0) > 1e-9:
        raise ArithmeticError("Bloch tensor has a non-negligible imaginary part")
    return np.ascontiguousarray(r.real).reshape(-1)


def bloch_from_state(state: StateVector) -> BlochTensor:
    return BlochTensor(state.n_qubits, bloch_coeffs(state.amplitudes, state.n_qubits))


def rdm_bloch(bloch: BlochTensor, keep: Iterable[int]) -> RdmBlochTensor:
    keep = _check_subset(keep, bloch.n_qubits)
    idx = tuple(slice(None) if q in keep else 0 for q in range(1, bloch.n_qubits + 1))
    return RdmBlochTensor(keep, np.array(bloch.tensor[idx]).reshape(-1))


@lru_cache(maxsize=None)
def _pauli_basis(rank: int) -> np.ndarray:
    """All 4^rank Pauli strings as dense matrices, canonical order."""
    basis = np.ones((1, 1, 1), dtype=np.complex128)
    for _ in range(rank):
        basis = np.einsum("aij,bkl->abikjl", basis, PAULI).reshape(
            basis.shape[0] * 4, basis.shape[1] * 2, basis.shape[2] * 2
        )
    basis.setflags(write=False)
    return basis


def rdm_matrix_from_bloch(rdm: RdmBlochTensor) -> ReducedDensityMatrix:
    r = rdm.rank
    rho = np.tensordot(rdm.coeffs, _pauli_basis(r), axes=1) / 2**r
    rho = 0.5 * (rho + rho.conj().T)
    return ReducedDensityMatrix(rdm.kept_qubits, rho)


def correlator(bloch: BlochTensor, n: int, n2: int, a: int, a2: int) -> float:
    """<sigma_n^a sigma_n2^a2> read off the Bloch tensor."""
    if n == n2:
        raise ValueError("correlator needs two distinct qubits")
    N = bloch.n_qubits
    if not (1 <= n <= N and 1 <= n2 <= N):
        raise ValueError("qubit index out of range")
    mu = [0] * N
    mu[n - 1] = a
    mu[n2 - 1] = a2
    return float(bloch.tensor[tuple(mu)])


# -- pair-slot helpers -------------------------------------------------------
#
# For a steered pair (n, n2) the tensor is viewed as a 16 x 4^(N-2) matrix:
# row a = 4*mu_n + mu_n2, column = remaining digits in increasing qubit order.


@lru_cache(maxsize=None)
def pair_permutation(n_qubits: int, pair: tuple[int, int]) -> np.ndarray:
    """Flat indices such that ``coeffs[perm].reshape(16, -1)`` is the pair view."""
    n, n2 = pair
    if n == n2 or not (1 <= n <= n_qubits and 1 <= n2 <= n_qubits):
        raise ValueError(f"invalid pair {pair} for N={n_qubits}")
    rest = [q for q in range(1, n_qubits + 1) if q not in pair]
    order = [n - 1, n2 - 1] + [q - 1 for q in rest]
    idx = np.arange(4**n_qubits).reshape((4,) * n_qubits)
    perm = np.transpose(idx, order).reshape(-1).copy()
    perm.setflags(write=False)
    return perm


@lru_cache(maxsize=None)
def pair_inverse_permutation(n_qubits: int, pair: tuple[int, int]) -> np.ndarray:
    inv = np.argsort(pair_permutation(n_qubits, pair))
    inv.setflags(write=False)
    return inv


@lru_cache(maxsize=None)
def rest_weight_counts(n_qubits: int) -> np.ndarray:
    """Number of non-identity digits of each column of a pair view."""
    rest = n_qubits - 2
    counts = np.zeros(4**rest, dtype=np.int64)
    for i, mu in enumerate(product(range(4), repeat=rest)):
        counts[i] = sum(1 for m in mu if m)
    counts.setflags(write=False)
    return counts


SLOT_WEIGHT = np.array([(a // 4 != 0) + (a % 4 != 0) for a in range(16)], dtype=np.int64)

_P2 = _pauli_basis(2)
_P2_VEC = _P2.reshape(16, 16).T.copy()  # columns are vec(P_b) (row-major)


def transfer_matrix(op: np.ndarray, op2: np.ndarray | None = None) -> np.ndarray:
    """Pauli transfer matrix of rho -> op rho op2^dagger on a qubit pair.

    Entry (a, b) is Tr(P_a op P_b op2^dagger) / 4; real when op2 is op.
    """
    if op2 is None:
        op2 = op
    # vec(A X B^dag) = (A kron B^*) vec(X) for row-major vec
    sup = np.kron(op, op2.conj())
    t = _P2_VEC.conj().T @ sup @ _P2_VEC / 4.0
    return t


def pair_view(coeffs: np.ndarray, n_qubits: int, pair: tuple[int, int]) -> np.ndarray:
    return coeffs[pair_permutation(n_qubits, pair)].reshape(16, -1)


def from_pair_view(view: np.ndarray, n_qubits: int, pair: tuple[int, int]) -> np.ndarray:
    return view.reshape(-1)[pair_inverse_permutation(n_qubits, pair)]


def apply_pair_operator(coeffs: np.ndarray, n_qubits: int, pair: tuple[int, int], op: np.ndarray) -> np.ndarray:
    """Bloch coefficients of op rho op^dagger / Tr(...), op acting on the pair."""
    t = transfer_matrix(op).real
    view = t @ pair_view(coeffs, n_qubits, pair)
    view /= view[0, 0]
    return from_pair_view(view, n_qubits, pair)
