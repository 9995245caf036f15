"""One steering step on a system-qubit pair.

Each steered qubit m couples to its own detector through s_m J_m sigma^alpha
tau^beta for a time dt; the two detectors then undergo a Bell measurement
with outcome (xi, eta).  Only the first-order (weak-measurement) form of the
resulting Kraus operators is used here; the exact evolution lives in
``oracles``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .bloch_tensor import BlochTensor, pair_view, transfer_matrix
from .quantum_state import AXIS_NAMES, PAULI, StateVector, apply_local, axis_index

PROB_CLAMP = -1e-12
PROB_ERROR = -1e-9
KAPPA_TOL = 1e-14
WEAK_LIMIT = 0.5

_I2 = np.eye(2, dtype=np.complex128)
_I4 = np.eye(4, dtype=np.complex128)


class WeakLimitWarning(UserWarning):
    """J*dt is large enough that the first-order expansion is unreliable."""


def levi_civita(a: int, b: int, c: int) -> int:
    if (a, b, c) in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        return 1
    if (a, b, c) in ((3, 2, 1), (1, 3, 2), (2, 1, 3)):
        return -1
    return 0


@dataclass(frozen=True)
class SteeringConfig:
    """Coupling s * sigma^alpha (x) tau^beta between a qubit and its detector."""

    s: int
    alpha: int
    beta: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", axis_index(self.alpha))
        object.__setattr__(self, "beta", axis_index(self.beta))
        if self.s not in (1, -1):
            raise ValueError(f"sign must be +-1, got {self.s}")
        if self.beta != 3 and self.s != 1:
            raise ValueError("sign is only meaningful for beta = z")

    @property
    def transverse(self) -> bool:
        return self.beta != 3

    @property
    def jump_factor(self) -> complex:
        """1 for beta=x, i for beta=y, 0 for beta=z."""
        return {1: 1.0, 2: 1j, 3: 0.0}[self.beta]

    def label(self) -> str:
        sign = "+" if self.s > 0 else "-"
        return f"{sign}{AXIS_NAMES[self.alpha]}{AXIS_NAMES[self.beta]}"


def enumerate_configs(allow_beta_y: bool = True) -> list[SteeringConfig]:
    """All canonical single-qubit configs, ordered by alpha then beta then sign.

    12 with beta=y allowed, 9 without (per alpha: x, [y], +z, -z).
    """
    out = []
    for alpha in (1, 2, 3):
        for beta in (1, 2, 3) if allow_beta_y else (1, 3):
            for s in (1, -1) if beta == 3 else (1,):
                out.append(SteeringConfig(s, alpha, beta))
    return out


@dataclass(frozen=True)
class MeasurementOutcome:
    xi: int
    eta: int

    def __post_init__(self):
        if self.xi not in (0, 1) or self.eta not in (1, -1):
            raise ValueError(f"invalid outcome ({self.xi}, {self.eta})")

    @property
    def index(self) -> int:
        return 2 * self.xi + (0 if self.eta == 1 else 1)

    @classmethod
    def from_index(cls, i: int) -> MeasurementOutcome:
        return OUTCOMES[i]


OUTCOMES = (
    MeasurementOutcome(0, 1),
    MeasurementOutcome(0, -1),
    MeasurementOutcome(1, 1),
    MeasurementOutcome(1, -1),
)


@dataclass(frozen=True)
class PairConfig:
    pair: tuple[int, int]
    configs: tuple[SteeringConfig, SteeringConfig]
    couplings: tuple[float, float] = (1.0, 1.0)
    dt: float = 0.2

    def __post_init__(self):
        if self.pair[0] == self.pair[1]:
            raise ValueError("pair needs two distinct qubits")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if min(self.couplings) <= 0:
            raise ValueError("couplings must be positive")
        if max(self.couplings) * self.dt > WEAK_LIMIT:
            warnings.warn(
                f"J*dt = {max(self.couplings) * self.dt:.3g} exceeds {WEAK_LIMIT}; "
                "first-order step is outside the weak-measurement regime",
                WeakLimitWarning,
                stacklevel=3,
            )

    @property
    def rates(self) -> tuple[float, float]:
        return (self.couplings[0] ** 2 * self.dt, self.couplings[1] ** 2 * self.dt)

    def label(self) -> str:
        """Both configs joined, first qubit first, e.g. ``+xz-yx``."""
        return self.configs[0].label() + self.configs[1].label()

    def with_dt(self, dt: float | None) -> PairConfig:
        if dt is None or dt == self.dt:
            return self
        return replace(self, dt=dt)


# -- operators as Pauli-term lists ---------------------------------------------


@dataclass(frozen=True)
class PauliTerm:
    coeff: complex
    ops: tuple[tuple[int, int], ...]  # (qubit, axis) pairs, distinct qubits


def apply_terms(terms: Sequence[PauliTerm], amplitudes: np.ndarray, n_qubits: int) -> np.ndarray:
    out = np.zeros_like(amplitudes, dtype=np.complex128)
    for t in terms:
        v = amplitudes
        for q, a in t.ops:
            v = apply_local(v, n_qubits, [q], PAULI[a])
        out += t.coeff * v
    return out


def pair_matrix(terms: Sequence[PauliTerm], pair: tuple[int, int]) -> np.ndarray:
    """Dense 4x4 matrix of a term list supported on ``pair`` (pair[0] = high bit)."""
    m = np.zeros((4, 4), dtype=np.complex128)
    for t in terms:
        ops = dict(t.ops)
        if set(ops) - set(pair):
            raise ValueError("term acts outside the pair")
        m += t.coeff * np.kron(PAULI[ops.get(pair[0], 0)], PAULI[ops.get(pair[1], 0)])
    return m


def effective_hamiltonian(pc: PairConfig, eta: int) -> list[PauliTerm]:
    n, n2 = pc.pair
    k1, k2 = pc.configs
    (j1, j2), (g1, g2) = pc.couplings, pc.rates
    terms = []
    if k1.beta == 3:
        terms.append(PauliTerm(k1.s * j1, ((n, k1.alpha),)))
    if k2.beta == 3:
        terms.append(PauliTerm(k2.s * j2, ((n2, k2.alpha),)))
    if {k1.beta, k2.beta} == {1, 2}:
        terms.append(PauliTerm(eta * np.sqrt(g1 * g2), ((n, k1.alpha), (n2, k2.alpha))))
    return terms


def jump_operator(pc: PairConfig, eta: int) -> list[PauliTerm]:
    n, n2 = pc.pair
    k1, k2 = pc.configs
    g1, g2 = pc.rates
    terms = []
    if k1.transverse:
        terms.append(PauliTerm(-1j * eta * np.sqrt(g1) * k1.jump_factor, ((n, k1.alpha),)))
    if k2.transverse:
        terms.append(PauliTerm(-1j * np.sqrt(g2) * k2.jump_factor, ((n2, k2.alpha),)))
    return terms


def _cdc_from_correlator(pc: PairConfig, eta: int, q: float) -> float:
    k1, k2 = pc.configs
    g1, g2 = pc.rates
    same = (k1.beta == 1 and k2.beta == 1) or (k1.beta == 2 and k2.beta == 2)
    val = g1 * k1.transverse + g2 * k2.transverse
    if same:
        val += 2 * eta * np.sqrt(g1 * g2) * q
    return float(val)


def pair_correlator(state: StateVector, pc: PairConfig) -> float:
    n, n2 = pc.pair
    k1, k2 = pc.configs
    v = apply_local(state.amplitudes, state.n_qubits, [n], PAULI[k1.alpha])
    v = apply_local(v, state.n_qubits, [n2], PAULI[k2.alpha])
    return float(np.vdot(state.amplitudes, v).real)


def expectation_cdc(state: StateVector, pc: PairConfig, eta: int) -> float:
    return _cdc_from_correlator(pc, eta, pair_correlator(state, pc))


def probabilities_from_kappa(kappa_plus: float, kappa_minus: float, dt: float) -> np.ndarray:
    """Outcome probabilities in the order (0,+), (0,-), (1,+), (1,-)."""
    p = np.array(
        [0.5 * (1 - dt * kappa_plus), 0.5 * (1 - dt * kappa_minus), 0.5 * dt * kappa_plus, 0.5 * dt * kappa_minus]
    )
    if p.min() < PROB_ERROR:
        raise ValueError(f"negative outcome probability {p.min():.3g}: dt too large for the weak limit")
    return np.where(p < 0, 0.0, p)


def outcome_probabilities(state: StateVector, pc: PairConfig) -> np.ndarray:
    q = pair_correlator(state, pc)
    return probabilities_from_kappa(_cdc_from_correlator(pc, 1, q), _cdc_from_correlator(pc, -1, q), pc.dt)


def sample_outcome(probs: np.ndarray, rng: np.random.Generator) -> MeasurementOutcome:
    """Inverse-CDF draw over (0,+), (0,-), (1,+), (1,-)."""
    return OUTCOMES[sample_index(probs, rng)]


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    i = int(np.searchsorted(cdf, u, side="right"))
    if i >= len(probs):
        i = int(np.flatnonzero(np.asarray(probs) > 0)[-1])
    return i


def sample_from_kappa(kappa_plus: float, kappa_minus: float, dt: float, rng: np.random.Generator) -> int:
    """Same draw as ``sample_index(probabilities_from_kappa(...))`` on plain floats."""
    probs = (
        0.5 * (1 - dt * kappa_plus),
        0.5 * (1 - dt * kappa_minus),
        0.5 * dt * kappa_plus,
        0.5 * dt * kappa_minus,
    )
    if min(probs) < PROB_ERROR:
        raise ValueError(f"negative outcome probability {min(probs):.3g}: dt too large for the weak limit")
    probs = tuple(x if x > 0 else 0.0 for x in probs)
    total = 0.0
    cdf = []
    for x in probs:
        total += x
        cdf.append(total)
    u = rng.random() * total
    for i, c in enumerate(cdf):
        if c > u:
            return i
    return max(i for i, x in enumerate(probs) if x > 0)


def sse_step(
    state: StateVector, pc: PairConfig, outcome: MeasurementOutcome, dt: float | None = None
) -> StateVector:
    """First-order conditioned update, renormalized exactly."""
    pc = pc.with_dt(dt)
    n = state.n_qubits
    psi = state.amplitudes
    c = jump_operator(pc, outcome.eta)
    c_psi = apply_terms(c, psi, n) if c else np.zeros_like(psi)
    if outcome.xi == 1:
        kappa = float(np.vdot(c_psi, c_psi).real)
        if kappa <= KAPPA_TOL:
            raise ValueError("jump outcome requested but the jump operator annihilates the state")
        return StateVector(n, c_psi / np.sqrt(kappa))
    h_psi = apply_terms(effective_hamiltonian(pc, outcome.eta), psi, n)
    cdc_psi = apply_terms(_dagger(c), c_psi, n) if c else 0.0
    new = psi - 1j * pc.dt * h_psi - 0.5 * pc.dt * cdc_psi
    return StateVector(n, new / np.linalg.norm(new))


def _dagger(terms: Sequence[PauliTerm]) -> list[PauliTerm]:
    return [PauliTerm(np.conj(t.coeff), tuple(reversed(t.ops))) for t in terms]


# -- Bloch-tensor dynamics ------------------------------------------------------


def lindblad_avg_dR(bloch: BlochTensor, pc: PairConfig, string, dt: float | None = None) -> float:
    """Outcome-averaged change of one Bloch coefficient.

    A beta=z coupling rotates the Bloch components of its qubit about
    alpha; a transverse coupling dephases components orthogonal to alpha.
    """
    pc = pc.with_dt(dt)
    mu = list(string.mu if hasattr(string, "mu") else string)
    if len(mu) != bloch.n_qubits:
        raise ValueError("string length does not match N")
    tensor = bloch.tensor
    total = 0.0
    for q, k, j, g in zip(pc.pair, pc.configs, pc.couplings, pc.rates):
        b = mu[q - 1]
        if b == 0 or b == k.alpha:
            continue
        if k.beta == 3:
            for c in (1, 2, 3):
                eps = levi_civita(k.alpha, b, c)
                if eps:
                    other = list(mu)
                    other[q - 1] = c
                    total += -2 * pc.dt * k.s * j * eps * tensor[tuple(other)]
        else:
            total += -2 * pc.dt * g * tensor[tuple(mu)]
    return float(total)


@dataclass(frozen=True)
class PairOperators:
    """Dense 4x4 forms of every operator in one pair step."""

    hamiltonian: tuple[np.ndarray, np.ndarray]  # eta = +1, -1
    jump: tuple[np.ndarray, np.ndarray]
    kraus: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] = field(repr=False)


def pair_operators(pc: PairConfig) -> PairOperators:
    slots = (1, 2)
    local = replace(pc, pair=slots)
    hs = tuple(pair_matrix(effective_hamiltonian(local, e), slots) for e in (1, -1))
    cs = tuple(pair_matrix(jump_operator(local, e), slots) for e in (1, -1))
    a0 = tuple(_I4 - 1j * pc.dt * h - 0.5 * pc.dt * c.conj().T @ c for h, c in zip(hs, cs))
    return PairOperators(hs, cs, (a0[0], a0[1], cs[0], cs[1]))


def lindblad_generator(pc: PairConfig) -> np.ndarray:
    """16x16 real matrix L with mean dR = dt * L @ R on the pair slots."""
    ops = pair_operators(pc)
    gen = np.zeros((16, 16), dtype=np.complex128)
    for h, c in zip(ops.hamiltonian, ops.jump):
        cdc = c.conj().T @ c
        gen += 0.5 * (transfer_matrix(-1j * h, _I4) + transfer_matrix(_I4, -1j * h))
        gen += 0.5 * (transfer_matrix(c) - 0.5 * transfer_matrix(cdc, _I4) - 0.5 * transfer_matrix(_I4, cdc))
    return gen.real


def conditioned_generators(pc: PairConfig, eta: int) -> tuple[np.ndarray, np.ndarray]:
    """(N0, T) such that the no-jump change is dt*(N0 + kappa)R and the jump
    result is T R / kappa, both on pair slots."""
    ops = pair_operators(pc)
    i = 0 if eta == 1 else 1
    h, c = ops.hamiltonian[i], ops.jump[i]
    cdc = c.conj().T @ c
    n0 = (
        transfer_matrix(-1j * h, _I4)
        + transfer_matrix(_I4, -1j * h)
        - 0.5 * transfer_matrix(cdc, _I4)
        - 0.5 * transfer_matrix(_I4, cdc)
    )
    return n0.real, transfer_matrix(c).real


def conditioned_dR(bloch: BlochTensor, pc: PairConfig, outcome: MeasurementOutcome) -> np.ndarray:
    """First-order conditioned Bloch change on the pair view (16 x 4^(N-2))."""
    r = pair_view(bloch.coeffs, bloch.n_qubits, pc.pair)
    n0, t = conditioned_generators(pc, outcome.eta)
    kappa = float(t[0] @ r[:, 0])
    if outcome.xi == 1:
        if kappa <= KAPPA_TOL:
            raise ValueError("jump outcome with vanishing jump rate")
        return t @ r / kappa - r
    return pc.dt * (n0 @ r + kappa * r)


# -- per-config operator tables for the fast path ------------------------------


@dataclass(frozen=True, eq=False)
class ConfigTable:
    """Precomputed operators for every config pair K = (K_n, K_n2).

    Flat index K = i * len(configs) + j.  All arrays are pair-local and
    independent of the state.
    """

    configs: tuple[SteeringConfig, ...]
    couplings: tuple[float, float]
    dt: float
    kraus: np.ndarray = field(repr=False)  # (nK, 4, 4, 4) complex
    kraus_ptm: np.ndarray = field(repr=False)  # (nK, 4, 16, 16)
    jump_ptm: np.ndarray = field(repr=False)  # (nK, 2, 16, 16)
    generator: np.ndarray = field(repr=False)  # (nK, 16, 16)
    has_jump: np.ndarray = field(repr=False)  # (nK,) bool

    @property
    def size(self) -> int:
        return len(self.configs) ** 2

    def pair_configs(self, k: int) -> tuple[SteeringConfig, SteeringConfig]:
        m = len(self.configs)
        return self.configs[k // m], self.configs[k % m]

    def pair_config(self, k: int, pair: tuple[int, int]) -> PairConfig:
        return PairConfig(pair, self.pair_configs(k), self.couplings, self.dt)


@lru_cache(maxsize=64)
def config_table(couplings: tuple[float, float], dt: float, allow_beta_y: bool) -> ConfigTable:
    configs = tuple(enumerate_configs(allow_beta_y))
    nk = len(configs) ** 2
    kraus = np.zeros((nk, 4, 4, 4), dtype=np.complex128)
    kraus_ptm = np.zeros((nk, 4, 16, 16))
    jump_ptm = np.zeros((nk, 2, 16, 16))
    gen = np.zeros((nk, 16, 16))
    has_jump = np.zeros(nk, dtype=bool)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakLimitWarning)
        for i, k1 in enumerate(configs):
            for j, k2 in enumerate(configs):
                k = i * len(configs) + j
                pc = PairConfig((1, 2), (k1, k2), couplings, dt)
                ops = pair_operators(pc)
                for o in range(4):
                    kraus[k, o] = ops.kraus[o]
                    kraus_ptm[k, o] = transfer_matrix(ops.kraus[o]).real
                for e in range(2):
                    jump_ptm[k, e] = transfer_matrix(ops.jump[e]).real
                gen[k] = lindblad_generator(pc)
                has_jump[k] = k1.transverse or k2.transverse
    for a in (kraus, kraus_ptm, jump_ptm, gen, has_jump):
        a.setflags(write=False)
    return ConfigTable(configs, couplings, dt, kraus, kraus_ptm, jump_ptm, gen, has_jump)
