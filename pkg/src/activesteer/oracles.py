"""Slow reference computations used to validate the fast paths.

* ``exact_pair_step``: full system + two-detector evolution without any
  small-dt expansion, followed by projection onto each detector Bell state.
* ``brute_force_expected_dC``: expected cost change by enumerating the four
  outcomes and recomputing the cost from scratch.
* ``single_detector_step``: the one-detector variant where a single ancilla
  couples to both system qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bloch_tensor import bloch_from_state
from .cost import CostWeights, total_cost
from .measurement import OUTCOMES, PairConfig, outcome_probabilities, sse_step
from .quantum_state import PAULI, StateVector, apply_local, partial_trace, von_neumann_entropy


@dataclass(frozen=True)
class JointState:
    """System qubits 1..N followed by detector N+1 (for pair[0]) and N+2 (for pair[1])."""

    n_system: int
    pair: tuple[int, int]
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != 2 ** (self.n_system + 2):
            raise ValueError("joint state has the wrong dimension")
        if abs(np.linalg.norm(amps) - 1.0) > 1e-12:
            raise ValueError("joint state is not normalized")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_total(self) -> int:
        return self.n_system + 2

    def as_state(self) -> StateVector:
        return StateVector(self.n_total, self.amplitudes)


def bell_state(xi: int, eta: int) -> np.ndarray:
    """(|0, xi> + eta |1, 1-xi>) / sqrt2 on two qubits."""
    v = np.zeros(4, dtype=np.complex128)
    v[xi] = 1.0
    v[2 + (1 - xi)] = eta
    return v / np.sqrt(2)


def evolve_joint(state: StateVector, pc: PairConfig, dt: float | None = None) -> JointState:
    """Detectors start in |00>; each coupling exponentiates in closed form."""
    pc = pc.with_dt(dt)
    n = state.n_qubits
    det = np.zeros(4, dtype=np.complex128)
    det[0] = 1.0
    amps = np.kron(state.amplitudes, det)
    for q, d, k, j in zip(pc.pair, (n + 1, n + 2), pc.configs, pc.couplings):
        theta = j * pc.dt
        gen = np.kron(PAULI[k.alpha], PAULI[k.beta])
        u = np.cos(theta) * np.eye(4) - 1j * k.s * np.sin(theta) * gen
        amps = apply_local(amps, n + 2, [q, d], u)
    return JointState(n, tuple(pc.pair), amps)


def exact_pair_step(
    state: StateVector, pc: PairConfig, dt: float | None = None
) -> list[tuple[float, StateVector | None]]:
    """Exact (probability, conditioned state) for each outcome in the order
    (0,+), (0,-), (1,+), (1,-).  Zero-probability branches carry None."""
    joint = evolve_joint(state, pc, dt)
    n = state.n_qubits
    psi = joint.amplitudes.reshape(2**n, 4)
    out = []
    for o in OUTCOMES:
        branch = psi @ bell_state(o.xi, o.eta).conj()
        p = float(np.vdot(branch, branch).real)
        out.append((p, StateVector(n, branch) if p > 1e-300 else None))
    return out


def brute_force_expected_dC(
    state: StateVector,
    target: StateVector,
    pc: PairConfig,
    weights: CostWeights,
    dt: float | None = None,
) -> float:
    """sum over outcomes of P * (C(after) - C(before)), first-order branches."""
    pc = pc.with_dt(dt)
    bt = bloch_from_state(target)
    before = total_cost(bloch_from_state(state), bt, weights)
    probs = outcome_probabilities(state, pc)
    total = 0.0
    for o, p in zip(OUTCOMES, probs):
        if p <= 0:
            continue
        after = sse_step(state, pc, o)
        total += p * (total_cost(bloch_from_state(after), bt, weights) - before)
    return float(total)


# -- entanglement diagnostics -----------------------------------------------------


def negativity(rho: np.ndarray) -> float:
    """Sum of |negative eigenvalues| of the partial transpose on the second qubit."""
    pt = rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    w = np.linalg.eigvalsh(pt)
    return float(-w[w < 0].sum())


def system_detector_negativity(state: StateVector, pc: PairConfig, dt: float | None = None) -> float:
    """Entanglement between steered qubit pair[0] and its detector before the Bell measurement."""
    joint = evolve_joint(state, pc, dt).as_state()
    rho = partial_trace(joint, (pc.pair[0], state.n_qubits + 1)).matrix
    return negativity(rho)


def detector_entropy(state: StateVector, pc: PairConfig, dt: float | None = None) -> float:
    """Entropy of the first detector in the pre-measurement joint state."""
    joint = evolve_joint(state, pc, dt).as_state()
    return von_neumann_entropy(partial_trace(joint, (state.n_qubits + 1,)).matrix)


# -- single-detector variant --------------------------------------------------------


def _expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def single_detector_branch(
    two_qubit_state: StateVector,
    theta: float,
    angles: tuple[float, float, float, float],
    alphas: tuple[int, int],
    J: float,
    dt: float,
    outcome: int,
) -> tuple[float, StateVector | None]:
    """One step with a single ancilla coupled to both qubits.

    H = J [cos(theta) s_1^a1 t^z + sin(theta) s_2^a2 t^x]; the ancilla starts
    in cos(eta)|0> + e^{i psi} sin(eta)|1> and is measured in the basis
    labelled by (eta~, psi~).  ``angles`` is (eta, psi, eta~, psi~).
    """
    if two_qubit_state.n_qubits != 2:
        raise ValueError("single-detector step is defined for N=2")
    if not 0.0 <= theta <= np.pi / 2:
        raise ValueError("theta must lie in [0, pi/2]")
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    eta, psi, eta_t, psi_t = angles
    a1, a2 = alphas
    h = J * (
        np.cos(theta) * np.kron(np.kron(PAULI[a1], PAULI[0]), PAULI[3])
        + np.sin(theta) * np.kron(np.kron(PAULI[0], PAULI[a2]), PAULI[1])
    )
    det = np.array([np.cos(eta), np.exp(1j * psi) * np.sin(eta)])
    joint = _expm_hermitian(h, dt) @ np.kron(two_qubit_state.amplitudes, det)
    if outcome == 1:
        proj = np.array([np.cos(eta_t), np.exp(1j * psi_t) * np.sin(eta_t)])
    else:
        proj = np.array([np.sin(eta_t), -np.exp(1j * psi_t) * np.cos(eta_t)])
    branch = joint.reshape(4, 2) @ proj.conj()
    p = float(np.vdot(branch, branch).real)
    return p, (StateVector(2, branch) if p > 1e-300 else None)


def single_detector_step(
    two_qubit_state: StateVector,
    theta: float,
    angles: tuple[float, float, float, float],
    alphas: tuple[int, int],
    J: float,
    dt: float,
    outcome: int,
) -> StateVector:
    p, out = single_detector_branch(two_qubit_state, theta, angles, alphas, J, dt, outcome)
    if out is None:
        raise ValueError("requested outcome has zero probability")
    return out


def schmidt_coefficients(state: StateVector) -> np.ndarray:
    if state.n_qubits != 2:
        raise ValueError("Schmidt decomposition implemented for two qubits")
    return np.linalg.svd(state.amplitudes.reshape(2, 2), compute_uv=False)


def single_detector_angles(theta: float, eta: float, J: float, dt: float) -> tuple[float, float]:
    """Rotation angles (Lambda_+, Lambda_-) for psi = psi~ = 0 and eta~ = -eta."""
    lam_p = np.arctan(np.cos(theta) / np.cos(2 * eta) * np.tan(J * dt))
    lam_m = np.arctan(np.sin(theta) / np.sin(2 * eta) * np.tan(J * dt))
    return float(lam_p), float(lam_m)
