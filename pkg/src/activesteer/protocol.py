"""Active steering loop: schedule pairs, pick the config with the best expected
cost gain, sample the Bell outcome, update the state, repeat until the
fidelity threshold is reached.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .bloch_tensor import BlochTensor, bloch_coeffs, from_pair_view, pair_view
from .cost import CostWeights, SelectionKernel, cost_components, selection_kernel
from .measurement import (
    OUTCOMES,
    ConfigTable,
    MeasurementOutcome,
    PairConfig,
    WEAK_LIMIT,
    WeakLimitWarning,
    config_table,
    sample_from_kappa,
)
from .quantum_state import (
    StateVector,
    TargetStateSpec,
    ENTROPY_CLIP,
    entanglement_entropy,
    make_target,
)

SCHEDULERS = ("alternating", "random")
STEERING_SETS = ("full12", "nobetay")
TIE_TOL = 1e-12
TRAPPED_TOL = -1e-12
# full Bloch recomputation interval, bounds drift of the incremental update
RESYNC_EVERY = 512


def default_max_steps(target: TargetStateSpec, n_qubits: int) -> int:
    """Roughly ten times the typical median step count for each target."""
    if n_qubits <= 2:
        return 250
    if n_qubits == 3:
        return 4000 if target.kind == "w" else 1000
    return 20000


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class ProtocolParams:
    n_qubits: int
    target: TargetStateSpec
    dt: float = 0.2
    couplings: tuple[float, ...] | None = None
    weights: CostWeights | None = None
    f_star: float = 0.99
    max_steps: int | None = None
    scheduler: str = "random"
    steering_set: str = "nobetay"
    seed: int = 0
    initial: TargetStateSpec | None = None
    entropy_subset: tuple[int, ...] | None = None

    def __post_init__(self):
        n = self.n_qubits
        if n < 2:
            raise ValueError("steering needs N >= 2")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 < self.f_star <= 1:
            raise ValueError("f_star must lie in (0, 1]")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"scheduler must be one of {SCHEDULERS}")
        if self.steering_set not in STEERING_SETS:
            raise ValueError(f"steering_set must be one of {STEERING_SETS}")
        if self.couplings is None:
            object.__setattr__(self, "couplings", (1.0,) * n)
        object.__setattr__(self, "couplings", tuple(float(j) for j in self.couplings))
        if len(self.couplings) != n or min(self.couplings) <= 0:
            raise ValueError("need one positive coupling per qubit")
        if self.weights is None:
            object.__setattr__(self, "weights", CostWeights.default(n))
        if self.weights.n_qubits != n:
            raise ValueError("weights do not match N")
        if self.max_steps is None:
            object.__setattr__(self, "max_steps", default_max_steps(self.target, n))
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.initial is None:
            object.__setattr__(self, "initial", TargetStateSpec("product", bits="0" * n))
        if self.entropy_subset is None:
            object.__setattr__(self, "entropy_subset", tuple(range(1, n // 2 + 1)))
        sub = tuple(self.entropy_subset)
        if not sub or len(sub) >= n or sorted(set(sub)) != list(sub) or sub[0] < 1 or sub[-1] > n:
            raise ValueError("entropy_subset must be a proper, ordered subset of 1..N")
        object.__setattr__(self, "entropy_subset", sub)
        if max(self.couplings) * self.dt > WEAK_LIMIT:
            warnings.warn(
                f"J*dt = {max(self.couplings) * self.dt:.3g} exceeds {WEAK_LIMIT}; first-order steps are unreliable",
                WeakLimitWarning,
                stacklevel=3,
            )
        # raises early on incompatible N
        make_target(self.target, n)
        make_target(self.initial, n)

    @property
    def allow_beta_y(self) -> bool:
        return self.steering_set == "full12"

    def table(self, pair: tuple[int, int]) -> ConfigTable:
        j = (self.couplings[pair[0] - 1], self.couplings[pair[1] - 1])
        return config_table(j, self.dt, self.allow_beta_y)

    def kernel(self, pair: tuple[int, int]) -> SelectionKernel:
        return selection_kernel(self.n_qubits, self.table(pair), self.weights)


@dataclass(frozen=True)
class StepEntry:
    cycle: int
    pairs: tuple[tuple[int, int], ...]
    configs: tuple[PairConfig, ...]
    outcomes: tuple[MeasurementOutcome, ...]
    fidelity: float
    costs: np.ndarray
    total_cost: float
    entropy: float
    trapped: bool


@dataclass
class TrajectoryRecord:
    """Per-cycle history of one trajectory.

    Row 0 of ``fidelity``, ``costs``, ``total_cost`` and ``entropy`` is the
    initial state; row c is the state after cycle c.  ``config_index`` and
    ``outcome_index`` have one row per executed cycle and one column per
    steered pair.
    """

    index: int
    n_qubits: int
    converged: bool
    n_steps: int
    pairs: np.ndarray = field(repr=False)  # (n_steps, n_pairs, 2)
    config_index: np.ndarray = field(repr=False)  # (n_steps, n_pairs)
    outcome_index: np.ndarray = field(repr=False)  # (n_steps, n_pairs)
    min_expected_dC: np.ndarray = field(repr=False)  # (n_steps, n_pairs)
    fidelity: np.ndarray = field(repr=False)  # (n_steps + 1,)
    costs: np.ndarray = field(repr=False)  # (n_steps + 1, N)
    total_cost: np.ndarray = field(repr=False)  # (n_steps + 1,)
    entropy: np.ndarray = field(repr=False)  # (n_steps + 1,)
    final_state: np.ndarray = field(repr=False)

    @property
    def trapped(self) -> np.ndarray:
        return self.min_expected_dC > TRAPPED_TOL

    def steps(self, params: ProtocolParams) -> Iterator[StepEntry]:
        for c in range(self.n_steps):
            pairs = tuple(tuple(int(q) for q in p) for p in self.pairs[c])
            pcs = tuple(params.table(p).pair_config(int(k), p) for p, k in zip(pairs, self.config_index[c]))
            yield StepEntry(
                cycle=c + 1,
                pairs=pairs,
                configs=pcs,
                outcomes=tuple(OUTCOMES[int(o)] for o in self.outcome_index[c]),
                fidelity=float(self.fidelity[c + 1]),
                costs=self.costs[c + 1],
                total_cost=float(self.total_cost[c + 1]),
                entropy=float(self.entropy[c + 1]),
                trapped=bool(np.any(self.trapped[c])),
            )

    def same_as(self, other: TrajectoryRecord) -> bool:
        arrays = (
            "pairs",
            "config_index",
            "outcome_index",
            "min_expected_dC",
            "fidelity",
            "costs",
            "total_cost",
            "entropy",
            "final_state",
        )
        return (
            (self.index, self.n_qubits, self.converged, self.n_steps)
            == (other.index, other.n_qubits, other.converged, other.n_steps)
            and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
        )


# -- scheduling ----------------------------------------------------------------------


def schedule_pairs(n_qubits: int, cycle: int, mode: str, rng: np.random.Generator | None = None) -> list[tuple[int, int]]:
    """floor(N/2) disjoint nearest-neighbour pairs on the ring 1..N."""
    if n_qubits < 2:
        raise ValueError("need at least two qubits")
    if n_qubits == 2:
        return [(1, 2)]
    n_offsets = 2 if n_qubits % 2 == 0 else n_qubits
    if mode == "alternating":
        offset = cycle % n_offsets
    elif mode == "random":
        if rng is None:
            raise ValueError("random scheduling needs an rng")
        offset = int(rng.integers(n_offsets))
    else:
        raise ValueError(f"unknown scheduler {mode!r}")
    pairs = []
    for i in range(n_qubits // 2):
        a = (offset + 2 * i) % n_qubits
        pairs.append((a + 1, (a + 1) % n_qubits + 1))
    return pairs


# -- one cycle ------------------------------------------------------------------------


def _choose(dc: np.ndarray, rng: np.random.Generator) -> int:
    k = int(dc.argmin())
    near = dc <= dc[k] + TIE_TOL
    if np.count_nonzero(near) == 1:
        return k
    cand = np.flatnonzero(near)
    return int(cand[rng.integers(len(cand))])


def select_config(
    bloch: BlochTensor,
    target: BlochTensor,
    pair: tuple[int, int],
    params: ProtocolParams,
    rng: np.random.Generator,
) -> PairConfig:
    """Config pair with the most negative expected cost change (ties drawn uniformly)."""
    kernel = params.kernel(pair)
    dc, _ = kernel.evaluate(bloch.coeffs, target.coeffs, pair)
    return kernel.table.pair_config(_choose(dc, rng), pair)


@lru_cache(maxsize=None)
def _pair_gather(n_qubits: int, pair: tuple[int, int]) -> np.ndarray:
    """Flat amplitude indices shaped (2^(N-2), 4); column = 2*b_n + b_n2."""
    bits = (np.arange(2**n_qubits)[:, None] >> (n_qubits - np.arange(1, n_qubits + 1))) & 1
    n, n2 = pair
    local = 2 * bits[:, n - 1] + bits[:, n2 - 1]
    order = np.lexsort((local, *[bits[:, q - 1] for q in range(n_qubits, 0, -1) if q not in pair]))
    idx = order.reshape(-1, 4)
    idx.setflags(write=False)
    return idx


def _apply_pair(psi: np.ndarray, n_qubits: int, pair: tuple[int, int], op: np.ndarray) -> np.ndarray:
    idx = _pair_gather(n_qubits, pair)
    out = np.empty_like(psi)
    out[idx] = psi[idx] @ op.T
    return out / np.sqrt(np.vdot(out, out).real)


@dataclass
class _Work:
    psi: np.ndarray
    coeffs: np.ndarray
    kernels: dict = field(default_factory=dict)

    def kernel(self, pair: tuple[int, int], params: ProtocolParams) -> SelectionKernel:
        k = self.kernels.get(pair)
        if k is None:
            k = self.kernels[pair] = params.kernel(pair)
        return k


def _cycle(
    work: _Work,
    target_coeffs: np.ndarray,
    pairs: Sequence[tuple[int, int]],
    params: ProtocolParams,
    rng: np.random.Generator,
):
    n = params.n_qubits
    # every pair's config is decided from the state at the start of the cycle
    chosen = []
    for pair in pairs:
        kernel = work.kernel(pair, params)
        dc = kernel.evaluate_dc(work.coeffs, target_coeffs, pair)
        k = _choose(dc, rng)
        chosen.append((pair, kernel.table, k, float(dc[k])))
    outcomes = []
    for pair, table, k, _ in chosen:
        view = pair_view(work.coeffs, n, pair)
        kap = table.jump_ptm[k, :, 0, :] @ view[:, 0]
        o = sample_from_kappa(max(float(kap[0]), 0.0), max(float(kap[1]), 0.0), params.dt, rng)
        work.psi = _apply_pair(work.psi, n, pair, table.kraus[k, o])
        view = table.kraus_ptm[k, o] @ view
        view /= view[0, 0]
        work.coeffs = from_pair_view(view, n, pair)
        outcomes.append(o)
    return chosen, outcomes


def run_step(
    state: StateVector,
    bloch: BlochTensor,
    target: BlochTensor,
    pairs: Sequence[tuple[int, int]],
    params: ProtocolParams,
    rng: np.random.Generator,
) -> tuple[StateVector, BlochTensor, list[MeasurementOutcome]]:
    flat = [q for p in pairs for q in p]
    if len(flat) != len(set(flat)):
        raise ValueError("pairs must be disjoint")
    work = _Work(state.amplitudes.copy(), bloch.coeffs.copy())
    _, outcomes = _cycle(work, target.coeffs, pairs, params, rng)
    return (
        StateVector(state.n_qubits, work.psi),
        BlochTensor(state.n_qubits, work.coeffs),
        [OUTCOMES[o] for o in outcomes],
    )


# -- trajectories ----------------------------------------------------------------------


def _entropy(psi: np.ndarray, coeffs: np.ndarray, params: ProtocolParams) -> float:
    sub = params.entropy_subset
    n = params.n_qubits
    if len(sub) == 1:
        # single-qubit spectrum from its Bloch vector
        step = 4 ** (n - sub[0])
        v = coeffs[step : 4 * step : step]
        r = min(1.0, float(np.sqrt(v @ v)))
        p = np.array([(1.0 + r) / 2, (1.0 - r) / 2])
        p = p[p > ENTROPY_CLIP]
        return max(0.0, float(-np.sum(p * np.log(p))))
    if sub == tuple(range(1, len(sub) + 1)):
        s = np.linalg.svd(psi.reshape(2 ** len(sub), -1), compute_uv=False)
        p = s * s
        p = p[p > ENTROPY_CLIP]
        return max(0.0, float(-np.sum(p * np.log(p))))
    return entanglement_entropy(StateVector(n, psi), sub)


def run_trajectory(params: ProtocolParams, index: int = 0) -> TrajectoryRecord:
    n = params.n_qubits
    rng = trajectory_rng(params.seed, index)
    target = make_target(params.target, n)
    target_coeffs = bloch_coeffs(target.amplitudes, n)
    start = make_target(params.initial, n)
    work = _Work(start.amplitudes.copy(), bloch_coeffs(start.amplitudes, n))
    n_pairs = n // 2

    fid = [min(1.0, abs(np.vdot(target.amplitudes, work.psi)))]
    costs = [cost_components(work.coeffs, target_coeffs, n)]
    ent = [_entropy(work.psi, work.coeffs, params)]
    pairs_log, cfg_log, out_log, min_log = [], [], [], []
    cycle = 0
    while fid[-1] < params.f_star and cycle < params.max_steps:
        pairs = schedule_pairs(n, cycle, params.scheduler, rng)
        chosen, outcomes = _cycle(work, target_coeffs, pairs, params, rng)
        cycle += 1
        if cycle % RESYNC_EVERY == 0:
            work.coeffs = bloch_coeffs(work.psi, n)
        pairs_log.append(pairs)
        cfg_log.append([c[2] for c in chosen])
        min_log.append([c[3] for c in chosen])
        out_log.append(outcomes)
        fid.append(min(1.0, abs(np.vdot(target.amplitudes, work.psi))))
        costs.append(cost_components(work.coeffs, target_coeffs, n))
        ent.append(_entropy(work.psi, work.coeffs, params))

    costs_arr = np.array(costs)
    return TrajectoryRecord(
        index=index,
        n_qubits=n,
        converged=bool(fid[-1] >= params.f_star),
        n_steps=cycle,
        pairs=np.array(pairs_log, dtype=np.int8).reshape(cycle, n_pairs, 2),
        config_index=np.array(cfg_log, dtype=np.int16).reshape(cycle, n_pairs),
        outcome_index=np.array(out_log, dtype=np.int8).reshape(cycle, n_pairs),
        min_expected_dC=np.array(min_log, dtype=float).reshape(cycle, n_pairs),
        fidelity=np.array(fid),
        costs=costs_arr,
        total_cost=costs_arr @ np.asarray(params.weights.p),
        entropy=np.array(ent),
        final_state=work.psi.copy(),
    )


def _run_chunk(args: tuple[ProtocolParams, Sequence[int]]) -> list[TrajectoryRecord]:
    params, indices = args
    return [run_trajectory(params, i) for i in indices]


def run_ensemble(params: ProtocolParams, M: int, parallelism: int = 1) -> list[TrajectoryRecord]:
    """M independent trajectories; record i always uses stream (seed, i)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if parallelism == 1 or M == 1:
        return [run_trajectory(params, i) for i in range(M)]
    n_chunks = min(M, parallelism * 4)
    chunks = [list(range(i, M, n_chunks)) for i in range(n_chunks)]
    records: list[TrajectoryRecord] = []
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        for part in pool.map(_run_chunk, [(params, c) for c in chunks]):
            records.extend(part)
    records.sort(key=lambda r: r.index)
    return records


def default_parallelism() -> int:
    env = os.environ.get("ACTIVESTEER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ACTIVESTEER_THREADS={env!r} is not an integer") from None
    return 1


def with_seed(params: ProtocolParams, seed: int) -> ProtocolParams:
    return replace(params, seed=seed)
