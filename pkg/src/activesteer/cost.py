"""Fidelity-based cost functions and their expected one-step changes.

Every local cost C_r sums squared Bloch-tensor differences over all
r-qubit subsets.  A full Pauli string with support size k appears in
binom(N-k, r-k) of those subsets, so every weighted cost collapses to a
single sum over the 4^N strings with a weight that depends only on k.
That collapse is what the fast kernel below exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
import numpy as np

from .bloch_tensor import (
    SLOT_WEIGHT,
    BlochTensor,
    from_pair_view,
    pair_view,
    rdm_bloch,
    rest_weight_counts,
    transfer_matrix,
)
from .measurement import (
    KAPPA_TOL,
    ConfigTable,
    MeasurementOutcome,
    PairConfig,
    levi_civita,
    lindblad_generator,
    pair_operators,
)
from .quantum_state import PAULI, StateVector, apply_local

WEIGHT_TOL = 1e-12
ORTHO_TOL = 1e-12
# below this jump rate the factored quadratic form loses too many digits
KAPPA_DIRECT = 1e-6
# pair views with at most this many columns use the direct jump evaluation
DIRECT_COLUMNS = 16


@dataclass(frozen=True)
class CostWeights:
    p: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if not p:
            raise ValueError("weights must be non-empty")
        if min(p) < 0:
            raise ValueError("weights must be non-negative")
        if abs(sum(p) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {sum(p)}, not 1")
        object.__setattr__(self, "p", p)

    @property
    def n_qubits(self) -> int:
        return len(self.p)

    @classmethod
    def default(cls, n_qubits: int) -> CostWeights:
        """p_1 = 0.9, p_{r+1} = 0.1 p_r, last entry takes the remainder."""
        return cls.geometric(n_qubits, 0.9)

    @classmethod
    def geometric(cls, n_qubits: int, p1: float) -> CostWeights:
        """p_{r+1} = 0.1 p_r starting from p1; the last entry takes the remainder."""
        if n_qubits == 1:
            return cls((1.0,))
        p = [float(p1)]
        for _ in range(n_qubits - 2):
            p.append(0.1 * p[-1])
        p.append(max(0.0, 1.0 - sum(p)) if abs(1.0 - sum(p)) < WEIGHT_TOL else 1.0 - sum(p))
        return cls(tuple(p))

    @classmethod
    def global_only(cls, n_qubits: int) -> CostWeights:
        return cls((0.0,) * (n_qubits - 1) + (1.0,))


# -- support weights --------------------------------------------------------


@lru_cache(maxsize=None)
def support_sizes(n_qubits: int) -> np.ndarray:
    k = np.zeros(4**n_qubits, dtype=np.int64)
    for i, mu in enumerate(product(range(4), repeat=n_qubits)):
        k[i] = sum(1 for m in mu if m)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=None)
def rank_coefficients(n_qubits: int) -> np.ndarray:
    """c[r-1, k] = binom(N-k, r-k) / (2^(r+1) N_r): C_r = sum_S c[r-1, k(S)] dR_S^2."""
    c = np.zeros((n_qubits, n_qubits + 1))
    for r in range(1, n_qubits + 1):
        nr = math.comb(n_qubits, r)
        for k in range(r + 1):
            c[r - 1, k] = math.comb(n_qubits - k, r - k) / (2 ** (r + 1) * nr)
    c.setflags(write=False)
    return c


def support_weights(weights: CostWeights) -> np.ndarray:
    """w[k] with C = sum_S (w[k(S)] / 2) dR_S^2."""
    return 2.0 * np.asarray(weights.p) @ rank_coefficients(weights.n_qubits)


@lru_cache(maxsize=None)
def _rank_matrix(n_qubits: int) -> np.ndarray:
    m = rank_coefficients(n_qubits)[:, support_sizes(n_qubits)]
    m.setflags(write=False)
    return m


def cost_components(coeffs: np.ndarray, target_coeffs: np.ndarray, n_qubits: int) -> np.ndarray:
    """(C_1, ..., C_N) from raw Bloch coefficient arrays."""
    d = coeffs - target_coeffs
    return _rank_matrix(n_qubits) @ (d * d)


def _check_pair(bloch: BlochTensor, target: BlochTensor) -> None:
    if bloch.n_qubits != target.n_qubits:
        raise ValueError("state and target have different N")


def global_cost(bloch: BlochTensor, target: BlochTensor) -> float:
    _check_pair(bloch, target)
    c = 1.0 - float(np.dot(bloch.coeffs, target.coeffs)) / 2**bloch.n_qubits
    return min(1.0, max(0.0, c))


def local_cost(bloch: BlochTensor, target: BlochTensor, r: int) -> float:
    """Mean squared Frobenius distance between all r-qubit RDMs (direct subset sum)."""
    _check_pair(bloch, target)
    n = bloch.n_qubits
    if not 1 <= r <= n:
        raise ValueError(f"r={r} outside 1..{n}")
    total = 0.0
    for subset in combinations(range(1, n + 1), r):
        a = rdm_bloch(bloch, subset).coeffs
        b = rdm_bloch(target, subset).coeffs
        total += float(np.sum((a - b) ** 2))
    return total / (2 ** (r + 1) * math.comb(n, r))


def total_cost(bloch: BlochTensor, target: BlochTensor, weights: CostWeights) -> float:
    _check_pair(bloch, target)
    if weights.n_qubits != bloch.n_qubits:
        raise ValueError("weights do not match N")
    return float(np.dot(weights.p, cost_components(bloch.coeffs, target.coeffs, bloch.n_qubits)))


# -- expected cost change: reference path ----------------------------------------


def _pair_weight_matrix(w: np.ndarray, n_qubits: int) -> np.ndarray:
    return w[SLOT_WEIGHT[:, None] + rest_weight_counts(n_qubits)[None, :]]


def expected_dC(
    bloch: BlochTensor,
    target: BlochTensor,
    pc: PairConfig,
    weights: CostWeights,
    dt: float | None = None,
) -> float:
    """Outcome-averaged change of the total cost for one pair config.

    Sums w(S) * [(R_S - R^f_S) mean(dR_S) + mean(dR_S^2) / 2] where the
    squared change comes only from the jump branches.
    """
    _check_pair(bloch, target)
    pc = pc.with_dt(dt)
    n = bloch.n_qubits
    r = pair_view(bloch.coeffs, n, pc.pair)
    d = r - pair_view(target.coeffs, n, pc.pair)
    wm = _pair_weight_matrix(support_weights(weights), n)
    mean_dr = pc.dt * (lindblad_generator(pc) @ r)
    half_sq = np.zeros_like(r)
    for c in pair_operators(pc).jump:
        t = transfer_matrix(c).real
        kappa = float(t[0] @ r[:, 0])
        if kappa < KAPPA_TOL:
            continue
        g = 0.5 * (t @ r - kappa * r)
        half_sq += pc.dt * g * g / kappa
    return float(np.sum(wm * (d * mean_dr + half_sq)))


# -- expected cost change: all configs at once -----------------------------------


@dataclass(frozen=True)
class SelectionKernel:
    """State-independent pieces for evaluating expected_dC over a config table.

    The linear part is <L_K, Y> with Y = (W*D) R^T.  The jump part is a
    quadratic form in R; grouping pair slots by their support size k turns
    it into <Q_k, Gm_k> - 2 kappa <A_k, Gm_k> + kappa^2 tr_k(Gm_k) with
    Gm_k = R diag(w_k) R^T.  Narrow pair views (small N) skip the quadratic
    form and apply the jump transfer matrices directly.
    """

    n_qubits: int
    table: ConfigTable
    weight_matrix: np.ndarray = field(repr=False)  # (16, K)
    rest_weights: np.ndarray = field(repr=False)  # (3, K)
    gen_flat: np.ndarray = field(repr=False)  # (nK, 256)
    jump_rows: np.ndarray = field(repr=False)  # (nJ,) flat (config, eta) indices
    jump_unique: np.ndarray = field(repr=False)  # (nJ,) index into the distinct jump maps
    q_stack: np.ndarray = field(repr=False)  # (nU, 768)
    jump_flat: np.ndarray = field(repr=False)  # (nU, 256) distinct jump transfer matrices
    jump_stack: np.ndarray = field(repr=False)  # (nU * 16, 16) same, stacked by rows
    kappa_rows: np.ndarray = field(repr=False)  # (nU, 16)
    jump_to_config: np.ndarray = field(repr=False)  # (nK, nU) multiplicities

    def evaluate_dc(self, coeffs: np.ndarray, target_coeffs: np.ndarray, pair: tuple[int, int]) -> np.ndarray:
        """Expected cost change per flat config index."""
        n = self.n_qubits
        r = pair_view(coeffs, n, pair)
        d = r - pair_view(target_coeffs, n, pair)
        y = (self.weight_matrix * d) @ r.T
        dc = self.table.dt * (self.gen_flat @ y.ravel())
        if r.shape[1] <= DIRECT_COLUMNS:
            quad, _ = self._jump_direct(r)
        else:
            quad, _ = self._jump_quadratic(r)
        dc += self.jump_to_config @ quad
        return dc

    def evaluate(self, coeffs: np.ndarray, target_coeffs: np.ndarray, pair: tuple[int, int]):
        """Return (dC per config, kappa per config and eta)."""
        n = self.n_qubits
        dt = self.table.dt
        r = pair_view(coeffs, n, pair)
        d = r - pair_view(target_coeffs, n, pair)
        y = (self.weight_matrix * d) @ r.T
        dc = dt * (self.gen_flat @ y.ravel())
        if r.shape[1] <= DIRECT_COLUMNS:
            quad, kappa = self._jump_direct(r)
        else:
            quad, kappa = self._jump_quadratic(r)
        quad = quad[self.jump_unique]
        kappa = kappa[self.jump_unique]
        nk = self.table.size
        dc += np.bincount(self.jump_rows // 2, weights=quad, minlength=nk)
        kap = np.zeros(2 * nk)
        kap[self.jump_rows] = np.maximum(kappa, 0.0)
        return dc, kap.reshape(nk, 2)

    def _jump_direct(self, r: np.ndarray):
        # G = (T R - kappa R) / 2 for every jump row at once
        nj = len(self.jump_flat)
        tr = (self.jump_stack @ r).reshape(nj, 16, -1)
        kappa = tr[:, 0, 0].copy()
        g = tr - kappa[:, None, None] * r
        num = 0.25 * ((g * g).reshape(nj, -1) @ self.weight_matrix.ravel())
        ok = kappa >= KAPPA_TOL
        quad = np.where(ok, self.table.dt * num / np.where(ok, kappa, 1.0), 0.0)
        return quad, kappa

    def _jump_quadratic(self, r: np.ndarray):
        dt = self.table.dt
        gm = np.einsum("kj,aj,bj->kab", self.rest_weights, r, r)
        # only the slot-weight block of each row enters the linear-in-kappa term
        gsel = gm[SLOT_WEIGHT, np.arange(16), :]
        tsum = float(np.trace(gsel))
        kappa = self.kappa_rows @ r[:, 0]
        num = 0.25 * (self.q_stack @ gm.ravel() - 2.0 * kappa * (self.jump_flat @ gsel.ravel()) + kappa**2 * tsum)
        ok = kappa >= KAPPA_TOL
        quad = np.where(ok, dt * num / np.where(ok, kappa, 1.0), 0.0)

        shaky = np.flatnonzero(ok & (kappa < KAPPA_DIRECT))
        for i in shaky:
            t = self.jump_flat[i].reshape(16, 16)
            gg = 0.5 * (t @ r - kappa[i] * r)
            quad[i] = dt * float(np.sum(self.weight_matrix * gg * gg)) / kappa[i]
        return quad, kappa


def selection_kernel(n_qubits: int, table: ConfigTable, weights: CostWeights) -> SelectionKernel:
    return _selection_kernel(n_qubits, table, weights.p)


@lru_cache(maxsize=32)
def _selection_kernel(n_qubits: int, table: ConfigTable, p: tuple[float, ...]) -> SelectionKernel:
    if n_qubits < 2:
        raise ValueError("steering needs N >= 2")
    w = support_weights(CostWeights(p))
    rest = rest_weight_counts(n_qubits)
    rest_w = np.stack([w[k + rest] for k in range(3)])
    wm = _pair_weight_matrix(w, n_qubits)
    nk = table.size
    rows = [2 * k + e for k in range(nk) if table.has_jump[k] for e in range(2)]
    rows = np.array(rows, dtype=np.int64)
    ptm = table.jump_ptm.reshape(-1, 16, 16)[rows]
    # many configs share a jump operator (sign and z-axis partners do not enter it)
    _, first, inverse = np.unique(
        np.round(ptm.reshape(len(rows), -1), 13), axis=0, return_index=True, return_inverse=True
    )
    ptm = ptm[first]
    masks = np.stack([(SLOT_WEIGHT == k).astype(float) for k in range(3)])
    q = np.einsum("kx,jxa,jxb->jkab", masks, ptm, ptm).reshape(len(ptm), -1)
    kr = ptm[:, 0, :].copy()
    to_config = np.zeros((nk, len(ptm)))
    np.add.at(to_config, (rows // 2, inverse.reshape(-1)), 1.0)
    return SelectionKernel(
        n_qubits,
        table,
        wm,
        rest_w,
        table.generator.reshape(nk, -1),
        rows,
        inverse.reshape(-1),
        q,
        ptm.reshape(len(ptm), -1).copy(),
        ptm.reshape(-1, 16).copy(),
        kr,
        to_config,
    )


# -- explicit pair tensors --------------------------------------------------------


@lru_cache(maxsize=None)
def _pair_tensor_maps(a1: int, a2: int) -> dict[str, np.ndarray]:
    s1 = np.kron(PAULI[a1], PAULI[0])
    s2 = np.kron(PAULI[0], PAULI[a2])
    ss = s1 @ s2
    i4 = np.eye(4, dtype=np.complex128)
    maps = {
        "F": 0.5 * (transfer_matrix(s1, s2) + transfer_matrix(s2, s1)),
        "H": 0.5 * (transfer_matrix(ss, i4) + transfer_matrix(i4, ss)),
        "Fp": 0.5j * (transfer_matrix(s2, s1) - transfer_matrix(s1, s2)),
        "C": 0.5 * (transfer_matrix(-1j * ss, i4) + transfer_matrix(i4, -1j * ss)),
    }
    out = {}
    for key, m in maps.items():
        if np.abs(m.imag).max() > 1e-12:
            raise ArithmeticError(f"{key} map is not real")
        out[key] = m.real
        out[key].setflags(write=False)
    return out


@dataclass(frozen=True)
class PairTensors:
    """Pair-slot tensors for one steered pair, each shaped (16, 4^(N-2)).

    F_S = Tr((s_n rho s_n2 + s_n2 rho s_n) S)/2, H_S = Tr({s_n s_n2, rho} S)/2,
    Fp_S = Tr(i(s_n2 rho s_n - s_n rho s_n2) S)/2 (needed for mixed x/y
    detector axes), C_S = Tr(-i[s_n s_n2, rho] S)/2, plus G for eta = +-1.
    """

    pair: tuple[int, int]
    R: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    Fp: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    G: tuple[np.ndarray, np.ndarray] = field(repr=False)
    Q: float = 0.0
    kappa: tuple[float, float] = (0.0, 0.0)


def _dephased(r: np.ndarray, axis: int, slot: int) -> np.ndarray:
    """R restricted to pair slots whose digit ``slot`` is not in {0, axis}."""
    mu = np.arange(16) // 4 if slot == 0 else np.arange(16) % 4
    mask = (mu != 0) & (mu != axis)
    return r * mask[:, None]


def _rotation(r: np.ndarray, axis: int, slot: int) -> np.ndarray:
    """-2 sum_c eps(axis, mu, c) R_{mu -> c} on one pair slot."""
    out = np.zeros_like(r)
    for a in range(16):
        mu = (a // 4, a % 4)
        b = mu[slot]
        if b == 0 or b == axis:
            continue
        for c in (1, 2, 3):
            eps = levi_civita(axis, b, c)
            if eps:
                src = list(mu)
                src[slot] = c
                out[a] += -2 * eps * r[4 * src[0] + src[1]]
    return out


def pair_tensors(bloch: BlochTensor, pc: PairConfig) -> PairTensors:
    k1, k2 = pc.configs
    g1, g2 = pc.rates
    r = pair_view(bloch.coeffs, bloch.n_qubits, pc.pair)
    maps = _pair_tensor_maps(k1.alpha, k2.alpha)
    f, h, fp, c = (maps[key] @ r for key in ("F", "H", "Fp", "C"))
    q = float(r[4 * k1.alpha + k2.alpha, 0])
    same = (k1.beta == 1 and k2.beta == 1) or (k1.beta == 2 and k2.beta == 2)
    mixed = (k1.beta == 1 and k2.beta == 2) - (k1.beta == 2 and k2.beta == 1)
    root = np.sqrt(g1 * g2)
    base = -(g1 * k1.transverse * _dephased(r, k1.alpha, 0) + g2 * k2.transverse * _dephased(r, k2.alpha, 1))
    gs, ks = [], []
    for eta in (1, -1):
        g = base + eta * root * (same * (f - q * r) + mixed * fp)
        gs.append(g)
        ks.append(g1 * k1.transverse + g2 * k2.transverse + 2 * eta * root * same * q)
    return PairTensors(pc.pair, r, f, h, fp, c, (gs[0], gs[1]), q, (ks[0], ks[1]))


def pair_tensor_dR(
    bloch: BlochTensor,
    pc: PairConfig,
    outcome: MeasurementOutcome,
    string,
    dt: float | None = None,
) -> float:
    """First-order change of one Bloch coefficient conditioned on ``outcome``."""
    pc = pc.with_dt(dt)
    n = bloch.n_qubits
    mu = tuple(string.mu if hasattr(string, "mu") else string)
    tens = pair_tensors(bloch, pc)
    i = 0 if outcome.eta == 1 else 1
    if outcome.xi == 1:
        kappa = tens.kappa[i]
        if kappa <= KAPPA_TOL:
            raise ValueError("jump outcome with vanishing jump rate")
        dr = 2.0 * tens.G[i] / kappa
    else:
        k1, k2 = pc.configs
        j1, j2 = pc.couplings
        root = np.sqrt(pc.rates[0] * pc.rates[1])
        same = (k1.beta == 1 and k2.beta == 1) or (k1.beta == 2 and k2.beta == 2)
        lamb = {k1.beta, k2.beta} == {1, 2}
        r = tens.R
        dr = np.zeros_like(r)
        if k1.beta == 3:
            dr += k1.s * j1 * _rotation(r, k1.alpha, 0)
        if k2.beta == 3:
            dr += k2.s * j2 * _rotation(r, k2.alpha, 1)
        dr += 2 * outcome.eta * root * (lamb * tens.C - same * (tens.H - tens.Q * r))
        dr = pc.dt * dr
    full = from_pair_view(dr, n, pc.pair)
    idx = 0
    for m in mu:
        idx = 4 * idx + m
    return float(full[idx])


# -- weak values -------------------------------------------------------------------


@dataclass(frozen=True)
class WeakValueTable:
    """W[m-1, a-1] = <target|sigma_m^a|state> / <target|state>, or None when
    the states are orthogonal."""

    values: np.ndarray | None
    overlap: complex

    @property
    def defined(self) -> bool:
        return self.values is not None

    def __getitem__(self, key: tuple[int, int]) -> complex:
        if self.values is None:
            raise ValueError("weak values undefined for orthogonal states")
        m, a = key
        return complex(self.values[m - 1, a - 1])


def _pauli_elements(state: StateVector, target: StateVector) -> np.ndarray:
    n = state.n_qubits
    out = np.zeros((n, 3), dtype=np.complex128)
    for m in range(1, n + 1):
        for a in (1, 2, 3):
            out[m - 1, a - 1] = np.vdot(target.amplitudes, apply_local(state.amplitudes, n, [m], PAULI[a]))
    return out


def weak_values(state: StateVector, target: StateVector) -> WeakValueTable:
    ov = complex(np.vdot(target.amplitudes, state.amplitudes))
    if abs(ov) <= ORTHO_TOL:
        return WeakValueTable(None, ov)
    return WeakValueTable(_pauli_elements(state, target) / ov, ov)


def expected_dCN_weak(state: StateVector, target: StateVector, pc: PairConfig, dt: float | None = None) -> float:
    """Expected change of 1 - F^2 from single-qubit weak values."""
    pc = pc.with_dt(dt)
    wv = weak_values(state, target)
    total = 0.0
    if not wv.defined:
        el = _pauli_elements(state, target)
        for q, k, g in zip(pc.pair, pc.configs, pc.rates):
            if k.transverse:
                total -= pc.dt * g * abs(el[q - 1, k.alpha - 1]) ** 2
        return float(total)
    for q, k, j, g in zip(pc.pair, pc.configs, pc.couplings, pc.rates):
        w = wv[q, k.alpha]
        if k.beta == 3:
            total += -2 * k.s * j * w.imag
        else:
            total += g * (1 - abs(w) ** 2)
    return float(pc.dt * abs(wv.overlap) ** 2 * total)


# -- closed forms ----------------------------------------------------------------


def _x_term(r: np.ndarray, a1: int, a2: int) -> float:
    r1 = r[1:, 0]
    r2 = r[0, 1:]
    q = r[a1, a2]
    return float(
        0.5 * (1 - q * q) * (r1 @ r1 + r2 @ r2) - r1[a1 - 1] ** 2 - r2[a2 - 1] ** 2 + 2 * q * r1[a1 - 1] * r2[a2 - 1]
    )


def x_term(bloch: BlochTensor, a1: int, a2: int) -> float:
    if bloch.n_qubits != 2:
        raise ValueError("X term is defined for N=2")
    return _x_term(bloch.tensor, a1, a2)


def _ratio_prefactor(g1: float, g2: float, q: float) -> float:
    """g1 g2 (g1+g2) / ((g1+g2)^2 - 4 g1 g2 q^2), which is 0/0-safe."""
    s = g1 + g2
    den = s * s - 4 * g1 * g2 * q * q
    if abs(den) >= 1e-12:
        return g1 * g2 * s / den
    # split into the two eta channels and drop the one whose rate vanishes
    root = np.sqrt(g1 * g2)
    total = 0.0
    for eta in (1, -1):
        kappa = s + 2 * eta * root * q
        if kappa >= KAPPA_TOL:
            total += 0.5 * g1 * g2 / kappa
    return total


def n2_closed_forms(
    bloch: BlochTensor, target: BlochTensor, pc: PairConfig, dt: float | None = None
) -> tuple[float, float]:
    """(dC_1, dC_2) for N=2 from Bloch vectors, S-vectors and the X term.

    Only detector axes x and z are covered by these expressions.
    """
    if bloch.n_qubits != 2 or target.n_qubits != 2:
        raise ValueError("closed forms require N=2")
    if any(k.beta == 2 for k in pc.configs):
        raise ValueError("closed forms cover detector axes x and z only")
    pc = pc.with_dt(dt)
    if tuple(sorted(pc.pair)) != (1, 2):
        raise ValueError("pair must be (1, 2)")
    # closed forms are written for qubit 1 <-> config 0
    configs = pc.configs if pc.pair == (1, 2) else pc.configs[::-1]
    couplings = pc.couplings if pc.pair == (1, 2) else pc.couplings[::-1]
    rates = pc.rates if pc.pair == (1, 2) else pc.rates[::-1]

    r, rf = bloch.tensor, target.tensor
    vec = [r[1:, 0], r[0, 1:]]
    vecf = [rf[1:, 0], rf[0, 1:]]
    svec = [[r[1:, b] for b in (1, 2, 3)], [r[b, 1:] for b in (1, 2, 3)]]
    svecf = [[rf[1:, b] for b in (1, 2, 3)], [rf[b, 1:] for b in (1, 2, 3)]]
    dc1 = 0.0
    dc2 = 0.0
    for m in range(2):
        k, j, g = configs[m], couplings[m], rates[m]
        a = k.alpha - 1
        others = [x for x in range(3) if x != a]
        if k.beta == 3:
            cross = np.cross(vec[m], vecf[m])[a]
            cross_s = sum(np.cross(svec[m][b], svecf[m][b])[a] for b in range(3))
            dc1 += -k.s * j * cross
            dc2 += -k.s * j * (cross + cross_s)
        else:
            par = sum(vec[m][x] * vecf[m][x] for x in others)
            par_s = sum(svec[m][b][x] * svecf[m][b][x] for b in range(3) for x in others)
            dc1 += g * par
            dc2 += g * (par + par_s)
    dc1 *= 0.5 * pc.dt
    dc2 *= 0.5 * pc.dt
    if configs[0].beta == 1 and configs[1].beta == 1:
        a1, a2 = configs[0].alpha, configs[1].alpha
        dc1 -= pc.dt * _ratio_prefactor(rates[0], rates[1], r[a1, a2]) * _x_term(r, a1, a2)
    return float(dc1), float(dc2)


def n3_qubit3_closed_form(bloch: BlochTensor, pc: PairConfig, dt: float | None = None) -> float:
    """Jump-driven change of qubit 3's single-qubit cost when (1, 2) is steered.

    This is the {3}-subset term of dC_1 before the average over the N_1 = 3
    subsets, i.e. sum_mu mean(dR_{0,0,mu}^2) / 4.
    """
    if bloch.n_qubits != 3 or tuple(pc.pair) != (1, 2):
        raise ValueError("defined for N=3 with pair (1, 2)")
    pc = pc.with_dt(dt)
    k1, k2 = pc.configs
    same = (k1.beta == 1 and k2.beta == 1) or (k1.beta == 2 and k2.beta == 2)
    if not same:
        return 0.0
    t = bloch.tensor
    q = t[k1.alpha, k2.alpha, 0]
    s = sum((t[k1.alpha, k2.alpha, a] - q * t[0, 0, a]) ** 2 for a in (1, 2, 3))
    return float(pc.dt * _ratio_prefactor(*pc.rates, q) * s)
