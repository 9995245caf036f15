"""Self-check suite run by ``activesteer validate``: oracle equivalences and
invariants on small registers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bloch_tensor import bloch_coeffs, bloch_from_state, rdm_bloch, rdm_matrix_from_bloch
from .cost import CostWeights, expected_dC, n2_closed_forms, selection_kernel, weak_values
from .measurement import (
    OUTCOMES,
    PairConfig,
    config_table,
    enumerate_configs,
    outcome_probabilities,
    sse_step,
)
from .oracles import brute_force_expected_dC, exact_pair_step, schmidt_coefficients, single_detector_step
from .protocol import ProtocolParams, run_step
from .quantum_state import StateVector, TargetStateSpec, make_target, partial_trace


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _phase_distance(a: StateVector, b: StateVector) -> float:
    ov = np.vdot(a.amplitudes, b.amplitudes)
    return float(np.linalg.norm(a.amplitudes * np.exp(1j * np.angle(ov)) - b.amplitudes))


def _random_pair_config(rng, n: int, dt: float, allow_beta_y: bool = True, couplings=(1.0, 1.0)) -> PairConfig:
    cfgs = enumerate_configs(allow_beta_y)
    a, b = rng.choice(n, size=2, replace=False) + 1
    k1, k2 = (cfgs[i] for i in rng.integers(len(cfgs), size=2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return PairConfig((int(a), int(b)), (k1, k2), couplings, dt)


def check_rdm(rng, dt: float) -> CheckResult:
    worst = 0.0
    for _ in range(10):
        st = StateVector.random(3, rng)
        b = bloch_from_state(st)
        for keep in ((1,), (2, 3), (1, 3)):
            rho = rdm_matrix_from_bloch(rdm_bloch(b, keep)).matrix
            worst = max(worst, float(np.abs(rho - partial_trace(st, keep).matrix).max()))
    return CheckResult("bloch RDM matches partial trace", worst < 1e-12, f"max diff {worst:.2e}")


def check_exact_normalization(rng, dt: float) -> CheckResult:
    st = StateVector.random(2, rng)
    worst = 0.0
    for k1 in enumerate_configs(True):
        for k2 in enumerate_configs(True):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                pc = PairConfig((1, 2), (k1, k2), (1.0, 1.0), dt)
            worst = max(worst, abs(sum(p for p, _ in exact_pair_step(st, pc)) - 1.0))
    return CheckResult("oracle: exact branch probabilities sum to 1", worst < 1e-12, f"max deviation {worst:.2e}")


def check_first_order_probabilities(rng, dt: float) -> CheckResult:
    worst = 0.0
    for _ in range(40):
        st = StateVector.random(2, rng)
        pc = _random_pair_config(rng, 2, dt)
        exact = np.array([p for p, _ in exact_pair_step(st, pc)])
        worst = max(worst, float(np.abs(outcome_probabilities(st, pc) - exact).max()))
    bound = 2.0 * dt * dt
    return CheckResult(
        "oracle: first-order probabilities within 2 dt^2 of exact", worst <= bound, f"max diff {worst:.2e}, bound {bound:.2e}"
    )


def check_fixed_rate_order(rng, dt: float) -> CheckResult:
    """No-jump branches at fixed Gamma = J^2 dt must converge at second order.

    This is the check that sees the mixed x/y Lamb-shift term: a wrong sign
    there drops the order to 1.
    """
    gamma = 0.5
    dts = (0.02, 0.01, 0.005, 0.0025)
    cfgs = enumerate_configs(True)
    xs = [c for c in cfgs if c.beta == 1]
    ys = [c for c in cfgs if c.beta == 2]
    worst = np.inf
    for _ in range(8):
        st = StateVector.random(2, rng)
        pair = (xs[rng.integers(len(xs))], ys[rng.integers(len(ys))])
        errs = []
        for h in dts:
            j = np.sqrt(gamma / h)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                pc = PairConfig((1, 2), pair, (j, j), h)
            exact = exact_pair_step(st, pc)
            errs.append(max(_phase_distance(sse_step(st, pc, OUTCOMES[i]), exact[i][1]) for i in (0, 1)))
        worst = min(worst, float(np.polyfit(np.log(dts), np.log(errs), 1)[0]))
    return CheckResult("oracle: fixed-rate no-jump branch order >= 1.8", worst >= 1.8, f"min order {worst:.3f}")


def check_oracle_equivalence(rng, dt: float) -> CheckResult:
    worst = 0.0
    tol = max(1e-9, 10 * dt * dt)
    for i in range(60):
        n = 2 + i % 2
        st, tg = StateVector.random(n, rng), StateVector.random(n, rng)
        w = CostWeights.default(n)
        pc = _random_pair_config(rng, n, dt)
        a = expected_dC(bloch_from_state(st), bloch_from_state(tg), pc, w)
        b = brute_force_expected_dC(st, tg, pc, w)
        worst = max(worst, abs(a - b))
    return CheckResult("oracle: expected_dC matches outcome enumeration", worst <= tol, f"max diff {worst:.2e}, tol {tol:.2e}")


def check_kernel(rng, dt: float) -> CheckResult:
    worst = 0.0
    for n in (2, 3, 4):
        tab = config_table((1.0, 1.0), dt, True)
        w = CostWeights.default(n)
        kern = selection_kernel(n, tab, w)
        st, tg = StateVector.random(n, rng), StateVector.random(n, rng)
        b, bt = bloch_from_state(st), bloch_from_state(tg)
        pair = (n, 1)
        dc, _ = kern.evaluate(b.coeffs, bt.coeffs, pair)
        for k in range(0, tab.size, 5):
            worst = max(worst, abs(dc[k] - expected_dC(b, bt, tab.pair_config(k, pair), w)))
    return CheckResult("all-config kernel matches single-config path", worst < 1e-12, f"max diff {worst:.2e}")


def check_trapped(rng, dt: float) -> CheckResult:
    st = make_target(TargetStateSpec("product", bits="00"), 2)
    tg = make_target(TargetStateSpec.parse("bell"), 2)
    tab = config_table((1.0, 1.0), dt, True)
    b, bt = bloch_from_state(st), bloch_from_state(tg)
    glob, _ = selection_kernel(2, tab, CostWeights.global_only(2)).evaluate(b.coeffs, bt.coeffs, (1, 2))
    loc, _ = selection_kernel(2, tab, CostWeights.default(2)).evaluate(b.coeffs, bt.coeffs, (1, 2))
    wv = weak_values(st, tg)
    expect = np.zeros((2, 3))
    expect[:, 2] = 1.0
    wv_ok = wv.defined and np.array_equal(wv.values, expect)
    ok = glob.min() >= -1e-12 and loc.min() < -1e-6 and wv_ok
    return CheckResult(
        "trapped |00> under global cost, escape with local terms",
        bool(ok),
        f"min global {glob.min():.2e}, min local {loc.min():.2e}, weak values exact {wv_ok}",
    )


def check_closed_forms(rng, dt: float) -> CheckResult:
    worst = 0.0
    w = CostWeights.default(2)
    cfgs = enumerate_configs(False)
    for _ in range(30):
        st, tg = StateVector.random(2, rng), StateVector.random(2, rng)
        k1, k2 = (cfgs[i] for i in rng.integers(len(cfgs), size=2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pc = PairConfig((1, 2), (k1, k2), (1.0, 1.0), dt)
        dc1, dc2 = n2_closed_forms(bloch_from_state(st), bloch_from_state(tg), pc)
        generic = expected_dC(bloch_from_state(st), bloch_from_state(tg), pc, w)
        worst = max(worst, abs(w.p[0] * dc1 + w.p[1] * dc2 - generic))
    return CheckResult("two-qubit closed forms match generic path", worst < 1e-9, f"max diff {worst:.2e}")


def check_step_consistency(rng, dt: float) -> CheckResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = ProtocolParams(4, TargetStateSpec.parse("ghz"), dt=dt, steering_set="full12")
    st = StateVector.random(4, rng)
    tg = bloch_from_state(make_target(params.target, 4))
    b = bloch_from_state(st)
    worst = 0.0
    for cycle in range(6):
        pairs = [(1, 2), (3, 4)] if cycle % 2 == 0 else [(2, 3), (4, 1)]
        st, b, _ = run_step(st, b, tg, pairs, params, rng)
        worst = max(worst, float(np.abs(b.coeffs - bloch_coeffs(st.amplitudes, 4)).max()))
    return CheckResult("incremental Bloch update tracks the state", worst < 1e-9, f"max diff {worst:.2e}")


def check_single_detector(rng, dt: float) -> CheckResult:
    worst = 0.0
    for _ in range(200):
        a, b = StateVector.random(1, rng), StateVector.random(1, rng)
        st = StateVector(2, np.kron(a.amplitudes, b.amplitudes))
        eta = rng.uniform(0.05, np.pi / 4 - 0.05)
        out = single_detector_step(
            st,
            rng.uniform(0, np.pi / 2),
            (eta, 0.0, -eta, 0.0),
            tuple(int(a) for a in rng.integers(1, 4, size=2)),
            1.0,
            dt,
            int(rng.choice([1, -1])),
        )
        worst = max(worst, float(schmidt_coefficients(out)[1]))
    return CheckResult("single detector keeps product states product", worst < 1e-10, f"max second Schmidt {worst:.2e}")


CHECKS: tuple[tuple[str, Callable[[np.random.Generator, float], CheckResult]], ...] = (
    ("bloch RDM matches partial trace", check_rdm),
    ("oracle: exact branch probabilities sum to 1", check_exact_normalization),
    ("oracle: first-order probabilities within 2 dt^2 of exact", check_first_order_probabilities),
    ("oracle: fixed-rate no-jump branch order >= 1.8", check_fixed_rate_order),
    ("oracle: expected_dC matches outcome enumeration", check_oracle_equivalence),
    ("all-config kernel matches single-config path", check_kernel),
    ("trapped |00> under global cost, escape with local terms", check_trapped),
    ("two-qubit closed forms match generic path", check_closed_forms),
    ("incremental Bloch update tracks the state", check_step_consistency),
    ("single detector keeps product states product", check_single_detector),
)


def run_validation(dt: float = 0.2, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS:
        try:
            res = check(rng, dt)
            results.append(CheckResult(name, bool(res.passed), res.detail))
        except Exception as exc:  # a crash is a failed check, not a crashed report
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return results
