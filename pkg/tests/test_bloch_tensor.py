from __future__ import annotations

from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from activesteer.bloch_tensor import (
    BlochTensor,
    PauliString,
    RdmBlochTensor,
    apply_pair_operator,
    bloch_from_state,
    correlator,
    from_pair_view,
    pair_view,
    pauli_digits,
    pauli_index,
    rdm_bloch,
    rdm_matrix_from_bloch,
)
from activesteer.quantum_state import PAULI, StateVector, TargetStateSpec, apply_local, make_target, partial_trace

from .conftest import random_state

BELL = make_target(TargetStateSpec("bell"), 2)
GHZ3 = make_target(TargetStateSpec("ghz"), 3)


class TestPauliString:
    @pytest.mark.parametrize("mu,idx", [((0,), 0), ((3,), 3), ((1, 0), 4), ((3, 2, 1), 57), ((0, 0, 0, 1), 1)])
    def test_index(self, mu, idx):
        assert pauli_index(mu) == idx
        assert PauliString(mu).index == idx
        assert pauli_digits(idx, len(mu)) == mu

    def test_parse(self):
        p = PauliString.parse("xIz")
        assert p.mu == (1, 0, 3)
        assert p.weight == 2
        assert len(p) == 3

    def test_invalid(self):
        with pytest.raises(ValueError):
            PauliString((4,))
        with pytest.raises(ValueError):
            pauli_index([5])


class TestBlochFromState:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_all_zero_state(self, n):
        b = bloch_from_state(StateVector.from_bitstring("0" * n))
        for mu in product(range(4), repeat=n):
            expect = float(all(m in (0, 3) for m in mu))
            assert b[mu] == expect

    def test_bell_vectors_vanish(self):
        b = bloch_from_state(BELL)
        for a in (1, 2, 3):
            assert b[(a, 0)] == pytest.approx(0.0, abs=1e-15)
            assert b[(0, a)] == pytest.approx(0.0, abs=1e-15)

    def test_bell_correlations(self):
        b = bloch_from_state(BELL)
        assert b[(1, 1)] == pytest.approx(1.0)
        assert b[(2, 2)] == pytest.approx(-1.0)
        assert b[(3, 3)] == pytest.approx(1.0)
        assert b[PauliString.parse("xy")] == pytest.approx(0.0, abs=1e-15)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
    def test_definition_and_purity(self, seed, n):
        s = random_state(n, seed)
        b = bloch_from_state(s)
        assert b.coeffs[0] == pytest.approx(1.0, abs=1e-10)
        assert b.purity_sum() == pytest.approx(2.0**n, abs=1e-8)
        rng = np.random.default_rng(seed)
        mu = tuple(int(m) for m in rng.integers(4, size=n))
        v = s.amplitudes
        for q, m in enumerate(mu, 1):
            v = apply_local(v, n, [q], PAULI[m])
        assert b[mu] == pytest.approx(np.vdot(s.amplitudes, v).real, abs=1e-12)

    def test_wrong_size_rejected(self):
        with pytest.raises(ValueError):
            BlochTensor(2, np.zeros(15))


class TestRdmBloch:
    def test_keep_all_identical(self):
        b = bloch_from_state(random_state(3, 2))
        assert np.array_equal(rdm_bloch(b, [1, 2, 3]).coeffs, b.coeffs)

    def test_ghz_pair_zz(self):
        r = rdm_bloch(bloch_from_state(GHZ3), [1, 2])
        assert r.tensor[3, 3] == pytest.approx(1.0)

    def test_ghz_single_vector_zero(self):
        r = rdm_bloch(bloch_from_state(GHZ3), [1])
        assert np.allclose(r.coeffs, [1, 0, 0, 0], atol=1e-15)

    def test_invalid_subset(self):
        with pytest.raises(ValueError):
            rdm_bloch(bloch_from_state(GHZ3), [3, 1])

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
    def test_commutes_with_partial_trace(self, seed, n):
        s = random_state(n, seed)
        b = bloch_from_state(s)
        for r in range(1, n + 1):
            for keep in combinations(range(1, n + 1), r):
                tensor_path = rdm_matrix_from_bloch(rdm_bloch(b, keep)).matrix
                matrix_path = partial_trace(s, keep).matrix
                assert np.allclose(tensor_path, matrix_path, atol=1e-10)


class TestRdmMatrix:
    def test_plus_z(self):
        m = rdm_matrix_from_bloch(RdmBlochTensor((1,), np.array([1.0, 0, 0, 1]))).matrix
        assert np.allclose(m, np.diag([1, 0]))

    def test_maximally_mixed(self):
        m = rdm_matrix_from_bloch(RdmBlochTensor((1,), np.array([1.0, 0, 0, 0]))).matrix
        assert np.allclose(m, np.eye(2) / 2)

    def test_bell_round_trip(self):
        m = rdm_matrix_from_bloch(rdm_bloch(bloch_from_state(BELL), [1, 2])).matrix
        assert np.allclose(m, np.outer(BELL.amplitudes, BELL.amplitudes.conj()), atol=1e-12)


class TestCorrelator:
    def test_00(self):
        b = bloch_from_state(StateVector.from_bitstring("00"))
        assert correlator(b, 1, 2, 3, 3) == 1.0
        assert correlator(b, 1, 2, 1, 1) == 0.0

    @pytest.mark.parametrize("v", [0.0, 0.3, 0.6, 1 / np.sqrt(2), 0.9, 1.0])
    def test_belltype(self, v):
        b = bloch_from_state(make_target(TargetStateSpec("belltype", u=v, theta=0.0), 2))
        q = 2 * v * np.sqrt(1 - v * v)
        assert correlator(b, 1, 2, 1, 1) == pytest.approx(q, abs=1e-12)
        assert correlator(b, 1, 2, 2, 2) == pytest.approx(-q, abs=1e-12)

    def test_order_of_qubits(self):
        b = bloch_from_state(random_state(3, 7))
        assert correlator(b, 3, 1, 1, 2) == pytest.approx(b[(2, 0, 1)])

    def test_collision(self):
        with pytest.raises(ValueError):
            correlator(bloch_from_state(BELL), 1, 1, 3, 3)


class TestPairView:
    @pytest.mark.parametrize("pair", [(1, 2), (2, 1), (3, 1), (2, 4)])
    def test_round_trip_and_layout(self, pair):
        b = bloch_from_state(random_state(4, 3))
        v = pair_view(b.coeffs, 4, pair)
        assert v.shape == (16, 16)
        assert np.array_equal(from_pair_view(v, 4, pair), b.coeffs)
        rest = [q for q in range(1, 5) if q not in pair]
        mu = [0] * 4
        mu[pair[0] - 1], mu[pair[1] - 1] = 1, 2
        mu[rest[0] - 1], mu[rest[1] - 1] = 3, 1
        assert v[4 * 1 + 2, 4 * 3 + 1] == b[tuple(mu)]

    @given(seed=st.integers(0, 2**32 - 1))
    def test_pair_operator_matches_state_update(self, seed):
        rng = np.random.default_rng(seed)
        s = random_state(3, seed)
        op = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        pair = (3, 1)
        new = apply_local(s.amplitudes, 3, list(pair), op)
        expect = bloch_from_state(StateVector(3, new)).coeffs
        got = apply_pair_operator(bloch_from_state(s).coeffs, 3, pair, op)
        assert np.allclose(got, expect, atol=1e-10)
