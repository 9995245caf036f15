from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from activesteer.quantum_state import (
    StateVector,
    TargetStateSpec,
    apply_pauli,
    entanglement_entropy,
    fidelity,
    make_target,
    partial_trace,
)

from .conftest import random_state

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)


class TestStateVector:
    def test_normalizes_input(self):
        s = StateVector(1, [3.0, 4.0])
        assert s.norm == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(s.amplitudes, [0.6, 0.8])

    def test_rejects_wrong_size(self):
        with pytest.raises(ValueError):
            StateVector(2, [1.0, 0.0])

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            StateVector(1, [0.0, 0.0])

    def test_amplitudes_are_read_only(self):
        s = StateVector.from_bitstring("01")
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1.0

    def test_qubit_one_is_most_significant(self):
        s = StateVector.from_bitstring("100")
        assert s.amplitudes[0b100] == 1.0
        assert s.tensor[1, 0, 0] == 1.0


class TestMakeTarget:
    def test_ghz3(self):
        expect = np.zeros(8)
        expect[[0, 7]] = 1 / SQ2
        assert np.allclose(make_target(TargetStateSpec("ghz"), 3).amplitudes, expect)

    def test_w3(self):
        expect = np.zeros(8)
        expect[[0b100, 0b010, 0b001]] = 1 / SQ3
        assert np.allclose(make_target(TargetStateSpec("w"), 3).amplitudes, expect)

    def test_belltype_u1_is_00(self):
        s = make_target(TargetStateSpec("belltype", u=1.0, theta=0.0), 2)
        assert np.allclose(s.amplitudes, [1, 0, 0, 0])

    @pytest.mark.parametrize(
        "xi,eta,expect",
        [
            (0, 1, [1, 0, 0, 1]),
            (0, -1, [1, 0, 0, -1]),
            (1, 1, [0, 1, 1, 0]),
            (1, -1, [0, 1, -1, 0]),
        ],
    )
    def test_bell_family(self, xi, eta, expect):
        s = make_target(TargetStateSpec("bell", xi=xi, eta=eta), 2)
        assert np.allclose(s.amplitudes, np.array(expect) / SQ2)

    @pytest.mark.parametrize("spec,n", [(TargetStateSpec("bell"), 3), (TargetStateSpec("belltype", u=0.5), 3)])
    def test_incompatible_n(self, spec, n):
        with pytest.raises(ValueError):
            make_target(spec, n)

    def test_u_out_of_range(self):
        with pytest.raises(ValueError):
            make_target(TargetStateSpec("belltype", u=1.5), 2)

    def test_product_bits_mismatch(self):
        with pytest.raises(ValueError):
            make_target(TargetStateSpec("product", bits="01"), 3)

    @pytest.mark.parametrize(
        "text,label",
        [
            ("ghz", "ghz"),
            ("W", "w"),
            ("bell", "bell:0,1"),
            ("bell:1,-1", "bell:1,-1"),
            ("product:0101", "product:0101"),
            ("belltype:0.6,0.3", "belltype:0.6,0.3"),
        ],
    )
    def test_parse_label_round_trip(self, text, label):
        spec = TargetStateSpec.parse(text)
        assert spec.label() == label
        assert TargetStateSpec.parse(spec.label()) == spec

    def test_parse_unknown(self):
        with pytest.raises(ValueError):
            TargetStateSpec.parse("cluster")


class TestApplyPauli:
    def test_x_flips(self):
        out = apply_pauli(StateVector.from_bitstring("0"), 1, "x")
        assert np.allclose(out.amplitudes, [0, 1])

    def test_z_on_one(self):
        out = apply_pauli(StateVector.from_bitstring("1"), 1, "z")
        assert np.allclose(out.amplitudes, [0, -1])

    def test_y_on_plus(self):
        out = apply_pauli(StateVector(1, [1, 1]), 1, "y")
        assert np.allclose(out.amplitudes, 1j * np.array([-1, 1]) / SQ2)

    def test_acts_on_named_qubit(self):
        out = apply_pauli(StateVector.from_bitstring("000"), 2, "x")
        assert np.allclose(out.amplitudes, StateVector.from_bitstring("010").amplitudes)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            apply_pauli(StateVector.from_bitstring("00"), 3, "x")

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            apply_pauli(StateVector.from_bitstring("00"), 1, "w")

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), axis=st.sampled_from("xyz"), data=st.data())
    def test_involution_and_norm(self, seed, n, axis, data):
        q = data.draw(st.integers(1, n))
        s = random_state(n, seed)
        once = apply_pauli(s, q, axis)
        assert once.norm == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(apply_pauli(once, q, axis).amplitudes, s.amplitudes, atol=1e-12)


class TestFidelity:
    def test_00_vs_bell(self):
        f = fidelity(StateVector.from_bitstring("00"), make_target(TargetStateSpec("bell"), 2))
        assert f == pytest.approx(1 / SQ2, abs=1e-15)
        assert 1 - f * f == pytest.approx(0.5, abs=1e-15)

    def test_self(self):
        s = random_state(3, 1)
        assert fidelity(s, s) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert fidelity(StateVector.from_bitstring("000"), make_target(TargetStateSpec("w"), 3)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(StateVector.from_bitstring("00"), StateVector.from_bitstring("000"))

    @given(seed=st.integers(0, 2**32 - 1), phase=st.floats(0, 2 * np.pi))
    def test_global_phase_invariance(self, seed, phase):
        a, b = random_state(3, seed), random_state(3, seed + 1)
        shifted = StateVector(3, np.exp(1j * phase) * a.amplitudes)
        assert fidelity(shifted, b) == pytest.approx(fidelity(a, b), abs=1e-12)
        assert 0.0 <= fidelity(a, b) <= 1.0


class TestPartialTrace:
    def test_bell_single(self):
        rho = partial_trace(make_target(TargetStateSpec("bell"), 2), [1]).matrix
        assert np.allclose(rho, np.eye(2) / 2)

    def test_product_factor(self):
        rho = partial_trace(StateVector.from_bitstring("01"), [2]).matrix
        assert np.allclose(rho, [[0, 0], [0, 1]])

    def test_w_single(self):
        rho = partial_trace(make_target(TargetStateSpec("w"), 3), [1]).matrix
        assert np.allclose(rho, np.diag([2 / 3, 1 / 3]))

    def test_full_keep_is_projector(self):
        s = random_state(3, 4)
        rho = partial_trace(s, [1, 2, 3]).matrix
        assert np.allclose(rho, np.outer(s.amplitudes, s.amplitudes.conj()), atol=1e-14)

    @pytest.mark.parametrize("keep", [[], [2, 1], [0], [4], [1, 1]])
    def test_invalid_subsets(self, keep):
        with pytest.raises(ValueError):
            partial_trace(random_state(3, 0), keep)

    @given(seed=st.integers(0, 2**32 - 1), keep=st.sampled_from([(1,), (2,), (1, 3), (2, 3, 4), (1, 2, 3, 4)]))
    def test_rdm_invariants(self, seed, keep):
        rho = partial_trace(random_state(4, seed), keep)
        m = rho.matrix
        assert np.allclose(m, m.conj().T, atol=1e-12)
        assert np.trace(m).real == pytest.approx(1.0, abs=1e-10)
        assert rho.eigenvalues().min() >= -1e-10


class TestEntropy:
    def test_bell(self):
        assert entanglement_entropy(make_target(TargetStateSpec("bell"), 2), [1]) == pytest.approx(np.log(2), abs=1e-12)

    def test_product(self):
        assert entanglement_entropy(StateVector.from_bitstring("00"), [1]) == 0.0

    def test_w_frozen(self):
        s = entanglement_entropy(make_target(TargetStateSpec("w"), 3), [1])
        assert s == pytest.approx(-(1 / 3) * np.log(1 / 3) - (2 / 3) * np.log(2 / 3), abs=1e-12)
        assert s == pytest.approx(0.63651, abs=1e-5)

    def test_full_set_rejected(self):
        with pytest.raises(ValueError):
            entanglement_entropy(random_state(2, 0), [1, 2])

    @given(seed=st.integers(0, 2**32 - 1), sub=st.sampled_from([(1,), (2,), (1, 2), (1, 3), (2, 4)]))
    def test_complement_symmetry(self, seed, sub):
        s = random_state(4, seed)
        comp = tuple(q for q in range(1, 5) if q not in sub)
        assert entanglement_entropy(s, sub) == pytest.approx(entanglement_entropy(s, comp), abs=1e-10)
        assert entanglement_entropy(s, sub) >= 0.0
