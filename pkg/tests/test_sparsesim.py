import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pqci.sparsesim import (
    Register,
    RegisterLayout,
    SimulationError,
    SparseState,
    fidelity,
    new_state,
)

from circuits import random_circuit, random_start, run_sparse

S = 1 / math.sqrt(2)


def plus(width=1):
    return new_state([("q", width)]).apply_h(0)


def close_terms(state, expected, tol=1e-12):
    keys = set(state.terms) | set(expected)
    return all(abs(state.amplitude(k) - expected.get(k, 0)) < tol for k in keys)


class TestLayout:
    def test_registers_pack_in_order(self):
        layout = RegisterLayout([("a", 1), ("b", 4), ("c", 3)])
        assert layout.width == 8
        assert [layout[k].start for k in "abc"] == [0, 1, 5]

    def test_encode_decode_round_trip(self):
        layout = RegisterLayout([("a", 3), ("b", 5)])
        key = layout.encode({"a": 5, "b": 19})
        assert layout.decode(key) == {"a": 5, "b": 19}

    def test_overflowing_value_rejected(self):
        with pytest.raises(ValueError):
            RegisterLayout([("r", 4)]).encode({"r": 16})

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            RegisterLayout([("a", 1), ("a", 2)])

    @given(st.integers(0, 2**12 - 1), st.integers(0, 15))
    def test_put_get_round_trip(self, key, value):
        reg = Register("r", 5, 4)
        k2 = reg.put(key, value)
        assert reg.get(k2) == value
        assert k2 & ~reg.mask == key & ~reg.mask


class TestNewState:
    def test_single_qubit(self):
        s = new_state([("a", 1)], {"a": 1})
        assert s.terms == {1: 1}

    def test_binary_encoding(self):
        s = new_state([("r", 4)], {"r": 13})
        assert s.terms == {0b1101: 1}
        assert s.dump() == "1101 1 0"

    def test_overflow(self):
        with pytest.raises(ValueError):
            new_state([("r", 4)], {"r": 16})


class TestGates:
    def test_x_flips(self):
        assert new_state([("q", 1)]).apply_x(0).terms == {1: 1}

    def test_x_twice_is_identity(self):
        s = new_state([("q", 3)], {"q": 5})
        assert s.copy().apply_x(1).apply_x(1).terms == s.terms

    def test_x_leaves_plus_alone(self):
        s = plus()
        assert fidelity(s.copy().apply_x(0), s) == pytest.approx(1, abs=1e-12)

    def test_z_on_one(self):
        assert new_state([("q", 1)], {"q": 1}).apply_z(0).terms == {1: -1}

    def test_z_on_zero(self):
        assert new_state([("q", 1)]).apply_z(0).terms == {0: 1}

    def test_z_turns_plus_into_minus(self):
        assert close_terms(plus().apply_z(0), {0: S, 1: -S})

    def test_h_on_zero(self):
        assert close_terms(new_state([("q", 1)]).apply_h(0), {0: S, 1: S})

    def test_h_twice_merges_back(self):
        s = new_state([("q", 2)], {"q": 2}).apply_h(0).apply_h(1).apply_h(0).apply_h(1)
        assert s.terms == {2: pytest.approx(1)}
        assert len(s) == 1

    def test_h_on_minus(self):
        s = plus().apply_z(0).apply_h(0)
        assert close_terms(s, {1: 1})
        assert len(s) == 1

    def test_cnot_table(self):
        layout = [("q", 2)]
        # qubit 1 is the control ("a"), qubit 0 the target ("b"); |ab>
        assert new_state(layout, {"q": 0b10}).apply_cnot(1, 0).terms == {0b11: 1}
        assert new_state(layout, {"q": 0b00}).apply_cnot(1, 0).terms == {0b00: 1}

    def test_cnot_entangles(self):
        s = new_state([("q", 2)]).apply_h(1).apply_cnot(1, 0)
        assert close_terms(s, {0b00: S, 0b11: S})

    def test_cnot_same_qubit_rejected(self):
        with pytest.raises(SimulationError):
            new_state([("q", 2)]).apply_cnot(1, 1)

    @pytest.mark.parametrize("gate", ["apply_x", "apply_z", "apply_h"])
    def test_out_of_range_qubit(self, gate):
        with pytest.raises(SimulationError):
            getattr(new_state([("q", 2)]), gate)(2)


class TestPermutation:
    def test_identity(self):
        s = plus(3).apply_h(2)
        before = dict(s.terms)
        s.apply_permutation(["q"], lambda v: v)
        assert s.terms == before

    def test_wraparound(self):
        s = new_state([("q", 3)], {"q": 7}).apply_permutation(["q"], lambda y: (y + 1) % 8)
        assert s.terms == {0: 1}

    def test_non_injective_small(self):
        with pytest.raises(SimulationError):
            new_state([("q", 3)]).apply_permutation(["q"], lambda y: y // 2)

    def test_non_injective_large_detected_on_touched_terms(self):
        s = new_state([("q", 16)]).apply_h(0)
        with pytest.raises(SimulationError):
            s.apply_permutation(["q"], lambda y: 0)

    def test_joint_value_ordering(self):
        layout = RegisterLayout([("lo", 2), ("hi", 2)])
        s = new_state(layout, {"lo": 1, "hi": 2})
        # joint value = lo | hi << 2 = 9; swap the registers
        s.apply_permutation(["lo", "hi"], lambda v: (v >> 2) | ((v & 3) << 2))
        assert layout.decode(next(iter(s.terms))) == {"lo": 2, "hi": 1}

    def test_term_count_unchanged(self):
        s = new_state([("q", 4)]).apply_h(0).apply_h(2).apply_h(3)
        n = len(s)
        s.apply_permutation(["q"], lambda v: (v * 3 + 5) % 16)
        assert len(s) == n


class TestControlled:
    def test_inactive_control(self):
        layout = RegisterLayout([("a", 1), ("r", 3)])
        s = new_state(layout, {"a": 0, "r": 2})
        s.apply_controlled([(0, 1)], lambda x: x.apply_permutation([layout["r"]], lambda v: (v + 1) % 8), [1, 2, 3])
        assert layout.decode(next(iter(s.terms))) == {"a": 0, "r": 2}

    def test_active_control(self):
        layout = RegisterLayout([("a", 1), ("r", 3)])
        s = new_state(layout, {"a": 1, "r": 2})
        s.apply_controlled([(0, 1)], lambda x: x.apply_permutation([layout["r"]], lambda v: (v + 1) % 8), [1, 2, 3])
        assert layout.decode(next(iter(s.terms))) == {"a": 1, "r": 3}

    def test_superposed_control_matches_dense(self):
        from pqci.sparsesim import dense

        s = new_state([("q", 3)]).apply_h(0)
        s.apply_controlled([(0, 1)], lambda x: x.apply_x(2), [2])
        v = dense.to_dense(new_state([("q", 3)]))
        v = dense.dense_h(v, 0)
        v = dense.dense_controlled(v, [(0, 1)], lambda u: dense.dense_x(u, 2))
        np.testing.assert_allclose(dense.to_dense(s), v, atol=1e-12)
        assert close_terms(s, {0b000: S, 0b101: S})

    def test_overlap_rejected(self):
        with pytest.raises(SimulationError):
            new_state([("q", 2)]).apply_controlled([(0, 1)], lambda x: x.apply_x(0), [0])

    def test_inner_touching_control_rejected(self):
        s = new_state([("q", 2)], {"q": 1})
        with pytest.raises(SimulationError):
            s.apply_controlled([(0, 1)], lambda x: x.apply_x(0), [1])


class TestMeasurement:
    def test_deterministic_register(self):
        layout = RegisterLayout([("a", 3), ("b", 3)])
        s = new_state(layout, {"a": 5, "b": 5})
        value, post = s.measure_register("b", rng=0)
        assert value == 5
        assert post.norm() == pytest.approx(1, abs=1e-10)

    def test_half_half(self):
        X = 0b1011
        counts = {0: 0, X: 0}
        for seed in range(10_000):
            s = SparseState(RegisterLayout([("r", 4)]), {0: S, X: S})
            v, _ = s.measure_register("r", rng=seed)
            counts[v] += 1
        assert counts[0] / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_collapse_renormalises(self):
        s = new_state([("q", 3)]).apply_h(0).apply_h(1)
        s.measure_qubit(0, rng=3)
        assert s.norm() == pytest.approx(1, abs=1e-10)
        assert len(s) == 2

    def test_pm_eigenstates(self):
        for seed in range(20):
            assert plus().measure_pm(0, seed)[0] == "+"
            assert plus().apply_z(0).measure_pm(0, seed)[0] == "-"

    def test_pm_on_zero_is_random(self):
        minus = sum(new_state([("q", 1)]).measure_pm(0, seed)[0] == "-" for seed in range(10_000))
        assert minus / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_pm_leaves_eigenstate(self):
        s = new_state([("q", 1)])
        sign, _ = s.measure_pm(0, 11)
        expected = plus() if sign == "+" else plus().apply_z(0)
        assert fidelity(s, expected) == pytest.approx(1, abs=1e-12)

    def test_seeded_determinism(self):
        def run(seed):
            rng = np.random.default_rng(seed)
            s = new_state([("q", 6)])
            for q in range(6):
                s.apply_h(q)
            out = []
            for q in range(6):
                out.append(s.measure_qubit(q, rng)[0])
            return out

        assert run(42) == run(42)


class TestFidelity:
    def test_identical(self):
        assert fidelity(plus(), plus()) == pytest.approx(1)

    def test_orthogonal(self):
        assert fidelity(new_state([("q", 1)]), new_state([("q", 1)], {"q": 1})) == 0

    def test_plus_vs_zero(self):
        assert fidelity(plus(), new_state([("q", 1)])) == pytest.approx(0.5)

    def test_width_mismatch(self):
        with pytest.raises(SimulationError):
            fidelity(plus(1), plus(2))


class TestAttachDetach:
    def test_round_trip(self):
        s = plus(2)
        before = dict(s.terms)
        s.attach([("anc", 3)], {"anc": 4})
        assert s.width == 5
        assert all(s.layout["anc"].get(k) == 4 for k in s.terms)
        s.detach(["anc"], {"anc": 4})
        assert s.terms == before

    def test_detach_dirty_register_rejected(self):
        s = plus(2).attach([("anc", 2)])
        s.apply_x(s.layout["anc"].start)
        with pytest.raises(SimulationError):
            s.detach(["anc"])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(1, 40))
def test_norm_preserved_and_invariants_hold(seed, width, n_gates):
    rng = np.random.default_rng(seed)
    s = random_start(rng, width)
    run_sparse(s, random_circuit(rng, width, n_gates))
    s.check_invariants()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.sampled_from(["x", "z", "h", "cnot"]))
def test_involutions(seed, width, gate):
    rng = np.random.default_rng(seed)
    s = random_start(rng, width)
    run_sparse(s, random_circuit(rng, width, 10))
    ref = s.copy()
    if gate == "cnot":
        c, t = (int(q) for q in rng.choice(width, 2, replace=False))
        s.apply_cnot(c, t).apply_cnot(c, t)
    else:
        q = int(rng.integers(width))
        getattr(s, f"apply_{gate}")(q)
        getattr(s, f"apply_{gate}")(q)
    assert 1 - fidelity(s, ref) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 10))
def test_one_hadamard_plus_permutations_stays_two_terms(seed, width):
    rng = np.random.default_rng(seed)
    s = new_state([("q", width)]).apply_h(int(rng.integers(width)))
    for _ in range(30):
        kind = rng.integers(3)
        if kind == 0:
            c, t = (int(q) for q in rng.choice(width, 2, replace=False))
            s.apply_cnot(c, t)
        elif kind == 1:
            s.apply_z(int(rng.integers(width)))
        else:
            perm = [int(v) for v in rng.permutation(1 << width)]
            s.apply_permutation(["q"], perm.__getitem__)
        assert len(s) <= 2
    assert s.peak_terms <= 2
