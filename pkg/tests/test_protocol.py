import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pqci.geometry import Circle, GeometryError, ProblemParams, intersects, valid_circles
from pqci.oracle import apply_oracle, build_oracle
from pqci.protocol import (
    EncodedInput,
    Outcome,
    Strategy,
    distinguish,
    encode_input,
    entangle_pair,
    honesty_test,
    new_pair,
    particle_fields,
    prepare_superposition,
    run_protocol,
    unprepare,
)
from pqci.sparsesim import RegisterLayout, SimulationError, SparseState, fidelity, new_state
from pqci.sparsesim import dense

S = 1 / math.sqrt(2)


def two_term(layout, X, sign=1):
    return SparseState(layout, {0: S, X: sign * S})


class TestEncoding:
    def test_unit_circle(self):
        enc = encode_input(Circle(1, 1, 1), ProblemParams(2))
        assert enc.fields == (1, 1, 1)
        assert enc.j_list == [0, 7, 14]
        assert enc.j1 == 0

    def test_fields(self):
        assert encode_input(Circle(3, 2, 1), ProblemParams(2)).fields == (3, 2, 1)

    def test_round_trip_t3(self):
        p = ProblemParams(3)
        for c in valid_circles(p):
            enc = encode_input(c, p)
            assert enc.X != 0
            assert enc.decode() == c

    def test_invalid_circle(self):
        with pytest.raises(GeometryError):
            encode_input(Circle(0, 1, 1), ProblemParams(2))

    def test_particle_fields_match_encoding(self):
        p = ProblemParams(2)
        pair = new_pair(p)
        x, y, r = particle_fields(pair.layout["t"], p.n)
        key = pair.layout["t"].put(0, encode_input(Circle(3, 2, 1), p).X)
        assert (x.get(key), y.get(key), r.get(key)) == (3, 2, 1)


class TestPrepare:
    def test_single_bit_uses_hadamard_only(self):
        layout = RegisterLayout([("q", 6)])
        s = new_state(layout)
        prepare_superposition(s, "q", EncodedInput(0b000100, 2))
        assert fidelity(s, two_term(layout, 0b000100)) == pytest.approx(1)

    def test_unit_circle_state(self):
        p = ProblemParams(2)
        enc = encode_input(Circle(1, 1, 1), p)
        s = new_pair(p)
        prepare_superposition(s, "h", enc)
        assert len(s) == 2
        assert s.amplitude(0) == pytest.approx(S)
        assert s.amplitude(enc.X) == pytest.approx(S)

    def test_unprepare(self):
        p = ProblemParams(2)
        enc = encode_input(Circle(3, 1, 2), p)
        s = new_pair(p)
        prepare_superposition(s, "h", enc)
        unprepare(s, "h", enc)
        assert s.terms.keys() == {0}

    def test_zero_rejected(self):
        with pytest.raises(SimulationError):
            prepare_superposition(new_state([("q", 3)]), "q", EncodedInput(0, 1))


class TestEntangle:
    def test_two_term_pair(self):
        p = ProblemParams(2)
        enc = encode_input(Circle(2, 3, 1), p)
        s = new_pair(p)
        prepare_superposition(s, "h", enc)
        entangle_pair(s)
        m = p.m
        expected = SparseState(s.layout, {0: S, enc.X | enc.X << m: S})
        assert fidelity(s, expected) == pytest.approx(1, abs=1e-12)

    def test_second_application_disentangles(self):
        p = ProblemParams(2)
        enc = encode_input(Circle(2, 3, 1), p)
        s = new_pair(p)
        prepare_superposition(s, "h", enc)
        entangle_pair(s)
        entangle_pair(s)
        assert all(s.layout["t"].get(k) == 0 for k in s.terms)


class TestHonesty:
    def run_pair(self, t, circle, bob):
        p = ProblemParams(t)
        enc = encode_input(circle, p)
        s = new_pair(p)
        prepare_superposition(s, "h", enc)
        entangle_pair(s)
        apply_oracle(s, build_oracle(bob, p), particle_fields(s.layout["t"], p.n))
        return p, enc, s

    def test_honest_passes_and_leaves_signed_state(self):
        alice, bob = Circle(1, 1, 1), Circle(1, 1, 1)
        p, enc, s = self.run_pair(2, alice, bob)
        ok, value = honesty_test(s, rng=0)
        assert ok and value == 0
        m = p.m
        expected = SparseState(s.layout, {0: S, enc.X << m: -S})
        assert fidelity(s, expected) == pytest.approx(1, abs=1e-12)
        assert s.amplitude(enc.X << m) == pytest.approx(-S)

    # Small 3-qubit particles keep the pair inside the dense simulator's range.
    X = 0b101
    LAYOUT = [("h", 3), ("t", 3)]

    def small_pair(self):
        s = new_state(self.LAYOUT)
        prepare_superposition(s, "h", EncodedInput(self.X, 1))
        entangle_pair(s)
        return s

    def dense_honesty_h_distribution(self, vec):
        for q in range(3):
            vec = dense.dense_cnot(vec, 3 + q, q)
        probs = np.abs(vec.reshape(8, 8)) ** 2  # rows: t value, cols: h value
        return probs.sum(axis=0)

    def test_collapsed_pair_still_passes(self):
        for seed in range(20):
            s = self.small_pair()
            value, _ = s.measure_register("t", seed)
            assert value in (0, self.X)
            vec = dense.to_dense(s)
            assert self.dense_honesty_h_distribution(vec)[0] == pytest.approx(1)
            ok, _ = honesty_test(s, rng=seed)
            assert ok

    @pytest.mark.parametrize("y", [1, 2, 3, 4, 6, 7])
    def test_random_substitute_fails(self, y):
        s = self.small_pair()
        # Bob keeps t and returns a fresh |y>
        s.measure_register("t", 0)
        t = s.layout["t"]
        s = SparseState(s.layout, {t.put(k, y): a for k, a in s.terms.items()})
        p_zero = self.dense_honesty_h_distribution(dense.to_dense(s))[0]
        assert p_zero == pytest.approx(0)
        for seed in range(10):
            ok, value = honesty_test(s.copy(), rng=seed)
            assert not ok and value != 0

    def test_random_substitute_superposed_fails(self):
        # h still in superposition, t swapped for |y>, y not in {0, X}
        s = new_state(self.LAYOUT)
        prepare_superposition(s, "h", EncodedInput(self.X, 1))
        s.apply_x(3 + 1)  # t = |010>
        assert self.dense_honesty_h_distribution(dense.to_dense(s))[0] == pytest.approx(0)
        ok, _ = honesty_test(s, rng=1)
        assert not ok


class TestDistinguish:
    LAYOUT = RegisterLayout([("t", 6)])
    ENC = EncodedInput(0b101100, 2)

    def test_plus(self):
        for seed in range(20):
            assert distinguish(two_term(self.LAYOUT, self.ENC.X), "t", self.ENC, rng=seed) == "+"

    def test_minus(self):
        for seed in range(20):
            assert distinguish(two_term(self.LAYOUT, self.ENC.X, -1), "t", self.ENC, rng=seed) == "-"

    def test_collapsed_is_random(self):
        rng = np.random.default_rng(5)
        minus = 0
        for _ in range(10_000):
            s = SparseState(self.LAYOUT, {self.ENC.X: 1})
            minus += distinguish(s, "t", self.ENC, rng=rng) == "-"
        assert minus / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_leaves_observed_state(self):
        s = SparseState(self.LAYOUT, {self.ENC.X: 1})
        sign = distinguish(s, "t", self.ENC, rng=3)
        expected = two_term(self.LAYOUT, self.ENC.X, 1 if sign == "+" else -1)
        assert fidelity(s, expected) == pytest.approx(1, abs=1e-12)


class TestRun:
    def test_concentric_intersects_for_any_seed(self):
        p = ProblemParams(2)
        for seed in range(10):
            _, outcome = run_protocol(Circle(2, 2, 1), Circle(2, 2, 1), p, seed=seed)
            assert outcome is Outcome.INTERSECT

    def test_tangent_disjoint(self):
        _, outcome = run_protocol(Circle(1, 1, 1), Circle(3, 1, 1), ProblemParams(2), seed=0)
        assert outcome is Outcome.DISJOINT

    def test_transcript_contents(self):
        p = ProblemParams(2)
        tr, outcome = run_protocol(Circle(1, 1, 1), Circle(3, 3, 1), p, seed=9)
        assert [s["stage"] for s in tr.stages] == ["prepare", "send", "oracle", "return", "test", "measure", "announce"]
        assert tr.honesty == {"h1": 0, "h2": 0}
        assert tr.signs == {"t1": "+", "t2": "+"}
        assert tr.verdict == outcome.value == tr.result_message
        assert tr.seed == 9
        assert tr.max_terms <= 2
        assert tr.cost["elementary_total"] > 0
        d = tr.to_dict()
        assert {"params", "alice", "bob", "stages", "honesty", "signs", "outcome", "seed", "cost"} <= d.keys()

    def test_message_accounting(self):
        p = ProblemParams(3)
        tr, _ = run_protocol(Circle(1, 2, 3), Circle(4, 4, 2), p, seed=1)
        quantum = [msg for msg in tr.messages if msg["kind"] == "quantum"]
        assert [(msg["from"], msg["to"]) for msg in quantum] == [("alice", "bob"), ("bob", "alice")]
        assert all(msg["qubits"] == [p.m, p.m] for msg in quantum)
        assert p.m == 3 * (2 * 3 + 3)

    def test_abort_has_reason_and_no_verdict(self):
        class Liar(Strategy):
            def on_bob_receive(self, run):
                run.pairs[0].apply_x(run.pairs[0].layout["t"].start + 1)

        tr, outcome = run_protocol(Circle(1, 1, 1), Circle(1, 1, 1), ProblemParams(2), seed=0, adversary=Liar())
        assert outcome is Outcome.ABORT_DISHONEST_BOB
        assert tr.abort_reason == outcome.value
        assert tr.verdict is None
        assert tr.result_message is None

    def test_noop_strategy_matches_honest(self):
        p = ProblemParams(2)
        for alice, bob in [(Circle(1, 1, 1), Circle(2, 2, 1)), (Circle(1, 1, 1), Circle(3, 3, 1))]:
            assert run_protocol(alice, bob, p, 4, Strategy())[1] == run_protocol(alice, bob, p, 4)[1]

    def test_trace_callback(self):
        stages = []
        run_protocol(Circle(1, 1, 1), Circle(1, 1, 1), ProblemParams(2), seed=0,
                     trace=lambda stage, run: stages.append(stage))
        assert stages == ["prepare", "oracle", "test", "measure"]


def test_exhaustive_t2_sweep():
    p = ProblemParams(2)
    cs = valid_circles(p)
    for alice in cs:
        for bob in cs:
            tr, outcome = run_protocol(alice, bob, p, seed=0)
            expected = Outcome.INTERSECT if intersects(alice, bob) else Outcome.DISJOINT
            assert outcome is expected
            assert tr.max_terms <= 2


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.data())
def test_random_pairs_up_to_t5(t, data):
    p = ProblemParams(t)
    c = st.integers(1, p.T - 1)
    alice = Circle(data.draw(c), data.draw(c), data.draw(c))
    bob = Circle(data.draw(c), data.draw(c), data.draw(c))
    seed = data.draw(st.integers(0, 2**32 - 1))
    tr, outcome = run_protocol(alice, bob, p, seed=seed)
    assert outcome is (Outcome.INTERSECT if intersects(alice, bob) else Outcome.DISJOINT)
    assert tr.signs["t1"] == tr.signs["t2"]
    assert tr.max_terms <= 2
