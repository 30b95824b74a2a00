"""The three-stage circle intersection protocol between Alice and Bob.

Alice encodes her circle as ``X = x || y || r`` and prepares two particle
pairs ``(|0>|0> + |X>|X>)/sqrt(2)``. She keeps the ``h`` halves and sends the
``t`` halves to Bob, who applies his oracle and returns them. Alice runs the
honesty test (CNOT ``t -> h``, then ``h`` must read zero), discriminates
``|X+>`` from ``|X->`` on each ``t``, checks the two results agree and reads
the verdict off the sign: ``-`` means the circles intersect.

Each pair is simulated as its own sparse state of ``2m`` qubits; the oracle
ancillas are attached only while ``U`` runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from pqci.geometry import Circle, ProblemParams
from pqci.oracle import apply_oracle, build_oracle
from pqci.qarith import CostTally
from pqci.sparsesim import Register, SimulationError, SparseState, as_rng, new_state


class Outcome(enum.Enum):
    INTERSECT = "intersect"
    DISJOINT = "disjoint"
    ABORT_DISHONEST_BOB = "abort:dishonest-bob"
    ABORT_INCONSISTENT = "abort:inconsistent-results"
    ABORT_EAVESDROPPER = "abort:eavesdropper-detected"

    @property
    def aborted(self) -> bool:
        return self.value.startswith("abort")


@dataclass(frozen=True)
class EncodedInput:
    """Alice's query string: three n-bit fields, x in the top field, r in the bottom."""

    X: int
    n: int

    @property
    def fields(self) -> tuple[int, int, int]:
        low = (1 << self.n) - 1
        return (self.X >> 2 * self.n) & low, (self.X >> self.n) & low, self.X & low

    @property
    def j_list(self) -> list[int]:
        return [j for j in range(3 * self.n) if self.X >> j & 1]

    @property
    def j1(self) -> int:
        return self.j_list[0]

    def decode(self) -> Circle:
        return Circle(*self.fields)


def encode_input(circle: Circle, params: ProblemParams) -> EncodedInput:
    circle.validate(params)
    n = params.n
    return EncodedInput((circle.x << 2 * n) | (circle.y << n) | circle.r, n)


def particle_fields(reg: Register, n: int) -> tuple[Register, Register, Register]:
    """The (x, y, r) sub-registers of a 3n-qubit particle."""
    return (
        reg.sub(f"{reg.name}.1", 2 * n, n),
        reg.sub(f"{reg.name}.2", n, n),
        reg.sub(f"{reg.name}.3", 0, n),
    )


def new_pair(params: ProblemParams) -> SparseState:
    return new_state([("h", params.m), ("t", params.m)])


def _fanout(state, reg: Register, enc: EncodedInput, tally):
    j1 = enc.j1
    for j in enc.j_list[1:]:
        state.apply_cnot(reg.start + j1, reg.start + j)
    if tally is not None:
        tally.cnot(len(enc.j_list) - 1)


def prepare_superposition(state: SparseState, reg, enc: EncodedInput, tally=None) -> SparseState:
    """|0...0> -> (|0> + |X>)/sqrt(2): Hadamard on the first set bit, then CNOT fanout."""
    reg = state.reg(reg)
    if enc.X == 0:
        raise SimulationError("cannot encode X = 0 as a two-term superposition")
    if any(reg.get(k) for k in state.terms):
        raise SimulationError(f"register {reg.name!r} must start in |0>")
    state.apply_h(reg.start + enc.j1)
    if tally is not None:
        tally.single()
    _fanout(state, reg, enc, tally)
    return state


def unprepare(state: SparseState, reg, enc: EncodedInput, tally=None) -> SparseState:
    reg = state.reg(reg)
    _fanout(state, reg, enc, tally)
    state.apply_h(reg.start + enc.j1)
    if tally is not None:
        tally.single()
    return state


def entangle_pair(state: SparseState, h="h", t="t", tally=None) -> SparseState:
    """CNOT from each qubit of `h` onto the matching qubit of `t`."""
    h, t = state.reg(h), state.reg(t)
    state.apply_cnot_register(h, t)
    if tally is not None:
        tally.cnot(h.width)
    return state


def honesty_test(state: SparseState, h="h", t="t", rng=None, tally=None) -> tuple[bool, int]:
    """CNOT ``t -> h`` then measure `h`; passes iff it reads all zeros."""
    h, t = state.reg(h), state.reg(t)
    state.apply_cnot_register(t, h)
    if tally is not None:
        tally.cnot(h.width)
    value, _ = state.measure_register(h, rng)
    return value == 0, value


def distinguish(state: SparseState, t, enc: EncodedInput, rng=None, tally=None) -> str:
    """Tell (|0> + |X>)/sqrt(2) from (|0> - |X>)/sqrt(2); returns ``'+'`` or ``'-'``.

    Undoes the fanout so the sign sits on qubit ``j1``, measures that qubit
    in the +/- basis and redoes the fanout, leaving the register in the
    observed ``|X+>`` or ``|X->``.
    """
    t = state.reg(t)
    _fanout(state, t, enc, tally)
    sign, _ = state.measure_pm(t.start + enc.j1, rng)
    if tally is not None:
        tally.single(2)
    _fanout(state, t, enc, tally)
    return sign


class Strategy:
    """Hooks through which an attack alters a protocol run. The base class is honest."""

    name = "honest"
    skip_consistency = False

    def alice_inputs(self, alice: Circle, params: ProblemParams) -> tuple[Circle, Circle]:
        return alice, alice

    def on_bob_receive(self, run: "ProtocolRun") -> Outcome | None:
        """Called once Bob holds both ``t`` particles, before the oracle."""
        return None

    def bob_oracle(self, run: "ProtocolRun", i: int):
        run.apply_bob_oracle(i)

    def after_output(self, run: "ProtocolRun"):
        """Called after Alice's discrimination, before the consistency check."""


@dataclass
class Transcript:
    params: dict
    alice: str
    bob: str
    seed: Any
    stages: list = field(default_factory=list)
    honesty: dict = field(default_factory=dict)
    signs: dict = field(default_factory=dict)
    outcome: str | None = None
    abort_reason: str | None = None
    result_message: str | None = None
    messages: list = field(default_factory=list)
    cost: dict = field(default_factory=dict)
    max_terms: int = 0
    attacker: dict = field(default_factory=dict)

    def log(self, stage: str, **info):
        self.stages.append({"stage": stage, **info})

    @property
    def verdict(self) -> str | None:
        return None if self.abort_reason else self.outcome

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "alice": self.alice,
            "bob": self.bob,
            "stages": self.stages,
            "honesty": self.honesty,
            "signs": self.signs,
            "outcome": self.outcome,
            "abort_reason": self.abort_reason,
            "result_message": self.result_message,
            "messages": self.messages,
            "seed": self.seed,
            "cost": self.cost,
            "max_terms": self.max_terms,
            "attacker": self.attacker,
        }


class ProtocolRun:
    """Mutable state of one protocol execution, exposed to strategy hooks."""

    def __init__(self, alice: Circle, bob: Circle, params: ProblemParams, seed, strategy: Strategy, trace=None):
        self.params = params
        self.alice, self.bob = alice, bob
        self.strategy = strategy
        self.rng = as_rng(seed)
        self.tally = CostTally()
        self.trace = trace
        inputs = strategy.alice_inputs(alice, params)
        self.encoded = [encode_input(c, params) for c in inputs]
        self.pairs: list[SparseState] = []
        self.oracle = build_oracle(bob, params)
        self.transcript = Transcript(
            params={"t": params.t, "T": params.T, "n": params.n, "m": params.m},
            alice=str(alice),
            bob=str(bob),
            seed=_seed_repr(seed),
        )

    def t_fields(self, i: int):
        return particle_fields(self.pairs[i].layout["t"], self.params.n)

    def apply_bob_oracle(self, i: int):
        apply_oracle(self.pairs[i], self.oracle, self.t_fields(i), tally=self.tally)

    def snapshot(self, stage: str):
        for pair in self.pairs:
            self.transcript.max_terms = max(self.transcript.max_terms, pair.peak_terms, len(pair))
        if self.trace is not None:
            self.trace(stage, self)

    def abort(self, outcome: Outcome) -> Outcome:
        self.transcript.abort_reason = outcome.value
        self.transcript.outcome = outcome.value
        self.transcript.log("abort", reason=outcome.value)
        return outcome


def run_protocol(
    alice: Circle,
    bob: Circle,
    params: ProblemParams,
    seed=None,
    adversary: Strategy | None = None,
    trace=None,
) -> tuple[Transcript, Outcome]:
    """Execute the full protocol; honest when `adversary` is None.

    `trace`, if given, is called as ``trace(stage, run)`` after each stage.
    """
    alice.validate(params)
    bob.validate(params)
    strategy = adversary or Strategy()
    run = ProtocolRun(alice, bob, params, seed, strategy, trace)
    tr = run.transcript
    m = params.m

    # preparation
    for enc in run.encoded:
        pair = new_pair(params)
        prepare_superposition(pair, "h", enc, run.tally)
        entangle_pair(pair, "h", "t", run.tally)
        run.pairs.append(pair)
    tr.log("prepare", pairs=len(run.pairs), terms=[len(p) for p in run.pairs])
    run.snapshot("prepare")

    # operation
    tr.messages.append({"from": "alice", "to": "bob", "kind": "quantum", "particles": ["t1", "t2"], "qubits": [m, m]})
    tr.log("send", particles=["t1", "t2"], qubits=m)
    interrupted = strategy.on_bob_receive(run)
    if interrupted is not None:
        run.snapshot("send")
        return _finish(run, run.abort(interrupted))
    for i in range(len(run.pairs)):
        strategy.bob_oracle(run, i)
    tr.log("oracle", coeffs=list(run.oracle.coeffs))
    run.snapshot("oracle")
    tr.messages.append({"from": "bob", "to": "alice", "kind": "quantum", "particles": ["t1", "t2"], "qubits": [m, m]})
    tr.log("return", particles=["t1", "t2"], qubits=m)

    passed = []
    for i, pair in enumerate(run.pairs, start=1):
        ok, value = honesty_test(pair, "h", "t", run.rng, run.tally)
        tr.honesty[f"h{i}"] = value
        passed.append(ok)
    tr.log("test", passed=all(passed), h=[tr.honesty["h1"], tr.honesty["h2"]])
    run.snapshot("test")
    if not all(passed):
        return _finish(run, run.abort(Outcome.ABORT_DISHONEST_BOB))

    # output
    signs = []
    for i, (pair, enc) in enumerate(zip(run.pairs, run.encoded), start=1):
        sign = distinguish(pair, "t", enc, run.rng, run.tally)
        tr.signs[f"t{i}"] = sign
        signs.append(sign)
    tr.log("measure", signs=signs)
    run.snapshot("measure")
    strategy.after_output(run)

    if not strategy.skip_consistency and signs[0] != signs[1]:
        return _finish(run, run.abort(Outcome.ABORT_INCONSISTENT))
    outcome = Outcome.INTERSECT if signs[0] == "-" else Outcome.DISJOINT
    tr.outcome = outcome.value
    tr.result_message = outcome.value
    tr.messages.append({"from": "alice", "to": "bob", "kind": "classical", "result": outcome.value})
    tr.log("announce", result=outcome.value)
    return _finish(run, outcome)


def _finish(run: ProtocolRun, outcome: Outcome):
    run.transcript.cost = {"t": run.params.t, "n": run.params.n, **run.tally.counts()}
    return run.transcript, outcome


def _seed_repr(seed):
    if isinstance(seed, np.random.Generator):
        return None
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return None if seed is None else int(seed)
