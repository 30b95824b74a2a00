"""Bob's phase oracle ``U|X> = (-1)^f(X) |X>`` built from modular arithmetic.

``f(X) = 1`` exactly when ``D - R < 0`` for Alice's circle encoded in ``X``
against Bob's circle. ``D - R`` is accumulated in an ancilla register using
the linearised form ``x^2 + y^2 - r^2 + k1 x + k2 y + k3 r + k4`` and its sign
bit is kicked back as a phase, after which every ancilla is uncomputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from pqci import qarith
from pqci.geometry import Circle, OracleCoeffs, ProblemParams, oracle_coeffs, squared_terms
from pqci.qarith import CostTally
from pqci.sparsesim import Register, SimulationError, SparseState, new_state

ANCILLA_NAMES = ("a", "e1", "e2", "e3", "g1", "g2", "g3")


@dataclass
class OracleOperator:
    coeffs: OracleCoeffs
    params: ProblemParams
    cost: CostTally = field(default_factory=CostTally, compare=False)

    @property
    def n(self) -> int:
        return self.params.n

    def ancilla_spec(self) -> list[tuple[str, int]]:
        return [("a", 1)] + [(name, self.n) for name in ANCILLA_NAMES[1:]]


def build_oracle(bob: Circle, params: ProblemParams) -> OracleOperator:
    bob.validate(params)
    return OracleOperator(oracle_coeffs(bob, params.n), params)


def f_predicate(alice: Circle, bob: Circle) -> int:
    """Classical reference for the oracle's phase bit: 1 iff ``D - R < 0``."""
    d, r = squared_terms(alice, bob)
    return int(d - r < 0)


@dataclass(frozen=True)
class _Step:
    fn: object
    args: tuple
    kwargs: dict
    self_inverse: bool = False

    def run(self, state, tally, inverse=False):
        kwargs = dict(self.kwargs, tally=tally)
        if inverse and not self.self_inverse:
            kwargs["inverse"] = True
        self.fn(state, *self.args, **kwargs)


def _compute_steps(op: OracleOperator, x: Register, y: Register, r: Register, anc: dict) -> list[_Step]:
    """The forward sequence leaving ``D - R`` in g3, all controlled on ``a``."""
    n = op.n
    k1, k2, k3, k4 = op.coeffs
    on = {"controls": [(anc["a"].start, 1)]}
    e1, e2, e3, g1, g2, g3 = (anc[k] for k in ANCILLA_NAMES[1:])
    copy = lambda s, d: _Step(qarith.copy_reg, (s, d, n), on, self_inverse=True)
    neg = lambda reg: _Step(qarith.negate, (reg, n), on, self_inverse=True)
    return [
        # copies of the inputs
        copy(x, e1), copy(y, e2), copy(r, e3),
        neg(r),
        # squares: x^2, y^2, (-r) * r
        _Step(qarith.mul_reg_accum, (x, e1, g1, n), on),
        _Step(qarith.mul_reg_accum, (y, e2, g2, n), on),
        _Step(qarith.mul_reg_accum, (r, e3, g3, n), on),
        neg(r),
        copy(x, e1), copy(y, e2), copy(r, e3),
        # cross terms
        _Step(qarith.mul_const_accum, (x, e1, k1, n), on),
        _Step(qarith.mul_const_accum, (y, e2, k2, n), on),
        _Step(qarith.mul_const_accum, (r, e3, k3, n), on),
        _Step(qarith.add_reg, (e1, g1, n), on),
        _Step(qarith.add_reg, (e2, g2, n), on),
        _Step(qarith.add_reg, (e3, g3, n), on),
        _Step(qarith.add_reg, (g1, g3, n), on),
        _Step(qarith.add_reg, (g2, g3, n), on),
        _Step(qarith.add_const, (g3, k4, n), on),
    ]


def _zero_test(state: SparseState, inputs: Sequence[Register], a: Register, tally: CostTally):
    """Flip ``a`` exactly on the all-zeros input; self-inverse."""
    mask = 0
    for reg in inputs:
        mask |= reg.mask
    width = sum(reg.width for reg in inputs)
    state.apply_x_mask(mask)
    tally.single(width)
    controls = [(q, 1) for reg in inputs for q in reg.qubits]
    state.apply_controlled(controls, lambda s: s.apply_x(a.start), [a.start])
    tally.multi_controlled(width)
    state.apply_x_mask(mask)
    tally.single(width)


def apply_oracle(
    state: SparseState,
    op: OracleOperator,
    input_registers: Sequence[Register],
    *,
    tally: CostTally | None = None,
    strict: bool = True,
) -> SparseState:
    """Apply ``U`` to the three n-bit input registers (x, y, r) of `state`.

    Ancillas are attached above the existing qubits for the duration of the
    call and detached once verified restored. If the state already carries
    registers named like the ancillas they are used in place; `strict` then
    rejects any term not holding ``a=1`` and zeros elsewhere.
    """
    n = op.n
    inputs = [state.reg(r) for r in input_registers]
    if len(inputs) != 3:
        raise SimulationError("oracle expects three input registers (x, y, r)")
    for reg in inputs:
        if reg.width != n:
            raise SimulationError(f"input register {reg.name!r} must be {n} qubits wide")

    attached = not all(name in state.layout for name in ANCILLA_NAMES)
    if attached:
        state.attach(op.ancilla_spec(), {"a": 1})
    anc = {name: state.layout[name] for name in ANCILLA_NAMES}
    for reg in inputs:
        for a in anc.values():
            if reg.overlaps(a):
                raise SimulationError(f"input register {reg.name!r} overlaps ancilla {a.name!r}")
    if strict and not attached:
        for k in state.terms:
            if anc["a"].get(k) != 1 or any(anc[nm].get(k) for nm in ANCILLA_NAMES[1:]):
                raise SimulationError("oracle ancillas must start as a=1, e=g=0")

    run = CostTally(op.cost.model)
    _zero_test(state, inputs, anc["a"], run)
    steps = _compute_steps(op, *inputs, anc)
    for step in steps:
        step.run(state, run)
    qarith.sign_phase_flip(state, anc["g3"], n, controls=[(anc["a"].start, 1)], tally=run)
    for step in reversed(steps):
        step.run(state, run, inverse=True)
    _zero_test(state, inputs, anc["a"], run)

    if attached:
        state.detach(list(reversed(ANCILLA_NAMES)), {"a": 1})
    op.cost.merge(run)
    if tally is not None:
        tally.merge(run)
    return state


def oracle_cost(params: ProblemParams, model=None) -> CostTally:
    """Cost of one oracle application (it does not depend on the input state)."""
    op = build_oracle(Circle(1, 1, 1), params)
    if model is not None:
        op.cost = CostTally(model)
    n = params.n
    state = new_state([("x", n), ("y", n), ("r", n)], {"x": 1, "y": 1, "r": 1})
    apply_oracle(state, op, ["x", "y", "r"])
    return op.cost
