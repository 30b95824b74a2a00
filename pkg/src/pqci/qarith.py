"""Reversible modular arithmetic on n-bit registers.

Every operation runs as an exact permutation of basis states (two's
complement, modulo ``2**n``). Gate-level adder circuits are not built; their
price is booked in a :class:`CostTally` instead:

* an adder run on ``n`` bits costs ``n`` units,
* a multiplier run is ``n`` controlled adder runs, so ``n**2`` units,
* a single-qubit gate or a CNOT costs one unit.

Each operation accepts ``controls`` (a list of ``(qubit, bit)`` pairs) to run
it conditionally, and ``inverse=True`` for the reverse permutation where the
operation is not self-inverse.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from pqci.sparsesim import Register, SimulationError, SparseState


@dataclass(frozen=True)
class CostModel:
    adder_units_per_bit: int = 1
    multiplier_adders_per_bit: int = 1
    single_qubit_gate: int = 1
    cnot_gate: int = 1
    multi_control_per_control: int = 1


@dataclass
class CostTally:
    model: CostModel = field(default_factory=CostModel)
    adder_runs: int = 0
    multiplier_runs: int = 0
    single_qubit_gates: int = 0
    cnot_gates: int = 0
    multi_controlled_gates: int = 0
    elementary_total: int = 0

    def adder(self, n: int, runs: int = 1):
        self.adder_runs += runs
        self.elementary_total += runs * n * self.model.adder_units_per_bit

    def multiplier(self, n: int, runs: int = 1):
        self.multiplier_runs += runs
        adders = n * self.model.multiplier_adders_per_bit
        self.elementary_total += runs * adders * n * self.model.adder_units_per_bit

    def single(self, count: int = 1):
        self.single_qubit_gates += count
        self.elementary_total += count * self.model.single_qubit_gate

    def cnot(self, count: int = 1):
        self.cnot_gates += count
        self.elementary_total += count * self.model.cnot_gate

    def multi_controlled(self, n_controls: int):
        self.multi_controlled_gates += 1
        self.elementary_total += n_controls * self.model.multi_control_per_control

    def merge(self, other: "CostTally") -> "CostTally":
        if other.model != self.model:
            raise ValueError("cannot merge tallies kept under different cost models")
        self.adder_runs += other.adder_runs
        self.multiplier_runs += other.multiplier_runs
        self.single_qubit_gates += other.single_qubit_gates
        self.cnot_gates += other.cnot_gates
        self.multi_controlled_gates += other.multi_controlled_gates
        self.elementary_total += other.elementary_total
        return self

    def counts(self) -> dict:
        d = asdict(self)
        del d["model"]
        return d


def cost_report(tally: CostTally, params) -> dict:
    return {"t": params.t, "n": params.n, **tally.counts()}


# -- helpers -----------------------------------------------------------------


def _tally(tally):
    return tally if tally is not None else CostTally()


def _check_width(reg: Register, n: int):
    if n < 2:
        raise SimulationError(f"register width n must be >= 2, got {n}")
    if reg.width != n:
        raise SimulationError(f"register {reg.name!r} has width {reg.width}, expected {n}")


def _disjoint(*regs: Register):
    for i, a in enumerate(regs):
        for b in regs[i + 1:]:
            if a.overlaps(b):
                raise SimulationError(f"registers {a.name!r} and {b.name!r} overlap")


def _run(state: SparseState, regs, fn, controls):
    regs = [state.reg(r) for r in regs]
    if not controls:
        return state.apply_permutation(regs, fn)
    targets = [q for r in regs for q in r.qubits]
    return state.apply_controlled(controls, lambda s: s.apply_permutation(regs, fn), targets)


# -- operations ----------------------------------------------------------------


def add_const(state, reg, c: int, n: int, *, controls=(), inverse=False, tally=None):
    """|y> -> |y + c mod 2^n>."""
    reg = state.reg(reg)
    _check_width(reg, n)
    mod = 1 << n
    if not 0 <= c < mod:
        raise SimulationError(f"constant {c} outside [0, 2^{n})")
    if inverse:
        c = (mod - c) % mod
    _run(state, [reg], lambda y: (y + c) % mod, controls)
    _tally(tally).adder(n)
    return state


def add_reg(state, src, dst, n: int, *, controls=(), inverse=False, tally=None):
    """|x>|y> -> |x>|y + x mod 2^n>."""
    src, dst = state.reg(src), state.reg(dst)
    _check_width(src, n)
    _check_width(dst, n)
    _disjoint(src, dst)
    mod = 1 << n
    sign = -1 if inverse else 1

    def fn(v):
        x, y = v & (mod - 1), v >> n
        return x | (((y + sign * x) % mod) << n)

    _run(state, [src, dst], fn, controls)
    _tally(tally).adder(n)
    return state


def mul_const_accum(state, y_reg, c_reg, k: int, n: int, *, controls=(), inverse=False, tally=None):
    """|y>|c> -> |y>|c + k*y mod 2^n>."""
    y_reg, c_reg = state.reg(y_reg), state.reg(c_reg)
    _check_width(y_reg, n)
    _check_width(c_reg, n)
    _disjoint(y_reg, c_reg)
    mod = 1 << n
    if not 0 <= k < mod:
        raise SimulationError(f"multiplier {k} outside [0, 2^{n})")
    sign = -1 if inverse else 1

    def fn(v):
        y, c = v & (mod - 1), v >> n
        return y | (((c + sign * k * y) % mod) << n)

    _run(state, [y_reg, c_reg], fn, controls)
    _tally(tally).multiplier(n)
    return state


def mul_reg_accum(state, x_reg, y_reg, c_reg, n: int, *, controls=(), inverse=False, tally=None):
    """|x>|y>|c> -> |x>|y>|c + x*y mod 2^n>.

    Books one multiplier run: ``n`` adders of ``2^i x`` each controlled by
    qubit ``y_i``.
    """
    x_reg, y_reg, c_reg = state.reg(x_reg), state.reg(y_reg), state.reg(c_reg)
    for r in (x_reg, y_reg, c_reg):
        _check_width(r, n)
    _disjoint(x_reg, y_reg, c_reg)
    mod = 1 << n
    low = mod - 1
    sign = -1 if inverse else 1

    def fn(v):
        x, y, c = v & low, (v >> n) & low, v >> (2 * n)
        return (v & ((1 << 2 * n) - 1)) | (((c + sign * x * y) % mod) << (2 * n))

    _run(state, [x_reg, y_reg, c_reg], fn, controls)
    _tally(tally).multiplier(n)
    return state


def negate(state, reg, n: int, *, controls=(), tally=None):
    """|y> -> |2^n - y mod 2^n>: bitwise complement then +1. Self-inverse."""
    reg = state.reg(reg)
    _check_width(reg, n)
    mod = 1 << n
    _run(state, [reg], lambda y: (-y) % mod, controls)
    t = _tally(tally)
    t.single(n)
    t.adder(n)
    return state


def copy_reg(state, src, dst, n: int, *, controls=(), strict=False, tally=None):
    """CNOT fan |x>|d> -> |x>|d xor x>; a copy when ``d = 0`` and self-inverse.

    With ``strict`` a destination that is not all-zeros in some term is an
    error.
    """
    src, dst = state.reg(src), state.reg(dst)
    _check_width(src, n)
    _check_width(dst, n)
    _disjoint(src, dst)
    if strict:
        cmask = cval = 0
        for q, b in controls:
            cmask |= 1 << q
            cval |= b << q
        for k in state.terms:
            if k & cmask == cval and dst.get(k):
                raise SimulationError(f"copy target {dst.name!r} is not |0>")
    if controls:
        state.apply_controlled(
            controls, lambda s: s.apply_cnot_register(src, dst), list(dst.qubits) + list(src.qubits)
        )
    else:
        state.apply_cnot_register(src, dst)
    _tally(tally).cnot(n)
    return state


def sign_phase_flip(state, reg, n: int, *, controls=(), tally=None):
    """Pauli Z on the top qubit: phase -1 exactly when the two's complement value is negative."""
    reg = state.reg(reg)
    _check_width(reg, n)
    if controls:
        state.apply_controlled(controls, lambda s: s.apply_z(reg.top), [reg.top])
    else:
        state.apply_z(reg.top)
    _tally(tally).single()
    return state


def to_signed(value: int, n: int) -> int:
    return value - (1 << n) if value >> (n - 1) else value
