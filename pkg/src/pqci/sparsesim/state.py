"""Sparse state-vector simulation keyed by computational basis integers.

A basis state is a plain ``int``: bit ``q`` of the key is the value of qubit
``q``. Only nonzero amplitudes are stored, which keeps the phase-encoded
query states (two terms each) cheap no matter how many qubits they span.
"""

from __future__ import annotations

import cmath
import math
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from pqci.sparsesim.layout import Register, RegisterLayout

PRUNE_TOL = 1e-12
NORM_TOL = 1e-10
EXHAUSTIVE_CHECK_MAX = 12
INV_SQRT2 = 1.0 / math.sqrt(2.0)

RegisterRef = Union[str, Register]


class SimulationError(Exception):
    """Raised when an operation is applied outside its preconditions."""


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class SparseState:
    """Map from basis keys to complex amplitudes over a register layout.

    Gate methods mutate the state in place and return it, so calls chain.
    """

    def __init__(self, layout: RegisterLayout, terms: Mapping[int, complex] | None = None):
        self.layout = layout
        self.terms: dict[int, complex] = dict(terms or {})
        # high-water mark of the term count, for the sparsity checks
        self.peak_terms = len(self.terms)

    @property
    def width(self) -> int:
        return self.layout.width

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"SparseState(width={self.width}, terms={len(self.terms)})"

    def copy(self) -> "SparseState":
        out = SparseState(self.layout, self.terms)
        out.peak_terms = self.peak_terms
        return out

    def reg(self, ref: RegisterRef) -> Register:
        if isinstance(ref, Register):
            if ref.stop > self.width:
                raise SimulationError(f"register {ref.name!r} exceeds state width {self.width}")
            return ref
        try:
            return self.layout[ref]
        except KeyError:
            raise SimulationError(f"unknown register {ref!r}") from None

    def _check_qubit(self, q: int):
        if not 0 <= q < self.width:
            raise SimulationError(f"qubit {q} out of range for width {self.width}")

    def _set_terms(self, terms: dict[int, complex]):
        self.terms = terms
        if len(terms) > self.peak_terms:
            self.peak_terms = len(terms)

    # -- inspection -------------------------------------------------------

    def norm(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.terms.values())

    def amplitude(self, key: int) -> complex:
        return self.terms.get(key, 0j)

    def values(self, ref: RegisterRef) -> dict[int, complex]:
        """Register value of every term, keyed by basis key."""
        reg = self.reg(ref)
        return {k: reg.get(k) for k in self.terms}

    def check_invariants(self):
        n = self.norm()
        if abs(n - 1.0) > NORM_TOL:
            raise SimulationError(f"state norm {n!r} deviates from 1")
        for k, a in self.terms.items():
            if not (cmath.isfinite(a)):
                raise SimulationError(f"non-finite amplitude on key {k}")
            if abs(a) < PRUNE_TOL:
                raise SimulationError(f"unpruned amplitude on key {k}")
            if k >> self.width:
                raise SimulationError(f"key {k} wider than the state")

    def dump(self) -> str:
        """One ``bitstring re im`` line per term, most significant qubit first."""
        lines = []
        for k in sorted(self.terms):
            a = self.terms[k]
            lines.append(f"{k:0{self.width}b} {a.real:.12g} {a.imag:.12g}")
        return "\n".join(lines)

    # -- single-qubit gates -------------------------------------------------

    def apply_x(self, q: int) -> "SparseState":
        self._check_qubit(q)
        bit = 1 << q
        self.terms = {k ^ bit: a for k, a in self.terms.items()}
        return self

    def apply_x_mask(self, mask: int) -> "SparseState":
        """Pauli X on every qubit set in `mask`."""
        if mask >> self.width:
            raise SimulationError("mask exceeds state width")
        self.terms = {k ^ mask: a for k, a in self.terms.items()}
        return self

    def apply_z(self, q: int) -> "SparseState":
        self._check_qubit(q)
        bit = 1 << q
        self.terms = {k: (-a if k & bit else a) for k, a in self.terms.items()}
        return self

    def apply_h(self, q: int) -> "SparseState":
        self._check_qubit(q)
        bit = 1 << q
        out: dict[int, complex] = {}
        for k, a in self.terms.items():
            a = a * INV_SQRT2
            k0 = k & ~bit
            k1 = k0 | bit
            out[k0] = out.get(k0, 0j) + a
            out[k1] = out.get(k1, 0j) + (-a if k & bit else a)
        self._set_terms({k: a for k, a in out.items() if abs(a) >= PRUNE_TOL})
        return self

    def apply_cnot(self, control: int, target: int) -> "SparseState":
        self._check_qubit(control)
        self._check_qubit(target)
        if control == target:
            raise SimulationError("CNOT control and target must differ")
        c, t = 1 << control, 1 << target
        self.terms = {(k ^ t if k & c else k): a for k, a in self.terms.items()}
        return self

    def apply_cnot_register(self, src: RegisterRef, dst: RegisterRef) -> "SparseState":
        """Qubit-wise CNOT fan, ``src[i]`` controlling ``dst[i]``."""
        s, d = self.reg(src), self.reg(dst)
        if s.width != d.width:
            raise SimulationError("CNOT fan needs equal register widths")
        if s.overlaps(d):
            raise SimulationError("CNOT fan registers overlap")
        self.terms = {d.put(k, d.get(k) ^ s.get(k)): a for k, a in self.terms.items()}
        return self

    # -- structured operations ----------------------------------------------

    def apply_permutation(
        self, registers: Sequence[RegisterRef], bijection: Callable[[int], int]
    ) -> "SparseState":
        """Remap the joint value of `registers` through `bijection`.

        The first register supplies the least significant bits of the joint
        value.
        """
        regs = [self.reg(r) for r in registers]
        for i, r in enumerate(regs):
            for other in regs[i + 1:]:
                if r.overlaps(other):
                    raise SimulationError(f"registers {r.name!r} and {other.name!r} overlap")
        total = sum(r.width for r in regs)
        size = 1 << total

        if total <= EXHAUSTIVE_CHECK_MAX:
            image = [bijection(v) for v in range(size)]
            if sorted(image) != list(range(size)):
                raise SimulationError("map is not a permutation of the register values")
            lookup = image.__getitem__
        else:
            lookup = bijection

        mask = 0
        for r in regs:
            mask |= r.mask

        def joint(k):
            v, shift = 0, 0
            for r in regs:
                v |= r.get(k) << shift
                shift += r.width
            return v

        def spread(v):
            k, shift = 0, 0
            for r in regs:
                k |= ((v >> shift) & ((1 << r.width) - 1)) << r.start
                shift += r.width
            return k

        seen: dict[int, int] = {}
        out: dict[int, complex] = {}
        for k, a in self.terms.items():
            v = joint(k)
            w = seen.get(v)
            if w is None:
                w = lookup(v)
                if not 0 <= w < size:
                    raise SimulationError(f"map sends {v} outside the register range")
                seen[v] = w
            out[(k & ~mask) | spread(w)] = a
        if len(set(seen.values())) != len(seen):
            raise SimulationError("map is not injective on the touched values")
        self.terms = out
        return self

    def apply_controlled(
        self,
        controls: Iterable[tuple[int, int]],
        inner: Callable[["SparseState"], object],
        targets: Iterable[int] = (),
    ) -> "SparseState":
        """Apply `inner` only to terms whose control qubits hold the required bits.

        `targets` lists the qubits `inner` may touch; they must be disjoint
        from the controls.
        """
        cmask = cval = 0
        for q, bit in controls:
            self._check_qubit(q)
            if bit not in (0, 1):
                raise SimulationError("control bit must be 0 or 1")
            cmask |= 1 << q
            cval |= bit << q
        tmask = 0
        for q in targets:
            tmask |= 1 << q
        if cmask & tmask:
            raise SimulationError("control qubits overlap the controlled operation")

        hit, miss = {}, {}
        for k, a in self.terms.items():
            (hit if k & cmask == cval else miss)[k] = a
        if not hit:
            return self
        sub = SparseState(self.layout, hit)
        inner(sub)
        for k in sub.terms:
            if k & cmask != cval:
                raise SimulationError("controlled operation modified a control qubit")
        miss.update(sub.terms)
        self._set_terms(miss)
        return self

    # -- measurement ----------------------------------------------------------

    def measure_register(self, ref: RegisterRef, rng=None) -> tuple[int, "SparseState"]:
        """Computational-basis measurement of one register; collapses in place."""
        reg = self.reg(ref)
        rng = as_rng(rng)
        weights: dict[int, float] = {}
        for k in sorted(self.terms):
            v = reg.get(k)
            weights[v] = weights.get(v, 0.0) + abs(self.terms[k]) ** 2
        total = math.fsum(weights.values())
        u = rng.random() * total
        acc = 0.0
        outcome = None
        for v, w in weights.items():
            acc += w
            outcome = v
            if u < acc:
                break
        keep = {k: a for k, a in self.terms.items() if reg.get(k) == outcome}
        scale = 1.0 / math.sqrt(weights[outcome])
        self.terms = {k: a * scale for k, a in keep.items()}
        return outcome, self

    def measure_qubit(self, q: int, rng=None) -> tuple[int, "SparseState"]:
        self._check_qubit(q)
        return self.measure_register(Register(f"q{q}", q, 1), rng)

    def measure_pm(self, q: int, rng=None) -> tuple[str, "SparseState"]:
        """Measure qubit `q` in the |+>, |-> basis, leaving it in the observed eigenstate."""
        self.apply_h(q)
        bit, _ = self.measure_qubit(q, rng)
        self.apply_h(q)
        return ("-" if bit else "+"), self

    # -- register plumbing ----------------------------------------------------

    def attach(self, spec: Sequence[tuple[str, int]], init: Mapping[str, int] | None = None) -> "SparseState":
        """Append fresh registers above the current ones, initialised per `init`."""
        layout = self.layout.extend(spec)
        fresh = layout.encode({name: (init or {}).get(name, 0) for name, _ in spec})
        self.layout = layout
        self.terms = {k | fresh: a for k, a in self.terms.items()}
        return self

    def detach(self, names: Sequence[str], expect: Mapping[str, int] | None = None) -> "SparseState":
        """Drop trailing registers after checking every term holds the `expect` values."""
        expect = expect or {}
        regs = [self.reg(n) for n in names]
        for k in self.terms:
            for r in regs:
                if r.get(k) != expect.get(r.name, 0):
                    raise SimulationError(
                        f"register {r.name!r} holds {r.get(k)}, expected {expect.get(r.name, 0)}"
                    )
        layout = self.layout.truncate(names)
        keep = (1 << layout.width) - 1
        self.layout = layout
        self.terms = {k & keep: a for k, a in self.terms.items()}
        return self


def new_state(layout: RegisterLayout | Sequence[tuple[str, int]], init: Mapping[str, int] | None = None) -> SparseState:
    """Single basis state with the given per-register integer values."""
    if not isinstance(layout, RegisterLayout):
        layout = RegisterLayout(layout)
    return SparseState(layout, {layout.encode(init or {}): 1 + 0j})


def fidelity(a: SparseState, b: SparseState) -> float:
    """|<a|b>|^2."""
    if a.width != b.width:
        raise SimulationError(f"width mismatch: {a.width} vs {b.width}")
    small, big = (a, b) if len(a.terms) <= len(b.terms) else (b, a)
    overlap = sum(small.terms[k].conjugate() * big.terms[k] for k in small.terms if k in big.terms)
    if small is b:
        overlap = overlap.conjugate()
    return min(1.0, abs(overlap) ** 2)
