"""Named qubit registers over a flat qubit index space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


@dataclass(frozen=True)
class Register:
    """A contiguous run of qubits, bit 0 being the least significant."""

    name: str
    start: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"register {self.name!r} must have positive width")
        if self.start < 0:
            raise ValueError(f"register {self.name!r} has negative start")

    @property
    def stop(self) -> int:
        return self.start + self.width

    @property
    def qubits(self) -> range:
        return range(self.start, self.stop)

    @property
    def top(self) -> int:
        """Index of the most significant qubit."""
        return self.stop - 1

    @property
    def mask(self) -> int:
        return ((1 << self.width) - 1) << self.start

    def get(self, key: int) -> int:
        return (key >> self.start) & ((1 << self.width) - 1)

    def put(self, key: int, value: int) -> int:
        return (key & ~self.mask) | (value << self.start)

    def sub(self, name: str, offset: int, width: int) -> "Register":
        """A view onto `width` qubits starting `offset` qubits into this register."""
        if offset < 0 or offset + width > self.width:
            raise ValueError(f"sub-register {name!r} does not fit inside {self.name!r}")
        return Register(name, self.start + offset, width)

    def overlaps(self, other: "Register") -> bool:
        return self.start < other.stop and other.start < self.stop


class RegisterLayout(Mapping[str, Register]):
    """Ordered, disjoint registers covering qubits ``0 .. width-1``.

    Registers are packed in declaration order, the first one starting at
    qubit 0.
    """

    def __init__(self, spec: Iterable[tuple[str, int]] = ()):
        self._regs: dict[str, Register] = {}
        start = 0
        for name, width in spec:
            if name in self._regs:
                raise ValueError(f"duplicate register name {name!r}")
            self._regs[name] = Register(name, start, width)
            start += width
        self.width = start

    def __getitem__(self, name: str) -> Register:
        return self._regs[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._regs)

    def __len__(self) -> int:
        return len(self._regs)

    def __eq__(self, other):
        if not isinstance(other, RegisterLayout):
            return NotImplemented
        return list(self._regs.values()) == list(other._regs.values())

    def __hash__(self):
        return hash(tuple(self._regs.values()))

    def __repr__(self):
        body = ", ".join(f"{r.name}:{r.width}" for r in self._regs.values())
        return f"RegisterLayout({body})"

    def spec(self) -> list[tuple[str, int]]:
        return [(r.name, r.width) for r in self._regs.values()]

    def extend(self, spec: Iterable[tuple[str, int]]) -> "RegisterLayout":
        return RegisterLayout(self.spec() + list(spec))

    def truncate(self, names: Iterable[str]) -> "RegisterLayout":
        """Drop registers, which must be the trailing (highest) ones."""
        names = set(names)
        kept = self.spec()
        while kept and kept[-1][0] in names:
            names.discard(kept.pop()[0])
        if names:
            raise ValueError(f"can only drop trailing registers, not {sorted(names)}")
        return RegisterLayout(kept)

    def encode(self, values: Mapping[str, int]) -> int:
        key = 0
        for name, value in values.items():
            reg = self._regs[name]
            if not 0 <= value < (1 << reg.width):
                raise ValueError(
                    f"value {value} does not fit register {name!r} of width {reg.width}"
                )
            key = reg.put(key, value)
        return key

    def decode(self, key: int) -> dict[str, int]:
        return {name: reg.get(key) for name, reg in self._regs.items()}
