"""Classical ground truth: circles, the squared intersection test, oracle coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemParams:
    """Sizes derived from the precision ``t``.

    Coordinates live on a ``T = 2**t`` grid, arithmetic registers are
    ``n = 2t + 3`` bits wide and each transmitted particle has ``m = 3n``
    qubits.
    """

    t: int

    def __post_init__(self):
        if not isinstance(self.t, int) or self.t < 2:
            raise GeometryError(f"precision t must be an integer >= 2, got {self.t!r}")

    @property
    def T(self) -> int:
        return 1 << self.t

    @property
    def n(self) -> int:
        return 2 * self.t + 3

    @property
    def m(self) -> int:
        return 3 * self.n

    @property
    def modulus(self) -> int:
        return 1 << self.n


@dataclass(frozen=True)
class Circle:
    x: int
    y: int
    r: int

    @classmethod
    def parse(cls, text: str) -> "Circle":
        """Parse an ``x,y,r`` decimal triple."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise GeometryError(f"expected x,y,r but got {text!r}")
        try:
            x, y, r = (int(p) for p in parts)
        except ValueError:
            raise GeometryError(f"circle components must be integers: {text!r}") from None
        return cls(x, y, r)

    def validate(self, params: ProblemParams) -> "Circle":
        hi = params.T - 1
        for name in ("x", "y", "r"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 1 <= v <= hi:
                raise GeometryError(f"circle {name}={v!r} outside [1, {hi}] for t={params.t}")
        return self

    def __str__(self):
        return f"{self.x},{self.y},{self.r}"


class OracleCoeffs(NamedTuple):
    k1: int
    k2: int
    k3: int
    k4: int


def valid_circles(params: ProblemParams):
    rng = range(1, params.T)
    return [Circle(x, y, r) for x in rng for y in rng for r in rng]


def squared_terms(c1: Circle, c2: Circle) -> tuple[int, int]:
    """(D, R): squared centre distance and squared radius sum."""
    d = (c1.x - c2.x) ** 2 + (c1.y - c2.y) ** 2
    r = (c1.r + c2.r) ** 2
    return d, r


def intersects(c1: Circle, c2: Circle) -> bool:
    d, r = squared_terms(c1, c2)
    return d < r


def d_minus_r(c1: Circle, c2: Circle, n: int) -> int:
    d, r = squared_terms(c1, c2)
    return (d - r) % (1 << n)


def oracle_coeffs(bob: Circle, n: int) -> OracleCoeffs:
    """Coefficients linearising ``D - R`` in Alice's unknowns, modulo ``2**n``.

    For any Alice circle (x, y, r)::

        x*x + y*y - r*r + k1*x + k2*y + k3*r + k4 == D - R  (mod 2**n)
    """
    mod = 1 << n
    return OracleCoeffs(
        (-2 * bob.x) % mod,
        (-2 * bob.y) % mod,
        (-2 * bob.r) % mod,
        (bob.x ** 2 + bob.y ** 2 - bob.r ** 2) % mod,
    )


def linearised_d_minus_r(alice: Circle, coeffs: OracleCoeffs, n: int) -> int:
    k1, k2, k3, k4 = coeffs
    x, y, r = alice.x, alice.y, alice.r
    return (x * x + y * y - r * r + k1 * x + k2 * y + k3 * r + k4) % (1 << n)
