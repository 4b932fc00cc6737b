"""Index arithmetic over the fundamental domain of a diagonal period lattice."""
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence, Tuple

from .errors import LatticeError

MultiIndex = Tuple[int, ...]


class LatticeKind(str, Enum):
    HYPERCUBIC = "hypercubic"
    TRIANGULAR = "triangular"


@dataclass(frozen=True)
class LatticeSpec:
    """Periods q_1..q_d of Γ = q_1 Z ⊕ ... ⊕ q_d Z and the lattice kind."""

    periods: Tuple[int, ...]
    kind: LatticeKind = LatticeKind.HYPERCUBIC

    def __post_init__(self):
        periods = tuple(int(q) for q in self.periods)
        object.__setattr__(self, 'periods', periods)
        object.__setattr__(self, 'kind', LatticeKind(self.kind))
        if not periods:
            raise LatticeError("A lattice needs at least one period")
        if any(q < 1 for q in periods):
            raise LatticeError(f"Periods must be positive integers, got {periods}")
        if self.kind is LatticeKind.TRIANGULAR and len(periods) != 2:
            raise LatticeError(f"The triangular lattice is two-dimensional, got periods {periods}")

    @property
    def dimension(self) -> int:
        return len(self.periods)

    @property
    def volume(self) -> int:
        """Q = q_1 q_2 ... q_d."""
        return math.prod(self.periods)

    @property
    def is_triangular(self) -> bool:
        return self.kind is LatticeKind.TRIANGULAR

    def block(self, start: int, stop: int) -> 'LatticeSpec':
        """Hypercubic lattice on coordinates start..stop-1 (0-based)."""
        return LatticeSpec(self.periods[start:stop])

    def to_dict(self) -> dict:
        return {"periods": list(self.periods), "lattice": self.kind.value}

    @classmethod
    def from_dict(cls, data: dict) -> 'LatticeSpec':
        try:
            return cls(tuple(data["periods"]), LatticeKind(data.get("lattice", "hypercubic")))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, LatticeError):
                raise
            raise LatticeError(f"Invalid lattice description: {e}") from e

    @staticmethod
    def parse_periods(text: str) -> Tuple[int, ...]:
        """Parse "2,3" into (2, 3)."""
        try:
            return tuple(int(part) for part in text.split(',') if part.strip())
        except ValueError as e:
            raise LatticeError(f"Periods must be comma-separated integers, got '{text}'") from e


@lru_cache(maxsize=64)
def fundamental_domain(spec: LatticeSpec) -> Tuple[MultiIndex, ...]:
    """All Q canonical indices, lexicographic with n_d varying fastest."""
    return tuple(itertools.product(*(range(q) for q in spec.periods)))


def is_canonical(spec: LatticeSpec, n: Sequence[int]) -> bool:
    return len(n) == spec.dimension and all(0 <= n_j < q for n_j, q in zip(n, spec.periods))


def flatten(spec: LatticeSpec, n: Sequence[int]) -> int:
    """Position of a canonical index in fundamental_domain order."""
    if not is_canonical(spec, n):
        raise LatticeError(f"Index {tuple(n)} is not canonical for periods {spec.periods}")
    position = 0
    for n_j, q in zip(n, spec.periods):
        position = position * q + int(n_j)
    return position


def unflatten(spec: LatticeSpec, position: int) -> MultiIndex:
    if not 0 <= position < spec.volume:
        raise LatticeError(f"Flat position {position} outside [0, {spec.volume})")
    coords = []
    for q in reversed(spec.periods):
        position, n_j = divmod(position, q)
        coords.append(n_j)
    return tuple(reversed(coords))


def reduce_mod(spec: LatticeSpec, l: Sequence[int]) -> MultiIndex:
    """Componentwise Euclidean remainder l_j mod q_j."""
    if len(l) != spec.dimension:
        raise LatticeError(f"Index {tuple(l)} has wrong dimension for periods {spec.periods}")
    return tuple(int(l_j) % q for l_j, q in zip(l, spec.periods))


def phase(spec: LatticeSpec, j: int, n_j: int) -> complex:
    """ρ^j_{n_j} = exp(2πi n_j / q_j); j is 1-based."""
    if not 1 <= j <= spec.dimension:
        raise LatticeError(f"Coordinate {j} outside 1..{spec.dimension}")
    q = spec.periods[j - 1]
    angle = 2.0 * math.pi * (int(n_j) % q) / q
    return complex(math.cos(angle), math.sin(angle))


@lru_cache(maxsize=64)
def phase_table(spec: LatticeSpec) -> Tuple[Tuple[complex, ...], ...]:
    """phase_table(spec)[j][n_j] = ρ^{j+1}_{n_j} for canonical n_j (0-based j)."""
    return tuple(
        tuple(phase(spec, j + 1, n_j) for n_j in range(q))
        for j, q in enumerate(spec.periods)
    )
