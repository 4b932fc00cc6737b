"""Periodic potentials, their discrete Fourier transforms and separability."""
import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Config
from .errors import PotentialError, SeparabilityError
from .lattice import LatticeSpec, MultiIndex, flatten, fundamental_domain, reduce_mod
from .rng import Xorshift64Star

logger = logging.getLogger(__name__)


def _frozen_complex(values, size: int, what: str) -> np.ndarray:
    array = np.array(values, dtype=complex).reshape(-1)
    if array.shape[0] != size:
        raise PotentialError(f"{what} needs {size} values, got {array.shape[0]}")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Potential:
    """Values of a Γ-periodic function on W in canonical flat order."""

    spec: LatticeSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen_complex(self.values, self.spec.volume, "Potential"))

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0))

    def at(self, n: Sequence[int]) -> complex:
        """V(n) for any n in Z^d (periodic extension)."""
        return complex(self.values[flatten(self.spec, reduce_mod(self.spec, n))])

    def grid(self) -> np.ndarray:
        """Values reshaped to the box q_1 x ... x q_d."""
        return self.values.reshape(self.spec.periods)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other: 'Potential') -> 'Potential':
        if other.spec != self.spec:
            raise PotentialError(f"Cannot add potentials on {self.spec.periods} and {other.spec.periods}")
        return Potential(self.spec, self.values + other.values)

    def shifted(self, constant: complex) -> 'Potential':
        return Potential(self.spec, self.values + constant)


@dataclass(frozen=True, eq=False)
class FourierTable:
    """Coefficients V̂(l), l in W, canonical order; periodic in l."""

    spec: LatticeSpec
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, 'coefficients', _frozen_complex(self.coefficients, self.spec.volume, "FourierTable")
        )

    def at(self, l: Sequence[int]) -> complex:
        return complex(self.coefficients[flatten(self.spec, reduce_mod(self.spec, l))])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.coefficients)))


@lru_cache(maxsize=32)
def _character_matrix(spec: LatticeSpec) -> np.ndarray:
    """E[l, n] = exp(-2πi Σ_j l_j n_j / q_j), phases reduced mod q_j first."""
    domain = np.array(fundamental_domain(spec), dtype=np.int64)
    periods = np.array(spec.periods, dtype=np.int64)
    products = (domain[:, None, :] * domain[None, :, :]) % periods
    angles = 2.0 * np.pi * (products / periods).sum(axis=2)
    matrix = np.cos(angles) - 1j * np.sin(angles)
    matrix.flags.writeable = False
    return matrix


def dft(V: Potential) -> FourierTable:
    """V̂(l) = (1/Q) Σ_n V(n) exp(-2πi Σ_j l_j n_j / q_j), by direct summation."""
    matrix = _character_matrix(V.spec)
    return FourierTable(V.spec, matrix @ V.values / V.spec.volume)


def idft(F: FourierTable) -> Potential:
    """V(n) = Σ_l V̂(l) exp(+2πi Σ_j l_j n_j / q_j)."""
    matrix = _character_matrix(F.spec)
    return Potential(F.spec, matrix.conj().T @ F.coefficients)


def mean(V: Potential) -> complex:
    """[V] = (1/Q) Σ_{n in W} V(n)."""
    return complex(np.mean(V.values))


class SeparabilityPattern:
    """
    Block structure (d_1, ..., d_r) of a separable potential on a given lattice.

    Blocks are numbered from 0. Block j covers coordinates
    offsets[j] .. offsets[j] + d_j - 1 (0-based).
    """

    def __init__(self, spec: LatticeSpec, blocks: Sequence[int]):
        blocks = tuple(int(b) for b in blocks)
        if len(blocks) < 2:
            raise PotentialError(f"A separability pattern needs at least two blocks, got {blocks}")
        if any(b < 1 for b in blocks):
            raise PotentialError(f"Block sizes must be positive, got {blocks}")
        if sum(blocks) != spec.dimension:
            raise PotentialError(
                f"Block sizes {blocks} do not add up to the dimension {spec.dimension}"
            )
        self.spec = spec
        self.blocks = blocks
        offsets = [0]
        for size in blocks[:-1]:
            offsets.append(offsets[-1] + size)
        self.offsets = tuple(offsets)

    def __repr__(self) -> str:
        return f"SeparabilityPattern(periods={self.spec.periods}, blocks={self.blocks})"

    def __eq__(self, other) -> bool:
        return isinstance(other, SeparabilityPattern) and (self.spec, self.blocks) == (other.spec, other.blocks)

    def __hash__(self) -> int:
        return hash((self.spec, self.blocks))

    @classmethod
    def parse(cls, spec: LatticeSpec, text: str) -> 'SeparabilityPattern':
        """Parse "1,2" into a pattern on spec."""
        try:
            blocks = tuple(int(part) for part in text.split(',') if part.strip())
        except ValueError as e:
            raise PotentialError(f"Pattern must be comma-separated integers, got '{text}'") from e
        return cls(spec, blocks)

    @classmethod
    def complete(cls, spec: LatticeSpec) -> 'SeparabilityPattern':
        """The (1, 1, ..., 1) pattern."""
        return cls(spec, (1,) * spec.dimension)

    @property
    def rank(self) -> int:
        return len(self.blocks)

    def block_axes(self, j: int) -> Tuple[int, ...]:
        return tuple(range(self.offsets[j], self.offsets[j] + self.blocks[j]))

    def block_spec(self, j: int) -> LatticeSpec:
        """Hypercubic lattice of block j (its domain is W_j)."""
        return self.spec.block(self.offsets[j], self.offsets[j] + self.blocks[j])

    def project(self, n: Sequence[int], j: int) -> MultiIndex:
        """ñ_j: the coordinates of n belonging to block j."""
        return tuple(n[self.offsets[j]:self.offsets[j] + self.blocks[j]])

    def embed(self, j: int, l: Sequence[int]) -> MultiIndex:
        """l^{j¬}: l placed in block j, zeros elsewhere."""
        if len(l) != self.blocks[j]:
            raise PotentialError(f"Block {j} index needs {self.blocks[j]} coordinates, got {tuple(l)}")
        before = self.offsets[j]
        after = self.spec.dimension - before - self.blocks[j]
        return (0,) * before + tuple(int(x) for x in l) + (0,) * after

    def nonzero_blocks(self, l: Sequence[int]) -> int:
        reduced = reduce_mod(self.spec, l)
        return sum(1 for j in range(self.rank) if any(self.project(reduced, j)))

    @cached_property
    def cross_indices(self) -> Tuple[MultiIndex, ...]:
        """S: indices of W with at least two non-zero blocks."""
        return tuple(l for l in fundamental_domain(self.spec) if self.nonzero_blocks(l) >= 2)

    def embedded_indices(self, j: int) -> Tuple[MultiIndex, ...]:
        """{l^{j¬} : l in W_j, l != 0}."""
        return tuple(
            self.embed(j, l) for l in fundamental_domain(self.block_spec(j)) if any(l)
        )


@dataclass(frozen=True)
class SeparabilityVerdict:
    separable: bool
    witness: Optional[MultiIndex]
    magnitude: float
    scale: float


def is_separable(F: FourierTable, pattern: SeparabilityPattern, tol: Optional[float] = None) -> SeparabilityVerdict:
    """
    True iff every coefficient on S is at most tol * max(1, max_l |V̂(l)|).

    On failure the witness is the index of S with the largest magnitude.
    """
    if pattern.spec.periods != F.spec.periods:
        raise PotentialError(f"Pattern for {pattern.spec.periods} used on lattice {F.spec.periods}")
    tol = Config.SEPARABILITY_TOL if tol is None else tol
    scale = max(1.0, F.sup_norm())
    witness, magnitude = None, 0.0
    for l in pattern.cross_indices:
        value = abs(F.at(l))
        if value > magnitude:
            witness, magnitude = l, value
    separable = magnitude <= tol * scale
    return SeparabilityVerdict(separable, None if separable else witness, magnitude, scale)


def cross_power_sum(F: FourierTable, pattern: SeparabilityPattern) -> float:
    """Σ_{l in S} |V̂(l)|^2."""
    return float(sum(abs(F.at(l)) ** 2 for l in pattern.cross_indices))


def split(
    V: Potential, pattern: SeparabilityPattern, tol: Optional[float] = None
) -> Tuple[complex, List[Potential]]:
    """
    Decompose a separable V into its mean and zero-mean block components.

    Component j is the inverse transform, on the block-j lattice, of the
    coefficients V̂(l^{j¬}) with the l = 0 coefficient removed.
    """
    table = dft(V)
    verdict = is_separable(table, pattern, tol)
    if not verdict.separable:
        raise SeparabilityError(
            f"Potential is not {pattern.blocks}-separable: |V̂{verdict.witness}| = {verdict.magnitude:.3e}",
            witness=verdict.witness,
            magnitude=verdict.magnitude,
        )
    components = []
    for j in range(pattern.rank):
        block = pattern.block_spec(j)
        coefficients = np.array(
            [table.at(pattern.embed(j, l)) if any(l) else 0.0 for l in fundamental_domain(block)],
            dtype=complex,
        )
        component = idft(FourierTable(block, coefficients))
        if V.is_real:
            component = Potential(block, component.values.real)
        components.append(component)
    return complex(table.coefficients[0]), components


def join(constant: complex, components: Sequence[Potential], pattern: SeparabilityPattern) -> Potential:
    """V(n) = c + Σ_j V_j(ñ_j)."""
    if len(components) != pattern.rank:
        raise PotentialError(f"Pattern {pattern.blocks} needs {pattern.rank} components, got {len(components)}")
    spec = pattern.spec
    total = np.full(spec.periods, constant, dtype=complex)
    for j, component in enumerate(components):
        if component.spec.periods != pattern.block_spec(j).periods:
            raise PotentialError(
                f"Component {j} lives on {component.spec.periods}, block needs {pattern.block_spec(j).periods}"
            )
        shape = [1] * spec.dimension
        for axis in pattern.block_axes(j):
            shape[axis] = spec.periods[axis]
        total = total + component.values.reshape(shape)
    return Potential(spec, total.reshape(-1))


def translate(V: Potential, t: Sequence[int]) -> Potential:
    """result(n) = V(n + t)."""
    if len(t) != V.spec.dimension:
        raise PotentialError(f"Translation {tuple(t)} has wrong dimension for {V.spec.periods}")
    shifted = np.roll(V.grid(), shift=tuple(-int(x) for x in t), axis=tuple(range(V.spec.dimension)))
    return Potential(V.spec, shifted.reshape(-1))


def reflect(V: Potential, axes: Optional[Sequence[int]] = None) -> Potential:
    """result(n) = V(-n) on the chosen coordinates (0-based axes, default all)."""
    axes = tuple(range(V.spec.dimension)) if axes is None else tuple(axes)
    grid = V.grid()
    if axes:
        grid = np.roll(np.flip(grid, axis=axes), shift=(1,) * len(axes), axis=axes)
    return Potential(V.spec, grid.reshape(-1))


def plant_cross_coefficient(
    V: Potential, pattern: SeparabilityPattern, index: Sequence[int], coefficient: complex
) -> Potential:
    """
    Add ``coefficient`` to V̂(index) for an index of S.

    Real potentials stay real: the conjugate is added at -index, and a
    self-conjugate index receives |coefficient|.
    """
    index = reduce_mod(V.spec, index)
    if index not in pattern.cross_indices:
        raise PotentialError(f"Index {index} is not a cross index of pattern {pattern.blocks}")
    table = dft(V)
    coefficients = table.coefficients.copy()
    position = flatten(V.spec, index)
    if V.is_real:
        partner = flatten(V.spec, reduce_mod(V.spec, tuple(-x for x in index)))
        if partner == position:
            coefficients[position] += abs(coefficient)
        else:
            coefficients[position] += coefficient
            coefficients[partner] += np.conj(coefficient)
        return Potential(V.spec, idft(FourierTable(V.spec, coefficients)).values.real)
    coefficients[position] += coefficient
    return idft(FourierTable(V.spec, coefficients))


class PotentialMode(str, Enum):
    REAL = "real"
    COMPLEX = "complex"
    SEPARABLE = "separable"
    NONSEPARABLE = "nonseparable"


def _draw_values(rng: Xorshift64Star, size: int, complex_valued: bool) -> np.ndarray:
    values = rng.uniform(-1.0, 1.0, size).astype(complex)
    if complex_valued:
        values = values + 1j * rng.uniform(-1.0, 1.0, size)
    return values


def random_potential(
    spec: LatticeSpec,
    seed: int,
    mode: Union[PotentialMode, str] = PotentialMode.REAL,
    pattern: Optional[SeparabilityPattern] = None,
    complex_valued: bool = False,
) -> Potential:
    """
    Deterministic random potential.

    ``separable`` joins zero-mean block components drawn independently plus
    a drawn constant; ``nonseparable`` additionally plants one coefficient of
    magnitude in [0.5, 1) at an index of S. ``complex_valued`` applies to
    the two pattern modes.
    """
    mode = PotentialMode(mode)
    rng = Xorshift64Star(seed)
    if mode is PotentialMode.REAL:
        return Potential(spec, _draw_values(rng, spec.volume, False))
    if mode is PotentialMode.COMPLEX:
        return Potential(spec, _draw_values(rng, spec.volume, True))

    if pattern is None:
        raise PotentialError(f"Mode '{mode.value}' needs a separability pattern")
    components = []
    for j in range(pattern.rank):
        block = pattern.block_spec(j)
        values = _draw_values(rng, block.volume, complex_valued)
        components.append(Potential(block, values - values.mean()))
    constant = _draw_values(rng, 1, complex_valued)[0]
    V = join(constant, components, pattern)
    if not complex_valued:
        V = Potential(spec, V.values.real)
    if mode is PotentialMode.SEPARABLE:
        return V

    cross = pattern.cross_indices
    if not cross:
        raise PotentialError(f"Pattern {pattern.blocks} on {spec.periods} has no cross indices to plant")
    index = cross[rng.integer(len(cross))]
    amplitude = 0.5 + 0.5 * rng.random()
    coefficient = amplitude * np.exp(2j * np.pi * rng.random())
    logger.debug(f"Planting |V̂{index}| = {amplitude:.3f} on {spec.periods}")
    return plant_cross_coefficient(V, pattern, index, coefficient)


# Potential JSON documents

def _encode_values(values: np.ndarray, real: bool) -> list:
    if real:
        return [float(v.real) for v in values]
    return [[float(v.real), float(v.imag)] for v in values]


def potential_to_document(V: Potential) -> dict:
    document = V.spec.to_dict()
    document["values"] = _encode_values(V.values, V.is_real)
    return document


def fourier_to_document(F: FourierTable) -> dict:
    document = F.spec.to_dict()
    document["coefficients"] = _encode_values(F.coefficients, False)
    return document


def _decode_number(entry) -> complex:
    if isinstance(entry, bool):
        raise PotentialError(f"Invalid value entry {entry!r}")
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, list) and len(entry) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry
    ):
        return complex(entry[0], entry[1])
    raise PotentialError(f"Invalid value entry {entry!r}: expected a number or [re, im]")


def potential_from_document(document: dict) -> Potential:
    """Validate and decode a potential document."""
    if not isinstance(document, dict):
        raise PotentialError("Potential document must be a JSON object")
    for key in ("periods", "values"):
        if key not in document:
            raise PotentialError(f"Potential document is missing '{key}'")
    spec = LatticeSpec.from_dict(document)
    values = document["values"]
    if not isinstance(values, list):
        raise PotentialError("'values' must be a list")
    decoded = [_decode_number(entry) for entry in values]
    if len(decoded) != spec.volume:
        raise PotentialError(f"Lattice {spec.periods} needs {spec.volume} values, got {len(decoded)}")
    return Potential(spec, decoded)


def load_potential(path: Union[str, Path]) -> Potential:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise PotentialError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from e
    except OSError as e:
        raise PotentialError(f"{path}: {e.strerror}") from e
    return potential_from_document(document)


def save_potential(V: Potential, path: Union[str, Path]) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(potential_to_document(V), f, indent=2)
        f.write('\n')
