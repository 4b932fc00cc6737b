"""Sparse multivariate Laurent polynomials in z_1..z_d and one scalar variable."""
from types import MappingProxyType
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import PolynomialError

Key = Tuple[int, ...]
SCALAR_NAMES = ("lambda", "y")


class LaurentPoly:
    """
    Coefficients keyed by (a_1, ..., a_d, b): the monomial z^a s^b, with s the
    scalar variable (``lambda`` or ``y``).

    Declared windows bound the keys: a_j in [-A_j, A_j] and b in [0, B].
    """

    def __init__(
        self,
        nvars: int,
        coeffs: Mapping[Key, complex],
        windows: Sequence[int],
        scalar_window: int,
        scalar_name: str = "lambda",
    ):
        if scalar_name not in SCALAR_NAMES:
            raise PolynomialError(f"Scalar variable must be one of {SCALAR_NAMES}, got '{scalar_name}'")
        windows = tuple(int(w) for w in windows)
        if len(windows) != nvars:
            raise PolynomialError(f"Need {nvars} degree windows, got {len(windows)}")
        clean: Dict[Key, complex] = {}
        for key, value in coeffs.items():
            key = tuple(int(k) for k in key)
            if len(key) != nvars + 1:
                raise PolynomialError(f"Key {key} does not match {nvars} variables plus a scalar")
            if any(abs(a) > w for a, w in zip(key[:-1], windows)) or not 0 <= key[-1] <= scalar_window:
                raise PolynomialError(f"Key {key} lies outside windows {windows} x [0, {scalar_window}]")
            if value != 0:
                clean[key] = complex(value)
        self.nvars = nvars
        self.windows = windows
        self.scalar_window = int(scalar_window)
        self.scalar_name = scalar_name
        self._coeffs = clean

    @property
    def coeffs(self) -> Mapping[Key, complex]:
        return MappingProxyType(self._coeffs)

    def __repr__(self) -> str:
        return f"LaurentPoly(nvars={self.nvars}, terms={len(self._coeffs)}, scalar={self.scalar_name})"

    def __len__(self) -> int:
        return len(self._coeffs)

    def __getitem__(self, key: Key) -> complex:
        return self._coeffs.get(tuple(key), 0j)

    # Construction helpers

    @classmethod
    def zero(cls, nvars: int, scalar_name: str = "lambda") -> 'LaurentPoly':
        return cls(nvars, {}, (0,) * nvars, 0, scalar_name)

    @classmethod
    def constant(cls, value: complex, nvars: int, scalar_name: str = "lambda") -> 'LaurentPoly':
        return cls(nvars, {(0,) * (nvars + 1): value}, (0,) * nvars, 0, scalar_name)

    @classmethod
    def from_terms(
        cls, nvars: int, terms: Iterable[Tuple[Key, complex]], scalar_name: str = "lambda"
    ) -> 'LaurentPoly':
        """Polynomial with windows fitted to the given terms (repeated keys add up)."""
        coeffs: Dict[Key, complex] = {}
        for key, value in terms:
            key = tuple(int(k) for k in key)
            coeffs[key] = coeffs.get(key, 0j) + value
        windows = [0] * nvars
        scalar_window = 0
        for key in coeffs:
            for j in range(nvars):
                windows[j] = max(windows[j], abs(key[j]))
            scalar_window = max(scalar_window, key[-1])
        return cls(nvars, coeffs, windows, scalar_window, scalar_name)

    def _like(self, coeffs: Mapping[Key, complex], windows=None, scalar_window=None) -> 'LaurentPoly':
        return LaurentPoly(
            self.nvars,
            coeffs,
            self.windows if windows is None else windows,
            self.scalar_window if scalar_window is None else scalar_window,
            self.scalar_name,
        )

    def _check_compatible(self, other: 'LaurentPoly') -> None:
        if other.nvars != self.nvars or other.scalar_name != self.scalar_name:
            raise PolynomialError(f"Incompatible polynomials: {self!r} and {other!r}")

    # Ring operations

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            return self + LaurentPoly.constant(other, self.nvars, self.scalar_name)
        self._check_compatible(other)
        coeffs = dict(self._coeffs)
        for key, value in other._coeffs.items():
            coeffs[key] = coeffs.get(key, 0j) + value
        windows = tuple(max(a, b) for a, b in zip(self.windows, other.windows))
        return self._like(coeffs, windows, max(self.scalar_window, other.scalar_window))

    __radd__ = __add__

    def __neg__(self) -> 'LaurentPoly':
        return self._like({key: -value for key, value in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return self._like({key: value * other for key, value in self._coeffs.items()})
        self._check_compatible(other)
        coeffs: Dict[Key, complex] = {}
        for k1, v1 in self._coeffs.items():
            for k2, v2 in other._coeffs.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                coeffs[key] = coeffs.get(key, 0j) + v1 * v2
        windows = tuple(a + b for a, b in zip(self.windows, other.windows))
        return self._like(coeffs, windows, self.scalar_window + other.scalar_window)

    __rmul__ = __mul__

    # Queries

    def max_abs(self) -> float:
        return max((abs(v) for v in self._coeffs.values()), default=0.0)

    def distance(self, other: 'LaurentPoly') -> float:
        """Largest coefficient difference over the union of keys."""
        self._check_compatible(other)
        keys = set(self._coeffs) | set(other._coeffs)
        return max((abs(self[key] - other[key]) for key in keys), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def evaluate(self, z: Sequence[complex], scalar: complex) -> complex:
        z = np.asarray(z, dtype=complex)
        total = 0j
        for key, value in self._coeffs.items():
            total += value * np.prod(z ** np.array(key[:-1])) * scalar ** key[-1]
        return complex(total)

    # Transformations

    def filter(self, keep: Callable[[Key], bool]) -> 'LaurentPoly':
        return self._like({key: value for key, value in self._coeffs.items() if keep(key)})

    def chop(self, tol: float) -> 'LaurentPoly':
        """Drop coefficients with magnitude <= tol."""
        return self.filter(lambda key: abs(self._coeffs[key]) > tol)

    def filter_degree(
        self, m: int, axes: Optional[Sequence[int]] = None, include_scalar: bool = True
    ) -> 'LaurentPoly':
        """
        Keep monomials whose degree is exactly m.

        The degree sums a_j over ``axes`` (default: all z variables), plus b
        when ``include_scalar``. Negative exponents count negatively.
        """
        axes = range(self.nvars) if axes is None else tuple(axes)

        def degree(key: Key) -> int:
            return sum(key[j] for j in axes) + (key[-1] if include_scalar else 0)

        return self.filter(lambda key: degree(key) == m)

    def with_scalar(self, scalar_name: str) -> 'LaurentPoly':
        return LaurentPoly(self.nvars, self._coeffs, self.windows, self.scalar_window, scalar_name)

    def substitute_powers(self, multipliers: Sequence[int]) -> 'LaurentPoly':
        """z_j -> z_j^{m_j}: exponent a_j becomes m_j a_j."""
        coeffs = {
            tuple(a * m for a, m in zip(key[:-1], multipliers)) + (key[-1],): value
            for key, value in self._coeffs.items()
        }
        windows = tuple(w * m for w, m in zip(self.windows, multipliers))
        return self._like(coeffs, windows)

    # Text dump: "a1 ... ad b re im" per line, sorted by key

    def to_lines(self) -> list:
        lines = []
        for key in sorted(self._coeffs):
            value = self._coeffs[key]
            exponents = ' '.join(str(k) for k in key)
            lines.append(f"{exponents} {format(value.real, '.17g')} {format(value.imag, '.17g')}")
        return lines

    def dump(self) -> str:
        return ''.join(line + '\n' for line in self.to_lines())

    @classmethod
    def parse(
        cls, text: str, nvars: Optional[int] = None, scalar_name: str = "lambda"
    ) -> 'LaurentPoly':
        terms = []
        for number, line in enumerate(text.splitlines(), start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) < 4:
                raise PolynomialError(f"Line {number}: expected 'a1 ... ad b re im', got '{line}'")
            if nvars is None:
                nvars = len(fields) - 3
            if len(fields) != nvars + 3:
                raise PolynomialError(f"Line {number}: expected {nvars + 3} fields, got {len(fields)}")
            try:
                key = tuple(int(x) for x in fields[:-2])
                value = complex(float(fields[-2]), float(fields[-1]))
            except ValueError as e:
                raise PolynomialError(f"Line {number}: {e}") from e
            terms.append((key, value))
        if nvars is None:
            raise PolynomialError("Cannot infer the number of variables of an empty dump")
        return cls.from_terms(nvars, terms, scalar_name)
