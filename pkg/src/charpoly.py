"""
Laurent characteristic polynomials, their degree layers and spectral invariants.

Coefficients are recovered exactly (up to rounding) by sampling λ-coefficients
on tensor grids of roots of unity and transforming along the z axes. Grids
have a margin of Config.GRID_PAD bins beyond the degree window on each side;
whatever lands there is a residual that must stay at rounding level.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import Config
from .errors import LatticeError, PolynomialError, PotentialError
from .floquet import (
    FloquetMatrix,
    MatrixForm,
    build_dual,
    build_dual_any,
    build_floquet_z,
    charpoly_coeffs,
    degree_window,
    difference_positions,
    grid_sizes,
    rotated_coordinates,
    sample_charpoly,
)
from .lattice import LatticeSpec, MultiIndex, fundamental_domain, phase_table
from .laurent import LaurentPoly
from .potential import FourierTable, Potential, SeparabilityPattern, dft, join, mean, split
from .rng import Xorshift64Star

logger = logging.getLogger(__name__)


def _recover(
    builder: Callable[[np.ndarray], FloquetMatrix],
    spec: LatticeSpec,
    window: Sequence[int],
    pad: Optional[int] = None,
    scalar_name: str = "lambda",
) -> LaurentPoly:
    sizes = grid_sizes(window, pad)
    samples = sample_charpoly(builder, sizes)
    axes = tuple(range(spec.dimension))
    # after fftshift, position p on an axis of odd length N holds exponent p - N // 2
    coeffs = np.fft.fftshift(np.fft.fftn(samples, axes=axes), axes=axes) / math.prod(sizes)
    exponents = [np.arange(n) - n // 2 for n in sizes]

    inside = np.ones(sizes, dtype=bool)
    for j, (e, bound) in enumerate(zip(exponents, window)):
        shape = [1] * spec.dimension
        shape[j] = sizes[j]
        inside = inside & (np.abs(e) <= bound).reshape(shape)

    magnitudes = np.abs(coeffs)
    scale = float(magnitudes.max())
    residual = float(magnitudes[~inside].max()) if (~inside).any() else 0.0
    if residual > Config.INTERP_TOL * scale:
        raise PolynomialError(
            f"Out-of-window residual {residual:.3e} exceeds {Config.INTERP_TOL:.1e} x scale {scale:.3e} "
            f"on {spec.periods}, window {tuple(window)}"
        )
    logger.debug(f"Recovered polynomial on {spec.periods}: grid {sizes}, residual {residual:.3e}")

    keep = inside[..., None] & (magnitudes > Config.CHOP_TOL * scale)
    terms = {}
    for position in zip(*np.nonzero(keep)):
        key = tuple(int(exponents[j][position[j]]) for j in axes) + (int(position[-1]),)
        terms[key] = complex(coeffs[position])
    return LaurentPoly(spec.dimension, terms, window, spec.volume, scalar_name)


def recover_P(V: Potential, pad: Optional[int] = None) -> LaurentPoly:
    """𝒫_V(z, λ) = det(𝒟_V(z) - λI) on the hypercubic lattice."""
    if V.spec.is_triangular:
        raise LatticeError("recover_P needs a hypercubic lattice; use recover_P_tri")
    return _recover(lambda z: build_floquet_z(V, z), V.spec, degree_window(V.spec), pad)


def recover_P_tri(V: Potential, pad: Optional[int] = None) -> LaurentPoly:
    if not V.spec.is_triangular:
        raise LatticeError("recover_P_tri needs a triangular lattice; use recover_P")
    return _recover(lambda z: build_floquet_z(V, z), V.spec, degree_window(V.spec), pad)


def recover_Ptilde(
    V: Potential, method: str = "substitute", cross_check: bool = False, pad: Optional[int] = None
) -> LaurentPoly:
    """
    𝒫̃_V(z, λ) = 𝒫_V(z_1^{q_1}, ..., z_d^{q_d}, λ) = det(A + B_V - λI).

    ``method`` is "substitute" (exponents of 𝒫_V scaled by q_j) or "dual"
    (direct recovery from the dual matrix on a grid of 2Q + 1 + 2 pad points
    per axis). With ``cross_check`` both are computed and must agree.
    """
    if method not in ("substitute", "dual"):
        raise PolynomialError(f"Unknown recovery method '{method}'")

    def substituted() -> LaurentPoly:
        P = recover_P_tri(V, pad) if V.spec.is_triangular else recover_P(V, pad)
        return P.substitute_powers(V.spec.periods)

    def direct() -> LaurentPoly:
        table = dft(V)
        return _recover(
            lambda z: build_dual_any(table, z), V.spec, degree_window(V.spec, tilde=True), pad
        )

    result = substituted() if method == "substitute" else direct()
    if cross_check:
        other = direct() if method == "substitute" else substituted()
        scale = max(result.max_abs(), other.max_abs())
        gap = result.distance(other)
        if gap > Config.INTERP_TOL * scale:
            raise PolynomialError(f"Substitution and dual recovery disagree by {gap:.3e} (scale {scale:.3e})")
        logger.debug(f"Recovery cross-check on {V.spec.periods}: gap {gap:.3e}")
    return result


def evaluation_residual(
    P: LaurentPoly, V: Potential, tilde: bool = False, samples: int = 20, seed: Optional[int] = None
) -> float:
    """
    Largest relative gap between P and the direct determinant at random points.

    z_j has modulus in [0.8, 1.25) and random argument; λ is drawn from
    [-3, 3] + i[-3, 3]. Gaps are relative to the sum of term magnitudes.
    """
    rng = Xorshift64Star(Config.FLOQUET_SEED if seed is None else seed)
    table = dft(V) if tilde else None
    worst = 0.0
    for _ in range(samples):
        z = rng.unit_complex(V.spec.dimension) * rng.uniform(0.8, 1.25, V.spec.dimension)
        lam = complex(rng.uniform(-3.0, 3.0, 1)[0], rng.uniform(-3.0, 3.0, 1)[0])
        matrix = build_dual_any(table, z) if tilde else build_floquet_z(V, z)
        direct = npoly.polyval(lam, charpoly_coeffs(matrix))
        scale = sum(
            abs(value) * abs(np.prod(z ** np.array(key[:-1]))) * abs(lam) ** key[-1]
            for key, value in P.coeffs.items()
        )
        worst = max(worst, abs(P.evaluate(z, lam) - direct) / max(1.0, scale))
    return worst


def total_degree_filter(P: LaurentPoly, m: int) -> LaurentPoly:
    """Monomials z^a λ^b with a_1 + ... + a_d + b = m."""
    return P.filter_degree(m)


# Linear factors of the top layers

def _linear_top(spec: LatticeSpec, n: MultiIndex) -> LaurentPoly:
    """-λ + Σ_j ρ^j_{n_j} z_j."""
    phases = phase_table(spec)
    d = spec.dimension
    terms = [((0,) * d + (1,), -1.0)]
    for j, n_j in enumerate(n):
        key = [0] * (d + 1)
        key[j] = 1
        terms.append((tuple(key), phases[j][n_j]))
    return LaurentPoly.from_terms(d, terms)


def _degree_zero_hopping(spec: LatticeSpec, n: MultiIndex) -> LaurentPoly:
    """Part of A(n; n) with z-degree 0: zero, or w_2/w_1 + w_1/w_2 on the triangular lattice."""
    if not spec.is_triangular:
        return LaurentPoly.zero(spec.dimension)
    phases = phase_table(spec)
    rho1, rho2 = phases[0][n[0]], phases[1][n[1]]
    return LaurentPoly.from_terms(2, [((-1, 1, 0), rho2 / rho1), ((1, -1, 0), rho1 / rho2)])


def _diagonal_factor(spec: LatticeSpec, n: MultiIndex, constant: complex) -> LaurentPoly:
    """t_n(z, constant - λ) = A(n; n) + constant - λ."""
    phases = phase_table(spec)
    d = spec.dimension
    terms = [((0,) * d + (1,), -1.0), ((0,) * (d + 1), constant)]
    for j, n_j in enumerate(n):
        for sign in (1, -1):
            key = [0] * (d + 1)
            key[j] = sign
            terms.append((tuple(key), phases[j][n_j] ** sign))
    return LaurentPoly.from_terms(d, terms) + _degree_zero_hopping(spec, n)


def _product(factors: Sequence[LaurentPoly], nvars: int) -> LaurentPoly:
    result = LaurentPoly.constant(1.0, nvars)
    for factor in factors:
        result = result * factor
    return result


def h_poly(spec: LatticeSpec) -> LaurentPoly:
    """h(z, λ) = Π_{n in W} (-λ + Σ_j ρ^j_{n_j} z_j); homogeneous of degree Q."""
    return _product([_linear_top(spec, n) for n in fundamental_domain(spec)], spec.dimension)


def _scale(P: LaurentPoly) -> float:
    return max(1.0, P.max_abs())


def h1_rhs(V: Potential) -> LaurentPoly:
    """Σ_n ([V] + degree-0 hopping of row n) Π_{m != n} (-λ + Σ_j ρ^j_{m_j} z_j)."""
    spec = V.spec
    domain = fundamental_domain(spec)
    tops = [_linear_top(spec, n) for n in domain]
    average = mean(V)
    total = LaurentPoly.zero(spec.dimension)
    for i, n in enumerate(domain):
        others = _product(tops[:i] + tops[i + 1:], spec.dimension)
        total = total + (_degree_zero_hopping(spec, n) + average) * others
    return total


def check_h1(V: Potential, pad: Optional[int] = None) -> float:
    """Relative gap between the degree Q - 1 layer of 𝒫̃_V and its closed form."""
    Pt = recover_Ptilde(V, pad=pad)
    h1 = total_degree_filter(Pt, V.spec.volume - 1)
    return h1.distance(h1_rhs(V)) / _scale(Pt)


def h2_difference(V: Potential, pad: Optional[int] = None) -> LaurentPoly:
    """h²_V - h̄²_V, both read off at total degree Q - 2."""
    spec = V.spec
    Q = spec.volume
    Pt = recover_Ptilde(V, pad=pad)
    average = mean(V)
    diagonal = _product([_diagonal_factor(spec, n, average) for n in fundamental_domain(spec)], spec.dimension)
    return total_degree_filter(Pt, Q - 2) - total_degree_filter(diagonal, Q - 2)


def h2_rhs(V: Potential) -> LaurentPoly:
    """-(1/2) Σ_{n != n'} |V̂(n - n')|² Π_{m not in {n, n'}} (-λ + Σ_j ρ^j_{m_j} z_j)."""
    spec = V.spec
    domain = fundamental_domain(spec)
    tops = [_linear_top(spec, n) for n in domain]
    weights = np.abs(dft(V).coefficients[difference_positions(spec)]) ** 2
    total = LaurentPoly.zero(spec.dimension)
    for a in range(len(domain)):
        for b in range(a + 1, len(domain)):
            # the ordered pairs (a, b) and (b, a) carry the same weight for real V
            weight = weights[a, b]
            if weight == 0:
                continue
            rest = [tops[m] for m in range(len(domain)) if m not in (a, b)]
            total = total + _product(rest, spec.dimension) * (-weight)
    return total


def check_h2_diff(V: Potential, pad: Optional[int] = None) -> float:
    if not V.is_real:
        raise PotentialError("check_h2_diff is defined for real-valued potentials")
    difference = h2_difference(V, pad)
    scale = _scale(recover_Ptilde(V, pad=pad))
    return difference.distance(h2_rhs(V)) / scale


def _pair_weights(V: Potential) -> np.ndarray:
    """W[n, n'] = |V̂(n - n')|²."""
    return np.abs(dft(V).coefficients[difference_positions(V.spec)]) ** 2


def check_g55(V: Potential, Y: Potential, samples: int = 100, seed: Optional[int] = None) -> float:
    """
    Max over samples of |Σ_{n,n'} (|V̂(n-n')|² - |Ŷ(n-n')|²) / (s_n s_n')|,
    s_n = -λ + Σ_j ρ^j_{n_j} z_j.

    z is drawn on the unit torus and λ = μ + (d + 1)i with μ uniform in
    [-2d - M, 2d + M], M the larger sup norm; every s_n then has imaginary
    part of magnitude at least 1. A plain offset of +i is not enough:
    Σ_j ρ^j_{n_j} z_j has imaginary part up to d in magnitude and can cancel it.
    """
    if V.spec != Y.spec:
        raise PotentialError(f"Potentials live on different lattices: {V.spec} vs {Y.spec}")
    if not (V.is_real and Y.is_real):
        raise PotentialError("check_g55 is defined for real-valued potentials")
    spec = V.spec
    d = spec.dimension
    rng = Xorshift64Star(Config.FLOQUET_SEED if seed is None else seed)
    bound = 2 * d + max(V.sup_norm(), Y.sup_norm())
    difference = _pair_weights(V) - _pair_weights(Y)
    worst = 0.0
    for _ in range(samples):
        z = rng.unit_complex(d)
        lam = rng.uniform(-bound, bound, 1)[0] + (d + 1) * 1j
        s = -lam + rotated_coordinates(spec, z).sum(axis=1)
        worst = max(worst, float(abs(np.sum(difference / np.outer(s, s)))))
    return worst


@dataclass(frozen=True)
class PowerSums:
    """Σ_{l in W} |V̂(l)|² and, per block j, Σ_{l in W_j} |V̂(l^{j¬})|²."""

    total: float
    blocks: Tuple[float, ...] = ()


def block_power_sums(F: FourierTable, pattern: Optional[SeparabilityPattern] = None) -> PowerSums:
    total = float(np.sum(np.abs(F.coefficients) ** 2))
    if pattern is None:
        return PowerSums(total)
    if pattern.spec.periods != F.spec.periods:
        raise PotentialError(f"Pattern for {pattern.spec.periods} used on lattice {F.spec.periods}")
    blocks = []
    for j in range(pattern.rank):
        indices = [pattern.embed(j, l) for l in fundamental_domain(pattern.block_spec(j))]
        blocks.append(float(sum(abs(F.at(l)) ** 2 for l in indices)))
    return PowerSums(total, tuple(blocks))


@dataclass(frozen=True)
class InvariantReport:
    """
    Spectral invariants of a pair (V, Y).

    Residuals are non-negative: ``mean``, ``total`` and ``blocks`` relative to
    max(1, magnitude); ``g55`` is the absolute residual of check_g55 and is
    only present when it was evaluated.
    """

    means: Tuple[complex, complex]
    totals: Tuple[float, float]
    blocks: Tuple[Tuple[float, ...], Tuple[float, ...]]
    residuals: Dict[str, float] = field(default_factory=dict)

    def agrees(self, tol: float) -> bool:
        return all(value <= tol for key, value in self.residuals.items() if key != "g55")

    def to_dict(self) -> dict:
        return {
            "means": [[m.real, m.imag] for m in self.means],
            "totals": list(self.totals),
            "blocks": [list(b) for b in self.blocks],
            "residuals": dict(self.residuals),
        }


def _relative_gap(a, b) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def invariant_report(
    V: Potential,
    Y: Potential,
    pattern: Optional[SeparabilityPattern] = None,
    g55_samples: int = 0,
    seed: Optional[int] = None,
) -> InvariantReport:
    if V.spec != Y.spec:
        raise PotentialError(f"Potentials live on different lattices: {V.spec} vs {Y.spec}")
    sums_v = block_power_sums(dft(V), pattern)
    sums_y = block_power_sums(dft(Y), pattern)
    means = (mean(V), mean(Y))
    residuals = {
        "mean": _relative_gap(*means),
        "total": _relative_gap(sums_v.total, sums_y.total),
        "blocks": max((_relative_gap(a, b) for a, b in zip(sums_v.blocks, sums_y.blocks)), default=0.0),
    }
    if g55_samples > 0:
        residuals["g55"] = check_g55(V, Y, g55_samples, seed)
    return InvariantReport(means, (sums_v.total, sums_y.total), (sums_v.blocks, sums_y.blocks), residuals)


def top_layer_residual(V: Potential, pad: Optional[int] = None) -> float:
    """
    Relative size of the violation of the degree structure of 𝒫̃_V: nothing
    above total degree Q, and the degree-Q layer equal to h_poly.
    """
    Q = V.spec.volume
    Pt = recover_Ptilde(V, pad=pad)
    above = Pt.filter(lambda key: sum(key) > Q).max_abs()
    top = total_degree_filter(Pt, Q)
    return max(above, top.distance(h_poly(V.spec))) / _scale(Pt)


# Component extraction

def extraction_prefactor(spec: LatticeSpec, keep_axes: Sequence[int]) -> LaurentPoly:
    """
    Π over n in W whose coordinates outside ``keep_axes`` are not all zero of
    Σ_{j not in keep_axes} (ρ^j_{n_j} - 1) z_j. Scalar variable y.
    """
    keep_axes = set(keep_axes)
    other = [j for j in range(spec.dimension) if j not in keep_axes]
    phases = phase_table(spec)
    d = spec.dimension
    factors = []
    for n in fundamental_domain(spec):
        if not any(n[j] for j in other):
            continue
        terms = []
        for j in other:
            key = [0] * (d + 1)
            key[j] = 1
            terms.append((tuple(key), phases[j][n[j]] - 1.0))
        factors.append(LaurentPoly.from_terms(d, terms))
    return _product(factors, d).with_scalar("y")


def extract_component_charpoly(
    V: Potential,
    pattern: SeparabilityPattern,
    keep: int = 1,
    tol: Optional[float] = None,
    pad: Optional[int] = None,
) -> LaurentPoly:
    """
    Characteristic polynomial of the zero-mean block-``keep`` component of a
    separable V, in (block z variables, y), read off the joint determinant.

    With λ = y + Σ_{j outside the block} (z_j + 1/z_j), the determinant's top
    degree Q - |W_keep| in the outside variables factors as a fixed product of
    linear forms times 𝒫̃ of the component. Blocks are numbered from 0; every
    block other than ``keep`` is treated as one merged block.
    """
    spec = V.spec
    if spec.is_triangular:
        raise LatticeError("Component extraction needs a hypercubic lattice")
    if not 0 <= keep < pattern.rank:
        raise PotentialError(f"Block index {keep} outside 0..{pattern.rank - 1}")
    tol = Config.EXTRACT_TOL if tol is None else tol

    _, components = split(V, pattern)
    table = dft(join(0.0, components, pattern))
    keep_axes = pattern.block_axes(keep)
    other = [j for j in range(spec.dimension) if j not in keep_axes]
    block_volume = pattern.block_spec(keep).volume

    def shifted_dual(z: np.ndarray) -> FloquetMatrix:
        matrix = build_dual(table, z)
        shift = sum(z[j] + 1.0 / z[j] for j in other)
        return FloquetMatrix(spec, matrix.entries - shift * np.eye(matrix.size), MatrixForm.DUAL, tuple(z))

    determinant = _recover(shifted_dual, spec, degree_window(spec, tilde=True), pad, scalar_name="y")
    top = determinant.filter_degree(spec.volume - block_volume, axes=other, include_scalar=False)
    prefactor = {
        tuple(key[j] for j in other): value
        for key, value in extraction_prefactor(spec, keep_axes).coeffs.items()
    }
    norm = sum(abs(p) ** 2 for p in prefactor.values())

    # group top-layer coefficients by their (kept exponents, b) part
    columns: Dict[Tuple[int, ...], Dict[Tuple[int, ...], complex]] = {}
    for key, value in top.coeffs.items():
        rest = tuple(key[j] for j in keep_axes) + (key[-1],)
        columns.setdefault(rest, {})[tuple(key[j] for j in other)] = value

    quotient = {}
    residual = 0.0
    for rest, column in columns.items():
        g = sum(np.conj(p) * column.get(alpha, 0j) for alpha, p in prefactor.items()) / norm
        quotient[rest] = complex(g)
        for alpha in set(prefactor) | set(column):
            residual = max(residual, abs(column.get(alpha, 0j) - prefactor.get(alpha, 0j) * g))

    scale = _scale(top)
    if residual > tol * scale:
        raise PolynomialError(
            f"Top layer is not the prefactor times a polynomial in block {keep}: "
            f"residual {residual:.3e}, scale {scale:.3e}"
        )
    logger.debug(f"Extracted block {keep} of {pattern.blocks} on {spec.periods}: residual {residual:.3e}")
    result = LaurentPoly(len(keep_axes), quotient, (spec.volume,) * len(keep_axes), spec.volume, "y")
    return result.chop(Config.CHOP_TOL * scale)


def component_charpolys(V: Potential, pattern: SeparabilityPattern) -> List[LaurentPoly]:
    """𝒫̃ of every zero-mean component of a separable V, recovered on its block lattice."""
    _, components = split(V, pattern)
    return [recover_Ptilde(component) for component in components]
