"""
Floquet matrices, their Fourier-dual forms and isospectrality decisions.

Rows and columns follow the canonical flat order of the fundamental domain.
With z_j = exp(2πi k_j), a hop from n to n + h whose target leaves W picks
up z_j^{w_j}, where w_j = floor((n_j + h_j) / q_j) is the number of times
coordinate j wraps (u(n + q_j e_j) = z_j u(n)).
"""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as npoly

from .config import Config
from .errors import LatticeError, ParameterError, PotentialError
from .lattice import LatticeSpec, flatten, fundamental_domain, phase_table, reduce_mod
from .potential import FourierTable, Potential, dft

logger = logging.getLogger(__name__)

TRIANGULAR_HOPS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


class MatrixForm(str, Enum):
    QUASIMOMENTUM = "k"
    TORUS = "z"
    DUAL = "dual"


@dataclass(frozen=True, eq=False)
class FloquetMatrix:
    """Dense Q x Q matrix together with the point it was built at."""

    spec: LatticeSpec
    entries: np.ndarray
    form: MatrixForm
    point: Tuple[complex, ...]

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def hermitian_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = 1e-13) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        return self.hermitian_error() <= tol * scale


def _hypercubic_hops(dimension: int) -> Tuple[Tuple[int, ...], ...]:
    hops = []
    for j in range(dimension):
        for step in (1, -1):
            hop = [0] * dimension
            hop[j] = step
            hops.append(tuple(hop))
    return tuple(hops)


@lru_cache(maxsize=64)
def _hop_structure(spec: LatticeSpec, hops: Tuple[Tuple[int, ...], ...]):
    """Row, column and wrap exponents of every hop, in canonical order."""
    rows, cols, wraps = [], [], []
    for n in fundamental_domain(spec):
        row = flatten(spec, n)
        for hop in hops:
            target = tuple(n_j + h_j for n_j, h_j in zip(n, hop))
            rows.append(row)
            cols.append(flatten(spec, reduce_mod(spec, target)))
            wraps.append(tuple(t_j // q for t_j, q in zip(target, spec.periods)))
    return np.array(rows), np.array(cols), np.array(wraps, dtype=np.int64)


def _check_torus_point(z: Sequence[complex], dimension: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != dimension:
        raise ParameterError(f"Need {dimension} torus coordinates, got {z.shape[0]}")
    if np.any(z == 0):
        raise ParameterError(f"Torus coordinates must be non-zero, got {tuple(z)}")
    return z


def _quasimomentum_to_torus(k: Sequence[complex]) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(k, dtype=complex).reshape(-1))


def _assemble(V: Potential, z: np.ndarray, hops) -> np.ndarray:
    rows, cols, wraps = _hop_structure(V.spec, hops)
    factors = np.prod(z[None, :] ** wraps, axis=1)
    entries = np.zeros((V.spec.volume, V.spec.volume), dtype=complex)
    # hops landing on the same reduced index accumulate
    np.add.at(entries, (rows, cols), factors)
    entries[np.diag_indices(V.spec.volume)] += V.values
    return entries


def _require_kind(spec: LatticeSpec, triangular: bool, builder: str) -> None:
    if spec.is_triangular != triangular:
        expected = "triangular" if triangular else "hypercubic"
        raise LatticeError(f"{builder} needs a {expected} lattice, got {spec.kind.value}")


def build_dz(V: Potential, z: Sequence[complex]) -> FloquetMatrix:
    """𝒟_V(z) on the hypercubic lattice."""
    _require_kind(V.spec, False, "build_dz")
    z = _check_torus_point(z, V.spec.dimension)
    entries = _assemble(V, z, _hypercubic_hops(V.spec.dimension))
    return FloquetMatrix(V.spec, entries, MatrixForm.TORUS, tuple(z))


def build_dk(V: Potential, k: Sequence[complex]) -> FloquetMatrix:
    """D_V(k) on the hypercubic lattice, z_j = exp(2πi k_j)."""
    _require_kind(V.spec, False, "build_dk")
    matrix = build_dz(V, _quasimomentum_to_torus(k))
    return FloquetMatrix(V.spec, matrix.entries, MatrixForm.QUASIMOMENTUM, tuple(complex(x) for x in k))


def build_dz_tri(V: Potential, z: Sequence[complex]) -> FloquetMatrix:
    """Triangular-lattice 𝒟_{Tri,V}(z): hops (±1,0), (0,±1), (1,-1), (-1,1)."""
    _require_kind(V.spec, True, "build_dz_tri")
    z = _check_torus_point(z, 2)
    entries = _assemble(V, z, TRIANGULAR_HOPS)
    return FloquetMatrix(V.spec, entries, MatrixForm.TORUS, tuple(z))


def build_dk_tri(V: Potential, k: Sequence[complex]) -> FloquetMatrix:
    _require_kind(V.spec, True, "build_dk_tri")
    matrix = build_dz_tri(V, _quasimomentum_to_torus(k))
    return FloquetMatrix(V.spec, matrix.entries, MatrixForm.QUASIMOMENTUM, tuple(complex(x) for x in k))


def build_floquet_z(V: Potential, z: Sequence[complex]) -> FloquetMatrix:
    """𝒟_V(z) for either lattice kind."""
    return build_dz_tri(V, z) if V.spec.is_triangular else build_dz(V, z)


@lru_cache(maxsize=32)
def difference_positions(spec: LatticeSpec) -> np.ndarray:
    """P[n, n'] = flat position of n - n' reduced into W."""
    domain = fundamental_domain(spec)
    positions = np.empty((spec.volume, spec.volume), dtype=np.int64)
    for a, n in enumerate(domain):
        for b, m in enumerate(domain):
            positions[a, b] = flatten(spec, reduce_mod(spec, tuple(x - y for x, y in zip(n, m))))
    return positions


def rotated_coordinates(spec: LatticeSpec, z: np.ndarray) -> np.ndarray:
    """R[n, j] = ρ^j_{n_j} z_j."""
    phases = phase_table(spec)
    return np.array(
        [[phases[j][n_j] * z[j] for j, n_j in enumerate(n)] for n in fundamental_domain(spec)],
        dtype=complex,
    )


def dual_diagonal(spec: LatticeSpec, z: Sequence[complex]) -> np.ndarray:
    """Diagonal of A (hypercubic) or A_Tri (triangular) at z."""
    z = _check_torus_point(z, spec.dimension)
    w = rotated_coordinates(spec, z)
    diagonal = np.sum(w + 1.0 / w, axis=1)
    if spec.is_triangular:
        diagonal = diagonal + w[:, 1] / w[:, 0] + w[:, 0] / w[:, 1]
    return diagonal


def _fourier_block(F: FourierTable) -> np.ndarray:
    return F.coefficients[difference_positions(F.spec)]


def build_dual(F: FourierTable, z: Sequence[complex]) -> FloquetMatrix:
    """A + B_V with A(n;n) = Σ_j (ρ z_j + 1/(ρ z_j)) and B_V(n;n') = V̂(n - n')."""
    _require_kind(F.spec, False, "build_dual")
    z = _check_torus_point(z, F.spec.dimension)
    entries = _fourier_block(F) + np.diag(dual_diagonal(F.spec, z))
    return FloquetMatrix(F.spec, entries, MatrixForm.DUAL, tuple(z))


def build_dual_tri(F: FourierTable, z: Sequence[complex]) -> FloquetMatrix:
    """A_Tri + B_{Tri,V}; the off-diagonal block is the same Fourier block."""
    _require_kind(F.spec, True, "build_dual_tri")
    z = _check_torus_point(z, 2)
    entries = _fourier_block(F) + np.diag(dual_diagonal(F.spec, z))
    return FloquetMatrix(F.spec, entries, MatrixForm.DUAL, tuple(z))


def build_dual_any(F: FourierTable, z: Sequence[complex]) -> FloquetMatrix:
    return build_dual_tri(F, z) if F.spec.is_triangular else build_dual(F, z)


def charpoly_coeffs(M) -> np.ndarray:
    """
    Coefficients c_0..c_Q of det(M - λI) = Σ_b c_b λ^b, so c_Q = (-1)^Q.

    The matrix is reduced to upper Hessenberg form H, then
    p_k(λ) = (h_kk - λ) p_{k-1}(λ)
             + Σ_{i<k} (-1)^{k-i} h_ik (Π_{m=i+1..k} h_{m,m-1}) p_{i-1}(λ)
    gives det(H_k - λI) for the leading k x k blocks.
    """
    entries = M.entries if isinstance(M, FloquetMatrix) else M
    a = np.asarray(entries, dtype=complex)
    size = a.shape[0]
    h = a if size <= 2 else scipy.linalg.hessenberg(a)
    polys = [np.ones(1, dtype=complex)]
    for k in range(1, size + 1):
        previous = polys[-1]
        current = np.zeros(k + 1, dtype=complex)
        current[:k] += h[k - 1, k - 1] * previous
        current[1:] -= previous
        subdiagonal = 1.0 + 0j
        for i in range(k - 1, 0, -1):
            subdiagonal *= h[i, i - 1]
            sign = -1.0 if (k - i) % 2 else 1.0
            current[:i] += sign * h[i - 1, k - 1] * subdiagonal * polys[i - 1]
        polys.append(current)
    return polys[-1]


def hermitian_spectrum(V: Potential, k: Sequence[float]) -> np.ndarray:
    """Sorted real eigenvalues of D_V(k) for real V and real k."""
    k = np.asarray(k, dtype=complex)
    if not V.is_real or np.any(k.imag != 0):
        raise ParameterError("Real eigenvalue lists need a real potential and a real quasimomentum")
    builder = build_dk_tri if V.spec.is_triangular else build_dk
    matrix = builder(V, k.real)
    return scipy.linalg.eigvalsh(matrix.entries)


# Roots-of-unity grids

def degree_window(spec: LatticeSpec, tilde: bool = False) -> Tuple[int, ...]:
    """
    Laurent degree bound A_j with deg_{z_j} in [-A_j, A_j].

    z-form: Q/q_j rows carry a z_j^{+1} wrap factor (triangular: Q/q_1 + Q/q_2
    to cover the diagonal hops); tilde form: Q.
    """
    Q = spec.volume
    if tilde:
        return (Q,) * spec.dimension
    if spec.is_triangular:
        bound = Q // spec.periods[0] + Q // spec.periods[1]
        return (bound, bound)
    return tuple(Q // q for q in spec.periods)


def grid_sizes(window: Sequence[int], pad: Optional[int] = None) -> Tuple[int, ...]:
    """N_j = 2 A_j + 1 + 2 pad."""
    pad = Config.GRID_PAD if pad is None else pad
    return tuple(2 * a + 1 + 2 * pad for a in window)


def torus_grid(sizes: Sequence[int]) -> np.ndarray:
    """All points (ω_1^{m_1}, ..., ω_d^{m_d}), ω_j = exp(2πi/N_j), m_d fastest."""
    axes = [np.exp(2j * np.pi * np.arange(n) / n) for n in sizes]
    return np.array(list(itertools.product(*axes)), dtype=complex)


def sample_charpoly(
    builder: Callable[[np.ndarray], FloquetMatrix], sizes: Sequence[int]
) -> np.ndarray:
    """λ-coefficients at every grid point, shape (*sizes, Q + 1)."""
    samples = [charpoly_coeffs(builder(z)) for z in torus_grid(sizes)]
    return np.array(samples).reshape(tuple(sizes) + (-1,))


def _require_same_spec(V: Potential, Y: Potential) -> None:
    if V.spec != Y.spec:
        raise PotentialError(f"Potentials live on different lattices: {V.spec} vs {Y.spec}")


@dataclass(frozen=True)
class IsospectralityResult:
    accepted: bool
    residual: float
    scale: float
    tolerance: float
    grid_sizes: Tuple[int, ...]

    @property
    def relative_residual(self) -> float:
        return self.residual / self.scale if self.scale else self.residual


def floquet_isospectral(
    V: Potential, Y: Potential, tol: Optional[float] = None, pad: Optional[int] = None
) -> IsospectralityResult:
    """
    Decide 𝒫_V ≡ 𝒫_Y by comparing λ-coefficients on a roots-of-unity grid.

    The grid has more points per axis than the Laurent degree window, so
    agreement on the grid is polynomial identity up to rounding.
    """
    _require_same_spec(V, Y)
    tol = Config.ISOSPECTRAL_TOL if tol is None else tol
    sizes = grid_sizes(degree_window(V.spec), pad)
    residual, scale = 0.0, 0.0
    for z in torus_grid(sizes):
        cv = charpoly_coeffs(build_floquet_z(V, z))
        cy = charpoly_coeffs(build_floquet_z(Y, z))
        residual = max(residual, float(np.max(np.abs(cv - cy))))
        scale = max(scale, float(np.max(np.abs(cv))), float(np.max(np.abs(cy))))
    accepted = residual <= tol * scale
    logger.debug(
        f"Floquet isospectrality on {V.spec.periods}: residual {residual:.3e}, scale {scale:.3e}, "
        f"grid {sizes} -> {'accepted' if accepted else 'rejected'}"
    )
    return IsospectralityResult(accepted, residual, scale, tol, sizes)


def bloch_eval(V: Potential, z: Sequence[complex], lam: complex) -> complex:
    """det(𝒟_V(z) - λI)."""
    return complex(npoly.polyval(lam, charpoly_coeffs(build_floquet_z(V, z))))


def fermi_member(V: Potential, z: Sequence[complex], lam: complex, tol: Optional[float] = None) -> bool:
    """|det(𝒟_V(z) - λI)| <= tol (1 + max entry magnitude of 𝒟_V(z) - λI)^Q."""
    tol = Config.ISOSPECTRAL_TOL if tol is None else tol
    matrix = build_floquet_z(V, z)
    shifted = matrix.entries - lam * np.eye(matrix.size)
    bound = (1.0 + float(np.max(np.abs(shifted)))) ** matrix.size
    return abs(bloch_eval(V, z, lam)) <= tol * bound


@dataclass(frozen=True)
class FermiResult:
    accepted: bool
    energy: complex
    residual: float
    scale: float
    tolerance: float


def fermi_coefficients(V: Potential, lam: complex, pad: Optional[int] = None) -> np.ndarray:
    """z-Laurent coefficient tensor of det(𝒟_V(z) - λ I) at fixed λ (FFT index order)."""
    sizes = grid_sizes(degree_window(V.spec), pad)
    values = np.array(
        [npoly.polyval(lam, charpoly_coeffs(build_floquet_z(V, z))) for z in torus_grid(sizes)]
    ).reshape(sizes)
    return np.fft.fftn(values) / values.size


def fermi_isospectral_at(
    V: Potential, Y: Potential, lam: complex, tol: Optional[float] = None, pad: Optional[int] = None
) -> FermiResult:
    """Compare the z-coefficients of the two Fermi polynomials at λ0."""
    _require_same_spec(V, Y)
    tol = Config.ISOSPECTRAL_TOL if tol is None else tol
    cv = fermi_coefficients(V, lam, pad)
    cy = fermi_coefficients(Y, lam, pad)
    residual = float(np.max(np.abs(cv - cy)))
    scale = max(float(np.max(np.abs(cv))), float(np.max(np.abs(cy))))
    return FermiResult(residual <= tol * scale, complex(lam), residual, scale, tol)


def dual_equivalence_residual(V: Potential, z: Sequence[complex]) -> float:
    """
    Relative distance between the λ-coefficients of 𝒟_V(z^q) and A + B_V at z.

    The two matrices are unitarily equivalent, so this is rounding only.
    """
    z = _check_torus_point(z, V.spec.dimension)
    direct = charpoly_coeffs(build_floquet_z(V, z ** np.array(V.spec.periods)))
    dual = charpoly_coeffs(build_dual_any(dft(V), z))
    scale = max(1.0, float(np.max(np.abs(direct))))
    return float(np.max(np.abs(direct - dual))) / scale
