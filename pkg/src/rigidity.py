"""Rigidity experiment suites over generated Floquet-isospectral pairs."""
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .charpoly import component_charpolys, extract_component_charpoly, invariant_report
from .config import Config
from .errors import FloquetError, IsospectralityError, PotentialError
from .floquet import IsospectralityResult, dual_equivalence_residual, floquet_isospectral
from .lattice import LatticeSpec, flatten, reduce_mod
from .potential import (
    FourierTable,
    Potential,
    PotentialMode,
    SeparabilityPattern,
    cross_power_sum,
    dft,
    idft,
    is_separable,
    join,
    plant_cross_coefficient,
    random_potential,
    reflect,
    split,
    translate,
)
from .rng import Xorshift64Star, split_seed

logger = logging.getLogger(__name__)

# Bound on Σ_{l in S} |V̂(l)|² relative to scale² for a separable V
CROSS_SUM_TOL = 1e-18


@dataclass
class CheckResult:
    """One sub-check: passes iff ``residual <= tolerance`` unless decided otherwise."""

    name: str
    passed: bool
    residual: float = 0.0
    tolerance: float = 0.0
    detail: str = ""

    @classmethod
    def bounded(cls, name: str, residual: float, tolerance: float, detail: str = "") -> 'CheckResult':
        return cls(name, bool(residual <= tolerance), float(residual), float(tolerance), detail)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass
class TrialRecord:
    index: int
    seed: int
    checks: List[CheckResult] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
            "data": self.data,
            "error": self.error,
        }


@dataclass
class RigidityReport:
    """
    Result of one experiment suite.

    The verdict passes iff every suite-level check, every trial and every
    nested suite passes.
    """

    name: str
    spec: LatticeSpec
    pattern: Optional[SeparabilityPattern]
    generator: str
    seed: int
    checks: List[CheckResult] = field(default_factory=list)
    trials: List[TrialRecord] = field(default_factory=list)
    suites: List['RigidityReport'] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return (
            all(check.passed for check in self.checks)
            and all(trial.passed for trial in self.trials)
            and all(suite.verdict for suite in self.suites)
        )

    @property
    def failed_trials(self) -> List[TrialRecord]:
        return [trial for trial in self.trials if not trial.passed]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "spec": self.spec.to_dict(),
            "pattern": list(self.pattern.blocks) if self.pattern else None,
            "generator": self.generator,
            "seed": self.seed,
            "verdict": "pass" if self.verdict else "fail",
            "checks": [check.to_dict() for check in self.checks],
            "trials": [trial.to_dict() for trial in self.trials],
            "suites": [suite.to_dict() for suite in self.suites],
            "data": self.data,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + '\n'

    def summary_text(self) -> str:
        pattern = f" pattern {self.pattern.blocks}" if self.pattern else ""
        passed = sum(1 for trial in self.trials if trial.passed)
        lines = [
            f"{self.name} on {self.spec.periods} ({self.spec.kind.value}){pattern}, seed {self.seed}: "
            f"{'PASS' if self.verdict else 'FAIL'} ({passed}/{len(self.trials)} trials)"
        ]
        for check in self.checks:
            status = "ok" if check.passed else "FAILED"
            lines.append(f"  [{status}] {check.name}: {check.detail or format(check.residual, '.3e')}")
        for trial in self.failed_trials:
            reason = trial.error or ', '.join(c.name for c in trial.checks if not c.passed)
            lines.append(f"  trial {trial.index} (seed {trial.seed}) failed: {reason}")
        for suite in self.suites:
            lines.extend("  " + line for line in suite.summary_text().splitlines())
        return '\n'.join(lines) + '\n'


def _isospectral_check(result: IsospectralityResult) -> CheckResult:
    return CheckResult(
        "isospectral",
        result.accepted,
        result.relative_residual,
        result.tolerance,
        f"grid {result.grid_sizes}",
    )


# Pair generation

@dataclass(frozen=True)
class IsospectralPair:
    V: Potential
    Y: Potential
    mode: str
    moves: Tuple[str, ...]
    result: IsospectralityResult


def generate_pair(
    spec: LatticeSpec,
    pattern: Optional[SeparabilityPattern],
    seed: int,
    mode: str = "a",
    complex_valued: bool = False,
    translation: Optional[Sequence[int]] = None,
    tol: Optional[float] = None,
) -> IsospectralPair:
    """
    Draw V and build a Floquet-isospectral Y.

    Mode "a" translates V globally (by ``translation`` when given). Mode "b"
    needs a pattern: V is drawn separable and every block component is
    translated independently; real components on the hypercubic lattice are
    also reflected with probability 1/2. The pair is always passed through
    floquet_isospectral.

    Raises:
        IsospectralityError: the generated pair was rejected.
    """
    if mode not in ("a", "b"):
        raise PotentialError(f"Unknown pair mode '{mode}'")
    rng = Xorshift64Star(seed)
    draw_seed = split_seed(seed, 0)
    if pattern is not None:
        V = random_potential(spec, draw_seed, PotentialMode.SEPARABLE, pattern, complex_valued)
    else:
        V = random_potential(spec, draw_seed, PotentialMode.COMPLEX if complex_valued else PotentialMode.REAL)

    moves = []
    if mode == "a":
        t = tuple(translation) if translation is not None else rng.index(spec.periods)
        Y = translate(V, t)
        moves.append(f"translate{t}")
    else:
        if pattern is None:
            raise PotentialError("Mode 'b' needs a separability pattern")
        constant, components = split(V, pattern)
        moved = []
        for j, component in enumerate(components):
            t = rng.index(component.spec.periods)
            component = translate(component, t)
            moves.append(f"block{j}:translate{t}")
            if V.is_real and not spec.is_triangular and rng.random() < 0.5:
                component = reflect(component)
                moves.append(f"block{j}:reflect")
            moved.append(component)
        Y = join(constant, moved, pattern)
        if V.is_real:
            Y = Potential(spec, Y.values.real)

    result = floquet_isospectral(V, Y, tol)
    if not result.accepted:
        raise IsospectralityError(
            f"Generated pair ({', '.join(moves)}) on {spec.periods} is not isospectral: "
            f"relative residual {result.relative_residual:.3e}"
        )
    return IsospectralPair(V, Y, mode, tuple(moves), result)


def isospectral_pair(
    spec: LatticeSpec,
    pattern: Optional[SeparabilityPattern],
    seed: int,
    mode: str = "a",
    complex_valued: bool = False,
) -> Tuple[Potential, Potential]:
    pair = generate_pair(spec, pattern, seed, mode, complex_valued)
    return pair.V, pair.Y


def _suite_settings(suite: str, trials: Optional[int], seed: Optional[int], tol: Optional[float]):
    defaults = Config.suite_defaults(suite)
    return (
        int(defaults["trials"]) if trials is None else trials,
        Config.FLOQUET_SEED if seed is None else seed,
        float(defaults["tolerance"]) if tol is None else tol,
    )


def _run_trials(
    report: RigidityReport, trials: int, body: Callable[[TrialRecord], None]
) -> RigidityReport:
    """Run ``body`` on fresh trial records; an exception fails that trial only."""
    for index in range(trials):
        record = TrialRecord(index, split_seed(report.seed, index))
        try:
            body(record)
        except FloquetError as e:
            logger.error(f"{report.name} trial {index} (seed {record.seed}) failed: {e}")
            record.error = f"{type(e).__name__}: {e}"
        except Exception as e:
            logger.error(f"{report.name} trial {index} (seed {record.seed}) crashed: {e}", exc_info=True)
            record.error = f"{type(e).__name__}: {e}"
        report.trials.append(record)
    logger.info(
        f"{report.name} on {report.spec.periods}: {len(report.trials) - len(report.failed_trials)}"
        f"/{len(report.trials)} trials passed"
    )
    return report


def _guarded_check(report: RigidityReport, name: str, build: Callable[[], CheckResult]) -> None:
    try:
        report.checks.append(build())
    except Exception as e:
        logger.error(f"{report.name} check {name} failed: {e}", exc_info=True)
        report.checks.append(CheckResult(name, False, detail=f"{type(e).__name__}: {e}"))


def _separability_checks(V: Potential, pattern: SeparabilityPattern, name: str) -> List[CheckResult]:
    """The separability verdict and Σ_{l in S} |V̂(l)|² <= CROSS_SUM_TOL * scale²."""
    table = dft(V)
    verdict = is_separable(table, pattern)
    cross_sum = cross_power_sum(table, pattern)
    return [
        CheckResult(
            f"{name}_separable",
            verdict.separable,
            verdict.magnitude / verdict.scale,
            Config.SEPARABILITY_TOL,
            "" if verdict.separable else f"witness {verdict.witness}",
        ),
        CheckResult.bounded(f"{name}_cross_sum", cross_sum / verdict.scale ** 2, CROSS_SUM_TOL),
    ]


def _planted_control(
    Y: Potential, pattern: SeparabilityPattern, amplitude: float, tol: float
) -> CheckResult:
    """A planted cross coefficient must break Floquet isospectrality."""
    cross = pattern.cross_indices
    if not cross:
        return CheckResult("negative_control", True, detail="no cross indices on this lattice")
    perturbed = plant_cross_coefficient(Y, pattern, cross[0], amplitude)
    result = floquet_isospectral(perturbed, Y, tol)
    return CheckResult(
        "negative_control",
        not result.accepted,
        result.relative_residual,
        tol,
        f"planted |V̂{cross[0]}| = {amplitude:g}, {'accepted' if result.accepted else 'rejected'}",
    )


# Suites

def verify_thm_main2(
    spec: LatticeSpec,
    pattern: SeparabilityPattern,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> RigidityReport:
    """
    A real V Floquet isospectral to a separable Y must itself be separable.

    Trials alternate between global translations and per-block moves.
    """
    trials, seed, tol = _suite_settings("main2", trials, seed, tol)
    report = RigidityReport("main2", spec, pattern, "separable real Y; V by translation / per-block moves", seed)

    def body(record: TrialRecord) -> None:
        mode = "b" if record.index % 2 else "a"
        pair = generate_pair(spec, pattern, record.seed, mode, tol=tol)
        Y, V = pair.V, pair.Y
        record.data["moves"] = list(pair.moves)
        record.checks.append(_isospectral_check(pair.result))
        record.checks.extend(_separability_checks(Y, pattern, "reference"))
        record.checks.extend(_separability_checks(V, pattern, "conclusion"))

    _run_trials(report, trials, body)
    reference = random_potential(spec, split_seed(seed, trials), PotentialMode.SEPARABLE, pattern)
    _guarded_check(report, "negative_control", lambda: _planted_control(reference, pattern, 0.5, tol))
    return report


def _mean_free_constants(rng: Xorshift64Star, count: int) -> List[complex]:
    """Complex constants c_j with Σ_j c_j = 0."""
    draws = [complex(rng.uniform(-0.5, 0.5, 1)[0], rng.uniform(-0.5, 0.5, 1)[0]) for _ in range(count - 1)]
    return draws + [-sum(draws)]


def _compare_components(
    V: Potential, Y: Potential, pattern: SeparabilityPattern, tol: float, record: TrialRecord
) -> None:
    """𝒫̃ of the zero-mean components, recovered directly and by extraction."""
    for j, (pv, py) in enumerate(zip(component_charpolys(V, pattern), component_charpolys(Y, pattern))):
        scale = max(1.0, pv.max_abs())
        record.checks.append(CheckResult.bounded(f"component{j}", pv.distance(py) / scale, tol))
        ev = extract_component_charpoly(V, pattern, keep=j)
        ey = extract_component_charpoly(Y, pattern, keep=j)
        record.checks.append(CheckResult.bounded(f"extracted{j}", ev.distance(ey) / scale, tol))
        record.checks.append(
            CheckResult.bounded(f"extracted{j}_vs_direct", ev.distance(pv.with_scalar("y")) / scale, tol)
        )


def _component_pair(
    V: Potential, pattern: SeparabilityPattern, rng: Xorshift64Star, constants: Sequence[complex]
) -> Potential:
    """Y_j = translate(V_j) + c_j, joined with the mean of V."""
    constant, components = split(V, pattern)
    moved = [
        translate(component, rng.index(component.spec.periods)).shifted(c)
        for component, c in zip(components, constants)
    ]
    return join(constant, moved, pattern)


def verify_thm_main3(
    spec: LatticeSpec,
    pattern: SeparabilityPattern,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> RigidityReport:
    """
    Isospectral complex separable potentials have isospectral components up
    to constants, compared after mean normalization.
    """
    trials, seed, tol = _suite_settings("main3", trials, seed, tol)
    report = RigidityReport(
        "main3", spec, pattern, "complex separable V; Y_j = translate(V_j) + c_j with sum c_j = 0", seed
    )

    def body(record: TrialRecord) -> None:
        rng = Xorshift64Star(record.seed)
        V = random_potential(spec, split_seed(record.seed, 0), PotentialMode.SEPARABLE, pattern, True)
        constants = _mean_free_constants(rng, pattern.rank)
        Y = _component_pair(V, pattern, rng, constants)
        record.data["constants"] = [[c.real, c.imag] for c in constants]
        record.checks.append(_isospectral_check(floquet_isospectral(V, Y)))
        _compare_components(V, Y, pattern, tol, record)

    _run_trials(report, trials, body)

    def constant_shuffle() -> CheckResult:
        rng = Xorshift64Star(split_seed(seed, trials))
        V = random_potential(spec, split_seed(seed, trials + 1), PotentialMode.SEPARABLE, pattern, True)
        constants = [0.3, -0.3] + [0.0] * (pattern.rank - 2)
        Y = _component_pair(V, pattern, rng, constants)
        record = TrialRecord(-1, split_seed(seed, trials))
        record.checks.append(_isospectral_check(floquet_isospectral(V, Y)))
        _compare_components(V, Y, pattern, tol, record)
        failed = [c.name for c in record.checks if not c.passed]
        detail = "c = (+0.3, -0.3)" + (f", failed {failed}" if failed else "")
        return CheckResult("constant_shuffle", not failed, detail=detail)

    def redrawn_component() -> CheckResult:
        V = random_potential(spec, split_seed(seed, trials + 2), PotentialMode.SEPARABLE, pattern, True)
        constant, components = split(V, pattern)
        other = random_potential(
            spec, split_seed(seed, trials + 3), PotentialMode.SEPARABLE, pattern, True
        )
        _, replacements = split(other, pattern)
        Y = join(constant, list(components[:-1]) + [replacements[-1]], pattern)
        result = floquet_isospectral(V, Y)
        return CheckResult(
            "negative_control",
            not result.accepted,
            result.relative_residual,
            result.tolerance,
            f"last component redrawn, {'accepted' if result.accepted else 'rejected'}",
        )

    _guarded_check(report, "constant_shuffle", constant_shuffle)
    _guarded_check(report, "negative_control", redrawn_component)
    return report


def verify_key1_key4(
    V: Potential,
    Y: Potential,
    pattern: Optional[SeparabilityPattern] = None,
    samples: int = 100,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    name: str = "key",
) -> RigidityReport:
    """
    Spectral invariants of a real pair: means, the rational power-sum
    identity, total and per-block power sums.

    When floquet_isospectral accepts, every invariant must agree. When it
    rejects, the report records whether some invariant differs or the
    invariants agree although the spectra differ (they are necessary only).
    """
    if not (V.is_real and Y.is_real):
        raise PotentialError("verify_key1_key4 needs real-valued potentials")
    _, seed, tol = _suite_settings("key", 1, seed, tol)
    report = RigidityReport(name, V.spec, pattern, "given pair", seed)
    iso = floquet_isospectral(V, Y)
    invariants = invariant_report(V, Y, pattern, g55_samples=samples, seed=seed)
    residuals = invariants.residuals
    report.data["invariants"] = invariants.to_dict()
    report.checks.append(
        CheckResult("isospectral_decision", True, iso.relative_residual, iso.tolerance,
                    "accepted" if iso.accepted else "rejected")
    )
    if iso.accepted:
        report.checks.append(CheckResult.bounded("mean", residuals["mean"], 1e-10))
        report.checks.append(CheckResult.bounded("g55", residuals["g55"], 1e-8))
        report.checks.append(CheckResult.bounded("total_power_sum", residuals["total"], tol))
        report.checks.append(CheckResult.bounded("block_power_sums", residuals["blocks"], tol))
    else:
        differing = [
            key for key, value in residuals.items()
            if value > (1e-8 if key == "g55" else 1e-10 if key == "mean" else tol)
        ]
        detail = (
            f"invariants differ: {', '.join(differing)}" if differing
            else "invariants agree but spectra differ"
        )
        report.checks.append(CheckResult("rejected_pair", True, detail=detail))
    logger.debug(f"Invariant residuals on {V.spec.periods}: {residuals}")
    return report


def _phase_rotated(V: Potential, pattern: SeparabilityPattern) -> Optional[Potential]:
    """Real V with one cross Fourier class rotated in phase; every |V̂(l)| is kept."""
    cross = pattern.cross_indices
    if not cross:
        return None
    index = cross[0]
    position = flatten(V.spec, index)
    partner = flatten(V.spec, reduce_mod(V.spec, tuple(-x for x in index)))
    coefficients = dft(V).coefficients.copy()
    if partner == position:
        # self-conjugate coefficients of a real V are real
        coefficients[position] *= -1.0
    else:
        coefficients[position] *= 1j
        coefficients[partner] *= -1j
    return Potential(V.spec, idft(FourierTable(V.spec, coefficients)).values.real)


def verify_key_suite(
    spec: LatticeSpec,
    pattern: Optional[SeparabilityPattern] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    samples: int = 100,
) -> RigidityReport:
    """verify_key1_key4 over translated real pairs, plus two rejected pairs."""
    trials, seed, tol = _suite_settings("key", trials, seed, tol)
    report = RigidityReport("key", spec, pattern, "real V; Y = translate(V)", seed)

    def body(record: TrialRecord) -> None:
        pair = generate_pair(spec, None, record.seed, "a", tol=tol)
        record.data["moves"] = list(pair.moves)
        sub = verify_key1_key4(pair.V, pair.Y, pattern, samples, record.seed, tol)
        record.data["invariants"] = sub.data["invariants"]
        record.checks.append(_isospectral_check(pair.result))
        record.checks.extend(sub.checks)

    _run_trials(report, trials, body)
    base = random_potential(spec, split_seed(seed, trials), PotentialMode.REAL)

    def constant_shift() -> CheckResult:
        sub = verify_key1_key4(base, Potential(spec, base.values.real + 0.1), pattern, samples, seed, tol)
        rejected = sub.checks[0].detail == "rejected"
        return CheckResult(
            "constant_shift", rejected and "mean" in sub.checks[-1].detail,
            detail=sub.checks[-1].detail if rejected else "shifted pair accepted",
        )

    def rearranged() -> CheckResult:
        rotated = None
        if spec.dimension > 1:
            rotated = _phase_rotated(base, pattern or SeparabilityPattern.complete(spec))
        if rotated is None:
            return CheckResult("necessary_only", True, detail="no cross indices on this lattice")
        sub = verify_key1_key4(base, Potential(spec, rotated.values.real), pattern, samples, seed, tol)
        return CheckResult("necessary_only", sub.verdict, detail=sub.checks[-1].detail or sub.checks[0].detail)

    _guarded_check(report, "constant_shift", constant_shift)
    _guarded_check(report, "necessary_only", rearranged)
    return report


def verify_triangular(
    spec: LatticeSpec,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> RigidityReport:
    """Dual equivalence, translated pairs and separability transfer on the triangular lattice."""
    if not spec.is_triangular:
        raise PotentialError(f"verify_triangular needs a triangular lattice, got {spec.kind.value}")
    trials, seed, tol = _suite_settings("tri", trials, seed, tol)
    pattern = SeparabilityPattern.complete(spec)
    report = RigidityReport("tri", spec, pattern, "random V; Y = translate(V)", seed)

    def body(record: TrialRecord) -> None:
        rng = Xorshift64Star(record.seed)
        V = random_potential(spec, split_seed(record.seed, 0), PotentialMode.COMPLEX)
        residual = dual_equivalence_residual(V, rng.unit_complex(2))
        record.checks.append(CheckResult.bounded("dual_equivalence", residual, tol))

        pair = generate_pair(spec, None, split_seed(record.seed, 1), "a", tol=tol)
        record.checks.append(_isospectral_check(pair.result))

        transfer = generate_pair(spec, pattern, split_seed(record.seed, 2), "b", tol=tol)
        record.data["moves"] = list(pair.moves + transfer.moves)
        record.checks.extend(_separability_checks(transfer.V, pattern, "reference"))
        record.checks.extend(_separability_checks(transfer.Y, pattern, "conclusion"))

    _run_trials(report, trials, body)
    reference = random_potential(spec, split_seed(seed, trials), PotentialMode.SEPARABLE, pattern)
    _guarded_check(report, "negative_control", lambda: _planted_control(reference, pattern, 0.5, tol))
    return report


def verify_all(
    spec: LatticeSpec,
    pattern: Optional[SeparabilityPattern] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> RigidityReport:
    """Every suite the lattice and pattern admit, merged into one report. ``tol`` reaches every suite."""
    seed = Config.FLOQUET_SEED if seed is None else seed
    report = RigidityReport("all", spec, pattern, "all suites", seed)
    if spec.is_triangular:
        report.suites.append(verify_triangular(spec, trials, seed, tol))
    elif pattern is not None:
        report.suites.append(verify_thm_main2(spec, pattern, trials, seed, tol))
        report.suites.append(verify_thm_main3(spec, pattern, trials, seed, tol))
    report.suites.append(verify_key_suite(spec, pattern if not spec.is_triangular else None, trials, seed, tol))
    logger.info(f"All suites on {spec.periods}: {'PASS' if report.verdict else 'FAIL'}")
    return report
