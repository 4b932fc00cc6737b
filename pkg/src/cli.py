"""Command-line entry point: ``python -m src <command> ...``."""
import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .charpoly import (
    block_power_sums,
    extract_component_charpoly,
    invariant_report,
    recover_P,
    recover_P_tri,
    recover_Ptilde,
)
from .config import Config
from .errors import FloquetError, ParameterError, SeparabilityError
from .floquet import (
    build_dk,
    build_dk_tri,
    charpoly_coeffs,
    fermi_isospectral_at,
    floquet_isospectral,
    hermitian_spectrum,
)
from .lattice import LatticeKind, LatticeSpec
from .laurent import LaurentPoly
from .potential import (
    PotentialMode,
    SeparabilityPattern,
    dft,
    fourier_to_document,
    is_separable,
    load_potential,
    potential_to_document,
    random_potential,
    split,
)
from .rigidity import (
    verify_all,
    verify_key_suite,
    verify_thm_main2,
    verify_thm_main3,
    verify_triangular,
)
from .rng import Xorshift64Star

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
FORMATS = ("json", "text", "csv")


def setup_logging(level: str = None, log_file: str = None) -> None:
    """
    Console log on stderr at ``level``; full DEBUG log to ``log_file`` when set.

    stdout carries command output only.
    """
    level = (level or Config.LOG_LEVEL).upper()
    log_file = Config.LOG_FILE if log_file is None else log_file
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level, logging.INFO))
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handlers = [console_handler]
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handlers.append(file_handler)
    logging.basicConfig(level=logging.DEBUG, handlers=handlers, force=True)

    # Keep third-party libraries quiet
    logging.getLogger('numpy').setLevel(logging.WARNING)
    logging.getLogger('scipy').setLevel(logging.WARNING)


@dataclass
class RunConfig:
    """Resolved settings of one invocation: flags, then --config file, then Config."""

    command: str
    inputs: List[str] = field(default_factory=list)
    output: Optional[str] = None
    periods: Optional[str] = None
    lattice: str = LatticeKind.HYPERCUBIC.value
    pattern: Optional[str] = None
    tol: Optional[float] = None
    seed: Optional[int] = None
    trials: Optional[int] = None
    pad: Optional[int] = None
    format: Optional[str] = None

    def validate(self) -> None:
        if self.tol is not None and not self.tol > 0:
            raise ParameterError(f"Tolerance must be positive, got {self.tol}")
        if self.trials is not None and self.trials < 1:
            raise ParameterError(f"Trial count must be positive, got {self.trials}")
        if self.pad is not None and self.pad < 0:
            raise ParameterError(f"Grid pad must be non-negative, got {self.pad}")
        if self.format is not None and self.format not in FORMATS:
            raise ParameterError(f"Unknown output format '{self.format}'")
        if self.pattern is not None and self.periods is not None:
            SeparabilityPattern.parse(self.lattice_spec(), self.pattern)

    def lattice_spec(self) -> LatticeSpec:
        if self.periods is None:
            raise ParameterError(f"'{self.command}' needs --periods")
        return LatticeSpec(LatticeSpec.parse_periods(self.periods), LatticeKind(self.lattice))

    def separability_pattern(self, spec: LatticeSpec) -> Optional[SeparabilityPattern]:
        return SeparabilityPattern.parse(spec, self.pattern) if self.pattern is not None else None

    def resolved_seed(self) -> int:
        return Config.FLOQUET_SEED if self.seed is None else self.seed


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge parsed flags over the optional --config JSON file."""
    defaults = {}
    if args.config:
        try:
            with open(args.config, 'r', encoding='utf-8') as f:
                defaults = json.load(f)
        except json.JSONDecodeError as e:
            raise ParameterError(f"{args.config}: malformed JSON ({e.msg} at line {e.lineno})") from e
        except OSError as e:
            raise ParameterError(f"{args.config}: {e.strerror}") from e
        if not isinstance(defaults, dict):
            raise ParameterError(f"{args.config}: expected a JSON object")

    values = {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None and flag != []:
            values[f.name] = flag
        elif f.name in defaults:
            values[f.name] = defaults[f.name]
    if isinstance(values.get("periods"), list):
        values["periods"] = ','.join(str(q) for q in values["periods"])
    if isinstance(values.get("pattern"), list):
        values["pattern"] = ','.join(str(b) for b in values["pattern"])
    try:
        run = RunConfig(**values)
    except TypeError as e:
        raise ParameterError(f"Invalid run configuration: {e}") from e
    run.validate()
    return run


# Output helpers

def _json_text(document) -> str:
    return json.dumps(document, indent=2) + '\n'


def _complex_pair(value: complex) -> list:
    return [float(value.real), float(value.imag)]


def _number(value: float) -> str:
    return format(float(value), '.17g')


def _write(text: str, run: RunConfig) -> None:
    if run.output:
        Path(run.output).write_text(text, encoding='utf-8')
    else:
        sys.stdout.write(text)


def _require_inputs(run: RunConfig, count: int) -> None:
    if len(run.inputs) != count:
        raise ParameterError(f"'{run.command}' takes {count} input file(s), got {len(run.inputs)}")


def _pattern_for(run: RunConfig, spec: LatticeSpec) -> SeparabilityPattern:
    if run.pattern is None:
        raise ParameterError(f"'{run.command}' needs --pattern")
    return SeparabilityPattern.parse(spec, run.pattern)


def _poly_output(P: LaurentPoly, run: RunConfig) -> str:
    if (run.format or "text") == "json":
        return _json_text({
            "scalar": P.scalar_name,
            "terms": [[list(key), _complex_pair(value)] for key, value in sorted(P.coeffs.items())],
        })
    return P.dump()


# Commands

def cmd_gen(run: RunConfig, args) -> int:
    spec = run.lattice_spec()
    V = random_potential(spec, run.resolved_seed(), args.mode, run.separability_pattern(spec), args.complex)
    _write(_json_text(potential_to_document(V)), run)
    return EXIT_OK


def cmd_dft(run: RunConfig, args) -> int:
    _require_inputs(run, 1)
    _write(_json_text(fourier_to_document(dft(load_potential(run.inputs[0])))), run)
    return EXIT_OK


def cmd_separable(run: RunConfig, args) -> int:
    _require_inputs(run, 1)
    V = load_potential(run.inputs[0])
    verdict = is_separable(dft(V), _pattern_for(run, V.spec), run.tol)
    _write(_json_text({
        "separable": verdict.separable,
        "witness": list(verdict.witness) if verdict.witness is not None else None,
        "magnitude": verdict.magnitude,
        "scale": verdict.scale,
    }), run)
    if not verdict.separable:
        print(f"not separable: witness {verdict.witness}, |coefficient| = {verdict.magnitude:.3e}", file=sys.stderr)
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_split(run: RunConfig, args) -> int:
    _require_inputs(run, 1)
    V = load_potential(run.inputs[0])
    try:
        constant, components = split(V, _pattern_for(run, V.spec), run.tol)
    except SeparabilityError as e:
        print(f"not separable: witness {e.witness}, |coefficient| = {e.magnitude:.3e}", file=sys.stderr)
        return EXIT_NEGATIVE
    _write(_json_text({
        "constant": _complex_pair(constant),
        "components": [potential_to_document(c) for c in components],
    }), run)
    return EXIT_OK


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise ParameterError(f"Expected comma-separated numbers, got '{text}'") from e


def _quasimomenta(run: RunConfig, args, dimension: int) -> List[np.ndarray]:
    if args.k:
        points = [np.array(_parse_floats(text)) for text in args.k]
    else:
        rng = Xorshift64Star(run.resolved_seed())
        points = [rng.uniform(0.0, 1.0, dimension) for _ in range(args.samples)]
    for k in points:
        if k.shape[0] != dimension:
            raise ParameterError(f"Quasimomentum {tuple(k)} needs {dimension} coordinates")
    return points


def cmd_spectrum(run: RunConfig, args) -> int:
    """Sorted eigenvalues for real V; λ-coefficients otherwise."""
    _require_inputs(run, 1)
    V = load_potential(run.inputs[0])
    d = V.spec.dimension
    points = _quasimomenta(run, args, d)
    k_header = [f"k{j + 1}" for j in range(d)]
    rows = []
    if V.is_real:
        header = k_header + [f"lambda_{i + 1}" for i in range(V.spec.volume)]
        for k in points:
            rows.append(list(k) + list(hermitian_spectrum(V, k)))
    else:
        builder = build_dk_tri if V.spec.is_triangular else build_dk
        header = k_header + [f"c{b}_{part}" for b in range(V.spec.volume + 1) for part in ("re", "im")]
        for k in points:
            coeffs = charpoly_coeffs(builder(V, k))
            rows.append(list(k) + [x for c in coeffs for x in (c.real, c.imag)])

    if (run.format or "csv") == "json":
        _write(_json_text({"header": header, "rows": [[float(x) for x in row] for row in rows]}), run)
    else:
        lines = [','.join(header)] + [','.join(_number(x) for x in row) for row in rows]
        _write('\n'.join(lines) + '\n', run)
    return EXIT_OK


def cmd_isospectral(run: RunConfig, args) -> int:
    _require_inputs(run, 2)
    V, Y = (load_potential(path) for path in run.inputs)
    result = floquet_isospectral(V, Y, run.tol, run.pad)
    _write(_json_text({
        "isospectral": result.accepted,
        "residual": result.residual,
        "scale": result.scale,
        "tolerance": result.tolerance,
        "grid": list(result.grid_sizes),
    }), run)
    return EXIT_OK if result.accepted else EXIT_NEGATIVE


def cmd_fermi(run: RunConfig, args) -> int:
    _require_inputs(run, 2)
    V, Y = (load_potential(path) for path in run.inputs)
    parts = _parse_floats(args.energy)
    if len(parts) not in (1, 2):
        raise ParameterError(f"Energy must be 're' or 're,im', got '{args.energy}'")
    energy = complex(parts[0], parts[1] if len(parts) == 2 else 0.0)
    result = fermi_isospectral_at(V, Y, energy, run.tol, run.pad)
    _write(_json_text({
        "fermi_isospectral": result.accepted,
        "energy": _complex_pair(result.energy),
        "residual": result.residual,
        "scale": result.scale,
        "tolerance": result.tolerance,
    }), run)
    return EXIT_OK if result.accepted else EXIT_NEGATIVE


def cmd_invariants(run: RunConfig, args) -> int:
    if len(run.inputs) not in (1, 2):
        raise ParameterError(f"'invariants' takes one or two input files, got {len(run.inputs)}")
    potentials = [load_potential(path) for path in run.inputs]
    spec = potentials[0].spec
    pattern = run.separability_pattern(spec)
    if len(potentials) == 1:
        V = potentials[0]
        sums = block_power_sums(dft(V), pattern)
        document = {
            "mean": _complex_pair(dft(V).coefficients[0]),
            "total": sums.total,
            "blocks": list(sums.blocks),
        }
    else:
        V, Y = potentials
        samples = args.samples if V.is_real and Y.is_real else 0
        document = invariant_report(V, Y, pattern, samples, run.resolved_seed()).to_dict()
    _write(_json_text(document), run)
    return EXIT_OK


def cmd_charpoly(run: RunConfig, args) -> int:
    _require_inputs(run, 1)
    V = load_potential(run.inputs[0])
    if args.tilde:
        P = recover_Ptilde(V, method=args.method, cross_check=args.cross_check, pad=run.pad)
    else:
        P = recover_P_tri(V, run.pad) if V.spec.is_triangular else recover_P(V, run.pad)
    _write(_poly_output(P, run), run)
    return EXIT_OK


def cmd_extract(run: RunConfig, args) -> int:
    _require_inputs(run, 1)
    V = load_potential(run.inputs[0])
    pattern = _pattern_for(run, V.spec)
    if not 1 <= args.keep <= pattern.rank:
        raise ParameterError(f"--keep must lie in 1..{pattern.rank}, got {args.keep}")
    try:
        P = extract_component_charpoly(V, pattern, keep=args.keep - 1, tol=run.tol, pad=run.pad)
    except SeparabilityError as e:
        print(f"not separable: witness {e.witness}, |coefficient| = {e.magnitude:.3e}", file=sys.stderr)
        return EXIT_NEGATIVE
    _write(_poly_output(P, run), run)
    return EXIT_OK


def cmd_verify(run: RunConfig, args) -> int:
    spec = run.lattice_spec()
    pattern = run.separability_pattern(spec)
    seed = run.resolved_seed()
    suite = args.suite
    if suite in ("main2", "main3") and pattern is None:
        raise ParameterError(f"'verify {suite}' needs --pattern")
    if suite == "main2":
        report = verify_thm_main2(spec, pattern, run.trials, seed, run.tol)
    elif suite == "main3":
        report = verify_thm_main3(spec, pattern, run.trials, seed, run.tol)
    elif suite == "key":
        report = verify_key_suite(spec, pattern, run.trials, seed, run.tol)
    elif suite == "tri":
        report = verify_triangular(spec, run.trials, seed, run.tol)
    else:
        report = verify_all(spec, pattern, run.trials, seed, run.tol)
    text = report.summary_text() if (run.format or "json") == "text" else report.to_json()
    _write(text, run)
    return EXIT_OK if report.verdict else EXIT_NEGATIVE


COMMANDS = {
    "gen": cmd_gen,
    "dft": cmd_dft,
    "separable": cmd_separable,
    "split": cmd_split,
    "spectrum": cmd_spectrum,
    "isospectral": cmd_isospectral,
    "fermi": cmd_fermi,
    "invariants": cmd_invariants,
    "charpoly": cmd_charpoly,
    "extract": cmd_extract,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so cli_main can return the exit code."""

    def error(self, message):
        raise ParameterError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--config', help="JSON file of default flag values")
    common.add_argument('--output', '-o', help="write the result here instead of stdout")
    common.add_argument('--format', choices=FORMATS)
    common.add_argument('--log-level', dest='log_level')
    common.add_argument('--periods', help="comma-separated periods, e.g. 2,3")
    common.add_argument('--lattice', choices=[kind.value for kind in LatticeKind])
    common.add_argument('--pattern', help="comma-separated block sizes, e.g. 1,1")
    common.add_argument('--tol', type=float)
    common.add_argument('--seed', type=int)
    common.add_argument('--trials', type=int)
    common.add_argument('--pad', type=int, help="extra roots-of-unity samples beyond each degree window")

    parser = _Parser(prog="python -m src", description="Floquet rigidity toolkit")
    commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    gen = commands.add_parser('gen', parents=[common], help="random potential")
    gen.add_argument('--mode', choices=[mode.value for mode in PotentialMode], default=PotentialMode.REAL.value)
    gen.add_argument('--complex', action='store_true', help="complex values in the pattern modes")

    for name, help_text, count in (
        ('dft', "discrete Fourier transform", 1),
        ('separable', "separability decision", 1),
        ('split', "separable decomposition", 1),
        ('isospectral', "Floquet isospectrality decision", 2),
    ):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument('inputs', nargs=count)

    spectrum = commands.add_parser('spectrum', parents=[common], help="spectra or λ-coefficients")
    spectrum.add_argument('inputs', nargs=1)
    spectrum.add_argument('--k', action='append', help="quasimomentum, e.g. 0.1,0.25 (repeatable)")
    spectrum.add_argument('--samples', type=int, default=8, help="random quasimomenta when --k is absent")

    fermi = commands.add_parser('fermi', parents=[common], help="Fermi isospectrality at one energy")
    fermi.add_argument('inputs', nargs=2)
    fermi.add_argument('--energy', required=True, help="'re' or 're,im'")

    invariants = commands.add_parser('invariants', parents=[common], help="means and power sums")
    invariants.add_argument('inputs', nargs='+')
    invariants.add_argument('--samples', type=int, default=100, help="sample points of the rational identity")

    charpoly = commands.add_parser('charpoly', parents=[common], help="characteristic polynomial dump")
    charpoly.add_argument('inputs', nargs=1)
    charpoly.add_argument('--tilde', action='store_true', help="the z_j -> z_j^{q_j} polynomial")
    charpoly.add_argument('--method', choices=("substitute", "dual"), default="substitute")
    charpoly.add_argument('--cross-check', dest='cross_check', action='store_true')

    extract = commands.add_parser('extract', parents=[common], help="component polynomial of a separable potential")
    extract.add_argument('inputs', nargs=1)
    extract.add_argument('--keep', type=int, default=2, help="block to extract, 1-based")

    verify = commands.add_parser('verify', parents=[common], help="rigidity experiment suites")
    verify.add_argument('suite', choices=("main2", "main3", "key", "tri", "all"))
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code (0 pass, 1 negative, 2 usage error)."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.log_level)
        run = load_run_config(args)
        return COMMANDS[args.command](run, args)
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    except (FloquetError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())
