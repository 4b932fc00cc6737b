"""Tests for the command-line entry point."""
import json
import logging
import sys
from pathlib import Path
from unittest.mock import patch

import pytest

# Add project root to path and import as package
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.cli import EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE, build_parser, cli_main, load_run_config
from src.errors import ParameterError
from src.lattice import LatticeSpec
from src.laurent import LaurentPoly
from src.potential import (
    Potential,
    PotentialMode,
    SeparabilityPattern,
    load_potential,
    random_potential,
    save_potential,
    translate,
)
from src.rigidity import verify_key_suite, verify_thm_main2


@pytest.fixture(autouse=True)
def reset_logging():
    """cli_main installs handlers on the captured stderr; drop them afterwards."""
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if not type(handler).__module__.startswith('_pytest'):
            root.removeHandler(handler)
            handler.close()


@pytest.fixture
def spec():
    return LatticeSpec((2, 3))


@pytest.fixture
def pair_files(tmp_path, spec):
    """A real potential and a translate of it."""
    V = random_potential(spec, 4)
    v_path, y_path = tmp_path / "v.json", tmp_path / "y.json"
    save_potential(V, v_path)
    save_potential(translate(V, (1, 2)), y_path)
    return str(v_path), str(y_path)


@pytest.fixture
def separable_file(tmp_path, spec):
    V = random_potential(spec, 6, PotentialMode.SEPARABLE, SeparabilityPattern.complete(spec))
    path = tmp_path / "sep.json"
    save_potential(V, path)
    return str(path)


@pytest.fixture
def planted_file(tmp_path):
    """δ at (1, 1) on the (2, 2) lattice: V̂(1, 1) = 1/4."""
    path = tmp_path / "corner.json"
    save_potential(Potential(LatticeSpec((2, 2)), [0.0, 0.0, 0.0, 1.0]), path)
    return str(path)


class TestGen:
    """Test cases for the gen command."""

    def test_writes_document(self, tmp_path):
        """gen writes a potential document to --output."""
        out = tmp_path / "gen.json"
        assert cli_main(["gen", "--periods", "2,3", "--seed", "5", "-o", str(out)]) == EXIT_OK
        V = load_potential(out)
        assert V.spec.periods == (2, 3)
        assert V.is_real

    def test_byte_identical(self, tmp_path):
        """Two runs with one seed write identical bytes."""
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            cli_main(["gen", "--periods", "2,3", "--mode", "separable", "--pattern", "1,1", "--seed", "9",
                      "-o", str(path)])
        assert a.read_bytes() == b.read_bytes()

    def test_stdout(self, capsys):
        """Without --output the document goes to stdout."""
        assert cli_main(["gen", "--periods", "3", "--mode", "complex", "--seed", "1"]) == EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert document["periods"] == [3]
        assert len(document["values"][0]) == 2

    def test_config_file_defaults(self, tmp_path, capsys):
        """A --config file supplies flag defaults."""
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"periods": [2, 2], "seed": 3}), encoding='utf-8')
        assert cli_main(["gen", "--config", str(config)]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["periods"] == [2, 2]

    def test_flags_override_config(self, tmp_path):
        """Command-line flags win over the config file."""
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"periods": "2,2", "seed": 3}), encoding='utf-8')
        args = build_parser().parse_args(["gen", "--config", str(config), "--periods", "4"])
        run = load_run_config(args)
        assert run.periods == "4"
        assert run.seed == 3


class TestDecisions:
    """Test cases for separable, split, isospectral and fermi."""

    def test_isospectral_pair(self, pair_files, capsys):
        """A translated pair is accepted with exit 0."""
        assert cli_main(["isospectral", *pair_files]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["isospectral"] is True

    def test_isospectral_shifted(self, tmp_path, pair_files, capsys):
        """A shifted pair is rejected with exit 1."""
        V = load_potential(pair_files[0])
        shifted = tmp_path / "shifted.json"
        save_potential(V.shifted(0.1), shifted)
        assert cli_main(["isospectral", pair_files[0], str(shifted)]) == EXIT_NEGATIVE
        assert json.loads(capsys.readouterr().out)["isospectral"] is False

    def test_separable_planted(self, planted_file, capsys):
        """A planted cross coefficient fails with its witness on stderr."""
        assert cli_main(["separable", planted_file, "--pattern", "1,1"]) == EXIT_NEGATIVE
        captured = capsys.readouterr()
        assert json.loads(captured.out)["witness"] == [1, 1]
        assert "witness (1, 1)" in captured.err

    def test_separable_accepts(self, separable_file, capsys):
        """A separable potential passes."""
        assert cli_main(["separable", separable_file, "--pattern", "1,1"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["separable"] is True

    def test_split(self, separable_file, capsys):
        """split prints the constant and one component per block."""
        assert cli_main(["split", separable_file, "--pattern", "1,1"]) == EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert [c["periods"] for c in document["components"]] == [[2], [3]]

    def test_split_planted(self, planted_file):
        """split refuses a non-separable potential."""
        assert cli_main(["split", planted_file, "--pattern", "1,1"]) == EXIT_NEGATIVE

    def test_fermi(self, pair_files, capsys):
        """Translates are Fermi isospectral."""
        assert cli_main(["fermi", *pair_files, "--energy", "0.5,0.25"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["energy"] == [0.5, 0.25]


class TestPolynomialCommands:
    """Test cases for spectrum, dft, invariants, charpoly and extract."""

    def test_spectrum_csv_header(self, pair_files, capsys):
        """spectrum writes a CSV header and one row per quasimomentum."""
        assert cli_main(["spectrum", pair_files[0], "--k", "0.1,0.2", "--k", "0.3,0.4"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k1,k2,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5,lambda_6"
        assert len(lines) == 3
        values = [float(x) for x in lines[1].split(',')[2:]]
        assert values == sorted(values)

    def test_spectrum_wrong_dimension(self, pair_files):
        """A quasimomentum of the wrong length is a usage error."""
        assert cli_main(["spectrum", pair_files[0], "--k", "0.1"]) == EXIT_USAGE

    def test_dft(self, planted_file, capsys):
        """dft writes Fourier coefficients as [re, im] pairs."""
        assert cli_main(["dft", planted_file]) == EXIT_OK
        coefficients = json.loads(capsys.readouterr().out)["coefficients"]
        assert coefficients[3][0] == pytest.approx(0.25)

    def test_invariants_pair(self, pair_files, capsys):
        """invariants compares two potentials."""
        assert cli_main(["invariants", *pair_files, "--pattern", "1,1", "--samples", "20"]) == EXIT_OK
        residuals = json.loads(capsys.readouterr().out)["residuals"]
        assert residuals["g55"] <= 1e-9

    def test_charpoly_dump_parses(self, pair_files, capsys):
        """The text dump reads back into the same polynomial."""
        assert cli_main(["charpoly", pair_files[0]]) == EXIT_OK
        P = LaurentPoly.parse(capsys.readouterr().out)
        assert P.nvars == 2
        assert P[(0, 0, 6)] == pytest.approx(1.0)

    def test_charpoly_tilde_json(self, pair_files, capsys):
        """--tilde with JSON output."""
        code = cli_main(["charpoly", pair_files[0], "--tilde", "--method", "dual", "--cross-check",
                         "--format", "json"])
        assert code == EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert document["scalar"] == "lambda"
        assert all(key[0] % 2 == 0 and key[1] % 3 == 0 for key, _ in document["terms"])

    def test_extract(self, separable_file, capsys):
        """extract prints the block polynomial chosen by --keep."""
        assert cli_main(["extract", separable_file, "--pattern", "1,1", "--keep", "1"]) == EXIT_OK
        P = LaurentPoly.parse(capsys.readouterr().out, scalar_name="y")
        assert P[(0, 2)] == pytest.approx(1.0)

    def test_extract_keep_out_of_range(self, separable_file):
        """--keep beyond the block count is a usage error."""
        assert cli_main(["extract", separable_file, "--pattern", "1,1", "--keep", "3"]) == EXIT_USAGE


class TestVerify:
    """Test cases for the verify command."""

    def test_key_small(self, capsys):
        """Two key-suite trials pass."""
        assert cli_main(["verify", "key", "--periods", "2,3", "--trials", "2", "--seed", "1"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["verdict"] == "pass"

    def test_text_summary(self, capsys):
        """--format text prints the summary."""
        code = cli_main(["verify", "main2", "--periods", "2,3", "--pattern", "1,1", "--trials", "2",
                         "--format", "text"])
        assert code == EXIT_OK
        assert "PASS" in capsys.readouterr().out

    def test_main2_needs_pattern(self):
        """main2 without --pattern is a usage error."""
        assert cli_main(["verify", "main2", "--periods", "2,3", "--trials", "1"]) == EXIT_USAGE

    def test_all_forwards_tolerance(self, capsys):
        """verify all hands --tol to each suite it runs."""
        with patch('src.rigidity.verify_thm_main2', wraps=verify_thm_main2) as main2, \
                patch('src.rigidity.verify_key_suite', wraps=verify_key_suite) as key:
            cli_main(["verify", "all", "--periods", "2,3", "--pattern", "1,1", "--trials", "1",
                      "--tol", "1e-3"])
        assert main2.call_args.args[-1] == 1e-3
        assert key.call_args.args[-1] == 1e-3
        assert json.loads(capsys.readouterr().out)["name"] == "all"


class TestUsageErrors:
    """Test cases for exit code 2."""

    def test_malformed_json(self, tmp_path):
        """Malformed JSON input exits with 2."""
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding='utf-8')
        assert cli_main(["dft", str(path)]) == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        """A missing input file exits with 2."""
        assert cli_main(["dft", str(tmp_path / "absent.json")]) == EXIT_USAGE

    def test_unknown_flag(self):
        """Unknown flags exit with 2."""
        assert cli_main(["gen", "--periods", "2", "--bogus"]) == EXIT_USAGE

    def test_unknown_command(self):
        """Unknown commands exit with 2."""
        assert cli_main(["frobnicate"]) == EXIT_USAGE

    def test_bad_pattern(self, separable_file):
        """A pattern that does not cover the lattice exits with 2."""
        assert cli_main(["separable", separable_file, "--pattern", "1,2"]) == EXIT_USAGE

    def test_negative_tolerance(self):
        """Negative tolerances are rejected."""
        args = build_parser().parse_args(["gen", "--periods", "2", "--tol", "-1"])
        with pytest.raises(ParameterError):
            load_run_config(args)

    def test_wrong_input_count(self, pair_files):
        """Two-potential commands need exactly two inputs."""
        assert cli_main(["invariants", *pair_files, pair_files[0]]) == EXIT_USAGE
