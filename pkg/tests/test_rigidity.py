"""Tests for pair generation and the rigidity suites."""
import json
import sys
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

# Add project root to path and import as package
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.errors import IsospectralityError, PotentialError
from src.floquet import IsospectralityResult
from src.lattice import LatticeKind, LatticeSpec
from src.potential import (
    PotentialMode,
    SeparabilityPattern,
    dft,
    is_separable,
    random_potential,
)
from src.rigidity import (
    CheckResult,
    RigidityReport,
    TrialRecord,
    generate_pair,
    isospectral_pair,
    verify_all,
    verify_key1_key4,
    verify_key_suite,
    verify_thm_main2,
    verify_thm_main3,
    verify_triangular,
)


@pytest.fixture
def spec():
    return LatticeSpec((2, 3))


@pytest.fixture
def pattern(spec):
    return SeparabilityPattern.complete(spec)


def check_names(report: RigidityReport) -> set:
    return {check.name for check in report.checks}


class TestRecords:
    """Test cases for CheckResult, TrialRecord and RigidityReport."""

    def test_bounded(self):
        """A bounded check passes iff the residual is within tolerance."""
        assert CheckResult.bounded("x", 1e-12, 1e-9).passed
        assert not CheckResult.bounded("x", 1e-6, 1e-9).passed

    def test_trial_with_error_fails(self):
        """A recorded error fails the trial even when every check passed."""
        record = TrialRecord(0, 1, [CheckResult("x", True)])
        assert record.passed
        record.error = "PolynomialError: boom"
        assert not record.passed

    def test_verdict_covers_nested_suites(self, spec):
        """A failing nested suite fails the outer report."""
        inner = RigidityReport("inner", spec, None, "g", 1, checks=[CheckResult("x", False)])
        outer = RigidityReport("outer", spec, None, "g", 1, suites=[inner])
        assert not outer.verdict
        assert "FAIL" in outer.summary_text()
        assert json.loads(outer.to_json())["verdict"] == "fail"

    def test_report_data_is_serialised(self, spec):
        """Report-level data reaches the JSON document."""
        report = RigidityReport("r", spec, None, "g", 1, data={"note": [1, 2]})
        assert json.loads(report.to_json())["data"] == {"note": [1, 2]}


class TestGeneratePair:
    """Test cases for generate_pair."""

    def test_zero_translation(self, spec):
        """Translating by zero returns V itself."""
        pair = generate_pair(spec, None, 5, "a", translation=(0, 0))
        np.testing.assert_array_equal(pair.V.values, pair.Y.values)
        assert pair.result.accepted
        assert pair.moves == ("translate(0, 0)",)

    def test_mode_a(self, spec):
        """Mode a: a real potential and an accepted translate."""
        pair = generate_pair(spec, None, 5, "a")
        assert pair.result.accepted
        assert pair.V.is_real

    def test_mode_a_complex(self, spec):
        """Mode a with complex values."""
        pair = generate_pair(spec, None, 5, "a", complex_valued=True)
        assert not pair.V.is_real
        assert pair.result.accepted

    @pytest.mark.parametrize("seed", range(6))
    def test_mode_b_separable(self, spec, pattern, seed):
        """Mode b: both potentials separable, real and isospectral."""
        pair = generate_pair(spec, pattern, seed, "b")
        assert pair.result.accepted
        assert is_separable(dft(pair.V), pattern).separable
        assert is_separable(dft(pair.Y), pattern).separable
        assert pair.Y.is_real

    def test_mode_b_three_blocks(self):
        """Mode b moves each block of a (1, 2) pattern separately."""
        spec = LatticeSpec((2, 2, 3))
        pattern = SeparabilityPattern(spec, (1, 2))
        pair = generate_pair(spec, pattern, 9, "b")
        assert pair.result.accepted
        assert len([m for m in pair.moves if "translate" in m]) == 2

    def test_mode_b_needs_pattern(self, spec):
        """Mode b without a pattern is an error."""
        with pytest.raises(PotentialError):
            generate_pair(spec, None, 1, "b")

    def test_unknown_mode(self, spec):
        """Unknown generator modes are rejected."""
        with pytest.raises(PotentialError):
            generate_pair(spec, None, 1, "c")

    def test_rejected_pair_raises(self, spec):
        """A pair the decision rejects raises IsospectralityError."""
        rejected = IsospectralityResult(False, 1.0, 1.0, 1e-9, (5, 5))
        with patch('src.rigidity.floquet_isospectral', return_value=rejected):
            with pytest.raises(IsospectralityError):
                generate_pair(spec, None, 1, "a")

    def test_deterministic(self, spec, pattern):
        """The same seed gives the same pair."""
        V1, Y1 = isospectral_pair(spec, pattern, 12, "b")
        V2, Y2 = isospectral_pair(spec, pattern, 12, "b")
        np.testing.assert_array_equal(V1.values, V2.values)
        np.testing.assert_array_equal(Y1.values, Y2.values)


class TestSeparabilitySuite:
    """Test cases for verify_thm_main2."""

    def test_small_run(self, spec, pattern):
        """Four trials pass and record every separability check."""
        report = verify_thm_main2(spec, pattern, trials=4, seed=3)
        assert report.verdict
        assert len(report.trials) == 4
        assert "negative_control" in check_names(report)
        names = {check.name for check in report.trials[0].checks}
        assert {"isospectral", "reference_separable", "conclusion_separable", "conclusion_cross_sum"} <= names

    def test_trial_failure_is_recorded(self, spec, pattern):
        """A generator error fails its trial and the suite keeps going."""
        with patch('src.rigidity.generate_pair', side_effect=IsospectralityError("rejected")):
            report = verify_thm_main2(spec, pattern, trials=2, seed=3)
        assert not report.verdict
        assert len(report.failed_trials) == 2
        assert report.trials[0].error.startswith("IsospectralityError")

    def test_json_is_deterministic(self, spec, pattern):
        """Two runs with one seed give byte-identical JSON."""
        first = verify_thm_main2(spec, pattern, trials=2, seed=8).to_json()
        second = verify_thm_main2(spec, pattern, trials=2, seed=8).to_json()
        assert first == second
        document = json.loads(first)
        assert document["verdict"] == "pass"
        assert document["pattern"] == [1, 1]

    @pytest.mark.slow
    def test_acceptance(self, spec, pattern):
        """Fifty trials on (2, 3) with pattern (1, 1)."""
        assert verify_thm_main2(spec, pattern, trials=50, seed=7).verdict

    @pytest.mark.slow
    def test_acceptance_three_dimensional(self):
        """Fifty trials on (2, 2, 2) with pattern (1, 2)."""
        spec = LatticeSpec((2, 2, 2))
        assert verify_thm_main2(spec, SeparabilityPattern(spec, (1, 2)), trials=50, seed=7).verdict


class TestComponentSuite:
    """Test cases for verify_thm_main3."""

    def test_small_run(self, pattern):
        """Two trials pass with component and extraction checks."""
        report = verify_thm_main3(pattern.spec, pattern, trials=2, seed=4)
        assert report.verdict
        assert {"constant_shuffle", "negative_control"} <= check_names(report)
        names = {check.name for check in report.trials[0].checks}
        assert {"component0", "component1", "extracted0", "extracted1_vs_direct"} <= names

    def test_constants_sum_to_zero(self, pattern):
        """The redistributed block constants have zero sum."""
        report = verify_thm_main3(pattern.spec, pattern, trials=1, seed=4)
        constants = report.trials[0].data["constants"]
        assert sum(c[0] for c in constants) == pytest.approx(0.0, abs=1e-15)
        assert sum(c[1] for c in constants) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.slow
    def test_acceptance(self, pattern):
        """Twenty-five complex trials on (2, 3)."""
        assert verify_thm_main3(pattern.spec, pattern, trials=25, seed=7).verdict


class TestInvariantSuite:
    """Test cases for verify_key1_key4 and verify_key_suite."""

    def test_translated_pair(self, spec, pattern):
        """Every invariant agrees on a translated pair."""
        pair = generate_pair(spec, None, 2, "a")
        report = verify_key1_key4(pair.V, pair.Y, pattern, samples=50, seed=1)
        assert report.verdict
        assert {"mean", "g55", "total_power_sum", "block_power_sums"} <= check_names(report)

    def test_report_carries_invariants(self, spec, pattern):
        """Means, totals and block sums of both potentials reach the JSON report."""
        V = random_potential(spec, 2)
        Y = V.shifted(0.25)
        document = json.loads(verify_key1_key4(V, Y, pattern, samples=10, seed=1).to_json())
        invariants = document["data"]["invariants"]
        assert invariants["means"][0][0] == pytest.approx(invariants["means"][1][0] - 0.25)
        assert len(invariants["totals"]) == 2
        assert [len(blocks) for blocks in invariants["blocks"]] == [2, 2]
        assert {"mean", "total", "blocks", "g55"} <= set(invariants["residuals"])

    def test_suite_trials_carry_invariants(self, spec, pattern):
        """Each key-suite trial records the invariant report of its pair."""
        report = verify_key_suite(spec, pattern, trials=1, seed=5, samples=10)
        invariants = report.trials[0].data["invariants"]
        assert invariants["means"][0] == pytest.approx(invariants["means"][1], abs=1e-12)

    def test_shifted_pair_differs_in_mean(self, spec):
        """A shifted pair is rejected and the mean is named as differing."""
        V = random_potential(spec, 2)
        report = verify_key1_key4(V, V.shifted(0.1), samples=20)
        assert report.checks[0].detail == "rejected"
        assert report.checks[-1].name == "rejected_pair"
        assert "mean" in report.checks[-1].detail

    def test_complex_rejected(self, spec):
        """The invariants are defined for real potentials only."""
        V = random_potential(spec, 2, PotentialMode.COMPLEX)
        with pytest.raises(PotentialError):
            verify_key1_key4(V, V)

    def test_small_suite(self, spec, pattern):
        """Three trials plus both rejected-pair controls."""
        report = verify_key_suite(spec, pattern, trials=3, seed=5, samples=30)
        assert report.verdict
        assert {"constant_shift", "necessary_only"} <= check_names(report)

    def test_one_dimensional(self):
        """The suite runs on a chain, where no cross indices exist."""
        report = verify_key_suite(LatticeSpec((4,)), trials=2, seed=5, samples=20)
        assert report.verdict

    @pytest.mark.slow
    def test_acceptance(self, spec, pattern):
        """Fifty translated real pairs on (2, 3)."""
        assert verify_key_suite(spec, pattern, trials=50, seed=7).verdict


class TestTriangularSuite:
    """Test cases for verify_triangular."""

    def test_small_run(self):
        """Two trials pass on the (2, 2) triangular lattice."""
        spec = LatticeSpec((2, 2), LatticeKind.TRIANGULAR)
        report = verify_triangular(spec, trials=2, seed=6)
        assert report.verdict
        assert "dual_equivalence" in {c.name for c in report.trials[0].checks}

    def test_needs_triangular(self, spec):
        """A hypercubic lattice is rejected."""
        with pytest.raises(PotentialError):
            verify_triangular(spec, trials=1)

    @pytest.mark.slow
    @pytest.mark.parametrize("periods", [(2, 2), (2, 3)])
    def test_acceptance(self, periods):
        """Fifty trials per lattice, one dual-equivalence instance each."""
        assert verify_triangular(LatticeSpec(periods, LatticeKind.TRIANGULAR), trials=50, seed=7).verdict


class TestVerifyAll:
    """Test cases for verify_all."""

    def test_hypercubic(self, spec, pattern):
        """With a pattern: main2, main3 and key."""
        report = verify_all(spec, pattern, trials=1, seed=2)
        assert [suite.name for suite in report.suites] == ["main2", "main3", "key"]
        assert report.verdict

    def test_without_pattern(self, spec):
        """Without a pattern only the key suite runs."""
        report = verify_all(spec, None, trials=1, seed=2)
        assert [suite.name for suite in report.suites] == ["key"]

    def test_triangular(self):
        """Triangular lattices run tri and key."""
        spec = LatticeSpec((2, 3), LatticeKind.TRIANGULAR)
        report = verify_all(spec, None, trials=1, seed=2)
        assert [suite.name for suite in report.suites] == ["tri", "key"]
        assert report.verdict

    def test_tolerance_reaches_every_suite(self, spec, pattern):
        """An explicit tolerance is passed on to each sub-suite."""
        with patch('src.rigidity.verify_thm_main2', wraps=verify_thm_main2) as main2, \
                patch('src.rigidity.verify_thm_main3', wraps=verify_thm_main3) as main3, \
                patch('src.rigidity.verify_key_suite', wraps=verify_key_suite) as key:
            verify_all(spec, pattern, trials=1, seed=2, tol=1e-3)
        for suite in (main2, main3, key):
            assert suite.call_args.args[-1] == 1e-3

    def test_summary_lists_suites(self, spec, pattern):
        """The text summary nests each suite under the header line."""
        text = verify_all(spec, pattern, trials=1, seed=2).summary_text()
        assert text.startswith("all on (2, 3)")
        assert "main3 on (2, 3)" in text
