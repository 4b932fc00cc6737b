#!/usr/bin/env python3
"""Demo: build a Floquet-isospectral pair of separable potentials and compare them."""
import sys
from pathlib import Path

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.charpoly import component_charpolys, invariant_report
from src.config import Config
from src.lattice import LatticeSpec
from src.potential import SeparabilityPattern, dft, is_separable
from src.rigidity import generate_pair


def main():
    periods = LatticeSpec.parse_periods(sys.argv[1]) if len(sys.argv) > 1 else (2, 3)
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else Config.FLOQUET_SEED
    spec = LatticeSpec(periods)
    pattern = SeparabilityPattern.complete(spec)

    print(f"Per-block moves of a separable potential on {spec.periods}, seed {seed}")
    print("=" * 50)
    pair = generate_pair(spec, pattern, seed, mode="b")
    print(f"Moves: {', '.join(pair.moves)}")
    print(f"Isospectral: {pair.result.accepted} (relative residual {pair.result.relative_residual:.2e})")
    for name, W in (("V", pair.V), ("Y", pair.Y)):
        verdict = is_separable(dft(W), pattern)
        print(f"  {name} separable: {verdict.separable} (largest cross coefficient {verdict.magnitude:.2e})")

    report = invariant_report(pair.V, pair.Y, pattern, g55_samples=50, seed=seed)
    for key, value in report.residuals.items():
        print(f"  {key:>6}: {value:.2e}")

    # Component polynomials agree block by block
    for j, (pv, py) in enumerate(zip(component_charpolys(pair.V, pattern), component_charpolys(pair.Y, pattern))):
        print(f"  block {j + 1}: {len(pv)} terms, gap {pv.distance(py):.2e}")
    print("Done.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
