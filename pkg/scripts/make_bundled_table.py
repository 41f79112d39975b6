"""Regenerate src/zbtest/data/critical_values.{csv,json}.

G1 and G2 over the full grid of sample sizes and tuning parameters, the
competitors at n = 20, 50, 100. 100 000 replications, master seed 20240917.
"""

import sys
import time
from pathlib import Path

from zbtest.montecarlo import (
    STANDARD_ALPHAS,
    STANDARD_SAMPLE_SIZES,
    STANDARD_TUNING_GRID,
    SimulationPlan,
    StatisticId,
    simulate_critical_values,
)

SEED = 20240917
REPS = 100_000

COMPETITORS = (StatisticId("bhep", 1.0), StatisticId("hjg", 2.5), StatisticId("hjg", 5.0),
               StatisticId("hjg", 10.0), StatisticId("bcmr"))


def main(out_dir: Path):
    start = time.time()
    main_plan = SimulationPlan(REPS, STANDARD_SAMPLE_SIZES, STANDARD_TUNING_GRID, STANDARD_ALPHAS, ("g1", "g2"), SEED)
    comp_plan = SimulationPlan(REPS, (20, 50, 100), (1.0,), STANDARD_ALPHAS, COMPETITORS, SEED)
    table = simulate_critical_values(main_plan).merge(simulate_critical_values(comp_plan))
    out_dir.mkdir(parents=True, exist_ok=True)
    table.write(out_dir / "critical_values.csv", "csv")
    table.write(out_dir / "critical_values.json", "json")
    print(f"{len(table.entries)} cells in {time.time() - start:.0f} s")


if __name__ == "__main__":
    root = Path(__file__).resolve().parents[1]
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else root / "src" / "zbtest" / "data")
