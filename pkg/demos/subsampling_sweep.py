# How many nodes can you drop before the detector loses the defects?
#
# Reruns the small three-inclusion scenario under random node masks at a
# handful of retention ratios and prints the averaged scores, plus the
# deterministic double-cross patterns for comparison.  Everything is seeded,
# so two runs print the same table.

import time

from wavesaliency.config import bundled_config_path, load_scenario
from wavesaliency.pipeline import run_detection
from wavesaliency.sampling import (
    GroundTruth,
    detection_metrics,
    monte_carlo_sweep,
)
from wavesaliency.sim import simulate

RATIOS = [0.5, 0.33, 0.2, 0.1, 0.07]
TRIALS = 50

scenario = load_scenario(bundled_config_path("bench1_ci"))
cube = simulate(
    scenario.material,
    list(scenario.defects),
    scenario.excitation,
    scenario.grid.n1,
    scenario.grid.n2,
    scenario.grid.steps,
    scenario.grid.safety,
    record_every=scenario.grid.record_every,
    space_order=scenario.grid.space_order,
)
partition = scenario.partition()
config = scenario.detection_config()
truth = GroundTruth.from_defects(list(scenario.defects), partition)

full = detection_metrics(
    run_detection(cube, partition, config).flagged, truth, partition
)
print(f"full sampling: {full.regionally_discovered} of {len(truth.regions)} "
      f"defects regionally discovered, {full.false_discoveries} false")

t0 = time.perf_counter()
rows = monte_carlo_sweep(
    cube, partition, config, RATIOS, TRIALS, scenario.seed, truth=truth
)
print(f"\n{TRIALS} random masks per ratio "
      f"({time.perf_counter() - t0:.1f} s):")
print("  keep   regional correct   false")
for row in rows:
    print(f"  {row.nz:4.0%}   {row.regional_correct:5.2f} "
          f"+- {row.regional_correct_se:4.2f}       {row.false:5.2f}")

print("\ndouble-cross patterns (deterministic, one run each):")
for stride in (1, 2, 4):
    crows = monte_carlo_sweep(
        cube, partition, config, [], 1, scenario.seed,
        truth=truth, pattern="cross", stride=stride,
    )
    row = crows[0]
    print(f"  stride {stride} (keep {row.nz:5.1%}):   "
          f"{row.regional_correct:.0f} regionally correct, "
          f"{row.false:.0f} false")
