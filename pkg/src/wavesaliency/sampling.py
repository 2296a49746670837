"""Spatial subsampling masks, detection scoring, and the Monte Carlo sweep.

A mask selects which of a region's p1 x p2 nodes feed the snapshot matrix.
Random masks draw a fixed-size node subset from a seeded generator; the
double-cross mask is deterministic: the middle row, middle column and both
diagonals, optionally thinned by a stride anchored at the center node.

By default one pattern is shared by every region (columns of the snapshot
matrix then live in a common coordinate system, which is what makes a
shared low-rank subspace meaningful); per-region patterns exist behind the
``sharing`` flag for fidelity experiments.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cube import DataCube
from .errors import GeometryError, MaskError
from .pipeline import DetectionConfig, run_detection
from .sim import DefectSpec, defect_cells
from .windowing import Partition

SHARED = "shared"
PER_REGION = "per_region"

MIN_RETAINED = 4


@dataclass(frozen=True)
class Mask:
    """Retained node positions within one p1 x p2 region.

    ``grid[l, m]`` is True for a kept node.  ``kind`` records provenance
    ("random" with ``seed``, or "double_cross" with ``stride``).  With
    ``sharing == PER_REGION`` the grid shows the first region's pattern and
    ``row_indices`` derives an independent same-size pattern per region
    from the same seed stream.
    """

    grid: np.ndarray = field(repr=False)
    kind: str
    sharing: str = SHARED
    seed: int | None = None
    stride: int | None = None

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.ndim != 2 or g.dtype != np.bool_:
            raise MaskError("mask grid must be a 2-D boolean array")
        if self.sharing not in (SHARED, PER_REGION):
            raise MaskError(f"unknown sharing mode {self.sharing!r}")
        if self.sharing == PER_REGION and self.seed is None:
            raise MaskError("per-region sharing needs a seed to derive patterns")
        kept = int(np.count_nonzero(g))
        if kept < MIN_RETAINED:
            raise MaskError(
                f"mask keeps {kept} node(s); at least {MIN_RETAINED} required"
            )
        g.flags.writeable = False

    @property
    def retained_count(self) -> int:
        return int(np.count_nonzero(self.grid))

    @property
    def achieved_ratio(self) -> float:
        return self.retained_count / self.grid.size

    def flat_indices(self) -> np.ndarray:
        """Sorted snapshot-row indices (x-fastest node flattening)."""
        return np.flatnonzero(self.grid.ravel(order="F"))

    def row_indices(self, p1: int, p2: int, region_count: int) -> np.ndarray:
        """Row selections for the snapshot assembler.

        Returns a sorted 1-D index vector when one pattern is shared, or a
        (retained, region_count) array giving every region its own column of
        row indices when ``sharing == PER_REGION``.
        """
        if self.grid.shape != (p1, p2):
            raise MaskError(
                f"mask built for {self.grid.shape[0]}x{self.grid.shape[1]} "
                f"regions cannot be applied to {p1}x{p2} regions"
            )
        if self.sharing == SHARED:
            return self.flat_indices()
        k = self.retained_count
        rng = np.random.default_rng(self.seed)
        cols = [
            np.sort(rng.permutation(p1 * p2)[:k]) for _ in range(region_count)
        ]
        return np.stack(cols, axis=1)


def random_mask(
    p1: int,
    p2: int,
    target_ratio: float,
    seed: int,
    sharing: str = SHARED,
) -> Mask:
    """Uniform node subset of exactly round(target_ratio * p1 * p2) positions.

    Pure function of its arguments: the same seed always yields the same
    mask.  The grid records the first pattern drawn from the seed, which in
    PER_REGION mode is exactly region 0's pattern.
    """
    if not 0.0 < target_ratio <= 1.0:
        raise MaskError(f"target ratio must be in (0, 1], got {target_ratio}")
    total = p1 * p2
    kept = int(round(target_ratio * total))
    if kept < MIN_RETAINED:
        raise MaskError(
            f"target ratio {target_ratio} keeps only {kept} of {total} "
            f"nodes; at least {MIN_RETAINED} required"
        )
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.permutation(total)[:kept])
    grid = np.zeros((p1, p2), dtype=bool)
    grid[np.unravel_index(flat, (p1, p2), order="F")] = True
    return Mask(grid=grid, kind="random", sharing=sharing, seed=seed)


def double_cross_mask(p1: int, p2: int, stride: int = 1) -> Mask:
    """Middle row + middle column + both diagonals, thinned by ``stride``.

    Thinning keeps every stride-th index counted from the center, so the
    center node always survives and the pattern stays symmetric.  Requires
    a square region with odd side (the center must be a node).
    """
    if p1 != p2:
        raise GeometryError(
            f"double cross needs a square region, got {p1}x{p2}"
        )
    if p1 % 2 == 0:
        raise GeometryError(
            f"double cross needs an odd region side (a center node), got {p1}"
        )
    if stride not in (1, 2, 4):
        raise ValueError(f"stride must be 1, 2 or 4, got {stride}")
    p = p1
    center = (p - 1) // 2
    idx = np.array([i for i in range(p) if (i - center) % stride == 0])
    grid = np.zeros((p, p), dtype=bool)
    grid[idx, center] = True          # middle column of each row => y-axis line
    grid[center, idx] = True          # middle row line
    grid[idx, idx] = True             # main diagonal
    grid[idx, p - 1 - idx] = True     # anti-diagonal
    return Mask(grid=grid, kind="double_cross", sharing=SHARED, stride=stride)


# ---------------------------------------------------------------------------
# Ground truth and scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruth:
    """Regions that genuinely contain an anomaly, for a given partition."""

    regions: frozenset[tuple[int, int]]

    @classmethod
    def from_defects(
        cls,
        defects: list[DefectSpec],
        partition: Partition,
    ) -> "GroundTruth":
        hit = set()
        for defect in defects:
            for cl, cm in defect_cells(defect, partition.n1, partition.n2):
                hit.add(partition.region_of_cell(cl, cm))
        return cls(regions=frozenset(hit))

    def validate(self, partition: Partition) -> None:
        for a, b in self.regions:
            if not (0 <= a < partition.regions_x and 0 <= b < partition.regions_y):
                raise ValueError(f"truth region ({a}, {b}) outside partition")


@dataclass(frozen=True)
class DetectionMetrics:
    """Scorecard of one flagged set against the ground truth.

    correct/false partition the flagged set by exact membership;
    regionally_discovered counts true anomalies with a flag on themselves or
    an 8-neighbor; regional_false counts flags at Chebyshev distance >= 2
    from every truth region; origin_false counts false flags inside the 3x3
    region block nearest the excitation corner.
    """

    correct_discoveries: int
    false_discoveries: int
    regionally_discovered: int
    regional_false: int
    origin_false: int

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (
            self.correct_discoveries,
            self.false_discoveries,
            self.regionally_discovered,
            self.regional_false,
            self.origin_false,
        )


def _chebyshev(p: tuple[int, int], q: tuple[int, int]) -> int:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


def origin_block(partition: Partition, source_corner: tuple[int, int]) -> set[tuple[int, int]]:
    """The 3x3 block of regions nearest the excitation corner."""

    def axis_range(corner: int, count: int) -> range:
        if not 0 <= corner < count:
            raise ValueError(f"corner index {corner} outside 0..{count - 1}")
        lo = min(max(corner - 1, 0), max(count - 3, 0))
        return range(lo, min(lo + 3, count))

    xs = axis_range(source_corner[0], partition.regions_x)
    ys = axis_range(source_corner[1], partition.regions_y)
    return {(a, b) for a in xs for b in ys}


def detection_metrics(
    flagged,
    truth: GroundTruth,
    partition: Partition,
    source_corner: tuple[int, int] = (0, 0),
) -> DetectionMetrics:
    """Score a flagged-region set; see DetectionMetrics for the definitions."""
    flagged = {(int(a), int(b)) for a, b in flagged}
    truth.validate(partition)
    for a, b in flagged:
        if not (0 <= a < partition.regions_x and 0 <= b < partition.regions_y):
            raise ValueError(f"flagged region ({a}, {b}) outside partition")

    truths = truth.regions
    correct = len(flagged & truths)
    false = len(flagged - truths)
    regionally = sum(
        1 for t in truths if any(_chebyshev(f, t) <= 1 for f in flagged)
    )
    regional_false = sum(
        1 for f in flagged if all(_chebyshev(f, t) >= 2 for t in truths)
    )
    block = origin_block(partition, source_corner)
    origin_false = sum(1 for f in flagged - truths if f in block)
    return DetectionMetrics(
        correct_discoveries=correct,
        false_discoveries=false,
        regionally_discovered=regionally,
        regional_false=regional_false,
        origin_false=origin_false,
    )


# ---------------------------------------------------------------------------
# Monte Carlo sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    """Averaged metrics for one subsampling ratio."""

    nz: float
    correct: float
    false: float
    regional_correct: float
    regional_false: float
    origin_false: float
    trials: int
    seed: int
    # Standard error of the regionally-correct average; carried for trend
    # comparisons, not part of the CSV row format.
    regional_correct_se: float = 0.0


def monte_carlo_sweep(
    cube: DataCube,
    partition: Partition,
    config: DetectionConfig,
    ratios,
    trials: int,
    base_seed: int,
    *,
    truth: GroundTruth,
    source_corner: tuple[int, int] = (0, 0),
    pattern: str = "random",
    stride: int = 1,
    sharing: str = SHARED,
) -> list[SweepRow]:
    """Average detection metrics over seeded random masks, per ratio.

    Trial t of every ratio uses seed ``base_seed + t``, so a parallel
    implementation partitioned over trials would reproduce the exact same
    table.  ``pattern="cross"`` replaces the random masks with the single
    deterministic double-cross at ``stride`` (one output row; the ratio
    list is ignored and the achieved ratio is reported instead).
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if pattern not in ("random", "cross"):
        raise ValueError(f"unknown mask pattern {pattern!r}")

    # Velocity estimation and windowing depend only on the cube: do them once.
    base = run_detection(cube, partition, config)
    window_set = base.window_set

    def run_masked(mask: Mask) -> DetectionMetrics:
        result = run_detection(
            cube, partition, config, mask=mask, window_set=window_set
        )
        return detection_metrics(
            result.flagged, truth, partition, source_corner
        )

    p1, p2 = partition.p1, partition.p2
    rows: list[SweepRow] = []
    if pattern == "cross":
        mask = double_cross_mask(p1, p2, stride)
        scores = [run_masked(mask).as_tuple() for _ in range(trials)]
        rows.append(_average_row(mask.achieved_ratio, scores, trials, base_seed))
        return rows

    for ratio in ratios:
        scores = []
        for t in range(trials):
            mask = random_mask(p1, p2, float(ratio), base_seed + t, sharing)
            scores.append(run_masked(mask).as_tuple())
        rows.append(_average_row(float(ratio), scores, trials, base_seed))
    return rows


def _average_row(nz: float, scores, trials: int, seed: int) -> SweepRow:
    arr = np.asarray(scores, dtype=np.float64)
    means = arr.mean(axis=0)
    regional = arr[:, 2]
    se = float(regional.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return SweepRow(
        nz=nz,
        correct=float(means[0]),
        false=float(means[1]),
        regional_correct=float(means[2]),
        regional_false=float(means[3]),
        origin_false=float(means[4]),
        trials=trials,
        seed=seed,
        regional_correct_se=se,
    )


SWEEP_CSV_HEADER = [
    "nz", "correct", "false", "regional_correct", "regional_false",
    "origin_false", "trials", "seed",
]


def write_sweep_csv(rows: list[SweepRow], destination) -> None:
    """One row per ratio, fixed column order, 6-decimal averages."""
    close = False
    if isinstance(destination, (str, Path)):
        handle = open(destination, "w", newline="")
        close = True
    else:
        handle = destination
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for row in rows:
            writer.writerow([
                f"{row.nz:g}",
                f"{row.correct:.6f}",
                f"{row.false:.6f}",
                f"{row.regional_correct:.6f}",
                f"{row.regional_false:.6f}",
                f"{row.origin_false:.6f}",
                row.trials,
                row.seed,
            ])
    finally:
        if close:
            handle.close()


def sweep_csv_text(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    return buf.getvalue()
