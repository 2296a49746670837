"""Region partition and time-of-flight window extraction.

The node grid is partitioned into square regions that share their boundary
rows and columns, so a grid of n1 x n2 nodes splits into r1 x r2 regions of
p1 x p2 nodes each with p1 = (n1 - 1) / r1 + 1.  Each region is assigned a
short time window opening at the moment the excitation burst's envelope
center is expected to reach the region centroid, computed from an estimated
group velocity; this aligns the wave "state" seen by every region.  Regions
whose window overruns the recording, or whose windowed signal is numerically
silent, are flagged inactive.

Region (a, b) covers nodes l in [a*(p1-1), a*(p1-1) + p1 - 1] and likewise
for m; regions are enumerated x-fastest, j = a + regions_x * b.  Inside a
region, nodes are flattened x-fastest as well: i = local_l + p1 * local_m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import hilbert

from .cube import DataCube, GridPoint
from .errors import (
    NoSignalError,
    PartitionError,
    VelocityEstimateError,
    WindowingError,
)
from .sim import ExcitationSpec

DEFAULT_WINDOW_LEN = 11

# A windowed region whose RMS falls at or below this fraction of the cube's
# peak amplitude carries no usable signal.
SILENCE_FLOOR = 1e-12

# An envelope sample must reach this fraction of the history's peak envelope
# before it can be considered part of the first-arriving packet; late
# reverberation can rival the direct wave in amplitude but, by the triangle
# inequality, never precedes it.
FIRST_ARRIVAL_FRACTION = 0.2


@dataclass(frozen=True)
class Partition:
    """Split of an n1 x n2 node grid into regions with shared boundaries."""

    n1: int
    n2: int
    regions_x: int
    regions_y: int

    def __post_init__(self):
        for n, r, axis in ((self.n1, self.regions_x, "x"),
                           (self.n2, self.regions_y, "y")):
            if r < 1:
                raise PartitionError(f"region count along {axis} must be >= 1")
            if (n - 1) % r != 0:
                raise PartitionError(
                    f"cannot split {n} nodes into {r} regions along {axis}: "
                    f"{n - 1} intervals not divisible by {r}"
                )
            if (n - 1) // r < 1:
                raise PartitionError(
                    f"regions along {axis} would collapse to a single node"
                )

    @property
    def p1(self) -> int:
        """Nodes per region along x."""
        return (self.n1 - 1) // self.regions_x + 1

    @property
    def p2(self) -> int:
        """Nodes per region along y."""
        return (self.n2 - 1) // self.regions_y + 1

    @property
    def region_count(self) -> int:
        return self.regions_x * self.regions_y

    @property
    def nodes_per_region(self) -> int:
        return self.p1 * self.p2

    def node_origin(self, a: int, b: int) -> tuple[int, int]:
        """Lowest (l, m) node of region (a, b)."""
        if not (0 <= a < self.regions_x and 0 <= b < self.regions_y):
            raise IndexError(f"region ({a}, {b}) outside partition")
        return (a * (self.p1 - 1), b * (self.p2 - 1))

    def centroid(self, a: int, b: int, dx: float) -> tuple[float, float]:
        """Physical (x, y) center of region (a, b) in meters."""
        l0, m0 = self.node_origin(a, b)
        return ((l0 + (self.p1 - 1) / 2.0) * dx,
                (m0 + (self.p2 - 1) / 2.0) * dx)

    def region_of_cell(self, cell_l: int, cell_m: int) -> tuple[int, int]:
        """Region containing a material cell (cells never straddle regions)."""
        if not (0 <= cell_l < self.n1 - 1 and 0 <= cell_m < self.n2 - 1):
            raise IndexError(f"cell ({cell_l}, {cell_m}) outside grid")
        return (cell_l // (self.p1 - 1), cell_m // (self.p2 - 1))

    def region_ids(self) -> list[tuple[int, int]]:
        """All (a, b) pairs in column order (a fastest)."""
        return [(a, b) for b in range(self.regions_y)
                for a in range(self.regions_x)]


def make_partition(n1: int, n2: int, regions_x: int, regions_y: int) -> Partition:
    """Build a shared-boundary partition; PartitionError if counts don't divide."""
    return Partition(n1=n1, n2=n2, regions_x=regions_x, regions_y=regions_y)


def region_centroid(partition: Partition, a: int, b: int, dx: float) -> tuple[float, float]:
    """Physical center of region (a, b); IndexError when out of range."""
    return partition.centroid(a, b, dx)


@dataclass(frozen=True)
class ProbePair:
    """Two recording nodes used to estimate the propagation speed.

    The pair is meant to sit on a common ray from the source so that the
    straight-line separation equals the extra distance the wave travels.
    """

    first: GridPoint
    second: GridPoint

    def __post_init__(self):
        if self.first == self.second:
            raise ValueError("probes must be distinct nodes")

    def separation(self, dx: float) -> float:
        """Straight-line distance between the probes in meters."""
        return float(
            np.hypot(self.second.l - self.first.l, self.second.m - self.first.m)
        ) * dx


def effective_source(source: GridPoint, n1: int, n2: int) -> GridPoint:
    """Node that actually radiates: the source clamped inside the pinned rim.

    A transverse force applied on a simply supported edge node does no work,
    so the simulator drives the nearest interior node; distance computations
    here must agree with that.
    """
    return GridPoint(
        l=min(max(source.l, 1), n1 - 2),
        m=min(max(source.m, 1), n2 - 2),
    )


def first_envelope_peak_time(signal: np.ndarray, dt: float) -> float:
    """Arrival time of the first envelope crest, with parabolic refinement.

    The envelope is the magnitude of the analytic signal.  The global
    maximum is not trusted: in a closed plate the late reverberant field can
    out-peak the direct packet.  Instead the first sample exceeding
    ``FIRST_ARRIVAL_FRACTION`` of the envelope peak is located and the climb
    is followed to the first local crest, which belongs to the earliest
    arriving packet.
    """
    env = np.abs(hilbert(np.asarray(signal, dtype=np.float64)))
    peak = float(np.max(env))
    if peak <= 0.0:
        raise NoSignalError("cannot locate an envelope peak in a silent history")
    threshold = FIRST_ARRIVAL_FRACTION * peak
    n = len(env)
    idx = None
    # Endpoints are excluded: the analytic-signal envelope carries edge
    # artifacts there, and a crest cannot be confirmed one-sided anyway.
    for i in range(1, n - 1):
        if env[i] < threshold:
            continue
        if env[i] >= env[i - 1] and env[i] > env[i + 1]:
            idx = i
            break
    if idx is None:  # monotone rise to the last sample
        idx = n - 1
    t = float(idx)
    if 0 < idx < n - 1:
        a, b, c = env[idx - 1], env[idx], env[idx + 1]
        denom = a - 2.0 * b + c
        if denom != 0.0:
            t += 0.5 * (a - c) / denom
    return t * dt


def estimate_group_velocity(cube: DataCube, probes: ProbePair) -> float:
    """Packet speed from envelope-crest arrivals at two probes.

    Each probe history is reduced to the arrival time of its first envelope
    crest; the speed is the probe separation over the arrival-time
    difference (second minus first).

    Raises:
        NoSignalError: the cube or a probe history is numerically silent.
        VelocityEstimateError: the second probe's crest does not come later
            than the first's.
    """
    probes.first.validate(cube.n1, cube.n2)
    probes.second.validate(cube.n1, cube.n2)

    peak_all = float(np.max(np.abs(cube.values)))
    if peak_all == 0.0:
        raise NoSignalError("recorded field is identically zero")

    times = []
    for probe in (probes.first, probes.second):
        h = cube.history(probe)
        if float(np.max(np.abs(h))) <= SILENCE_FLOOR * peak_all:
            raise NoSignalError(
                f"probe at (l={probe.l}, m={probe.m}) recorded no signal"
            )
        times.append(first_envelope_peak_time(h, cube.dt))

    delta_t = times[1] - times[0]
    if delta_t <= 0.0:
        raise VelocityEstimateError(
            f"second probe's envelope crest ({times[1]:.3e} s) does not "
            f"trail the first's ({times[0]:.3e} s)"
        )
    return float(probes.separation(cube.dx) / delta_t)


def arrival_time(
    centroid_distance: float,
    group_velocity: float,
    excitation: ExcitationSpec,
) -> float:
    """Expected envelope-center arrival: transit time plus half the burst.

    t_c = d / c_g + N_c / (2 nu)
    """
    if group_velocity <= 0.0:
        raise ValueError("group velocity must be positive")
    if centroid_distance < 0.0:
        raise ValueError("distance must be non-negative")
    return centroid_distance / group_velocity + excitation.burst_duration / 2.0


@dataclass(frozen=True)
class RegionalWindowSet:
    """Per-region time windows extracted from a cube.

    ``windows`` has shape (window_len, p1 * p2, region_count); column j
    holds region (a, b) with j = a + regions_x * b, rows flattened
    x-fastest.  Columns of inactive regions are zero and are never
    presented as data.  ``arrival_index`` holds each window's first stored
    sample index (recorded for inactive regions too, where it may lie
    outside the record).
    """

    partition: Partition
    window_len: int
    group_velocity: float
    dt: float
    arrival_index: np.ndarray = field(repr=False)
    active: np.ndarray = field(repr=False)
    windows: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("arrival_index", "active", "windows"):
            getattr(self, name).flags.writeable = False

    @property
    def active_count(self) -> int:
        return int(np.count_nonzero(self.active))

    def active_region_ids(self) -> list[tuple[int, int]]:
        """(a, b) of active regions in column order."""
        return [(a, b) for (a, b) in self.partition.region_ids()
                if self.active[a, b]]

    def column_index(self, a: int, b: int) -> int:
        return a + self.partition.regions_x * b


def extract_windows(
    cube: DataCube,
    partition: Partition,
    group_velocity: float,
    excitation: ExcitationSpec,
    window_len: int = DEFAULT_WINDOW_LEN,
) -> RegionalWindowSet:
    """Cut one window per region, opening at its expected arrival.

    The window for region (a, b) starts at the stored sample nearest
    t_c = |centroid - source| / c_g + T_b / 2 (round to nearest) and runs
    ``window_len`` samples.  A region is active when that range lies fully
    inside the record and its windowed RMS exceeds ``SILENCE_FLOOR`` times
    the cube's peak amplitude.

    Raises:
        PartitionError: partition grid does not match the cube.
        WindowingError: invalid window length, or no region ends up active.
    """
    if partition.n1 != cube.n1 or partition.n2 != cube.n2:
        raise PartitionError(
            f"partition is for {partition.n1} x {partition.n2} nodes, "
            f"cube has {cube.n1} x {cube.n2}"
        )
    if window_len < 1:
        raise WindowingError(f"window length must be >= 1, got {window_len}")
    if window_len > cube.t_len:
        raise WindowingError(
            f"window length {window_len} exceeds the {cube.t_len}-sample record"
        )
    if group_velocity <= 0.0:
        raise ValueError("group velocity must be positive")

    src = effective_source(excitation.source, cube.n1, cube.n2)
    sx, sy = src.position(cube.dx)
    r1, r2 = partition.regions_x, partition.regions_y
    p1, p2 = partition.p1, partition.p2

    arrival = np.zeros((r1, r2), dtype=np.int64)
    active = np.zeros((r1, r2), dtype=bool)
    windows = np.zeros((window_len, p1 * p2, r1 * r2))
    peak_all = float(np.max(np.abs(cube.values)))

    for b in range(r2):
        for a in range(r1):
            cx, cy = partition.centroid(a, b, cube.dx)
            t_c = arrival_time(
                float(np.hypot(cx - sx, cy - sy)), group_velocity, excitation
            )
            start = int(round(t_c / cube.dt))
            arrival[a, b] = start
            if start < 0 or start + window_len > cube.t_len:
                continue
            l0, m0 = partition.node_origin(a, b)
            block = cube.values[start:start + window_len,
                                m0:m0 + p2, l0:l0 + p1]
            flat = block.reshape(window_len, p1 * p2)
            rms = float(np.sqrt(np.mean(flat * flat)))
            if rms <= SILENCE_FLOOR * peak_all:
                continue
            active[a, b] = True
            windows[:, :, a + r1 * b] = flat

    if not active.any():
        raise WindowingError(
            "no region has a usable window inside the recorded interval"
        )
    return RegionalWindowSet(
        partition=partition,
        window_len=window_len,
        group_velocity=group_velocity,
        dt=cube.dt,
        arrival_index=arrival,
        active=active,
        windows=windows,
    )
