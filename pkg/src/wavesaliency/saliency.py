"""Low-rank background removal and per-region saliency scoring.

At each window offset tau, the regional windows are stacked into a snapshot
matrix whose columns are regions and whose rows are (possibly subsampled)
in-region node samples.  Because every region sees nearly the same burst,
just shifted to its own transit window, the matrix is close to low rank;
regions whose response deviates from the shared pattern — i.e. defective
ones — stick out of the best rank-r subspace.  A region's outlier energy is
the squared norm of its column of the residual left after subtracting the
rank-r part, and its saliency is the fraction of window offsets at which
that energy exceeds a fixed ratio of the snapshot's peak energy.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .windowing import RegionalWindowSet

DEFAULT_ENERGY_RATIO = 0.25
DEFAULT_DECISION_THRESHOLD = 0.5

# Relative floor below which singular values / residual energies are treated
# as numerically zero.
_TINY = 1e-12


@dataclass(frozen=True)
class SnapshotMatrix:
    """One tau-offset slice across all active regions.

    ``values`` is (row_dim, active_region_count); column j belongs to region
    ``column_labels[j]``.
    """

    values: np.ndarray = field(repr=False)
    column_labels: list[tuple[int, int]]
    tau: int

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("snapshot matrix must be 2-D")
        if self.values.shape[1] != len(self.column_labels):
            raise ValueError("one region label required per column")
        if len(set(self.column_labels)) != len(self.column_labels):
            raise ValueError("column labels must be unique")
        self.values.flags.writeable = False

    @property
    def row_dim(self) -> int:
        return self.values.shape[0]


def _rows_from_mask(mask, window_set: RegionalWindowSet, n_active: int):
    """Normalize the ``mask`` argument to row indices (or None).

    Accepts None, a precomputed 1-D/2-D integer index array, or any object
    with a ``row_indices(p1, p2, region_count)`` method (the sampling
    masks), which may return shared (1-D) or per-region (2-D) indices.
    """
    if mask is None:
        return None
    if isinstance(mask, np.ndarray):
        return mask
    part = window_set.partition
    return mask.row_indices(part.p1, part.p2, n_active)


def assemble_snapshot_matrix(
    window_set: RegionalWindowSet,
    tau: int,
    mask=None,
) -> SnapshotMatrix:
    """Stack the tau-th sample of every active region's window into columns.

    Columns are vectorized x-fastest and ordered by region index
    (a + regions_x * b); inactive regions are excluded entirely.  With a
    mask, only the masked node positions are kept, shrinking the row count;
    a 2-D index array (or a per-region sampling mask) gives each column its
    own positions.
    """
    if not 0 <= tau < window_set.window_len:
        raise IndexError(
            f"tau {tau} outside window of length {window_set.window_len}"
        )
    ids = window_set.active_region_ids()
    cols = [window_set.column_index(a, b) for a, b in ids]
    full = window_set.windows[tau][:, cols]
    rows = _rows_from_mask(mask, window_set, len(cols))
    if rows is None:
        picked = full
    else:
        rows = np.asarray(rows)
        if rows.size == 0:
            raise ValueError("mask retains no node positions")
        if rows.min() < 0 or rows.max() >= full.shape[0]:
            raise ValueError(
                f"mask indexes node {int(rows.max())} outside the "
                f"{full.shape[0]}-node region"
            )
        if rows.ndim == 1:
            picked = full[rows, :]
        elif rows.ndim == 2:
            if rows.shape[1] != len(cols):
                raise ValueError(
                    f"per-region row sets cover {rows.shape[1]} regions, "
                    f"but {len(cols)} are active"
                )
            picked = np.take_along_axis(full, rows, axis=0)
        else:
            raise ValueError("row indices must be 1-D (shared) or 2-D (per-region)")
    return SnapshotMatrix(values=np.array(picked), column_labels=ids, tau=tau)


def knee_rank(singular_values) -> int:
    """Rank at the knee of a singular-value spectrum (1-based).

    The spectrum is viewed on a log scale (floored at 1e-12 of the largest
    value), a chord is drawn from the first to the last value, and the knee
    is the point lying farthest ABOVE the chord.  Points below the chord
    never win: a cliff just after the knee dips far under the chord and
    must not drag the pick past the drop.  If no point rises above the
    chord, the rank is 1.
    """
    s = np.asarray(singular_values, dtype=np.float64).ravel()
    if s.size < 3:
        raise ValueError(
            f"degenerate spectrum: need at least 3 singular values, got {s.size}"
        )
    if np.any(s < 0.0) or not np.isfinite(s).all():
        raise ValueError("singular values must be finite and non-negative")
    s = np.sort(s)[::-1]
    if s[0] == 0.0:
        raise ValueError("all-zero spectrum has no knee")
    y = np.log10(np.maximum(s, s[0] * _TINY))
    n = s.size
    x = np.arange(n, dtype=np.float64)
    # Signed vertical deviation from the chord; positive = above.  The
    # argmax is shared with the perpendicular distance, which only rescales
    # by the chord length.
    chord = y[0] + (y[-1] - y[0]) * x / (n - 1)
    above = y - chord
    if np.max(above) <= 0.0:
        return 1
    return int(np.argmax(above)) + 1


@dataclass(frozen=True)
class LowRankSplit:
    """Rank-r background plus outlier remainder of one snapshot matrix."""

    low_rank: np.ndarray = field(repr=False)
    outliers: np.ndarray = field(repr=False)
    rank_used: int
    singular_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("low_rank", "outliers", "singular_values"):
            getattr(self, name).flags.writeable = False


def truncated_low_rank(matrix, rank_used: int) -> LowRankSplit:
    """Best rank-r split of a matrix (Frobenius-optimal truncated SVD)."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    limit = min(m.shape)
    if not 1 <= rank_used <= limit:
        raise ValueError(f"rank must be in [1, {limit}], got {rank_used}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    low_rank = (u[:, :rank_used] * s[:rank_used]) @ vt[:rank_used]
    return LowRankSplit(
        low_rank=low_rank,
        outliers=m - low_rank,
        rank_used=rank_used,
        singular_values=s,
    )


def outlier_energies(split: LowRankSplit) -> np.ndarray:
    """Squared Euclidean norm of each column of the outlier remainder."""
    c = split.outliers
    return np.sum(c * c, axis=0)


def salient_columns(energies, ratio: float = DEFAULT_ENERGY_RATIO) -> np.ndarray:
    """Columns whose energy strictly exceeds ratio * max energy.

    The comparison is strict, so at ratio 1.0 even the maximum itself is
    not selected, and an all-zero energy vector selects nothing.
    """
    e = np.asarray(energies, dtype=np.float64)
    if e.size == 0:
        raise ValueError("empty energy list")
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    peak = float(np.max(e))
    if peak <= 0.0:
        return np.zeros(e.shape, dtype=bool)
    return e > ratio * peak


@dataclass(frozen=True)
class SaliencyMap:
    """Fraction of window offsets at which each region was an outlier.

    ``fractions`` is (regions_x, regions_y) with NaN marking inactive
    regions.  ``singular_values`` is the tau = 0 spectrum the rank choice
    was based on.
    """

    fractions: np.ndarray = field(repr=False)
    active: np.ndarray = field(repr=False)
    rank_used: int
    ratio: float
    window_len: int
    singular_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("fractions", "active", "singular_values"):
            getattr(self, name).flags.writeable = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.fractions.shape

    def classify(self, threshold: float = DEFAULT_DECISION_THRESHOLD) -> np.ndarray:
        """Defect verdict per region: saliency fraction >= threshold.

        Inactive regions are never flagged.
        """
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {threshold}")
        with np.errstate(invalid="ignore"):
            return np.where(self.active, self.fractions >= threshold, False)

    def flagged_regions(self, threshold: float = DEFAULT_DECISION_THRESHOLD) -> list[tuple[int, int]]:
        """Sorted (a, b) list of regions meeting the threshold."""
        verdict = self.classify(threshold)
        return [tuple(idx) for idx in np.argwhere(verdict)]


def classify(sal: SaliencyMap, threshold: float = DEFAULT_DECISION_THRESHOLD) -> set[tuple[int, int]]:
    """Flagged regions as a set of (a, b) indices."""
    return set(sal.flagged_regions(threshold))


def saliency_map(
    window_set: RegionalWindowSet,
    rank: int | str = "auto",
    ratio: float = DEFAULT_ENERGY_RATIO,
    mask=None,
) -> SaliencyMap:
    """Score every region by how often it escapes the shared low-rank model.

    One rank is used for all window offsets: either the given integer or,
    for ``rank="auto"``, the knee of the tau = 0 snapshot's singular
    spectrum.  At each offset, a region is an outlier when its residual
    energy strictly exceeds ``ratio`` times that offset's peak energy; its
    saliency is the count of such offsets over the window length.

    A snapshot whose residual energies are all below the square of 1e-12
    times the leading singular value is treated as exactly reconstructed
    and contributes no outliers (guards the full-rank edge, where residuals
    are float dust).
    """
    part = window_set.partition
    first = assemble_snapshot_matrix(window_set, 0, mask)
    spectrum = np.linalg.svd(first.values, compute_uv=False)
    if rank == "auto":
        rank_used = knee_rank(spectrum)
    else:
        rank_used = int(rank)
    limit = min(first.values.shape)
    if not 1 <= rank_used <= limit:
        raise ValueError(
            f"rank {rank_used} outside [1, {limit}] for a "
            f"{first.values.shape[0]} x {first.values.shape[1]} snapshot"
        )

    dust = (float(spectrum[0]) * _TINY) ** 2
    counts = np.zeros(len(first.column_labels))
    for tau in range(window_set.window_len):
        snap = first if tau == 0 else assemble_snapshot_matrix(window_set, tau, mask)
        split = truncated_low_rank(snap.values, rank_used)
        energies = outlier_energies(split)
        if float(np.max(energies)) > dust:
            counts += salient_columns(energies, ratio)

    fractions = np.full((part.regions_x, part.regions_y), np.nan)
    for j, (a, b) in enumerate(first.column_labels):
        fractions[a, b] = counts[j] / window_set.window_len
    return SaliencyMap(
        fractions=fractions,
        active=np.array(window_set.active),
        rank_used=rank_used,
        ratio=ratio,
        window_len=window_set.window_len,
        singular_values=spectrum,
    )


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def write_saliency_csv(sal: SaliencyMap, destination) -> None:
    """Write the fraction grid as CSV: row a (x region), column b (y region).

    Inactive regions are written as ``NA``.
    """
    close = False
    if isinstance(destination, (str, Path)):
        handle = open(destination, "w", newline="")
        close = True
    else:
        handle = destination
    try:
        r1, r2 = sal.shape
        for a in range(r1):
            cells = [
                f"{sal.fractions[a, b]:.6f}" if sal.active[a, b] else "NA"
                for b in range(r2)
            ]
            handle.write(",".join(cells) + "\n")
    finally:
        if close:
            handle.close()


def saliency_csv_text(sal: SaliencyMap) -> str:
    buf = io.StringIO()
    write_saliency_csv(sal, buf)
    return buf.getvalue()


def write_saliency_pgm(sal: SaliencyMap, path) -> None:
    """Write an ASCII PGM heat map plus an activity-mask sidecar.

    Pixel (row b, column a) is round(255 * fraction); inactive regions are
    forced to 255 and distinguished through ``<stem>.mask.pgm`` (255 =
    active, 0 = inactive).
    """
    path = Path(path)
    r1, r2 = sal.shape

    def dump(target: Path, value_of) -> None:
        lines = ["P2", f"{r1} {r2}", "255"]
        for b in range(r2):
            lines.append(" ".join(str(value_of(a, b)) for a in range(r1)))
        target.write_text("\n".join(lines) + "\n")

    def shade(a: int, b: int) -> int:
        if not sal.active[a, b]:
            return 255
        return int(round(255.0 * sal.fractions[a, b]))

    dump(path, shade)
    dump(path.with_suffix(".mask.pgm"),
         lambda a, b: 255 if sal.active[a, b] else 0)
