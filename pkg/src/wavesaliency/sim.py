"""Explicit finite-difference simulator for flexural waves in a thin plate.

The model is the Kirchhoff thin-plate equation for the transverse deflection
w(x, y, t) with spatially varying coefficients,

    rho_h(x,y) * w_tt + lap( D(x,y) * lap(w) ) = f(t) * delta(source),

with bending stiffness D = E h^3 / (12 (1 - nu^2)) and areal density
rho_h = rho h.  Edges are simply supported (w = 0 and lap(w) = 0), which the
two-stage Laplacian discretization enforces exactly through odd-image ghost
nodes.  Defects are injected by scaling E and rho inside individual cells of
the (n1-1) x (n2-1) cell grid.

Time stepping is central-difference (leapfrog).  The spatial Laplacian stages
are available at second order (the classical 13-point biharmonic stencil) or
fourth order (default); at the default grid resolution the second-order
stencil underestimates the group velocity of a 500 kHz packet by ~6%, which
the fourth-order stages reduce to below 1%.

Plane-wave dispersion for the continuous model:

    omega = sqrt(D / rho_h) * k^2
    c_p   = omega / k = (omega^2 * D / rho_h)^(1/4)
    c_g   = d omega / d k = 2 * c_p
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cube import DataCube, GridPoint
from .errors import DivergenceError, GeometryError

DEFAULT_SPACE_ORDER = 4


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialSpec:
    """Homogeneous plate material and geometry.

    Attributes:
        youngs_modulus: E in Pa.
        poisson_ratio: nu, dimensionless, in (0, 0.5).
        density: rho in kg/m^3.
        thickness: h in m.
        side_length: L in m; the plate is square, Lx = Ly = L.
    """

    youngs_modulus: float
    poisson_ratio: float
    density: float
    thickness: float
    side_length: float

    def __post_init__(self):
        for name in ("youngs_modulus", "density", "thickness", "side_length"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.poisson_ratio < 0.5:
            raise ValueError(
                f"poisson_ratio must be in (0, 0.5), got {self.poisson_ratio}"
            )

    @property
    def bending_stiffness(self) -> float:
        """Kirchhoff bending stiffness D = E h^3 / (12 (1 - nu^2)) in N*m."""
        e, h, nu = self.youngs_modulus, self.thickness, self.poisson_ratio
        return e * h**3 / (12.0 * (1.0 - nu * nu))

    @property
    def areal_density(self) -> float:
        """Mass per unit area rho * h in kg/m^2."""
        return self.density * self.thickness


@dataclass(frozen=True)
class ExcitationSpec:
    """Narrow-band out-of-plane point burst.

    Attributes:
        carrier_frequency: carrier in Hz.
        cycle_count: number of carrier cycles inside the burst envelope.
        amplitude: peak force scale in N.
        source: grid node receiving the force.
    """

    carrier_frequency: float
    cycle_count: float
    amplitude: float
    source: GridPoint

    def __post_init__(self):
        if self.carrier_frequency <= 0.0:
            raise ValueError("carrier_frequency must be positive")
        if self.cycle_count < 1:
            raise ValueError("cycle_count must be at least 1")

    @property
    def burst_duration(self) -> float:
        """Envelope support N_c / nu in seconds."""
        return self.cycle_count / self.carrier_frequency


@dataclass(frozen=True)
class DefectSpec:
    """A localized material alteration, in plate-fraction coordinates.

    ``geometry`` is ``(x, y)`` for a point inclusion or ``(xa, ya, xb, yb)``
    for a one-cell-thick line segment; all coordinates are fractions of the
    side length in [0, 1].  ``modulus_scale`` multiplies E and
    ``density_scale`` multiplies rho inside every affected cell.
    """

    kind: str
    geometry: tuple[float, ...]
    modulus_scale: float
    density_scale: float

    def __post_init__(self):
        if self.kind not in ("point_inclusion", "line_segment"):
            raise ValueError(f"unknown defect kind {self.kind!r}")
        want = 2 if self.kind == "point_inclusion" else 4
        if len(self.geometry) != want:
            raise ValueError(
                f"{self.kind} needs {want} geometry values, got {len(self.geometry)}"
            )
        if any(not 0.0 <= g <= 1.0 for g in self.geometry):
            raise GeometryError(
                f"defect geometry {self.geometry} outside the unit square"
            )
        if self.modulus_scale <= 0.0 or self.density_scale <= 0.0:
            raise ValueError("defect scale factors must be strictly positive")


@dataclass(frozen=True)
class MaterialMap:
    """Per-cell coefficients on the (n1-1) x (n2-1) cell grid.

    Arrays are indexed ``[cell_l, cell_m]`` (x index first) and hold the
    bending stiffness D in N*m and areal density rho*h in kg/m^2.
    """

    bending_stiffness: np.ndarray
    areal_density: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.bending_stiffness, dtype=np.float64)
        r = np.asarray(self.areal_density, dtype=np.float64)
        if d.shape != r.shape or d.ndim != 2:
            raise ValueError("coefficient grids must be 2-D and congruent")
        for name, arr in (("bending_stiffness", d), ("areal_density", r)):
            if not np.isfinite(arr).all() or (arr <= 0.0).any():
                raise ValueError(f"{name} must be strictly positive and finite")
        d.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "bending_stiffness", d)
        object.__setattr__(self, "areal_density", r)

    @property
    def cell_shape(self) -> tuple[int, int]:
        return self.bending_stiffness.shape


# ---------------------------------------------------------------------------
# Excitation
# ---------------------------------------------------------------------------

def burst_force(t, excitation: ExcitationSpec):
    """Force of the Hann-windowed burst at time t (scalar or array), in N.

    f(t) = A * sin^2(pi t / T_b) * sin(2 pi nu t) on [0, T_b], zero outside,
    with T_b = N_c / nu.
    """
    t = np.asarray(t, dtype=np.float64)
    t_b = excitation.burst_duration
    window = np.sin(np.pi * t / t_b) ** 2
    carrier = np.sin(2.0 * np.pi * excitation.carrier_frequency * t)
    out = np.where((t >= 0.0) & (t <= t_b),
                   excitation.amplitude * window * carrier, 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Material map construction
# ---------------------------------------------------------------------------

def defect_cells(defect: DefectSpec, n1: int, n2: int) -> set[tuple[int, int]]:
    """Cells ``(cell_l, cell_m)`` altered by one defect.

    A point inclusion alters the single cell containing its coordinate; a
    line segment alters every cell its ideal line passes through, one cell
    thick.  Coordinates landing exactly on a cell boundary are assigned to
    the higher-index cell (clamped at the plate edge).
    """
    cx, cy = n1 - 1, n2 - 1

    def cell_of(x: float, y: float) -> tuple[int, int]:
        return (min(int(x * cx), cx - 1), min(int(y * cy), cy - 1))

    if defect.kind == "point_inclusion":
        return {cell_of(*defect.geometry)}

    xa, ya, xb, yb = defect.geometry
    # Dense parametric walk; step well under half a cell so no crossed cell
    # is skipped.
    steps = 16 * max(cx, cy)
    ts = np.linspace(0.0, 1.0, steps + 1)
    cells = {
        cell_of(xa + t * (xb - xa), ya + t * (yb - ya)) for t in ts
    }
    return cells


def build_material_map(
    base: MaterialSpec,
    defects: list[DefectSpec],
    n1: int,
    n2: int,
) -> MaterialMap:
    """Rasterize defects onto the cell grid of a pristine plate."""
    if n1 < 2 or n2 < 2:
        raise ValueError("grid must be at least 2 x 2 nodes")
    d = np.full((n1 - 1, n2 - 1), base.bending_stiffness)
    rho_h = np.full((n1 - 1, n2 - 1), base.areal_density)
    for defect in defects:
        for cl, cm in defect_cells(defect, n1, n2):
            d[cl, cm] *= defect.modulus_scale
            rho_h[cl, cm] *= defect.density_scale
    return MaterialMap(bending_stiffness=d, areal_density=rho_h)


# ---------------------------------------------------------------------------
# Stability and dispersion
# ---------------------------------------------------------------------------

def _biharmonic_symbol_max(space_order: int) -> float:
    # Largest eigenvalue magnitude of the two-stage discrete biharmonic,
    # in units of 1/dx^4: the squared peak symbol of the Laplacian stage.
    if space_order == 2:
        return 8.0**2
    if space_order == 4:
        return (32.0 / 3.0) ** 2
    raise ValueError(f"space_order must be 2 or 4, got {space_order}")


def stable_timestep(
    material_map: MaterialMap,
    dx: float,
    safety: float,
    space_order: int = DEFAULT_SPACE_ORDER,
) -> float:
    """Largest stable leapfrog step, scaled by ``safety``.

    The central-difference scheme is stable for dt <= 2 / omega_max with
    omega_max = sqrt(D / rho_h) * s_max / dx^2, where s_max is the peak
    symbol of the Laplacian stage (8 at second order, 32/3 at fourth).
    Evaluated at the stiffest cell, i.e. the smallest rho_h / D ratio:

        dt = safety * (2 / s_max) * dx^2 * sqrt(min_cells rho_h / D)

    Safety factors above 1 deliberately exceed the limit; ``simulate`` then
    detects the blow-up and raises ``DivergenceError``.
    """
    if safety <= 0.0:
        raise ValueError(f"safety must be positive, got {safety}")
    ratio_min = float(
        np.min(material_map.areal_density / material_map.bending_stiffness)
    )
    s_max = math.sqrt(_biharmonic_symbol_max(space_order))
    return safety * (2.0 / s_max) * dx * dx * math.sqrt(ratio_min)


def analytic_phase_velocity(material: MaterialSpec, frequency: float) -> float:
    """Thin-plate flexural phase speed c_p = (omega^2 D / rho_h)^(1/4)."""
    if frequency <= 0.0:
        raise ValueError("frequency must be positive")
    omega = 2.0 * math.pi * frequency
    return (omega * omega * material.bending_stiffness / material.areal_density) ** 0.25


def analytic_group_velocity(material: MaterialSpec, frequency: float) -> float:
    """Thin-plate flexural group speed, exactly twice the phase speed."""
    return 2.0 * analytic_phase_velocity(material, frequency)


# ---------------------------------------------------------------------------
# Spatial operators
# ---------------------------------------------------------------------------

def _laplacian(f: np.ndarray, dx: float, order: int) -> np.ndarray:
    """Discrete Laplacian with odd-image (simply supported) ghost nodes."""
    if order == 2:
        p = np.pad(f, 1, mode="reflect", reflect_type="odd")
        return (
            p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * f
        ) / (dx * dx)
    p = np.pad(f, 2, mode="reflect", reflect_type="odd")
    c = p[2:-2, 2:-2]
    along_y = -p[:-4, 2:-2] + 16.0 * p[1:-3, 2:-2] + 16.0 * p[3:-1, 2:-2] - p[4:, 2:-2]
    along_x = -p[2:-2, :-4] + 16.0 * p[2:-2, 1:-3] + 16.0 * p[2:-2, 3:-1] - p[2:-2, 4:]
    return (along_y + along_x - 60.0 * c) / (12.0 * dx * dx)


def _cells_to_nodes(cells: np.ndarray, harmonic: bool) -> np.ndarray:
    """Average per-cell values onto nodes (cells indexed [m, l] here).

    Each node averages its 1, 2, or 4 adjacent cells.  Harmonic averaging is
    used for the stiffness so that a soft cell limits the coupling through
    shared nodes; arithmetic averaging (mass lumping) for the density.
    """
    src = 1.0 / cells if harmonic else cells
    nm, nl = cells.shape[0] + 1, cells.shape[1] + 1
    acc = np.zeros((nm, nl))
    cnt = np.zeros((nm, nl))
    for da in (0, 1):
        for db in (0, 1):
            acc[da:da + cells.shape[0], db:db + cells.shape[1]] += src
            cnt[da:da + cells.shape[0], db:db + cells.shape[1]] += 1.0
    avg = acc / cnt
    return 1.0 / avg if harmonic else avg


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def simulate(
    material: MaterialSpec,
    defects: list[DefectSpec],
    excitation: ExcitationSpec,
    n1: int,
    n2: int,
    step_count: int,
    safety: float = 0.9,
    *,
    record_every: int = 1,
    space_order: int = DEFAULT_SPACE_ORDER,
) -> DataCube:
    """Run the explicit scheme and return the recorded deflection history.

    The returned cube stores the state every ``record_every`` integrator
    steps (the initial all-zero state included), so its dt equals
    ``record_every * stable_timestep(...)``.

    Raises:
        DivergenceError: if any |w| exceeds 1e6 times the forcing
            displacement scale, naming the first bad step.
    """
    if n1 != n2:
        raise ValueError("the plate is square; n1 and n2 must match")
    if step_count < 1:
        raise ValueError("step_count must be at least 1")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    excitation.source.validate(n1, n2)

    dx = material.side_length / (n1 - 1)
    mmap = build_material_map(material, defects, n1, n2)
    dt = stable_timestep(mmap, dx, safety, space_order)

    # Internal layout is [m, l] (y index first) so that recorded slices are
    # already in cube payload order.
    d_node = _cells_to_nodes(mmap.bending_stiffness.T, harmonic=True)
    rho_node = _cells_to_nodes(mmap.areal_density.T, harmonic=False)

    # A transverse force on a pinned edge node does no work; drive the
    # nearest interior node instead.
    src_l = min(max(excitation.source.l, 1), n1 - 2)
    src_m = min(max(excitation.source.m, 1), n2 - 2)

    # Displacement scale of the driven lumped mass under the peak force held
    # for the whole burst; honest responses sit far below 1e6 times this.
    rho_min = float(np.min(mmap.areal_density))
    blow_up = (
        1e6 * abs(excitation.amplitude) * excitation.burst_duration**2
        / (rho_min * dx * dx)
    )

    t_len = step_count // record_every + 1
    record = np.zeros((t_len, n2, n1))

    w_prev = np.zeros((n2, n1))
    w_curr = np.zeros((n2, n1))
    for step in range(1, step_count + 1):
        f_now = burst_force((step - 1) * dt, excitation)
        u = _laplacian(w_curr, dx, space_order)
        v = _laplacian(d_node * u, dx, space_order)
        accel = -v / rho_node
        if f_now != 0.0:
            accel[src_m, src_l] += f_now / (rho_node[src_m, src_l] * dx * dx)
        w_next = 2.0 * w_curr - w_prev + (dt * dt) * accel
        w_next[0, :] = 0.0
        w_next[-1, :] = 0.0
        w_next[:, 0] = 0.0
        w_next[:, -1] = 0.0
        peak = float(np.max(np.abs(w_next)))
        if not math.isfinite(peak) or (blow_up > 0.0 and peak > blow_up):
            raise DivergenceError(
                f"explicit scheme diverged at step {step} "
                f"(|w| reached {peak:.3e})",
                step=step,
            )
        w_prev, w_curr = w_curr, w_next
        if step % record_every == 0:
            record[step // record_every] = w_curr

    return DataCube(
        n1=n1, n2=n2, t_len=t_len,
        dx=dx, dt=dt * record_every,
        values=record,
    )


def total_energy_series(
    cube: DataCube,
    material_map: MaterialMap,
    space_order: int = DEFAULT_SPACE_ORDER,
) -> np.ndarray:
    """Kinetic plus strain energy at each interior stored sample.

    E(t) = 1/2 sum rho_h v^2 dx^2 + 1/2 sum D (lap w)^2 dx^2, with the
    velocity from centered differences of the stored slices.  Useful for
    drift checks on runs recorded at every integrator step.
    """
    d_node = _cells_to_nodes(material_map.bending_stiffness.T, harmonic=True)
    rho_node = _cells_to_nodes(material_map.areal_density.T, harmonic=False)
    dx2 = cube.dx * cube.dx
    out = np.empty(cube.t_len - 2)
    for t in range(1, cube.t_len - 1):
        v = (cube.values[t + 1] - cube.values[t - 1]) / (2.0 * cube.dt)
        lap = _laplacian(cube.values[t], cube.dx, space_order)
        kinetic = 0.5 * float(np.sum(rho_node * v * v)) * dx2
        strain = 0.5 * float(np.sum(d_node * lap * lap)) * dx2
        out[t - 1] = kinetic + strain
    return out
