"""Wavenumber spectra and the occupied-fraction (Landau-rate) estimate."""

import numpy as np
import pytest

from wavesaliency.errors import NoSignalError
from wavesaliency.spectrum import (
    WavenumberSpectrum,
    dft2_magnitude,
    occupied_fraction,
    spectrum_csv_text,
    write_spectrum_csv,
    write_spectrum_pgm,
)


def _spectrum_of(values):
    values = np.asarray(values, dtype=float)
    n1, n2 = values.shape
    return WavenumberSpectrum(
        values=values,
        kx_L=np.arange(n1, dtype=float),
        ky_L=np.arange(n2, dtype=float),
    )


def test_constant_snapshot_is_dc_only():
    spec = dft2_magnitude(np.full((16, 16), 3.7), dx=1e-3)
    center = (8, 8)
    assert spec.values[center] == 1.0
    rest = spec.values.copy()
    rest[center] = 0.0
    assert np.max(rest) < 1e-9


def test_pure_tone_gives_conjugate_pair():
    n = 32
    l = np.arange(n)
    snap = np.cos(2 * np.pi * 5 * l / n)[:, None] * np.ones((1, n))
    spec = dft2_magnitude(snap, dx=1e-3)
    hot = np.argwhere(spec.values > 0.5)
    assert {tuple(map(int, p)) for p in hot} == {(16 + 5, 16), (16 - 5, 16)}
    assert spec.values[16 + 5, 16] == pytest.approx(1.0)
    assert spec.values[16 - 5, 16] == pytest.approx(1.0)
    assert np.sort(spec.values.ravel())[-3] < 1e-9  # nothing else


def test_real_input_point_symmetry(rng):
    snap = rng.normal(size=(33, 33))
    spec = dft2_magnitude(snap, dx=1e-3)
    # odd grid: point reflection through the center is a pure flip
    assert np.max(np.abs(spec.values - spec.values[::-1, ::-1])) < 1e-9
    # even grid: drop the unpaired Nyquist row/column before flipping
    spec2 = dft2_magnitude(rng.normal(size=(16, 16)), dx=1e-3)
    core = spec2.values[1:, 1:]
    assert np.max(np.abs(core - core[::-1, ::-1])) < 1e-9
    occupied = core > 10 ** (-20 / 20)
    assert np.array_equal(occupied, occupied[::-1, ::-1])


def test_parseval_and_normalization(rng):
    snap = rng.normal(size=(24, 17))
    raw = np.fft.fft2(snap)
    lhs = np.sum(np.abs(raw) ** 2)
    rhs = snap.size * np.sum(snap**2)
    assert lhs == pytest.approx(rhs, rel=1e-6)
    spec = dft2_magnitude(snap, dx=2e-3)
    expected = np.abs(np.fft.fftshift(raw))
    assert np.allclose(spec.values, expected / expected.max(), atol=1e-12)
    assert spec.values.max() == 1.0
    assert spec.values.min() >= 0.0


def test_axis_scaling():
    n, dx = 129, 0.25 / 128
    spec = dft2_magnitude(np.ones((n, n)) + np.eye(n), dx)
    assert spec.kx_L[64] == 0.0
    step = 2 * np.pi * 128 / 129  # 2*pi*L/(n*dx) with L = (n-1)*dx
    assert spec.kx_L[65] - spec.kx_L[64] == pytest.approx(step, rel=1e-12)
    assert spec.kx_L[0] == pytest.approx(-64 * step, rel=1e-12)
    assert np.array_equal(spec.ky_L, spec.kx_L)
    doubled = dft2_magnitude(np.ones((n, n)) + np.eye(n), dx, side_length=0.5)
    assert doubled.kx_L[65] == pytest.approx(2 * spec.kx_L[65], rel=1e-12)


def test_dft_input_validation():
    with pytest.raises(ValueError):
        dft2_magnitude(np.ones(16), dx=1e-3)
    bad = np.ones((8, 8))
    bad[3, 3] = np.nan
    with pytest.raises(ValueError):
        dft2_magnitude(bad, dx=1e-3)
    with pytest.raises(ValueError):
        dft2_magnitude(np.ones((8, 8)), dx=0.0)
    with pytest.raises(NoSignalError):
        dft2_magnitude(np.zeros((8, 8)), dx=1e-3)


def test_one_bin_fraction_pinned():
    values = np.zeros((10, 10))
    values[4, 6] = 1.0
    spec = _spectrum_of(values)
    assert occupied_fraction(spec, -20.0) == pytest.approx(0.01)


def test_fraction_monotone_in_floor(rng):
    spec = _spectrum_of(np.abs(rng.normal(size=(20, 20))) / 3.0)
    floors = [-3.0, -6.0, -10.0, -20.0, -40.0, -80.0]
    fractions = [occupied_fraction(spec, f) for f in floors]
    assert all(a <= b for a, b in zip(fractions, fractions[1:]))
    assert all(0.0 <= f <= 1.0 for f in fractions)


def test_fraction_deep_floor_counts_positive_bins():
    values = np.zeros((10, 10))
    values[0, 0] = 1.0
    values[3, 3] = 1e-7
    spec = _spectrum_of(values)
    # far below every positive bin: exactly the strictly-positive count
    assert occupied_fraction(spec, -300.0) == pytest.approx(0.02)
    # a -20 dB floor keeps only the peak
    assert occupied_fraction(spec, -20.0) == pytest.approx(0.01)


def test_fraction_floor_validation():
    spec = _spectrum_of(np.ones((4, 4)))
    with pytest.raises(ValueError):
        occupied_fraction(spec, 0.0)
    with pytest.raises(ValueError):
        occupied_fraction(spec, 3.0)


def test_ci_snapshot_fraction_is_sparse(ci_bench1):
    # narrow-band flexural field occupies a thin annulus: a few percent of
    # the plane, nowhere near full occupancy
    _, cube = ci_bench1
    spec = dft2_magnitude(cube.slice_at(cube.t_len - 1), cube.dx)
    frac = occupied_fraction(spec, -20.0)
    assert 0.005 <= frac <= 0.2


def test_csv_round_trip(tmp_path):
    values = np.linspace(0.0, 1.0, 12).reshape(3, 4)
    spec = _spectrum_of(values)
    text = spectrum_csv_text(spec)
    lines = text.strip().split("\n")
    assert len(lines) == 3
    parsed = np.array([[float(v) for v in line.split(",")] for line in lines])
    assert np.allclose(parsed, values, atol=1e-6)
    path = tmp_path / "spec.csv"
    write_spectrum_csv(spec, path)
    assert path.read_text() == text


def test_pgm_layout(tmp_path):
    values = np.zeros((5, 3))
    values[2, 1] = 1.0
    values[0, 0] = 10 ** (-30.0 / 20.0)  # below a -20 floor, above -60
    spec = _spectrum_of(values)
    out = tmp_path / "spec.pgm"
    write_spectrum_pgm(spec, out, floor_db=-60.0)
    body = out.read_text().split("\n")
    assert body[:3] == ["P2", "5 3", "255"]
    rows = [line.split() for line in body[3:6]]
    assert len(rows) == 3 and all(len(r) == 5 for r in rows)
    assert rows[1][2] == "255"  # the peak, at row ky=1, column kx=2
    assert rows[0][0] == "128"  # -30 dB on a -60 dB scale
    assert rows[2][4] == "0"  # exact zero clips to the floor
    with pytest.raises(ValueError):
        write_spectrum_pgm(spec, out, floor_db=0.0)
