"""Command-line front end: simulate / detect / sweep / spectrum.

Exit codes are stable: 0 success, 2 bad configuration (parse failure or a
partition that does not divide the grid), 3 simulation divergence, 4
windowing produced no active region, 5 silent input where a signal is
required.  Any other toolkit error exits 1.

Heavy imports happen inside ``main`` so that the ``WAVESALIENCY_THREADS``
environment variable can pin the BLAS/OpenMP thread pools before numpy is
first loaded.
"""

from __future__ import annotations

import argparse
import os
import sys

THREAD_ENV_VAR = "WAVESALIENCY_THREADS"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_WINDOWING = 4
EXIT_NO_SIGNAL = 5


def _apply_thread_override() -> None:
    """Pin thread-pool sizes from WAVESALIENCY_THREADS (before numpy loads)."""
    threads = os.environ.get(THREAD_ENV_VAR)
    if not threads:
        return
    if not threads.isdigit() or int(threads) < 1:
        raise SystemExit(
            f"{THREAD_ENV_VAR} must be a positive integer, got {threads!r}"
        )
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavesaliency",
        description="Plate-wave simulation and low-rank saliency defect detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write the WVC1 cube")
    p.add_argument("config", help="scenario config file")
    p.add_argument("output", help="output cube path (a .meta sidecar is added)")

    p = sub.add_parser("detect", help="saliency detection on a recorded cube")
    p.add_argument("cube", help="WVC1 cube path")
    p.add_argument("config", help="scenario config file")
    p.add_argument("prefix", help="output prefix for csv/pgm/flags/manifest")
    p.add_argument("--rank", help="subspace rank override (integer or 'auto')")
    p.add_argument("--tw", type=int, help="window length override (samples)")
    p.add_argument("--ratio", type=float, help="outlier energy ratio override")
    p.add_argument("--theta", type=float, help="decision threshold override")
    p.add_argument("--dump-windows", metavar="DIR",
                   help="debug: also write every active region's aligned "
                        "window as a small WVC1 cube under DIR")

    p = sub.add_parser("sweep", help="Monte Carlo subsampling sweep")
    p.add_argument("cube", help="WVC1 cube path")
    p.add_argument("config", help="scenario config file")
    p.add_argument("output", help="output CSV path")
    p.add_argument("--ratios", default="0.5,0.33,0.2,0.1,0.07",
                   help="comma-separated subsampling ratios (default %(default)s)")
    p.add_argument("--trials", type=int, default=50,
                   help="random trials per ratio (default %(default)s)")
    p.add_argument("--pattern", choices=("random", "cross"), default="random",
                   help="mask family (default %(default)s)")
    p.add_argument("--stride", type=int, default=1,
                   help="double-cross stride for --pattern cross")
    p.add_argument("--sharing", choices=("shared", "per_region"), default="shared",
                   help="share one mask across regions or draw one per region")
    p.add_argument("--rank", help="subspace rank override (integer or 'auto')")

    p = sub.add_parser("spectrum", help="wavenumber spectrum of one snapshot")
    p.add_argument("cube", help="WVC1 cube path")
    p.add_argument("prefix", help="output prefix for csv/pgm")
    p.add_argument("--floor-db", type=float, default=-20.0,
                   help="occupancy floor in dB (default %(default)s)")
    p.add_argument("--snapshot", type=int, default=-1,
                   help="time index to transform (default: last)")
    p.add_argument("--compare-ratio", type=float,
                   help="sampling ratio to compare against the Landau estimate")
    return parser


def main(argv=None) -> int:
    _apply_thread_override()
    args = build_parser().parse_args(argv)

    from .errors import (
        ConfigError,
        DivergenceError,
        NoSignalError,
        PartitionError,
        WaveSaliencyError,
        WindowingError,
    )

    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "detect":
            return _cmd_detect(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_spectrum(args)
    except (ConfigError, PartitionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except WindowingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WINDOWING
    except NoSignalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SIGNAL
    except (WaveSaliencyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _load_scenario(path):
    from .config import load_scenario

    return load_scenario(path)


def _check_cube_matches(cube, scenario) -> None:
    from .errors import ConfigError

    if (cube.n1, cube.n2) != (scenario.grid.n1, scenario.grid.n2):
        raise ConfigError(
            f"cube is {cube.n1}x{cube.n2} nodes but the config grid says "
            f"{scenario.grid.n1}x{scenario.grid.n2}"
        )


def _cmd_simulate(args) -> int:
    from .config import scenario_echo
    from .cube import meta_path, write_cube, write_meta
    from .sim import simulate

    scenario = _load_scenario(args.config)
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
    write_cube(cube, args.output)
    meta = scenario_echo(scenario)
    meta["cube.dt"] = repr(cube.dt)
    meta["cube.dx"] = repr(cube.dx)
    meta["cube.t_len"] = str(cube.t_len)
    write_meta(meta_path(args.output), meta)
    print(f"wrote {args.output}: {cube.n1}x{cube.n2} nodes, "
          f"{cube.t_len} samples at dt = {cube.dt:.6e} s")
    return EXIT_OK


def _apply_detect_overrides(scenario, args):
    """Fold --rank/--tw/--ratio/--theta into the scenario's detection block."""
    from dataclasses import replace

    from .config import _parse_rank
    from .errors import ConfigError

    det = scenario.detection
    if getattr(args, "rank", None) is not None:
        try:
            det = replace(det, rank=_parse_rank(args.rank))
        except ValueError:
            raise ConfigError(f"bad --rank value {args.rank!r}") from None
    if getattr(args, "tw", None) is not None:
        det = replace(det, window_len=args.tw)
    if getattr(args, "ratio", None) is not None:
        det = replace(det, ratio=args.ratio)
    if getattr(args, "theta", None) is not None:
        det = replace(det, theta=args.theta)
    return replace(scenario, detection=det)


def _cmd_detect(args) -> int:
    from .cube import read_cube, write_meta
    from .pipeline import run_detection
    from .saliency import write_saliency_csv, write_saliency_pgm

    scenario = _apply_detect_overrides(_load_scenario(args.config), args)
    cube = read_cube(args.cube)
    _check_cube_matches(cube, scenario)
    partition = scenario.partition()
    result = run_detection(
        cube, partition, scenario.detection_config(), mask=scenario.mask()
    )

    write_saliency_csv(result.saliency, f"{args.prefix}.csv")
    write_saliency_pgm(result.saliency, f"{args.prefix}.pgm")
    flagged = sorted(result.flagged)
    with open(f"{args.prefix}.flags.txt", "w") as fh:
        for a, b in flagged:
            fh.write(f"{a} {b}\n")

    det = scenario.detection
    manifest = {
        "group_velocity": repr(result.group_velocity),
        "velocity_source": scenario.probes.mode,
        "rank_requested": str(det.rank),
        "rank_used": str(result.saliency.rank_used),
        "window_len": str(det.window_len),
        "energy_ratio": repr(det.ratio),
        "theta": repr(det.theta),
        "mask": _mask_summary(scenario),
        "seed": str(scenario.seed),
        "active_regions": str(int(result.saliency.active.sum())),
        "flagged": ";".join(f"{a},{b}" for a, b in flagged),
        "singular_values": " ".join(
            f"{v:.9e}" for v in result.saliency.singular_values
        ),
    }
    write_meta(f"{args.prefix}.manifest", manifest)
    if args.dump_windows:
        count = _dump_window_cubes(result.window_set, cube.dx, args.dump_windows)
        print(f"dumped {count} region window(s)")
    print(f"group velocity: {result.group_velocity:.1f} m/s "
          f"({scenario.probes.mode}); rank {result.saliency.rank_used}")
    print(f"flagged {len(flagged)} region(s): "
          + (" ".join(f"({a},{b})" for a, b in flagged) or "none"))
    return EXIT_OK


def _mask_summary(scenario) -> str:
    from .config import _mask_echo

    return _mask_echo(scenario.detection.mask)


def _dump_window_cubes(window_set, dx: float, directory) -> int:
    """One WVC1 mini-cube per active region; returns the file count."""
    from pathlib import Path

    from .cube import DataCube, write_cube

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    part = window_set.partition
    ids = window_set.active_region_ids()
    for a, b in ids:
        block = window_set.windows[:, :, window_set.column_index(a, b)]
        mini = DataCube(
            part.p1, part.p2, window_set.window_len, dx, window_set.dt,
            block.reshape(window_set.window_len, part.p2, part.p1).copy(),
        )
        write_cube(mini, out / f"region_{a:02d}_{b:02d}.wvc")
    return len(ids)


def _cmd_sweep(args) -> int:
    from .cube import read_cube
    from .errors import ConfigError
    from .sampling import GroundTruth, monte_carlo_sweep, write_sweep_csv

    scenario = _apply_detect_overrides(_load_scenario(args.config), args)
    cube = read_cube(args.cube)
    _check_cube_matches(cube, scenario)
    partition = scenario.partition()
    try:
        ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
    except ValueError:
        raise ConfigError(f"bad --ratios list {args.ratios!r}") from None
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    truth = GroundTruth.from_defects(list(scenario.defects), partition)
    rows = monte_carlo_sweep(
        cube,
        partition,
        scenario.detection_config(),
        ratios,
        args.trials,
        scenario.seed,
        truth=truth,
        pattern=args.pattern,
        stride=args.stride,
        sharing=args.sharing,
    )
    write_sweep_csv(rows, args.output)
    for row in rows:
        print(f"nz={row.nz:g}: regional_correct={row.regional_correct:.3f} "
              f"false={row.false:.3f} (over {row.trials} trial(s))")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    from .cube import read_cube
    from .spectrum import (
        dft2_magnitude,
        occupied_fraction,
        write_spectrum_csv,
        write_spectrum_pgm,
    )

    cube = read_cube(args.cube)
    index = args.snapshot if args.snapshot >= 0 else cube.t_len + args.snapshot
    if not 0 <= index < cube.t_len:
        from .errors import ConfigError

        raise ConfigError(
            f"snapshot {args.snapshot} outside record of {cube.t_len} samples"
        )
    spec = dft2_magnitude(cube.slice_at(index), cube.dx)
    fraction = occupied_fraction(spec, args.floor_db)
    write_spectrum_csv(spec, f"{args.prefix}.csv")
    write_spectrum_pgm(spec, f"{args.prefix}.pgm")
    print(f"occupied fraction: {fraction:.6f} at floor {args.floor_db:g} dB, "
          f"snapshot {index}")
    if args.compare_ratio is not None:
        verdict = "above" if args.compare_ratio > fraction else "at or below"
        print(f"sampling ratio {args.compare_ratio:g} is {verdict} "
              f"the Landau estimate {fraction:.6f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
