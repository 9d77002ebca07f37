"""Command-line entry point: ``csmag <verb> [options]``.

Exit codes: 0 success, 1 configuration error, 2 I/O or format error,
3 every level failed to converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, CsmagError, DomainError, FormatError
from .experiments import (
    DEFAULT_K_SWEEP,
    DEFAULT_TAU0_SWEEP,
    ExperimentConfig,
    replay,
    run_dynamic_range,
    run_multi_frequency,
    run_single_frequency,
)
from .metrics import fmt
from .plotting import SCHEMAS, emit_svg
from .recovery import RecoveryResult, SolverOptions, basis_pursuit
from .sensing import build_schedule, derive_seed, load_problem, make_operator, measure, save_problem
from .signal_model import LarmorConfig, dft, synthesize

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ALL_FAILED = 0, 1, 2, 3

log = logging.getLogger("csmag")


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("csmag") / "fixtures" / name))


def _load_signal(path, default_fixture: str) -> LarmorConfig:
    return LarmorConfig.load(path or fixture_path(default_fixture))


def _experiment(args, default_fixture: str) -> ExperimentConfig:
    signal = _load_signal(args.config, default_fixture)
    return ExperimentConfig(
        signal=signal,
        sensing_mode=args.mode,
        max_level=args.levels,
        trials=args.trials,
        solver=SolverOptions(tolerance=args.tol, max_iterations=args.max_iter),
        master_seed=args.seed,
        output_dir=Path(args.out),
        workers=args.workers,
    )


def _report(manifest) -> int:
    print(json.dumps(manifest.results, indent=2, sort_keys=True))
    for name in manifest.files.values():
        print(f"wrote {name}")
    return EXIT_ALL_FAILED if manifest.results.get("all_levels_failed") else EXIT_OK


def cmd_synth(args) -> int:
    signal = _load_signal(args.config, "single_freq.json")
    series = synthesize(signal)
    spec = dft(series).coefficients
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["t,sample"] + [f"{t},{fmt(v)}" for t, v in enumerate(series.samples)]
    (out / "signal.csv").write_text("\n".join(lines) + "\n")
    lines = ["bin,re,im,magnitude"] + [
        f"{m},{fmt(c.real)},{fmt(c.imag)},{fmt(abs(c))}" for m, c in enumerate(spec)
    ]
    (out / "spectrum.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'signal.csv'} and {out / 'spectrum.csv'}")
    return EXIT_OK


def cmd_recover(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    options = SolverOptions(tolerance=args.tol, max_iterations=args.max_iter)
    if args.problem:
        op, record = load_problem(args.problem)
    else:
        signal = _load_signal(args.config, "single_freq.json")
        schedule = build_schedule(signal.n_points, args.levels)
        level = args.levels if args.level is None else args.level
        if not 0 <= level <= args.levels:
            raise ConfigurationError(f"--level must lie in [0, {args.levels}]")
        op = make_operator(args.mode, schedule, level, derive_seed(args.seed, level, 0))
        record = measure(synthesize(signal), op)
        save_problem(out / "problem.json", op, record)
    result = basis_pursuit(op, record, options)
    (out / "recovery.json").write_text(result.to_json() + "\n")
    print(json.dumps({k: v for k, v in result.to_dict().items() if k != "estimate"}, indent=2))
    if args.expect:
        expected = RecoveryResult.from_dict(json.loads(Path(args.expect).read_text()))
        same = (expected.iterations == result.iterations and
                np.array_equal(expected.estimate.coefficients, result.estimate.coefficients))
        print("replay match" if same else "replay MISMATCH")
        return EXIT_OK if same else EXIT_IO
    return EXIT_OK


def cmd_scale(args) -> int:
    return _report(run_single_frequency(_experiment(args, "single_freq.json")))


def cmd_scale_multi(args) -> int:
    return _report(run_multi_frequency(_experiment(args, "multi_freq.json")))


def cmd_sweep(args) -> int:
    if len(args.tau0) != len(args.k_values):
        raise ConfigurationError("--tau0 and --k-values need the same number of entries")
    return _report(run_dynamic_range(_experiment(args, "single_freq.json"), args.tau0, args.k_values))


def cmd_plot(args) -> int:
    svg = Path(args.svg) if args.svg else Path(args.csv).with_suffix(".svg")
    emit_svg(args.csv, args.kind, svg)
    print(f"wrote {svg}")
    return EXIT_OK


def cmd_replay(args) -> int:
    fresh, matches = replay(args.manifest, args.out, args.workers)
    for name, ok in sorted(matches.items()):
        print(f"{name}: {'identical' if ok else 'DIFFERENT'}")
    return EXIT_OK if all(matches.values()) else EXIT_IO


def _common(p: argparse.ArgumentParser, levels: int = 10, trials: int = 50) -> None:
    p.add_argument("--config", help="signal config JSON (default: bundled fixture)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--trials", type=int, default=trials, help="trials per level")
    p.add_argument("--mode", choices=["time", "spectral"], default="time", help="sensing mode")
    p.add_argument("--tol", type=float, default=1e-6, help="solver tolerance")
    p.add_argument("--max-iter", type=int, default=20000, help="solver iteration cap")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--levels", type=int, default=levels, help="top schedule level K")
    p.add_argument("--workers", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csmag", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a signal and its DFT to CSV")
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("recover", help="solve one basis-pursuit problem")
    _common(p)
    p.add_argument("--level", type=int, help="schedule level to sample (default: K)")
    p.add_argument("--problem", help="replay a saved problem.json instead of sampling")
    p.add_argument("--expect", help="recovery.json to compare against bit-for-bit")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("scale", help="single-frequency precision scaling run")
    _common(p)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("scale-multi", help="multi-frequency precision scaling run")
    _common(p)
    p.set_defaults(func=cmd_scale_multi)

    p = sub.add_parser("sweep", help="sensitivity vs dynamic range over tau0")
    _common(p)
    p.add_argument("--tau0", type=float, nargs="+", default=list(DEFAULT_TAU0_SWEEP))
    p.add_argument("--k-values", type=int, nargs="+", default=list(DEFAULT_K_SWEEP))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a csmag CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--kind", choices=sorted(SCHEMAS), required=True)
    p.add_argument("--svg", help="output path (default: CSV path with .svg)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("replay", help="re-run a manifest and compare CSV outputs")
    p.add_argument("manifest")
    p.add_argument("--out", default="replay")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CsmagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
