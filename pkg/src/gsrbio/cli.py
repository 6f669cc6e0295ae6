"""Command line entry point.

    gsrbio synth gen --seed N --count K --size H W --alpha A --out DIR
    gsrbio bench run --config cfg.json
    gsrbio bench score --pred DIR --config cfg.json
    gsrbio spectrum --input DIR --method M --out profile.csv
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .bench import SPECTRUM_COLUMNS, BenchConfig, ConfigError, _fmt, run_benchmark, score_external
from .estimators import METHODS, make_upsampler
from .raster import list_bundles, read_bundle, write_bundle
from .spectrum import aggregate_profiles, map_profile
from .synth import SynthParams, gen_dataset


def _cmd_synth_gen(args) -> int:
    params = SynthParams(seed=args.seed, height=args.size[0], width=args.size[1], alpha=args.alpha,
                         guide_channels=args.channels, edge_aligned=args.edge_aligned)
    out = Path(args.out)
    for rec in gen_dataset(params, args.count):
        write_bundle(rec, out / rec.id)
    print(f"wrote {args.count} bundles to {out}")
    return 0


def _summary(result) -> None:
    for agg in result.aggregates:
        print(f"{agg['method']:>10}  mae={agg['mae']:.4g}  rmse={agg['rmse']:.4g}  "
              f"psnr={agg['psnr']:.4g}  ssim={agg['ssim']:.4g}")
    for name, rate in sorted(result.throughput.items()):
        print(f"{name:>10}  throughput={rate:.4g} Mpix/s")
    print(f"reports in {result.output_dir}")


def _cmd_bench_run(args) -> int:
    cfg = BenchConfig.load(args.config)
    result = run_benchmark(cfg)
    _summary(result)
    for f in result.failures:
        print(f"FAILED {f['method']} {f['sample_id']}: {f['error']}", file=sys.stderr)
    return result.exit_code


def _cmd_bench_score(args) -> int:
    cfg = BenchConfig.load(args.config)
    result = score_external(args.pred, cfg, name=args.name)
    _summary(result)
    for s in result.skipped:
        print(f"SKIPPED {s['sample_id']}: {s['reason']}", file=sys.stderr)
    return result.exit_code


def _cmd_spectrum(args) -> int:
    params = {}
    alpha = None
    if args.config:
        cfg = BenchConfig.load(args.config)
        params = cfg.method_params(args.method) if args.method in METHODS else {}
        alpha = cfg.alpha
    records = [read_bundle(p) for p in list_bundles(args.input)]
    if not records:
        raise ConfigError(f"no bundles found in {args.input}")
    if args.method == "target":
        maps = [r.target.values[0] for r in records]
    else:
        est = make_upsampler(args.method, alpha or records[0].alpha, **params)
        maps = [est.predict(r.source.values[0], r.guide.values) for r in records]
    agg = aggregate_profiles(map_profile(m) for m in maps)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SPECTRUM_COLUMNS[1:])
        for i, r in enumerate(agg.radii):
            w.writerow([int(r), _fmt(agg.mean_magnitude[i]), _fmt(agg.std[i]), int(agg.count[i])])
    print(f"wrote {len(agg.radii)} radii for {len(maps)} samples to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsrbio", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="synthetic patch bundles")
    synth_sub = synth.add_subparsers(dest="action", required=True)
    gen = synth_sub.add_parser("gen", help="generate seeded synthetic bundles")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--size", type=int, nargs=2, metavar=("H", "W"), default=(64, 64))
    gen.add_argument("--alpha", type=int, default=8)
    gen.add_argument("--channels", type=int, default=15)
    gen.add_argument("--edge-aligned", action="store_true")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_synth_gen)

    bench = sub.add_parser("bench", help="run or score benchmarks")
    bench_sub = bench.add_subparsers(dest="action", required=True)
    run = bench_sub.add_parser("run", help="run upsamplers and score them")
    run.add_argument("--config", required=True)
    run.set_defaults(func=_cmd_bench_run)
    score = bench_sub.add_parser("score", help="score externally produced predictions")
    score.add_argument("--pred", required=True)
    score.add_argument("--config", required=True)
    score.add_argument("--name", default="external")
    score.set_defaults(func=_cmd_bench_score)

    spec = sub.add_parser("spectrum", help="radial frequency profile of a method's outputs")
    spec.add_argument("--input", required=True)
    spec.add_argument("--method", required=True, choices=[*METHODS, "target"])
    spec.add_argument("--out", required=True)
    spec.add_argument("--config")
    spec.set_defaults(func=_cmd_spectrum)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
