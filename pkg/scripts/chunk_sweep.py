"""Compression ratio versus chunk size on a synthetic three-phase corpus.

Writes a raw corpus (piecewise, so memory stays at one file), sweeps the desk
plan and prints the curve. ``--noise 24`` roughly matches the best-case CS of a
real 16-bit 50 kHz three-phase recording; ``--noise 2`` is a much cleaner signal.

    python3 scripts/chunk_sweep.py --mib 256 --out runs/sweep
"""
import argparse
import time
from pathlib import Path

from lpcmbench.bench import ChunkPlan, RepresentationSpec, chunk_sweep, sweep_to_csv, sweep_to_gnuplot
from lpcmbench.ingest import write_raw_binary
from lpcmbench.synth import SynthSpec, generate

CHANNELS = ["voltage", "current_l1", "current_l2"]
RATE = 50_000
FILE_MIB = 16


def write_corpus(root: Path, mib: int, noise: float, seed: int) -> list:
    frame_bytes = 2 * len(CHANNELS)
    per_file = -(-FILE_MIB * (1 << 20) // frame_bytes)
    files = -(-mib // FILE_MIB)
    duration = files * per_file / RATE
    levels = [0.6, 0.3, 0.9, 0.5, 0.2, 0.7, 1.0, 0.4]
    spec = SynthSpec(sampling_rate=RATE, duration=duration, mains_freq=50.0, freq_wander_hz=0.02,
                     amplitude_utilization=0.85, noise_lsb=noise, harmonics=[(3, 0.1, 0.3), (5, 0.05, 1.0)],
                     level_schedule=[(60.0 * (i + 1), levels[i % len(levels)]) for i in range(int(duration // 60))],
                     seed=seed)
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(files):
        p = root / f"part_{i:03d}.raw"
        write_raw_binary(generate(spec, CHANNELS, start_frame=i * per_file, frames=per_file), p)
        paths.append(p)
    return paths


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mib", type=int, default=256, help="corpus size")
    ap.add_argument("--noise", type=float, default=24.0, help="noise_lsb of the corpus")
    ap.add_argument("--divisor", type=int, default=16, help="desk plan divisor")
    ap.add_argument("--specs", default="row+zstd:9,col+delta+bitshuffle:32+zstd:9,col+delta+leb128s+bzip2:9")
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--out", default="runs/chunk_sweep")
    args = ap.parse_args()

    out = Path(args.out)
    t0 = time.perf_counter()
    paths = write_corpus(out / "corpus", args.mib, args.noise, args.seed)
    plan = ChunkPlan.desk(args.divisor, max_bytes=args.mib * (1 << 20) // args.divisor)
    specs = [RepresentationSpec.parse(s) for s in args.specs.split(",")]
    points = chunk_sweep(paths, specs, plan, jobs=args.jobs)
    (out / "sweep.csv").write_text(sweep_to_csv(points))
    (out / "sweep.dat").write_text(sweep_to_gnuplot(points))
    print(sweep_to_gnuplot(points), end="")
    print(f"# {len(paths)} files, {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
