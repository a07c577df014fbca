"""Command-line front end: ``lpcmbench <subcommand> ...``.

Every run emits a manifest (JSON) next to its outputs when ``--out`` is
given, otherwise as a single line on stderr. Failures print one
``error: <Kind>: <message>`` line on stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import bench as bench_mod
from .entropy import analyze_corpus, corpus_histograms, histogram_dump, reports_to_csv, reports_to_table
from .errors import LpcmError
from .ingest import (
    load_dataset,
    write_csv_waveform,
    write_pcm_wav,
    write_raw_binary,
)
from .synth import DEFAULT_CHANNELS, SynthSpec, generate


@dataclass
class RunManifest:
    toolkit_version: str
    command: str
    config_hash: str
    inputs: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    timestamp: str = ""


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


def _file_entry(path):
    p = Path(path)
    h = hashlib.sha256(p.read_bytes()).hexdigest() if p.is_file() else None
    return {"path": str(path), "bytes": p.stat().st_size if p.exists() else None, "sha256": h}


def _emit(args, outputs: dict, config: dict, inputs=(), seeds=None):
    """Write outputs to --out (or stdout) and the manifest beside them."""
    manifest = RunManifest(
        toolkit_version=__version__,
        command=args.command,
        config_hash=config_hash(config),
        inputs=[_file_entry(p) for p in inputs],
        seeds=seeds or {},
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in outputs.items():
            (out / name).write_text(text)
        (out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2) + "\n")
    else:
        for text in outputs.values():
            sys.stdout.write(text)
            break
        sys.stderr.write("manifest: " + json.dumps(asdict(manifest), sort_keys=True) + "\n")


def _config(args, *keys):
    return {"command": args.command, **{k: getattr(args, k) for k in keys}}


# -- subcommands -------------------------------------------------------------------


def cmd_entropy(args):
    reports = analyze_corpus(args.files, parallelism=args.jobs)
    ds_id = args.dataset_id or Path(args.files[0]).stem
    outputs = {"entropy.csv": reports_to_csv(ds_id, reports)}
    if args.format == "markdown":
        outputs = {"entropy.md": reports_to_table(ds_id, reports), **outputs}
    if args.dump_histograms:
        hists = corpus_histograms(args.files, args.jobs)
        for name, h in hists.items():
            outputs[f"hist_{name}.dat"] = histogram_dump(h)
    _emit(args, outputs, _config(args, "files", "dataset_id", "format"), inputs=args.files)


def cmd_bench(args):
    first = load_dataset(args.files[0])
    config = bench_mod.MatrixConfig.load(args.matrix)
    config.bit_depth = first.bit_depth
    specs = bench_mod.enumerate_matrix(config)
    if args.specs:
        wanted = set(args.specs.split(","))
        specs = [s for s in specs if s.name in wanted or s.codec.name in wanted]
    ds_id = args.dataset_id or Path(args.files[0]).stem
    records = bench_mod.run_matrix(args.files, specs, ds_id, jobs=args.jobs)
    if not args.timings:
        records = [
            bench_mod.BenchRecord(**{**asdict(r), "encode_seconds": 0.0, "decode_seconds": 0.0})
            for r in records
        ]
    ranking = bench_mod.report(records, "markdown", args.top)
    outputs = {"ranking.md": ranking, "records.csv": bench_mod.report(records, "csv")}
    if args.format != "markdown":
        ext = "csv" if args.format == "csv" else "json"
        outputs = {f"report.{ext}": bench_mod.report(records, args.format, args.top), **outputs}
    _emit(args, outputs, _config(args, "files", "matrix", "specs", "top", "dataset_id", "format"), inputs=args.files)


def cmd_chunk_sweep(args):
    plan = bench_mod.ChunkPlan.parse(args.plan)
    specs = [bench_mod.RepresentationSpec.parse(s) for s in args.specs.split(",")]
    points = bench_mod.chunk_sweep(args.files, specs, plan, jobs=args.jobs, max_chunks=args.max_chunks)
    outputs = {"sweep.csv": bench_mod.sweep_to_csv(points), "sweep.dat": bench_mod.sweep_to_gnuplot(points)}
    _emit(args, outputs, _config(args, "files", "plan", "specs", "max_chunks"), inputs=args.files)


def _write_dataset(ds, path, orientation="row"):
    suffix = Path(path).suffix.lower()
    if suffix == ".wav":
        write_pcm_wav(ds, path)
    elif suffix == ".csv":
        write_csv_waveform(ds, path)
        side = {
            "columns": [{"index": i, "name": n} for i, n in enumerate(ds.channel_names)],
            "bit_depth": ds.bit_depth,
            "sampling_rate": int(ds.sampling_rate),
            "header": True,
        }
        Path(str(path) + ".json").write_text(json.dumps(side, indent=2) + "\n")
    else:
        write_raw_binary(ds, path, orientation=orientation)


def cmd_synth(args):
    spec = SynthSpec.load(args.spec) if args.spec else SynthSpec()
    if args.seed is not None:
        spec.seed = args.seed
    channels = args.channels.split(",") if args.channels else list(DEFAULT_CHANNELS)
    ds = generate(spec, channels)
    _write_dataset(ds, args.output)
    config = {"command": "synth", "spec": spec.to_dict(), "channels": channels, "output": str(args.output)}
    manifest_inputs = [args.spec] if args.spec else []
    _emit(args, {}, config, inputs=manifest_inputs, seeds={"synth": spec.seed})


def cmd_convert(args):
    ds = load_dataset(args.input, calibration=args.calibration)
    _write_dataset(ds, args.output, orientation=args.orientation)
    _emit(args, {}, _config(args, "input", "output", "orientation"), inputs=[args.input])


def cmd_report(args):
    text = Path(args.records).read_text()
    records = bench_mod.records_from_csv(text)
    ext = {"csv": "csv", "markdown": "md", "text": "json"}[args.format]
    outputs = {f"report.{ext}": bench_mod.report(records, args.format, args.top)}
    _emit(args, outputs, _config(args, "records", "format", "top"), inputs=[args.records])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker threads")
    common.add_argument("--seed", type=int, default=None, help="override PRNG seed")
    common.add_argument("--out", default=None, help="output directory (default: stdout)")

    p = argparse.ArgumentParser(prog="lpcmbench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("entropy", parents=[common], help="per-channel entropy and range report")
    e.add_argument("files", nargs="+")
    e.add_argument("--dataset-id", default=None)
    e.add_argument("--format", choices=["csv", "markdown"], default="csv")
    e.add_argument("--dump-histograms", action="store_true", help="also write code/count tables (needs --out)")
    e.set_defaults(func=cmd_entropy)

    b = sub.add_parser("bench", parents=[common], help="run the representation matrix")
    b.add_argument("files", nargs="+")
    b.add_argument("--matrix", default="default", help="'default' or a JSON matrix config")
    b.add_argument("--specs", default=None, help="comma list restricting representations or codecs")
    b.add_argument("--top", type=int, default=30)
    b.add_argument("--dataset-id", default=None)
    b.add_argument("--format", choices=["markdown", "csv", "text"], default="markdown")
    b.add_argument("--timings", action="store_true", help="keep wall-clock timings in records")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("chunk-sweep", parents=[common], help="compression ratio versus chunk size")
    c.add_argument("files", nargs="+")
    c.add_argument("--plan", default="desk", help="'desk', 'desk:<divisor>', 'full' or MiB list")
    c.add_argument("--specs", default="row+zstd:9")
    c.add_argument("--max-chunks", type=int, default=None)
    c.set_defaults(func=cmd_chunk_sweep)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic waveform file")
    s.add_argument("--spec", default=None, help="JSON SynthSpec")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--channels", default=None, help="comma list, e.g. voltage,current")
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("convert", parents=[common], help="re-encode between raw, WAV and CSV")
    v.add_argument("input")
    v.add_argument("-o", "--output", required=True)
    v.add_argument("--orientation", choices=["row", "column"], default="row")
    v.add_argument("--calibration", default=None, help="calibration sidecar JSON")
    v.set_defaults(func=cmd_convert)

    r = sub.add_parser("report", parents=[common], help="re-render a records CSV")
    r.add_argument("records")
    r.add_argument("--format", choices=["markdown", "csv", "text"], default="markdown")
    r.add_argument("--top", type=int, default=30)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (LpcmError, OSError, ValueError, KeyError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
