"""Benchmark representation pipelines (orientation x transforms x codec).

A representation is named ``<orientation>+<transform>+...+<codec>``, e.g.
``col+delta+leb128s+bzip2:9``; the identity chain contributes no tokens
(``row+zstd:19``). Every recorded result is decoded and compared against
the source samples before it is kept.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import codecs
from .codecs import CompressorSpec
from .errors import CorruptionError, EnumerationError, PlanError
from .ingest import ChannelBuffer, Dataset, load_dataset
from .transforms import TransformChain

MIB = 1 << 20
ORIENTATIONS = ("row", "col")


@dataclass(frozen=True)
class RepresentationSpec:
    orientation: str
    chain: TransformChain
    codec: CompressorSpec

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise EnumerationError(f"orientation must be row or col, got {self.orientation!r}")
        if self.codec.family == "flac" and (self.chain.steps or self.orientation != "row"):
            raise EnumerationError("flac consumes interleaved PCM: only row+flac is valid")

    @property
    def name(self) -> str:
        parts = [self.orientation, *self.chain.steps, self.codec.name]
        return "+".join(parts)

    @classmethod
    def parse(cls, name: str) -> "RepresentationSpec":
        tokens = name.split("+")
        if len(tokens) < 2:
            raise EnumerationError(f"representation name {name!r} needs an orientation and a codec")
        try:
            return cls(tokens[0], TransformChain(tokens[1:-1]), CompressorSpec.parse(tokens[-1]))
        except ValueError as exc:
            raise EnumerationError(f"{name}: {exc}") from exc

    def __str__(self):
        return self.name

    def _codec_for(self, ds: Dataset) -> CompressorSpec:
        if self.codec.family == "flac":
            return self.codec.with_options(
                channels=ds.channel_count, bit_depth=ds.bit_depth, sampling_rate=int(ds.sampling_rate)
            )
        return self.codec

    def encode(self, ds: Dataset) -> bytes:
        arrays = [ch.samples for ch in ds.channels]
        data = self.chain.encode(arrays, self.orientation, ds.bit_depth)
        return codecs.compress(data, self._codec_for(ds))

    def decode(self, payload: bytes, template: Dataset) -> Dataset:
        data = codecs.decompress(payload, self._codec_for(template))
        arrays = self.chain.decode(
            data, template.channel_count, template.frames, self.orientation, template.bit_depth
        )
        chans = [ChannelBuffer(c.name, a, c.calibration, c.units) for c, a in zip(template.channels, arrays)]
        return Dataset(chans, template.sampling_rate, template.bit_depth, template.source_id)


def verify_roundtrip(spec: RepresentationSpec, ds: Dataset) -> bytes:
    """Encode, decode and compare; returns the payload or raises CorruptionError."""
    payload = spec.encode(ds)
    back = spec.decode(payload, ds)
    for a, b in zip(ds.channels, back.channels):
        if not np.array_equal(a.samples, b.samples):
            raise CorruptionError(f"{spec.name}: round trip altered channel {a.name!r}")
    return payload


# -- matrix -------------------------------------------------------------------------


def default_chains(bit_depth=16) -> list:
    w = 2 if bit_depth == 16 else 3
    return [
        "identity",
        f"shuffle:{w}",
        "leb128s",
        "delta",
        "delta+shuffle:4",
        "delta+bitshuffle:32",
        "delta+leb128s",
        "xdelta+leb128s",
        "xdelta+shuffle:4",
        f"bitshuffle:{8 * w}",
    ]


@dataclass
class MatrixConfig:
    orientations: list = field(default_factory=lambda: list(ORIENTATIONS))
    chains: Optional[list] = None
    codecs: Optional[list] = None
    bit_depth: int = 16
    include_adapters: bool = True

    @classmethod
    def from_dict(cls, obj) -> "MatrixConfig":
        return cls(**obj)

    @classmethod
    def load(cls, path_or_name) -> "MatrixConfig":
        if path_or_name in (None, "default"):
            return cls()
        with open(path_or_name) as fh:
            return cls.from_dict(json.load(fh))

    def resolved_chains(self):
        return self.chains if self.chains is not None else default_chains(self.bit_depth)

    def resolved_codecs(self):
        if self.codecs is not None:
            return [CompressorSpec.parse(c) for c in self.codecs]
        return codecs.list_default_matrix(self.include_adapters)


def probe_dataset(bit_depth=16, frames=256, channels=2) -> Dataset:
    """Small deterministic dataset that touches both range extremes."""
    half = 1 << (bit_depth - 1)
    rng = np.random.Generator(np.random.PCG64(1234))
    t = np.arange(frames)
    arrays = []
    for c in range(channels):
        a = (0.8 * half * np.sin(2 * np.pi * t / 64 + c)).astype(np.int64)
        a[::17] += rng.integers(-50, 50, a[::17].size)
        a[0], a[1] = -half, half - 1
        arrays.append(a)
    return Dataset.from_arrays(arrays, sampling_rate=1000, bit_depth=bit_depth, source_id="probe")


def enumerate_matrix(config: Optional[MatrixConfig] = None, verify=True) -> list:
    """Cross product of orientations, chains and codecs, minus documented exclusions.

    Exclusions: ``flac`` only as ``row+flac``; ``xdelta`` only with ``row``
    (on column-blocked data it equals per-channel ``delta`` up to one value per
    channel). Invalid chains or codec names raise EnumerationError.
    """
    config = config or MatrixConfig()
    chains = []
    for text in config.resolved_chains():
        try:
            chain = TransformChain.parse(text)
            chain.check_depth(config.bit_depth)
        except ValueError as exc:
            raise EnumerationError(f"chain {text!r}: {exc}") from exc
        chains.append(chain)
    try:
        codec_list = config.resolved_codecs()
    except ValueError as exc:
        raise EnumerationError(str(exc)) from exc

    specs = []
    for orient in config.orientations:
        for chain in chains:
            if "xdelta" in chain.steps and orient != "row":
                continue
            for codec in codec_list:
                if codec.family == "flac":
                    continue
                specs.append(RepresentationSpec(orient, chain, codec))
    if any(c.family == "flac" for c in codec_list) and "row" in config.orientations:
        specs.append(RepresentationSpec("row", TransformChain(), CompressorSpec("flac")))

    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise EnumerationError("duplicate representation names in matrix")
    if verify:
        probe = probe_dataset(config.bit_depth)
        for s in specs:
            verify_roundtrip(s, probe)
    return specs


# -- records ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchRecord:
    dataset_id: str
    file_id: str
    spec_name: str
    original_bytes: int
    compressed_bytes: int
    cs_pct: float
    ss_pct: float
    cr: float
    encode_seconds: float = 0.0
    decode_seconds: float = 0.0

    @classmethod
    def from_sizes(cls, dataset_id, file_id, spec_name, original, compressed, encode_s=0.0, decode_s=0.0):
        if original <= 0:
            raise ValueError("original size must be positive")
        if compressed <= 0:
            raise ValueError("compressed size must be positive")
        cs = compressed / original * 100.0
        return cls(dataset_id, file_id, spec_name, int(original), int(compressed),
                   cs, 100.0 - cs, original / compressed, encode_s, decode_s)


RECORD_COLUMNS = [f.name for f in fields(BenchRecord)]


def native_size(ds: Dataset) -> int:
    return ds.frames * ds.channel_count * ds.native_width


def _as_dataset(item):
    return item if isinstance(item, Dataset) else load_dataset(item)


def run_file(dataset_file, spec: RepresentationSpec, dataset_id="", file_id=None) -> BenchRecord:
    ds = _as_dataset(dataset_file)
    if file_id is None:
        file_id = ds.source_id if isinstance(dataset_file, Dataset) else str(dataset_file)
    t0 = time.perf_counter()
    payload = spec.encode(ds)
    t1 = time.perf_counter()
    back = spec.decode(payload, ds)
    t2 = time.perf_counter()
    for a, b in zip(ds.channels, back.channels):
        if not np.array_equal(a.samples, b.samples):
            raise CorruptionError(f"{spec.name} on {file_id}: round trip altered channel {a.name!r}")
    return BenchRecord.from_sizes(dataset_id, file_id, spec.name, native_size(ds), len(payload), t1 - t0, t2 - t1)


def run_matrix(files, specs, dataset_id="", jobs=1) -> list:
    """Run every spec on every file; output is sorted by (file, spec)."""
    loaded = [(_as_dataset(f), f.source_id if isinstance(f, Dataset) else str(f)) for f in files]
    work = [(ds, fid, spec) for ds, fid in loaded for spec in specs]

    def one(item):
        ds, fid, spec = item
        return run_file(ds, spec, dataset_id, fid)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, work))
    else:
        records = [one(w) for w in work]
    return sorted(records, key=lambda r: (r.dataset_id, r.file_id, r.spec_name))


# -- ranking ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RankRow:
    dataset_id: str
    rank: int
    spec_name: str
    mean_cs_pct: float
    files: int
    original_bytes: int
    compressed_bytes: int


def rank(records, top=None) -> list:
    """Byte-weighted mean CS per (dataset, spec); ascending, ties by spec name."""
    agg = {}
    for r in records:
        o, c, n = agg.get((r.dataset_id, r.spec_name), (0, 0, 0))
        agg[(r.dataset_id, r.spec_name)] = (o + r.original_bytes, c + r.compressed_bytes, n + 1)
    out = []
    for ds_id in sorted({k[0] for k in agg}):
        rows = [(c / o * 100.0, name, n, o, c) for (d, name), (o, c, n) in agg.items() if d == ds_id]
        rows.sort(key=lambda x: (x[0], x[1]))
        if top is not None:
            rows = rows[:top]
        out.extend(RankRow(ds_id, i + 1, name, cs, n, o, c) for i, (cs, name, n, o, c) in enumerate(rows))
    return out


def best_cs(records, dataset_id=None) -> float:
    rows = [r for r in rank(records) if dataset_id is None or r.dataset_id == dataset_id]
    return min(r.mean_cs_pct for r in rows)


def spearman(x, y) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(x, y).statistic)


# -- reports ------------------------------------------------------------------------------


def astuple_record(r: BenchRecord):
    return tuple(getattr(r, name) for name in RECORD_COLUMNS)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow([repr(v) if isinstance(v, float) else v for v in astuple_record(r)])
    return buf.getvalue()


def records_from_csv(text) -> list:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(BenchRecord(
            row["dataset_id"], row["file_id"], row["spec_name"],
            int(row["original_bytes"]), int(row["compressed_bytes"]),
            float(row["cs_pct"]), float(row["ss_pct"]), float(row["cr"]),
            float(row["encode_seconds"]), float(row["decode_seconds"]),
        ))
    return out


def ranking_markdown(records, top=30) -> str:
    lines = ["| Dataset | Rank | Representation | Mean CS % | SS % | Files |", "|---|---:|---|---:|---:|---:|"]
    for r in rank(records, top):
        lines.append(
            f"| {r.dataset_id} | {r.rank} | {r.spec_name} | {r.mean_cs_pct:.2f} | "
            f"{100 - r.mean_cs_pct:.2f} | {r.files} |"
        )
    return "\n".join(lines) + "\n"


def report(records, fmt="csv", top=30) -> str:
    records = list(records)
    if fmt == "csv":
        return records_to_csv(records)
    if fmt == "markdown":
        return ranking_markdown(records, top)
    if fmt == "text":
        doc = {
            "records": [asdict(r) for r in records],
            "ranking": [asdict(r) for r in rank(records, top)],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


# -- chunk sweep ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChunkPlan:
    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise PlanError("chunk plan is empty")
        if sizes[0] <= 0 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise PlanError(f"chunk sizes must be positive and strictly increasing: {sizes}")

    @staticmethod
    def full_sizes_mib():
        return [1, 2, 4, 8, 16, 32, 64] + list(range(128, 3072 + 1, 128))

    @classmethod
    def full(cls) -> "ChunkPlan":
        return cls(tuple(m * MIB for m in cls.full_sizes_mib()))

    @classmethod
    def desk(cls, divisor=16, max_bytes=None) -> "ChunkPlan":
        sizes = [m * MIB // divisor for m in cls.full_sizes_mib()]
        if max_bytes is not None:
            sizes = [s for s in sizes if s <= max_bytes]
        return cls(tuple(sizes))

    @classmethod
    def parse(cls, text) -> "ChunkPlan":
        """``full``, ``desk``, ``desk:<divisor>`` or a comma list of MiB values."""
        if text == "full":
            return cls.full()
        if text.startswith("desk"):
            _, _, div = text.partition(":")
            return cls.desk(int(div) if div else 16)
        return cls(tuple(int(float(x) * MIB) for x in text.split(",")))


def iter_chunks(sources, chunk_bytes):
    """Greedily fill frame-aligned chunks of at most ``chunk_bytes`` across file boundaries.

    Yields ``(dataset, full)``; the final partial chunk has ``full=False``.
    Only one chunk plus one source file is resident at a time.
    """
    pending = []
    have = 0
    frame_bytes = per_chunk = None
    template = None
    for src in sources:
        ds = _as_dataset(src)
        if template is None:
            template = ds
            frame_bytes = ds.channel_count * ds.native_width
            per_chunk = chunk_bytes // frame_bytes
            if per_chunk < 1:
                raise PlanError(f"chunk size {chunk_bytes} B is smaller than one {frame_bytes}-byte frame")
        elif ds.channel_names != template.channel_names or ds.bit_depth != template.bit_depth:
            raise PlanError(f"{ds.source_id}: channel schema differs from {template.source_id}")
        m = ds.matrix()
        pos = 0
        while pos < m.shape[0]:
            take = min(per_chunk - have, m.shape[0] - pos)
            pending.append(m[pos:pos + take])
            have += take
            pos += take
            if have == per_chunk:
                yield _chunk(template, pending), True
                pending, have = [], 0
    if have:
        yield _chunk(template, pending), False


def _chunk(template, parts):
    m = np.concatenate(parts)
    chans = [ChannelBuffer(c.name, m[:, i]) for i, c in enumerate(template.channels)]
    return Dataset(chans, template.sampling_rate, template.bit_depth, "chunk")


@dataclass(frozen=True)
class SweepPoint:
    spec_name: str
    chunk_bytes: int
    mean_cr: float
    chunks: int


def chunk_sweep(file_set, specs, plan: ChunkPlan, jobs=1, max_chunks=None, verify=True) -> list:
    """Mean CR per (spec, chunk size) over greedily assembled chunks.

    The mean covers full chunks only; the trailing partial chunk is used only
    when the corpus is smaller than one chunk. ``max_chunks`` caps the number
    of chunks evaluated per size.
    """
    files = list(file_set)
    if not files:
        raise PlanError("chunk sweep needs at least one file")
    specs = list(specs)
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None

    def ratio(args):
        spec, ds = args
        payload = verify_roundtrip(spec, ds) if verify else spec.encode(ds)
        return native_size(ds) / len(payload)

    points = []
    try:
        for size in plan.sizes:
            sums = np.zeros(len(specs))
            count = 0
            partial = None
            for ds, full in iter_chunks(files, size):
                if not full:
                    partial = ds
                    break
                work = [(s, ds) for s in specs]
                crs = list(pool.map(ratio, work)) if pool else [ratio(w) for w in work]
                sums += crs
                count += 1
                if max_chunks is not None and count >= max_chunks:
                    break
            if count == 0 and partial is not None:
                crs = [ratio((s, partial)) for s in specs]
                sums += crs
                count = 1
            for s, total in zip(specs, sums):
                points.append(SweepPoint(s.name, size, float(total / count), count))
    finally:
        if pool:
            pool.shutdown()
    return points


def sweep_to_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["spec_name", "chunk_bytes", "chunk_mib", "mean_cr", "chunks"])
    for p in points:
        w.writerow([p.spec_name, p.chunk_bytes, repr(p.chunk_bytes / MIB), repr(p.mean_cr), p.chunks])
    return buf.getvalue()


def sweep_to_gnuplot(points) -> str:
    """Whitespace table: chunk size in MiB, then one mean-CR column per spec."""
    names = sorted({p.spec_name for p in points})
    sizes = sorted({p.chunk_bytes for p in points})
    table = {(p.spec_name, p.chunk_bytes): p.mean_cr for p in points}
    lines = ["# chunk_mib " + " ".join(names)]
    for size in sizes:
        vals = " ".join(f"{table[(n, size)]:.6f}" for n in names)
        lines.append(f"{size / MIB:.6f} {vals}")
    return "\n".join(lines) + "\n"
