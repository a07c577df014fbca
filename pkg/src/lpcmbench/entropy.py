"""Per-channel value histograms, Shannon entropy and range statistics."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from functools import reduce

import numpy as np

from ._pcm import code_range
from .errors import CorpusError, EmptyHistogramError, MergeError

UNDER_CALIBRATED_RANGE_PCT = 20.0
REPORT_COLUMNS = ["dataset", "channel", "values", "usage_pct", "range_pct", "entropy_bits"]


@dataclass(frozen=True, eq=False)
class Histogram:
    """Dense counts over every code; ``counts[0]`` is the most negative code."""

    bit_depth: int
    counts: np.ndarray

    def __post_init__(self):
        if self.counts.shape != (1 << self.bit_depth,):
            raise ValueError(f"histogram for {self.bit_depth} bits needs {1 << self.bit_depth} bins")

    @classmethod
    def zeros(cls, bit_depth):
        return cls(bit_depth, np.zeros(1 << bit_depth, dtype=np.uint64))

    @property
    def total(self) -> int:
        return int(self.counts.sum(dtype=np.uint64))

    @property
    def offset(self) -> int:
        return 1 << (self.bit_depth - 1)

    def count(self, code) -> int:
        return int(self.counts[code + self.offset])

    def nonzero(self):
        """(codes, counts) for every occupied bin, in code order."""
        idx = np.flatnonzero(self.counts)
        return idx.astype(np.int64) - self.offset, self.counts[idx]

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return self.bit_depth == other.bit_depth and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True)
class ChannelReport:
    channel_name: str
    bit_depth: int
    unique_values: int
    usage_pct: float
    range_pct: float
    min_observed: int
    max_observed: int
    entropy_bits: float

    @property
    def under_calibrated(self) -> bool:
        return self.range_pct < UNDER_CALIBRATED_RANGE_PCT


def histogram(channel, bit_depth) -> Histogram:
    """Count occurrences of every code in a channel (ChannelBuffer or array)."""
    samples = getattr(channel, "samples", channel)
    s = np.asarray(samples, dtype=np.int64)
    lo, hi = code_range(bit_depth)
    if s.size and (s.min() < lo or s.max() > hi):
        raise ValueError(f"samples outside the {bit_depth}-bit code range")
    counts = np.bincount(s - lo, minlength=1 << bit_depth).astype(np.uint64)
    return Histogram(bit_depth, counts)


def merge(a: Histogram, b: Histogram) -> Histogram:
    if a.bit_depth != b.bit_depth:
        raise MergeError(f"cannot merge {a.bit_depth}-bit and {b.bit_depth}-bit histograms")
    return Histogram(a.bit_depth, a.counts + b.counts)


def entropy(h: Histogram) -> float:
    """Shannon entropy in bits per sample. Empty bins contribute nothing."""
    _, c = h.nonzero()
    total = int(c.sum(dtype=np.uint64))
    if total == 0:
        raise EmptyHistogramError("entropy of an empty histogram is undefined")
    p = c.astype(np.float64) / total
    H = float(-(p * np.log2(p)).sum())
    # a single occupied bin gives -1*log2(1) == -0.0
    return max(0.0, H)


def channel_report(name, h: Histogram) -> ChannelReport:
    codes, _ = h.nonzero()
    if codes.size == 0:
        raise EmptyHistogramError(f"channel {name!r} has no samples")
    space = float(1 << h.bit_depth)
    lo, hi = int(codes[0]), int(codes[-1])
    return ChannelReport(
        channel_name=name,
        bit_depth=h.bit_depth,
        unique_values=int(codes.size),
        usage_pct=codes.size / space * 100.0,
        range_pct=(hi - lo + 1) / space * 100.0,
        min_observed=lo,
        max_observed=hi,
        entropy_bits=entropy(h),
    )


def dataset_histograms(dataset) -> list:
    return [histogram(ch, dataset.bit_depth) for ch in dataset.channels]


def _load(item):
    if isinstance(item, (str, bytes)) or hasattr(item, "__fspath__"):
        from .ingest import load_dataset

        return load_dataset(item)
    return item


def _file_histograms(item):
    ds = _load(item)
    return ds.channel_names, ds.bit_depth, dataset_histograms(ds)


def analyze_corpus(file_list, parallelism=1) -> list:
    """Merge per-file histograms across a corpus and report each channel.

    ``file_list`` holds paths or Dataset objects. Per-file work runs on a
    thread pool; the reduction always proceeds in input order, so the result
    does not depend on ``parallelism``.
    """
    items = list(file_list)
    if not items:
        raise CorpusError("empty corpus")
    if parallelism and parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            per_file = list(pool.map(_file_histograms, items))
    else:
        per_file = [_file_histograms(it) for it in items]

    names, depth, _ = per_file[0]
    for item, (n, d, _) in zip(items, per_file):
        if n != names or d != depth:
            label = getattr(item, "source_id", None) or str(item)
            raise CorpusError(f"{label}: channel schema {n}/{d}-bit differs from {names}/{depth}-bit", path=label)
    reports = []
    for i, name in enumerate(names):
        total = reduce(merge, (hists[i] for _, _, hists in per_file))
        reports.append(channel_report(name, total))
    return reports


def corpus_histograms(file_list, parallelism=1) -> dict:
    """Merged histogram per channel name (for dumps)."""
    items = list(file_list)
    with ThreadPoolExecutor(max_workers=max(parallelism, 1)) as pool:
        per_file = list(pool.map(_file_histograms, items))
    names = per_file[0][0]
    return {name: reduce(merge, (h[i] for _, _, h in per_file)) for i, name in enumerate(names)}


# -- presentation ----------------------------------------------------------------


def _half_up(x, places=0) -> str:
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def report_rows(dataset_id, reports):
    for r in reports:
        yield [dataset_id, r.channel_name, r.unique_values, repr(r.usage_pct), repr(r.range_pct), repr(r.entropy_bits)]


def reports_to_csv(dataset_id, reports, header=True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(REPORT_COLUMNS)
    w.writerows(report_rows(dataset_id, reports))
    return buf.getvalue()


def reports_from_csv(text):
    """Parse CSV written by :func:`reports_to_csv` into (dataset, channel, values, usage, range, H) tuples."""
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        (r["dataset"], r["channel"], int(r["values"]), float(r["usage_pct"]),
         float(r["range_pct"]), float(r["entropy_bits"]))
        for r in rows
    ]


def reports_to_table(dataset_id, reports) -> str:
    """Markdown table with integer percentages and one-decimal entropy."""
    lines = [
        "| Dataset | Channel | Values | Usage | Range | H(x) | Note |",
        "|---|---|---:|---:|---:|---:|---|",
    ]
    for r in reports:
        note = "under-calibrated" if r.under_calibrated else ""
        lines.append(
            f"| {dataset_id} | {r.channel_name} | {r.unique_values} | {_half_up(r.usage_pct)}% | "
            f"{_half_up(r.range_pct)}% | {_half_up(r.entropy_bits, 1)} | {note} |"
        )
    return "\n".join(lines) + "\n"


def histogram_dump(h: Histogram, include_zero=False) -> str:
    """Two-column ``code count`` text, gnuplot-ready."""
    out = io.StringIO()
    out.write("# code count\n")
    if include_zero:
        codes = np.arange(h.counts.size, dtype=np.int64) - h.offset
        counts = h.counts
    else:
        codes, counts = h.nonzero()
    for c, n in zip(codes.tolist(), counts.tolist()):
        out.write(f"{c} {n}\n")
    return out.getvalue()


def max_entropy(unique_values) -> float:
    return math.log2(unique_values) if unique_values > 0 else 0.0
