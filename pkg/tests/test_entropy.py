import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import entropy_from_samples

from lpcmbench.entropy import (
    Histogram,
    analyze_corpus,
    channel_report,
    entropy,
    histogram,
    histogram_dump,
    merge,
    reports_from_csv,
    reports_to_csv,
    reports_to_table,
)
from lpcmbench.errors import CorpusError, EmptyHistogramError, MergeError
from lpcmbench.ingest import Dataset, write_raw_binary
from lpcmbench.synth import SynthSpec, generate

samples16 = st.lists(st.integers(-32768, 32767), max_size=200)


def test_histogram_counts():
    h = histogram([0, 0, 5], 16)
    assert h.count(0) == 2 and h.count(5) == 1 and h.total == 3
    assert h.counts[32768] == 2


def test_histogram_empty():
    h = histogram([], 16)
    assert h.total == 0 and h == Histogram.zeros(16)


def test_histogram_uniform_poisson_bounds():
    rng = np.random.default_rng(2024)
    s = rng.integers(-32768, 32768, 1_000_000)
    h = histogram(s, 16)
    lam = 1_000_000 / 65536
    assert np.all(np.abs(h.counts.astype(float) - lam) <= 5 * math.sqrt(lam))


def test_histogram_index_mapping_24bit():
    h = histogram([-(1 << 23), (1 << 23) - 1], 24)
    assert h.counts[0] == 1 and h.counts[-1] == 1 and h.counts.size == 1 << 24


@given(samples16, samples16)
def test_merge_matches_concatenation(x, y):
    assert histogram(x + y, 16) == merge(histogram(x, 16), histogram(y, 16))


@given(samples16, samples16, samples16)
def test_merge_monoid(x, y, z):
    a, b, c = (histogram(v, 16) for v in (x, y, z))
    zero = Histogram.zeros(16)
    assert merge(a, zero) == a == merge(zero, a)
    assert merge(a, b) == merge(b, a)
    assert merge(merge(a, b), c) == merge(a, merge(b, c))


def test_merge_depth_mismatch():
    with pytest.raises(MergeError):
        merge(Histogram.zeros(16), histogram([1], 24))


def test_entropy_examples():
    assert entropy(histogram([7] * 100, 16)) == 0.0
    uniform = Histogram(16, np.full(1 << 16, 3, dtype=np.uint64))
    assert entropy(uniform) == pytest.approx(16.0, abs=1e-12)
    # counts {a: 1, b: 1, c: 2}: -(1/4 log 1/4 + 1/4 log 1/4 + 1/2 log 1/2) = 0.5 + 0.5 + 0.5
    assert entropy(histogram([1, 2, 3, 3], 16)) == pytest.approx(1.5, abs=1e-12)


def test_entropy_empty():
    with pytest.raises(EmptyHistogramError):
        entropy(Histogram.zeros(16))


@given(st.lists(st.integers(-32768, 32767), min_size=1, max_size=300))
def test_entropy_matches_oracle_and_bounds(x):
    h = histogram(x, 16)
    H = entropy(h)
    assert H == pytest.approx(entropy_from_samples(x), abs=1e-9)
    unique = len(set(x))
    assert 0.0 <= H <= math.log2(unique) + 1e-9 <= 16 + 1e-9


@given(st.lists(st.integers(-100, 100), min_size=1, max_size=100), st.randoms())
def test_entropy_permutation_invariant(x, rnd):
    y = list(x)
    rnd.shuffle(y)
    assert entropy(histogram(x, 16)) == entropy(histogram(y, 16))


def test_channel_report_example():
    r = channel_report("c", histogram([-2, 0, 3, 3], 16))
    assert r.unique_values == 3
    assert r.usage_pct == 3 / 65536 * 100
    assert r.range_pct == 6 / 65536 * 100
    assert (r.min_observed, r.max_observed) == (-2, 3)


def test_channel_report_full_range():
    h = Histogram(16, np.ones(1 << 16, dtype=np.uint64))
    r = channel_report("u", h)
    assert r.usage_pct == 100.0 and r.range_pct == 100.0 and r.entropy_bits == pytest.approx(16.0)


def test_channel_report_sine_against_bruteforce():
    spec = SynthSpec(sampling_rate=50_000, duration=1.0, amplitude_utilization=0.9, noise_lsb=3, seed=5)
    ds = generate(spec, ["voltage"])
    s = ds.channels[0].samples
    r = channel_report("voltage", histogram(s, 16))
    assert r.range_pct == pytest.approx(90, abs=0.1)
    assert r.entropy_bits == pytest.approx(entropy_from_samples(s.tolist()), abs=1e-9)
    assert r.usage_pct <= r.range_pct <= 100


def test_channel_report_empty():
    with pytest.raises(EmptyHistogramError):
        channel_report("x", Histogram.zeros(16))


def _stream(seed=9):
    spec = SynthSpec(sampling_rate=10_000, duration=1.6, noise_lsb=4, harmonics=[(5, 0.05, 0.3)], seed=seed)
    return generate(spec, ["voltage", "current"])


def test_analyze_corpus_single_file():
    ds = _stream()
    reports = analyze_corpus([ds])
    assert reports == [channel_report(c.name, histogram(c, 16)) for c in ds.channels]


def test_analyze_corpus_split_equals_whole(tmp_path):
    ds = _stream()
    bounds = np.linspace(0, ds.frames, 17).astype(int)
    paths = []
    for i, (a, b) in enumerate(zip(bounds, bounds[1:])):
        p = tmp_path / f"part{i:02d}.raw"
        write_raw_binary(ds.slice_frames(a, b), p)
        paths.append(p)
    whole = analyze_corpus([ds])
    assert analyze_corpus(paths, parallelism=1) == whole
    assert analyze_corpus(paths, parallelism=4) == whole
    assert analyze_corpus(list(reversed(paths)), parallelism=3) == whole


def test_analyze_corpus_schema_mismatch():
    a = _stream()
    b = Dataset.from_arrays([[1, 2]], names=["other"], bit_depth=16, source_id="bad.raw")
    with pytest.raises(CorpusError) as info:
        analyze_corpus([a, b])
    assert info.value.path == "bad.raw"


def test_report_csv_roundtrip_and_table():
    reports = analyze_corpus([_stream()])
    text = reports_to_csv("syn", reports)
    assert text.splitlines()[0] == "dataset,channel,values,usage_pct,range_pct,entropy_bits"
    parsed = reports_from_csv(text)
    assert [(p[1], p[2], p[3], p[4], p[5]) for p in parsed] == [
        (r.channel_name, r.unique_values, r.usage_pct, r.range_pct, r.entropy_bits) for r in reports
    ]
    table = reports_to_table("syn", reports)
    assert table.count("\n") == 2 + len(reports)


def test_table_rounds_half_up():
    from lpcmbench.entropy import ChannelReport

    r = ChannelReport("v", 16, 10, 12.5, 17.5, -5, 5, 13.25)
    line = reports_to_table("d", [r]).splitlines()[-1]
    assert "| 13% | 18% | 13.3 |" in line


def test_under_calibrated_flag():
    spec = SynthSpec(amplitude_utilization=0.05, seed=1)
    r = analyze_corpus([generate(spec, ["voltage"])])[0]
    assert r.under_calibrated
    assert "under-calibrated" in reports_to_table("d", [r])


def test_histogram_dump():
    text = histogram_dump(histogram([1, 1, -3], 16))
    assert text.splitlines() == ["# code count", "-3 1", "1 2"]
