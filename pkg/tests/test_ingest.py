import json
import struct

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpcmbench._pcm import pack_ints, unpack_ints
from lpcmbench.errors import (
    AlignmentError,
    CalibrationError,
    ColumnTypeError,
    ContainerError,
    ParseError,
    SampleRangeError,
    UnsupportedEncodingError,
)
from lpcmbench.ingest import (
    CsvColumn,
    CsvColumnSpec,
    Dataset,
    RawLayout,
    calibrate,
    decalibrate,
    load_calibration,
    load_dataset,
    read_csv_waveform,
    read_pcm_wav,
    read_raw_binary,
    write_pcm_wav,
    write_raw_binary,
)
from lpcmbench.synth import SynthSpec, generate


def test_raw_16bit_little_endian(tmp_path):
    p = tmp_path / "a.raw"
    p.write_bytes(bytes.fromhex("0500FBFF0080"))
    ds = read_raw_binary(p, RawLayout(1, 2), 16, 1000)
    assert ds.channels[0].samples.tolist() == [5, -5, -32768]


def test_raw_24bit_max_positive(tmp_path):
    p = tmp_path / "a.raw"
    p.write_bytes(bytes.fromhex("FFFF7F"))
    ds = read_raw_binary(p, RawLayout(1, 3), 24, 1000)
    assert ds.channels[0].samples.tolist() == [8388607]


def test_raw_truncated_reports_remainder(tmp_path):
    p = tmp_path / "a.raw"
    p.write_bytes(b"\x00" * 5)
    with pytest.raises(AlignmentError) as info:
        read_raw_binary(p, RawLayout(1, 2), 16, 1000)
    assert info.value.remainder == 1


def test_raw_big_endian_and_column_major(tmp_path):
    p = tmp_path / "a.raw"
    # two channels, column-major, big-endian: A=[1, 2], B=[-1, 3]
    p.write_bytes(struct.pack(">4h", 1, 2, -1, 3))
    ds = read_raw_binary(p, RawLayout(2, 2, "big", "column"), 16, 10, names=["a", "b"])
    assert ds.channels[0].samples.tolist() == [1, 2]
    assert ds.channels[1].samples.tolist() == [-1, 3]


def test_24bit_sign_extension_exhaustive():
    codes = np.arange(-(1 << 23), 1 << 23, dtype=np.int64)
    data = pack_ints(codes, 3)
    # independent route: left-align each 3-byte word in an int32 and shift arithmetically
    b = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3)
    padded = np.zeros((b.shape[0], 4), dtype=np.uint8)
    padded[:, 1:] = b
    oracle = padded.view("<i4").reshape(-1) >> 8
    np.testing.assert_array_equal(oracle, codes)
    np.testing.assert_array_equal(unpack_ints(data, 3), codes)


@given(st.lists(st.integers(-(1 << 23), (1 << 23) - 1), max_size=50), st.sampled_from(["little", "big"]))
def test_24bit_pack_matches_int_to_bytes(values, order):
    data = pack_ints(values, 3, order)
    expected = b"".join(v.to_bytes(3, order, signed=True) for v in values)
    assert data == expected
    assert unpack_ints(data, 3, order).tolist() == values


def test_raw_roundtrip_with_sidecar(tmp_path, mains):
    p = tmp_path / "m.raw"
    write_raw_binary(mains, p, orientation="column")
    meta = json.loads((tmp_path / "m.raw.json").read_text())
    assert meta["orientation"] == "column"
    back = load_dataset(p)
    assert back == mains


# -- CSV ----------------------------------------------------------------------------


def test_csv_integer_column(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("1,100\n2,-100\n")
    spec = CsvColumnSpec([CsvColumn(0, "t", "timestamp"), CsvColumn(1, "current", "value")], bit_depth=16)
    ds = read_csv_waveform(p, spec)
    assert ds.channel_names == ["current"]
    assert ds.channels[0].samples.tolist() == [100, -100]


def test_csv_parse_error_row_number(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("abc,1\n")
    spec = CsvColumnSpec([CsvColumn(0, "a"), CsvColumn(1, "b")])
    with pytest.raises(ParseError) as info:
        read_csv_waveform(p, spec)
    assert info.value.row == 1


def test_csv_mixed_types_rejected(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("1\n2.5\n")
    with pytest.raises(ColumnTypeError):
        read_csv_waveform(p, CsvColumnSpec([CsvColumn(0, "v", calibration=0.5)]))


def test_csv_reals_are_decalibrated(tmp_path):
    # 230.05 / 0.01 evaluated at 50 digits is 23005.00000000000066: nearest integer 23005
    mpmath.mp.dps = 50
    assert int(mpmath.nint(mpmath.mpf(230.05) / mpmath.mpf(0.01))) == 23005
    p = tmp_path / "w.csv"
    p.write_text("voltage\n230.05\n-230.05\n")
    spec = CsvColumnSpec([CsvColumn(0, "voltage", calibration=0.01, units="V")], header=True)
    ds = read_csv_waveform(p, spec)
    assert ds.channels[0].samples.tolist() == [23005, -23005]
    assert ds.channels[0].calibration == 0.01


def test_csv_reals_without_calibration(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("1.5\n")
    with pytest.raises(CalibrationError):
        read_csv_waveform(p, CsvColumnSpec([CsvColumn(0, "v")]))


# -- WAV ----------------------------------------------------------------------------


def test_wav_zero_frames_16bit(tmp_path):
    ds = Dataset.from_arrays([np.zeros(8)], sampling_rate=8000, bit_depth=16)
    p = tmp_path / "z.wav"
    write_pcm_wav(ds, p)
    back = read_pcm_wav(p)
    assert back.frames == 8 and not back.channels[0].samples.any()
    assert back.channel_names == ["ch0"]


def test_wav_header_only(tmp_path):
    ds = Dataset.from_arrays([np.zeros(0)], sampling_rate=8000, bit_depth=16)
    p = tmp_path / "e.wav"
    write_pcm_wav(ds, p)
    assert p.stat().st_size == 44
    assert read_pcm_wav(p).frames == 0


def test_wav_minus_one_bytes(tmp_path):
    ds = Dataset.from_arrays([[-1]], sampling_rate=8000, bit_depth=16)
    p = tmp_path / "m.wav"
    write_pcm_wav(ds, p)
    data = p.read_bytes()
    assert data[36:40] == b"data" and data[44:46] == b"\xff\xff"


def test_wav_24bit_stereo_synth_roundtrip(tmp_path):
    spec = SynthSpec(sampling_rate=16_000, duration=0.5, bit_depth=24, noise_lsb=20, seed=3)
    ds = generate(spec, ["voltage", "current"])
    p = tmp_path / "s.wav"
    write_pcm_wav(ds, p)
    back = read_pcm_wav(p)
    assert back.bit_depth == 24 and back.sampling_rate == 16_000
    for a, b in zip(ds.channels, back.channels):
        np.testing.assert_array_equal(a.samples, b.samples)


def test_wav_sine_roundtrip_bytes(tmp_path):
    spec = SynthSpec(sampling_rate=12_000, duration=2.0, seed=1)
    ds = generate(spec, ["voltage"])
    p1, p2 = tmp_path / "a.wav", tmp_path / "b.wav"
    write_pcm_wav(ds, p1)
    write_pcm_wav(read_pcm_wav(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def _wav_header(tag, bits, channels=1):
    fmt = struct.pack("<HHIIHH", tag, channels, 8000, 8000 * channels * bits // 8, channels * bits // 8, bits)
    body = b"\x00" * (channels * bits // 8)
    return b"RIFF" + struct.pack("<I", 4 + 8 + 16 + 8 + len(body)) + b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", len(body)) + body


def test_wav_float_rejected(tmp_path):
    p = tmp_path / "f.wav"
    p.write_bytes(_wav_header(3, 32))
    with pytest.raises(UnsupportedEncodingError):
        read_pcm_wav(p)


def test_wav_8bit_rejected(tmp_path):
    p = tmp_path / "f.wav"
    p.write_bytes(_wav_header(1, 8))
    with pytest.raises(UnsupportedEncodingError):
        read_pcm_wav(p)


def test_wav_garbage_is_container_error(tmp_path):
    p = tmp_path / "g.wav"
    p.write_bytes(b"RIFX0000WAVEfmt ")
    with pytest.raises(ContainerError):
        read_pcm_wav(p)


# -- calibration ---------------------------------------------------------------------


def test_decalibrate_examples():
    assert decalibrate([0.0], 0.1, 16).tolist() == [0]
    assert decalibrate([2.5, -2.5], 0.5, 16).tolist() == [5, -5]


def test_decalibrate_half_away_from_zero():
    assert decalibrate([0.25, -0.25, 0.75], 0.5, 16).tolist() == [1, -1, 2]


def test_decalibrate_range_error_names_index():
    with pytest.raises(SampleRangeError) as info:
        decalibrate([0.0, 1.0, 400.0], 0.01, 16)
    assert info.value.index == 2


def test_calibrate_examples():
    assert calibrate([100], 0.01).tolist() == [1.0]
    mpmath.mp.dps = 50
    exact = mpmath.mpf(23005) * mpmath.mpf(0.01)
    assert calibrate([23005], 0.01)[0] == float(exact) == 230.05


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_calibration_must_be_positive_finite(bad):
    with pytest.raises(CalibrationError):
        calibrate([1], bad)
    with pytest.raises(CalibrationError):
        decalibrate([1.0], bad, 16)


def test_calibration_roundtrip_properties():
    rng = np.random.default_rng(11)
    codes = rng.integers(-32768, 32768, 100_000)
    for c in (0.01, 0.1, 1 / 3, 7.3e-5):
        assert np.array_equal(decalibrate(calibrate(codes, c), c, 16), codes)
        reals = rng.uniform(-32767 * c, 32767 * c, 100_000)
        assert np.all(np.abs(calibrate(decalibrate(reals, c, 16), c) - reals) <= c / 2)


@given(st.floats(-1e3, 1e3, allow_nan=False), st.floats(1e-3, 10))
def test_decalibrate_half_step_bound(value, cal):
    code = decalibrate([value], cal, 24)[0]
    assert abs(value - code * cal) <= cal / 2 * (1 + 1e-12)


def test_load_calibration(tmp_path):
    p = tmp_path / "cal.json"
    p.write_text(json.dumps({"voltage": {"factor": 0.01, "units": "V"}, "current": 0.002}))
    table = load_calibration(p)
    assert table == {"voltage": (0.01, "V"), "current": (0.002, None)}


def test_dataset_invariants():
    with pytest.raises(AlignmentError):
        Dataset.from_arrays([[1, 2], [1]], bit_depth=16)
    with pytest.raises(SampleRangeError):
        Dataset.from_arrays([[40000]], bit_depth=16)
    ds = Dataset.from_arrays([[1, 2]], bit_depth=16)
    with pytest.raises(ValueError):
        ds.channels[0].samples[0] = 5
