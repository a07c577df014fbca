"""Loading waveform files into normalized integer datasets.

Supported inputs are headerless raw binary (with a JSON sidecar describing
the layout), CSV text and canonical PCM WAV. Float-valued sources are
mapped back to ADC codes with :func:`decalibrate`.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._pcm import NATIVE_WIDTH, code_range, pack_ints, unpack_ints
from .errors import (
    AlignmentError,
    CalibrationError,
    ColumnTypeError,
    ContainerError,
    LayoutError,
    ParseError,
    SampleRangeError,
    UnsupportedEncodingError,
)

SIDECAR_SUFFIX = ".json"
WAV_MAX_CHANNELS = 65535

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE
_KSDATAFORMAT_PCM_TAIL = b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"


def _readonly(samples) -> np.ndarray:
    arr = np.array(samples, dtype=np.int32, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ChannelBuffer:
    name: str
    samples: np.ndarray
    calibration: Optional[float] = None
    units: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "samples", _readonly(self.samples))
        c = self.calibration
        if c is not None and not (math.isfinite(c) and c > 0):
            raise CalibrationError(f"channel {self.name!r}: calibration must be positive and finite, got {c}")

    def __eq__(self, other):
        if not isinstance(other, ChannelBuffer):
            return NotImplemented
        return (
            self.name == other.name
            and self.calibration == other.calibration
            and self.units == other.units
            and np.array_equal(self.samples, other.samples)
        )

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True, eq=False)
class Dataset:
    """Frame-aligned multi-channel store of signed ADC codes.

    Samples are held as read-only int32 arrays regardless of bit depth.
    """

    channels: tuple
    sampling_rate: int
    bit_depth: int
    source_id: str = ""
    polarity: str = field(default="bipolar", init=False)

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.bit_depth not in NATIVE_WIDTH:
            raise LayoutError(f"bit depth must be 16 or 24, got {self.bit_depth}")
        if int(self.sampling_rate) <= 0:
            raise LayoutError(f"sampling rate must be positive, got {self.sampling_rate}")
        lengths = {len(ch) for ch in self.channels}
        if len(lengths) > 1:
            raise AlignmentError(f"channels have unequal lengths {sorted(lengths)}")
        lo, hi = code_range(self.bit_depth)
        for ch in self.channels:
            s = ch.samples
            if s.size and (s.min() < lo or s.max() > hi):
                bad = int(np.flatnonzero((s < lo) | (s > hi))[0])
                raise SampleRangeError(
                    f"channel {ch.name!r} sample {bad} outside {self.bit_depth}-bit range", index=bad
                )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.sampling_rate == other.sampling_rate
            and self.bit_depth == other.bit_depth
            and self.channels == other.channels
        )

    @property
    def frames(self) -> int:
        return len(self.channels[0]) if self.channels else 0

    @property
    def channel_count(self) -> int:
        return len(self.channels)

    @property
    def native_width(self) -> int:
        return NATIVE_WIDTH[self.bit_depth]

    @property
    def channel_names(self) -> list:
        return [ch.name for ch in self.channels]

    def matrix(self) -> np.ndarray:
        """Samples as a (frames, channels) int32 array."""
        if not self.channels:
            return np.zeros((0, 0), dtype=np.int32)
        return np.stack([ch.samples for ch in self.channels], axis=1)

    def slice_frames(self, start, stop) -> "Dataset":
        chans = [
            ChannelBuffer(ch.name, ch.samples[start:stop], ch.calibration, ch.units) for ch in self.channels
        ]
        return Dataset(chans, self.sampling_rate, self.bit_depth, self.source_id)

    @classmethod
    def from_arrays(cls, arrays, names=None, sampling_rate=1, bit_depth=16, calibrations=None, source_id=""):
        names = names or [f"ch{i}" for i in range(len(arrays))]
        calibrations = calibrations or [None] * len(arrays)
        chans = [ChannelBuffer(n, a, c) for n, a, c in zip(names, arrays, calibrations)]
        return cls(chans, sampling_rate, bit_depth, source_id)


@dataclass(frozen=True)
class RawLayout:
    channel_count: int
    sample_width: int = 2
    byte_order: str = "little"
    orientation: str = "row"

    def __post_init__(self):
        if self.sample_width not in (2, 3):
            raise LayoutError(f"raw sample width must be 2 or 3 bytes, got {self.sample_width}")
        if self.byte_order not in ("little", "big"):
            raise LayoutError(f"unknown byte order {self.byte_order!r}")
        if self.orientation not in ("row", "column"):
            raise LayoutError(f"unknown orientation {self.orientation!r}")
        if self.channel_count < 1:
            raise LayoutError("channel_count must be positive")


# -- calibration ------------------------------------------------------------


def decalibrate(values, calibration, bit_depth):
    """Map physical readings back to ADC codes, rounding half away from zero."""
    if not (math.isfinite(calibration) and calibration > 0):
        raise CalibrationError(f"calibration must be positive and finite, got {calibration}")
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if x.size and not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise SampleRangeError(f"value at index {bad} is not finite", index=bad)
    q = x / calibration
    codes = np.sign(q) * np.floor(np.abs(q) + 0.5)
    lo, hi = code_range(bit_depth)
    out_of_range = (codes < lo) | (codes > hi)
    if out_of_range.any():
        bad = int(np.flatnonzero(out_of_range)[0])
        raise SampleRangeError(
            f"value {x[bad]!r} at index {bad} maps to code {int(codes[bad])} outside {bit_depth}-bit range",
            index=bad,
        )
    return codes.astype(np.int32)


def calibrate(values, calibration):
    """ADC codes times calibration factor, as float64."""
    if not (math.isfinite(calibration) and calibration > 0):
        raise CalibrationError(f"calibration must be positive and finite, got {calibration}")
    out = np.asarray(values, dtype=np.int64).astype(np.float64) * calibration
    if out.size and not np.all(np.isfinite(out)):
        raise SampleRangeError("calibrated value overflows float64")
    return out


def load_calibration(path) -> dict:
    """Read a calibration sidecar: ``{"channel": {"factor": f, "units": "V"}}``.

    A bare number is accepted in place of the inner object.
    """
    raw = json.loads(Path(path).read_text())
    table = {}
    for name, entry in raw.items():
        if isinstance(entry, (int, float)):
            entry = {"factor": entry}
        factor = float(entry["factor"])
        if not (math.isfinite(factor) and factor > 0):
            raise CalibrationError(f"channel {name!r}: invalid calibration {factor}")
        table[name] = (factor, entry.get("units"))
    return table


def with_calibration(dataset: Dataset, table: dict) -> Dataset:
    chans = []
    for ch in dataset.channels:
        factor, units = table.get(ch.name, (ch.calibration, ch.units))
        chans.append(ChannelBuffer(ch.name, ch.samples, factor, units))
    return Dataset(chans, dataset.sampling_rate, dataset.bit_depth, dataset.source_id)


# -- raw binary ----------------------------------------------------------------


def parse_raw_bytes(data, layout: RawLayout, bit_depth, sampling_rate, names=None, source_id="") -> Dataset:
    if NATIVE_WIDTH.get(bit_depth) != layout.sample_width:
        raise LayoutError(f"{layout.sample_width}-byte samples do not match {bit_depth}-bit depth")
    frame_bytes = layout.sample_width * layout.channel_count
    remainder = len(data) % frame_bytes
    if remainder:
        raise AlignmentError(
            f"{len(data)} bytes is not a multiple of the {frame_bytes}-byte frame; {remainder} trailing bytes",
            remainder=remainder,
        )
    flat = unpack_ints(data, layout.sample_width, layout.byte_order)
    n = layout.channel_count
    if layout.orientation == "row":
        arrays = [flat[i::n] for i in range(n)]
    else:
        arrays = list(flat.reshape(n, -1))
    return Dataset.from_arrays(arrays, names, sampling_rate, bit_depth, source_id=source_id)


def read_raw_binary(path, layout: RawLayout, bit_depth, sampling_rate, names=None) -> Dataset:
    data = Path(path).read_bytes()
    return parse_raw_bytes(data, layout, bit_depth, sampling_rate, names, source_id=str(path))


def raw_bytes(dataset: Dataset, layout: RawLayout) -> bytes:
    m = dataset.matrix()
    flat = m.reshape(-1) if layout.orientation == "row" else m.T.reshape(-1)
    return pack_ints(flat, layout.sample_width, layout.byte_order)


def write_raw_binary(dataset: Dataset, path, orientation="row", byte_order="little", sidecar=True) -> RawLayout:
    """Write headerless samples and, by default, a ``<path>.json`` sidecar."""
    layout = RawLayout(max(dataset.channel_count, 1), dataset.native_width, byte_order, orientation)
    Path(path).write_bytes(raw_bytes(dataset, layout))
    if sidecar:
        write_sidecar(dataset, layout, str(path) + SIDECAR_SUFFIX)
    return layout


def write_sidecar(dataset: Dataset, layout: RawLayout, path):
    meta = {
        "format": "raw",
        "bit_depth": dataset.bit_depth,
        "sampling_rate": int(dataset.sampling_rate),
        "sample_width": layout.sample_width,
        "byte_order": layout.byte_order,
        "orientation": layout.orientation,
        "channels": [
            {"name": ch.name, "calibration": ch.calibration, "units": ch.units} for ch in dataset.channels
        ],
    }
    Path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_raw_with_sidecar(path, sidecar=None) -> Dataset:
    sidecar = Path(sidecar or str(path) + SIDECAR_SUFFIX)
    if not sidecar.exists():
        raise LayoutError(f"raw file {path} has no sidecar {sidecar}")
    meta = json.loads(sidecar.read_text())
    chans = meta["channels"]
    layout = RawLayout(
        channel_count=len(chans),
        sample_width=meta.get("sample_width", NATIVE_WIDTH[meta["bit_depth"]]),
        byte_order=meta.get("byte_order", "little"),
        orientation=meta.get("orientation", "row"),
    )
    ds = read_raw_binary(path, layout, meta["bit_depth"], meta["sampling_rate"], [c["name"] for c in chans])
    table = {c["name"]: (c["calibration"], c.get("units")) for c in chans if c.get("calibration")}
    return with_calibration(ds, table) if table else ds


# -- CSV -------------------------------------------------------------------------


@dataclass(frozen=True)
class CsvColumn:
    """One declared CSV column. ``kind`` is ``"value"`` or ``"timestamp"``."""

    index: int
    name: str = ""
    kind: str = "value"
    calibration: Optional[float] = None
    units: Optional[str] = None


@dataclass(frozen=True)
class CsvColumnSpec:
    columns: Sequence[CsvColumn]
    bit_depth: int = 16
    sampling_rate: int = 1
    header: bool = False
    delimiter: str = ","


def _parse_number(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_csv_waveform(path, column_spec: CsvColumnSpec) -> Dataset:
    """Parse one frame per line. Timestamp columns are validated as present and dropped."""
    value_cols = [c for c in column_spec.columns if c.kind == "value"]
    needed = max(c.index for c in column_spec.columns) + 1
    cells = [[] for _ in value_cols]
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=column_spec.delimiter)
        for lineno, row in enumerate(reader, start=1):
            if column_spec.header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < needed:
                raise ParseError(f"row {lineno}: expected at least {needed} columns, got {len(row)}", row=lineno)
            for slot, col in enumerate(value_cols):
                try:
                    cells[slot].append(_parse_number(row[col.index]))
                except ValueError:
                    raise ParseError(f"row {lineno}: cannot parse {row[col.index]!r}", row=lineno) from None

    chans = []
    for slot, col in enumerate(value_cols):
        name = col.name or f"ch{slot}"
        values = cells[slot]
        kinds = {type(v) for v in values}
        if kinds == {int, float}:
            raise ColumnTypeError(f"column {col.index} ({name}) mixes integer and real values")
        if kinds == {float}:
            if col.calibration is None:
                raise CalibrationError(f"column {col.index} ({name}) holds reals but has no calibration factor")
            codes = decalibrate(values, col.calibration, column_spec.bit_depth)
        else:
            codes = np.asarray(values, dtype=np.int64)
            lo, hi = code_range(column_spec.bit_depth)
            bad = np.flatnonzero((codes < lo) | (codes > hi))
            if bad.size:
                raise SampleRangeError(f"column {name}: value at index {bad[0]} outside range", index=int(bad[0]))
        chans.append(ChannelBuffer(name, codes, col.calibration, col.units))
    return Dataset(chans, column_spec.sampling_rate, column_spec.bit_depth, source_id=str(path))


def csv_spec_from_json(obj) -> CsvColumnSpec:
    cols = [CsvColumn(**c) for c in obj["columns"]]
    return CsvColumnSpec(
        cols,
        bit_depth=obj.get("bit_depth", 16),
        sampling_rate=obj.get("sampling_rate", 1),
        header=obj.get("header", False),
        delimiter=obj.get("delimiter", ","),
    )


def write_csv_waveform(dataset: Dataset, path, header=True):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(dataset.channel_names)
        w.writerows(dataset.matrix().tolist())


# -- WAV ---------------------------------------------------------------------------


def read_pcm_wav(path) -> Dataset:
    data = Path(path).read_bytes()
    return parse_pcm_wav(data, source_id=str(path))


def parse_pcm_wav(data: bytes, source_id="") -> Dataset:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ContainerError("not a RIFF/WAVE file")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid, size = data[pos:pos + 4], struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            if len(body) < size:
                raise ContainerError(f"data chunk truncated: {len(body)} of {size} bytes")
            payload = body
            break
        pos += 8 + size + (size & 1)
    if fmt is None or len(fmt) < 16:
        raise ContainerError("missing or short fmt chunk")
    if payload is None:
        raise ContainerError("missing data chunk")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if tag == _WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 40:
            raise ContainerError("short WAVE_FORMAT_EXTENSIBLE header")
        sub = fmt[24:40]
        if sub[:2] != struct.pack("<H", _WAVE_FORMAT_PCM) or sub[2:] != _KSDATAFORMAT_PCM_TAIL:
            raise UnsupportedEncodingError("extensible WAV with non-PCM subformat")
    elif tag == _WAVE_FORMAT_IEEE_FLOAT:
        raise UnsupportedEncodingError("float PCM WAV is not supported")
    elif tag != _WAVE_FORMAT_PCM:
        raise UnsupportedEncodingError(f"WAV format tag 0x{tag:04x} is not integer PCM")
    if bits not in NATIVE_WIDTH:
        raise UnsupportedEncodingError(f"{bits}-bit PCM is not supported (16 or 24 only)")
    width = NATIVE_WIDTH[bits]
    if channels < 1 or block_align != width * channels:
        raise ContainerError(f"inconsistent header: {channels} channels, block align {block_align}")
    usable = len(payload) - len(payload) % block_align
    layout = RawLayout(channels, width, "little", "row")
    return parse_raw_bytes(
        payload[:usable], layout, bits, rate, [f"ch{i}" for i in range(channels)], source_id=source_id
    )


def pcm_wav_bytes(dataset: Dataset) -> bytes:
    n = dataset.channel_count
    if not 1 <= n <= WAV_MAX_CHANNELS:
        raise LayoutError(f"WAV holds 1..{WAV_MAX_CHANNELS} channels, got {n}")
    width = dataset.native_width
    body = raw_bytes(dataset, RawLayout(n, width, "little", "row"))
    fmt = struct.pack(
        "<HHIIHH", _WAVE_FORMAT_PCM, n, int(dataset.sampling_rate),
        int(dataset.sampling_rate) * n * width, n * width, dataset.bit_depth,
    )
    pad = b"\x00" if len(body) & 1 else b""
    riff_size = 4 + (8 + len(fmt)) + (8 + len(body) + len(pad))
    return b"".join([
        b"RIFF", struct.pack("<I", riff_size), b"WAVE",
        b"fmt ", struct.pack("<I", len(fmt)), fmt,
        b"data", struct.pack("<I", len(body)), body, pad,
    ])


def write_pcm_wav(dataset: Dataset, path):
    Path(path).write_bytes(pcm_wav_bytes(dataset))


# -- dispatch ------------------------------------------------------------------------


def load_dataset(path, csv_spec: Optional[CsvColumnSpec] = None, calibration=None) -> Dataset:
    """Open any supported file, choosing the reader by extension."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".wav":
        ds = read_pcm_wav(p)
    elif suffix == ".csv":
        if csv_spec is None:
            side = Path(str(p) + SIDECAR_SUFFIX)
            if not side.exists():
                raise LayoutError(f"CSV file {p} needs a column spec or sidecar {side}")
            csv_spec = csv_spec_from_json(json.loads(side.read_text()))
        ds = read_csv_waveform(p, csv_spec)
    else:
        ds = read_raw_with_sidecar(p)
    if calibration:
        ds = with_calibration(ds, load_calibration(calibration) if not isinstance(calibration, dict) else calibration)
    return ds
