"""Reversible integer and byte stream transforms applied ahead of compression.

All functions are vectorized with numpy and operate on whole buffers.
"""
from __future__ import annotations

import numpy as np

from ._pcm import code_range, pack_ints, unpack_ints
from .errors import AlignmentError, CorruptionError, DecodeError, LayoutError

# values beyond +-2**62 would need a tenth LEB128 byte
_LEB_LIMIT = 1 << 62


# -- delta ----------------------------------------------------------------------


def delta_encode(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64).reshape(-1)
    if v.size == 0:
        return v.copy()
    return np.diff(v, prepend=np.int64(0))


def delta_decode(deltas, bit_depth=None) -> np.ndarray:
    """Running sum of deltas; with ``bit_depth`` the result is range-checked."""
    d = np.asarray(deltas, dtype=np.int64).reshape(-1)
    v = np.cumsum(d, dtype=np.int64)
    if bit_depth is not None and v.size:
        lo, hi = code_range(bit_depth)
        bad = np.flatnonzero((v < lo) | (v > hi))
        if bad.size:
            raise CorruptionError(f"delta stream reconstructs out-of-range value at index {bad[0]}")
    return v


# -- signed LEB128 ----------------------------------------------------------------


def leb128s_length(values) -> np.ndarray:
    """Bytes needed per value: the smallest n with -2**(7n-1) <= v < 2**(7n-1)."""
    v = np.asarray(values, dtype=np.int64)
    mag = np.where(v < 0, ~v, v)  # ~v == -v-1 maps the negative range onto the positive one
    n = np.ones(v.shape, dtype=np.int64)
    bound = np.int64(64)
    for k in range(1, 10):
        n += mag >= bound
        if k < 9:
            bound = bound << 7
    return n


def leb128s_encode(values) -> bytes:
    v = np.asarray(values, dtype=np.int64).reshape(-1)
    if v.size == 0:
        return b""
    if v.max() >= _LEB_LIMIT or v.min() < -_LEB_LIMIT:
        raise ValueError("leb128s_encode supports magnitudes below 2**62")
    n = leb128s_length(v)
    starts = np.zeros(v.size, dtype=np.int64)
    np.cumsum(n[:-1], out=starts[1:])
    out = np.empty(int(n.sum()), dtype=np.uint8)
    for k in range(int(n.max())):
        sel = n > k
        chunk = ((v[sel] >> (7 * k)) & 0x7F).astype(np.uint8)
        more = n[sel] - 1 > k
        chunk[more] |= 0x80
        out[starts[sel] + k] = chunk
    return out.tobytes()


def leb128s_decode(data, expected_count) -> np.ndarray:
    b = np.frombuffer(bytes(data), dtype=np.uint8)
    if expected_count == 0:
        if b.size:
            raise DecodeError(f"{b.size} trailing bytes after 0 values")
        return np.zeros(0, dtype=np.int64)
    if b.size == 0:
        raise DecodeError(f"empty input, expected {expected_count} values")
    ends = np.flatnonzero((b & 0x80) == 0)
    if ends.size < expected_count:
        if ends.size == 0 or ends[-1] != b.size - 1:
            raise DecodeError("truncated value: input ends inside a continuation sequence")
        raise DecodeError(f"only {ends.size} values present, expected {expected_count}")
    last = ends[expected_count - 1]
    if last != b.size - 1:
        raise DecodeError(f"{b.size - 1 - last} trailing bytes after {expected_count} values")
    starts = np.empty(expected_count, dtype=np.int64)
    starts[0] = 0
    starts[1:] = ends[:-1] + 1
    lengths = ends - starts + 1
    if lengths.max() > 9:
        raise DecodeError("value longer than 9 bytes")
    group = np.repeat(np.arange(expected_count), lengths)
    pos = np.arange(b.size) - starts[group]
    payload = (b & 0x7F).astype(np.uint64) << (7 * pos).astype(np.uint64)
    raw = np.zeros(expected_count, dtype=np.uint64)
    np.add.at(raw, group, payload)
    # sign-extend from bit 7n-1 via a left/arithmetic-right shift pair
    shift = (64 - 7 * lengths).astype(np.uint64)
    return (raw << shift).view(np.int64) >> shift.astype(np.int64)


# -- serialization ------------------------------------------------------------------


def interleave(arrays, orientation) -> np.ndarray:
    """Flatten per-channel arrays: ``row`` interleaves frames, ``column`` concatenates channels."""
    if not len(arrays):
        return np.zeros(0, dtype=np.int64)
    m = np.stack([np.asarray(a, dtype=np.int64) for a in arrays])
    if orientation == "row":
        return m.T.reshape(-1)
    if orientation in ("column", "col"):
        return m.reshape(-1)
    raise LayoutError(f"unknown orientation {orientation!r}")


def deinterleave(flat, channels, orientation) -> list:
    flat = np.asarray(flat).reshape(-1)
    if channels == 0:
        return []
    if flat.size % channels:
        raise AlignmentError(f"{flat.size} values do not divide into {channels} channels")
    if orientation == "row":
        return [flat[i::channels] for i in range(channels)]
    if orientation in ("column", "col"):
        return list(flat.reshape(channels, -1))
    raise LayoutError(f"unknown orientation {orientation!r}")


def serialize(dataset, orientation, width) -> bytes:
    """Little-endian two's complement at ``width`` bytes in the given orientation."""
    if width not in (2, 3, 4):
        raise LayoutError(f"width must be 2, 3 or 4 bytes, got {width}")
    if 8 * width < dataset.bit_depth:
        raise LayoutError(f"{width}-byte words cannot hold {dataset.bit_depth}-bit samples")
    flat = interleave([ch.samples for ch in dataset.channels], orientation)
    return pack_ints(flat, width)


def deserialize(data, template, orientation, width):
    """Rebuild a Dataset shaped like ``template`` (names, rate, depth) from serialized bytes."""
    from .ingest import ChannelBuffer, Dataset

    flat = unpack_ints(data, width)
    arrays = deinterleave(flat, template.channel_count, orientation)
    chans = [ChannelBuffer(c.name, a, c.calibration, c.units) for c, a in zip(template.channels, arrays)]
    return Dataset(chans, template.sampling_rate, template.bit_depth, template.source_id)


# -- shuffle filters -------------------------------------------------------------------


def byte_shuffle(data, stride) -> bytes:
    b = np.frombuffer(bytes(data), dtype=np.uint8)
    if stride < 1 or b.size % stride:
        raise AlignmentError(f"{b.size} bytes do not divide into {stride}-byte elements", remainder=b.size % max(stride, 1))
    return b.reshape(-1, stride).T.tobytes()


def byte_unshuffle(data, stride) -> bytes:
    b = np.frombuffer(bytes(data), dtype=np.uint8)
    if stride < 1 or b.size % stride:
        raise AlignmentError(f"{b.size} bytes do not divide into {stride}-byte elements", remainder=b.size % max(stride, 1))
    return b.reshape(stride, -1).T.tobytes()


def _bit_geometry(size, elem_bits):
    if elem_bits % 8 or elem_bits <= 0:
        raise AlignmentError(f"element size {elem_bits} bits is not a whole number of bytes")
    elem_bytes = elem_bits // 8
    if size % elem_bytes:
        raise AlignmentError(f"{size} bytes do not divide into {elem_bytes}-byte elements", remainder=size % elem_bytes)
    count = size // elem_bytes
    if count % 8:
        raise AlignmentError(f"bit shuffle needs a multiple of 8 elements, got {count}", remainder=count % 8)
    return elem_bytes, count


def bit_shuffle(data, elem_bits) -> bytes:
    """Bit-plane transpose: plane k holds bit k (LSB first) of every element."""
    b = np.frombuffer(bytes(data), dtype=np.uint8)
    elem_bytes, count = _bit_geometry(b.size, elem_bits)
    if count == 0:
        return b""
    bits = np.unpackbits(b.reshape(count, elem_bytes), axis=1, bitorder="little")
    return np.packbits(bits.T, axis=1, bitorder="little").tobytes()


def bit_unshuffle(data, elem_bits) -> bytes:
    b = np.frombuffer(bytes(data), dtype=np.uint8)
    elem_bytes, count = _bit_geometry(b.size, elem_bits)
    if count == 0:
        return b""
    planes = np.unpackbits(b.reshape(elem_bits, count // 8), axis=1, bitorder="little")
    return np.packbits(planes.T, axis=1, bitorder="little").tobytes()


def bit_shuffle_blocked(data, elem_bits) -> bytes:
    """bit_shuffle over the largest multiple-of-8 element prefix; the tail is copied as-is."""
    elem_bytes = elem_bits // 8
    n = len(data) // elem_bytes
    cut = (n - n % 8) * elem_bytes
    return bit_shuffle(data[:cut], elem_bits) + bytes(data[cut:])


def bit_unshuffle_blocked(data, elem_bits) -> bytes:
    elem_bytes = elem_bits // 8
    n = len(data) // elem_bytes
    cut = (n - n % 8) * elem_bytes
    return bit_unshuffle(data[:cut], elem_bits) + bytes(data[cut:])


# -- chains ----------------------------------------------------------------------------

INTEGER_STEPS = ("delta", "xdelta")
ENCODING_STEPS = ("leb128s",)
BYTE_STEPS = ("shuffle", "bitshuffle")


def _step_kind(token):
    return token.split(":", 1)[0]


class TransformChain:
    """An ordered, invertible transform pipeline between channel arrays and bytes.

    Steps, in the only order they may appear:

    * ``delta`` - per-channel differencing before serialization
    * ``xdelta`` - differencing of the already-serialized integer stream
    * ``leb128s`` - variable-length integer encoding; otherwise samples are
      written fixed-width (native width, or 4 bytes once a delta is applied)
    * ``shuffle:N`` / ``bitshuffle:N`` - byte/bit plane filters over
      fixed-width words (N bytes / N bits per element)
    """

    def __init__(self, steps=()):
        self.steps = tuple(steps)
        self._validate()

    @classmethod
    def parse(cls, text):
        if text in ("", "identity", "raw"):
            return cls(())
        return cls(tuple(t for t in text.split("+") if t))

    @property
    def name(self):
        return "+".join(self.steps) if self.steps else "identity"

    def __repr__(self):
        return f"TransformChain({self.name!r})"

    def __eq__(self, other):
        return isinstance(other, TransformChain) and self.steps == other.steps

    def __hash__(self):
        return hash(self.steps)

    @property
    def has_delta(self):
        return any(s in INTEGER_STEPS for s in self.steps)

    @property
    def variable_length(self):
        return "leb128s" in self.steps

    def word_width(self, bit_depth):
        """Fixed serialization width in bytes, or None for variable-length output."""
        if self.variable_length:
            return None
        if self.has_delta:
            return 4
        return 2 if bit_depth == 16 else 3

    def _validate(self):
        order = {"delta": 0, "xdelta": 1, "leb128s": 2, "shuffle": 3, "bitshuffle": 3}
        last = -1
        seen = set()
        for tok in self.steps:
            kind = _step_kind(tok)
            if kind not in order:
                raise ValueError(f"unknown transform {tok!r}")
            if kind in seen:
                raise ValueError(f"transform {kind!r} appears twice")
            if order[kind] < last or (order[kind] == 3 and last == 3):
                raise ValueError(f"transform {tok!r} is out of order in {self.steps}")
            if kind in BYTE_STEPS:
                if "leb128s" in seen:
                    raise ValueError(f"{kind} needs fixed-width input, not leb128s output")
                arg = tok.split(":", 1)[1] if ":" in tok else ""
                if not arg.isdigit() or int(arg) <= 0:
                    raise ValueError(f"{kind} needs a positive element size, e.g. {kind}:2")
            elif ":" in tok:
                raise ValueError(f"transform {kind!r} takes no parameter")
            seen.add(kind)
            last = order[kind]

    def check_depth(self, bit_depth):
        """Raise if a byte filter's element size disagrees with the word width."""
        width = self.word_width(bit_depth)
        for tok in self.steps:
            kind = _step_kind(tok)
            if kind == "shuffle" and int(tok.split(":")[1]) != width:
                raise ValueError(f"{tok} does not match {width}-byte words for {bit_depth}-bit data")
            if kind == "bitshuffle" and int(tok.split(":")[1]) != 8 * width:
                raise ValueError(f"{tok} does not match {8 * width}-bit words for {bit_depth}-bit data")

    def encode(self, arrays, orientation, bit_depth) -> bytes:
        self.check_depth(bit_depth)
        arrays = [np.asarray(a, dtype=np.int64) for a in arrays]
        if "delta" in self.steps:
            arrays = [delta_encode(a) for a in arrays]
        flat = interleave(arrays, orientation)
        if "xdelta" in self.steps:
            flat = delta_encode(flat)
        if self.variable_length:
            return leb128s_encode(flat)
        width = self.word_width(bit_depth)
        data = pack_ints(flat, width)
        for tok in self.steps:
            kind = _step_kind(tok)
            if kind == "shuffle":
                data = byte_shuffle(data, width)
            elif kind == "bitshuffle":
                data = bit_shuffle_blocked(data, 8 * width)
        return data

    def decode(self, data, channels, frames, orientation, bit_depth) -> list:
        self.check_depth(bit_depth)
        count = channels * frames
        if self.variable_length:
            flat = leb128s_decode(data, count)
        else:
            width = self.word_width(bit_depth)
            if len(data) != count * width:
                raise CorruptionError(f"expected {count * width} bytes, got {len(data)}")
            for tok in reversed(self.steps):
                kind = _step_kind(tok)
                if kind == "shuffle":
                    data = byte_unshuffle(data, width)
                elif kind == "bitshuffle":
                    data = bit_unshuffle_blocked(data, 8 * width)
            flat = unpack_ints(data, width).astype(np.int64)
        if "xdelta" in self.steps:
            flat = delta_decode(flat)
        arrays = deinterleave(flat, channels, orientation)
        if "delta" in self.steps:
            arrays = [delta_decode(a) for a in arrays]
        lo, hi = code_range(bit_depth)
        for a in arrays:
            if a.size and (a.min() < lo or a.max() > hi):
                raise CorruptionError(f"decoded samples fall outside the {bit_depth}-bit range")
        return arrays
