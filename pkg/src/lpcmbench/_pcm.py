"""Fixed-width two's-complement packing between numpy arrays and bytes."""
import numpy as np

from .errors import LayoutError

NATIVE_WIDTH = {16: 2, 24: 3}


def code_range(bit_depth):
    """Inclusive (lo, hi) ADC code bounds for a bipolar converter."""
    half = 1 << (bit_depth - 1)
    return -half, half - 1


def width_bounds(width):
    return code_range(8 * width)


def pack_ints(values, width, byteorder="little"):
    """Pack integers into `width`-byte two's-complement words."""
    v = np.asarray(values, dtype=np.int64)
    lo, hi = width_bounds(width)
    if v.size and (v.min() < lo or v.max() > hi):
        raise LayoutError(f"values do not fit in {width}-byte words")
    order = "<" if byteorder == "little" else ">"
    if width in (2, 4, 8):
        return v.astype(f"{order}i{width}").tobytes()
    if width == 3:
        u = v.astype("<i4").view(np.uint8).reshape(-1, 4)[:, :3]
        if byteorder != "little":
            u = u[:, ::-1]
        return np.ascontiguousarray(u).tobytes()
    raise LayoutError(f"unsupported sample width {width}")


def unpack_ints(data, width, byteorder="little"):
    """Inverse of pack_ints; returns int32 (width<=4) or int64 array."""
    buf = np.frombuffer(data, dtype=np.uint8)
    if buf.size % width:
        raise LayoutError(f"{buf.size} bytes is not a multiple of width {width}")
    order = "<" if byteorder == "little" else ">"
    if width in (2, 4):
        return buf.view(f"{order}i{width}").astype(np.int32)
    if width == 8:
        return buf.view(f"{order}i8").astype(np.int64)
    if width == 3:
        b = buf.reshape(-1, 3).astype(np.int32)
        if byteorder != "little":
            b = b[:, ::-1]
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        # sign-extend bit 23
        return (v ^ 0x800000) - 0x800000
    raise LayoutError(f"unsupported sample width {width}")
