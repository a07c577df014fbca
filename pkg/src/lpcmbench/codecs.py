"""Adapters over general-purpose lossless compressors.

deflate, bzip2 and lzma come from the standard library; zstd and lz4 use
the libzstd/liblz4 builds bundled with pyarrow and emit standard zstd and
LZ4 frames. The FLAC adapter drives an external ``flac`` executable.
"""
from __future__ import annotations

import bz2
import lzma
import os
import shutil
import subprocess
import tempfile
import zlib
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import AdapterUnavailableError, IntegrityError, SpecError

FAMILIES = ("deflate", "bzip2", "lzma", "zstd", "lz4", "store", "flac")

LEVEL_RANGES = {
    "deflate": (0, 9),
    "bzip2": (1, 9),
    "lzma": (0, 9),
    "zstd": (1, 22),
}

# lz4 exposes two modes; these are the liblz4 levels behind them
LZ4_MODES = {"fast": 1, "hc": 9}


@dataclass(frozen=True)
class CompressorSpec:
    family: str
    level: object = None
    extra: tuple = field(default=())

    def __post_init__(self):
        fam = self.family
        if fam not in FAMILIES:
            raise SpecError(f"unknown compressor family {fam!r}")
        if fam in ("store", "flac"):
            if self.level is not None:
                raise SpecError(f"{fam} takes no level")
        elif fam == "lz4":
            if self.level not in LZ4_MODES:
                raise SpecError(f"lz4 level must be one of {sorted(LZ4_MODES)}, got {self.level!r}")
        else:
            lo, hi = LEVEL_RANGES[fam]
            if not isinstance(self.level, int) or not lo <= self.level <= hi:
                raise SpecError(f"{fam} level must be an integer in [{lo}, {hi}], got {self.level!r}")

    @property
    def name(self) -> str:
        return self.family if self.level is None else f"{self.family}:{self.level}"

    @property
    def options(self) -> dict:
        return dict(self.extra)

    def with_options(self, **kw) -> "CompressorSpec":
        opts = self.options
        opts.update(kw)
        return CompressorSpec(self.family, self.level, tuple(sorted(opts.items())))

    @classmethod
    def parse(cls, name: str) -> "CompressorSpec":
        family, _, level = name.partition(":")
        if not level:
            return cls(family)
        if family == "lz4":
            return cls(family, level)
        try:
            return cls(family, int(level))
        except ValueError:
            raise SpecError(f"bad compressor level in {name!r}") from None

    def __str__(self):
        return self.name


# -- stdlib families --------------------------------------------------------------


def _drain(decomp, data, family):
    try:
        out = decomp.decompress(data)
    except (zlib.error, OSError, lzma.LZMAError, EOFError, ValueError) as exc:
        raise IntegrityError(f"{family}: corrupt stream ({exc})") from exc
    if not decomp.eof:
        raise IntegrityError(f"{family}: truncated stream")
    if decomp.unused_data:
        raise IntegrityError(f"{family}: {len(decomp.unused_data)} bytes after end of stream")
    return out


def _deflate(data, level):
    return zlib.compress(data, level)


def _inflate(data):
    return _drain(zlib.decompressobj(), data, "deflate")


def _bzip2(data, level):
    return bz2.compress(data, level)


def _bunzip2(data):
    if not data:
        raise IntegrityError("bzip2: empty stream")
    return _drain(bz2.BZ2Decompressor(), data, "bzip2")


def _xz(data, level):
    return lzma.compress(data, format=lzma.FORMAT_XZ, check=lzma.CHECK_CRC64, preset=level)


def _unxz(data):
    return _drain(lzma.LZMADecompressor(format=lzma.FORMAT_XZ), data, "lzma")


# -- pyarrow-backed families -----------------------------------------------------------


def _arrow():
    try:
        import pyarrow
    except ImportError as exc:  # pragma: no cover
        raise AdapterUnavailableError("zstd/lz4 need pyarrow") from exc
    return pyarrow


def _arrow_compress(name, data, level):
    pa = _arrow()
    return pa.Codec(name, compression_level=level).compress(data, asbytes=True)


def _arrow_decompress(name, data):
    pa = _arrow()
    if not data:
        raise IntegrityError(f"{name}: empty stream")
    try:
        return pa.input_stream(pa.BufferReader(data), compression=name).read()
    except (OSError, pa.ArrowException) as exc:
        raise IntegrityError(f"{name}: corrupt stream ({exc})") from exc


# -- FLAC ---------------------------------------------------------------------------------


@lru_cache(maxsize=None)
def flac_binary():
    return os.environ.get("LPCMBENCH_FLAC") or shutil.which("flac")


def flac_available() -> bool:
    return flac_binary() is not None


def _flac_run(args, payload, suffix_in, suffix_out):
    exe = flac_binary()
    if exe is None:
        raise AdapterUnavailableError("flac executable not found (set LPCMBENCH_FLAC or install flac)")
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "in" + suffix_in)
        dst = os.path.join(tmp, "out" + suffix_out)
        with open(src, "wb") as fh:
            fh.write(payload)
        proc = subprocess.run([exe, *args, "-o", dst, src], capture_output=True)
        if proc.returncode != 0:
            raise IntegrityError(f"flac failed: {proc.stderr.decode(errors='replace').strip()}")
        with open(dst, "rb") as fh:
            return fh.read()


def _flac_compress(data, spec):
    from .ingest import RawLayout, parse_raw_bytes, pcm_wav_bytes

    opts = spec.options
    try:
        channels, bit_depth, rate = opts["channels"], opts["bit_depth"], opts["sampling_rate"]
    except KeyError as exc:
        raise SpecError("flac needs channels, bit_depth and sampling_rate options") from exc
    width = 2 if bit_depth == 16 else 3
    ds = parse_raw_bytes(data, RawLayout(channels, width), bit_depth, rate)
    return _flac_run(["--silent", "--force", "--best", "--no-padding"], pcm_wav_bytes(ds), ".wav", ".flac")


def _flac_decompress(data, spec):
    from .ingest import RawLayout, parse_pcm_wav, raw_bytes

    wav = _flac_run(["--silent", "--force", "--decode"], data, ".flac", ".wav")
    try:
        ds = parse_pcm_wav(wav)
    except ValueError as exc:
        raise IntegrityError(f"flac produced unreadable output: {exc}") from exc
    return raw_bytes(ds, RawLayout(ds.channel_count, ds.native_width))


# -- public API ----------------------------------------------------------------------------


def compress(data, spec: CompressorSpec) -> bytes:
    data = bytes(data)
    fam = spec.family
    if fam == "store":
        return data
    if fam == "deflate":
        return _deflate(data, spec.level)
    if fam == "bzip2":
        return _bzip2(data, spec.level)
    if fam == "lzma":
        return _xz(data, spec.level)
    if fam == "zstd":
        return _arrow_compress("zstd", data, spec.level)
    if fam == "lz4":
        return _arrow_compress("lz4", data, LZ4_MODES[spec.level])
    if fam == "flac":
        return _flac_compress(data, spec)
    raise SpecError(f"unknown family {fam!r}")  # pragma: no cover


def decompress(data, spec: CompressorSpec) -> bytes:
    data = bytes(data)
    fam = spec.family
    if fam == "store":
        return data
    if fam == "deflate":
        return _inflate(data)
    if fam == "bzip2":
        return _bunzip2(data)
    if fam == "lzma":
        return _unxz(data)
    if fam in ("zstd", "lz4"):
        return _arrow_decompress(fam, data)
    if fam == "flac":
        return _flac_decompress(data, spec)
    raise SpecError(f"unknown family {fam!r}")  # pragma: no cover


DEFAULT_MATRIX = (
    "deflate:1", "deflate:6", "deflate:9",
    "bzip2:1", "bzip2:9",
    "lzma:0", "lzma:6", "lzma:9",
    "zstd:1", "zstd:3", "zstd:9", "zstd:19",
    "lz4:fast", "lz4:hc",
    "store",
)


def list_default_matrix(include_adapters=True) -> list:
    """The documented compressor sweep, plus the FLAC adapter when its binary exists."""
    specs = [CompressorSpec.parse(n) for n in DEFAULT_MATRIX]
    if include_adapters and flac_available():
        specs.append(CompressorSpec("flac"))
    return specs
