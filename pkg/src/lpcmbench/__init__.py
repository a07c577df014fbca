"""Entropy analysis and lossless-representation benchmarks for multi-channel LPCM waveform data."""

__version__ = "0.1.0"

from .ingest import ChannelBuffer, Dataset, RawLayout, calibrate, decalibrate  # noqa: E402
from .entropy import ChannelReport, Histogram, analyze_corpus, channel_report, entropy, histogram, merge  # noqa: E402
from .synth import SynthSpec, generate  # noqa: E402

__all__ = [
    "ChannelBuffer", "Dataset", "RawLayout", "calibrate", "decalibrate",
    "ChannelReport", "Histogram", "analyze_corpus", "channel_report", "entropy", "histogram", "merge",
    "SynthSpec", "generate",
]
