"""WAV decoding, framing and magnitude spectra.

Spectra use a linear frequency grid and linear magnitudes. The scaling makes a
full-scale sinusoid centred on a bin read 1.0 at its peak whatever the window:
interior bins are ``|X_k| * 2 / sum(w)``, and the DC and Nyquist bins carry an
extra ``1/sqrt(2)``. With that convention Parseval's relation is exact::

    sum(magnitudes ** 2) == PARSEVAL_CONSTANT(w) * sum((w * x) ** 2)

where ``PARSEVAL_CONSTANT(w) = 2 * N / sum(w) ** 2``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.signal import get_window

from ._validation import AnalysisError, check_positive, is_power_of_two

WINDOWS = ("hann", "hamming", "rectangular")

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE


class AudioFormatError(ValueError):
    """The file is not a WAV file this package can decode."""


class UnsupportedCodecError(AudioFormatError):
    """RIFF/WAVE file whose sample encoding is not supported."""


class TruncatedAudioError(AudioFormatError):
    """RIFF/WAVE file that ends before its declared chunks do."""


class EmptyFrameSequenceError(AnalysisError):
    """The signal is shorter than one analysis frame."""


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        check_positive(self.sample_rate, "sample_rate", integer=True)
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer holds mono samples only")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray  # (n_frames, frame_size) read-only view
    frame_size: int
    hop_size: int
    sample_rate: int

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop_size

    @property
    def timestamps(self) -> np.ndarray:
        """Frame centres in seconds."""
        starts = np.arange(len(self.frames)) * self.hop_size
        return (starts + self.frame_size / 2) / self.sample_rate

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class Spectrum:
    magnitudes: np.ndarray
    bin_freqs: np.ndarray
    frame_time: float = 0.0
    # Equivalent noise bandwidth of the analysis window, in bins.
    enbw: float = 1.0
    sample_rate: int = field(default=0)
    window: str = "rectangular"

    @property
    def bin_width(self) -> float:
        return float(self.bin_freqs[1] - self.bin_freqs[0])

    @property
    def nyquist(self) -> float:
        return float(self.bin_freqs[-1])

    @property
    def power(self) -> np.ndarray:
        return self.magnitudes**2


def _parse_fmt(chunk: bytes):
    if len(chunk) < 16:
        raise TruncatedAudioError("fmt chunk is shorter than 16 bytes")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", chunk[:16])
    if tag == _FORMAT_EXTENSIBLE:
        if len(chunk) < 26:
            raise TruncatedAudioError("extensible fmt chunk is incomplete")
        tag = struct.unpack("<H", chunk[24:26])[0]
    if tag == _FORMAT_PCM and bits in (16, 24):
        kind = "int"
    elif tag == _FORMAT_FLOAT and bits == 32:
        kind = "float"
    else:
        raise UnsupportedCodecError(f"unsupported WAV encoding: format tag {tag:#06x}, {bits} bits")
    if not 1 <= channels <= 8:
        raise UnsupportedCodecError(f"unsupported channel count {channels}")
    if rate <= 0:
        raise UnsupportedCodecError("sample rate must be positive")
    if block_align != channels * bits // 8:
        raise UnsupportedCodecError(f"inconsistent block alignment {block_align}")
    return kind, channels, rate, bits


def _decode(data: bytes, kind: str, channels: int, bits: int) -> np.ndarray:
    width = bits // 8
    n = len(data) // (width * channels)
    data = data[: n * width * channels]
    if kind == "float":
        x = np.frombuffer(data, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(x)):
            raise AudioFormatError("float WAV contains non-finite samples")
        x = np.clip(x, -1.0, 1.0)
    elif bits == 16:
        x = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    else:
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        x = ints.astype(np.float64) / float(1 << 23)
    return x.reshape(-1, channels).mean(axis=1)


def load_audio(path) -> AudioBuffer:
    """Decode a RIFF/WAVE file and mix it down to mono.

    Supports 16- and 24-bit integer PCM and 32-bit float, 1 to 8 channels.
    Integer samples are scaled by ``2**(bits - 1)``; channels are averaged.

    Raises
    ------
    UnsupportedCodecError
        Not RIFF/WAVE, or an encoding outside the supported set.
    TruncatedAudioError
        The file ends inside a header or before its data chunk is complete.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise TruncatedAudioError(f"{path}: file too short for a RIFF header")
    if blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise UnsupportedCodecError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    pos = 12
    while True:
        if pos + 8 > len(blob):
            raise TruncatedAudioError(f"{path}: no data chunk before end of file")
        cid = blob[pos : pos + 4]
        size = struct.unpack("<I", blob[pos + 4 : pos + 8])[0]
        body = blob[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < size:
                raise TruncatedAudioError(f"{path}: fmt chunk truncated")
            fmt = _parse_fmt(body)
        elif cid == b"data":
            if fmt is None:
                raise UnsupportedCodecError(f"{path}: data chunk precedes fmt chunk")
            kind, channels, rate, bits = fmt
            frame_bytes = channels * bits // 8
            if len(body) < size or size % frame_bytes:
                raise TruncatedAudioError(
                    f"{path}: data chunk declares {size} bytes, {len(body)} present"
                )
            return AudioBuffer(_decode(body, kind, channels, bits), rate)
        pos += 8 + size + (size & 1)


def write_wav(path, buf: AudioBuffer, *, subtype: str = "PCM_16") -> None:
    """Write mono ``buf`` as 16-bit PCM (``"PCM_16"``) or 32-bit float (``"FLOAT"``)."""
    x = np.clip(np.asarray(buf.samples), -1.0, 1.0)
    if subtype == "PCM_16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, bits = _FORMAT_PCM, 16
    elif subtype == "FLOAT":
        data = x.astype("<f4").tobytes()
        tag, bits = _FORMAT_FLOAT, 32
    else:
        raise ValueError(f"unknown subtype {subtype!r}")
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, buf.sample_rate, buf.sample_rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(data)) + data
    if len(data) & 1:
        body += b"\x00"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def frame_signal(buf: AudioBuffer, frame_size: int = 2048, hop_size: int = 512) -> FrameSequence:
    """Cut ``buf`` into overlapping frames; a trailing partial frame is dropped."""
    check_positive(frame_size, "frame_size", integer=True)
    check_positive(hop_size, "hop_size", integer=True)
    if hop_size > frame_size:
        raise ValueError("hop_size must not exceed frame_size")
    if len(buf) < frame_size:
        raise EmptyFrameSequenceError(
            f"signal of {len(buf)} samples is shorter than one frame ({frame_size})"
        )
    frames = np.lib.stride_tricks.sliding_window_view(buf.samples, frame_size)[::hop_size]
    return FrameSequence(frames, frame_size, hop_size, buf.sample_rate)


def analysis_window(name: str, n: int) -> np.ndarray:
    if name not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {name!r}")
    if name == "rectangular":
        return np.ones(n)
    # Periodic (DFT-even) windows keep bin-centred sinusoids exact.
    return get_window(name, n, fftbins=True)


@lru_cache(maxsize=16)
def window_kernel_table(name: str, n: int, points: int = 257) -> np.ndarray:
    """Normalised window response magnitude at bin offsets ``linspace(0, 0.5, points)``."""
    w = analysis_window(name, n)
    offsets = np.linspace(0.0, 0.5, points)
    phase = np.exp(-2j * np.pi * np.outer(offsets, np.arange(n)) / n)
    return np.abs(phase @ w) / np.sum(w)


def parseval_constant(window: np.ndarray) -> float:
    return 2.0 * len(window) / np.sum(window) ** 2


def spectrum_of_frame(
    frame,
    window: str = "hann",
    sample_rate: int = 44100,
    frame_time: float = 0.0,
) -> Spectrum:
    frame = np.asarray(frame, dtype=np.float64)
    n = len(frame)
    if not is_power_of_two(n):
        raise ValueError(f"frame length must be a power of two, got {n}")
    w = analysis_window(window, n)
    mags = np.abs(np.fft.rfft(frame * w)) * (2.0 / np.sum(w))
    mags[0] /= np.sqrt(2.0)
    mags[-1] /= np.sqrt(2.0)
    enbw = n * np.sum(w**2) / np.sum(w) ** 2
    freqs = np.arange(n // 2 + 1) * (sample_rate / n)
    return Spectrum(mags, freqs, frame_time, float(enbw), sample_rate, window)
