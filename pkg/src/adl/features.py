"""Audio ingestion: WAV decoding, magnitude spectrograms, level scaling, and
sliding-window patch extraction.

A clip becomes a bins x frames magnitude spectrogram, is rescaled to either
dB levels in [0, 120] or log magnitudes, and is then cut into overlapping
windows of `window_frames` frames.  Each window is flattened column-major
(frame by frame) into a feature vector of length bins * window_frames.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal

SCALES = ("db_level", "log_magnitude")
WINDOWS = {"hann": "hann", "hamming": "hamming", "rectangular": "boxcar"}


class AudioError(ValueError):
    """A WAV file could not be decoded or is unusable."""


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if samples.size < 1:
            raise AudioError("clip has no samples")
        if self.sample_rate <= 0:
            raise AudioError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.isfinite(samples).all():
            raise AudioError("clip contains non-finite samples")
        object.__setattr__(self, "samples", np.clip(samples, -1.0, 1.0))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """bins x frames time-frequency values with their scale recorded.

    Scale "magnitude" holds raw non-negative magnitudes, "db_level" holds
    levels clamped to [0, dynamic range], and "log_magnitude" holds
    log(|X| + eps), which can be negative.
    """

    values: np.ndarray
    scale: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"spectrogram must be 2-D, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("spectrogram contains non-finite values")
        if self.scale not in ("magnitude",) + SCALES:
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.scale in ("magnitude", "db_level") and values.size and values.min() < 0:
            raise ValueError(f"{self.scale} spectrogram must be non-negative")
        object.__setattr__(self, "values", values)

    @property
    def bins(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FeatureConfig:
    """Spectrogram and patch-extraction settings, stored alongside models so
    training and classification always use the same pipeline."""

    fft_size: int = 1024
    hop: int = 512
    window: str = "hann"
    window_frames: int = 50
    shift: int = 1
    scale: str = "db_level"
    dynamic_range: float = 120.0
    floor_eps: float = 1e-10
    trim_silence_db: float | None = None

    def __post_init__(self):
        if self.fft_size < 2:
            raise ValueError("fft_size must be at least 2")
        if not 1 <= self.hop <= self.fft_size:
            raise ValueError("hop must lie in [1, fft_size]")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {sorted(WINDOWS)}, got {self.window!r}")
        if self.window_frames < 1:
            raise ValueError("window_frames must be at least 1")
        if self.shift < 1:
            raise ValueError("shift must be at least 1")
        if self.scale not in SCALES:
            raise ValueError(f"scale must be one of {SCALES}, got {self.scale!r}")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")
        if self.floor_eps <= 0:
            raise ValueError("floor_eps must be positive")
        if self.trim_silence_db is not None and self.trim_silence_db <= 0:
            raise ValueError("trim_silence_db must be positive when set")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def patch_dim(self) -> int:
        return self.bins * self.window_frames

    def with_scale(self, scale: str) -> "FeatureConfig":
        return replace(self, scale=scale)


def load_wav(path) -> AudioClip:
    """Decode a PCM or float WAV file to mono samples in [-1, 1].

    Integer samples divide by 2^(bits-1) (the 8-bit unsigned case is
    recentered first); float samples pass through.  Stereo channels are
    averaged after scaling.
    """
    path = Path(path)
    if not path.exists():
        raise AudioError(f"no such file: {path}")
    try:
        rate, data = scipy.io.wavfile.read(str(path))
    except AudioError:
        raise
    except Exception as exc:
        raise AudioError(f"{path}: cannot decode WAV ({exc})") from exc
    if data.size == 0:
        raise AudioError(f"{path}: zero-length audio")
    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # 24-bit PCM arrives left-justified in int32, so one rule covers both.
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"{path}: unsupported sample format {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioClip(samples=samples, sample_rate=int(rate))


def stft_magnitude(clip: AudioClip, cfg: FeatureConfig) -> Spectrogram:
    """Magnitude of the non-redundant half spectrum of windowed frames.

    Frames start at multiples of the hop with no padding, so the frame count
    is floor((len - fft_size) / hop) + 1.
    """
    x = clip.samples
    n = x.size
    if n < cfg.fft_size:
        raise AudioError(f"clip too short: {n} samples, need at least {cfg.fft_size}")
    n_frames = (n - cfg.fft_size) // cfg.hop + 1
    starts = np.arange(n_frames) * cfg.hop
    frames = x[starts[:, None] + np.arange(cfg.fft_size)[None, :]]
    win = scipy.signal.get_window(WINDOWS[cfg.window], cfg.fft_size, fftbins=True)
    mags = np.abs(np.fft.rfft(frames * win, axis=1)).T
    return Spectrogram(values=mags, scale="magnitude")


def to_db_level(spec: Spectrogram, dynamic_range: float = 120.0) -> Spectrogram:
    """Map magnitudes to levels in [0, dynamic_range] dB.

    level = max(0, dynamic_range + 20 log10(|X| / max|X|)), with the maximum
    taken over the whole spectrogram; the global peak lands exactly at
    dynamic_range and everything more than dynamic_range dB below it clamps
    to zero.  An all-zero spectrogram stays all zero.
    """
    if spec.scale != "magnitude":
        raise ValueError(f"expected raw magnitudes, got scale {spec.scale!r}")
    peak = float(spec.values.max(initial=0.0))
    if peak == 0.0:
        return Spectrogram(np.zeros_like(spec.values), "db_level")
    with np.errstate(divide="ignore"):
        levels = dynamic_range + 20.0 * np.log10(spec.values / peak)
    return Spectrogram(np.maximum(levels, 0.0), "db_level")


def to_log_magnitude(spec: Spectrogram, floor_eps: float = 1e-10) -> Spectrogram:
    """log(|X| + floor_eps), monotone in the magnitude."""
    if spec.scale != "magnitude":
        raise ValueError(f"expected raw magnitudes, got scale {spec.scale!r}")
    return Spectrogram(np.log(spec.values + floor_eps), "log_magnitude")


def trim_silent_frames(spec: Spectrogram, threshold_db: float) -> Spectrogram:
    """Drop frames whose RMS magnitude is more than threshold_db below the
    loudest frame.  Operates on raw magnitudes, before level scaling."""
    if spec.scale != "magnitude":
        raise ValueError(f"expected raw magnitudes, got scale {spec.scale!r}")
    rms = np.sqrt(np.mean(spec.values ** 2, axis=0))
    peak = float(rms.max(initial=0.0))
    if peak == 0.0:
        return spec
    with np.errstate(divide="ignore"):
        rel_db = 20.0 * np.log10(np.maximum(rms, 1e-300) / peak)
    keep = rel_db >= -threshold_db
    if not keep.any():
        return spec
    return Spectrogram(spec.values[:, keep], "magnitude")


def extract_patches(spec: Spectrogram, window_frames: int, shift: int = 1) -> np.ndarray:
    """Flatten sliding bins x window_frames blocks into feature columns.

    Windows start at frames 0, shift, 2*shift, ... while they fit, giving
    floor((frames - window_frames) / shift) + 1 patches.  Each block is
    flattened column-major (frame by frame), so column p of the result is
    the window starting at frame p * shift.
    """
    if window_frames < 1 or shift < 1:
        raise ValueError("window_frames and shift must be at least 1")
    if spec.frames < window_frames:
        raise AudioError(f"clip too short: {spec.frames} frames, "
                         f"need at least {window_frames}")
    n_patches = (spec.frames - window_frames) // shift + 1
    out = np.empty((spec.bins * window_frames, n_patches))
    for p in range(n_patches):
        start = p * shift
        out[:, p] = spec.values[:, start:start + window_frames].ravel(order="F")
    return out


def unflatten_patch(patch: np.ndarray, bins: int) -> np.ndarray:
    """Inverse of the patch flattening: recover the bins x window_frames block."""
    patch = np.asarray(patch, dtype=np.float64).ravel()
    if patch.size % bins:
        raise ValueError(f"patch length {patch.size} is not a multiple of {bins} bins")
    return patch.reshape(bins, patch.size // bins, order="F")


def clip_patches(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    """Full pipeline from a clip to its patch matrix under one config."""
    spec = stft_magnitude(clip, cfg)
    if cfg.trim_silence_db is not None:
        spec = trim_silent_frames(spec, cfg.trim_silence_db)
    if cfg.scale == "db_level":
        spec = to_db_level(spec, cfg.dynamic_range)
    else:
        spec = to_log_magnitude(spec, cfg.floor_eps)
    return extract_patches(spec, cfg.window_frames, cfg.shift)


def wav_patches(path, cfg: FeatureConfig) -> np.ndarray:
    """clip_patches applied to a WAV file on disk."""
    return clip_patches(load_wav(path), cfg)
