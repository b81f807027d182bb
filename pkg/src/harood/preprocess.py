"""Raw frame cubes -> macro and micro range-Doppler images.

Macro path (per frame): fast-time Hann DFT keeping the positive half,
antenna averaging to a single channel, slow-time mean removal (MTI), then a
Hann-windowed Doppler DFT with zero Doppler shifted to the centre row.

Micro path (per 8-frame window): the eight range spectrograms are stacked
along slow time, mean-removed along both axes, low-pass filtered along range
with a truncated sinc kernel, Doppler-transformed over the stacked slow time
and cropped back to the macro image size.

Both streams then pass through an exponential frame accumulator (a stand-in
for a recursive enhancement step whose exact definition is external to this
project) and a log(1+x) + per-image min-max normalization before reaching
the network.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_frame_cube
from .config import RadarConfig

# Number of consecutive frames stacked for one micro RDI.
MICRO_HISTORY = 8

# Truncated-sinc range filter: length and cutoff as a fraction of Nyquist.
SINC_LENGTH = 16
SINC_CUTOFF = 0.25

# Frame accumulator defaults.
ACCUM_WINDOW = 10
ACCUM_DECAY = 0.9


def sinc_kernel(length: int = SINC_LENGTH, cutoff: float = SINC_CUTOFF) -> np.ndarray:
    """Truncated low-pass sinc kernel with unit DC gain.

    cutoff is expressed as a fraction of the Nyquist frequency.
    """
    fc = 0.5 * cutoff
    j = np.arange(length) - (length - 1) / 2.0
    h = 2.0 * fc * np.sinc(2.0 * fc * j)
    return h / h.sum()


def range_transform(cube, config: RadarConfig | None = None) -> np.ndarray:
    """Windowed fast-time DFT, positive half only, averaged over antennas.

    Returns a complex (n_chirps, n_samples // 2) range spectrogram.
    """
    config = config or RadarConfig()
    cube = check_frame_cube(cube, config)
    window = np.hanning(config.n_samples)
    spec = np.fft.rfft(cube * window, axis=-1)[..., : config.n_samples // 2]
    return spec.mean(axis=0)


def mti_filter(spec: np.ndarray) -> np.ndarray:
    """Remove static returns by subtracting the slow-time mean per range bin."""
    spec = np.asarray(spec)
    if spec.ndim != 2:
        raise ValueError(f"expected a 2-D range spectrogram, got shape {spec.shape}")
    return spec - spec.mean(axis=0, keepdims=True)


def doppler_transform(spec: np.ndarray, window: bool = True) -> np.ndarray:
    """Slow-time DFT with zero Doppler shifted to the centre row (complex)."""
    spec = np.asarray(spec)
    if window:
        spec = spec * np.hanning(spec.shape[0])[:, None]
    return np.fft.fftshift(np.fft.fft(spec, axis=0), axes=0)


def compute_macro_rdi(cube, config: RadarConfig | None = None) -> np.ndarray:
    """Single-frame magnitude range-Doppler image, shape (n_chirps, n_samples//2)."""
    config = config or RadarConfig()
    spec = mti_filter(range_transform(cube, config))
    return np.abs(doppler_transform(spec, window=True))


def compute_micro_rdi(cubes, config: RadarConfig | None = None) -> np.ndarray:
    """Micro RDI from exactly MICRO_HISTORY consecutive frames.

    Output is cropped to the central n_chirps Doppler rows so macro and
    micro images share one shape.
    """
    config = config or RadarConfig()
    if len(cubes) != MICRO_HISTORY:
        raise ValueError(f"micro RDI needs exactly {MICRO_HISTORY} frames, got {len(cubes)}")
    specs = [range_transform(c, config) for c in cubes]
    return micro_rdi_from_spectrograms(specs, config)


def micro_rdi_from_spectrograms(specs, config: RadarConfig) -> np.ndarray:
    """Micro RDI given the already-computed range spectrograms of the window."""
    stacked = np.concatenate(list(specs), axis=0)
    # Mean removal along fast time (per slow-time row) and slow time
    # (per range bin); the second pass preserves the zero row means.
    stacked = stacked - stacked.mean(axis=1, keepdims=True)
    stacked = stacked - stacked.mean(axis=0, keepdims=True)
    stacked = fftconvolve(stacked, sinc_kernel()[None, :], mode="same", axes=1)
    rdi = np.abs(doppler_transform(stacked, window=False))
    total = rdi.shape[0]
    half = config.n_chirps // 2
    return rdi[total // 2 - half : total // 2 + half]


def accumulate_frames(history, window: int = ACCUM_WINDOW, decay: float = ACCUM_DECAY) -> np.ndarray:
    """Exponentially decayed accumulation over the last `window` images.

    acc_t = decay * acc_{t-1} + image_t, run across the window, then
    max-normalized to [0, 1]. An all-zero accumulation passes through
    unchanged so empty scenes stay empty.
    """
    if len(history) == 0:
        raise ValueError("accumulation history must contain at least one image")
    if window < 1:
        raise ValueError("window must be >= 1")
    acc = np.zeros_like(np.asarray(history[-1], dtype=np.float64))
    for img in list(history)[-window:]:
        acc = decay * acc + np.asarray(img, dtype=np.float64)
    peak = acc.max()
    if peak > 0:
        acc = acc / peak
    return acc


def finalize_rdi(image: np.ndarray) -> np.ndarray:
    """log(1+x) compression followed by per-image min-max scaling to [0, 1]."""
    y = np.log1p(np.asarray(image, dtype=np.float64))
    lo, hi = y.min(), y.max()
    if hi > lo:
        y = (y - lo) / (hi - lo)
    else:
        y = y - lo
    return y.astype(np.float32)


def process_recording(
    cubes,
    config: RadarConfig | None = None,
    accum_window: int = ACCUM_WINDOW,
    accum_decay: float = ACCUM_DECAY,
) -> np.ndarray:
    """Convert a recording of raw frames into network-ready sample images.

    cubes: array-like of shape (n_frames, n_rx, n_chirps, n_samples) with
    n_frames >= MICRO_HISTORY. Returns (n_frames - MICRO_HISTORY + 1, 2,
    n_chirps, n_samples//2): channel 0 is the macro RDI, channel 1 the micro
    RDI, both accumulated and normalized.
    """
    config = config or RadarConfig()
    cubes = np.asarray(cubes, dtype=np.float64)
    if cubes.ndim != 4:
        raise ValueError(f"expected (n_frames, n_rx, n_chirps, n_samples), got {cubes.shape}")
    n_frames = cubes.shape[0]
    if n_frames < MICRO_HISTORY:
        raise ValueError(f"recording needs >= {MICRO_HISTORY} frames, got {n_frames}")

    # Batched range transform: window, rfft, antenna mean.
    window = np.hanning(config.n_samples)
    specs = np.fft.rfft(cubes * window, axis=-1)[..., : config.n_samples // 2]
    specs = specs.mean(axis=1)  # (n_frames, n_chirps, n_range_bins)

    # Macro stream, one RDI per frame.
    centered = specs - specs.mean(axis=1, keepdims=True)
    dop_win = np.hanning(config.n_chirps)[:, None]
    macro_all = np.abs(
        np.fft.fftshift(np.fft.fft(centered * dop_win, axis=1), axes=1)
    )

    first = MICRO_HISTORY - 1
    n_out = n_frames - first
    out = np.empty((n_out, 2, config.n_chirps, config.n_range_bins), dtype=np.float32)

    macro_hist: list[np.ndarray] = []
    micro_hist: list[np.ndarray] = []
    for f in range(n_frames):
        macro_hist.append(macro_all[f])
        if len(macro_hist) > accum_window:
            macro_hist.pop(0)
        if f < first:
            continue
        micro = micro_rdi_from_spectrograms(specs[f - first : f + 1], config)
        micro_hist.append(micro)
        if len(micro_hist) > accum_window:
            micro_hist.pop(0)
        out[f - first, 0] = finalize_rdi(accumulate_frames(macro_hist, accum_window, accum_decay))
        out[f - first, 1] = finalize_rdi(accumulate_frames(micro_hist, accum_window, accum_decay))
    return out


class RangeDopplerPreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer from raw frame recordings to RDI sample pairs.

    transform() accepts one recording shaped (n_frames, n_rx, n_chirps,
    n_samples) and returns (n_frames - 7, 2, n_chirps, n_samples//2) float32
    images, which is the input layout the detector consumes.
    """

    def __init__(self, config=None, accum_window=ACCUM_WINDOW, accum_decay=ACCUM_DECAY):
        self.config = config
        self.accum_window = accum_window
        self.accum_decay = accum_decay

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        config = self.config if self.config is not None else RadarConfig()
        return process_recording(X, config, self.accum_window, self.accum_decay)
