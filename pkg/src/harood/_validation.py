"""Input-shape and finiteness checks shared across the public API."""

from __future__ import annotations

import numpy as np


def check_frame_cube(cube, config, name: str = "cube") -> np.ndarray:
    """Validate one raw frame of IF samples against the radar configuration."""
    cube = np.asarray(cube)
    expected = (config.n_rx, config.n_chirps, config.n_samples)
    if cube.shape != expected:
        raise ValueError(f"{name} has shape {cube.shape}, expected {expected}")
    if not np.all(np.isfinite(cube)):
        raise ValueError(f"{name} contains non-finite values")
    return cube.astype(np.float64, copy=False)


def check_rdi_batch(X, name: str = "X") -> np.ndarray:
    """Validate a batch of macro/micro image pairs shaped (n, 2, rows, cols)."""
    X = np.asarray(X, dtype=np.float32)
    if X.ndim != 4 or X.shape[1] != 2:
        raise ValueError(
            f"{name} must have shape (n_samples, 2, rows, cols), got {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_labels(y, n: int, name: str = "y") -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"{name} must be 1-D with {n} entries, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == y.astype(np.int64)):
            raise ValueError(f"{name} must contain integer labels")
    return y.astype(np.int64)


def check_scores(scores, name: str = "scores") -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError(f"{name} contains non-finite values")
    return scores
