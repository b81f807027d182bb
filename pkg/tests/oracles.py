"""Independent brute-force oracles used to pin expected values in tests.

These deliberately avoid the library paths they check: DFTs are explicit
O(n^2) sums, AUROC counts every (id, ood) pair.
"""

import numpy as np


def brute_force_dft(signal: np.ndarray) -> np.ndarray:
    """Direct O(n^2) DFT of a 1-D signal."""
    n = len(signal)
    k = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return basis @ signal.astype(np.complex128)


def range_bin_argmax(chirp_samples: np.ndarray) -> int:
    """Positive-half magnitude argmax of a brute-force DFT over fast time."""
    spectrum = brute_force_dft(chirp_samples)
    half = len(chirp_samples) // 2
    return int(np.abs(spectrum[:half]).argmax())


def doppler_bin_offset(slow_time: np.ndarray) -> int:
    """Signed Doppler bin of the brute-force DFT peak of a slow-time series."""
    spectrum = brute_force_dft(slow_time)
    n = len(slow_time)
    k = int(np.abs(spectrum).argmax())
    return k - n if k > n // 2 else k


def rd_peak(cube_single_antenna: np.ndarray) -> tuple[int, int]:
    """(doppler_offset, range_bin) via brute-force 2-D DFT of one antenna cube.

    cube: (n_chirps, n_samples) real. Doppler offset is relative to zero
    Doppler; range bin indexes the positive fast-time half.
    """
    n_chirps, n_samples = cube_single_antenna.shape
    fast = np.stack([brute_force_dft(row) for row in cube_single_antenna])
    half = fast[:, : n_samples // 2]
    slow = np.stack([brute_force_dft(col) for col in half.T], axis=1)
    mag = np.abs(slow)
    k_dop, k_rng = np.unravel_index(mag.argmax(), mag.shape)
    offset = k_dop - n_chirps if k_dop > n_chirps // 2 else k_dop
    return int(offset), int(k_rng)


def pairwise_auroc(id_scores, ood_scores) -> float:
    """O(n^2) AUROC: fraction of (ood, id) pairs ranked correctly, ties half."""
    id_scores = np.asarray(id_scores, dtype=np.float64)
    ood_scores = np.asarray(ood_scores, dtype=np.float64)
    wins = 0.0
    for o in ood_scores:
        for i in id_scores:
            if o > i:
                wins += 1.0
            elif o == i:
                wins += 0.5
    return wins / (len(id_scores) * len(ood_scores))
