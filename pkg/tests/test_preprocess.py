import numpy as np
import pytest

from harood import (
    RadarConfig,
    RangeDopplerPreprocessor,
    Scatterer,
    accumulate_frames,
    compute_macro_rdi,
    compute_micro_rdi,
    mti_filter,
    range_transform,
    simulate_frame,
)
from harood.preprocess import MICRO_HISTORY, finalize_rdi, process_recording, sinc_kernel
from harood.simulate import simulate_scenario
from harood import generate_scenario

NOISELESS = RadarConfig(noise_std=0.0)


def _zero_cube(cfg=NOISELESS):
    return np.zeros((cfg.n_rx, cfg.n_chirps, cfg.n_samples))


def _static_cube(r=1.5, amp=1.0):
    return simulate_frame([Scatterer(range=r, radial_velocity=0.0, amplitude=amp)], NOISELESS, 0)


def test_range_transform_zero_and_scaling():
    spec = range_transform(_zero_cube(), NOISELESS)
    assert spec.shape == (64, 64)
    assert np.all(spec == 0)
    cube = _static_cube()
    np.testing.assert_allclose(
        range_transform(2.0 * cube, NOISELESS), 2.0 * range_transform(cube, NOISELESS), rtol=1e-12
    )


def test_range_transform_peak_bin():
    spec = range_transform(_static_cube(1.5), NOISELESS)
    assert np.all(np.abs(spec).argmax(axis=1) == 10)


def test_range_transform_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        range_transform(np.zeros((2, 64, 128)), NOISELESS)


def test_mti_removes_constant_rows():
    spec = np.tile(np.arange(64) + 1j, (64, 1))
    out = mti_filter(spec)
    np.testing.assert_allclose(out, 0, atol=1e-12)


def test_mti_idempotent_and_zero_mean():
    rng = np.random.default_rng(0)
    spec = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    once = mti_filter(spec)
    np.testing.assert_allclose(once.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(mti_filter(once), once, atol=1e-12)


def test_mti_keeps_moving_target_energy():
    mover = simulate_frame(
        [Scatterer(range=2.0, radial_velocity=1.0, amplitude=1.0)], NOISELESS, 0
    )
    out = mti_filter(range_transform(mover, NOISELESS))
    assert np.sum(np.abs(out) ** 2) > 1.0


def test_macro_rdi_zero_cube():
    assert np.all(compute_macro_rdi(_zero_cube(), NOISELESS) == 0)


def test_macro_rdi_static_suppression_over_40db():
    cube = _static_cube()
    pre = np.sum(np.abs(range_transform(cube, NOISELESS)) ** 2)
    post = np.sum(compute_macro_rdi(cube, NOISELESS) ** 2)
    assert post < pre * 1e-9  # >= 90 dB here; criterion is 40 dB
    assert 10 * np.log10(pre / max(post, 1e-300)) >= 40.0


def test_macro_rdi_mover_peak_position():
    cube = simulate_frame(
        [Scatterer(range=1.5, radial_velocity=1.0, amplitude=1.0)], NOISELESS, 0
    )
    rdi = compute_macro_rdi(cube, NOISELESS)
    assert rdi.shape == (64, 64)
    dop, rng_bin = np.unravel_index(rdi.argmax(), rdi.shape)
    assert (dop, rng_bin) == (32 + 10, 10)


def test_micro_rdi_zero_inputs():
    rdi = compute_micro_rdi([_zero_cube()] * MICRO_HISTORY, NOISELESS)
    assert rdi.shape == (64, 64)
    assert np.all(rdi == 0)


def test_micro_rdi_static_frames_cancel():
    cube = _static_cube()
    rdi = compute_micro_rdi([cube] * MICRO_HISTORY, NOISELESS)
    in_energy = np.sum(np.abs(range_transform(cube, NOISELESS)) ** 2)
    assert np.sum(rdi**2) < 1e-9 * in_energy


def test_micro_rdi_wrong_history_length():
    with pytest.raises(ValueError, match="8"):
        compute_micro_rdi([_zero_cube()] * 3, NOISELESS)


def test_micro_rdi_detects_micro_motion():
    def frames(micro_amp, micro_freq):
        out = []
        for f in range(MICRO_HISTORY):
            phase = 2 * np.pi * micro_freq * f * NOISELESS.frame_period
            out.append(
                simulate_frame(
                    [
                        Scatterer(
                            range=2.0,
                            radial_velocity=0.0,
                            amplitude=1.0,
                            micro_motion_amp=micro_amp,
                            micro_motion_freq=micro_freq,
                            micro_motion_phase=phase,
                        )
                    ],
                    NOISELESS,
                    f,
                )
            )
        return out

    mover = compute_micro_rdi(frames(0.02, 4.0), NOISELESS)
    clutter = compute_micro_rdi(frames(0.0, 0.0), NOISELESS)
    center = NOISELESS.n_chirps // 2
    mask = np.ones(NOISELESS.n_chirps, dtype=bool)
    mask[center - 1 : center + 2] = False
    ratio = np.sum(mover[mask] ** 2) / max(np.sum(clutter[mask] ** 2), 1e-300)
    assert ratio > 10.0


def test_sinc_kernel_properties():
    k = sinc_kernel()
    assert len(k) == 16
    assert k.sum() == pytest.approx(1.0)
    assert k[7] == max(k)  # peak at the (even-length) centre


def test_accumulator_single_frame_is_max_normalized():
    rng = np.random.default_rng(2)
    img = rng.random((8, 8))
    out = accumulate_frames([img], window=1)
    np.testing.assert_allclose(out, img / img.max(), rtol=1e-12)


def test_accumulator_zero_history_passthrough():
    out = accumulate_frames([np.zeros((4, 4))] * 3)
    assert np.all(out == 0)


def test_accumulator_two_frame_hand_case():
    # acc = 0.5 * M + M = 1.5 M, then max-normalized back to M / max(M).
    rng = np.random.default_rng(3)
    m = rng.random((6, 6))
    out = accumulate_frames([m, m], window=2, decay=0.5)
    np.testing.assert_allclose(out, m / m.max(), rtol=1e-12)


def test_e_accum_window_truncates_history():
    a = np.ones((2, 2))
    b = np.full((2, 2), 5.0)
    # window=1 ignores the older frame entirely
    out = accumulate_frames([b, a], window=1, decay=0.9)
    np.testing.assert_allclose(out, np.ones((2, 2)))


def test_accumulator_empty_history_rejected():
    with pytest.raises(ValueError):
        accumulate_frames([])


def test_finalize_rdi_range_and_zero():
    img = np.array([[0.0, 1.0], [2.0, 3.0]])
    out = finalize_rdi(img)
    assert out.dtype == np.float32
    assert out.min() == 0.0 and out.max() == 1.0
    assert np.all(finalize_rdi(np.zeros((3, 3))) == 0)


def test_process_recording_shapes_and_determinism():
    cfg = RadarConfig()
    scenario = generate_scenario("walk", 12, cfg, seed=11)
    cubes = simulate_scenario(scenario, cfg)
    a = process_recording(cubes, cfg)
    b = process_recording(cubes, cfg)
    assert a.shape == (12 - MICRO_HISTORY + 1, 2, 64, 64)
    assert np.array_equal(a, b)
    assert a.dtype == np.float32
    assert np.all(a >= 0.0) and np.all(a <= 1.0)


def test_process_recording_macro_channel_matches_solo_ops():
    # The batched macro path must agree with the single-frame operations.
    cfg = RadarConfig()
    scenario = generate_scenario("sit", 10, cfg, seed=4)
    cubes = simulate_scenario(scenario, cfg)
    samples = process_recording(cubes, cfg, accum_window=1)
    f = MICRO_HISTORY - 1
    solo = finalize_rdi(accumulate_frames([compute_macro_rdi(cubes[f], cfg)], window=1))
    np.testing.assert_allclose(samples[0, 0], solo, atol=1e-6)


def test_process_recording_needs_eight_frames():
    with pytest.raises(ValueError, match="frames"):
        process_recording(np.zeros((5, 3, 64, 128)), RadarConfig())


def test_preprocessor_transformer_api():
    cfg = RadarConfig()
    scenario = generate_scenario("stand", 10, cfg, seed=8)
    cubes = simulate_scenario(scenario, cfg)
    pre = RangeDopplerPreprocessor(config=cfg)
    assert pre.fit(None) is pre
    X = pre.transform(cubes)
    assert X.shape == (3, 2, 64, 64)
    params = pre.get_params()
    assert params["accum_window"] == 10 and params["accum_decay"] == 0.9
