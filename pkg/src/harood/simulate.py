"""Synthetic FMCW point-scatterer simulator.

Emits the dechirped IF signal directly: for a scatterer at instantaneous
range R the IF sample at fast-time index n of chirp m is

    amplitude * cos(2*pi * f_b(R) * n * T_s + 4*pi * R / wavelength + rx_offset)

with beat frequency f_b(R) = 2 * R * B / (c * T_chirp). Bulk motion and a
small sinusoidal micro-motion move R between chirps (stop-and-go within a
chirp), which produces the Doppler and micro-Doppler structure downstream
processing relies on. Transmitter phase is referenced to each chirp start,
so frames are mutually coherent only through the target geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import C_LIGHT, RadarConfig
from .labels import ALL_KINDS

# Per-antenna phase offsets stand in for the path differences that make Rx
# channels distinct without cancelling under channel averaging.
RX_PHASE_STEP = 0.15  # radians


@dataclass(frozen=True)
class Scatterer:
    """One point target: bulk position/velocity plus optional micro-motion."""

    range: float
    radial_velocity: float  # m/s, positive = receding
    amplitude: float
    micro_motion_amp: float = 0.0  # metres
    micro_motion_freq: float = 0.0  # Hz
    micro_motion_phase: float = 0.0  # radians, at the frame start

    def validate(self, config: RadarConfig) -> None:
        if not (0.0 < self.range < config.max_range):
            raise ValueError(
                f"scatterer range {self.range:.3f} m outside (0, "
                f"{config.max_range:.3f}) m unambiguous interval"
            )
        if abs(self.radial_velocity) >= config.max_velocity:
            raise ValueError(
                f"scatterer velocity {self.radial_velocity:.3f} m/s outside "
                f"+-{config.max_velocity:.3f} m/s unambiguous interval"
            )
        if self.amplitude < 0 or self.micro_motion_amp < 0:
            raise ValueError("amplitude and micro_motion_amp must be >= 0")


@dataclass(frozen=True)
class Scenario:
    """A reproducible multi-frame recording script for one target kind."""

    kind: str
    n_frames: int
    seed: int
    trajectory: tuple = field(repr=False)  # tuple of per-frame Scatterer tuples

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if len(self.trajectory) != self.n_frames:
            raise ValueError("trajectory length must equal n_frames")


def simulate_frame(scatterers, config: RadarConfig, noise_seed: int) -> np.ndarray:
    """Simulate one raw frame cube of shape (n_rx, n_chirps, n_samples).

    Deterministic given (scatterers, config, noise_seed); with an empty
    scatterer set and noise_std == 0 the cube is exactly zero.
    """
    for s in scatterers:
        s.validate(config)

    t_sample = config.sample_period
    t_chirp = config.chirp_period
    wavelength = config.wavelength

    n = np.arange(config.n_samples)[None, :]  # fast time
    tau = np.arange(config.n_chirps)[:, None] * t_chirp  # slow time within frame

    # Complex envelope of the frame; the real IF signal per antenna is
    # Re(envelope * exp(1j * rx_offset)).
    envelope = np.zeros((config.n_chirps, config.n_samples), dtype=np.complex128)
    for s in scatterers:
        r_inst = s.range + s.radial_velocity * tau
        if s.micro_motion_amp > 0.0:
            r_inst = r_inst + s.micro_motion_amp * np.sin(
                2.0 * math.pi * s.micro_motion_freq * tau + s.micro_motion_phase
            )
        beat = 2.0 * r_inst * config.bandwidth / (C_LIGHT * t_chirp)
        phase = 2.0 * math.pi * beat * (n * t_sample) + 4.0 * math.pi * r_inst / wavelength
        envelope += s.amplitude * np.exp(1j * phase)

    rx_phases = np.exp(1j * RX_PHASE_STEP * np.arange(config.n_rx))
    cube = np.real(rx_phases[:, None, None] * envelope[None, :, :])

    if config.noise_std > 0.0:
        rng = np.random.default_rng(np.random.SeedSequence(noise_seed))
        cube = cube + rng.normal(0.0, config.noise_std, size=cube.shape)
    return cube


def simulate_scenario(scenario: Scenario, config: RadarConfig) -> np.ndarray:
    """Simulate every frame of a scenario; shape (n_frames, n_rx, n_chirps, n_samples).

    Noise is drawn from per-frame seeds derived from the scenario seed, so
    frames can be produced independently or in parallel with the same result.
    """
    out = np.empty(
        (scenario.n_frames, config.n_rx, config.n_chirps, config.n_samples)
    )
    for f, scatterers in enumerate(scenario.trajectory):
        out[f] = simulate_frame(scatterers, config, frame_noise_seed(scenario.seed, f))
    return out


def frame_noise_seed(scenario_seed: int, frame_index: int) -> int:
    """Stable per-frame noise seed derived from the scenario seed."""
    ss = np.random.SeedSequence([int(scenario_seed) & 0xFFFFFFFF, 0x5EED, frame_index])
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Scenario generation


def _bounce(pos: float, vel: float, lo: float, hi: float, dt: float):
    """Advance a 1-D position with elastic reflection at the interval edges."""
    pos = pos + vel * dt
    while pos > hi or pos < lo:
        if pos > hi:
            pos = 2.0 * hi - pos
            vel = -vel
        elif pos < lo:
            pos = 2.0 * lo - pos
            vel = -vel
    return pos, vel


def generate_scenario(
    kind: str, n_frames: int, config: RadarConfig, seed: int
) -> Scenario:
    """Build a deterministic scatterer trajectory for one target kind.

    The same (kind, seed, config) triplet always reproduces the identical
    scenario. Bulk ranges stay inside [1, 4] m, mirroring a desk-scale
    short-range setup, and all velocities respect the unambiguous interval.
    """
    if kind not in ALL_KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {ALL_KINDS}")
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")

    rng = np.random.default_rng(
        np.random.SeedSequence([int(seed) & 0xFFFFFFFF, ALL_KINDS.index(kind)])
    )
    dt = config.frame_period
    frames = _KIND_BUILDERS[kind](n_frames, dt, rng)
    return Scenario(kind=kind, n_frames=n_frames, seed=seed, trajectory=tuple(frames))


def _micro_phase(freq: float, phase0: float, t: float) -> float:
    return (2.0 * math.pi * freq * t + phase0) % (2.0 * math.pi)


def _human_frames(
    n_frames,
    dt,
    rng,
    torso_amp_range,
    torso_freq_range,
    limb_amp_range,
    limb_freq_range,
    n_limbs,
):
    """Stationary human: torso oscillation plus smaller limb movements."""
    r0 = rng.uniform(1.3, 3.6)
    strength = rng.uniform(0.8, 1.2)
    t_amp = rng.uniform(*torso_amp_range)
    t_freq = rng.uniform(*torso_freq_range)
    t_phase = rng.uniform(0, 2 * math.pi)
    limbs = [
        (
            r0 + rng.uniform(-0.25, 0.25),
            rng.uniform(0.25, 0.45),
            rng.uniform(*limb_amp_range),
            rng.uniform(*limb_freq_range),
            rng.uniform(0, 2 * math.pi),
        )
        for _ in range(n_limbs)
    ]
    frames = []
    for f in range(n_frames):
        t = f * dt
        scats = [
            Scatterer(
                range=r0,
                radial_velocity=0.0,
                amplitude=strength,
                micro_motion_amp=t_amp,
                micro_motion_freq=t_freq,
                micro_motion_phase=_micro_phase(t_freq, t_phase, t),
            )
        ]
        for lr, lamp, la, lf, lp in limbs:
            scats.append(
                Scatterer(
                    range=lr,
                    radial_velocity=0.0,
                    amplitude=lamp,
                    micro_motion_amp=la,
                    micro_motion_freq=lf,
                    micro_motion_phase=_micro_phase(lf, lp, t),
                )
            )
        frames.append(tuple(scats))
    return frames


def _sit_frames(n_frames, dt, rng):
    # Large, slow torso oscillation: peak micro velocity ~0.11-0.25 m/s,
    # well above the standing band so the classes stay separable.
    return _human_frames(
        n_frames,
        dt,
        rng,
        torso_amp_range=(0.035, 0.050),
        torso_freq_range=(0.50, 0.80),
        limb_amp_range=(0.010, 0.020),
        limb_freq_range=(0.5, 1.0),
        n_limbs=2,
    )


def _stand_frames(n_frames, dt, rng):
    # Small, faster postural sway: peak micro velocity ~0.01-0.045 m/s.
    return _human_frames(
        n_frames,
        dt,
        rng,
        torso_amp_range=(0.0015, 0.0040),
        torso_freq_range=(1.0, 1.8),
        limb_amp_range=(0.0008, 0.0020),
        limb_freq_range=(1.2, 2.2),
        n_limbs=2,
    )


def _walk_frames(n_frames, dt, rng):
    lo, hi = 1.2, 3.8
    pos = rng.uniform(1.6, 3.4)
    vel = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
    strength = rng.uniform(0.8, 1.2)
    gait = rng.uniform(1.2, 1.8)
    # Strong limb swing: the gait sidebands are what distinguish a walking
    # person from any other moving object at the same bulk velocity.
    limbs = [
        (
            rng.uniform(-0.30, 0.30),
            rng.uniform(0.35, 0.55),
            rng.uniform(0.06, 0.12),
            rng.uniform(0, 2 * math.pi),
        )
        for _ in range(2)
    ]
    frames = []
    for f in range(n_frames):
        t = f * dt
        scats = [
            Scatterer(
                range=pos,
                radial_velocity=vel,
                amplitude=strength,
                micro_motion_amp=0.01,
                micro_motion_freq=gait,
                micro_motion_phase=_micro_phase(gait, 0.0, t),
            )
        ]
        for off, lamp, la, lp in limbs:
            scats.append(
                Scatterer(
                    range=min(max(pos + off, 0.5), 4.5),
                    radial_velocity=vel,
                    amplitude=lamp,
                    micro_motion_amp=la,
                    micro_motion_freq=gait,
                    micro_motion_phase=_micro_phase(gait, lp, t),
                )
            )
        frames.append(tuple(scats))
        pos, vel = _bounce(pos, vel, lo, hi, dt)
    return frames


def _fan_frames(n_frames, dt, rng):
    r0 = rng.uniform(1.3, 3.5)
    body_amp = rng.uniform(0.4, 0.6)
    n_blades = int(rng.integers(2, 4))
    blades = [
        (
            rng.uniform(0.008, 0.018),
            rng.uniform(10.0, 20.0),
            rng.uniform(0, 2 * math.pi),
            rng.uniform(0.4, 0.7),
        )
        for _ in range(n_blades)
    ]
    frames = []
    for f in range(n_frames):
        t = f * dt
        scats = [Scatterer(range=r0, radial_velocity=0.0, amplitude=body_amp)]
        for ba, bf, bp, bamp in blades:
            scats.append(
                Scatterer(
                    range=r0,
                    radial_velocity=0.0,
                    amplitude=bamp,
                    micro_motion_amp=ba,
                    micro_motion_freq=bf,
                    micro_motion_phase=_micro_phase(bf, bp, t),
                )
            )
        frames.append(tuple(scats))
    return frames


def _toy_car_frames(n_frames, dt, rng):
    lo, hi = 1.2, 3.8
    pos = rng.uniform(1.5, 3.5)
    vel = rng.choice([-1.0, 1.0]) * rng.uniform(1.8, 2.8)
    strength = rng.uniform(0.5, 0.9)
    vib_amp = rng.uniform(0.001, 0.003)
    vib_freq = rng.uniform(8.0, 15.0)
    vib_phase = rng.uniform(0, 2 * math.pi)
    frames = []
    for f in range(n_frames):
        t = f * dt
        frames.append(
            (
                Scatterer(
                    range=pos,
                    radial_velocity=vel,
                    amplitude=strength,
                    micro_motion_amp=vib_amp,
                    micro_motion_freq=vib_freq,
                    micro_motion_phase=_micro_phase(vib_freq, vib_phase, t),
                ),
            )
        )
        pos, vel = _bounce(pos, vel, lo, hi, dt)
    return frames


def _swinging_frames(n_frames, dt, rng):
    r0 = rng.uniform(1.8, 3.2)
    sw_amp = rng.uniform(0.20, 0.45)
    sw_freq = rng.uniform(0.45, 0.80)
    sw_phase = rng.uniform(0, 2 * math.pi)
    strength = rng.uniform(0.5, 0.9)
    frames = []
    for f in range(n_frames):
        t = f * dt
        arg = 2.0 * math.pi * sw_freq * t + sw_phase
        pos = r0 + sw_amp * math.sin(arg)
        vel = 2.0 * math.pi * sw_freq * sw_amp * math.cos(arg)
        frames.append(
            (
                Scatterer(
                    range=pos,
                    radial_velocity=vel,
                    amplitude=strength,
                    micro_motion_amp=0.002,
                    micro_motion_freq=3.0,
                    micro_motion_phase=_micro_phase(3.0, 0.0, t),
                ),
            )
        )
    return frames


def _stationary_clutter_frames(n_frames, dt, rng):
    n_objects = int(rng.integers(1, 4))
    objects = [
        (rng.uniform(1.0, 4.0), rng.uniform(0.3, 1.0)) for _ in range(n_objects)
    ]
    frame = tuple(
        Scatterer(range=r, radial_velocity=0.0, amplitude=a) for r, a in objects
    )
    return [frame] * n_frames


def _vacuum_frames(n_frames, dt, rng):
    lo, hi = 1.2, 3.8
    pos = rng.uniform(1.5, 3.5)
    strength = rng.uniform(0.6, 1.0)
    vib_amp = rng.uniform(0.003, 0.006)
    vib_freq = rng.uniform(20.0, 40.0)
    vib_phase = rng.uniform(0, 2 * math.pi)
    vel = rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 0.7)
    frames_left = 0
    frames = []
    for f in range(n_frames):
        t = f * dt
        if frames_left <= 0:
            # New travel segment with a fresh speed and direction.
            vel = rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 0.7)
            frames_left = int(rng.uniform(0.8, 2.5) / dt)
        frames.append(
            (
                Scatterer(
                    range=pos,
                    radial_velocity=vel,
                    amplitude=strength,
                    micro_motion_amp=vib_amp,
                    micro_motion_freq=vib_freq,
                    micro_motion_phase=_micro_phase(vib_freq, vib_phase, t),
                ),
            )
        )
        pos, vel = _bounce(pos, vel, lo, hi, dt)
        frames_left -= 1
    return frames


_KIND_BUILDERS = {
    "sit": _sit_frames,
    "stand": _stand_frames,
    "walk": _walk_frames,
    "fan": _fan_frames,
    "toy_car": _toy_car_frames,
    "swinging": _swinging_frames,
    "stationary_clutter": _stationary_clutter_frames,
    "vacuum": _vacuum_frames,
}
