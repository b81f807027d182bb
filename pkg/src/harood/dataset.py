"""Dataset assembly: simulate scenario recordings, preprocess, persist.

Recordings are independent jobs with derived seeds, so they can run in a
process pool (capped by HAROOD_WORKERS) without changing the output.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DatasetRecipe, RadarConfig, worker_count
from .labels import KIND_TO_CODE, SPLITS
from .preprocess import MICRO_HISTORY, ACCUM_DECAY, ACCUM_WINDOW, process_recording
from .simulate import generate_scenario, simulate_scenario
from .store import DatasetManifest, SampleRecord, write_samples


@dataclass(frozen=True)
class _RecordingJob:
    split: str
    kind: str
    n_samples: int
    scenario_seed: int


def _recording_seed(master_seed: int, split: str, kind: str, rec_index: int) -> int:
    ss = np.random.SeedSequence(
        [int(master_seed) & 0xFFFFFFFF, SPLITS.index(split), KIND_TO_CODE[kind], rec_index]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def _plan_jobs(recipe: DatasetRecipe, master_seed: int) -> list[_RecordingJob]:
    jobs = []
    for split in SPLITS:
        counts = recipe.splits()[split]
        for kind in sorted(counts, key=lambda k: KIND_TO_CODE[k]):
            remaining = counts[kind]
            rec_index = 0
            while remaining > 0:
                take = min(recipe.samples_per_recording, remaining)
                jobs.append(
                    _RecordingJob(
                        split=split,
                        kind=kind,
                        n_samples=take,
                        scenario_seed=_recording_seed(master_seed, split, kind, rec_index),
                    )
                )
                remaining -= take
                rec_index += 1
    return jobs


def _run_job(job: _RecordingJob, config: RadarConfig, accum_window: int, accum_decay: float) -> np.ndarray:
    n_frames = job.n_samples + MICRO_HISTORY - 1
    scenario = generate_scenario(job.kind, n_frames, config, job.scenario_seed)
    cubes = simulate_scenario(scenario, config)
    return process_recording(cubes, config, accum_window, accum_decay)


def build_dataset(
    recipe: DatasetRecipe,
    config: RadarConfig,
    output_path: str | Path,
    seed: int,
    accum_window: int = ACCUM_WINDOW,
    accum_decay: float = ACCUM_DECAY,
    workers: int | None = None,
) -> DatasetManifest:
    """Simulate and preprocess every recording in the recipe and write the store.

    Deterministic per (recipe, config, seed): two builds produce
    byte-identical blobs and manifests.
    """
    jobs = _plan_jobs(recipe, seed)
    workers = worker_count() if workers is None else max(1, workers)

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    _run_job,
                    jobs,
                    [config] * len(jobs),
                    [accum_window] * len(jobs),
                    [accum_decay] * len(jobs),
                    chunksize=1,
                )
            )
    else:
        results = [_run_job(job, config, accum_window, accum_decay) for job in jobs]

    records = []
    next_id = 0
    for job, images in zip(jobs, results):
        label = KIND_TO_CODE[job.kind]
        for sample in images:
            records.append(
                SampleRecord(
                    id=next_id,
                    macro=sample[0],
                    micro=sample[1],
                    label=label,
                    split=job.split,
                )
            )
            next_id += 1

    snapshot = {
        "radar": {
            "n_rx": config.n_rx,
            "n_chirps": config.n_chirps,
            "n_samples": config.n_samples,
            "carrier_freq": config.carrier_freq,
            "bandwidth": config.bandwidth,
            "chirp_period": config.chirp_period,
            "frame_period": config.frame_period,
            "noise_std": config.noise_std,
        },
        "recipe": recipe.splits(),
        "samples_per_recording": recipe.samples_per_recording,
        "accum_window": accum_window,
        "accum_decay": accum_decay,
    }
    return write_samples(records, output_path, config=snapshot, seed=seed)
