import numpy as np
import pytest
import torch

torch.set_num_threads(2)

from harood import DatasetRecipe, HaroodDetector, RadarConfig, build_dataset
from harood.labels import ID_KINDS, OE_OOD_KINDS, OOD_KINDS
from harood.store import read_samples, records_to_arrays


SMALL_RECIPE = DatasetRecipe(
    train={k: 96 for k in ID_KINDS},
    oe={k: 24 for k in OE_OOD_KINDS},
    calibration={k: 60 for k in ID_KINDS},
    test=dict({k: 30 for k in ID_KINDS}, **{k: 18 for k in OOD_KINDS}),
    samples_per_recording=48,
)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A reduced but fully structured dataset shared across pipeline tests."""
    root = tmp_path_factory.mktemp("smallds")
    manifest = build_dataset(SMALL_RECIPE, RadarConfig(), root, seed=7, workers=2)
    splits = {}
    for name in ("train", "oe", "calibration", "test"):
        X, y = records_to_arrays(read_samples(manifest, name))
        splits[name] = (X, y)
    return {"manifest": manifest, "root": root, "splits": splits}


@pytest.fixture(scope="session")
def fitted_detector(small_dataset):
    """Detector trained once on the small dataset; reused by many tests."""
    X_train, y_train = small_dataset["splits"]["train"]
    X_oe, y_oe = small_dataset["splits"]["oe"]
    X_cal, _ = small_dataset["splits"]["calibration"]
    det = HaroodDetector(seed=11)
    det.fit(
        np.concatenate([X_train, X_oe]),
        np.concatenate([y_train, y_oe]),
        X_calibration=X_cal,
    )
    return det
