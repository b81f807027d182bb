"""Synthetic FMCW radar pipeline: simulation, range-Doppler preprocessing,
two-stage training, reconstruction-based OOD detection and evaluation."""

from .config import DatasetRecipe, EvalConfig, ModelConfig, RadarConfig, RunConfig, TrainConfig
from .dataset import build_dataset
from .detector import HaroodDetector
from .evaluate import evaluate_detector
from .losses import contrastive_loss, cross_entropy, reconstruction_loss, triplet_loss
from .metrics import EvaluationReport, aupr, auroc, classification_report, fpr_at_tpr
from .network import ActivityClassifier, HaroodNet
from .preprocess import (
    RangeDopplerPreprocessor,
    accumulate_frames,
    compute_macro_rdi,
    compute_micro_rdi,
    mti_filter,
    range_transform,
)
from .scoring import (
    Threshold,
    calibrate_threshold,
    detect,
    energy_score,
    harood_score,
    harood_scores,
    maxlogit_score,
    msp_score,
    odin_scores,
)
from .simulate import Scatterer, Scenario, generate_scenario, simulate_frame
from .store import (
    DatasetManifest,
    SampleRecord,
    read_samples,
    sample_contrastive_pairs,
    sample_triplets,
    write_samples,
)
from .training import Stage1Schedule, TrainingLog, finite_difference_audit, train_stage1, train_stage2

__version__ = "0.1.0"

__all__ = [
    "ActivityClassifier",
    "DatasetManifest",
    "DatasetRecipe",
    "EvalConfig",
    "EvaluationReport",
    "HaroodDetector",
    "HaroodNet",
    "ModelConfig",
    "RadarConfig",
    "RangeDopplerPreprocessor",
    "RunConfig",
    "SampleRecord",
    "Scatterer",
    "Scenario",
    "Stage1Schedule",
    "Threshold",
    "TrainConfig",
    "TrainingLog",
    "accumulate_frames",
    "aupr",
    "auroc",
    "build_dataset",
    "calibrate_threshold",
    "classification_report",
    "compute_macro_rdi",
    "compute_micro_rdi",
    "contrastive_loss",
    "cross_entropy",
    "detect",
    "energy_score",
    "evaluate_detector",
    "finite_difference_audit",
    "fpr_at_tpr",
    "generate_scenario",
    "harood_score",
    "harood_scores",
    "maxlogit_score",
    "msp_score",
    "mti_filter",
    "odin_scores",
    "range_transform",
    "read_samples",
    "reconstruction_loss",
    "sample_contrastive_pairs",
    "sample_triplets",
    "simulate_frame",
    "train_stage1",
    "train_stage2",
    "triplet_loss",
    "write_samples",
]
