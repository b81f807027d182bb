"""sklearn-style estimator wrapping the full two-stage pipeline.

fit(X, y) trains the reconstruction/triplet/contrastive stage, then the
activity classifier, then calibrates the OOD threshold. X is the stacked
(n, 2, rows, cols) macro/micro image batch produced by the preprocessor;
y holds activity labels 0..2 for in-distribution samples and any other
value (conventionally -1, or a disturber kind code) for outlier-exposure
samples.

Following the convention of sklearn outlier detectors, score_samples and
decision_function rank inliers higher, and predict returns -1 for samples
flagged OOD and the activity class 0..2 otherwise.
"""

from __future__ import annotations

import numpy as np
import torch
from sklearn.base import BaseEstimator

from ._validation import check_labels, check_rdi_batch
from .config import ModelConfig
from .scoring import calibrate_threshold, compute_logits, harood_scores
from .training import Stage1Schedule, compute_embeddings, train_stage1, train_stage2

_ID_LABELS = (0, 1, 2)


class HaroodDetector(BaseEstimator):
    """Joint activity classifier and reconstruction-based OOD detector."""

    def __init__(
        self,
        encoder_channels=(8, 16, 32),
        head_channels=(16, 32),
        embed_dim=64,
        classifier_hidden=32,
        stage1_epochs=6,
        contrastive_epochs=3,
        batch_size=32,
        stage1_lr=1e-3,
        stage2_epochs=20,
        stage2_lr=1e-3,
        triplet_margin=2.0,
        contrastive_margin=2.0,
        macro_weight=1.0,
        micro_weight=0.001,
        target_tpr=0.95,
        seed=0,
    ):
        self.encoder_channels = encoder_channels
        self.head_channels = head_channels
        self.embed_dim = embed_dim
        self.classifier_hidden = classifier_hidden
        self.stage1_epochs = stage1_epochs
        self.contrastive_epochs = contrastive_epochs
        self.batch_size = batch_size
        self.stage1_lr = stage1_lr
        self.stage2_epochs = stage2_epochs
        self.stage2_lr = stage2_lr
        self.triplet_margin = triplet_margin
        self.contrastive_margin = contrastive_margin
        self.macro_weight = macro_weight
        self.micro_weight = micro_weight
        self.target_tpr = target_tpr
        self.seed = seed

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            encoder_channels=tuple(self.encoder_channels),
            embed_dim=self.embed_dim,
            head_channels=tuple(self.head_channels),
            classifier_hidden=self.classifier_hidden,
        )

    def fit(self, X, y, X_calibration=None):
        """Train both stages and calibrate the OOD threshold.

        X_calibration: optional held-out ID samples for threshold
        calibration; when omitted the ID training scores are used.
        """
        X = check_rdi_batch(X, "X")
        y = check_labels(y, len(X), "y")
        id_mask = np.isin(y, _ID_LABELS)
        if not id_mask.any():
            raise ValueError("fit needs in-distribution samples labelled 0..2")
        X_id, y_id = X[id_mask], y[id_mask]
        X_oe = X[~id_mask]

        schedule = Stage1Schedule(
            epochs=self.stage1_epochs,
            contrastive_epochs=self.contrastive_epochs if len(X_oe) else 0,
            batch_size=self.batch_size,
            lr=self.stage1_lr,
            triplet_margin=self.triplet_margin,
            contrastive_margin=self.contrastive_margin,
            seed=self.seed,
        )
        self.net_, self.stage1_log_ = train_stage1(
            X_id, y_id, X_oe, self._model_config(), schedule
        )
        self.classifier_, self.stage2_log_ = train_stage2(
            self.net_,
            X_id,
            y_id,
            self._model_config(),
            epochs=self.stage2_epochs,
            batch_size=self.batch_size,
            lr=self.stage2_lr,
            seed=self.seed,
        )
        cal = X_id if X_calibration is None else check_rdi_batch(X_calibration)
        cal_scores = harood_scores(self.net_, cal, self.macro_weight, self.micro_weight)
        self.threshold_ = calibrate_threshold(cal_scores, self.target_tpr)
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise RuntimeError("detector is not fitted; call fit() first")

    def ood_scores(self, X) -> np.ndarray:
        """Weighted reconstruction error; higher = more out-of-distribution."""
        self._check_fitted()
        return harood_scores(
            self.net_, check_rdi_batch(X), self.macro_weight, self.micro_weight
        )

    def score_samples(self, X) -> np.ndarray:
        """Inlier score (negated OOD score), matching sklearn conventions."""
        return -self.ood_scores(X)

    def decision_function(self, X) -> np.ndarray:
        """Positive for samples at or below the calibrated threshold (ID)."""
        self._check_fitted()
        return self.threshold_.value - self.ood_scores(X)

    def logits(self, X) -> np.ndarray:
        self._check_fitted()
        return compute_logits(self.net_, self.classifier_, check_rdi_batch(X))

    def embed(self, X) -> np.ndarray:
        self._check_fitted()
        return compute_embeddings(self.net_, check_rdi_batch(X))

    def predict_activity(self, X) -> np.ndarray:
        """Activity class 0..2 regardless of the OOD decision."""
        return self.logits(X).argmax(axis=1)

    def predict_proba(self, X) -> np.ndarray:
        logits = torch.from_numpy(self.logits(X))
        return torch.softmax(logits, dim=1).numpy()

    def predict(self, X) -> np.ndarray:
        """Activity class for samples detected ID, -1 for detected OOD."""
        preds = self.predict_activity(X)
        is_ood = self.ood_scores(X) > self.threshold_.value
        preds = preds.astype(np.int64)
        preds[is_ood] = -1
        return preds
