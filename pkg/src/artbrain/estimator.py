"""Scikit-learn estimator facade over the classifier.

`ArtClassifier` exposes the usual fit/predict/predict_proba surface so the
model can sit in sklearn pipelines and model-selection utilities. Inputs are
either already-preprocessed (N, 3, S, S) float tensors or raw (N, S, S, 3)
uint8 rasters, which are resized and normalized on the way in.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import torch
from sklearn.base import BaseEstimator, ClassifierMixin

from . import labels
from .errors import DataError
from .model import ModelConfig, Predictor, build_network
from .preprocess import PreprocessConfig, preprocess
from .train import FreezeSpec, TrainConfig, train_model


class ArtClassifier(ClassifierMixin, BaseEstimator):
    """30-class artwork classifier with the attention head, sklearn-style."""

    def __init__(
        self,
        variant: str = "tiny",
        use_attention: bool = True,
        reduction: int = 4,
        dropout: float = 0.3,
        batch_size: int = 32,
        max_epochs: int = 18,
        initial_lr: float = 1e-3,
        lr_factor: float = 0.1,
        patience_epochs: int = 2,
        seed: int = 0,
        val_fraction: float = 0.1,
    ):
        self.variant = variant
        self.use_attention = use_attention
        self.reduction = reduction
        self.dropout = dropout
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.initial_lr = initial_lr
        self.lr_factor = lr_factor
        self.patience_epochs = patience_epochs
        self.seed = seed
        self.val_fraction = val_fraction

    def _model_config(self) -> ModelConfig:
        base = ModelConfig.tiny() if self.variant == "tiny" else ModelConfig.full()
        return dataclasses.replace(
            base,
            use_attention=self.use_attention,
            reduction=self.reduction,
            dropout=self.dropout,
        )

    def _validate_images(self, X: np.ndarray, config: ModelConfig) -> np.ndarray:
        """Accept preprocessed float tensors or raw uint8 rasters."""
        X = np.asarray(X)
        side = config.backbone.input_side
        if X.ndim != 4:
            raise DataError(f"expected a 4-d image batch, got shape {X.shape}")
        if X.shape[1] == 3 and np.issubdtype(X.dtype, np.floating):
            if X.shape[2] != side or X.shape[3] != side:
                raise DataError(
                    f"preprocessed batches for variant {self.variant!r} must be "
                    f"(N, 3, {side}, {side}), got {X.shape}"
                )
            return X.astype(np.float32, copy=False)
        if X.shape[3] == 3 and X.dtype == np.uint8:
            pre = PreprocessConfig(target_side=side)
            out = np.empty((len(X), 3, side, side), dtype=np.float32)
            for i, raster in enumerate(X):
                out[i] = preprocess(raster, pre).data
            return out
        raise DataError(
            "image batches must be float (N, 3, S, S) or uint8 (N, S, S, 3), "
            f"got dtype {X.dtype} with shape {X.shape}"
        )

    def fit(self, X, y) -> "ArtClassifier":
        config = self._model_config()
        images = self._validate_images(X, config)
        targets = np.asarray(y, dtype=np.int64)
        if targets.ndim != 1 or len(targets) != len(images):
            raise DataError(f"targets must be one label per image, got shape {targets.shape}")
        train_config = TrainConfig(
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            initial_lr=self.initial_lr,
            lr_factor=self.lr_factor,
            patience_epochs=self.patience_epochs,
            seed=self.seed,
            val_fraction=self.val_fraction,
            freeze=FreezeSpec(low=False, mid=False, high=False),
        )
        model = build_network(config)
        self.result_ = train_model(model, images, targets, train_config)
        self.model_ = model
        self.config_ = config
        self.classes_ = np.arange(labels.NUM_CLASSES)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise DataError("this classifier has not been fitted yet")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        images = self._validate_images(X, self.config_)
        self.model_.eval()
        probs = np.empty((len(images), labels.NUM_CLASSES), dtype=np.float64)
        with torch.no_grad():
            for start in range(0, len(images), self.batch_size):
                batch = torch.from_numpy(images[start : start + self.batch_size]).float()
                logits = self.model_(batch).double()
                probs[start : start + self.batch_size] = torch.softmax(logits, dim=-1).numpy()
        return probs

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]

    def predict_source(self, X) -> np.ndarray:
        """3-way source labels from summed subclass probabilities."""
        probs = self.predict_proba(X)
        marginals = probs.reshape(len(probs), labels.NUM_SOURCES, labels.NUM_STYLES).sum(axis=2)
        return np.argmax(marginals, axis=1)

    def as_predictor(self) -> Predictor:
        self._check_fitted()
        return Predictor(self.model_, model_version=f"{self.variant}-estimator")
