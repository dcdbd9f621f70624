"""Staged image classification: load -> denoise -> extract features -> classify."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import cnn, linear_models
from .dataset import EncodedDataset
from .errors import DataError, EmptyDataset, ParameterError, ShapeMismatch, UntrainedModel
from .imaging import GrayImage, HogParams, decode_pnm, denoise, encode_pnm, hog

FEATURE_MODES = ("raw-cnn", "hog+dense")
DENOISE_METHODS = ("median", "gaussian", "none")


@dataclass(frozen=True)
class Pipeline:
    denoise: str = "median"
    radius: int = 1
    sigma: float = 1.0
    feature_mode: str = "raw-cnn"
    hog_params: HogParams = field(default_factory=HogParams)

    def __post_init__(self):
        if self.denoise not in DENOISE_METHODS:
            raise ParameterError(f"denoise must be one of {DENOISE_METHODS}")
        if self.feature_mode not in FEATURE_MODES:
            raise ParameterError(f"feature_mode must be one of {FEATURE_MODES}")
        if isinstance(self.hog_params, dict):
            object.__setattr__(self, "hog_params", HogParams(**self.hog_params))

    def to_dict(self) -> dict:
        return asdict(self)

    def preprocess(self, img: GrayImage) -> GrayImage:
        return denoise(img, self.denoise, self.radius, self.sigma)

    def features(self, img: GrayImage) -> np.ndarray:
        """Denoise then extract: scaled pixels ``(h, w, 1)`` or a flat HOG vector."""
        clean = self.preprocess(img)
        if self.feature_mode == "raw-cnn":
            return (clean.pixels / 255.0)[..., None]
        return hog(clean, self.hog_params).values


ImageModel = Union[cnn.CnnNetwork, linear_models.LinearModel]


def feature_matrix(pipeline: Pipeline, images) -> np.ndarray:
    return np.stack([pipeline.features(img) for img in images])


def train_image_model(pipeline: Pipeline, images, labels, *, seed: int,
                      cnn_config: cnn.CnnTrainConfig | None = None,
                      n_kernels: int = 4, kernel_size: int = 3,
                      linear_kind: str = "logistic",
                      linear_config: linear_models.TrainConfig | None = None):
    """Fit the classifier that matches ``pipeline.feature_mode``.

    Returns ``(model, history)``.
    """
    images = list(images)
    if not images:
        raise EmptyDataset("no training images")
    y = np.asarray(labels, dtype=np.int64)
    x = feature_matrix(pipeline, images)
    if pipeline.feature_mode == "raw-cnn":
        config = cnn_config or cnn.CnnTrainConfig(seed=seed)
        n_classes = max(2, int(y.max()) + 1)
        spec = cnn.NetSpec(x.shape[1:], n_kernels, kernel_size, n_classes)
        return cnn.train_cnn(x, y, spec, config)
    if not np.all((y == 0) | (y == 1)):
        raise DataError("the hog+dense head is binary; labels must be 0 or 1")
    config = linear_config or linear_models.TrainConfig(seed=seed)
    data = EncodedDataset(x, y, tuple(f"hog_{i}" for i in range(x.shape[1])), {}, {})
    model = linear_models.train(data, linear_kind, config)
    return model, list(model.history)


def classify_image(pipeline: Pipeline, model: ImageModel, image: GrayImage) -> tuple[int, float]:
    """Run every stage on one image and return ``(label, confidence)``.

    For the linear head the confidence is the logistic of the margin, reported
    for the predicted class.
    """
    if model is None:
        raise UntrainedModel("no model supplied")
    feats = pipeline.features(image)
    if pipeline.feature_mode == "raw-cnn":
        if not isinstance(model, cnn.CnnNetwork):
            raise ShapeMismatch("raw-cnn pipeline needs a CNN model")
        probs = cnn.predict_proba(model, feats[None])[0]
        label = int(probs.argmax())
        return label, float(probs[label])
    if not isinstance(model, linear_models.LinearModel):
        raise ShapeMismatch("hog+dense pipeline needs a linear model")
    z = float(model.decision_function(feats[None])[0])
    p = float(linear_models.sigmoid(np.array([z]))[0])
    label = 1 if z >= 0.0 else 0
    return label, p if label == 1 else 1.0 - p


def model_document(pipeline: Pipeline, model: ImageModel) -> dict:
    doc = model.to_dict()
    doc["pipeline"] = pipeline.to_dict()
    return doc


def load_model_document(doc: dict) -> tuple[Pipeline, ImageModel]:
    if "pipeline" not in doc:
        raise DataError("model file has no pipeline section")
    pipeline = Pipeline(**doc["pipeline"])
    if doc.get("version") == cnn.CNN_VERSION:
        return pipeline, cnn.CnnNetwork.from_dict(doc)
    return pipeline, linear_models.LinearModel.from_dict(doc)


def write_corpus(directory, images, labels, prefix: str = "img") -> None:
    """Write PGM files plus ``labels.csv`` (filename,label)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(images))))
    rows = []
    for i, (img, label) in enumerate(zip(images, labels)):
        name = f"{prefix}{i:0{width}d}.pgm"
        (directory / name).write_bytes(encode_pnm(img))
        rows.append((name, int(label)))
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("filename", "label"))
    writer.writerows(rows)
    (directory / "labels.csv").write_text(out.getvalue(), encoding="utf-8")


def load_corpus(directory) -> tuple[list[GrayImage], list[int], list[str]]:
    directory = Path(directory)
    index = directory / "labels.csv"
    if not index.is_file():
        raise DataError(f"{directory} has no labels.csv")
    images, labels, names = [], [], []
    with open(index, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataError(f"{index}:{lineno}: expected filename,label")
            name, label = row[0].strip(), row[1].strip()
            if lineno == 1 and not label.lstrip("-").isdigit():
                continue  # header
            try:
                labels.append(int(label))
            except ValueError:
                raise DataError(f"{index}:{lineno}: label {label!r} is not an integer") from None
            path = directory / name
            if os.path.sep in name or not path.is_file():
                raise DataError(f"{index}:{lineno}: missing image {name!r}")
            images.append(decode_pnm(path.read_bytes()))
            names.append(name)
    if not images:
        raise EmptyDataset(f"{directory}: corpus is empty")
    return images, labels, names


def accuracy(predicted, labels) -> float:
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    return float(np.mean(predicted == labels)) if labels.size else math.nan
