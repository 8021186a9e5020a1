"""Intensity regression over named sparse features, plus the experiment
harnesses: per-feature-set ablation, range-restricted evaluation, and the
cross-emotion transfer grid.

Final models train on the union of the train and dev partitions and are
evaluated on the test partition.  Evaluation is correlation based, so
predictions are not clipped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Dataset
from .errors import DegenerateInputError, ParseError, TrainingError, ValidationError
from .features import FeatureConfig, FeatureVector, Resources, assemble
from .scoring import pearson, spearman
from .svr import DualCoordinateSVR

TRAIN_PARTITIONS = ("train", "dev")


@dataclass(frozen=True)
class Hyperparams:
    C: float = 1.0
    epsilon: float = 0.1
    tol: float = 1e-3
    max_epochs: int = 1000


@dataclass
class RegressionModel:
    weights: dict[str, float]
    bias: float
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    config_label: Optional[str] = None

    def __post_init__(self):
        for name, value in self.weights.items():
            if not math.isfinite(value):
                raise ValidationError(f"non-finite weight for feature {name!r}")


@dataclass(frozen=True)
class EvalResult:
    pearson: float
    spearman: float
    n: int
    subset_threshold: Optional[float] = None


def train(
    examples: Sequence[tuple[FeatureVector, float]],
    hyperparams: Optional[Hyperparams] = None,
    config_label: Optional[str] = None,
) -> RegressionModel:
    """Fit the regressor on (feature vector, target) pairs.

    Deterministic given example order; the feature vocabulary is fixed from
    the examples themselves.
    """
    hp = hyperparams or Hyperparams()
    if len(examples) < 2:
        raise TrainingError("need at least two training examples")
    if all(not vec for vec, _ in examples):
        raise TrainingError("all feature vectors are empty")
    for _, target in examples:
        if not math.isfinite(target) or not 0.0 <= target <= 1.0:
            raise TrainingError(f"target {target} outside [0, 1]")
    vocab: dict[str, int] = {}
    for vec, _ in examples:
        for name in vec:
            if name not in vocab:
                vocab[name] = len(vocab)
    rows, cols, data = [], [], []
    for i, (vec, _) in enumerate(examples):
        for name, value in vec.items():
            rows.append(i)
            cols.append(vocab[name])
            data.append(value)
    X = sp.csr_matrix(
        (data, (rows, cols)), shape=(len(examples), len(vocab)), dtype=np.float64
    )
    y = np.array([t for _, t in examples], dtype=np.float64)
    est = DualCoordinateSVR(
        C=hp.C, epsilon=hp.epsilon, tol=hp.tol, max_epochs=hp.max_epochs
    )
    est.fit(X, y)
    names = sorted(vocab, key=vocab.get)
    weights = {
        name: float(w) for name, w in zip(names, est.coef_) if w != 0.0
    }
    return RegressionModel(
        weights=weights,
        bias=float(est.intercept_),
        hyperparams=hp,
        config_label=config_label,
    )


def predict(model: RegressionModel, features: FeatureVector) -> float:
    """w.x + b; unknown feature names contribute nothing; not clipped."""
    total = model.bias
    weights = model.weights
    for name, value in features.items():
        w = weights.get(name)
        if w is not None:
            total += w * value
    return total


def evaluate(
    model: RegressionModel, test: Sequence[tuple[FeatureVector, float]]
) -> EvalResult:
    if len(test) < 2:
        raise DegenerateInputError("need at least two test examples")
    gold = [t for _, t in test]
    preds = [predict(model, vec) for vec, _ in test]
    return EvalResult(
        pearson=pearson(preds, gold), spearman=spearman(preds, gold), n=len(test)
    )


def evaluate_subset(
    model: RegressionModel,
    test: Sequence[tuple[FeatureVector, float]],
    threshold: float = 0.5,
) -> EvalResult:
    """Evaluation restricted to gold scores >= threshold."""
    subset = [(vec, t) for vec, t in test if t >= threshold]
    if len(subset) < 2:
        raise DegenerateInputError(
            f"only {len(subset)} test examples have gold >= {threshold}"
        )
    base = evaluate(model, subset)
    return EvalResult(
        pearson=base.pearson,
        spearman=base.spearman,
        n=base.n,
        subset_threshold=threshold,
    )


# --- dataset-level plumbing ---------------------------------------------------


def featurize_items(
    dataset: Dataset,
    partitions: Sequence[str],
    config: FeatureConfig,
    resources: Resources,
) -> list[tuple[FeatureVector, float]]:
    out = []
    for item in dataset.items:
        if item.partition not in partitions:
            continue
        if item.gold_score is None:
            raise ValidationError(f"item {item.id!r} lacks a gold score")
        out.append((assemble(item.text, config, resources), item.gold_score))
    return out


def train_on_dataset(
    dataset: Dataset,
    config: FeatureConfig,
    resources: Resources,
    hyperparams: Optional[Hyperparams] = None,
    partitions: Sequence[str] = TRAIN_PARTITIONS,
) -> RegressionModel:
    examples = featurize_items(dataset, partitions, config, resources)
    return train(examples, hyperparams, config_label=config.label())


@dataclass
class AblationResult:
    """EvalResult grid: feature config x emotion, plus the macro average."""

    configs: tuple[str, ...]
    emotions: tuple[str, ...]
    cells: dict[str, dict[str, EvalResult]]

    def average(self, config_label: str) -> float:
        row = self.cells[config_label]
        return math.fsum(r.pearson for r in row.values()) / len(row)

    def to_tsv(self) -> str:
        lines = ["\t".join(("config",) + self.emotions + ("avg",))]
        for label in self.configs:
            row = self.cells[label]
            values = [f"{row[e].pearson:.4f}" for e in self.emotions]
            lines.append(
                "\t".join([label] + values + [f"{self.average(label):.4f}"])
            )
        return "\n".join(lines) + "\n"

    def to_kv(self) -> dict[str, str]:
        kv = {}
        for label in self.configs:
            for emotion, result in self.cells[label].items():
                kv[f"{label}/{emotion}/pearson"] = repr(result.pearson)
                kv[f"{label}/{emotion}/spearman"] = repr(result.spearman)
                kv[f"{label}/{emotion}/n"] = str(result.n)
            kv[f"{label}/avg/pearson"] = repr(self.average(label))
        return kv


def ablation_run(
    datasets: Mapping[str, Dataset],
    feature_configs: Sequence[str],
    resources: Resources,
    hyperparams: Optional[Hyperparams] = None,
    subset_threshold: Optional[float] = None,
) -> AblationResult:
    """Train/evaluate one model per (config, emotion).

    With subset_threshold set, evaluation is restricted to the items whose
    gold score meets it.
    """
    emotions = tuple(datasets)
    configs = tuple(feature_configs)
    cells: dict[str, dict[str, EvalResult]] = {}
    for label in configs:
        config = FeatureConfig.parse(label)
        row: dict[str, EvalResult] = {}
        for emotion in emotions:
            dataset = datasets[emotion]
            model = train_on_dataset(dataset, config, resources, hyperparams)
            test = featurize_items(dataset, ("test",), config, resources)
            if subset_threshold is None:
                row[emotion] = evaluate(model, test)
            else:
                row[emotion] = evaluate_subset(model, test, subset_threshold)
        cells[label] = row
    return AblationResult(configs=configs, emotions=emotions, cells=cells)


@dataclass
class TransferResult:
    """Pearson for models trained on one emotion, tested on another."""

    train_specs: tuple[str, ...]
    emotions: tuple[str, ...]
    cells: dict[str, dict[str, float]]

    def to_tsv(self) -> str:
        lines = ["\t".join(("train\\test",) + self.emotions)]
        for spec in self.train_specs:
            row = self.cells[spec]
            lines.append(
                "\t".join([spec] + [f"{row[e]:.4f}" for e in self.emotions])
            )
        return "\n".join(lines) + "\n"

    def to_kv(self) -> dict[str, str]:
        return {
            f"{spec}->{emotion}": repr(r)
            for spec in self.train_specs
            for emotion, r in self.cells[spec].items()
        }


def transfer_matrix(
    datasets: Mapping[str, Dataset],
    resources: Resources,
    config: str = "WN+WE+L",
    extra_train_specs: Sequence[str] = (),
    hyperparams: Optional[Hyperparams] = None,
) -> TransferResult:
    """Cross-emotion grid; cells (i, j) and (j, i) are independent.

    A train spec may pool emotions with '+', e.g. "fear+sadness".
    """
    parsed = FeatureConfig.parse(config)
    emotions = tuple(datasets)
    specs = emotions + tuple(extra_train_specs)
    cells: dict[str, dict[str, float]] = {}
    for spec in specs:
        examples: list[tuple[FeatureVector, float]] = []
        for part in spec.split("+"):
            if part not in datasets:
                raise ValidationError(f"unknown emotion {part!r} in train spec")
            examples.extend(
                featurize_items(datasets[part], TRAIN_PARTITIONS, parsed, resources)
            )
        model = train(examples, hyperparams, config_label=parsed.label())
        row: dict[str, float] = {}
        for emotion in emotions:
            test = featurize_items(datasets[emotion], ("test",), parsed, resources)
            row[emotion] = evaluate(model, test).pearson
        cells[spec] = row
    return TransferResult(train_specs=specs, emotions=emotions, cells=cells)


# --- model serialization ------------------------------------------------------


def write_model(model: RegressionModel, path) -> None:
    """Header lines then `feature <TAB> weight` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# C={model.hyperparams.C!r} epsilon={model.hyperparams.epsilon!r}\n")
        fh.write(f"# bias={model.bias!r}\n")
        if model.config_label:
            fh.write(f"# config={model.config_label}\n")
        for name in sorted(model.weights):
            fh.write(f"{name}\t{model.weights[name]!r}\n")


def read_model(path) -> RegressionModel:
    header: dict[str, str] = {}
    weights: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                for part in line[1:].strip().split():
                    key, _, value = part.partition("=")
                    if value:
                        header[key] = value
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError("expected `feature<TAB>weight`", line_number)
            try:
                weights[cols[0]] = float(cols[1])
            except ValueError:
                raise ParseError(f"bad weight {cols[1]!r}", line_number) from None
    try:
        bias = float(header["bias"])
    except (KeyError, ValueError):
        raise ParseError("model file lacks a bias header", 1) from None
    hp = Hyperparams(
        C=float(header.get("C", 1.0)), epsilon=float(header.get("epsilon", 0.1))
    )
    return RegressionModel(
        weights=weights,
        bias=bias,
        hyperparams=hp,
        config_label=header.get("config"),
    )
