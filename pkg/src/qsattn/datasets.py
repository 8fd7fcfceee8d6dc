"""Dataset loading, scaling, splitting and vocabulary management."""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blocks import PAD_TOKEN
from .topology import Sample

IRIS_HEADER = ["sepal_length", "sepal_width", "petal_length", "petal_width", "label"]
IRIS_CLASS_NAMES = {"setosa": 0, "versicolour": 1, "versicolor": 1}
EXCLUDED_CLASS = "virginica"

EXPECTED_VOCAB = {"mc": 17, "rp": 115}
EXPECTED_RECORDS = {"mc": 130, "rp": 105}

N_POSITIONS = 4

DATA_DIR_ENV = "QSATTN_DATA_DIR"
DEFAULT_FILES = {"iris": "iris.csv", "mc": "mc.tsv", "rp": "rp.tsv"}


def default_data_dir() -> Path:
    override = os.environ.get(DATA_DIR_ENV)
    if override:
        return Path(override)
    return Path(__file__).parent / "data"


def dataset_path(dataset: str, data_dir: str | Path | None = None) -> Path:
    base = Path(data_dir) if data_dir is not None else default_data_dir()
    return base / DEFAULT_FILES[dataset]


@dataclass
class IrisRecord:
    features: tuple[float, float, float, float]
    label: int


@dataclass
class TextRecord:
    tokens: list[str]
    label: int


@dataclass
class SplitSpec:
    train: int
    dev: int
    test: int
    stratified: bool
    seed: int


def default_split_spec(dataset: str, seed: int) -> SplitSpec:
    if dataset == "iris":
        return SplitSpec(80, 0, 20, stratified=True, seed=seed)
    if dataset == "mc":
        return SplitSpec(70, 30, 30, stratified=False, seed=seed)
    if dataset == "rp":
        return SplitSpec(74, 0, 31, stratified=False, seed=seed)
    raise ValueError(f"unsupported dataset {dataset!r}")


# --- iris -----------------------------------------------------------------


def load_iris(path: str | Path) -> list[IrisRecord]:
    """Load the two-class iris file: exactly 100 records, 50 per class.

    Rows of the excluded third class are filtered out, so a full three-class
    file in the same format also works.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != IRIS_HEADER:
            raise ValueError(
                f"unexpected header {header} in {path}, expected {IRIS_HEADER}"
            )
        records = []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ValueError(f"{path}:{rownum}: expected 5 columns, got {len(row)}")
            label_raw = row[4].strip().lower()
            if label_raw == EXCLUDED_CLASS:
                continue
            if label_raw in IRIS_CLASS_NAMES:
                label = IRIS_CLASS_NAMES[label_raw]
            elif label_raw in ("0", "1"):
                label = int(label_raw)
            else:
                raise ValueError(f"{path}:{rownum}: unknown class {row[4]!r}")
            try:
                feats = tuple(float(v) for v in row[:4])
            except ValueError as exc:
                raise ValueError(f"{path}:{rownum}: bad feature value ({exc})") from None
            if any(not np.isfinite(f) or f <= 0 for f in feats):
                raise ValueError(f"{path}:{rownum}: features must be finite and positive")
            records.append(IrisRecord(feats, label))
    counts = [sum(1 for r in records if r.label == c) for c in (0, 1)]
    if counts != [50, 50]:
        raise ValueError(f"expected 50 records per class, got {counts}")
    return records


@dataclass
class ScaleStats:
    mins: np.ndarray
    maxs: np.ndarray


def fit_scale_stats(records: list[IrisRecord]) -> ScaleStats:
    feats = np.array([r.features for r in records])
    return ScaleStats(feats.min(axis=0), feats.max(axis=0))


def scale_features(records: list[IrisRecord],
                   stats: ScaleStats | None = None) -> list[Sample]:
    """Min-max map each feature to [0, pi]; out-of-range values are clamped.

    Pass training-split stats when scaling dev/test data.
    """
    if stats is None:
        stats = fit_scale_stats(records)
    span = stats.maxs - stats.mins
    degenerate = span <= 0
    if np.any(degenerate):
        warnings.warn("degenerate feature(s) with max == min map to pi/2")
    samples = []
    for r in records:
        scaled = np.where(
            degenerate,
            np.pi / 2,
            (np.array(r.features) - stats.mins) / np.where(degenerate, 1.0, span) * np.pi,
        )
        scaled = np.clip(scaled, 0.0, np.pi)
        samples.append(Sample(list(scaled), r.label))
    return samples


# --- text -----------------------------------------------------------------


def load_text(path: str | Path, dataset: str) -> tuple[list[TextRecord], list[str]]:
    """Load a tab-separated text file: "LABEL<TAB>token token ...".

    The vocabulary lists tokens in order of first appearance, with the PAD
    token appended last.
    """
    if dataset not in EXPECTED_VOCAB:
        raise ValueError(f"unsupported text dataset {dataset!r}")
    path = Path(path)
    records = []
    vocab: list[str] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        label_raw, _, sentence = line.partition("\t")
        if label_raw not in ("0", "1"):
            raise ValueError(f"{path}:{lineno}: bad label {label_raw!r}")
        tokens = sentence.split()
        if not tokens:
            raise ValueError(f"{path}:{lineno}: empty sentence")
        if len(tokens) > N_POSITIONS:
            raise ValueError(f"{path}:{lineno}: more than {N_POSITIONS} tokens")
        for tok in tokens:
            if tok not in seen:
                seen.add(tok)
                vocab.append(tok)
        records.append(TextRecord(tokens, int(label_raw)))
    if len(vocab) != EXPECTED_VOCAB[dataset]:
        warnings.warn(
            f"{dataset} vocabulary has {len(vocab)} tokens, "
            f"expected {EXPECTED_VOCAB[dataset]}"
        )
    if len(records) != EXPECTED_RECORDS[dataset]:
        warnings.warn(
            f"{dataset} has {len(records)} records, expected {EXPECTED_RECORDS[dataset]}"
        )
    return records, vocab + [PAD_TOKEN]


def text_samples(records: list[TextRecord], vocab: list[str]) -> list[Sample]:
    """PAD-pad each record to the fixed position count."""
    known = set(vocab)
    samples = []
    for r in records:
        for tok in r.tokens:
            if tok not in known:
                raise KeyError(f"token {tok!r} not in vocabulary")
        padded = r.tokens + [PAD_TOKEN] * (N_POSITIONS - len(r.tokens))
        samples.append(Sample(padded, r.label))
    return samples


# --- splitting ------------------------------------------------------------


def split(records: list, spec: SplitSpec) -> dict[str, list]:
    """Seeded shuffle into train/dev/test; stratified by label when asked."""
    total = spec.train + spec.dev + spec.test
    if total != len(records):
        raise ValueError(f"split sizes sum to {total}, dataset has {len(records)}")
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        by_label: dict[int, list] = {}
        for r in records:
            by_label.setdefault(r.label, []).append(r)
        parts: dict[str, list] = {"train": [], "dev": [], "test": []}
        for label in sorted(by_label):
            group = by_label[label]
            frac = len(group) / len(records)
            n_train = round(spec.train * frac)
            n_dev = round(spec.dev * frac)
            order = rng.permutation(len(group))
            shuffled = [group[k] for k in order]
            parts["train"] += shuffled[:n_train]
            parts["dev"] += shuffled[n_train:n_train + n_dev]
            parts["test"] += shuffled[n_train + n_dev:]
        sizes = {k: len(v) for k, v in parts.items()}
        if sizes != {"train": spec.train, "dev": spec.dev, "test": spec.test}:
            raise ValueError(f"stratified split produced sizes {sizes}")
        return parts
    order = rng.permutation(len(records))
    shuffled = [records[k] for k in order]
    return {
        "train": shuffled[:spec.train],
        "dev": shuffled[spec.train:spec.train + spec.dev],
        "test": shuffled[spec.train + spec.dev:],
    }


def load_splits(dataset: str, seed: int, data_dir: str | Path | None = None):
    """Load, split and encode a dataset.

    Returns (splits, vocabulary) where splits maps train/dev/test to Sample
    lists (dev may be empty) and vocabulary is None for iris.
    """
    spec = default_split_spec(dataset, seed)
    path = dataset_path(dataset, data_dir)
    if dataset == "iris":
        records = load_iris(path)
        parts = split(records, spec)
        stats = fit_scale_stats(parts["train"])
        return {k: scale_features(v, stats) if v else [] for k, v in parts.items()}, None
    records, vocab = load_text(path, dataset)
    parts = split(records, spec)
    return {k: text_samples(v, vocab) if v else [] for k, v in parts.items()}, vocab
