"""Dataset ingestion, synthesis, batch rasterization, and train/eval.

Datasets are landmark-level only: either a JSON-Lines file of externally
extracted landmarks or a synthetic set generated from the five checked-in
prototype poses with seeded noise and similarity jitter.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .classifier import (
    CLASS_ORDER,
    EvaluationReport,
    GestureClass,
    InsufficientData,
    LandmarkClassifier,
    TrainingConfig,
    class_index,
    evaluate,
    train,
)
from .raster import RasterSpec, rasterize
from .pngio import write_png
from .skeleton import (
    DEGENERATE_EPS,
    MIDDLE_MCP,
    NUM_LANDMARKS,
    WRIST,
    HandSkeleton,
    featurize_batch,
)


class MalformedLine(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class LandmarkSample:
    skeleton: HandSkeleton
    gesture: GestureClass
    source_id: str


@dataclass
class LandmarkDataset:
    samples: list = field(default_factory=list)
    provenance: str = ""

    def __len__(self):
        return len(self.samples)

    def features(self, rotate: bool = True) -> np.ndarray:
        return featurize_batch([s.skeleton for s in self.samples], rotate=rotate)

    def labels(self) -> np.ndarray:
        return np.array([class_index(s.gesture) for s in self.samples], dtype=np.int64)


def load_prototypes() -> dict:
    """The five checked-in prototype poses, one per gesture class."""
    text = resources.files("gesturelog").joinpath("data/prototypes.json").read_text()
    raw = json.loads(text)
    return {
        GestureClass(name): HandSkeleton.from_points(
            entry["landmarks"], handedness=entry["handedness"]
        )
        for name, entry in raw.items()
    }


def _parse_jsonl_line(line_no: int, line: str) -> LandmarkSample:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "expected a JSON object")
    missing = {"gesture", "landmarks", "source_id"} - set(obj)
    if missing:
        raise MalformedLine(line_no, f"missing fields {sorted(missing)}")
    try:
        gesture = GestureClass(obj["gesture"])
    except ValueError:
        raise MalformedLine(line_no, f"unknown gesture {obj['gesture']!r}") from None
    if gesture is GestureClass.NO_GESTURE:
        raise MalformedLine(line_no, "samples cannot be labeled 'none'")
    landmarks = obj["landmarks"]
    if not isinstance(landmarks, list) or len(landmarks) != NUM_LANDMARKS:
        n = len(landmarks) if isinstance(landmarks, list) else "non-list"
        raise MalformedLine(line_no, f"expected {NUM_LANDMARKS} landmarks, got {n}")
    try:
        pts = np.asarray(landmarks, dtype=np.float64)
    except (TypeError, ValueError):
        raise MalformedLine(line_no, "landmarks must be numeric triples") from None
    if pts.shape != (NUM_LANDMARKS, 3):
        raise MalformedLine(line_no, f"expected {NUM_LANDMARKS}x3 landmarks, got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise MalformedLine(line_no, "landmarks must be finite")
    if np.linalg.norm(pts[MIDDLE_MCP] - pts[WRIST]) < DEGENERATE_EPS:
        raise MalformedLine(line_no, "degenerate skeleton (wrist and palm coincide)")
    skeleton = HandSkeleton.from_points(pts, handedness=obj.get("handedness", "Unknown"))
    return LandmarkSample(skeleton=skeleton, gesture=gesture, source_id=str(obj["source_id"]))


def ingest_dataset(
    path=None,
    format: str = "landmark-jsonl",
    per_class: int = 100,
    seed: int = 0,
    noise_sigma: float = 0.01,
) -> LandmarkDataset:
    """Load a landmark-jsonl file, or generate a synthetic dataset.

    Malformed jsonl lines raise MalformedLine carrying the 1-based line
    number. Synthetic mode ignores `path`.
    """
    if format == "synthetic":
        return synthesize_dataset(per_class=per_class, seed=seed, noise_sigma=noise_sigma)
    if format != "landmark-jsonl":
        raise ValueError(f"unknown dataset format {format!r}")
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            samples.append(_parse_jsonl_line(line_no, line))
    return LandmarkDataset(samples=samples, provenance=str(path))


def save_dataset(dataset: LandmarkDataset, path) -> None:
    """Write landmark-jsonl; byte-deterministic for a given dataset."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in dataset.samples:
            fh.write(
                json.dumps(
                    {
                        "gesture": s.gesture.value,
                        "handedness": s.skeleton.handedness.value,
                        "landmarks": [[float(v) for v in row] for row in s.skeleton.landmarks],
                        "source_id": s.source_id,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def synthesize_dataset(
    per_class: int = 100,
    seed: int = 0,
    noise_sigma: float = 0.01,
    scale_range: tuple = (0.8, 1.25),
    translation_limit: float = 0.15,
) -> LandmarkDataset:
    """Per-class prototype poses + gaussian coordinate noise + similarity jitter.

    Noise is added in prototype space before the random scale (about the
    wrist) and translation, so class separation survives normalization.
    Bit-reproducible for a given seed.
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    prototypes = load_prototypes()
    rng = np.random.default_rng(seed)
    samples = []
    for gesture in CLASS_ORDER:
        base = prototypes[gesture].landmarks
        for i in range(per_class):
            pts = base + rng.normal(scale=noise_sigma, size=(NUM_LANDMARKS, 3))
            scale = rng.uniform(*scale_range)
            pts = pts[WRIST] + (pts - pts[WRIST]) * scale
            pts = pts + rng.uniform(-translation_limit, translation_limit, size=3)
            samples.append(
                LandmarkSample(
                    skeleton=HandSkeleton.from_points(pts, handedness="Right"),
                    gesture=gesture,
                    source_id=f"{gesture.value}-{i:04d}",
                )
            )
    return LandmarkDataset(samples=samples, provenance=f"synthetic-seed-{seed}")


def prototype_model(sharpness: float = 24.0) -> LandmarkClassifier:
    """Training-free classifier built from the prototype poses.

    Hidden units score centered-feature similarity to each prototype and
    the output layer just sharpens the result; accurate on anything close
    to the prototype poses and handy as a deterministic test/bootstrap
    model.
    """
    from .skeleton import normalize

    prototypes = load_prototypes()
    feats = np.stack([normalize(prototypes[g]) for g in CLASS_ORDER])
    centered = feats - feats.mean(axis=0)
    return LandmarkClassifier(
        w1=centered,
        b1=-centered @ feats.mean(axis=0),
        w2=sharpness * np.eye(len(CLASS_ORDER)),
        b2=np.zeros(len(CLASS_ORDER)),
    )


MANIFEST_HEADER = ["source_id", "gesture", "path"]


def _safe_filename(source_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "-", source_id) or "sample"


def preprocess_batch(dataset: LandmarkDataset, spec: RasterSpec, out_dir) -> list:
    """Rasterize every sample to `<source_id>_<style>.png` under out_dir.

    Returns the manifest rows [(source_id, gesture, filename)] sorted by
    source_id, and writes them to out_dir/manifest.csv. Reruns are
    byte-identical.
    """
    os.makedirs(out_dir, exist_ok=True)
    ordered = sorted(dataset.samples, key=lambda s: s.source_id)
    rows = []
    used = set()
    for sample in ordered:
        stem = _safe_filename(sample.source_id)
        name = f"{stem}_{spec.style.value}.png"
        k = 1
        while name in used:
            name = f"{stem}.{k}_{spec.style.value}.png"
            k += 1
        used.add(name)
        write_png(os.path.join(out_dir, name), rasterize(sample.skeleton, spec))
        rows.append((sample.source_id, sample.gesture.value, name))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    writer.writerows(rows)
    with open(os.path.join(out_dir, "manifest.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return rows


def read_manifest(path) -> list:
    """[(source_id, gesture, filename)] from a preprocess_batch manifest."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ValueError(f"bad manifest header {header!r}")
        return [tuple(row) for row in reader]


def stratified_split(labels: np.ndarray, seed: int, fractions=(0.7, 0.15, 0.15)):
    """Seeded per-class 70/15/15 index split: (train_idx, val_idx, test_idx)."""
    rng = np.random.default_rng(seed)
    train_idx, val_idx, test_idx = [], [], []
    for k in np.unique(labels):
        idx = np.flatnonzero(labels == k)
        rng.shuffle(idx)
        n = len(idx)
        n_train = int(n * fractions[0])
        n_val = int(n * fractions[1])
        train_idx.extend(idx[:n_train])
        val_idx.extend(idx[n_train : n_train + n_val])
        test_idx.extend(idx[n_train + n_val :])
    return (
        np.array(sorted(train_idx), dtype=np.int64),
        np.array(sorted(val_idx), dtype=np.int64),
        np.array(sorted(test_idx), dtype=np.int64),
    )


def train_eval(
    dataset: LandmarkDataset,
    split_seed: int = 0,
    config: TrainingConfig | None = None,
    hidden_dim: int = 64,
    model_path=None,
    report_path=None,
):
    """Stratified 70/15/15 split, train, evaluate on the held-out test split.

    Returns (model, EvaluationReport); optionally writes the model file
    and a JSON report. Deterministic for fixed seeds.
    """
    config = config or TrainingConfig()
    labels = dataset.labels()
    if len(np.unique(labels)) < 2:
        raise InsufficientData("need at least 2 classes")
    feats = dataset.features()
    train_idx, val_idx, test_idx = stratified_split(labels, split_seed)
    model, history = train(
        feats[train_idx],
        labels[train_idx],
        config,
        val_data=(feats[val_idx], labels[val_idx]),
        hidden_dim=hidden_dim,
    )
    report = evaluate(model, feats[test_idx], labels[test_idx])
    if model_path is not None:
        model.save(model_path)
    if report_path is not None:
        payload = dict(report.to_dict())
        payload["epochs_run"] = len(history["val_loss"])
        payload["provenance"] = dataset.provenance
        payload["split_seed"] = split_seed
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return model, report
