"""Plain-text formats for signals, feature tables, models and configs.

Reals are written with 17 significant digits so every file round-trips
float64 values exactly.
"""
from __future__ import annotations

import configparser
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .ml.data import LabeledDataset
from .ml.forest import ForestModel, ForestParams, Tree
from .signal import FaultSynthesisSpec

REAL = "{:.17g}"
MODEL_MAGIC = "wptfft-forest"
MODEL_VERSION = 1


class DataFormatError(ValueError):
    """Malformed input file; the message names the file and line."""


def fmt(x: float) -> str:
    return REAL.format(float(x))


# -- raw signals -------------------------------------------------------------


@dataclass(frozen=True)
class LabeledSignal:
    label: str
    samples: np.ndarray
    sample_rate: float
    source: str


def write_signal_csv(path, samples, label: Optional[str] = None) -> None:
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        if label is None:
            fh.write("sample\n")
            for v in np.asarray(samples, dtype=np.float64):
                fh.write(fmt(v) + "\n")
        else:
            fh.write("sample,label\n")
            for v in np.asarray(samples, dtype=np.float64):
                fh.write(f"{fmt(v)},{label}\n")


def read_signal_csv(path) -> tuple[np.ndarray, Optional[str]]:
    """Samples and (if the file has a ``label`` column) its single label."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"signal file not found: {path}")
    with path.open() as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if header not in (["sample"], ["sample", "label"]):
        raise DataFormatError(f"{path}:1: expected header 'sample' or 'sample,label', got {lines[0]!r}")
    has_label = len(header) == 2
    values = np.empty(len(lines) - 1)
    label = None
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise DataFormatError(f"{path}:{i}: blank line")
        parts = line.split(",")
        if len(parts) != len(header):
            raise DataFormatError(f"{path}:{i}: expected {len(header)} field(s), got {len(parts)}")
        try:
            values[i - 2] = float(parts[0])
        except ValueError:
            raise DataFormatError(f"{path}:{i}: non-numeric sample {parts[0]!r}") from None
        if not np.isfinite(values[i - 2]):
            raise DataFormatError(f"{path}:{i}: non-finite sample {parts[0]!r}")
        if has_label:
            lab = parts[1].strip()
            if label is None:
                label = lab
            elif lab != label:
                raise DataFormatError(f"{path}:{i}: label {lab!r} differs from {label!r}; one label per file")
    if values.shape[0] == 0:
        raise DataFormatError(f"{path}: no samples after the header")
    return values, label


def label_from_filename(path, pattern: str = r"^([^_]+)") -> str:
    m = re.match(pattern, Path(path).stem)
    if not m:
        raise DataFormatError(f"{path}: cannot derive a label from the file name")
    return m.group(1)


def load_signals(
    path,
    sample_rate: float,
    label_map: Optional[Mapping[str, str]] = None,
    pattern: str = r"^([^_]+)",
) -> list[LabeledSignal]:
    """Read one CSV file or every ``*.csv`` in a directory (sorted by name).

    The label comes from the file's ``label`` column if present, otherwise
    from ``pattern`` applied to the file name. With ``label_map`` every raw
    label must be a key of the map.
    """
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise FileNotFoundError(f"no .csv files in {path}")
    elif path.is_file():
        files = [path]
    else:
        raise FileNotFoundError(f"no such file or directory: {path}")
    out = []
    for f in files:
        samples, label = read_signal_csv(f)
        if label is None:
            label = label_from_filename(f, pattern)
        if label_map is not None:
            if label not in label_map:
                raise DataFormatError(f"{f}: label {label!r} not in label map {sorted(label_map)}")
            label = label_map[label]
        out.append(LabeledSignal(label, samples, float(sample_rate), str(f)))
    return out


# -- feature tables -----------------------------------------------------------

FEATURE_META_KEYS = ("k", "m", "wavelet", "fs", "window")


def _meta_value(key: str, raw: str):
    if key in ("k", "m", "window", "hop"):
        return int(raw)
    if key == "fs":
        return float(raw)
    return raw


def _meta_str(v) -> str:
    return fmt(v) if isinstance(v, float) else str(v)


def write_feature_csv(path, dataset: LabeledDataset) -> None:
    X = dataset.features
    with Path(path).open("w", newline="\n") as fh:
        for key in FEATURE_META_KEYS:
            if key in dataset.metadata:
                fh.write(f"# {key}={_meta_str(dataset.metadata[key])}\n")
        fh.write(",".join([f"f_{j}" for j in range(X.shape[1])] + ["label"]) + "\n")
        for row, lab in zip(X, dataset.labels):
            fh.write(",".join(fmt(v) for v in row) + f",{lab}\n")


def read_feature_csv(path) -> LabeledDataset:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"feature file not found: {path}")
    meta: dict = {}
    rows, labels = [], []
    header = None
    with path.open() as fh:
        for i, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if not sep:
                    raise DataFormatError(f"{path}:{i}: malformed metadata line {line!r}")
                try:
                    meta[key.strip()] = _meta_value(key.strip(), val.strip())
                except ValueError:
                    raise DataFormatError(f"{path}:{i}: bad value for {key.strip()}: {val!r}") from None
                continue
            if header is None:
                header = line.split(",")
                if not header or header[-1] != "label" or any(
                    h != f"f_{j}" for j, h in enumerate(header[:-1])
                ):
                    raise DataFormatError(f"{path}:{i}: expected header f_0,...,f_(S-1),label")
                continue
            if not line.strip():
                raise DataFormatError(f"{path}:{i}: blank line")
            parts = line.split(",")
            if len(parts) != len(header):
                raise DataFormatError(f"{path}:{i}: expected {len(header)} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts[:-1]])
            except ValueError:
                raise DataFormatError(f"{path}:{i}: non-numeric feature value") from None
            labels.append(parts[-1])
    if header is None:
        raise DataFormatError(f"{path}: missing header")
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    return LabeledDataset(X, labels, meta)


# -- models -------------------------------------------------------------------


def model_to_text(model: ForestModel) -> str:
    p = model.params
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        "classes=" + json.dumps(list(model.classes)),
        f"n_features={model.n_features}",
        f"n_trees={p.n_trees}",
        f"max_depth={p.max_depth}",
        f"min_samples_leaf={p.min_samples_leaf}",
        f"features_per_split={'' if p.features_per_split is None else p.features_per_split}",
        f"seed={model.seed}",
    ]
    for key in sorted(model.metadata):
        lines.append(f"meta.{key}={_meta_str(model.metadata[key])}")
    for t_i, tree in enumerate(model.trees):
        lines.append(f"tree {t_i} nodes={tree.n_nodes}")
        for i in range(tree.n_nodes):
            if tree.feature[i] < 0:
                lines.append(f"{i},LEAF," + ",".join(str(int(c)) for c in tree.counts[i]))
            else:
                lines.append(
                    f"{i},{tree.feature[i]},{fmt(tree.threshold[i])},{tree.left[i]},{tree.right[i]}"
                )
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(model: ForestModel, path) -> None:
    Path(path).write_text(model_to_text(model))


def _fill_counts(tree_rows, n_classes):
    """Internal-node histograms are the sum of their children's."""
    n = len(tree_rows)
    feature = np.full(n, -1, dtype=np.int64)
    threshold = np.zeros(n)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    counts = np.zeros((n, n_classes), dtype=np.int64)
    for i, row in enumerate(tree_rows):
        if row[0] == "LEAF":
            counts[i] = row[1]
        else:
            feature[i], threshold[i], left[i], right[i] = row
    for i in range(n - 1, -1, -1):  # children follow parents in pre-order
        if feature[i] >= 0:
            counts[i] = counts[left[i]] + counts[right[i]]
    return Tree(feature, threshold, left, right, counts)


def model_from_text(text: str, source: str = "<model>") -> ForestModel:
    lines = text.split("\n")
    if not lines or lines[0].split() != [MODEL_MAGIC, str(MODEL_VERSION)]:
        raise DataFormatError(f"{source}:1: not a version-{MODEL_VERSION} {MODEL_MAGIC} file")
    header: dict = {}
    meta: dict = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("tree ") and lines[i] != "end":
        key, sep, val = lines[i].partition("=")
        if not sep:
            raise DataFormatError(f"{source}:{i + 1}: malformed header line")
        if key.startswith("meta."):
            meta[key[5:]] = _meta_value(key[5:], val)
        else:
            header[key] = val
        i += 1
    try:
        classes = json.loads(header["classes"])
        n_features = int(header["n_features"])
        fps = header["features_per_split"]
        params = ForestParams(
            n_trees=int(header["n_trees"]),
            max_depth=int(header["max_depth"]),
            min_samples_leaf=int(header["min_samples_leaf"]),
            features_per_split=int(fps) if fps else None,
        )
        seed = int(header["seed"])
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{source}: bad model header ({exc})") from None
    C = len(classes)
    trees = []
    while i < len(lines) and lines[i] != "end":
        m = re.fullmatch(r"tree (\d+) nodes=(\d+)", lines[i])
        if not m:
            raise DataFormatError(f"{source}:{i + 1}: expected 'tree <i> nodes=<n>'")
        n_nodes = int(m.group(2))
        rows = []
        for j in range(n_nodes):
            ln = i + 2 + j
            parts = lines[i + 1 + j].split(",")
            try:
                if int(parts[0]) != j:
                    raise ValueError("node ids must be 0..n-1 in pre-order")
                if parts[1] == "LEAF":
                    if len(parts) != 2 + C:
                        raise ValueError(f"leaf needs {C} class counts")
                    rows.append(("LEAF", [int(c) for c in parts[2:]]))
                else:
                    rows.append((int(parts[1]), float(parts[2]), int(parts[3]), int(parts[4])))
            except (ValueError, IndexError) as exc:
                raise DataFormatError(f"{source}:{ln}: {exc}") from None
        trees.append(_fill_counts(rows, C))
        i += 1 + n_nodes
    if i >= len(lines):
        raise DataFormatError(f"{source}: missing 'end' line")
    if len(trees) != params.n_trees:
        raise DataFormatError(f"{source}: header says {params.n_trees} trees, found {len(trees)}")
    return ForestModel(trees, classes, params, seed, n_features, meta)


def load_model(path) -> ForestModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    return model_from_text(path.read_text(), str(path))


# -- configs --------------------------------------------------------------------


def read_config(path) -> dict[str, str]:
    """Flat ``key=value`` file; ``#`` starts a comment line."""
    out = {}
    for i, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        key, sep, val = s.partition("=")
        if not sep:
            raise DataFormatError(f"{path}:{i}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


_SPEC_FLOATS = (
    "sample_rate",
    "duration",
    "fault_rate",
    "resonance_freq",
    "damping",
    "impulse_amplitude",
    "noise_sigma",
)


def read_synthesis_specs(path) -> list[FaultSynthesisSpec]:
    """INI file with one section per recording; ``[DEFAULT]`` holds shared keys.

    The section name is the class label unless a ``label`` key overrides it.
    ``speed_ramp = start,end`` enables a swept impulse rate.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"synthesis spec not found: {path}")
    cp = configparser.ConfigParser()
    cp.read(path)
    specs = []
    for section in cp.sections():
        sec = cp[section]
        kwargs: dict = {}
        try:
            for key in _SPEC_FLOATS:
                if key in sec:
                    kwargs[key] = float(sec[key])
            if "rng_seed" in sec:
                kwargs["rng_seed"] = int(sec["rng_seed"])
            if sec.get("speed_ramp", "").strip():
                a, b = (float(v) for v in sec["speed_ramp"].split(","))
                kwargs["speed_ramp"] = (a, b)
        except ValueError as exc:
            raise DataFormatError(f"{path}: section [{section}]: {exc}") from None
        kwargs["label"] = sec.get("label", section)
        spec = FaultSynthesisSpec(**kwargs)
        spec.validate()
        specs.append(spec)
    if not specs:
        raise DataFormatError(f"{path}: no sections")
    return specs
