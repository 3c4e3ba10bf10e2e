"""JSON documents: detections, feature sets and persisted models.

Floats are written with Python's shortest round-trip representation, so a
document parsed and re-serialized is byte-identical and every float survives
the round trip exactly.
"""

import json
from importlib import resources
from pathlib import Path

from . import fmaca, rbf
from .features import FeatureVector
from .imaging import atomic_write_bytes
from .pipeline import Detection, PipelineConfig

SCHEMA_VERSION = "1.0"
MODEL_KINDS = ("rbf", "fmaca")


class DocumentError(ValueError):
    pass


def dumps(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    atomic_write_bytes(path, dumps(obj).encode("utf-8"))


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON ({exc})") from None


def load_schema(name):
    """Load a shipped JSON schema, e.g. ``load_schema("model")``."""
    text = resources.files("facepipe").joinpath(f"schemas/{name}.schema.json").read_text()
    return json.loads(text)


def _check_version(doc, what):
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise DocumentError(f"{what}: missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise DocumentError(f"{what}: unsupported schema_version {doc['schema_version']!r}")


# ---------------------------------------------------------------------------
# Detection documents

def detection_document(sources, cfg, frames, mode):
    """Build the document for per-frame detection lists."""
    detections = []
    for index, dets in enumerate(frames):
        for det in dets:
            record = {"frame": index}
            record.update(det.to_dict())
            detections.append(record)
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "sources": [str(s) for s in sources],
        "config": cfg.to_dict(),
        "detections": detections,
    }


def parse_detection_document(doc):
    """Return ``(sources, config, [(frame, Detection), ...])``."""
    _check_version(doc, "detection document")
    cfg = PipelineConfig.from_dict(doc["config"])
    dets = [(d["frame"], Detection.from_dict(d)) for d in doc["detections"]]
    return doc["sources"], cfg, dets


# ---------------------------------------------------------------------------
# Feature sets

def feature_document(samples):
    """``samples`` is a list of ``(FeatureVector or array, label)``."""
    out = []
    for vec, label in samples:
        values = vec.values if isinstance(vec, FeatureVector) else vec
        out.append({"label": None if label is None else str(label),
                    "vector": [float(v) for v in values]})
    dims = {len(s["vector"]) for s in out}
    if len(dims) > 1:
        raise DocumentError("feature vectors have differing lengths")
    return {"schema_version": SCHEMA_VERSION, "samples": out}


def parse_feature_document(doc):
    _check_version(doc, "feature document")
    samples = [(s["vector"], s.get("label")) for s in doc["samples"]]
    if len({len(v) for v, _ in samples}) > 1:
        raise DocumentError("feature vectors have differing lengths")
    return samples


# ---------------------------------------------------------------------------
# Models

def model_document(model, count, seed):
    if isinstance(model, rbf.RbfNetwork):
        kind, dims = "rbf", model.dims
    elif isinstance(model, fmaca.FmacaTree):
        kind, dims = "fmaca", model.dims
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    return {
        "schema_version": SCHEMA_VERSION,
        "model_kind": kind,
        "fingerprint": {"count": int(count), "dims": int(dims), "seed": int(seed)},
        "payload": model.to_dict(),
    }


def parse_model_document(doc):
    _check_version(doc, "model file")
    kind = doc.get("model_kind")
    if kind == "rbf":
        return rbf.RbfNetwork.from_dict(doc["payload"])
    if kind == "fmaca":
        return fmaca.FmacaTree.from_dict(doc["payload"])
    raise DocumentError(f"unknown model_kind {kind!r}")


def save_model(model, path, count, seed):
    write_json(path, model_document(model, count, seed))


def load_model(path):
    try:
        return parse_model_document(read_json(path))
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"{path}: malformed model file ({exc})") from None
