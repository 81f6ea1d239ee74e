"""On-disk formats: versioned JSON artifacts, LKE1 binary matrices, hashes.

JSON floats are emitted with Python's shortest round-trip repr (at most 17
significant digits), so a load followed by a save is byte-identical and a
loaded model is bit-identical to the trained one. Every artifact gets a
``.sha256`` sidecar with its content hash.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .mlp import AdamState, MlpParams
from .schema import FeatureSchema, synthetic_schema

MAGIC = b"LKE1"

_HEADER = struct.Struct("<4sQQQ")  # magic, n_samples, n_features, n_classes


# ---------------------------------------------------------------------------
# hashing and JSON plumbing


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json_artifact(path: str | Path, obj: dict) -> str:
    """Write canonical JSON plus a ``.sha256`` sidecar; returns the digest."""
    path = Path(path)
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    path.write_text(text, encoding="utf-8")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    Path(str(path) + ".sha256").write_text(f"{digest}  {path.name}\n")
    return digest


def read_json_artifact(path: str | Path, kind: str, version: int = 1) -> dict:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("kind") != kind:
        raise ValueError(
            f"{path}: expected a {kind!r} artifact, found {obj.get('kind')!r}"
        )
    if obj.get("version") != version:
        raise ValueError(
            f"{path}: unsupported {kind} artifact version {obj.get('version')!r}"
        )
    return obj


# ---------------------------------------------------------------------------
# model and optimizer state


def model_to_dict(params: MlpParams, seed: int) -> dict:
    return {
        "version": 1,
        "kind": "mlp",
        "seed": seed,
        "n_inputs": params.n_inputs,
        "hidden_units": params.hidden_units,
        "n_classes": params.n_classes,
        "w1": params.w1.tolist(),
        "b1": params.b1.tolist(),
        "w2": params.w2.tolist(),
        "b2": params.b2.tolist(),
    }


def model_from_dict(obj: dict) -> MlpParams:
    if obj.get("kind") != "mlp" or obj.get("version") != 1:
        raise ValueError("not a version-1 mlp artifact")
    params = MlpParams(
        w1=np.asarray(obj["w1"], dtype=np.float64),
        b1=np.asarray(obj["b1"], dtype=np.float64),
        w2=np.asarray(obj["w2"], dtype=np.float64),
        b2=np.asarray(obj["b2"], dtype=np.float64),
    )
    expected = (
        (obj["hidden_units"], obj["n_inputs"]),
        (obj["hidden_units"],),
        (obj["n_classes"], obj["hidden_units"]),
        (obj["n_classes"],),
    )
    if tuple(a.shape for a in params.as_tuple()) != tuple(expected):
        raise ValueError("mlp artifact shapes are inconsistent")
    return params


def adam_to_dict(state: AdamState, seed: int) -> dict:
    return {
        "version": 1,
        "kind": "adam",
        "seed": seed,
        "step": state.step,
        "alpha": state.alpha,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "epsilon": state.epsilon,
        "m": {k: v.tolist() for k, v in zip("w1 b1 w2 b2".split(), state.m.as_tuple())},
        "v": {k: v.tolist() for k, v in zip("w1 b1 w2 b2".split(), state.v.as_tuple())},
    }


def adam_from_dict(obj: dict) -> AdamState:
    if obj.get("kind") != "adam" or obj.get("version") != 1:
        raise ValueError("not a version-1 adam artifact")

    def unpack(block) -> MlpParams:
        return MlpParams(
            *(np.asarray(block[k], dtype=np.float64) for k in ("w1", "b1", "w2", "b2"))
        )

    return AdamState(
        step=int(obj["step"]),
        m=unpack(obj["m"]),
        v=unpack(obj["v"]),
        alpha=float(obj["alpha"]),
        beta1=float(obj["beta1"]),
        beta2=float(obj["beta2"]),
        epsilon=float(obj["epsilon"]),
    )


# ---------------------------------------------------------------------------
# encoding parameters


def encoding_to_dict(params, seed: int | None = None) -> dict:
    from .dataset import EncodingParams, NumericRange

    if not isinstance(params, EncodingParams):
        raise TypeError("expected EncodingParams")
    stats = []
    for stat in params.stats:
        if isinstance(stat, NumericRange):
            stats.append({"kind": "numeric", "lo": stat.lo, "hi": stat.hi})
        else:
            stats.append({"kind": "categorical", "values": list(stat.values)})
    return {
        "version": 1,
        "kind": "encoding",
        "seed": seed,
        "schema": params.schema.to_dict(),
        "stats": stats,
    }


def encoding_from_dict(obj: dict):
    from .dataset import CategoryVocab, EncodingParams, NumericRange

    if obj.get("kind") != "encoding" or obj.get("version") != 1:
        raise ValueError("not a version-1 encoding artifact")
    schema = FeatureSchema.from_dict(obj["schema"])
    stats = []
    for entry in obj["stats"]:
        if entry["kind"] == "numeric":
            stats.append(NumericRange(lo=float(entry["lo"]), hi=float(entry["hi"])))
        else:
            stats.append(CategoryVocab(values=tuple(entry["values"])))
    return EncodingParams(schema=schema, stats=tuple(stats))


# ---------------------------------------------------------------------------
# LKE1 binary datasets
#
# Layout (all little-endian):
#   bytes 0..3   magic "LKE1"
#   3 x uint64   n_samples N, n_features d, n_classes c
#   N*d float64  features, row-major
#   N   int64    labels


def write_dataset(path: str | Path, data: Dataset) -> str:
    """Serialize a dataset; group keys, if any, go to ``<path>.keys``.

    Returns the content hash, which is also written to a sidecar.
    """
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(MAGIC, data.n_samples, data.n_features, data.n_classes)
        )
        fh.write(np.ascontiguousarray(data.features, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(data.labels, dtype="<i8").tobytes())
    digest = file_sha256(path)
    Path(str(path) + ".sha256").write_text(f"{digest}  {path.name}\n")
    if data.group_keys is not None:
        keys_text = "".join(f"{k}\n" for k in data.group_keys)
        Path(str(path) + ".keys").write_text(keys_text, encoding="utf-8")
    return digest


def read_dataset(path: str | Path, schema: FeatureSchema | None = None) -> Dataset:
    """Load an LKE1 file; group keys are read back from ``<path>.keys``.

    Without an explicit schema a generic numeric one is synthesized from the
    header; class names are then positional (``class_0``...).
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated dataset file")
    magic, n, d, c = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + n * d * 8 + n * 8
    if len(raw) != expected:
        raise ValueError(
            f"{path}: size mismatch, expected {expected} bytes, got {len(raw)}"
        )
    offset = _HEADER.size
    features = (
        np.frombuffer(raw, dtype="<f8", count=n * d, offset=offset)
        .reshape(n, d)
        .astype(np.float64)
    )
    offset += n * d * 8
    labels = np.frombuffer(raw, dtype="<i8", count=n, offset=offset).astype(np.int64)

    if schema is None:
        schema = synthetic_schema(d, c)
    elif schema.n_features != d or schema.n_classes != c:
        raise ValueError(
            f"{path}: header ({d} features, {c} classes) does not match schema"
        )
    keys_path = Path(str(path) + ".keys")
    group_keys = None
    if keys_path.exists():
        lines = keys_path.read_text(encoding="utf-8").splitlines()
        if len(lines) != n:
            raise ValueError(f"{keys_path}: expected {n} keys, found {len(lines)}")
        group_keys = np.asarray(lines, dtype=object)
    return Dataset(features=features, labels=labels, schema=schema, group_keys=group_keys)
