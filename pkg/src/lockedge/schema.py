"""Feature schema: which CSV columns are features, their kinds, and the label.

A schema is the single source of truth for column order. Everything downstream
(encoding, datasets, model metadata) refers to features by their position in
``schema.feature_names``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

NUMERIC = "numeric"
CATEGORICAL = "categorical"
_KINDS = (NUMERIC, CATEGORICAL)

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Schema is malformed or does not match the data it is applied to."""


class ParseError(ValueError):
    """A CSV cell could not be parsed; carries 1-based data row and column."""

    def __init__(self, message: str, row: int, column: str):
        super().__init__(message)
        self.row = row
        self.column = column


class LabelError(ValueError):
    """A label value is not one of the schema's class names."""


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature columns with kinds, plus the label column and classes.

    Parameters
    ----------
    feature_names : tuple of str
        Feature columns in canonical order.
    feature_kinds : tuple of str
        Parallel to ``feature_names``; each entry ``numeric`` or
        ``categorical``.
    label_column : str
        Name of the label column in raw CSV data.
    class_names : tuple of str
        Class label vocabulary; position defines the integer class index.
    """

    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    label_column: str
    class_names: tuple[str, ...]
    _class_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.feature_names) == 0:
            raise SchemaError("schema must declare at least one feature")
        if len(self.feature_names) != len(self.feature_kinds):
            raise SchemaError("feature_names and feature_kinds length mismatch")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise SchemaError("duplicate feature names in schema")
        for kind in self.feature_kinds:
            if kind not in _KINDS:
                raise SchemaError(f"unknown column kind {kind!r}")
        if self.label_column in self.feature_names:
            raise SchemaError("label column cannot also be a feature")
        if len(self.class_names) < 2:
            raise SchemaError("schema must declare at least two classes")
        if len(set(self.class_names)) != len(self.class_names):
            raise SchemaError("duplicate class names in schema")
        object.__setattr__(
            self,
            "_class_index",
            {name: i for i, name in enumerate(self.class_names)},
        )

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_index(self, label: str) -> int:
        try:
            return self._class_index[label]
        except KeyError:
            raise LabelError(
                f"label {label!r} is not in the schema class list"
            ) from None

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "columns": [
                {"name": n, "kind": k}
                for n, k in zip(self.feature_names, self.feature_kinds)
            ],
            "label_column": self.label_column,
            "class_names": list(self.class_names),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureSchema":
        try:
            columns = obj["columns"]
            label_column = obj["label_column"]
            class_names = obj["class_names"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"schema JSON missing field: {exc}") from None
        names = tuple(str(col["name"]) for col in columns)
        kinds = tuple(str(col["kind"]) for col in columns)
        return cls(names, kinds, str(label_column), tuple(map(str, class_names)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureSchema":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema file {path} is not valid JSON: {exc}")
        return cls.from_dict(obj)


def synthetic_schema(n_features: int, n_classes: int) -> FeatureSchema:
    """Generated-data schema: numeric features f0..f{d-1}, classes class_0..."""
    return FeatureSchema(
        feature_names=tuple(f"f{i}" for i in range(n_features)),
        feature_kinds=(NUMERIC,) * n_features,
        label_column="label",
        class_names=tuple(f"class_{i}" for i in range(n_classes)),
    )
