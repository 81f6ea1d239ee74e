"""CSV ingestion, min-max encoding, splits, zone partitioning, synthesis.

The raw-to-numeric path is: ``parse_csv`` -> ``fit_encoding`` (training rows
only) -> ``apply_encoding`` -> ``Dataset``. Encoded features always live in
[0, 1]; values outside the fitted range are clamped, so test-time data can
never leave the training envelope.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .schema import (
    CATEGORICAL,
    NUMERIC,
    FeatureSchema,
    LabelError,
    ParseError,
    SchemaError,
    synthetic_schema,
)
from .validation import as_labels, as_matrix


# ---------------------------------------------------------------------------
# raw tables


@dataclass
class RawTable:
    """Parsed but unencoded rows, with columns in schema order.

    ``columns`` maps each feature name to a list of cell values: floats for
    numeric columns, strings for categorical ones. ``extras`` holds verbatim
    string columns requested at parse time (for example a zone id column that
    is not a feature).
    """

    schema: FeatureSchema
    columns: dict[str, list]
    labels: np.ndarray
    extras: dict[str, list[str]] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return int(self.labels.shape[0])


def parse_csv(
    source,
    schema: FeatureSchema,
    keep_columns: Sequence[str] = (),
) -> RawTable:
    """Parse an RFC-4180 CSV into a :class:`RawTable`.

    Parameters
    ----------
    source : path, str of CSV text is not accepted; pass a path or open file.
    schema : FeatureSchema
        Declares the feature columns, their kinds, and the label column.
    keep_columns : sequence of str
        Extra header columns to retain verbatim (for zone partitioning).

    Raises
    ------
    SchemaError
        If the header is missing a schema column or a requested extra.
    ParseError
        If a numeric cell fails to parse; cites 1-based data row and column.
    LabelError
        If a label value is not in the schema class list.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_csv_stream(fh, schema, keep_columns)
    return _parse_csv_stream(source, schema, keep_columns)


def _parse_csv_stream(stream, schema, keep_columns) -> RawTable:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("CSV is empty; expected a header row") from None
    positions: dict[str, int] = {}
    for idx, name in enumerate(header):
        positions.setdefault(name, idx)

    needed = list(schema.feature_names) + [schema.label_column] + list(keep_columns)
    for name in needed:
        if name not in positions:
            raise SchemaError(f"CSV header is missing column {name!r}")

    feat_pos = [positions[n] for n in schema.feature_names]
    label_pos = positions[schema.label_column]
    extra_pos = {n: positions[n] for n in keep_columns}

    columns: dict[str, list] = {n: [] for n in schema.feature_names}
    extras: dict[str, list[str]] = {n: [] for n in keep_columns}
    labels: list[int] = []
    width = max([label_pos, *feat_pos, *extra_pos.values()]) + 1

    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) < width:
            raise ParseError(
                f"row {row_no} has {len(row)} fields, expected at least {width}",
                row=row_no,
                column="",
            )
        for name, kind, pos in zip(
            schema.feature_names, schema.feature_kinds, feat_pos
        ):
            cell = row[pos]
            if kind == NUMERIC:
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"row {row_no}, column {name!r}: "
                        f"cannot parse {cell!r} as a number",
                        row=row_no,
                        column=name,
                    ) from None
                if not np.isfinite(value):
                    raise ParseError(
                        f"row {row_no}, column {name!r}: non-finite value {cell!r}",
                        row=row_no,
                        column=name,
                    )
                columns[name].append(value)
            else:
                columns[name].append(cell)
        labels.append(schema.class_index(row[label_pos]))
        for name, pos in extra_pos.items():
            extras[name].append(row[pos])

    if not labels:
        raise SchemaError("CSV contains a header but no data rows")
    return RawTable(
        schema=schema,
        columns=columns,
        labels=np.asarray(labels, dtype=np.int64),
        extras=extras,
    )


def parse_csv_text(
    text: str, schema: FeatureSchema, keep_columns: Sequence[str] = ()
) -> RawTable:
    """Convenience wrapper: parse CSV from an in-memory string."""
    return _parse_csv_stream(io.StringIO(text, newline=""), schema, keep_columns)


# ---------------------------------------------------------------------------
# min-max encoding


@dataclass(frozen=True)
class NumericRange:
    lo: float
    hi: float


@dataclass(frozen=True)
class CategoryVocab:
    # Lexicographically sorted category values; position is the ordinal code.
    values: tuple[str, ...]


@dataclass(frozen=True)
class EncodingParams:
    """Frozen per-column min-max statistics, aligned with schema order."""

    schema: FeatureSchema
    stats: tuple[NumericRange | CategoryVocab, ...]

    def __post_init__(self):
        if len(self.stats) != self.schema.n_features:
            raise SchemaError("encoding stats do not match schema width")


def fit_encoding(table: RawTable, row_indices=None) -> EncodingParams:
    """Fit per-column min-max statistics on the given rows (default: all).

    Categorical columns get a lexicographically sorted vocabulary whose
    ordinal codes are then min-max normalized like any numeric column.
    """
    rows = _resolve_rows(table, row_indices)
    stats: list[NumericRange | CategoryVocab] = []
    for name, kind in zip(table.schema.feature_names, table.schema.feature_kinds):
        cells = table.columns[name]
        selected = [cells[i] for i in rows] if rows is not None else cells
        if kind == NUMERIC:
            stats.append(NumericRange(lo=min(selected), hi=max(selected)))
        else:
            stats.append(CategoryVocab(values=tuple(sorted(set(selected)))))
    return EncodingParams(schema=table.schema, stats=tuple(stats))


def apply_encoding(
    params: EncodingParams,
    table: RawTable,
    row_indices=None,
    group_column: str | None = None,
) -> "Dataset":
    """Encode rows to a float64 matrix in [0, 1] using frozen statistics.

    Out-of-range numeric values and out-of-vocabulary categories are clamped
    into the fitted range rather than rejected, so a model never sees test
    inputs outside the envelope it was trained on.
    """
    if params.schema is not table.schema and params.schema != table.schema:
        raise SchemaError("encoding params were fitted under a different schema")
    rows = _resolve_rows(table, row_indices)
    n = len(rows) if rows is not None else table.n_rows
    d = table.schema.n_features
    out = np.empty((n, d), dtype=np.float64)

    for j, (name, kind, stat) in enumerate(
        zip(table.schema.feature_names, table.schema.feature_kinds, params.stats)
    ):
        cells = table.columns[name]
        selected = [cells[i] for i in rows] if rows is not None else cells
        if kind == NUMERIC:
            out[:, j] = _encode_numeric(selected, stat)
        else:
            out[:, j] = _encode_categorical(selected, stat)

    labels = table.labels[rows] if rows is not None else table.labels.copy()
    group_keys = None
    if group_column is not None:
        if group_column not in table.extras:
            raise SchemaError(
                f"column {group_column!r} was not kept at parse time"
            )
        cells = table.extras[group_column]
        keys = [cells[i] for i in rows] if rows is not None else cells
        group_keys = np.asarray(keys, dtype=object)
    return Dataset(
        features=out,
        labels=labels,
        schema=table.schema,
        group_keys=group_keys,
    )


def _resolve_rows(table: RawTable, row_indices):
    if row_indices is None:
        return None
    rows = np.asarray(row_indices, dtype=np.int64)
    if rows.ndim != 1 or rows.size == 0:
        raise ValueError("row_indices must be a non-empty 1-D index array")
    if rows.min() < 0 or rows.max() >= table.n_rows:
        raise ValueError("row_indices out of range")
    return rows.tolist()


def _encode_numeric(cells, stat: NumericRange) -> np.ndarray:
    x = np.asarray(cells, dtype=np.float64)
    span = stat.hi - stat.lo
    if span <= 0.0:
        # Constant training column: maps to 0 by convention.
        return np.zeros_like(x)
    return np.clip((x - stat.lo) / span, 0.0, 1.0)


def _encode_categorical(cells, stat: CategoryVocab) -> np.ndarray:
    vocab = stat.values
    if len(vocab) == 0:
        raise SchemaError("categorical column has an empty vocabulary")
    if len(vocab) == 1:
        return np.zeros(len(cells), dtype=np.float64)
    index = {v: i for i, v in enumerate(vocab)}
    top = len(vocab) - 1
    codes = np.empty(len(cells), dtype=np.float64)
    for i, cell in enumerate(cells):
        code = index.get(cell)
        if code is None:
            # Unseen category: lexicographic insertion point, clamped into
            # the fitted code range.
            code = min(bisect.bisect_left(vocab, cell), top)
        codes[i] = code
    return codes / top


# ---------------------------------------------------------------------------
# datasets


@dataclass
class Dataset:
    """Encoded (or projected) feature matrix with integer labels.

    ``group_keys`` optionally carries one raw partitioning key per row (for
    example a source address) so zone rules can still be applied after
    encoding and splitting.
    """

    features: np.ndarray
    labels: np.ndarray
    schema: FeatureSchema
    group_keys: np.ndarray | None = None

    def __post_init__(self):
        self.features = as_matrix(self.features, "features")
        self.labels = as_labels(
            self.labels,
            "labels",
            n_classes=self.schema.n_classes,
            n_rows=self.features.shape[0],
        )
        if self.group_keys is not None:
            keys = np.asarray(self.group_keys, dtype=object)
            if keys.shape != (self.features.shape[0],):
                raise ValueError("group_keys must have one entry per row")
            self.group_keys = keys

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_classes(self) -> int:
        return self.schema.n_classes

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            schema=self.schema,
            group_keys=None if self.group_keys is None else self.group_keys[idx],
        )


@dataclass
class ClientShard:
    """One client's local dataset in the simulated federation."""

    client_id: int
    data: Dataset

    @property
    def n_k(self) -> int:
        return self.data.n_samples


def stratified_split_indices(
    labels: np.ndarray,
    test_fraction: float,
    seed: int,
    n_classes: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class split; returns (train_idx, test_idx) sorted.

    Classes with a single sample keep it in the training split. For larger
    classes the test share is rounded to the nearest sample but always leaves
    at least one training sample, so each split size is within one sample per
    class of the requested fraction.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    labels = as_labels(labels, "labels", n_classes=n_classes)
    if labels.shape[0] < 2:
        raise ValueError("need at least 2 samples to split")
    rng = np.random.default_rng(seed)
    test_parts: list[np.ndarray] = []
    train_parts: list[np.ndarray] = []
    for cls in range(n_classes):
        rows = np.flatnonzero(labels == cls)
        n_c = rows.shape[0]
        if n_c == 0:
            continue
        if n_c == 1:
            train_parts.append(rows)
            continue
        n_test = min(int(round(n_c * test_fraction)), n_c - 1)
        perm = rng.permutation(n_c)
        test_parts.append(rows[perm[:n_test]])
        train_parts.append(rows[perm[n_test:]])
    train_idx = np.sort(np.concatenate(train_parts)) if train_parts else np.empty(0, np.int64)
    test_idx = np.sort(np.concatenate(test_parts)) if test_parts else np.empty(0, np.int64)
    return train_idx.astype(np.int64), test_idx.astype(np.int64)


def split_train_test(
    data: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Stratified train/test split of an encoded dataset."""
    train_idx, test_idx = stratified_split_indices(
        data.labels, test_fraction, seed, data.n_classes
    )
    if test_idx.size == 0:
        raise ValueError(
            "test split is empty; increase test_fraction or dataset size"
        )
    return data.subset(train_idx), data.subset(test_idx)


# ---------------------------------------------------------------------------
# zone partitioning


@dataclass(frozen=True)
class ZoneRule:
    """Assignment rule: rows whose key satisfies ``predicate`` go to
    ``client_id``. ``predicate=None`` marks the catch-all rule, which must be
    last."""

    client_id: int
    predicate: Callable[[object], bool] | None = None


def partition_by_zone(
    data: Dataset, rules: Sequence[ZoneRule]
) -> list[ClientShard]:
    """Partition rows into client shards by the first matching zone rule.

    Requires ``data.group_keys``. The final rule must be a catch-all
    (``predicate=None``) so every row is assigned. Rules that match no rows
    produce no shard. Shards are returned in rule order.
    """
    if data.group_keys is None:
        raise ValueError("dataset carries no group keys; cannot partition")
    if not rules:
        raise ValueError("at least one zone rule is required")
    ids = [r.client_id for r in rules]
    if len(set(ids)) != len(ids):
        raise ValueError("zone rules contain duplicate client ids")
    if rules[-1].predicate is not None:
        raise ValueError("last zone rule must be a catch-all (predicate=None)")
    for rule in rules[:-1]:
        if rule.predicate is None:
            raise ValueError("only the last zone rule may be a catch-all")

    buckets: dict[int, list[int]] = {r.client_id: [] for r in rules}
    for i, key in enumerate(data.group_keys):
        for rule in rules:
            if rule.predicate is None or rule.predicate(key):
                buckets[rule.client_id].append(i)
                break
    shards = [
        ClientShard(client_id=rule.client_id, data=data.subset(buckets[rule.client_id]))
        for rule in rules
        if buckets[rule.client_id]
    ]
    total = sum(s.n_k for s in shards)
    if total != data.n_samples:
        raise AssertionError("zone partition lost rows")  # unreachable
    return shards


def round_robin_shards(data: Dataset, n_clients: int) -> list[ClientShard]:
    """Deal rows to ``n_clients`` shards by row index modulo client count."""
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    if n_clients > data.n_samples:
        raise ValueError("more clients than samples")
    return [
        ClientShard(client_id=c, data=data.subset(np.arange(c, data.n_samples, n_clients)))
        for c in range(n_clients)
    ]


# ---------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class ClassSpec:
    """Gaussian blob specification for one synthetic class."""

    mean: tuple[float, ...]
    stddev: float
    count: int


def generate_synthetic(class_specs: Sequence[ClassSpec], seed: int) -> Dataset:
    """Draw a labelled Gaussian-blob dataset clipped into the unit cube.

    Rows are grouped by class in specification order; the class index is the
    position in ``class_specs``. Identical seeds yield identical datasets.
    """
    if not class_specs:
        raise ValueError("at least one class spec is required")
    d = len(class_specs[0].mean)
    if d == 0:
        raise ValueError("class means must be non-empty vectors")
    for i, spec in enumerate(class_specs):
        if len(spec.mean) != d:
            raise ValueError(f"class {i} mean has wrong dimension")
        if spec.stddev <= 0.0:
            raise ValueError(f"class {i} stddev must be positive")
        if spec.count <= 0:
            raise ValueError(f"class {i} sample count must be positive")
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for i, spec in enumerate(class_specs):
        blocks.append(
            rng.normal(loc=spec.mean, scale=spec.stddev, size=(spec.count, d))
        )
        labels.append(np.full(spec.count, i, dtype=np.int64))
    features = np.clip(np.concatenate(blocks, axis=0), 0.0, 1.0)
    return Dataset(
        features=features,
        labels=np.concatenate(labels),
        schema=synthetic_schema(d, len(class_specs)),
    )
