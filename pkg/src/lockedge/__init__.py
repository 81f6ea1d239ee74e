"""Low-complexity multi-attack detection for edge deployments.

Pipeline: min-max feature encoding -> variance-targeted PCA reduction ->
one-hidden-layer softmax classifier, trained centrally (Adam) or as a
simulated federation (per-client SGD with sample-weighted averaging), with a
closed-form MAC cost model checked against instrumented matrix products.
"""

from .complexity import (
    CostEstimate,
    MacCounter,
    cost_table,
    counted_matmul,
    k_bound,
    mac_counter,
    nn_train_cost,
    nn_train_cost_multilayer,
    pca_cost,
    total_cost,
    verify_counts,
)
from .dataset import (
    ClassSpec,
    ClientShard,
    Dataset,
    EncodingParams,
    RawTable,
    ZoneRule,
    apply_encoding,
    fit_encoding,
    generate_synthetic,
    parse_csv,
    parse_csv_text,
    partition_by_zone,
    round_robin_shards,
    split_train_test,
    stratified_split_indices,
)
from .estimators import LocKedgeClassifier, SoftmaxNetwork
from .metrics import (
    ClassReport,
    RocResult,
    class_report,
    confusion_matrix,
    multiclass_roc,
)
from .mlp import (
    AdamState,
    Gradients,
    MlpParams,
    adam_step,
    backward,
    cross_entropy,
    forward,
    init_adam,
    init_model,
    predict,
    sgd_step,
)
from .pca import (
    PCAReducer,
    SymEigResult,
    covariance,
    eigen_sym,
    select_rank,
    transform_dataset,
)
from .schema import (
    FeatureSchema,
    LabelError,
    ParseError,
    SchemaError,
    synthetic_schema,
)
from .training import (
    FederatedConfig,
    TrainConfig,
    TrainHistory,
    aggregate,
    client_update,
    params_digest,
    run_benchmark,
    train_centralized,
    train_federated,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "ClassReport",
    "ClassSpec",
    "ClientShard",
    "CostEstimate",
    "Dataset",
    "EncodingParams",
    "FeatureSchema",
    "FederatedConfig",
    "Gradients",
    "LabelError",
    "LocKedgeClassifier",
    "MacCounter",
    "MlpParams",
    "ParseError",
    "PCAReducer",
    "RawTable",
    "RocResult",
    "SchemaError",
    "SoftmaxNetwork",
    "SymEigResult",
    "TrainConfig",
    "TrainHistory",
    "ZoneRule",
    "adam_step",
    "aggregate",
    "apply_encoding",
    "backward",
    "class_report",
    "client_update",
    "confusion_matrix",
    "cost_table",
    "counted_matmul",
    "covariance",
    "cross_entropy",
    "eigen_sym",
    "fit_encoding",
    "forward",
    "generate_synthetic",
    "init_adam",
    "init_model",
    "k_bound",
    "mac_counter",
    "multiclass_roc",
    "nn_train_cost",
    "nn_train_cost_multilayer",
    "params_digest",
    "parse_csv",
    "parse_csv_text",
    "partition_by_zone",
    "pca_cost",
    "predict",
    "round_robin_shards",
    "run_benchmark",
    "select_rank",
    "sgd_step",
    "split_train_test",
    "stratified_split_indices",
    "synthetic_schema",
    "total_cost",
    "train_centralized",
    "train_federated",
    "transform_dataset",
    "verify_counts",
]
