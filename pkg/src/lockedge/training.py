"""Centralized and simulated federated training loops.

Determinism contract: every randomized choice is a pure function of the run
seed and its position in the schedule. Epoch (or round) ``t`` on client ``c``
shuffles with a generator seeded from ``(seed, t, c)``; centralized training
is client 0. A federated run with one client, one local epoch and the same
batch size therefore executes the exact same floating-point operations as
centralized SGD.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .complexity import (
    PHASE_BACKWARD,
    PHASE_FORWARD,
    mac_counter,
    nn_train_cost,
)
from .dataset import ClientShard, Dataset
from .mlp import (
    AdamState,
    Gradients,
    MlpParams,
    adam_step,
    evaluate,
    forward,
    forward_backward,
    init_adam,
    init_model,
    sgd_step,
)
from .pca import PCAReducer, transform_dataset
from .validation import positive_int

OPTIMIZERS = ("adam", "sgd")

# Default learning rates when the config leaves the rate unset.
DEFAULT_ADAM_ALPHA = 0.001
DEFAULT_SGD_RATE = 0.01


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class TrainConfig:
    """Centralized training hyperparameters."""

    hidden_units: int = 22
    epochs: int = 50
    batch_size: int = 256
    optimizer: str = "adam"
    learning_rate: float | None = None
    variance_target: float = 0.95
    seed: int = 0
    output_bias: bool = True
    eval_stride: int = 1

    def validate(self) -> None:
        positive_int(self.hidden_units, "hidden_units")
        positive_int(self.epochs, "epochs")
        positive_int(self.batch_size, "batch_size")
        positive_int(self.eval_stride, "eval_stride")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.learning_rate is not None and self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.variance_target <= 1.0:
            raise ValueError("variance_target must be in (0, 1]")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return float(self.learning_rate)
        return DEFAULT_ADAM_ALPHA if self.optimizer == "adam" else DEFAULT_SGD_RATE


@dataclass(frozen=True)
class FederatedConfig:
    """Simulated federation hyperparameters; clients run plain SGD."""

    rounds: int = 350
    local_epochs: int = 1
    batch_size: int = 256
    learning_rate: float = 0.01
    hidden_units: int = 22
    variance_target: float = 0.95
    seed: int = 0
    output_bias: bool = True
    eval_stride: int = 10
    parallel_clients: bool = False

    def validate(self) -> None:
        positive_int(self.rounds, "rounds")
        positive_int(self.local_epochs, "local_epochs")
        positive_int(self.batch_size, "batch_size")
        positive_int(self.hidden_units, "hidden_units")
        positive_int(self.eval_stride, "eval_stride")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.variance_target <= 1.0:
            raise ValueError("variance_target must be in (0, 1]")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


# ---------------------------------------------------------------------------
# history


@dataclass(frozen=True)
class HistoryRecord:
    """One training or evaluation measurement.

    ``round`` is the 0-based epoch (centralized) or round (federated);
    ``client`` names the series; ``macs`` counts multiply-accumulates charged
    to the series since its previous record (0 when counting is off);
    ``millis`` is wall-clock elapsed since the run began.
    """

    round: int
    client: str
    loss: float
    accuracy: float
    macs: int
    millis: float


_HISTORY_COLUMNS = ("round", "client", "loss", "accuracy", "macs", "millis")


@dataclass
class TrainHistory:
    records: list[HistoryRecord] = field(default_factory=list)

    def add(self, **kwargs) -> None:
        self.records.append(HistoryRecord(**kwargs))

    def series(self, client: str) -> list[HistoryRecord]:
        return [r for r in self.records if r.client == client]

    def deterministic_rows(self) -> list[tuple]:
        """Rows without wall-clock fields: equal across reruns of a seed."""
        return [
            (r.round, r.client, r.loss, r.accuracy, r.macs) for r in self.records
        ]

    def to_csv_text(self) -> str:
        lines = [",".join(_HISTORY_COLUMNS)]
        for r in self.records:
            lines.append(
                f"{r.round},{r.client},{float(r.loss)!r},{float(r.accuracy)!r},"
                f"{r.macs},{float(r.millis)!r}"
            )
        return "\n".join(lines) + "\n"

    def to_json_obj(self, seed: int) -> dict:
        return {
            "version": 1,
            "kind": "train_history",
            "seed": seed,
            "columns": list(_HISTORY_COLUMNS),
            "records": [
                [r.round, r.client, r.loss, r.accuracy, r.macs, r.millis]
                for r in self.records
            ],
        }


# ---------------------------------------------------------------------------
# shared epoch machinery


def _stream_rng(seed: int, step_index: int, client_id: int) -> np.random.Generator:
    """Generator for one schedule slot; pure function of its coordinates."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), int(step_index), int(client_id)])
    )


def _one_epoch(params, opt_state, X, y, batch_size, step_fn, rng):
    """Run one pass over (X, y); returns updated state and epoch stats.

    Rows are shuffled only when batching actually splits the data, so a
    full-batch epoch is permutation-free and bit-reproducible regardless of
    generator draws.
    """
    n = X.shape[0]
    if batch_size < n:
        order = rng.permutation(n)
        Xe, ye = X[order], y[order]
    else:
        Xe, ye = X, y
    total_loss = 0.0
    correct = 0
    for start in range(0, n, batch_size):
        xb = Xe[start : start + batch_size]
        yb = ye[start : start + batch_size]
        probs, loss, grads = forward_backward(params, xb, yb)
        if not np.isfinite(loss):
            raise RuntimeError(
                f"training diverged: non-finite loss {loss!r} "
                f"at batch starting row {start}"
            )
        total_loss += loss * xb.shape[0]
        correct += int((probs.argmax(axis=1) == yb).sum())
        params, opt_state = step_fn(params, opt_state, grads)
    return params, opt_state, total_loss / n, correct / n


def _make_step(optimizer: str, learning_rate: float, output_bias: bool):
    def strip_bias(grads: Gradients) -> Gradients:
        if output_bias:
            return grads
        # Literal no-output-bias form: b2 stays at its zero init.
        return replace(grads, b2=np.zeros_like(grads.b2))

    if optimizer == "adam":
        def step(params, state, grads):
            return adam_step(params, strip_bias(grads), state)
        return step

    def step(params, state, grads):
        return sgd_step(params, strip_bias(grads), learning_rate), state
    return step


def _train_phase_total() -> int:
    snap = mac_counter.snapshot()
    return snap.get(PHASE_FORWARD, 0) + snap.get(PHASE_BACKWARD, 0)


def params_digest(params: MlpParams) -> str:
    """SHA-256 over the raw little-endian bytes of all parameter arrays."""
    digest = hashlib.sha256()
    for arr in params.as_tuple():
        digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# centralized training


@dataclass(frozen=True)
class TrainResult:
    model: MlpParams
    reducer: PCAReducer
    history: TrainHistory
    adam_state: AdamState | None


def fit_network(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    cfg: TrainConfig,
    eval_set: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[MlpParams, AdamState | None, TrainHistory]:
    """Train the classifier on already-reduced features."""
    cfg.validate()
    params = init_model(X.shape[1], cfg.hidden_units, n_classes, cfg.seed)
    lr = cfg.resolved_learning_rate()
    opt_state = init_adam(params, alpha=lr) if cfg.optimizer == "adam" else None
    step_fn = _make_step(cfg.optimizer, lr, cfg.output_bias)

    history = TrainHistory()
    t0 = time.perf_counter()
    macs_before = _train_phase_total()
    for epoch in range(cfg.epochs):
        rng = _stream_rng(cfg.seed, epoch, 0)
        params, opt_state, loss, acc = _one_epoch(
            params, opt_state, X, y, cfg.batch_size, step_fn, rng
        )
        macs_after = _train_phase_total()
        history.add(
            round=epoch,
            client="train",
            loss=loss,
            accuracy=acc,
            macs=macs_after - macs_before,
            millis=(time.perf_counter() - t0) * 1000.0,
        )
        macs_before = macs_after
        if eval_set is not None and (
            epoch % cfg.eval_stride == 0 or epoch == cfg.epochs - 1
        ):
            with mac_counter.paused():
                ev_loss, ev_acc = evaluate(params, eval_set[0], eval_set[1])
            history.add(
                round=epoch,
                client="test",
                loss=ev_loss,
                accuracy=ev_acc,
                macs=0,
                millis=(time.perf_counter() - t0) * 1000.0,
            )
    return params, opt_state, history


def train_centralized(
    train: Dataset, test: Dataset | None, cfg: TrainConfig
) -> TrainResult:
    """Fit the reducer on the training split, then the classifier on the
    reduced features. Test data, when given, is projected with the frozen
    reducer and evaluated every ``eval_stride`` epochs."""
    cfg.validate()
    if train.n_samples < 2:
        raise ValueError("training dataset needs at least 2 samples")
    reducer = PCAReducer(cfg.variance_target).fit(train.features)
    if float(reducer.eigenvalues_.sum()) <= 0.0:
        raise ValueError(
            "training features have zero variance; reduction is degenerate"
        )
    X = reducer.transform(train.features)
    eval_set = None
    if test is not None:
        if test.n_classes != train.n_classes:
            raise ValueError("train and test datasets disagree on classes")
        eval_set = (reducer.transform(test.features), test.labels)
    params, opt_state, history = fit_network(
        X, train.labels, train.n_classes, cfg, eval_set
    )
    return TrainResult(
        model=params, reducer=reducer, history=history, adam_state=opt_state
    )


# ---------------------------------------------------------------------------
# federated simulation


def client_update(
    global_params: MlpParams,
    shard: ClientShard,
    local_epochs: int,
    learning_rate: float,
    batch_size: int,
    seed: int,
    round_index: int = 0,
    output_bias: bool = True,
) -> MlpParams:
    """One client's local SGD pass starting from the broadcast weights."""
    updated, _, _ = _client_update_stats(
        global_params, shard, local_epochs, learning_rate, batch_size,
        seed, round_index, output_bias,
    )
    return updated


def _client_update_stats(
    global_params, shard, local_epochs, learning_rate, batch_size, seed,
    round_index, output_bias=True,
):
    positive_int(local_epochs, "local_epochs")
    positive_int(batch_size, "batch_size")
    if learning_rate <= 0.0:
        raise ValueError("learning_rate must be positive")
    data = shard.data
    if data.n_samples < 1:
        raise ValueError("client shard is empty")
    step_fn = _make_step("sgd", learning_rate, output_bias)
    rng = _stream_rng(seed, round_index, shard.client_id)
    params = global_params
    loss = acc = 0.0
    for _ in range(local_epochs):
        params, _, loss, acc = _one_epoch(
            params, None, data.features, data.labels, batch_size, step_fn, rng
        )
    return params, loss, acc


def aggregate(models: list[MlpParams], counts: list[int]) -> MlpParams:
    """Sample-count-weighted convex combination of client models.

    Terms are accumulated in the given order; callers pass clients in
    ascending id order so reruns are bit-stable.
    """
    if not models:
        raise ValueError("no client models to aggregate")
    if len(models) != len(counts):
        raise ValueError("models and counts length mismatch")
    for c in counts:
        positive_int(c, "client sample count")
    shapes = [tuple(a.shape for a in m.as_tuple()) for m in models]
    if any(s != shapes[0] for s in shapes[1:]):
        raise ValueError("client models have mismatched shapes")
    total = sum(counts)
    acc = [counts[0] / total * a for a in models[0].as_tuple()]
    for n_k, model in zip(counts[1:], models[1:]):
        w = n_k / total
        acc = [a + w * b for a, b in zip(acc, model.as_tuple())]
    return MlpParams(*acc)


@dataclass(frozen=True)
class FederatedResult:
    model: MlpParams
    reducer: PCAReducer
    history: TrainHistory


def train_federated(
    shards: list[ClientShard],
    cfg: FederatedConfig,
    test_sets: dict[int, Dataset] | None = None,
) -> FederatedResult:
    """FedAvg-style simulation over in-process client shards.

    The reducer is fitted once on the union of shards (ascending client id)
    and broadcast; each round every client runs ``local_epochs`` of SGD from
    the same global weights, and the server aggregates by sample count.
    ``test_sets`` maps client ids to held-out data evaluated with the global
    model every ``eval_stride`` rounds.
    """
    cfg.validate()
    if not shards:
        raise ValueError("at least one client shard is required")
    ids = [s.client_id for s in shards]
    if len(set(ids)) != len(ids):
        raise ValueError("client ids must be unique")
    shards = sorted(shards, key=lambda s: s.client_id)
    n_classes = shards[0].data.n_classes
    for s in shards:
        if s.data.n_classes != n_classes:
            raise ValueError("shards disagree on the class count")

    union_features = np.concatenate([s.data.features for s in shards], axis=0)
    reducer = PCAReducer(cfg.variance_target).fit(union_features)
    if float(reducer.eigenvalues_.sum()) <= 0.0:
        raise ValueError(
            "training features have zero variance; reduction is degenerate"
        )
    local = [
        ClientShard(client_id=s.client_id, data=transform_dataset(reducer, s.data))
        for s in shards
    ]
    eval_sets = {}
    if test_sets:
        for cid, ds in test_sets.items():
            eval_sets[cid] = (reducer.transform(ds.features), ds.labels)

    model = init_model(
        reducer.n_components_, cfg.hidden_units, n_classes, cfg.seed
    )
    counts = [s.n_k for s in local]
    history = TrainHistory()
    t0 = time.perf_counter()
    macs_before = _train_phase_total()

    def run_client(shard, round_index, broadcast, broadcast_digest):
        # Tripwire: every client must start from the same broadcast weights.
        if params_digest(broadcast) != broadcast_digest:
            raise AssertionError(
                f"round {round_index}: broadcast weights changed before "
                f"client {shard.client_id} started"
            )
        return _client_update_stats(
            broadcast, shard, cfg.local_epochs, cfg.learning_rate,
            cfg.batch_size, cfg.seed, round_index, cfg.output_bias,
        )

    for rnd in range(cfg.rounds):
        digest = params_digest(model)
        if cfg.parallel_clients and len(local) > 1:
            with ThreadPoolExecutor(max_workers=len(local)) as pool:
                results = list(
                    pool.map(lambda s: run_client(s, rnd, model, digest), local)
                )
            per_client_macs = [0] * len(local)
            macs_before = _train_phase_total()
        else:
            results = []
            per_client_macs = []
            for shard in local:
                results.append(run_client(shard, rnd, model, digest))
                macs_after = _train_phase_total()
                per_client_macs.append(macs_after - macs_before)
                macs_before = macs_after
        model = aggregate([r[0] for r in results], counts)

        elapsed = (time.perf_counter() - t0) * 1000.0
        for shard, (_, loss, acc), macs in zip(local, results, per_client_macs):
            history.add(
                round=rnd,
                client=f"client_{shard.client_id}",
                loss=loss,
                accuracy=acc,
                macs=macs,
                millis=elapsed,
            )
        if eval_sets and (rnd % cfg.eval_stride == 0 or rnd == cfg.rounds - 1):
            with mac_counter.paused():
                for cid in sorted(eval_sets):
                    ev_loss, ev_acc = evaluate(model, *eval_sets[cid])
                    history.add(
                        round=rnd,
                        client=f"test_{cid}",
                        loss=ev_loss,
                        accuracy=ev_acc,
                        macs=0,
                        millis=(time.perf_counter() - t0) * 1000.0,
                    )
    return FederatedResult(model=model, reducer=reducer, history=history)


# ---------------------------------------------------------------------------
# inference benchmark


@dataclass(frozen=True)
class BenchResult:
    samples: int
    seconds: float
    samples_per_second: float
    per_sample_macs: int


def run_benchmark(
    params: MlpParams,
    reducer: PCAReducer,
    duration_seconds: float = 2.0,
    n_samples: int = 4096,
    seed: int = 0,
    features: np.ndarray | None = None,
) -> BenchResult:
    """Measure end-to-end inference throughput (projection plus forward pass).

    Repeats full passes over a feature block until ``duration_seconds`` of
    wall clock has elapsed. The reported per-sample MAC figure is the closed
    form ``d*k + k*h + h*c``, not a measurement.
    """
    if duration_seconds <= 0.0:
        raise ValueError("duration_seconds must be positive")
    d = int(reducer.mean_.shape[0])
    if features is None:
        positive_int(n_samples, "n_samples")
        rng = np.random.default_rng(seed)
        features = rng.uniform(0.0, 1.0, size=(n_samples, d))
    elif features.shape[1] != d:
        raise ValueError(
            f"features have {features.shape[1]} columns, reducer expects {d}"
        )
    k = int(reducer.n_components_)
    if k != params.n_inputs:
        raise ValueError("model input width does not match reducer components")
    per_sample = d * k + nn_train_cost(
        1, 1, k, params.hidden_units, params.n_classes
    )

    with mac_counter.paused():
        # Warm-up pass keeps one-time allocation out of the timing.
        forward(params, reducer.transform(features[: min(256, features.shape[0])]))
        done = 0
        t0 = time.perf_counter()
        while True:
            forward(params, reducer.transform(features))
            done += features.shape[0]
            elapsed = time.perf_counter() - t0
            if elapsed >= duration_seconds:
                break
    return BenchResult(
        samples=done,
        seconds=elapsed,
        samples_per_second=done / elapsed,
        per_sample_macs=per_sample,
    )
