"""Command-line pipeline driver.

Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.
Every command accepts ``--config FILE`` with flat INI-style ``key = value``
pairs; explicit flags override file values, and the fully resolved
configuration is echoed and written next to the outputs for provenance.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from . import artifacts
from .complexity import cost_table, k_bound, mac_counter, verify_counts
from .dataset import (
    ClassSpec,
    Dataset,
    ZoneRule,
    apply_encoding,
    fit_encoding,
    generate_synthetic,
    parse_csv,
    partition_by_zone,
    round_robin_shards,
    split_train_test,
    stratified_split_indices,
)
from .metrics import class_report, confusion_matrix, multiclass_roc
from .mlp import evaluate as evaluate_network
from .mlp import forward
from .pca import PCAReducer
from .schema import FeatureSchema
from .training import (
    FederatedConfig,
    TrainConfig,
    train_centralized,
    train_federated,
)


class UsageError(Exception):
    """Bad invocation or configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# configuration plumbing

# Per-command option registry: key -> (type tag, default). Flags mirror keys
# with dashes; config files use the underscore form.
_OPTIONS: dict[str, dict[str, tuple[str, object]]] = {
    "preprocess": {
        "csv": ("path", None),
        "schema": ("path", None),
        "out": ("path", None),
        "test_fraction": ("float", 0.2),
        "seed": ("int", 0),
        "zone_column": ("str", ""),
    },
    "pca-fit": {
        "data": ("path", None),
        "out": ("path", None),
        "variance_target": ("float", 0.95),
        "seed": ("int", 0),
    },
    "train": {
        "data": ("path", ""),
        "train": ("path", ""),
        "test": ("path", ""),
        "out": ("path", None),
        "test_fraction": ("float", 0.2),
        "hidden_units": ("int", 22),
        "epochs": ("int", 50),
        "batch_size": ("int", 256),
        "optimizer": ("str", "adam"),
        "learning_rate": ("float", -1.0),
        "variance_target": ("float", 0.95),
        "seed": ("int", 0),
        "output_bias": ("bool", True),
        "eval_stride": ("int", 1),
        "count_macs": ("bool", False),
    },
    "federate": {
        "data": ("path", None),
        "out": ("path", None),
        "clients": ("int", 0),
        "zone_rules": ("str", ""),
        "test_fraction": ("float", 0.2),
        "rounds": ("int", 350),
        "local_epochs": ("int", 1),
        "batch_size": ("int", 256),
        "learning_rate": ("float", 0.01),
        "hidden_units": ("int", 22),
        "variance_target": ("float", 0.95),
        "seed": ("int", 0),
        "output_bias": ("bool", True),
        "eval_stride": ("int", 10),
        "parallel": ("bool", False),
        "count_macs": ("bool", False),
    },
    "evaluate": {
        "model": ("path", None),
        "pca": ("path", None),
        "data": ("path", None),
        "out": ("path", None),
        "schema": ("path", ""),
    },
    "complexity": {
        "h_range": ("str", "6:46"),
        "epochs": ("int", 50),
        "samples": ("int", 1000000),
        "features": ("int", 40),
        "components": ("int", 9),
        "classes": ("int", 11),
        "out": ("path", ""),
    },
    "synth": {
        "out": ("path", None),
        "spec": ("str", None),
        "seed": ("int", 0),
    },
    "bench": {
        "model": ("path", None),
        "pca": ("path", None),
        "data": ("path", ""),
        "samples": ("int", 4096),
        "duration": ("float", 2.0),
        "seed": ("int", 0),
        "out": ("path", ""),
    },
}

def _coerce(key: str, tag: str, raw: str):
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise UsageError(f"config key {key}: cannot parse {raw!r} as {tag}") from None


def _load_config_file(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    text = p.read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"config file {path} is malformed: {exc}") from None
    merged: dict[str, str] = {}
    for section in parser.sections():
        merged.update(dict(parser[section]))
    return merged


def _resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge built-in defaults, config file values and explicit flags."""
    registry = _OPTIONS[command]
    resolved = {k: default for k, (_, default) in registry.items()}
    if args.config:
        for key, raw in _load_config_file(args.config).items():
            if key not in registry:
                raise UsageError(
                    f"config key {key!r} is not recognized by {command}"
                )
            resolved[key] = _coerce(key, registry[key][0], raw)
    for key in registry:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
    missing = [k for k, v in resolved.items() if v is None]
    if missing:
        raise UsageError(
            f"{command}: missing required option(s): "
            + ", ".join(f"--{m.replace('_', '-')}" for m in sorted(missing))
        )
    return resolved


def _echo_config(command: str, cfg: dict, out_dir: Path | None) -> None:
    lines = [f"{k} = {cfg[k]}" for k in sorted(cfg)]
    print(f"[{command}] resolved configuration:")
    for line in lines:
        print(f"  {line}")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.resolved").write_text(
            f"command = {command}\n" + "\n".join(lines) + "\n"
        )


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


# ---------------------------------------------------------------------------
# commands


def cmd_preprocess(cfg: dict) -> int:
    schema = FeatureSchema.load(_require_file(cfg["schema"], "schema file"))
    csv_path = _require_file(cfg["csv"], "CSV file")
    out = Path(cfg["out"])
    fraction = cfg["test_fraction"]
    if not 0.0 <= fraction < 1.0:
        raise UsageError("test_fraction must be in [0, 1)")
    keep = (cfg["zone_column"],) if cfg["zone_column"] else ()
    group_col = cfg["zone_column"] or None

    table = parse_csv(csv_path, schema, keep_columns=keep)
    print(f"parsed {table.n_rows} rows, {schema.n_features} features")

    if fraction > 0.0:
        train_idx, test_idx = stratified_split_indices(
            table.labels, fraction, cfg["seed"], schema.n_classes
        )
        encoding = fit_encoding(table, train_idx)
        train = apply_encoding(encoding, table, train_idx, group_col)
        test = apply_encoding(encoding, table, test_idx, group_col)
        artifacts.write_dataset(out / "train.lke", train)
        artifacts.write_dataset(out / "test.lke", test)
        print(f"wrote train.lke ({train.n_samples}) and test.lke ({test.n_samples})")
    else:
        encoding = fit_encoding(table)
        data = apply_encoding(encoding, table, None, group_col)
        artifacts.write_dataset(out / "data.lke", data)
        print(f"wrote data.lke ({data.n_samples})")
    artifacts.write_json_artifact(
        out / "encoding.json", artifacts.encoding_to_dict(encoding, cfg["seed"])
    )
    print("wrote encoding.json")
    return 0


def cmd_pca_fit(cfg: dict) -> int:
    data = artifacts.read_dataset(_require_file(cfg["data"], "dataset"))
    out = Path(cfg["out"])
    reducer = PCAReducer(variance_target=cfg["variance_target"]).fit(data.features)
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json_artifact(
        out / "pca.json", reducer.to_dict(seed=cfg["seed"])
    )
    print(
        f"retained {reducer.n_components_} of {data.n_features} components "
        f"(captured {reducer.captured_ratio_:.5f})"
    )
    return 0


def _load_train_splits(cfg: dict) -> tuple[Dataset, Dataset | None]:
    if cfg["train"] and cfg["data"]:
        raise UsageError("pass either --data or --train/--test, not both")
    if cfg["train"]:
        train = artifacts.read_dataset(_require_file(cfg["train"], "train dataset"))
        test = None
        if cfg["test"]:
            test = artifacts.read_dataset(_require_file(cfg["test"], "test dataset"))
        return train, test
    if not cfg["data"]:
        raise UsageError("pass --data FILE or --train FILE [--test FILE]")
    data = artifacts.read_dataset(_require_file(cfg["data"], "dataset"))
    fraction = cfg["test_fraction"]
    if not 0.0 <= fraction < 1.0:
        raise UsageError("test_fraction must be in [0, 1)")
    if fraction == 0.0:
        return data, None
    return split_train_test(data, fraction, cfg["seed"])


def cmd_train(cfg: dict) -> int:
    train, test = _load_train_splits(cfg)
    out = Path(cfg["out"])
    tc = TrainConfig(
        hidden_units=cfg["hidden_units"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        optimizer=cfg["optimizer"],
        learning_rate=None if cfg["learning_rate"] <= 0 else cfg["learning_rate"],
        variance_target=cfg["variance_target"],
        seed=cfg["seed"],
        output_bias=cfg["output_bias"],
        eval_stride=cfg["eval_stride"],
    )
    try:
        tc.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    if cfg["count_macs"]:
        mac_counter.reset()
        with mac_counter.counting():
            result = train_centralized(train, test, tc)
        snapshot = mac_counter.snapshot()
    else:
        result = train_centralized(train, test, tc)
        snapshot = None

    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json_artifact(
        out / "model.json", artifacts.model_to_dict(result.model, tc.seed)
    )
    artifacts.write_json_artifact(
        out / "pca.json", result.reducer.to_dict(seed=tc.seed)
    )
    if result.adam_state is not None:
        artifacts.write_json_artifact(
            out / "adam.json", artifacts.adam_to_dict(result.adam_state, tc.seed)
        )
    _write_history(out, result.history, tc.seed)

    if snapshot is not None:
        report = verify_counts(
            snapshot,
            epochs=tc.epochs,
            n_samples=train.n_samples,
            n_features=train.n_features,
            n_components=result.reducer.n_components_,
            hidden_units=tc.hidden_units,
            n_classes=train.n_classes,
        )
        artifacts.write_json_artifact(
            out / "counts.json",
            {
                "version": 1,
                "kind": "mac_counts",
                "seed": tc.seed,
                "phases": snapshot,
                "verified": report.ok,
            },
        )
        for line in report.lines():
            print(f"macs {line}")
        if not report.ok:
            raise RuntimeError("MAC count verification failed")

    last_train = result.history.series("train")[-1]
    print(
        f"trained {tc.epochs} epochs: loss {last_train.loss:.6f}, "
        f"train accuracy {last_train.accuracy:.5f}"
    )
    tests = result.history.series("test")
    if tests:
        print(f"test accuracy {tests[-1].accuracy:.5f}")
    print(f"components retained: {result.reducer.n_components_}")
    return 0


def _parse_zone_rules(spec: str) -> list[ZoneRule]:
    rules: list[ZoneRule] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise UsageError(
                f"zone rule {part!r} must look like CLIENT=KEY or CLIENT=*"
            )
        cid_text, value = part.split("=", 1)
        try:
            cid = int(cid_text)
        except ValueError:
            raise UsageError(f"zone rule client id {cid_text!r} is not an integer")
        if value == "*":
            rules.append(ZoneRule(client_id=cid, predicate=None))
        else:
            rules.append(
                ZoneRule(client_id=cid, predicate=lambda k, v=value: k == v)
            )
    if not rules:
        raise UsageError("no zone rules given")
    return rules


def cmd_federate(cfg: dict) -> int:
    data = artifacts.read_dataset(_require_file(cfg["data"], "dataset"))
    out = Path(cfg["out"])
    if bool(cfg["clients"]) == bool(cfg["zone_rules"]):
        raise UsageError("pass exactly one of --clients or --zone-rules")
    fraction = cfg["test_fraction"]
    if not 0.0 <= fraction < 1.0:
        raise UsageError("test_fraction must be in [0, 1)")

    fc = FederatedConfig(
        rounds=cfg["rounds"],
        local_epochs=cfg["local_epochs"],
        batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"],
        hidden_units=cfg["hidden_units"],
        variance_target=cfg["variance_target"],
        seed=cfg["seed"],
        output_bias=cfg["output_bias"],
        eval_stride=cfg["eval_stride"],
        parallel_clients=cfg["parallel"],
    )
    try:
        fc.validate()
        if cfg["clients"]:
            shards = round_robin_shards(data, cfg["clients"])
        else:
            shards = partition_by_zone(data, _parse_zone_rules(cfg["zone_rules"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    print(
        "shards: "
        + ", ".join(f"client_{s.client_id}={s.n_k}" for s in shards)
    )
    test_sets: dict[int, Dataset] | None = None
    if fraction > 0.0:
        test_sets = {}
        split_shards = []
        for shard in shards:
            tr, te = split_train_test(shard.data, fraction, fc.seed)
            split_shards.append(type(shard)(client_id=shard.client_id, data=tr))
            test_sets[shard.client_id] = te
        shards = split_shards

    if cfg["count_macs"]:
        mac_counter.reset()
        with mac_counter.counting():
            result = train_federated(shards, fc, test_sets)
        snapshot = mac_counter.snapshot()
    else:
        result = train_federated(shards, fc, test_sets)
        snapshot = None

    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json_artifact(
        out / "model.json", artifacts.model_to_dict(result.model, fc.seed)
    )
    artifacts.write_json_artifact(
        out / "pca.json", result.reducer.to_dict(seed=fc.seed)
    )
    _write_history(out, result.history, fc.seed)

    if snapshot is not None:
        n_union = sum(s.n_k for s in shards)
        report = verify_counts(
            snapshot,
            epochs=fc.rounds * fc.local_epochs,
            n_samples=n_union,
            n_features=shards[0].data.n_features,
            n_components=result.reducer.n_components_,
            hidden_units=fc.hidden_units,
            n_classes=shards[0].data.n_classes,
        )
        artifacts.write_json_artifact(
            out / "counts.json",
            {
                "version": 1,
                "kind": "mac_counts",
                "seed": fc.seed,
                "phases": snapshot,
                "verified": report.ok,
            },
        )
        for line in report.lines():
            print(f"macs {line}")
        if not report.ok:
            raise RuntimeError("MAC count verification failed")

    if test_sets:
        with mac_counter.paused():
            for cid in sorted(test_sets):
                te = test_sets[cid]
                loss, acc = evaluate_network(
                    result.model,
                    result.reducer.transform(te.features),
                    te.labels,
                )
                print(f"client_{cid} test accuracy {acc:.5f} (loss {loss:.6f})")
    print(f"federated {fc.rounds} rounds over {len(shards)} clients")
    return 0


def _write_history(out: Path, history, seed: int) -> None:
    csv_path = out / "history.csv"
    csv_path.write_text(history.to_csv_text())
    digest = artifacts.file_sha256(csv_path)
    Path(str(csv_path) + ".sha256").write_text(f"{digest}  {csv_path.name}\n")
    artifacts.write_json_artifact(out / "history.json", history.to_json_obj(seed))


def cmd_evaluate(cfg: dict) -> int:
    params = artifacts.model_from_dict(
        artifacts.read_json_artifact(_require_file(cfg["model"], "model"), "mlp")
    )
    reducer = PCAReducer.from_dict(
        artifacts.read_json_artifact(_require_file(cfg["pca"], "pca artifact"), "pca")
    )
    schema = None
    if cfg["schema"]:
        schema = FeatureSchema.load(_require_file(cfg["schema"], "schema file"))
    data = artifacts.read_dataset(_require_file(cfg["data"], "dataset"), schema)
    out = Path(cfg["out"])

    projected = reducer.transform(data.features)
    if projected.shape[1] != params.n_inputs:
        raise RuntimeError(
            f"model expects {params.n_inputs} inputs but the reducer "
            f"produces {projected.shape[1]} components"
        )
    _, probs = forward(params, projected)
    predictions = probs.argmax(axis=1).astype(np.int64)
    cm = confusion_matrix(data.labels, predictions, data.n_classes)
    report = class_report(cm)

    out.mkdir(parents=True, exist_ok=True)
    report_obj = report.to_dict(class_names=data.schema.class_names)
    roc_lines = []
    try:
        micro = multiclass_roc(probs, data.labels, "micro")
        macro = multiclass_roc(probs, data.labels, "macro")
        report_obj["auc_micro"] = micro.auc
        report_obj["auc_macro"] = macro.auc
        _write_roc_csv(out / "roc_micro.csv", micro)
        _write_roc_csv(out / "roc_macro.csv", macro)
        roc_lines = [
            f"micro-average AUC {micro.auc:.6f}",
            f"macro-average AUC {macro.auc:.6f}",
        ]
    except ValueError as exc:
        roc_lines = [f"roc skipped: {exc}"]
    artifacts.write_json_artifact(out / "report.json", report_obj)
    text = report.format_text(class_names=data.schema.class_names)
    (out / "report.txt").write_text(text + "\n")

    print(text)
    for line in roc_lines:
        print(line)
    return 0


def _write_roc_csv(path: Path, roc) -> None:
    lines = ["fpr,tpr"]
    lines.extend(f"{float(f)!r},{float(t)!r}" for f, t in roc.points)
    path.write_text("\n".join(lines) + "\n")
    digest = artifacts.file_sha256(path)
    Path(str(path) + ".sha256").write_text(f"{digest}  {path.name}\n")


def _parse_h_range(spec: str) -> list[int]:
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [int(parts[0])]
        if len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
            step = 1
        elif len(parts) == 3:
            lo, hi, step = int(parts[0]), int(parts[1]), int(parts[2])
        else:
            raise ValueError(spec)
    except ValueError:
        raise UsageError(f"--h-range must look like LO:HI[:STEP], got {spec!r}")
    if lo < 1 or hi < lo or step < 1:
        raise UsageError(f"--h-range {spec!r} is not a valid range")
    return list(range(lo, hi + 1, step))


def cmd_complexity(cfg: dict) -> int:
    h_values = _parse_h_range(cfg["h_range"])
    try:
        rows = cost_table(
            h_values,
            epochs=cfg["epochs"],
            n_samples=cfg["samples"],
            n_features=cfg["features"],
            n_components=cfg["components"],
            n_classes=cfg["classes"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = ["hidden_units,cost_nn,cost_lockedge,ratio"]
    lines.extend(
        f"{r['hidden_units']},{r['cost_nn']},{r['cost_lockedge']},{r['ratio']!r}"
        for r in rows
    )
    text = "\n".join(lines) + "\n"
    if cfg["out"]:
        path = Path(cfg["out"])
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        digest = artifacts.file_sha256(path)
        Path(str(path) + ".sha256").write_text(f"{digest}  {path.name}\n")
        print(f"wrote {path}")
    else:
        print(text, end="")
    bound = k_bound(
        cfg["samples"], cfg["features"], cfg["epochs"], max(h_values)
    )
    print(f"k_bound(h={max(h_values)}): {bound:.4f}")
    return 0


def _parse_synth_spec(spec: str) -> list[ClassSpec]:
    out: list[ClassSpec] = []
    for block in spec.split(";"):
        block = block.strip()
        if not block:
            continue
        parts = block.split(":")
        if len(parts) != 3:
            raise UsageError(
                f"class spec {block!r} must look like M1,M2,...:STDDEV:COUNT"
            )
        try:
            mean = tuple(float(x) for x in parts[0].split(","))
            stddev = float(parts[1])
            count = int(parts[2])
        except ValueError:
            raise UsageError(f"cannot parse class spec {block!r}") from None
        out.append(ClassSpec(mean=mean, stddev=stddev, count=count))
    if not out:
        raise UsageError("synth spec is empty")
    return out


def cmd_synth(cfg: dict) -> int:
    specs = _parse_synth_spec(cfg["spec"])
    try:
        data = generate_synthetic(specs, cfg["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_dataset(out / "data.lke", data)
    print(
        f"wrote data.lke: {data.n_samples} samples, "
        f"{data.n_features} features, {data.n_classes} classes"
    )
    return 0


def cmd_bench(cfg: dict) -> int:
    from .training import run_benchmark

    params = artifacts.model_from_dict(
        artifacts.read_json_artifact(_require_file(cfg["model"], "model"), "mlp")
    )
    reducer = PCAReducer.from_dict(
        artifacts.read_json_artifact(_require_file(cfg["pca"], "pca artifact"), "pca")
    )
    features = None
    if cfg["data"]:
        features = artifacts.read_dataset(_require_file(cfg["data"], "dataset")).features
    result = run_benchmark(
        params,
        reducer,
        duration_seconds=cfg["duration"],
        n_samples=cfg["samples"],
        seed=cfg["seed"],
        features=features,
    )
    print(
        f"throughput {result.samples_per_second:.1f} samples/s "
        f"({result.samples} samples in {result.seconds:.3f} s)"
    )
    print(f"per-sample MACs: {result.per_sample_macs}")
    if cfg["out"]:
        path = Path(cfg["out"])
        path.parent.mkdir(parents=True, exist_ok=True)
        artifacts.write_json_artifact(
            path,
            {
                "version": 1,
                "kind": "bench",
                "seed": cfg["seed"],
                "samples": result.samples,
                "seconds": result.seconds,
                "samples_per_second": result.samples_per_second,
                "per_sample_macs": result.per_sample_macs,
            },
        )
    return 0


# ---------------------------------------------------------------------------
# entry point

_COMMANDS = {
    "preprocess": cmd_preprocess,
    "pca-fit": cmd_pca_fit,
    "train": cmd_train,
    "federate": cmd_federate,
    "evaluate": cmd_evaluate,
    "complexity": cmd_complexity,
    "synth": cmd_synth,
    "bench": cmd_bench,
}

# Commands whose --out names a single file rather than a run directory; they
# get no config.resolved dump.
_FILE_OUT = {"complexity", "bench"}

_HELP = {
    "preprocess": "parse a CSV, fit min-max encoding, write LKE1 splits",
    "pca-fit": "fit the variance-targeted reduction on an encoded dataset",
    "train": "centralized training: reduction plus softmax network",
    "federate": "simulated federated training over client shards",
    "evaluate": "confusion matrix, per-class rates and ROC for a model",
    "complexity": "closed-form MAC cost table over hidden-layer widths",
    "synth": "generate a labelled Gaussian-blob dataset",
    "bench": "inference throughput of a trained model",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lockedge",
        description="Low-complexity multi-attack detection pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, options in _OPTIONS.items():
        p = sub.add_parser(command, help=_HELP[command])
        p.add_argument("--config", default="", help="flat key=value config file")
        for key, (tag, _) in options.items():
            flag = "--" + key.replace("_", "-")
            if tag == "bool":
                group = p.add_mutually_exclusive_group()
                group.add_argument(
                    flag, dest=key, action="store_true", default=None
                )
                group.add_argument(
                    "--no-" + key.replace("_", "-"),
                    dest=key,
                    action="store_false",
                    default=None,
                )
            elif tag == "int":
                p.add_argument(flag, dest=key, type=int, default=None)
            elif tag == "float":
                p.add_argument(flag, dest=key, type=float, default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    command = args.command
    try:
        cfg = _resolve(command, args)
        out_dir = None
        if cfg.get("out") and command not in _FILE_OUT:
            out_dir = Path(cfg["out"])
        _echo_config(command, cfg, out_dir)
        return _COMMANDS[command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # runtime failures map to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
