"""Experiment orchestration: training loop, evaluation, checkpoints, outputs.

run_train wires the full pipeline: encode -> circuit forward -> rescale ->
heads -> fuse -> cross-entropy, with Adam jointly updating quantum angles
and classical weights from parameter-shift and analytic gradients. With
``recycle`` off the discarded branch is removed entirely (the logits are the
retained head's output) and discarded measurements are never consumed,
which is the ablation baseline.

Outputs under the run directory: checkpoint.json, metrics.json, curves.csv
(header: iter,train_loss,train_acc,test_acc) and confusion.csv.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import grad, heads
from .config import TrainConfig
from .data import filter_split, load_csv, load_idx, make_samples, split_train_test, synthetic_clusters
from .encoding import embed
from .heads import HeadParams, forward_heads, init_head_params, rescale
from .metrics import Metrics, compute_metrics
from .optim import Adam
from .qcnn import QcnnParams, build_layout, compile_program, run_features

CHECKPOINT_FORMAT = "hqcnn-checkpoint-v1"
CURVES_NOTE = ("# values are exact for a fixed seed and kernel backend; parallel "
               "shift evaluation may perturb the last float ulps")


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class TrainResult:
    checkpoint: dict
    metrics: Metrics
    curves: list
    train_accuracy: float
    param_count: int


# ---------------------------------------------------------------------------
# dataset plumbing
# ---------------------------------------------------------------------------

def _subset(ds, n):
    from .data import RawDataset

    return RawDataset(ds.images[:n], ds.labels[:n], ds.source)


def load_dataset(config: TrainConfig):
    """Resolve the configured source into (train, test) sample lists."""
    if config.source == "synthetic":
        return synthetic_clusters(config.train_size, config.test_size, config.seed)
    encoder = config.effective_encoder
    if config.source == "idx":
        train_ds = filter_split(load_idx(config.train_images, config.train_labels), config.classes)
        test_ds = filter_split(load_idx(config.test_images, config.test_labels), config.classes)
    else:
        ds = filter_split(load_csv(config.csv_path), config.classes)
        train_ds, test_ds = split_train_test(ds, config.test_fraction, config.seed)
    train_ds = _subset(train_ds, config.train_size)
    test_ds = _subset(test_ds, config.test_size)
    return make_samples(train_ds, encoder), make_samples(test_ds, encoder)


def embed_samples(samples):
    """Pre-encode every sample once; returns (states (n, 256) complex, labels)."""
    psis = np.stack([embed(s.features).amplitudes for s in samples])
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return psis, labels


# ---------------------------------------------------------------------------
# parameter accounting
# ---------------------------------------------------------------------------

def closed_form_count(k: int, final_layer: bool, recycle: bool = True) -> int:
    """Total trainable parameters: 138 + 36k recycled (158 + 36k with the
    final layer); the baseline keeps only the quantum angles and retained head."""
    n = 94 + 20
    if recycle:
        n += 24 + 36 * k
    if final_layer:
        n += 20
    return n


def count_parameters(qparams: QcnnParams, head_params: HeadParams) -> int:
    return qparams.to_flat().size + head_params.param_count()


# ---------------------------------------------------------------------------
# evaluation helpers
# ---------------------------------------------------------------------------

def _predictions(psis, flat, program, head_params, backend=None):
    preds = np.empty(psis.shape[0], dtype=np.int64)
    for i in range(psis.shape[0]):
        feats = run_features(psis[i], flat, program, backend=backend)
        cache = forward_heads(
            rescale(feats[:4]),
            rescale(feats[4:]) if head_params.recycle else None,
            head_params,
        )
        preds[i] = heads.predict(cache.z)
    return preds


def _accuracy(psis, labels, flat, program, head_params, backend=None) -> float:
    preds = _predictions(psis, flat, program, head_params, backend=backend)
    return float(np.mean(preds == labels))


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def make_checkpoint(config: TrainConfig, qparams: QcnnParams, head_params: HeadParams) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "config": config.to_dict(),
        "param_count": count_parameters(qparams, head_params),
        "qcnn": {"conv": qparams.conv.tolist(), "pool": qparams.pool.tolist()},
        "heads": {name: arr.tolist() for name, arr in head_params.arrays().items()},
        "heads_meta": {
            "k": head_params.k,
            "m": head_params.m,
            "recycle": head_params.recycle,
            "final_layer": head_params.final_layer,
        },
    }


def save_checkpoint(path, checkpoint: dict) -> None:
    with open(path, "w") as f:
        json.dump(checkpoint, f, indent=2, sort_keys=True)
        f.write("\n")


def load_checkpoint(source):
    """Accept a checkpoint dict or a path to one; returns the dict."""
    if isinstance(source, dict):
        ckpt = source
    else:
        with open(source) as f:
            ckpt = json.load(f)
    if ckpt.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} checkpoint: {ckpt.get('format')!r}")
    return ckpt


def restore_model(checkpoint):
    """Rebuild (config, layout, qparams, head_params) from a checkpoint."""
    ckpt = load_checkpoint(checkpoint)
    config = TrainConfig(**{k: tuple(v) if isinstance(v, list) else v
                            for k, v in ckpt["config"].items()})
    layout = build_layout(config.retained_or_none(), config.pool_keep, config.pairing)
    qparams = QcnnParams(np.array(ckpt["qcnn"]["conv"]), np.array(ckpt["qcnn"]["pool"]))
    meta = ckpt["heads_meta"]
    arrays = {name: np.array(vals) for name, vals in ckpt["heads"].items()}
    head_params = HeadParams(k=meta["k"], m=meta["m"], **arrays)
    if head_params.recycle != meta["recycle"] or head_params.final_layer != meta["final_layer"]:
        raise ValueError("checkpoint head arrays do not match heads_meta")
    return config, layout, qparams, head_params


# ---------------------------------------------------------------------------
# training and evaluation
# ---------------------------------------------------------------------------

def init_parameters(config: TrainConfig, rng: np.random.Generator):
    """Seeded init: quantum angles uniform [-pi, pi], Glorot heads.

    Quantum angles are drawn first so recycled and baseline runs with the
    same seed start from identical circuits.
    """
    qparams = QcnnParams.random(rng)
    head_params = init_head_params(rng, k=config.k, final_layer=config.final_layer,
                                   recycle=config.recycle)
    return qparams, head_params


def run_train(config: TrainConfig, train=None, test=None, write_outputs: bool = True,
              backend=None, log=print) -> TrainResult:
    """Train per config; returns the checkpoint, final test metrics and curves.

    ``train``/``test`` may inject pre-built sample lists (fixtures,
    synthetic data); otherwise the configured dataset source is loaded.
    """
    rng = np.random.default_rng(config.seed)
    if train is None or test is None:
        train, test = load_dataset(config)
    train_psis, train_labels = embed_samples(train)
    test_psis, test_labels = embed_samples(test)

    layout = build_layout(config.retained_or_none(), config.pool_keep, config.pairing)
    program = compile_program(layout)
    qparams, head_params = init_parameters(config, rng)

    n_params = count_parameters(qparams, head_params)
    expected = closed_form_count(config.k, config.final_layer, config.recycle)
    log(f"parameters: quantum {qparams.to_flat().size}, "
        f"classical {head_params.param_count()}, total {n_params} (closed form {expected})")
    log(f"quantum gradient cost: {grad.shift_evaluation_count(program)} "
        f"circuit executions per sample")

    opt = Adam(config.learning_rate, config.beta1, config.beta2, config.epsilon)
    param_arrays = {"conv": qparams.conv, "pool": qparams.pool, **head_params.arrays()}
    n_train = train_psis.shape[0]
    batch = min(config.batch_size, n_train)
    curves = []

    for it in range(1, config.iterations + 1):
        idx = rng.choice(n_train, size=batch, replace=False)
        flat = qparams.to_flat()
        qgrad_sum = np.zeros(qparams.n_params)
        head_sum = {name: np.zeros_like(arr) for name, arr in head_params.arrays().items()}
        loss_sum = 0.0
        correct = 0
        for i in idx:
            loss, z, head_grads, qgrads = grad.sample_loss_and_grads(
                train_psis[i], flat, program, head_params, int(train_labels[i]),
                backend=backend,
            )
            loss_sum += loss
            correct += int(heads.predict(z) == train_labels[i])
            qgrad_sum += qgrads
            for name, arr in head_grads.arrays().items():
                head_sum[name] += arr
        train_loss = loss_sum / batch
        if not np.isfinite(train_loss):
            raise TrainingDiverged(f"non-finite loss {train_loss!r} at iteration {it}")
        grads = {
            "conv": qgrad_sum[:90].reshape(6, 15) / batch,
            "pool": qgrad_sum[90:].reshape(2, 2) / batch,
        }
        grads.update({name: arr / batch for name, arr in head_sum.items()})
        opt.step(param_arrays, grads)

        flat = qparams.to_flat()
        test_acc = _accuracy(test_psis, test_labels, flat, program, head_params, backend=backend)
        curves.append((it, train_loss, correct / batch, test_acc))
        if it % 50 == 0 or it == config.iterations:
            log(f"iter {it}: train_loss {train_loss:.4f}, "
                f"batch_acc {correct / batch:.3f}, test_acc {test_acc:.3f}")

    flat = qparams.to_flat()
    test_preds = _predictions(test_psis, flat, program, head_params, backend=backend)
    metrics = compute_metrics(test_labels, test_preds, curves=curves)
    train_accuracy = _accuracy(train_psis, train_labels, flat, program, head_params,
                               backend=backend)
    checkpoint = make_checkpoint(config, qparams, head_params)
    if write_outputs:
        emit_outputs(metrics, curves, config.out_dir, checkpoint=checkpoint,
                     extras={"train_accuracy": train_accuracy})
    return TrainResult(checkpoint=checkpoint, metrics=metrics, curves=curves,
                       train_accuracy=train_accuracy, param_count=n_params)


def run_eval(checkpoint, samples, backend=None) -> Metrics:
    """Deterministic inference of a stored model over a sample list."""
    _, layout, qparams, head_params = restore_model(checkpoint)
    program = compile_program(layout)
    psis, labels = embed_samples(samples)
    preds = _predictions(psis, qparams.to_flat(), program, head_params, backend=backend)
    return compute_metrics(labels, preds)


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

def emit_outputs(metrics: Metrics, curves, out_dir, checkpoint=None, extras=None):
    """Write metrics.json, curves.csv, confusion.csv and optional checkpoint.json.

    All files are byte-deterministic for identical inputs.
    """
    if metrics is None:
        raise ValueError("metrics must not be empty")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    payload = metrics.to_dict()
    payload["curves"] = [list(row) for row in curves]
    if extras:
        payload.update(extras)
    metrics_path = os.path.join(out_dir, "metrics.json")
    with open(metrics_path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    written.append(metrics_path)

    curves_path = os.path.join(out_dir, "curves.csv")
    with open(curves_path, "w") as f:
        f.write(CURVES_NOTE + "\n")
        f.write("iter,train_loss,train_acc,test_acc\n")
        for it, train_loss, train_acc, test_acc in curves:
            f.write(f"{it},{train_loss:.12g},{train_acc:.12g},{test_acc:.12g}\n")
    written.append(curves_path)

    confusion_path = os.path.join(out_dir, "confusion.csv")
    with open(confusion_path, "w") as f:
        for row in metrics.confusion:
            f.write(",".join(str(int(v)) for v in row) + "\n")
    written.append(confusion_path)

    if checkpoint is not None:
        ckpt_path = os.path.join(out_dir, "checkpoint.json")
        save_checkpoint(ckpt_path, checkpoint)
        written.append(ckpt_path)
    return written
