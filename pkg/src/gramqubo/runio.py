"""Run directory serialization.

A completed run directory contains:

* ``config.json``  - full effective configuration (every default echoed)
* ``history.csv``  - iteration, loss, train_acc, test_acc (blank when skipped)
* ``weights.csv``  - final augmented head weights, one column per class
* ``conv.csv``     - frozen kernels and biases, one row per filter
* ``metrics.json`` - final test metrics, confusion matrix, timings,
  train accuracy, final loss, and the loss-increase fraction

The config snapshot plus the source data files are sufficient to
reproduce the run bit-identically.
"""

import json
import os

import numpy as np

from gramqubo.data import Dataset
from gramqubo.features import ConvSpec, FrozenConv, extract_features, load_conv_csv, save_conv_csv
from gramqubo.metrics import MetricReport, confusion, report
from gramqubo.trainer import RunRecord, predict

METRIC_KEYS = ("accuracy", "precision", "recall", "f1", "kappa", "mcc")


def evaluate_final(dataset: Dataset, conv: FrozenConv, W_aug: np.ndarray):
    """Metrics of the final weights on the dataset's test split."""
    X_test = extract_features(conv, dataset.test_images)
    preds = predict(X_test, W_aug)
    cm = confusion(dataset.test_labels, preds, dataset.num_classes)
    return report(cm), cm


def save_run(run_dir, config: dict, record: RunRecord, conv: FrozenConv, dataset: Dataset) -> dict:
    """Write the full run directory; returns the metrics.json payload."""
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "config.json"), "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(os.path.join(run_dir, "history.csv"), "w") as fh:
        fh.write("iteration,loss,train_acc,test_acc\n")
        for h in record.history:
            test = "" if h.test_accuracy is None else repr(h.test_accuracy)
            fh.write(f"{h.iteration},{h.loss!r},{h.train_accuracy!r},{test}\n")

    np.savetxt(os.path.join(run_dir, "weights.csv"), record.final_weights.W_aug, delimiter=",")
    save_conv_csv(conv, os.path.join(run_dir, "conv.csv"))

    rep, cm = evaluate_final(dataset, conv, record.final_weights.W_aug)
    payload = metrics_payload(rep, cm, record)
    with open(os.path.join(run_dir, "metrics.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def metrics_payload(rep: MetricReport, cm, record: RunRecord) -> dict:
    payload = rep.as_dict()
    payload["confusion_matrix"] = cm.counts.tolist()
    payload["train_accuracy"] = record.history[-1].train_accuracy
    payload["final_loss"] = record.history[-1].loss
    payload["loss_increase_fraction"] = record.loss_increase_fraction
    payload["timings"] = {k: float(v) for k, v in record.timings.items()}
    return payload


def load_json(run_dir, name: str) -> dict:
    with open(os.path.join(run_dir, name)) as fh:
        return json.load(fh)


def load_weights(run_dir) -> np.ndarray:
    return np.loadtxt(os.path.join(run_dir, "weights.csv"), delimiter=",", ndmin=2)


def load_conv(run_dir, spec: ConvSpec) -> FrozenConv:
    return load_conv_csv(os.path.join(run_dir, "conv.csv"), spec)


def is_complete(run_dir) -> bool:
    """A run is complete once its metrics.json exists."""
    return os.path.exists(os.path.join(run_dir, "metrics.json"))
