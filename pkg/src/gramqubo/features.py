"""Frozen random convolutional features: the one-time forward pass.

A single valid (no padding, stride 1) cross-correlation layer with
He-initialized frozen kernels, ReLU, and non-overlapping s x s max
pooling.  Pooled maps are flattened in (row, column, filter) order and
augmented with a trailing bias column of ones.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class ConvSpec:
    """Architecture of the frozen layer; stride is fixed at 1."""

    input_h: int = 8
    input_w: int = 8
    kernel: int = 3
    pool: int = 2
    filters: int = 2

    def __post_init__(self):
        if self.kernel < 1 or self.pool < 1 or self.filters < 1:
            raise ValueError(f"invalid conv spec {self}")
        if (self.input_h - self.kernel + 1) < self.pool:
            raise ValueError(f"conv output smaller than pooling window: {self}")


@dataclass(frozen=True)
class FrozenConv:
    """Immutable random kernels and biases for feature extraction."""

    weights: np.ndarray  # (filters, k, k)
    biases: np.ndarray  # (filters,)
    spec: ConvSpec
    init_seed: int


@dataclass(frozen=True)
class FeatureMatrix:
    """N x (d+1) feature matrix whose last column is identically one."""

    values: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.values.shape[1] - 1


def feature_dim(spec: ConvSpec) -> int:
    """Flattened feature count: pooled height * pooled width * filters."""
    h_pool = (spec.input_h - spec.kernel + 1) // spec.pool
    w_pool = (spec.input_w - spec.kernel + 1) // spec.pool
    return h_pool * w_pool * spec.filters


def init_frozen_conv(spec: ConvSpec, seed: int) -> FrozenConv:
    """Draw frozen kernels from N(0, 2/k^2) with zero biases."""
    rng = np.random.default_rng(seed)
    std = np.sqrt(2.0 / (spec.kernel * spec.kernel))
    weights = rng.normal(0.0, std, size=(spec.filters, spec.kernel, spec.kernel))
    biases = np.zeros(spec.filters)
    return FrozenConv(weights=weights, biases=biases, spec=spec, init_seed=seed)


def extract_features(conv: FrozenConv, images: Sequence) -> FeatureMatrix:
    """Forward pass over a batch of images.

    Per image: per-filter cross-correlation plus bias, ReLU, s x s max
    pool with stride s (trailing rows/columns that do not fill a window
    are dropped), flatten in (row, column, filter) order, append 1.
    """
    spec = conv.spec
    stack = np.stack([np.asarray(getattr(im, "pixels", im), dtype=np.float64) for im in images])
    if stack.shape[1:] != (spec.input_h, spec.input_w):
        raise ValueError(
            f"images are {stack.shape[1:]}, conv spec expects "
            f"({spec.input_h}, {spec.input_w})"
        )
    windows = sliding_window_view(stack, (spec.kernel, spec.kernel), axis=(1, 2))
    # (N, oh, ow, filters): valid cross-correlation, no kernel flip
    conv_out = np.tensordot(windows, conv.weights, axes=([3, 4], [1, 2]))
    conv_out += conv.biases
    np.maximum(conv_out, 0.0, out=conv_out)
    s = spec.pool
    oh, ow = conv_out.shape[1], conv_out.shape[2]
    ph, pw = oh // s, ow // s
    pooled = (
        conv_out[:, : ph * s, : pw * s, :]
        .reshape(stack.shape[0], ph, s, pw, s, spec.filters)
        .max(axis=(2, 4))
    )
    flat = pooled.reshape(stack.shape[0], -1)
    values = np.concatenate([flat, np.ones((stack.shape[0], 1))], axis=1)
    return FeatureMatrix(values=values)


def save_conv_csv(conv: FrozenConv, path) -> None:
    """One row per filter: the k*k kernel entries (row-major) then the bias."""
    rows = np.concatenate(
        [conv.weights.reshape(conv.spec.filters, -1), conv.biases[:, None]], axis=1
    )
    np.savetxt(path, rows, delimiter=",")


def load_conv_csv(path, spec: ConvSpec, init_seed: int = -1) -> FrozenConv:
    """Rebuild a FrozenConv from :func:`save_conv_csv` output."""
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    if rows.shape != (spec.filters, spec.kernel * spec.kernel + 1):
        raise ValueError(f"conv csv shape {rows.shape} does not match spec {spec}")
    weights = rows[:, :-1].reshape(spec.filters, spec.kernel, spec.kernel)
    return FrozenConv(weights=weights, biases=rows[:, -1].copy(), spec=spec, init_seed=init_seed)
