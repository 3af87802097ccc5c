"""Dataset ingestion: IDX and CIFAR-10 binaries, digits CSV, box
downsampling to 8x8, and seeded per-class subsampling.

All loaders normalize pixel intensities into [0, 1] (byte data by 255,
digits by its native maximum of 16).  Color input is reduced to BT.601
luminance.  Gzipped IDX files are handled transparently by suffix.
"""

import glob
import gzip
import os
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

GRAY_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R BT.601 luminance

_CIFAR_RECORD = 3073  # 1 label byte + 3 * 1024 channel bytes


@dataclass(frozen=True)
class RawImage:
    """A 2-D grid of intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.ndim != 2 or min(self.pixels.shape) < 1:
            raise ValueError(f"image must be 2-D and non-empty, got {self.pixels.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class SubsampleSpec:
    """Per-class train/test quotas and the seed that fixes the selection."""

    train_per_class: int
    test_per_class: int
    seed: int

    def __post_init__(self):
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise ValueError(f"per-class counts must be >= 1, got {self}")


@dataclass
class Dataset:
    """Prepared 8x8 train/test split with exact per-class quotas."""

    train_images: list
    train_labels: np.ndarray
    test_images: list
    test_labels: np.ndarray
    num_classes: int
    name: str = "dataset"

    def __post_init__(self):
        self.train_labels = np.asarray(self.train_labels, dtype=np.int64)
        self.test_labels = np.asarray(self.test_labels, dtype=np.int64)
        for labels in (self.train_labels, self.test_labels):
            if labels.size and labels.max() >= self.num_classes:
                raise ValueError("label out of range for num_classes")


def _open_maybe_gz(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx_array(path, expect_ndim: int) -> np.ndarray:
    """Read one IDX file into a uint8 array, validating the header.

    Errors report the byte offset (of the uncompressed stream) at which
    the problem was detected.
    """
    with _open_maybe_gz(path) as fh:
        header = fh.read(4)
        if len(header) < 4:
            raise ValueError(f"{path}: truncated IDX header at byte offset {len(header)}")
        zero1, zero2, dtype, ndim = header
        if zero1 != 0 or zero2 != 0 or dtype != 0x08:
            raise ValueError(
                f"{path}: malformed IDX magic {header.hex()} at byte offset 0 "
                "(expected 00 00 08 <ndim>)"
            )
        if ndim != expect_ndim:
            raise ValueError(
                f"{path}: dimension mismatch at byte offset 3: "
                f"got {ndim} dimensions, expected {expect_ndim}"
            )
        dim_bytes = fh.read(4 * ndim)
        if len(dim_bytes) < 4 * ndim:
            raise ValueError(
                f"{path}: truncated IDX dimensions at byte offset {4 + len(dim_bytes)}"
            )
        dims = struct.unpack(f">{ndim}I", dim_bytes)
        count = int(np.prod(dims))
        data = fh.read(count)
        if len(data) < count:
            raise ValueError(
                f"{path}: truncated IDX data at byte offset "
                f"{4 + 4 * ndim + len(data)} (expected {count} bytes)"
            )
    return np.frombuffer(data, dtype=np.uint8).reshape(dims)


def load_idx(images_path, labels_path) -> tuple[list[RawImage], list[int]]:
    """Load paired IDX image/label files, scaling pixels into [0, 1]."""
    images = _read_idx_array(images_path, expect_ndim=3)
    labels = _read_idx_array(labels_path, expect_ndim=1)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"image/label count mismatch: {images.shape[0]} images, "
            f"{labels.shape[0]} labels"
        )
    return [RawImage(im.astype(np.float64) / 255.0) for im in images], [
        int(v) for v in labels
    ]


def load_cifar10(batch_path) -> tuple[list[RawImage], list[int]]:
    """Load one CIFAR-10 binary batch as grayscale luminance images."""
    raw = np.fromfile(batch_path, dtype=np.uint8)
    if raw.size == 0 or raw.size % _CIFAR_RECORD != 0:
        raise ValueError(
            f"{batch_path}: size {raw.size} is not a multiple of {_CIFAR_RECORD}"
        )
    records = raw.reshape(-1, _CIFAR_RECORD)
    labels = records[:, 0]
    if labels.max(initial=0) > 9:
        raise ValueError(f"{batch_path}: label out of range [0, 10)")
    planes = records[:, 1:].reshape(-1, 3, 32, 32).astype(np.float64)
    gray = (
        GRAY_WEIGHTS[0] * planes[:, 0]
        + GRAY_WEIGHTS[1] * planes[:, 1]
        + GRAY_WEIGHTS[2] * planes[:, 2]
    ) / 255.0
    return [RawImage(g) for g in gray], [int(v) for v in labels]


def load_digits_csv(path) -> tuple[list[RawImage], list[int]]:
    """Load the 8x8 digits CSV: 64 integer pixels in [0, 16] then a label."""
    images = []
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 65:
                raise ValueError(f"{path}: line {lineno}: expected 65 columns, got {len(parts)}")
            try:
                values = [int(float(v)) for v in parts]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value")
            pixels = np.array(values[:64], dtype=np.float64)
            label = values[64]
            if pixels.min() < 0 or pixels.max() > 16:
                raise ValueError(f"{path}: line {lineno}: pixel outside [0, 16]")
            if not 0 <= label < 10:
                raise ValueError(f"{path}: line {lineno}: label {label} outside [0, 10)")
            images.append(RawImage(pixels.reshape(8, 8) / 16.0))
            labels.append(label)
    return images, labels


def _box_weights(src: int, dst: int) -> np.ndarray:
    """Overlap-fraction matrix mapping src pixels onto dst box cells.

    Row i holds each source pixel's covered fraction of output cell i,
    normalized so rows sum to one; exact for non-divisible ratios.
    """
    w = src / dst
    weights = np.zeros((dst, src))
    for i in range(dst):
        lo, hi = i * w, (i + 1) * w
        for r in range(int(np.floor(lo)), min(src, int(np.ceil(hi)))):
            overlap = min(hi, r + 1) - max(lo, r)
            if overlap > 0:
                weights[i, r] = overlap / w
    return weights


def downsample_to_8x8(img: RawImage) -> RawImage:
    """Area-weighted box average down to 8x8."""
    if img.height < 8 or img.width < 8:
        raise ValueError(f"cannot downsample {img.height}x{img.width} image to 8x8")
    if img.height == 8 and img.width == 8:
        return img
    R = _box_weights(img.height, 8)
    C = _box_weights(img.width, 8)
    return RawImage(R @ img.pixels @ C.T)


def _class_quota_indices(
    labels: np.ndarray, quotas: Sequence[int], num_classes: int, rng
) -> list[np.ndarray]:
    """Shuffle each class's indices and split off consecutive quota blocks.

    Returns one index array per quota, each holding quota[k] indices per
    class; blocks for the same class never overlap.
    """
    labels = np.asarray(labels)
    picks = [[] for _ in quotas]
    need = int(np.sum(quotas))
    for c in range(num_classes):
        idx = np.flatnonzero(labels == c)
        if idx.size < need:
            raise ValueError(
                f"class {c} has {idx.size} examples, need {need} "
                f"(train+test quotas)"
            )
        rng.shuffle(idx)
        start = 0
        for k, quota in enumerate(quotas):
            picks[k].append(idx[start : start + quota])
            start += quota
    return [np.concatenate(p) for p in picks]


def subsample(
    images: Sequence[RawImage],
    labels: Sequence[int],
    spec: SubsampleSpec,
    num_classes: int,
    name: str = "dataset",
) -> Dataset:
    """Draw disjoint train/test quotas per class from a single pool.

    Each class's index list is shuffled once with a generator seeded from
    ``spec.seed``; the first ``train_per_class`` indices become training
    examples and the next ``test_per_class`` the test examples.
    """
    rng = np.random.default_rng(spec.seed)
    train_idx, test_idx = _class_quota_indices(
        labels, (spec.train_per_class, spec.test_per_class), num_classes, rng
    )
    labels = np.asarray(labels)
    return Dataset(
        train_images=[images[i] for i in train_idx],
        train_labels=labels[train_idx],
        test_images=[images[i] for i in test_idx],
        test_labels=labels[test_idx],
        num_classes=num_classes,
        name=name,
    )


def subsample_split(
    train_images: Sequence[RawImage],
    train_labels: Sequence[int],
    test_images: Sequence[RawImage],
    test_labels: Sequence[int],
    spec: SubsampleSpec,
    num_classes: int,
    name: str = "dataset",
) -> Dataset:
    """Draw per-class quotas from a dataset's official train/test splits."""
    rng = np.random.default_rng(spec.seed)
    (train_idx,) = _class_quota_indices(
        train_labels, (spec.train_per_class,), num_classes, rng
    )
    (test_idx,) = _class_quota_indices(
        test_labels, (spec.test_per_class,), num_classes, rng
    )
    train_labels = np.asarray(train_labels)
    test_labels = np.asarray(test_labels)
    return Dataset(
        train_images=[train_images[i] for i in train_idx],
        train_labels=train_labels[train_idx],
        test_images=[test_images[i] for i in test_idx],
        test_labels=test_labels[test_idx],
        num_classes=num_classes,
        name=name,
    )


DATASET_NAMES = ("digits", "mnist", "fashion-mnist", "emnist", "kmnist", "cifar10")

_IDX_PATTERNS = {
    "train_images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    "test_images": ("t10k-images-idx3-ubyte", "test-images-idx3-ubyte"),
    "test_labels": ("t10k-labels-idx1-ubyte", "test-labels-idx1-ubyte"),
}


def _find_idx_file(directory, stems) -> str:
    for stem in stems:
        for suffix in ("", ".gz"):
            hits = sorted(glob.glob(os.path.join(directory, f"*{stem}{suffix}")))
            if hits:
                return hits[0]
    raise FileNotFoundError(f"no file matching {stems} under {directory}")


def _load_idx_split(directory):
    train = load_idx(
        _find_idx_file(directory, _IDX_PATTERNS["train_images"]),
        _find_idx_file(directory, _IDX_PATTERNS["train_labels"]),
    )
    test = load_idx(
        _find_idx_file(directory, _IDX_PATTERNS["test_images"]),
        _find_idx_file(directory, _IDX_PATTERNS["test_labels"]),
    )
    return train, test


def _load_cifar_split(directory):
    train_images, train_labels = [], []
    for k in range(1, 6):
        ims, labs = load_cifar10(os.path.join(directory, f"data_batch_{k}.bin"))
        train_images.extend(ims)
        train_labels.extend(labs)
    test = load_cifar10(os.path.join(directory, "test_batch.bin"))
    return (train_images, train_labels), test


def _keep_first_ten_letters(images, labels):
    # EMNIST-letters labels run 1..26; keep A..J and shift to 0..9
    kept = [(im, lab - 1) for im, lab in zip(images, labels) if 1 <= lab <= 10]
    return [im for im, _ in kept], [lab for _, lab in kept]


def prepare_dataset(name: str, path, spec: SubsampleSpec, num_classes: int = 10) -> Dataset:
    """Load a named dataset, subsample per-class quotas, and downsample to 8x8.

    ``path`` is the digits CSV file for "digits", the directory holding
    the four IDX files for the MNIST-family sets, or the directory of
    CIFAR-10 binary batches.  Datasets with official splits draw train
    and test quotas from their respective splits; digits draws both from
    one seeded shuffle of the full pool.
    """
    name = name.lower()
    if name == "digits":
        images, labels = load_digits_csv(path)
        ds = subsample(images, labels, spec, num_classes, name=name)
    elif name in ("mnist", "fashion-mnist", "kmnist", "emnist"):
        (tr_im, tr_lab), (te_im, te_lab) = _load_idx_split(path)
        if name == "emnist":
            tr_im, tr_lab = _keep_first_ten_letters(tr_im, tr_lab)
            te_im, te_lab = _keep_first_ten_letters(te_im, te_lab)
        ds = subsample_split(tr_im, tr_lab, te_im, te_lab, spec, num_classes, name=name)
    elif name == "cifar10":
        (tr_im, tr_lab), (te_im, te_lab) = _load_cifar_split(path)
        ds = subsample_split(tr_im, tr_lab, te_im, te_lab, spec, num_classes, name=name)
    else:
        raise ValueError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")
    ds.train_images = [downsample_to_8x8(im) for im in ds.train_images]
    ds.test_images = [downsample_to_8x8(im) for im in ds.test_images]
    return ds
