"""
Classical image pipeline: IDX corpus reader, resize, and the 16x16 -> 128
feature map (flatten, normalize, add adjacent entries).
"""
import gzip
import logging
import struct
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException, DataIOException
from qcl.services.datasets.types import Sample, TaskDataset, TaskKind

logger = logging.getLogger(__name__)

RESAMPLE_METHODS = {
    "nearest": Image.Resampling.NEAREST,
    "bilinear": Image.Resampling.BILINEAR,
    "bicubic": Image.Resampling.BICUBIC,
}

_IDX_DTYPES = {
    0x08: np.uint8,
    0x09: np.int8,
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def read_idx(path: Union[str, Path]) -> np.ndarray:
    """Read an IDX file (optionally gzip-compressed) into an array."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        with opener(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise DataIOException(f"cannot read IDX file {path}: {e}")
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0 or raw[2] not in _IDX_DTYPES:
        raise DataIOException(f"{path} is not an IDX file")
    ndim = raw[3]
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=_IDX_DTYPES[raw[2]], offset=4 + 4 * ndim)
    if data.size != int(np.prod(dims)):
        raise DataIOException(f"{path}: header promises {dims}, payload has {data.size} values")
    return data.reshape(dims)


def load_idx_corpus(images_path: Union[str, Path], labels_path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray]:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise DataIOException(
            f"image/label files disagree: {images.shape} vs {labels.shape}"
        )
    logger.info(f"Loaded {images.shape[0]} images of {images.shape[1]}x{images.shape[2]}")
    return images.astype(float), labels.astype(int)


def resize_image(pixels: np.ndarray, size: Optional[int] = None, method: Optional[str] = None) -> np.ndarray:
    size = size or settings.IMAGE_SIZE
    method = (method or settings.IMAGE_RESAMPLE).lower()
    if method not in RESAMPLE_METHODS:
        raise ArgumentException(f"unknown resample method {method!r}", details={"allowed": list(RESAMPLE_METHODS)})
    arr = np.asarray(pixels, dtype=np.float32)
    if arr.ndim != 2:
        raise ArgumentException(f"expected a 2-D grayscale image, got shape {arr.shape}")
    if arr.shape == (size, size):
        return arr.astype(float)
    img = Image.fromarray(arr).resize((size, size), RESAMPLE_METHODS[method])
    return np.asarray(img, dtype=float)


def normalize_vector(v: np.ndarray, mode: Optional[str] = None) -> np.ndarray:
    """unit_norm: divide by the Euclidean norm; max_scale: divide by the largest entry."""
    mode = (mode or settings.IMAGE_NORMALIZATION).lower()
    if mode == "unit_norm":
        scale = float(np.linalg.norm(v))
    elif mode == "max_scale":
        scale = float(np.max(np.abs(v))) if v.size else 0.0
    else:
        raise ArgumentException(f"unknown normalization {mode!r}")
    return v / scale if scale > 0 else v.copy()


def image_to_128(pixels: np.ndarray, normalization: Optional[str] = None) -> np.ndarray:
    """16x16 grid -> 256 vector -> normalized -> v[2i] + v[2i+1]."""
    arr = np.asarray(pixels, dtype=float)
    if arr.size != 256 or arr.ndim not in (1, 2) or (arr.ndim == 2 and arr.shape != (16, 16)):
        raise ArgumentException(f"expected a 16x16 image, got shape {arr.shape}")
    if np.any(arr < 0):
        raise ArgumentException("pixel values must be non-negative")
    v = normalize_vector(arr.reshape(256), normalization)
    return v[0::2] + v[1::2]


def _pick(
    indices: np.ndarray, count: int, rng: np.random.Generator, cls: int
) -> np.ndarray:
    if indices.size < count:
        raise ArgumentException(
            f"class {cls} has {indices.size} images, {count} requested"
        )
    return rng.choice(indices, size=count, replace=False)


def build_image_task(
    images: np.ndarray,
    labels: np.ndarray,
    classes: Optional[Sequence[int]] = None,
    n_train: int = 500,
    n_test: int = 100,
    seed: int = 0,
    resample: Optional[str] = None,
    normalization: Optional[str] = None,
    name: str = "image",
) -> TaskDataset:
    """
    Two-class image task: ``classes[0]`` gets label 0, ``classes[1]`` label 1,
    balanced within each split.
    """
    classes = tuple(classes or settings.IMAGE_CLASSES)
    if len(classes) != 2:
        raise ArgumentException(f"exactly two source classes required, got {classes}")
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)

    splits = {"train": [], "test": []}
    for label, cls in enumerate(classes):
        pool = np.flatnonzero(labels == cls)
        n_tr = n_train // 2 + (n_train % 2 if label == 0 else 0)
        n_te = n_test // 2 + (n_test % 2 if label == 0 else 0)
        chosen = _pick(pool, n_tr + n_te, rng, cls)
        for split, idx in (("train", chosen[:n_tr]), ("test", chosen[n_tr:])):
            for i in idx:
                feats = image_to_128(resize_image(images[i], 16, resample), normalization)
                splits[split].append(Sample.from_class(feats, label))

    for split in splits.values():
        order = rng.permutation(len(split))
        split[:] = [split[i] for i in order]
    task = TaskDataset(
        train=splits["train"],
        test=splits["test"],
        task_kind=TaskKind.IMAGE_128,
        name=name,
        metadata={"classes": list(classes), "seed": seed, "resample": resample or settings.IMAGE_RESAMPLE},
    )
    logger.info(f"Built image task {name}: classes={classes}, counts={task.class_counts()}")
    return task.validate()
