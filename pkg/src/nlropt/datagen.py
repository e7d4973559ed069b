"""Synthetic two-Gaussian classification data, splitting, and CSV plumbing.

The synthetic task draws class c in {-1, +1} from N(c * (separation/2) * u_c,
I_d), then projects every sample to the unit sphere; labels come from the
generating Gaussian, so the task is noisy but balanced. The centre direction
depends on the class: u_+ is the normalized all-ones vector and u_- negates
its second half. A single shared direction would place the two clouds at
exact sign-flips of each other, and a unit-norm amplitude encoding cannot
see a global sign, so distinct directions are what keep the classes
distinguishable downstream. No other preprocessing is applied anywhere: the
CSV loader normalizes feature vectors and nothing else.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .ansatz import Sample


class CsvFormatError(ValueError):
    """Malformed dataset file; the message names the offending row."""


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    dimension: int
    provenance: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        for sample in self.samples:
            if sample.features.size != self.dimension:
                raise ValueError(
                    f"sample dimension {sample.features.size} != dataset dimension"
                    f" {self.dimension}"
                )
            if abs(np.linalg.norm(sample.features) - 1.0) >= 1e-12:
                raise ValueError("dataset features must be unit-norm")

    def __len__(self) -> int:
        return len(self.samples)

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples])


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ArithmeticError("drew a zero-norm sample; cannot normalize")
    return rows / norms


def class_directions(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit centre directions for the +1 and -1 classes.

    The +1 direction is all-ones; the -1 direction negates the second half
    of the coordinates (orthogonal to the first for even d). The two are
    deliberately not collinear: sign-flipped clouds would become identical
    after unit-norm encoding, which ignores a global sign.
    """
    u_pos = np.ones(d) / np.sqrt(d)
    u_neg = np.ones(d)
    u_neg[d // 2 :] = -1.0
    return u_pos, u_neg / np.sqrt(d)


def synthetic_gaussian_dataset(
    d: int, n: int, separation: float = 2.0, seed: int = 0
) -> Dataset:
    """Two unit-covariance Gaussians at c * (separation/2) along per-class
    centre directions (see class_directions).

    Classes are exactly balanced; an odd n gives the +1 class the extra
    sample. Samples are ordered +1 block then -1 block (consumers shuffle).
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not separation > 0:
        raise ValueError(f"separation must be positive, got {separation}")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    n_pos = n - n // 2
    n_neg = n // 2
    u_pos, u_neg = class_directions(d)
    pos = _normalize_rows(rng.normal(size=(n_pos, d)) + (separation / 2.0) * u_pos)
    neg = _normalize_rows(rng.normal(size=(n_neg, d)) - (separation / 2.0) * u_neg)
    samples = [Sample(features=row, label=1) for row in pos]
    samples += [Sample(features=row, label=-1) for row in neg]
    return Dataset(
        samples=tuple(samples),
        dimension=d,
        provenance=f"synthetic(seed={seed}, separation={separation})",
    )


def split_train_test(
    dataset: Dataset, train_fraction: float, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Stratified shuffle split preserving class proportions within one sample.

    Each side keeps the original sample order; the same seed reproduces the
    same split exactly.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(
            f"train_fraction must be in (0, 1), got {train_fraction}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    labels = dataset.labels()
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in (-1, 1):
        indices = np.flatnonzero(labels == label)
        if indices.size == 0:
            continue
        shuffled = rng.permutation(indices)
        cut = round(train_fraction * indices.size)
        train_idx.extend(shuffled[:cut])
        test_idx.extend(shuffled[cut:])
    if not train_idx or not test_idx:
        raise ValueError(
            f"split with fraction {train_fraction} would leave a side empty"
        )
    make = lambda idx, tag: Dataset(
        samples=tuple(dataset.samples[i] for i in sorted(idx)),
        dimension=dataset.dimension,
        provenance=f"{dataset.provenance} [{tag}]",
    )
    return make(train_idx, "train"), make(test_idx, "test")


def _parse_label(cell: str, row_number: int) -> int:
    try:
        value = float(cell)
    except ValueError:
        raise CsvFormatError(
            f"row {row_number}: label {cell!r} is not numeric"
        ) from None
    if value not in (-1.0, 0.0, 1.0):
        raise CsvFormatError(
            f"row {row_number}: label must be in {{-1, +1}} or {{0, 1}}, got {cell!r}"
        )
    return 1 if value == 1.0 else -1


def load_csv_dataset(path: str) -> Dataset:
    """Read rows of d feature floats plus a label column.

    The header `f0,...,f{d-1},label` is optional; labels may use {0, 1}
    (remapped to {-1, +1}). Features are re-normalized to unit norm. Row
    numbers in error messages are 1-based file lines.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(handle)) if row]
    if rows and any(not _is_float(cell) for cell in rows[0][1]):
        header, rows = rows[0], rows[1:]
        width = len(header[1])
    elif rows:
        width = len(rows[0][1])
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    if width < 2:
        raise CsvFormatError(f"{path}: rows need at least one feature and a label")
    dimension = width - 1
    samples = []
    for row_number, row in rows:
        if len(row) != width:
            raise CsvFormatError(
                f"row {row_number}: expected {width} fields, got {len(row)}"
            )
        try:
            features = np.array([float(cell) for cell in row[:-1]])
        except ValueError:
            raise CsvFormatError(
                f"row {row_number}: non-numeric feature cell"
            ) from None
        if not np.all(np.isfinite(features)):
            raise CsvFormatError(f"row {row_number}: non-finite feature value")
        norm = np.linalg.norm(features)
        if norm == 0:
            raise CsvFormatError(f"row {row_number}: zero feature vector")
        label = _parse_label(row[-1], row_number)
        samples.append(Sample(features=features / norm, label=label))
    return Dataset(
        samples=tuple(samples), dimension=dimension, provenance=f"csv({path})"
    )


def save_csv_dataset(dataset: Dataset, path: str) -> None:
    """Write the loader's format: header f0..f{d-1},label, full-precision floats."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(dataset.dimension)] + ["label"])
        for sample in dataset.samples:
            writer.writerow(
                ["%.17g" % x for x in sample.features] + [str(sample.label)]
            )


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True
