"""Label-generation rules: clean halfspace labels and the far-flip adversary.

The far-flip construction corrupts a clean homogeneous halfspace w* by
flipping every label in S \\ C, where

    S = { x : ||x|| >= Z }               (everything far from the origin)
    C = { x : <w*, x> * <w_perp, x> <= 0 }

and ``w_perp`` is the perpendicular of the tilted direction ``w_tilde``
(w* rotated by theta2 within a fixed 2D frame) chosen so that
<w*, w_perp> >= 0. C is the antipodally symmetric pair of angular sectors
spanning from w_tilde to the w*-boundary ray on either side; the flip set is
therefore odd under x -> -x, the property the whole lower-bound analysis
rests on. w* misclassifies exactly the flipped points, so its error equals
the flip mass, which is at most Pr[||x|| >= Z].

In 2D the frame is pinned: w_tilde = Rot(+theta2) w* (counterclockwise). In
higher dimensions the rotation happens in the plane spanned by w* and its
least-aligned coordinate axis.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import halfspace_labels, project_to_sphere, rotate2d

__all__ = [
    "NoiseModel",
    "LabeledExample",
    "LabeledDataset",
    "clean_labels",
    "far_flip",
    "random_flip",
    "label_clean",
    "region_membership",
    "apply_noise",
    "corrupt_labels",
    "make_dataset",
    "save_dataset_csv",
    "load_dataset_csv",
]


@dataclass(frozen=True)
class NoiseModel:
    """Rule mapping (w*, x, clean label) to the observed label."""

    kind: str                      # "clean" | "far_flip" | "random_flip"
    w_star: np.ndarray
    theta2: float = 0.0            # far_flip: angle from w* to w_tilde, in (0, pi/4]
    Z: float = math.inf            # far_flip: flip radius
    eta: float = 0.0               # random_flip: flip probability
    w_tilde: np.ndarray = field(default=None, repr=False)
    w_perp: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.w_star.shape[0]


def clean_labels(w_star) -> NoiseModel:
    return NoiseModel("clean", project_to_sphere(w_star))


def _tilt_frame(w_star: np.ndarray, theta2: float) -> tuple[np.ndarray, np.ndarray]:
    """(w_tilde, w_perp) for the far-flip regions.

    w_tilde = w* rotated by +theta2; w_perp is its in-plane perpendicular with
    <w*, w_perp> = sin(theta2) >= 0.
    """
    d = w_star.shape[0]
    if d == 2:
        w_tilde = rotate2d(w_star, theta2)
        w_perp = rotate2d(w_tilde, -math.pi / 2.0)
    else:
        axis = int(np.argmin(np.abs(w_star)))
        u = np.zeros(d)
        u[axis] = 1.0
        u = project_to_sphere(u - np.dot(u, w_star) * w_star)
        w_tilde = math.cos(theta2) * w_star + math.sin(theta2) * u
        w_perp = math.sin(theta2) * w_star - math.cos(theta2) * u
    if np.dot(w_star, w_perp) < 0:
        w_perp = -w_perp
    return w_tilde, w_perp


def far_flip(w_star, Z: float, theta2: float) -> NoiseModel:
    """Adversary flipping all labels in S \\ C (see module docstring)."""
    w_star = project_to_sphere(w_star)
    if not 0.0 < theta2 <= math.pi / 4.0:
        raise ValueError("far_flip needs 0 < theta2 <= pi/4")
    if not Z > 0.0:
        raise ValueError("far_flip needs Z > 0")
    w_tilde, w_perp = _tilt_frame(w_star, theta2)
    return NoiseModel(
        "far_flip", w_star, theta2=float(theta2), Z=float(Z), w_tilde=w_tilde, w_perp=w_perp
    )


def random_flip(w_star, eta: float) -> NoiseModel:
    """Baseline symmetric noise: each label flips independently w.p. eta."""
    if not 0.0 <= eta < 0.5:
        raise ValueError("random_flip needs 0 <= eta < 1/2")
    return NoiseModel("random_flip", project_to_sphere(w_star), eta=float(eta))


def label_clean(w_star, x) -> int:
    """sign(<w*, x>), the uncorrupted label."""
    w_star = np.asarray(w_star, dtype=float)
    x = np.asarray(x, dtype=float)
    if w_star.shape != x.shape:
        raise ValueError(f"dimension mismatch: {w_star.shape} vs {x.shape}")
    return 1 if float(np.dot(w_star, x)) >= 0.0 else -1


def _memberships(model: NoiseModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    in_s = np.sqrt(np.sum(X * X, axis=1)) >= model.Z
    in_c = (X @ model.w_star) * (X @ model.w_perp) <= 0.0
    return in_c, in_s


def region_membership(model: NoiseModel, x) -> tuple[bool, bool]:
    """(in_C, in_S) for a single 2D point under a far_flip model."""
    if model.kind != "far_flip":
        raise ValueError("region membership is defined for far_flip models only")
    if model.dim != 2:
        raise ValueError("region_membership is the 2D diagnostic; model must be 2D")
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise ValueError("expected a single point in R^2")
    in_c, in_s = _memberships(model, x[None, :])
    return bool(in_c[0]), bool(in_s[0])


def apply_noise(model: NoiseModel, x, clean_y: int, rng: np.random.Generator | None = None) -> int:
    """Observed label for one example; clean_y must be label_clean(w*, x)."""
    x = np.asarray(x, dtype=float)
    if model.kind == "clean":
        return int(clean_y)
    if model.kind == "far_flip":
        in_c, in_s = _memberships(model, x[None, :])
        return int(-clean_y) if (in_s[0] and not in_c[0]) else int(clean_y)
    if rng is None:
        raise ValueError("random_flip noise needs an explicit rng")
    return int(-clean_y) if rng.random() < model.eta else int(clean_y)


def corrupt_labels(
    model: NoiseModel, X: np.ndarray, clean_y: np.ndarray, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized apply_noise over rows; returns (observed labels, flip mask)."""
    if model.kind == "clean":
        flip = np.zeros(X.shape[0], dtype=bool)
    elif model.kind == "far_flip":
        in_c, in_s = _memberships(model, X)
        flip = in_s & ~in_c
    else:
        if rng is None:
            raise ValueError("random_flip noise needs an explicit rng")
        flip = rng.random(X.shape[0]) < model.eta
    return np.where(flip, -clean_y, clean_y), flip


class LabeledExample(NamedTuple):
    """One point with its observed +/-1 label."""

    x: np.ndarray
    y: float


@dataclass
class LabeledDataset:
    """Points, observed labels and the mask of corrupted labels."""

    x: np.ndarray          # (n, d)
    y: np.ndarray          # (n,), +/-1 floats
    flipped: np.ndarray    # (n,) bool, True where y != sign(<w*, x>)

    def __post_init__(self):
        if not (len(self.x) == len(self.y) == len(self.flipped)):
            raise ValueError("fields must have equal length")
        if len(self.y) and not np.all(np.abs(self.y) == 1.0):
            raise ValueError("labels must be exactly +/-1")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("points must be finite in every coordinate")

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, i: int) -> LabeledExample:
        return LabeledExample(self.x[i], float(self.y[i]))

    @property
    def noise_rate(self) -> float:
        return float(np.mean(self.flipped))


def make_dataset(spec, model: NoiseModel, n: int, seed: int) -> LabeledDataset:
    """Sample n points, label with w*, then corrupt; deterministic per seed."""
    from .distributions import sample

    if spec.dim != model.dim:
        raise ValueError(f"dimension mismatch: spec d={spec.dim}, noise d={model.dim}")
    X = sample(spec, n, seed)
    clean = halfspace_labels(model.w_star, X)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xFEED)))
    y, flip = corrupt_labels(model, X, clean, rng)
    return LabeledDataset(X, y, flip)


def save_dataset_csv(dataset: LabeledDataset, path) -> None:
    """Columns x_1..x_d, y, flipped (0/1)."""
    d = dataset.x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{i + 1}" for i in range(d)] + ["y", "flipped"])
        for row, label, flip in zip(dataset.x, dataset.y, dataset.flipped):
            writer.writerow([repr(float(v)) for v in row] + [int(label), int(flip)])


def load_dataset_csv(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len(header) - 2
        xs, ys, flips = [], [], []
        for row in reader:
            xs.append([float(v) for v in row[:d]])
            ys.append(float(row[d]))
            flips.append(bool(int(row[d + 1])))
    return LabeledDataset(np.asarray(xs), np.asarray(ys), np.asarray(flips))
