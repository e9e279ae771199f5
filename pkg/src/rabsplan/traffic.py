"""Spatio-temporal traffic field over a grid of candidate grasping locations.

The area-wide mean volume follows a 24 h sinusoid superposition and the
per-location volumes are lognormal samples around it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# (amplitude, angular frequency, phase) of the daily traffic profile
_BASE_VOLUME = 173.29
_HARMONICS = (
    (89.83, math.pi / 12.0, 3.08),
    (52.6, math.pi / 6.0, 2.08),
    (16.68, math.pi / 4.0, 1.13),
)

MEAN_CORRECTIONS = ("literal", "variance")


@dataclass(frozen=True)
class GridSpec:
    """Evenly spaced square lattice of candidate locations (row-major)."""

    width_m: float = 2000.0
    height_m: float = 2000.0
    points_per_side: int = 11
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.points_per_side < 1:
            raise ValueError("points_per_side must be >= 1")
        if not (self.width_m >= 0 and self.height_m >= 0):
            raise ValueError("grid extent must be non-negative")

    @property
    def n_candidates(self) -> int:
        return self.points_per_side**2

    def coordinates(self) -> np.ndarray:
        """(M, 2) array of candidate coordinates in meters."""
        p = self.points_per_side
        if p == 1:
            return np.array([self.origin], dtype=float)
        dx = self.width_m / (p - 1)
        dy = self.height_m / (p - 1)
        rows, cols = np.divmod(np.arange(p * p), p)
        return np.column_stack(
            (self.origin[0] + dx * cols, self.origin[1] + dy * rows)
        ).astype(float)


@dataclass(frozen=True)
class TrafficParams:
    sigma: float
    horizon_epochs: int
    epoch_duration_s: float = 3600.0
    seed: int = 0
    mean_correction: str = "literal"

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma <= 0:
            raise ValueError(f"sigma must be finite and > 0, got {self.sigma!r}")
        if self.horizon_epochs < 1:
            raise ValueError("horizon_epochs must be >= 1")
        if not self.epoch_duration_s > 0:
            raise ValueError("epoch_duration_s must be > 0")
        if self.mean_correction not in MEAN_CORRECTIONS:
            raise ValueError(f"mean_correction must be one of {MEAN_CORRECTIONS}")


@dataclass(frozen=True, eq=False)
class TrafficField:
    """Volumes V_m(n) plus the per-epoch best candidate.

    ``volumes`` is (M, N). Epoch ``n`` here is zero-based; epoch 1 of the
    planning problem is column 0.
    """

    volumes: np.ndarray
    coordinates: np.ndarray
    best_volume: np.ndarray = field(init=False)
    best_index: np.ndarray = field(init=False)
    best_location: np.ndarray = field(init=False)

    def __post_init__(self):
        vol = np.array(self.volumes, dtype=float)
        coords = np.array(self.coordinates, dtype=float).reshape(-1, 2)
        if vol.ndim != 2:
            raise ValueError("volumes must be a 2-D (M, N) array")
        if vol.shape[0] != coords.shape[0]:
            raise ValueError(
                f"{vol.shape[0]} volume rows but {coords.shape[0]} coordinates"
            )
        vol.setflags(write=False)
        coords.setflags(write=False)
        object.__setattr__(self, "volumes", vol)
        object.__setattr__(self, "coordinates", coords)
        best_volume, best_index, best_location = best_series(vol, coords)
        for arr in (best_volume, best_index, best_location):
            arr.setflags(write=False)
        object.__setattr__(self, "best_volume", best_volume)
        object.__setattr__(self, "best_index", best_index)
        object.__setattr__(self, "best_location", best_location)

    @property
    def n_candidates(self) -> int:
        return self.volumes.shape[0]

    @property
    def n_epochs(self) -> int:
        return self.volumes.shape[1]

    def truncate(self, n_epochs: int) -> "TrafficField":
        """First ``n_epochs`` columns of this field."""
        if not 1 <= n_epochs <= self.n_epochs:
            raise ValueError(f"cannot truncate {self.n_epochs} epochs to {n_epochs}")
        return TrafficField(self.volumes[:, :n_epochs], self.coordinates)

    def to_csv(self, path) -> None:
        """Write one ``epoch,candidate,x_m,y_m,volume`` row per (n, m)."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "candidate", "x_m", "y_m", "volume"])
            for n in range(self.n_epochs):
                for m in range(self.n_candidates):
                    x, y = self.coordinates[m]
                    writer.writerow(
                        [n, m, repr(float(x)), repr(float(y)), repr(float(self.volumes[m, n]))]
                    )


def mean_traffic(n):
    """Area-wide mean traffic volume at epoch (hour) ``n``.

    Accepts a scalar or an array of epoch indices.
    """
    n = np.asarray(n, dtype=float)
    total = np.full_like(n, _BASE_VOLUME)
    for amp, omega, phase in _HARMONICS:
        total = total + amp * np.sin(omega * n + phase)
    return float(total) if total.ndim == 0 else total


def lognormal_location(mean_volume, sigma: float, mean_correction: str = "literal"):
    """Mean of the underlying normal for a given area-wide volume.

    ``"literal"`` subtracts sigma/2, ``"variance"`` subtracts sigma**2/2 (the
    mean-preserving choice).
    """
    if mean_correction == "literal":
        shift = 0.5 * sigma
    elif mean_correction == "variance":
        shift = 0.5 * sigma * sigma
    else:
        raise ValueError(f"unknown mean_correction {mean_correction!r}")
    return np.log(mean_volume) - shift


def sample_field(grid: GridSpec, params: TrafficParams) -> TrafficField:
    """Draw a traffic field.

    Uses ``numpy.random.default_rng(seed)`` (PCG64). Standard normals are
    drawn as one (M, N) block in C order, i.e. candidate-major and
    epoch-minor, then mapped through exp(mu_n + sigma * z).
    """
    coords = grid.coordinates()
    n = np.arange(params.horizon_epochs)
    mu = lognormal_location(mean_traffic(n), params.sigma, params.mean_correction)
    rng = np.random.default_rng(params.seed)
    z = rng.standard_normal((coords.shape[0], params.horizon_epochs))
    volumes = np.exp(mu[None, :] + params.sigma * z)
    return TrafficField(volumes, coords)


def best_series(volumes, coordinates=None):
    """Per-epoch maximum volume, its candidate index and its coordinates.

    ``volumes`` is either a :class:`TrafficField` or an (M, N) array, in which
    case ``coordinates`` must be given. Ties go to the lowest candidate index.
    """
    if isinstance(volumes, TrafficField):
        volumes, coordinates = volumes.volumes, volumes.coordinates
    volumes = np.asarray(volumes, dtype=float)
    coordinates = np.asarray(coordinates, dtype=float).reshape(-1, 2)
    idx = np.argmax(volumes, axis=0)
    best = volumes[idx, np.arange(volumes.shape[1])]
    return best.copy(), idx.astype(np.int64), coordinates[idx].copy()
