"""In-memory dataset: an n x p observation matrix with layer-ordered columns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumnError, DimensionMismatchError, MissingValueError
from .graph import normalize_layers


@dataclass(frozen=True)
class Dataset:
    """Observations with named columns and a layer partition over columns.

    Column j (0-based) holds vertex j+1; the layer partition refers to those
    1-based vertex indices and must be consistent with the column order.
    """

    values: np.ndarray
    names: tuple[str, ...]
    layers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "layers", normalize_layers(self.layers))
        if self.values.ndim != 2:
            raise DimensionMismatchError("data matrix must be 2-dimensional")
        if self.values.shape[1] != len(self.names):
            raise DimensionMismatchError(
                f"{self.values.shape[1]} columns but {len(self.names)} names"
            )
        covered = sorted(v for layer in self.layers for v in layer)
        if covered != list(range(1, len(self.names) + 1)):
            raise DimensionMismatchError("layer partition must cover columns 1..p in order")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def check_numeric(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise MissingValueError("data matrix contains missing or non-finite values")

    def check_no_constant_columns(self) -> None:
        sd = self.values.std(axis=0)
        bad = [self.names[j] for j in np.where(sd == 0.0)[0]]
        if bad:
            raise ConstantColumnError(f"constant columns: {bad}")

    def centered(self) -> "Dataset":
        return Dataset(self.values - self.values.mean(axis=0), self.names, self.layers)

    def standardized(self) -> "Dataset":
        self.check_no_constant_columns()
        centered = self.values - self.values.mean(axis=0)
        return Dataset(centered / centered.std(axis=0), self.names, self.layers)
