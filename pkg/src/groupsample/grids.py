"""Quadrature grids over chart boxes and complex grid functions.

A grid covers the half-open box [lo, hi) in the model's internal coordinates
with nodes ``lo + i*h`` (``h = (hi-lo)/shape``); the quadrature weight of a
node is the cell volume times the Haar density there, so the weights sum to
the Haar measure of the box exactly for unimodular models.

Functions are complex-valued node arrays and are treated as compactly
supported on the box: interpolation outside returns zero.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .groups import GroupModel, model_from_id

__all__ = ["Grid", "GridFunction", "interpolate"]


@dataclass(frozen=True)
class Grid:
    model: GroupModel
    lo: np.ndarray
    hi: np.ndarray
    shape: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def regular(cls, model, lo, hi, shape):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if np.isscalar(shape) or np.ndim(shape) == 0:
            shape = (int(shape),) * model.dim
        shape = tuple(int(n) for n in shape)
        if len(shape) != model.dim or lo.size != model.dim or hi.size != model.dim:
            raise ValueError("box and shape must match the model dimension")
        if np.any(hi <= lo) or any(n < 2 for n in shape):
            raise ValueError("need hi > lo and at least 2 nodes per axis")
        return cls(model, lo, hi, shape)

    @property
    def dim(self):
        return self.model.dim

    @property
    def spacings(self) -> np.ndarray:
        return (self.hi - self.lo) / np.array(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis(self, i) -> np.ndarray:
        h = self.spacings[i]
        return self.lo[i] + h * np.arange(self.shape[i])

    def nodes_internal(self) -> np.ndarray:
        """All nodes in internal coords, shape (*grid.shape, dim)."""
        if "nodes" not in self._cache:
            mesh = np.meshgrid(*[self.axis(i) for i in range(self.dim)], indexing="ij")
            self._cache["nodes"] = np.stack(mesh, axis=-1)
        return self._cache["nodes"]

    def points(self) -> np.ndarray:
        """All nodes in chart coords."""
        return self.model.from_internal(self.nodes_internal())

    def weights(self) -> np.ndarray:
        """Quadrature weights per node, shape = grid.shape."""
        if "weights" not in self._cache:
            cell = float(np.prod(self.spacings))
            dens = self.model.haar_density_internal(self.nodes_internal())
            self._cache["weights"] = cell * dens
        return self._cache["weights"]

    def content_hash(self) -> str:
        payload = json.dumps(
            {
                "model": self.model.model_id(),
                "lo": self.lo.tolist(),
                "hi": self.hi.tolist(),
                "shape": list(self.shape),
            },
            sort_keys=True,
        ).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def dilated(self, t: float) -> "Grid":
        """The image grid under delta_t (models with dilations only)."""
        lo = self.model.to_internal(self.model.dilate(t, self.model.from_internal(self.lo)))
        hi = self.model.to_internal(self.model.dilate(t, self.model.from_internal(self.hi)))
        return Grid.regular(self.model, lo, hi, self.shape)

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.model.model_id() == other.model.model_id()
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
            and self.shape == other.shape
        )

    def __hash__(self):
        return hash(self.content_hash())


def interpolate(values: np.ndarray, grid: Grid, pts_internal: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of node values at points (internal coords).

    Points outside the box evaluate to zero (compact-support convention).
    ``values`` may carry leading batch axes: shape (..., *grid.shape).
    """
    pts = np.asarray(pts_internal, dtype=float)
    squeeze = pts.ndim == 1
    pts = np.atleast_2d(pts)
    flat = pts.reshape(-1, grid.dim)

    h = grid.spacings
    u = (flat - grid.lo) / h
    i0 = np.floor(u).astype(np.int64)
    frac = u - i0

    inside = np.ones(len(flat), dtype=bool)
    for d in range(grid.dim):
        inside &= (u[:, d] >= -1.0) & (u[:, d] <= grid.shape[d])

    batch = values.shape[: values.ndim - grid.dim]
    out = np.zeros(batch + (len(flat),), dtype=values.dtype)
    vflat = values.reshape(batch + (grid.size,))

    idx_in = np.nonzero(inside)[0]
    if idx_in.size:
        i0i = i0[idx_in]
        fri = frac[idx_in]
        strides = np.cumprod((grid.shape + (1,))[::-1])[::-1][1:]
        acc = np.zeros(batch + (idx_in.size,), dtype=values.dtype)
        for corner in range(1 << grid.dim):
            w = np.ones(idx_in.size)
            lin = np.zeros(idx_in.size, dtype=np.int64)
            valid = np.ones(idx_in.size, dtype=bool)
            for d in range(grid.dim):
                bit = (corner >> d) & 1
                idx = i0i[:, d] + bit
                w = w * (fri[:, d] if bit else 1.0 - fri[:, d])
                ok = (idx >= 0) & (idx < grid.shape[d])
                valid &= ok
                lin = lin + np.clip(idx, 0, grid.shape[d] - 1) * strides[d]
            w = np.where(valid, w, 0.0)
            acc = acc + vflat[..., lin] * w
        out[..., idx_in] = acc

    out = out.reshape(batch + pts.shape[:-1])
    if squeeze:
        out = out[..., 0]
    return out


class GridFunction:
    """Complex-valued function sampled on a grid."""

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        self.grid = grid
        self.values = values.astype(np.complex128, copy=False)

    @classmethod
    def from_callable(cls, grid: Grid, fn, chart: bool = True):
        pts = grid.points() if chart else grid.nodes_internal()
        coords = np.moveaxis(pts, -1, 0)
        return cls(grid, np.asarray(fn(*coords), dtype=np.complex128))

    # -- norms ---------------------------------------------------------------

    def norm_l2(self, mask=None) -> float:
        w = self.grid.weights()
        v2 = np.abs(self.values) ** 2
        if mask is not None:
            v2 = v2 * mask
        return float(np.sqrt(np.sum(w * v2)))

    def norm_l1(self, mask=None) -> float:
        w = self.grid.weights()
        v = np.abs(self.values)
        if mask is not None:
            v = v * mask
        return float(np.sum(w * v))

    def norm_sup(self, mask=None) -> float:
        v = np.abs(self.values)
        if mask is not None:
            v = np.where(mask, v, 0.0)
        return float(v.max())

    def norms(self):
        """(L1, L2, sup) by weighted quadrature."""
        return self.norm_l1(), self.norm_l2(), self.norm_sup()

    def inner(self, other: "GridFunction") -> complex:
        if self.grid != other.grid:
            raise ValueError("grid mismatch")
        return complex(np.sum(self.grid.weights() * self.values * np.conj(other.values)))

    # -- evaluation ----------------------------------------------------------

    def at(self, points_chart) -> np.ndarray:
        """Multilinear interpolation at chart-coordinate points."""
        u = self.grid.model.to_internal(points_chart)
        return interpolate(self.values, self.grid, u)

    def __add__(self, other):
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    # -- serialization -------------------------------------------------------

    MAGIC = b"GSGF"

    def save(self, path):
        header = json.dumps(
            {
                "model": self.grid.model.model_id(),
                "lo": self.grid.lo.tolist(),
                "hi": self.grid.hi.tolist(),
                "shape": list(self.grid.shape),
            }
        ).encode()
        with open(path, "wb") as fh:
            fh.write(self.MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            data = np.ascontiguousarray(self.values, dtype="<c16")
            fh.write(data.tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(4) != cls.MAGIC:
                raise ValueError("not a grid-function file")
            (hlen,) = struct.unpack("<I", fh.read(4))
            meta = json.loads(fh.read(hlen).decode())
            grid = Grid.regular(
                model_from_id(meta["model"]), meta["lo"], meta["hi"], tuple(meta["shape"])
            )
            values = np.frombuffer(fh.read(), dtype="<c16").reshape(grid.shape)
        return cls(grid, values.copy())

    def to_csv(self, path):
        pts = self.grid.points().reshape(-1, self.grid.dim)
        vals = self.values.reshape(-1)
        cols = [pts[:, i] for i in range(self.grid.dim)] + [vals.real, vals.imag]
        header = ",".join(
            [f"x{i}" for i in range(self.grid.dim)] + ["re", "im"]
        )
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="")
