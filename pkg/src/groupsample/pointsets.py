"""Separated/dense sampling sets, their certification, cell partitions, and
quasi-lattice constructions for the semidirect-product models.

Region-level set operations are discretized on a verification grid:
"measure zero overlap" becomes "no shared grid cell".  All outputs are
deterministic (fixed enumeration order: homogeneous norm, then lexicographic).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .groups import GroupModel, EuclideanModel, HeisenbergModel, AffineModel, model_from_id
from .grids import Grid

__all__ = [
    "PointSet",
    "Certificate",
    "Partition",
    "greedy_separated_dense",
    "verify_separated",
    "verify_dense",
    "build_partition",
    "quasilattice_semidirect",
    "tiling_check",
    "dilate_set",
]


@dataclass
class PointSet:
    """Finite candidate sampling set with the internal-coordinate box it covers."""

    model: GroupModel
    points: np.ndarray  # (N, dim) chart coordinates
    lo: np.ndarray  # region box, internal coordinates
    hi: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.points.shape[1] != self.model.dim:
            raise ValueError("point dimension mismatch")
        # pairwise distinct
        uniq = np.unique(self.points, axis=0)
        if len(uniq) != len(self.points):
            raise ValueError("points must be pairwise distinct")

    def __len__(self):
        return len(self.points)

    def sorted_order(self) -> np.ndarray:
        """Enumeration order: gauge ascending, ties lexicographic."""
        gauge = self.model.gauge(self.points)
        keys = tuple(self.points[:, d] for d in reversed(range(self.model.dim)))
        return np.lexsort(keys + (gauge,))

    def to_csv(self, path):
        header = ",".join(f"x{i}" for i in range(self.model.dim))
        np.savetxt(path, self.points, delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path, model, lo=None, hi=None):
        pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        u = model.to_internal(pts)
        if lo is None:
            lo = u.min(axis=0)
        if hi is None:
            hi = u.max(axis=0) + 1e-9
        return cls(model, pts, lo, hi)


@dataclass
class Certificate:
    kind: str  # "separated" | "dense" | "quasi-lattice"
    radius: float
    passed: bool
    witness: object = None
    n_checked: int = 0
    detail: dict = field(default_factory=dict)

    def to_json(self):
        wit = self.witness
        if isinstance(wit, np.ndarray):
            wit = wit.tolist()
        elif isinstance(wit, tuple):
            wit = [w.tolist() if isinstance(w, np.ndarray) else w for w in wit]
        return json.dumps(
            {
                "kind": self.kind,
                "radius": self.radius,
                "passed": bool(self.passed),
                "witness": wit,
                "n_checked": self.n_checked,
                **self.detail,
            }
        )


def _pairwise_gauge(model, pts, chunk=512):
    """d[i, j] = gauge(p_j^-1 p_i)."""
    n = len(pts)
    inv = model.inv(pts)
    out = np.empty((n, n))
    for s in range(0, n, chunk):
        blk = pts[s : s + chunk]
        out[s : s + chunk] = model.gauge(model.mul(inv[None, :, :], blk[:, None, :]))
    return out


def _dist_to_set(model, x, pts, chunk=2048):
    """d[k, i] = gauge(p_i^-1 x_k), chunked over x."""
    inv = model.inv(pts)
    out = np.empty((len(x), len(pts)))
    for s in range(0, len(x), chunk):
        blk = x[s : s + chunk]
        out[s : s + chunk] = model.gauge(model.mul(inv[None, :, :], blk[:, None, :]))
    return out


def greedy_separated_dense(model, lo, hi, r, shape=None):
    """Maximal r-separated subset of a candidate grid over [lo, hi).

    Greedy maximality makes the output B_r-dense on the candidate grid while
    pairwise gauge distances stay >= r, hence the translated balls of radius
    r/(2 C) are disjoint (C the quasi-triangle constant).
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if shape is None:
        shape = tuple(max(2, int(np.ceil((h - l) / (r / 10.0)))) for l, h in zip(lo, hi))
    grid = Grid.regular(model, lo, hi, shape)
    if np.max(grid.spacings) >= r / 8.0:
        raise ValueError(
            f"candidate grid too coarse: spacing {np.max(grid.spacings):g} must be < r/8 = {r / 8.0:g}"
        )
    cand = grid.points().reshape(-1, model.dim)
    # deterministic scan order
    order = np.lexsort(
        tuple(cand[:, d] for d in reversed(range(model.dim))) + (model.gauge(cand),)
    )
    cand = cand[order]

    accepted = []
    alive = np.ones(len(cand), dtype=bool)
    while True:
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        g = cand[idx[0]]
        accepted.append(g)
        d = model.gauge(model.mul(model.inv(g)[None, :], cand[idx]))
        alive[idx[d < r]] = False
    return PointSet(model, np.array(accepted), lo, hi)


def verify_separated(ps: PointSet, s: float, n_ball=64) -> Certificate:
    """Pairwise disjointness of the gauge balls of radius s around the points.

    Fast path: gauge distance >= 2 C s is sufficient.  Pairs below that are
    checked by sampling one ball and testing membership in the other.
    """
    if s <= 0:
        raise ValueError("radius must be positive")
    model = ps.model
    c_tri = getattr(model, "triangle_constant", 1.0)
    d = _pairwise_gauge(model, ps.points)
    np.fill_diagonal(d, np.inf)
    suspect = np.argwhere(d < 2.0 * c_tri * s)
    n_exact = 0
    for i, j in suspect:
        if i >= j:
            continue
        n_exact += 1
        if _balls_overlap(model, ps.points[i], ps.points[j], s, n_ball):
            return Certificate(
                "separated", s, False, witness=(ps.points[i], ps.points[j]),
                n_checked=len(ps), detail={"exact_pairs": n_exact},
            )
    return Certificate("separated", s, True, n_checked=len(ps), detail={"exact_pairs": n_exact})


def _balls_overlap(model, g1, g2, s, n_ball):
    from .analysis import _sphere_directions  # shared direction sample

    if hasattr(model, "dilate") and not isinstance(model, AffineModel):
        dirs = _sphere_directions(model, n_ball)
        zs = [model.dilate(s * f, dirs) for f in (0.999, 0.75, 0.5, 0.25)]
        zs.append(np.zeros((1, model.dim)))
        z = np.concatenate(zs)
    else:
        # coordinate box gauge: sample the internal box
        rng = np.random.default_rng(0)
        z = model.from_internal(rng.uniform(-s, s, size=(4 * n_ball, model.dim)))
    pts = model.mul(g1[None, :], z)
    dd = model.gauge(model.mul(model.inv(g2)[None, :], pts))
    return bool(np.any(dd < s - 1e-12))


def verify_dense(ps: PointSet, r: float, shape=64) -> Certificate:
    """Every grid point of the region lies within gauge distance r of the set."""
    if r <= 0:
        raise ValueError("radius must be positive")
    grid = Grid.regular(ps.model, ps.lo, ps.hi, shape)
    x = grid.points().reshape(-1, ps.model.dim)
    d = _dist_to_set(ps.model, x, ps.points).min(axis=1)
    k = int(np.argmax(d))
    passed = bool(d[k] < r)
    return Certificate(
        "dense", r, passed, witness=None if passed else x[k],
        n_checked=len(x), detail={"worst_distance": float(d[k])},
    )


@dataclass
class Partition:
    """Grid-cell assignment realizing the recursive cells W subset V_gamma subset U."""

    pointset: PointSet
    grid: Grid
    assignment: np.ndarray  # int index into pointset.points, shape = grid.shape
    order: np.ndarray  # enumeration order used by the recursion
    w_radius: float
    u_radius: float

    def cell_measures(self) -> np.ndarray:
        w = self.grid.weights().reshape(-1)
        a = self.assignment.reshape(-1)
        out = np.zeros(len(self.pointset))
        np.add.at(out, a, w)
        return out

    def check_invariants(self) -> dict:
        """Disjoint cover and W subset V_gamma subset U at grid resolution."""
        a = self.assignment.reshape(-1)
        covered = bool(np.all(a >= 0))
        x = self.grid.points().reshape(-1, self.grid.dim)
        d = _dist_to_set(self.pointset.model, x, self.pointset.points)
        own = d[np.arange(len(a)), a]
        inside_u = bool(np.all(own < self.u_radius + 1e-12))
        # every cell strictly inside gamma B_W belongs to gamma
        near = d < self.w_radius - 1e-12
        w_ok = True
        for k in range(len(self.pointset)):
            cells = np.nonzero(near[:, k])[0]
            if cells.size and not np.all(a[cells] == k):
                w_ok = False
                break
        return {"covered": covered, "inside_u": inside_u, "w_contained": w_ok}

    def to_json(self):
        meas = self.cell_measures()
        return json.dumps(
            {
                "n_points": len(self.pointset),
                "w_radius": self.w_radius,
                "u_radius": self.u_radius,
                "grid_shape": list(self.grid.shape),
                "cell_measures": meas.tolist(),
                **{k: bool(v) for k, v in self.check_invariants().items()},
            }
        )


def build_partition(ps: PointSet, w_radius, u_radius, shape=64) -> Partition:
    """Recursive cell construction: seed each point with its W-ball, then hand
    the remaining region to the points in enumeration order, each taking what
    is left of its U-ball.
    """
    if not 0 < w_radius <= u_radius:
        raise ValueError("need 0 < W radius <= U radius")
    model = ps.model
    grid = Grid.regular(model, ps.lo, ps.hi, shape)
    x = grid.points().reshape(-1, model.dim)
    d = _dist_to_set(model, x, ps.points)

    assignment = np.full(len(x), -1, dtype=np.int64)
    # W-balls first; separation certificate makes these disjoint, numerically
    # a shared cell goes to the nearer point
    in_w = d < w_radius
    any_w = in_w.any(axis=1)
    dd = np.where(in_w, d, np.inf)
    assignment[any_w] = np.argmin(dd[any_w], axis=1)

    order = ps.sorted_order()
    for k in order:
        free = (assignment < 0) & (d[:, k] < u_radius)
        assignment[free] = k
    if np.any(assignment < 0):
        bad = x[np.argmax(assignment < 0)]
        raise ValueError(
            f"region not covered by U-balls (density precondition violated near {bad})"
        )
    return Partition(ps, grid, assignment.reshape(grid.shape), order, w_radius, u_radius)


# ---------------------------------------------------------------------------
# quasi-lattices
# ---------------------------------------------------------------------------


def quasilattice_semidirect(model, base_range, ell_range):
    """Inductive quasi-lattice for the semidirect-product models.

    The lattice of the normal factor is transported by the action of the
    quotient parameter: affine gets the hyperbolic set {(e^l, e^l m)},
    the plane gets Z^2, and heis1 gets the integer-type set {(p, q, r/2)}
    (a subgroup: the central components close under the group law).
    Returns (PointSet, (c_lo, c_hi)) with the complement box in internal
    coordinates.
    """
    b0, b1 = int(base_range[0]), int(base_range[1])
    l0, l1 = int(ell_range[0]), int(ell_range[1])
    base = np.arange(b0, b1 + 1)
    ells = np.arange(l0, l1 + 1)
    if isinstance(model, AffineModel):
        M, L = np.meshgrid(base, ells, indexing="ij")
        a = np.exp(L.astype(float))
        pts = np.column_stack([a.ravel(), (a * M).ravel()])
        # row l covers b in [b0 e^l, (b1+1) e^l); the box below is inside
        # every row's coverage, so the tiling over it is exact
        lo = np.array([float(l0), b0 * math.exp(l0)])
        hi = np.array([float(l1 + 1), (b1 + 1) * math.exp(l0)])
        c_box = (np.zeros(2), np.ones(2))
        return PointSet(model, pts, lo, hi), c_box
    if isinstance(model, EuclideanModel) and model.dim == 2:
        P, Q = np.meshgrid(base, ells, indexing="ij")
        pts = np.column_stack([P.ravel(), Q.ravel()]).astype(float)
        lo = np.array([float(b0), float(l0)])
        hi = np.array([float(b1 + 1), float(l1 + 1)])
        return PointSet(model, pts, lo, hi), (np.zeros(2), np.ones(2))
    if isinstance(model, HeisenbergModel):
        P, Q, R = np.meshgrid(base, base, ells, indexing="ij")
        pts = np.column_stack([P.ravel(), Q.ravel(), R.ravel() / 2.0]).astype(float)
        # the central chart coordinate of gamma^-1 x is sheared by
        # (p c_y - q c_x)/2, so the exactly-tiled t-box shrinks by the
        # largest base index magnitude on each side
        shear = float(max(abs(b0), abs(b1)))
        lo = np.array([float(b0), float(b0), l0 / 2.0 + shear])
        hi = np.array([float(b1 + 1), float(b1 + 1), (l1 + 1) / 2.0 - shear])
        if lo[2] >= hi[2]:
            raise ValueError(
                "central range too small for the base range: widen ell_range"
            )
        c_box = (np.zeros(3), np.array([1.0, 1.0, 0.5]))
        return PointSet(model, pts, lo, hi), c_box
    raise ValueError("no semidirect construction for this model")


def tiling_check(ps: PointSet, c_lo, c_hi, shape=48, margin=None) -> Certificate:
    """Gamma C covers the region disjointly: every interior grid node lies in
    exactly one translate gamma C (C a half-open internal-coordinate box)."""
    model = ps.model
    c_lo = np.asarray(c_lo, dtype=float)
    c_hi = np.asarray(c_hi, dtype=float)
    if margin is None:
        margin = 1.5 * np.max(c_hi - c_lo)
    margin = np.broadcast_to(np.asarray(margin, dtype=float), (model.dim,))
    grid = Grid.regular(model, ps.lo, ps.hi, shape)
    u = grid.nodes_internal().reshape(-1, model.dim)
    interior = np.all((u >= ps.lo + margin) & (u < ps.hi - margin), axis=1)
    x = model.from_internal(u[interior])
    counts = np.zeros(len(x), dtype=np.int64)
    inv = model.inv(ps.points)
    for g in inv:
        q = model.to_internal(model.mul(g[None, :], x))
        inside = np.all((q >= c_lo - 1e-9) & (q < c_hi - 1e-9), axis=1)
        counts += inside
    passed = bool(np.all(counts == 1)) and len(x) > 0
    k = int(np.argmax(counts != 1)) if (not passed and len(x)) else 0
    return Certificate(
        "quasi-lattice", float(np.max(c_hi - c_lo)), passed,
        witness=None if (passed or not len(x)) else x[k],
        n_checked=int(len(x)),
        detail={
            "min_count": int(counts.min()) if len(x) else 0,
            "max_count": int(counts.max()) if len(x) else 0,
        },
    )


def hyperbolic_lattice(model, sigma, beta, ell_range, b_extent) -> PointSet:
    """Affine lattice {(e^{l sigma}, e^{l sigma} m beta)} with |b| <= b_extent.

    Dense for the internal-coordinate box with half-widths
    (sigma/2, beta/2): the scale index l pins ln(a) within sigma/2 and the
    shift index m pins the rescaled shift within beta/2.  Halving (sigma,
    beta) refines the lattice.
    """
    if not isinstance(model, AffineModel):
        raise ValueError("hyperbolic lattice lives on the affine group")
    pts = []
    for ell in range(int(ell_range[0]), int(ell_range[1]) + 1):
        a = math.exp(ell * sigma)
        m_max = int(math.floor(b_extent / (a * beta)))
        ms = np.arange(-m_max, m_max + 1)
        pts.append(np.column_stack([np.full(len(ms), a), a * beta * ms]))
    pts = np.concatenate(pts)
    lo = np.array([ell_range[0] * sigma, -b_extent])
    hi = np.array([(ell_range[1] + 1) * sigma, b_extent + 1e-9])
    return PointSet(model, pts, lo, hi)


def dilate_set(ps: PointSet, r: float) -> PointSet:
    """Pointwise dilation; certified radii scale by r with the norm."""
    model = ps.model
    pts = model.dilate(r, ps.points)
    lo = model.to_internal(model.dilate(r, model.from_internal(ps.lo)))
    hi = model.to_internal(model.dilate(r, model.from_internal(ps.hi)))
    return PointSet(model, pts, lo, hi)
