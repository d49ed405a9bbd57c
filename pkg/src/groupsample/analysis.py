"""Group convolution, oscillation, left-invariant derivatives, the
sub-Laplacian eigensolver, and estimation of the oscillation constants.

The discrete band space at bandwidth ``omega`` is the span of the
eigenvectors of the discrete sub-Laplacian (Dirichlet on the chart box) with
eigenvalue at most ``omega``; every bandwidth-related check in this package
is a statement about that discrete space.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.signal import fftconvolve

from .grids import Grid, GridFunction, interpolate
from .groups import EuclideanModel, HeisenbergModel, AffineModel, UnsupportedModelError

__all__ = [
    "convolve",
    "oscillation",
    "ball_offsets",
    "osc_conv_check",
    "vector_field_apply",
    "apply_multiindex",
    "homogeneity_degree",
    "sublaplacian_matrix",
    "sublaplacian_spectrum",
    "SpectralProjector",
    "random_bandlimited",
    "estimate_constants",
    "ConstantEstimates",
    "oscillation_scaling_check",
    "ball_volume",
    "projector_dilation_angle",
]


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------


def _fft_shift_indices(grid: Grid):
    """Integer index of the origin in each axis, or None if not aligned."""
    h = grid.spacings
    k = -grid.lo / h
    k_round = np.rint(k)
    if np.max(np.abs(k - k_round)) > 1e-9:
        return None
    return k_round.astype(int)


def convolve(f: GridFunction, g: GridFunction, method: str = "auto") -> GridFunction:
    """Group convolution (f*g)(x) = int f(y) g(y^-1 x) dy on a shared grid.

    On R^n grids whose nodes contain the origin the fast path uses a
    zero-padded FFT (identical to the direct quadrature sum up to rounding).
    Elsewhere the sum is evaluated directly with multilinear interpolation;
    values outside the box count as zero.
    """
    if f.grid != g.grid:
        raise ValueError("convolve requires a shared grid")
    grid = f.grid
    if method == "auto":
        use_fft = isinstance(grid.model, EuclideanModel) and _fft_shift_indices(grid) is not None
        method = "fft" if use_fft else "direct"

    if method == "fft":
        shift = _fft_shift_indices(grid)
        if shift is None:
            raise ValueError("fft path requires the origin on the node lattice")
        cell = float(np.prod(grid.spacings))
        full = fftconvolve(f.values, g.values, mode="full") * cell
        sl = tuple(slice(s, s + n) for s, n in zip(shift, grid.shape))
        return GridFunction(grid, full[sl])

    if method != "direct":
        raise ValueError(f"unknown convolution method {method!r}")
    out = convolve_at(f, g, grid.points().reshape(-1, grid.dim))
    return GridFunction(grid, out.reshape(grid.shape))


def convolve_at(f: GridFunction, g: GridFunction, points_chart, chunk: int = 256):
    """Direct quadrature evaluation of (f*g) at arbitrary chart points."""
    grid = f.grid
    model = grid.model
    w = grid.weights().reshape(-1)
    fv = f.values.reshape(-1)
    supp = np.nonzero(np.abs(fv) > 0)[0]
    z = grid.points().reshape(-1, grid.dim)[supp]
    zinv = model.inv(z)
    coef = (w[supp] * fv[supp])[:, None]
    pts = np.asarray(points_chart, dtype=float).reshape(-1, grid.dim)
    out = np.zeros(len(pts), dtype=np.complex128)
    for start in range(0, len(pts), chunk):
        blk = pts[start : start + chunk]
        # q[z, x] = z^-1 x
        q = model.mul(zinv[:, None, :], blk[None, :, :])
        gv = interpolate(g.values, grid, model.to_internal(q))
        out[start : start + chunk] = np.sum(coef * gv, axis=0)
    return out


# ---------------------------------------------------------------------------
# oscillation
# ---------------------------------------------------------------------------


def _sphere_directions(model, count):
    """Deterministic sample of the unit sphere of the homogeneous norm."""
    if isinstance(model, EuclideanModel):
        n = model.dim
        if n == 1:
            return np.array([[1.0], [-1.0]])
        if n == 2:
            th = 2 * np.pi * np.arange(count) / count
            return np.column_stack([np.cos(th), np.sin(th)])
        # Fibonacci sphere
        i = np.arange(count)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        zc = 1 - 2 * (i + 0.5) / count
        rr = np.sqrt(1 - zc**2)
        pts = np.column_stack([rr * np.cos(phi), rr * np.sin(phi), zc])
        return pts[:, : n] if n <= 3 else pts  # n > 3 unsupported upstream
    if isinstance(model, HeisenbergModel):
        # |(x,y,t)| = rho on the slice: t = rho^2 s/4, (x,y) = rho(1-s^2)^(1/4) e(phi)
        n_phi = max(4, int(np.sqrt(count)))
        n_s = max(3, count // n_phi)
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        s = np.linspace(-1.0, 1.0, n_s)
        P, S = np.meshgrid(phi, s, indexing="ij")
        pr = (1 - S**2) ** 0.25
        pts = np.stack(
            [pr * np.cos(P), pr * np.sin(P), S / 4.0], axis=-1
        ).reshape(-1, 3)
        return pts
    raise UnsupportedModelError("no homogeneous sphere for this model")


def ball_offsets(model, r, spacings, n_dirs=32, shells=(0.999, 0.5), max_grid_offsets=512):
    """Deterministic sample of the punctured ball B_r used for oscillation sups.

    Combines all node-lattice offsets with 0 < |y| < r (capped) with
    off-lattice shells at the listed fractions of r.
    """
    spacings = np.asarray(spacings, dtype=float)
    offs = []
    # node-lattice offsets inside the ball
    reach = []
    for d in range(model.dim):
        # extent of the ball along axis d
        e = np.zeros(model.dim)
        e[d] = 1.0
        if isinstance(model, HeisenbergModel) and d == 2:
            ext = r**2 / 4.0
        else:
            ext = r
        reach.append(int(math.floor(ext / spacings[d])))
    if all(k >= 0 for k in reach) and np.prod([2 * k + 1 for k in reach]) <= 8 * max_grid_offsets:
        axes = [np.arange(-k, k + 1) * spacings[d] for d, k in enumerate(reach)]
        mesh = np.meshgrid(*axes, indexing="ij")
        cand = np.stack(mesh, axis=-1).reshape(-1, model.dim)
        nrm = model.norm(cand)
        cand = cand[(nrm > 0) & (nrm < r)]
        if len(cand) > max_grid_offsets:
            stride = int(math.ceil(len(cand) / max_grid_offsets))
            cand = cand[::stride]
        offs.append(cand)
    # shell samples
    dirs = _sphere_directions(model, n_dirs)
    for frac in shells:
        offs.append(model.dilate(r * frac, dirs))
    out = np.concatenate(offs, axis=0) if offs else np.empty((0, model.dim))
    return out


def _integer_shift(values, shift):
    """Array translated by ``shift`` node steps, zero-filled at the edges."""
    out = np.zeros_like(values)
    src = []
    dst = []
    for k, n in zip(shift, values.shape):
        if abs(k) >= n:
            return out
        if k >= 0:
            dst.append(slice(k, n))
            src.append(slice(0, n - k))
        else:
            dst.append(slice(0, n + k))
            src.append(slice(-k, n))
    out[tuple(dst)] = values[tuple(src)]
    return out


def oscillation(
    f: GridFunction,
    r: float,
    offsets=None,
    n_dirs: int = 32,
    points_internal=None,
) -> GridFunction | np.ndarray:
    """Discrete modulus of continuity sup_{y in B_r} |f(x) - f(x y^-1)|.

    The sup runs over a deterministic sample of the ball (node offsets plus
    interpolated boundary shells); it is therefore an under-estimate of the
    continuum sup, which every inequality check here accounts for.  Explicit
    ``offsets`` (chart coordinates) override the ball sample.  With
    ``points_internal`` the oscillation is returned only at those points (as
    a plain array) instead of on the whole grid.
    """
    if r <= 0:
        raise ValueError("oscillation radius must be positive")
    grid = f.grid
    model = grid.model
    if offsets is None:
        offsets = ball_offsets(model, r, grid.spacings, n_dirs=n_dirs)
    offsets = np.asarray(offsets, dtype=float)
    if len(offsets) == 0:
        raise ValueError("empty oscillation offset sample")

    on_grid = points_internal is None
    if on_grid and isinstance(model, EuclideanModel):
        # exact node-shift fast path for lattice-aligned offsets
        out = np.zeros(grid.shape)
        rest = []
        h = grid.spacings
        for y in offsets:
            k = y / h
            kr = np.rint(k)
            if np.max(np.abs(k - kr)) < 1e-9:
                sh = _integer_shift(f.values, kr.astype(int))
                np.maximum(out, np.abs(f.values - sh), out=out)
            else:
                rest.append(y)
        if rest:
            x = grid.nodes_internal().reshape(-1, grid.dim)
            base = f.values.reshape(-1)
            acc = out.reshape(-1).copy()
            for y in rest:
                fv = interpolate(f.values, grid, x - np.asarray(y)[None, :])
                np.maximum(acc, np.abs(base - fv), out=acc)
            out = acc.reshape(grid.shape)
        return GridFunction(grid, out)

    if on_grid:
        pts_int = grid.nodes_internal().reshape(-1, grid.dim)
        base = f.values.reshape(-1)
    else:
        pts_int = np.asarray(points_internal, dtype=float).reshape(-1, grid.dim)
        base = interpolate(f.values, grid, pts_int)
    x = model.from_internal(pts_int)
    out = np.zeros(len(pts_int))
    for y in offsets:
        q = model.mul(x, model.inv(y))
        fv = interpolate(f.values, grid, model.to_internal(q))
        np.maximum(out, np.abs(base - fv), out=out)
    if on_grid:
        return GridFunction(grid, out.reshape(grid.shape))
    return out


def osc_conv_check(
    f: GridFunction,
    g: GridFunction,
    r: float,
    n_sample: int = 400,
    n_dirs: int = 32,
    seed: int = 0,
):
    """Check osc_U(f*g) <= |f| * osc_U(g) pointwise, U = B_r.

    Both sides are evaluated from the same interpolant of g and the same
    finite offset sample, at a deterministic sample of evaluation points, so
    the reported violation isolates the inequality itself from discretization
    differences.  Returns a dict with the max violation and scale info.
    """
    grid = f.grid
    if g.grid != grid:
        raise ValueError("shared grid required")
    model = grid.model
    offsets = ball_offsets(model, r, grid.spacings, n_dirs=n_dirs)

    w = grid.weights().reshape(-1)
    fv = f.values.reshape(-1)
    supp = np.nonzero(np.abs(fv) > 1e-14 * max(np.abs(fv).max(), 1e-300))[0]
    z = grid.points().reshape(-1, grid.dim)[supp]
    zinv = model.inv(z)
    coef = w[supp] * fv[supp]

    all_pts = grid.points().reshape(-1, grid.dim)
    if len(all_pts) > n_sample:
        rng = np.random.default_rng(seed)
        sel = rng.choice(len(all_pts), size=n_sample, replace=False)
        xs = all_pts[sel]
    else:
        xs = all_pts

    # q0[z, x] = z^-1 x
    q0 = model.mul(zinv[:, None, :], xs[None, :, :])
    g0 = interpolate(g.values, grid, model.to_internal(q0))
    osc_g = np.zeros(q0.shape[:2])
    lhs = np.zeros((len(offsets), len(xs)))
    for k, y in enumerate(offsets):
        q1 = model.mul(q0, model.inv(y))
        g1 = interpolate(g.values, grid, model.to_internal(q1))
        diff = g0 - g1
        np.maximum(osc_g, np.abs(diff), out=osc_g)
        lhs[k] = np.abs(np.sum(coef[:, None] * diff, axis=0))
    rhs = np.sum(np.abs(coef)[:, None] * osc_g, axis=0)
    violation = np.max(lhs - rhs[None, :])
    return {
        "max_violation": float(violation),
        "rhs_scale": float(rhs.max()) if rhs.size else 0.0,
        "n_points": len(xs),
        "n_offsets": len(offsets),
    }


# ---------------------------------------------------------------------------
# left-invariant vector fields and the sub-Laplacian
# ---------------------------------------------------------------------------


def _field_coefficients(model, i, pts):
    """Chart coefficients c_d(g) of the i-th left-invariant basis field."""
    if isinstance(model, EuclideanModel):
        c = np.zeros(pts.shape)
        c[..., i] = 1.0
        return c
    if isinstance(model, HeisenbergModel):
        c = np.zeros(pts.shape)
        if i == 0:  # X = dx - (y/2) dt
            c[..., 0] = 1.0
            c[..., 2] = -pts[..., 1] / 2.0
        elif i == 1:  # Y = dy + (x/2) dt
            c[..., 1] = 1.0
            c[..., 2] = pts[..., 0] / 2.0
        elif i == 2:  # T = dt
            c[..., 2] = 1.0
        else:
            raise ValueError("heis1 has three basis fields")
        return c
    if isinstance(model, AffineModel):
        c = np.zeros(pts.shape)
        if i == 0:  # a d/da
            c[..., 0] = pts[..., 0]
        elif i == 1:  # a d/db
            c[..., 1] = pts[..., 0]
        else:
            raise ValueError("affine has two basis fields")
        return c
    raise UnsupportedModelError("no vector fields for this model")


def _central_diff(values, axis, h):
    """Second-order central difference with zero (Dirichlet) padding."""
    out = np.zeros_like(values, dtype=np.complex128)
    sl_all = [slice(None)] * values.ndim

    def shifted(k):
        pad = np.zeros_like(values)
        src = sl_all.copy()
        dst = sl_all.copy()
        if k > 0:
            src[axis] = slice(k, None)
            dst[axis] = slice(None, -k)
        else:
            src[axis] = slice(None, k)
            dst[axis] = slice(-k, None)
        pad[tuple(dst)] = values[tuple(src)]
        return pad

    out = (shifted(1) - shifted(-1)) / (2.0 * h)
    return out


def vector_field_apply(i: int, f: GridFunction) -> GridFunction:
    """Apply the i-th left-invariant basis field by central finite differences."""
    grid = f.grid
    pts = grid.points()
    c = _field_coefficients(grid.model, i, pts)
    h = grid.spacings
    out = np.zeros(grid.shape, dtype=np.complex128)
    for d in range(grid.dim):
        cd = c[..., d]
        if np.any(cd != 0):
            out += cd * _central_diff(f.values, d, h[d])
    return GridFunction(grid, out)


def apply_multiindex(alpha, f: GridFunction) -> GridFunction:
    """X^alpha = X_1^{a1} ... X_n^{an}, fields applied left to right."""
    out = f
    for i, k in enumerate(alpha):
        for _ in range(int(k)):
            out = vector_field_apply(i, out)
    return out


def homogeneity_degree(model, alpha) -> int:
    """d(alpha): dilation weight of the monomial operator X^alpha."""
    if isinstance(model, EuclideanModel):
        return int(sum(alpha))
    if isinstance(model, HeisenbergModel):
        a = list(alpha) + [0, 0, 0]
        return int(a[0] + a[1] + 2 * a[2])
    raise UnsupportedModelError("no dilation weights for this model")


def _forward_diff_matrix(n, h):
    return sp.diags([-np.ones(n), np.ones(n - 1)], [0, 1], format="csr") / h


def _axis_operator(grid, mat, axis):
    ops = []
    for d, n in enumerate(grid.shape):
        ops.append(mat if d == axis else sp.identity(n, format="csr"))
    out = ops[0]
    for m in ops[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def sublaplacian_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse symmetric PSD discretization of -(sum_i X_i^2) on V_1 fields.

    Each first-layer field is discretized by a forward difference; the
    operator is assembled as sum X^T X, which keeps it symmetric positive
    semidefinite and avoids the odd-even decoupling of composed central
    stencils.  Dirichlet condition on the box (zero outside).
    """
    model = grid.model
    h = grid.spacings
    if isinstance(model, EuclideanModel):
        first_layer = range(model.dim)
    elif isinstance(model, HeisenbergModel):
        first_layer = range(2)
    else:
        raise UnsupportedModelError("sub-Laplacian needs a stratified model")

    pts = grid.points()
    L = None
    for i in first_layer:
        c = _field_coefficients(model, i, pts)
        X = None
        # forward differences treat values beyond the high face as zero; the
        # matching ghost edge at the low face is restored below as a diagonal
        # penalty, so both faces carry the Dirichlet condition
        penalty = np.zeros(grid.shape)
        for d in range(grid.dim):
            cd = c[..., d]
            if not np.any(cd != 0):
                continue
            D = _axis_operator(grid, _forward_diff_matrix(grid.shape[d], h[d]), d)
            term = sp.diags(cd.reshape(-1)) @ D if not np.allclose(cd, cd.flat[0]) else cd.flat[0] * D
            X = term if X is None else X + term
            face = [slice(None)] * grid.dim
            face[d] = slice(0, 1)
            pen = np.zeros(grid.shape)
            pen[tuple(face)] = (cd[tuple(face)] / h[d]) ** 2
            penalty += pen
        contrib = (X.T @ X + sp.diags(penalty.reshape(-1))).tocsr()
        L = contrib if L is None else L + contrib
    return L.tocsr()


@dataclass
class SpectralProjector:
    """Retained eigenpairs of the discrete sub-Laplacian up to bandwidth omega."""

    grid: Grid
    omega: float
    eigenvalues: np.ndarray  # ascending, all <= omega
    eigenvectors: np.ndarray  # shape (m, *grid.shape), orthonormal in the weighted inner product
    boundary_condition: str = "dirichlet"

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def basis_matrix(self) -> np.ndarray:
        return self.eigenvectors.reshape(self.dim, -1)

    def coefficients(self, f: GridFunction) -> np.ndarray:
        w = self.grid.weights().reshape(-1)
        return self.basis_matrix().conj() @ (w * f.values.reshape(-1))

    def synthesize(self, coeffs) -> GridFunction:
        vals = np.tensordot(np.asarray(coeffs), self.eigenvectors, axes=(0, 0))
        return GridFunction(self.grid, vals)

    def project(self, f: GridFunction) -> GridFunction:
        return self.synthesize(self.coefficients(f))


def _lambda_max_estimate(L, iters=30, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=L.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        v = L @ v
        nrm = np.linalg.norm(v)
        if nrm == 0:
            return 0.0
        lam = nrm
        v /= nrm
    return lam


def sublaplacian_spectrum(
    grid: Grid,
    omega: float,
    cache_dir: str | None = None,
    max_dim: int = 400,
) -> SpectralProjector:
    """All eigenpairs with eigenvalue <= omega (shift-invert Lanczos).

    Rejects bandwidths beyond a quarter of the largest discrete eigenvalue:
    such modes are not resolved by the grid.  Eigenpairs are cached on disk
    keyed by (grid hash, omega, boundary condition).
    """
    if omega <= 0:
        raise ValueError("bandwidth must be positive")
    key = f"spec_{grid.content_hash()}_{omega:.12g}_dirichlet"
    if cache_dir:
        path = os.path.join(cache_dir, key + ".npz")
        if os.path.exists(path):
            data = np.load(path)
            return SpectralProjector(
                grid, omega, data["vals"], data["vecs"].reshape((-1,) + grid.shape)
            )

    L = sublaplacian_matrix(grid)
    lam_max = _lambda_max_estimate(L)
    if omega > lam_max / 4.0:
        raise ValueError(
            f"bandwidth {omega:g} under-resolved: grid supports at most {lam_max / 4.0:g}"
        )

    n = L.shape[0]
    k = 16
    while True:
        k = min(k, n - 2)
        vals, vecs = spla.eigsh(L, k=k, sigma=0, which="LM")
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        if vals[-1] > omega or k >= min(max_dim, n - 2):
            break
        k *= 2
    keep = vals <= omega
    vals, vecs = vals[keep], vecs[:, keep]
    vals = np.maximum(vals, 0.0)

    # orthonormalize in the weighted inner product (weights are a constant
    # cell volume for unimodular models)
    cell = float(np.prod(grid.spacings))
    vecs = (vecs / math.sqrt(cell)).T.reshape((-1,) + grid.shape)

    proj = SpectralProjector(grid, omega, vals, vecs)
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        np.savez_compressed(
            os.path.join(cache_dir, key + ".npz"),
            vals=vals,
            vecs=proj.basis_matrix(),
        )
    return proj


def random_bandlimited(proj: SpectralProjector, seed: int = 0) -> GridFunction:
    """Unit-norm random element of the retained span, deterministic per seed."""
    if proj.dim == 0:
        raise ValueError("empty spectral projector")
    rng = np.random.default_rng(seed)
    c = rng.normal(size=proj.dim) + 1j * rng.normal(size=proj.dim)
    c /= np.linalg.norm(c)
    return proj.synthesize(c)


# ---------------------------------------------------------------------------
# constants of the oscillation estimate
# ---------------------------------------------------------------------------


def ball_volume(model, r=1.0, n=160) -> float:
    """Haar measure of the homogeneous ball B_r by quadrature."""
    if isinstance(model, EuclideanModel):
        if model.dim == 1:
            return 2.0 * r
        if model.dim == 2:
            return math.pi * r**2
        return 4.0 / 3.0 * math.pi * r**3
    if isinstance(model, HeisenbergModel):
        # bounding box of B_1: x^2+y^2 <= 1, |t| <= 1/4; scale by homogeneity
        ax = np.linspace(-1, 1, n, endpoint=False) + 1.0 / n
        at = np.linspace(-0.25, 0.25, n, endpoint=False) + 0.25 / n
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        r2 = X**2 + Y**2
        # |t| range with norm <= 1: 16 t^2 <= 1 - r2^2
        tmax = np.sqrt(np.clip(1.0 - r2**2, 0.0, None)) / 4.0
        vol1 = float(np.sum(2.0 * tmax) * (2.0 / n) ** 2)
        return vol1 * r**model.homogeneous_dimension
    raise UnsupportedModelError("no homogeneous ball for this model")


def _multiindices(nfields, max_order):
    out = []

    def rec(prefix, remaining):
        if len(prefix) == nfields:
            out.append(tuple(prefix))
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k)

    rec([], max_order)
    return [a for a in out if 0 < sum(a)]


@dataclass
class ConstantEstimates:
    """Empirical ingredients of the oscillation constant and their assembly."""

    c_ku: float  # local Sobolev constant for (K, U) = (B_b, B_2b), lower-bound estimate
    b: float  # mean-value sup-region dilation factor (empirical fit)
    bernstein_norms: dict  # multiindex -> empirical ||X^alpha||_{E_1 -> L2}
    degrees: dict  # multiindex -> homogeneity degree d(alpha)
    ball_volume_1: float  # |B_1| by quadrature
    c_g: float
    metadata: dict = field(default_factory=dict)

    @staticmethod
    def assemble(n_dim, q_hom, b, c_ku, vol1, bernstein_norms) -> float:
        total = sum(v for a, v in bernstein_norms.items() if 1 <= sum(a) <= n_dim + 1)
        return (
            math.sqrt(math.comb(2 * n_dim, n_dim))
            * 2.0 ** (q_hom / 2.0)
            * b ** (q_hom / 2.0)
            * c_ku
            * math.sqrt(vol1)
            * total
        )


def _gaussian_bump(grid, center, widths):
    pts = grid.nodes_internal()
    expo = np.zeros(grid.shape)
    for d in range(grid.dim):
        expo += ((pts[..., d] - center[d]) / widths[d]) ** 2
    return GridFunction(grid, np.exp(-expo))


def _bump_family(grid, count, seed):
    rng = np.random.default_rng(seed)
    span = grid.hi - grid.lo
    mid = 0.5 * (grid.lo + grid.hi)
    fams = []
    for _ in range(count):
        center = mid + (rng.uniform(-0.15, 0.15, size=grid.dim)) * span
        widths = span * rng.uniform(0.06, 0.3, size=grid.dim)
        fams.append(_gaussian_bump(grid, center, widths))
    return fams


def estimate_constants(
    grid: Grid,
    proj_e1: SpectralProjector,
    n_bumps: int = 12,
    seed: int = 0,
    b_scan=(1.0, 1.25, 1.5, 2.0, 2.5, 3.0),
) -> ConstantEstimates:
    """Estimate the oscillation-constant ingredients on a stratified grid.

    All values are empirical: the Sobolev constant is a maximum over a test
    family (a lower bound of the optimal constant), the mean-value factor is
    the smallest scanned dilation with no observed violation, and the
    Bernstein norms are maxima over the retained eigenbasis.
    """
    model = grid.model
    n = model.dim
    q = model.homogeneous_dimension
    if q is None:
        raise UnsupportedModelError("constants require a stratified model")

    eigfuncs = [
        GridFunction(grid, proj_e1.eigenvectors[i]) for i in range(min(proj_e1.dim, 16))
    ]
    family = eigfuncs + _bump_family(grid, n_bumps, seed)

    # first-order derivative fields per family member (for the mean-value scan)
    nfirst = 2 if isinstance(model, HeisenbergModel) else n
    grads = [
        [vector_field_apply(j, f) for j in range(n)] for f in family
    ]

    # --- mean-value dilation factor b ------------------------------------
    rng = np.random.default_rng(seed + 1)
    mid = 0.5 * (grid.lo + grid.hi)
    span = grid.hi - grid.lo
    xs_int = mid + rng.uniform(-0.2, 0.2, size=(24, n)) * span
    xs = model.from_internal(xs_int)
    rmax = 0.2 * float(np.min(span[:nfirst] if nfirst < n else span))
    ys = model.dilate(1.0, _sphere_directions(model, 16))
    radii = rng.uniform(0.2, 1.0, size=4) * rmax

    b_est = b_scan[-1]
    for b_try in b_scan:
        ok = True
        for fi, f in enumerate(family):
            fx = f.at(xs)
            for rad in radii:
                yr = model.dilate(rad, ys)
                for y in yr:
                    xy = model.mul(xs, y)
                    lhs = np.abs(f.at(xy) - fx)
                    # sup over sampled ball |z| <= b|y| around each x
                    zdirs = np.concatenate(
                        [model.dilate(b_try * rad * fr, _sphere_directions(model, 12)) for fr in (1.0, 0.5)]
                        + [np.zeros((1, n))]
                    )
                    xz = model.mul(xs[:, None, :], zdirs[None, :, :])
                    sup = np.zeros(len(xs))
                    for j in range(n):
                        gv = np.abs(grads[fi][j].at(xz))
                        np.maximum(sup, gv.max(axis=1), out=sup)
                    if np.any(lhs > rad * sup + 1e-12):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            b_est = b_try
            break

    # --- local Sobolev constant for (K, U) = (B_b, B_2b) ------------------
    pts = grid.points()
    gnorm = model.norm(pts)
    mask_k = gnorm <= b_est
    mask_u = gnorm <= 2.0 * b_est
    alphas_sob = [(0,) * n] + _multiindices(n, n)
    c_ku = 0.0
    for f in family:
        sup_k = f.norm_sup(mask=mask_k)
        denom = 0.0
        for a in alphas_sob:
            g = apply_multiindex(a, f)
            denom += g.norm_l2(mask=mask_u) ** 2
        if denom > 0:
            c_ku = max(c_ku, sup_k / math.sqrt(denom))

    # --- Bernstein norms over the eigenbasis ------------------------------
    alphas = _multiindices(n, n + 1)
    bern = {}
    degs = {}
    for a in alphas:
        best = 0.0
        for i in range(proj_e1.dim):
            e = GridFunction(grid, proj_e1.eigenvectors[i])
            val = apply_multiindex(a, e).norm_l2() / e.norm_l2()
            best = max(best, val)
        bern[a] = best
        degs[a] = homogeneity_degree(model, a)

    vol1 = ball_volume(model)
    c_g = ConstantEstimates.assemble(n, q, b_est, c_ku, vol1, bern)
    return ConstantEstimates(
        c_ku=c_ku,
        b=b_est,
        bernstein_norms=bern,
        degrees=degs,
        ball_volume_1=vol1,
        c_g=c_g,
        metadata={
            "family_size": len(family),
            "eigen_dim": proj_e1.dim,
            "seed": seed,
        },
    )


def oscillation_scaling_check(
    proj_e1: SpectralProjector,
    r_list,
    c_g: float,
    n_funcs: int = 8,
    seed: int = 0,
):
    """Ratios ||osc_{B_r} f||_2 / ||f||_2 for random band elements.

    Reports the per-radius ratios, the linear fit of ratio against r, and
    whether every ratio stays below r times the supplied constant.
    """
    rows = []
    for r in r_list:
        if not 0 < r <= 1:
            raise ValueError("radii must lie in (0, 1]")
        ratios = []
        for k in range(n_funcs):
            f = random_bandlimited(proj_e1, seed=seed + k)
            ratios.append(oscillation(f, r).norm_l2() / f.norm_l2())
        rows.append({"r": float(r), "ratios": ratios, "max_ratio": max(ratios)})
    rs = np.array([row["r"] for row in rows])
    ms = np.array([row["max_ratio"] for row in rows])
    slope = float(np.sum(rs * ms) / np.sum(rs * rs))
    ss_res = float(np.sum((ms - slope * rs) ** 2))
    ss_tot = float(np.sum((ms - ms.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    per_r = ms / rs
    return {
        "rows": rows,
        "slope": slope,
        "r_squared": r2,
        "ratio_over_r": per_r.tolist(),
        "ratio_over_r_spread": float((per_r.max() - per_r.min()) / per_r.max()),
        "bound_satisfied": bool(np.all(ms <= rs * c_g)),
        "c_g": float(c_g),
    }


def projector_dilation_angle(
    proj: SpectralProjector, t: float, cache_dir: str | None = None
) -> float:
    """Largest principal angle between U_t E_omega and E_{omega/t^2} on delta_t(grid)."""
    grid = proj.grid
    model = grid.model
    q = model.homogeneous_dimension
    grid2 = grid.dilated(t)
    proj2 = sublaplacian_spectrum(grid2, proj.omega / t**2, cache_dir=cache_dir)
    # U_t f = t^{-Q/2} f(delta_{1/t} .): node values transport unchanged up to scale
    a = proj.basis_matrix() * t ** (-q / 2.0)
    bmat = proj2.basis_matrix()
    cell2 = float(np.prod(grid2.spacings))
    gram = (bmat.conj() * cell2) @ a.T
    s = np.linalg.svd(gram, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    if len(s) < max(proj.dim, proj2.dim):
        return math.pi / 2.0
    return float(np.arccos(np.min(s)))
