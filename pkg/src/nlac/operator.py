"""Quadrature-built stencils for the nonlocal diffusion operator on periodic grids.

The discrete operator acts on nodal values as a symmetric stencil sum

    (D u)_{i,j} = sum_{p,q=0..r} c[p,q] * (u[i+p,j+q] + u[i-p,j+q]
                                           + u[i+p,j-q] + u[i-p,j-q] - 4*u[i,j])

with indices taken modulo n. The coefficients come from integrating the
kernel against bilinear basis functions over the first quadrant of the
interaction disc:

    c[p,q] = (p+q) / ((p^2+q^2) h) * integral over B+ of
             psi_{p,q}(x,y) * rho(sqrt(x^2+y^2)) * (x^2+y^2)/(x+y) dx dy

and c[0,0] = 0. The integrand is smooth on every mesh cell except at the
origin (kernel singularity r^-alpha) and along the arc r = delta, so the
builder uses tensor Gauss-Legendre on interior cells, polar coordinates with
event-angle splitting on arc-cut cells, and a Gauss-Jacobi radial rule on the
origin cell that absorbs the r^(3-alpha) weight exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .kernels import KernelSpec

DEFAULT_QUAD_ORDER = 16

_INTERIOR_CHUNK = 4096


class QuadratureError(RuntimeError):
    """Stencil quadrature failed its self-consistency check."""

    def __init__(self, achieved: float, tolerance: float):
        self.achieved = achieved
        self.tolerance = tolerance
        super().__init__(
            f"stencil quadrature self-check reached relative {achieved:.3e}, "
            f"required {tolerance:.3e}"
        )


@dataclass(frozen=True)
class Grid:
    """Uniform periodic n x n mesh over the square (0, extent)^2."""

    n: int
    extent: float

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"grid needs at least 4 nodes per dimension, got n={self.n}")
        if not self.extent > 0.0:
            raise ValueError(f"grid extent must be positive, got {self.extent}")

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    def coordinates(self) -> np.ndarray:
        """Node coordinates i*h along one axis."""
        return np.arange(self.n) * self.spacing


@dataclass
class Field:
    """Real nodal values on a grid; row i holds x = i*h, column j holds y = j*h."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid n={self.grid.n}"
            )
        if not np.isfinite(self.values).all():
            raise ValueError("field contains non-finite values")


@dataclass(frozen=True)
class Stencil:
    """Nonnegative stencil coefficients c[p,q], 0 <= p,q <= radius, for one mesh spacing."""

    radius: int
    coeffs: np.ndarray
    kernel: KernelSpec
    spacing: float

    @property
    def total(self) -> float:
        """Sum of all coefficients; the operator's diagonal is -4*total."""
        return float(self.coeffs.sum())


def stencil_radius(delta: float, h: float) -> int:
    """Smallest integer strictly larger than delta/h (delta/h + 1 when exact)."""
    return int(math.floor(delta / h)) + 1


def _hat_shapes(order: int):
    """Gauss-Legendre data on [0,1] plus the four bilinear shape values."""
    nodes, weights = roots_legendre(order)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    return t, w, (1.0 - t, t)


def _accumulate_interior(kernel: KernelSpec, h: float, order: int,
                         cells: np.ndarray, accum: np.ndarray) -> None:
    t, w, (s0, s1) = _hat_shapes(order)
    w2d = np.outer(w, w) * (h * h)
    power = 2.0 - kernel.alpha
    scale = kernel.normalization
    for start in range(0, len(cells), _INTERIOR_CHUNK):
        chunk = cells[start:start + _INTERIOR_CHUNK]
        xs = (chunk[:, 0:1] + t[None, :]) * h  # (m, order)
        ys = (chunk[:, 1:2] + t[None, :]) * h
        xx = xs[:, :, None]
        yy = ys[:, None, :]
        rr = np.hypot(xx, yy)
        vals = scale * rr ** power / (xx + yy)
        vals *= w2d[None, :, :]
        for di, sx in ((0, s0), (1, s1)):
            partial = np.einsum("k,mkl->ml", sx, vals)
            for dj, sy in ((0, s0), (1, s1)):
                np.add.at(accum, (chunk[:, 0] + di, chunk[:, 1] + dj), partial @ sy)


def _accumulate_polar_cell(kernel: KernelSpec, h: float, order: int,
                           i: int, j: int, accum: np.ndarray) -> None:
    """Arc-cut cell (i,j) != (0,0): polar integration split at corner and arc angles."""
    delta = kernel.delta
    x0, x1 = i * h, (i + 1) * h
    y0, y1 = j * h, (j + 1) * h
    th_lo = math.atan2(y0, x1)
    th_hi = math.atan2(y1, x0)
    events = {th_lo, th_hi, math.atan2(y1, x1), math.atan2(y0, x0)}
    for xe in (x0, x1):
        if 0.0 < xe < delta:
            ye = math.sqrt(delta * delta - xe * xe)
            if y0 <= ye <= y1:
                events.add(math.atan2(ye, xe))
    for ye in (y0, y1):
        if 0.0 < ye < delta:
            xe = math.sqrt(delta * delta - ye * ye)
            if x0 <= xe <= x1:
                events.add(math.atan2(ye, xe))
    angles = sorted(a for a in events if th_lo <= a <= th_hi)

    nodes, weights = roots_legendre(order)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    power = 2.0 - kernel.alpha
    scale = kernel.normalization

    for a, b in zip(angles[:-1], angles[1:]):
        if b - a < 1e-14:
            continue
        theta = a + (b - a) * t
        tw = (b - a) * w
        ct = np.cos(theta)
        st = np.sin(theta)
        lo = np.maximum(x0 / ct, y0 / st) if y0 > 0 else x0 / ct
        hi = np.minimum(np.minimum(x1 / ct, y1 / st), delta)
        span = hi - lo
        keep = span > 1e-15 * delta
        if not keep.any():
            continue
        lo, span, ct, st, tw = lo[keep], span[keep], ct[keep], st[keep], tw[keep]
        rad = lo[:, None] + span[:, None] * t[None, :]
        rw = span[:, None] * w[None, :]
        common = scale * rad ** power / (ct + st)[:, None] * rw * tw[:, None]
        xi = (rad * ct[:, None] - x0) / h
        eta = (rad * st[:, None] - y0) / h
        accum[i, j] += float(np.sum(common * (1.0 - xi) * (1.0 - eta)))
        accum[i + 1, j] += float(np.sum(common * xi * (1.0 - eta)))
        accum[i, j + 1] += float(np.sum(common * (1.0 - xi) * eta))
        accum[i + 1, j + 1] += float(np.sum(common * xi * eta))


def _accumulate_origin_cell(kernel: KernelSpec, h: float, order: int,
                            accum: np.ndarray) -> None:
    """Cell touching the kernel singularity: Gauss-Jacobi radial weight r^(3-alpha).

    The basis functions reaching into this cell vanish at the origin at least
    linearly, so psi/r times the polar factor leaves a radial polynomial that
    the Jacobi rule integrates exactly for every alpha in [0, 4).
    """
    delta = kernel.delta
    alpha = kernel.alpha
    jn, jw = roots_jacobi(8, 0.0, 3.0 - alpha)
    rloc = 0.5 * (jn + 1.0)  # radial nodes on (0,1], weight absorbed in jw
    nodes, weights = roots_legendre(order)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    scale = kernel.normalization

    events = {0.0, 0.25 * math.pi, 0.5 * math.pi}
    if h < delta < h * math.sqrt(2.0):
        cut = math.acos(h / delta)
        events.update((cut, 0.5 * math.pi - cut))
    angles = sorted(events)

    for a, b in zip(angles[:-1], angles[1:]):
        if b - a < 1e-14:
            continue
        theta = a + (b - a) * t
        tw = (b - a) * w
        ct = np.cos(theta)
        st = np.sin(theta)
        rmax = np.minimum(np.minimum(h / ct, h / st), delta)
        rad = rmax[:, None] * rloc[None, :]
        # integral of g(r) r^(3-alpha) dr on [0, rmax] = (rmax/2)^(4-alpha) sum jw g(r_k)
        jac = (0.5 * rmax) ** (4.0 - alpha)
        common = scale * jac[:, None] * jw[None, :] * (tw / (ct + st))[:, None]
        shape_x = ct / h
        shape_y = st / h
        accum[1, 0] += float(np.sum(common * shape_x[:, None] * (1.0 - rad * st[:, None] / h)))
        accum[0, 1] += float(np.sum(common * shape_y[:, None] * (1.0 - rad * ct[:, None] / h)))
        accum[1, 1] += float(np.sum(common * (shape_x * shape_y)[:, None] * rad))


def _coefficient_table(kernel: KernelSpec, h: float, order: int) -> np.ndarray:
    radius = stencil_radius(kernel.delta, h)
    ratio = kernel.delta / h
    ncells = int(math.ceil(ratio))
    accum = np.zeros((radius + 1, radius + 1))

    idx = np.arange(ncells)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    near = np.hypot(ii, jj) * h
    far = np.hypot(ii + 1, jj + 1) * h
    origin = (ii == 0) & (jj == 0)
    interior = (far <= kernel.delta) & ~origin
    cut = (near < kernel.delta) & (far > kernel.delta) & ~origin

    _accumulate_interior(kernel, h, order, np.column_stack(
        (ii[interior], jj[interior])), accum)
    for ci, cj in zip(ii[cut], jj[cut]):
        _accumulate_polar_cell(kernel, h, order, int(ci), int(cj), accum)
    _accumulate_origin_cell(kernel, h, order, accum)

    p = np.arange(radius + 1, dtype=float)
    pp, qq = np.meshgrid(p, p, indexing="ij")
    with np.errstate(invalid="ignore", divide="ignore"):
        prefactor = (pp + qq) / ((pp * pp + qq * qq) * h)
    prefactor[0, 0] = 0.0
    coeffs = prefactor * accum
    coeffs[0, 0] = 0.0
    # enforce exact (p,q) <-> (q,p) symmetry; the two orderings differ only
    # by summation roundoff
    return 0.5 * (coeffs + coeffs.T)


_STENCIL_CACHE: dict[tuple, Stencil] = {}


def stencil_for_spacing(kernel: KernelSpec, h: float,
                        order: int = DEFAULT_QUAD_ORDER,
                        check_tolerance: float | None = None) -> Stencil:
    """Build (or fetch from cache) the stencil for a mesh spacing.

    Does not know about the domain size; see build_stencil for the grid-aware
    entry point. With check_tolerance set, the table is recomputed at half
    the quadrature order and QuadratureError is raised when the two disagree
    beyond the tolerance (relative to the largest coefficient).
    """
    if not h > 0.0:
        raise ValueError(f"mesh spacing must be positive, got h={h}")
    key = (kernel.alpha, kernel.delta, h, order)
    cached = _STENCIL_CACHE.get(key)
    if cached is None:
        coeffs = _coefficient_table(kernel, h, order)
        cached = Stencil(radius=coeffs.shape[0] - 1, coeffs=coeffs,
                         kernel=kernel, spacing=h)
        _STENCIL_CACHE[key] = cached
    if check_tolerance is not None:
        coarse = _coefficient_table(kernel, h, max(2, order // 2))
        achieved = float(np.max(np.abs(coarse - cached.coeffs))
                         / np.max(cached.coeffs))
        if achieved > check_tolerance:
            raise QuadratureError(achieved, check_tolerance)
    return cached


def build_stencil(kernel: KernelSpec, grid: Grid,
                  order: int = DEFAULT_QUAD_ORDER,
                  check_tolerance: float | None = None) -> Stencil:
    """Stencil for the kernel on this grid; rejects horizons past half the domain."""
    if kernel.delta > 0.5 * grid.extent:
        raise ValueError(
            f"horizon delta={kernel.delta} exceeds half the domain extent "
            f"({0.5 * grid.extent}); the stencil would wrap past half the domain"
        )
    return stencil_for_spacing(kernel, grid.spacing, order, check_tolerance)


def apply_direct(stencil: Stencil, u: Field) -> Field:
    """Apply the stencil by direct periodic summation.

    Reference/oracle path and the basis of the discrete energy's quadratic
    term; O(n^2 r^2) and meant for modest grids.
    """
    n = u.grid.n
    if 2 * stencil.radius >= n:
        raise ValueError(
            f"stencil radius {stencil.radius} wraps onto itself on an n={n} grid "
            f"(need 2r < n)"
        )
    if not math.isclose(stencil.spacing, u.grid.spacing, rel_tol=1e-12):
        raise ValueError(
            f"stencil built for spacing {stencil.spacing}, grid has {u.grid.spacing}"
        )
    vals = u.values
    out = np.zeros_like(vals)
    coeffs = stencil.coeffs
    for p in range(stencil.radius + 1):
        row = coeffs[p]
        live = np.nonzero(row)[0]
        if live.size == 0:
            continue
        shifted = np.roll(vals, -p, axis=0) + np.roll(vals, p, axis=0)
        for q in live:
            out += row[q] * (np.roll(shifted, -q, axis=1) + np.roll(shifted, q, axis=1))
    out -= 4.0 * stencil.total * vals
    return Field(u.grid, out)


def sample_function(grid: Grid, fn) -> Field:
    """Restrict a function of (x, y) to the grid nodes.

    Vectorized callables are evaluated on the whole node mesh at once;
    scalar-only callables fall back to a pointwise sweep.
    """
    coords = grid.coordinates()
    xs, ys = np.meshgrid(coords, coords, indexing="ij")
    try:
        values = np.asarray(fn(xs, ys), dtype=float)
        if values.shape != xs.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.vectorize(fn)(xs, ys).astype(float)
    return Field(grid, values)


def write_stencil_text(stencil: Stencil) -> str:
    """Golden-file format: header line, then the c[p,q] matrix row-major."""
    lines = [
        f"r={stencil.radius} alpha={stencil.kernel.alpha:.17g} "
        f"delta={stencil.kernel.delta:.17g} h={stencil.spacing:.17g}"
    ]
    for row in stencil.coeffs:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def read_stencil_text(text: str) -> Stencil:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = dict(part.split("=", 1) for part in lines[0].split())
    radius = int(header["r"])
    kernel = KernelSpec(alpha=float(header["alpha"]), delta=float(header["delta"]))
    coeffs = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    if coeffs.shape != (radius + 1, radius + 1):
        raise ValueError(
            f"stencil matrix shape {coeffs.shape} does not match header r={radius}"
        )
    return Stencil(radius=radius, coeffs=coeffs, kernel=kernel,
                   spacing=float(header["h"]))
