"""Wide-stencil finite differences on ball-intersection domains.

Discretizes F(x, D^2 u) + H(Du) = f with zero Dirichlet data on a 2D
lattice.  Second derivatives are sampled along a fan of lattice directions
(one pair per requested angle); eigenvalue operators take minima and maxima
over the fan.  Nodes next to the boundary use nonuniform three-point
differences against the exact ray-circle cut points, with the arm lengths
floored (``_SNAP_SINGLE`` / ``_SNAP_BOTH``) so the explicit pseudo-time
iteration keeps a usable step size.

The solver is a damped Jacobi fixed-point iteration
``u <- u + tau * (F_h[u] + H_h[u] - f)`` with simultaneous (double-buffered)
updates, so results do not depend on sweep order or worker count.  A node
half a spacing from the boundary carries a diagonal slope two orders above
the interior one; a single scalar step obeying the worst-node stability
bound would stall the interior by that ratio, so by default the damping is
applied nodewise as tau_i = 0.95 / D_i with D_i the local slope bound (same
fixed points, same monotonicity, still order-independent).  Passing an
explicit ``tau`` selects the literal scalar-step iteration instead.  The
gradient for H uses centered differences; this is adequate for the smooth
concave solutions certified here but is not a monotone discretization of the
first-order term (known caveat).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

from .barriers import build_supersolution, evaluate_barrier
from .errors import (
    ConfigError,
    NumericError,
    ThresholdError,
    UnsupportedDiscretizationError,
)
from .model import (
    AnisotropicPower,
    CoefficientLambdaN,
    ConvexDomain,
    HamiltonianSpec,
    LambdaK,
    LinearDegenerate,
    MinMax,
    OperatorSpec,
    Params,
    PowerNorm,
    ScalarField,
    WeightedEigenvalues,
)
from .radial import c1_bound, rbar

__all__ = [
    "Grid2D",
    "GridFunction",
    "GridProblem",
    "SolveControls",
    "SolveReport",
    "build_grid",
    "discrete_second_difference",
    "discrete_gradient",
    "discrete_operator",
    "solve",
    "sweep",
    "residual_norm",
    "solution_to_csv",
    "report_to_text",
]

_TAU_SAFETY = 0.95


def _direction_fan(K: int) -> tuple[tuple[int, int], ...]:
    """Primitive lattice vectors nearest the angles k*pi/K, k = 0..K-1."""
    cap = max(2, -(-K // 4))
    cands: list[tuple[tuple[int, int], float]] = []
    for a in range(-cap, cap + 1):
        for b in range(cap + 1):
            if b == 0 and a <= 0:
                continue  # keep one representative per +-v pair
            if math.gcd(abs(a), b) != 1:
                continue
            cands.append(((a, b), math.atan2(b, a)))
    fan: list[tuple[int, int]] = []
    for k in range(K):
        target = math.pi * k / K
        best = min(
            cands,
            key=lambda c: min(abs(c[1] - target), math.pi - abs(c[1] - target)),
        )[0]
        if best not in fan:
            fan.append(best)
    return tuple(fan)


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Lattice over a ball-intersection domain with cut-distance data.

    ``mask`` is 0 outside, 1 at interior nodes whose stencil arms all end at
    in-domain nodes, and 2 at boundary-adjacent nodes (at least one arm
    crosses the boundary).  ``theta_plus``/``theta_minus`` hold the exact
    crossing fractions in (0, 1] per node and direction (1.0 = full arm);
    ``hp``/``hm`` are the corresponding arm lengths.  Neighbor indices point
    into the packed node array, with ``n_nodes`` standing for the zero-valued
    boundary slot.
    """

    domain: ConvexDomain
    h: float
    K: int
    directions: tuple[tuple[int, int], ...]
    op_mask: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    mask: np.ndarray
    idx_grid: np.ndarray
    nodes_xy: np.ndarray
    nb_plus: np.ndarray
    nb_minus: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    hv: np.ndarray
    hp: np.ndarray
    hm: np.ndarray
    slot_ex: int
    slot_ey: int
    slot_pp: int
    slot_mp: int

    @property
    def n_nodes(self) -> int:
        return self.nodes_xy.shape[0]

    @property
    def op_slots(self) -> np.ndarray:
        return np.flatnonzero(self.op_mask)

    def node_index(self, point) -> int:
        """Packed index of the lattice node at ``point`` (exact hit only)."""
        x, y = float(point[0]), float(point[1])
        ix = round((x - float(self.xs[0])) / self.h)
        iy = round((y - float(self.ys[0])) / self.h)
        if not (0 <= ix < self.xs.size and 0 <= iy < self.ys.size):
            raise ConfigError(f"point {(x, y)} is outside the grid box")
        if (
            abs(self.xs[ix] - x) > 1e-9 * max(1.0, self.h)
            or abs(self.ys[iy] - y) > 1e-9 * max(1.0, self.h)
        ):
            raise ConfigError(f"point {(x, y)} is not a lattice node")
        idx = int(self.idx_grid[iy, ix])
        if idx < 0:
            raise ConfigError(f"node {(x, y)} lies outside the domain")
        return idx


def _cut_fractions(x0: np.ndarray, step: np.ndarray, domain: ConvexDomain):
    """Fraction along ``step`` at which the segment leaves the domain."""
    a = float(step @ step)
    t = np.full(x0.shape[0], np.inf)
    for c in domain.center_array():
        diff = x0 - c
        b = diff @ step
        cc = np.einsum("ij,ij->i", diff, diff) - domain.radius**2
        disc = np.maximum(b * b - a * cc, 0.0)
        t = np.minimum(t, (-b + np.sqrt(disc)) / a)
    return np.clip(t, 1e-14, 1.0)


def build_grid(domain: ConvexDomain, h: float, K: int) -> Grid2D:
    """Classify lattice nodes and record boundary cut distances.

    The direction fan also always carries the two axes and both diagonals
    (needed for gradients and for anisotropic trace operators); extra slots
    beyond the requested K pairs are excluded from eigenvalue min/max scans.
    """
    if domain.dim != 2:
        raise ConfigError("grids are two-dimensional")
    h = float(h)
    if not (h > 0.0 and math.isfinite(h)):
        raise ConfigError("grid spacing must be positive and finite")
    if h > domain.radius / 4.0:
        raise ConfigError(
            f"spacing {h:g} too coarse for radius {domain.radius:g}"
            " (need h <= R/4)"
        )
    if not isinstance(K, int) or K < 4:
        raise ConfigError("need an integer K >= 4 direction pairs")

    fan = list(_direction_fan(K))
    op_count = len(fan)
    for extra in ((1, 0), (0, 1), (1, 1), (-1, 1)):
        if extra not in fan:
            fan.append(extra)
    directions = tuple(fan)
    op_mask = np.zeros(len(directions), dtype=bool)
    op_mask[:op_count] = True

    centers = domain.center_array()
    lo = centers.min(axis=0) - domain.radius
    hi = centers.max(axis=0) + domain.radius
    ix0, ix1 = math.floor(lo[0] / h) - 1, math.ceil(hi[0] / h) + 1
    iy0, iy1 = math.floor(lo[1] / h) - 1, math.ceil(hi[1] / h) + 1
    xs = np.arange(ix0, ix1 + 1, dtype=float) * h
    ys = np.arange(iy0, iy1 + 1, dtype=float) * h
    nx, ny = xs.size, ys.size

    px, py = np.meshgrid(xs, ys)
    pts = np.stack([px, py], axis=-1)
    inside = np.asarray(domain.contains(pts.reshape(-1, 2))).reshape(ny, nx)
    n = int(inside.sum())
    if n == 0:
        raise ConfigError(
            f"degenerate domain: no lattice nodes inside at spacing {h:g}"
        )

    order = np.argwhere(inside)  # (n, 2) rows of (iy, ix), row-major
    idx_grid = np.full((ny, nx), -1, dtype=np.int32)
    idx_grid[order[:, 0], order[:, 1]] = np.arange(n, dtype=np.int32)
    nodes_xy = np.stack([xs[order[:, 1]], ys[order[:, 0]]], axis=1)

    d = len(directions)
    nb_plus = np.full((n, d), n, dtype=np.int32)
    nb_minus = np.full((n, d), n, dtype=np.int32)
    theta_plus = np.ones((n, d))
    theta_minus = np.ones((n, d))

    for k, (a, b) in enumerate(directions):
        for sgn, nb, theta in (
            (1, nb_plus, theta_plus),
            (-1, nb_minus, theta_minus),
        ):
            jx = order[:, 1] + sgn * a
            jy = order[:, 0] + sgn * b
            ok = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
            hit = np.zeros(n, dtype=bool)
            hit[ok] = inside[jy[ok], jx[ok]]
            nb[hit, k] = idx_grid[jy[hit], jx[hit]]
            cut = ~hit
            if np.any(cut):
                step = h * sgn * np.array([a, b], dtype=float)
                theta[cut, k] = _cut_fractions(nodes_xy[cut], step, domain)

    cut_any = (theta_plus < 1.0).any(axis=1) | (theta_minus < 1.0).any(axis=1)
    mask = np.zeros((ny, nx), dtype=np.int8)
    mask[order[:, 0], order[:, 1]] = np.where(cut_any, 2, 1)

    hv = h * np.linalg.norm(np.asarray(directions, dtype=float), axis=1)
    hp = theta_plus * hv
    hm = theta_minus * hv

    for arr in (
        xs, ys, mask, idx_grid, nodes_xy, nb_plus, nb_minus,
        theta_plus, theta_minus, hv, hp, hm, op_mask,
    ):
        arr.flags.writeable = False

    return Grid2D(
        domain=domain,
        h=h,
        K=K,
        directions=directions,
        op_mask=op_mask,
        xs=xs,
        ys=ys,
        mask=mask,
        idx_grid=idx_grid,
        nodes_xy=nodes_xy,
        nb_plus=nb_plus,
        nb_minus=nb_minus,
        theta_plus=theta_plus,
        theta_minus=theta_minus,
        hv=hv,
        hp=hp,
        hm=hm,
        slot_ex=directions.index((1, 0)),
        slot_ey=directions.index((0, 1)),
        slot_pp=directions.index((1, 1)),
        slot_mp=directions.index((-1, 1)),
    )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on the packed in-domain nodes; boundary value is 0."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_nodes,):
            raise ConfigError(
                f"need {self.grid.n_nodes} node values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ConfigError("grid function values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid2D, fn: Callable) -> "GridFunction":
        try:
            vals = np.asarray(fn(grid.nodes_xy), dtype=float)
            if vals.shape != (grid.n_nodes,):
                raise TypeError
        except Exception:
            vals = np.array([float(fn(p)) for p in grid.nodes_xy])
        return cls(grid=grid, values=vals)

    def value_at(self, point) -> float:
        return float(self.values[self.grid.node_index(point)])

    def extended(self) -> np.ndarray:
        """Node values with the trailing zero slot for boundary arms."""
        return np.append(self.values, 0.0)

    def to_dense(self) -> np.ndarray:
        out = np.full(self.grid.mask.shape, np.nan)
        sel = self.grid.mask > 0
        out[sel] = self.values
        return out


ForcingLike = Union[ScalarField, float, Callable]


@dataclass(frozen=True, eq=False)
class GridProblem:
    """Dirichlet problem F(x, D^2 u) + H(Du) = f, u = 0 on the boundary.

    ``params`` is the declared structural envelope (ellipticity beta, gradient
    growth b, p, additive constants); it drives the superlinear domain-size
    refusal and the optional barrier initialization, and must dominate the
    actual Hamiltonian.
    """

    operator: OperatorSpec
    hamiltonian: HamiltonianSpec | None
    params: Params
    domain: ConvexDomain
    f: ForcingLike

    def __post_init__(self):
        if self.domain.dim != 2:
            raise ConfigError("grid problems are two-dimensional")


@dataclass(frozen=True)
class SolveControls:
    """Damping step (None = auto from the stability bound), stopping
    tolerance on the scaled residual, iteration cap, and initial iterate
    ("zeros" or "barrier")."""

    tau: float | None = None
    tol: float = 1e-5
    max_iter: int = 500_000
    init: str = "zeros"

    def __post_init__(self):
        if self.tau is not None and not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError("tau must be positive and finite")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError("tolerance must be positive")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.init not in ("zeros", "barrier"):
            raise ConfigError('init must be "zeros" or "barrier"')


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    update_norm: float
    residual_norm: float
    tau: float
    wall_time: float
    tau_bound: float
    k_factor: float
    d_max: float
    f_sup: float
    stop_residual: float
    init: str


def _field_on_nodes(f: ForcingLike, pts: np.ndarray) -> np.ndarray:
    if isinstance(f, (int, float)):
        vals = np.full(pts.shape[0], float(f))
    else:
        try:
            vals = np.asarray(f(pts), dtype=float)
            if vals.ndim == 0:
                vals = np.full(pts.shape[0], float(vals))
            if vals.shape != (pts.shape[0],):
                raise TypeError
        except (TypeError, ValueError):
            vals = np.array([float(f(p)) for p in pts])
    if not np.all(np.isfinite(vals)):
        raise ConfigError("forcing must be finite on the grid")
    return vals


_EIGEN_SUPPORTED = (LambdaK, MinMax, WeightedEigenvalues, CoefficientLambdaN)


class _Scheme:
    """Precomputed discretization of F_h + H_h - f on one grid."""

    def __init__(self, problem: GridProblem, grid: Grid2D):
        if problem.domain != grid.domain:
            raise ConfigError("problem and grid describe different domains")
        self.grid = grid
        self.problem = problem
        n, d = grid.nb_plus.shape
        self.n = n
        self.d = d

        hp, hm = grid.hp, grid.hm
        cp = 2.0 / (hp * (hp + hm))
        cm = 2.0 / (hm * (hp + hm))
        self.idx = np.concatenate([grid.nb_plus, grid.nb_minus], axis=1)
        self.cc = np.concatenate([cp, cm], axis=1)
        self.c0 = cp + cm
        self.op_cols = grid.op_slots

        spec = problem.operator
        self.lindeg_w = None
        self.wmin = self.wmax = 0.0
        if isinstance(spec, LambdaK):
            if spec.index == 1:
                self.wmin, self.wmax = 1.0, 0.0
            elif spec.index == 2:
                self.wmin, self.wmax = 0.0, 1.0
            else:
                raise UnsupportedDiscretizationError(
                    "only the extreme eigenvalues are discretized in 2D"
                )
        elif isinstance(spec, MinMax):
            self.wmin = self.wmax = 1.0
        elif isinstance(spec, WeightedEigenvalues):
            if len(spec.alphas) != 2:
                raise UnsupportedDiscretizationError(
                    "eigenvalue weights must be two-dimensional here"
                )
            self.wmin, self.wmax = float(spec.alphas[0]), float(spec.alphas[1])
        elif isinstance(spec, CoefficientLambdaN):
            self.wmin = 0.0
            self.wmax = _field_on_nodes(spec.a, grid.nodes_xy)
            if np.any(self.wmax < spec.a.lower - 1e-12):
                raise ConfigError("coefficient drops below its declared infimum")
        elif isinstance(spec, LinearDegenerate):
            self.lindeg_w = self._lindeg_weights(spec)
        else:
            raise UnsupportedDiscretizationError(
                f"operator {type(spec).__name__} has no monotone stencil here"
            )

        self.fvals = _field_on_nodes(problem.f, grid.nodes_xy)
        self.f_sup = float(np.max(np.abs(self.fvals))) if n else 0.0
        self.m_eff = float(np.max(np.maximum(problem.params.c - self.fvals, 0.0)))

        self._setup_hamiltonian(problem.hamiltonian)

        # exact per-node bound on |d(F_h + H_h)/du_0|, for the step-size cap
        if self.lindeg_w is not None:
            d_f = np.einsum("ij,ij->i", self.lindeg_w, self.c0[:, self.lin_slots])
        else:
            c0_max = self.c0[:, self.op_cols].max(axis=1)
            d_f = (self.wmin + self.wmax) * c0_max
        d_h = self.h_lip * np.hypot(self.g0x, self.g0y) if self.ham else 0.0
        self.d_node = d_f + d_h
        if np.any(self.d_node <= 0.0):
            raise ConfigError("operator has no diagonal slope at some node")
        self.d_max = float(np.max(self.d_node))

    def _lindeg_weights(self, spec: LinearDegenerate) -> np.ndarray:
        grid = self.grid
        self.lin_slots = np.array(
            [grid.slot_ex, grid.slot_ey, grid.slot_pp, grid.slot_mp]
        )
        w = np.zeros((self.n, 4))
        for i, x in enumerate(grid.nodes_xy):
            s = np.asarray(spec.sigma(x), dtype=float)
            a = s.T @ s
            off = float(a[0, 1])
            wx = float(a[0, 0]) - abs(off)
            wy = float(a[1, 1]) - abs(off)
            scale = max(1.0, abs(a).max())
            if wx < -1e-12 * scale or wy < -1e-12 * scale:
                raise UnsupportedDiscretizationError(
                    "diffusion matrix is not diagonally dominant on the"
                    f" lattice at x = {tuple(x)}"
                )
            w[i, 0] = max(wx, 0.0)
            w[i, 1] = max(wy, 0.0)
            w[i, 2 if off >= 0 else 3] = 2.0 * abs(off)
        return w

    def _setup_hamiltonian(self, ham: HamiltonianSpec | None):
        self.ham = None
        self.h_lip = 0.0
        if ham is None:
            return
        if isinstance(ham, PowerNorm):
            hb, hp_ = ham.b, ham.p
        elif isinstance(ham, AnisotropicPower):
            if ham.A.n != 2:
                raise ConfigError("anisotropy matrix must be 2x2 on grids")
            hb, hp_ = ham.b, ham.p
        else:
            raise UnsupportedDiscretizationError(
                "compactly perturbed Hamiltonians are certified on radial"
                " forms only, not on grids"
            )
        if hb == 0.0:
            return
        if hp_ < 1.0:
            raise UnsupportedDiscretizationError(
                "sublinear gradient terms have no bounded-slope discretization;"
                " move them into the forcing or set b = 0"
            )
        self.ham = ham
        params = self.problem.params
        radius = self.problem.domain.radius
        if params.superlinear:
            # largest forcing magnitude this domain supports under the
            # envelope; the solution gradient is capped by the worse of the
            # actual forcing and that capacity value
            m_cap = (rbar(replace(params, M=1.0)) / radius) ** (
                params.p / (params.p - 1.0)
            )
            levels = [m_cap]
            if 0.0 < self.m_eff < m_cap:
                levels.append(self.m_eff)
        else:
            levels = [max(self.m_eff, 1.0 + self.f_sup)]
        self.g_cap = 2.0 * max(
            c1_bound(replace(params, M=m), radius) for m in levels
        )
        if not math.isfinite(self.g_cap):
            raise ConfigError("gradient cap is unbounded for this envelope")
        self.h_lip = hp_ * hb * self.g_cap ** (hp_ - 1.0)

        grid = self.grid
        for axis in ("x", "y"):
            slot = grid.slot_ex if axis == "x" else grid.slot_ey
            hp2, hm2 = grid.hp[:, slot], grid.hm[:, slot]
            den = hp2 * hm2 * (hp2 + hm2)
            setattr(self, f"gp{axis}", hm2 * hm2 / den)
            setattr(self, f"gm{axis}", -hp2 * hp2 / den)
            setattr(self, f"g0{axis}", (hp2 - hm2) / (hp2 * hm2))
            setattr(self, f"ip{axis}", grid.nb_plus[:, slot])
            setattr(self, f"im{axis}", grid.nb_minus[:, slot])

    # -- evaluation ---------------------------------------------------------

    def second_differences(self, v_ext: np.ndarray) -> np.ndarray:
        u0 = v_ext[: self.n, None]
        parts = (v_ext[self.idx] - u0) * self.cc
        return parts[:, : self.d] + parts[:, self.d :]

    def operator_values(self, d2: np.ndarray) -> np.ndarray:
        if self.lindeg_w is not None:
            return np.einsum("ij,ij->i", self.lindeg_w, d2[:, self.lin_slots])
        dop = d2[:, self.op_cols]
        out = 0.0
        if np.any(self.wmin != 0.0):
            out = self.wmin * dop.min(axis=1)
        if np.any(self.wmax != 0.0):
            out = out + self.wmax * dop.max(axis=1)
        return out if isinstance(out, np.ndarray) else np.zeros(self.n)

    def hamiltonian_values(self, v_ext: np.ndarray) -> float | np.ndarray:
        if not self.ham:
            return 0.0
        u0 = v_ext[: self.n]
        gx = self.gpx * v_ext[self.ipx] + self.gmx * v_ext[self.imx] + self.g0x * u0
        gy = self.gpy * v_ext[self.ipy] + self.gmy * v_ext[self.imy] + self.g0y * u0
        if isinstance(self.ham, PowerNorm):
            norm = np.minimum(np.hypot(gx, gy), self.g_cap)
            return self.ham.b * norm**self.ham.p
        a = self.ham.A.a
        q = a[0, 0] * gx * gx + 2.0 * a[0, 1] * gx * gy + a[1, 1] * gy * gy
        n2 = gx * gx + gy * gy
        with np.errstate(invalid="ignore", divide="ignore"):
            shrink = np.where(n2 > self.g_cap**2, self.g_cap**2 / n2, 1.0)
        return np.maximum(q * shrink, 0.0) ** (self.ham.p / 2.0)

    def residual(self, v_ext: np.ndarray) -> np.ndarray:
        f_h = self.operator_values(self.second_differences(v_ext))
        return f_h + self.hamiltonian_values(v_ext) - self.fvals


def _resolve_node(grid: Grid2D, node) -> int:
    if isinstance(node, (int, np.integer)):
        idx = int(node)
        if not 0 <= idx < grid.n_nodes:
            raise ConfigError(f"node index {idx} out of range")
        return idx
    return grid.node_index(node)


def _resolve_direction(grid: Grid2D, direction) -> int:
    if isinstance(direction, (int, np.integer)):
        k = int(direction)
        if not 0 <= k < len(grid.directions):
            raise ConfigError(f"direction slot {k} out of range")
        return k
    a, b = int(direction[0]), int(direction[1])
    for cand in ((a, b), (-a, -b)):
        if cand in grid.directions:
            return grid.directions.index(cand)
    raise ConfigError(f"direction {(a, b)} is not in the stencil fan")


def discrete_second_difference(u: GridFunction, node, direction) -> float:
    """Three-point second difference along one stencil direction.

    Full arms give the uniform (u+ - 2 u0 + u-)/h_v^2; cut arms use the
    nonuniform weights against the zero boundary value at the (floored)
    cut point recorded in the grid.
    """
    grid = u.grid
    i = _resolve_node(grid, node)
    k = _resolve_direction(grid, direction)
    v_ext = u.extended()
    hp, hm = grid.hp[i, k], grid.hm[i, k]
    u0 = v_ext[i]
    up = v_ext[grid.nb_plus[i, k]]
    um = v_ext[grid.nb_minus[i, k]]
    return float(
        2.0 * ((up - u0) / hp + (um - u0) / hm) / (hp + hm)
    )


def discrete_gradient(u: GridFunction, node) -> np.ndarray:
    """Centered two-point gradient estimate at a node."""
    grid = u.grid
    i = _resolve_node(grid, node)
    v_ext = u.extended()
    out = np.empty(2)
    for j, slot in enumerate((grid.slot_ex, grid.slot_ey)):
        hp, hm = grid.hp[i, slot], grid.hm[i, slot]
        up = v_ext[grid.nb_plus[i, slot]]
        um = v_ext[grid.nb_minus[i, slot]]
        u0 = v_ext[i]
        out[j] = (hm * hm * up - hp * hp * um + (hp * hp - hm * hm) * u0) / (
            hp * hm * (hp + hm)
        )
    return out


def discrete_operator(spec: OperatorSpec, u: GridFunction, node) -> float:
    """F_h at one node: eigenvalue scans over the direction fan, or the
    weighted trace stencil for linear diffusions."""
    grid = u.grid
    i = _resolve_node(grid, node)
    x = grid.nodes_xy[i]
    d2 = np.array(
        [discrete_second_difference(u, i, k) for k in range(len(grid.directions))]
    )
    dop = d2[grid.op_slots]
    if isinstance(spec, LambdaK):
        if spec.index == 1:
            return float(dop.min())
        if spec.index == 2:
            return float(dop.max())
        raise UnsupportedDiscretizationError(
            "only the extreme eigenvalues are discretized in 2D"
        )
    if isinstance(spec, MinMax):
        return float(dop.min() + dop.max())
    if isinstance(spec, WeightedEigenvalues):
        if len(spec.alphas) != 2:
            raise UnsupportedDiscretizationError(
                "eigenvalue weights must be two-dimensional here"
            )
        return float(spec.alphas[0] * dop.min() + spec.alphas[1] * dop.max())
    if isinstance(spec, CoefficientLambdaN):
        return float(spec.a(x)) * float(dop.max())
    if isinstance(spec, LinearDegenerate):
        s = np.asarray(spec.sigma(x), dtype=float)
        a = s.T @ s
        off = float(a[0, 1])
        wx, wy = float(a[0, 0]) - abs(off), float(a[1, 1]) - abs(off)
        scale = max(1.0, abs(a).max())
        if wx < -1e-12 * scale or wy < -1e-12 * scale:
            raise UnsupportedDiscretizationError(
                "diffusion matrix is not diagonally dominant on the lattice"
            )
        diag = d2[grid.slot_pp] if off >= 0 else d2[grid.slot_mp]
        return float(
            max(wx, 0.0) * d2[grid.slot_ex]
            + max(wy, 0.0) * d2[grid.slot_ey]
            + 2.0 * abs(off) * diag
        )
    raise UnsupportedDiscretizationError(
        f"operator {type(spec).__name__} has no monotone stencil here"
    )


def _check_envelope(problem: GridProblem, scheme: _Scheme):
    ham = problem.hamiltonian
    if ham is None or scheme.ham is None:
        return
    params = problem.params
    if abs(ham.p - params.p) > 1e-12:
        raise ConfigError(
            f"Hamiltonian exponent {ham.p} mismatches the declared envelope"
            f" exponent {params.p}"
        )
    if ham.b > params.b * (1.0 + 1e-12):
        raise ConfigError(
            f"Hamiltonian growth {ham.b} exceeds the declared envelope {params.b}"
        )
    if params.superlinear and scheme.m_eff > 0.0:
        threshold = rbar(replace(params, M=scheme.m_eff))
        if problem.domain.radius > threshold * (1.0 + 1e-12):
            raise ThresholdError(
                f"domain radius {problem.domain.radius} exceeds the existence"
                f" threshold {threshold} at forcing magnitude {scheme.m_eff}"
            )


def _initial_values(problem: GridProblem, grid: Grid2D, scheme, init: str):
    if init == "zeros":
        return np.zeros(grid.n_nodes)
    barrier = build_supersolution(problem.domain, problem.params, scheme.m_eff)
    return np.asarray(evaluate_barrier(barrier, grid.nodes_xy), dtype=float)


def solve(
    problem: GridProblem,
    grid: Grid2D,
    controls: SolveControls | None = None,
) -> tuple[GridFunction, SolveReport]:
    """Damped Jacobi iteration to the discrete solution.

    Stops when the residual max-norm falls below tol*(1 + sup|f|).  With no
    explicit tau the damping is applied nodewise (0.95 / D_i against the
    local slope bound); the reported scalar tau is then the worst-node step
    0.95 / D_max, which is also the step every node uses in the literal
    scalar mode obtained by passing ``tau``.
    """
    controls = controls or SolveControls()
    scheme = _Scheme(problem, grid)
    _check_envelope(problem, scheme)

    tau_bound = 1.0 / scheme.d_max
    if controls.tau is None:
        step = _TAU_SAFETY / scheme.d_node
        tau = _TAU_SAFETY * tau_bound
    else:
        if controls.tau > tau_bound * (1.0 + 1e-12):
            raise ConfigError(
                f"tau = {controls.tau:g} violates the stability bound"
                f" {tau_bound:g}"
            )
        step = np.full(grid.n_nodes, controls.tau)
        tau = controls.tau
    k_factor = grid.h**2 * scheme.d_max / (4.0 * problem.params.beta)

    stop = controls.tol * (1.0 + scheme.f_sup)
    n = grid.n_nodes
    v_ext = np.zeros(n + 1)
    v_ext[:n] = _initial_values(problem, grid, scheme, controls.init)
    buf = np.zeros(n + 1)

    start = time.perf_counter()
    history: list[float] = []
    stride = max(1, controls.max_iter // 256)
    iterations = 0
    while True:
        resid = scheme.residual(v_ext)
        rmax = float(np.max(np.abs(resid))) if n else 0.0
        if not math.isfinite(rmax):
            raise NumericError(
                "iteration blew up (non-finite residual)",
                diagnostics={"iterations": iterations},
            )
        if iterations % stride == 0:
            history.append(rmax)
        if rmax <= stop:
            break
        if iterations >= controls.max_iter:
            history.append(rmax)
            raise NumericError(
                f"no convergence within {controls.max_iter} iterations"
                f" (residual {rmax:.3e}, target {stop:.3e})",
                diagnostics={
                    "iterations": iterations,
                    "residual": rmax,
                    "residual_history": history,
                },
            )
        np.multiply(resid, step, out=resid)
        np.add(v_ext[:n], resid, out=buf[:n])
        v_ext, buf = buf, v_ext
        iterations += 1
    wall = time.perf_counter() - start

    update_norm = float(np.max(step * np.abs(scheme.residual(v_ext)))) if n else 0.0
    result = GridFunction(grid=grid, values=v_ext[:n])
    report = SolveReport(
        iterations=iterations,
        update_norm=update_norm,
        residual_norm=rmax,
        tau=tau,
        wall_time=wall,
        tau_bound=tau_bound,
        k_factor=k_factor,
        d_max=scheme.d_max,
        f_sup=scheme.f_sup,
        stop_residual=stop,
        init=controls.init,
    )
    return result, report


def sweep(
    problem: GridProblem,
    grid: Grid2D,
    values: np.ndarray,
    tau: float,
    steps: int = 1,
) -> np.ndarray:
    """Apply ``steps`` damped Jacobi updates to raw node values."""
    scheme = _Scheme(problem, grid)
    n = grid.n_nodes
    v_ext = np.zeros(n + 1)
    v_ext[:n] = np.asarray(values, dtype=float)
    for _ in range(steps):
        v_ext[:n] += tau * scheme.residual(v_ext)
    return v_ext[:n].copy()


def residual_norm(problem: GridProblem, u: GridFunction) -> float:
    """max over in-domain nodes of |F_h[u] + H_h[u] - f|."""
    scheme = _Scheme(problem, u.grid)
    if u.grid.n_nodes == 0:
        return 0.0
    return float(np.max(np.abs(scheme.residual(u.extended()))))


def solution_to_csv(u: GridFunction, path) -> None:
    grid = u.grid
    with open(path, "w", encoding="utf-8") as out:
        out.write(
            f"# h={grid.h:.17g} K={grid.K} nodes={grid.n_nodes}"
            f" radius={grid.domain.radius:.17g}\n"
        )
        out.write("x,y,u\n")
        for (x, y), v in zip(grid.nodes_xy, u.values):
            out.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


def report_to_text(report: SolveReport) -> str:
    lines = [
        f"iterations: {report.iterations}",
        f"tau: {report.tau:.17g}",
        f"tau_bound: {report.tau_bound:.17g}",
        f"k_factor: {report.k_factor:.17g}",
        f"update_norm: {report.update_norm:.17g}",
        f"residual_norm: {report.residual_norm:.17g}",
        f"stop_residual: {report.stop_residual:.17g}",
        f"init: {report.init}",
        f"wall_time_s: {report.wall_time:.3f}",
    ]
    return "\n".join(lines) + "\n"
