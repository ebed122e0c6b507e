"""Barriers on ball-intersection domains.

The supersolution is the smallest of the radial first-zero solutions
centered at the defining balls; since each v is decreasing in distance,
that infimum is v(max_y |x - y|).  The subsolution is the envelope of the
paraboloids (K / 2 beta)(|x - y|^2 - R^2).  Both vanish on the boundary
and sandwich every solution with vanishing boundary data.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ._quadrature import integrate
from .errors import ConfigError, DomainViolationError, NumericError, ThresholdError
from .model import ConvexDomain, Params
from .radial import ProfileBranch, RadialProfile, c1_bound, radial_profile, rbar

__all__ = [
    "BarrierField",
    "build_supersolution",
    "build_subsolution",
    "evaluate_barrier",
    "sample_boundary",
    "barrier_to_csv",
]

_INTERP_BUDGET = 1e-8
_PROFILE_NODES = 4096


@dataclass(frozen=True)
class BarrierField:
    """A super- or subsolution over a ball-intersection domain.

    ``forcing_norm`` is the magnitude the barrier was built for: the
    constant M of the shared radial profile (Super) or the paraboloid
    coefficient K (Sub).
    """

    domain: ConvexDomain
    kind: str  # "Super" | "Sub"
    params: Params
    forcing_norm: float
    profile: RadialProfile | None = None
    _interp: CubicHermiteSpline | None = None

    @property
    def lipschitz_bound(self) -> float:
        if self.kind == "Super":
            if self.forcing_norm == 0.0:
                return 0.0
            return c1_bound(
                dataclasses.replace(self.params, M=self.forcing_norm),
                self.domain.radius,
            )
        return self.forcing_norm * self.domain.radius / self.params.beta

    def __call__(self, x):
        return evaluate_barrier(self, x)


def build_supersolution(domain: ConvexDomain, params: Params, M: float) -> BarrierField:
    """Nonnegative barrier from above: inf over centers of the first-zero
    radial solution at forcing magnitude M (zero field when M = 0)."""
    if M < 0.0 or not math.isfinite(M):
        raise ConfigError("forcing magnitude M must be finite and >= 0")
    if M == 0.0:
        return BarrierField(domain=domain, kind="Super", params=params, forcing_norm=0.0)

    shifted = dataclasses.replace(params, M=M)
    R = domain.radius
    if shifted.superlinear:
        threshold = rbar(shifted)
        if R > threshold * (1.0 + 1e-12):
            raise ThresholdError(
                f"domain radius {R} exceeds the existence threshold "
                f"{threshold} at forcing magnitude {M}"
            )
        branch = ProfileBranch.FIRST_ZERO_SUPERLINEAR
    else:
        branch = ProfileBranch.FIRST_ZERO_SUBLINEAR

    # tight panel budget: ~4k interval errors accumulate into the tabulated
    # u, and the interpolant must stay within 1e-8 of direct quadrature
    prof = radial_profile(branch, R, shifted, node_count=_PROFILE_NODES, panel_tol=1e-13)
    # piecewise cubic with the exact slopes u' = -s; slope estimation would
    # lose two orders on the union-graded grid whose spacing alternates
    r_nodes = np.concatenate([[0.0], prof.r_grid])
    u_nodes = np.concatenate([[prof.u_at_zero], prof.u_values])
    du_nodes = -np.concatenate([[0.0], prof.s_values])
    _check_monotone_cubic(r_nodes, u_nodes, du_nodes)
    interp = CubicHermiteSpline(r_nodes, u_nodes, du_nodes, extrapolate=False)
    _validate_interpolant(interp, prof, shifted)
    return BarrierField(
        domain=domain,
        kind="Super",
        params=params,
        forcing_norm=M,
        profile=prof,
        _interp=interp,
    )


def _check_monotone_cubic(r, u, du):
    # Fritsch-Carlson: a cubic Hermite piece of monotone data stays monotone
    # when both endpoint slopes are within 3x the secant slope
    secant = np.diff(u) / np.diff(r)
    nz = secant != 0.0
    a = du[:-1][nz] / secant[nz]
    b = du[1:][nz] / secant[nz]
    ratios_ok = bool(
        np.all((a >= -1e-12) & (a <= 3.0)) and np.all((b >= -1e-12) & (b <= 3.0))
    )
    flat_ok = bool(np.all(du[:-1][~nz] == 0.0) and np.all(du[1:][~nz] == 0.0))
    if not (ratios_ok and flat_ok):
        raise NumericError("barrier interpolant would not preserve monotonicity")


def _validate_interpolant(interp, prof: RadialProfile, params: Params):
    # spot-check the monotone cubic against direct quadrature of the branch
    from .radial import first_zero  # local to avoid cycle at import time

    rng = np.random.default_rng(0)
    for r in rng.uniform(0.05 * prof.R, 0.95 * prof.R, size=8):
        direct = integrate(lambda t: first_zero(t, params), float(r), prof.R, tol=1e-12)
        err = abs(float(interp(r)) - direct)
        if err > _INTERP_BUDGET:
            raise NumericError(
                "barrier profile interpolation above budget",
                {"radius": float(r), "error": err},
            )


def build_subsolution(domain: ConvexDomain, params: Params, K: float) -> BarrierField:
    """Nonpositive barrier from below: envelope of the paraboloids
    (K / 2 beta)(|x - y|^2 - R^2)."""
    if K < 0.0 or not math.isfinite(K):
        raise ConfigError("paraboloid coefficient K must be finite and >= 0")
    return BarrierField(domain=domain, kind="Sub", params=params, forcing_norm=K)


def evaluate_barrier(field: BarrierField, x):
    """Barrier value at x (or at a batch of points, last axis = coords)."""
    x = np.asarray(x, dtype=float)
    dom = field.domain
    dist = dom.max_center_distance(x)
    inside = dist <= dom.radius * (1.0 + 1e-12) + 1e-12
    if not np.all(inside):
        raise DomainViolationError("point outside the domain closure")
    dist = np.minimum(dist, dom.radius)
    if field.kind == "Sub":
        out = (field.forcing_norm / (2.0 * field.params.beta)) * (
            dist**2 - dom.radius**2
        )
    elif field.forcing_norm == 0.0:
        out = np.zeros_like(dist)
    else:
        out = field._interp(dist)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def sample_boundary(domain: ConvexDomain, count: int = 512) -> np.ndarray:
    """Deterministic points on the boundary of a planar ball intersection.

    Equi-angular arcs per defining ball, filtered to the points lying in
    every other closed ball; the per-ball resolution doubles until at least
    ``count`` points survive.
    """
    if domain.dim != 2:
        raise ConfigError("boundary sampling implemented for planar domains")
    if count < 1:
        raise ConfigError("need a positive sample count")
    centers = domain.center_array()
    per_ball = 256
    for _ in range(16):
        theta = np.arange(per_ball) * (2.0 * math.pi / per_ball)
        ring = domain.radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        pts = (centers[:, None, :] + ring[None, :, :]).reshape(-1, 2)
        keep = domain.max_center_distance(pts) <= domain.radius * (1.0 + 1e-12)
        pts = pts[keep]
        if pts.shape[0] >= count:
            return pts
        per_ball *= 2
    raise NumericError(
        "boundary sampling failed to reach the requested count",
        {"requested": count, "found": int(pts.shape[0])},
    )


def barrier_to_csv(field: BarrierField, path, resolution: int = 64) -> None:
    """Lattice sample of the barrier over the domain, columns x, y, value."""
    if field.domain.dim != 2:
        raise ConfigError("CSV export implemented for planar domains")
    centers = field.domain.center_array()
    R = field.domain.radius
    lo = centers.min(axis=0) - R
    hi = centers.max(axis=0) + R
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        fh.write(
            f"# kind={field.kind} forcing_norm={field.forcing_norm!r} "
            f"R={R!r} centers={field.domain.centers!r}\n"
        )
        w.writerow(["x", "y", "value"])
        for yv in ys:
            row_pts = np.stack([xs, np.full_like(xs, yv)], axis=1)
            dist = field.domain.max_center_distance(row_pts)
            ok = dist <= R * (1.0 + 1e-12)
            if not np.any(ok):
                continue
            vals = evaluate_barrier(field, row_pts[ok])
            vals = np.atleast_1d(vals)
            for xv, v in zip(xs[ok], vals):
                w.writerow([f"{xv:.17g}", f"{yv:.17g}", f"{v:.17g}"])
