"""Radial solutions on balls via root tracking of the profile function.

The profile phi(r, s) = -beta s / r + b s^p + M encodes the equation
satisfied by s(r) = -u'(r) for radial u.  Everything else follows from its
zeros: the first zero gives the bounded solution, the second zero (p > 1)
the blow-up family, and u itself is recovered by quadrature u(r) =
integral of s from r to R.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from ._quadrature import integrate, integrate_intervals
from .errors import (
    BranchError,
    ConfigError,
    DomainViolationError,
    NoRootError,
    NumericError,
)
from .model import Params

__all__ = [
    "ProfileBranch",
    "RadialProfile",
    "BoundedOrBlowup",
    "phi",
    "dphi_ds",
    "critical_s1",
    "rbar",
    "first_zero",
    "second_zero",
    "radial_profile",
    "classify_blowup",
    "c1_bound",
    "explicit_sublinear_solution",
    "explicit_sublinear_form",
    "ExplicitSublinearForm",
    "profile_to_csv",
]

ENDPOINT_RTOL = 1e-10  # threshold-radius slack, scaled by (1 + M)


class ProfileBranch(enum.Enum):
    FIRST_ZERO_SUPERLINEAR = "FirstZeroSuperlinear"
    SECOND_ZERO_SUPERLINEAR = "SecondZeroSuperlinear"
    FIRST_ZERO_SUBLINEAR = "FirstZeroSublinear"
    ZERO_M = "ZeroM"

    @classmethod
    def parse(cls, tag: str) -> "ProfileBranch":
        for member in cls:
            if member.value == tag or member.name == tag.upper():
                return member
        raise ConfigError(f"unknown profile branch {tag!r}")

    @property
    def is_first_zero(self) -> bool:
        return self in (
            ProfileBranch.FIRST_ZERO_SUPERLINEAR,
            ProfileBranch.FIRST_ZERO_SUBLINEAR,
        )


# ---------------------------------------------------------------------------
# the profile function and its threshold


def _check_radius(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0) or not np.all(np.isfinite(r)):
        raise DomainViolationError("radius must be positive and finite")
    return r


def phi(r, s, params: Params):
    """phi(r, s) = -beta s / r + b s^p + M."""
    r = _check_radius(r)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise DomainViolationError("profile argument s must be nonnegative")
    out = -params.beta * s / r + params.b * s**params.p + params.M
    return float(out) if out.ndim == 0 else out


def dphi_ds(r, s, params: Params):
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    out = -params.beta / r + params.p * params.b * s ** (params.p - 1.0)
    return float(out) if out.ndim == 0 else out


def critical_s1(r, params: Params):
    """The unique stationary point of s -> phi(r, s) on (0, inf).

    One formula covers both branches: (beta/(r p b))^(1/(p-1)) equals
    (b p r / beta)^(1/(1-p)) because the exponent flips sign with p - 1.
    """
    r = _check_radius(r)
    out = (params.beta / (r * params.p * params.b)) ** (1.0 / (params.p - 1.0))
    return float(out) if out.ndim == 0 else out


def rbar(params: Params) -> float:
    """Largest ball radius carrying a first-zero profile (superlinear)."""
    if not params.superlinear:
        raise BranchError("no threshold radius in the sublinear regime")
    if params.M == 0.0:
        return math.inf
    p = params.p
    return (
        params.beta
        * (p - 1.0) ** ((p - 1.0) / p)
        / (p * params.b ** (1.0 / p) * params.M ** ((p - 1.0) / p))
    )


# ---------------------------------------------------------------------------
# root finding

_BISECT_ITER = 110
_NEWTON_STEPS = 5


def _phi_raw(r, s, params):
    # no argument validation; r, s are arrays prepared by the caller
    return -params.beta * s / r + params.b * s**params.p + params.M


def _bisect(r, lo, hi, params, sign_lo):
    """Vectorized bisection for phi(r, .) = 0 on [lo, hi].

    ``sign_lo`` is the sign of phi at the lower end (+1 for decreasing
    branches, -1 for the increasing second-zero side).  Freezes when the
    bracket reaches spacing of adjacent floats.
    """
    lo = lo.copy()
    hi = hi.copy()
    for it in range(_BISECT_ITER):
        mid = 0.5 * (lo + hi)
        fmid = _phi_raw(r, mid, params)
        same = (np.sign(fmid) == sign_lo) | (fmid == 0.0)
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
        if it % 8 == 7 and np.all(hi - lo <= 4.0 * np.spacing(hi)):
            break
    return lo, hi


def _polish(r, lo, hi, params):
    """Newton polish inside the final bracket; keeps the better iterate.

    Steps are skipped wherever dphi/ds is degenerate (the threshold
    endpoint), where plain bisection output is already the answer.
    """
    s = 0.5 * (lo + hi)
    f = _phi_raw(r, s, params)
    scale = np.maximum(
        1.0, np.maximum(params.beta * s / r, params.b * s**params.p)
    )
    for _ in range(_NEWTON_STEPS):
        df = -params.beta / r + params.p * params.b * s ** (params.p - 1.0)
        ok = np.abs(df) > 1e-8 * scale
        step = np.where(ok, f / np.where(ok, df, 1.0), 0.0)
        cand = np.clip(s - step, lo, hi)
        fcand = _phi_raw(r, cand, params)
        better = np.abs(fcand) < np.abs(f)
        s = np.where(better, cand, s)
        f = np.where(better, fcand, f)
        if not np.any(better):
            break
    return s, f


def _root_tolerance(r, s, params):
    scale = np.maximum(
        1.0, np.maximum(params.beta * s / r, params.b * s**params.p)
    )
    return 1e-12 * scale


def first_zero(r, params: Params):
    """Smallest zero of phi(r, .): in (0, s1] superlinearly, in (s1, inf)
    sublinearly.  Scalar in, scalar out; arrays pass through elementwise."""
    r_arr = _check_radius(np.atleast_1d(r))
    scalar = np.asarray(r, dtype=float).ndim == 0

    if params.M == 0.0 and params.superlinear:
        out = np.zeros_like(r_arr)
        return float(out[0]) if scalar else out

    s1 = critical_s1(r_arr, params)
    if params.superlinear:
        gap = _phi_raw(r_arr, s1, params)
        tol_gap = ENDPOINT_RTOL * (1.0 + params.M)
        if np.any(gap > tol_gap):
            k = int(np.argmax(gap))
            raise NoRootError(
                f"no profile root at r={r_arr[k]:.17g}: phi stays above zero",
                gap=float(gap[k]),
                radius=float(r_arr[k]),
            )
        # |gap| ~ 0 means the double root at the threshold: s1 IS the root
        # there, and bisection would only chase rounding noise
        at_end = np.abs(gap) <= tol_gap
        lo = np.zeros_like(r_arr)
        hi = s1.copy()
    else:
        # phi rises to its max at s1 then falls to -inf: the zero lies in
        # (s1, A + B] with A = 2Mr/beta, B = (2br/beta)^(1/(1-p)), because
        # beta(A+B)/r = 2M + 2bB^p, b(A+B)^p <= bA^p + bB^p, and
        # bA^p <= max(M, bB^p) depending on which of A, B is larger
        with np.errstate(over="ignore"):
            upper = 2.0 * params.M * r_arr / params.beta + (
                2.0 * params.b * r_arr / params.beta
            ) ** (1.0 / (1.0 - params.p))
        if not np.all(np.isfinite(upper)):
            k = int(np.argmin(np.isfinite(upper)))
            raise NumericError(
                f"sublinear root at r={r_arr[k]:.17g} overflows double precision"
            )
        lo = s1.copy()
        hi = upper
        at_end = np.zeros(r_arr.shape, dtype=bool)

    lo, hi = _bisect(r_arr, lo, hi, params, sign_lo=1.0)
    s, f = _polish(r_arr, lo, hi, params)
    s = np.where(at_end, s1, s) if params.superlinear else s
    _validate_root(r_arr, s, f, at_end, params)
    return float(s[0]) if scalar else s


def second_zero(r, params: Params):
    """Largest zero of phi(r, .), superlinear only; >= s1(r)."""
    if not params.superlinear:
        raise BranchError("second zero exists only for p > 1")
    r_arr = _check_radius(np.atleast_1d(r))
    scalar = np.asarray(r, dtype=float).ndim == 0

    if params.M == 0.0:
        out = (params.beta / (params.b * r_arr)) ** (1.0 / (params.p - 1.0))
        return float(out[0]) if scalar else out

    s1 = critical_s1(r_arr, params)
    gap = _phi_raw(r_arr, s1, params)
    tol_gap = ENDPOINT_RTOL * (1.0 + params.M)
    if np.any(gap > tol_gap):
        k = int(np.argmax(gap))
        raise NoRootError(
            f"no profile root at r={r_arr[k]:.17g}: phi stays above zero",
            gap=float(gap[k]),
            radius=float(r_arr[k]),
        )
    at_end = np.abs(gap) <= tol_gap

    if params.p > 2.0:
        # phi(r, p^(1/(p-1)) s1) = M > 0 brackets the root from above
        hi = params.p ** (1.0 / (params.p - 1.0)) * s1
    else:
        hi = 2.0 * s1
        f_hi = _phi_raw(r_arr, hi, params)
        for _ in range(200):
            still = f_hi < 0.0
            if not np.any(still):
                break
            hi = np.where(still, 2.0 * hi, hi)
            f_hi = np.where(still, _phi_raw(r_arr, hi, params), f_hi)
        else:
            raise NumericError("doubling search found no sign change")

    lo, hi = _bisect(r_arr, s1.copy(), hi, params, sign_lo=-1.0)
    s, f = _polish(r_arr, lo, hi, params)
    s = np.where(at_end, s1, s)
    _validate_root(r_arr, s, f, at_end, params)
    return float(s[0]) if scalar else s


def _validate_root(r, s, f, at_end, params):
    f = np.where(at_end, 0.0, f)  # endpoint roots are exact by fiat
    tol = _root_tolerance(r, s, params)
    bad = np.abs(f) > tol
    if np.any(bad):
        k = int(np.argmax(np.abs(f) / tol))
        raise NumericError(
            "root residual above tolerance",
            {"radius": float(r[k]), "residual": float(f[k]), "tol": float(tol[k])},
        )


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class RadialProfile:
    """Tabulated (r, s, u) for one root branch on the ball of radius R.

    ``u_at_zero`` is the limit value at the center, +inf for the divergent
    second-zero branches with p <= 2.  ``at_threshold`` records that R sits
    at the superlinear existence threshold (up to tolerance), where u''
    blows up at the boundary.
    """

    params: Params
    R: float
    branch: ProfileBranch
    r_grid: np.ndarray
    s_values: np.ndarray
    u_values: np.ndarray
    u_at_zero: float
    residuals: np.ndarray
    at_threshold: bool = False

    def __post_init__(self):
        for arr in (self.r_grid, self.s_values, self.u_values, self.residuals):
            arr.flags.writeable = False

    def interpolate_s(self, r) -> np.ndarray:
        return np.interp(r, self.r_grid, self.s_values)

    def interpolate_u(self, r) -> np.ndarray:
        return np.interp(r, self.r_grid, self.u_values)


def _graded_nodes(R: float, node_count: int) -> np.ndarray:
    # both-end clustering: R (i/k)^1.5 resolves r -> 0, its mirror resolves
    # the u'' blow-up at the threshold end
    k = max(node_count // 2, 8)
    t = (np.arange(1, k + 1) / k) ** 1.5
    nodes = np.union1d(R * t, R * (1.0 - t))
    nodes = nodes[nodes > 0.0]
    nodes = nodes[np.concatenate([[True], np.diff(nodes) > 1e-13 * R])]
    if nodes[-1] != R:
        nodes = np.append(nodes, R)
    return nodes


def _graded_nodes_log(R: float, r_min: float, node_count: int) -> np.ndarray:
    if not 0.0 < r_min < R:
        raise ConfigError("need 0 < r_min < R for second-zero grids")
    k = max(node_count // 2, 8)
    t = (np.arange(0, k + 1) / k) ** 1.5
    x = np.union1d(t, 1.0 - t)
    nodes = r_min * (R / r_min) ** x
    nodes = nodes[np.concatenate([[True], np.diff(nodes) > 1e-13 * R])]
    nodes[0], nodes[-1] = r_min, R
    return nodes


def _merge_radii(nodes: np.ndarray, include_radii, R: float) -> np.ndarray:
    if include_radii is None or len(include_radii) == 0:
        return nodes
    extra = np.asarray(sorted(include_radii), dtype=float)
    if np.any(extra <= 0.0) or np.any(extra > R * (1.0 + 1e-12)):
        raise ConfigError("include_radii must lie in (0, R]")
    return np.union1d(nodes, np.minimum(extra, R))


def radial_profile(
    branch: ProfileBranch,
    R: float,
    params: Params,
    node_count: int = 512,
    r_min: float = 1e-6,
    include_radii=(),
    panel_tol: float = 1e-10,
) -> RadialProfile:
    """Tabulate a root branch on (0, R] and integrate it into u.

    First-zero grids are graded toward both ends and u(0) is completed by
    quadrature over [0, r_1] with the continuous extension s(0) = 0;
    second-zero grids are log-graded on [r_min, R] since the branch
    diverges at the center.
    """
    if isinstance(branch, str):
        branch = ProfileBranch.parse(branch)
    if node_count < 64:
        raise ConfigError("node_count must be at least 64")
    if not (math.isfinite(R) and R > 0.0):
        raise ConfigError("ball radius must be positive and finite")

    if branch is ProfileBranch.ZERO_M:
        if params.M != 0.0:
            raise BranchError("ZeroM branch requires M = 0")
    elif branch is ProfileBranch.FIRST_ZERO_SUBLINEAR:
        if params.superlinear:
            raise BranchError("sublinear branch requires p < 1")
    else:
        if not params.superlinear:
            raise BranchError(f"{branch.value} requires p > 1")

    at_threshold = False
    if params.superlinear and params.M > 0.0:
        threshold = rbar(params)
        if R > threshold * (1.0 + ENDPOINT_RTOL * (1.0 + params.M)):
            raise NoRootError(
                f"ball radius {R} exceeds the existence threshold {threshold}",
                gap=float(phi(R, critical_s1(R, params), params)),
                radius=R,
            )
        at_threshold = abs(R - threshold) <= ENDPOINT_RTOL * (1.0 + params.M) * threshold

    second = branch is ProfileBranch.SECOND_ZERO_SUPERLINEAR or (
        branch is ProfileBranch.ZERO_M and params.superlinear
    )

    if second:
        if include_radii is not None and len(include_radii) > 0:
            r_min = min(r_min, float(min(include_radii)))
        grid = _merge_radii(_graded_nodes_log(R, r_min, node_count), include_radii, R)
        root = second_zero
    else:
        grid = _merge_radii(_graded_nodes(R, node_count), include_radii, R)
        root = first_zero

    s_vals = root(grid, params)
    residuals = _phi_raw(grid, s_vals, params)

    if params.M == 0.0:
        u_vals, u_zero = _zero_m_integrals(branch, grid, R, params, second)
    else:
        panel = integrate_intervals(lambda t: root(t, params), grid, panel_tol=panel_tol)
        u_vals = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])
        if second:
            u_zero = _second_zero_u_at_center(grid[0], float(u_vals[0]), params)
        else:
            head = integrate(
                lambda t: _first_zero_extended(t, params), 0.0, float(grid[0]),
                tol=1e-11,
            )
            u_zero = float(u_vals[0]) + head

    prof = RadialProfile(
        params=params,
        R=R,
        branch=branch,
        r_grid=grid,
        s_values=np.asarray(s_vals, dtype=float),
        u_values=np.asarray(u_vals, dtype=float),
        u_at_zero=u_zero,
        residuals=np.asarray(residuals, dtype=float),
        at_threshold=at_threshold,
    )
    _validate_profile(prof, second)
    return prof


def _first_zero_extended(t, params):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    if np.any(pos):
        out[pos] = first_zero(t[pos], params)
    return out


def _second_zero_u_at_center(r1: float, u_r1: float, params: Params) -> float:
    """u(0+) for the second-zero branch: +inf for p <= 2, else the
    convergent improper integral, split as a log-substituted adaptive part
    on [delta, r1] plus the closed-form head of the M = 0 asymptote."""
    if params.p <= 2.0:
        return math.inf
    delta = r1 * 2.0**-40
    # s2(t) = (beta/(b t))^(1/(p-1)) + O(t); the O(t) part integrates to
    # O(delta^2), far below tolerance
    q = 1.0 / (params.p - 1.0)
    head = (
        (params.beta / params.b) ** q
        * ((params.p - 1.0) / (params.p - 2.0))
        * delta ** ((params.p - 2.0) / (params.p - 1.0))
    )
    body = integrate(
        lambda y: second_zero(np.exp(y), params) * np.exp(y),
        math.log(delta),
        math.log(r1),
        tol=1e-11,
    )
    return u_r1 + body + head


def _zero_m_integrals(branch, grid, R, params, second):
    """Closed-form u for the M = 0 families (no quadrature needed)."""
    b, beta, p = params.b, params.beta, params.p
    if second:
        q = 1.0 / (p - 1.0)
        coef = (beta / b) ** q
        if p == 2.0:
            u_vals = coef * np.log(R / grid)
            u_zero = math.inf
        else:
            g = (p - 2.0) / (p - 1.0)
            u_vals = coef * (p - 1.0) / (p - 2.0) * (R**g - grid**g)
            u_zero = (
                math.inf
                if p < 2.0
                else float(coef * (p - 1.0) / (p - 2.0) * R**g)
            )
    elif params.superlinear:
        u_vals = np.zeros_like(grid)  # s0 = 0 identically
        u_zero = 0.0
    else:
        g = (2.0 - p) / (1.0 - p)
        coef = (b / beta) ** (1.0 / (1.0 - p)) / g
        u_vals = coef * (R**g - grid**g)
        u_zero = float(coef * R**g)
    return u_vals, u_zero


def _validate_profile(prof: RadialProfile, second: bool):
    params = prof.params
    slack = 1e-9 * (1.0 + params.M) + 64.0 * np.finfo(float).eps * np.maximum(
        params.M,
        np.maximum(
            params.beta * prof.s_values / prof.r_grid,
            params.b * prof.s_values**params.p,
        ),
    )
    if np.any(np.abs(prof.residuals) > slack):
        k = int(np.argmax(np.abs(prof.residuals) - slack))
        raise NumericError(
            "profile residual above tolerance",
            {"radius": float(prof.r_grid[k]), "residual": float(prof.residuals[k])},
        )
    if np.any(prof.s_values < 0.0):
        raise NumericError("negative profile value")
    ds = np.diff(prof.s_values)
    wiggle = 1e-12 * max(1.0, float(np.max(prof.s_values)))
    if second:
        if np.any(ds > wiggle):
            raise NumericError("second-zero branch must be nonincreasing")
    elif np.any(ds < -wiggle):
        raise NumericError("first-zero branch must be nondecreasing")
    du = np.diff(prof.u_values)
    if np.any(du > 1e-12 * max(1.0, float(np.max(np.abs(prof.u_values))))):
        raise NumericError("u must be nonincreasing in r")
    if prof.u_values[-1] != 0.0:
        raise NumericError("u(R) must vanish")


# ---------------------------------------------------------------------------
# classification, bounds, explicit solutions


@dataclass(frozen=True)
class BoundedOrBlowup:
    kind: str  # "Blowup" | "Bounded"
    bound: float | None = None


def classify_blowup(params: Params) -> BoundedOrBlowup:
    """Center behavior of the second-zero family: divergent for p in (1,2],
    bounded with an explicit sup bound for p > 2."""
    if not params.superlinear:
        raise BranchError("blow-up classification applies to p > 1 only")
    if params.p <= 2.0:
        return BoundedOrBlowup(kind="Blowup")
    if params.M == 0.0:
        return BoundedOrBlowup(kind="Bounded", bound=math.inf)
    q = 1.0 / (params.p - 1.0)
    bound = (
        (params.beta / params.b) ** q
        * (params.p - 1.0)
        / (params.p - 2.0)
        * rbar(params) ** ((params.p - 2.0) / (params.p - 1.0))
    )
    return BoundedOrBlowup(kind="Bounded", bound=bound)


def c1_bound(params: Params, R: float) -> float:
    """Uniform C^1 bound for the first-zero solution on the ball of radius R."""
    if not (R > 0.0 and math.isfinite(R)):
        raise ConfigError("ball radius must be positive and finite")
    if params.superlinear:
        if params.M == 0.0:
            return math.inf  # threshold is infinite and the bound degenerates
        threshold = rbar(params)
        if R > threshold * (1.0 + ENDPOINT_RTOL * (1.0 + params.M)):
            raise NoRootError(
                f"radius {R} exceeds the existence threshold {threshold}",
                gap=float(phi(R, critical_s1(R, params), params)),
                radius=R,
            )
        return (
            params.beta / (threshold * params.p * params.b)
        ) ** (1.0 / (params.p - 1.0)) * (threshold + 1.0)
    lo = params.M ** (1.0 / params.p)
    hi = ((1.0 + params.b) * R / params.beta) ** (1.0 / (1.0 - params.p))
    return (1.0 + R) * max(lo, hi)


_SUBLINEAR_KINDS = ("Lambda1", "LambdaI", "Laplacian", "MongeAmpere")


@dataclass(frozen=True)
class ExplicitSublinearForm:
    """One closed-form sublinear solution u(r) = sign * K (R^g - r^g).

    ``sign`` is +1 for the decreasing families and -1 for the convex
    increasing Monge-Ampere one; du and ddu are analytic derivatives used
    by residual checks.
    """

    kind: str
    p: float
    R: float
    N: int
    K: float
    g: float
    sign: float

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = self.sign * self.K * (self.R**self.g - r**self.g)
        return float(out) if out.ndim == 0 else out

    def du(self, r):
        r = np.asarray(r, dtype=float)
        out = -self.sign * self.K * self.g * r ** (self.g - 1.0)
        return float(out) if out.ndim == 0 else out

    def ddu(self, r):
        r = np.asarray(r, dtype=float)
        out = -self.sign * self.K * self.g * (self.g - 1.0) * r ** (self.g - 2.0)
        return float(out) if out.ndim == 0 else out


def explicit_sublinear_form(
    kind: str, p: float, R: float, N: int = 2
) -> ExplicitSublinearForm:
    if kind not in _SUBLINEAR_KINDS:
        raise ConfigError(f"kind must be one of {_SUBLINEAR_KINDS}")
    if not 0.0 < p < 1.0:
        raise ConfigError("explicit sublinear forms need p in (0, 1)")
    if not (R > 0.0 and math.isfinite(R)):
        raise ConfigError("ball radius must be positive and finite")
    if N < 2:
        raise ConfigError("dimension must be at least 2")
    g = (2.0 - p) / (1.0 - p)
    sign = 1.0
    if kind == "Lambda1":
        # K g = (1-p)^(1/(1-p))
        K = (1.0 - p) ** ((2.0 - p) / (1.0 - p)) / (2.0 - p)
    elif kind == "LambdaI":
        K = (1.0 - p) / (2.0 - p)  # K g = 1
    elif kind == "Laplacian":
        K = (N - 1.0 + 1.0 / (1.0 - p)) ** (-1.0 / (1.0 - p)) / g
    else:  # MongeAmpere: convex increasing solution, u <= 0
        K = (1.0 - p) ** (1.0 / (N * (1.0 - p))) / g
        sign = -1.0
    return ExplicitSublinearForm(kind=kind, p=p, R=R, N=N, K=K, g=g, sign=sign)


def explicit_sublinear_solution(
    kind: str, p: float, R: float, N: int, r
) -> float:
    """Closed-form value at radius r of the chosen sublinear model problem."""
    form = explicit_sublinear_form(kind, p, R, N)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0) or np.any(r_arr > R * (1.0 + 1e-12)):
        raise DomainViolationError("radius outside [0, R]")
    return form.value(r)


# ---------------------------------------------------------------------------
# export


def profile_to_csv(prof: RadialProfile, path) -> None:
    """CSV with columns r, s, u, residual (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        fh.write(
            f"# branch={prof.branch.value} beta={prof.params.beta!r} "
            f"b={prof.params.b!r} c={prof.params.c!r} d={prof.params.d!r} "
            f"p={prof.params.p!r} M={prof.params.M!r} R={prof.R!r}\n"
        )
        w.writerow(["r", "s", "u", "residual"])
        for r, s, u, res in zip(
            prof.r_grid, prof.s_values, prof.u_values, prof.residuals
        ):
            w.writerow([f"{v:.17g}" for v in (r, s, u, res)])
