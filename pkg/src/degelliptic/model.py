"""Problem data and pointwise evaluation.

Scalar parameter set, small symmetric matrices with their own eigenvalue
kernel, the operator and Hamiltonian catalogs, ball-intersection domains,
and sampling-based checkers for the structural inequalities the whole
construction rests on.

Everything here is a pure function of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ConfigError, DomainViolationError, NumericError

__all__ = [
    "Params",
    "SymMatrix",
    "ScalarField",
    "MatrixField",
    "WeightedEigenvalues",
    "LambdaK",
    "TruncatedLower",
    "TruncatedUpper",
    "MinMax",
    "NonconvexPair",
    "LinearDegenerate",
    "CoefficientLambdaN",
    "MongeAmpere",
    "SupInf",
    "OperatorSpec",
    "PowerNorm",
    "AnisotropicPower",
    "CompactPerturbation",
    "HamiltonianSpec",
    "ConvexDomain",
    "eigenvalues_sorted",
    "evaluate_operator",
    "evaluate_hamiltonian",
    "ellipticity_constant",
    "check_structural_conditions",
    "compact_perturbation_constant",
    "ConditionResult",
    "ConditionReport",
]

_P_GUARD = 1e-6  # reject exponents this close to the excluded p = 1


# ---------------------------------------------------------------------------
# scalar problem data


@dataclass(frozen=True)
class Params:
    """Scalar problem data (ellipticity constant, gradient growth, forcing).

    ``beta``  ellipticity constant of the operator,
    ``b, c``  gradient growth coefficients, ``d`` lower bound of H,
    ``p``     gradient exponent (p > 0, p != 1),
    ``M``     magnitude of the constant right-hand side.
    """

    beta: float
    b: float
    c: float = 0.0
    d: float = 0.0
    p: float = 2.0
    M: float = 1.0

    def __post_init__(self):
        vals = (self.beta, self.b, self.c, self.d, self.p, self.M)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError("non-finite parameter value")
        if self.beta <= 0 or self.b <= 0:
            raise ConfigError("beta and b must be positive")
        if self.c < 0 or self.d < 0 or self.M < 0:
            raise ConfigError("c, d, M must be nonnegative")
        if self.p <= 0:
            raise ConfigError("gradient exponent p must be positive")
        if abs(self.p - 1.0) < _P_GUARD:
            raise ConfigError(
                f"gradient exponent p={self.p} too close to the excluded p=1"
            )

    @property
    def superlinear(self) -> bool:
        return self.p > 1.0


# ---------------------------------------------------------------------------
# small symmetric matrices and their eigenvalues


class SymMatrix:
    """Symmetric N x N matrix, 2 <= N <= 8.

    Symmetry is exact by construction: only the upper triangle of the input
    is read and mirrored.
    """

    __slots__ = ("n", "a")

    def __init__(self, entries):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError("matrix must be square")
        n = a.shape[0]
        if not (2 <= n <= 8):
            raise ConfigError(f"matrix dimension {n} outside [2, 8]")
        if not np.all(np.isfinite(a)):
            raise ConfigError("matrix entries must be finite")
        upper = np.triu(a)
        full = upper + np.triu(a, 1).T
        full.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "a", full)

    def __setattr__(self, *_):  # immutable
        raise AttributeError("SymMatrix is immutable")

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.a + other.a)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.a - other.a)

    def __mul__(self, scalar: float) -> "SymMatrix":
        return SymMatrix(self.a * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SymMatrix({self.a.tolist()})"


def _eig2(a: np.ndarray) -> np.ndarray:
    # closed form for the 2x2 case
    half_tr = 0.5 * (a[0, 0] + a[1, 1])
    half_gap = 0.5 * (a[0, 0] - a[1, 1])
    rad = math.hypot(half_gap, a[0, 1])
    return np.array([half_tr - rad, half_tr + rad])


def _jacobi_eig(a: np.ndarray) -> np.ndarray:
    # cyclic Jacobi rotations; quadratic convergence makes 60 sweeps ample
    a = a.copy()
    n = a.shape[0]
    scale = max(1.0, float(np.sqrt(np.sum(a * a))))
    tol = 1e-14 * scale
    for _ in range(60):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < abs(diff) * 1e-200:
                    # the angle underflows: the rotation is the identity
                    # at working precision, so drop the pair (far below tol)
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                if abs(theta) > 1e150:  # theta^2 would overflow; t ~ 1/(2 theta)
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (
                        abs(theta) + math.sqrt(theta * theta + 1.0)
                    )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0  # rotation zeroes this pair exactly
    raise NumericError("Jacobi eigenvalue iteration did not converge")


def eigenvalues_sorted(x: SymMatrix) -> np.ndarray:
    """Eigenvalues in nondecreasing order."""
    if x.n == 2:
        return _eig2(x.a)
    return _jacobi_eig(x.a)


# ---------------------------------------------------------------------------
# plug-in coefficient fields (declared bounds are trusted inputs)


@dataclass(frozen=True)
class ScalarField:
    """Scalar coefficient x -> a(x) with declared inf/sup bounds."""

    fn: Callable[[np.ndarray], float | np.ndarray]
    lower: float
    upper: float
    name: str = "field"

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    @classmethod
    def constant(cls, value: float, name: str = "const") -> "ScalarField":
        v = float(value)
        return cls(fn=lambda _x, _v=v: _v, lower=v, upper=v, name=name)

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return (self.lower, self.upper, self.name) == (
            other.lower,
            other.upper,
            other.name,
        )

    def __hash__(self):
        return hash((self.lower, self.upper, self.name))


@dataclass(frozen=True)
class MatrixField:
    """Matrix coefficient x -> Sigma(x); ``lambda_min_sts`` is the declared
    infimum over x of the smallest eigenvalue of Sigma^T Sigma and
    ``lambda_max_sts`` the declared infimum of the largest one."""

    fn: Callable[[np.ndarray], np.ndarray]
    lambda_min_sts: float
    lambda_max_sts: float
    name: str = "sigma"

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    @classmethod
    def constant(cls, sigma, name: str = "const") -> "MatrixField":
        s = np.asarray(sigma, dtype=float)
        sts = s.T @ s
        ev = np.linalg.eigvalsh(sts)
        s.flags.writeable = False
        return cls(
            fn=lambda _x, _s=s: _s,
            lambda_min_sts=float(ev[0]),
            lambda_max_sts=float(ev[-1]),
            name=name,
        )

    def __eq__(self, other):
        if not isinstance(other, MatrixField):
            return NotImplemented
        return (self.lambda_min_sts, self.lambda_max_sts, self.name) == (
            other.lambda_min_sts,
            other.lambda_max_sts,
            other.name,
        )

    def __hash__(self):
        return hash((self.lambda_min_sts, self.lambda_max_sts, self.name))


# ---------------------------------------------------------------------------
# operator catalog


@dataclass(frozen=True)
class WeightedEigenvalues:
    """F(X) = sum_i alpha_i * lambda_i(X), alphas paired with the sorted
    eigenvalues (alpha_1 with the smallest)."""

    alphas: tuple[float, ...]

    def __post_init__(self):
        if len(self.alphas) < 2:
            raise ConfigError("need at least two eigenvalue weights")
        if any(a < 0 for a in self.alphas):
            raise ConfigError("eigenvalue weights must be nonnegative")
        if sum(self.alphas) <= 0:
            raise ConfigError("eigenvalue weights must not all vanish")


@dataclass(frozen=True)
class LambdaK:
    """F(X) = lambda_index(X), 1-based index into the sorted eigenvalues."""

    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ConfigError("eigenvalue index is 1-based")


@dataclass(frozen=True)
class TruncatedLower:
    """Sum of the k smallest eigenvalues."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("truncation order must be >= 1")


@dataclass(frozen=True)
class TruncatedUpper:
    """Sum of the k largest eigenvalues."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("truncation order must be >= 1")


@dataclass(frozen=True)
class MinMax:
    """F(X) = lambda_1(X) + lambda_N(X)."""


@dataclass(frozen=True)
class NonconvexPair:
    """F(X) = lambda_i(X) - (lambda_j(X))^-  (negative part)."""

    i: int
    j: int

    def __post_init__(self):
        if self.i < 1 or self.j < 1:
            raise ConfigError("eigenvalue indices are 1-based")


@dataclass(frozen=True)
class LinearDegenerate:
    """F(x, X) = Tr(Sigma(x)^T Sigma(x) X)."""

    sigma: MatrixField

    def __post_init__(self):
        if self.sigma.lambda_min_sts < 0:
            raise ConfigError("Sigma^T Sigma must be positive semidefinite")
        if self.sigma.lambda_max_sts <= 0:
            raise ConfigError("inf_x lambda_N(Sigma^T Sigma) must be positive")


@dataclass(frozen=True)
class CoefficientLambdaN:
    """F(x, X) = a(x) * lambda_N(X) with inf a > 0."""

    a: ScalarField

    def __post_init__(self):
        if self.a.lower <= 0:
            raise ConfigError("coefficient must have positive infimum")


@dataclass(frozen=True)
class MongeAmpere:
    """F(X) = det(X)^(1/N) on the cone of nonnegative matrices."""


@dataclass(frozen=True)
class SupInf:
    """F = max over rows of (min over each row's members)."""

    rows: tuple[tuple["OperatorSpec", ...], ...]

    def __post_init__(self):
        if not self.rows or any(len(r) == 0 for r in self.rows):
            raise ConfigError("sup-inf family must be nonempty")


OperatorSpec = Union[
    WeightedEigenvalues,
    LambdaK,
    TruncatedLower,
    TruncatedUpper,
    MinMax,
    NonconvexPair,
    LinearDegenerate,
    CoefficientLambdaN,
    MongeAmpere,
    SupInf,
]

MA_CONE_TOL = 1e-10  # tolerance for numerical nonnegativity, then clamp


def evaluate_operator(spec: OperatorSpec, x, X: SymMatrix) -> float:
    """Pointwise value F(x, X). ``x`` may be None for x-independent specs."""
    lam = eigenvalues_sorted(X)
    n = X.n
    if isinstance(spec, WeightedEigenvalues):
        if len(spec.alphas) != n:
            raise ConfigError("weight count does not match matrix dimension")
        return float(np.dot(spec.alphas, lam))
    if isinstance(spec, LambdaK):
        if spec.index > n:
            raise ConfigError(f"eigenvalue index {spec.index} > N={n}")
        return float(lam[spec.index - 1])
    if isinstance(spec, TruncatedLower):
        if spec.k > n:
            raise ConfigError(f"truncation order {spec.k} > N={n}")
        return float(np.sum(lam[: spec.k]))
    if isinstance(spec, TruncatedUpper):
        if spec.k > n:
            raise ConfigError(f"truncation order {spec.k} > N={n}")
        return float(np.sum(lam[n - spec.k :]))
    if isinstance(spec, MinMax):
        return float(lam[0] + lam[-1])
    if isinstance(spec, NonconvexPair):
        if spec.i > n or spec.j > n:
            raise ConfigError("eigenvalue index exceeds matrix dimension")
        return float(lam[spec.i - 1] - max(-lam[spec.j - 1], 0.0))
    if isinstance(spec, LinearDegenerate):
        s = spec.sigma(x if x is not None else np.zeros(n))
        return float(np.trace(s.T @ s @ X.a))
    if isinstance(spec, CoefficientLambdaN):
        a = float(spec.a(x if x is not None else np.zeros(n)))
        return a * float(lam[-1])
    if isinstance(spec, MongeAmpere):
        if lam[0] < -MA_CONE_TOL:
            raise DomainViolationError(
                f"matrix outside the nonnegative cone (lambda_1 = {lam[0]:.3e})"
            )
        clamped = np.maximum(lam, 0.0)
        return float(np.prod(clamped) ** (1.0 / n))
    if isinstance(spec, SupInf):
        return max(
            min(evaluate_operator(m, x, X) for m in row) for row in spec.rows
        )
    raise ConfigError(f"unknown operator spec {spec!r}")


def ellipticity_constant(spec: OperatorSpec) -> float:
    """The catalog's stated ellipticity constant for ``spec``."""
    if isinstance(spec, WeightedEigenvalues):
        return float(sum(spec.alphas))
    if isinstance(spec, (LambdaK, NonconvexPair, MongeAmpere)):
        return 1.0
    if isinstance(spec, (TruncatedLower, TruncatedUpper)):
        return float(spec.k)
    if isinstance(spec, MinMax):
        return 2.0
    if isinstance(spec, LinearDegenerate):
        return spec.sigma.lambda_max_sts
    if isinstance(spec, CoefficientLambdaN):
        return spec.a.lower
    if isinstance(spec, SupInf):
        return min(ellipticity_constant(m) for row in spec.rows for m in row)
    raise ConfigError(f"unknown operator spec {spec!r}")


# ---------------------------------------------------------------------------
# Hamiltonian catalog


@dataclass(frozen=True)
class PowerNorm:
    """H(xi) = b |xi|^p.  b = 0 is allowed (vanishing first-order term)."""

    b: float
    p: float

    def __post_init__(self):
        if self.b < 0 or not math.isfinite(self.b):
            raise ConfigError("power-norm coefficient must be >= 0")
        if self.p <= 0 or abs(self.p - 1.0) < _P_GUARD:
            raise ConfigError("power-norm exponent must be positive and != 1")


@dataclass(frozen=True)
class AnisotropicPower:
    """H(xi) = <A xi, xi>^(p/2) with 0 <= A <= b^(2/p) I.

    ``b`` is the power-norm coefficient the spec is meant to be dominated
    by; when omitted it defaults to the smallest admissible value
    lambda_N(A)^(p/2).
    """

    A: SymMatrix
    p: float
    b: float | None = None

    def __post_init__(self):
        if self.p <= 0 or abs(self.p - 1.0) < _P_GUARD:
            raise ConfigError("exponent must be positive and != 1")
        ev = eigenvalues_sorted(self.A)
        if ev[0] < -1e-12:
            raise ConfigError("anisotropy matrix must be positive semidefinite")
        min_b = float(max(ev[-1], 0.0) ** (self.p / 2.0))
        if self.b is None:
            object.__setattr__(self, "b", min_b)
        elif self.b < min_b * (1.0 - 1e-12):
            raise ConfigError(
                f"need b >= lambda_N(A)^(p/2) = {min_b:.6g}, got {self.b}"
            )


@dataclass(frozen=True)
class CompactPerturbation:
    """H(xi) = |xi|^p + bump(xi) with a compactly supported C^1 bump.

    The growth constant c (and the radius R realizing it) are computed at
    construction from the declared bump norms; ``d_lower`` = sup|bump| bounds
    H from below.  The implicit power-norm coefficient is 1.
    """

    p: float
    bump: ScalarField
    norm_inf: float
    dnorm_inf: float
    support_radius: float
    R: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        if self.p <= 1.0:
            raise ConfigError("compact perturbation needs a superlinear exponent")
        if self.support_radius <= 0:
            raise ConfigError("support radius must be positive")
        if self.norm_inf < 0 or self.dnorm_inf < 0:
            raise ConfigError("bump norms must be nonnegative")
        r, c = compact_perturbation_constant(
            self.p, (self.norm_inf, self.dnorm_inf, self.support_radius)
        )
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "c", c)

    @property
    def d_lower(self) -> float:
        return self.norm_inf


HamiltonianSpec = Union[PowerNorm, AnisotropicPower, CompactPerturbation]


def evaluate_hamiltonian(spec: HamiltonianSpec, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)):
        raise ConfigError("gradient argument must be finite")
    if isinstance(spec, PowerNorm):
        return float(spec.b * np.linalg.norm(xi) ** spec.p)
    if isinstance(spec, AnisotropicPower):
        q = float(xi @ spec.A.a @ xi)
        return float(max(q, 0.0) ** (spec.p / 2.0))
    if isinstance(spec, CompactPerturbation):
        r = float(np.linalg.norm(xi))
        bump = float(spec.bump(xi)) if r < spec.support_radius else 0.0
        return r**spec.p + bump
    raise ConfigError(f"unknown Hamiltonian spec {spec!r}")


def compact_perturbation_constant(
    p: float, norms: tuple[float, float, float]
) -> tuple[float, float]:
    """Growth constants (R, c) for H = |xi|^p + bump.

    ``norms`` is (sup|bump|, sup|D bump|, support radius).  R is the smallest
    radius >= the support radius with R^p >= R_phi^p + sup|bump| (an upper
    bound for sup H over the ball of radius R), located by bisection;
    c = max(R^p, 2 R sup|D bump| + sup|bump|).
    """
    if p <= 1.0:
        raise ConfigError("superlinear exponent required")
    norm_inf, dnorm_inf, r_phi = (float(v) for v in norms)
    if not all(math.isfinite(v) for v in (norm_inf, dnorm_inf, r_phi)):
        raise ConfigError("bump norms must be finite")
    if r_phi <= 0:
        raise ConfigError("support radius must be positive")
    target = r_phi**p + norm_inf
    if norm_inf == 0.0:
        r = r_phi
    else:
        lo, hi = r_phi, 2.0 * r_phi
        while hi**p < target:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if mid**p >= target:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * max(1.0, hi):
                break
        r = hi
    c = max(r**p, 2.0 * r * dnorm_inf + norm_inf)
    return r, c


# ---------------------------------------------------------------------------
# ball-intersection domains


@dataclass(frozen=True)
class ConvexDomain:
    """Omega = intersection of open balls B_R(y) over the listed centers."""

    radius: float
    centers: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.radius <= 0 or not math.isfinite(self.radius):
            raise ConfigError("ball radius must be positive and finite")
        if len(self.centers) == 0:
            raise ConfigError("need at least one ball center")
        dims = {len(c) for c in self.centers}
        if len(dims) != 1:
            raise ConfigError("all centers must share one dimension")
        cs = np.asarray(self.centers, dtype=float)
        if not np.all(np.isfinite(cs)):
            raise ConfigError("centers must be finite")
        # nonemptiness witness: the centroid must see every center within R
        centroid = cs.mean(axis=0)
        if float(np.linalg.norm(cs - centroid, axis=1).max()) >= self.radius:
            raise ConfigError(
                "ball intersection is empty (centroid witness failed)"
            )

    @property
    def dim(self) -> int:
        return len(self.centers[0])

    def center_array(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)

    def max_center_distance(self, x) -> float | np.ndarray:
        """max over centers of |x - y|; vectorized over leading axes of x."""
        x = np.asarray(x, dtype=float)
        cs = self.center_array()
        d = np.linalg.norm(x[..., None, :] - cs, axis=-1)
        return d.max(axis=-1)

    def contains(self, x) -> bool | np.ndarray:
        return self.max_center_distance(x) < self.radius

    def contains_closure(self, x, slack: float = 1e-12) -> bool | np.ndarray:
        return self.max_center_distance(x) <= self.radius * (1.0 + slack) + slack


# ---------------------------------------------------------------------------
# structural-condition sampling


@dataclass(frozen=True)
class ConditionResult:
    name: str
    worst_margin: float
    passed: bool
    samples: int
    note: str = ""


@dataclass(frozen=True)
class ConditionReport:
    results: tuple[ConditionResult, ...]
    seed: int
    comparison_principle: str = "assumed"

    def result(self, name: str) -> ConditionResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)


PASS_MARGIN = 1e-9


def _random_sym(rng, n, scale) -> SymMatrix:
    a = rng.uniform(-1.0, 1.0, size=(n, n)) * scale
    return SymMatrix(0.5 * (a + a.T))


def _random_psd(rng, n, scale) -> SymMatrix:
    g = rng.standard_normal((n, n))
    q, _ = np.linalg.qr(g)
    d = rng.uniform(0.0, 1.0, size=n) * scale
    return SymMatrix(q @ np.diag(d) @ q.T)


def _split_for_cone(spec: OperatorSpec) -> bool:
    # Monge-Ampere only sees nonnegative matrices; decrements must be
    # sampled as X = A + B, Y = -B with A, B >= 0 so X + Y stays on the cone
    if isinstance(spec, MongeAmpere):
        return True
    if isinstance(spec, SupInf):
        return any(_split_for_cone(m) for row in spec.rows for m in row)
    return False


def check_structural_conditions(
    op: OperatorSpec,
    ham: HamiltonianSpec,
    params: Params,
    sample_count: int,
    seed: int,
    n: int | None = None,
    extended_ellipticity: bool = False,
) -> ConditionReport:
    """Sampled falsification of the structural inequalities.

    Checks, with ``params.beta`` as the ellipticity constant:
      * decrement bound:   F(x, X+Y) - F(x, X) <= beta lambda_N(Y) for Y <= 0
      * increment bound:   F(x, X+Y) - F(x, X) >= beta lambda_1(Y) for Y >= 0
      * homogeneity:       F(x, sX) = s F(x, X) for s > 0
      * gradient growth:   convex-combination bound (p > 1) or the scaling
                           and two-sided bounds (p < 1)

    With ``extended_ellipticity`` the increment bound is additionally probed
    on Y <= 0, where some catalog members are expected to fail; the failure
    is report content, not an error.

    A condition passes when its worst sampled violation margin is <= 1e-9.
    """
    if sample_count < 1:
        raise ConfigError("sample_count must be >= 1")
    if n is None:
        n = len(op.alphas) if isinstance(op, WeightedEigenvalues) else 2
    rng = np.random.default_rng(seed)
    on_cone = _split_for_cone(op)
    beta = params.beta

    worst = {"F1": -math.inf, "deg2": -math.inf, "F2": -math.inf}
    if extended_ellipticity:
        worst["extended_ellipticity"] = -math.inf

    def feval(x, X):
        return evaluate_operator(op, x, X)

    for k in range(sample_count):
        x = rng.uniform(-1.0, 1.0, size=n)
        scale = 10.0 ** rng.uniform(-1.0, 1.0)
        ypos = _random_psd(rng, n, scale)
        if on_cone:
            base = _random_psd(rng, n, scale)
            xmat = base + ypos  # X = A + B so X - B stays on the cone
        else:
            xmat = _random_sym(rng, n, scale)

        # decrement side, Y <= 0
        yneg = SymMatrix(-ypos.a)
        diff = feval(x, xmat) - feval(x, xmat - ypos)
        # diff = F(X') - F(X' - Ypos) with X' = X + Ypos, i.e. the decrement
        # F(Z + Yneg) - F(Z) at Z = X' equals -diff
        lam_neg = eigenvalues_sorted(yneg)
        worst["F1"] = max(worst["F1"], (-diff) - beta * lam_neg[-1])

        # increment side, Y >= 0
        base2 = _random_psd(rng, n, scale) if on_cone else _random_sym(rng, n, scale)
        inc = feval(x, base2 + ypos) - feval(x, base2)
        lam_pos = eigenvalues_sorted(ypos)
        worst["deg2"] = max(worst["deg2"], beta * lam_pos[0] - inc)

        if extended_ellipticity:
            # increment bound probed on Y <= 0; base point shifted by +Ypos
            # on the cone so the decremented matrix stays admissible
            z = base2 + ypos if on_cone else base2
            dec = feval(x, z - ypos) - feval(x, z)
            worst["extended_ellipticity"] = max(
                worst["extended_ellipticity"], beta * lam_neg[0] - dec
            )

        # positive 1-homogeneity
        fx = feval(x, xmat)
        for s in (0.5, 2.0, 10.0 ** rng.uniform(-1.0, 1.0)):
            err = abs(feval(x, SymMatrix(s * xmat.a)) - s * fx)
            worst["F2"] = max(worst["F2"], err / max(1.0, abs(s * fx)))

    if extended_ellipticity:
        # canonical probe Y = -I, taken at X = I on the cone and X = 0 off it
        if on_cone:
            dec = feval(None, SymMatrix(np.zeros((n, n)))) - feval(
                None, SymMatrix.identity(n)
            )
        else:
            dec = feval(None, SymMatrix(-np.eye(n))) - feval(
                None, SymMatrix(np.zeros((n, n)))
            )
        worst["extended_ellipticity"] = max(
            worst["extended_ellipticity"], beta * (-1.0) - dec
        )

    results = [
        ConditionResult("F1", worst["F1"], worst["F1"] <= PASS_MARGIN, sample_count),
        ConditionResult(
            "deg2", worst["deg2"], worst["deg2"] <= PASS_MARGIN, sample_count
        ),
        ConditionResult("F2", worst["F2"], worst["F2"] <= PASS_MARGIN, sample_count),
    ]
    if extended_ellipticity:
        m = worst["extended_ellipticity"]
        results.append(
            ConditionResult(
                "extended_ellipticity",
                m,
                m <= PASS_MARGIN,
                sample_count,
                note="increment bound probed outside its cone",
            )
        )

    results.append(_check_hamiltonian(ham, params, sample_count, rng))
    return ConditionReport(results=tuple(results), seed=seed)


def _ham_dim(ham: HamiltonianSpec) -> int:
    return ham.A.n if isinstance(ham, AnisotropicPower) else 2


def _check_hamiltonian(ham, params, sample_count, rng) -> ConditionResult:
    nd = _ham_dim(ham)
    b, c, p = params.b, params.c, params.p
    worst = -math.inf
    if p > 1.0:
        name = "H1"
        for _ in range(sample_count):
            scale = 10.0 ** rng.uniform(-1.5, 1.5)
            xi = rng.standard_normal(nd) * scale
            eta = rng.standard_normal(nd) * 10.0 ** rng.uniform(-1.5, 1.5)
            sig = rng.uniform(1e-3, 1.0 - 1e-3)
            lhs = evaluate_hamiltonian(ham, sig * eta + (1.0 - sig) * xi)
            growth = b * float(np.linalg.norm(xi)) ** p + c
            margin = lhs - sig * evaluate_hamiltonian(ham, eta) - (1.0 - sig) * growth
            worst = max(worst, margin)
            worst = max(worst, -evaluate_hamiltonian(ham, xi) - params.d)
    else:
        name = "H2"
        for _ in range(sample_count):
            scale = 10.0 ** rng.uniform(-1.5, 1.5)
            xi = rng.standard_normal(nd) * scale
            eps = rng.uniform(1e-3, 1.0)
            h = evaluate_hamiltonian(ham, xi)
            worst = max(worst, -h)  # H >= 0
            worst = max(worst, h - (b * float(np.linalg.norm(xi)) ** p + c))
            worst = max(worst, eps * h - evaluate_hamiltonian(ham, eps * xi))
    return ConditionResult(name, worst, worst <= PASS_MARGIN, sample_count)
