"""Command-line entry point.

Everything a run needs lives in one INI-style config file; the subcommand
picks which slice of it gets used.  Commands validate the full config
before touching the filesystem and write CSV at 17 significant digits,
console summaries at 15.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .barriers import build_subsolution, build_supersolution
from .errors import ConfigError, DegellipticError, VerificationError
from .grid import (
    GridProblem,
    SolveControls,
    build_grid,
    report_to_text,
    solution_to_csv,
    solve,
)
from .model import (
    CoefficientLambdaN,
    ConvexDomain,
    LambdaK,
    LinearDegenerate,
    MatrixField,
    MinMax,
    MongeAmpere,
    Params,
    PowerNorm,
    ScalarField,
    TruncatedLower,
    TruncatedUpper,
    WeightedEigenvalues,
)
from .radial import (
    classify_blowup,
    explicit_sublinear_form,
    profile_to_csv,
    radial_profile,
    rbar,
)
from .verify import (
    VerifyProblem,
    epsilon_scaling,
    residual_check_radial,
    sigma_perturbation,
    threshold_probe,
)

__all__ = ["RunConfig", "main", "parse_config", "serialize_config"]

COMMANDS = (
    "rbar",
    "radial",
    "blowup",
    "explicit",
    "barrier",
    "solve",
    "verify",
    "sweep",
)


def _fmt(value: float) -> str:
    """Console float format: 15 significant digits, trailing zeros kept."""
    return f"{value:#.15g}"


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """One flat record backing every subcommand; see DEFAULTS for the file
    schema.  parse -> serialize -> parse is the identity."""

    command: str
    out: str
    seed: int
    threads: int
    # structural envelope
    beta: float
    b: float
    c: float
    d: float
    p: float
    M: float
    # operator / gradient-term / forcing selections
    operator: str
    coefficient: float
    index: int
    weights: tuple[float, ...]
    rows: tuple[tuple[float, ...], ...]
    hamiltonian: str
    ham_b: float
    ham_p: float
    hamiltonian_sign: float
    f: float
    dimension: int
    # domain
    radius: float
    centers: tuple[tuple[float, ...], ...]
    # radial runs
    branch: str
    R: float
    node_count: int
    r_min: float
    include_radii: tuple[float, ...]
    decades: int
    kind: str
    # barrier levels
    upper_m: float
    lower_k: float
    # grid solver controls
    h: float
    K: int
    tau: float | None
    tol: float
    max_iter: int
    init: str
    # verification controls
    radii: tuple[float, ...]
    tolerance: float
    sigma: float
    epsilon: float
    R_values: tuple[float, ...]

    @property
    def params(self) -> Params:
        return Params(beta=self.beta, b=self.b, c=self.c, d=self.d,
                      p=self.p, M=self.M)


# (section, key) -> default, in file order; every key is optional
DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"command": "", "out": "out", "seed": "0", "threads": "1"},
    "params": {"beta": "1.0", "b": "1.0", "c": "0.0", "d": "0.0",
               "p": "2.0", "M": "1.0"},
    "problem": {
        "operator": "CoefficientLambdaN",
        "coefficient": "1.0",
        "index": "1",
        "weights": "",
        "rows": "",
        "hamiltonian": "PowerNorm",
        "ham_b": "1.0",
        "ham_p": "2.0",
        "hamiltonian_sign": "1.0",
        "f": "0.0",
        "dimension": "2",
    },
    "domain": {"radius": "1.0", "centers": "0.0, 0.0"},
    "radial": {
        "branch": "FirstZeroSuperlinear",
        "R": "1.0",
        "node_count": "512",
        "r_min": "1e-06",
        "include_radii": "",
        "decades": "6",
        "kind": "Lambda1",
    },
    "barrier": {"upper_m": "1.0", "lower_k": "1.0"},
    "solver": {"h": "0.0625", "K": "8", "tau": "", "tol": "1e-05",
               "max_iter": "500000", "init": "zeros"},
    "verify": {"radii": "0.2, 0.5, 0.8", "tolerance": "1e-06",
               "sigma": "0.9", "epsilon": "0.1"},
    "sweep": {"R_values": ""},
}


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from None


def _parse_floats(section: str, key: str, raw: str) -> tuple[float, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(
        _parse_float(section, key, part) for part in raw.split(",") if part.strip()
    )


def _parse_rows(section: str, key: str, raw: str) -> tuple[tuple[float, ...], ...]:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(
        _parse_floats(section, key, row) for row in raw.split(";") if row.strip()
    )


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (M vs m)
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"config syntax: {err}") from None

    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown config key [{section}] {key}")

    def get(section: str, key: str) -> str:
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return DEFAULTS[section][key]

    tau_raw = get("solver", "tau")
    command = get("run", "command")
    if command and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    init = get("solver", "init")

    return RunConfig(
        command=command,
        out=get("run", "out"),
        seed=_parse_int("run", "seed", get("run", "seed")),
        threads=_parse_int("run", "threads", get("run", "threads")),
        beta=_parse_float("params", "beta", get("params", "beta")),
        b=_parse_float("params", "b", get("params", "b")),
        c=_parse_float("params", "c", get("params", "c")),
        d=_parse_float("params", "d", get("params", "d")),
        p=_parse_float("params", "p", get("params", "p")),
        M=_parse_float("params", "M", get("params", "M")),
        operator=get("problem", "operator"),
        coefficient=_parse_float(
            "problem", "coefficient", get("problem", "coefficient")
        ),
        index=_parse_int("problem", "index", get("problem", "index")),
        weights=_parse_floats("problem", "weights", get("problem", "weights")),
        rows=_parse_rows("problem", "rows", get("problem", "rows")),
        hamiltonian=get("problem", "hamiltonian"),
        ham_b=_parse_float("problem", "ham_b", get("problem", "ham_b")),
        ham_p=_parse_float("problem", "ham_p", get("problem", "ham_p")),
        hamiltonian_sign=_parse_float(
            "problem", "hamiltonian_sign", get("problem", "hamiltonian_sign")
        ),
        f=_parse_float("problem", "f", get("problem", "f")),
        dimension=_parse_int("problem", "dimension", get("problem", "dimension")),
        radius=_parse_float("domain", "radius", get("domain", "radius")),
        centers=_parse_rows("domain", "centers", get("domain", "centers")),
        branch=get("radial", "branch"),
        R=_parse_float("radial", "R", get("radial", "R")),
        node_count=_parse_int("radial", "node_count", get("radial", "node_count")),
        r_min=_parse_float("radial", "r_min", get("radial", "r_min")),
        include_radii=_parse_floats(
            "radial", "include_radii", get("radial", "include_radii")
        ),
        decades=_parse_int("radial", "decades", get("radial", "decades")),
        kind=get("radial", "kind"),
        upper_m=_parse_float("barrier", "upper_m", get("barrier", "upper_m")),
        lower_k=_parse_float("barrier", "lower_k", get("barrier", "lower_k")),
        h=_parse_float("solver", "h", get("solver", "h")),
        K=_parse_int("solver", "K", get("solver", "K")),
        tau=None if tau_raw == "" else _parse_float("solver", "tau", tau_raw),
        tol=_parse_float("solver", "tol", get("solver", "tol")),
        max_iter=_parse_int("solver", "max_iter", get("solver", "max_iter")),
        init=init,
        radii=_parse_floats("verify", "radii", get("verify", "radii")),
        tolerance=_parse_float("verify", "tolerance", get("verify", "tolerance")),
        sigma=_parse_float("verify", "sigma", get("verify", "sigma")),
        epsilon=_parse_float("verify", "epsilon", get("verify", "epsilon")),
        R_values=_parse_floats("sweep", "R_values", get("sweep", "R_values")),
    )


def serialize_config(cfg: RunConfig) -> str:
    def floats(values) -> str:
        return ", ".join(repr(float(v)) for v in values)

    def rows(matrix) -> str:
        return "; ".join(floats(row) for row in matrix)

    values = {
        ("run", "command"): cfg.command,
        ("run", "out"): cfg.out,
        ("run", "seed"): str(cfg.seed),
        ("run", "threads"): str(cfg.threads),
        ("params", "beta"): repr(cfg.beta),
        ("params", "b"): repr(cfg.b),
        ("params", "c"): repr(cfg.c),
        ("params", "d"): repr(cfg.d),
        ("params", "p"): repr(cfg.p),
        ("params", "M"): repr(cfg.M),
        ("problem", "operator"): cfg.operator,
        ("problem", "coefficient"): repr(cfg.coefficient),
        ("problem", "index"): str(cfg.index),
        ("problem", "weights"): floats(cfg.weights),
        ("problem", "rows"): rows(cfg.rows),
        ("problem", "hamiltonian"): cfg.hamiltonian,
        ("problem", "ham_b"): repr(cfg.ham_b),
        ("problem", "ham_p"): repr(cfg.ham_p),
        ("problem", "hamiltonian_sign"): repr(cfg.hamiltonian_sign),
        ("problem", "f"): repr(cfg.f),
        ("problem", "dimension"): str(cfg.dimension),
        ("domain", "radius"): repr(cfg.radius),
        ("domain", "centers"): rows(cfg.centers),
        ("radial", "branch"): cfg.branch,
        ("radial", "R"): repr(cfg.R),
        ("radial", "node_count"): str(cfg.node_count),
        ("radial", "r_min"): repr(cfg.r_min),
        ("radial", "include_radii"): floats(cfg.include_radii),
        ("radial", "decades"): str(cfg.decades),
        ("radial", "kind"): cfg.kind,
        ("barrier", "upper_m"): repr(cfg.upper_m),
        ("barrier", "lower_k"): repr(cfg.lower_k),
        ("solver", "h"): repr(cfg.h),
        ("solver", "K"): str(cfg.K),
        ("solver", "tau"): "" if cfg.tau is None else repr(cfg.tau),
        ("solver", "tol"): repr(cfg.tol),
        ("solver", "max_iter"): str(cfg.max_iter),
        ("solver", "init"): cfg.init,
        ("verify", "radii"): floats(cfg.radii),
        ("verify", "tolerance"): repr(cfg.tolerance),
        ("verify", "sigma"): repr(cfg.sigma),
        ("verify", "epsilon"): repr(cfg.epsilon),
        ("sweep", "R_values"): floats(cfg.R_values),
    }
    out = io.StringIO()
    for section, keys in DEFAULTS.items():
        out.write(f"[{section}]\n")
        for key in keys:
            out.write(f"{key} = {values[(section, key)]}\n")
        out.write("\n")
    return out.getvalue()


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# selection -> catalog objects


def _operator_from(cfg: RunConfig):
    name = cfg.operator
    if name == "CoefficientLambdaN":
        return CoefficientLambdaN(ScalarField.constant(cfg.coefficient))
    if name == "LambdaK":
        return LambdaK(cfg.index)
    if name == "WeightedEigenvalues":
        if not cfg.weights:
            raise ConfigError("WeightedEigenvalues needs [problem] weights")
        return WeightedEigenvalues(cfg.weights)
    if name == "MinMax":
        return MinMax()
    if name == "TruncatedLower":
        return TruncatedLower(cfg.index)
    if name == "TruncatedUpper":
        return TruncatedUpper(cfg.index)
    if name == "MongeAmpere":
        return MongeAmpere()
    if name == "LinearDegenerate":
        if not cfg.rows:
            raise ConfigError("LinearDegenerate needs [problem] rows")
        return LinearDegenerate(MatrixField.constant(cfg.rows))
    raise ConfigError(f"unknown operator {name!r}")


def _hamiltonian_from(cfg: RunConfig):
    name = cfg.hamiltonian
    if name in ("", "none", "None"):
        return None
    if name == "PowerNorm":
        return PowerNorm(cfg.ham_b, cfg.ham_p)
    raise ConfigError(f"unknown gradient term {name!r}")


def _domain_from(cfg: RunConfig) -> ConvexDomain:
    if not cfg.centers:
        raise ConfigError("domain needs at least one center")
    return ConvexDomain(radius=cfg.radius, centers=cfg.centers)


def _verify_problem(cfg: RunConfig) -> VerifyProblem:
    return VerifyProblem(
        operator=_operator_from(cfg),
        hamiltonian=_hamiltonian_from(cfg),
        f=cfg.f,
        N=cfg.dimension,
        R=cfg.R,
        hamiltonian_sign=cfg.hamiltonian_sign,
    )


def _grid_problem(cfg: RunConfig) -> GridProblem:
    return GridProblem(
        operator=_operator_from(cfg),
        hamiltonian=_hamiltonian_from(cfg),
        params=cfg.params,
        domain=_domain_from(cfg),
        f=cfg.f,
    )


# ---------------------------------------------------------------------------
# commands: each returns (summary lines, {filename: write callback})


def cmd_rbar(cfg: RunConfig):
    params = cfg.params
    if not params.superlinear:
        raise ConfigError(
            "the sublinear case has no existence threshold (solutions exist"
            " on every ball); rbar applies to p > 1"
        )
    value = rbar(params)
    lines = [f"rbar = {_fmt(value)}"]
    if math.isinf(value):
        lines.append("zero forcing: profiles exist on every ball")
    else:
        lines.append(
            "at R = rbar the profile stays C1 up to the boundary while u''"
            " is unbounded there (root-finding switches to the double root)"
        )
    return lines, {}


def cmd_radial(cfg: RunConfig):
    prof = radial_profile(
        cfg.branch,
        cfg.R,
        cfg.params,
        node_count=cfg.node_count,
        r_min=cfg.r_min,
        include_radii=cfg.include_radii,
    )
    lines = [
        f"branch {prof.branch.value}: {prof.r_grid.size} nodes on"
        f" (0, {_fmt(cfg.R)}]",
        f"u(0+) = {_fmt(prof.u_at_zero)}",
        f"max |profile residual| = {np.max(np.abs(prof.residuals)):.3e}",
    ]
    return lines, {"profile.csv": lambda path: profile_to_csv(prof, path)}


def cmd_blowup(cfg: RunConfig):
    params = cfg.params
    cls = classify_blowup(params)
    if cfg.decades < 1:
        raise ConfigError("decades must be >= 1")
    branch = "ZeroM" if params.M == 0.0 else "SecondZeroSuperlinear"
    rows = []
    prev = None
    for k in range(1, cfg.decades + 1):
        prof = radial_profile(
            branch, cfg.R, params, node_count=cfg.node_count, r_min=10.0**-k
        )
        u_min = float(prof.u_values[0])
        growth = math.nan if prev is None else u_min - prev
        rows.append((k, 10.0**-k, u_min, growth))
        prev = u_min
    if cls.kind == "Blowup":
        lines = [f"center behavior: Blowup (exponent p = {_fmt(params.p)})"]
    else:
        lines = [f"center behavior: Bounded, sup bound {_fmt(cls.bound)}"]
    lines.append(
        f"u(1e-{cfg.decades}) = {_fmt(rows[-1][2])}"
        + (
            f", last decade added {_fmt(rows[-1][3])}"
            if len(rows) > 1
            else ""
        )
    )

    def write(path):
        with open(path, "w", encoding="utf-8") as out:
            out.write(f"# kind={cls.kind} bound={cls.bound!r}\n")
            out.write("k,r_min,u_rmin,decade_growth\n")
            for k, r_min, u_min, growth in rows:
                g = "" if math.isnan(growth) else f"{growth:.17g}"
                out.write(f"{k},{r_min:.17g},{u_min:.17g},{g}\n")

    return lines, {"blowup.csv": write}


def cmd_explicit(cfg: RunConfig):
    form = explicit_sublinear_form(cfg.kind, cfg.p, cfg.R, cfg.dimension)
    r = np.linspace(0.0, cfg.R, max(cfg.node_count, 2))
    u = form.value(r)
    du = form.du(r)  # exponent g > 2, so both derivatives vanish at r = 0
    ddu = form.ddu(r)
    lines = [
        f"{cfg.kind}: u = {'-' if form.sign < 0 else ''}K(R^g - r^g),"
        f" K = {_fmt(form.K)}, g = {_fmt(form.g)}",
        f"u(0) = {_fmt(float(u[0]))}",
    ]

    def write(path):
        with open(path, "w", encoding="utf-8") as out:
            out.write(
                f"# kind={cfg.kind} p={cfg.p:.17g} R={cfg.R:.17g}"
                f" N={cfg.dimension} K={form.K:.17g} g={form.g:.17g}\n"
            )
            out.write("r,u,du,ddu\n")
            for i, ri in enumerate(r):
                out.write(
                    f"{ri:.17g},{u[i]:.17g},{du[i]:.17g},{ddu[i]:.17g}\n"
                )

    return lines, {"explicit.csv": write}


def cmd_barrier(cfg: RunConfig):
    domain = _domain_from(cfg)
    upper = build_supersolution(domain, cfg.params, cfg.upper_m)
    lower = build_subsolution(domain, cfg.params, cfg.lower_k)
    grid = build_grid(domain, cfg.h, cfg.K)
    up = np.asarray(upper(grid.nodes_xy), dtype=float)
    low = np.asarray(lower(grid.nodes_xy), dtype=float)
    gap = up - low
    lines = [
        f"barriers on {grid.n_nodes} nodes: upper at forcing {_fmt(cfg.upper_m)},"
        f" lower slope {_fmt(cfg.lower_k)}",
        f"min upper-lower gap = {_fmt(float(gap.min()))}",
    ]
    if gap.min() < 0.0:
        raise VerificationError(
            "barrier ordering violated: upper < lower at a node"
        )

    def write(path):
        with open(path, "w", encoding="utf-8") as out:
            out.write(
                f"# h={grid.h:.17g} nodes={grid.n_nodes}"
                f" upper_m={cfg.upper_m:.17g} lower_k={cfg.lower_k:.17g}\n"
            )
            out.write("x,y,lower,upper\n")
            for (x, y), lo, hi in zip(grid.nodes_xy, low, up):
                out.write(f"{x:.17g},{y:.17g},{lo:.17g},{hi:.17g}\n")

    return lines, {"barrier.csv": write}


def cmd_solve(cfg: RunConfig):
    problem = _grid_problem(cfg)
    grid = build_grid(problem.domain, cfg.h, cfg.K)
    controls = SolveControls(
        tau=cfg.tau, tol=cfg.tol, max_iter=cfg.max_iter, init=cfg.init
    )
    u, report = solve(problem, grid, controls)
    lines = [
        f"solved {grid.n_nodes} nodes in {report.iterations} iterations"
        f" ({report.wall_time:.3f}s)",
        f"residual = {report.residual_norm:.3e}"
        f" (stop {report.stop_residual:.3e})",
        f"min u = {_fmt(float(u.values.min()))},"
        f" max u = {_fmt(float(u.values.max()))}",
    ]
    files = {
        "solution.csv": lambda path: solution_to_csv(u, path),
        "report.txt": lambda path: Path(path).write_text(
            report_to_text(report), encoding="utf-8"
        ),
    }
    return lines, files


def _verify_checks(cfg: RunConfig):
    """(name, passed, report text) triples for the verification suite."""
    params = cfg.params
    problem = _verify_problem(cfg)
    prof = radial_profile(
        cfg.branch,
        cfg.R,
        params,
        node_count=cfg.node_count,
        r_min=cfg.r_min,
        include_radii=cfg.include_radii,
    )
    if not cfg.radii:
        raise ConfigError("verification needs [verify] radii")
    report = residual_check_radial(prof, problem, cfg.radii, cfg.tolerance)
    checks = [("residual", report.passed, report.to_text())]

    if params.superlinear:
        bumped = dataclasses.replace(params, M=params.M + cfg.epsilon)
        varphi = radial_profile(
            cfg.branch, cfg.R, bumped, node_count=cfg.node_count, r_min=cfg.r_min
        )
        cert = sigma_perturbation(
            prof, varphi, cfg.sigma, epsilon=cfg.epsilon, problem=problem
        )
        checks.append(("sigma_perturbation", cert.passed, cert.to_text()))
        if params.M > 0.0:
            threshold = rbar(params)
            verdicts = threshold_probe(
                params, [0.99 * threshold, threshold, 1.01 * threshold]
            )
            ok = (
                verdicts[0].exists
                and not verdicts[0].endpoint
                and verdicts[1].exists
                and verdicts[1].endpoint
                and not verdicts[2].exists
            )
            text = "\n".join(v.to_text() for v in verdicts) + "\n"
            checks.append(("threshold_probe", ok, text))
    else:
        cert = epsilon_scaling(prof, cfg.epsilon, cfg.f, problem=problem)
        checks.append(("epsilon_scaling", cert.passed, cert.to_text()))
    return checks


def cmd_verify(cfg: RunConfig):
    checks = _verify_checks(cfg)
    lines = [
        f"{name}: {'PASS' if passed else 'FAIL'}" for name, passed, _ in checks
    ]
    failed = [name for name, passed, _ in checks if not passed]

    def write(path):
        with open(path, "w", encoding="utf-8") as out:
            for name, passed, text in checks:
                out.write(f"== {name}: {'PASS' if passed else 'FAIL'}\n")
                out.write(text)
                out.write("\n")

    files = {"verify_report.txt": write}
    if failed:
        return lines, files, VerificationError(
            f"verification failed: {', '.join(failed)}"
        )
    return lines, files


def cmd_sweep(cfg: RunConfig):
    if not cfg.R_values:
        raise ConfigError("sweep needs [sweep] R_values")
    verdicts = threshold_probe(cfg.params, cfg.R_values)
    lines = [v.to_text() for v in verdicts]
    existing = sum(1 for v in verdicts if v.exists)
    lines.append(f"{existing} of {len(verdicts)} radii admit the profile")

    def write(path):
        with open(path, "w", encoding="utf-8") as out:
            out.write("R,exists,endpoint,fails_at,gap\n")
            for v in verdicts:
                fails = "" if v.fails_at is None else f"{v.fails_at:.17g}"
                gap = "" if v.gap is None else f"{v.gap:.17g}"
                out.write(f"{v.R:.17g},{v.exists},{v.endpoint},{fails},{gap}\n")

    return lines, {"sweep.csv": write}


_DISPATCH = {
    "rbar": cmd_rbar,
    "radial": cmd_radial,
    "blowup": cmd_blowup,
    "explicit": cmd_explicit,
    "barrier": cmd_barrier,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="degelliptic",
        description="Radial profiles, barriers, grid solves and verification"
        " for degenerate elliptic Dirichlet problems.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI config file")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None,
                        help="accepted for interface stability; every"
                        " command is deterministic")
    common.add_argument("--threads", type=int, default=None,
                        help="worker hint; outputs do not depend on it")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if args.out is not None:
        updates["out"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    if cfg.command and cfg.command != args.command:
        raise ConfigError(
            f"config requests command {cfg.command!r} but"
            f" {args.command!r} was invoked"
        )
    updates["command"] = args.command
    return dataclasses.replace(cfg, **updates)


def run(cfg: RunConfig):
    """Execute cfg.command.

    Returns (summary lines, deferred verification failure or None); the
    deferred error still gets its report written, unlike configuration and
    numeric errors, which raise before any file output.
    """
    if cfg.command not in _DISPATCH:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    result = _DISPATCH[cfg.command](cfg)
    lines, files = result[0], result[1]
    deferred = result[2] if len(result) > 2 else None
    if files:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, write in files.items():
            write(out_dir / name)
    return lines, deferred


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(args.config), args)
        lines, failure = run(cfg)
    except DegellipticError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    for line in lines:
        print(line)
    if failure is not None:
        print(f"error: {failure}", file=sys.stderr)
        return failure.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
