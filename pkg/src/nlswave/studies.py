"""Convergence, stability and energy studies with CSV/SVG output."""
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
import logging
import math
from pathlib import Path
import time

import numpy as np

from .fem import build_space
from .mesh import Disk, disk_mesh, unit_square_mesh
from .problems import get_problem
from .scheme import EnergyRecorder, LeapFrog, SchemeConfig, steps_for
from .sparse import SolverError

__all__ = [
    "StudyConfig",
    "ConvergenceRow",
    "StudyError",
    "load_config",
    "parse_number_list",
    "mesh_for",
    "nominal_h",
    "converge_space",
    "converge_time",
    "stability",
    "energy_trace",
    "single_run",
    "write_convergence_csv",
    "write_stability_csv",
    "write_energy_csv",
    "observed_orders",
    "CONFIG_KEYS",
]

log = logging.getLogger(__name__)

CONFIG_KEYS = (
    "problem", "degree", "study", "levels", "taus", "T", "init",
    "tol", "paper_scale", "out_dir", "stride", "threads",
)
STUDIES = ("space", "time", "stability", "energy", "single")


class StudyError(RuntimeError):
    """A study point failed; carries the offending resolution."""

    def __init__(self, msg, h=None, tau=None):
        where = []
        if h is not None:
            where.append(f"h={h:.6g}")
        if tau is not None:
            where.append(f"tau={tau:.6g}")
        super().__init__(f"{msg} at {', '.join(where)}" if where else msg)
        self.h, self.tau = h, tau


@dataclass
class StudyConfig:
    problem: str = "example2"
    degree: int = 1
    study: str = "single"
    levels: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    T: float = None
    init: str = "ritz"
    tol: float = 1e-12
    paper_scale: bool = False
    out_dir: str = "out"
    stride: int = 1
    threads: int = 1
    tau_coef: float = None  # flag only; None means probe

    def __post_init__(self):
        self.validate()

    def validate(self):
        get_problem(self.problem)
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree!r}")
        if self.study not in STUDIES:
            raise ValueError(f"study must be one of {STUDIES}, got {self.study!r}")
        for name in ("levels", "taus"):
            seq = getattr(self, name)
            if len(seq) > 1:
                diffs = np.diff(np.asarray(seq, dtype=float))
                if not (np.all(diffs > 0) or np.all(diffs < 0)):
                    raise ValueError(f"{name} must be strictly monotone, got {seq}")
        if any(t <= 0 for t in self.taus):
            raise ValueError("taus must be positive")
        if self.T is not None and self.T <= 0:
            raise ValueError("T must be positive")
        if self.stride < 1 or self.threads < 1:
            raise ValueError("stride and threads must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        return self


def parse_number_list(text, conv=float):
    """Parse ``"8, 16, 32"`` or ``"1/8 1/16"`` into a list."""
    items = [s for s in text.replace(",", " ").split() if s]
    if conv is int:
        return [int(s) for s in items]
    return [float(Fraction(s)) for s in items]


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "problem": str,
    "degree": int,
    "study": str,
    "levels": lambda s: parse_number_list(s, int),
    "taus": parse_number_list,
    "T": lambda s: float(Fraction(s)),
    "init": str,
    "tol": float,
    "paper_scale": _parse_bool,
    "out_dir": str,
    "stride": int,
    "threads": int,
}


def load_config(path=None, overrides=None):
    """Read a flat ``key = value`` file and apply overrides (flags win)."""
    values = {}
    if path is not None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, val = (s.strip() for s in line.split("=", 1))
                if key not in _CONVERTERS:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                try:
                    values[key] = _CONVERTERS[key](val)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return StudyConfig(**values)


@dataclass
class ConvergenceRow:
    level: int
    h: float  # nominal mesh size, halves exactly between levels
    h_max: float  # largest triangle diameter
    tau: float
    N: int
    dofs: int
    l2_error: float
    order: float = None
    wall_time: float = 0.0


def mesh_for(problem, level):
    if isinstance(problem.domain, Disk):
        return disk_mesh(problem.domain.center, problem.domain.radius, level)
    return unit_square_mesh(level)


def nominal_h(problem, level):
    """1/n for the n-by-n square grid; radius/2^level for the disk."""
    if isinstance(problem.domain, Disk):
        return problem.domain.radius / 2**level
    return 1.0 / level


def _default_levels(problem, study, paper_scale):
    disk = isinstance(problem.domain, Disk)
    if study == "space":
        return [3, 4, 5] if disk else [8, 16, 32]
    if study == "stability":
        return [3, 4, 5, 6] if disk else [8, 16, 32, 64]
    if study == "time":
        if paper_scale:
            return [8] if disk else [512]
        return [5] if disk else [64]
    return [4] if disk else [16]


def _levels(cfg, problem):
    return list(cfg.levels) or _default_levels(problem, cfg.study, cfg.paper_scale)


def _run_point(cfg, problem, level, tau_target, T, observers=(), stride=1):
    mesh = mesh_for(problem, level)
    space = build_space(mesh, cfg.degree)
    N = steps_for(T, tau_target)
    scfg = SchemeConfig.from_steps(T, N, tol=cfg.tol, init_mode=cfg.init)
    t0 = time.perf_counter()
    try:
        scheme = LeapFrog(problem, space, scfg)
        result = scheme.run(observers, stride)
        err = scheme.l2_error(result.state)
    except SolverError as exc:
        raise StudyError(f"solver failure: {exc}", h=nominal_h(problem, level), tau=T / N) from exc
    wall = time.perf_counter() - t0
    row = ConvergenceRow(level, nominal_h(problem, level), mesh.h, T / N, N, space.ndof, err, None, wall)
    return row, result, scheme


def _map(cfg, fn, items):
    if cfg.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def observed_orders(errors, sizes):
    """log(e_prev/e) / log(x_prev/x) for consecutive rows; None for the first."""
    out = [None]
    for k in range(1, len(errors)):
        out.append(math.log(errors[k - 1] / errors[k]) / math.log(sizes[k - 1] / sizes[k]))
    return out


def order_avg(rows):
    orders = [r.order for r in rows if r.order is not None]
    return float(np.mean(orders)) if orders else None


def _with_orders(rows, key):
    orders = observed_orders([r.l2_error for r in rows], [getattr(r, key) for r in rows])
    return [replace(r, order=o) for r, o in zip(rows, orders)]


def probe_tau_coefficient(cfg, problem, level, T, c0=0.25, target=0.1):
    """Pick c in tau = c*h^((r+1)/2) so the temporal error is <= target*spatial.

    One tau-halving probe on ``level``: with e(tau) = e_s + C tau^2 the two
    runs give C tau^2 ~ 4/3 (e(tau) - e(tau/2)).
    """
    r = cfg.degree
    h = nominal_h(problem, level)
    tau = c0 * h ** ((r + 1) / 2)
    e1 = _run_point(cfg, problem, level, tau, T)[0].l2_error
    e2 = _run_point(cfg, problem, level, tau / 2, T)[0].l2_error
    e_t = 4.0 / 3.0 * abs(e1 - e2)
    e_s = e1 - e_t
    if e_t <= target * max(e_s, 0.0):
        return c0
    if e_s <= 0:
        return c0 / 4
    return c0 * math.sqrt(target * e_s / e_t)


def converge_space(cfg):
    """Spatial study: rows over mesh levels with coupled tau."""
    problem = get_problem(cfg.problem)
    levels = _levels(cfg, problem)
    T = cfg.T or 1.0
    r = cfg.degree
    if cfg.paper_scale:
        taus = [2.0**-14] * len(levels)
    else:
        c = cfg.tau_coef if cfg.tau_coef is not None else probe_tau_coefficient(cfg, problem, levels[0], T)
        taus = [c * nominal_h(problem, L) ** ((r + 1) / 2) for L in levels]
    rows = _map(cfg, lambda lt: _run_point(cfg, problem, lt[0], lt[1], T)[0], list(zip(levels, taus)))
    return _with_orders(rows, "h")


def converge_time(cfg):
    """Temporal study: rows over tau on one fixed mesh level."""
    problem = get_problem(cfg.problem)
    level = _levels(cfg, problem)[-1]
    T = cfg.T or 1.0
    taus = list(cfg.taus) or [1 / 16, 1 / 32, 1 / 64]
    rows = _map(cfg, lambda tau: _run_point(cfg, problem, level, tau, T)[0], taus)
    return _with_orders(rows, "tau")


@dataclass
class StabilityRow:
    tau: float
    level: int
    h: float
    dofs: int
    l2_error: float
    finite: bool
    plateau: bool = False


def stability(cfg, plateau_tol=0.05):
    """Error vs h at fixed tau for each tau; flags plateaus."""
    problem = get_problem(cfg.problem)
    levels = _levels(cfg, problem)
    T = cfg.T or 1.0
    taus = list(cfg.taus) or [0.1, 0.05, 0.01]
    points = [(tau, L) for tau in taus for L in levels]

    def one(pt):
        tau, L = pt
        row = _run_point(cfg, problem, L, tau, T)[0]
        return StabilityRow(row.tau, L, row.h, row.dofs, row.l2_error, bool(np.isfinite(row.l2_error)))

    rows = _map(cfg, one, points)
    out = []
    for tau in taus:
        series = [r for r in rows if r.tau == T / steps_for(T, tau)]
        if len(series) >= 2:
            a, b = series[-2].l2_error, series[-1].l2_error
            flat = b == a or abs(b - a) <= plateau_tol * max(abs(a), abs(b))
            series[-1] = replace(series[-1], plateau=bool(flat))
        out.extend(series)
    return out


def plateaus(rows):
    """{tau: last error} for each tau in a stability table."""
    out = {}
    for r in rows:
        out[r.tau] = r.l2_error
    return out


@dataclass
class EnergyRow:
    n: int
    t: float
    kinetic: float
    gradient: float
    quartic: float
    potential: float
    total: float
    relative_drift: float


def energy_trace(cfg):
    """Discrete energy every ``stride`` steps; refuses non-conservative problems."""
    problem = get_problem(cfg.problem)
    if not problem.conservative:
        raise ValueError(
            f"energy study needs a source-free problem with zero boundary data; "
            f"{problem.name!r} has a source term or boundary data"
        )
    level = _levels(cfg, problem)[-1]
    T = cfg.T or (100.0 if cfg.paper_scale else 10.0)
    tau = (list(cfg.taus) or [0.05])[0]
    _, result, _ = _run_point(cfg, problem, level, tau, T, [EnergyRecorder()], cfg.stride)
    series = result.series["energy"]
    E0 = series[0][2].total
    rows = []
    for k, t, e in series:
        drift = abs(e.total - E0) / abs(E0) if E0 != 0 else abs(e.total - E0)
        rows.append(EnergyRow(k, t, e.kinetic, e.gradient, e.quartic, e.potential, e.total, drift))
    return rows


def single_run(cfg, level=None, tau=None):
    """One (h, tau) run; returns a summary dict."""
    problem = get_problem(cfg.problem)
    level = level if level is not None else _levels(cfg, problem)[-1]
    T = cfg.T or 1.0
    tau = tau if tau is not None else (list(cfg.taus) or [1 / 16])[0]
    observers = [EnergyRecorder()] if problem.conservative else []
    row, result, scheme = _run_point(cfg, problem, level, tau, T, observers, cfg.stride)
    its = [rep.stats.iterations for rep in result.reports]
    drift = None
    if observers:
        E = [e.total for _, _, e in result.series["energy"]]
        drift = max(abs(v - E[0]) for v in E) / abs(E[0]) if E[0] != 0 else max(abs(v) for v in E)
    summary = {
        "problem": problem.name,
        "degree": cfg.degree,
        "level": level,
        "h": row.h,
        "h_max": row.h_max,
        "tau": row.tau,
        "N": row.N,
        "dofs": row.dofs,
        "l2_error": float(row.l2_error),
        "energy_drift": drift,
        "solver_iterations_max": max(its) if its else 0,
        "solver_iterations_mean": float(np.mean(its)) if its else 0.0,
        "wall_time": row.wall_time,
    }
    return summary, result, scheme


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


CONVERGENCE_COLUMNS = ("level", "h", "h_max", "tau", "N", "dofs", "l2_error", "order")
STABILITY_COLUMNS = ("tau", "level", "h", "dofs", "l2_error", "finite", "plateau")
ENERGY_COLUMNS = ("n", "t", "kinetic", "gradient", "quartic", "potential", "total", "relative_drift")


def _write(path, columns, rows, tail=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in columns])
        if tail is not None:
            w.writerow(tail)
    return path


def write_convergence_csv(path, rows):
    """Rows plus a final ``order_avg`` line carrying the mean observed order."""
    avg = order_avg(rows)
    tail = ["order_avg"] + [""] * (len(CONVERGENCE_COLUMNS) - 2) + [_fmt(avg)]
    return _write(path, CONVERGENCE_COLUMNS, rows, tail)


def write_stability_csv(path, rows):
    return _write(path, STABILITY_COLUMNS, rows)


def write_energy_csv(path, rows):
    return _write(path, ENERGY_COLUMNS, rows)


def read_convergence_csv(path):
    """Parse a convergence CSV back into (rows as dicts, order_avg)."""
    with open(path, newline="") as fh:
        data = list(csv.reader(fh))
    header, body = data[0], data[1:]
    avg = None
    rows = []
    for rec in body:
        if rec[0] == "order_avg":
            avg = float(rec[-1]) if rec[-1] else None
            continue
        rows.append(dict(zip(header, rec)))
    return rows, avg


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "nlswave"
    return plt


def _save(plt, fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_convergence(path, rows, xkey, title):
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 4))
    x = np.array([getattr(r, xkey) for r in rows])
    e = np.array([r.l2_error for r in rows])
    ax.loglog(x, e, "o-", label="L2 error")
    avg = order_avg(rows)
    if avg is not None:
        ax.loglog(x, e[0] * (x / x[0]) ** avg, "k--", lw=0.8, label=f"slope {avg:.2f}")
    ax.set_xlabel("h" if xkey == "h" else "tau")
    ax.set_ylabel("L2 error at T")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", lw=0.3)
    return _save(plt, fig, path)


def plot_stability(path, rows, title):
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 4))
    for tau in sorted({r.tau for r in rows}, reverse=True):
        s = [r for r in rows if r.tau == tau]
        ax.loglog([1 / r.h for r in s], [r.l2_error for r in s], "o-", label=f"tau={tau:g}")
    ax.set_xlabel("1/h")
    ax.set_ylabel("L2 error at T")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", lw=0.3)
    return _save(plt, fig, path)


def plot_energy(path, rows, title):
    plt = _figure()
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5, 5), sharex=True)
    t = [r.t for r in rows]
    ax1.plot(t, [r.total for r in rows], "-")
    ax1.set_ylabel("E")
    ax1.set_title(title)
    ax2.plot(t, [r.relative_drift for r in rows], "-")
    ax2.set_ylabel("|E - E0| / E0")
    ax2.set_xlabel("t")
    for ax in (ax1, ax2):
        ax.grid(True, lw=0.3)
    return _save(plt, fig, path)


# acceptance thresholds used by --check


def expected_space_order(problem_name, degree):
    """(lo, hi) window for order_avg of a spatial study."""
    if problem_name == "example1":
        return (1.8, 2.2) if degree == 1 else (2.0, math.inf)
    return (1.85, 2.15) if degree == 1 else (2.8, 3.2)


def check_convergence(rows, window):
    avg = order_avg(rows)
    ok = avg is not None and window[0] <= avg <= window[1]
    return ok, f"order_avg={avg!r} window={window}"


def check_stability(rows, plateau_tol=0.05):
    if not all(r.finite for r in rows):
        return False, "non-finite error"
    taus = sorted({r.tau for r in rows})
    last = plateaus(rows)
    coarse = [r for r in rows if r.tau == taus[-1]]
    if len(coarse) >= 2 and not coarse[-1].plateau:
        return False, f"no plateau for tau={taus[-1]!r}"
    vals = [last[t] for t in taus]
    if any(a >= b for a, b in zip(vals, vals[1:])):
        return False, f"plateaus not ordered by tau: {vals}"
    return True, f"plateaus {dict(zip(taus, vals))}"


def check_energy(rows, bound=1e-10):
    drift = max(r.relative_drift for r in rows)
    return drift <= bound, f"max relative drift {drift:.3e} (bound {bound:g})"


def config_dict(cfg):
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
