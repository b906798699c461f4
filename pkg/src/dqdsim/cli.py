"""Command-line front end: config parsing, experiment runs, data tables.

Subcommands: evolve (time series), sweep (1-D/2-D steady-state grids),
classify (bound-state census of a gapped spectrum), verify (cross-check a
solver against the discretized-bath oracle). Config files are flat
key = value lines under [section] headers; all energies in Gamma units.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .boundstate import classify_relaxation, find_bound_states
from .entanglement import fermionic_eof, steady_state_eof
from .greens import (
    TimeGrid,
    bm_fluctuation,
    compute_fluctuation,
    pole_expansion_lorentzian,
    solve,
    solve_dyson,
    steady_state_fluctuation,
    wbl_greens,
    wbl_steady_fluctuation,
)
from .model import (
    ConfigError,
    InvariantViolation,
    ModelConfig,
    ReservoirParams,
    SolverError,
    SpectralKind,
    SystemParams,
)
from .oracle import discretize, exact_greens
from .state import (
    DensityBlocks,
    evolve_density,
    propagator_coefficients,
    steady_state_density,
)

SOLVER_METHODS = ("exact", "wbl", "born_markov", "pole")
INITIAL_STATES = (
    "vacuum",
    "single1",
    "single2",
    "bell_plus",
    "bell_minus",
    "explicit",
)
SWEEP_PARAMS = (
    "eps1",
    "eps2",
    "mu1",
    "mu2",
    "g",
    "d",
    "k_t",
    "gamma",
    "omega_cut",
)

_SECTION_KEYS = {
    "system": {"eps1", "eps2", "g"},
    "left": {"gamma", "d", "mu", "k_t", "omega_cut"},
    "right": {"gamma", "d", "mu", "k_t", "omega_cut"},
    "spectral": {"kind"},
    "grid": {"t_max", "n_steps"},
    "initial": {
        "state",
        "rho1_00",
        "rho1_11",
        "rho1_01_re",
        "rho1_01_im",
        "rho2_00",
        "rho2_11",
        "rho2_01_re",
        "rho2_01_im",
    },
    "solver": {"method"},
    "sweep": {"axis1", "axis2"},
    "oracle": {"enabled", "modes", "tol"},
    "output": {"path"},
}


@dataclass
class SweepAxis:
    """One swept parameter group: names share the same value grid."""

    names: tuple
    lo: float
    hi: float
    steps: int

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass
class ExperimentConfig:
    """Everything a run needs, resolved from one config file."""

    model: ModelConfig
    grid: TimeGrid | None
    initial: DensityBlocks
    initial_name: str
    method: str
    axes: list
    oracle_enabled: bool
    oracle_modes: int
    oracle_tol: float
    output_path: str | None
    raw_items: list = field(default_factory=list)


def _parse_lines(path: str):
    """(section, key, value, line_no) items with unknown names rejected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    items = []
    seen = set()
    section = None
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTION_KEYS:
                known = ", ".join(sorted(_SECTION_KEYS))
                raise ConfigError(
                    f"{path}:{no}: unknown section [{section}] (known: {known})"
                )
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"{path}:{no}: key outside of any [section]")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _SECTION_KEYS[section]:
            known = ", ".join(sorted(_SECTION_KEYS[section]))
            raise ConfigError(
                f"{path}:{no}: unknown key {key!r} in [{section}] (known: {known})"
            )
        if (section, key) in seen:
            raise ConfigError(f"{path}:{no}: duplicate key {key!r} in [{section}]")
        seen.add((section, key))
        if not value:
            raise ConfigError(f"{path}:{no}: empty value for {key!r}")
        items.append((section, key, value, no))
    return items


class _Table:
    """Parsed items with typed access and line-precise errors."""

    def __init__(self, path, items):
        self.path = path
        self.data = {(s, k): (v, no) for s, k, v, no in items}
        self.items = items

    def _fail(self, section, key, message):
        entry = self.data.get((section, key))
        where = f"{self.path}:{entry[1]}" if entry else self.path
        raise ConfigError(f"{where}: [{section}] {key}: {message}")

    def has(self, section, key):
        return (section, key) in self.data

    def get_str(self, section, key, default=None):
        entry = self.data.get((section, key))
        if entry is None:
            if default is None:
                raise ConfigError(
                    f"{self.path}: missing required key {key!r} in [{section}]"
                )
            return default
        return entry[0]

    def get_float(self, section, key, default=None):
        if not self.has(section, key):
            if default is None:
                raise ConfigError(
                    f"{self.path}: missing required key {key!r} in [{section}]"
                )
            return float(default)
        raw = self.data[(section, key)][0]
        try:
            return float(raw)
        except ValueError:
            self._fail(section, key, f"not a number: {raw!r}")

    def get_complex(self, section, key, default=0.0):
        if not self.has(section, key):
            return complex(default)
        raw = self.data[(section, key)][0]
        try:
            return complex(raw.replace(" ", ""))
        except ValueError:
            self._fail(section, key, f"not a real or complex number: {raw!r}")

    def get_int(self, section, key, default=None):
        if not self.has(section, key):
            if default is None:
                raise ConfigError(
                    f"{self.path}: missing required key {key!r} in [{section}]"
                )
            return int(default)
        raw = self.data[(section, key)][0]
        try:
            return int(raw)
        except ValueError:
            self._fail(section, key, f"not an integer: {raw!r}")

    def get_bool(self, section, key, default=False):
        if not self.has(section, key):
            return bool(default)
        raw = self.data[(section, key)][0].lower()
        if raw in ("true", "yes", "on", "1"):
            return True
        if raw in ("false", "no", "off", "0"):
            return False
        self._fail(section, key, f"not a boolean: {raw!r}")


def _reservoir_from(table: _Table, section: str) -> ReservoirParams:
    cut = table.get_float(section, "omega_cut", math.inf)
    try:
        return ReservoirParams(
            gamma=table.get_float(section, "gamma", 1.0),
            bandwidth=table.get_float(section, "d", 0.5),
            mu=table.get_float(section, "mu", 0.0),
            k_t=table.get_float(section, "k_t", 0.0),
            cutoff=cut,
        )
    except ConfigError as exc:
        raise ConfigError(f"{table.path}: [{section}]: {exc}")


def _initial_from(table: _Table) -> tuple:
    name = table.get_str("initial", "state", "single1").lower()
    if name not in INITIAL_STATES:
        raise ConfigError(
            f"{table.path}: [initial] state must be one of"
            f" {', '.join(INITIAL_STATES)}; got {name!r}"
        )
    if name == "vacuum":
        return name, DensityBlocks.vacuum()
    if name == "single1":
        return name, DensityBlocks.single(1)
    if name == "single2":
        return name, DensityBlocks.single(2)
    if name == "bell_plus":
        return name, DensityBlocks.bell(+1)
    if name == "bell_minus":
        return name, DensityBlocks.bell(-1)
    r1 = np.zeros((2, 2), dtype=complex)
    r2 = np.zeros((2, 2), dtype=complex)
    r1[0, 0] = table.get_float("initial", "rho1_00", 0.0)
    r1[1, 1] = table.get_float("initial", "rho1_11", 0.0)
    off1 = table.get_float("initial", "rho1_01_re", 0.0) + 1j * table.get_float(
        "initial", "rho1_01_im", 0.0
    )
    r1[0, 1] = off1
    r1[1, 0] = np.conj(off1)
    r2[0, 0] = table.get_float("initial", "rho2_00", 0.0)
    r2[1, 1] = table.get_float("initial", "rho2_11", 0.0)
    off2 = table.get_float("initial", "rho2_01_re", 0.0) + 1j * table.get_float(
        "initial", "rho2_01_im", 0.0
    )
    r2[0, 1] = off2
    r2[1, 0] = np.conj(off2)
    try:
        return name, DensityBlocks(r1, r2)
    except InvariantViolation as exc:
        raise ConfigError(f"{table.path}: [initial] explicit blocks invalid: {exc}")


def _axis_from(table: _Table, key: str) -> SweepAxis:
    raw = table.get_str("sweep", key)
    parts = raw.split(":")
    if len(parts) != 4:
        table._fail("sweep", key, "expected 'names:min:max:steps'")
    names = tuple(n.strip().lower() for n in parts[0].split(","))
    for n in names:
        if n not in SWEEP_PARAMS:
            table._fail(
                "sweep",
                key,
                f"unknown parameter {n!r} (known: {', '.join(SWEEP_PARAMS)})",
            )
    try:
        lo, hi = float(parts[1]), float(parts[2])
        steps = int(parts[3])
    except ValueError:
        table._fail("sweep", key, "min/max must be numbers, steps an integer")
    if steps < 1:
        table._fail("sweep", key, f"steps must be >= 1, got {steps}")
    return SweepAxis(names=names, lo=lo, hi=hi, steps=steps)


def load_experiment(path: str) -> ExperimentConfig:
    """Parse and validate one config file into an ExperimentConfig."""
    items = _parse_lines(path)
    table = _Table(path, items)

    kind = SpectralKind.from_name(table.get_str("spectral", "kind", "lorentzian"))
    system = SystemParams(
        eps1=table.get_float("system", "eps1"),
        eps2=table.get_float("system", "eps2"),
        g_coupling=table.get_complex("system", "g", 0.0),
    )
    model = ModelConfig(
        system=system,
        left=_reservoir_from(table, "left"),
        right=_reservoir_from(table, "right"),
        spectral_kind=kind,
    )

    grid = None
    if table.has("grid", "t_max") or table.has("grid", "n_steps"):
        grid = TimeGrid(
            t_max=table.get_float("grid", "t_max"),
            n_steps=table.get_int("grid", "n_steps"),
        )

    initial_name, initial = _initial_from(table)

    method = table.get_str("solver", "method", "exact").lower()
    if method not in SOLVER_METHODS:
        raise ConfigError(
            f"{path}: [solver] method must be one of {', '.join(SOLVER_METHODS)};"
            f" got {method!r}"
        )

    axes = []
    if table.has("sweep", "axis1"):
        axes.append(_axis_from(table, "axis1"))
    if table.has("sweep", "axis2"):
        if not axes:
            raise ConfigError(f"{path}: [sweep] axis2 given without axis1")
        axes.append(_axis_from(table, "axis2"))

    return ExperimentConfig(
        model=model,
        grid=grid,
        initial=initial,
        initial_name=initial_name,
        method=method,
        axes=axes,
        oracle_enabled=table.get_bool("oracle", "enabled", False),
        oracle_modes=table.get_int("oracle", "modes", 400),
        oracle_tol=table.get_float("oracle", "tol", 1e-2),
        output_path=table.get_str("output", "path", "") or None,
        raw_items=[(s, k, v) for s, k, v, _ in items],
    )


def _apply_param(model: ModelConfig, name: str, value: float) -> ModelConfig:
    sys_p, left, right = model.system, model.left, model.right
    if name == "eps1":
        sys_p = replace(sys_p, eps1=value)
    elif name == "eps2":
        sys_p = replace(sys_p, eps2=value)
    elif name == "g":
        sys_p = replace(sys_p, g_coupling=value)
    elif name == "mu1":
        left = replace(left, mu=value)
    elif name == "mu2":
        right = replace(right, mu=value)
    elif name == "d":
        left = replace(left, bandwidth=value)
        right = replace(right, bandwidth=value)
    elif name == "k_t":
        left = replace(left, k_t=value)
        right = replace(right, k_t=value)
    elif name == "gamma":
        left = replace(left, gamma=value)
        right = replace(right, gamma=value)
    elif name == "omega_cut":
        left = replace(left, cutoff=value)
        right = replace(right, cutoff=value)
    else:
        raise ConfigError(f"unknown sweep parameter {name!r}")
    return ModelConfig(
        system=sys_p, left=left, right=right, spectral_kind=model.spectral_kind
    )


def _solve_pair(model: ModelConfig, grid: TimeGrid, method: str):
    """(u_seq, v_seq) for one solver method on one grid."""
    if method == "exact":
        sol = solve(model, grid)
        return sol.u_seq, sol.v_seq
    if method == "wbl":
        sol = wbl_greens(model, grid)
        return sol.u_seq, sol.v_seq
    if method == "born_markov":
        sol = wbl_greens(model, grid)
        v, _ = bm_fluctuation(model, grid)
        return sol.u_seq, v
    if method == "pole":
        expansion = pole_expansion_lorentzian(model)
        u = expansion.reconstruct(grid.times)
        v = compute_fluctuation(u, model, grid)
        return u, v
    raise ConfigError(f"unknown solver method {method!r}")


def _steady_matrix(model: ModelConfig, method: str, grid):
    """V^s for one solver method; exact falls back to a late-time average."""
    if method == "pole":
        return steady_state_fluctuation(pole_expansion_lorentzian(model), model), 0.0
    if method == "wbl":
        return wbl_steady_fluctuation(model), 0.0
    if method == "born_markov":
        _, v_s = bm_fluctuation(
            model, grid if grid is not None else TimeGrid(1.0, 2)
        )
        return v_s, 0.0
    if method == "exact":
        if grid is None:
            raise ConfigError(
                "steady state of the exact solver needs a [grid] section"
                " (late-time average over [0.8 t_max, t_max])"
            )
        if model.spectral_kind is SpectralKind.WIDE_BAND:
            return wbl_steady_fluctuation(model), 0.0
        u = solve_dyson(model, grid)
        v = compute_fluctuation(u, model, grid)
        start = int(math.floor(0.8 * grid.n_steps))
        window = v[start:]
        v_s = window.mean(axis=0)
        spread = float(np.max(np.abs(window - v_s[None]).std(axis=0)))
        return 0.5 * (v_s + v_s.conj().T), spread
    raise ConfigError(f"unknown solver method {method!r}")


def _steady_point(args):
    """Worker: one sweep grid point -> (index, row values)."""
    idx, model, method, grid, axis_values = args
    v_s, spread = _steady_matrix(model, method, grid)
    eof = steady_state_eof(v_s)
    row = list(axis_values) + [
        eof,
        v_s[0, 0].real,
        v_s[1, 1].real,
        v_s[0, 1].real,
        v_s[0, 1].imag,
        spread,
    ]
    return idx, row


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(path, header_items, columns, rows):
    lines = []
    for section, key, value in header_items:
        lines.append(f"# {section}.{key} = {value}")
    lines.append("\t".join(columns))
    for row in rows:
        lines.append("\t".join(_fmt(x) for x in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run_evolution(exp: ExperimentConfig, out_path=None) -> list:
    """Time-series table: t, entanglement, occupations, norms, purity."""
    if exp.grid is None:
        raise ConfigError("evolve needs a [grid] section")
    u_seq, v_seq = _solve_pair(exp.model, exp.grid, exp.method)
    u_norms = np.linalg.svd(u_seq, compute_uv=False)[:, 0]
    rows = []
    for i, t in enumerate(exp.grid.times):
        coeffs = propagator_coefficients(u_seq[i], v_seq[i])
        rho_t = evolve_density(exp.initial, coeffs)
        eof = fermionic_eof(rho_t)
        n1, n2 = rho_t.occupations()
        rows.append(
            (
                float(t),
                eof.value,
                float(np.trace(v_seq[i]).real),
                n1,
                n2,
                float(u_norms[i]),
                rho_t.purity(),
            )
        )
    _emit(
        out_path if out_path is not None else exp.output_path,
        exp.raw_items,
        ["t", "eof", "tr_v", "n1", "n2", "u_norm", "purity"],
        rows,
    )
    return rows


def run_sweep(exp: ExperimentConfig, out_path=None, workers: int = 1) -> list:
    """Steady-state grid over one or two swept parameter groups."""
    if not exp.axes:
        raise ConfigError("sweep needs [sweep] axis1 (and optionally axis2)")
    axes = exp.axes
    tasks = []
    if len(axes) == 1:
        for i, val in enumerate(axes[0].values):
            model = exp.model
            for name in axes[0].names:
                model = _apply_param(model, name, float(val))
            tasks.append((i, model, exp.method, exp.grid, (float(val),)))
        axis_cols = ["axis1"]
    else:
        idx = 0
        for v1 in axes[0].values:
            for v2 in axes[1].values:
                model = exp.model
                for name in axes[0].names:
                    model = _apply_param(model, name, float(v1))
                for name in axes[1].names:
                    model = _apply_param(model, name, float(v2))
                tasks.append(
                    (idx, model, exp.method, exp.grid, (float(v1), float(v2)))
                )
                idx += 1
        axis_cols = ["axis1", "axis2"]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_steady_point, tasks, chunksize=8))
    else:
        results = [_steady_point(t) for t in tasks]
    results.sort(key=lambda pair: pair[0])
    rows = [row for _, row in results]
    _emit(
        out_path if out_path is not None else exp.output_path,
        exp.raw_items,
        axis_cols + ["eof_s", "v00", "v11", "v01_re", "v01_im", "late_time_spread"],
        rows,
    )
    return rows


def run_classify(exp: ExperimentConfig, out_path=None) -> dict:
    """Bound-state census: roots, effectiveness data, relaxation class."""
    roots = find_bound_states(exp.model)
    cls = classify_relaxation(roots)
    lines = []
    for section, key, value in exp.raw_items:
        lines.append(f"# {section}.{key} = {value}")
    lines.append("energy\tresidue_norm\tedge_distance")
    for r in roots:
        lines.append(
            f"{_fmt(r.energy)}\t{_fmt(float(np.max(np.abs(r.residue_weight))))}"
            f"\t{_fmt(r.edge_distance)}"
        )
    plateau = None
    if exp.grid is not None:
        u = solve_dyson(exp.model, exp.grid)
        norms = np.linalg.svd(u, compute_uv=False)[:, 0]
        start = int(math.floor(0.8 * exp.grid.n_steps))
        plateau = float(norms[start:].max())
        lines.append(f"# late_time_u_norm_max = {_fmt(plateau)}")
    lines.append(f"# effective_roots = {cls.count}")
    lines.append(f"# relaxation_class = {cls.kind.value}")
    text = "\n".join(lines) + "\n"
    target = out_path if out_path is not None else exp.output_path
    if target:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return {"roots": roots, "classification": cls, "plateau": plateau}


def run_verify(exp: ExperimentConfig, out_path=None, modes=None) -> dict:
    """Solver-vs-oracle cross check on the configured grid."""
    if exp.grid is None:
        raise ConfigError("verify needs a [grid] section")
    k = modes if modes is not None else exp.oracle_modes
    u_seq, v_seq = _solve_pair(exp.model, exp.grid, exp.method)
    bath = discretize(exp.model, k)
    ex = exact_greens(bath, exp.grid)
    du = float(np.max(np.abs(u_seq - ex.u_seq)))
    dv = float(np.max(np.abs(v_seq - ex.v_seq)))
    report = {
        "u_error": du,
        "v_error": dv,
        "modes": k,
        "tolerance": exp.oracle_tol,
    }
    lines = [f"# oracle modes per lead: {k}"]
    lines.append(f"max |U - U_oracle| = {_fmt(du)}")
    lines.append(f"max |V - V_oracle| = {_fmt(dv)}")
    lines.append(f"tolerance = {_fmt(exp.oracle_tol)}")
    text = "\n".join(lines) + "\n"
    target = out_path if out_path is not None else exp.output_path
    if target:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if max(du, dv) > exp.oracle_tol:
        raise SolverError(
            f"oracle cross-check failed: U error {du:.3e}, V error {dv:.3e}"
            f" exceed tolerance {exp.oracle_tol:.3e}"
        )
    return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqdsim",
        description=(
            "Exact decoherence and entanglement dynamics of a double quantum"
            " dot between two fermionic reservoirs"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("evolve", "time evolution table for one configuration"),
        ("sweep", "steady-state entanglement over a parameter grid"),
        ("classify", "bound-state census and relaxation class"),
        ("verify", "cross-check a solver against the discretized oracle"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the config file")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        if name == "sweep":
            p.add_argument(
                "--workers", type=int, default=1, help="parallel grid workers"
            )
        if name == "verify":
            p.add_argument(
                "--oracle-modes",
                type=int,
                default=None,
                help="bath modes per lead (overrides [oracle] modes)",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        exp = load_experiment(args.config)
        if args.command == "evolve":
            run_evolution(exp, out_path=args.out)
        elif args.command == "sweep":
            run_sweep(exp, out_path=args.out, workers=args.workers)
        elif args.command == "classify":
            run_classify(exp, out_path=args.out)
        elif args.command == "verify":
            run_verify(exp, out_path=args.out, modes=args.oracle_modes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
