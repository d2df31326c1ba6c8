"""Command-line driver: JSON sweep config in, CSV tables out.

Every table is written as one ``#``-prefixed JSON metadata line followed by a
CSV header and rows. Numbers use 17 significant digits so that reruns of the
same config give byte-identical rows.

Exit codes: 0 ok, 1 a validation failed, 2 bad config, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import pi
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .effective import BusCouplings, compute_coupling, length_sweep, antiferro_ferro_profile
from .errors import ConvergenceError, DomainError, WeakCouplingError
from .gates import (
    CNOT,
    CPF,
    SWAP,
    adiabatic_check,
    cnot,
    compare_error_conventions,
    cpf,
    distance_up_to_phase,
    error_grid,
    gate_error,
    swap,
)
from .ladder import LadderSpec, build_hamiltonian
from .oracle import coupling_scaling, single_qubit_channel, validate_effective_spectrum
from .spectra import analytic_spectrum_l2, full_spectrum

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3

COMMANDS = ("spectrum", "fig1", "fig2", "fig3", "gamma", "gate-error", "adiabatic", "validate")
BACKENDS = ("sum", "resolvent", "auto")


class ConfigError(ValueError):
    """Invalid sweep configuration; the message names the offending line."""


# ------------------------------------------------------------------ config

_DEFAULTS = {
    "spectrum": dict(L=2, J=1.0, delta=1.0),
    "gamma": dict(L=2, J=1.0, delta=1.0, m=1, n=2, J_A=1.0, J_B=1.0),
    "fig1": dict(L=2, J=10.0, m=1, n=2, J_A=1.0, J_B=1.0,
                 delta_grid={"start": 0.1, "stop": 1.0, "step": 0.05}),
    "fig2": dict(L=6, J=10.0, delta=0.2, m=1, n=2, J_A=1.0, J_B=1.0,
                 lengths={"start": 2, "stop": 6}),
    "fig3": dict(L=4, J=10.0, delta=0.2, m=1, n=2, J_A=1.0, J_B=1.0,
                 fluctuation_grid={"start": -0.005, "stop": 0.005, "step": 0.0005}),
    "gate-error": dict(L=4, J=10.0, delta=0.2, m=1, n=2, J_A=1.0, J_B=1.0, delta_m=0.0, delta_n=0.0),
    "adiabatic": dict(L=2, J=1.0, delta=1.0, m=1, n=2, J_A=0.1, J_B=0.1, gap="exact", C=0.0),
    "validate": dict(L=2, J=1.0, delta=1.0, m=1, n=2),
}

_TOLERANCES = {
    "golden_gamma": 1e-10,
    "backend_agreement": 1e-8,
    "effective_rel_error": 0.05,
    "scaling_min": 2.0,
    "scaling_max": 8.0,
    "gate_distance": 1e-8,
    "swap_distance": 1e-10,
    "channel_infidelity": 1e-3,
    "adiabatic_ratio_min": 100.0,
    "adiabatic_ratio_max": 200.0,
}


@dataclass
class SweepConfig:
    command: str
    L: int = 2
    J: float = 1.0
    delta: float = 1.0
    bond_overrides: list = field(default_factory=list)
    m: int = 1
    n: int = 2
    J_A: float | None = None
    J_B: float | None = None
    delta_grid: object = None
    lengths: object = None
    fluctuation_grid: object = None
    delta_m: float = 0.0
    delta_n: float = 0.0
    gap: str = "exact"
    C: float = 0.0
    backend: str = "auto"
    jobs: int = 1
    out: str | None = None
    tolerances: dict = field(default_factory=dict)

    # -- construction

    @classmethod
    def from_text(cls, text: str, command: str, overrides: dict | None = None) -> "SweepConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError("line 1: config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        for key in raw:
            if key not in names:
                raise ConfigError(f"line {_line_of(text, key)}: unknown key {key!r}")
        if raw.get("command", command) != command:
            raise ConfigError(
                f"line {_line_of(text, 'command')}: config is for {raw['command']!r}, not {command!r}"
            )
        values = {**_DEFAULTS[command], **raw, "command": command}
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        try:
            cfg = cls(**values)
            cfg.validate()
        except ConfigError as exc:
            key = getattr(exc, "key", None)
            where = f"line {_line_of(text, key)}: " if key and key in raw else ""
            raise ConfigError(f"{where}{exc}") from None
        return cfg

    @classmethod
    def from_file(cls, path, command: str, overrides: dict | None = None) -> "SweepConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text, command, overrides)

    # -- checks

    def validate(self):
        _check(self.command in COMMANDS, "command", f"unknown command {self.command!r}")
        _check(_is_int(self.L) and self.L >= 2, "L", f"L must be an integer >= 2, got {self.L!r}")
        _check(_is_real(self.J) and self.J > 0, "J", f"J must be a positive number, got {self.J!r}")
        _check(_is_real(self.delta) and 0 < self.delta <= 1, "delta",
               f"delta must lie in (0, 1], got {self.delta!r}")
        for key in ("m", "n"):
            v = getattr(self, key)
            _check(_is_int(v) and 1 <= v <= 2 * self.L, key, f"{key} must be a node in 1..{2 * self.L}, got {v!r}")
        _check(self.m != self.n or self.command in ("spectrum", "validate"), "n", "m and n must differ")
        for key in ("J_A", "J_B"):
            v = getattr(self, key)
            _check(v is None or _is_real(v), key, f"{key} must be a number, got {v!r}")
        _check(self.backend in BACKENDS, "backend", f"backend must be one of {BACKENDS}, got {self.backend!r}")
        _check(_is_int(self.jobs) and self.jobs >= 1, "jobs", f"jobs must be a positive integer, got {self.jobs!r}")
        _check(self.gap in ("exact", "asymptotic"), "gap", f"gap must be 'exact' or 'asymptotic', got {self.gap!r}")
        _check(isinstance(self.tolerances, dict) and set(self.tolerances) <= set(_TOLERANCES), "tolerances",
               f"tolerances may only set {sorted(_TOLERANCES)}")
        for key in ("delta_grid", "fluctuation_grid"):
            if getattr(self, key) is not None:
                parse_grid(getattr(self, key), key)
        if self.lengths is not None:
            parse_grid(self.lengths, "lengths", integer=True)
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            _check(parent.is_dir() and os.access(parent, os.W_OK), "out", f"output directory {parent} is not writable")
        try:
            self.ladder()
        except (DomainError, TypeError, ValueError) as exc:
            raise _keyed(f"bad bond_overrides: {exc}", "bond_overrides") from None

    def ladder(self, **changes) -> LadderSpec:
        over = {}
        for item in self.bond_overrides:
            if isinstance(item, dict):
                over[(item.get("chain"), item.get("bond"))] = item.get("delta")
            else:
                chain, bond, value = item
                over[(chain, bond)] = value
        base = dict(L=self.L, J=float(self.J), delta=float(self.delta), bond_overrides=over)
        base.update(changes)
        return LadderSpec(**base)

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, _TOLERANCES[name]))

    def method(self, L: int | None = None) -> str:
        if self.backend != "auto":
            return self.backend
        return "sum" if (L or self.L) <= 5 else "resolvent"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _keyed(message: str, key: str) -> ConfigError:
    exc = ConfigError(message)
    exc.key = key
    return exc


def _check(ok: bool, key: str, message: str):
    if not ok:
        raise _keyed(message, key)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _line_of(text: str, key: str | None) -> int:
    if key:
        needle = f'"{key}"'
        for lineno, line in enumerate(text.splitlines(), 1):
            if needle in line:
                return lineno
    return 1


def parse_grid(spec, key: str = "grid", integer: bool = False) -> np.ndarray:
    """A list of values, or ``{"start", "stop", "step"}`` with ``stop`` included."""
    if isinstance(spec, dict):
        if not {"start", "stop"} <= set(spec) or not set(spec) <= {"start", "stop", "step"}:
            raise _keyed(f"{key} range needs 'start', 'stop' and optionally 'step'", key)
        start, stop = spec["start"], spec["stop"]
        step = spec.get("step", 1)
        if not all(_is_real(v) for v in (start, stop, step)) or step <= 0 or stop < start:
            raise _keyed(f"{key} range must have start <= stop and step > 0", key)
        count = int(round((stop - start) / step)) + 1
        values = np.round(start + step * np.arange(count), 12)
    elif isinstance(spec, list):
        if not all(_is_real(v) for v in spec):
            raise _keyed(f"{key} must contain only numbers", key)
        values = np.asarray(spec, dtype=float)
    else:
        raise _keyed(f"{key} must be a list or a start/stop/step object", key)
    if len(values) == 0:
        raise _keyed(f"{key} is empty", key)
    if np.any(np.diff(values) <= 0):
        raise _keyed(f"{key} must be strictly increasing", key)
    if integer:
        if not np.allclose(values, np.round(values)):
            raise _keyed(f"{key} must contain integers", key)
        return np.round(values).astype(int)
    return values


# ------------------------------------------------------------------ tables


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


@dataclass
class ResultTable:
    name: str
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row} does not match columns {self.columns}")

    def rows_text(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(_fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        meta = {"table": self.name, "columns": list(self.columns), **self.metadata}
        return "# " + json.dumps(meta, sort_keys=True, default=_json_default) + "\n" + self.rows_text()

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def write(self, path):
        write_atomic(path, self.to_csv())


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_atomic(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.resolve().parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _coupling_strengths(cfg: SweepConfig, default: float) -> tuple[float, float]:
    J_A = default if cfg.J_A is None else float(cfg.J_A)
    J_B = J_A if cfg.J_B is None else float(cfg.J_B)
    return J_A, J_B


def _pool_map(fn, items, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(min(jobs, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------- commands


def cmd_spectrum(cfg: SweepConfig) -> list[ResultTable]:
    spec = cfg.ladder()
    spectrum = full_spectrum(build_hamiltonian(spec))
    energies = spectrum.eigenvalues
    if cfg.L == 2 and not spec.bond_overrides:
        analytic = analytic_spectrum_l2(spec.delta, spec.J).eigenvalues()
        columns = ("k", "energy", "total_sz", "analytic", "analytic_minus_numeric")
        rows = [(k, float(e), int(s), float(a), float(a - e))
                for k, (e, s, a) in enumerate(zip(energies, spectrum.sector_tags, analytic))]
    else:
        columns = ("k", "energy", "total_sz")
        rows = [(k, float(e), int(s)) for k, (e, s) in enumerate(zip(energies, spectrum.sector_tags))]
    return [ResultTable("spectrum", columns, rows)]


def cmd_gamma(cfg: SweepConfig) -> list[ResultTable]:
    J_A, J_B = _coupling_strengths(cfg, 1.0)
    c = compute_coupling(cfg.ladder(), cfg.m, cfg.n, J_A, J_B, cfg.method())
    jx, _, jz = c.exchange
    row = (cfg.m, cfg.n, c.gamma_x, c.gamma_y, c.gamma_z, c.delta_eff, c.c_eff, jx, jz)
    columns = ("m", "n", "gamma_x", "gamma_y", "gamma_z", "delta_eff", "c_eff", "J_x", "J_z")
    return [ResultTable("gamma", columns, [row])]


def _fig1_point(args):
    spec, m, n, J_A, J_B, method = args
    c = compute_coupling(spec, m, n, J_A, J_B, method)
    return (spec.delta, c.gamma_x, c.gamma_z, c.delta_eff)


def cmd_fig1(cfg: SweepConfig) -> list[ResultTable]:
    J_A, J_B = _coupling_strengths(cfg, 1.0)
    grid = parse_grid(cfg.delta_grid, "delta_grid")
    tasks = [(cfg.ladder(delta=float(d)), cfg.m, cfg.n, J_A, J_B, cfg.method()) for d in grid]
    rows = _pool_map(_fig1_point, tasks, cfg.jobs)
    return [ResultTable("fig1", ("delta", "gamma_x", "gamma_z", "delta_eff"), rows)]


def _lsweep_point(args):
    L, J, delta, m, n, J_A, J_B, method = args
    return tuple(length_sweep([L], J, delta, m, n, J_A, J_B, method)[0])


def cmd_fig2(cfg: SweepConfig) -> list[ResultTable]:
    J_A, J_B = _coupling_strengths(cfg, 1.0)
    profile = antiferro_ferro_profile(cfg.ladder(), cfg.m, J_A, J_B, cfg.method())
    rows = [tuple(r) for r in profile]
    lengths = parse_grid(cfg.lengths, "lengths", integer=True)
    tasks = [(int(L), float(cfg.J), float(cfg.delta), cfg.m, cfg.n, J_A, J_B, cfg.method(int(L))) for L in lengths]
    lrows = _pool_map(_lsweep_point, tasks, cfg.jobs)
    return [
        ResultTable("fig2_profile", ("n", "distance", "gamma_x", "J_x", "sign"), rows),
        ResultTable("fig2_lsweep", ("L", "gamma_x", "J_x"), lrows),
    ]


def _report_row(r):
    return (r.delta_m, r.delta_n, r.delta_x, r.delta_z, r.n_formula, r.n_direct, r.log10_n_formula)


_ERROR_COLUMNS = ("delta_m", "delta_n", "delta_x", "delta_z", "n_formula", "n_direct", "log10_n_formula")


def cmd_fig3(cfg: SweepConfig) -> list[ResultTable]:
    J_A, J_B = _coupling_strengths(cfg, 1.0)
    grid = parse_grid(cfg.fluctuation_grid, "fluctuation_grid")
    reports = error_grid(cfg.ladder(), cfg.m, cfg.n, grid, grid, J_A, J_B, cfg.method(), cfg.jobs)
    rows = [_report_row(r) for row in reports for r in row]
    check = compare_error_conventions(reports)
    meta = {"convention_check": {"checked": check.checked, "mismatched": check.mismatched,
                                 "max_rel_diff": check.max_rel_diff}}
    if check.diagnostic:
        meta["diagnostics"] = [check.diagnostic]
        print(f"spinbus: diagnostic: {check.diagnostic}", file=sys.stderr)
    return [ResultTable("fig3", _ERROR_COLUMNS, rows, meta)]


def cmd_gate_error(cfg: SweepConfig) -> list[ResultTable]:
    J_A, J_B = _coupling_strengths(cfg, 1.0)
    r = gate_error(cfg.ladder(), cfg.m, cfg.n, float(cfg.delta_m), float(cfg.delta_n), J_A, J_B, cfg.method())
    return [ResultTable("gate_error", _ERROR_COLUMNS + ("n_direct_raw",), [_report_row(r) + (r.n_direct_raw,)])]


def cmd_adiabatic(cfg: SweepConfig) -> list[ResultTable]:
    J_A, J_B = _coupling_strengths(cfg, cfg.J / 10)
    a = adiabatic_check(cfg.ladder(), cfg.m, cfg.n, J_A, J_B, cfg.gap, float(cfg.C), cfg.method())
    columns = ("L", "delta", "J_A", "J_B", "time", "gap", "product", "two_pi", "ratio", "passed")
    row = (cfg.L, float(cfg.delta), J_A, J_B, a.time, a.gap, a.product, 2 * pi, a.ratio, a.passed)
    return [ResultTable("adiabatic", columns, [row])]


def cmd_validate(cfg: SweepConfig) -> list[ResultTable]:
    """Oracle suite; each row is ``(check, case, value, threshold, passed)``."""
    rows = []

    def add(check, case, value, threshold, passed):
        rows.append((check, case, float(value), float(threshold), bool(passed)))

    J = float(cfg.J)
    golden = LadderSpec(2, J, 1.0)
    want = {2: 1 / (6 * J), 3: -1 / (8 * J), 4: 1 / (6 * J)}
    tol = cfg.tolerance("golden_gamma")
    for method in ("sum", "resolvent"):
        bus = BusCouplings(golden, method)
        err = max(abs(bus.gamma(1, n, a) - g) for n, g in want.items() for a in "xyz")
        add("golden_gamma", method, err, tol, err <= tol)

    spec = cfg.ladder()
    m, n = cfg.m, cfg.n
    if cfg.L <= 5:
        a, b = BusCouplings(spec, "sum"), BusCouplings(spec, "resolvent")
        err = max(abs(a.gamma(m, n, ax) - b.gamma(m, n, ax)) for ax in "xyz")
        tol = cfg.tolerance("backend_agreement")
        add("backend_agreement", f"L={cfg.L}", err, tol, err <= tol)

    J_A, J_B = _coupling_strengths(cfg, J / 100)
    tol = cfg.tolerance("effective_rel_error")
    try:
        v = validate_effective_spectrum(spec, m, n, J_A, J_B, cfg.method())
        add("effective_vs_exact", f"J_A={J_A:g}", v.rel_error, tol, v.rel_error <= tol)
        s = coupling_scaling(spec, m, n, J_A, J_B, method=cfg.method())
        lo, hi = cfg.tolerance("scaling_min"), cfg.tolerance("scaling_max")
        add("scaling_ratio_min", "halved J_A", s.ratio, lo, s.ratio >= lo)
        add("scaling_ratio_max", "halved J_A", s.ratio, hi, s.ratio <= hi)
    except WeakCouplingError:
        add("effective_vs_exact", f"J_A={J_A:g}", np.inf, tol, False)

    tol = cfg.tolerance("gate_distance")
    for d in (0.2, 0.5, 1.0):
        c = compute_coupling(LadderSpec(2, J, d), 1, 2)
        dc = distance_up_to_phase(cpf(c.gamma_x, c.gamma_z), CPF)
        dn = distance_up_to_phase(cnot(c.gamma_x, c.gamma_z), CNOT)
        add("cpf_distance", f"delta={d:g}", dc, tol, dc <= tol)
        add("cnot_distance", f"delta={d:g}", dn, tol, dn <= tol)
    tol = cfg.tolerance("swap_distance")
    ds = distance_up_to_phase(swap(1 / (6 * J)), SWAP)
    add("swap_distance", "delta=1", ds, tol, ds <= tol)

    tol = cfg.tolerance("channel_infidelity")
    for axis in "xyz":
        for theta in (pi / 4, pi / 2, pi):
            ch = single_qubit_channel(golden, 1, J / 100, axis, theta)
            add("channel_infidelity", f"{axis} theta={theta:.6g}", ch.infidelity, tol, ch.infidelity <= tol)

    adi = adiabatic_check(golden, 1, 2, J / 10, J / 10)
    lo, hi = cfg.tolerance("adiabatic_ratio_min"), cfg.tolerance("adiabatic_ratio_max")
    add("adiabatic_ratio", "J_A=J_B=J/10", adi.ratio, lo, lo <= adi.ratio <= hi)
    add("adiabatic_product", "J_A=J_B=J/10", adi.product, 2 * pi, adi.passed)
    return [ResultTable("validate", ("check", "case", "value", "threshold", "passed"), rows)]


HANDLERS = {
    "spectrum": cmd_spectrum,
    "gamma": cmd_gamma,
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "gate-error": cmd_gate_error,
    "adiabatic": cmd_adiabatic,
    "validate": cmd_validate,
}


def run(cfg: SweepConfig) -> tuple[list[ResultTable], int]:
    """Execute a command; returns the tables and the exit code they imply."""
    start = time.perf_counter()
    tables = HANDLERS[cfg.command](cfg)
    elapsed = time.perf_counter() - start
    meta = {
        "command": cfg.command,
        "config": cfg.to_dict(),
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "timings": {"wall_seconds": round(elapsed, 3)},
    }
    for t in tables:
        t.metadata = {**meta, **t.metadata}
    code = EXIT_OK
    if cfg.command in ("validate", "adiabatic"):
        passed = all(t.column("passed").all() for t in tables)
        code = EXIT_OK if passed else EXIT_VALIDATION
    return tables, code


def output_paths(out, tables: list[ResultTable]) -> list[Path]:
    out = Path(out)
    paths = [out]
    for t in tables[1:]:
        suffix = t.name.split("_", 1)[-1]
        paths.append(out.with_name(f"{out.stem}_{suffix}{out.suffix}"))
    return paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinbus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON sweep configuration")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--backend", choices=("sum", "resolvent"), help="gamma evaluation backend")
    parser.add_argument("--jobs", type=int, help="worker processes for sweeps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = SweepConfig.from_file(
            args.config, args.command, {"out": args.out, "backend": args.backend, "jobs": args.jobs}
        )
    except ConfigError as exc:
        print(f"spinbus: config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        tables, code = run(cfg)
    except ConvergenceError as exc:
        print(f"spinbus: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DomainError as exc:
        print(f"spinbus: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.out:
        for table, path in zip(tables, output_paths(cfg.out, tables)):
            table.write(path)
    else:
        sys.stdout.write("\n".join(t.to_csv() for t in tables))
    if code == EXIT_VALIDATION:
        print("spinbus: validation failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
