"""Command-line front end: LKE trajectories, ED runs, benchmarks, thermal baselines, correlation scans."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import ed as exact
from .basis import MAX_DEGREE, Scheme, build_truncation
from .kinetics import FULL, QUADRATIC, FeasibilityError, IntegratorBlowup, TrajectoryConfig, build_generator, evolve
from .model import ModelParams, build_model
from .observables import observable_functions, thermal_expansion
from .states import (decoupled_superposition, energy_density, few_particle_valid, initial_vector, make_state,
                     parse_state, particle_hole)

EXIT_OK, EXIT_CONFIG, EXIT_FEASIBILITY, EXIT_NUMERICAL = 0, 2, 3, 4
MODES = ("evolve", "ed", "benchmark", "thermal", "correlate")
OBSERVABLES = ("sz", "cx1", "czz")
BENCHMARK_SCHEMES = ("T2", "Tp2", "T4", "T6p3", "T6p4", "Tp4")
MEMORY_BUDGET_GB = 4.0


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "evolve"
    N: int = 10
    Jx: float = -1.0
    Jz: float = -1.0
    h: float = -1.0
    alpha: float = 3.0
    truncation: str = "T4"
    hamiltonian: str = FULL
    state: str = "psi:1"
    t_max: float = 10.0
    dt: float = 0.01
    sample_every: int = 10
    method: str = "rk4_with_halving_check"
    observables: list = field(default_factory=lambda: ["sz"])
    m_list: list = field(default_factory=list)
    schemes: list = field(default_factory=lambda: list(BENCHMARK_SCHEMES))
    betas: list = field(default_factory=lambda: [round(0.05 * i, 2) for i in range(-6, 7)])
    ed_sizes: list = field(default_factory=lambda: [8, 10, 12])
    memory_gb: float = MEMORY_BUDGET_GB
    workers: int = 1
    output: str = "run"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.N, self.Jx, self.Jz, self.h, self.alpha)

    @property
    def trajectory(self) -> TrajectoryConfig:
        return TrajectoryConfig(self.t_max, self.dt, self.sample_every, self.method)

    def validate(self) -> "RunConfig":
        """Check every precondition that does not need a basis or a spectrum."""
        try:
            if self.mode == "lke":
                self.mode = "evolve"
            if self.mode not in MODES:
                raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
            self.params
            self.trajectory
            if self.hamiltonian not in (FULL, QUADRATIC):
                raise ConfigError(f"hamiltonian must be {FULL!r} or {QUADRATIC!r}")
            for name in [self.truncation, *self.schemes]:
                Scheme.parse(name)
            parse_state(self.state, self.N)
            bad = set(self.observables) - set(OBSERVABLES)
            if bad:
                raise ConfigError(f"unknown observables {sorted(bad)}; choose from {OBSERVABLES}")
            if any(abs(int(m)) > self.N // 2 for m in self.m_list):
                raise ConfigError(f"m_list entries must satisfy |m| <= N/2 = {self.N // 2}")
            if self.workers < 1:
                raise ConfigError("workers must be >= 1")
            if self.mode in ("ed", "benchmark") and self.N > exact.MAX_ED_N:
                raise ConfigError(f"exact diagonalization is limited to N <= {exact.MAX_ED_N}")
            if self.mode == "thermal" and any(n > exact.MAX_ED_N or n % 2 for n in self.ed_sizes):
                raise ConfigError(f"ed_sizes must be even and <= {exact.MAX_ED_N}")
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from None
        return self


# ---------------------------------------------------------------- feasibility


def estimate_basis_size(scheme: str, N: int) -> int:
    """Upper bound on the basis size: subsets of the 2N pair factors up to degree/2."""
    deg = Scheme.parse(scheme).max_degree
    return sum(math.comb(2 * N, j) for j in range(deg // 2 + 1))


def check_feasibility(cfg: RunConfig, schemes) -> dict:
    out = {}
    for name in schemes:
        size = estimate_basis_size(name, cfg.N)
        per_row = 4 * cfg.N if cfg.hamiltonian == FULL else 8
        gb = size * per_row * 24 / 1e9
        if gb > cfg.memory_gb:
            raise FeasibilityError(
                f"{name} at N={cfg.N}: up to {size} operators and ~{gb:.1f} GB of generator, "
                f"above the {cfg.memory_gb} GB budget"
            )
        out[name] = {"basis_bound": size, "generator_gb_bound": gb}
    if Scheme.parse(cfg.truncation).max_degree > MAX_DEGREE:
        raise FeasibilityError(f"degree above {MAX_DEGREE} is not supported")
    return out


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header: list, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def write_meta(path: Path, cfg: RunConfig, meta: dict) -> None:
    payload = {"config": cfg.to_dict(), **meta}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj)}")


def _series_table(times, series: dict):
    names = list(series)
    rows = zip(times, *(np.real(series[n]) for n in names))
    return ["t", *names], rows


# ---------------------------------------------------------------- modes


def _lke_series(cfg: RunConfig, params: ModelParams, trunc, descriptor: str, names, m_list, meta: dict):
    table, _, coeffs = build_model(params)
    system = build_generator(coeffs, trunc, cfg.hamiltonian, workers=cfg.workers)
    state = make_state(descriptor, table)
    obs = observable_functions(trunc, table, names, m_list)
    ts = evolve(system, initial_vector(state, trunc), cfg.trajectory, obs)
    density = state.fermion_density()
    meta.setdefault("runs", []).append({
        "state": descriptor, "h": params.h, "Jx": params.Jx, "basis_size": system.size,
        "dropped_terms": system.dropped_terms, "build_seconds": system.build_seconds,
        "fermion_density": density, "few_particle_valid": few_particle_valid(density), **ts.meta,
    })
    return ts


def _observable_names(cfg: RunConfig):
    names = [n for n in cfg.observables if n != "czz"]
    if "czz" in cfg.observables:
        names.append("czz")
    m_list = [abs(int(m)) for m in cfg.m_list] or list(range(cfg.N // 2 + 1))
    return names, m_list


def run_evolve(cfg: RunConfig, out: Path, meta: dict):
    params = cfg.params
    trunc = build_truncation(cfg.truncation, cfg.N)
    names, m_list = _observable_names(cfg)
    st = parse_state(cfg.state, cfg.N)
    if st["kind"] == "superposition":
        if names != ["sz"]:
            raise ConfigError("superposition states support the sz observable only")
        spec = st["spec"]
        n = st["n"]
        down = _lke_series(cfg, params, trunc, f"psi:{n}", ["sz"], (), meta)
        mirror = _lke_series(cfg, particle_hole(params), trunc, f"psi:{n}", ["sz"], (), meta)
        sz0 = spec.w1 * np.real(down["sz"][0]) + spec.w2 * -np.real(mirror["sz"][0])
        ts = decoupled_superposition(spec, down, mirror, sz0)
        meta["decoupled"] = True
    else:
        ts = _lke_series(cfg, params, trunc, cfg.state, names, m_list, meta)
    header, rows = _series_table(ts.times, ts.values)
    write_csv(out.with_suffix(".csv"), header, rows)


def sample_times(traj: TrajectoryConfig) -> np.ndarray:
    """The sampling grid used by the LKE integrator."""
    steps = list(range(0, traj.n_steps + 1, traj.sample_every))
    if steps[-1] != traj.n_steps:
        steps.append(traj.n_steps)
    return np.array(steps) * traj.dt


def _ed_state(fock: exact.FockRep, descriptor: str) -> np.ndarray:
    st = parse_state(descriptor, fock.N)
    if st["kind"] == "vacuum":
        return fock.vacuum
    if st["kind"] == "psi":
        return fock.truncated_polarized(st["n"], "down")
    if st["kind"] == "chi":
        return fock.truncated_polarized(st["n"], "up")
    spec = st["spec"]
    psi = spec.y1 * fock.truncated_polarized(st["n"], "down") + spec.y2 * fock.truncated_polarized(st["n"], "up")
    return psi / np.linalg.norm(psi)


def _ed_observables(cfg: RunConfig, spectrum: exact.Spectrum):
    names, m_list = _observable_names(cfg)
    obs = {"sz": spectrum.sz_mean}
    if "cx1" in names:
        obs["cx1"] = exact.xx_nn_op(cfg.N)
    if "czz" in names:
        zz = exact.zz_correlator_ops(cfg.N)
        for m in m_list:
            obs[f"zz_{m}"] = zz[m]
    return names, m_list, obs


def run_ed(cfg: RunConfig, out: Path, meta: dict):
    params = cfg.params
    spectrum = exact.Spectrum(params)
    psi = _ed_state(exact.FockRep(params), cfg.state)
    names, m_list, obs = _ed_observables(cfg, spectrum)
    times = sample_times(cfg.trajectory)
    res = spectrum.evolve(psi, times, obs)
    series = {n: res[n] for n in names if n != "czz"}
    for m in m_list if "czz" in names else ():
        series[f"czz_{m}"] = res[f"zz_{m}"] - res["sz"] ** 2
    series["norm"], series["energy"] = res["norm"], res["energy"]
    meta["norm_drift"] = float(np.max(np.abs(res["norm"] - 1)))
    meta["energy_drift"] = float(np.ptp(res["energy"]))
    header, rows = _series_table(times, series)
    write_csv(out.with_suffix(".csv"), header, rows)


def run_benchmark(cfg: RunConfig, out: Path, meta: dict):
    params = cfg.params
    spectrum = exact.Spectrum(params)
    psi = _ed_state(exact.FockRep(params), cfg.state)
    table = {}
    times = None
    for name in cfg.schemes:
        trunc = build_truncation(name, cfg.N)
        ts = _lke_series(cfg, params, trunc, cfg.state, ["sz"], (), meta)
        if times is None:
            times = ts.times
            ed_sz = spectrum.evolve(psi, times, {"sz": spectrum.sz_mean})["sz"]
        table[f"delta_{name}"] = exact.accuracy_metric(times, np.real(ts["sz"]), ed_sz)
        table[f"sz_{name}"] = np.real(ts["sz"])
    table["sz_ed"] = ed_sz
    meta["delta_final"] = {n: float(table[f"delta_{n}"][-1]) for n in cfg.schemes}
    header, rows = _series_table(times, table)
    write_csv(out.with_suffix(".csv"), header, rows)


def run_thermal(cfg: RunConfig, out: Path, meta: dict):
    params = cfg.params
    series = thermal_expansion(params)
    betas = np.asarray(cfg.betas, dtype=float)
    rows_ed = None
    if cfg.N <= exact.MAX_ED_N:
        spectrum = exact.Spectrum(params)
        rows_ed = np.array([spectrum.thermal(b) for b in betas])
    header = ["beta", "nu_series", "sz_series"] + (["nu_ed", "sz_ed"] if rows_ed is not None else [])
    cols = [betas, series.energy_density(betas), series.spin_z(betas)]
    if rows_ed is not None:
        cols += [rows_ed[:, 0], rows_ed[:, 1]]
    write_csv(out.with_suffix(".csv"), header, zip(*cols))

    target = energy_density(cfg.state, params)
    raw = {}
    for n in cfg.ed_sizes:
        raw[n] = exact.match_beta(params.replace(N=n), target)
    meta["beta_matching"] = {
        "state": cfg.state, "target_energy_density": target, "raw": {str(k): v for k, v in raw.items()},
        "extrapolated_to_N": exact.extrapolate_inverse_size(list(raw), list(raw.values()), cfg.N),
        "extrapolated_to_infinity": exact.extrapolate_inverse_size(list(raw), list(raw.values())),
    }
    meta["K1"], meta["K2"] = series.K1, series.K2


def run_correlate(cfg: RunConfig, out: Path, meta: dict):
    params = cfg.params
    trunc = build_truncation(cfg.truncation, cfg.N)
    m_list = [abs(int(m)) for m in cfg.m_list] or list(range(cfg.N // 2 + 1))
    ts = _lke_series(cfg, params, trunc, cfg.state, ["czz"], m_list, meta)
    rows = []
    for j, t in enumerate(ts.times):
        for m in m_list:
            c = float(np.real(ts[f"czz_{m}"][j]))
            rows.append((t, m, c, max(np.log10(abs(c)) if c else -np.inf, -5.0)))
    write_csv(out.with_suffix(".csv"), ["t", "m", "czz", "log10_abs_clipped"], rows)


RUNNERS = {"evolve": run_evolve, "ed": run_ed, "benchmark": run_benchmark,
           "thermal": run_thermal, "correlate": run_correlate}


def run(cfg: RunConfig) -> int:
    """Execute a validated config; returns the process exit status."""
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.output)
    meta: dict = {}
    t0 = time.perf_counter()
    try:
        if cfg.mode in ("evolve", "correlate"):
            meta["feasibility"] = check_feasibility(cfg, [cfg.truncation])
        elif cfg.mode == "benchmark":
            meta["feasibility"] = check_feasibility(cfg, cfg.schemes)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            RUNNERS[cfg.mode](cfg, out, meta)
        meta["warnings"] = sorted({str(w.message) for w in caught})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FeasibilityError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_FEASIBILITY
    except (IntegratorBlowup, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    meta["wall_seconds"] = time.perf_counter() - t0
    write_meta(out.with_suffix(".meta.json"), cfg, meta)
    return EXIT_OK


# ---------------------------------------------------------------- argparse


def _list_of(conv):
    return lambda text: [conv(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lke", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", help="JSON config; flags override its values")
        p.add_argument("--save-config", help="write the effective config to this path")
        p.add_argument("--N", type=int)
        p.add_argument("--Jx", type=float)
        p.add_argument("--Jz", type=float)
        p.add_argument("--h", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--truncation")
        p.add_argument("--hamiltonian", choices=(FULL, QUADRATIC))
        p.add_argument("--state")
        p.add_argument("--t-max", dest="t_max", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--sample-every", dest="sample_every", type=int)
        p.add_argument("--method", choices=("rk4", "rk4_with_halving_check"))
        p.add_argument("--observables", type=_list_of(str))
        p.add_argument("--m-list", dest="m_list", type=_list_of(int))
        p.add_argument("--schemes", type=_list_of(str))
        p.add_argument("--betas", type=_list_of(float))
        p.add_argument("--ed-sizes", dest="ed_sizes", type=_list_of(int))
        p.add_argument("--memory-gb", dest="memory_gb", type=float)
        p.add_argument("--workers", type=int)
        p.add_argument("--output", "-o")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    skip = {"config", "save_config"}
    for key, val in vars(args).items():
        if key not in skip and val is not None:
            data[key] = val
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.save_config:
        Path(args.save_config).write_text(cfg.dumps() + "\n")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
