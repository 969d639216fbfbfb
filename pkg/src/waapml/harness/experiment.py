"""Normal-incidence reflection experiment and sigma_max sweeps."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from ..constants import C0
from ..errors import ConfigurationError
from ..mesh import build_box_mesh, build_node_maps, connect_mesh, geometric_factors
from ..pml import (StretchProfile, build_direct_operators, build_element_constant_operators,
                   build_waa_operators, pml_element_mask, sample_coefficients)
from ..reference import build_reference_operators
from ..solver import PlaneWaveSource, PmlPath, ProbeSet, Solver, SolverConfig
from .config import CM, ExperimentConfig

log = logging.getLogger(__name__)

# separation requirement: full pulse width where G exceeds 1% of its peak
SEPARATION_LEVEL = 1e-2


def code_version() -> str:
    from importlib.metadata import packages_distributions, version
    try:
        dist = packages_distributions().get("waapml", ["waapml"])[0]
        return version(dist)
    except Exception:       # not installed, running from a checkout
        return "0+unknown"


@lru_cache(maxsize=1)
def source_fingerprint() -> str:
    """Hash of the package sources; invalidates cached results on any edit."""
    root = Path(__file__).resolve().parents[1]
    h = hashlib.sha256()
    for path in sorted(root.rglob("*.py")):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


# {{{ problem assembly

def layer_planes(domain_length, pml_thickness, edge):
    """z-planes bounding every PML element layer (both sides)."""
    n = int(round(pml_thickness / edge))
    z0 = domain_length / 2
    upper = [z0 + i * edge for i in range(n + 1)]
    lower = [-z for z in reversed(upper)]
    return tuple(lower + upper)


@lru_cache(maxsize=8)
def _discretization(width, domain_length, pml_thickness, edge, style, jitter, seed, order):
    zhi = domain_length / 2 + pml_thickness
    zlo = -zhi
    planes = layer_planes(domain_length, pml_thickness, edge) if style == "layered" else ()
    inner = tuple(p for p in planes if zlo < p < zhi)
    mesh = build_box_mesh((width, width, zhi - zlo), edge, style=style, layer_planes=inner,
                          origin=(0.0, 0.0, zlo), fixed_planes=(0.0,), jitter=jitter, seed=seed)
    mesh = connect_mesh(mesh, ("x", "y"), injection_plane=0.0)
    ops = build_reference_operators(order)
    geo = geometric_factors(mesh, ops)
    maps = build_node_maps(mesh, ops, geo)
    return mesh, ops, geo, maps


def stretch_profile(cfg: ExperimentConfig, sigma_max: float) -> StretchProfile:
    return StretchProfile.slab("z", -cfg.interface, cfg.interface, cfg.pml_thickness,
                               sigma_max, cfg.kappa_max, cfg.profile_order)


def build_pml_operators(cfg: ExperimentConfig, mesh, ops, geo, profile):
    strategy = cfg.resolved_sampling
    if cfg.pml_path is PmlPath.WAA:
        coeffs = sample_coefficients(mesh, profile, strategy, "quad", ops)
        return build_waa_operators(coeffs, ops, geo.jacobian[coeffs.elements])
    coeffs = sample_coefficients(mesh, profile, strategy, "nodes", ops)
    if cfg.pml_path is PmlPath.DIRECT:
        return build_direct_operators(coeffs, ops, geo.jacobian[coeffs.elements])
    return build_element_constant_operators(coeffs)


@dataclass
class Problem:
    config: ExperimentConfig
    sigma_max: float
    solver: Solver
    source: PlaneWaveSource
    probes: ProbeSet


def build_problem(cfg: ExperimentConfig, sigma_max: Optional[float] = None) -> Problem:
    sigma = cfg.sigma_max if sigma_max is None else float(sigma_max)
    mesh, ops, geo, maps = _discretization(cfg.width, cfg.domain_length, cfg.pml_thickness,
                                           cfg.edge, cfg.mesh_style, cfg.jitter, cfg.seed,
                                           cfg.order)
    profile = stretch_profile(cfg, sigma)
    mesh = mesh.with_regions(pml_element_mask(mesh, profile))
    pml = build_pml_operators(cfg, mesh, ops, geo, profile)
    source = PlaneWaveSource(cfg.amplitude, cfg.tau, cfg.t0, 0.0)
    solver = Solver(mesh, ops, SolverConfig(flux=cfg.flux, cfl=cfg.cfl, pml_path=cfg.pml_path),
                    pml=pml, source=source, geo=geo, maps=maps)
    probes = ProbeSet.build(mesh, ops, [cfg.probe])
    return Problem(cfg, sigma, solver, source, probes)

# }}}


# {{{ time windows

@dataclass(frozen=True)
class TimeWindows:
    start: float      # simulation start (pulse still below the quiet threshold)
    split: float      # boundary between leakage and reflected windows
    end: float


def pulse_width(cfg: ExperimentConfig, level=SEPARATION_LEVEL) -> float:
    """Full duration over which G(t) exceeds *level*."""
    return 4.0 * cfg.tau * math.sqrt(-math.log(level))


def time_windows(cfg: ExperimentConfig) -> TimeWindows:
    zp = abs(cfg.probe[2])
    z0, L = cfg.interface, cfg.pml_thickness
    round_trip = 2 * z0 / C0
    width = pulse_width(cfg)
    if round_trip <= width:
        need = width * C0 / CM
        raise ConfigurationError(
            f"computation domain too short to separate incident and reflected pulses: "
            f"round trip {round_trip:.3e} s <= pulse width {width:.3e} s; "
            f"domain_length must exceed {need:.2f} cm")
    source = PlaneWaveSource(cfg.amplitude, cfg.tau, cfg.t0)
    start = source.quiet_start(cfg.quiet_threshold)
    split = cfg.t0 + (z0 + zp) / C0
    end = cfg.t0 + (2 * (z0 + L) + zp) / C0 + cfg.tail * cfg.tau
    return TimeWindows(start, split, end)

# }}}


# {{{ runs

@dataclass
class ReflectionResult:
    sigma_max: float
    reflection_db: float
    peak_amplitude: float
    peak_time: float
    leakage_db: float
    config_hash: str
    label: str
    order: int
    n_steps: int
    dt: float
    wall_time: float
    trace_path: Optional[str] = None
    config: Optional[ExperimentConfig] = field(default=None, repr=False)

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "sigma_max", "reflection_db", "peak_amplitude", "peak_time", "leakage_db",
            "config_hash", "label", "order", "n_steps", "dt", "wall_time", "trace_path")}
        return d

    @classmethod
    def from_json(cls, d, config=None):
        return cls(config=config, **d)


def to_db(x):
    return 20.0 * math.log10(max(float(x), 1e-300))


def provenance_lines(cfg: ExperimentConfig, **extra):
    lines = [f"waapml {code_version()} source {source_fingerprint()}",
             f"config_hash {cfg.config_hash()} label {cfg.label} order {cfg.order}",
             "reflection_db = 20 log10(peak |Ex| in the reflected window / E0)"]
    lines += [f"{k} {v}" for k, v in extra.items()]
    return lines


def extract_reflection(times, ex, windows: TimeWindows, amplitude: float):
    times = np.asarray(times)
    ex = np.abs(np.asarray(ex))
    refl = times > windows.split
    inc = ~refl
    if not refl.any():
        raise ConfigurationError("run ended before the reflected window opened")
    i = np.flatnonzero(refl)[np.argmax(ex[refl])]
    leak = ex[inc].max() if inc.any() else 0.0
    return ex[i] / amplitude, times[i], leak / amplitude


class ResultCache:
    """Per-run JSON records keyed by config hash, sigma and source fingerprint."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, cfg, sigma):
        key = f"{cfg.config_hash()}-{sigma!r}-{source_fingerprint()}"
        return self.directory / (hashlib.sha256(key.encode()).hexdigest()[:24] + ".json")

    def get(self, cfg, sigma):
        path = self._path(cfg, sigma)
        if path.exists():
            with open(path) as fh:
                return ReflectionResult.from_json(json.load(fh), config=cfg)
        return None

    def put(self, cfg, result: ReflectionResult):
        path = self._path(cfg, result.sigma_max)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            json.dump(result.to_json(), fh, indent=1)
        os.replace(tmp, path)


def run_reflection_experiment(cfg: ExperimentConfig, sigma_max: Optional[float] = None, *,
                              out_dir=None, cache: Optional[ResultCache] = None) -> ReflectionResult:
    """Launch the pulse, record the probe, return the peak reflected amplitude.

    The trace CSV is written to *out_dir* (default ``cfg.output_dir``) unless
    *out_dir* is ``False``.
    """
    sigma = cfg.sigma_max if sigma_max is None else float(sigma_max)
    run_cfg = cfg.with_(sigma_max=sigma)
    if cache is not None:
        hit = cache.get(run_cfg, sigma)
        if hit is not None:
            log.info("cached %s p=%d sigma=%g: %.2f dB", hit.label, hit.order, sigma, hit.reflection_db)
            return hit
    windows = time_windows(run_cfg)
    problem = build_problem(run_cfg, sigma)
    solver, probes = problem.solver, problem.probes
    state = solver.zero_state(windows.start)
    t_wall = time.perf_counter()
    solver.run(state, windows.end, probes=probes)
    wall = time.perf_counter() - t_wall
    times = probes.times
    series = probes.series(0)
    peak, t_peak, leak = extract_reflection(times, series[:, 0], windows, run_cfg.amplitude)
    n_steps = len(times) - 1
    dt = (windows.end - windows.start) / n_steps

    result = ReflectionResult(
        sigma_max=sigma, reflection_db=to_db(peak), peak_amplitude=float(peak),
        peak_time=float(t_peak), leakage_db=to_db(leak), config_hash=run_cfg.config_hash(),
        label=run_cfg.label, order=run_cfg.order, n_steps=n_steps, dt=dt, wall_time=wall,
        config=run_cfg)

    if out_dir is not False:
        directory = Path(run_cfg.output_dir if out_dir is None else out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"trace_{run_cfg.label}_p{run_cfg.order}_sigma{sigma:g}.csv"
        keep = list(range(0, len(probes.rows), run_cfg.csv_every))
        rows, probes.rows = probes.rows, [probes.rows[i] for i in keep]
        try:
            probes.write_csv(path, header_lines=provenance_lines(
                run_cfg, sigma_max=sigma, dt=dt, split_time=windows.split))
        finally:
            probes.rows = rows
        result.trace_path = str(path)
    log.info("%s p=%d sigma=%g: %.2f dB (%d steps, %.1f s)", result.label, result.order,
             sigma, result.reflection_db, n_steps, wall)
    if cache is not None:
        cache.put(run_cfg, result)
    return result


@dataclass
class SweepResult:
    results: list

    @property
    def best(self) -> ReflectionResult:
        # ties resolved toward the smaller sigma so the choice ignores list order
        return min(self.results, key=lambda r: (r.reflection_db, r.sigma_max))

    @property
    def sigmas(self):
        return np.array([r.sigma_max for r in self.results])

    @property
    def db(self):
        return np.array([r.reflection_db for r in self.results])

    @property
    def amplitudes(self):
        return np.array([r.peak_amplitude for r in self.results])


def sweep_sigma_max(cfg: ExperimentConfig, values=None, *, out_dir=None,
                    cache: Optional[ResultCache] = None, write_traces=False) -> SweepResult:
    """One reflection run per sigma_max; results sorted by sigma_max."""
    values = cfg.sigma_values if values is None else tuple(float(v) for v in values)
    if not values:
        raise ConfigurationError("sigma sweep needs at least one value")
    results = [run_reflection_experiment(cfg, s, out_dir=out_dir if write_traces else False,
                                         cache=cache)
               for s in sorted(set(values))]
    sweep = SweepResult(results)
    if out_dir is not None:
        write_sweep_csv(Path(out_dir) / f"sweep_{cfg.label}_p{cfg.order}.csv", cfg, sweep)
    return sweep


def write_sweep_csv(path, cfg: ExperimentConfig, sweep: SweepResult):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    best = sweep.best
    with open(path, "w", newline="") as fh:
        for line in provenance_lines(cfg, argmin_sigma_max=best.sigma_max,
                                     min_reflection_db=f"{best.reflection_db:.4f}"):
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["sigma_max", "reflection_db", "peak_amplitude", "peak_time",
                    "leakage_db", "config_hash"])
        for r in sweep.results:
            w.writerow([repr(r.sigma_max), f"{r.reflection_db:.6f}", repr(r.peak_amplitude),
                        repr(r.peak_time), f"{r.leakage_db:.6f}", r.config_hash])
    return path


def convergence_study(cfg: ExperimentConfig, orders, configurations=("EC-paved", "EC-layered",
                      "SV-paved", "SV-WAA-paved"), *, sigma_values=None, out_dir=None,
                      cache: Optional[ResultCache] = None):
    """Best reflection over the sigma sweep, per order and configuration.

    Returns rows ``(label, order, best_sigma, best_db)`` and writes
    ``convergence.csv`` into *out_dir* when given.
    """
    rows = []
    for name in configurations:
        for p in orders:
            sub = cfg.named(name).with_(order=int(p))
            sweep = sweep_sigma_max(sub, sigma_values, out_dir=out_dir, cache=cache)
            rows.append((name, int(p), sweep.best.sigma_max, sweep.best.reflection_db))
    if out_dir is not None:
        path = Path(out_dir) / "convergence.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            for line in provenance_lines(cfg):
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["configuration", "order", "best_sigma_max", "best_reflection_db"])
            for name, p, s, db in rows:
                w.writerow([name, p, repr(s), f"{db:.6f}"])
    return rows

# }}}
