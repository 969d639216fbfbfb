"""Storage and arithmetic cost accounting for the two smoothly-varying paths."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

from ..pml import pml_element_mask
from ..reference import build_quadrature, n_nodes
from ..solver import PmlPath
from .config import ExperimentConfig
from .experiment import _discretization, build_pml_operators, stretch_profile


@dataclass(frozen=True)
class MemoryReport:
    order: int
    n_nodes: int
    n_quad: int
    n_pml_elements: int
    # analytic counts, floats
    direct_per_element: int
    waa_per_element: int
    waa_shared: int
    unknowns_per_element: int
    # counts taken from the operator builders (None when not built)
    direct_per_element_actual: object = None
    waa_per_element_actual: object = None
    waa_shared_actual: object = None

    @property
    def per_element_ratio(self) -> float:
        return self.direct_per_element / self.waa_per_element

    @property
    def direct_total(self) -> int:
        return self.direct_per_element * self.n_pml_elements

    @property
    def waa_total(self) -> int:
        return self.waa_per_element * self.n_pml_elements + self.waa_shared

    @property
    def matches(self) -> bool:
        return (self.direct_per_element_actual == self.direct_per_element
                and self.waa_per_element_actual == self.waa_per_element
                and self.waa_shared_actual == self.waa_shared)

    def rows(self):
        """(quantity, analytic, actual, ratio) lines for printing."""
        def ratio(a, b):
            return "" if b is None else f"{b / a:.6f}"
        return [
            ("direct floats/element (15 Np^2)", self.direct_per_element,
             self.direct_per_element_actual, ratio(self.direct_per_element, self.direct_per_element_actual)),
            ("waa floats/element (15 Nq)", self.waa_per_element,
             self.waa_per_element_actual, ratio(self.waa_per_element, self.waa_per_element_actual)),
            ("waa shared floats (2 Np Nq)", self.waa_shared, self.waa_shared_actual,
             ratio(self.waa_shared, self.waa_shared_actual)),
            ("unknowns/element in PML (12 Np)", self.unknowns_per_element, None, ""),
        ]

    def format(self) -> str:
        lines = [f"order {self.order}: Np={self.n_nodes} Nq={self.n_quad} "
                 f"K_PML={self.n_pml_elements}",
                 f"{'quantity':36s} {'analytic':>10s} {'actual':>10s} {'actual/analytic':>16s}"]
        for name, a, b, r in self.rows():
            lines.append(f"{name:36s} {a:>10d} {'-' if b is None else b:>10} {r:>16s}")
        lines.append(f"{'direct/waa per-element ratio':36s} {self.per_element_ratio:>10.3f}")
        lines.append(f"{'direct total floats':36s} {self.direct_total:>10d}")
        lines.append(f"{'waa total floats':36s} {self.waa_total:>10d}")
        return "\n".join(lines)


def analytic_memory(order: int, n_pml_elements: int = 0) -> MemoryReport:
    np_ = n_nodes(order)
    nq = build_quadrature(order).n_points
    return MemoryReport(order=order, n_nodes=np_, n_quad=nq, n_pml_elements=n_pml_elements,
                        direct_per_element=15 * np_ ** 2, waa_per_element=15 * nq,
                        waa_shared=2 * np_ * nq, unknowns_per_element=12 * np_)


def memory_report(cfg: ExperimentConfig, build=True) -> MemoryReport:
    """Analytic storage counts next to the sizes the builders actually allocate."""
    mesh, ops, geo, _ = _discretization(cfg.width, cfg.domain_length, cfg.pml_thickness,
                                        cfg.edge, "paved", cfg.jitter, cfg.seed, cfg.order)
    profile = stretch_profile(cfg, cfg.sigma_max)
    mesh = mesh.with_regions(pml_element_mask(mesh, profile))
    kp = len(mesh.pml_elements)
    report = analytic_memory(cfg.order, kp)
    if not build or kp == 0:
        return report
    sv = cfg.named("SV-paved")
    direct = build_pml_operators(sv, mesh, ops, geo, profile)
    waa = build_pml_operators(sv.with_(pml_path=PmlPath.WAA), mesh, ops, geo, profile)
    return MemoryReport(**{**asdict(report),
                           "direct_per_element_actual": direct.float_count // kp,
                           "waa_per_element_actual": waa.float_count // kp,
                           "waa_shared_actual": waa.shared_float_count})


@dataclass(frozen=True)
class OperationCounts:
    order: int
    n_nodes: int
    n_quad: int
    direct_field_mults: int
    direct_field_adds: int
    direct_aux_mults: int
    direct_aux_subs: int
    waa_field_mults: int
    waa_field_adds: int
    waa_aux_mults: int
    waa_aux_subs: int


def operation_count_report(order: int) -> OperationCounts:
    """Per-element, per-component counts excluding the shared curl term."""
    np_ = n_nodes(order)
    nq = build_quadrature(order).n_points
    return OperationCounts(
        order=order, n_nodes=np_, n_quad=nq,
        direct_field_mults=3 * np_ ** 2, direct_field_adds=2 * np_,
        direct_aux_mults=3 * np_ ** 2, direct_aux_subs=np_,
        waa_field_mults=5 * nq * np_ + 3 * nq, waa_field_adds=nq + np_,
        waa_aux_mults=3 * nq * np_ + 2 * nq, waa_aux_subs=nq)


def write_rows_csv(path, rows, header_lines=()):
    """Write dataclass rows to CSV with ``#`` provenance lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        keys = list(asdict(rows[0]))
        w.writerow(keys)
        for r in rows:
            d = asdict(r)
            w.writerow([d[k] for k in keys])
    return path
