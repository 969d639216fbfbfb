"""Experiment configuration: presets, INI serialization, hashing.

Lengths are stored in meters and times in seconds; the INI file uses
centimeters and picoseconds.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import asdict, dataclass, field, fields, replace

from ..errors import ConfigurationError
from ..pml import SamplingStrategy
from ..solver import Flux, PmlPath

CM = 1e-2
PS = 1e-12

PATH_ALIASES = {"ec": PmlPath.ELEMENT_CONSTANT, "element_constant": PmlPath.ELEMENT_CONSTANT,
                "direct": PmlPath.DIRECT, "waa": PmlPath.WAA}

# the four configurations compared in the reflection study
NAMED_CONFIGURATIONS = {
    "EC-paved": dict(mesh_style="paved", pml_path=PmlPath.ELEMENT_CONSTANT,
                     sampling=SamplingStrategy.ELEMENT_CONSTANT_FARTHEST_NODE),
    "EC-layered": dict(mesh_style="layered", pml_path=PmlPath.ELEMENT_CONSTANT,
                       sampling=SamplingStrategy.LAYERED_OUTERMOST),
    "SV-paved": dict(mesh_style="paved", pml_path=PmlPath.DIRECT,
                     sampling=SamplingStrategy.SMOOTHLY_VARYING),
    "SV-WAA-paved": dict(mesh_style="paved", pml_path=PmlPath.WAA,
                         sampling=SamplingStrategy.SMOOTHLY_VARYING),
}


@dataclass(frozen=True)
class ExperimentConfig:
    # geometry (m)
    width: float = 1.2 * CM
    domain_length: float = 60.0 * CM      # computation domain along z, centered on 0
    pml_thickness: float = 1.6 * CM
    edge: float = 0.4 * CM
    probe: tuple = (0.5 * CM, 0.5 * CM, -1.0 * CM)
    # discretization
    order: int = 3
    flux: Flux = Flux.UPWIND
    cfl: float = 2.0
    pml_path: PmlPath = PmlPath.WAA
    mesh_style: str = "paved"
    jitter: float = 0.15
    seed: int = 0
    # pml
    sigma_max: float = 1.5
    sigma_values: tuple = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0)
    kappa_max: float = 1.0
    profile_order: float = 1.0
    sampling: object = None               # None: derived from path and mesh style
    # excitation
    amplitude: float = 1.0
    tau: float = 66.67 * PS
    t0: float = 15 * 66.67 * PS
    quiet_threshold: float = 1e-12        # start when the pulse is below this
    tail: float = 4.0                     # extra run time after the last arrival, in tau
    # outputs
    output_dir: str = "out"
    csv_every: int = 1

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "flux", Flux(self.flux))
        path = self.pml_path
        set_(self, "pml_path", PATH_ALIASES.get(path, path) if isinstance(path, str) else PmlPath(path))
        set_(self, "pml_path", PmlPath(self.pml_path))
        set_(self, "probe", tuple(float(x) for x in self.probe))
        set_(self, "sigma_values", tuple(float(x) for x in self.sigma_values))
        if self.sampling is not None:
            set_(self, "sampling", SamplingStrategy(self.sampling))
        self.validate()

    # {{{ validation

    def validate(self):
        if self.mesh_style not in ("paved", "layered"):
            raise ConfigurationError(f"mesh style must be paved or layered, not {self.mesh_style!r}")
        if not 1 <= self.order <= 5:
            raise ConfigurationError(f"order {self.order} outside the supported range 1..5")
        for name in ("width", "domain_length", "pml_thickness", "edge", "tau", "amplitude"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not self.cfl > 0:
            raise ConfigurationError("cfl must be positive")
        if self.sigma_max < 0 or any(s < 0 for s in self.sigma_values):
            raise ConfigurationError("sigma values must be non-negative")
        if self.kappa_max < 1:
            raise ConfigurationError("kappa_max must be >= 1")
        if self.csv_every < 1:
            raise ConfigurationError("csv_every must be >= 1")
        layers = self.pml_thickness / self.edge
        if abs(layers - round(layers)) > 1e-9:
            raise ConfigurationError(
                f"PML thickness {self.pml_thickness / CM:g} cm is not an integral number "
                f"of {self.edge / CM:g} cm element layers")
        half = self.domain_length / 2
        for steps in (self.width / self.edge, half / self.edge):
            if abs(steps - round(steps)) > 1e-9:
                raise ConfigurationError("box extents must be integral multiples of the edge length")
        x, y, z = self.probe
        if not (0 <= x <= self.width and 0 <= y <= self.width):
            raise ConfigurationError("probe lies outside the box cross-section")
        if not -half < z < 0:
            raise ConfigurationError(
                "probe must sit in the scattered-field region between the lower PML and z=0")
        strategy = self.resolved_sampling
        if strategy is SamplingStrategy.LAYERED_OUTERMOST and self.mesh_style != "layered":
            raise ConfigurationError("layered-outermost sampling requires the layered mesh")
        if self.pml_path is PmlPath.ELEMENT_CONSTANT and strategy is SamplingStrategy.SMOOTHLY_VARYING:
            raise ConfigurationError("the element-constant path cannot use smoothly-varying sampling")

    @property
    def resolved_sampling(self) -> SamplingStrategy:
        if self.sampling is not None:
            return SamplingStrategy(self.sampling)
        if self.pml_path is PmlPath.ELEMENT_CONSTANT:
            return (SamplingStrategy.LAYERED_OUTERMOST if self.mesh_style == "layered"
                    else SamplingStrategy.ELEMENT_CONSTANT_FARTHEST_NODE)
        return SamplingStrategy.SMOOTHLY_VARYING

    @property
    def interface(self) -> float:
        return self.domain_length / 2

    @property
    def label(self) -> str:
        for name, spec in NAMED_CONFIGURATIONS.items():
            if (self.mesh_style == spec["mesh_style"] and self.pml_path is spec["pml_path"]
                    and self.resolved_sampling is spec["sampling"]):
                return name
        return f"{self.resolved_sampling.value}-{self.pml_path.value}-{self.mesh_style}"

    # }}}

    def named(self, name: str) -> "ExperimentConfig":
        """Copy switched to one of the four named configurations."""
        try:
            spec = NAMED_CONFIGURATIONS[name]
        except KeyError:
            raise ConfigurationError(
                f"unknown configuration {name!r}; choose from {sorted(NAMED_CONFIGURATIONS)}") from None
        return replace(self, **spec)

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    # {{{ serialization

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["geometry"] = {
            "width_cm": repr(self.width / CM),
            "domain_length_cm": repr(self.domain_length / CM),
            "pml_thickness_cm": repr(self.pml_thickness / CM),
            "edge_cm": repr(self.edge / CM),
            "probe_cm": ", ".join(repr(x / CM) for x in self.probe),
        }
        cp["discretization"] = {
            "order": str(self.order), "flux": self.flux.value, "cfl": repr(self.cfl),
            "pml_path": self.pml_path.value, "mesh": self.mesh_style,
            "jitter": repr(self.jitter), "seed": str(self.seed),
        }
        cp["pml"] = {
            "sigma_max": repr(self.sigma_max),
            "sigma_values": ", ".join(repr(s) for s in self.sigma_values),
            "kappa_max": repr(self.kappa_max),
            "profile_order": repr(self.profile_order),
            "sampling": "auto" if self.sampling is None else SamplingStrategy(self.sampling).value,
        }
        cp["excitation"] = {
            "amplitude": repr(self.amplitude), "tau_ps": repr(self.tau / PS),
            "t0_ps": repr(self.t0 / PS), "quiet_threshold": repr(self.quiet_threshold),
            "tail_tau": repr(self.tail),
        }
        cp["output"] = {"directory": self.output_dir, "csv_every": str(self.csv_every)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, base: "ExperimentConfig" = None) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed configuration: {exc}") from None
        base = PRESETS["paper"] if base is None else base
        known = {
            "geometry": {"width_cm", "domain_length_cm", "pml_thickness_cm", "edge_cm", "probe_cm"},
            "discretization": {"order", "flux", "cfl", "pml_path", "mesh", "jitter", "seed"},
            "pml": {"sigma_max", "sigma_values", "kappa_max", "profile_order", "sampling"},
            "excitation": {"amplitude", "tau_ps", "t0_ps", "quiet_threshold", "tail_tau"},
            "output": {"directory", "csv_every"},
        }
        for sec in cp.sections():
            if sec not in known:
                raise ConfigurationError(f"unknown configuration section [{sec}]")
            extra = set(cp[sec]) - known[sec]
            if extra:
                raise ConfigurationError(f"unknown key(s) in [{sec}]: {sorted(extra)}")

        def get(sec, key, conv):
            if cp.has_option(sec, key):
                raw = cp.get(sec, key)
                try:
                    return conv(raw)
                except ValueError:
                    raise ConfigurationError(f"[{sec}] {key}: cannot parse {raw!r}") from None
            return None

        def floats(raw):
            return tuple(float(x) for x in raw.replace(",", " ").split())

        kw = {}
        pairs = [
            ("width", "geometry", "width_cm", lambda r: float(r) * CM),
            ("domain_length", "geometry", "domain_length_cm", lambda r: float(r) * CM),
            ("pml_thickness", "geometry", "pml_thickness_cm", lambda r: float(r) * CM),
            ("edge", "geometry", "edge_cm", lambda r: float(r) * CM),
            ("probe", "geometry", "probe_cm", lambda r: tuple(x * CM for x in floats(r))),
            ("order", "discretization", "order", int),
            ("flux", "discretization", "flux", str),
            ("cfl", "discretization", "cfl", float),
            ("pml_path", "discretization", "pml_path", str),
            ("mesh_style", "discretization", "mesh", str),
            ("jitter", "discretization", "jitter", float),
            ("seed", "discretization", "seed", int),
            ("sigma_max", "pml", "sigma_max", float),
            ("sigma_values", "pml", "sigma_values", floats),
            ("kappa_max", "pml", "kappa_max", float),
            ("profile_order", "pml", "profile_order", float),
            ("amplitude", "excitation", "amplitude", float),
            ("tau", "excitation", "tau_ps", lambda r: float(r) * PS),
            ("t0", "excitation", "t0_ps", lambda r: float(r) * PS),
            ("quiet_threshold", "excitation", "quiet_threshold", float),
            ("tail", "excitation", "tail_tau", float),
            ("output_dir", "output", "directory", str),
            ("csv_every", "output", "csv_every", int),
        ]
        for attr, sec, key, conv in pairs:
            val = get(sec, key, conv)
            if val is not None:
                kw[attr] = val
        sampling = get("pml", "sampling", str)
        if sampling is not None:
            kw["sampling"] = None if sampling == "auto" else sampling
        if "pml_path" in kw:
            alias = PATH_ALIASES.get(kw["pml_path"])
            if alias is None:
                raise ConfigurationError(f"unknown pml_path {kw['pml_path']!r}")
            kw["pml_path"] = alias
        if "tau" in kw and "t0" not in kw:
            kw["t0"] = 15 * kw["tau"]
        try:
            return replace(base, **kw)
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from None

    @classmethod
    def load(cls, path, base=None) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_ini(fh.read(), base)

    def physics_dict(self) -> dict:
        """Everything that affects the computed numbers (no output settings)."""
        d = asdict(self)
        d.pop("output_dir")
        d.pop("csv_every")
        d.pop("sigma_values")
        d["sampling"] = self.resolved_sampling.value
        d["flux"] = self.flux.value
        d["pml_path"] = self.pml_path.value
        return d

    def config_hash(self) -> str:
        text = repr(sorted(self.physics_dict().items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    # }}}


PRESETS = {
    "paper": ExperimentConfig(),
    "ci": ExperimentConfig(domain_length=20.0 * CM),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def field_names():
    return [f.name for f in fields(ExperimentConfig)]
