"""
Experiment configuration: one TOML file, parsed into frozen dataclasses.

Every section has defaults, so an empty file describes the baseline disk
experiment. Unknown keys are errors. Only SMA_OUT_DIR is read from the
environment.
"""

import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace

from sma.errors import ConfigError, PreconditionError
from sma.kernel import make_kernel
from sma.phantom import Disk, Phantom, boundary_point
from sma.sampling import NoiseModel, SamplingGrid, SigmaProfile

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

OUT_DIR_ENV = "SMA_OUT_DIR"

# noise scale of the baseline experiments relative to sigma^2 * d_alpha
EXPERIMENT_VARTHETA = 0.23


@dataclass(frozen=True)
class DiskConfig:
    cx: float = 0.0
    cy: float = -0.1
    radius: float = 0.345
    amplitude: float = 1.0


@dataclass(frozen=True)
class PhantomConfig:
    disks: tuple = (DiskConfig(),)


@dataclass(frozen=True)
class GridConfig:
    epsilon: float = 0.007
    kappa: float = 2 * math.pi
    p_bar: float = 0.0
    support: float = 1.0


@dataclass(frozen=True)
class NoiseConfig:
    family: str = "uniform"
    profile: str = "constant"
    sigma: float = math.sqrt(3.0)
    modulation: float = 0.0
    vartheta: float = EXPERIMENT_VARTHETA
    raw_std: bool = False
    binning: int = 1


@dataclass(frozen=True)
class KernelConfig:
    name: str = "bspline4"
    hilbert_truncation: float = 64.0


@dataclass(frozen=True)
class EdgeConfig:
    disk: int = 0
    polar_angle: float = 0.0


@dataclass(frozen=True)
class TestConfig:
    __test__ = False

    rho: float = 3.0
    h: float = 0.125
    statistic: str = "f2d"
    alternative: str = "two-sided"
    alpha: float = 0.05
    level: float = 0.95
    u_scale: float = 1.0
    reference_sigma: float = 0.0


@dataclass(frozen=True)
class MonteCarloConfig:
    n_null: int = 1000
    n_alt: int = 1000
    independent_alt: bool = False
    sigmas: tuple = (0.87, 1.73, 5.2, 34.6)
    histogram_bins: str = "fd"


@dataclass(frozen=True)
class ScanSection:
    rho: float = 3.0
    stride: int = 0
    policy: str = "quantile"
    q: float = 0.99
    fraction: float = 0.5
    step_fraction: float = 0.125
    bbox: tuple = (-0.5, 0.5, -0.6, 0.4)
    nsr: float = 0.0
    method: str = "tabulated"


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    seed: int = 0


SECTIONS = {
    "phantom": PhantomConfig,
    "grid": GridConfig,
    "noise": NoiseConfig,
    "kernel": KernelConfig,
    "edge": EdgeConfig,
    "test": TestConfig,
    "montecarlo": MonteCarloConfig,
    "scan": ScanSection,
    "output": OutputConfig,
}


def _coerce(value, default, where):
    """Value converted to the type of the field default"""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, (str, int)) or isinstance(value, bool):
            raise ConfigError(f"{where} must be a string")
        return str(value)
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be an array")
        return tuple(_coerce(v, default[0], where) if default else v for v in value)
    return value


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"[{where}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    defaults = cls()
    values = {}
    for name, value in data.items():
        if cls is PhantomConfig and name == "disks":
            if not isinstance(value, list) or not value:
                raise ConfigError("[phantom] disks must be a nonempty array of tables")
            values[name] = tuple(_build(DiskConfig, d, f"phantom.disks[{i}]") for i, d in enumerate(value))
        else:
            values[name] = _coerce(value, getattr(defaults, name), f"{where}.{name}")
    return replace(defaults, **values)


@dataclass(frozen=True)
class RunConfig:
    phantom: PhantomConfig = field(default_factory=PhantomConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    edge: EdgeConfig = field(default_factory=EdgeConfig)
    test: TestConfig = field(default_factory=TestConfig)
    montecarlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    scan: ScanSection = field(default_factory=ScanSection)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        self._validate()

    @classmethod
    def from_dict(cls, data):
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
        return cls(**{name: _build(SECTIONS[name], data[name], name) for name in data})

    def _validate(self):
        checks = [
            (self.grid.epsilon > 0, "grid.epsilon must be positive"),
            (self.grid.kappa > 0, "grid.kappa must be positive"),
            (self.grid.support > 0, "grid.support must be positive"),
            (self.noise.sigma >= 0, "noise.sigma must be nonnegative"),
            (self.noise.vartheta > 0, "noise.vartheta must be positive"),
            (self.test.alternative in ("two-sided", "directional"), "test.alternative must be two-sided or directional"),
            (self.noise.binning >= 1, "noise.binning must be at least 1"),
            (self.test.rho > 0 and self.test.h > 0, "test.rho and test.h must be positive"),
            (0 < self.test.alpha < 1, "test.alpha must lie in (0, 1)"),
            (0 < self.test.level < 1, "test.level must lie in (0, 1)"),
            (self.test.u_scale > 0 and self.test.reference_sigma >= 0, "test.u_scale must be positive and test.reference_sigma nonnegative"),
            (min(self.montecarlo.n_null, self.montecarlo.n_alt) >= 100, "replicate counts must be at least 100"),
            (0 <= self.edge.disk < len(self.phantom.disks), "edge.disk does not name a disk"),
            (len(self.scan.bbox) == 4, "scan.bbox needs xmin, xmax, ymin, ymax"),
            (0 < self.scan.step_fraction <= 0.25, "scan.step_fraction must lie in (0, 1/4]"),
            (self.output.seed >= 0, "output.seed must be nonnegative"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def with_overrides(self, seed=None, out=None):
        output = self.output
        if seed is not None:
            output = replace(output, seed=int(seed))
        if out is not None:
            output = replace(output, dir=str(out))
        return replace(self, output=output)

    # domain objects

    def build_phantom(self):
        try:
            disks = [Disk(d.cx, d.cy, d.radius, d.amplitude) for d in self.phantom.disks]
            return Phantom(tuple(disks), self.grid.support)
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from exc

    def build_grid(self):
        g = self.grid
        return SamplingGrid.create(g.epsilon, g.kappa, g.p_bar, g.support)

    def build_noise(self, sigma=None):
        n = self.noise
        level = n.sigma if sigma is None else sigma
        try:
            profile = SigmaProfile(n.profile, level, n.modulation)
            return NoiseModel(n.family, profile, n.vartheta, n.raw_std)
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from exc

    def build_kernel(self):
        try:
            return make_kernel(self.kernel.name, self.kernel.hilbert_truncation)
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from exc

    def edge_point(self, phantom=None):
        return boundary_point(phantom or self.build_phantom(), self.edge.disk, self.edge.polar_angle)


def load_config(path=None, seed=None, out=None):
    """RunConfig from a TOML file (or defaults), CLI overrides and SMA_OUT_DIR"""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    config = RunConfig.from_dict(data)
    env_out = os.environ.get(OUT_DIR_ENV)
    if env_out and out is None:
        out = env_out
    config = config.with_overrides(seed=seed, out=out)
    logger.debug("loaded config %s (hash %s)", path or "<defaults>", config.config_hash())
    return config
