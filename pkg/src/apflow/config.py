"""Run configuration: one TOML file with dotted sections drives one run."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import tomli

from .apseries import APSeries, SampledSignal
from .validation import ValidateConfig


class ConfigError(ValueError):
    """Invalid or unreadable configuration; the CLI maps it to exit code 2."""


@dataclass
class SectionConfig:
    kind: str = "rectangle"  # rectangle | disk | grid
    a: float = 1.0
    b: float = 1.0
    R: float = 1.0
    normalized: bool = False
    modes: int = 41
    samples: int = 64
    radial_points: int = 2048
    mask: str = ""
    h: float = 0.02


@dataclass
class FluxConfig:
    file: str = ""
    terms: list = field(default_factory=lambda: [[1.0, 0.5, 0.0]])
    samples: str = ""  # CSV with columns t, f, df


@dataclass
class ModalConfig:
    frequencies: list = field(default_factory=lambda: [0.0, 1.0, 10.0, 100.0])
    residual_ceiling: float = 1e-8
    route: str = ""


@dataclass
class FlowConfig:
    t_start: float = 0.0
    t_end: float = 6.283185307179586
    samples: int = 257
    probes: list = field(default_factory=list)
    verify: bool = True


@dataclass
class MarchConfig:
    dt: float = 1e-3
    T: float = 40.0
    scheme: str = "trapezoid"
    projection: bool = True
    transient: float = 20.0
    probes: list = field(default_factory=list)
    volterra: bool = True


@dataclass
class GateConfig:
    c: float = 1.0
    nu0: bool = False


@dataclass
class RunConfig:
    nu: float = 1.0
    out: str = "out"
    threads: int = 1
    section: SectionConfig = field(default_factory=SectionConfig)
    flux: FluxConfig = field(default_factory=FluxConfig)
    modal: ModalConfig = field(default_factory=ModalConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    march: MarchConfig = field(default_factory=MarchConfig)
    gate: GateConfig = field(default_factory=GateConfig)
    validate: ValidateConfig = field(default_factory=ValidateConfig)
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    # -- validation --------------------------------------------------
    def check(self) -> "RunConfig":
        if not self.nu > 0:
            raise ConfigError("nu: must be positive")
        if self.section.kind not in ("rectangle", "disk", "grid"):
            raise ConfigError(f"section.kind: unknown kind {self.section.kind!r}")
        if self.section.modes < 1:
            raise ConfigError("section.modes: must be at least 1")
        if self.section.kind == "grid" and not self.section.mask:
            raise ConfigError("section.mask: a grid section needs a mask file")
        if not self.march.dt > 0 or not self.march.T > 0:
            raise ConfigError("march.dt, march.T: must be positive")
        if self.march.scheme != "trapezoid":
            raise ConfigError(f"march.scheme: only 'trapezoid' is available, got {self.march.scheme!r}")
        if not self.gate.c > 0:
            raise ConfigError("gate.c: must be positive")
        if self.validate.profile not in ("default", "strict"):
            raise ConfigError(f"validate.profile: unknown profile {self.validate.profile!r}")
        return self

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    # -- inputs ------------------------------------------------------
    def load_flux(self):
        """The configured flux: a series file, a sampled CSV or inline terms."""
        fc = self.flux
        if fc.file:
            path = self.resolve(fc.file)
            if not path.is_file():
                raise ConfigError(f"flux.file: no such file {path}")
            try:
                return APSeries.load(path)
            except ValueError as exc:
                raise ConfigError(f"flux.file: {path}: {exc}") from exc
        if fc.samples:
            path = self.resolve(fc.samples)
            if not path.is_file():
                raise ConfigError(f"flux.samples: no such file {path}")
            return _load_samples(path)
        try:
            return APSeries.from_terms([(float(x), complex(re, im)) for x, re, im in fc.terms])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"flux.terms: expected [frequency, re, im] triples ({exc})") from exc

    def build_section(self):
        from .cross_section import build_disk, build_grid, build_rectangle, read_mask

        s = self.section
        try:
            if s.kind == "rectangle":
                return build_rectangle(s.a, s.b, s.modes, s.samples, s.normalized)
            if s.kind == "disk":
                return build_disk(s.R, s.modes, s.radial_points, s.normalized)
            path = self.resolve(s.mask)
            if not path.is_file():
                raise ConfigError(f"section.mask: no such file {path}")
            return build_grid(read_mask(path), s.h, s.modes, s.normalized)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"section: {exc}") from exc


def _load_samples(path: Path) -> SampledSignal:
    import numpy as np

    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"flux.samples: {path}: {exc}") from exc
    if data.shape[1] != 3 or data.shape[0] < 2:
        raise ConfigError(f"flux.samples: {path}: expected columns t, f, df")
    t = data[:, 0]
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ConfigError(f"flux.samples: {path}: times must be uniformly spaced")
    return SampledSignal(float(t[0]), float(dt), data[:, 1], data[:, 2])


def _fill(cls, data: dict, prefix: str):
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        where = f"{prefix}{key}"
        if key not in names or key == "base_dir":
            raise ConfigError(f"{where}: unknown key")
        f = names[key]
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if dataclasses.is_dataclass(default):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected a table")
            kwargs[key] = _fill(type(default), value, where + ".")
            continue
        kwargs[key] = _coerce(value, default, where)
    return cls(**kwargs)


def _coerce(value, default, where):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return value
    return value


def parse_config(text: str, base_dir: Optional[Path] = None, source: str = "<string>") -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    cfg = _fill(RunConfig, data, "")
    cfg.base_dir = base_dir or Path.cwd()
    return cfg.check()


def load_config(path=None) -> RunConfig:
    """Read a config file; ``None`` gives the built-in defaults."""
    if path is None:
        return RunConfig().check()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), p.parent.resolve(), str(p))
