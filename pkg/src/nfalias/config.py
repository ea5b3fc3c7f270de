"""Scenario configuration files (YAML, strict schema).

Lengths are given in `length_unit` (wavelengths by default, or meters with
a physical wavelength or frequency) and converted to wavelengths on load.
UCA spacings are angles in radians; custom-curve spacings are in the
curve's own parameter units and are never rescaled.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .geometry import ParametricCurve

SCHEMA_VERSION = 1
SPEED_OF_LIGHT = 299_792_458.0

Point = Tuple[float, float]


class ConfigError(Exception):
    """Invalid scenario file; the message names the offending line."""


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Physical(Strict):
    wavelength: Optional[float] = Field(None, gt=0)
    frequency: Optional[float] = Field(None, gt=0)


class ArrayCfg(Strict):
    kind: Literal["ula", "uca", "custom"]
    length: Optional[float] = Field(None, gt=0)
    center: Point = (0.0, 0.0)
    orientation: float = 0.0
    radius: Optional[float] = Field(None, gt=0)
    half_aperture: float = Field(math.pi, gt=0, le=math.pi)
    breakpoints: Optional[List[float]] = None
    x_coeffs: Optional[List[List[float]]] = None
    y_coeffs: Optional[List[List[float]]] = None
    spacing: Optional[float] = Field(None, gt=0)
    angular_divisions: Optional[int] = Field(None, gt=0)
    alignment: Literal["centered", "start", "midpoint"] = "centered"

    @model_validator(mode="after")
    def _shape(self):
        need = {"ula": ["length"], "uca": ["radius"], "custom": ["breakpoints", "x_coeffs", "y_coeffs"]}
        missing = [k for k in need[self.kind] if getattr(self, k) is None]
        if missing:
            raise ValueError(f"{self.kind} array needs: {', '.join(missing)}")
        if self.angular_divisions is not None and self.kind != "uca":
            raise ValueError("angular_divisions only applies to uca arrays")
        if self.angular_divisions is not None and self.spacing is not None:
            raise ValueError("give either spacing or angular_divisions")
        return self


class Region(Strict):
    x: Tuple[float, float]
    y: Tuple[float, float]

    @field_validator("x", "y")
    @classmethod
    def _ordered(cls, v):
        if not v[0] < v[1]:
            raise ValueError("range must be increasing")
        return v


class SpectrumCfg(Strict):
    omega_min: float
    omega_max: float
    count: int = Field(1024, ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        return self


class BandLimitCfg(Strict):
    method: Literal["closed-form", "numeric"] = "closed-form"


class DomainCfg(Strict):
    shape: Literal["disc", "rectangle", "polygon", "points"]
    center: Optional[Point] = None
    radius: Optional[float] = Field(None, gt=0)
    x: Optional[Tuple[float, float]] = None
    y: Optional[Tuple[float, float]] = None
    vertices: Optional[List[Point]] = None
    points: Optional[List[Point]] = None
    sampling: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _shape(self):
        need = {"disc": ["center", "radius", "sampling"], "rectangle": ["x", "y", "sampling"],
                "polygon": ["vertices", "sampling"], "points": ["points"]}
        missing = [k for k in need[self.shape] if getattr(self, k) is None]
        if missing:
            raise ValueError(f"{self.shape} domain needs: {', '.join(missing)}")
        return self


class EyeCfg(Strict):
    delta: float = Field(gt=0)


class Tolerances(Strict):
    strict_eps: float = Field(1e-3, gt=0, lt=1)
    artifact: float = Field(5e-2, gt=0)
    db_floor: float = -120.0
    quad_step: Optional[float] = Field(None, gt=0)


class OutputCfg(Strict):
    directory: Optional[str] = None


class ScenarioConfig(Strict):
    schema_version: Literal[1]
    operation: Optional[Literal["af", "spectrum", "bandlimit", "afr", "eye", "asod"]] = None
    length_unit: Literal["wavelength", "meter"] = "wavelength"
    physical: Physical = Physical()
    array: Optional[ArrayCfg] = None
    source: Optional[Point] = None
    tested: Optional[Point] = None
    region: Optional[Region] = None
    resolution: Union[int, Tuple[int, int]] = 200
    spectrum: Optional[SpectrumCfg] = None
    band_limit: BandLimitCfg = BandLimitCfg()
    domain: Optional[DomainCfg] = None
    eye: Optional[EyeCfg] = None
    tolerances: Tolerances = Tolerances()
    output: OutputCfg = OutputCfg()

    @model_validator(mode="after")
    def _units(self):
        if self.length_unit == "meter" and self.physical.wavelength is None and self.physical.frequency is None:
            raise ValueError("meter lengths need physical.wavelength or physical.frequency")
        return self

    # -- conversion to wavelengths ------------------------------------------
    @property
    def wavelength_m(self) -> Optional[float]:
        p = self.physical
        if p.wavelength is not None:
            return p.wavelength
        if p.frequency is not None:
            return SPEED_OF_LIGHT / p.frequency
        return None

    @property
    def scale(self) -> float:
        """Factor converting configured lengths to wavelengths."""
        return 1.0 / self.wavelength_m if self.length_unit == "meter" else 1.0

    def length(self, v):
        return None if v is None else float(v) * self.scale

    def point(self, p):
        return None if p is None else (float(p[0]) * self.scale, float(p[1]) * self.scale)

    def curve(self) -> ParametricCurve:
        a = self._need("array")
        if a.kind == "ula":
            return ParametricCurve.ula(self.length(a.length), self.point(a.center), a.orientation)
        if a.kind == "uca":
            return ParametricCurve.uca(self.length(a.radius), a.half_aperture)
        s = self.scale
        return ParametricCurve.custom(a.breakpoints, [[c * s for c in cs] for cs in a.x_coeffs],
                                      [[c * s for c in cs] for cs in a.y_coeffs])

    def spacing(self) -> float:
        a = self._need("array")
        if a.angular_divisions is not None:
            return 2.0 * math.pi / a.angular_divisions
        if a.spacing is None:
            raise ConfigError("array.spacing (or angular_divisions) is required for this command")
        return a.spacing * self.scale if a.kind == "ula" else a.spacing

    def region_tuple(self):
        r = self._need("region")
        s = self.scale
        return (r.x[0] * s, r.x[1] * s, r.y[0] * s, r.y[1] * s)

    def _need(self, key):
        v = getattr(self, key)
        if v is None:
            raise ConfigError(f"'{key}' is required for this command")
        return v


def _locate(node, loc):
    """Line (1-based) of the YAML node addressed by a validation error path."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt = (k, v)
                    break
            if nxt is None:
                break
            node = nxt[1]
            line = nxt[0].start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: config must be a mapping")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = tuple(p for p in err["loc"] if not (isinstance(p, str) and p.startswith("function-")))
            # unknown keys report the key itself; others the offending value
            line = _locate(root, loc)
            field_path = ".".join(str(p) for p in loc) or "<root>"
            msg = "unknown key" if err["type"] == "extra_forbidden" else err["msg"]
            msgs.append(f"{path}:{line}: {field_path}: {msg}")
        raise ConfigError("\n".join(msgs)) from None
