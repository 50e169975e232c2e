"""Experiment configuration: one YAML document fully determines a run.

Unknown keys are rejected. Validation messages carry the line number of the
offending key in the source document.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import HolowidthError


class ConfigError(HolowidthError):
    """Invalid configuration; the CLI exits with status 2."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Strict):
    m: Literal[1, 2] = 1
    N: int = Field(ge=2)


class Directions(_Strict):
    family: Literal["bumps", "constant", "decaying", "arrays"]
    s: Optional[float] = None
    c: Optional[float] = None
    J: Optional[int] = Field(default=None, ge=1)
    values: Optional[list[float]] = None
    paths: Optional[list[str]] = None
    seed: int = 0

    @model_validator(mode="after")
    def _family_fields(self):
        need = {"bumps": ("s", "c", "J"), "decaying": ("s", "c", "J"), "constant": ("values",), "arrays": ("paths",)}
        for key in need[self.family]:
            if getattr(self, key) is None:
                raise ValueError(f"family {self.family!r} requires {key!r}")
        return self


class ProblemSpec(_Strict):
    kind: Literal["affine", "semilinear"] = "affine"
    grid: GridSpec
    load: str = "const1"
    load_scale: float = 1.0
    abar: Union[float, str] = 1.0
    directions: Directions


class TaylorStudy(_Strict):
    strategy: Literal["total_degree", "threshold"] = "total_degree"
    max_degree: int = Field(default=4, ge=0, le=40)
    threshold: float = Field(default=0.0, ge=0)
    n_terms: Optional[int] = Field(default=None, ge=0)
    p: float = Field(default=0.5, gt=0, lt=1)


class BoundsStudy(_Strict):
    eps_policy: Literal["elliptic_margin", "fixed"] = "elliptic_margin"
    eps: Optional[float] = Field(default=None, gt=0)
    degree_cap: int = Field(default=6, ge=0, le=40)
    p: float = Field(default=0.5, gt=0, lt=1)

    @model_validator(mode="after")
    def _eps(self):
        if self.eps_policy == "fixed" and self.eps is None:
            raise ValueError("eps_policy 'fixed' requires 'eps'")
        return self


class WidthsStudy(_Strict):
    sampler: Literal["uniform", "grid", "sobol"] = "uniform"
    m: int = Field(default=200, ge=2)
    n_max: int = Field(default=50, ge=1)
    window: Optional[tuple[int, int]] = None
    delta: float = Field(default=0.25, ge=0)
    s: Optional[float] = None

    @model_validator(mode="after")
    def _sizes(self):
        if self.n_max > self.m:
            raise ValueError("n_max cannot exceed m")
        if self.window is not None and not 1 <= self.window[0] < self.window[1] <= self.n_max:
            raise ValueError("window must satisfy 1 <= n_min < n_max <= widths.n_max")
        return self


class CoverStudy(_Strict):
    epsilon: float = Field(gt=0)
    J_cap: int = Field(default=6, ge=1)
    samples: int = Field(default=200, ge=1)
    max_centers: int = Field(default=2_000_000, ge=1)
    dump_centers: bool = True


class SemilinearStudy(_Strict):
    samples: int = Field(default=5, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=50, ge=1)


class Studies(_Strict):
    taylor: Optional[TaylorStudy] = None
    bounds: Optional[BoundsStudy] = None
    widths: Optional[WidthsStudy] = None
    cover: Optional[CoverStudy] = None
    semilinear: Optional[SemilinearStudy] = None


class ExperimentConfig(_Strict):
    seed: Optional[int] = None
    problem: ProblemSpec
    studies: Studies

    @field_validator("seed")
    @classmethod
    def _seed(cls, v):
        if v is not None and v < 0:
            raise ValueError("seed must be nonnegative")
        return v

    @model_validator(mode="after")
    def _consistency(self):
        st = self.studies
        if self.problem.kind == "semilinear" and (st.taylor or st.bounds):
            raise ValueError("taylor/bounds studies need an affine problem")
        if self.problem.kind == "affine" and st.semilinear:
            raise ValueError("the semilinear study needs a semilinear problem")
        return self

    def randomized(self) -> list[str]:
        st = self.studies
        out = []
        if st.widths and st.widths.sampler != "grid":
            out.append("widths")
        if st.cover:
            out.append("cover")
        if st.semilinear:
            out.append("semilinear")
        return out


class _LineLoader(yaml.SafeLoader):
    pass


def _key_lines(text: str) -> dict[tuple, int]:
    """Map key paths to 1-based source lines."""
    node = yaml.compose(text, Loader=_LineLoader)
    lines: dict[tuple, int] = {}

    def walk(n, path):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                p = path + (k.value,)
                lines[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(n, yaml.SequenceNode):
            for i, v in enumerate(n.value):
                lines[path + (i,)] = v.start_mark.line + 1
                walk(v, path + (i,))

    if node is not None:
        walk(node, ())
    return lines


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ConfigError(f"{where}: YAML syntax error: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: configuration must be a mapping")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        lines = _key_lines(text)
        msgs = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            line = None
            for cut in range(len(loc), -1, -1):
                if loc[:cut] in lines:
                    line = lines[loc[:cut]]
                    break
            key = ".".join(str(x) for x in loc) or "<root>"
            if err["type"] == "extra_forbidden":
                text_msg = f"unknown key {loc[-1]!r} at {key}"
            else:
                text_msg = f"{key}: {err['msg']}"
            msgs.append(f"{source}:{line or 1}: {text_msg}")
        raise ConfigError("\n".join(msgs)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False, default_flow_style=False)
