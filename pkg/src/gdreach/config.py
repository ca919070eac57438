"""Scenario files: TOML with a versioned, strictly validated schema."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

import tomli
import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .models import CostSpec, GDConfig, PlantParams
from .wrapping import RemainderThresholds

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """The scenario file is missing, malformed or fails validation."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CostSection(_Strict):
    H: int = Field(ge=1)
    dt: float = Field(gt=0)
    Q_diag: Optional[list[float]] = None
    Q_discount: float = Field(default=1.0, gt=0)
    Q: Optional[list[list[list[float]]]] = None
    R: list[list[float]]

    @model_validator(mode="after")
    def _one_q(self):
        if (self.Q is None) == (self.Q_diag is None):
            raise ValueError("give exactly one of Q (per-step matrices) or Q_diag")
        if self.Q is not None and self.Q_discount != 1.0:
            raise ValueError("Q_discount only applies to Q_diag")
        return self


class GDSection(_Strict):
    alpha: Optional[list[float]] = None
    alpha0: Optional[float] = Field(default=None, gt=0)
    alpha_decay: float = Field(default=1.0, gt=0)
    T: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _schedule(self):
        if self.alpha is not None:
            if self.alpha0 is not None or self.T is not None:
                raise ValueError("give either alpha (explicit schedule) or alpha0 with T")
            if any(a <= 0 for a in self.alpha):
                raise ValueError("learning rates must be positive")
        elif self.alpha0 is None or self.T is None:
            raise ValueError("give either alpha (explicit schedule) or alpha0 with T")
        return self


class InitialSection(_Strict):
    lo: list[float]
    hi: list[float]


class ThresholdSection(_Strict):
    physical: float = Field(default=1e-3, gt=0)
    digital: float = Field(default=1e-4, gt=0)
    predicted: float = Field(default=1e-4, gt=0)


class AblationSection(_Strict):
    shrink_wrap: bool = True
    symbolic_remainders: bool = True
    blowup_factor: float = Field(default=1e3, gt=0)


class OutputSection(_Strict):
    dir: str = "out"
    projection: Optional[list[int]] = None  # default: the first two state dimensions
    simulate: int = Field(default=50, ge=0)


class ScenarioFile(_Strict):
    schema_version: Literal[1]
    name: str
    plant: Literal["quadcopter", "cartpole", "integrator"]
    params: dict[str, float] = Field(default_factory=dict)
    control_dt: float = Field(gt=0)
    K: int = Field(ge=0)
    degree: int = Field(default=3, ge=1, le=8)
    seed: int = 0
    cost: CostSection
    gd: GDSection
    initial: InitialSection
    thresholds: ThresholdSection = Field(default_factory=ThresholdSection)
    ablation: AblationSection = Field(default_factory=AblationSection)
    output: OutputSection = Field(default_factory=OutputSection)


@dataclass(frozen=True)
class Scenario:
    name: str
    plant: PlantParams
    control_dt: float
    K: int
    degree: int
    seed: int
    cost: CostSpec
    gd: GDConfig
    initial: tuple[tuple[float, float], ...]
    thresholds: RemainderThresholds
    shrink_wrap: bool
    symbolic_remainders: bool
    blowup_factor: float
    out_dir: str
    projection: tuple[int, int]
    n_sim: int

    @property
    def d(self) -> int:
        return self.plant.dims[0]

    @property
    def c(self) -> int:
        return self.plant.dims[1]

    def with_(self, **kw) -> Scenario:
        return replace(self, **kw)

    def fingerprint(self) -> str:
        """Hash of everything that defines the verified system and initial set."""
        payload = {
            "plant": self.plant.kind,
            "params": dict(sorted(self.plant.values.items())),
            "control_dt": self.control_dt,
            "cost": asdict(self.cost),
            "alpha": list(self.gd.alpha),
            "initial": [list(b) for b in self.initial],
        }
        blob = json.dumps(payload, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _tup(m):
    return tuple(tuple(float(v) for v in row) for row in m)


def _from_file(f: ScenarioFile) -> Scenario:
    plant = PlantParams(f.plant, dict(f.params))
    d, c = plant.dims
    cs = f.cost
    if cs.Q is not None:
        if len(cs.Q) != cs.H:
            raise ValueError(f"cost.Q: expected {cs.H} matrices, got {len(cs.Q)}")
        Q = tuple(_tup(m) for m in cs.Q)
    else:
        if len(cs.Q_diag) != d:
            raise ValueError(f"cost.Q_diag: expected {d} entries, got {len(cs.Q_diag)}")
        Q = tuple(
            _tup([[cs.Q_discount**k * q if a == b else 0.0 for b, _ in enumerate(cs.Q_diag)]
                  for a, q in enumerate(cs.Q_diag)])
            for k in range(cs.H)
        )
    for Qi in Q:
        if len(Qi) != d or any(len(row) != d for row in Qi):
            raise ValueError(f"cost.Q: matrices must be {d}x{d}")
    R = _tup(cs.R)
    if len(R) != c or any(len(row) != c for row in R):
        raise ValueError(f"cost.R: must be {c}x{c}")
    cost = CostSpec(cs.H, Q, R, cs.dt)
    g = f.gd
    alpha = tuple(g.alpha) if g.alpha is not None else tuple(
        g.alpha0 * g.alpha_decay**i for i in range(g.T)
    )
    lo, hi = f.initial.lo, f.initial.hi
    if len(lo) != d or len(hi) != d:
        raise ValueError(f"initial: lo and hi need {d} entries")
    for i, (a, b) in enumerate(zip(lo, hi)):
        if a > b:
            raise ValueError(f"initial: inverted interval in dimension {i}: [{a}, {b}]")
    proj = f.output.projection
    if proj is None:
        proj = [0, min(1, d - 1)]
    if len(proj) != 2 or any(not 0 <= p < d for p in proj):
        raise ValueError(f"output.projection must be two state indices below {d}")
    return Scenario(
        name=f.name,
        plant=plant,
        control_dt=f.control_dt,
        K=f.K,
        degree=f.degree,
        seed=f.seed,
        cost=cost,
        gd=GDConfig(alpha),
        initial=tuple((float(a), float(b)) for a, b in zip(lo, hi)),
        thresholds=RemainderThresholds(**f.thresholds.model_dump()),
        shrink_wrap=f.ablation.shrink_wrap,
        symbolic_remainders=f.ablation.symbolic_remainders,
        blowup_factor=f.ablation.blowup_factor,
        out_dir=f.output.dir,
        projection=(proj[0], proj[1]),
        n_sim=f.output.simulate,
    )


def _format_validation(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ScenarioError(f"{source}: {e}") from None
    try:
        return _from_file(ScenarioFile.model_validate(raw))
    except ValidationError as e:
        raise ScenarioError(f"{source}: {_format_validation(e)}") from None
    except ValueError as e:
        raise ScenarioError(f"{source}: {e}") from None


def shipped_scenarios() -> list[str]:
    root = resources.files("gdreach") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_scenario_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    if p.suffix == "" and name_or_path in shipped_scenarios():
        return Path(str(resources.files("gdreach") / "scenarios" / f"{name_or_path}.toml"))
    raise ScenarioError(f"scenario not found: {name_or_path}")


def load_scenario(path) -> Scenario:
    p = resolve_scenario_path(str(path))
    return parse_scenario(p.read_text(encoding="utf-8"), str(p))


def scenario_to_dict(s: Scenario) -> dict:
    """Normalised form: explicit per-step Q matrices and learning-rate list."""
    return {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "plant": s.plant.kind,
        "params": dict(s.plant.values),
        "control_dt": s.control_dt,
        "K": s.K,
        "degree": s.degree,
        "seed": s.seed,
        "cost": {
            "H": s.cost.H,
            "dt": s.cost.dt,
            "Q": [[list(r) for r in m] for m in s.cost.Q],
            "R": [list(r) for r in s.cost.R],
        },
        "gd": {"alpha": list(s.gd.alpha)},
        "initial": {"lo": [b[0] for b in s.initial], "hi": [b[1] for b in s.initial]},
        "thresholds": {
            "physical": s.thresholds.physical,
            "digital": s.thresholds.digital,
            "predicted": s.thresholds.predicted,
        },
        "ablation": {
            "shrink_wrap": s.shrink_wrap,
            "symbolic_remainders": s.symbolic_remainders,
            "blowup_factor": s.blowup_factor,
        },
        "output": {"dir": s.out_dir, "projection": list(s.projection), "simulate": s.n_sim},
    }


def dump_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))
