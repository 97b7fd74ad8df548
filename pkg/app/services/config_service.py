"""Experiment configuration: INI text, one section per module, validated by
pydantic models that forbid unknown keys."""

import configparser
import re
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, TypeVar, Union

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from app.exceptions import ConfigError
from app.federated.client import TrainConfig
from app.orchestrator.state import METHODS
from app.qubo.solver import AnnealParams
from app.selection.builder import SelectionParams
from app.selection.strategies import StrategyConfig, profile_score_weights, profile_tau, strategy_bank

PROFILE_DIR = Path(__file__).resolve().parent.parent / "profiles"

AUTO = "auto"
# keys whose None means "derive from the strategy profile or the problem"
AUTO_KEYS = frozenset({"tau", "score_weights", "initial_temperature", "sweeps"})

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _split_list(v):
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


def _auto_to_none(v):
    if isinstance(v, str) and v.strip().lower() in (AUTO, ""):
        return None
    return v


T = TypeVar("T")

# comma-separated values in the INI text
CsvList = Annotated[List[T], BeforeValidator(_split_list)]
Weights = Annotated[Tuple[float, float, float], BeforeValidator(_split_list)]
# "auto" (or empty) means: derive the value at run time
Auto = Annotated[Optional[T], BeforeValidator(_auto_to_none)]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ExperimentSection(_Section):
    scenario: str
    n_clients: PositiveInt
    alphas: CsvList[PositiveFloat]
    rounds: NonNegativeInt = 20
    seeds: CsvList[int] = Field(min_length=1)
    methods: CsvList[Literal["fedavg_full", "qubo", "random"]] = Field(default=list(METHODS), min_length=1)
    output_dir: str = "results"

    @field_validator("alphas")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("at least one alpha is required")
        return v

    @field_validator("methods")
    @classmethod
    def _unique_methods(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("methods must not repeat")
        # qubo first: the random baseline replays its selection sizes
        return sorted(v, key=METHODS.index)


class DataSection(_Section):
    source: Literal["synthetic", "idx"] = "synthetic"
    # generator and train/test split seed, independent of the run seeds
    seed: int = 0
    classes: PositiveInt = 4
    dims: PositiveInt = 8
    per_class: PositiveInt = 200
    spread: PositiveFloat = 0.15
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    validation_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    train_images: Auto[str] = None
    train_labels: Auto[str] = None
    test_images: Auto[str] = None
    test_labels: Auto[str] = None
    max_train_samples: Auto[PositiveInt] = None

    @model_validator(mode="after")
    def _idx_paths(self):
        if self.source == "idx":
            missing = [
                f for f in ("train_images", "train_labels", "test_images", "test_labels")
                if getattr(self, f) is None
            ]
            if missing:
                raise ValueError(f"idx source requires {', '.join(missing)}")
        return self


class SelectionSection(_Section):
    strategy_profile: Literal["mnist", "cinic10"] = "mnist"
    k: PositiveInt = 10
    max_selections: PositiveInt = 10
    fairness_mode: bool = False
    fairness_weight: float = Field(default=1.0, ge=0.0)
    beta_r: float = 3.0
    gamma: float = Field(default=0.3, gt=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    tau: Auto[Annotated[float, Field(gt=0.0, le=1.0)]] = None
    score_weights: Auto[Weights] = None


class AnnealSection(_Section):
    initial_temperature: Auto[PositiveFloat] = None
    final_temperature: PositiveFloat = 1e-3
    sweeps: Auto[PositiveInt] = None
    restarts: PositiveInt = 4
    seed: int = 0


class TrainingSection(_Section):
    local_iterations: NonNegativeInt = 20
    batch_size: PositiveInt = 32
    client_lr: PositiveFloat = 0.1
    server_lr_fedavg: PositiveFloat = 0.065
    server_lr_qubo: PositiveFloat = 0.082
    hidden_units: PositiveInt = 64


SECTIONS = {
    "experiment": ExperimentSection,
    "data": DataSection,
    "selection": SelectionSection,
    "anneal": AnnealSection,
    "training": TrainingSection,
}


class ExperimentConfig(_Section):
    experiment: ExperimentSection
    data: DataSection = DataSection()
    selection: SelectionSection = SelectionSection()
    anneal: AnnealSection = AnnealSection()
    training: TrainingSection = TrainingSection()

    # ---- views consumed by the simulator ----
    def train_config(self, seed: int = 0) -> TrainConfig:
        return TrainConfig(rounds=self.experiment.rounds, seed=seed, **self.training.model_dump())

    def selection_params(self) -> SelectionParams:
        s = self.selection
        return SelectionParams(
            beta_r=s.beta_r,
            k=s.k,
            tau=s.tau if s.tau is not None else profile_tau(s.strategy_profile),
            gamma=s.gamma,
            epsilon=s.epsilon,
            max_selections=s.max_selections,
            fairness_mode=s.fairness_mode,
            fairness_weight=s.fairness_weight,
            score_weights=s.score_weights or profile_score_weights(s.strategy_profile),
        )

    def anneal_params(self) -> AnnealParams:
        return AnnealParams(**self.anneal.model_dump())

    def bank(self) -> List[StrategyConfig]:
        return strategy_bank(self.selection.strategy_profile)


# =========================================
# Parsing / serialization
# =========================================
def _line_index(text: str) -> Tuple[Dict[str, int], Dict[Tuple[str, str], int]]:
    sections, keys, current = {}, {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, lineno)
            continue
        m = _KEY_RE.match(line)
        if m and current is not None:
            keys.setdefault((current, m.group(1).strip().lower()), lineno)
    return sections, keys


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0], line=getattr(e, "lineno", None)) from e

    section_lines, key_lines = _line_index(text)

    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]", line=section_lines.get(unknown[0]), field=unknown[0])
    if "experiment" not in parser:
        raise ConfigError("missing required section [experiment]", field="experiment")

    raw = {name: dict(parser[name]) for name in parser.sections()}
    try:
        return ExperimentConfig(**raw)
    except ValidationError as e:
        err = e.errors()[0]
        loc = [str(p) for p in err["loc"]]
        section = loc[0]
        key = loc[1] if len(loc) > 1 else None
        field = f"{section}.{key}" if key else section
        line = key_lines.get((section, key)) if key else None
        if line is None:
            line = section_lines.get(section)
        raise ConfigError(f"{field}: {err['msg']}", line=line, field=field) from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    return parse_config(text)


def load_profile(name: str) -> ExperimentConfig:
    path = PROFILE_DIR / f"{name}.ini"
    if not path.exists():
        known = sorted(p.stem for p in PROFILE_DIR.glob("*.ini"))
        raise ConfigError(f"unknown profile {name!r}, expected one of {known}", field="profile")
    return load_config(path)


def _format_value(value) -> str:
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines: List[str] = []
    for name in SECTIONS:
        section = getattr(cfg, name)
        lines.append(f"[{name}]")
        for key, value in section.model_dump().items():
            if value is None and key not in AUTO_KEYS:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)
