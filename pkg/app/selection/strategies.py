from typing import Dict, List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

from app.exceptions import ContractViolation

DatasetProfile = Literal["mnist", "cinic10"]

CONSENSUS_ANTI_CLUSTERING = ("Max-Consensus", "Ultra-Consensus")
MAGNITUDE_BOOSTED = ("Magnitude-Hybrid",)


class StrategyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    lambda_r_s: float = Field(ge=0.0)
    lambda_c: PositiveFloat
    anti_clustering: bool = False
    magnitude_boost: bool = False

    @model_validator(mode="after")
    def _check_flags(self):
        if self.anti_clustering and self.name not in CONSENSUS_ANTI_CLUSTERING:
            raise ValueError(f"{self.name}: anti-clustering is reserved for {CONSENSUS_ANTI_CLUSTERING}")
        if self.magnitude_boost and self.name not in MAGNITUDE_BOOSTED:
            raise ValueError(f"{self.name}: magnitude boost is reserved for {MAGNITUDE_BOOSTED}")
        return self


# name, lambda_r_s, lambda_c, anti-clustering, magnitude-boost (MNIST values)
_TABLE: List[Tuple[str, float, float, bool, bool]] = [
    ("Max-Consensus", 0.02, 3.0, True, False),
    ("Ultra-Consensus", 0.03, 2.0, True, False),
    ("High-Consensus", 0.05, 1.0, False, False),
    ("Med-Consensus", 0.04, 1.5, False, False),
    ("Magnitude-Hybrid", 0.10, 1.0, False, True),
    ("Balanced", 0.15, 0.5, False, False),
    ("Low-Diversity", 0.20, 0.4, False, False),
    ("High-Diversity", 0.25, 0.5, False, False),
    ("Ultra-Diversity", 0.35, 0.3, False, False),
    ("Max-Diversity", 0.40, 0.2, False, False),
]

STRATEGY_NAMES = [row[0] for row in _TABLE]

DIVERSITY_ORDER = ["Low-Diversity", "High-Diversity", "Ultra-Diversity", "Max-Diversity"]
CONSENSUS_ORDER = ["Med-Consensus", "High-Consensus", "Ultra-Consensus", "Max-Consensus"]

TAU: Dict[str, float] = {"mnist": 0.98, "cinic10": 0.90}
SCORE_WEIGHTS: Dict[str, Tuple[float, float, float]] = {
    "mnist": (1.0, 0.01, 0.001),
    "cinic10": (1.033, 0.01, 1.082),
}


def _spaced(names: List[str], low: float, high: float) -> Dict[str, float]:
    step = (high - low) / (len(names) - 1)
    return {name: low + i * step for i, name in enumerate(names)}


def _cinic_lambda_c() -> Dict[str, float]:
    remap = {"Balanced": 1.0, "Magnitude-Hybrid": 1.0}
    remap.update(_spaced(DIVERSITY_ORDER, 0.6, 0.9))
    remap.update(_spaced(CONSENSUS_ORDER, 1.2, 2.0))
    return remap


def _check_profile(profile: str) -> None:
    if profile not in TAU:
        raise ContractViolation(f"unknown strategy profile {profile!r}, expected one of {sorted(TAU)}")


def strategy_bank(profile: DatasetProfile = "mnist") -> List[StrategyConfig]:
    """The ten strategies in table row order (also the tie-break order)."""
    _check_profile(profile)
    lambda_c = _cinic_lambda_c() if profile == "cinic10" else {}

    return [
        StrategyConfig(
            name=name,
            lambda_r_s=lam_r,
            lambda_c=lambda_c.get(name, lam_c),
            anti_clustering=anti,
            magnitude_boost=mag,
        )
        for name, lam_r, lam_c, anti, mag in _TABLE
    ]


def profile_tau(profile: DatasetProfile) -> float:
    _check_profile(profile)
    return TAU[profile]


def profile_score_weights(profile: DatasetProfile) -> Tuple[float, float, float]:
    _check_profile(profile)
    return SCORE_WEIGHTS[profile]
