import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

PROJECT_ROOT = Path(__file__).parent.parent.parent
CONFIG_DIR = PROJECT_ROOT / "config"
DEFAULT_CONFIG_PATH = CONFIG_DIR / "pipeline.yaml"
OUTPUT_DIR_ENV = "PATHCHAIN_OUTPUT_DIR"

KERNELS = ("gaussian", "phate")
CHAINS = ("rnmc", "pnmc-free", "pnmc-prescribed", "pnmc-update")
TARGETS = ("uniform", "energy-bias", "entropy", "custom")
TARGETLESS_CHAINS = ("rnmc", "pnmc-free")
TARGET_FIELDS = ("target", "target_file", "beta_new", "beta_old")


@dataclass(frozen=True)
class PipelineConfig:
    kernel: str = "gaussian"
    epsilon: float | None = None
    percentile: float = 10.0
    alpha: float = 0.0
    k: int = 5
    beta: float = 8.0
    chain: str = "rnmc"
    target: str | None = None
    target_file: str | None = None
    energy_column: str = "energy"
    beta_new: float | None = None
    beta_old: float | None = None
    prior_chain: str | None = None
    prior_stationary: str | None = None
    m: int = 2
    tol: float = 1e-10
    max_iter: int = 10_000
    audit_tol: float = 1e-8
    perron_method: str = "eigh"
    output_dir: str | None = None

    @classmethod
    def from_mapping(cls, values: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValueError(f"unknown pipeline settings: {', '.join(unknown)}")
        config = cls(**values)
        config.check()
        return config

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        """Apply the flags that were given; a target-free chain flag clears the file's target settings."""
        values = {k: v for k, v in overrides.items() if v is not None}
        if values.get("chain") in TARGETLESS_CHAINS and "target" not in values:
            values.update(dict.fromkeys(TARGET_FIELDS))
        config = replace(self, **values)
        config.check()
        return config

    def check(self) -> None:
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {', '.join(KERNELS)}, got {self.kernel!r}")
        if self.chain not in CHAINS:
            raise ValueError(f"chain must be one of {', '.join(CHAINS)}, got {self.chain!r}")
        if self.target is not None and self.target not in TARGETS:
            raise ValueError(f"target must be one of {', '.join(TARGETS)}, got {self.target!r}")
        if self.chain == "pnmc-prescribed" and self.target is None:
            raise ValueError("chain 'pnmc-prescribed' requires a target")
        if self.chain in TARGETLESS_CHAINS and self.target is not None:
            raise ValueError(f"chain {self.chain!r} does not take a target")
        if self.chain == "pnmc-update" and not (self.prior_chain and self.prior_stationary):
            raise ValueError("chain 'pnmc-update' requires prior_chain and prior_stationary files")
        if self.target == "energy-bias" and (self.beta_new is None or self.beta_old is None):
            raise ValueError("target 'energy-bias' requires beta_new and beta_old")
        if self.target == "custom" and not self.target_file:
            raise ValueError("target 'custom' requires target_file")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.percentile <= 100:
            raise ValueError(f"percentile must be in (0, 100], got {self.percentile}")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.k < 1 or not self.beta > 0:
            raise ValueError("k must be >= 1 and beta positive")
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if not (self.tol > 0 and self.audit_tol > 0) or self.max_iter < 1:
            raise ValueError("tolerances must be positive and max_iter at least 1")
        if self.perron_method not in ("eigh", "power"):
            raise ValueError(f"perron_method must be 'eigh' or 'power', got {self.perron_method!r}")

    def resolve_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "pathchain-out")

    def to_dict(self) -> dict:
        return asdict(self)


def load_pipeline_config(config_path: Path | None = None) -> PipelineConfig:
    """Read a pipeline YAML file; with no explicit path, a missing default file means defaults."""
    explicit = config_path is not None
    config_path = config_path or DEFAULT_CONFIG_PATH
    if not config_path.exists():
        if explicit:
            raise FileNotFoundError(
                f"Pipeline config not found at {config_path}\n"
                f"Copy config/pipeline.example.yaml and adjust it."
            )
        return PipelineConfig()

    with open(config_path) as f:
        config = yaml.safe_load(f)

    if config is None:
        return PipelineConfig()
    if not isinstance(config, dict):
        raise ValueError(f"{config_path} must contain a mapping of pipeline settings")
    return PipelineConfig.from_mapping(config.get("pipeline", config))


def dump_config(config: PipelineConfig, path: Path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump({"pipeline": config.to_dict()}, f, sort_keys=False)
