from pathlib import Path
from typing import Dict, List, Optional, Tuple

import psutil
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from utils.constants import CONSONANTS, DEFAULT_PATTERNS_PATH, SOURCE_VOWELS, TARGET_VOWELS, VOWELS
from utils.exceptions import ConfigurationError


class SuiteSettings(BaseSettings):
    """Process-wide defaults, overridable through MORPHSUITE_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MORPHSUITE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = Field(default="INFO")
    logs_dir: Path = Field(default=Path("logs"))
    log_file: Optional[str] = Field(default=None)
    log_max_bytes: int = Field(default=50 * 1024 * 1024)  # 50MB
    log_backup_count: int = Field(default=10)
    enable_json_logging: bool = Field(default=False)

    # Monitoring
    enable_metrics: bool = Field(default=False)
    metrics_file: str = Field(default="metrics.prom")

    # Generation
    default_seed: Optional[int] = Field(default=None)
    threads: int = Field(default_factory=lambda: psutil.cpu_count() or 1, ge=1, le=256)
    test_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    enable_surface: bool = Field(default=True)
    enable_abstract: bool = Field(default=True)

    # Artificial morphemes
    consonants: str = Field(default=CONSONANTS)
    source_vowels: str = Field(default=SOURCE_VOWELS)
    target_vowels: str = Field(default=TARGET_VOWELS)
    vowels: str = Field(default=VOWELS)
    isolated_length: Tuple[int, int] = Field(default=(4, 6))
    bound_length: Tuple[int, int] = Field(default=(4, 6))
    circumfix_length: Tuple[int, int] = Field(default=(3, 3))
    max_rejections: int = Field(default=10_000, ge=1)

    # Evaluation / augmentation
    similarity_threshold: float = Field(default=0.34, ge=0.0, le=1.0)
    bucket_cap: int = Field(default=100, ge=1)
    candidates_per_pair: int = Field(default=50, ge=1)

    @field_validator("isolated_length", "bound_length", "circumfix_length")
    @classmethod
    def check_length_range(cls, v):
        low, high = v
        if not 3 <= low <= high <= 6:
            raise ValueError(f"morpheme length range must lie within [3, 6], got {v}")
        return v

    @field_validator("source_vowels", "target_vowels")
    @classmethod
    def check_disjoint_alphabets(cls, v, info):
        consonants = info.data.get("consonants", CONSONANTS)
        if not v or set(v) & set(consonants):
            raise ValueError("vowel and consonant alphabets must be non-empty and disjoint")
        return v

    def ensure_directories(self):
        """Ensure the log directory exists when file logging is enabled."""
        if self.log_file:
            self.logs_dir.mkdir(parents=True, exist_ok=True)


# Keys accepted in --config files, mapped to their RunConfig field
_PATH_FIELDS = (
    "src_conllu", "trg_conllu", "align",
    "test_src_conllu", "test_trg_conllu", "test_align",
    "vocab", "patterns", "inventory", "scores",
    "outputs", "meta", "manifest", "trg_vocab",
)

# Commands that draw random numbers
GENERATING_COMMANDS = frozenset({"gen-morphemes", "build", "augment"})


class RunConfig(BaseModel):
    """Resolved configuration of one command invocation."""

    command: str
    src_conllu: Optional[Path] = None
    trg_conllu: Optional[Path] = None
    align: Optional[Path] = None
    test_src_conllu: Optional[Path] = None
    test_trg_conllu: Optional[Path] = None
    test_align: Optional[Path] = None
    vocab: Optional[Path] = None
    patterns: Path = DEFAULT_PATTERNS_PATH
    inventory: Optional[Path] = None
    scores: Optional[Path] = None
    outputs: Optional[Path] = None
    meta: Optional[Path] = None
    manifest: Optional[Path] = None
    trg_vocab: Optional[Path] = None
    out_dir: Path = Path("out")
    output: Optional[Path] = None
    metrics_file: Optional[Path] = None

    seed: Optional[int] = None
    caps: Dict[str, int] = Field(default_factory=dict)
    enable_surface: bool = True
    enable_abstract: bool = True
    test_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    threads: int = Field(default=1, ge=1)
    bucket_cap: int = Field(default=100, ge=1)
    candidates_per_pair: int = Field(default=50, ge=1)
    dry_run: bool = False

    consonants: str = CONSONANTS
    source_vowels: str = SOURCE_VOWELS
    target_vowels: str = TARGET_VOWELS
    vowels: str = VOWELS
    isolated_length: Tuple[int, int] = (4, 6)
    bound_length: Tuple[int, int] = (4, 6)
    circumfix_length: Tuple[int, int] = (3, 3)
    max_rejections: int = 10_000
    similarity_threshold: float = 0.34

    @field_validator("caps", mode="before")
    @classmethod
    def parse_caps(cls, v):
        if v is None:
            return {}
        if isinstance(v, (list, tuple)):
            parsed = {}
            for item in v:
                if "=" not in item:
                    raise ValueError(f"cap must look like PATTERN=N, got {item!r}")
                pattern_id, _, count = item.partition("=")
                parsed[pattern_id.strip()] = int(count)
            v = parsed
        for pattern_id, count in v.items():
            if int(count) < 0:
                raise ValueError(f"cap for {pattern_id} must be >= 0")
        return v

    @model_validator(mode="after")
    def check_seed(self):
        if self.command in GENERATING_COMMANDS and self.seed is None:
            raise ValueError(f"--seed is required for {self.command}")
        return self

    def require(self, *names: str) -> None:
        """Raise ConfigurationError unless each named path is set and exists."""
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigurationError(f"--{name.replace('_', '-')} is required", option=name)
            if not Path(value).exists():
                raise ConfigurationError(
                    f"{name.replace('_', '-')} file not found: {value}", option=name, path=str(value)
                )

    def check_referenced_paths(self) -> None:
        """All input files referenced by this invocation must exist."""
        for name in _PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigurationError(
                    f"{name.replace('_', '-')} file not found: {value}", option=name, path=str(value)
                )

    @property
    def has_test_corpus(self) -> bool:
        return self.test_src_conllu is not None

    @classmethod
    def from_sources(
        cls,
        command: str,
        base: "SuiteSettings",
        file_values: Optional[Dict[str, str]] = None,
        flags: Optional[Dict[str, object]] = None,
    ) -> "RunConfig":
        """Merge settings, config-file values and flags; later sources win."""
        values: Dict[str, object] = {
            "seed": base.default_seed,
            "threads": base.threads,
            "test_fraction": base.test_fraction,
            "enable_surface": base.enable_surface,
            "enable_abstract": base.enable_abstract,
            "bucket_cap": base.bucket_cap,
            "candidates_per_pair": base.candidates_per_pair,
            "consonants": base.consonants,
            "source_vowels": base.source_vowels,
            "target_vowels": base.target_vowels,
            "vowels": base.vowels,
            "isolated_length": base.isolated_length,
            "bound_length": base.bound_length,
            "circumfix_length": base.circumfix_length,
            "max_rejections": base.max_rejections,
            "similarity_threshold": base.similarity_threshold,
        }
        for key, value in (file_values or {}).items():
            if key == "cap":
                values.setdefault("caps", [])
                values["caps"] = list(values["caps"]) + [value]
            elif key.endswith("_length"):
                low, _, high = value.partition(",")
                values[key] = (int(low), int(high or low))
            else:
                values[key] = value
        for key, value in (flags or {}).items():
            if value is None:
                continue
            if key == "caps":
                values["caps"] = list(values.get("caps") or []) + list(value)
            else:
                values[key] = value
        try:
            return cls(command=command, **values)
        except ValueError as e:
            raise ConfigurationError(f"invalid configuration: {e}", command=command) from e


def read_config_file(path: Path) -> Dict[str, str]:
    """Read a `key<TAB>value` config file; '#' comments and blank lines are ignored."""
    values: Dict[str, str] = {}
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}", path=str(path))
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            key, sep, value = line.partition("\t")
            if not sep:
                raise ConfigurationError(f"config line {line_no} is not key<TAB>value", line_no=line_no)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


# Global settings instance
settings = SuiteSettings()
