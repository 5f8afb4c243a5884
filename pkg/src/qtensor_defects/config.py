"""Shared configuration utils for Q-tensor minimization and defect analysis.

Two layers live here: ``Settings`` holds repository-level paths, the
default seed and grid size used by scripts, and ``RunConfig`` is the
validated JSON run configuration consumed by the CLI. Runs are
reproducible from their config file alone, so nothing is read from the
environment.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import types
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Literal, Union, get_args, get_origin, get_type_hints

import numpy as np

from .errors import ConfigError

PROJECT_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_ARTIFACTS_DIR = PROJECT_ROOT / "artifacts"
DEFAULT_LOG_DIR = PROJECT_ROOT / "logs"
DEFAULT_BASELINE_DIR = PROJECT_ROOT / "baselines"

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


@dataclass(slots=True)
class Settings:
    """Repository paths and defaults shared by the study scripts."""

    artifacts_dir: Path = DEFAULT_ARTIFACTS_DIR
    plots_dir: Path = field(init=False)
    reports_dir: Path = field(init=False)
    logs_dir: Path = DEFAULT_LOG_DIR
    baseline_dir: Path = DEFAULT_BASELINE_DIR
    grid_size: int = 33
    random_seed: int = 42

    def derived_paths(self) -> Iterable[Path]:
        return (self.artifacts_dir, self.plots_dir, self.reports_dir, self.logs_dir)

    def __post_init__(self) -> None:
        object.__setattr__(self, "plots_dir", self.artifacts_dir / "plots")
        object.__setattr__(self, "reports_dir", self.artifacts_dir / "reports")


def load_settings(artifacts_dir: Path | None = None) -> Settings:
    """Return default settings, optionally rooted at another artifacts dir."""

    if artifacts_dir is None:
        return Settings()
    return Settings(artifacts_dir=Path(artifacts_dir).expanduser())


def ensure_directories(settings: Settings) -> None:
    """Ensure commonly used directories exist before IO-heavy steps."""

    for path in settings.derived_paths():
        path.mkdir(parents=True, exist_ok=True)


def set_global_seed(seed: int) -> None:
    """Seed the Python and legacy NumPy generators.

    Library code draws from explicit ``numpy.random.default_rng(seed)``
    generators; this only covers third-party code using global state.
    """

    random.seed(seed)
    np.random.seed(seed)


def configure_logging(level: str | int | None = None) -> None:
    """Initialise structured logging with an overridable level."""

    logging.basicConfig(level=level or "INFO", format=LOG_FORMAT)
    logging.captureWarnings(True)


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------


@dataclass(slots=True)
class GridConfig:
    n: int = 33

    def validate(self) -> None:
        if self.n < 9 or self.n % 2 == 0:
            raise ConfigError(f"grid.n must be odd and >= 9, got {self.n}")


@dataclass(slots=True)
class BoundaryConfig:
    """Dirichlet data on the boundary shell.

    ``rotation`` is a rotation vector (axis × angle) applied for
    ``rotated_hedgehog``; ``director`` is the constant director for
    ``uniform``.
    """

    type: Literal["hedgehog", "rotated_hedgehog", "uniform"] = "hedgehog"
    delta_cfg: float = 0.1
    rotation: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    director: list[float] = field(default_factory=lambda: [0.0, 0.0, 1.0])

    def validate(self) -> None:
        if not 0.0 <= self.delta_cfg < 2.0:
            raise ConfigError(f"boundary.delta_cfg must lie in [0, 2), got {self.delta_cfg}")
        if len(self.rotation) != 3:
            raise ConfigError("boundary.rotation must have 3 components")
        if len(self.director) != 3 or np.linalg.norm(self.director) == 0.0:
            raise ConfigError("boundary.director must be a non-zero 3-vector")


@dataclass(slots=True)
class SolverConfig:
    """Projected-descent settings. ``step0 = None`` means 0.5/h."""

    max_iters: int = 5000
    step0: float | None = None
    armijo_c: float = 1e-4
    shrink: float = 0.5
    grad_tol: float = 1e-5
    energy_tol: float = 1e-14
    mode: Literal["constrained", "penalty"] = "constrained"
    mu: float = 1e3
    lam: float = 1.0
    init: Literal["radial", "perturbed"] = "radial"
    init_amplitude: float = 0.05
    seed: int = 42
    checkpoint_every: int = 0

    def validate(self) -> None:
        if self.max_iters < 0:
            raise ConfigError(f"solver.max_iters must be >= 0, got {self.max_iters}")
        if self.step0 is not None and self.step0 <= 0.0:
            raise ConfigError(f"solver.step0 must be positive, got {self.step0}")
        if not 0.0 < self.armijo_c < 1.0:
            raise ConfigError(f"solver.armijo_c must lie in (0, 1), got {self.armijo_c}")
        if not 0.0 < self.shrink < 1.0:
            raise ConfigError(f"solver.shrink must lie in (0, 1), got {self.shrink}")
        for name in ("grad_tol", "energy_tol", "mu", "lam"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"solver.{name} must be positive, got {getattr(self, name)}")
        if self.init_amplitude < 0.0:
            raise ConfigError(f"solver.init_amplitude must be >= 0, got {self.init_amplitude}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"solver.checkpoint_every must be >= 0, got {self.checkpoint_every}")


@dataclass(slots=True)
class AnalysisConfig:
    beta_threshold: float = 0.05
    frame_tol: float = 0.2
    radii: list[float] = field(default_factory=lambda: [0.4, 0.28, 0.2, 0.14, 0.1])
    k_max: int = 4
    fit_tol: float = 0.15
    tol_parallel: float = 0.05
    s_min: float = 1e-3
    max_center_radius: float = 0.9
    max_analyzed: int = 32
    loop_points: int = 64
    loop_radius: float = 0.25
    jet_tol: float = 1e-2
    lemma_tol: float | None = None
    order_tol: float = 0.2
    regression_tol: float = 0.1
    invariance_tol: float = 0.05

    @property
    def effective_lemma_tol(self) -> float:
        return self.lemma_tol if self.lemma_tol is not None else 10.0 * self.jet_tol

    def validate(self) -> None:
        if not 0.0 < self.beta_threshold < 2.0:
            raise ConfigError(f"analysis.beta_threshold must lie in (0, 2), got {self.beta_threshold}")
        if len(self.radii) < 2 or any(r <= 0.0 for r in self.radii):
            raise ConfigError("analysis.radii needs at least two positive radii")
        if not 1 <= self.k_max <= 6:
            raise ConfigError(f"analysis.k_max must lie in [1, 6], got {self.k_max}")
        if self.loop_points < 8:
            raise ConfigError(f"analysis.loop_points must be >= 8, got {self.loop_points}")
        if self.max_analyzed < 0:
            raise ConfigError(f"analysis.max_analyzed must be >= 0, got {self.max_analyzed}")
        for name in ("frame_tol", "fit_tol", "tol_parallel", "s_min", "max_center_radius", "loop_radius", "jet_tol"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"analysis.{name} must be positive, got {getattr(self, name)}")


@dataclass(slots=True)
class SyntheticConfig:
    """Ground-truth field written by the ``synthesize`` subcommand."""

    case: Literal["half_degree", "exchange", "order_two", "uniform"] = "half_degree"
    axis: list[float] = field(default_factory=lambda: [0.0, 0.0, 1.0])
    amplitude: float = 0.1
    exchange_lambda: float = 1.0

    def validate(self) -> None:
        if len(self.axis) != 3 or np.linalg.norm(self.axis) == 0.0:
            raise ConfigError("synthetic.axis must be a non-zero 3-vector")
        if self.amplitude < 0.0:
            raise ConfigError(f"synthetic.amplitude must be >= 0, got {self.amplitude}")


@dataclass(slots=True)
class OutputConfig:
    """Output directory and file names; the CLI writes nowhere else."""

    directory: str = "outputs"
    field: str = "field.qfld"
    trace: str = "energy_trace.csv"
    solver_report: str = "solver_report.json"
    defects: str = "defects.json"
    beta_vtk: str = "beta.vtk"
    s_vtk: str = "s.vtk"
    plots: bool = False

    def validate(self) -> None:
        if not self.directory:
            raise ConfigError("output.directory must not be empty")
        for item in fields(self):
            value = getattr(self, item.name)
            if item.name == "directory":
                continue
            if isinstance(value, str) and (not value or Path(value).name != value):
                raise ConfigError(f"output.{item.name} must be a bare file name, got {value!r}")


@dataclass(slots=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    threads: int = 1
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    def validate(self) -> None:
        for section in (self.grid, self.boundary, self.solver, self.analysis, self.synthetic, self.output):
            section.validate()
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _check_value(key: str, value: Any, hint: Any) -> Any:
    origin = get_origin(hint)
    if origin in (Union, types.UnionType):
        args = [arg for arg in get_args(hint) if arg is not type(None)]
        if value is None and len(args) < len(get_args(hint)):
            return None
        return _check_value(key, value, args[0])
    if origin is Literal:
        if value not in get_args(hint):
            raise ConfigError(f"{key} must be one of {list(get_args(hint))}, got {value!r}")
        return value
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key} must be a list, got {type(value).__name__}")
        (item_hint,) = get_args(hint)
        return [_check_value(f"{key}[{i}]", item, item_hint) for i, item in enumerate(value)]
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
        return value
    raise ConfigError(f"{key} has unsupported type {hint!r}")  # pragma: no cover


def _build(cls: type, raw: Any, prefix: str) -> Any:
    if not isinstance(raw, dict):
        raise ConfigError(f"{prefix or 'config'} must be a JSON object")
    hints = get_type_hints(cls)
    known = {item.name for item in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key '{prefix}{key}'")

    kwargs: dict[str, Any] = {}
    for name, value in raw.items():
        hint = hints[name]
        if isinstance(hint, type) and hasattr(hint, "__dataclass_fields__"):
            kwargs[name] = _build(hint, value, f"{prefix}{name}.")
        else:
            kwargs[name] = _check_value(f"{prefix}{name}", value, hint)
    return cls(**kwargs)


def run_config_from_dict(data: dict[str, Any]) -> RunConfig:
    """Build and validate a ``RunConfig``; missing keys take their defaults."""

    cfg = _build(RunConfig, data, "")
    cfg.validate()
    return cfg


def load_run_config(path: Path | str) -> RunConfig:
    """Read a JSON run configuration.

    Raises:
        ConfigError: malformed JSON, unknown keys, wrong types or ranges.
        OSError: the file cannot be read.
    """

    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return run_config_from_dict(data)


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical (sorted-key, compact) JSON of ``cfg``."""

    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
