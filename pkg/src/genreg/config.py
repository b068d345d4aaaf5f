"""Run configuration and experiment definition files.

Both are TOML. A run-configuration file holds flat keys mirroring the
command-line flags; an experiment file describes a resampling study:

    n_train = 70
    n_val = 70
    n_test = 500
    sigma = 1.0
    replicates = 50
    base_seed = 0
    estimators = ["gen", "fused_lasso", "smooth_lasso", "lasso", "ols"]

    [graph]
    spec = "chain:110"

    [covariance]
    kind = "toeplitz"
    rho = 0.5

    [signal]
    family = "mixed"
    target_tv = 15.0
    n_jumps = 3

    [grids]
    lambda1 = [0.0, 0.01, 0.1, 1.0]
"""

from __future__ import annotations

import logging
import platform
import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from genreg.errors import DataFileError, ValidationError
from genreg.graph import Graph, parse_graph_spec
from genreg.numerics import CovarianceKind, covariance
from genreg.penalty import HYPERPARAMETER_NAMES, LossConvention, Preset
from genreg.solvers import SolverKind, SolverOptions
from genreg.synthetic import SignalSpec, StudyDesign

logger = logging.getLogger(__name__)


def load_toml(path: str | Path) -> dict[str, Any]:
    """Parse a TOML file.

    Raises:
        DataFileError: If the file is missing or not valid TOML.
    """
    path = Path(path)
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise DataFileError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise DataFileError(f"invalid TOML in {path}: {exc}") from exc


def _float_tuple(name: str, values: Any) -> tuple[float, ...]:
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    if not isinstance(values, (list, tuple)):
        raise ValidationError(f"{name} must be a list of numbers")
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} must be a list of numbers: {exc}") from exc


# =============================================================================
# Run configuration
# =============================================================================


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one CLI run.

    Values come from defaults, then the ``--config`` file, then explicit
    flags. ``params`` holds subcommand-specific keys (``p``, ``kind``,
    ``n``, ``sizes``, ``solvers`` and so on).
    """

    command: str
    out: Path = Path("out")
    x: Path | None = None
    y: Path | None = None
    graph: str | None = None
    preset: Preset = Preset.GEN
    hyperparams: dict[str, float] = field(default_factory=dict)
    grids: dict[str, tuple[float, ...]] = field(default_factory=dict)
    loss_convention: LossConvention = LossConvention.HALF_SUMSQ
    solver: SolverKind = SolverKind.CD
    tol: float | None = None
    max_iter: int | None = None
    tau: float = 10.0
    alpha: float = 0.01
    gamma: float = 0.5
    rho_admm: float = 1.0
    timeout: float | None = None
    seed: int = 0
    k: int = 5
    jobs: int = 1
    experiment: Path | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "out", Path(self.out))
        object.__setattr__(self, "preset", Preset(self.preset))
        object.__setattr__(self, "solver", SolverKind(self.solver))
        object.__setattr__(self, "loss_convention", LossConvention(self.loss_convention))
        for name in ("x", "y", "experiment"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value))
        if self.k < 2:
            raise ValidationError(f"k must be >= 2, got {self.k}")
        if self.jobs < 1:
            raise ValidationError(f"jobs must be >= 1, got {self.jobs}")
        if self.timeout is not None and not self.timeout > 0:
            raise ValidationError(f"timeout must be > 0, got {self.timeout}")

    @classmethod
    def from_mapping(cls, command: str, values: dict[str, Any]) -> RunConfig:
        """Build a config from flat keys; ``grid_<name>`` keys become grids.

        Unknown keys are kept in ``params``.

        Raises:
            ValidationError: On malformed values.
        """
        known = {f.name for f in fields(cls)} - {"command", "hyperparams", "grids", "params"}
        kwargs: dict[str, Any] = {}
        hyperparams: dict[str, float] = {}
        grids: dict[str, tuple[float, ...]] = {}
        params: dict[str, Any] = {}
        for key, value in values.items():
            if value is None:
                continue
            if key in HYPERPARAMETER_NAMES:
                hyperparams[key] = float(value)
            elif key.startswith("grid_") and key[5:] in HYPERPARAMETER_NAMES:
                grids[key[5:]] = _float_tuple(key, value)
            elif key in known:
                kwargs[key] = value
            else:
                params[key] = value
        try:
            return cls(
                command=command, hyperparams=hyperparams, grids=grids, params=params, **kwargs
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"invalid configuration: {exc}") from exc

    def merged(self, overrides: dict[str, Any]) -> RunConfig:
        """Return a copy with ``overrides`` (flat keys, ``None`` skipped) applied."""
        base = self.to_mapping()
        base.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_mapping(self.command, base)

    def to_mapping(self) -> dict[str, Any]:
        values: dict[str, Any] = {}
        for f in fields(self):
            if f.name in ("command", "hyperparams", "grids", "params"):
                continue
            values[f.name] = getattr(self, f.name)
        values.update(self.hyperparams)
        values.update({f"grid_{name}": list(grid) for name, grid in self.grids.items()})
        values.update(self.params)
        return values

    def graph_object(self, p: int | None = None) -> Graph | None:
        return parse_graph_spec(self.graph, p) if self.graph else None

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            solver=self.solver,
            tol=self.tol,
            max_iter=self.max_iter,
            tau=self.tau,
            alpha=self.alpha,
            gamma=self.gamma,
            rho_admm=self.rho_admm,
            time_limit=self.timeout,
        )

    def resolve(self, required: tuple[str, ...] = ()) -> RunConfig:
        """Check that input paths exist and create the output directory.

        Args:
            required: Path fields (``x``, ``y``, ``experiment``) that must be set.

        Raises:
            ValidationError: If a required input is missing.
            DataFileError: If a referenced file does not exist or the output
                directory cannot be created.
        """
        for name in required:
            if getattr(self, name) is None:
                raise ValidationError(f"'{self.command}' needs --{name}")
        for name in ("x", "y", "experiment"):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise DataFileError(f"{name} file not found: {path}")
        inline = self.graph is not None and (":" in self.graph or self.graph.isalpha())
        if self.graph and not inline and not Path(self.graph).is_file():
            raise DataFileError(f"graph file not found: {self.graph}")
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise DataFileError(f"cannot create output directory {self.out}: {exc}") from exc
        return self

    def to_manifest(self) -> dict[str, Any]:
        """JSON-serializable resolved configuration plus library versions."""
        from genreg import __version__

        values = {}
        for key, value in self.to_mapping().items():
            if isinstance(value, Path):
                value = str(value)
            elif hasattr(value, "value"):
                value = value.value
            values[key] = value
        return {
            "command": self.command,
            "config": values,
            "versions": {
                "genreg": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
        }


# =============================================================================
# Experiment definitions
# =============================================================================


def _graph_from_table(table: dict[str, Any]) -> Graph:
    if "spec" in table:
        return parse_graph_spec(str(table["spec"]))
    kind = table.get("kind")
    if kind is None:
        raise ValidationError("[graph] needs 'spec' or 'kind'")
    params = table.get("params", [])
    if isinstance(params, int):
        params = [params]
    spec = f"{kind}:{'x'.join(str(int(v)) for v in params)}"
    return parse_graph_spec(spec)


def design_from_mapping(data: dict[str, Any]) -> StudyDesign:
    """Turn a parsed experiment file into a :class:`StudyDesign`.

    Raises:
        ValidationError: If a section is missing or malformed.
    """
    if "graph" not in data:
        raise ValidationError("experiment needs a [graph] section")
    graph = _graph_from_table(data["graph"])
    cov_table = dict(data.get("covariance", {"kind": "identity"}))
    kind = CovarianceKind(cov_table.pop("kind", "identity"))
    if kind is CovarianceKind.LAPLACIAN_INVERSE:
        cov = covariance(kind, graph=graph, **cov_table)
    else:
        cov = covariance(kind, p=graph.p, **cov_table)
    signal_table = dict(data.get("signal", {"family": "mixed"}))
    if "levels" in signal_table:
        signal_table["levels"] = tuple(signal_table["levels"])
    try:
        signal = SignalSpec(**signal_table)
    except TypeError as exc:
        raise ValidationError(f"invalid [signal] section: {exc}") from exc
    grids = {
        name: _float_tuple(f"grids.{name}", values)
        for name, values in data.get("grids", {}).items()
    }
    unknown = set(grids) - set(HYPERPARAMETER_NAMES)
    if unknown:
        raise ValidationError(f"unknown grid names: {sorted(unknown)}")
    solver_table = dict(data.get("solver", {}))
    solver_table.setdefault("solver", SolverKind.AUTO.value)
    try:
        options = SolverOptions(**solver_table)
    except TypeError as exc:
        raise ValidationError(f"invalid [solver] section: {exc}") from exc
    scalars = {
        key: data[key]
        for key in ("n_train", "n_val", "n_test", "sigma", "replicates", "base_seed", "k")
        if key in data
    }
    if data.get("estimators"):
        scalars["estimators"] = tuple(Preset(e) for e in data["estimators"])
    return StudyDesign(
        graph=graph, covariance=cov, signal=signal, grids=grids, options=options, **scalars
    )


def load_experiment(path: str | Path) -> StudyDesign:
    return design_from_mapping(load_toml(path))


def default_experiment() -> StudyDesign:
    """Chain graph, ``n = 70``, ``p = 110``, Toeplitz(0.5) rows, mixed signal with TV 15."""
    return design_from_mapping(
        {
            "graph": {"spec": "chain:110"},
            "covariance": {"kind": "toeplitz", "rho": 0.5},
            "signal": {"family": "mixed", "target_tv": 15.0, "n_jumps": 3},
            "n_train": 70,
            "n_val": 70,
            "n_test": 500,
            "sigma": 1.0,
            "replicates": 50,
        }
    )
