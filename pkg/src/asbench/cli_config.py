"""Experiment configuration: JSON schema, validation, and materialization.

Config errors name the offending field path.  The suite always comes from a
testbed spec (system evaluation needs objective callables); the archive is
either generated by running the testbed optimizers or loaded from a CSV.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .archive import ingest_csv
from .features import FEATURE_CLASSES
from .pipeline import PresolverConfig, SystemConfig
from .portfolio import Portfolio, best_of_restarts, build_rank_table
from .selectors import SELECTOR_KINDS, ModelSpec, model_kind_for
from .testbed import FAMILIES, OPTIMIZER_KINDS, ToyOptimizer, generate_archive, make_suite
from .util import ConfigError

_PROTOCOL_NAMES = {"loio": "LOIO", "lopo": "LOPO", "lopoad": "LOPOAD", "ri": "RI"}
_MODEL_PARAM_ALIASES = {"trees": "n_estimators", "min_leaf": "min_samples_leaf"}


def _get(d: dict, key: str, kind, path: str, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    value = d[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}: expected {kind}, got {type(value).__name__}")
    return value


def _parse_optimizer(raw: dict, path: str) -> ToyOptimizer:
    kind = _get(raw, "kind", str, path, required=True)
    if kind not in OPTIMIZER_KINDS:
        raise ConfigError(f"{path}.kind: unknown optimizer kind {kind!r}")
    return ToyOptimizer(
        kind=kind,
        budget=_get(raw, "budget", int, path, required=True),
        seed=_get(raw, "seed", int, path, default=0),
        optimizer_id=_get(raw, "id", str, path),
    )


def _parse_system(raw: dict, path: str, portfolio: Portfolio, epsilon: float,
                  seed: int) -> SystemConfig:
    selector = _get(raw, "selector", str, path, required=True)
    if selector not in SELECTOR_KINDS:
        raise ConfigError(f"{path}.selector: unknown selector {selector!r}")
    model_spec = None
    if "model" in raw:
        params = {}
        for key, value in _get(raw, "model", dict, path).items():
            params[_MODEL_PARAM_ALIASES.get(key, key)] = value
        model_spec = ModelSpec(kind=model_kind_for(selector), params=params)
    presolver = None
    if raw.get("presolver") is not None:
        pre = _get(raw, "presolver", dict, path)
        presolver = PresolverConfig(
            kind=_get(pre, "kind", str, f"{path}.presolver", default="nelder_mead"),
            budget=_get(pre, "budget", int, f"{path}.presolver"),
        )
    classes = raw.get("feature_classes")
    if classes is not None:
        unknown = set(classes) - set(FEATURE_CLASSES)
        if unknown:
            raise ConfigError(f"{path}.feature_classes: unknown classes {sorted(unknown)}")
    try:
        return SystemConfig(
            name=_get(raw, "name", str, path, required=True),
            portfolio=portfolio,
            selector_kind=selector,
            model_spec=model_spec,
            sample_size=_get(raw, "sample_size", int, path),
            presolver=presolver,
            feature_classes=tuple(classes) if classes is not None else FEATURE_CLASSES,
            feature_source=_get(raw, "feature_source", str, path, default="X_only"),
            epsilon=epsilon,
            seed=_get(raw, "seed", int, path, default=seed),
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class ExperimentConfig:
    testbed_spec: dict
    archive_path: str | None
    portfolio_spec: object
    systems_raw: list
    protocols: list[str]
    runs: int
    seed: int
    out_dir: str
    shared_portfolio: Portfolio | None = None
    systems: list = field(default_factory=list)

    def materialize(self):
        """Build the suite and archive, resolve the portfolio and systems."""
        spec = self.testbed_spec
        families = _get(spec, "families", list, "testbed", default=list(FAMILIES))
        unknown = set(families) - set(FAMILIES)
        if unknown:
            raise ConfigError(f"testbed.families: unknown families {sorted(unknown)}")
        epsilon = float(spec.get("epsilon", 1e-2))
        suite = make_suite(
            families,
            _get(spec, "dimensions", list, "testbed", required=True),
            _get(spec, "instances", int, "testbed", required=True),
            _get(spec, "seed", int, "testbed", default=0),
        )
        if self.archive_path is not None:
            archive = ingest_csv(self.archive_path)
            missing = {t.key for t in suite} - set(archive.all_instances())
            if missing:
                raise ConfigError(f"archive: missing suite instances, e.g. {sorted(missing)[0]}")
        else:
            optimizers_raw = _get(spec, "optimizers", list, "testbed", required=True)
            optimizers = [
                _parse_optimizer(o, f"testbed.optimizers[{i}]")
                for i, o in enumerate(optimizers_raw)
            ]
            archive = generate_archive(suite, optimizers, epsilon=epsilon, seed=spec.get("seed", 0))

        universe = archive.optimizers()
        if isinstance(self.portfolio_spec, list):
            members = list(self.portfolio_spec)
            missing = set(members) - set(universe)
            if missing:
                raise ConfigError(f"portfolio: not in archive: {sorted(missing)}")
            # universe_size is construction metadata; when the portfolio uses
            # every archived optimizer, count the universe as one larger
            universe_size = max(len(universe), len(members) + 1)
            self.shared_portfolio = Portfolio(members=tuple(members), universe_size=universe_size)
        else:
            spec_p = self.portfolio_spec
            k = _get(spec_p, "k", int, "portfolio", required=True)
            if k >= len(universe):
                raise ConfigError(f"portfolio.k: infeasible k={k} for universe of {len(universe)}")
            rank_table = build_rank_table(archive, universe)
            result = best_of_restarts(
                rank_table, universe, k,
                _get(spec_p, "restarts", int, "portfolio", default=31),
                _get(spec_p, "seed", int, "portfolio", default=self.seed),
            )
            self.shared_portfolio = result.portfolio

        self.systems = [
            _parse_system(raw, f"systems[{i}]", self.shared_portfolio, epsilon, self.seed)
            for i, raw in enumerate(self.systems_raw)
        ]
        names = [s.name for s in self.systems]
        if len(set(names)) != len(names):
            raise ConfigError(f"systems: duplicate names in {names}")
        return archive, suite


def load_experiment_config(path, runs=None, seed=None, protocols=None, out=None) -> ExperimentConfig:
    """Load and validate the JSON config; CLI overrides beat config values."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")

    testbed_spec = _get(raw, "testbed", dict, "config", required=True)
    proto_raw = protocols if protocols else _get(raw, "protocols", list, "config", default=["lopo"])
    resolved = []
    for p in proto_raw:
        if str(p).lower() not in _PROTOCOL_NAMES:
            raise ConfigError(f"protocols: unknown protocol {p!r}")
        resolved.append(_PROTOCOL_NAMES[str(p).lower()])
    systems_raw = _get(raw, "systems", list, "config", required=True)
    if not systems_raw:
        raise ConfigError("systems: need at least one system")
    portfolio_spec = raw.get("portfolio")
    if not isinstance(portfolio_spec, (list, dict)) or not portfolio_spec:
        raise ConfigError("portfolio: must be a member list or {\"k\": ...}")

    return ExperimentConfig(
        testbed_spec=testbed_spec,
        archive_path=_get(raw, "archive", str, "config"),
        portfolio_spec=portfolio_spec,
        systems_raw=systems_raw,
        protocols=resolved,
        runs=runs if runs is not None else _get(raw, "runs", int, "config", default=31),
        seed=seed if seed is not None else _get(raw, "seed", int, "config", default=0),
        out_dir=out if out is not None else _get(raw, "out", str, "config", default="asbench_out"),
    )
