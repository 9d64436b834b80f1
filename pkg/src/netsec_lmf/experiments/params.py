"""
Experiment configuration: TOML files, command-line overrides and the typed
model objects built from them.

Every key is validated when the config is parsed; messages name the
offending key as section.key.
"""
import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .. import config
from ..errors import ConfigError, DomainError
from ..model.dist import DegreeDist, Empirical, Geometric, NegativeBinomial, Poisson, Regular
from ..model.econ import CARA, CRRA, AgentEconomy, LogUtility, RiskNeutral, Utility
from ..model.game import ConstantCost, CostModel, DistributedCost
from ..model.lmf import EpidemicParams

logger = logging.getLogger(__name__)

CASES = ("strong", "weak", "general")
FORMATS = ("csv", "json")

# section -> key -> (kind, default)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "epidemic": {
        "p_plus": ("prob", 0.01),
        "p_minus": ("prob", 0.0),
        "q_plus": ("prob", 0.5),
        "q_minus": ("prob", 0.0),
        "degree": ("table", {"kind": "poisson", "lambda": 10.0}),
    },
    "economy": {
        "utility": ("table", {"kind": "risk_neutral"}),
        "wealth": ("float", 1.0),
        "loss": ("nonneg", 1.0),
    },
    "cost": {
        "kind": ("choice:constant,distribution", "constant"),
        "ratio": ("prob", 0.5),
        "knots": ("floats", [0.0, 1.0]),
        "cdf": ("floats", [0.0, 1.0]),
    },
    "lmf": {
        "gammas": ("floats?", None),
        "points": ("posint", config.CURVE_POINTS),
        "sweep_max": ("nonneg", 10.0),
        "sweep_points": ("posint", 101),
    },
    "adoption": {
        "q_minus": ("floats", [0.0, 0.125, 0.25, 0.375, 0.5]),
        "cost_points": ("posint", 400),
    },
    "poa": {
        "cost_min": ("prob", 0.0),
        "cost_max": ("prob", 0.03),
        "points": ("posint", 301),
    },
    "sim": {
        "gamma": ("prob", 0.5),
        "trials": ("posint", config.DEFAULT_TRIALS),
        "investment": ("ints?", None),
    },
    "validate": {
        "n_values": ("ints", [1000, 10000, 100000]),
        "trials": ("posint", 200),
        "gamma": ("prob", 0.5),
        "threshold": ("nonneg", 0.01),
        "tiny_graphs": ("posint", 20),
        "tiny_trials": ("posint", 100000),
        "tiny_max_nodes": ("posint", 5),
        "tiny_se": ("nonneg", 4.0),
    },
    "graph": {
        "kind": ("choice:er,config,file", "er"),
        "n": ("posint", 1000),
        "path": ("str?", None),
    },
    "game": {
        "include_unstable": ("bool", False),
        "case": ("choice:strong,weak,general", "general"),
    },
}
TOP_LEVEL = {"seed": ("int", 0)}


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_value(where: str, kind: str, value):
    """Validate and normalize a single config value."""
    if kind.endswith("?"):
        if value is None:
            return None
        kind = kind[:-1]
    if kind.startswith("choice:"):
        choices = kind.split(":", 1)[1].split(",")
        if value not in choices:
            raise ConfigError(f"{where}: must be one of {choices} (got {value!r})")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: must be a string (got {value!r})")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: must be true or false (got {value!r})")
        return value
    if kind == "table":
        if not isinstance(value, dict) or "kind" not in value:
            raise ConfigError(f"{where}: must be an inline table with a 'kind' key (got {value!r})")
        return dict(value)
    if kind in ("int", "posint"):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{where}: must be an integer (got {value!r})")
        if kind == "posint" and value < 1:
            raise ConfigError(f"{where}: must be >= 1 (got {value})")
        return value
    if kind in ("floats", "ints"):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: must be an array (got {value!r})")
        item = "int" if kind == "ints" else "float"
        return [_check_value(f"{where}[{i}]", item, v) for i, v in enumerate(value)]
    if not _is_number(value):
        raise ConfigError(f"{where}: must be a number (got {value!r})")
    value = float(value)
    if kind == "prob" and not 0.0 <= value <= 1.0:
        raise ConfigError(f"{where}: must lie in [0, 1] (got {value})")
    if kind == "nonneg" and value < 0:
        raise ConfigError(f"{where}: must be >= 0 (got {value})")
    return value


def _parse_literal(where: str, text: str):
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{where}: not a TOML literal ({exc}); quote strings, e.g. \"er\"") from exc


def parse_override(text: str):
    """Split 'section.key=value' (or 'seed=value') into (section, key, value)."""
    if "=" not in text:
        raise ConfigError(f"--set {text!r}: expected section.key=value")
    path, raw = text.split("=", 1)
    parts = path.strip().split(".")
    if len(parts) == 1:
        section, key = None, parts[0]
    elif len(parts) == 2:
        section, key = parts
    else:
        raise ConfigError(f"--set {text!r}: expected section.key=value")
    return section, key, _parse_literal(path.strip(), raw.strip())


def degree_from_table(where: str, table: Dict[str, Any]) -> DegreeDist:
    kind = table.get("kind")
    builders = {
        "poisson": (("lambda",), lambda t: Poisson(float(t["lambda"]))),
        "regular": (("degree",), lambda t: Regular(t["degree"])),
        "geometric": (("p",), lambda t: Geometric(float(t["p"]))),
        "negative_binomial": (("r", "p"), lambda t: NegativeBinomial(float(t["r"]), float(t["p"]))),
        "empirical": ((), None),
    }
    if kind not in builders:
        raise ConfigError(f"{where}.kind: unknown degree law {kind!r} (choose from {sorted(builders)})")
    try:
        if kind == "empirical":
            _check_keys(where, table, {"kind", "probs", "weights", "d_max"})
            if "probs" in table:
                return Empirical(tuple(_check_value(f"{where}.probs", "floats", table["probs"])))
            if "weights" in table:
                weights = _check_value(f"{where}.weights", "floats", table["weights"])
                d_max = _check_value(f"{where}.d_max", "posint", table.get("d_max", config.D_MAX))
                return Empirical.from_weights(weights, d_max)
            raise ConfigError(f"{where}: empirical degree law needs 'probs' or 'weights'")
        required, build = builders[kind]
        _check_keys(where, table, {"kind", *required})
        for key in required:
            if key not in table:
                raise ConfigError(f"{where}.{key}: missing for degree law {kind!r}")
            _check_value(f"{where}.{key}", "float", table[key])
        return build(table)
    except DomainError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def utility_from_table(where: str, table: Dict[str, Any]) -> Utility:
    kind = table.get("kind")
    builders = {
        "risk_neutral": ((), lambda t: RiskNeutral()),
        "cara": (("a",), lambda t: CARA(float(t["a"]))),
        "log": (("shift",), lambda t: LogUtility(float(t.get("shift", 0.0)))),
        "crra": (("rho",), lambda t: CRRA(float(t["rho"]))),
    }
    if kind not in builders:
        raise ConfigError(f"{where}.kind: unknown utility {kind!r} (choose from {sorted(builders)})")
    required, build = builders[kind]
    _check_keys(where, table, {"kind", *required})
    for key in required:
        if key in table:
            _check_value(f"{where}.{key}", "float", table[key])
        elif kind != "log":
            raise ConfigError(f"{where}.{key}: missing for utility {kind!r}")
    try:
        return build(table)
    except DomainError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _check_keys(where: str, table: Dict[str, Any], allowed) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}: unknown key")


def apply_case(params: EpidemicParams, case: str) -> EpidemicParams:
    """strong forces p- = q- = 0, weak forces q- = q+, general leaves params alone."""
    if case == "strong":
        return params.replace(p_minus=0.0, q_minus=0.0)
    if case == "weak":
        return params.replace(q_minus=params.q_plus)
    if case == "general":
        return params
    raise ConfigError(f"game.case: must be one of {list(CASES)} (got {case!r})")


@dataclass
class ExperimentConfig:
    """Validated sections plus the seed; typed model objects are built on demand."""

    sections: Dict[str, Dict[str, Any]]
    seed: int = 0
    source: Optional[str] = None
    fmt: str = "csv"
    out: Optional[Path] = None
    overrides: Dict[str, Any] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return self.sections[name]

    def get(self, section: str, key: str):
        return self.sections[section][key]

    @property
    def case(self) -> str:
        return self.sections["game"]["case"]

    @property
    def include_unstable(self) -> bool:
        return self.sections["game"]["include_unstable"]

    def epidemic(self) -> EpidemicParams:
        sec = self.sections["epidemic"]
        degree = degree_from_table("epidemic.degree", sec["degree"])
        try:
            params = EpidemicParams(sec["p_plus"], sec["p_minus"], sec["q_plus"], sec["q_minus"], degree)
            return apply_case(params, self.case)
        except DomainError as exc:
            raise ConfigError(f"epidemic: {exc}") from exc

    def economy(self) -> AgentEconomy:
        sec = self.sections["economy"]
        utility = utility_from_table("economy.utility", sec["utility"])
        try:
            return AgentEconomy(utility=utility, wealth=sec["wealth"], loss=sec["loss"])
        except DomainError as exc:
            raise ConfigError(f"economy: {exc}") from exc

    def cost(self, ratio: float = None) -> CostModel:
        sec = self.sections["cost"]
        loss = self.sections["economy"]["loss"]
        try:
            if sec["kind"] == "constant":
                r = sec["ratio"] if ratio is None else ratio
                return ConstantCost(r * loss, loss)
            return DistributedCost(tuple(sec["knots"]), tuple(sec["cdf"]), loss)
        except DomainError as exc:
            raise ConfigError(f"cost: {exc}") from exc

    def to_dict(self) -> dict:
        return {"seed": self.seed, "source": self.source, **copy.deepcopy(self.sections)}


def defaults() -> Dict[str, Dict[str, Any]]:
    return {sec: {key: copy.deepcopy(spec[1]) for key, spec in keys.items()} for sec, keys in SCHEMA.items()}


def _merge(target: Dict[str, Dict[str, Any]], data: Dict[str, Any], origin: str) -> Optional[int]:
    seed = None
    for name, body in data.items():
        if name in TOP_LEVEL:
            seed = _check_value(f"{origin}{name}", TOP_LEVEL[name][0], body)
            continue
        if name not in SCHEMA:
            raise ConfigError(f"{origin}{name}: unknown section")
        if not isinstance(body, dict):
            raise ConfigError(f"{origin}{name}: must be a table")
        for key, value in body.items():
            if key not in SCHEMA[name]:
                raise ConfigError(f"{origin}{name}.{key}: unknown key")
            target[name][key] = _check_value(f"{origin}{name}.{key}", SCHEMA[name][key][0], value)
    return seed


def load_config(path=None, overrides: Sequence[str] = (), seed: int = None, case: str = None,
                include_unstable: bool = None, fmt: str = None, out=None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from an optional TOML file, --set overrides and
    dedicated flags, in increasing order of precedence.
    """
    sections = defaults()
    file_seed = None
    source = None
    if path is not None:
        path = Path(path)
        source = str(path)
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except FileNotFoundError as exc:
            raise ConfigError(f"{path}: config file not found") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        file_seed = _merge(sections, data, f"{path.name}: ")

    applied = {}
    for text in overrides:
        sec, key, value = parse_override(text)
        if sec is None:
            file_seed = _merge(sections, {key: value}, "--set ")
        else:
            _merge(sections, {sec: {key: value}}, "--set ")
        applied[f"{sec}.{key}" if sec else key] = value

    if case is not None:
        sections["game"]["case"] = _check_value("--case", SCHEMA["game"]["case"][0], case)
    if include_unstable:
        sections["game"]["include_unstable"] = True
    if fmt is not None and fmt not in FORMATS:
        raise ConfigError(f"--format: must be one of {list(FORMATS)} (got {fmt!r})")

    cfg = ExperimentConfig(
        sections=sections,
        seed=seed if seed is not None else (file_seed if file_seed is not None else 0),
        source=source,
        fmt=fmt or "csv",
        out=Path(out) if out else None,
        overrides=applied,
    )
    # surface model-level errors at parse time
    cfg.epidemic()
    econ = cfg.economy()
    cost = cfg.cost()
    if isinstance(cost, ConstantCost):
        try:
            AgentEconomy(econ.utility, econ.wealth, econ.loss, cost.c)
        except DomainError as exc:
            raise ConfigError(f"cost.ratio: {exc}") from exc
    sim = sections["sim"]
    if sim["investment"] is not None and any(v not in (0, 1) for v in sim["investment"]):
        raise ConfigError("sim.investment: entries must be 0 or 1")
    poa = sections["poa"]
    if poa["cost_min"] > poa["cost_max"]:
        raise ConfigError(f"poa.cost_min: must not exceed poa.cost_max ({poa['cost_min']} > {poa['cost_max']})")
    logger.debug("loaded config from %s with overrides %s", source, applied)
    return cfg
