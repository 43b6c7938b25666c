"""Run configuration: strict TOML parsing and family construction.

Every key has a documented default; unknown keys anywhere in the file
are rejected before any computation starts.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .families import (
    IFSFamily,
    affine_family,
    cantor_pair_family,
    dyadic_gap_family,
    gauss_family,
)

# section -> key -> (type, default); None default means "no default, optional"
_SCHEMA: Dict[str, Dict[str, tuple]] = {
    "family": {
        "kind": (str, None),
        "ratio": (float, None),
        "slopes": (list, None),
        "intercepts": (list, None),
        "digits": (list, None),
        "domain": (list, None),
        "kappa": (float, 0.0),
    },
    "numerics": {
        "grid": (int, 512),
        "truncation": (int, None),
        "depth": (int, 10),
        "tol": (float, 1e-9),
        "tol_rho": (float, 1e-10),
        "tol_h": (float, 1e-8),
        "tol_mu": (float, 1e-8),
        "seed": (int, 0),
        "max_iter": (int, 2000),
        "workers": (int, 0),
    },
    "dim": {
        "s_hi": (float, 64.0),
        "theta_margin": (float, 1e-3),
        "depth_max": (int, None),
    },
    "eigen": {
        "exponent": (float, None),
    },
    "pressure": {
        "s_min": (float, None),
        "s_max": (float, None),
        "count": (int, 9),
        "s_values": (list, None),
        "depth": (int, None),
    },
    "osc": {
        "level": (int, 8),
        "candidate": (list, None),
        "suggest": (bool, False),
        "moran_exponent": (float, 1.0),
    },
    "attractor": {
        "count": (int, 10_000),
        "word_length": (int, 40),
        "scales": (list, None),
        "weights_exponent": (float, None),
    },
}

_FAMILY_KINDS = ("dyadic-gap", "cantor-pair", "affine-list", "gauss-full", "gauss-digits")


@dataclass
class RunConfig:
    family: Dict[str, Any]
    numerics: Dict[str, Any]
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    source: str = "<memory>"

    def section(self, name: str) -> Dict[str, Any]:
        return self.sections[name]


def _coerce(section: str, key: str, value, expected_type):
    if expected_type is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if expected_type is int and isinstance(value, bool):
        raise ConfigError(f"[{section}] {key}: expected integer, got boolean")
    if not isinstance(value, expected_type):
        raise ConfigError(
            f"[{section}] {key}: expected {expected_type.__name__}, "
            f"got {type(value).__name__} ({value!r})"
        )
    return value


def parse_config(text: str, source: str = "<memory>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    unknown_sections = set(raw) - set(_SCHEMA)
    if unknown_sections:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown_sections)}")
    if "family" not in raw:
        raise ConfigError(f"{source}: missing [family] section")
    sections: Dict[str, Dict[str, Any]] = {}
    for name, content in raw.items():
        if not isinstance(content, dict):
            raise ConfigError(f"{source}: [{name}] must be a section")
        schema = _SCHEMA[name]
        unknown = set(content) - set(schema)
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) {sorted(unknown)} in [{name}]")
        parsed = {}
        for key, (tp, default) in schema.items():
            parsed[key] = _coerce(name, key, content[key], tp) if key in content else default
        sections[name] = parsed
    for name, schema in _SCHEMA.items():
        if name not in sections:
            sections[name] = {k: d for k, (_, d) in schema.items()}
    numerics = sections["numerics"]
    for key in ("tol", "tol_rho", "tol_h", "tol_mu"):
        if numerics[key] <= 0:
            raise ConfigError(f"{source}: [numerics] {key} must be positive")
    if numerics["grid"] < 2:
        raise ConfigError(f"{source}: [numerics] grid must be >= 2")
    if numerics["truncation"] is not None and numerics["truncation"] < 1:
        raise ConfigError(f"{source}: [numerics] truncation must be >= 1")
    return RunConfig(
        family=sections["family"], numerics=numerics, sections=sections, source=source
    )


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, source=str(p))


def bundled_config_names() -> list:
    root = resources.files("ifslab") / "configs"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".toml"))


def bundled_config(name: str) -> RunConfig:
    res = resources.files("ifslab") / "configs" / f"{name}.toml"
    if not res.is_file():
        raise ConfigError(f"no bundled config {name!r}; available: {bundled_config_names()}")
    return parse_config(res.read_text(), source=f"bundled:{name}")


def build_family(cfg: RunConfig) -> IFSFamily:
    fam = cfg.family
    kind = fam.get("kind")
    if kind not in _FAMILY_KINDS:
        raise ConfigError(f"[family] kind must be one of {_FAMILY_KINDS}, got {kind!r}")
    domain = fam.get("domain")
    if domain is not None:
        if len(domain) != 2:
            raise ConfigError("[family] domain must be [lo, hi]")
        domain = (float(domain[0]), float(domain[1]))
    try:
        if kind == "dyadic-gap":
            family = dyadic_gap_family()
        elif kind == "cantor-pair":
            family = cantor_pair_family(float(fam.get("ratio") or 1.0 / 3.0))
        elif kind == "affine-list":
            if fam.get("slopes") is None or fam.get("intercepts") is None:
                raise ConfigError("[family] affine-list needs slopes and intercepts")
            family = affine_family(
                fam["slopes"], fam["intercepts"], domain or (0.0, 1.0)
            )
        elif kind == "gauss-full":
            family = gauss_family(None, domain)
        else:
            if fam.get("digits") is None:
                raise ConfigError("[family] gauss-digits needs a digits list")
            family = gauss_family([int(d) for d in fam["digits"]], domain)
    except ConfigError:
        raise
    except (ValueError, TypeError, DomainError) as exc:
        raise ConfigError(f"[family] invalid parameters: {exc}") from exc
    family.kappa = float(fam.get("kappa") or 0.0)
    return family
