"""JSON run configuration: model, wave parameters and numerical settings."""

import json
from dataclasses import dataclass, field

from .errors import ConfigInvalid, UnsupportedFamily
from .models import Model, WaveParams

NUMERICS_DEFAULTS = {
    "quad_nodes": 200,
    "fd_rel_step": 1e-4,
    "ode_rel_tol": 1e-10,
    "hill_modes": 64,
    "sign_tol": 1e-8,
    "sim_modes": 256,
    # beyond the core six
    "profile_points": 256,
    "contour_points": 128,
    "contour_radius": 1.0,
    "tau_max": 10.0,
    "nu_steps": 4,
    "zero_tol": 1e-6,
    "sim_dt": 1e-3,
    "sim_output": 0.05,
}
INTEGER_KEYS = {"quad_nodes", "hill_modes", "sim_modes", "profile_points", "contour_points", "nu_steps"}


@dataclass
class Config:
    model: Model
    params: WaveParams
    numerics: dict = field(default_factory=lambda: dict(NUMERICS_DEFAULTS))
    well_hint: float | None = None

    def echo(self):
        fkey = "f" if self.model.family == "KDV" else "F"
        out = {
            "model": {"family": self.model.family, fkey: list(self.model.f_coeffs),
                      "kappa": list(self.model.kappa_coeffs)},
            "params": {"mu": self.params.mu, "lambda": list(self.params.lam), "c": self.params.c},
            "numerics": dict(self.numerics),
        }
        if self.well_hint is not None:
            out["params"]["well_hint"] = self.well_hint
        return out

    def with_params(self, params):
        return Config(self.model, params, dict(self.numerics), self.well_hint)


def _reject_unknown(block, allowed, where):
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigInvalid(f"unknown key(s) in {where}: {', '.join(extra)}")


def _coeffs(value, name):
    if isinstance(value, (int, float)):
        value = [value]
    if not isinstance(value, list) or not value or not all(isinstance(a, (int, float)) for a in value):
        raise ConfigInvalid(f"{name} must be a non-empty list of numbers (ascending powers of v)")
    return tuple(float(a) for a in value)


def parse_config(data):
    """Validate a decoded JSON object and build a Config."""
    if not isinstance(data, dict):
        raise ConfigInvalid("configuration must be a JSON object")
    _reject_unknown(data, ("model", "params", "numerics"), "configuration")
    for key in ("model", "params"):
        if not isinstance(data.get(key), dict):
            raise ConfigInvalid(f"missing or malformed {key!r} block")

    mb = data["model"]
    family = str(mb.get("family", "")).upper()
    fkey = {"KDV": "f", "EKL": "F"}.get(family)
    if fkey is None:
        raise ConfigInvalid(f"unknown family {mb.get('family')!r}")
    _reject_unknown(mb, ("family", fkey, "kappa"), "model")
    if fkey not in mb:
        raise ConfigInvalid(f"model block needs {fkey!r} for family {family}")
    try:
        model = Model(family, _coeffs(mb[fkey], fkey), _coeffs(mb.get("kappa", [1.0]), "kappa"))
    except UnsupportedFamily as exc:
        raise ConfigInvalid(str(exc)) from exc

    pb = data["params"]
    _reject_unknown(pb, ("mu", "lambda", "c", "well_hint"), "params")
    try:
        mu, c = float(pb["mu"]), float(pb["c"])
        lam = pb.get("lambda", [0.0] * model.N)
        lam = [float(a) for a in (lam if isinstance(lam, list) else [lam])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"params block needs numeric mu, c and lambda: {exc}") from exc
    if len(lam) != model.N:
        raise ConfigInvalid(f"{family} needs {model.N} lambda value(s), got {len(lam)}")
    hint = pb.get("well_hint")
    if hint is not None and not isinstance(hint, (int, float)):
        raise ConfigInvalid("well_hint must be a number")

    nb = data.get("numerics", {})
    if not isinstance(nb, dict):
        raise ConfigInvalid("numerics must be an object")
    _reject_unknown(nb, NUMERICS_DEFAULTS, "numerics")
    numerics = dict(NUMERICS_DEFAULTS)
    for key, val in nb.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
            raise ConfigInvalid(f"numerics.{key} must be a positive number")
        if key in INTEGER_KEYS:
            if float(val) != int(val):
                raise ConfigInvalid(f"numerics.{key} must be an integer")
            val = int(val)
        numerics[key] = val
    return Config(model, WaveParams(mu, tuple(lam), c), numerics, None if hint is None else float(hint))


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(data)


__all__ = ["Config", "NUMERICS_DEFAULTS", "parse_config", "load_config"]
