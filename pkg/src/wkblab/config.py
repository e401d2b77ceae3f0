"""Run configuration: flat key space, file + environment + CLI overrides.

Precedence (highest wins): command-line ``--set key=value`` pairs, then
``WKBLAB_<KEY>`` environment variables, then the configuration file, then
the documented defaults below.
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

ENV_PREFIX = "WKBLAB_"


def _parse_lambdas(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


@dataclass
class RunConfig:
    """Scenario parameters, window grids, and output controls."""

    sigma: float = 5.0
    gamma: float = 1.0
    delta: float = 0.01
    t_star: float = 1.0
    s: float = 7.0
    s_prime: float = 2.0
    rho: float = 0.5
    n_order: int = 2
    c0: float = 1.0
    lambda_min: float = 2.0
    ode_lambdas: tuple = (8.0, 16.0, 32.0, 64.0)
    fft_lambdas: tuple = (3.0, 4.0, 5.0, 6.0, 7.0)
    turning_lambdas: tuple = (10.0, 20.0, 40.0, 80.0, 100.0)
    cert_ode_lambdas: tuple = (8.0, 12.0, 16.0, 24.0, 32.0)
    norms_delta: float = 0.4
    x_right: float = 6.0
    outdir: str = "runs"
    seed: int = 1234
    parallelism: int = 1

    def validate(self):
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        for name in ("delta", "norms_delta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if not self.s > 1:
            raise ConfigError("s must exceed 1")
        if not 1 < self.s_prime < 5.0 * self.s / 9.0:
            raise ConfigError(
                f"s_prime = {self.s_prime} violates 1 < s_prime < 5s/9 = "
                f"{5 * self.s / 9:.4g}"
            )
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if self.n_order < 1:
            raise ConfigError("n_order must be >= 1")
        if self.lambda_min < 2.0:
            raise ConfigError("lambda_min must be >= 2")
        if not self.t_star > 0:
            raise ConfigError("t_star must be positive")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        return self

    def as_dict(self):
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, tuple):
                d[key] = list(val)
        return d

    def echo_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)


_TUPLE_KEYS = {"ode_lambdas", "fft_lambdas", "turning_lambdas", "cert_ode_lambdas"}
_INT_KEYS = {"n_order", "seed", "parallelism"}
_STR_KEYS = {"outdir"}


def _coerce(key, raw):
    if key in _TUPLE_KEYS:
        return _parse_lambdas(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _STR_KEYS:
        return str(raw)
    return float(raw)


def load_config(path=None, overrides=(), environ=None):
    """Assemble a validated RunConfig from file, environment, and overrides."""
    environ = os.environ if environ is None else environ
    known = {f.name for f in fields(RunConfig)}
    values = {}

    if path is not None:
        try:
            with open(path) as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.split("#", 1)[0].strip()
                    if not line:
                        continue
                    if "=" not in line:
                        raise ConfigError(
                            f"{path}:{lineno}: expected 'key = value'"
                        )
                    key, raw = (part.strip() for part in line.split("=", 1))
                    if key not in known:
                        raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
                    values[key] = _coerce(key, raw)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    for key in known:
        env_key = ENV_PREFIX + key.upper()
        if env_key in environ:
            values[key] = _coerce(key, environ[env_key])

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not key=value")
        key, raw = (part.strip() for part in item.split("=", 1))
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")
        values[key] = _coerce(key, raw)

    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
