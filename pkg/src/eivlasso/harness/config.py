"""Experiment configuration: flat INI sections parsed into ``ExperimentConfig``.

Example::

    [experiment]
    estimator = lasso_gd
    trials = 50
    master_seed = 7

    [dims]
    m = 256, 512, 1024
    n_rescaled = 2, 4, 7, 12, 20
    d = sqrt

    [A]
    family = ar1
    rho = 0.3

    [B]
    family = ar1
    rho = 0.3
    tau_B = 0.3

    [penalty]
    f = 0.05:0.8:0.05
    zeta = zeta2
    R_mult = 1

Every key is validated; a bad or unknown key raises :class:`ConfigError`
naming ``section.key``.
"""

import configparser
import math
from dataclasses import dataclass, field, replace

ESTIMATORS = ("lasso_gd", "conic", "both")
A_FAMILIES = ("ar1", "star_block", "identity")
B_FAMILIES = ("ar1", "random_precision", "identity", "zero")
ZETA_PRESETS = ("zeta1", "zeta2", "zeta3")


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    m: tuple = (256,)
    n: tuple = ()
    n_rescaled: tuple = ()
    d: object = "sqrt"
    A_family: str = "ar1"
    A_rho: float = 0.3
    A_hub_block: int = 17
    A_n_blocks: int = None
    B_family: str = "ar1"
    B_rho: float = 0.3
    B_seed: int = 0
    tau_B: tuple = (0.3,)
    beta_length: float = 5.0
    sigma_eps: float = 1.0
    entry_dist: str = "gaussian"
    beta_per_trial: bool = False
    estimator: str = "lasso_gd"
    f: tuple = tuple(round(0.05 * k, 10) for k in range(1, 17))
    omega_factor: float = 0.1
    zeta: tuple = ("zeta2",)
    R_mult: tuple = (1.0,)
    lambda_conic: float = 1.0
    trials: int = 100
    master_seed: int = 0
    gd_max_iters: int = 5000
    gd_tol: float = 1e-9
    conic_max_iters: int = 20000
    conic_tol: float = 1e-6
    trace_rho: tuple = (1, 2, 3, 6, 12, 25)
    trace_inits: int = 10
    trace_f: float = 0.3
    trace_max_iters: int = 2000
    trace_tol: float = 1e-13
    output_dir: str = "results"
    extras: dict = field(default_factory=dict, compare=False)

    def d_for(self, m):
        return int(math.isqrt(m)) if self.d == "sqrt" else int(self.d)

    def n_values(self, m):
        """Explicit ``n`` list, or ``ceil(r d log m)`` for each rescaled ``r``."""
        if self.n:
            return list(self.n)
        d = self.d_for(m)
        return [int(math.ceil(r * d * math.log(m))) for r in self.n_rescaled]

    def with_(self, **kw):
        return replace(self, **kw)


def _floats(key, raw):
    raw = raw.strip()
    try:
        if ":" in raw:
            lo, hi, step = (float(x) for x in raw.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + k * step, 10) for k in range(count))
        vals = tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise ConfigError(key, f"expected numbers or lo:hi:step, got {raw!r}") from None
    if not vals:
        raise ConfigError(key, "grid must be nonempty")
    return vals


def _ints(key, raw):
    vals = _floats(key, raw)
    if any(v != int(v) for v in vals):
        raise ConfigError(key, f"expected integers, got {raw!r}")
    return tuple(int(v) for v in vals)


def _choice(key, raw, options):
    v = raw.strip()
    if v not in options:
        raise ConfigError(key, f"expected one of {', '.join(options)}, got {v!r}")
    return v


def _bool(key, raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {raw!r}")


def _zetas(key, raw):
    out = []
    for tok in raw.split(","):
        tok = tok.strip()
        if tok in ZETA_PRESETS:
            out.append(tok)
            continue
        try:
            v = float(tok)
        except ValueError:
            raise ConfigError(key, f"expected {'/'.join(ZETA_PRESETS)} or a number, got {tok!r}") from None
        if v <= 0:
            raise ConfigError(key, "step multipliers must be positive")
        out.append(v)
    if not out:
        raise ConfigError(key, "grid must be nonempty")
    return tuple(out)


def _scalar(conv):
    def parse(key, raw):
        vals = conv(key, raw)
        if len(vals) != 1:
            raise ConfigError(key, "expected a single value")
        return vals[0]
    return parse


def _d(key, raw):
    v = raw.strip()
    if v == "sqrt":
        return v
    try:
        d = int(v)
    except ValueError:
        raise ConfigError(key, f"expected 'sqrt' or a positive integer, got {v!r}") from None
    if d < 1:
        raise ConfigError(key, "d must be positive")
    return d


SCHEMA = {
    "experiment": {
        "estimator": ("estimator", lambda k, r: _choice(k, r, ESTIMATORS)),
        "trials": ("trials", _scalar(_ints)),
        "master_seed": ("master_seed", _scalar(_ints)),
        "beta_length": ("beta_length", _scalar(_floats)),
        "sigma_eps": ("sigma_eps", _scalar(_floats)),
        "entry_dist": ("entry_dist", lambda k, r: _choice(k, r, ("gaussian", "rademacher"))),
        "beta_per_trial": ("beta_per_trial", _bool),
        "output_dir": ("output_dir", lambda k, r: r.strip()),
    },
    "dims": {
        "m": ("m", _ints),
        "n": ("n", _ints),
        "n_rescaled": ("n_rescaled", _floats),
        "d": ("d", _d),
    },
    "A": {
        "family": ("A_family", lambda k, r: _choice(k, r, A_FAMILIES)),
        "rho": ("A_rho", _scalar(_floats)),
        "hub_block": ("A_hub_block", _scalar(_ints)),
        "n_blocks": ("A_n_blocks", _scalar(_ints)),
    },
    "B": {
        "family": ("B_family", lambda k, r: _choice(k, r, B_FAMILIES)),
        "rho": ("B_rho", _scalar(_floats)),
        "seed": ("B_seed", _scalar(_ints)),
        "tau_B": ("tau_B", _floats),
    },
    "penalty": {
        "f": ("f", _floats),
        "omega_factor": ("omega_factor", _scalar(_floats)),
        "zeta": ("zeta", _zetas),
        "R_mult": ("R_mult", _floats),
        "lambda_conic": ("lambda_conic", _scalar(_floats)),
    },
    "solver": {
        "gd_max_iters": ("gd_max_iters", _scalar(_ints)),
        "gd_tol": ("gd_tol", _scalar(_floats)),
        "conic_max_iters": ("conic_max_iters", _scalar(_ints)),
        "conic_tol": ("conic_tol", _scalar(_floats)),
    },
    "trace": {
        "rho": ("trace_rho", _floats),
        "inits": ("trace_inits", _scalar(_ints)),
        "f": ("trace_f", _scalar(_floats)),
        "max_iters": ("trace_max_iters", _scalar(_ints)),
        "tol": ("trace_tol", _scalar(_floats)),
    },
}


_KEY_NAMES = {attr: f"{sec}.{key}" for sec, keys in SCHEMA.items()
              for key, (attr, _) in keys.items()}


def validate(cfg):
    """Cross-field checks; raises :class:`ConfigError`."""
    if not cfg.m or any(m < 2 for m in cfg.m):
        raise ConfigError("dims.m", "need a nonempty list of m >= 2")
    if cfg.n and cfg.n_rescaled:
        raise ConfigError("dims.n", "give at most one of dims.n and dims.n_rescaled")
    if any(v <= 0 for v in cfg.n + cfg.n_rescaled):
        raise ConfigError("dims.n", "sample sizes must be positive")
    for m in cfg.m:
        if cfg.d_for(m) > m:
            raise ConfigError("dims.d", f"d={cfg.d_for(m)} exceeds m={m}")
    if cfg.trials < 1:
        raise ConfigError("experiment.trials", "trials must be at least 1")
    if cfg.beta_length <= 0:
        raise ConfigError("experiment.beta_length", "must be positive")
    if cfg.sigma_eps < 0:
        raise ConfigError("experiment.sigma_eps", "must be nonnegative")
    if any(t < 0 for t in cfg.tau_B):
        raise ConfigError("B.tau_B", "must be nonnegative")
    if cfg.B_family == "zero" and any(t != 0 for t in cfg.tau_B):
        raise ConfigError("B.tau_B", "family 'zero' requires tau_B = 0")
    if cfg.A_family == "ar1" and not abs(cfg.A_rho) < 1:
        raise ConfigError("A.rho", "AR(1) needs |rho| < 1")
    if cfg.A_family == "star_block" and not 0 < cfg.A_rho < 1:
        raise ConfigError("A.rho", "Star-Block needs 0 < rho < 1")
    if cfg.B_family == "ar1" and not abs(cfg.B_rho) < 1:
        raise ConfigError("B.rho", "AR(1) needs |rho| < 1")
    if any(f <= 0 for f in cfg.f):
        raise ConfigError("penalty.f", "penalty factors must be positive")
    if any(r <= 0 for r in cfg.R_mult):
        raise ConfigError("penalty.R_mult", "radius multipliers must be positive")
    if cfg.omega_factor < 0:
        raise ConfigError("penalty.omega_factor", "must be nonnegative")
    if cfg.lambda_conic <= 0:
        raise ConfigError("penalty.lambda_conic", "must be positive")
    for key in ("gd_max_iters", "conic_max_iters", "trace_max_iters", "trace_inits",
                "gd_tol", "conic_tol", "trace_tol"):
        if getattr(cfg, key) <= 0:
            raise ConfigError(_KEY_NAMES[key], "must be positive")
    return cfg


def parse_config(text, base=None):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", f"malformed file: {exc}") from None
    kw = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in parser.items(section):
            full = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ConfigError(full, "unknown key")
            attr, conv = SCHEMA[section][key]
            kw[attr] = conv(full, raw)
    cfg = replace(base or ExperimentConfig(), **kw)
    return validate(cfg)


def load_config(path, base=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    return parse_config(text, base)
