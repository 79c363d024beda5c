"""Experiment configuration: a flat, line-oriented key = value format.

Sections are introduced by ``[name]`` headers; ``[arm]``, ``[policy]`` and
``[sigma]`` may repeat, one block per item. Lists are whitespace separated and
matrix rows are separated by ``;``. ``#`` starts a comment.

    [environment]
    theta = 0
    gamma = 5
    [arm]
    variance = 1
    [arm]
    matrix = 2 0.5; 0.5 1
    [policy]
    kind = lcb
    [run]
    horizons = 512 1024 2048
    replications = 2000
    seed = 7
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..environment import EnvironmentSpec, build_environment
from ..errors import ConfigError, ParseError, SemrError, ValidationError
from ..policies import Policy, PolicyKind

NORMALIZATIONS = {"biased": 0, "unbiased": 1}


@dataclass(frozen=True)
class CovarianceSpec:
    """One covariance: ``variance`` (times identity), ``diagonal`` or full ``matrix``."""
    form: str
    values: tuple

    def matrix(self, d: int) -> np.ndarray:
        if self.form == "variance":
            return self.values[0] * np.eye(d)
        if self.form == "diagonal":
            return np.diag(self.values)
        if self.form == "matrix":
            return np.array(self.values, dtype=float)
        rng = np.random.default_rng(int(self.values[1]))
        a = rng.standard_normal((int(self.values[0]),) * 2)
        return a.T @ a + 0.1 * np.eye(int(self.values[0]))

    @property
    def dim(self) -> int | None:
        if self.form == "variance":
            return None
        if self.form == "random":
            return int(self.values[0])
        return len(self.values)


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    epsilon: float = 0.0
    arm: int | None = None

    def build(self) -> Policy:
        return Policy(PolicyKind(self.kind), epsilon=self.epsilon, target=self.arm)


@dataclass(frozen=True)
class ConcentrationSpec:
    m: tuple = (10, 30, 100, 300)
    epsilon: tuple = (0.25, 0.5, 1.0, 2.0)
    linear_factor: float = 1.5
    trials: int = 10_000
    sigmas: tuple = ()


@dataclass(frozen=True)
class LowerBoundSpec:
    sigma1: float = 1.0
    gamma: float = 2.0
    arms: tuple = (2,)
    horizons: tuple = ()
    divergence: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    theta: tuple = (0.0,)
    gamma: float | None = None
    k: int | None = None
    d: int | None = None
    arms: tuple = ()
    policies: tuple = ()
    horizons: tuple = ()
    replications: int = 100
    seed: int = 0
    output: str = "results"
    normalization: str = "biased"
    concentration: ConcentrationSpec | None = None
    lowerbound: LowerBoundSpec | None = None

    @property
    def ddof(self) -> int:
        return NORMALIZATIONS[self.normalization]

    @property
    def dim(self) -> int:
        if self.d is not None:
            return self.d
        for arm in self.arms:
            if arm.dim is not None:
                return arm.dim
        return len(self.theta)

    def build_environment(self) -> EnvironmentSpec:
        if not self.arms:
            raise ValidationError("arm", "at least one [arm] block is required")
        if self.gamma is None:
            raise ValidationError("gamma", "missing")
        d = self.dim
        theta = np.array(self.theta, dtype=float)
        if theta.shape[0] == 1 and d > 1:
            theta = np.full(d, theta[0])
        if theta.shape[0] != d:
            raise ValidationError("theta", f"has {theta.shape[0]} entries, arms are {d}-dimensional")
        try:
            return build_environment(theta, [a.matrix(d) for a in self.arms], self.gamma)
        except SemrError as exc:
            raise ValidationError("arm", str(exc)) from None

    def build_policies(self) -> list:
        return [p.build() for p in self.policies]


# ---------------------------------------------------------------- parsing

_SECTIONS = {
    "environment": {"theta", "gamma", "k", "d"},
    "arm": {"variance", "diagonal", "matrix", "random"},
    "policy": {"kind", "epsilon", "arm"},
    "run": {"horizons", "replications", "seed", "output", "normalization"},
    "concentration": {"m", "epsilon", "linear_factor", "trials"},
    "sigma": {"variance", "diagonal", "matrix", "random"},
    "lowerbound": {"sigma1", "gamma", "arms", "horizons", "divergence"},
}
_REPEATED = {"arm", "policy", "sigma"}


def _numbers(text, line, cast=float):
    try:
        return tuple(cast(tok) for tok in text.split())
    except ValueError:
        raise ParseError(f"expected {cast.__name__} values, got {text!r}", line) from None


def _integer(text, line):
    vals = _numbers(text, line, int)
    if len(vals) != 1:
        raise ParseError(f"expected one integer, got {text!r}", line)
    return vals[0]


def _real(text, line):
    vals = _numbers(text, line)
    if len(vals) != 1:
        raise ParseError(f"expected one number, got {text!r}", line)
    return vals[0]


def _covariance(block, line):
    forms = [key for key in block if key != "__line__"]
    if len(forms) != 1:
        raise ValidationError("arm", f"block at line {line} needs exactly one of variance/diagonal/matrix/random")
    form = forms[0]
    text, at = block[form]
    if form == "matrix":
        rows = tuple(_numbers(r, at) for r in text.split(";"))
        if any(len(r) != len(rows) for r in rows):
            raise ParseError("matrix must be square", at)
        return CovarianceSpec("matrix", rows)
    if form == "random":
        vals = _numbers(text, at, int)
        if len(vals) != 2:
            raise ParseError("random takes '<dim> <seed>'", at)
        return CovarianceSpec("random", vals)
    vals = _numbers(text, at)
    if form == "variance" and len(vals) != 1:
        raise ParseError("variance takes one number", at)
    return CovarianceSpec(form, vals)


def _tokenize(text):
    blocks = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {raw.strip()!r}", lineno)
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ParseError(f"unknown section [{name}]", lineno)
            current = (name, {"__line__": lineno})
            blocks.append(current)
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if current is None:
            raise ParseError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        name, body = current
        if key not in _SECTIONS[name]:
            raise ParseError(f"unknown key {key!r} in [{name}]", lineno)
        if key in body:
            raise ParseError(f"duplicate key {key!r} in [{name}]", lineno)
        body[key] = (value, lineno)
    return blocks


def parse_config(text: str) -> ExperimentConfig:
    blocks = _tokenize(text)
    seen = set()
    for name, body in blocks:
        if name not in _REPEATED and name in seen:
            raise ParseError(f"section [{name}] appears twice", body["__line__"])
        seen.add(name)

    kw = {}
    arms, policies, sigmas = [], [], []
    conc, lower = None, None
    for name, body in blocks:
        get = {k: v for k, v in body.items() if k != "__line__"}
        if name == "environment":
            if "theta" in get:
                kw["theta"] = _numbers(*get["theta"])
            if "gamma" in get:
                kw["gamma"] = _real(*get["gamma"])
            for key in ("k", "d"):
                if key in get:
                    kw[key] = _integer(*get[key])
        elif name == "arm":
            arms.append(_covariance(body, body["__line__"]))
        elif name == "sigma":
            sigmas.append(_covariance(body, body["__line__"]))
        elif name == "policy":
            if "kind" not in get:
                raise ValidationError("kind", f"[policy] at line {body['__line__']} has no kind")
            kind = get["kind"][0]
            if kind not in {p.value for p in PolicyKind}:
                raise ValidationError("kind", f"unknown policy {kind!r}")
            policies.append(PolicySpec(
                kind=kind,
                epsilon=_real(*get["epsilon"]) if "epsilon" in get else 0.0,
                arm=_integer(*get["arm"]) if "arm" in get else None))
        elif name == "run":
            if "horizons" in get:
                kw["horizons"] = _numbers(*get["horizons"], int)
            for key in ("replications", "seed"):
                if key in get:
                    kw[key] = _integer(*get[key])
            for key in ("output", "normalization"):
                if key in get:
                    kw[key] = get[key][0]
        elif name == "concentration":
            ckw = {}
            if "m" in get:
                ckw["m"] = _numbers(*get["m"], int)
            if "epsilon" in get:
                ckw["epsilon"] = _numbers(*get["epsilon"])
            if "linear_factor" in get:
                ckw["linear_factor"] = _real(*get["linear_factor"])
            if "trials" in get:
                ckw["trials"] = _integer(*get["trials"])
            conc = ckw
        elif name == "lowerbound":
            lkw = {}
            for key in ("sigma1", "gamma"):
                if key in get:
                    lkw[key] = _real(*get[key])
            if "arms" in get:
                lkw["arms"] = _numbers(*get["arms"], int)
            if "horizons" in get:
                lkw["horizons"] = _numbers(*get["horizons"], int)
            if "divergence" in get:
                flag = get["divergence"][0].lower()
                if flag not in ("true", "false"):
                    raise ParseError("divergence must be true or false", get["divergence"][1])
                lkw["divergence"] = flag == "true"
            lower = LowerBoundSpec(**lkw)
    if conc is not None or sigmas:
        conc = ConcentrationSpec(**(conc or {}), sigmas=tuple(sigmas))
    cfg = ExperimentConfig(**kw, arms=tuple(arms), policies=tuple(policies),
                           concentration=conc, lowerbound=lower)
    validate(cfg)
    return cfg


def _strictly_increasing(values):
    return all(a < b for a, b in zip(values, values[1:]))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.gamma is not None and not cfg.gamma > 0:
        raise ValidationError("gamma", "must be positive")
    if cfg.k is not None and cfg.arms and cfg.k != len(cfg.arms):
        raise ValidationError("k", f"k = {cfg.k} but {len(cfg.arms)} [arm] blocks given")
    if cfg.d is not None and cfg.d < 1:
        raise ValidationError("d", "must be positive")
    dims = {a.dim for a in cfg.arms} - {None}
    if len(dims) > 1 or (cfg.d is not None and dims and dims != {cfg.d}):
        raise ValidationError("arm", "arms disagree on the dimension")
    if any(n < 1 for n in cfg.horizons):
        raise ValidationError("horizons", "every horizon must be >= 1")
    if not _strictly_increasing(cfg.horizons):
        raise ValidationError("horizons", "horizon grid strictly increasing")
    if cfg.replications < 2:
        raise ValidationError("replications", "must be >= 2")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ValidationError("seed", "must be an unsigned 64-bit integer")
    if cfg.normalization not in NORMALIZATIONS:
        raise ValidationError("normalization", f"must be one of {sorted(NORMALIZATIONS)}")
    for p in cfg.policies:
        if not 0.0 <= p.epsilon <= 1.0:
            raise ValidationError("epsilon", "must lie in [0, 1]")
        if p.arm is not None and cfg.arms and not 0 <= p.arm < len(cfg.arms):
            raise ValidationError("arm", f"oracle arm {p.arm} out of range")
    if cfg.concentration is not None:
        c = cfg.concentration
        if any(m < 2 for m in c.m):
            raise ValidationError("m", "sample sizes must be >= 2")
        if any(e <= 0 for e in c.epsilon):
            raise ValidationError("epsilon", "must be positive")
        if c.trials < 1:
            raise ValidationError("trials", "must be positive")
    if cfg.lowerbound is not None:
        lb = cfg.lowerbound
        if any(k < 2 for k in lb.arms):
            raise ValidationError("arms", "lower-bound construction needs k >= 2")
        if not _strictly_increasing(lb.horizons):
            raise ValidationError("horizons", "horizon grid strictly increasing")
        if not (lb.sigma1 > 0 and lb.gamma > 0):
            raise ValidationError("sigma1", "sigma1 and gamma must be positive")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


# ---------------------------------------------------------------- serialisation

def _fmt(values) -> str:
    return " ".join(repr(float(v)) if isinstance(v, float) else str(v) for v in values)


def _cov_lines(spec: CovarianceSpec) -> str:
    if spec.form == "matrix":
        return "matrix = " + "; ".join(_fmt(row) for row in spec.values)
    return f"{spec.form} = {_fmt(spec.values)}"


def serialize_config(cfg: ExperimentConfig) -> str:
    out = ["[environment]", f"theta = {_fmt(cfg.theta)}"]
    if cfg.gamma is not None:
        out.append(f"gamma = {cfg.gamma!r}")
    for key in ("k", "d"):
        if getattr(cfg, key) is not None:
            out.append(f"{key} = {getattr(cfg, key)}")
    for arm in cfg.arms:
        out += ["[arm]", _cov_lines(arm)]
    for p in cfg.policies:
        out += ["[policy]", f"kind = {p.kind}", f"epsilon = {p.epsilon!r}"]
        if p.arm is not None:
            out.append(f"arm = {p.arm}")
    out += ["[run]", f"horizons = {_fmt(cfg.horizons)}", f"replications = {cfg.replications}",
            f"seed = {cfg.seed}", f"output = {cfg.output}", f"normalization = {cfg.normalization}"]
    if cfg.concentration is not None:
        c = cfg.concentration
        out += ["[concentration]", f"m = {_fmt(c.m)}", f"epsilon = {_fmt(c.epsilon)}",
                f"linear_factor = {c.linear_factor!r}", f"trials = {c.trials}"]
        for s in c.sigmas:
            out += ["[sigma]", _cov_lines(s)]
    if cfg.lowerbound is not None:
        lb = cfg.lowerbound
        out += ["[lowerbound]", f"sigma1 = {lb.sigma1!r}", f"gamma = {lb.gamma!r}",
                f"arms = {_fmt(lb.arms)}", f"divergence = {str(lb.divergence).lower()}"]
        if lb.horizons:
            out.append(f"horizons = {_fmt(lb.horizons)}")
    return "\n".join(out) + "\n"
