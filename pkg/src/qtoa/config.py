"""JSON run configuration: parsing, validation and defaults.

Example::

    {
      "potential": {"harmonic": {"omega": 1}},
      "scheme": "weyl",
      "params": {"mass": 1, "hbar": 1},
      "grid": {"l": 6, "N": 512},
      "evolution": {"dt": 1e-5, "horizon": 3.0},
      "selection": {"classification": "antinodal", "count": 3}
    }

Unknown keys anywhere are rejected; every validation error names the
offending field.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .core import Free, Harmonic, PhysicalParams, Polynomial, Sinusoidal
from .errors import ConfigError
from .kernels import Deformed, GeneralPolynomial, Ordering, quadratic_deformation
from .quadrature import QuadPolicy

__all__ = [
    "RunConfig",
    "EvolutionSettings",
    "SelectionSettings",
    "KernelSettings",
    "ConjugacySettings",
    "load_config",
    "parse_config",
]

_SCHEME_ALIASES = {
    "weyl": Ordering.WEYL,
    "symmetric": Ordering.SYMMETRIC,
    "simple_symmetric": Ordering.SYMMETRIC,
    "born_jordan": Ordering.BORN_JORDAN,
    "bornjordan": Ordering.BORN_JORDAN,
}


@dataclass(frozen=True)
class EvolutionSettings:
    dt: float = 1e-5
    horizon: float = 3.0
    min_samples: int = 500
    record_density: bool = True


@dataclass(frozen=True)
class SelectionSettings:
    indices: tuple | None = None
    classification: str | None = None
    count: int = 3
    max_edge_ratio: float = 0.25


@dataclass(frozen=True)
class KernelSettings:
    method: str = "auto"
    epsabs: float = 1e-10
    epsrel: float = 1e-8
    dump_range: tuple = (-3.0, 3.0)
    dump_points: int = 21

    @property
    def policy(self) -> QuadPolicy:
        return QuadPolicy(self.epsabs, self.epsrel)


@dataclass(frozen=True)
class ConjugacySettings:
    box: tuple = (-2.0, 2.0)
    h: float = 1e-3
    samples: int = 15


@dataclass(frozen=True)
class RunConfig:
    potential: object
    scheme: object
    params: PhysicalParams = PhysicalParams()
    l: float = 6.0
    N: int = 512
    evolution: EvolutionSettings = EvolutionSettings()
    selection: SelectionSettings = SelectionSettings()
    kernel: KernelSettings = KernelSettings()
    conjugacy: ConjugacySettings = ConjugacySettings()
    sweep_alphas: tuple = (0.0, 1.0, 1e2, 1e4, 2e4)
    arrival_point: float = 0.0
    output: str | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def echo(self) -> dict:
        """Resolved configuration as plain JSON-compatible data."""
        return {
            "potential": _describe_potential(self.potential),
            "scheme": _describe_scheme(self.scheme),
            "params": {"mass": self.params.mass, "hbar": self.params.hbar},
            "grid": {"l": self.l, "N": self.N},
            "evolution": asdict(self.evolution),
            "selection": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.selection).items()},
            "kernel": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.kernel).items()},
            "conjugacy": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.conjugacy).items()},
            "sweep": {"alphas": list(self.sweep_alphas)},
            "arrival_point": self.arrival_point,
            "output": self.output,
        }


def _describe_potential(V):
    if isinstance(V, Free):
        return {"free": {}}
    if isinstance(V, Harmonic):
        return {"harmonic": {"omega": V.omega, "mass": V.mass}}
    if isinstance(V, Sinusoidal):
        return {"sinusoidal": {"amplitude": V.amplitude, "wavenumber": V.wavenumber}}
    return {"polynomial": {"coefficients": list(V.coefficients)}}


def _describe_scheme(s):
    if isinstance(s, Ordering):
        return s.value
    if isinstance(s, Deformed):
        return {"deformed": {"base": _describe_scheme(s.base), "omega": s.deformation.description}}
    return {"general": s.name}


# ---------------------------------------------------------------------------
# field helpers


def _object(value, where):
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a JSON object")
    return value


def _check_keys(obj, allowed, where):
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _number(obj, key, where, default=None, positive=False, nonnegative=False):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{where}.{key} is required")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number")
    if positive and not v > 0:
        raise ConfigError(f"{key} must be positive")
    if nonnegative and v < 0:
        raise ConfigError(f"{key} must be non-negative")
    return float(v)


def _integer(obj, key, where, default, minimum=None):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}.{key} must be at least {minimum}")
    return v


def _boolean(obj, key, where, default):
    if key not in obj:
        return default
    if not isinstance(obj[key], bool):
        raise ConfigError(f"{where}.{key} must be true or false")
    return obj[key]


def _single_entry(value, where):
    """Accept "name" or {"name": {...}}."""
    if isinstance(value, str):
        return value, {}
    obj = _object(value, where)
    if len(obj) != 1:
        raise ConfigError(f"{where} must have exactly one entry")
    (name, body), = obj.items()
    return name, _object(body, f"{where}.{name}") if body is not None else {}


# ---------------------------------------------------------------------------
# sections


def _potential(value, params):
    name, body = _single_entry(value, "potential")
    where = f"potential.{name}"
    if name == "free":
        _check_keys(body, (), where)
        return Free()
    if name == "harmonic":
        _check_keys(body, ("omega", "mass"), where)
        omega = _number(body, "omega", where, 1.0, positive=True)
        mass = _number(body, "mass", where, params.mass, positive=True)
        return Harmonic(omega, mass)
    if name == "sinusoidal":
        _check_keys(body, ("amplitude", "wavenumber"), where)
        return Sinusoidal(_number(body, "amplitude", where, 1.0), _number(body, "wavenumber", where, 1.0))
    if name == "polynomial":
        _check_keys(body, ("coefficients",), where)
        coeffs = body.get("coefficients")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{where}.coefficients must be a non-empty list")
        for c in coeffs:
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ConfigError(f"{where}.coefficients must contain numbers")
        return Polynomial(tuple(coeffs))
    raise ConfigError(f"unknown potential {name!r} (expected free, harmonic, sinusoidal or polynomial)")


def _scheme(value, where="scheme"):
    if isinstance(value, str):
        key = value.lower().replace("-", "_")
        if key not in _SCHEME_ALIASES:
            raise ConfigError(f"unknown {where} {value!r}")
        return _SCHEME_ALIASES[key]
    name, body = _single_entry(value, where)
    sub = f"{where}.{name}"
    if name == "deformed":
        _check_keys(body, ("base", "alpha"), sub)
        if "base" not in body:
            raise ConfigError(f"{sub}.base is required")
        alpha = _number(body, "alpha", sub, nonnegative=True)
        return Deformed(_scheme(body["base"], f"{sub}.base"), quadratic_deformation(alpha))
    if name == "general":
        _check_keys(body, ("rows", "family"), sub)
        if "family" in body:
            family = body["family"]
            makers = {"weyl": GeneralPolynomial.weyl, "symmetric": GeneralPolynomial.symmetric,
                      "born_jordan": GeneralPolynomial.born_jordan}
            if family not in makers:
                raise ConfigError(f"{sub}.family must be one of {', '.join(makers)}")
            return makers[family]()
        rows = body.get("rows")
        if not isinstance(rows, list) or not rows:
            raise ConfigError(f"{sub}.rows must be a non-empty list of coefficient rows")
        return GeneralPolynomial(tuple(tuple(r) for r in rows), "general")
    raise ConfigError(f"unknown {where} {name!r}")


def parse_config(data: dict) -> RunConfig:
    top = _object(data, "config")
    _check_keys(
        top,
        ("potential", "scheme", "params", "grid", "evolution", "selection", "kernel", "conjugacy", "sweep",
         "arrival_point", "output"),
        "config",
    )
    p = _object(top.get("params", {}), "params")
    _check_keys(p, ("mass", "hbar"), "params")
    params = PhysicalParams(_number(p, "mass", "params", 1.0, positive=True), _number(p, "hbar", "params", 1.0, positive=True))

    if "potential" not in top:
        raise ConfigError("potential is required")
    potential = _potential(top["potential"], params)
    scheme = _scheme(top.get("scheme", "weyl"))

    g = _object(top.get("grid", {}), "grid")
    _check_keys(g, ("l", "N"), "grid")
    l = _number(g, "l", "grid", 6.0, positive=True)
    N = _integer(g, "N", "grid", 512, minimum=2)
    if N % 2:
        raise ConfigError("grid.N must be even")

    e = _object(top.get("evolution", {}), "evolution")
    _check_keys(e, ("dt", "horizon", "min_samples", "record_density"), "evolution")
    evolution = EvolutionSettings(
        _number(e, "dt", "evolution", 1e-5, positive=True),
        _number(e, "horizon", "evolution", 3.0, positive=True),
        _integer(e, "min_samples", "evolution", 500, minimum=3),
        _boolean(e, "record_density", "evolution", True),
    )

    s = _object(top.get("selection", {}), "selection")
    _check_keys(s, ("indices", "classification", "count", "max_edge_ratio"), "selection")
    indices = s.get("indices")
    if indices is not None:
        if not isinstance(indices, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in indices):
            raise ConfigError("selection.indices must be a list of integers")
        if not all(0 <= i < N for i in indices):
            raise ConfigError(f"selection.indices must lie in [0, {N})")
        indices = tuple(indices)
    cls = s.get("classification")
    if cls is not None and cls not in ("nodal", "antinodal", "unclassified"):
        raise ConfigError("selection.classification must be nodal, antinodal or unclassified")
    selection = SelectionSettings(
        indices, cls, _integer(s, "count", "selection", 3, minimum=1),
        _number(s, "max_edge_ratio", "selection", 0.25, positive=True),
    )

    k = _object(top.get("kernel", {}), "kernel")
    _check_keys(k, ("method", "epsabs", "epsrel", "dump_range", "dump_points"), "kernel")
    method = k.get("method", "auto")
    if method not in ("auto", "closed", "quadrature"):
        raise ConfigError("kernel.method must be auto, closed or quadrature")
    kernel = KernelSettings(
        method,
        _number(k, "epsabs", "kernel", 1e-10, positive=True),
        _number(k, "epsrel", "kernel", 1e-8, positive=True),
        _range(k, "dump_range", "kernel", (-3.0, 3.0)),
        _integer(k, "dump_points", "kernel", 21, minimum=1),
    )

    c = _object(top.get("conjugacy", {}), "conjugacy")
    _check_keys(c, ("box", "h", "samples"), "conjugacy")
    conjugacy = ConjugacySettings(
        _range(c, "box", "conjugacy", (-2.0, 2.0)),
        _number(c, "h", "conjugacy", 1e-3, positive=True),
        _integer(c, "samples", "conjugacy", 15, minimum=1),
    )

    w = _object(top.get("sweep", {}), "sweep")
    _check_keys(w, ("alphas",), "sweep")
    alphas = w.get("alphas", [0.0, 1.0, 1e2, 1e4, 2e4])
    if not isinstance(alphas, list) or not alphas:
        raise ConfigError("sweep.alphas must be a non-empty list")
    for a in alphas:
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not a >= 0:
            raise ConfigError("sweep.alphas must be non-negative numbers")

    arrival_point = _number(top, "arrival_point", "config", 0.0)
    output = top.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a path string")

    return RunConfig(
        potential, scheme, params, l, N, evolution, selection, kernel, conjugacy,
        tuple(float(a) for a in alphas), arrival_point, output, dict(top),
    )


def _range(obj, key, where, default):
    if key not in obj:
        return default
    v = obj[key]
    if (
        not isinstance(v, list) or len(v) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
        or not v[0] < v[1]
    ):
        raise ConfigError(f"{where}.{key} must be [low, high] with low < high")
    return (float(v[0]), float(v[1]))


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)
