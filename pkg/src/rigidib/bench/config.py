"""Run configuration: an INI-style file with ``key = value`` sections.

Example::

    [grid]
    n = 32 32 32
    h = 1.0
    x = periodic
    y = periodic
    z = noslip              ; or: velocity 1 0 0 | stress -2 0 | periodic

    [body]
    model = shell162        ; or: markers = bodies.csv
    velocity = 1 0 0

    [physics]
    rho = 0
    eta = 1
    dt = inf                ; or: beta = 0.5

    [solver]
    outer_tol = 1e-9
    mobility_source = fit

    [bench]
    levels = 2              ; forwarded to the selected benchmark

    [output]
    dir = out

Problems are reported as ``path:line: message`` through :class:`ConfigError`.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

SECTIONS = ("grid", "body", "physics", "solver", "bench", "output")
AXES = "xyz"


class ConfigError(ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        self.path, self.line = path, line
        loc = f"{path}:{line}: " if path is not None and line is not None else (f"{path}: " if path else "")
        super().__init__(loc + message)


@dataclass
class GridConfig:
    n: tuple = (32, 32, 32)
    h: float = 1.0
    bc: tuple = ()          # per axis: ("periodic",) | ("noslip",) | ("velocity", v...) | ("stress", lo, hi)


@dataclass
class BodyConfig:
    model: str = "shell162"
    markers: str | None = None
    spacing: float | None = None
    center: tuple | None = None
    velocity: tuple | None = None


@dataclass
class PhysicsConfig:
    rho: float = 0.0
    eta: float = 1.0
    dt: float = math.inf
    beta: float | None = None


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    body: BodyConfig = field(default_factory=BodyConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    solver: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)
    output: str = "out"
    source: str | None = None
    bench_lines: dict = field(default_factory=dict, repr=False)

    # -- construction of solver objects ----------------------------------------
    def grid_spec(self):
        from ..grid import GridSpec, NormalStress, Periodic, VelocityDirichlet
        sides = []
        for spec in self.grid.bc:
            kind = spec[0]
            if kind == "periodic":
                sides.append((Periodic(), Periodic()))
            elif kind == "noslip":
                sides.append((VelocityDirichlet(), VelocityDirichlet()))
            elif kind == "velocity":
                v = VelocityDirichlet(tuple(spec[1:]))
                sides.append((v, v))
            else:
                sides.append((NormalStress(spec[1]), NormalStress(spec[2])))
        return GridSpec(self.grid.n, self.grid.h, tuple(sides))

    def stokes_params(self):
        from ..stokes import StokesParams
        p = self.physics
        if p.beta is not None:
            return StokesParams.from_beta(p.beta, self.grid.h, p.eta, p.rho)
        return StokesParams(p.rho, p.eta, p.dt)

    def solver_config(self):
        from ..rigid import SchurPrecondConfig
        return SchurPrecondConfig(**self.solver)

    def markers(self):
        import numpy as np
        from ..kernels import MarkerSet
        from .drag import BodyModel, get_model
        d = len(self.grid.n)
        lengths = np.array(self.grid.n, float) * self.grid.h
        if self.body.markers:
            ms = MarkerSet.read_csv(self.body.markers)
            if ms.dim != d:
                raise ConfigError("marker file dimension does not match the grid", self.source)
            if self.body.velocity is not None:
                ms.vel[:] = np.asarray(self.body.velocity, float)
            return ms
        model = get_model(self.body.model)
        if self.body.spacing is not None:
            model = BodyModel(model.kind, model.level, model.count, self.body.spacing)
        if model.dim != d:
            raise ConfigError(f"body model {self.body.model} is {model.dim}D but the grid is {d}D", self.source)
        center = 0.5 * lengths if self.body.center is None else np.asarray(self.body.center, float)
        pos = model.positions(self.grid.h, center)
        vel = np.zeros(d) if self.body.velocity is None else np.asarray(self.body.velocity, float)
        return MarkerSet(pos, np.tile(vel, (len(pos), 1)))

    # -- echo ---------------------------------------------------------------------
    def to_text(self) -> str:
        """The effective configuration, defaults included."""
        g, b, p = self.grid, self.body, self.physics
        lines = ["[grid]", f"n = {' '.join(map(str, g.n))}", f"h = {g.h!r}"]
        for ax, spec in zip(AXES, g.bc):
            lines.append(f"{ax} = {' '.join(str(s) for s in spec)}")
        lines += ["", "[body]"]
        if b.markers:
            lines.append(f"markers = {b.markers}")
        else:
            lines.append(f"model = {b.model}")
        for k in ("spacing", "center", "velocity"):
            v = getattr(b, k)
            if v is not None:
                lines.append(f"{k} = {_show(v)}")
        lines += ["", "[physics]", f"rho = {p.rho!r}", f"eta = {p.eta!r}"]
        lines.append(f"beta = {p.beta!r}" if p.beta is not None else f"dt = {p.dt!r}")
        lines += ["", "[solver]"]
        from ..rigid import SchurPrecondConfig
        eff = dataclasses.asdict(SchurPrecondConfig(**self.solver))
        lines += [f"{k} = {_show(v)}" for k, v in eff.items()]
        lines += ["", "[bench]"] + [f"{k} = {_show(v)}" for k, v in self.bench.items()]
        lines += ["", "[output]", f"dir = {self.output}", ""]
        return "\n".join(lines)


def _show(v):
    if isinstance(v, (tuple, list)):
        return " ".join(_show(x) for x in v)
    return str(v)


# ----------------------------------------------------------------------------
# parsing

def _key_lines(text: str) -> dict:
    """``(section, key) -> line number`` for every assignment in the file."""
    out, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and section is not None:
            out[(section, m.group(1).strip().lower())] = i
    return out


def parse_value(text: str):
    """Scalar or whitespace-separated list of numbers / words."""
    parts = text.replace(",", " ").split()
    vals = [_scalar(p) for p in parts]
    if len(vals) == 1:
        return vals[0]
    return tuple(vals)


def _scalar(s: str):
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null"):
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _floats(v, what):
    vals = v if isinstance(v, tuple) else (v,)
    try:
        return tuple(float(x) for x in vals)
    except (TypeError, ValueError):
        raise ValueError(f"{what}: expected numbers, got {v!r}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", path) from None
    return parse_config(text, path)


def parse_config(text: str, path="<config>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("assignment before the first [section] header", path, e.lineno) from None
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", path, e.lineno) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", path, e.lineno) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError("malformed line (expected 'key = value')", path, lineno) from None
    lines = _key_lines(text)
    cfg = RunConfig(source=str(path))

    def err(section, key, msg):
        return ConfigError(f"[{section}] {key}: {msg}", path, lines.get((section, key)))

    for sec in cp.sections():
        if sec.lower() not in SECTIONS:
            ln = next((i for i, l in enumerate(text.splitlines(), 1) if l.strip().lower() == f"[{sec.lower()}]"),
                      None)
            raise ConfigError(f"unknown section [{sec}]; expected one of {', '.join(SECTIONS)}", path, ln)

    # grid
    if cp.has_section("grid"):
        s = cp["grid"]
        known = {"n", "h", *AXES}
        for k in s:
            if k not in known:
                raise err("grid", k, "unknown key")
        if "n" in s:
            try:
                n = tuple(int(x) for x in s["n"].replace(",", " ").split())
            except ValueError:
                raise err("grid", "n", "expected integers") from None
            if len(n) not in (2, 3) or any(v < 2 for v in n):
                raise err("grid", "n", "need 2 or 3 cell counts, each >= 2")
            cfg.grid.n = n
        if "h" in s:
            try:
                cfg.grid.h = float(s["h"])
            except ValueError:
                raise err("grid", "h", "expected a number") from None
            if not cfg.grid.h > 0:
                raise err("grid", "h", "must be positive")
        d = len(cfg.grid.n)
        bcs = []
        for ax in AXES[:d]:
            if ax not in s:
                bcs.append(("periodic",))
                continue
            parts = s[ax].split()
            kind = parts[0].lower()
            try:
                if kind in ("periodic", "noslip"):
                    if len(parts) != 1:
                        raise ValueError(f"'{kind}' takes no values")
                    bcs.append((kind,))
                elif kind == "velocity":
                    v = _floats(tuple(parts[1:]), "velocity")
                    if len(v) != d:
                        raise ValueError(f"velocity needs {d} components")
                    bcs.append(("velocity", *v))
                elif kind == "stress":
                    t = _floats(tuple(parts[1:]), "stress")
                    if len(t) != 2:
                        raise ValueError("stress needs the low-side and high-side normal tractions")
                    bcs.append(("stress", *t))
                else:
                    raise ValueError("expected periodic, noslip, velocity ... or stress ...")
            except ValueError as e:
                raise err("grid", ax, str(e)) from None
        for ax in AXES[d:]:
            if ax in s:
                raise err("grid", ax, f"the grid is {d}D")
        cfg.grid.bc = tuple(bcs)
    else:
        cfg.grid.bc = tuple(("periodic",) for _ in cfg.grid.n)
    d = len(cfg.grid.n)

    # body
    if cp.has_section("body"):
        s = cp["body"]
        for k in s:
            if k not in {"model", "markers", "spacing", "center", "velocity"}:
                raise err("body", k, "unknown key")
        if "model" in s:
            from .drag import MODELS
            if s["model"] not in MODELS:
                raise err("body", "model", f"unknown model; choose from {', '.join(sorted(MODELS))}")
            cfg.body.model = s["model"]
        if "markers" in s:
            p = Path(s["markers"])
            if not p.is_absolute():
                p = Path(path).parent / p
            if not p.exists():
                raise err("body", "markers", f"file not found: {p}")
            cfg.body.markers = str(p)
        for k, dims in (("center", d), ("velocity", d)):
            if k in s:
                try:
                    v = _floats(parse_value(s[k]), k)
                except ValueError as e:
                    raise err("body", k, str(e)) from None
                if len(v) != dims:
                    raise err("body", k, f"need {dims} components")
                setattr(cfg.body, k, v)
        if "spacing" in s:
            try:
                cfg.body.spacing = float(s["spacing"])
            except ValueError:
                raise err("body", "spacing", "expected a number") from None
            if not cfg.body.spacing > 0:
                raise err("body", "spacing", "must be positive")

    # physics
    if cp.has_section("physics"):
        s = cp["physics"]
        for k in s:
            if k not in {"rho", "eta", "dt", "beta"}:
                raise err("physics", k, "unknown key")
            try:
                val = float(s[k])
            except ValueError:
                raise err("physics", k, "expected a number (inf allowed)") from None
            if k in ("eta", "dt", "beta") and not val > 0:
                raise err("physics", k, "must be positive")
            if k == "rho" and val < 0:
                raise err("physics", k, "must be non-negative")
            setattr(cfg.physics, k, val)
        if "dt" in s and "beta" in s:
            raise err("physics", "beta", "give either dt or beta, not both")

    # solver
    if cp.has_section("solver"):
        from ..rigid import SchurPrecondConfig
        fields = {f.name for f in dataclasses.fields(SchurPrecondConfig)}
        opts = {}
        for k in cp["solver"]:
            if k not in fields:
                raise err("solver", k, f"unknown key; expected one of {', '.join(sorted(fields))}")
            opts[k] = parse_value(cp["solver"][k])
        try:
            SchurPrecondConfig(**opts)
        except (TypeError, ValueError) as e:
            bad = next((k for k in opts if k in str(e)), next(iter(opts), None))
            raise err("solver", bad, str(e)) from None
        cfg.solver = opts

    if cp.has_section("bench"):
        cfg.bench = {k: parse_value(v) for k, v in cp["bench"].items()}
        cfg.bench_lines = {k: lines.get(("bench", k)) for k in cfg.bench}
    if cp.has_section("output"):
        for k in cp["output"]:
            if k != "dir":
                raise err("output", k, "unknown key")
        cfg.output = cp["output"].get("dir", cfg.output)
    return cfg


def bench_kwargs(cfg: RunConfig, func, overrides: dict | None = None) -> dict:
    """Keyword arguments for ``func`` from the [bench] section (validated
    against its signature) updated with ``overrides``."""
    import inspect
    params = inspect.signature(func).parameters
    out = {}
    for k, v in cfg.bench.items():
        if k not in params or k == "log":
            raise ConfigError(f"[bench] {k}: not an option of this benchmark "
                              f"(options: {', '.join(p for p in params if p != 'log')})",
                              cfg.source, cfg.bench_lines.get(k))
        default = params[k].default
        if isinstance(default, tuple) and not isinstance(v, tuple):
            v = (v,)
        out[k] = v
    out.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return out
