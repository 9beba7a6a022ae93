"""Run and audit configuration: strict key-value text with sections.

Every unknown section or key is an error: a silently ignored typo in the
threshold or the time step would invalidate whatever the monitor reports.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Invalid, missing, or unknown configuration content."""


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


@dataclass(frozen=True)
class GridSection:
    dim: int = 2
    n: int = 64


@dataclass(frozen=True)
class SolverSection:
    dt: float = 1e-3
    t_end: float = 1.0
    renormalize_every: int = 1
    dealias: bool = True
    nu: float = 1.0
    lam: float = 1.0
    gamma: float = 1.0
    scheme: str = "IF-RK2"


@dataclass(frozen=True)
class InitSection:
    u_kind: str = "zero"
    u_amplitude: float = 1.0
    u_slope: float = -3.0
    u_seed: int = 0
    d_kind: str = "constant_director"
    d_theta_amplitude: float = 0.1
    d_theta_mode: int = 1
    d_scale: float = 1.0
    d_slope: float = -3.0
    d_band: int = 4
    d_seed: int = 1


@dataclass(frozen=True)
class MonitorSection:
    epsilon0: float = 0.1
    cadence: int = 1
    accumulators: str = "all"


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    checkpoint_interval: int = 0


@dataclass(frozen=True)
class AuditSection:
    corpus_size: int = 100
    seed: int = 1234
    n_low: int = 32
    n_high: int = 64
    band: int = 10
    slope: float = -2.0
    amplitude: float = 1.0


U_KINDS = ("zero", "taylor_green", "random_divfree")
D_KINDS = ("constant_director", "equatorial", "equatorial_random", "near_harmonic")
ACCUMULATOR_TOKENS = ("all", "h2", "bkm", "hw", "llw")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection
    solver: SolverSection
    init: InitSection
    monitor: MonitorSection
    output: OutputSection

    def canonical_text(self) -> str:
        """Deterministic echo of every section (defaults filled in)."""
        out = io.StringIO()
        for sect_name in ("grid", "solver", "init", "monitor", "output"):
            sect = getattr(self, sect_name)
            out.write(f"[{sect_name}]\n")
            for f in fields(sect):
                out.write(f"{f.name} = {getattr(sect, f.name)}\n")
            out.write("\n")
        return out.getvalue()

    def digest(self) -> bytes:
        """SHA-256 over the physics sections (output paths excluded)."""
        out = io.StringIO()
        for sect_name in ("grid", "solver", "init", "monitor"):
            sect = getattr(self, sect_name)
            for f in fields(sect):
                out.write(f"{sect_name}.{f.name}={getattr(sect, f.name)}\n")
        return hashlib.sha256(out.getvalue().encode()).digest()


@dataclass(frozen=True)
class AuditConfig:
    grid: GridSection
    audit: AuditSection


_SECTION_TYPES = {
    "grid": GridSection,
    "solver": SolverSection,
    "init": InitSection,
    "monitor": MonitorSection,
    "output": OutputSection,
    "audit": AuditSection,
}


def _read_sections(text: str, allowed: tuple[str, ...]) -> dict:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from exc
    for sect in parser.sections():
        if sect not in allowed:
            raise ConfigError(f"unknown section [{sect}]")
    built = {}
    for sect in allowed:
        cls = _SECTION_TYPES[sect]
        known = {f.name: f for f in fields(cls)}
        values = {}
        if parser.has_section(sect):
            for key, raw in parser.items(sect):
                if key not in known:
                    raise ConfigError(f"unknown key {sect}.{key}")
                ftype = known[key].type
                try:
                    if ftype in ("bool", bool):
                        values[key] = _bool(raw)
                    elif ftype in ("int", int):
                        values[key] = int(raw)
                    elif ftype in ("float", float):
                        values[key] = float(raw)
                    else:
                        values[key] = raw.strip()
                except ValueError as exc:
                    raise ConfigError(f"{sect}.{key}: {exc}") from exc
        built[sect] = cls(**values)
    return built


def _validate_run(cfg: RunConfig) -> None:
    g, s, i, m, o = cfg.grid, cfg.solver, cfg.init, cfg.monitor, cfg.output
    if g.dim not in (2, 3):
        raise ConfigError("grid.dim must be 2 or 3")
    if g.n < 8 or g.n & (g.n - 1) != 0:
        raise ConfigError("grid.n must be a power of two >= 8")
    if s.dt <= 0:
        raise ConfigError("solver.dt must be > 0")
    if s.t_end < 0:
        raise ConfigError("solver.t_end must be >= 0")
    if s.renormalize_every < 1:
        raise ConfigError("solver.renormalize_every must be >= 1")
    if s.scheme != "IF-RK2":
        raise ConfigError(f"solver.scheme must be IF-RK2, got {s.scheme!r}")
    for name in ("nu", "lam", "gamma"):
        if getattr(s, name) <= 0:
            raise ConfigError(f"solver.{name} must be > 0")
    if i.u_kind not in U_KINDS:
        raise ConfigError(f"init.u_kind must be one of {U_KINDS}, got {i.u_kind!r}")
    if i.d_kind not in D_KINDS:
        raise ConfigError(f"init.d_kind must be one of {D_KINDS}, got {i.d_kind!r}")
    if i.u_amplitude < 0:
        raise ConfigError("init.u_amplitude must be >= 0")
    if i.d_kind == "near_harmonic" and not 0 < i.d_scale <= 1:
        raise ConfigError("init.d_scale must lie in (0, 1]")
    if m.epsilon0 <= 0:
        raise ConfigError("monitor.epsilon0 must be > 0")
    if m.cadence < 1:
        raise ConfigError("monitor.cadence must be >= 1")
    for token in m.accumulators.split(","):
        if token.strip() not in ACCUMULATOR_TOKENS:
            raise ConfigError(
                f"monitor.accumulators token {token.strip()!r} not in {ACCUMULATOR_TOKENS}"
            )
    if o.checkpoint_interval < 0:
        raise ConfigError("output.checkpoint_interval must be >= 0")
    steps = s.t_end / s.dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ConfigError("solver.t_end must be a whole number of steps (t_end/dt integral)")


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a run configuration."""
    built = _read_sections(text, ("grid", "solver", "init", "monitor", "output"))
    cfg = RunConfig(**built)
    _validate_run(cfg)
    return cfg


def parse_audit_config(text: str) -> AuditConfig:
    """Parse and validate an inequality-audit configuration."""
    built = _read_sections(text, ("grid", "audit"))
    cfg = AuditConfig(**built)
    g, a = cfg.grid, cfg.audit
    if g.dim not in (2, 3):
        raise ConfigError("grid.dim must be 2 or 3")
    if a.corpus_size < 1:
        raise ConfigError("audit.corpus_size must be >= 1")
    for name in ("n_low", "n_high"):
        n = getattr(a, name)
        if n < 16 or n & (n - 1) != 0:
            raise ConfigError(f"audit.{name} must be a power of two >= 16")
    if a.n_low > a.n_high:
        raise ConfigError("audit.n_low must not exceed audit.n_high")
    if a.band < 1 or a.band > a.n_low // 3:
        raise ConfigError("audit.band must fit the dealiased range of the coarse grid")
    if a.amplitude < 0:
        raise ConfigError("audit.amplitude must be >= 0")
    return cfg
