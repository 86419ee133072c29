"""Shared domain types, unit conventions, and configuration parsing.

Internal units: hbar = c = 1 and the mass of particle 1 is the mass unit,
so every energy in the code is in units of m1*c^2.  Conversion factors to
laboratory units are reporting metadata only and never enter a kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    """Raised on parse failures or invariant violations, naming the field."""


@dataclass(frozen=True)
class UnitSystem:
    """Internal unit conventions (all fixed; kept explicit for reporting)."""

    hbar: float = 1.0
    c: float = 1.0
    mass_scale: float = 1.0
    # Documentation-only: with m1 = electron mass, 1 internal energy unit
    # is 510998.95 eV and 1 internal time unit is hbar/(m1 c^2) ~ 1.288e-21 s.
    notes: str = "energies in units of m1*c^2; lengths in units of hbar/(m1*c)"

    def __post_init__(self):
        if (self.hbar, self.c, self.mass_scale) != (1.0, 1.0, 1.0):
            raise ConfigError("UnitSystem is fixed to hbar = c = mass_scale = 1")


@dataclass(frozen=True)
class ParticleParams:
    """Rest mass (units of m1) and charge of one particle."""

    mass: float
    charge: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class CouplingSpec:
    """Dimensionless coupling alpha_eff = -e1*e2/(hbar*c).

    Positive alpha_eff means attraction; every kernel uses the product
    e1*e2 = -alpha_eff (hbar = c = 1), recorded here once.
    """

    alpha_eff: float
    attractive_positive: bool = True  # sign convention flag

    @property
    def e1e2(self) -> float:
        return -self.alpha_eff


@dataclass(frozen=True)
class GridSpec:
    """Periodic cubic grid for the relative coordinate."""

    n: int
    box_length: float
    softening: float | None = None

    def __post_init__(self):
        if self.n < 8:
            raise ConfigError(f"grid_n must be >= 8, got {self.n}")
        if self.n % 2:
            raise ConfigError(f"grid_n must be even, got {self.n}")
        if not self.box_length > 0:
            raise ConfigError(f"box_length must be positive, got {self.box_length}")
        if self.softening is None:
            object.__setattr__(self, "softening", self.spacing / 2)
        if self.softening < 0:
            raise ConfigError(f"softening must be >= 0, got {self.softening}")
        if self.softening >= self.box_length / 4:
            raise ConfigError(
                f"softening must be < box_length/4, got {self.softening}"
            )

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    def axis_coords(self):
        """Minimum-image coordinates along one axis."""
        import numpy as np

        x = np.arange(self.n) * self.spacing
        return np.where(x > self.box_length / 2, x - self.box_length, x)

    def axis_momenta(self):
        """Fourier modes 2*pi*k/L along one axis (fft ordering)."""
        import numpy as np

        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)


TASKS = ("spectrum", "perturb", "dynamics", "verify", "converge")

# Schema: key -> (type, required, default).  Every numeric quantity has
# exactly one key; there are no aliases.
_SCHEMA = {
    "mass2": (float, True, None),
    "alpha_eff": (float, True, None),
    "grid_n": (int, True, None),
    "box_length": (float, True, None),
    "softening": (float, False, None),  # default h/2 applied by GridSpec
    "task": (str, True, None),
    "output_path": (str, False, "result.json"),
    "n_states": (int, False, 1),
    "tol": (float, False, 1e-8),
    "terms": (str, False, "coulomb,gaunt,retardation"),
    "projection": (str, False, "positive_energy"),
    "seed": (int, False, 0),
    "save_vectors": (str, False, ""),  # binary eigenvector dump path
    "light_speed": (float, False, 1.0),  # classical dynamics only
    "dt": (float, False, 0.0),  # 0 -> heuristic choice
    "n_steps": (int, False, 1000),
    "orbit_radius": (float, False, 1.0),
    "converge_axis": (str, False, "softening"),
    "converge_levels": (str, False, ""),
}


@dataclass
class Config:
    units: UnitSystem
    particle1: ParticleParams
    particle2: ParticleParams
    coupling: CouplingSpec
    grid: GridSpec
    task: str
    output_path: str
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "mass2": self.particle2.mass,
            "alpha_eff": self.coupling.alpha_eff,
            "grid_n": self.grid.n,
            "box_length": self.grid.box_length,
            "softening": self.grid.softening,
            "task": self.task,
            "output_path": self.output_path,
        }
        d.update(self.extras)
        return d


def _parse_value(key: str, raw: str, lineno: int):
    typ = _SCHEMA[key][0]
    try:
        if typ is int:
            v = int(raw)
        elif typ is float:
            v = float(raw)
        else:
            v = raw
    except ValueError:
        raise ConfigError(
            f"line {lineno}: cannot parse {key}={raw!r} as {typ.__name__}"
        ) from None
    return v


def parse_config_text(text: str) -> Config:
    seen: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen[key] = _parse_value(key, raw, lineno)

    for key, (_, required, default) in _SCHEMA.items():
        if key not in seen:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            if default is not None:
                seen[key] = default

    task = seen["task"]
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")

    alpha = seen["alpha_eff"]
    # Charges chosen so e1*e2 = -alpha_eff with e1 = -e2 for attraction.
    e = abs(alpha) ** 0.5
    p1 = ParticleParams(mass=1.0, charge=e)
    p2 = ParticleParams(mass=seen["mass2"], charge=(-e if alpha >= 0 else e))

    grid = GridSpec(
        n=seen["grid_n"],
        box_length=seen["box_length"],
        softening=seen.get("softening"),
    )
    extras = {
        k: v
        for k, v in seen.items()
        if k
        not in (
            "mass2",
            "alpha_eff",
            "grid_n",
            "box_length",
            "softening",
            "task",
            "output_path",
        )
    }
    return Config(
        units=UnitSystem(),
        particle1=p1,
        particle2=p2,
        coupling=CouplingSpec(alpha_eff=alpha),
        grid=grid,
        task=task,
        output_path=seen["output_path"],
        extras=extras,
    )


def load_config(path: str | Path) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())


def dump_config(cfg: Config) -> str:
    """Serialize so that parse_config_text round-trips to an equal Config."""
    lines = [f"{k} = {v}" for k, v in cfg.as_dict().items()]
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: Config, overrides: dict[str, str]) -> Config:
    """Re-parse the config with key=value overrides applied and re-validated."""
    d = cfg.as_dict()
    for k, v in overrides.items():
        if k not in _SCHEMA:
            raise ConfigError(f"unknown override key {k!r}")
        d[k] = v
    text = "\n".join(f"{k} = {v}" for k, v in d.items())
    return parse_config_text(text)
