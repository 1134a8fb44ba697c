"""Declarative scenario configuration.

Scenarios are described by a flat text format with dotted keys::

    plant.class = parabolic
    plant.lambda.preset = chebyshev
    plant.lambda.amplitude = 21.0
    plant.lambda.order = 5
    grid.n_points = 101
    time.dt = 2.5e-05
    time.total = 2.0
    init.u0.preset = constant
    init.u0.amplitude = 10.0
    init.uhat0 = 20.0
    input.sinusoids = 10,6.283185307179586,1.5707963267948966; 7,16,0
    mhe.horizon = 0.1
    mhe.truncation = 4
    noise.sigma2 = 500.0
    noise.interpretation = variance
    noise.seed = 42
    output.stride = 40

`input.sinusoids` lists terms (amplitude, omega, phase) of
U(t) = sum a * sin(omega t + phase); an empty value means U = 0.
Initial profiles: constant a; sine a*sqrt(2)*sin(pi x); ramp
a*x(1-x) + U(0)*x (boundary compatible by construction).

parse(emit(cfg)) round-trips exactly; emission is key-sorted and uses 17
significant digits so configs diff cleanly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from . import coeffs as cf
from .core import ConfigError, Grid, Profile
from .plant import parabolic_dt_bound

HYPERBOLIC = cf.HYPERBOLIC
PARABOLIC = cf.PARABOLIC


@dataclass(frozen=True)
class SinusoidTerm:
    amplitude: float
    omega: float
    phase: float

    def __call__(self, t):
        return self.amplitude * np.sin(self.omega * np.asarray(t) + self.phase)


@dataclass(frozen=True)
class CoeffSpec:
    """Serializable coefficient preset (see module `coeffs` for semantics)."""

    preset: str
    params: tuple

    def to_univariate(self) -> cf.Coefficient:
        return cf.Coefficient(self.preset, self.params)

    def to_bivariate(self) -> cf.BivariateCoefficient:
        return cf.BivariateCoefficient(self.preset, self.params)


@dataclass(frozen=True)
class ScenarioConfig:
    plant_class: str
    n_points: int
    dt: float
    total_time: float
    horizon: float
    f: CoeffSpec | None = None
    g: CoeffSpec | None = None
    lam: CoeffSpec | None = None
    truncation: int = 4
    u0_preset: str = "constant"
    u0_amplitude: float = 0.0
    uhat0: float = 0.0
    input_terms: tuple[SinusoidTerm, ...] = ()
    sigma2: float = 0.0
    noise_as_std: bool = False
    seed: int = 0
    output_stride: int = 1
    tol: float = 1e-10
    max_iter: int = 200

    # -- derived quantities ---------------------------------------------------

    @property
    def grid(self) -> Grid:
        return Grid(self.n_points)

    def input_fn(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        for term in self.input_terms:
            out = out + term(t)
        return out

    def coefficient_set(self) -> cf.CoefficientSet:
        if self.plant_class == HYPERBOLIC:
            return cf.hyperbolic_coeffs(self.f.to_bivariate(), self.g.to_univariate())
        return cf.parabolic_coeffs(self.lam.to_univariate())

    def u0_profile(self) -> Profile:
        x = self.grid.x
        a = self.u0_amplitude
        if self.u0_preset == "constant":
            vals = np.full_like(x, a)
        elif self.u0_preset == "sine":
            vals = a * math.sqrt(2.0) * np.sin(np.pi * x)
        elif self.u0_preset == "ramp":
            u00 = float(self.input_fn(0.0))
            vals = a * x * (1.0 - x) + u00 * x
        else:
            raise ConfigError(f"unknown initial-profile preset {self.u0_preset!r}")
        return Profile(self.grid, vals)

    def validate(self) -> None:
        if self.plant_class not in (HYPERBOLIC, PARABOLIC):
            raise ConfigError(f"unknown plant class {self.plant_class!r}")
        if self.dt <= 0.0 or self.total_time <= self.horizon:
            raise ConfigError("need dt > 0 and total_time > horizon")
        if self.output_stride < 1:
            raise ConfigError("output stride must be >= 1")
        dx = self.grid.dx
        if self.plant_class == HYPERBOLIC:
            if self.f is None or self.g is None:
                raise ConfigError("hyperbolic scenario needs plant.f and plant.g")
            if self.horizon < 1.0:
                raise ConfigError("hyperbolic MHE horizon must be >= 1")
            if self.dt > dx * (1.0 + 1e-12):
                raise ConfigError(f"CFL violation: dt={self.dt} > dx={dx}")
        else:
            if self.lam is None:
                raise ConfigError("parabolic scenario needs plant.lambda")
            lam_bar = self.coefficient_set().lam_bar(self.n_points)
            bound = parabolic_dt_bound(dx, lam_bar)
            if self.dt > bound * (1.0 + 1e-12):
                raise ConfigError(
                    f"stability violation: dt={self.dt} > {bound:.6e} "
                    f"(dx={dx}, lambda_bar={lam_bar})"
                )
            steps = self.horizon / self.dt
            if abs(steps - round(steps)) > 1e-6:
                raise ConfigError("mhe.horizon must be an integer multiple of dt")
            win = self.horizon / (self.dt * self.output_stride)
            if abs(win - round(win)) > 1e-6:
                raise ConfigError(
                    "mhe.horizon must be an integer multiple of dt * output.stride "
                    "so snapshots align with estimate queries"
                )

    def refined(self, factor: int = 2) -> "ScenarioConfig":
        """Same scenario at dx/factor, with dt and stride rescaled to match."""
        time_factor = factor if self.plant_class == HYPERBOLIC else factor * factor
        return replace(
            self,
            n_points=factor * (self.n_points - 1) + 1,
            dt=self.dt / time_factor,
            output_stride=self.output_stride * time_factor,
        )


# --- text round trip ---------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _coeff_keys(prefix: str, spec: CoeffSpec | None, out: dict) -> None:
    if spec is None:
        return
    out[f"{prefix}.preset"] = spec.preset
    if spec.preset == "constant":
        out[f"{prefix}.value"] = _fmt(spec.params[0])
    elif spec.preset == "polynomial":
        out[f"{prefix}.coeffs"] = ",".join(_fmt(p) for p in spec.params)
    elif spec.preset == "chebyshev":
        out[f"{prefix}.amplitude"] = _fmt(spec.params[0])
        out[f"{prefix}.order"] = str(int(spec.params[1]))
    else:
        raise ConfigError(f"unknown coefficient preset {spec.preset!r}")


def _coeff_from_keys(prefix: str, kv: dict) -> CoeffSpec | None:
    preset = kv.get(f"{prefix}.preset")
    if preset is None:
        return None
    if preset == "constant":
        return CoeffSpec("constant", (float(kv[f"{prefix}.value"]),))
    if preset == "polynomial":
        parts = kv[f"{prefix}.coeffs"].split(",")
        return CoeffSpec("polynomial", tuple(float(p) for p in parts))
    if preset == "chebyshev":
        return CoeffSpec(
            "chebyshev",
            (float(kv[f"{prefix}.amplitude"]), int(kv[f"{prefix}.order"])),
        )
    raise ConfigError(f"unknown coefficient preset {preset!r}")


def emit(cfg: ScenarioConfig) -> str:
    kv: dict[str, str] = {
        "plant.class": cfg.plant_class,
        "grid.n_points": str(cfg.n_points),
        "time.dt": _fmt(cfg.dt),
        "time.total": _fmt(cfg.total_time),
        "init.u0.preset": cfg.u0_preset,
        "init.u0.amplitude": _fmt(cfg.u0_amplitude),
        "init.uhat0": _fmt(cfg.uhat0),
        "input.sinusoids": "; ".join(
            f"{_fmt(s.amplitude)},{_fmt(s.omega)},{_fmt(s.phase)}"
            for s in cfg.input_terms
        ),
        "mhe.horizon": _fmt(cfg.horizon),
        "mhe.truncation": str(cfg.truncation),
        "noise.sigma2": _fmt(cfg.sigma2),
        "noise.interpretation": "std" if cfg.noise_as_std else "variance",
        "noise.seed": str(cfg.seed),
        "output.stride": str(cfg.output_stride),
        "solver.tol": _fmt(cfg.tol),
        "solver.max_iter": str(cfg.max_iter),
    }
    _coeff_keys("plant.f", cfg.f, kv)
    _coeff_keys("plant.g", cfg.g, kv)
    _coeff_keys("plant.lambda", cfg.lam, kv)
    return "".join(f"{k} = {kv[k]}\n" for k in sorted(kv))


def parse(text: str) -> ScenarioConfig:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    try:
        terms = []
        sin_text = kv.get("input.sinusoids", "")
        if sin_text:
            for chunk in sin_text.split(";"):
                a, w, p = (float(s) for s in chunk.split(","))
                terms.append(SinusoidTerm(a, w, p))
        return ScenarioConfig(
            plant_class=kv["plant.class"],
            n_points=int(kv["grid.n_points"]),
            dt=float(kv["time.dt"]),
            total_time=float(kv["time.total"]),
            horizon=float(kv["mhe.horizon"]),
            f=_coeff_from_keys("plant.f", kv),
            g=_coeff_from_keys("plant.g", kv),
            lam=_coeff_from_keys("plant.lambda", kv),
            truncation=int(kv.get("mhe.truncation", "4")),
            u0_preset=kv.get("init.u0.preset", "constant"),
            u0_amplitude=float(kv.get("init.u0.amplitude", "0")),
            uhat0=float(kv.get("init.uhat0", "0")),
            input_terms=tuple(terms),
            sigma2=float(kv.get("noise.sigma2", "0")),
            noise_as_std=kv.get("noise.interpretation", "variance") == "std",
            seed=int(kv.get("noise.seed", "0")),
            output_stride=int(kv.get("output.stride", "1")),
            tol=float(kv.get("solver.tol", "1e-10")),
            max_iter=int(kv.get("solver.max_iter", "200")),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(f"malformed config value: {exc}") from None


def load(path_or_preset: str) -> ScenarioConfig:
    """Load a config file; bare names fall back to the packaged presets."""
    import os

    if os.path.exists(path_or_preset):
        with open(path_or_preset) as fh:
            return parse(fh.read())
    res = resources.files("pdemhe").joinpath(f"presets/{path_or_preset}.cfg")
    if res.is_file():
        return parse(res.read_text())
    raise ConfigError(f"no config file or preset named {path_or_preset!r}")


def preset_names() -> list[str]:
    pkg = resources.files("pdemhe").joinpath("presets")
    return sorted(p.name[:-4] for p in pkg.iterdir() if p.name.endswith(".cfg"))
