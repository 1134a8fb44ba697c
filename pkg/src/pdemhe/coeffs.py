"""Plant coefficient presets and their sup-bounds.

Hyperbolic plants carry a bivariate f on the triangle 0 <= y <= x <= 1 and a
univariate g on [0, 1]; parabolic plants carry a univariate reaction
coefficient lambda on [0, 1]. Presets cover constants, polynomials and
Chebyshev polynomials (amplitude * cos(order * arccos(x))), which includes
the 21*cos(5*arccos(x)) reaction profile used by the reproduction preset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError

HYPERBOLIC = "hyperbolic"
PARABOLIC = "parabolic"

# sampling density multiplier for sup-bound estimation
_SUP_OVERSAMPLE = 10


@dataclass(frozen=True)
class Coefficient:
    """Univariate coefficient preset on [0, 1]."""

    preset: str
    params: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.preset == "constant":
            (c,) = self.params
            return np.full_like(x, c)
        if self.preset == "polynomial":
            # params are coefficients (c0, c1, ...) of c0 + c1 x + ...
            return np.polynomial.polynomial.polyval(x, np.asarray(self.params))
        if self.preset == "chebyshev":
            amp, order = self.params
            return amp * np.cos(order * np.arccos(np.clip(x, -1.0, 1.0)))
        raise ConfigError(f"unknown coefficient preset {self.preset!r}")

    def sup(self, n_samples: int) -> float:
        xs = np.linspace(0.0, 1.0, n_samples)
        return float(np.max(np.abs(self(xs))))


@dataclass(frozen=True)
class BivariateCoefficient:
    """Bivariate coefficient preset on the triangle 0 <= y <= x <= 1.

    ``polynomial`` params are a coefficient matrix c[i][j] of x^i y^j.
    """

    preset: str
    params: tuple

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.preset == "constant":
            (c,) = self.params
            return np.broadcast_to(np.float64(c), np.broadcast_shapes(x.shape, y.shape)).copy()
        if self.preset == "polynomial":
            c = np.asarray(self.params, dtype=np.float64)
            return np.polynomial.polynomial.polyval2d(x, y, c)
        raise ConfigError(f"unknown bivariate preset {self.preset!r}")

    def sup(self, n_samples: int) -> float:
        xs = np.linspace(0.0, 1.0, n_samples)
        xg, yg = np.meshgrid(xs, xs, indexing="ij")
        vals = np.abs(self(xg, yg))
        return float(np.max(vals[yg <= xg + 1e-15]))


def constant(value: float) -> Coefficient:
    return Coefficient("constant", (float(value),))


def polynomial(*coeffs: float) -> Coefficient:
    return Coefficient("polynomial", tuple(float(c) for c in coeffs))


def chebyshev(amplitude: float, order: int) -> Coefficient:
    return Coefficient("chebyshev", (float(amplitude), int(order)))


def constant2d(value: float) -> BivariateCoefficient:
    return BivariateCoefficient("constant", (float(value),))


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of one plant plus derived sup-bounds.

    Exactly one of the two families is populated: (f, g) for hyperbolic
    plants, lam for parabolic ones. Sup-bounds are estimated by dense
    sampling at 10x the working grid density.
    """

    plant_class: str
    f: BivariateCoefficient | None = None
    g: Coefficient | None = None
    lam: Coefficient | None = None

    def __post_init__(self):
        if self.plant_class == HYPERBOLIC:
            if self.f is None or self.g is None:
                raise ConfigError("hyperbolic coefficients need f and g")
        elif self.plant_class == PARABOLIC:
            if self.lam is None:
                raise ConfigError("parabolic coefficients need lambda")
        else:
            raise ConfigError(f"unknown plant class {self.plant_class!r}")

    def _n_samples(self, n_points: int) -> int:
        return _SUP_OVERSAMPLE * (n_points - 1) + 1

    def m_f(self, n_points: int = 201) -> float:
        return self.f.sup(self._n_samples(n_points))

    def m_g(self, n_points: int = 201) -> float:
        return self.g.sup(self._n_samples(n_points))

    def lam_bar(self, n_points: int = 201) -> float:
        return self.lam.sup(self._n_samples(n_points))


def hyperbolic_coeffs(f: BivariateCoefficient, g: Coefficient) -> CoefficientSet:
    return CoefficientSet(HYPERBOLIC, f=f, g=g)


def parabolic_coeffs(lam: Coefficient) -> CoefficientSet:
    return CoefficientSet(PARABOLIC, lam=lam)
