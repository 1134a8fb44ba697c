import numpy as np
import pytest

from pdemhe import coeffs as cf
from pdemhe import kernels
from pdemhe.core import Grid


@pytest.fixture(scope="session")
def hyp_coeffs():
    """f = 1, g(x) = x: the standard transport test pair."""
    return cf.hyperbolic_coeffs(cf.constant2d(1.0), cf.polynomial(0.0, 1.0))


@pytest.fixture(scope="session")
def cheb_coeffs():
    """lambda(x) = 21 cos(5 arccos x)."""
    return cf.parabolic_coeffs(cf.chebyshev(21.0, 5))


@pytest.fixture(scope="session")
def lam5_coeffs():
    return cf.parabolic_coeffs(cf.constant(5.0))


@pytest.fixture(scope="session")
def hyp_kernel_201(hyp_coeffs):
    grid = Grid(201)
    k = kernels.solve_hyperbolic_kernel(hyp_coeffs, grid)
    l = kernels.invert_kernel(k)
    return k, l


@pytest.fixture(scope="session")
def par_kernel_201(lam5_coeffs):
    grid = Grid(201)
    k = kernels.solve_parabolic_kernel(lam5_coeffs, grid)
    l = kernels.invert_kernel(k)
    return k, l


def bessel_i1_over_z(z2):
    """I1(z)/z via its power series, as a function of z^2.

    Independent of any scipy special function so it can serve as an
    oracle; the series has factorial decay and 30 terms are far beyond
    double precision for the arguments used here.
    """
    z2 = np.asarray(z2, dtype=np.float64)
    out = np.zeros_like(z2)
    term = np.full_like(z2, 0.5)
    out += term
    for m in range(1, 30):
        term = term * (z2 / 4.0) / (m * (m + 1))
        out += term
    return out


def parabolic_kernel_closed_form(c, x, y):
    """k(x,y) = -c y I1(sqrt(c(x^2-y^2)))/sqrt(c(x^2-y^2)) for lambda = c."""
    z2 = c * (x * x - y * y)
    return -c * y * bessel_i1_over_z(z2)
