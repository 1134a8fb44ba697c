"""Backstepping kernel solvers, inverse kernels and observer gains.

Two Goursat problems are solved on the triangle T = {0 <= y <= x <= 1}:

* hyperbolic:  k_y + k_x = f(x,y) - int_y^x f(x,eta) k(eta,y) deta with
  data k(1, y) = 0, solved by marching along the characteristics
  x - y = const from the data line x = 1, with Picard iteration for the
  nonlocal integral term;
* parabolic:  k_xx - k_yy = lambda(y) k with k(x, 0) = 0 and
  k(x, x) = -(1/2) int_0^x lambda, converted to a 2-D Volterra integral
  equation in the characteristic variables (xi, eta) = (x+y, x-y) and
  solved by successive approximation.

Both iterations are contractions with factorial-decay remainders, so the
default iteration cap is far beyond need.

The inverse kernel l solves the Volterra relation
l(x,y) = k(x,y) + int_y^x k(x,eta) l(eta,y) deta by fixed point iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientSet, HYPERBOLIC, PARABOLIC
from .core import ConfigError, ConvergenceError, Grid

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass
class KernelTable:
    """Bivariate kernel sampled at nodes of the triangle y <= x.

    Stored as a full (n, n) array with zeros strictly above the diagonal;
    values[i, j] = k(x_i, y_j) for j <= i.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n_points
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (n, n):
            raise ConfigError("kernel table shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("kernel table contains non-finite values")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path) -> None:
        """Triangle nodes as rows (x, y, k); byte-stable for fixed inputs."""
        x = self.grid.x
        with open(path, "w", newline="\n") as fh:
            fh.write("x,y,k\n")
            for i in range(self.grid.n_points):
                for j in range(i + 1):
                    fh.write(f"{x[i]:.17g},{x[j]:.17g},{self.values[i, j]:.17g}\n")

    @classmethod
    def zeros(cls, grid: Grid) -> "KernelTable":
        return cls(grid, np.zeros((grid.n_points, grid.n_points)))


@dataclass
class GainVector:
    """Observer gain p1 sampled on the grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_points,):
            raise ConfigError("gain length does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("gain contains non-finite values")


def volterra_lower_apply(a: np.ndarray, b: np.ndarray, dx: float) -> np.ndarray:
    """I[i, j] = trapezoid of a(x_i, eta) * b(eta, y_j) over eta in [y_j, x_i].

    Both arguments are lower-triangular kernel arrays. Implemented as one
    matrix product plus endpoint corrections, so the reduction order is
    fixed and the result is deterministic.
    """
    al = np.tril(a)
    bl = np.tril(b)
    s = al @ bl
    diag_b = np.diag(bl)
    corr = 0.5 * (a * diag_b[None, :] + np.diag(al)[:, None] * bl)
    out = dx * (s - corr)
    return np.tril(out)


def _march_from_data_line(rhs: np.ndarray, dx: float) -> np.ndarray:
    """Integrate dk/ds = rhs along characteristics x - y = const, k(1, .) = 0.

    rhs[i, j] holds the characteristic derivative at node (x_i, y_j); the
    result accumulates a reverse cumulative trapezoid along each diagonal,
    starting from zero on the data line x = 1.
    """
    n = rhs.shape[0]
    k = np.zeros_like(rhs)
    for d in range(n):  # diagonal offset i - j = d
        r = np.diagonal(rhs, offset=-d)  # index i = d..n-1
        m = r.shape[0]
        if m < 2:
            continue
        steps = 0.5 * dx * (r[:-1] + r[1:])
        vals = np.concatenate((-np.cumsum(steps[::-1])[::-1], [0.0]))
        idx = np.arange(d, n)
        k[idx, idx - d] = vals
    return k


def solve_hyperbolic_kernel(
    coeffs: CoefficientSet,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> KernelTable:
    """Solve the hyperbolic Goursat kernel PDE on the triangle.

    Successive approximation: given the previous iterate, evaluate the
    nonlocal term, then integrate the characteristic ODE exactly from the
    homogeneous data line. Stops when successive iterates differ by < tol
    in max norm.
    """
    if coeffs.plant_class != HYPERBOLIC:
        raise ConfigError("hyperbolic kernel needs hyperbolic coefficients")
    if tol <= 0.0:
        raise ConfigError("tol must be positive")
    n, dx = grid.n_points, grid.dx
    x = grid.x
    fmat = np.tril(coeffs.f(x[:, None], x[None, :]))
    k = np.zeros((n, n))
    for _ in range(max_iter):
        rhs = fmat - volterra_lower_apply(fmat, k, dx)
        k_new = _march_from_data_line(rhs, dx)
        diff = float(np.max(np.abs(k_new - k)))
        k = k_new
        if diff < tol:
            return KernelTable(grid, k)
    raise ConvergenceError(
        f"hyperbolic kernel iteration did not reach tol={tol} in "
        f"{max_iter} iterations (last residual {diff:.3e})"
    )


def solve_parabolic_kernel(
    coeffs: CoefficientSet,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> KernelTable:
    """Solve the parabolic Goursat kernel PDE on the triangle.

    In characteristic variables xi = x + y, eta = x - y the PDE becomes
    G_xi_eta = (lambda((xi-eta)/2)/4) G with G(xi, xi) = 0 and
    G(xi, 0) = -(1/2) int_0^{xi/2} lambda, equivalent to

        G(xi, eta) = q(xi) - q(eta)
                     + int_eta^xi int_0^eta phi(s, e) G(s, e) de ds,

    which is solved by successive approximation with trapezoid quadrature
    on a lattice of spacing dx in (xi, eta).
    """
    if coeffs.plant_class != PARABOLIC:
        raise ConfigError("parabolic kernel needs parabolic coefficients")
    if tol <= 0.0:
        raise ConfigError("tol must be positive")
    n, dx = grid.n_points, grid.dx
    m = 2 * n - 1  # lattice points along each characteristic axis

    # q on the lattice: q[a] = -(1/2) int_0^{a dx/2} lambda, cumulative trapezoid
    half_x = np.linspace(0.0, 1.0, m)
    lam_half = np.asarray(coeffs.lam(half_x), dtype=np.float64)
    q = np.zeros(m)
    q[1:] = -0.5 * np.cumsum(0.25 * dx * (lam_half[:-1] + lam_half[1:]))

    a_idx = np.arange(m)
    tri = (a_idx[None, :] <= a_idx[:, None]) & (a_idx[:, None] + a_idx[None, :] <= m - 1)
    # phi[a, b] = lambda((xi_a - eta_b)/2) / 4 inside the lattice triangle
    ydiff = np.clip(a_idx[:, None] - a_idx[None, :], 0, m - 1)
    phi = np.where(tri, lam_half[ydiff] / 4.0, 0.0)

    g0 = np.where(tri, q[:, None] - q[None, :], 0.0)
    g = g0.copy()
    for _ in range(max_iter):
        p = phi * g
        inner = np.zeros_like(p)
        inner[:, 1:] = np.cumsum(0.5 * dx * (p[:, :-1] + p[:, 1:]), axis=1)
        ct = np.zeros_like(p)
        ct[1:, :] = np.cumsum(0.5 * dx * (inner[:-1, :] + inner[1:, :]), axis=0)
        outer = ct - np.diag(ct)[None, :]
        g_new = np.where(tri, g0 + outer, 0.0)
        diff = float(np.max(np.abs(g_new - g)))
        g = g_new
        if diff < tol:
            break
    else:
        raise ConvergenceError(
            f"parabolic kernel iteration did not reach tol={tol} in "
            f"{max_iter} iterations (last residual {diff:.3e})"
        )

    k = np.zeros((n, n))
    ii, jj = np.tril_indices(n)
    k[ii, jj] = g[ii + jj, ii - jj]
    return KernelTable(grid, k)


def invert_kernel(
    k: KernelTable,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> KernelTable:
    """Solve l = k + int_y^x k(x,eta) l(eta,y) deta by fixed point iteration."""
    if tol <= 0.0:
        raise ConfigError("tol must be positive")
    dx = k.grid.dx
    kv = k.values
    l = kv.copy()
    for _ in range(max_iter):
        l_new = kv + volterra_lower_apply(kv, l, dx)
        diff = float(np.max(np.abs(l_new - l)))
        l = l_new
        if diff < tol:
            return KernelTable(k.grid, l)
    raise ConvergenceError(
        f"kernel inversion did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {diff:.3e})"
    )


def observer_gain_hyperbolic(coeffs: CoefficientSet, k: KernelTable) -> GainVector:
    """p1(x) = g(x) - k(x, 0)."""
    if coeffs.plant_class != HYPERBOLIC:
        raise ConfigError("hyperbolic gain needs hyperbolic coefficients")
    g_vals = np.asarray(coeffs.g(k.grid.x), dtype=np.float64)
    return GainVector(k.grid, g_vals - k.values[:, 0])


def observer_gain_parabolic(k: KernelTable) -> GainVector:
    """p1(x) = k(1, x): the top row of the kernel table."""
    return GainVector(k.grid, k.values[-1, :].copy())


def theta_kernel(p1: GainVector, l: KernelTable) -> GainVector:
    """theta(x) = p1(x) + int_0^x l(x, y) p1(y) dy."""
    if p1.grid.n_points != l.grid.n_points:
        raise ConfigError("gain and kernel grids differ")
    dx = l.grid.dx
    lw = np.tril(l.values).copy()
    lw[:, 0] *= 0.5
    idx = np.arange(l.grid.n_points)
    lw[idx, idx] *= 0.5
    lw[0, 0] = 0.0
    theta = p1.values + dx * (lw @ p1.values)
    return GainVector(p1.grid, theta)


# --- theoretical bounds, used by the bound-compliance checks -----------------


def hyperbolic_kernel_bound(m_f: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|k(x,y)| <= M_f (1-x) e^{M_f (x-y)(1-x)}."""
    return m_f * (1.0 - x) * np.exp(m_f * (x - y) * (1.0 - x))

def inverse_bound_from_kbar(k_bar: float) -> float:
    """|l| <= k_bar e^{k_bar}."""
    if k_bar > 700.0:
        return float("inf")
    return float(k_bar * np.exp(k_bar))


def hyperbolic_inverse_bound(m_f: float) -> float:
    """|l| <= (M_f e^{M_f}) e^{M_f e^{M_f}}."""
    return inverse_bound_from_kbar(m_f * np.exp(m_f))


def parabolic_kernel_bound(lam_bar: float, x: np.ndarray) -> np.ndarray:
    """|k(x,y)| <= lambda_bar e^{2 lambda_bar x}."""
    return lam_bar * np.exp(2.0 * lam_bar * x)


def parabolic_inverse_bound(lam_bar: float) -> float:
    """|l| <= (lambda_bar e^{2 lambda_bar}) e^{lambda_bar e^{2 lambda_bar}}."""
    return inverse_bound_from_kbar(lam_bar * np.exp(2.0 * lam_bar))
