"""Finite-difference stepping cores for plants and observers.

Each core advances the state over a chunk of substeps and records the
measurement taken at the start of every substep. Hot loops exist twice:
a numba-compiled version with explicit loops and a vectorized numpy
fallback; ``accel`` decides which one is bound to the public names.

Schemes (dimensionless space on [0,1], spacing dx, explicit time steps dt):

* hyperbolic transport: first-order upwind with the characteristic moving
  leftward, so the forward spatial difference (u[i+1]-u[i])/dx; at dt = dx
  the pure transport part is exact.
* parabolic diffusion: forward Euler with the centered second difference.
* Neumann sensor at x=1: one-sided 3-point second-order stencil.

Boundary values are re-imposed after every substep.
"""

from __future__ import annotations

import numpy as np

from .accel import NUMBA_ENABLED, njit


def neumann_right(u: np.ndarray, dx: float) -> float:
    """Second-order one-sided u_x(1): (3u[-1] - 4u[-2] + u[-3]) / (2 dx)."""
    return (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * dx)


# --- numpy fallback path -----------------------------------------------------


def _hyperbolic_chunk_numpy(u, wf, g, p1, y_in, u_bc, dt, dx):
    """Advance the hyperbolic system over len(u_bc) substeps.

    With p1 all zero this is the plant; otherwise it is the observer with
    output injection p1 * (y_in[s] - u[0]). Returns the Dirichlet
    measurement u(0) taken at the start of each substep.
    """
    n = u.shape[0]
    steps = u_bc.shape[0]
    y_pre = np.empty(steps)
    r = dt / dx
    for s in range(steps):
        y_pre[s] = u[0]
        integ = wf @ u
        unew = u.copy()
        unew[:-1] += r * (u[1:] - u[:-1])
        unew[:-1] += dt * (g[:-1] * u[0] + integ[:-1])
        unew[:-1] += dt * p1[:-1] * (y_in[s] - u[0])
        unew[n - 1] = u_bc[s]
        u[:] = unew
    return y_pre


def _parabolic_chunk_numpy(u, lam, p1, y_in, u_bc, dt, dx):
    """Advance the parabolic system over len(u_bc) substeps.

    With p1 all zero this is the plant; otherwise the observer with
    injection p1 * (y_in[s] - u_x(1)). Returns the Neumann measurement
    u_x(1) taken at the start of each substep.
    """
    steps = u_bc.shape[0]
    y_pre = np.empty(steps)
    r = dt / (dx * dx)
    for s in range(steps):
        ux1 = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * dx)
        y_pre[s] = ux1
        unew = u.copy()
        unew[1:-1] += r * (u[2:] - 2.0 * u[1:-1] + u[:-2]) + dt * lam[1:-1] * u[1:-1]
        unew[1:-1] += dt * p1[1:-1] * (y_in[s] - ux1)
        unew[0] = 0.0
        unew[-1] = u_bc[s]
        u[:] = unew
    return y_pre


# --- numba path --------------------------------------------------------------


@njit(cache=True)
def _hyperbolic_chunk_jit(u, wf, g, p1, y_in, u_bc, dt, dx):  # pragma: no cover
    n = u.shape[0]
    steps = u_bc.shape[0]
    y_pre = np.empty(steps)
    unew = np.empty(n)
    r = dt / dx
    for s in range(steps):
        y_pre[s] = u[0]
        for i in range(n - 1):
            integ = 0.0
            for j in range(i + 1):
                integ += wf[i, j] * u[j]
            unew[i] = (u[i] + r * (u[i + 1] - u[i])
                       + dt * (g[i] * u[0] + integ + p1[i] * (y_in[s] - u[0])))
        unew[n - 1] = u_bc[s]
        for i in range(n):
            u[i] = unew[i]
    return y_pre


@njit(cache=True)
def _parabolic_chunk_jit(u, lam, p1, y_in, u_bc, dt, dx):  # pragma: no cover
    n = u.shape[0]
    steps = u_bc.shape[0]
    y_pre = np.empty(steps)
    unew = np.empty(n)
    r = dt / (dx * dx)
    for s in range(steps):
        ux1 = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx)
        y_pre[s] = ux1
        for i in range(1, n - 1):
            unew[i] = (u[i] + r * (u[i + 1] - 2.0 * u[i] + u[i - 1])
                       + dt * (lam[i] * u[i] + p1[i] * (y_in[s] - ux1)))
        unew[0] = 0.0
        unew[n - 1] = u_bc[s]
        for i in range(n):
            u[i] = unew[i]
    return y_pre


if NUMBA_ENABLED:
    hyperbolic_chunk = _hyperbolic_chunk_jit
    parabolic_chunk = _parabolic_chunk_jit
else:
    hyperbolic_chunk = _hyperbolic_chunk_numpy
    parabolic_chunk = _parabolic_chunk_numpy


def volterra_weights(fmat: np.ndarray, dx: float) -> np.ndarray:
    """Trapezoid weight matrix W with (W @ u)[i] = int_0^{x_i} f(x_i,y)u(y)dy."""
    n = fmat.shape[0]
    w = np.tril(fmat) * dx
    w[:, 0] *= 0.5
    idx = np.arange(n)
    w[idx, idx] *= 0.5
    w[0, 0] = 0.0
    return w
