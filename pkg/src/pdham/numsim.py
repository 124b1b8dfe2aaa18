"""Finite-difference Klein-Gordon runs and the numerical Noether check.

The field equation is u_tt = u_xx + mu*u on a periodic interval, integrated
with the three-level leapfrog scheme.  Charges of the current
f^t = -(u U_t - u_t U) are summed over the grid at every time level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import sympy as sp

from .symexpr import is_zero
from .sysdef.model import Chart
from .sysdef.parser import parse_expression

T, X = sp.symbols("t x")
_CHART = Chart(("t", "x"), ("u",))


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    L: sp.Expr
    N: int
    cfl: float
    steps: int
    mu: sp.Expr
    u0: sp.Expr
    v0: sp.Expr
    U: sp.Expr

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("N must be at least 8")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        if not float(self.L) > 0:
            raise ValueError("L must be positive")

    @classmethod
    def from_settings(cls, settings: dict) -> "SimConfig":
        """Build from string settings (keys L, N, cfl, steps, mu, u0, v0, U)."""
        missing = [k for k in ("L", "N", "steps", "u0") if k not in settings]
        if missing:
            raise ValueError(f"missing simulate keys: {', '.join(missing)}")

        def ex(key, default="0"):
            return parse_expression(str(settings.get(key, default)), _CHART)

        return cls(L=ex("L"), N=int(settings["N"]), cfl=float(settings.get("cfl", 0.5)),
                   steps=int(settings["steps"]), mu=ex("mu"), u0=ex("u0"), v0=ex("v0"),
                   U=ex("U", "1"))

    @property
    def dx(self) -> float:
        return float(self.L) / self.N

    @property
    def dt(self) -> float:
        return self.cfl * self.dx

    def refined(self, factor: int = 2) -> "SimConfig":
        return replace(self, N=self.N * factor, steps=self.steps * factor)


@dataclass(frozen=True)
class Trajectory:
    u: np.ndarray       # shape (steps + 1, N)
    dx: float
    dt: float

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.u.shape[1]) * self.dx

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.u.shape[0]) * self.dt


def _grid_function(e, x: np.ndarray, t: float = 0.0) -> np.ndarray:
    f = sp.lambdify((T, X), e, "numpy")
    return np.broadcast_to(np.asarray(f(t, x), dtype=float), x.shape).copy()


def _laplacian(u, dx):
    return (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / dx ** 2


def _march(first, second, steps, dx, dt, mu, scale):
    out = np.empty((steps + 1, first.size))
    out[0], out[1] = first, second
    c = dt * dt
    for s in range(1, steps):
        u = out[s]
        out[s + 1] = 2 * u - out[s - 1] + c * (_laplacian(u, dx) + mu * u)
        if s % 64 == 0 or s == steps - 1:
            amp = np.max(np.abs(out[s + 1]))
            if not np.isfinite(amp):
                raise SimulationError(f"non-finite values at step {s + 1}")
            if scale > 0 and amp > 1e6 * scale:
                raise SimulationError(f"amplitude {amp:.3g} exceeds 1e6 times the initial size "
                                      f"at step {s + 1}")
    return out


def simulate_leapfrog(cfg: SimConfig) -> Trajectory:
    dx, dt, mu = cfg.dx, cfg.dt, float(cfg.mu)
    x = np.arange(cfg.N) * dx
    u0 = _grid_function(cfg.u0, x)
    v0 = _grid_function(cfg.v0, x)
    u1 = u0 + dt * v0 + 0.5 * dt * dt * (_laplacian(u0, dx) + mu * u0)
    scale = max(np.max(np.abs(u0)), np.max(np.abs(u1)))
    u = _march(u0, u1, cfg.steps, dx, dt, mu, scale)
    u.setflags(write=False)
    return Trajectory(u, dx, dt)


def reverse_run(traj: Trajectory, mu: float) -> np.ndarray:
    """Run leapfrog backwards from the last two slices; returns the recovered first slice."""
    u = traj.u
    steps = u.shape[0] - 1
    back = _march(u[-1], u[-2], steps, traj.dx, traj.dt, float(mu), 0.0)
    return back[-1]


def time_derivative(traj: Trajectory, scheme: str = "centered") -> np.ndarray:
    u, dt = traj.u, traj.dt
    ut = np.empty_like(u)
    if scheme == "centered":
        ut[1:-1] = (u[2:] - u[:-2]) / (2 * dt)
        ut[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dt)
        ut[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dt)
    elif scheme == "forward":
        ut[:-1] = (u[1:] - u[:-1]) / dt
        ut[-1] = (u[-1] - u[-2]) / dt
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return ut


def charge_series(traj: Trajectory, U, scheme: str = "centered") -> np.ndarray:
    """Q(t_s) = dx * sum_j f^t with f^t = -(u U_t - u_t U)."""
    U = sp.sympify(U)
    tt, xx = np.meshgrid(traj.t, traj.x, indexing="ij")
    Uv = np.broadcast_to(np.asarray(sp.lambdify((T, X), U, "numpy")(tt, xx), dtype=float),
                         tt.shape)
    Ut = np.broadcast_to(np.asarray(sp.lambdify((T, X), sp.diff(U, T), "numpy")(tt, xx),
                                    dtype=float), tt.shape)
    ft = -(traj.u * Ut - time_derivative(traj, scheme) * Uv)
    return traj.dx * ft.sum(axis=1)


def symmetry_residual(U, mu):
    """U_tt - U_xx - mu U, which must vanish for U to generate a symmetry."""
    U = sp.sympify(U)
    return sp.simplify(sp.diff(U, T, 2) - sp.diff(U, X, 2) - sp.sympify(mu) * U)


def check_symmetry_profile(U, mu) -> bool:
    return is_zero(symmetry_residual(U, mu)).zero


def drift(Q: np.ndarray) -> float:
    return float(np.max(np.abs(Q - Q[0])) / max(abs(Q[0]), 1.0))


EXACT_TOL = 1e-11


@dataclass(frozen=True)
class Convergence:
    coarse: float
    fine: float

    @property
    def exact(self) -> bool:
        return self.coarse <= EXACT_TOL and self.fine <= EXACT_TOL

    @property
    def factor(self) -> float | None:
        if self.exact or self.fine == 0:
            return None
        return self.coarse / self.fine

    @property
    def order(self) -> float | None:
        f = self.factor
        return None if f is None or f <= 0 else math.log2(f)

    @property
    def passed(self) -> bool:
        if self.exact:
            return True
        return self.order is not None and 1.5 <= self.order <= 2.5

    def describe(self) -> str:
        if self.exact:
            return "exact (pass)"
        status = "pass" if self.passed else "fail"
        return f"order {self.order:.3f}, factor {self.factor:.3f} ({status})"


def convergence_check(coarse: float, fine: float) -> Convergence:
    return Convergence(float(coarse), float(fine))


@dataclass(frozen=True)
class ChargeStudy:
    config: SimConfig
    charges: np.ndarray
    convergence: Convergence


def charge_study(cfg: SimConfig, U=None, scheme: str = "centered") -> ChargeStudy:
    """Charge drift at cfg and at twice the resolution."""
    U = cfg.U if U is None else sp.sympify(U)
    q = charge_series(simulate_leapfrog(cfg), U, scheme)
    q2 = charge_series(simulate_leapfrog(cfg.refined()), U, scheme)
    return ChargeStudy(cfg, q, convergence_check(drift(q), drift(q2)))


def solution_error(traj: Trajectory, exact) -> float:
    tt, xx = np.meshgrid(traj.t, traj.x, indexing="ij")
    ref = np.broadcast_to(np.asarray(sp.lambdify((T, X), sp.sympify(exact), "numpy")(tt, xx),
                                     dtype=float), tt.shape)
    return float(np.max(np.abs(traj.u - ref)))


def zero_crossing_period(series: np.ndarray, dt: float) -> float:
    """Mean period from linearly interpolated sign changes of a time series."""
    s = np.asarray(series, dtype=float)
    idx = np.nonzero(np.signbit(s[:-1]) != np.signbit(s[1:]))[0]
    if idx.size < 3:
        raise ValueError("fewer than three zero crossings")
    times = (idx + s[idx] / (s[idx] - s[idx + 1])) * dt
    return float(2 * np.mean(np.diff(times)))
