"""Projected RK4 flows, closure defects, holonomy, and swept-disk quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InputError, QuadratureError
from .geom import Point, coords, rk4_step
from .lift import LatticeVector
from .models import circular_distance


@dataclass(frozen=True)
class FlowConfig:
    step: float = 1e-3
    max_time: float = 10.0
    tolerance: float = 1e-8

    def __post_init__(self):
        if not self.step > 0:
            raise InputError(f"step must be positive, got {self.step}")
        if not self.tolerance > 0:
            raise InputError(f"tolerance must be positive, got {self.tolerance}")
        if not self.max_time > 0:
            raise InputError(f"max_time must be positive, got {self.max_time}")


DEFAULT_FLOW = FlowConfig()


def integrate_flow(field, p, T, cfg=DEFAULT_FLOW):
    """Flow p for time T with fixed-step RK4 and per-step retraction.

    The step is shrunk so that an integer number of steps lands exactly on T.
    Accepts a Point or an array of ambient coordinates (leading batch axes
    allowed).
    """
    space = field.space
    if isinstance(p, Point) and p.space_tag != space.tag:
        raise InputError(f"point on {p.space_tag} but field on {space.tag}")
    if abs(T) > cfg.max_time:
        raise InputError(f"|T| = {abs(T)} exceeds max_time {cfg.max_time}")
    x = coords(p)
    if x.shape[-1] != space.ambient_dim:
        raise InputError(f"expected {space.ambient_dim} ambient coordinates, got {x.shape[-1]}")
    n = max(1, math.ceil(abs(T) / cfg.step - 1e-9)) if T else 0
    h = T / n if n else 0.0
    for _ in range(n):
        x = rk4_step(field, space, x, h, tol=cfg.tolerance)
    x = space.canonical(x)
    if isinstance(p, Point):
        return Point(x, p.space_tag)
    return x


def trajectory(field, p, times, cfg=DEFAULT_FLOW):
    """Flow values at increasing times, reusing each segment."""
    x = coords(p)
    out, t_prev = [], 0.0
    for t in times:
        x = integrate_flow(field, x, t - t_prev, cfg)
        out.append(x)
        t_prev = t
    return out


def closure_defect(bundle, lifted, p, cfg=DEFAULT_FLOW):
    """Phase by which the time-1 flow of a lifted lattice field misses p.

    Returns theta in [0, 1) with circle_act(theta, endpoint) == p; zero means
    the flow is periodic with period 1 through p.
    """
    if not lifted.is_lattice:
        raise DomainError("closure defect needs a lattice vector as the lift source")
    x = coords(p)
    end = integrate_flow(lifted.field, x, 1.0, cfg)
    try:
        return bundle.fiber_phase(end, x)
    except DomainError as exc:
        raise DomainError(f"base point does not return after time 1: {exc}") from None


# --- paths, loops and disks --------------------------------------------------

@dataclass(frozen=True)
class PathSpec:
    """Curve s -> tau(s) on the base, s in [0, 1].

    The evaluator must tolerate s slightly outside [0, 1]; velocities come
    from ``velocity`` when given and from central differences otherwise.
    """

    evaluator: Callable
    space: object
    velocity: Optional[Callable] = None
    fd_step: float = 1e-6

    def __call__(self, s):
        return self.evaluator(s)

    def velocity_at(self, s):
        if self.velocity is not None:
            return self.velocity(s)
        h = self.fd_step
        return self.space.difference_quotient(self.evaluator(s), self.evaluator(s + h), self.evaluator(s - h), h)

    def max_gap(self, n=256):
        pts = [self.evaluator(s) for s in np.linspace(0.0, 1.0, n + 1)]
        return max(float(np.max(self.space.distance(a, b))) for a, b in zip(pts, pts[1:]))


@dataclass(frozen=True)
class LoopSpec(PathSpec):
    def closure_gap(self):
        return float(np.max(self.space.distance(self.evaluator(0.0), self.evaluator(1.0))))


@dataclass(frozen=True)
class DiskParam:
    """(t, s) -> exp(t X_B) . tau(s)."""

    action: object
    X: np.ndarray
    path: PathSpec

    def __call__(self, t, s):
        return self.action.flow(self.X, t, self.path(s))

    def boundary_gap(self, n=33):
        s = np.linspace(0.0, 1.0, n)
        gaps = [self.action.space.distance(self(1.0, si), self.path(si)) for si in s]
        return float(np.max(gaps))


@dataclass(frozen=True)
class HolonomyResult:
    phase: np.ndarray
    transport_residual: float


def orbit_loop(action, X, b):
    """t -> exp(t X_B) b; closes at t = 1 when X is a lattice vector.

    X may be a batch (m, k) matched with base points b of shape (m, d).
    """
    X = np.asarray(X.as_array() if isinstance(X, LatticeVector) else X, dtype=float)
    b = np.asarray(coords(b), dtype=float)

    def evaluator(t):
        return action.flow(X, t, b)

    def velocity(t):
        return action.generator_values(X, evaluator(t))

    return LoopSpec(evaluator, action.space, velocity)


def blended_path(space, start, end, wobble):
    """A path from start to end bent by a transverse perturbation.

    tau(s) = retract((1-s) start + s end' + s(1-s) wobble), where end' is
    the representative of end closest in phase to start.
    """
    start = np.asarray(coords(start), dtype=float)
    end = np.asarray(coords(end), dtype=float)
    if hasattr(space, "align"):
        end_rep = space.align(end, start)
    else:
        end_rep = end
    wobble = np.asarray(wobble, dtype=float)

    def evaluator(s):
        s = np.asarray(s, dtype=float)[..., None]
        return space.canonical((1 - s) * start + s * end_rep + s * (1 - s) * wobble)

    return PathSpec(evaluator, space)


def random_path(space, start, end, rng, scale=1.0):
    """Seeded random smooth path; resamples until the blend stays away from 0."""
    start = np.asarray(coords(start), dtype=float)
    end = np.asarray(coords(end), dtype=float)
    end_rep = space.align(end, start) if hasattr(space, "align") else end
    s = np.linspace(0.0, 1.0, 65)[:, None]
    for _ in range(100):
        wobble = scale * rng.standard_normal(start.shape)
        raw = (1 - s) * start + s * end_rep + s * (1 - s) * wobble
        if np.min(np.linalg.norm(raw, axis=-1)) > 0.2:
            return blended_path(space, start, end, wobble)
    raise DomainError("could not draw a non-degenerate random path")


def meridian(level_space, end_x3=1.0):
    """Great-circle path from the south pole of S^2 up to height end_x3 in the x1-x3 plane."""
    theta_end = math.acos(max(-1.0, min(1.0, -end_x3)))

    def evaluator(s):
        a = theta_end * np.asarray(s, dtype=float)
        return np.stack([np.sin(a), np.zeros_like(a), -np.cos(a)], axis=-1)

    return PathSpec(evaluator, level_space)


# --- holonomy ----------------------------------------------------------------

def holonomy(bundle, loop, p0, cfg=DEFAULT_FLOW, closure_tol=1e-10):
    """Fiber phase acquired by horizontal transport of p0 around the loop.

    Integrates p' = horizontal_lift(p, gamma'(t)) over [0, 1] with RK4 and
    returns theta with circle_act(theta, p0) == endpoint.
    """
    gap = loop.closure_gap()
    if gap > closure_tol:
        raise InputError(f"loop is open (endpoint gap {gap:.3e})")
    x0 = coords(p0)
    start_gap = float(np.max(bundle.base.distance(bundle.project(x0), loop(0.0)), initial=0.0))
    if start_gap > 1e-8:
        raise InputError(f"p0 does not lie over gamma(0) (base distance {start_gap:.3e})")

    total, base = bundle.total, bundle.base
    residual = 0.0

    def rhs(x, t):
        nonlocal residual
        xn = total.normalize(x)
        gamma = loop(t)
        b = bundle.project(xn)
        v = base.transfer_tangent(gamma, loop.velocity_at(t), b)
        w = bundle.lift_vector(xn, v)
        residual = max(residual, float(np.max(np.abs(bundle.alpha.evaluator(xn, w)), initial=0.0)))
        return w

    n = max(1, math.ceil(1.0 / cfg.step - 1e-9))
    h = 1.0 / n
    x = np.asarray(x0, dtype=float)
    for k in range(n):
        t = k * h
        k1 = rhs(x, t)
        k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(x + h * k3, t + h)
        y = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = float(np.max(total.drift(y), initial=0.0))
        if drift > cfg.tolerance:
            raise InputError(f"transport left the total space (drift {drift:.3e})")
        x = total.normalize(y)
    return HolonomyResult(phase=bundle.fiber_phase(x0, x), transport_residual=residual)


# --- swept-disk quadrature ---------------------------------------------------

def _disk_quadrature(bundle, action, X, path, n, fd_step=1e-5):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    base = action.space
    tau = path(nodes)
    tau_p = path(nodes + fd_step)
    tau_m = path(nodes - fd_step)
    # every s-node flowed to every t-node: arrays of shape (n_t, n_s, dim)
    tt = np.broadcast_to(nodes[:, None], (n, n))
    D = _flow_grid(action, X, tt, tau)
    Dp = _flow_grid(action, X, tt, tau_p)
    Dm = _flow_grid(action, X, tt, tau_m)
    d_t = action.generator_values(X, D)
    d_s = base.difference_quotient(D, Dp, Dm, fd_step)
    integrand = bundle.omega.evaluator(D, d_t, d_s)
    return float(weights @ integrand @ weights)


def _flow_grid(action, X, tt, pts):
    # angles (n_t, n_s, k) applied to points broadcast over the t axis
    angles = tt[..., None] * np.asarray(X, dtype=float)
    b = np.broadcast_to(pts[None, :, :], tt.shape + (pts.shape[-1],))
    return action.flow_map(angles, b)


def swept_disk_integral(bundle, action, X, path, grid=16, tol=1e-7, max_doublings=4):
    """Integral of omega over (t, s) -> exp(t X_B) tau(s), oriented by (t, s)."""
    if grid < 16:
        raise InputError(f"grid must be >= 16, got {grid}")
    X = np.asarray(X.as_array() if isinstance(X, LatticeVector) else X, dtype=float)
    n = grid
    prev = _disk_quadrature(bundle, action, X, path, n)
    for _ in range(max_doublings):
        n *= 2
        cur = _disk_quadrature(bundle, action, X, path, n)
        if abs(cur - prev) < tol:
            return cur
        prev_prev, prev = prev, cur
    raise QuadratureError(
        f"swept-disk quadrature did not converge after {max_doublings} doublings: {prev_prev!r}, {prev!r}",
        values=(prev_prev, prev),
    )


def disk_integral(bundle, action, X, path, grid=16, tol=1e-7):
    """Integral of omega over the disk swept by a path from a fixed point.

    The path must start at a point fixed by X (the normalization point is
    the usual choice) so that the s = 0 edge of the disk collapses.
    """
    Xv = np.asarray(X.as_array() if isinstance(X, LatticeVector) else X, dtype=float)
    start = path(0.0)
    speed = float(np.linalg.norm(action.generator_values(Xv, start)))
    if speed >= 1e-8:
        raise InputError(f"path must start at a fixed point of X (|X_B(tau(0))| = {speed:.3e})")
    return swept_disk_integral(bundle, action, Xv, path, grid=grid, tol=tol)
