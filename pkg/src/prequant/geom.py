"""Ambient-coordinate geometry: constraint manifolds, tangents, forms, and
finite-difference differential operators.

Every manifold here is a constraint submanifold of a real vector space.
Complex coordinates are stored as interleaved real pairs
``(Re z0, Im z0, Re z1, Im z1, ...)``; the complex structure is multiplication
by ``i`` on each pair.  All evaluators take arrays whose *last* axis holds the
ambient coordinates, so a batch of points is just an array of shape
``(m, d)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError, IntegrationError

POINT_TOL = 1e-12
TANGENT_TOL = 1e-10


# --- complex helpers ---------------------------------------------------------

def as_complex(x):
    """View interleaved real pairs as complex numbers (last axis halves)."""
    x = np.ascontiguousarray(x, dtype=float)
    return x.view(np.complex128)


def as_real(z):
    z = np.ascontiguousarray(z, dtype=np.complex128)
    return z.view(float)


def herm(a, b):
    """Hermitian pairing sum(conj(a) * b) over the last axis of complex arrays."""
    return np.sum(np.conj(a) * b, axis=-1)


def complex_structure(w):
    """Multiply interleaved pairs by i: (x, y) -> (-y, x)."""
    return as_real(1j * as_complex(w))


def _dot(a, b):
    return np.sum(a * b, axis=-1)


# --- spaces ------------------------------------------------------------------

class Space:
    """A constraint submanifold of R^ambient_dim."""

    tag: str
    ambient_dim: int
    dim: int

    def normalize(self, x):
        """Smooth retraction onto the constraint set."""
        raise NotImplementedError

    def canonical(self, x):
        """Deterministic representative (defaults to the retraction)."""
        return self.normalize(x)

    def residual(self, x):
        raise NotImplementedError

    def drift(self, x):
        """Distance from the unit sphere, ignoring any gauge condition."""
        return np.abs(np.linalg.norm(x, axis=-1) - 1.0)

    def tangent_residual(self, x, w):
        raise NotImplementedError

    def project_tangent(self, x, w):
        raise NotImplementedError

    def distance(self, a, b):
        raise NotImplementedError

    def difference_quotient(self, x, x_plus, x_minus, h):
        """Central-difference velocity at x from neighbours at +-h."""
        return self.project_tangent(x, (x_plus - x_minus) / (2.0 * h))

    def transfer_tangent(self, x, v, y):
        """Re-express a tangent at x as a tangent at the nearby point y."""
        return self.project_tangent(y, v)

    def sample(self, rng, m):
        g = rng.standard_normal((m, self.ambient_dim))
        return self.canonical(g)

    def __repr__(self):
        return f"{type(self).__name__}({self.tag!r})"


class Sphere(Space):
    def __init__(self, ambient_dim, tag=None):
        self.ambient_dim = ambient_dim
        self.dim = ambient_dim - 1
        self.tag = tag or f"S^{ambient_dim - 1}"

    def normalize(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def residual(self, x):
        return np.abs(np.linalg.norm(x, axis=-1) - 1.0)

    def tangent_residual(self, x, w):
        return np.abs(_dot(self.normalize(x), w))

    def project_tangent(self, x, w):
        x = self.normalize(x)
        return w - _dot(x, w)[..., None] * x

    def distance(self, a, b):
        return np.linalg.norm(np.asarray(a) - np.asarray(b), axis=-1)


class LensSpace(Sphere):
    """S^3 modulo the order-n subgroup of the diagonal phase circle.

    Points are S^3 representatives; two representatives are equal when they
    differ by an n-th root of unity.
    """

    def __init__(self, order):
        super().__init__(4, tag="S^3" if order == 1 else f"L({order},1)")
        self.order = order

    def distance(self, a, b):
        a = np.asarray(a, dtype=float)
        zb = as_complex(b)
        roots = np.exp(2j * np.pi * np.arange(self.order) / self.order)
        images = as_real(zb[..., None, :] * roots[:, None])
        return np.min(np.linalg.norm(a[..., None, :] - images, axis=-1), axis=-1)


class ProjectiveSpace(Space):
    """CP^n through unit representatives in C^{n+1}.

    Canonical representatives make the first coordinate of largest modulus
    real and positive.  Tangent vectors at a representative b are the
    vectors complex-orthogonal to b.
    """

    def __init__(self, n):
        self.n = n
        self.ambient_dim = 2 * n + 2
        self.dim = 2 * n
        self.tag = f"CP^{n}"

    def normalize(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def canonical(self, x):
        z = as_complex(self.normalize(x))
        k = np.argmax(np.abs(z), axis=-1)
        lead = np.take_along_axis(z, k[..., None], axis=-1)
        return as_real(z * (np.abs(lead) / lead))

    def residual(self, x):
        z = as_complex(x)
        k = np.argmax(np.abs(z), axis=-1)
        lead = np.take_along_axis(z, k[..., None], axis=-1)[..., 0]
        gauge = np.abs(np.imag(lead)) + np.maximum(-np.real(lead), 0.0)
        return np.maximum(np.abs(np.linalg.norm(x, axis=-1) - 1.0), gauge)

    def tangent_residual(self, x, w):
        return np.abs(herm(as_complex(self.normalize(x)), as_complex(w)))

    def project_tangent(self, x, w):
        z = as_complex(self.normalize(x))
        u = as_complex(w)
        return as_real(u - herm(z, u)[..., None] * z)

    def distance(self, a, b):
        """Chordal distance between the phase-aligned representatives."""
        return np.linalg.norm(np.asarray(a, dtype=float) - self.align(b, a), axis=-1)

    def align(self, x, ref):
        """Rotate the representative x into the phase of ref."""
        z = as_complex(x)
        c = herm(z, as_complex(ref))
        return as_real(z * (c / np.abs(c))[..., None])

    def transfer_tangent(self, x, v, y):
        # the same tangent vector at representative e^{i psi} b is e^{i psi} v
        c = herm(as_complex(x), as_complex(y))
        u = as_complex(v) * (c / np.abs(c))[..., None]
        return self.project_tangent(y, as_real(u))

    def difference_quotient(self, x, x_plus, x_minus, h):
        xp = self.align(x_plus, x)
        xm = self.align(x_minus, x)
        return self.project_tangent(x, (xp - xm) / (2.0 * h))


_TAG_PATTERNS = (
    (re.compile(r"^S\^(\d+)$"), lambda m: Sphere(int(m.group(1)) + 1)),
    (re.compile(r"^L\((\d+),1\)$"), lambda m: LensSpace(int(m.group(1)))),
    (re.compile(r"^CP\^(\d+)$"), lambda m: ProjectiveSpace(int(m.group(1)))),
)


def space_from_tag(tag):
    """Rebuild the space a tag names; raises InputError for unknown tags."""
    for pattern, build in _TAG_PATTERNS:
        m = pattern.match(tag)
        if m and int(m.group(1)) >= 1:
            return build(m)
    raise InputError(f"unknown space tag {tag!r}")


# --- points and tangents -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class Point:
    ambient: np.ndarray
    space_tag: str

    def __post_init__(self):
        space = space_from_tag(self.space_tag)
        x = np.array(self.ambient, dtype=float)
        if x.shape != (space.ambient_dim,):
            raise InputError(
                f"{self.space_tag} needs {space.ambient_dim} ambient coordinates, got shape {x.shape}"
            )
        res = float(space.residual(x))
        if res >= POINT_TOL:
            raise InputError(f"point is off {self.space_tag} (constraint residual {res:.3e})")
        x.setflags(write=False)
        object.__setattr__(self, "ambient", x)

    @property
    def space(self):
        return space_from_tag(self.space_tag)


@dataclass(frozen=True, eq=False)
class Tangent:
    base: Point
    vec: np.ndarray

    def __post_init__(self):
        w = np.array(self.vec, dtype=float)
        if w.shape != self.base.ambient.shape:
            raise InputError(f"tangent shape {w.shape} does not match base {self.base.ambient.shape}")
        res = float(self.base.space.tangent_residual(self.base.ambient, w))
        if res >= TANGENT_TOL * max(1.0, float(np.linalg.norm(w))):
            raise InputError(f"vector is not tangent at base (residual {res:.3e})")
        w.setflags(write=False)
        object.__setattr__(self, "vec", w)


def coords(x):
    """Ambient array of a Point, Tangent, or raw array."""
    if isinstance(x, Point):
        return x.ambient
    if isinstance(x, Tangent):
        return x.vec
    return np.asarray(x, dtype=float)


# --- forms and fields --------------------------------------------------------

@dataclass(frozen=True)
class OneForm:
    """evaluator(x, w) -> real, vectorised over leading axes."""

    evaluator: Callable
    space: Space

    def __call__(self, p, v):
        return self.evaluator(coords(p), coords(v))


@dataclass(frozen=True)
class TwoForm:
    evaluator: Callable
    space: Space

    def __call__(self, p, u, v):
        return self.evaluator(coords(p), coords(u), coords(v))


@dataclass(frozen=True)
class VectorField:
    """evaluator(x) -> ambient tangent vectors, vectorised over leading axes."""

    evaluator: Callable
    space: Space

    def __call__(self, p):
        return self.evaluator(coords(p))

    def at(self, p):
        if not isinstance(p, Point):
            p = Point(p, self.space.tag)
        return Tangent(p, self.evaluator(p.ambient))

    @property
    def space_tag(self):
        return self.space.tag


def zero_field(space):
    return VectorField(lambda x: np.zeros_like(np.asarray(x, dtype=float)), space)


def tangent_project(p, w):
    """Orthogonal projection of an ambient vector onto the tangent space at p."""
    if not isinstance(p, Point):
        raise InputError("tangent_project needs a Point")
    w = np.asarray(w, dtype=float)
    if w.shape != p.ambient.shape:
        raise InputError(f"dimension mismatch: point has {p.ambient.shape}, vector has {w.shape}")
    return Tangent(p, p.space.project_tangent(p.ambient, w))


# --- short flows -------------------------------------------------------------

def rk4_step(field, space, x, h, tol=1e-8):
    """One classical RK4 step followed by retraction onto the manifold.

    Stages are evaluated at retracted points so the field only ever sees
    points on the manifold.
    """
    f = field.evaluator
    k1 = f(space.normalize(x))
    k2 = f(space.normalize(x + 0.5 * h * k1))
    k3 = f(space.normalize(x + 0.5 * h * k2))
    k4 = f(space.normalize(x + h * k3))
    y = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    drift = float(np.max(space.drift(y), initial=0.0))
    if drift > tol:
        raise IntegrationError(f"constraint drift {drift:.3e} after step {h:g} exceeds {tol:g}")
    return space.normalize(y)


# --- differential operators --------------------------------------------------

def _lie_derivative_once(Y, form, x, w, t):
    space = Y.space
    cp = space.normalize(x + t * w)
    cm = space.normalize(x - t * w)
    vals = []
    for s in (t, -t):
        base = rk4_step(Y, space, x, s, tol=1e-6)
        pushed = (rk4_step(Y, space, cp, s, tol=1e-6) - rk4_step(Y, space, cm, s, tol=1e-6)) / (2.0 * t)
        vals.append(form.evaluator(base, pushed))
    return (vals[0] - vals[1]) / (2.0 * t)


def lie_derivative_oneform(Y, form, p, v, h=1e-4, richardson=False):
    """Central-difference estimate of (L_Y form)_p(v) by flow pullback.

    The pushed-forward vector D(phi_t) v is obtained by transporting the
    finite-difference pair retract(p +- h v) along the flow.  With
    ``richardson=True`` the h and h/2 estimates are combined to cancel the
    leading O(h^2) term.
    """
    if not 0 < h <= 1e-3:
        raise InputError(f"step h must lie in (0, 1e-3], got {h}")
    x, w = coords(p), coords(v)
    coarse = _lie_derivative_once(Y, form, x, w, h)
    if not richardson:
        return coarse
    fine = _lie_derivative_once(Y, form, x, w, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def lie_bracket(X, Y, p, h=1e-5):
    """[X, Y] at p from directional derivatives: DY.X - DX.Y, projected."""
    if not 0 < h <= 1e-2:
        raise InputError(f"step h must lie in (0, 1e-2], got {h}")
    if X.space.tag != Y.space.tag:
        raise InputError(f"fields live on different spaces: {X.space.tag} vs {Y.space.tag}")
    space = X.space
    x = coords(p)
    xv, yv = X.evaluator(x), Y.evaluator(x)

    def directional(F, d):
        return (F.evaluator(space.normalize(x + h * d)) - F.evaluator(space.normalize(x - h * d))) / (2.0 * h)

    out = space.project_tangent(x, directional(Y, xv) - directional(X, yv))
    if isinstance(p, Point):
        return Tangent(p, out)
    return out


def exterior_derivative_fd(form, h=1e-5):
    """Two-form d(form) from central differences of the ambient coefficients.

    Uses constant ambient extensions of u and v, whose bracket vanishes, so
    d(form)(u, v) = u(form(v)) - v(form(u)).
    """

    def evaluator(x, u, v):
        return (
            form.evaluator(x + h * u, v)
            - form.evaluator(x - h * u, v)
            - form.evaluator(x + h * v, u)
            + form.evaluator(x - h * v, u)
        ) / (2.0 * h)

    return TwoForm(evaluator, form.space)


def pfaffian(a):
    """Pfaffian of a small antisymmetric matrix by expansion along row 0."""
    a = np.asarray(a, dtype=float)
    m = a.shape[0]
    if m == 0:
        return 1.0
    if m % 2:
        return 0.0
    total = 0.0
    rest = list(range(1, m))
    for pos, j in enumerate(rest):
        if a[0, j] == 0.0:
            continue
        keep = [k for k in rest if k != j]
        total += (-1) ** pos * a[0, j] * pfaffian(a[np.ix_(keep, keep)])
    return total


def wedge_volume(alpha_values, dalpha_matrix):
    """(alpha ^ (d alpha)^n)(v_0, ..., v_2n) from alpha(v_i) and d alpha(v_i, v_j)."""
    a = np.asarray(alpha_values, dtype=float)
    b = np.asarray(dalpha_matrix, dtype=float)
    m = a.shape[0]
    n = (m - 1) // 2
    total = 0.0
    for i in range(m):
        keep = [k for k in range(m) if k != i]
        total += (-1) ** i * a[i] * pfaffian(b[np.ix_(keep, keep)])
    return math.factorial(n) * total


def contact_volume_check(bundle, p, basis, method="exact"):
    """Value of alpha ^ (d alpha)^n on a probe basis of T_pP.

    ``method="fd"`` differentiates alpha numerically instead of using the
    model's closed-form d alpha.  Repeated probe vectors give zero; a probe
    set of the wrong size or containing non-tangent vectors is rejected.
    """
    space = bundle.total
    x = coords(p)
    vecs = np.asarray([coords(b) for b in basis], dtype=float)
    if vecs.ndim != 2 or vecs.shape != (space.dim, space.ambient_dim):
        raise InputError(
            f"probe basis must hold {space.dim} vectors of length {space.ambient_dim}, got shape {vecs.shape}"
        )
    bad = space.tangent_residual(x, vecs)
    if np.max(bad) >= TANGENT_TOL * max(1.0, float(np.max(np.abs(vecs)))):
        raise InputError(f"probe vector not tangent at p (residual {np.max(bad):.3e})")
    if method == "exact":
        dalpha = bundle.dalpha
    elif method == "fd":
        dalpha = exterior_derivative_fd(bundle.alpha)
    else:
        raise InputError(f"unknown method {method!r}")
    m = len(vecs)
    a = bundle.alpha.evaluator(np.broadcast_to(x, vecs.shape), vecs)
    ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    b = dalpha.evaluator(np.broadcast_to(x, (m, m, len(x))), vecs[ii], vecs[jj])
    return wedge_volume(a, b)


def orthonormal_tangent_basis(space, x):
    """Orthonormal basis of the tangent space at a sphere point x."""
    x = np.asarray(x, dtype=float)
    proj = np.eye(len(x)) - np.outer(x, x)
    u, s, _ = np.linalg.svd(proj)
    return u[:, : space.dim].T
