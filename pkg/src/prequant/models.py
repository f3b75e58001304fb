"""Catalog of explicit prequantum circle bundles with Hamiltonian torus actions.

Two families, both with a sphere as total space:

``s2:<n>``
    S^3 / Z_n  ->  S^2, the level-n bundle (n = 1 is the Hopf fibration).
``cpn:<k>``
    S^{2k+1}  ->  CP^k, level 1, with the rank-k coordinate torus.

Orientation conventions.  The structure circle acts by
``theta . z = exp(-2 pi i theta / n) z`` and the connection is
``alpha = -(n / 2 pi) Im <z, dz>`` so that ``alpha(R) = 1``.  The base form
is then forced by ``d alpha = pi^* omega``.  With these choices the moment
maps below satisfy ``d Phi^X = omega(X_B, .)``, horizontal transport around
the boundary of a swept disk picks up ``+int omega``, and the lifted
coordinate rotations are exactly the lifts built from the normalized moment
map.  Flipping the fiber sign reverses both identities at once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DomainError, InputError, PrequantError
from .geom import (
    LensSpace,
    OneForm,
    Point,
    ProjectiveSpace,
    Sphere,
    TwoForm,
    VectorField,
    as_complex,
    as_real,
    coords,
    herm,
)

FIBER_SIGN = -1.0
FIBER_TOL = 1e-8
MAX_CPN = 3


class BundleModel:
    """A principal circle bundle P -> B with connection alpha, d alpha = pi^* omega.

    The total space is a unit sphere in C^N (a lens quotient for ``s2:n``);
    the circle acts by a scalar phase with period 1.
    """

    kind = ""

    def __init__(self, level, total, base):
        self.level = level
        self.total = total
        self.base = base
        self.alpha = OneForm(self._alpha, total)
        self.dalpha = TwoForm(self._dalpha, total)
        self.omega = TwoForm(self._omega, base)
        self.reeb = VectorField(self._reeb, total)

    # subclasses supply: model_id, project, pushforward, horizontal_lift, _omega, section

    @property
    def total_dim(self):
        return self.total.dim

    @property
    def base_dim(self):
        return self.base.dim

    def _alpha(self, x, w):
        return FIBER_SIGN * self.level / (2 * np.pi) * np.imag(herm(as_complex(x), as_complex(w)))

    def _dalpha(self, x, u, v):
        return FIBER_SIGN * self.level / np.pi * np.imag(herm(as_complex(u), as_complex(v)))

    def _reeb(self, x):
        return as_real(FIBER_SIGN * (2j * np.pi / self.level) * as_complex(x))

    def circle_act(self, theta, p):
        x = coords(p)
        phase = np.exp(FIBER_SIGN * 2j * np.pi * np.asarray(theta, dtype=float) / self.level)
        out = as_real(as_complex(x) * np.asarray(phase)[..., None])
        if isinstance(p, Point):
            return Point(self.total.normalize(out), p.space_tag)
        return out

    def base_distance(self, p, q):
        return self.base.distance(self.project(p), self.project(q))

    def fiber_phase(self, p, q):
        """The theta in [0, 1) with circle_act(theta, p) == q."""
        x, y = coords(p), coords(q)
        gap = np.max(self.base_distance(x, y), initial=0.0)
        if gap > FIBER_TOL:
            raise DomainError(f"points lie on different fibers (base distance {gap:.3e})")
        c = herm(as_complex(x), as_complex(y))
        theta = FIBER_SIGN * self.level * np.angle(c) / (2 * np.pi)
        # rounding in the inner product leaves ~1e-18 phases on identical points
        theta = np.where(np.abs(theta) < 1e-14, 0.0, theta)
        theta = theta - np.floor(theta)
        return np.where(theta >= 1.0, 0.0, theta)

    def vertical_part(self, x, w):
        return np.asarray(self.alpha.evaluator(x, w))[..., None] * self.reeb.evaluator(x)

    def sample_total(self, rng, m):
        return self.total.sample(rng, m)

    def sample_base(self, rng, m):
        return self.project(self.sample_total(rng, m))

    def __repr__(self):
        return f"<BundleModel {self.model_id} {self.total.tag} -> {self.base.tag}>"


class HopfLensBundle(BundleModel):
    """Level-n bundle S^3/Z_n -> S^2 through the Hopf map."""

    kind = "s2"

    def __init__(self, level):
        super().__init__(level, LensSpace(level), Sphere(3, tag="S^2"))
        self.model_id = f"s2:{level}"

    @property
    def level_or_dim(self):
        return self.level

    def project(self, p):
        z = as_complex(self.total.normalize(coords(p)))
        w = np.conj(z[..., 0]) * z[..., 1]
        out = np.stack(
            [2 * np.real(w), 2 * np.imag(w), np.abs(z[..., 0]) ** 2 - np.abs(z[..., 1]) ** 2], axis=-1
        )
        if isinstance(p, Point):
            return Point(self.base.normalize(out), self.base.tag)
        return out

    def pushforward(self, p, u):
        z = as_complex(self.total.normalize(coords(p)))
        du = as_complex(coords(u))
        dw = np.conj(du[..., 0]) * z[..., 1] + np.conj(z[..., 0]) * du[..., 1]
        d3 = 2 * np.real(np.conj(z[..., 0]) * du[..., 0]) - 2 * np.real(np.conj(z[..., 1]) * du[..., 1])
        return np.stack([2 * np.real(dw), 2 * np.imag(dw), d3], axis=-1)

    def horizontal_basis(self, x):
        z = as_complex(self.total.normalize(x))
        u = np.stack([-np.conj(z[..., 1]), np.conj(z[..., 0])], axis=-1)
        return as_real(u), as_real(1j * u)

    def lift_vector(self, x, v):
        e1, e2 = self.horizontal_basis(x)
        # d pi maps the orthonormal pair (e1, e2) to an orthogonal pair of length 2
        a = np.sum(self.pushforward(x, e1) * v, axis=-1) / 4.0
        b = np.sum(self.pushforward(x, e2) * v, axis=-1) / 4.0
        return a[..., None] * e1 + b[..., None] * e2

    def _omega(self, b, u, v):
        return FIBER_SIGN * self.level / (4 * np.pi) * np.sum(b * np.cross(u, v), axis=-1)

    def section(self, b):
        """Some point of P over each base point (chart chosen away from the poles)."""
        b = np.asarray(coords(b), dtype=float)
        x1, x2, x3 = b[..., 0], b[..., 1], b[..., 2]
        north = x3 >= 0
        r_n = np.sqrt(np.maximum((1 + x3) / 2, 1e-300))
        r_s = np.sqrt(np.maximum((1 - x3) / 2, 1e-300))
        z_n = np.stack([r_n + 0j, (x1 + 1j * x2) / (2 * r_n)], axis=-1)
        z_s = np.stack([(x1 - 1j * x2) / (2 * r_s), r_s + 0j], axis=-1)
        z = np.where(north[..., None], z_n, z_s)
        return self.total.normalize(as_real(z))


class ProjectiveBundle(BundleModel):
    """Level-1 bundle S^{2k+1} -> CP^k."""

    kind = "cpn"

    def __init__(self, n_dim):
        super().__init__(1, Sphere(2 * n_dim + 2), ProjectiveSpace(n_dim))
        self.n_dim = n_dim
        self.model_id = f"cpn:{n_dim}"

    @property
    def level_or_dim(self):
        return self.n_dim

    def project(self, p):
        out = self.base.canonical(coords(p))
        if isinstance(p, Point):
            return Point(out, self.base.tag)
        return out

    def _gauge(self, x):
        z = as_complex(self.total.normalize(x))
        b = as_complex(self.base.canonical(x))
        return z, herm(b, z)

    def pushforward(self, p, u):
        z, g = self._gauge(coords(p))
        du = as_complex(coords(u))
        hor = du - herm(z, du)[..., None] * z
        return as_real(np.conj(g)[..., None] * hor)

    def lift_vector(self, x, v):
        _, g = self._gauge(x)
        return as_real(g[..., None] * as_complex(v))

    def _omega(self, b, u, v):
        return FIBER_SIGN / np.pi * np.imag(herm(as_complex(u), as_complex(v)))

    def section(self, b):
        return np.asarray(coords(b), dtype=float).copy()


def horizontal_tangent_check(bundle, x, v, tol=1e-8):
    b = bundle.project(x)
    res = np.max(bundle.base.tangent_residual(b, v), initial=0.0)
    if res > tol * max(1.0, float(np.max(np.abs(v), initial=0.0))):
        raise InputError(f"base vector is not tangent at pi(p) (residual {res:.3e})")


# --- torus actions -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TorusActionSpec:
    """Hamiltonian action of T^k on the base, given by its lattice generators.

    ``raw_moment(b)`` returns the k moment components before the constant
    ``offsets`` are added; ``moment(b)`` includes them.  ``flow_map(angles, b)``
    is the action of exp(sum angles_i X_i) with angles in units of full turns.
    """

    rank: int
    generators: tuple
    raw_moment: Callable
    offsets: tuple
    fixed_point: np.ndarray
    flow_map: Callable
    space: object
    normalized: bool = False
    other_fixed_points: tuple = ()

    def moment(self, b):
        return self.raw_moment(coords(b)) + np.asarray(self.offsets, dtype=float)

    def moment_component(self, X, b):
        return self.moment(b) @ np.asarray(X, dtype=float)

    def generator(self, X):
        X = tuple(float(c) for c in np.asarray(X, dtype=float).reshape(-1))
        if len(X) != self.rank:
            raise InputError(f"expected a vector of length {self.rank}, got {len(X)}")
        gens = self.generators

        def evaluator(b):
            b = np.asarray(b, dtype=float)
            out = np.zeros_like(b)
            for c, g in zip(X, gens):
                if c:
                    out = out + c * g.evaluator(b)
            return out

        return VectorField(evaluator, self.space)

    def generator_values(self, X, b):
        """sum_i X_i X_B^(i)(b) with X broadcast against the batch of points."""
        X = np.asarray(X, dtype=float)
        b = np.asarray(b, dtype=float)
        out = np.zeros(np.broadcast_shapes(b.shape, X.shape[:-1] + (b.shape[-1],)))
        for i, g in enumerate(self.generators):
            out = out + X[..., i, None] * g.evaluator(b)
        return out

    def flow(self, X, t, b):
        angles = np.multiply.outer(np.asarray(t, dtype=float), np.asarray(X, dtype=float))
        return self.flow_map(angles, coords(b))

    def with_offsets(self, offsets, normalized):
        return replace(self, offsets=tuple(float(c) for c in offsets), normalized=normalized)


def _s2_action(level, space):
    def gen(b):
        b = np.asarray(b, dtype=float)
        return 2 * np.pi * np.stack([b[..., 1], -b[..., 0], np.zeros(b.shape[:-1])], axis=-1)

    def raw_moment(b):
        # moment map of the full rotation algebra, restricted to the x3 axis
        return (level / 2.0 * np.asarray(b, dtype=float)[..., 2])[..., None]

    def flow_map(angles, b):
        a = 2 * np.pi * np.asarray(angles)[..., 0]
        c, s = np.cos(a), np.sin(a)
        return np.stack([c * b[..., 0] + s * b[..., 1], -s * b[..., 0] + c * b[..., 1], b[..., 2] + 0 * a], axis=-1)

    return TorusActionSpec(
        rank=1,
        generators=(VectorField(gen, space),),
        raw_moment=raw_moment,
        offsets=(0.0,),
        fixed_point=np.array([0.0, 0.0, -1.0]),
        flow_map=flow_map,
        space=space,
        other_fixed_points=(np.array([0.0, 0.0, 1.0]),),
    )


def _cpn_action(n_dim, space):
    def make_gen(j):
        def gen(b):
            z = as_complex(space.normalize(b))
            v = np.zeros_like(z)
            v[..., j] = 2j * np.pi * z[..., j]
            return as_real(v - herm(z, v)[..., None] * z)

        return VectorField(gen, space)

    def raw_moment(b):
        z = as_complex(space.normalize(b))
        # centred (traceless) moment map of the coordinate torus
        return np.abs(z[..., 1:]) ** 2 - 1.0 / (n_dim + 1)

    def flow_map(angles, b):
        z = as_complex(b)
        phase = np.ones(np.broadcast_shapes(z.shape, np.shape(angles)[:-1] + (n_dim + 1,)), dtype=complex)
        phase[..., 1:] = np.exp(2j * np.pi * np.asarray(angles))
        return space.canonical(as_real(z * phase))

    b0 = np.zeros(2 * n_dim + 2)
    b0[0] = 1.0
    return TorusActionSpec(
        rank=n_dim,
        generators=tuple(make_gen(j) for j in range(1, n_dim + 1)),
        raw_moment=raw_moment,
        offsets=(0.0,) * n_dim,
        fixed_point=b0,
        flow_map=flow_map,
        space=space,
        other_fixed_points=tuple(np.eye(2 * n_dim + 2)[2 * j] for j in range(1, n_dim + 1)),
    )


def _check_lens_invariance(bundle, rng):
    """alpha, R and pi must descend to S^3 / Z_n."""
    x = bundle.sample_total(rng, 4)
    w = bundle.total.project_tangent(x, rng.standard_normal(x.shape))
    for k in range(1, bundle.level):
        root = np.exp(2j * np.pi * k / bundle.level)
        y = as_real(root * as_complex(x))
        wy = as_real(root * as_complex(w))
        defects = (
            np.abs(bundle.alpha.evaluator(x, w) - bundle.alpha.evaluator(y, wy)),
            np.abs(bundle.project(x) - bundle.project(y)).max(axis=-1),
            np.abs(as_real(root * as_complex(bundle.reeb.evaluator(x))) - bundle.reeb.evaluator(y)).max(axis=-1),
        )
        worst = max(float(np.max(d)) for d in defects)
        if worst > 1e-12:
            raise PrequantError(f"level-{bundle.level} model is not Z_n invariant (defect {worst:.3e})")


def make_s2_bundle(n):
    """Level-n bundle over S^2 with the period-1 rotation about the x3 axis."""
    from .lift import normalize_moment_map

    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InputError("level must be ≥ 1")
    bundle = HopfLensBundle(int(n))
    _check_lens_invariance(bundle, np.random.default_rng(12345))
    return bundle, normalize_moment_map(_s2_action(int(n), bundle.base))


def make_cpn_bundle(n_dim):
    """Level-1 bundle S^{2k+1} -> CP^k with the rank-k coordinate torus."""
    from .lift import normalize_moment_map

    if isinstance(n_dim, bool) or not isinstance(n_dim, (int, np.integer)) or not 1 <= n_dim <= MAX_CPN:
        raise InputError(f"n_dim must be in 1..{MAX_CPN}")
    bundle = ProjectiveBundle(int(n_dim))
    return bundle, normalize_moment_map(_cpn_action(int(n_dim), bundle.base))


_MODEL_RE = re.compile(r"^(s2|cpn):(-?\d+)$")


def parse_model_id(model_id):
    m = _MODEL_RE.match(str(model_id))
    if not m:
        raise InputError(f"unknown model id {model_id!r} (expected 's2:<n>' or 'cpn:<n_dim>')")
    kind, num = m.group(1), int(m.group(2))
    if kind == "s2" and num < 1:
        raise InputError("level must be ≥ 1")
    if kind == "cpn" and not 1 <= num <= MAX_CPN:
        raise InputError(f"n_dim must be in 1..{MAX_CPN}")
    return kind, num


def make_model(model_id):
    kind, num = parse_model_id(model_id)
    return make_s2_bundle(num) if kind == "s2" else make_cpn_bundle(num)


def project(bundle, p):
    return bundle.project(p)


def fiber_phase(bundle, p, q):
    return bundle.fiber_phase(p, q)


def circular_distance(a, b):
    """Distance between phases in R/Z."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float) + 0.5, 1.0) - 0.5
    return np.abs(d)
