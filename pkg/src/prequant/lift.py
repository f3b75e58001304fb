"""Moment-map normalization and the equivariant lift of torus generators.

A base generator X_B lifts to the total space as

    X_P = X_B^h - (Phi^X o pi) R

where X_B^h is the horizontal lift and R the generator of the structure
circle.  With Phi normalized to vanish at a fixed point, the lifts of
lattice vectors have period-1 flows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InputError, PreconditionError, PrequantError
from .geom import (
    Point,
    Tangent,
    VectorField,
    as_complex,
    as_real,
    coords,
    herm,
    lie_derivative_oneform,
)
from .models import FIBER_SIGN, horizontal_tangent_check

FIXED_POINT_TOL = 1e-8


@dataclass(frozen=True)
class LatticeVector:
    """Integer coordinates of a vector in the integral lattice of the torus."""

    coeffs: tuple

    def __post_init__(self):
        vals = np.asarray(self.coeffs)
        if vals.ndim != 1 or vals.size == 0:
            raise InputError("lattice vector needs a non-empty 1-d coefficient list")
        if not np.all(np.equal(np.mod(vals, 1), 0)):
            raise InputError(f"lattice coefficients must be integers, got {self.coeffs}")
        object.__setattr__(self, "coeffs", tuple(int(c) for c in vals))

    @classmethod
    def basis(cls, rank, i):
        c = [0] * rank
        c[i] = 1
        return cls(tuple(c))

    def as_array(self):
        return np.asarray(self.coeffs, dtype=float)


@dataclass(frozen=True)
class LiftedField:
    source: Union[LatticeVector, tuple]
    field: VectorField
    offset: float
    base_generator: VectorField
    horizontal: VectorField

    @property
    def is_lattice(self):
        return isinstance(self.source, LatticeVector)

    def __call__(self, p):
        return self.field(p)


def _as_vector(X, rank):
    if isinstance(X, LatticeVector):
        vec = X.as_array()
    else:
        vec = np.asarray(X, dtype=float).reshape(-1)
    if vec.shape != (rank,):
        raise InputError(f"expected a vector of length {rank}, got shape {vec.shape}")
    return vec


def normalize_moment_map(action):
    """Shift every moment component so that it vanishes at the fixed point."""
    b0 = action.fixed_point
    for i, g in enumerate(action.generators):
        speed = float(np.linalg.norm(g.evaluator(b0)))
        if speed >= FIXED_POINT_TOL:
            raise PreconditionError(f"registered point is not fixed by generator {i} (|X_B| = {speed:.3e})")
    values = action.moment(b0)
    if action.normalized and np.all(values == 0.0):
        return action
    return action.with_offsets(np.asarray(action.offsets) - values, normalized=True)


def horizontal_lift(bundle, p, v):
    """The unique w at p with alpha(w) = 0 and d pi(w) = v."""
    x, vec = coords(p), coords(v)
    horizontal_tangent_check(bundle, x, vec)
    w = bundle.lift_vector(x, vec)
    if isinstance(p, Point):
        return Tangent(p, w)
    return w


def lift_field(bundle, action, X, offset=None):
    """Pointwise lift p -> X_B^h(p) - (Phi^X(pi p) + c) R(p).

    ``offset`` adds the constant c to the moment component.  It is required
    when the action is not normalized, so an unnormalized lift is never
    produced by accident.
    """
    if not action.normalized and offset is None:
        raise PreconditionError("moment map is not normalized; pass an explicit offset to lift anyway")
    c = 0.0 if offset is None else float(offset)
    vec = _as_vector(X, action.rank)
    source = X if isinstance(X, LatticeVector) else tuple(vec)
    base_gen = action.generator(vec)

    def horizontal(x):
        return bundle.lift_vector(x, base_gen.evaluator(bundle.project(x)))

    def evaluator(x):
        b = bundle.project(x)
        phi = action.moment_component(vec, b) + c
        return bundle.lift_vector(x, base_gen.evaluator(b)) - np.asarray(phi)[..., None] * bundle.reeb.evaluator(x)

    return LiftedField(
        source=source,
        field=VectorField(evaluator, bundle.total),
        offset=c,
        base_generator=base_gen,
        horizontal=VectorField(horizontal, bundle.total),
    )


def fd_gradient(h, space, x, eps=1e-5):
    """Ambient gradient of h o retract by central differences."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = eps
        grad[..., k] = (h(space.normalize(x + e)) - h(space.normalize(x - e))) / (2 * eps)
    return grad


def reeb_derivative(bundle, h, eps=1e-5):
    """p -> dh(R)_p, differentiating h along the fiber."""

    def evaluator(p):
        x = coords(p)
        return (h(bundle.circle_act(eps, x)) - h(bundle.circle_act(-eps, x))) / (2 * eps)

    return evaluator


def contact_vector_field(bundle, h, grad=None, self_check=True):
    """The contact vector field with contact Hamiltonian alpha(Y) = h.

    Y = h R + Y_xi where Y_xi in ker(alpha) solves
    d alpha(Y_xi, u) = -dh(u) for all u in ker(alpha).  On every registered
    model d alpha restricted to ker(alpha) is kappa Im<., .>, so
    Y_xi = (1/kappa) J P_xi grad(h), with J the complex structure.
    Then L_Y alpha = dh(R) alpha.
    """
    kappa = FIBER_SIGN * bundle.level / np.pi
    space = bundle.total

    def gradient(x):
        if grad is not None:
            return grad(x)
        return fd_gradient(h, space, x)

    def evaluator(x):
        x = np.asarray(x, dtype=float)
        z = as_complex(space.normalize(x))
        g = as_complex(gradient(x))
        g_xi = g - herm(z, g)[..., None] * z
        y_xi = as_real(1j * g_xi / kappa)
        return np.asarray(h(x))[..., None] * bundle.reeb.evaluator(x) + y_xi

    field = VectorField(evaluator, space)
    if self_check:
        _check_contact_field(bundle, field, h)
    return field


def _check_contact_field(bundle, Y, h, n=4):
    rng = np.random.default_rng(2024)
    x = bundle.sample_total(rng, n)
    hv = np.asarray(h(x), dtype=float)
    pairing = float(np.max(np.abs(bundle.alpha.evaluator(x, Y.evaluator(x)) - hv)))
    if pairing > 1e-8:
        raise PrequantError(f"contact field fails alpha(Y) = h (defect {pairing:.3e})")
    v = bundle.total.project_tangent(x, rng.standard_normal(x.shape))
    lie = lie_derivative_oneform(Y, bundle.alpha, x, v)
    expected = reeb_derivative(bundle, h)(x) * bundle.alpha.evaluator(x, v)
    defect = float(np.max(np.abs(lie - expected)))
    if defect > 1e-5:
        raise PrequantError(f"contact field fails L_Y alpha = dh(R) alpha (defect {defect:.3e})")
