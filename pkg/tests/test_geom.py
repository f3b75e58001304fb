"""Points, projections, finite-difference operators and the contact volume."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prequant.errors import InputError
from prequant.geom import (
    OneForm,
    Point,
    Sphere,
    Tangent,
    VectorField,
    contact_volume_check,
    exterior_derivative_fd,
    lie_bracket,
    lie_derivative_oneform,
    orthonormal_tangent_basis,
    pfaffian,
    space_from_tag,
    tangent_project,
    zero_field,
)

S3 = "S^3"
coord = st.floats(-1.0, 1.0, allow_nan=False)
vec4 = st.lists(coord, min_size=4, max_size=4)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_radial_vector_projects_to_zero():
    p = Point(unit([1, 2, 3, 4]), S3)
    assert np.allclose(tangent_project(p, p.ambient).vec, 0.0, atol=1e-15)


def test_drop_radial_component_example():
    p = Point([1.0, 0.0, 0.0, 0.0], S3)
    out = tangent_project(p, np.array([0.3, 1.0, 0.0, 0.0]))
    assert np.allclose(out.vec, [0.0, 1.0, 0.0, 0.0], atol=1e-15)


def test_tangent_project_dimension_mismatch():
    p = Point([1.0, 0.0, 0.0, 0.0], S3)
    with pytest.raises(InputError):
        tangent_project(p, np.ones(3))


@settings(max_examples=60, deadline=None)
@given(x=vec4, w=vec4, u=vec4)
def test_tangent_project_idempotent_and_self_adjoint(x, w, u):
    if np.linalg.norm(x) < 1e-3:
        return
    p = Point(unit(x), S3)
    pw = tangent_project(p, np.asarray(w)).vec
    assert np.allclose(tangent_project(p, pw).vec, pw, atol=1e-14)
    pu = tangent_project(p, np.asarray(u)).vec
    assert abs(np.dot(pw, u) - np.dot(w, pu)) < 1e-12


def test_point_rejects_off_manifold_and_bad_tags():
    with pytest.raises(InputError):
        Point([1.0, 1e-5, 0.0, 0.0], S3)
    with pytest.raises(InputError):
        Point([1.0, 0.0, 0.0], S3)
    with pytest.raises(InputError):
        space_from_tag("T^2")
    with pytest.raises(InputError):
        space_from_tag("L(0,1)")


def test_tangent_rejects_normal_vector():
    p = Point([1.0, 0.0, 0.0, 0.0], S3)
    with pytest.raises(InputError):
        Tangent(p, [1.0, 0.0, 0.0, 0.0])


def test_projective_points_need_the_canonical_gauge():
    Point([1.0, 0.0, 0.0, 0.0, 0.0, 0.0], "CP^2")
    with pytest.raises(InputError):
        Point([0.0, 1.0, 0.0, 0.0, 0.0, 0.0], "CP^2")


# --- contact volume ----------------------------------------------------------
# At z = (1, 0) the tangent frame (i e0, e1, i e1) pairs with the level-n
# connection as alpha(i e0) = -n / 2pi, alpha(e1) = alpha(i e1) = 0 and
# d alpha(e1, i e1) = -n / pi, so alpha ^ d alpha = n^2 / (2 pi^2) on it.

FRAME = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])


@pytest.mark.parametrize("level", [1, 3])
def test_contact_volume_closed_form(models, level):
    bundle, _ = models(f"s2:{level}")
    p = np.array([1.0, 0.0, 0.0, 0.0])
    expected = level**2 / (2 * math.pi**2)
    assert contact_volume_check(bundle, p, FRAME) == pytest.approx(expected, rel=1e-12)
    assert contact_volume_check(bundle, p, FRAME, method="fd") == pytest.approx(expected, rel=1e-8)
    assert abs(expected) > 0.01


def test_contact_volume_orthonormal_basis_any_point(models, rng):
    bundle, _ = models("s2:3")
    for x in bundle.sample_total(rng, 5):
        basis = orthonormal_tangent_basis(bundle.total, x)
        assert abs(contact_volume_check(bundle, x, basis)) > 0.01


def test_contact_volume_repeated_vector_is_zero(models):
    bundle, _ = models("s2:1")
    basis = np.array([FRAME[0], FRAME[1], FRAME[1]])
    assert contact_volume_check(bundle, np.array([1.0, 0, 0, 0]), basis) == 0.0


def test_contact_volume_rejects_bad_probes(models):
    bundle, _ = models("s2:1")
    p = np.array([1.0, 0, 0, 0])
    with pytest.raises(InputError):
        contact_volume_check(bundle, p, FRAME[:2])
    with pytest.raises(InputError):
        contact_volume_check(bundle, p, np.array([[1.0, 0, 0, 0], FRAME[1], FRAME[2]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_pfaffian_squares_to_determinant(half, seed):
    a = np.random.default_rng(seed).standard_normal((2 * half, 2 * half))
    a = a - a.T
    assert pfaffian(a) ** 2 == pytest.approx(np.linalg.det(a), rel=1e-9, abs=1e-12)


# --- Lie derivative and bracket against linear flows ---------------------------

def rotation_field(i, j, dim=4):
    a = np.zeros((dim, dim))
    a[i, j], a[j, i] = -1.0, 1.0
    return a, VectorField(lambda x: x @ a.T, Sphere(dim))


def linear_form(b, space):
    return OneForm(lambda x, w: np.sum((x @ b.T) * w, axis=-1), space)


def test_lie_derivative_of_linear_form_along_rotation(rng):
    # (L_Y beta)(v) = (B A x).v + (B x).(A v) for Y = A x, beta_x(w) = (B x).w
    a, field = rotation_field(0, 2)
    b = rng.standard_normal((4, 4))
    form = linear_form(b, field.space)
    x = unit(rng.standard_normal(4))
    v = field.space.project_tangent(x, rng.standard_normal(4))
    exact = (b @ a @ x) @ v + (b @ x) @ (a @ v)
    coarse = lie_derivative_oneform(field, form, x, v, h=1e-3)
    fine = lie_derivative_oneform(field, form, x, v, h=1e-3, richardson=True)
    assert abs(coarse - exact) < 1e-5
    assert abs(fine - exact) <= 0.5 * abs(coarse - exact) + 1e-12


def test_lie_derivative_step_bounds():
    _, field = rotation_field(0, 1)
    form = linear_form(np.eye(4), field.space)
    x = np.array([1.0, 0, 0, 0])
    with pytest.raises(InputError):
        lie_derivative_oneform(field, form, x, x, h=2e-3)


def test_lie_derivative_along_zero_field_is_exactly_zero(models, rng):
    bundle, _ = models("s2:1")
    x = bundle.sample_total(rng, 4)
    v = bundle.total.project_tangent(x, rng.standard_normal(x.shape))
    assert np.all(lie_derivative_oneform(zero_field(bundle.total), bundle.alpha, x, v) == 0.0)


@pytest.mark.parametrize("model_id", ["s2:1", "s2:3", "cpn:2"])
def test_reeb_preserves_alpha(models, rng, model_id):
    bundle, _ = models(model_id)
    x = bundle.sample_total(rng, 100)
    v = bundle.total.project_tangent(x, rng.standard_normal(x.shape))
    assert np.max(np.abs(lie_derivative_oneform(bundle.reeb, bundle.alpha, x, v))) < 1e-6


def test_bracket_of_rotations_matches_commutator(rng):
    # for linear fields A x and B x: DY.X - DX.Y = (B A - A B) x
    a, fa = rotation_field(0, 1)
    b, fb = rotation_field(1, 2)
    x = unit(rng.standard_normal((6, 4)))
    x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    exact = x @ (b @ a - a @ b).T
    assert np.max(np.abs(lie_bracket(fa, fb, x) - exact)) < 1e-8


def test_bracket_with_itself_vanishes(models, rng):
    bundle, _ = models("cpn:2")
    x = bundle.sample_total(rng, 10)
    assert np.max(np.abs(lie_bracket(bundle.reeb, bundle.reeb, x))) < 1e-8
    p = Point(x[0], bundle.total.tag)
    assert isinstance(lie_bracket(bundle.reeb, bundle.reeb, p), Tangent)


def test_bracket_step_bounds():
    _, fa = rotation_field(0, 1)
    with pytest.raises(InputError):
        lie_bracket(fa, fa, np.array([1.0, 0, 0, 0]), h=0.1)


@pytest.mark.parametrize("model_id", ["s2:2", "cpn:2"])
def test_fd_exterior_derivative_matches_exact(models, rng, model_id):
    bundle, _ = models(model_id)
    x = bundle.sample_total(rng, 20)
    u = bundle.total.project_tangent(x, rng.standard_normal(x.shape))
    v = bundle.total.project_tangent(x, rng.standard_normal(x.shape))
    fd = exterior_derivative_fd(bundle.alpha).evaluator(x, u, v)
    assert np.max(np.abs(fd - bundle.dalpha.evaluator(x, u, v))) < 1e-8
