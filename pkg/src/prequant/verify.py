"""Named, seeded numerical checks that turn each geometric claim into a CheckReport.

Composite checks (several quantities with different tolerances) report the
largest defect-to-tolerance ratio, with tolerance 1.0; the individual
values are listed in ``notes``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import PrequantError
from .flows import (
    DEFAULT_FLOW,
    closure_defect,
    disk_integral,
    holonomy,
    integrate_flow,
    orbit_loop,
    random_path,
    swept_disk_integral,
    trajectory,
)
from .geom import (
    VectorField,
    contact_volume_check,
    exterior_derivative_fd,
    lie_bracket,
    lie_derivative_oneform,
    orthonormal_tangent_basis,
)
from .lift import LatticeVector, lift_field
from .models import circular_distance, make_s2_bundle
from .parallel import fan_out

PASS = "pass"
FAIL = "fail"
HYPOTHESIS_FAILURE = "hypothesis-failure"

CONTACT_THRESHOLD = 0.01


@dataclass
class CheckReport:
    name: str
    status: str
    max_defect: float
    tolerance: float
    samples: int
    seed: int
    wall_time: float
    notes: str = ""
    details: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def passed(self):
        return self.status == PASS

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "max_defect": self.max_defect,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "notes": self.notes,
        }


@dataclass
class LemmaTwoWitness:
    """Data behind an f-extraction check: f is read off as (L_Y alpha)(R)."""

    field: VectorField
    extracted_f: Callable
    commutes_with_R: float
    xi_preserved: float
    points: np.ndarray
    f_values: np.ndarray


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else float(np.finfo(float).max)


def _report(name, defect, tol, samples, seed, start, notes="", details=None):
    defect = _finite(defect)
    return CheckReport(
        name=name,
        status=PASS if defect < tol else FAIL,
        max_defect=defect,
        tolerance=float(tol),
        samples=int(samples),
        seed=int(seed),
        wall_time=time.perf_counter() - start,
        notes=notes,
        details=details or {},
    )


def _composite(name, parts, samples, seed, start, threshold=1.0, extra=""):
    ratio = max(_finite(d) / t for _, d, t in parts)
    notes = "; ".join(f"{label}={_finite(d):.3e} (tol {t:g})" for label, d, t in parts)
    if extra:
        notes = f"{notes}; {extra}"
    details = {label: _finite(d) for label, d, _ in parts}
    return _report(name, ratio, threshold, samples, seed, start, notes, details)


def _unit_tangents(space, x, rng):
    w = space.project_tangent(x, rng.standard_normal(x.shape))
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def _horizontal_probes(bundle, x, rng):
    w = _unit_tangents(bundle.total, x, rng)
    u = w - bundle.vertical_part(x, w)
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


def _generators(action):
    return [LatticeVector.basis(action.rank, i) for i in range(action.rank)]


def _random_lattice(rng, rank, m):
    out = []
    while len(out) < m:
        v = rng.integers(-2, 3, size=rank)
        if np.any(v):
            out.append(v)
    return np.asarray(out, dtype=float)


# --- individual checks -------------------------------------------------------

def check_connection_axioms(bundle, action=None, samples=100, seed=0, cfg=DEFAULT_FLOW, threshold=1.0):
    """alpha(R) = 1, L_R alpha = 0, d alpha = pi^* omega on horizontals, circle_act(1) = id."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    pairing = np.abs(bundle.alpha.evaluator(x, bundle.reeb.evaluator(x)) - 1.0)
    v = _unit_tangents(bundle.total, x, rng)
    lie = np.abs(lie_derivative_oneform(bundle.reeb, bundle.alpha, x, v))
    u, w = _horizontal_probes(bundle, x, rng), _horizontal_probes(bundle, x, rng)
    b = bundle.project(x)
    curvature = np.abs(
        exterior_derivative_fd(bundle.alpha).evaluator(x, u, w)
        - bundle.omega.evaluator(b, bundle.pushforward(x, u), bundle.pushforward(x, w))
    )
    period = bundle.total.distance(bundle.circle_act(1.0, x), x)
    parts = [
        ("alpha(R)-1", pairing.max(), 1e-10),
        ("L_R alpha", lie.max(), 1e-6),
        ("d alpha - pi*omega", curvature.max(), 1e-6),
        ("circle_act(1)-id", period.max(), 1e-10),
    ]
    return _composite("connection-axioms", parts, samples, seed, start, threshold)


def check_contact_condition(bundle, action=None, samples=32, seed=0, cfg=DEFAULT_FLOW, threshold=1.0):
    """alpha ^ (d alpha)^n is bounded away from zero on orthonormal frames.

    The nondegeneracy part is reported as 0.01 / min |volume| so that it
    passes exactly when every volume exceeds 0.01 in magnitude.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    exact, fd = [], []
    for p in x:
        basis = orthonormal_tangent_basis(bundle.total, p)
        exact.append(contact_volume_check(bundle, p, basis))
        fd.append(contact_volume_check(bundle, p, basis, method="fd"))
    exact, fd = np.abs(exact), np.abs(fd)
    smallest = float(exact.min())
    parts = [
        ("0.01/min|vol|", CONTACT_THRESHOLD / smallest if smallest > 0 else math.inf, 1.0),
        ("exact vs fd", float(np.max(np.abs(exact - fd))), 1e-6),
    ]
    return _composite("contact-condition", parts, samples, seed, start, threshold, f"min|vol|={smallest:.6f}")


def check_lattice_closure(bundle, action, samples=32, seed=0, cfg=DEFAULT_FLOW, tolerance=1e-5):
    """Time-1 flows of lifted lattice generators close up."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    worst, notes = 0.0, []
    for X in _generators(action):
        lifted = lift_field(bundle, action, X)
        phases = fan_out(lambda xs: closure_defect(bundle, lifted, xs, cfg), x)
        d = float(np.max(circular_distance(phases, 0.0)))
        notes.append(f"X={X.coeffs}: {d:.3e}")
        worst = max(worst, d)
    return _report("lattice-closure", worst, tolerance, samples, seed, start, "; ".join(notes))


def shift_defects(bundle, action, offsets, samples=32, seed=0, cfg=DEFAULT_FLOW, X=None):
    """Closure phases of lifts whose moment component carries a constant offset."""
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    X = X or LatticeVector.basis(action.rank, 0)
    out = {}
    for c in offsets:
        lifted = lift_field(bundle, action, X, offset=c)
        out[float(c)] = fan_out(lambda xs: closure_defect(bundle, lifted, xs, cfg), x)
    return out


def check_shift_defect(bundle, action, samples=32, seed=0, cfg=DEFAULT_FLOW, offsets=(0.25, 0.5, 0.8), threshold=1.0):
    """A constant offset c in the moment map leaves a closure defect of c mod 1."""
    start = time.perf_counter()
    measured = shift_defects(bundle, action, offsets, samples, seed, cfg)
    err = spread = 0.0
    notes = []
    for c, phases in measured.items():
        err = max(err, float(np.max(circular_distance(phases, c % 1.0))))
        spread = max(spread, float(np.max(circular_distance(phases, phases[0]))))
        notes.append(f"c={c:g}:{float(np.mean(phases)):.6f}")
    parts = [("offset error", err, 1e-4), ("spread", spread, 1e-5)]
    report = _composite("shift-defect", parts, samples, seed, start, threshold, " ".join(notes))
    report.details["defects"] = {c: float(np.mean(p)) for c, p in measured.items()}
    return report


def _path_batch(bundle, action, samples, rng):
    Xs = _random_lattice(rng, action.rank, samples)
    ends = bundle.sample_base(rng, samples)
    paths = [random_path(bundle.base, action.fixed_point, b, rng) for b in ends]
    return Xs, ends, paths


def check_holonomy_disk(bundle, action, samples=32, seed=0, cfg=DEFAULT_FLOW, threshold=1.0):
    """Holonomy of each orbit loop equals the swept-disk integral mod 1."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    Xs, ends, paths = _path_batch(bundle, action, samples, rng)
    disks = np.array([disk_integral(bundle, action, X, tau) for X, tau in zip(Xs, paths)])
    residuals = []

    def run(Xc, bc):
        res = holonomy(bundle, orbit_loop(action, Xc, bc), bundle.section(bc), cfg)
        residuals.append(res.transport_residual)
        return res.phase

    phases = fan_out(run, Xs, ends)
    parts = [
        ("holonomy - disk mod 1", float(np.max(circular_distance(phases, disks))), 1e-4),
        ("transport residual", max(residuals), 1e-8),
    ]
    report = _composite("holonomy-disk", parts, samples, seed, start, threshold)
    report.details.update(phases=phases, disks=disks)
    return report


def check_moment_identity(bundle, action, samples=32, seed=0, cfg=DEFAULT_FLOW, threshold=1.0, pairs=5):
    """Swept-disk integral equals the moment difference; disks with one boundary differ by integers."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    Xs, ends, paths = _path_batch(bundle, action, samples, rng)
    b0 = action.fixed_point
    disks = np.array([disk_integral(bundle, action, X, tau) for X, tau in zip(Xs, paths)])
    expected = np.array([action.moment_component(X, b) - action.moment_component(X, b0) for X, b in zip(Xs, ends)])
    identity = float(np.max(np.abs(disks - expected)))
    gaps = []
    for j in range(min(pairs, samples)):
        other = action.other_fixed_points[j % len(action.other_fixed_points)]
        alt = random_path(bundle.base, other, ends[j], rng)
        diff = disks[j] - swept_disk_integral(bundle, action, Xs[j], alt)
        gaps.append(abs(diff - round(diff)))
    parts = [("moment identity", identity, 1e-5), ("path independence", max(gaps, default=0.0), 1e-4)]
    report = _composite("moment-identity", parts, samples, seed, start, threshold)
    report.details.update(disks=disks, expected=expected)
    return report


def check_lemma2(bundle, Y, samples=32, seed=0, tolerance=1e-4, hypothesis_tol=1e-4, name="lemma2"):
    """Read off f from L_Y alpha = f alpha and test that it vanishes.

    The conclusion f = 0 is only claimed for fields that commute with R and
    preserve ker(alpha); when either hypothesis fails the report says so
    with status ``hypothesis-failure`` instead of judging f.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    reeb, alpha = bundle.reeb, bundle.alpha

    def extracted_f(p):
        p = np.asarray(p, dtype=float)
        return lie_derivative_oneform(Y, alpha, p, reeb.evaluator(p))

    f_values = np.asarray(extracted_f(x))
    bracket = float(np.max(np.linalg.norm(lie_bracket(Y, reeb, x), axis=-1)))
    probes = _horizontal_probes(bundle, x, rng)
    xi_defect = float(np.max(np.abs(lie_derivative_oneform(Y, alpha, x, probes))))
    witness = LemmaTwoWitness(Y, extracted_f, bracket, xi_defect, x, f_values)
    f_max = float(np.max(np.abs(f_values)))
    notes = f"max|f|={f_max:.3e}; [Y,R]={bracket:.3e}; xi defect={xi_defect:.3e}"
    if bracket >= hypothesis_tol or xi_defect >= hypothesis_tol:
        report = CheckReport(
            name=name,
            status=HYPOTHESIS_FAILURE,
            max_defect=_finite(max(bracket, xi_defect)),
            tolerance=float(hypothesis_tol),
            samples=samples,
            seed=seed,
            wall_time=time.perf_counter() - start,
            notes="hypothesis violated: " + notes,
            details={"max_f": f_max, "bracket": bracket, "xi_defect": xi_defect},
        )
        return report, witness
    report = _report(name, f_max, tolerance, samples, seed, start, notes,
                     {"max_f": f_max, "bracket": bracket, "xi_defect": xi_defect})
    return report, witness


def check_lemma2_suite(bundle, action, samples=32, seed=0, cfg=DEFAULT_FLOW, tolerance=1e-4):
    """f-extraction on R and on the lift of every lattice generator."""
    start = time.perf_counter()
    fields = [("R", bundle.reeb)] + [
        (f"X_P{X.coeffs}", lift_field(bundle, action, X).field) for X in _generators(action)
    ]
    worst, notes, hypothesis_failed = 0.0, [], False
    for label, Y in fields:
        rep, _ = check_lemma2(bundle, Y, samples, seed, tolerance)
        hypothesis_failed |= rep.status == HYPOTHESIS_FAILURE
        worst = max(worst, rep.details["max_f"])
        notes.append(f"{label}: {rep.notes}")
    report = _report("lemma2", worst, tolerance, samples, seed, start, " | ".join(notes))
    if hypothesis_failed:
        report.status = HYPOTHESIS_FAILURE
    return report


def check_equivariance(bundle, action, X, samples=32, seed=0, cfg=DEFAULT_FLOW, tolerance=1e-5, times=(0.25, 0.5, 1.0)):
    """pi(exp(t X_P) p) = exp(t X_B) pi(p), and [X_P, R] = 0."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    lifted = lift_field(bundle, action, X)
    base_field = lifted.base_generator

    def per_point(xs):
        up = trajectory(lifted.field, xs, times, cfg)
        down = trajectory(base_field, bundle.project(xs), times, cfg)
        gap = np.max([bundle.base.distance(bundle.project(a), b) for a, b in zip(up, down)], axis=0)
        bracket = np.linalg.norm(lie_bracket(lifted.field, bundle.reeb, xs), axis=-1)
        return np.stack([gap, bracket], axis=-1)

    out = fan_out(per_point, x)
    gap, bracket = float(out[:, 0].max()), float(out[:, 1].max())
    notes = f"projection defect={gap:.3e}; [X_P,R]={bracket:.3e}"
    return _report("equivariance", max(gap, bracket), tolerance, samples, seed, start, notes)


def check_equivariance_suite(bundle, action, samples=32, seed=0, cfg=DEFAULT_FLOW, tolerance=1e-5):
    start = time.perf_counter()
    reps = [check_equivariance(bundle, action, X, samples, seed, cfg, tolerance) for X in _generators(action)]
    worst = max(r.max_defect for r in reps)
    notes = " | ".join(f"X={X.coeffs}: {r.notes}" for X, r in zip(_generators(action), reps))
    return _report("equivariance", worst, tolerance, samples, seed, start, notes)


def torus_bracket_defect(bundle, action, samples=16, seed=0):
    """Largest pairwise bracket norm among R and the lifted generators."""
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    fields = [bundle.reeb] + [lift_field(bundle, action, X).field for X in _generators(action)]
    worst = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            worst = max(worst, float(np.max(np.linalg.norm(lie_bracket(fields[i], fields[j], x), axis=-1))))
    return worst, len(fields)


def check_bracket_torus(bundle, action, samples=32, seed=0, cfg=DEFAULT_FLOW, tolerance=1e-5):
    start = time.perf_counter()
    worst, count = torus_bracket_defect(bundle, action, samples, seed)
    return _report("bracket-torus", worst, tolerance, samples, seed, start, f"{count} fields, max bracket={worst:.3e}")


def dimension_bound_check(bundle, action, samples=16, seed=0, tolerance=1e-5):
    """Rank of the lifted torus (k + 1) against the bound (dim P + 1) / 2."""
    start = time.perf_counter()
    k = action.rank
    bound = (bundle.total_dim + 1) / 2
    lifted_rank = k + 1
    bracket, _ = torus_bracket_defect(bundle, action, samples, seed)
    excess = max(0.0, lifted_rank - bound)
    saturated = lifted_rank == bound
    notes = (
        f"k+1={lifted_rank}, (dim P+1)/2={bound:g}, "
        f"{'saturated' if saturated else 'not saturated'}; max bracket={bracket:.3e}"
    )
    details = {"rank_plus_one": lifted_rank, "bound": bound, "saturated": saturated, "bracket": bracket}
    return _report("dimension-bound", max(bracket, excess), tolerance, samples, seed, start, notes, details)


def so3_moment(level, b):
    """Equivariant moment map of the rotation algebra on the level-n sphere."""
    return level / 2.0 * np.asarray(b, dtype=float)


def so3_obstruction_demo(n, samples=8, seed=0, cfg=DEFAULT_FLOW, tolerance=1e-4):
    """Lift the x3 rotation with the SO(3)-equivariant moment component.

    That component differs from the torus-normalized one by a constant c;
    the lifted time-1 flow then misses closure by c mod 1, which is 1/2 for
    odd levels.
    """
    start = time.perf_counter()
    bundle, action = make_s2_bundle(n)
    b0 = action.fixed_point
    c = float(so3_moment(n, b0)[2] - action.moment_component([1.0], b0))
    predicted = c % 1.0
    rng = np.random.default_rng(seed)
    x = bundle.sample_total(rng, samples)
    lifted = lift_field(bundle, action, LatticeVector((1,)), offset=c)
    phases = fan_out(lambda xs: closure_defect(bundle, lifted, xs, cfg), x)
    worst = phases[np.argmax(circular_distance(phases, predicted))]
    # representative of the worst phase nearest the prediction, so 1 - 1e-13 reads as 0
    measured = float(predicted + np.mod(worst - predicted + 0.5, 1.0) - 0.5)
    defect = float(np.max(circular_distance(phases, predicted)))
    verdict = "no consistent lift" if abs(predicted - 0.5) < 1e-12 else "no obstruction at this level"
    notes = f"level {n}: offset c={c:g}, closure defect={measured:.6f} (predicted {predicted:g}); {verdict}"
    return _report("so3-demo", defect, tolerance, samples, seed, start, notes,
                   {"closure_defect": measured, "predicted": predicted, "offset": c})


# --- registry ----------------------------------------------------------------

DEFAULT_TOLERANCES = {
    "connection-axioms": 1.0,
    "contact-condition": 1.0,
    "lattice-closure": 1e-5,
    "shift-defect": 1.0,
    "holonomy-disk": 1.0,
    "moment-identity": 1.0,
    "lemma2": 1e-4,
    "equivariance": 1e-5,
    "bracket-torus": 1e-5,
    "so3-demo": 1e-4,
    "dimension-bound": 1e-5,
}

CHECK_NAMES = tuple(DEFAULT_TOLERANCES)
DEFAULT_SUITE = tuple(n for n in CHECK_NAMES if n != "so3-demo")
DEFAULT_OFFSETS = (0.25, 0.5, 0.8)


def run_check(name, bundle, action, *, samples=32, seed=0, cfg=DEFAULT_FLOW, tolerance=None, offsets=None):
    """Dispatch one named check; numerical failures become failed reports."""
    tol = DEFAULT_TOLERANCES[name] if tolerance is None else float(tolerance)
    start = time.perf_counter()
    try:
        if name == "connection-axioms":
            return check_connection_axioms(bundle, action, samples, seed, cfg, tol)
        if name == "contact-condition":
            return check_contact_condition(bundle, action, samples, seed, cfg, tol)
        if name == "lattice-closure":
            return check_lattice_closure(bundle, action, samples, seed, cfg, tol)
        if name == "shift-defect":
            return check_shift_defect(bundle, action, samples, seed, cfg, tuple(offsets or DEFAULT_OFFSETS), tol)
        if name == "holonomy-disk":
            return check_holonomy_disk(bundle, action, samples, seed, cfg, tol)
        if name == "moment-identity":
            return check_moment_identity(bundle, action, samples, seed, cfg, tol)
        if name == "lemma2":
            return check_lemma2_suite(bundle, action, samples, seed, cfg, tol)
        if name == "equivariance":
            return check_equivariance_suite(bundle, action, samples, seed, cfg, tol)
        if name == "bracket-torus":
            return check_bracket_torus(bundle, action, samples, seed, cfg, tol)
        if name == "dimension-bound":
            return dimension_bound_check(bundle, action, samples, seed, tol)
        if name == "so3-demo":
            if bundle.kind != "s2":
                raise PrequantError("so3-demo is defined only for s2 models")
            return so3_obstruction_demo(bundle.level, samples, seed, cfg, tol)
    except (PrequantError, FloatingPointError, ValueError) as exc:
        return CheckReport(name, FAIL, float(np.finfo(float).max), tol, samples, seed,
                           time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
    raise KeyError(f"unknown check {name!r}")
