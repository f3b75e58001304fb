"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

import json
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from prequant.cli import main
from prequant.flows import FlowConfig, closure_defect, holonomy, integrate_flow, orbit_loop
from prequant.geom import as_complex, as_real
from prequant.lift import LatticeVector, contact_vector_field, lift_field, reeb_derivative
from prequant.models import circular_distance
from prequant.verify import (
    check_connection_axioms,
    check_equivariance,
    check_holonomy_disk,
    check_lemma2,
    check_moment_identity,
    check_shift_defect,
    dimension_bound_check,
    so3_obstruction_demo,
    torus_bracket_defect,
)

STEP = FlowConfig(step=1e-3)


def record(number, title, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_01_connection_axioms(models):
    worst = {"alpha(R)-1": 0.0, "L_R alpha": 0.0, "d alpha - pi*omega": 0.0}
    for model_id in ("s2:1", "s2:3", "cpn:2"):
        bundle, action = models(model_id)
        rep = check_connection_axioms(bundle, action, samples=100, seed=1)
        for key in worst:
            worst[key] = max(worst[key], rep.details[key])
    ok = worst["alpha(R)-1"] < 1e-10 and worst["L_R alpha"] < 1e-6 and worst["d alpha - pi*omega"] < 1e-6
    record(1, "connection axioms", ok, ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))


def test_02_lattice_closure(models):
    worst = 0.0
    for model_id in ("s2:1", "s2:2", "s2:3", "cpn:2"):
        bundle, action = models(model_id)
        x = bundle.sample_total(np.random.default_rng(2), 32)
        for i in range(action.rank):
            lifted = lift_field(bundle, action, LatticeVector.basis(action.rank, i))
            worst = max(worst, float(np.max(circular_distance(closure_defect(bundle, lifted, x, STEP), 0.0))))
    record(2, "period-1 closure of lattice lifts", worst < 1e-5, f"max closure defect {worst:.2e}")


def test_03_normalization_necessity(models):
    err = spread = 0.0
    for model_id in ("s2:1", "cpn:2"):
        bundle, action = models(model_id)
        rep = check_shift_defect(bundle, action, samples=32, seed=3, cfg=STEP, offsets=(0.25, 0.5, 0.8))
        err = max(err, rep.details["offset error"])
        spread = max(spread, rep.details["spread"])
    record(3, "shift defect equals c mod 1", err < 1e-4 and spread < 1e-5, f"offset error {err:.2e}, spread {spread:.2e}")


def test_04_holonomy_identity(models):
    bundle, action = models("s2:1")
    rep = check_holonomy_disk(bundle, action, samples=20, seed=4, cfg=STEP)
    gap = rep.details["holonomy - disk mod 1"]
    equator = np.array([1.0, 0.0, 0.0])
    eq = []
    for level in (1, 3):
        b, a = models(f"s2:{level}")
        res = holonomy(b, orbit_loop(a, LatticeVector((1,)), equator), b.section(equator), STEP)
        eq.append(float(circular_distance(res.phase, 0.5)))
    ok = gap < 1e-4 and max(eq) < 1e-4
    record(4, "holonomy equals swept-disk integral", ok, f"20 paths max gap {gap:.2e}, equator |phase-0.5| {max(eq):.2e}")


def test_05_moment_identity(models):
    ident = gaps = 0.0
    for model_id in ("s2:1", "cpn:2"):
        bundle, action = models(model_id)
        rep = check_moment_identity(bundle, action, samples=20, seed=5, pairs=5)
        ident = max(ident, rep.details["moment identity"])
        gaps = max(gaps, rep.details["path independence"])
    record(5, "disk integral equals moment difference", ident < 1e-5 and gaps < 1e-4,
           f"identity {ident:.2e}, non-integrality of path pairs {gaps:.2e}")


def fiber_dependent_hamiltonians():
    return [
        lambda x: x[..., 0],
        lambda x: x[..., 1] + 0.5 * x[..., 3],
        lambda x: x[..., 0] * x[..., 2],
        lambda x: 1.0 + 0.3 * x[..., 0] * x[..., 1],
        lambda x: np.sin(x[..., 0]) + x[..., 3] ** 2,
    ]


def invariant_hamiltonians(bundle, action):
    def moment(x):
        return 1.0 + action.moment_component(np.ones(action.rank), bundle.project(bundle.total.normalize(x)))

    def mixed(x):
        z = as_complex(x)
        return np.abs(z[..., 0]) ** 2 * np.abs(z[..., 1]) ** 2 + np.real(np.conj(z[..., 0]) * z[..., 1])

    return [moment, mixed]


def test_06_lemma2_extraction(models):
    lift_f = contact_gap = invariant_f = 0.0
    for model_id in ("s2:1", "s2:3", "cpn:2"):
        bundle, action = models(model_id)
        fields = [bundle.reeb] + [lift_field(bundle, action, LatticeVector.basis(action.rank, i)).field
                                  for i in range(action.rank)]
        for Y in fields:
            rep, _ = check_lemma2(bundle, Y, samples=100, seed=6)
            assert rep.status == "pass", rep.notes
            lift_f = max(lift_f, rep.details["max_f"])
        for h in fiber_dependent_hamiltonians():
            _, w = check_lemma2(bundle, contact_vector_field(bundle, h), samples=20, seed=7)
            contact_gap = max(contact_gap, float(np.max(np.abs(w.f_values - reeb_derivative(bundle, h)(w.points)))))
        for h in invariant_hamiltonians(bundle, action):
            rep, _ = check_lemma2(bundle, contact_vector_field(bundle, h), samples=20, seed=8)
            invariant_f = max(invariant_f, rep.details["max_f"])
    ok = lift_f < 1e-5 and contact_gap < 1e-4 and invariant_f < 1e-6
    record(6, "f extraction for alpha-preserving fields", ok,
           f"lifts/R max|f| {lift_f:.2e}, contact f-dh(R) {contact_gap:.2e}, R-invariant max|f| {invariant_f:.2e}")


def test_07_equivariance_and_commutation(models):
    proj = 0.0
    for model_id in ("s2:1", "cpn:2"):
        bundle, action = models(model_id)
        for i in range(action.rank):
            rep = check_equivariance(bundle, action, LatticeVector.basis(action.rank, i), samples=16, seed=9, cfg=STEP)
            proj = max(proj, rep.max_defect)
    bundle, action = models("cpn:2")
    bracket, count = torus_bracket_defect(bundle, action, samples=32, seed=10)
    record(7, "equivariance and abelian brackets", proj < 1e-5 and bracket < 1e-5 and count == 3,
           f"projection+bracket defect {proj:.2e}, cpn:2 pairwise brackets {bracket:.2e} over {count} fields")


def test_08_closed_form_lift(models):
    bundle, action = models("cpn:2")
    lifted = lift_field(bundle, action, LatticeVector((1, 0)))
    x = bundle.sample_total(np.random.default_rng(11), 16)
    worst = 0.0
    for t in (0.25, 1.0):
        z = as_complex(x).copy()
        z[:, 1] *= np.exp(2j * math.pi * t)
        worst = max(worst, float(np.max(np.abs(integrate_flow(lifted.field, x, t, STEP) - as_real(z)))))
    record(8, "lift of e1 is the coordinate phase rotation", worst < 1e-6, f"max deviation {worst:.2e}")


def test_09_so3_obstruction():
    worst, values = 0.0, []
    for n in range(1, 7):
        rep = so3_obstruction_demo(n, samples=8, seed=12, cfg=STEP)
        d = rep.details["closure_defect"]
        values.append(f"{d:.4f}".replace("-0.0000", "0.0000"))
        worst = max(worst, float(circular_distance(d, (n / 2) % 1)))
    ok = worst < 1e-4 and values[0] == "0.5000"
    record(9, "SO(3) obstruction defect n/2 mod 1", ok, f"defects n=1..6: {' '.join(values)}, max error {worst:.2e}")


def test_10_dimension_bound(models):
    rows, ok = [], True
    for model_id in ("s2:1", "s2:2", "s2:3", "cpn:2", "cpn:3"):
        bundle, action = models(model_id)
        rep = dimension_bound_check(bundle, action, samples=16, seed=13)
        d = rep.details
        ok &= rep.passed and d["saturated"] and d["bracket"] < 1e-5
        rows.append(f"{model_id} {d['rank_plus_one']}={d['bound']:g}")
    record(10, "dimension bound saturated", ok, ", ".join(rows))


def test_11_cli_determinism(tmp_path):
    scenario = tmp_path / "suite.json"
    scenario.write_text(json.dumps({"model": "s2:1", "seed": 21}))
    outputs, codes = [], []
    for k in range(2):
        out = tmp_path / f"report{k}.json"
        codes.append(main(["run", str(scenario), "--report", str(out)]))
        doc = json.loads(out.read_text())
        for r in doc["reports"]:
            r["wall_time"] = 0.0
        outputs.append(json.dumps(doc, sort_keys=True, indent=2))
    raw = [(tmp_path / f"report{k}.json").read_text() for k in range(2)]
    strip = [[ln for ln in text.splitlines() if '"wall_time"' not in ln] for text in raw]
    n_reports = len(json.loads(raw[0])["reports"])

    failing = tmp_path / "fail.json"
    failing.write_text(json.dumps({"model": "s2:1", "checks": ["bracket-torus"], "samples": 4,
                                   "tolerances": {"bracket-torus": 1e-300}}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": "s2:0"}))
    contract = (main(["run", str(failing), "--report", str(tmp_path / "f.json")]), main(["run", str(bad)]))

    ok = codes == [0, 0] and outputs[0] == outputs[1] and strip[0] == strip[1] and n_reports == 10 and contract == (1, 2)
    record(11, "CLI determinism and exit codes", ok,
           f"{n_reports} reports, identical modulo wall_time: {strip[0] == strip[1]}, exit codes pass/fail/error = {codes[0]}/{contract[0]}/{contract[1]}")
