import numpy as np
import pytest

from sweepcert import (
    a_norm,
    assemble_certificate,
    assemble_process,
    build_process,
    compute_component_map,
    compute_diameter_bound,
    compute_gain,
    compute_margin,
    enumerate_scenarios,
    offset_rate,
    validate_network,
)
from sweepcert.enumeration import SignedIndex
from sweepcert.errors import InfeasibleCandidate, ReducibleOrBoundary

from closed_forms import gain, margin
from conftest import bridge_spec, reference_gauge


PINNED_BY_SCENARIO = {
    1: ((1, 0), (1, 1)), 2: ((1, 0), (1, 1)), 3: ((1, 0), (1, 1)),
    4: ((1, 3), (1, 4)), 5: ((1, 3), (1, 4)), 6: ((1, 3), (1, 4)),
    7: ((1, 0), (-1, 2), (1, 4)), 8: ((1, 1), (1, 2), (1, 3)),
}


def signed(pairs):
    return tuple(SignedIndex(j, s) for s, j in pairs)


def test_margin_unit_stiffness(bridge_proc):
    assert compute_margin(bridge_proc, signed(PINNED_BY_SCENARIO[1])) == pytest.approx(
        np.sqrt(3 / 5), abs=1e-12)
    assert compute_margin(bridge_proc, signed(PINNED_BY_SCENARIO[7])) == pytest.approx(
        np.sqrt(1 / 3), abs=1e-12)


def test_margin_scales_with_rate():
    base = build_process(validate_network(bridge_spec(l1=1.0)))
    doubled = build_process(validate_network(bridge_spec(l1=2.0)))
    pinned = signed(PINNED_BY_SCENARIO[1])
    assert compute_margin(doubled, pinned) == pytest.approx(
        2 * compute_margin(base, pinned), rel=1e-12)


def test_margin_matches_closed_forms_random_stiffness():
    rng = np.random.default_rng(12)
    for _ in range(50):
        a = rng.uniform(0.2, 5.0, size=5)
        proc = build_process(validate_network(bridge_spec(a=a)))
        for scenario in (1, 4, 7, 8):
            computed = compute_margin(proc, signed(PINNED_BY_SCENARIO[scenario]))
            expected = margin(scenario, a)
            assert computed == pytest.approx(expected, rel=1e-7)


def test_reducible_pinned_set_has_no_margin(bridge_proc):
    reducible = signed(((1, 0), (1, 1), (1, 3)))   # contains the working pair
    with pytest.raises(ReducibleOrBoundary):
        compute_margin(bridge_proc, reducible)


def test_component_map_fixed_points(bridge_proc):
    pinned = signed(PINNED_BY_SCENARIO[1])
    family = (SignedIndex(2, -1),)
    L = compute_component_map(bridge_proc, pinned, family)
    n_pinned = bridge_proc.normals[:, 0]
    n_family = bridge_proc.normals[:, 2]
    assert np.abs(L @ n_pinned - n_pinned).max() < 1e-10
    assert np.abs(L @ n_family).max() < 1e-10
    # arbitrary vectors in the joint span decompose: the remainder lies in the family span
    rng = np.random.default_rng(1)
    span = np.stack([bridge_proc.normals[:, j] for j in (0, 1, 2)], axis=1)
    for _ in range(20):
        xi = span @ rng.normal(size=3)
        rest = xi - L @ xi
        coeff = np.linalg.lstsq(n_family.reshape(-1, 1), rest, rcond=None)[0]
        assert np.abs(rest - n_family * coeff).max() < 1e-9


def test_gain_unit_stiffness(bridge_proc):
    pinned = signed(PINNED_BY_SCENARIO[1])
    for sign in (-1, 1):
        L = compute_component_map(bridge_proc, pinned, (SignedIndex(2, sign),))
        sigma, root = compute_gain(bridge_proc, L)
        assert sigma == pytest.approx(1.5, abs=1e-9)
        assert root == pytest.approx(np.sqrt(1.5), abs=1e-9)
    assert compute_gain(bridge_proc, np.zeros((5, 5)))[0] == 0.0


def test_gain_invariant_under_metric_scaling():
    rng = np.random.default_rng(2)
    a = rng.uniform(0.3, 3.0, size=5)
    for kappa in (0.25, 4.0):
        p1 = build_process(validate_network(bridge_spec(a=a)))
        p2 = build_process(validate_network(bridge_spec(a=kappa * a)))
        pinned = signed(PINNED_BY_SCENARIO[1])
        fam = (SignedIndex(2, -1),)
        s1 = compute_gain(p1, compute_component_map(p1, pinned, fam))[0]
        s2 = compute_gain(p2, compute_component_map(p2, pinned, fam))[0]
        assert s1 == pytest.approx(s2, rel=1e-9)


def test_gain_matches_closed_forms_random_stiffness():
    rng = np.random.default_rng(3)
    flip_by_scenario = {1: 2, 2: 3, 3: 4, 4: 0, 5: 1, 6: 2}
    for _ in range(50):
        a = rng.uniform(0.2, 5.0, size=5)
        proc = build_process(validate_network(bridge_spec(a=a)))
        for scenario, flip in flip_by_scenario.items():
            pinned = signed(PINNED_BY_SCENARIO[scenario])
            L = compute_component_map(proc, pinned, (SignedIndex(flip, -1),))
            sigma = max(1.0, compute_gain(proc, L)[0])
            assert sigma == pytest.approx(gain(scenario, a), rel=1e-7)


def test_gain_operator_norm_bound(bridge_proc):
    rng = np.random.default_rng(4)
    pinned = signed(PINNED_BY_SCENARIO[1])
    L = compute_component_map(bridge_proc, pinned, (SignedIndex(2, -1),))
    _, root = compute_gain(bridge_proc, L)
    metric = bridge_proc.metric
    for _ in range(1000):
        xi = rng.normal(size=5)
        assert a_norm(metric, L @ xi) <= root * a_norm(metric, xi) + 1e-9


def test_diameter_bound():
    unit = validate_network(bridge_spec(c_plus=np.ones(5), c_minus=-np.ones(5)))
    assert compute_diameter_bound(unit) == pytest.approx(np.sqrt(20.0), abs=1e-12)
    flat = validate_network(bridge_spec(c_plus=np.ones(5), c_minus=np.ones(5)))
    assert compute_diameter_bound(flat) == 0.0


def test_diameter_bound_never_violated(bridge_proc):
    rng = np.random.default_rng(5)
    proc = bridge_proc
    bound = compute_diameter_bound(proc.net)
    rows = np.vstack([proc.stress_rows, -proc.stress_rows])
    b = np.concatenate([proc.c_plus, -proc.c_minus])

    def sample():
        # projecting a random far point yields a random admissible state
        from sweepcert import qp_project
        v = rng.normal(size=proc.d) * 4
        return qp_project(proc.reduced_metric, v, rows, b).x

    points = [sample() for _ in range(60)]
    for _ in range(1000):
        i, j = rng.integers(0, len(points), size=2)
        diff = proc.basis @ (points[i] - points[j])
        assert a_norm(proc.metric, diff) <= bound + 1e-9


def test_vertex_certificate_scenario8():
    proc = build_process(validate_network(bridge_spec()))
    cand = enumerate_scenarios(proc)[7]
    cert = assemble_certificate(proc, cand)
    assert cert.kind == "vertex"
    assert cert.eps0 == pytest.approx(np.sqrt(1 / 3), abs=1e-9)
    assert cert.tau_d == pytest.approx(cert.diameter_bound / cert.eps0, rel=1e-12)
    assert np.abs(cert.terminal_stresses[0] - [2, 1, 1, 1, 2]).max() < 1e-9
    assert cert.sigmas == ()


def test_vertex_certificate_scenario7():
    proc = build_process(validate_network(
        bridge_spec(c_plus=np.array([3.0, 5, 1, 5, 3]))))
    cands = enumerate_scenarios(proc)
    cand7 = cands[6]
    assert cand7.feasibility.feasible
    cert = assemble_certificate(proc, cand7)
    assert cert.kind == "vertex"
    assert cert.eps0 == pytest.approx(np.sqrt(1 / 3), abs=1e-9)
    assert cert.tau_d == pytest.approx(cert.diameter_bound * np.sqrt(3.0), rel=1e-9)


def test_facet_certificate_scenario1():
    proc = build_process(validate_network(
        bridge_spec(c_plus=np.array([1.0, 1, 1, 3, 3]))))
    cand = enumerate_scenarios(proc)[0]
    assert cand.kind == "facet" and cand.feasibility.feasible
    cert = assemble_certificate(proc, cand)
    assert cert.sigmas == pytest.approx((1.5, 1.5), abs=1e-9)
    expected_tau = np.sqrt(1.5) * cert.diameter_bound / np.sqrt(3 / 5)
    assert cert.tau_d == pytest.approx(expected_tau, rel=1e-9)
    assert len(cert.terminal_stresses) == 2


def test_infeasible_candidate_rejected():
    proc = build_process(validate_network(
        bridge_spec(c_plus=np.ones(5), c_minus=-np.ones(5))))
    cand = enumerate_scenarios(proc)[7]
    with pytest.raises(InfeasibleCandidate):
        assemble_certificate(proc, cand)


def test_qualitative_certificate():
    proc = build_process(validate_network(bridge_spec()))
    cand = enumerate_scenarios(proc)[7]
    cert = assemble_certificate(proc, cand, qualitative=True)
    assert cert.kind == "qualitative"
    assert cert.eps0 is None and cert.tau_d is None
    assert np.abs(cert.terminal_stresses[0] - [2, 1, 1, 1, 2]).max() < 1e-9


def test_tau_monotone_in_box_size():
    base = build_process(validate_network(bridge_spec()))
    snug = assemble_certificate(base, enumerate_scenarios(base)[7])
    wide = build_process(validate_network(
        bridge_spec(c_plus=np.array([4.0, 1.5, 1.5, 1.5, 4.0]))))
    cand = enumerate_scenarios(wide)[7]
    cert = assemble_certificate(wide, cand)
    assert cert.tau_d >= snug.tau_d


def test_rate_independence_of_certificate():
    pinned = signed(PINNED_BY_SCENARIO[8])
    p1 = build_process(validate_network(bridge_spec(l1=1.0)))
    p2 = build_process(validate_network(bridge_spec(l1=2.0)))
    c1 = assemble_certificate(p1, enumerate_scenarios(p1)[7])
    c2 = assemble_certificate(p2, enumerate_scenarios(p2)[7])
    assert c2.eps0 == pytest.approx(2 * c1.eps0, rel=1e-12)
    # certified swept arclength tau_d * ||c'|| is invariant under speed
    arc1 = c1.tau_d * a_norm(p1.metric, offset_rate(p1))
    arc2 = c2.tau_d * a_norm(p2.metric, offset_rate(p2))
    assert arc1 == pytest.approx(arc2, rel=1e-12)


def test_certificate_gauge_invariance(bridge_net):
    rng = np.random.default_rng(6)
    computed = build_process(bridge_net)
    M, V, Dp = reference_gauge(bridge_net.a)
    mixed = assemble_process(
        bridge_net,
        free_motions=M @ (np.eye(2) + 0.3 * rng.normal(size=(2, 2))),
        basis=V @ (np.eye(3) + 0.3 * rng.normal(size=(3, 3))),
        self_stress=Dp @ (np.eye(2) + 0.3 * rng.normal(size=(2, 2))),
    )
    for proc_a, proc_b in [(computed, mixed)]:
        ca = assemble_certificate(proc_a, enumerate_scenarios(proc_a)[7])
        cb = assemble_certificate(proc_b, enumerate_scenarios(proc_b)[7])
        assert ca.eps0 == pytest.approx(cb.eps0, abs=1e-9)
        assert ca.tau_d == pytest.approx(cb.tau_d, abs=1e-9)


def test_periodic_note():
    spec = bridge_spec(period=20.0)
    proc = build_process(validate_network(spec))
    cert = assemble_certificate(proc, enumerate_scenarios(proc)[7])
    assert cert.periodic_note is not None and "one-period stable" in cert.periodic_note
    short = build_process(validate_network(bridge_spec(period=1.0)))
    cert = assemble_certificate(short, enumerate_scenarios(short)[7])
    assert cert.periodic_note is None
