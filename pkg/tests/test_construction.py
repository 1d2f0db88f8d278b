import numpy as np
import pytest

from sweepcert import (
    Loading,
    NetworkSpec,
    assemble_process,
    build_process,
    compute_free_motions,
    compute_self_stress_basis,
    compute_state_basis,
    moving_offset,
    offset_rate,
    state_from_stress,
    stress_from_state,
    validate_network,
)
from sweepcert.errors import SingularW

from conftest import random_connected_network, reference_gauge


def test_free_motions_bridge(bridge_net):
    M = compute_free_motions(bridge_net)
    assert M.shape == (4, 2)
    assert np.abs(bridge_net.R @ bridge_net.D @ M).max() < 1e-12
    assert np.linalg.matrix_rank(bridge_net.D @ M) == 2
    # the hand-picked gauge passes the same postcondition
    M_ref, _, _ = reference_gauge(bridge_net.a)
    assert np.abs(bridge_net.R @ bridge_net.D @ M_ref).max() == 0.0
    assert np.linalg.matrix_rank(bridge_net.D @ M_ref) == 2


def test_state_basis_bridge(bridge_net):
    M = compute_free_motions(bridge_net)
    V = compute_state_basis(bridge_net, M)
    assert V.shape == (5, 3)
    U = bridge_net.D @ M
    assert np.abs(U.T @ (bridge_net.a[:, None] * V)).max() < 1e-10


def test_state_basis_random_networks():
    rng = np.random.default_rng(7)
    for _ in range(10):
        net = random_connected_network(rng, m=6, n=4)
        M = compute_free_motions(net)
        V = compute_state_basis(net, M)
        U = net.D @ M
        assert np.abs(net.R @ net.D @ M).max() < 1e-10
        assert np.abs(U.T @ (net.a[:, None] * V)).max() < 1e-10
        Dp = compute_self_stress_basis(net)
        assert np.abs(Dp.T @ net.D).max() < 1e-10
        assert np.linalg.matrix_rank(Dp) == net.m - net.n + 1


def test_self_stress_single_loop():
    # triangle network: m = n = 3, one independent self-stress direction
    D = np.array([[-1, 1, 0], [0, -1, 1], [-1, 0, 1]], dtype=float)
    net = validate_network(NetworkSpec(
        D=D, a=np.ones(3), c_minus=-np.ones(3), c_plus=np.ones(3),
        R=np.array([1.0, 0.0, 1.0]), loading=Loading(0.0, 1.0)))
    Dp = compute_self_stress_basis(net)
    assert Dp.shape == (3, 1)
    assert np.abs(Dp.T @ D).max() < 1e-12


def test_two_node_network_has_full_state_space():
    # all springs in parallel between two nodes: no free motions, d = m
    D = np.array([[-1, 1], [-1, 1], [-1, 1]], dtype=float)
    net = validate_network(NetworkSpec(
        D=D, a=np.array([1.0, 2.0, 3.0]), c_minus=-np.ones(3), c_plus=np.ones(3),
        R=np.array([1.0, 0.0, 0.0]), loading=Loading(0.0, 1.0)))
    M = compute_free_motions(net)
    assert M.shape == (2, 0)
    V = compute_state_basis(net, M)
    assert V.shape == (3, 3)
    proc = build_process(net)
    assert proc.d == 3


def test_assembled_frame_matches_reference(bridge_net, bridge_proc_reference):
    proc = bridge_proc_reference
    assert proc.d == 3
    expected_frame = np.array([
        [1, 0, 1, 0, 1],
        [0, 0, 1, -1, 1],
        [1, -1, 1, 0, 0],
    ], dtype=float)
    assert np.array_equal(proc.frame, expected_frame)


def test_normal_identity_on_random_states(bridge_proc, bridge_proc_reference):
    rng = np.random.default_rng(3)
    for proc in (bridge_proc, bridge_proc_reference):
        dev = 0.0
        for _ in range(100):
            y = proc.basis @ rng.normal(size=proc.d)
            Ay = proc.a * y
            dev = max(dev, np.abs(Ay - proc.normals.T @ Ay).max())
        assert dev < 1e-10


def test_process_invariants(bridge_proc):
    proc = bridge_proc
    net = proc.net
    assert np.abs(net.R @ net.D @ proc.free_motions).max() < 1e-9
    assert np.linalg.matrix_rank(net.D @ proc.free_motions) == net.n - 2
    U = net.D @ proc.free_motions
    assert np.abs(U.T @ (net.a[:, None] * proc.basis)).max() < 1e-9
    assert np.abs(proc.self_stress.T @ net.D).max() < 1e-9
    assert np.isfinite(np.linalg.cond(proc.coupling))


def test_moving_offset_affine(bridge_proc):
    proc = bridge_proc
    assert np.abs(moving_offset(proc, 0.0)).max() == 0.0    # l0 = 0
    rng = np.random.default_rng(5)
    for _ in range(5):
        t1, t2 = rng.uniform(0, 10, size=2)
        lhs = moving_offset(proc, t2) - moving_offset(proc, t1)
        rhs = offset_rate(proc) * (t2 - t1)
        assert np.abs(lhs - rhs).max() < 1e-12
    # rate agrees with the drift product
    assert np.abs(offset_rate(proc) + proc.basis @ proc.drive * proc.loading.l1).max() < 1e-12


def test_stress_state_round_trip(bridge_proc):
    proc = bridge_proc
    rng = np.random.default_rng(11)
    t = 0.7
    assert np.abs(stress_from_state(proc, moving_offset(proc, t), t)).max() < 1e-12
    for _ in range(5):
        y = proc.basis @ rng.normal(size=proc.d) + moving_offset(proc, t)
        s = stress_from_state(proc, y, t)
        assert np.abs(state_from_stress(proc, s, t) - y).max() < 1e-12


def test_gauge_freedom_constraint_values(bridge_net, bridge_proc):
    """Different valid gauges give the same constraint functionals."""
    rng = np.random.default_rng(2)
    M, V, Dp = (bridge_proc.free_motions, bridge_proc.basis, bridge_proc.self_stress)
    mix_M = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    mix_V = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    mix_D = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    other = assemble_process(bridge_net, free_motions=M @ mix_M, basis=V @ mix_V,
                             self_stress=Dp @ mix_D)
    assert np.abs(other.normals - bridge_proc.normals).max() < 1e-9
    for t in (0.0, 0.3, 2.0):
        assert np.abs(moving_offset(other, t) - moving_offset(bridge_proc, t)).max() < 1e-9


def test_singular_basis_rejected(bridge_net):
    bad_basis = np.ones((5, 3))   # rank 1: coupling cannot be inverted
    with pytest.raises(SingularW):
        assemble_process(bridge_net, basis=bad_basis)
