import json
from pathlib import Path

import numpy as np
import pytest

from sweepcert import (
    Loading,
    NetworkSpec,
    assemble_process,
    build_process,
    validate_network,
)

SAMPLE = Path(__file__).resolve().parents[1] / "sample_inputs" / "bridge5.json"

BRIDGE_D = np.array([
    [-1, 1, 0, 0],
    [-1, 0, 1, 0],
    [0, -1, 1, 0],
    [0, -1, 0, 1],
    [0, 0, -1, 1],
], dtype=float)
BRIDGE_R = np.array([1.0, 0.0, 1.0, 0.0, 1.0])


def bridge_spec(a=None, c_plus=None, c_minus=None, l0=0.0, l1=1.0, period=None):
    """The 5-spring bridge network used as the reference system throughout."""
    a = np.ones(5) if a is None else np.asarray(a, dtype=float)
    c_plus = np.array([3.0, 1.0, 1.0, 1.0, 3.0]) if c_plus is None else np.asarray(c_plus, float)
    c_minus = -c_plus if c_minus is None else np.asarray(c_minus, float)
    return NetworkSpec(
        D=BRIDGE_D, a=a, c_minus=c_minus, c_plus=c_plus, R=BRIDGE_R,
        loading=Loading(l0, l1), period=period,
    )


def reference_gauge(a):
    """A hand-picked rational gauge for the bridge network.

    Any valid gauge gives the same process; this one has small integer
    entries, which makes expected values exact.
    """
    a = np.asarray(a, dtype=float)
    free_motions = np.array([[0, 0], [1, 1], [1, -1], [0, 0]], dtype=float)
    basis = np.array([
        [0, 1 / a[0], 1 / a[0]],
        [0, 1 / a[1], -1 / a[1]],
        [1 / a[2], 0, 1 / a[2]],
        [-1 / a[3], 1 / a[3], 0],
        [1 / a[4], 1 / a[4], 0],
    ])
    self_stress = np.array([[0, 1], [0, -1], [1, 1], [-1, 0], [1, 0]], dtype=float)
    return free_motions, basis, self_stress


@pytest.fixture(scope="session")
def bridge_doc():
    return json.loads(SAMPLE.read_text())


@pytest.fixture()
def bridge_net():
    return validate_network(bridge_spec())


@pytest.fixture()
def bridge_proc(bridge_net):
    return build_process(bridge_net)


@pytest.fixture()
def bridge_proc_reference(bridge_net):
    """Bridge process assembled from the hand-picked gauge."""
    M, V, Dp = reference_gauge(bridge_net.a)
    return assemble_process(bridge_net, free_motions=M, basis=V, self_stress=Dp)


def random_connected_network(rng, m=6, n=4):
    """A random connected spring network with a nondegenerate loading."""
    while True:
        edges = [(i, i + 1) for i in range(n - 1)]   # spanning path
        while len(edges) < m:
            i, j = rng.integers(0, n, size=2)
            if i != j:
                edges.append((min(i, j), max(i, j)))
        D = np.zeros((m, n))
        for row, (i, j) in enumerate(edges):
            D[row, i] = -1.0
            D[row, j] = 1.0
        R = rng.integers(0, 2, size=m).astype(float)
        if not R.any():
            continue
        a = rng.uniform(0.2, 5.0, size=m)
        c_plus = rng.uniform(0.5, 3.0, size=m)
        spec = NetworkSpec(
            D=D, a=a, c_minus=-c_plus, c_plus=c_plus, R=R, loading=Loading(0.0, 1.0)
        )
        try:
            return validate_network(spec)
        except Exception:
            continue
