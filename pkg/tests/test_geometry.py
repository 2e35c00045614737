import itertools
from fractions import Fraction

import numpy as np
import pytest

from guessleak import (
    Channel,
    ProbVector,
    build_partitions,
    certify_extreme_point,
    enumerate_vertices,
    enumerate_vertices_exact,
    guessing_entropy,
    locate_partition,
    rank_vector,
)
from guessleak.errors import CapExceededError

from conftest import random_system


def uniform_prefix_family(n: int) -> set:
    """Indicator(S)/|S| for every nonempty subset S: the identity-channel vertex set."""
    pts = set()
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            v = [0.0] * n
            for j in subset:
                v[j] = 1.0 / size
            pts.add(tuple(round(x, 12) for x in v))
    return pts


def test_partition_count():
    ch = Channel(np.eye(3))
    assert len(build_partitions(ch)) == 6
    assert len(build_partitions(Channel(np.eye(2)))) == 2


def test_partition_count_is_factorial_of_x():
    rng = np.random.default_rng(0)
    ch = Channel(rng.dirichlet(np.ones(4), size=2).T)  # |X|=4, |W|=2
    assert len(build_partitions(ch)) == 24


def test_partitions_have_expected_halfspaces():
    ch = Channel(np.eye(3))
    for spec in build_partitions(ch):
        assert spec.normals.shape == (2, 3)


def test_degenerate_rows_drop_halfspaces():
    # both outputs share one likelihood row: every ordering halfspace vanishes
    ch = Channel(np.array([[0.5, 0.5], [0.5, 0.5]]))
    for spec in build_partitions(ch):
        assert spec.normals.shape[0] == 0
        assert spec.contains(ProbVector([0.3, 0.7]))


def test_partitions_cover_simplex():
    rng = np.random.default_rng(1)
    for _ in range(3):
        system = random_system(rng, 3, 3, 2)
        specs = build_partitions(system.P_XgW)
        pts = rng.dirichlet(np.ones(3), size=10_000)
        covered = np.zeros(len(pts), dtype=bool)
        for spec in specs:
            ok = (
                np.ones(len(pts), dtype=bool)
                if spec.normals.shape[0] == 0
                else (pts @ spec.normals.T >= -1e-9).all(axis=1)
            )
            covered |= ok
        assert covered.all()


def test_locate_partition_examples(agencies_system):
    s = agencies_system
    assert locate_partition(s.P_XgW, s.p_W).ranks.tolist() == [1, 2, 3]
    for j in range(s.n_W):
        r = locate_partition(s.P_XgW, ProbVector.point_mass(j, s.n_W))
        assert r == rank_vector(s.P_XgW.column(j))
    assert locate_partition(Channel(np.eye(4)), ProbVector.uniform(4)).ranks.tolist() == [1, 2, 3, 4]


def test_membership_consistent_with_locate():
    rng = np.random.default_rng(2)
    system = random_system(rng, 3, 3, 2)
    specs = {spec.rank.key(): spec for spec in build_partitions(system.P_XgW)}
    for _ in range(200):
        p = rng.dirichlet(np.ones(3))
        key = locate_partition(system.P_XgW, ProbVector(p)).key()
        assert specs[key].contains(p)


def test_linear_on_each_partition():
    rng = np.random.default_rng(3)
    system = random_system(rng, 3, 3, 2)
    specs = build_partitions(system.P_XgW)
    ch = system.P_XgW
    hits = 0
    for _ in range(500):
        p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        lam = float(rng.uniform())
        for spec in specs:
            if spec.contains(p) and spec.contains(q):
                mix = lam * p + (1 - lam) * q
                lhs = guessing_entropy(ch.push(mix))
                rhs = lam * guessing_entropy(ch.push(p)) + (1 - lam) * guessing_entropy(ch.push(q))
                assert lhs == pytest.approx(rhs, abs=1e-9)
                hits += 1
                break
    assert hits > 100


# ---------------------------------------------------------------------------
# Vertex enumeration


def test_identity_channel_families():
    for n in range(2, 6):
        vset = enumerate_vertices(Channel(np.eye(n)))
        got = {tuple(round(float(x), 12) for x in v) for v in vset.points}
        assert got == uniform_prefix_family(n)
        assert len(vset) == 2**n - 1


def test_identity_vertices_exact():
    for n in range(2, 6):
        cols = [[Fraction(1) if i == w else Fraction(0) for i in range(n)] for w in range(n)]
        vset = enumerate_vertices_exact(cols)
        assert len(vset) == 2**n - 1
        # exact coordinates are unit fractions on their support
        for pt in vset.exact_points:
            support = [v for v in pt if v != 0]
            assert len(set(support)) == 1
            assert support[0] == Fraction(1, len(support))


def test_two_dim_crossings():
    # distinct columns: corners plus the posterior-tie crossing point
    cols = np.array([[0.8, 0.2], [0.2, 0.8]])
    vset = enumerate_vertices(Channel(cols))
    # crossing where (v_1 - v_2) . p = 0: 0.6 p_1 - 0.6 p_2 = 0 -> p = (1/2, 1/2)
    expected = {(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)}
    got = {tuple(round(float(x), 12) for x in v) for v in vset.points}
    assert got == expected


def test_single_partition_channel_gives_corners():
    # all columns share the rank region -> only the simplex corners remain
    cols = np.array([[0.7, 0.6, 0.5], [0.2, 0.3, 0.3], [0.1, 0.1, 0.2]])
    vset = enumerate_vertices(Channel(cols))
    got = {tuple(round(float(x), 12) for x in v) for v in vset.points}
    assert got == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}


def test_agencies_exact_matches_float(agencies):
    vf = enumerate_vertices(agencies.system.P_XgW)
    ve = enumerate_vertices_exact(agencies.exact.x_columns)
    assert len(vf) == len(ve) == 10
    assert np.max(np.abs(vf.points - ve.points)) < 1e-12
    assert np.max(np.abs(vf.guess_values - ve.guess_values)) < 1e-12
    for i, (a, b) in enumerate(zip(vf.ranks, ve.ranks)):
        post = [
            sum(agencies.exact.x_columns[w][x] * ve.exact_points[i][w] for w in range(3))
            for x in range(3)
        ]
        if len(set(post)) == len(post):
            assert a == b
        # exact tie: float arithmetic cannot see it, so the orders may differ,
        # but both must price the posterior identically
        else:
            pf = [float(v) for v in post]
            assert float(a.ranks @ pf) == pytest.approx(float(b.ranks @ pf), abs=1e-12)


def test_vertices_lie_in_recorded_partitions(agencies_system):
    vset = enumerate_vertices(agencies_system.P_XgW)
    specs = {spec.rank.key(): spec for spec in build_partitions(agencies_system.P_XgW)}
    for i in range(len(vset)):
        assert vset.partition_ranks[i]
        for key in vset.partition_ranks[i]:
            assert specs[key].contains(vset.points[i])


def test_guess_values_match_rank_dot_posterior(agencies_system):
    vset = enumerate_vertices(agencies_system.P_XgW)
    for i in range(len(vset)):
        post = agencies_system.P_XgW.push(vset.points[i])
        r = rank_vector(post).ranks.astype(float)
        assert vset.guess_values[i] == pytest.approx(float(r @ post), abs=1e-12)
        assert vset.ranks[i] == rank_vector(post)


def test_certificates_on_random_systems():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n_w, n_x = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        system = random_system(rng, n_w, n_x, 2)
        vset = enumerate_vertices(system.P_XgW)
        specs = {spec.rank.key(): spec for spec in build_partitions(system.P_XgW)}
        for i in range(len(vset)):
            assert any(
                certify_extreme_point(vset.points[i], specs[key])
                for key in vset.partition_ranks[i]
            )


def test_certificate_rejects_interior_and_edge_points():
    specs = build_partitions(Channel(np.eye(3)))
    spec = next(s for s in specs if s.rank.key() == (1, 2, 3))
    # interior point of the partition and a non-vertex edge midpoint
    assert not certify_extreme_point(np.array([0.5, 0.3, 0.2]), spec)
    assert not certify_extreme_point(np.array([0.75, 0.25, 0.0]), spec)
    assert certify_extreme_point(np.array([1.0, 0.0, 0.0]), spec)
    assert certify_extreme_point(np.array([0.5, 0.5, 0.0]), spec)
    assert certify_extreme_point(np.array([1 / 3, 1 / 3, 1 / 3]), spec)


def test_dimension_cap():
    with pytest.raises(CapExceededError):
        enumerate_vertices(Channel(np.eye(9)))
    with pytest.raises(CapExceededError):
        enumerate_vertices(Channel(np.eye(4)), max_support=3)


def test_deterministic_ordering(agencies_system):
    a = enumerate_vertices(agencies_system.P_XgW)
    b = enumerate_vertices(agencies_system.P_XgW)
    assert np.array_equal(a.points, b.points)
    keys = [tuple(v) for v in a.points]
    assert keys == sorted(keys)
