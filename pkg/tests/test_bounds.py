"""Lower-bound witness finders: pigeonhole pairs, phantom messages, replays."""

import itertools

import numpy as np
import pytest

from oblivup import bounds, mds_code
from oblivup.bounds import DownloadFunction, WitnessValidationError
from oblivup.field import PrimeField
from oblivup.rng import DetRng


def random_full_rank(rng, q, rows, cols):
    fld = PrimeField(q)
    while True:
        g = np.array([[rng.randrange(q) for _ in range(cols)] for _ in range(rows)], np.int64)
        if fld.rank(g) == rows:
            return g


# -- probe sets ---------------------------------------------------------------

def test_probe_set_is_injective_into_encodings():
    rng = DetRng(0)
    for q in (2, 3):
        fld = PrimeField(q)
        for _ in range(10):
            g = random_full_rank(rng, q, 2, 3)
            probes = bounds.stale_probe_set(g, q)
            assert len(probes) == q * q
            encs = {tuple(fld.mat_vec(g, p)) for p in probes}
            assert len(encs) == q * q


def test_probe_set_uses_pivots_not_first_columns():
    # first column is all-zero: pivots must skip it
    g = np.array([[0, 1, 0], [0, 0, 1]], np.int64)
    probes = bounds.stale_probe_set(g, 3)
    assert all(p[0] == 0 for p in probes)
    assert {(int(p[1]), int(p[2])) for p in probes} == {
        (x, y) for x in range(3) for y in range(3)
    }


def test_probe_set_rank_deficient_rejected():
    g = np.array([[1, 2, 0], [2, 4, 0]], np.int64)
    with pytest.raises(ValueError, match="rank"):
        bounds.stale_probe_set(g, 5)


# -- theorem 1 witnesses ---------------------------------------------------------

def test_thm1_constant_function_q2():
    gen = np.eye(2, dtype=np.int64)
    f = bounds.constant_table(bounds.stale_probe_set(gen, 2))
    wp = bounds.thm1_witness(gen, 2, f)
    bounds.validate_thm1_witness(gen, 2, f, wp)
    assert not np.array_equal(wp.m_a, wp.m_b)


def test_thm1_first_coordinate_adversary():
    rng = DetRng(17)
    q = 3
    g = random_full_rank(rng, q, 2, 3)
    probes = bounds.stale_probe_set(g, q)
    f = bounds.first_coordinate_table(probes)
    assert f.range_size <= q < q * q
    wp = bounds.thm1_witness(g, q, f)
    bounds.validate_thm1_witness(g, q, f, wp)


def test_thm1_random_tables_always_find_witness():
    rng = DetRng(23)
    for q in (2, 3):
        for _ in range(25):
            g = random_full_rank(rng, q, 2, 3)
            probes = bounds.stale_probe_set(g, q)
            f = bounds.random_table(probes, q * q - 1, rng)
            wp = bounds.thm1_witness(g, q, f)
            bounds.validate_thm1_witness(g, q, f, wp)
            assert f(wp.m_a) == f(wp.m_b)


def test_thm1_witness_deterministic():
    rng = DetRng(77)
    g = random_full_rank(rng, 3, 2, 3)
    probes = bounds.stale_probe_set(g, 3)
    f = bounds.random_table(probes, 8, rng)
    w1 = bounds.thm1_witness(g, 3, f)
    w2 = bounds.thm1_witness(g, 3, f)
    assert np.array_equal(w1.m_a, w2.m_a)
    assert np.array_equal(w1.m_b, w2.m_b)
    assert np.array_equal(w1.m_c, w2.m_c)


def test_thm1_large_range_rejected():
    gen = np.eye(2, dtype=np.int64)
    probes = bounds.stale_probe_set(gen, 2)
    injective = DownloadFunction({tuple(int(x) for x in p): i for i, p in enumerate(probes)})
    with pytest.raises(ValueError, match="no collision"):
        bounds.thm1_witness(gen, 2, injective)


def test_thm1_validator_rejects_tampering():
    gen = np.eye(2, dtype=np.int64)
    f = bounds.constant_table(bounds.stale_probe_set(gen, 2))
    wp = bounds.thm1_witness(gen, 2, f)
    forged = bounds.WitnessPair(m_a=wp.m_a, m_b=wp.m_a, m_c=wp.m_c, evidence=wp.evidence)
    with pytest.raises(WitnessValidationError):
        bounds.validate_thm1_witness(gen, 2, f, forged)


# -- phantom messages --------------------------------------------------------------

def test_phantom_identity_case(mds_spec):
    msg = [3, 1, 4, 1]
    ph = bounds.mds_phantom_message(mds_spec, 4, [1], msg, msg)
    assert ph.tolist() == msg


def test_phantom_all_nodes_and_helpers(mds_spec):
    fld = mds_spec.field
    rng = DetRng(40)
    for s in range(1, 5):
        for u in (x for x in range(1, 5) if x != s):
            msg = [rng.randrange(13) for _ in range(4)]
            upd = list(msg)
            t = rng.randrange(4)
            upd[t] = (upd[t] + 1 + rng.randrange(12)) % 13
            ph = bounds.mds_phantom_message(mds_spec, s, [u], msg, upd)
            gs = mds_spec.node_generator(s)
            gu = mds_spec.node_generator(u)
            # encodings agree with what the stale node actually sees
            assert np.array_equal(fld.mat_vec(gs, ph), fld.mat_vec(gs, fld.vector(msg)))
            assert np.array_equal(fld.mat_vec(gu, ph), fld.mat_vec(gu, fld.vector(upd)))
            visible = not np.array_equal(
                fld.mat_vec(gs, fld.vector(msg)), fld.mat_vec(gs, fld.vector(upd))
            )
            if visible:
                assert not np.array_equal(ph, fld.vector(upd))


def test_phantom_is_unique_solution(mds_spec):
    fld = mds_spec.field
    msg = [5, 0, 2, 9]
    upd = [5, 0, 8, 9]
    ph = bounds.mds_phantom_message(mds_spec, 4, [2], msg, upd)
    gs = mds_spec.node_generator(4)
    gu = mds_spec.node_generator(2)
    rng = DetRng(50)
    for _ in range(30):
        noise = np.array([rng.randrange(13) for _ in range(4)], np.int64)
        if not noise.any():
            continue
        other = (ph + noise) % 13
        stale_ok = np.array_equal(fld.mat_vec(gs, other), fld.mat_vec(gs, fld.vector(msg)))
        helper_ok = np.array_equal(fld.mat_vec(gu, other), fld.mat_vec(gu, fld.vector(upd)))
        assert not (stale_ok and helper_ok)


def test_phantom_validation(mds_spec):
    with pytest.raises(ValueError, match="k-1"):
        bounds.mds_phantom_message(mds_spec, 4, [1, 2], [0] * 4, [0] * 4)
    with pytest.raises(ValueError, match="one symbol"):
        bounds.mds_phantom_message(mds_spec, 4, [1], [0, 0, 0, 0], [1, 1, 0, 0])


# -- theorem 4 witnesses -------------------------------------------------------------

def test_transformed_probes_properties(mds_spec):
    fld = mds_spec.field
    s_prime, s_dprime = bounds.mds_transformed_probes(mds_spec, 4, [1, 2])
    assert len(s_prime) == 13**2
    gs = mds_spec.node_generator(4)
    g1 = mds_spec.node_generator(1)
    for m1, m2 in zip(s_prime[:20], s_dprime[:20]):
        assert np.array_equal(fld.mat_vec(gs, m1), fld.mat_vec(gs, m2))
        assert not fld.mat_vec(g1, m2).any()


def test_thm4_random_tables(mds_spec):
    rng = DetRng(60)
    _, s_dprime = bounds.mds_transformed_probes(mds_spec, 4, [1, 2])
    for _ in range(5):
        f = bounds.random_table(s_dprime, 13 * 13 - 1, rng)
        wp = bounds.thm4_witness(mds_spec, 4, [1, 2], f)
        bounds.validate_thm4_witness(mds_spec, 4, [1, 2], f, wp)
        # both scenarios are single-symbol updates
        assert int(np.count_nonzero(wp.stale_a != wp.updated_a)) <= 1
        assert int(np.count_nonzero(wp.stale_b != wp.updated_b)) <= 1


def test_thm4_all_stale_nodes(mds_spec):
    rng = DetRng(61)
    for s in range(1, 5):
        helpers = [u for u in range(1, 5) if u != s][:2]
        _, s_dprime = bounds.mds_transformed_probes(mds_spec, s, helpers)
        f = bounds.random_table(s_dprime, 13 * 13 - 1, rng)
        wp = bounds.thm4_witness(mds_spec, s, helpers, f)
        bounds.validate_thm4_witness(mds_spec, s, helpers, f, wp)


def test_thm4_injective_function_rejected(mds_spec):
    _, s_dprime = bounds.mds_transformed_probes(mds_spec, 4, [1, 2])
    injective = DownloadFunction(
        {tuple(int(x) for x in m): i for i, m in enumerate(s_dprime)}
    )
    with pytest.raises(ValueError, match="no collision"):
        bounds.thm4_witness(mds_spec, 4, [1, 2], injective)


def test_thm4_desk_scale_caps():
    big = mds_code.generate(4, 2, 4, q=65537)
    with pytest.raises(ValueError, match="enumeration cap"):
        bounds.mds_transformed_probes(big, 4, [1, 2])


def test_download_function_totality(mds_spec):
    f = DownloadFunction({})
    with pytest.raises(ValueError, match="not defined"):
        f(np.zeros(4, np.int64))
