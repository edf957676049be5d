"""Executable witnesses for the download lower bounds.

Each finder replays an adversarial construction at desk scale: given a
download function whose range is too small, it produces a concrete pair of
indistinguishable scenarios that would force a wrong update. Every witness
is re-validated clause by clause before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .common import hamming
from .field import PrimeField
from .mds_code import MdsCodeSpec

# These finders enumerate probe sets exhaustively; the guards keep them at
# desk scale where the replay stays interactive.
MAX_ENUMERATION = 65536
MAX_STORAGE_ROWS = 3
MAX_MESSAGE_LEN = 16


class WitnessValidationError(ValueError):
    """An evidence clause failed re-validation."""


@dataclass(frozen=True)
class DownloadFunction:
    """Explicit finite table from probe messages to opaque range labels."""

    table: Mapping[tuple[int, ...], int]

    @property
    def range_size(self) -> int:
        return len(set(self.table.values()))

    def __call__(self, msg: np.ndarray) -> int:
        key = tuple(int(x) for x in msg)
        if key not in self.table:
            raise ValueError(f"download function is not defined on probe {key}")
        return self.table[key]


def random_table(probes: Sequence[np.ndarray], num_labels: int, rng) -> DownloadFunction:
    """Independent uniform labels; the realized range size may be smaller."""
    return DownloadFunction(
        {tuple(int(x) for x in p): rng.randrange(num_labels) for p in probes}
    )


def constant_table(probes: Sequence[np.ndarray]) -> DownloadFunction:
    return DownloadFunction({tuple(int(x) for x in p): 0 for p in probes})


def first_coordinate_table(probes: Sequence[np.ndarray]) -> DownloadFunction:
    return DownloadFunction({tuple(int(x) for x in p): int(p[0]) for p in probes})


@dataclass(frozen=True, eq=False)
class WitnessPair:
    """Two update candidates a stale node cannot tell apart.

    With m_c as the stale message, m_a and m_b are both single-symbol
    updates, the stale node's own data and the downloaded label agree in
    both cases, yet the required post-update contents differ.
    """

    m_a: np.ndarray
    m_b: np.ndarray
    m_c: np.ndarray
    evidence: dict


@dataclass(frozen=True, eq=False)
class ScenarioWitnessPair:
    """Two full (stale, updated) scenarios with identical stale-side views.

    Both are single-symbol updates; the stale node's shard, the genie
    helpers' shards, and the final helper's label coincide across the two,
    while the required post-update shards differ.
    """

    stale_a: np.ndarray
    updated_a: np.ndarray
    stale_b: np.ndarray
    updated_b: np.ndarray
    evidence: dict


def _pivot_columns(fld: PrimeField, gen: np.ndarray) -> tuple[int, ...]:
    _, pivots, rank = fld.rref(gen)
    if rank != gen.shape[0]:
        raise ValueError(
            f"generator rows are linearly dependent (rank {rank} < {gen.shape[0]})"
        )
    return pivots


def stale_probe_set(gen: np.ndarray, q: int) -> list[np.ndarray]:
    """The q^2 messages sweeping the first two pivot coordinates of gen,
    zero elsewhere, in row-major (first pivot outer) order."""
    fld = PrimeField(q)
    if gen.shape[0] < 2:
        raise ValueError("stale node must store at least 2 symbols")
    if gen.shape[1] > MAX_MESSAGE_LEN:
        raise ValueError(f"message length {gen.shape[1]} exceeds desk-scale cap {MAX_MESSAGE_LEN}")
    if q * q > MAX_ENUMERATION:
        raise ValueError(f"q^2 = {q * q} exceeds enumeration cap {MAX_ENUMERATION}")
    l1, l2 = _pivot_columns(fld, gen)[:2]
    probes = []
    for x in range(q):
        for y in range(q):
            m = np.zeros(gen.shape[1], np.int64)
            m[l1] = x
            m[l2] = y
            probes.append(m)
    return probes


def thm1_witness(gen: np.ndarray, q: int, f: DownloadFunction) -> WitnessPair:
    """Pigeonhole two equal-label probes into an indistinguishable update pair.

    gen is the stale node's full-row-rank generator; f must be total on the
    probe set and have range smaller than q^2.
    """
    fld = PrimeField(q)
    probes = stale_probe_set(gen, q)
    if f.range_size >= q * q:
        raise ValueError(
            f"range size {f.range_size} >= q^2 = {q * q}: no collision is guaranteed"
        )
    l1 = _pivot_columns(fld, gen)[0]
    seen: dict[int, int] = {}
    for idx, probe in enumerate(probes):
        label = f(probe)
        if label in seen:
            m_a = probes[seen[label]]
            m_b = probe
            # Distinct pivot assignments always encode differently; the
            # check is defensive.
            if np.array_equal(fld.mat_vec(gen, m_a), fld.mat_vec(gen, m_b)):
                continue
            m_c = m_a.copy()
            m_c[l1] = m_b[l1]
            wp = WitnessPair(
                m_a=m_a,
                m_b=m_b,
                m_c=m_c,
                evidence={
                    "label": label,
                    "d_ca": hamming(m_c, m_a),
                    "d_cb": hamming(m_c, m_b),
                },
            )
            validate_thm1_witness(gen, q, f, wp)
            return wp
        seen[label] = idx
    raise RuntimeError("no equal-label probe pair found despite range < q^2")


def validate_thm1_witness(
    gen: np.ndarray, q: int, f: DownloadFunction, wp: WitnessPair
) -> None:
    """Re-check all evidence clauses independently of how the pair was found."""
    fld = PrimeField(q)
    if f(wp.m_a) != f(wp.m_b):
        raise WitnessValidationError("download labels differ")
    if hamming(wp.m_c, wp.m_a) > 1 or hamming(wp.m_c, wp.m_b) > 1:
        raise WitnessValidationError("stale message is not within one symbol of both candidates")
    if np.array_equal(fld.mat_vec(gen, wp.m_a), fld.mat_vec(gen, wp.m_b)):
        raise WitnessValidationError("candidate encodings at the stale node coincide")


def mds_phantom_message(
    spec: MdsCodeSpec,
    stale_id: int,
    helper_ids: Sequence[int],
    stale_msg: Sequence[int],
    updated_msg: Sequence[int],
) -> np.ndarray:
    """The unique message whose encoding matches the k-1 updated helpers and
    the stale node simultaneously.

    Treating it as 'stale and never modified' gives the stale node exactly
    the data it sees in the real scenario, so k-1 helpers cannot suffice.
    """
    fld = spec.field
    if len(helper_ids) != spec.k - 1:
        raise ValueError(f"exactly k-1 = {spec.k - 1} helpers required, got {len(helper_ids)}")
    if len(set(helper_ids)) != len(helper_ids) or stale_id in helper_ids:
        raise ValueError("helpers must be distinct and differ from the stale node")
    m_old = fld.vector(stale_msg)
    m_new = fld.vector(updated_msg)
    if m_old.shape[0] != spec.B or m_new.shape[0] != spec.B:
        raise ValueError(f"messages must have {spec.B} symbols")
    if hamming(m_old, m_new) > 1:
        raise ValueError("at most one symbol may differ between stale and updated messages")

    blocks = [spec.node_generator(u) for u in helper_ids] + [spec.node_generator(stale_id)]
    rhs = np.concatenate(
        [fld.mat_vec(g, m_new) for g in blocks[:-1]] + [fld.mat_vec(blocks[-1], m_old)]
    )
    phantom = fld.solve(np.concatenate(blocks), rhs)
    # Defensive re-check of the defining equations.
    for g, u in zip(blocks[:-1], helper_ids):
        if not np.array_equal(fld.mat_vec(g, phantom), fld.mat_vec(g, m_new)):
            raise RuntimeError(f"phantom encoding mismatch at helper {u}")
    if not np.array_equal(
        fld.mat_vec(blocks[-1], phantom), fld.mat_vec(blocks[-1], m_old)
    ):
        raise RuntimeError("phantom encoding mismatch at the stale node")
    phantom.setflags(write=False)
    return phantom


def mds_transformed_probes(
    spec: MdsCodeSpec, stale_id: int, helper_ids: Sequence[int]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Probe messages for the per-node bound: the q^A sweep of the stale
    node's pivot coordinates, and their unique transforms that encode to
    zero at the first k-1 helpers while matching the stale encoding."""
    fld = spec.field
    a = spec.shard_length
    q = spec.q
    if len(helper_ids) != spec.k:
        raise ValueError(f"exactly k = {spec.k} helpers required, got {len(helper_ids)}")
    if len(set(helper_ids)) != len(helper_ids) or stale_id in helper_ids:
        raise ValueError("helpers must be distinct and differ from the stale node")
    if a > MAX_STORAGE_ROWS:
        raise ValueError(f"per-node storage {a} exceeds desk-scale cap {MAX_STORAGE_ROWS}")
    if q**a > MAX_ENUMERATION:
        raise ValueError(f"q^A = {q**a} exceeds enumeration cap {MAX_ENUMERATION}")
    if spec.B > MAX_MESSAGE_LEN:
        raise ValueError(f"message length {spec.B} exceeds desk-scale cap {MAX_MESSAGE_LEN}")

    gs = spec.node_generator(stale_id)
    pivots = _pivot_columns(fld, gs)
    genie = helper_ids[:-1]
    stacked = np.concatenate([gs] + [spec.node_generator(u) for u in genie])
    inv = fld.mat_inv(stacked)
    # m'' = inv @ [G_s m'; 0]: only the first A columns of inv matter.
    lift = np.ascontiguousarray(inv[:, :a])

    s_prime: list[np.ndarray] = []
    s_dprime: list[np.ndarray] = []
    values = np.zeros(a, np.int64)
    while True:
        m1 = np.zeros(spec.B, np.int64)
        for c, v in zip(pivots, values):
            m1[c] = v
        s_prime.append(m1)
        s_dprime.append(fld.mat_vec(lift, fld.mat_vec(gs, m1)))
        # Odometer: last pivot coordinate moves fastest.
        pos = a - 1
        while pos >= 0 and values[pos] == q - 1:
            values[pos] = 0
            pos -= 1
        if pos < 0:
            break
        values[pos] += 1
    return s_prime, s_dprime


def thm4_witness(
    spec: MdsCodeSpec, stale_id: int, helper_ids: Sequence[int], f: DownloadFunction
) -> ScenarioWitnessPair:
    """Replay the per-node bound: the first k-1 helpers play the genie, the
    last helper answers through f. A too-small range yields two complete
    scenarios the stale node cannot distinguish."""
    fld = spec.field
    q = spec.q
    a = spec.shard_length
    if f.range_size >= q * q:
        raise ValueError(
            f"range size {f.range_size} >= q^2 = {q * q}: no collision is guaranteed"
        )
    s_prime, s_dprime = mds_transformed_probes(spec, stale_id, helper_ids)
    pivots = _pivot_columns(fld, spec.node_generator(stale_id))

    classes: dict[int, list[int]] = {}
    for idx, m2 in enumerate(s_dprime):
        classes.setdefault(f(m2), []).append(idx)
    big_label, big = max(classes.items(), key=lambda kv: (len(kv[1]), -kv[0]))
    if len(big) <= q ** (a - 2):
        raise RuntimeError("no label class exceeds q^(A-2) despite range < q^2")

    # Two probes whose originals agree on the first A-2 pivot coordinates
    # (vacuous for A = 2) exist by pigeonhole inside the big class.
    prefix_groups: dict[tuple[int, ...], list[int]] = {}
    pair = None
    for idx in big:
        key = tuple(int(s_prime[idx][c]) for c in pivots[: a - 2])
        group = prefix_groups.setdefault(key, [])
        group.append(idx)
        if len(group) == 2:
            pair = (group[0], group[1])
            break
    if pair is None:
        raise RuntimeError("no equal-prefix pair found despite class size > q^(A-2)")

    ia, ib = pair
    ma1, mb1 = s_prime[ia], s_prime[ib]
    ma2, mb2 = s_dprime[ia], s_dprime[ib]
    mc1 = ma1.copy()
    mc1[pivots[a - 2]] = mb1[pivots[a - 2]]

    wp = ScenarioWitnessPair(
        stale_a=(ma2 - ma1 + mc1) % q,
        updated_a=ma2,
        stale_b=(mb2 - mb1 + mc1) % q,
        updated_b=mb2,
        evidence={"label": big_label, "class_size": len(big)},
    )
    validate_thm4_witness(spec, stale_id, helper_ids, f, wp)
    return wp


def validate_thm4_witness(
    spec: MdsCodeSpec,
    stale_id: int,
    helper_ids: Sequence[int],
    f: DownloadFunction,
    wp: ScenarioWitnessPair,
) -> None:
    """Re-check every indistinguishability clause from scratch."""
    fld = spec.field
    gs = spec.node_generator(stale_id)
    if hamming(wp.stale_a, wp.updated_a) > 1 or hamming(wp.stale_b, wp.updated_b) > 1:
        raise WitnessValidationError("a scenario modifies more than one symbol")
    if not np.array_equal(fld.mat_vec(gs, wp.stale_a), fld.mat_vec(gs, wp.stale_b)):
        raise WitnessValidationError("stale node's own data differs between scenarios")
    for u in helper_ids[:-1]:
        gu = spec.node_generator(u)
        enc_a = fld.mat_vec(gu, wp.updated_a)
        enc_b = fld.mat_vec(gu, wp.updated_b)
        if np.any(enc_a) or np.any(enc_b):
            raise WitnessValidationError(f"genie helper {u} would store nonzero data")
    if f(wp.updated_a) != f(wp.updated_b):
        raise WitnessValidationError("final helper's labels differ")
    if np.array_equal(fld.mat_vec(gs, wp.updated_a), fld.mat_vec(gs, wp.updated_b)):
        raise WitnessValidationError("required post-update shards coincide")
