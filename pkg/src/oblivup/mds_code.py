"""MDS storage code with k-helper oblivious updates.

The generator is a Cauchy matrix, so every square submatrix is nonsingular:
any k shards decode the message, and the per-column ratios of the stale
node's first two generator rows are pairwise distinct, which pins down a
single changed message index from 2k downloaded symbols.

Node ids and message indices are 1-based on every public surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .common import (
    Located,
    NoChange,
    NodeShard,
    UpdateTranscript,
    check_fingerprint,
    fingerprint_of,
    match_projective_ratio,
)
from .field import PrimeField, next_prime


@dataclass(frozen=True, eq=False)
class MdsCodeSpec:
    """Public description of a generator-coded instance.

    The nA x B generator is determined by (n, k, B, q) through the fixed
    Cauchy evaluation points, so only those four numbers are serialized.
    """

    n: int
    k: int
    B: int
    q: int
    fingerprint: str

    @property
    def shard_length(self) -> int:
        return self.B // self.k

    @property
    def message_length(self) -> int:
        return self.B

    @cached_property
    def field(self) -> PrimeField:
        return PrimeField(self.q)

    @cached_property
    def generator(self) -> np.ndarray:
        return self.field.cauchy(self.n * self.shard_length, self.B)

    def node_generator(self, node_id: int) -> np.ndarray:
        """Rows ((l-1)A, lA] of the full generator."""
        a = self.shard_length
        return self.generator[(node_id - 1) * a : node_id * a]


@dataclass(frozen=True, eq=False)
class CoefficientBundle:
    """Per-helper mixing vectors shipped with an update request.

    fingerprint and q are request-envelope metadata: they let a helper
    answer from its shard alone without resolving the code spec.
    """

    helper_id: int
    xi1: np.ndarray
    xi2: np.ndarray
    fingerprint: str
    q: int


def generate(n: int, k: int, B: int, q: int | None = None) -> MdsCodeSpec:
    """Deterministic construction; q defaults to the smallest prime >= nA + B."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if B % k != 0:
        raise ValueError(f"k={k} must divide B={B}")
    a = B // k
    if a < 2:
        raise ValueError(
            f"per-node storage B/k = {a} is too small; the update protocol needs at least 2"
        )
    min_q = n * a + B
    if q is None:
        q = next_prime(min_q)
    elif q < min_q:
        raise ValueError(f"q={q} is too small; need q >= nA + B = {min_q}")
    fp = fingerprint_of({"kind": "mds", "n": n, "k": k, "B": B, "q": q})
    spec = MdsCodeSpec(n=n, k=k, B=B, q=q, fingerprint=fp)
    spec.field  # primality check up front
    return spec


def encode(spec: MdsCodeSpec, msg: Sequence[int]) -> list[NodeShard]:
    m = spec.field.vector(msg)
    if m.shape[0] != spec.B:
        raise ValueError(f"message must have {spec.B} symbols, got {m.shape[0]}")
    return [
        NodeShard(
            node_id=node,
            symbols=spec.field.mat_vec(spec.node_generator(node), m),
            fingerprint=spec.fingerprint,
        )
        for node in range(1, spec.n + 1)
    ]


def _check_helper_set(spec: MdsCodeSpec, stale_id: int, helper_ids: Sequence[int]) -> None:
    if len(helper_ids) != spec.k:
        raise ValueError(f"exactly k={spec.k} helpers required, got {len(helper_ids)}")
    if len(set(helper_ids)) != len(helper_ids):
        raise ValueError(f"duplicate helper ids in {list(helper_ids)}")
    for u in helper_ids:
        if not 1 <= u <= spec.n:
            raise ValueError(f"node id must be in [1, {spec.n}], got {u}")
        if u == stale_id:
            raise ValueError("helpers must differ from the stale node")


def coefficient_vectors(
    spec: MdsCodeSpec, stale_id: int, helper_ids: Sequence[int]
) -> list[CoefficientBundle]:
    """Mixing vectors computed on the stale side: the first two generator
    rows of the stale node expressed in the helpers' stored coordinates."""
    if not 1 <= stale_id <= spec.n:
        raise ValueError(f"node id must be in [1, {spec.n}], got {stale_id}")
    _check_helper_set(spec, stale_id, helper_ids)
    fld = spec.field
    a = spec.shard_length
    stacked = np.concatenate([spec.node_generator(u) for u in helper_ids])
    inv = fld.mat_inv(stacked)  # nonsingular: B distinct Cauchy rows
    gs = spec.node_generator(stale_id)
    xi_rows = [fld.mat_vec(inv.T, gs[0]), fld.mat_vec(inv.T, gs[1])]
    out = []
    for idx, u in enumerate(helper_ids):
        seg = slice(idx * a, (idx + 1) * a)
        out.append(
            CoefficientBundle(
                helper_id=u,
                xi1=xi_rows[0][seg].copy(),
                xi2=xi_rows[1][seg].copy(),
                fingerprint=spec.fingerprint,
                q=spec.q,
            )
        )
    return out


def helper_response(
    helper_shard: NodeShard, bundle: CoefficientBundle
) -> tuple[int, int]:
    """The two mixed symbols an updated node returns for a request bundle."""
    check_fingerprint(bundle.fingerprint, helper_shard.fingerprint, "helper shard")
    if bundle.helper_id != helper_shard.node_id:
        raise ValueError(
            f"bundle addressed to node {bundle.helper_id}, shard is node {helper_shard.node_id}"
        )
    q = bundle.q
    s = helper_shard.symbols
    r1 = int(np.mod(bundle.xi1 * s, q).sum() % q)
    r2 = int(np.mod(bundle.xi2 * s, q).sum() % q)
    return r1, r2


def apply_update(
    spec: MdsCodeSpec,
    stale_shard: NodeShard,
    responses: Sequence[tuple[int, tuple[int, int]]],
) -> UpdateTranscript:
    """Combine k helper responses, identify the changed message index from
    the projective ratio of the two observed differences, and patch the
    shard with the matching generator column."""
    check_fingerprint(spec.fingerprint, stale_shard.fingerprint, "stale shard")
    s = stale_shard.node_id
    helper_ids = [u for u, _ in responses]
    _check_helper_set(spec, s, helper_ids)
    fld = spec.field

    agg1 = 0
    agg2 = 0
    downloaded = []
    for _, (r1, r2) in responses:
        agg1 = fld.add(agg1, r1)
        agg2 = fld.add(agg2, r2)
        downloaded.extend((int(r1) % spec.q, int(r2) % spec.q))

    d1 = fld.sub(agg1, int(stale_shard.symbols[0]))
    d2 = fld.sub(agg2, int(stale_shard.symbols[1]))
    if d1 == 0 and d2 == 0:
        return UpdateTranscript(
            stale_id=s,
            helper_ids=tuple(helper_ids),
            downloaded_symbols=tuple(downloaded),
            diagnosis=NoChange(),
            shard=stale_shard,
        )

    table = column_ratio_table(spec, s)
    j0 = match_projective_ratio(table, d1, d2, spec.q)
    # Cauchy entries are never zero, so the first-row coefficient inverts.
    delta = fld.mul(fld.inv(table[j0][0]), d1)
    gs = spec.node_generator(s)
    symbols = (stale_shard.symbols + delta * gs[:, j0]) % spec.q
    new_shard = NodeShard(node_id=s, symbols=symbols, fingerprint=spec.fingerprint)
    return UpdateTranscript(
        stale_id=s,
        helper_ids=tuple(helper_ids),
        downloaded_symbols=tuple(downloaded),
        diagnosis=Located(location=j0 + 1, delta=int(delta)),
        shard=new_shard,
    )


def column_ratio_table(spec: MdsCodeSpec, stale_id: int) -> list[tuple[int, int]]:
    """Per-message-index pairs from the stale node's first two generator rows."""
    gs = spec.node_generator(stale_id)
    return [(int(gs[0, j]), int(gs[1, j])) for j in range(spec.B)]


def oblivious_update(
    spec: MdsCodeSpec, stale_shard: NodeShard, helper_shards: Sequence[NodeShard]
) -> UpdateTranscript:
    """Full exchange: stale node ships bundles, helpers answer from their
    shards, stale node applies. Sees only shards and the public spec."""
    bundles = coefficient_vectors(
        spec, stale_shard.node_id, [h.node_id for h in helper_shards]
    )
    by_id = {h.node_id: h for h in helper_shards}
    responses = [
        (b.helper_id, helper_response(by_id[b.helper_id], b)) for b in bundles
    ]
    return apply_update(spec, stale_shard, responses)


def decode(spec: MdsCodeSpec, shards: Sequence[NodeShard]) -> np.ndarray:
    """Invert the stacked generator of any k distinct shards."""
    if len(shards) != spec.k:
        raise ValueError(f"exactly k={spec.k} shards required, got {len(shards)}")
    ids = [sh.node_id for sh in shards]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate node ids in {ids}")
    for sh in shards:
        check_fingerprint(spec.fingerprint, sh.fingerprint, f"shard {sh.node_id}")
        if not 1 <= sh.node_id <= spec.n:
            raise ValueError(f"node id must be in [1, {spec.n}], got {sh.node_id}")
    fld = spec.field
    stacked = np.concatenate([spec.node_generator(u) for u in ids])
    data = np.concatenate([sh.symbols for sh in shards])
    out = fld.mat_vec(fld.mat_inv(stacked), data)
    out.setflags(write=False)
    return out
