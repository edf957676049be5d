"""Repair-bandwidth-optimal storage code with two-helper oblivious updates.

The message is packed into symmetric matrices with a structurally zero
corner block; node l stores the row vectors psi_l^T M_p. A stale node
refreshes itself by downloading a single mixed symbol from each of any two
updated nodes, identifying the changed entry from the projective ratio of
the observed differences. Any k nodes suffice to decode the full message.

Node ids and symbol locations are 1-based on every public surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import _accel
from .common import (
    Located,
    NoChange,
    NodeShard,
    SymbolLocation,
    UpdateTranscript,
    check_fingerprint,
    fingerprint_of,
    match_projective_ratio,
)
from .field import PrimeField, SubmatrixViolation, next_prime


class BudgetExhaustedError(RuntimeError):
    """Coefficient search ran out of attempts at this modulus."""

    def __init__(self, attempts: int, q: int, suggested_q: int):
        super().__init__(
            f"no valid coefficients found in {attempts} attempts at q={q}; "
            f"retry with a larger modulus (next prime: {suggested_q})"
        )
        self.attempts = attempts
        self.suggested_q = suggested_q


class ShardCorruptionError(ValueError):
    """Decoded data failed an internal consistency check."""


@dataclass(frozen=True)
class RatioCollision:
    """Two locations share a projective ratio for some helper triple."""

    u1: int
    u2: int
    s: int
    loc_a: SymbolLocation
    loc_b: SymbolLocation


@dataclass(frozen=True)
class ZeroProductPair:
    """Both helper-side products vanish at one location for some triple."""

    u1: int
    u2: int
    s: int
    loc: SymbolLocation


@dataclass(frozen=True)
class ConditionReport:
    ok: bool
    condition_a: SubmatrixViolation | None
    condition_b: Union[RatioCollision, ZeroProductPair, None]


def block_size(n: int, k: int) -> int:
    """Free entries per symmetric matrix after zeroing the corner block."""
    return k * (n - 1) - k * (k - 1) // 2


def message_locations(n: int, k: int, theta: int) -> tuple[SymbolLocation, ...]:
    """Canonical symbol-location table: ascending p, then row-major over the
    upper triangle i <= j, excluding the zero block (i > k and j > k)."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    if theta < 1:
        raise ValueError(f"theta must be >= 1, got {theta}")
    locs = []
    for p in range(1, theta + 1):
        for i in range(1, n):
            for j in range(i, n):
                if i > k and j > k:
                    continue
                locs.append(SymbolLocation(p, i, j))
    return tuple(locs)


@dataclass(frozen=True, eq=False)
class MbrCodeSpec:
    """Public description of a matrix-coded instance.

    psi holds the node vectors as columns of an (n-1) x n matrix; eta is
    n x theta. Construction validates shapes and ranges only; the algebraic
    conditions are checked by verify_conditions (generate() only returns
    specs that pass).
    """

    n: int
    k: int
    theta: int
    q: int
    psi: np.ndarray
    eta: np.ndarray
    seed: int
    locations: tuple[SymbolLocation, ...]
    fingerprint: str

    @property
    def message_length(self) -> int:
        return self.theta * block_size(self.n, self.k)

    @property
    def shard_length(self) -> int:
        return (self.n - 1) * self.theta

    @cached_property
    def field(self) -> PrimeField:
        return PrimeField(self.q)

    def psi_vector(self, node_id: int) -> np.ndarray:
        return self.psi[:, node_id - 1]


def make_spec(
    n: int, k: int, theta: int, q: int,
    psi: Sequence[Sequence[int]], eta: Sequence[Sequence[int]], seed: int = 0,
) -> MbrCodeSpec:
    """Assemble and structurally validate a spec from explicit coefficients."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    if theta < 1:
        raise ValueError(f"theta must be >= 1, got {theta}")
    if theta * block_size(n, k) < 2:
        raise ValueError("message length must be at least 2 symbols")
    fld = PrimeField(q)
    psi_m = fld.matrix(np.asarray(psi, dtype=np.int64).T)  # columns = node vectors
    eta_m = fld.matrix(eta)
    if psi_m.shape != (n - 1, n):
        raise ValueError(f"psi must provide {n} vectors of length {n - 1}")
    if eta_m.shape != (n, theta):
        raise ValueError(f"eta must be {n} x {theta}, got {eta_m.shape}")
    fp = fingerprint_of(
        {
            "kind": "mbr",
            "n": n,
            "k": k,
            "theta": theta,
            "q": q,
            "psi": psi_m.T.tolist(),
            "eta": eta_m.tolist(),
        }
    )
    return MbrCodeSpec(
        n=n, k=k, theta=theta, q=q, psi=psi_m, eta=eta_m, seed=seed,
        locations=message_locations(n, k, theta), fingerprint=fp,
    )


def _locations_array(locs: Sequence[SymbolLocation]) -> np.ndarray:
    return np.array([(t.p - 1, t.i - 1, t.j - 1) for t in locs], dtype=np.int64)


def generate(
    n: int, k: int, theta: int, q: int, seed: int, budget: int = 1_000_000
) -> MbrCodeSpec:
    """Draw coefficients uniformly from the seeded deterministic generator
    until both code conditions hold; deterministic given (seed, budget)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    locs = message_locations(n, k, theta)
    if theta * block_size(n, k) < 2:
        raise ValueError("message length must be at least 2 symbols")
    PrimeField(q)  # primality check up front
    status, attempts, psi, eta = _accel.mbr_search(
        n, theta, q, _locations_array(locs), np.uint64(seed), budget
    )
    if int(status) != 0:
        raise BudgetExhaustedError(int(attempts), q, next_prime(q + 1))
    return make_spec(n, k, theta, q, psi.T.tolist(), eta.tolist(), seed=seed)


def generate_searching_q(
    n: int,
    k: int,
    theta: int,
    seed: int,
    attempts_per_q: int = 400,
    q_start: int | None = None,
    max_doublings: int = 24,
) -> MbrCodeSpec:
    """Escalate the modulus (roughly x4 per round) until generate succeeds."""
    b = theta * block_size(n, k)
    q = next_prime(q_start if q_start is not None else max(2 * b + 1, 17))
    for _ in range(max_doublings):
        try:
            return generate(n, k, theta, q, seed, budget=attempts_per_q)
        except BudgetExhaustedError:
            q = next_prime(4 * q)
    raise BudgetExhaustedError(attempts_per_q * max_doublings, q, next_prime(4 * q))


def verify_conditions(spec: MbrCodeSpec) -> ConditionReport:
    """Check both code conditions literally; violations are reported, not thrown.

    condition_a: every square submatrix of the stacked node-vector matrix is
    nonsingular (what any-k decoding relies on). condition_b: over all
    pairwise-distinct (u1, u2, s), distinct locations never share a
    projective ratio pair, and no location has both helper-side products
    zero (what unique ratio identification relies on).
    """
    fld = spec.field
    cap = min(spec.psi.shape)
    viol_a = fld.all_square_submatrices_nonsingular(spec.psi, cap)
    res = _accel.condition_b_first_violation(
        np.ascontiguousarray(spec.psi),
        np.ascontiguousarray(spec.eta),
        _locations_array(spec.locations),
        spec.q,
    )
    code = int(res[0])
    viol_b: Union[RatioCollision, ZeroProductPair, None] = None
    if code == 1:
        viol_b = RatioCollision(
            u1=int(res[1]) + 1,
            u2=int(res[2]) + 1,
            s=int(res[3]) + 1,
            loc_a=spec.locations[int(res[4])],
            loc_b=spec.locations[int(res[5])],
        )
    elif code == 2:
        viol_b = ZeroProductPair(
            u1=int(res[1]) + 1,
            u2=int(res[2]) + 1,
            s=int(res[3]) + 1,
            loc=spec.locations[int(res[4])],
        )
    return ConditionReport(
        ok=viol_a is None and viol_b is None, condition_a=viol_a, condition_b=viol_b
    )


def pack_message(spec: MbrCodeSpec, msg: Sequence[int]) -> list[np.ndarray]:
    """Scatter the message into theta symmetric matrices with the zero block."""
    m = spec.field.vector(msg)
    if m.shape[0] != spec.message_length:
        raise ValueError(
            f"message must have {spec.message_length} symbols, got {m.shape[0]}"
        )
    d = spec.n - 1
    mats = [np.zeros((d, d), np.int64) for _ in range(spec.theta)]
    for t, loc in enumerate(spec.locations):
        mat = mats[loc.p - 1]
        mat[loc.i - 1, loc.j - 1] = m[t]
        mat[loc.j - 1, loc.i - 1] = m[t]
    for mat in mats:
        mat.setflags(write=False)
    return mats


def unpack_message(spec: MbrCodeSpec, mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.empty(spec.message_length, np.int64)
    for t, loc in enumerate(spec.locations):
        out[t] = mats[loc.p - 1][loc.i - 1, loc.j - 1]
    out.setflags(write=False)
    return out


def gamma(spec: MbrCodeSpec, u: int, s: int, i: int, j: int) -> int:
    """Mixing coefficient that multiplies a changed entry at (i, j) in the
    difference observed between helper u and stale node s."""
    if u == s:
        raise ValueError("helper and stale node must differ")
    d = spec.n - 1
    if not (1 <= i <= d and 1 <= j <= d):
        raise ValueError(f"coordinates must be in [1, {d}]")
    pu = spec.psi_vector(u)
    ps = spec.psi_vector(s)
    q = spec.q
    if i == j:
        return int(pu[i - 1] * ps[i - 1] % q)
    return int((pu[i - 1] * ps[j - 1] + pu[j - 1] * ps[i - 1]) % q)


def ratio_table(spec: MbrCodeSpec, u1: int, u2: int, s: int) -> list[tuple[int, int]]:
    """Per-location coefficient pairs seen by stale node s via helpers u1, u2."""
    if len({u1, u2, s}) != 3:
        raise ValueError("u1, u2, s must be pairwise distinct")
    q = spec.q
    out = []
    for loc in spec.locations:
        a = spec.eta[u1 - 1, loc.p - 1] * gamma(spec, u1, s, loc.i, loc.j) % q
        b = spec.eta[u2 - 1, loc.p - 1] * gamma(spec, u2, s, loc.i, loc.j) % q
        out.append((int(a), int(b)))
    return out


def encode(spec: MbrCodeSpec, msg: Sequence[int]) -> list[NodeShard]:
    """Shard for node l is the concatenation over p of psi_l^T M_p."""
    mats = pack_message(spec, msg)
    fld = spec.field
    shards = []
    for node in range(1, spec.n + 1):
        ps = spec.psi_vector(node)
        # M_p is symmetric, so psi^T M_p equals (M_p psi)^T.
        blocks = [fld.mat_vec(mat, ps) for mat in mats]
        shards.append(
            NodeShard(
                node_id=node,
                symbols=np.concatenate(blocks),
                fingerprint=spec.fingerprint,
            )
        )
    return shards


def _check_node_id(spec: MbrCodeSpec, node_id: int) -> None:
    if not 1 <= node_id <= spec.n:
        raise ValueError(f"node id must be in [1, {spec.n}], got {node_id}")


def _weighted_probe(
    spec: MbrCodeSpec, shard: NodeShard, project_onto: int, eta_node: int
) -> int:
    """sum_p eta[eta_node, p] * <block_p of shard, psi_project_onto> mod q."""
    fld = spec.field
    d = spec.n - 1
    po = spec.psi_vector(project_onto)
    acc = 0
    for p in range(spec.theta):
        block = shard.symbols[p * d : (p + 1) * d]
        acc = (acc + spec.eta[eta_node - 1, p] * fld.dot(block, po)) % spec.q
    return int(acc)


def helper_response(spec: MbrCodeSpec, helper_shard: NodeShard, stale_id: int) -> int:
    """The single symbol an updated node returns: its stored blocks mixed by
    its eta scalars and projected onto the stale node's public vector."""
    check_fingerprint(spec.fingerprint, helper_shard.fingerprint, "helper shard")
    _check_node_id(spec, stale_id)
    _check_node_id(spec, helper_shard.node_id)
    if helper_shard.node_id == stale_id:
        raise ValueError("helper must differ from the stale node")
    return _weighted_probe(spec, helper_shard, stale_id, helper_shard.node_id)


def apply_update(
    spec: MbrCodeSpec,
    stale_shard: NodeShard,
    response1: tuple[int, int],
    response2: tuple[int, int],
) -> UpdateTranscript:
    """Run the stale-side update from two helper responses (helper_id, symbol).

    Identifies the changed location from the projective ratio of the two
    observed differences and patches the affected block; returns the shard
    unchanged under a no_change diagnosis. Raises NoRatioMatchError when
    the differences fit no single-symbol modification.
    """
    check_fingerprint(spec.fingerprint, stale_shard.fingerprint, "stale shard")
    (u1, r1_new), (u2, r2_new) = response1, response2
    s = stale_shard.node_id
    if len({u1, u2, s}) != 3:
        raise ValueError("helpers must be distinct and differ from the stale node")
    for u in (u1, u2):
        _check_node_id(spec, u)
    fld = spec.field

    # The stale node reproduces what each helper would have sent for the
    # stale message: matrix symmetry lets it evaluate the helper-side form
    # from its own stored blocks.
    r1_old = _mirror_probe(spec, stale_shard, u1)
    r2_old = _mirror_probe(spec, stale_shard, u2)
    d1 = fld.sub(r1_new, r1_old)
    d2 = fld.sub(r2_new, r2_old)
    downloaded = (int(r1_new) % spec.q, int(r2_new) % spec.q)

    if d1 == 0 and d2 == 0:
        return UpdateTranscript(
            stale_id=s,
            helper_ids=(u1, u2),
            downloaded_symbols=downloaded,
            diagnosis=NoChange(),
            shard=stale_shard,
        )

    table = ratio_table(spec, u1, u2, s)
    t0 = match_projective_ratio(table, d1, d2, spec.q)
    a0, b0 = table[t0]
    # At most one location can have a zero first coefficient; recover the
    # delta from whichever helper's coefficient is invertible.
    delta = fld.mul(fld.inv(a0), d1) if a0 != 0 else fld.mul(fld.inv(b0), d2)
    loc = spec.locations[t0]

    dvec = spec.n - 1
    ps = spec.psi_vector(s)
    patch = np.zeros(dvec, np.int64)
    if loc.i == loc.j:
        patch[loc.i - 1] = fld.mul(delta, int(ps[loc.i - 1]))
    else:
        patch[loc.j - 1] = fld.mul(delta, int(ps[loc.i - 1]))
        patch[loc.i - 1] = fld.mul(delta, int(ps[loc.j - 1]))
    symbols = stale_shard.symbols.copy()
    p0 = loc.p - 1
    symbols[p0 * dvec : (p0 + 1) * dvec] = (
        symbols[p0 * dvec : (p0 + 1) * dvec] + patch
    ) % spec.q
    new_shard = NodeShard(node_id=s, symbols=symbols, fingerprint=spec.fingerprint)
    return UpdateTranscript(
        stale_id=s,
        helper_ids=(u1, u2),
        downloaded_symbols=downloaded,
        diagnosis=Located(location=loc, delta=int(delta)),
        shard=new_shard,
    )


def _mirror_probe(spec: MbrCodeSpec, stale_shard: NodeShard, helper_id: int) -> int:
    # Matrix symmetry: <psi_s^T M_p, psi_u> = <psi_u^T M_p, psi_s>, so the
    # stale node can evaluate the helper-side sum, with the helper's eta
    # scalars, from its own stored blocks.
    return _weighted_probe(spec, stale_shard, helper_id, helper_id)


def oblivious_update(
    spec: MbrCodeSpec, stale_shard: NodeShard, helper_shards: Sequence[NodeShard]
) -> UpdateTranscript:
    """Full two-party exchange: helpers answer from their shards, the stale
    node applies. Sees only shards and the public spec."""
    if len(helper_shards) != 2:
        raise ValueError(f"exactly 2 helpers required, got {len(helper_shards)}")
    responses = [
        (h.node_id, helper_response(spec, h, stale_shard.node_id))
        for h in helper_shards
    ]
    return apply_update(spec, stale_shard, responses[0], responses[1])


def decode(spec: MbrCodeSpec, shards: Sequence[NodeShard]) -> np.ndarray:
    """Recover the message from any k shards via the two-phase block solve."""
    if len(shards) != spec.k:
        raise ValueError(f"exactly k={spec.k} shards required, got {len(shards)}")
    ids = [sh.node_id for sh in shards]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate node ids in {ids}")
    for sh in shards:
        check_fingerprint(spec.fingerprint, sh.fingerprint, f"shard {sh.node_id}")
        _check_node_id(spec, sh.node_id)

    fld = spec.field
    k, d = spec.k, spec.n - 1
    tail = d - k
    big_psi = spec.psi[:, [i - 1 for i in ids]].T  # k x (n-1), rows = node vectors
    phi = np.ascontiguousarray(big_psi[:, :k])
    delta_cols = np.ascontiguousarray(big_psi[:, k:])
    phi_inv = fld.mat_inv(phi)  # nonsingular: a k x k submatrix of psi

    mats = []
    for p in range(spec.theta):
        data = np.stack([sh.symbols[p * d : (p + 1) * d] for sh in shards])
        if tail > 0:
            t_block = fld.mat_mul(phi_inv, np.ascontiguousarray(data[:, k:]))
            head = (data[:, :k] - fld.mat_mul(delta_cols, t_block.T)) % spec.q
        else:
            t_block = np.zeros((k, 0), np.int64)
            head = data[:, :k]
        s_block = fld.mat_mul(phi_inv, np.ascontiguousarray(head))
        if not np.array_equal(s_block, s_block.T):
            raise ShardCorruptionError(
                f"recovered matrix {p + 1} is not symmetric; shard data is corrupt"
            )
        mat = np.zeros((d, d), np.int64)
        mat[:k, :k] = s_block
        if tail > 0:
            mat[:k, k:] = t_block
            mat[k:, :k] = t_block.T
        mats.append(mat)
    return unpack_message(spec, mats)
