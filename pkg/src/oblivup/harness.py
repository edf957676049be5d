"""Deterministic cluster simulator with exact download accounting.

The event loop owns a ClusterState and threads it through take_offline /
modify / bring_online / verify events. Protocol steps run through the
codes' oblivious_update entry points, which see only shards and the public
spec; the hidden ground-truth message is read exclusively by verification
and reporting paths.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union

import numpy as np

from . import mbr_code, mds_code
from .common import Located, NoChange, NodeShard, NoRatioMatchError, UpdateTranscript
from .rng import DetRng

CodeSpec = Union[mbr_code.MbrCodeSpec, mds_code.MdsCodeSpec]


class UnavailabilityError(RuntimeError):
    """Too few online helpers to run the update protocol."""


class ProtocolFailureError(RuntimeError):
    """Oblivious update could not bring the shard to the true state.

    Expected exactly when more than one symbol changed while the node was
    offline (a documented model limitation); diagnostics carry the window.
    """

    def __init__(self, stale_id: int, reason: str, modified_indices: tuple[int, ...]):
        super().__init__(
            f"update of node {stale_id} failed: {reason}; "
            f"symbols modified while offline: {list(modified_indices)}"
        )
        self.stale_id = stale_id
        self.reason = reason
        self.modified_indices = modified_indices


@dataclass(frozen=True)
class TraceEvent:
    kind: str
    node_id: int | None = None
    index: int | None = None
    value: int | None = None
    helpers: tuple[int, ...] | None = None

    @staticmethod
    def take_offline(node_id: int) -> "TraceEvent":
        return TraceEvent(kind="take_offline", node_id=node_id)

    @staticmethod
    def modify(index: int, value: int) -> "TraceEvent":
        return TraceEvent(kind="modify", index=index, value=value)

    @staticmethod
    def bring_online(node_id: int, helpers: tuple[int, ...] | None = None) -> "TraceEvent":
        return TraceEvent(kind="bring_online", node_id=node_id, helpers=helpers)

    @staticmethod
    def verify() -> "TraceEvent":
        return TraceEvent(kind="verify")


@dataclass(frozen=True)
class CommStats:
    """Download accounting for one update; bits are derived, never summed."""

    symbols_downloaded: int
    q: int
    message_length: int

    @property
    def bits_downloaded(self) -> float:
        return self.symbols_downloaded * math.log2(self.q)

    @property
    def baseline_bits(self) -> float:
        # Complete-information reference: name the index, send the value.
        return float(
            math.ceil(math.log2(self.message_length)) + math.ceil(math.log2(self.q))
        )


@dataclass(frozen=True)
class StepResult:
    event: TraceEvent
    transcript: UpdateTranscript | None = None
    stats: CommStats | None = None
    divergent: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ClusterState:
    spec: CodeSpec
    shards: tuple[NodeShard, ...]
    ground_truth_msg: np.ndarray
    offline: frozenset[int] = frozenset()
    offline_snapshots: Mapping[int, np.ndarray] = field(default_factory=dict)
    modification_log: tuple[tuple[int, int, int], ...] = ()
    transcripts: tuple[UpdateTranscript, ...] = ()
    total_symbols_downloaded: int = 0

    def shard(self, node_id: int) -> NodeShard:
        return self.shards[node_id - 1]

    def online_ids(self) -> list[int]:
        return [i for i in range(1, self.spec.n + 1) if i not in self.offline]


def _encode(spec: CodeSpec, msg: np.ndarray) -> list[NodeShard]:
    if isinstance(spec, mbr_code.MbrCodeSpec):
        return mbr_code.encode(spec, msg)
    return mds_code.encode(spec, msg)


def helpers_required(spec: CodeSpec) -> int:
    return 2 if isinstance(spec, mbr_code.MbrCodeSpec) else spec.k


def run_protocol_update(
    spec: CodeSpec, stale_shard: NodeShard, helper_shards: Sequence[NodeShard]
) -> UpdateTranscript:
    """Protocol path: inputs are shards and the public spec, nothing else."""
    if isinstance(spec, mbr_code.MbrCodeSpec):
        return mbr_code.oblivious_update(spec, stale_shard, helper_shards)
    return mds_code.oblivious_update(spec, stale_shard, helper_shards)


def cluster_init(spec: CodeSpec, msg: Sequence[int]) -> ClusterState:
    """All nodes online, every shard freshly encoded from msg."""
    gt = spec.field.vector(msg)
    if gt.shape[0] != spec.message_length:
        raise ValueError(
            f"message must have {spec.message_length} symbols, got {gt.shape[0]}"
        )
    return ClusterState(spec=spec, shards=tuple(_encode(spec, gt)), ground_truth_msg=gt)


def verify(state: ClusterState) -> list[int]:
    """Node ids of online shards that diverge from the ground-truth encoding."""
    fresh = _encode(state.spec, state.ground_truth_msg)
    return [
        i
        for i in state.online_ids()
        if not np.array_equal(state.shard(i).symbols, fresh[i - 1].symbols)
    ]


def _modified_window(state: ClusterState, node_id: int) -> tuple[int, ...]:
    snap = state.offline_snapshots[node_id]
    return tuple(
        int(i) + 1 for i in np.nonzero(snap != state.ground_truth_msg)[0]
    )


def step(state: ClusterState, event: TraceEvent) -> tuple[ClusterState, StepResult]:
    spec = state.spec

    if event.kind == "take_offline":
        nid = event.node_id
        if not 1 <= nid <= spec.n:
            raise ValueError(f"node id must be in [1, {spec.n}], got {nid}")
        if nid in state.offline:
            raise ValueError(f"node {nid} is already offline")
        snaps = dict(state.offline_snapshots)
        snaps[nid] = state.ground_truth_msg.copy()
        return (
            replace(state, offline=state.offline | {nid}, offline_snapshots=snaps),
            StepResult(event=event),
        )

    if event.kind == "modify":
        idx, value = event.index, event.value
        if not 1 <= idx <= spec.message_length:
            raise ValueError(f"symbol index must be in [1, {spec.message_length}], got {idx}")
        if not 0 <= value < spec.q:
            raise ValueError(f"value must be in [0, {spec.q}), got {value}")
        old = int(state.ground_truth_msg[idx - 1])
        gt = state.ground_truth_msg.copy()
        gt[idx - 1] = value
        fresh = _encode(spec, gt)
        shards = tuple(
            fresh[i - 1] if i not in state.offline else state.shard(i)
            for i in range(1, spec.n + 1)
        )
        return (
            replace(
                state,
                ground_truth_msg=gt,
                shards=shards,
                modification_log=state.modification_log + ((idx, old, value),),
            ),
            StepResult(event=event),
        )

    if event.kind == "bring_online":
        nid = event.node_id
        if nid not in state.offline:
            raise ValueError(f"node {nid} is not offline")
        need = helpers_required(spec)
        online = [i for i in state.online_ids() if i != nid]
        if event.helpers is not None:
            helpers = list(event.helpers)
            bad = [h for h in helpers if h not in online]
            if bad:
                raise ValueError(f"requested helpers {bad} are not online updated nodes")
        else:
            helpers = online[:need]  # lowest-id policy
        if len(helpers) < need:
            raise UnavailabilityError(
                f"update of node {nid} needs {need} online helpers, only {len(online)} available"
            )

        try:
            transcript = run_protocol_update(
                spec, state.shard(nid), [state.shard(h) for h in helpers]
            )
        except NoRatioMatchError as exc:
            raise ProtocolFailureError(
                nid, str(exc), _modified_window(state, nid)
            ) from exc

        # Post-hoc check against ground truth (verification path): a silent
        # mis-application under a multi-symbol window must surface here.
        expected = _encode(spec, state.ground_truth_msg)[nid - 1]
        if not np.array_equal(transcript.shard.symbols, expected.symbols):
            raise ProtocolFailureError(
                nid,
                "post-update shard does not match the updated encoding",
                _modified_window(state, nid),
            )

        shards = tuple(
            transcript.shard if i == nid else state.shard(i)
            for i in range(1, spec.n + 1)
        )
        snaps = {k: v for k, v in state.offline_snapshots.items() if k != nid}
        stats = CommStats(
            symbols_downloaded=transcript.symbols_downloaded,
            q=spec.q,
            message_length=spec.message_length,
        )
        new_state = replace(
            state,
            shards=shards,
            offline=state.offline - {nid},
            offline_snapshots=snaps,
            transcripts=state.transcripts + (transcript,),
            total_symbols_downloaded=state.total_symbols_downloaded
            + transcript.symbols_downloaded,
        )
        return new_state, StepResult(event=event, transcript=transcript, stats=stats)

    if event.kind == "verify":
        return state, StepResult(event=event, divergent=tuple(verify(state)))

    raise ValueError(f"unknown event kind {event.kind!r}")


def diagnosis_dict(diag) -> dict:
    if isinstance(diag, NoChange):
        return {"kind": "no_change"}
    assert isinstance(diag, Located)
    if isinstance(diag.location, int):
        return {"kind": "located", "index": diag.location, "delta": diag.delta}
    return {
        "kind": "located",
        "location": {"p": diag.location.p, "i": diag.location.i, "j": diag.location.j},
        "delta": diag.delta,
    }


def run_trace(spec: CodeSpec, events: Sequence[TraceEvent], seed: int) -> dict:
    """Execute a trace and build the deterministic report structure.

    The initial ground-truth message is drawn from the seeded generator, so
    (spec, trace, seed) fully determine every byte of the report.
    """
    rng = DetRng(seed)
    msg = [rng.randrange(spec.q) for _ in range(spec.message_length)]
    state = cluster_init(spec, msg)

    kind = "mbr" if isinstance(spec, mbr_code.MbrCodeSpec) else "mds"
    report: dict = {
        "version": 1,
        "code": {
            "kind": kind,
            "n": spec.n,
            "k": spec.k,
            "q": spec.q,
            "message_length": spec.message_length,
            "fingerprint": spec.fingerprint,
        },
        "seed": seed,
        "events": [],
        "updates": [],
        "status": "ok",
    }

    from .files import event_to_dict  # local import to avoid a cycle

    for pos, ev in enumerate(events, start=1):
        record: dict = {"seq": pos, "event": event_to_dict(ev)}
        try:
            state, result = step(state, ev)
        except ProtocolFailureError as exc:
            record["result"] = {
                "error": "protocol_failure",
                "reason": exc.reason,
                "modified_indices": list(exc.modified_indices),
            }
            report["events"].append(record)
            report["status"] = "protocol_failure"
            break
        except UnavailabilityError as exc:
            record["result"] = {"error": "unavailable", "reason": str(exc)}
            report["events"].append(record)
            report["status"] = "unavailable"
            break
        if result.transcript is not None:
            upd = {
                "stale_id": result.transcript.stale_id,
                "helper_ids": list(result.transcript.helper_ids),
                "downloaded_symbols": list(result.transcript.downloaded_symbols),
                "symbols_downloaded": result.stats.symbols_downloaded,
                "bits_downloaded": result.stats.bits_downloaded,
                "baseline_bits": result.stats.baseline_bits,
                "diagnosis": diagnosis_dict(result.transcript.diagnosis),
            }
            report["updates"].append(upd)
            record["result"] = {"update": upd["diagnosis"]}
        elif result.divergent is not None:
            record["result"] = {"divergent": list(result.divergent)}
        else:
            record["result"] = {}
        report["events"].append(record)

    divergent = verify(state)
    report["final_verify"] = {"pass": not divergent, "divergent": divergent}
    report["totals"] = {
        "updates": len(report["updates"]),
        "symbols_downloaded": state.total_symbols_downloaded,
        "bits_downloaded": state.total_symbols_downloaded * math.log2(spec.q),
    }
    return report


def render_report(report: dict) -> str:
    """Canonical byte-stable rendering of a trace report."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
