"""JSON file formats: code specs, shards, traces.

Everything is desk-scale and transparent: symbols are decimal integers,
traces are one JSON object per line. Loaders recompute fingerprints and
validate ranges so a tampered file fails loudly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from . import mbr_code, mds_code
from .common import NodeShard
from .harness import TraceEvent

FORMAT_VERSION = 1

CodeSpec = Union[mbr_code.MbrCodeSpec, mds_code.MdsCodeSpec]


class TraceParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"trace line {line}: {message}")
        self.line = line


def spec_to_dict(spec: CodeSpec) -> dict:
    if isinstance(spec, mbr_code.MbrCodeSpec):
        return {
            "version": FORMAT_VERSION,
            "kind": "mbr",
            "n": spec.n,
            "k": spec.k,
            "q": spec.q,
            "theta": spec.theta,
            "psi": spec.psi.T.tolist(),
            "eta": spec.eta.tolist(),
            "seed": spec.seed,
            "fingerprint": spec.fingerprint,
        }
    return {
        "version": FORMAT_VERSION,
        "kind": "mds",
        "n": spec.n,
        "k": spec.k,
        "q": spec.q,
        "cauchy_rows": spec.n * spec.shard_length,
        "cauchy_cols": spec.B,
        "seed": 0,
        "fingerprint": spec.fingerprint,
    }


def spec_from_dict(data: dict) -> CodeSpec:
    if data.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported spec file version {data.get('version')!r}")
    kind = data.get("kind")
    if kind == "mbr":
        spec = mbr_code.make_spec(
            n=data["n"],
            k=data["k"],
            theta=data["theta"],
            q=data["q"],
            psi=data["psi"],
            eta=data["eta"],
            seed=data.get("seed", 0),
        )
    elif kind == "mds":
        b = data["cauchy_cols"]
        spec = mds_code.generate(n=data["n"], k=data["k"], B=b, q=data["q"])
        if data["cauchy_rows"] != spec.n * spec.shard_length:
            raise ValueError(
                f"cauchy_rows {data['cauchy_rows']} inconsistent with n*A = {spec.n * spec.shard_length}"
            )
    else:
        raise ValueError(f"unknown code kind {kind!r}")
    if data["fingerprint"] != spec.fingerprint:
        raise ValueError(
            f"stored fingerprint {data['fingerprint']!r} does not match recomputed {spec.fingerprint!r}"
        )
    return spec


def save_spec(spec: CodeSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n")


def load_spec(path: str | Path) -> CodeSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


def shard_to_dict(shard: NodeShard) -> dict:
    return {
        "fingerprint": shard.fingerprint,
        "node_id": shard.node_id,
        "symbols": [int(x) for x in shard.symbols],
    }


def shard_from_dict(data: dict, spec: CodeSpec) -> NodeShard:
    symbols = data["symbols"]
    if any(not 0 <= int(v) < spec.q for v in symbols):
        raise ValueError(f"shard symbols out of range [0, {spec.q})")
    if len(symbols) != spec.shard_length:
        raise ValueError(
            f"shard must hold {spec.shard_length} symbols, got {len(symbols)}"
        )
    return NodeShard(
        node_id=int(data["node_id"]),
        symbols=np.array(symbols, dtype=np.int64),
        fingerprint=data["fingerprint"],
    )


def save_shard(shard: NodeShard, path: str | Path) -> None:
    Path(path).write_text(json.dumps(shard_to_dict(shard), sort_keys=True) + "\n")


def load_shard(path: str | Path, spec: CodeSpec) -> NodeShard:
    return shard_from_dict(json.loads(Path(path).read_text()), spec)


def event_to_dict(ev: TraceEvent) -> dict:
    out: dict = {"kind": ev.kind}
    if ev.kind in ("take_offline", "bring_online"):
        out["id"] = ev.node_id
    if ev.kind == "bring_online" and ev.helpers is not None:
        out["helpers"] = list(ev.helpers)
    if ev.kind == "modify":
        out["index"] = ev.index
        out["value"] = ev.value
    return out


def _event_from_dict(data: dict, line: int) -> TraceEvent:
    kind = data.get("kind")
    try:
        if kind == "take_offline":
            return TraceEvent.take_offline(int(data["id"]))
        if kind == "bring_online":
            helpers = data.get("helpers")
            return TraceEvent.bring_online(
                int(data["id"]),
                tuple(int(h) for h in helpers) if helpers is not None else None,
            )
        if kind == "modify":
            return TraceEvent.modify(int(data["index"]), int(data["value"]))
        if kind == "verify":
            return TraceEvent.verify()
    except (KeyError, TypeError) as exc:
        raise TraceParseError(line, f"bad {kind!r} event: {exc}") from exc
    raise TraceParseError(line, f"unknown event kind {kind!r}")


def load_trace(path: str | Path) -> list[TraceEvent]:
    events = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceParseError(lineno, f"invalid JSON: {exc}") from exc
        events.append(_event_from_dict(data, lineno))
    return events


def save_trace(events: list[TraceEvent], path: str | Path) -> None:
    lines = [json.dumps(event_to_dict(ev), sort_keys=True) for ev in events]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def run_trace_files(spec_path: str | Path, trace_path: str | Path, seed: int) -> dict:
    """Load a spec file and a trace file, execute, and return the report."""
    from .harness import run_trace

    return run_trace(load_spec(spec_path), load_trace(trace_path), seed)
