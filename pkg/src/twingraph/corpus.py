"""Corpus serialization: JSONL instances plus a checksummed manifest.

Records are written with a fixed key order and compact separators so that a
load/save round trip is byte identical, which makes the manifest checksums
stable across machines.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Iterator

from .graphs import ConceptGraph, CoupledInstance, SceneGraph, Triple, relation_histogram

FORMAT_VERSION = 1


class CorpusFormatError(ValueError):
    """A corpus file or record does not match the expected schema."""

    def __init__(self, message: str, record_index: int | None = None):
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)
        self.record_index = record_index


def instance_to_record(instance: CoupledInstance) -> dict:
    """Plain-dict form of an instance with deterministic field order."""
    return {
        "id": instance.id,
        "question": instance.question,
        "topic_entities": list(instance.topic_entities),
        "scene": {
            "entities": sorted(instance.scene.entities),
            "mentions": list(instance.scene.mentions),
            "triples": [list(t.as_tuple()) for t in instance.scene.triples],
        },
        "concept": {
            "entities": sorted(instance.concept.entities),
            "triples": [list(t.as_tuple()) for t in instance.concept.triples],
            "provenance": list(instance.concept.provenance),
        },
        "gold_answers": [[answer, weight] for answer, weight in instance.gold_answers],
    }


def record_to_instance(record: dict, index: int | None = None) -> CoupledInstance:
    """Inverse of :func:`instance_to_record`; raises on any missing field."""
    try:
        scene = SceneGraph(
            entities=frozenset(record["scene"]["entities"]),
            triples=tuple(Triple(*t) for t in record["scene"]["triples"]),
            mentions=tuple(record["scene"]["mentions"]),
        )
        concept = ConceptGraph(
            entities=frozenset(record["concept"]["entities"]),
            triples=tuple(Triple(*t) for t in record["concept"]["triples"]),
            provenance=tuple(record["concept"]["provenance"]),
        )
        return CoupledInstance(
            id=record["id"],
            scene=scene,
            concept=concept,
            question=record["question"],
            topic_entities=tuple(record["topic_entities"]),
            gold_answers=tuple((a, float(w)) for a, w in record["gold_answers"]),
        )
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(f"bad record structure: {exc!r}", index) from exc


def record_bytes(record: dict) -> bytes:
    """Canonical single-line encoding of one record (no trailing newline)."""
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def save_corpus(instances: Iterable[CoupledInstance], path: str | Path) -> dict:
    """Write a JSONL corpus and its manifest; returns the manifest dict.

    The manifest lands next to the corpus at ``<path>.manifest.json`` and
    carries a sha256 per record plus the scene relation histogram.
    """
    path = Path(path)
    instances = list(instances)
    ids = [inst.id for inst in instances]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise CorpusFormatError(f"duplicate instance ids: {dupes}")

    checksums: dict[str, str] = {}
    with path.open("wb") as fh:
        for inst in instances:
            line = record_bytes(instance_to_record(inst))
            checksums[inst.id] = hashlib.sha256(line).hexdigest()
            fh.write(line)
            fh.write(b"\n")

    manifest = {
        "format_version": FORMAT_VERSION,
        "count": len(instances),
        "ids": ids,
        "checksums": checksums,
        "relation_histogram": relation_histogram(instances),
    }
    manifest_path = manifest_path_for(path)
    manifest_path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return manifest


def manifest_path_for(corpus_path: str | Path) -> Path:
    return Path(str(corpus_path) + ".manifest.json")


def iter_corpus(path: str | Path) -> Iterator[CoupledInstance]:
    """Stream instances from a JSONL corpus file."""
    with Path(path).open("rb") as fh:
        for index, raw in enumerate(fh):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc}", index) from exc
            yield record_to_instance(record, index)


def load_corpus(path: str | Path, verify: bool = True) -> list[CoupledInstance]:
    """Load a corpus, optionally verifying it against its manifest.

    With ``verify`` the manifest must exist and every record line must hash
    to its recorded checksum; count and id order are checked too.
    """
    path = Path(path)
    instances = list(iter_corpus(path))
    if verify:
        manifest_path = manifest_path_for(path)
        if not manifest_path.exists():
            raise CorpusFormatError(f"manifest not found: {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        verify_manifest(instances, manifest)
    return instances


def verify_manifest(instances: list[CoupledInstance], manifest: dict) -> None:
    if manifest.get("count") != len(instances):
        raise CorpusFormatError(
            f"manifest count {manifest.get('count')} != {len(instances)} records"
        )
    if manifest.get("ids") != [inst.id for inst in instances]:
        raise CorpusFormatError("manifest id list does not match record order")
    checksums = manifest.get("checksums", {})
    for index, inst in enumerate(instances):
        digest = hashlib.sha256(record_bytes(instance_to_record(inst))).hexdigest()
        if checksums.get(inst.id) != digest:
            raise CorpusFormatError(f"checksum mismatch for id {inst.id!r}", index)
    recorded = manifest.get("relation_histogram")
    if recorded is not None and dict(recorded) != relation_histogram(instances):
        raise CorpusFormatError("manifest relation histogram does not match records")
