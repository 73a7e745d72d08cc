"""Caption-to-graphs pipeline: mentions, scene triples, concept linking."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from ..graphs import (
    DEFAULT_VOCABULARY,
    ConceptGraph,
    CoupledInstance,
    RelationVocabulary,
    SceneGraph,
    Triple,
    normalize_entity,
    validate,
)
from .clients import KGClient, LLMClient
from .prompts import PromptLibrary, render_caption_prompt, render_scene_prompt

# Rejection reasons for scene triple lines.
MALFORMED = "MALFORMED"
UNKNOWN_RELATION = "UNKNOWN_RELATION"
EMPTY_FIELD = "EMPTY_FIELD"
DUPLICATE = "DUPLICATE"

_TRIPLE_LINE = re.compile(r"^\s*\(([^,()]+),([^,()]+),([^,()]+)\)\s*$")

# Small closed-class list; enough to drop glue words from captions.
STOPWORDS = frozenset(
    """a an the and or but of in on at to from with by for as is are was were
    be been being it its this that these those there here he she they them we
    you i his her their our your my some any no not very while who which what
    over under into onto near next front behind above below between""".split()
)


class AllLinesRejectedError(ValueError):
    """No line of the model output parsed into an in-vocabulary triple."""


def extract_mentions(caption: str, max_mentions: int = 12) -> tuple[str, ...]:
    """Deterministic mention extraction: content words, first-seen order."""
    words = re.findall(r"[a-zA-Z][a-zA-Z'-]*", caption.lower())
    seen: set[str] = set()
    out: list[str] = []
    for word in words:
        if word in STOPWORDS or len(word) < 2:
            continue
        if word not in seen:
            seen.add(word)
            out.append(word)
        if len(out) == max_mentions:
            break
    return tuple(out)


@dataclass
class ParseResult:
    """Outcome of parsing one block of triple lines."""

    triples: list[Triple] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def parse_triple_lines(
    text: str,
    mentions: Sequence[str],
    vocabulary: RelationVocabulary = DEFAULT_VOCABULARY,
) -> ParseResult:
    """Parse ``(head, relation, tail)`` lines, one triple per line.

    Off-vocabulary relations and duplicates are rejected with a reason; a
    head outside the mention list is only warned about, since models often
    introduce scenery objects that are still worth keeping.
    """
    result = ParseResult()
    mention_set = set(mentions)
    seen: set[tuple[str, str, str]] = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        match = _TRIPLE_LINE.match(line)
        if match is None:
            result.rejected.append((line, MALFORMED))
            continue
        head = normalize_entity(match.group(1))
        relation = match.group(2).strip().lower()
        tail = normalize_entity(match.group(3))
        if not head or not tail or not relation:
            result.rejected.append((line, EMPTY_FIELD))
            continue
        if relation not in vocabulary:
            result.rejected.append((line, UNKNOWN_RELATION))
            continue
        key = (head, relation, tail)
        if key in seen:
            result.rejected.append((line, DUPLICATE))
            continue
        seen.add(key)
        if head not in mention_set:
            result.warnings.append(f"head {head!r} is not a mentioned object")
        result.triples.append(Triple(head, relation, tail))
    return result


def generate_caption(llm: LLMClient, image: str, prompts: PromptLibrary = PromptLibrary()) -> str:
    return llm.complete(render_caption_prompt(prompts, image)).strip()


def extract_scene_triples(
    llm: LLMClient,
    caption: str,
    mentions: Sequence[str],
    prompts: PromptLibrary = PromptLibrary(),
    vocabulary: RelationVocabulary = DEFAULT_VOCABULARY,
) -> ParseResult:
    """Ask the model for scene triples and parse its reply."""
    reply = llm.complete(render_scene_prompt(prompts, caption, mentions, vocabulary))
    result = parse_triple_lines(reply, mentions, vocabulary)
    if not result.triples:
        raise AllLinesRejectedError(
            f"all {len(result.rejected)} lines rejected; first: {result.rejected[:3]}"
        )
    return result


@dataclass
class LinkResult:
    graph: ConceptGraph
    warnings: list[str] = field(default_factory=list)


def link_concepts(kg: KGClient, seeds: Sequence[str], hop_limit: int = 1) -> LinkResult:
    """Breadth-first expansion of ``seeds`` through the knowledge graph.

    Entities come from accepted triples only, so a seed with no facts ends
    up outside the graph (with a warning) instead of dangling isolated.
    """
    if hop_limit < 1:
        raise ValueError("hop_limit must be at least 1")
    warnings: list[str] = []
    triples: list[Triple] = []
    seen_triples: set[tuple[str, str, str]] = set()
    visited: set[str] = set()
    frontier = list(dict.fromkeys(normalize_entity(s) for s in seeds))
    for hop in range(hop_limit):
        next_frontier: list[str] = []
        for entity in frontier:
            if entity in visited:
                continue
            visited.add(entity)
            found = kg.neighbors(entity)
            if not found and hop == 0:
                warnings.append(f"no concept facts for seed {entity!r}")
            for h, r, t in found:
                h, t = normalize_entity(h), normalize_entity(t)
                r = r.strip().lower()
                if not h or not r or not t:
                    continue
                key = (h, r, t)
                if key in seen_triples:
                    continue
                seen_triples.add(key)
                triples.append(Triple(h, r, t))
                for endpoint in (h, t):
                    if endpoint not in visited:
                        next_frontier.append(endpoint)
        frontier = list(dict.fromkeys(next_frontier))
    entities = frozenset(e for t in triples for e in (t.head, t.tail))
    graph = ConceptGraph(
        entities=entities,
        triples=tuple(triples),
        provenance=tuple("kg" for _ in triples),
    )
    return LinkResult(graph=graph, warnings=warnings)


@dataclass
class BuildReport:
    instance: CoupledInstance
    rejected: list[tuple[str, str]]
    warnings: list[str]
    violations: list


def build_instance(
    llm: LLMClient,
    kg: KGClient,
    record: dict,
    prompts: PromptLibrary = PromptLibrary(),
    vocabulary: RelationVocabulary = DEFAULT_VOCABULARY,
    hop_limit: int = 1,
) -> BuildReport:
    """Construct one coupled instance from a raw task record.

    ``record`` needs ``id``, ``question``, ``answers`` ([[text, weight]])
    and either ``caption`` or ``image``; ``topic_entities`` is optional and
    joins the mentions as concept-graph seeds.
    """
    caption = record.get("caption") or generate_caption(llm, record["image"], prompts)
    mentions = extract_mentions(caption)
    parsed = extract_scene_triples(llm, caption, mentions, prompts, vocabulary)
    entities = set(mentions)
    for t in parsed.triples:
        entities.update((t.head, t.tail))
    scene = SceneGraph(entities=frozenset(entities), triples=tuple(parsed.triples), mentions=mentions)

    topic = tuple(normalize_entity(t) for t in record.get("topic_entities", ()))
    linked = link_concepts(kg, list(mentions) + list(topic), hop_limit)

    instance = CoupledInstance(
        id=str(record["id"]),
        scene=scene,
        concept=linked.graph,
        question=str(record["question"]),
        topic_entities=topic,
        gold_answers=tuple((normalize_entity(a), float(w)) for a, w in record["answers"]),
    )
    return BuildReport(
        instance=instance,
        rejected=parsed.rejected,
        warnings=parsed.warnings + linked.warnings,
        violations=validate(instance, vocabulary),
    )
