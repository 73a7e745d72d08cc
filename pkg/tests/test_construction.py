"""Construction pipeline: prompts, cached clients, parsing, graph building."""

import json

import pytest

from twingraph.construction import (
    DUPLICATE,
    EMPTY_FIELD,
    MALFORMED,
    UNKNOWN_RELATION,
    AllLinesRejectedError,
    EmptyResponseError,
    KGClient,
    LLMClient,
    PromptLibrary,
    ReplayCache,
    ServiceUnavailableError,
    build_instance,
    extract_mentions,
    extract_scene_triples,
    link_concepts,
    load_prompts,
    parse_triple_lines,
    render_scene_prompt,
    request_key,
)
from twingraph.corpus import record_bytes, instance_to_record
from twingraph.graphs import DEFAULT_VOCABULARY, Triple

CAPTION = "A woman stands in front of a red car on the street."

SCENE_REPLY = """\
(woman, in_front_of, car)
(car, has_color, red)
(car, at_location, street)
(woman, flying_over, car)
not a triple
(woman, in_front_of, car)
"""

KG_DATA = {
    "car": [["car", "is_a", "vehicle"], ["car", "used_for", "driving"]],
    "woman": [["woman", "is_a", "person"]],
}

RECORD = {
    "id": "q-001",
    "question": "what kind of thing is the car?",
    "answers": [["vehicle", 1.0]],
    "topic_entities": ["car"],
    "caption": CAPTION,
}


def make_llm(cache=None, mode="auto", calls=None):
    def transport(url, payload):
        if calls is not None:
            calls.append(payload)
        if payload["prompt"].startswith("Look at the picture"):
            return {"text": CAPTION}
        return {"text": SCENE_REPLY}

    return LLMClient("http://llm.test/v1", "capgen-base", cache, mode, transport)


def make_kg(cache=None, mode="auto", calls=None, data=KG_DATA):
    def transport(url, payload):
        if calls is not None:
            calls.append(payload)
        return {"triples": data.get(payload["entity"], [])}

    return KGClient("http://kg.test/v1", cache, mode, transport)


class TestPrompts:
    def test_templates_require_their_placeholders(self):
        with pytest.raises(ValueError):
            PromptLibrary(caption="describe it")
        with pytest.raises(ValueError):
            PromptLibrary(scene="turn {caption} into triples for {mentions}")

    def test_scene_prompt_lists_the_vocabulary(self):
        text = render_scene_prompt(PromptLibrary(), CAPTION, ("woman", "car"))
        assert CAPTION in text
        assert "woman, car" in text
        for name in DEFAULT_VOCABULARY.names:
            assert name in text

    def test_load_prompts_overrides(self, tmp_path):
        (tmp_path / "caption.txt").write_text("say what {image} shows\n", encoding="utf-8")
        library = load_prompts(tmp_path)
        assert library.caption.startswith("say what")
        assert "{caption}" in library.scene


class TestReplayCache:
    def test_request_key_ignores_key_order(self):
        a = {"kind": "kg", "payload": {"entity": "car"}}
        b = {"payload": {"entity": "car"}, "kind": "kg"}
        assert request_key(a) == request_key(b)
        assert request_key(a) != request_key({"kind": "kg", "payload": {"entity": "cat"}})

    def test_put_get_atomic(self, tmp_path):
        cache = ReplayCache(tmp_path / "cache")
        key = request_key({"x": 1})
        assert cache.get(key) is None
        cache.put(key, {"x": 1}, {"text": "hi"})
        assert cache.get(key) == {"text": "hi"}
        assert len(cache) == 1
        assert not list((tmp_path / "cache").glob("*.tmp"))
        stored = json.loads((tmp_path / "cache" / f"{key}.json").read_text())
        assert stored == {"request": {"x": 1}, "response": {"text": "hi"}}


class TestClients:
    def test_auto_mode_caches(self, tmp_path):
        calls = []
        llm = make_llm(ReplayCache(tmp_path), "auto", calls)
        first = llm.complete("Triples: please")
        second = llm.complete("Triples: please")
        assert first == second == SCENE_REPLY
        assert len(calls) == 1

    def test_record_mode_always_refreshes(self, tmp_path):
        cache = ReplayCache(tmp_path)
        calls = []
        llm = make_llm(cache, "record", calls)
        llm.complete("Triples: please")
        llm.complete("Triples: please")
        assert len(calls) == 2

    def test_replay_mode_never_calls_out(self, tmp_path):
        cache = ReplayCache(tmp_path)
        make_llm(cache, "record").complete("Triples: please")

        def exploding(url, payload):
            raise AssertionError("replay mode must not touch the network")

        offline = LLMClient("http://llm.test/v1", "capgen-base", cache, "replay", exploding)
        assert offline.complete("Triples: please") == SCENE_REPLY
        with pytest.raises(ServiceUnavailableError):
            offline.complete("something never recorded")

    def test_replay_requires_a_cache(self):
        with pytest.raises(ValueError):
            make_llm(None, "replay")
        with pytest.raises(ValueError):
            make_llm(None, "dryrun")

    def test_transport_failure_wrapped(self):
        def broken(url, payload):
            raise ConnectionError("no route")

        llm = LLMClient("http://llm.test/v1", "capgen-base", None, "auto", broken)
        with pytest.raises(ServiceUnavailableError):
            llm.complete("anything")

    def test_empty_completion_rejected(self):
        llm = LLMClient("http://llm.test/v1", "capgen-base", None, "auto", lambda u, p: {"text": "  "})
        with pytest.raises(EmptyResponseError):
            llm.complete("anything")

    def test_kg_response_validation(self):
        bad_shape = KGClient("http://kg.test/v1", None, "auto", lambda u, p: {"triples": [["a", "b"]]})
        with pytest.raises(EmptyResponseError):
            bad_shape.neighbors("car")
        missing = KGClient("http://kg.test/v1", None, "auto", lambda u, p: {})
        with pytest.raises(EmptyResponseError):
            missing.neighbors("car")
        ok = make_kg()
        assert ok.neighbors("car") == [("car", "is_a", "vehicle"), ("car", "used_for", "driving")]


class TestMentions:
    def test_content_words_in_first_seen_order(self):
        assert extract_mentions(CAPTION) == ("woman", "stands", "red", "car", "street")

    def test_dedupes_and_caps(self):
        caption = "dog dog cat bird fish dog"
        assert extract_mentions(caption, max_mentions=3) == ("dog", "cat", "bird")


class TestParseTripleLines:
    def test_accepts_canonical_line(self):
        result = parse_triple_lines("(woman, in_front_of, car)", ("woman", "car"))
        assert result.triples == [Triple("woman", "in_front_of", "car")]
        assert result.rejected == [] and result.warnings == []

    def test_normalizes_case_and_spacing(self):
        result = parse_triple_lines("( Woman ,  IN_FRONT_OF , Car )", ("woman", "car"))
        assert result.triples == [Triple("woman", "in_front_of", "car")]

    def test_rejection_reasons(self):
        result = parse_triple_lines(SCENE_REPLY, ("woman", "car", "street", "red"))
        assert [t.as_tuple() for t in result.triples] == [
            ("woman", "in_front_of", "car"),
            ("car", "has_color", "red"),
            ("car", "at_location", "street"),
        ]
        assert result.rejected == [
            ("(woman, flying_over, car)", UNKNOWN_RELATION),
            ("not a triple", MALFORMED),
            ("(woman, in_front_of, car)", DUPLICATE),
        ]

    def test_empty_field_rejected(self):
        result = parse_triple_lines("( , holds, cup)", ("cup",))
        assert result.rejected == [("( , holds, cup)", EMPTY_FIELD)]

    def test_unmentioned_head_is_only_a_warning(self):
        result = parse_triple_lines("(dog, next_to, car)", ("car",))
        assert len(result.triples) == 1
        assert result.warnings == ["head 'dog' is not a mentioned object"]

    def test_all_rejected_raises_downstream(self):
        llm = LLMClient("http://llm.test/v1", "m", None, "auto", lambda u, p: {"text": "gibberish"})
        with pytest.raises(AllLinesRejectedError):
            extract_scene_triples(llm, CAPTION, ("woman",))


class TestLinkConcepts:
    def test_one_hop_from_seeds(self):
        result = link_concepts(make_kg(), ["car", "plane"])
        triples = {t.as_tuple() for t in result.graph.triples}
        assert triples == {("car", "is_a", "vehicle"), ("car", "used_for", "driving")}
        assert result.graph.entities == frozenset({"car", "vehicle", "driving"})
        assert result.graph.provenance == ("kg", "kg")
        assert result.warnings == ["no concept facts for seed 'plane'"]

    def test_second_hop_expands_frontier(self):
        data = dict(KG_DATA, vehicle=[["vehicle", "is_a", "machine"]])
        one = link_concepts(make_kg(data=data), ["car"], hop_limit=1)
        two = link_concepts(make_kg(data=data), ["car"], hop_limit=2)
        assert "machine" not in one.graph.entities
        assert "machine" in two.graph.entities

    def test_duplicate_facts_collapse(self):
        data = {"car": KG_DATA["car"], "auto": KG_DATA["car"]}
        result = link_concepts(make_kg(data=data), ["car", "auto"])
        assert len(result.graph.triples) == 2

    def test_hop_limit_validated(self):
        with pytest.raises(ValueError):
            link_concepts(make_kg(), ["car"], hop_limit=0)


class TestBuildInstance:
    def test_builds_a_valid_instance_from_a_caption(self):
        report = build_instance(make_llm(), make_kg(), RECORD)
        inst = report.instance
        assert inst.id == "q-001"
        assert inst.scene.mentions == ("woman", "stands", "red", "car", "street")
        assert Triple("woman", "in_front_of", "car") in inst.scene.triples
        assert "vehicle" in inst.concept.entities
        assert inst.gold_answers == (("vehicle", 1.0),)
        assert report.violations == []
        assert ("(woman, flying_over, car)", UNKNOWN_RELATION) in report.rejected
        assert any("no concept facts" in w for w in report.warnings)

    def test_caption_generated_from_image_when_missing(self):
        calls = []
        record = dict(RECORD)
        del record["caption"]
        record["image"] = "img-001.jpg"
        report = build_instance(make_llm(calls=calls), make_kg(), record)
        assert report.instance.scene.mentions[0] == "woman"
        assert any("img-001.jpg" in c["prompt"] for c in calls)

    def test_missing_gold_shows_up_as_violation(self):
        record = dict(RECORD, answers=[["hovercraft", 1.0]])
        report = build_instance(make_llm(), make_kg(), record)
        assert any(v.code == "GOLD_NOT_CANDIDATE" for v in report.violations)

    def test_record_then_replay_is_byte_identical(self, tmp_path):
        cache = ReplayCache(tmp_path / "cache")
        recorded = build_instance(make_llm(cache, "record"), make_kg(cache, "record"), RECORD)

        def exploding(url, payload):
            raise AssertionError("replay mode must not touch the network")

        offline_llm = LLMClient("http://llm.test/v1", "capgen-base", cache, "replay", exploding)
        offline_kg = KGClient("http://kg.test/v1", cache, "replay", exploding)
        replayed = build_instance(offline_llm, offline_kg, RECORD)
        assert record_bytes(instance_to_record(replayed.instance)) == record_bytes(
            instance_to_record(recorded.instance)
        )
