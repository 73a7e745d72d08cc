"""Graph construction from captions and a knowledge-graph endpoint."""

from .prompts import PromptLibrary, load_prompts, render_caption_prompt, render_scene_prompt
from .clients import (
    EmptyResponseError,
    KGClient,
    LLMClient,
    ReplayCache,
    ServiceUnavailableError,
    request_key,
)
from .pipeline import (
    DUPLICATE,
    EMPTY_FIELD,
    MALFORMED,
    UNKNOWN_RELATION,
    AllLinesRejectedError,
    BuildReport,
    LinkResult,
    ParseResult,
    build_instance,
    extract_mentions,
    extract_scene_triples,
    link_concepts,
    parse_triple_lines,
)

__all__ = [
    "PromptLibrary",
    "load_prompts",
    "render_caption_prompt",
    "render_scene_prompt",
    "ReplayCache",
    "LLMClient",
    "KGClient",
    "ServiceUnavailableError",
    "EmptyResponseError",
    "request_key",
    "MALFORMED",
    "UNKNOWN_RELATION",
    "EMPTY_FIELD",
    "DUPLICATE",
    "ParseResult",
    "LinkResult",
    "BuildReport",
    "parse_triple_lines",
    "extract_mentions",
    "extract_scene_triples",
    "link_concepts",
    "build_instance",
    "AllLinesRejectedError",
]
