"""Prompt templates for the caption and scene-extraction calls."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..graphs import DEFAULT_VOCABULARY, RelationVocabulary

DEFAULT_CAPTION_PROMPT = """\
Look at the picture referenced as {image} and write one factual sentence
describing what is in it: the main objects, where they are, and what they
are doing. Mention colors and materials when they are clear. Do not guess
about anything you cannot see.
"""

DEFAULT_SCENE_PROMPT = """\
Below is a description of a picture and the objects mentioned in it.
Rewrite the description as a list of triples, one per line, each formatted
exactly as (head, relation, tail). The relation must be one of:
{relations}.
Use only the mentioned objects as heads. Skip anything that does not fit.

Description: {caption}
Objects: {mentions}
Triples:
"""


@dataclass(frozen=True)
class PromptLibrary:
    caption: str = DEFAULT_CAPTION_PROMPT
    scene: str = DEFAULT_SCENE_PROMPT

    def __post_init__(self):
        if "{image}" not in self.caption:
            raise ValueError("caption template must contain the {image} placeholder")
        for placeholder in ("{caption}", "{mentions}", "{relations}"):
            if placeholder not in self.scene:
                raise ValueError(f"scene template must contain the {placeholder} placeholder")


def load_prompts(directory: str | Path) -> PromptLibrary:
    """Read ``caption.txt``/``scene.txt`` overrides; missing files keep defaults."""
    directory = Path(directory)
    caption_path = directory / "caption.txt"
    scene_path = directory / "scene.txt"
    return PromptLibrary(
        caption=caption_path.read_text(encoding="utf-8") if caption_path.exists() else DEFAULT_CAPTION_PROMPT,
        scene=scene_path.read_text(encoding="utf-8") if scene_path.exists() else DEFAULT_SCENE_PROMPT,
    )


def render_caption_prompt(library: PromptLibrary, image: str) -> str:
    return library.caption.format(image=image)


def render_scene_prompt(
    library: PromptLibrary,
    caption: str,
    mentions: Sequence[str],
    vocabulary: RelationVocabulary = DEFAULT_VOCABULARY,
) -> str:
    return library.scene.format(
        caption=caption,
        mentions=", ".join(mentions),
        relations=", ".join(vocabulary.names),
    )
