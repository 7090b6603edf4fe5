"""Prompt templates as editable text assets.

Templates are plain text files with ``{placeholder}`` markers. Only the
known placeholder names are substituted; any other braced text (JSON
examples, for instance) is left alone, so template files never need
escaping. Rendering is pure substitution: no hidden instructions are
added around the template text.
"""

from __future__ import annotations

import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..canonical import branch_to_json
from ..errors import TemplateError
from ..labels import clean_label
from ..tree import TypeNode, TypePath

PLACEHOLDERS = frozenset({"subtree_json", "target_path", "new_type", "grounding", "instructions"})

GROUNDING_MARKER = "GROUNDING:"

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str

    def placeholders(self) -> frozenset[str]:
        """The known placeholder names this template references."""
        return frozenset(m for m in _PLACEHOLDER_RE.findall(self.text) if m in PLACEHOLDERS)


def load_template(name: str, directory: str | Path | None = None) -> PromptTemplate:
    """Load a template by name, preferring ``directory`` over the packaged defaults."""
    if directory is not None:
        candidate = Path(directory) / f"{name}.txt"
        if candidate.exists():
            return PromptTemplate(name=name, text=candidate.read_text(encoding="utf-8"))
    try:
        packaged = resources.files(__package__).joinpath("templates", f"{name}.txt")
        return PromptTemplate(name=name, text=packaged.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise TemplateError(f"no template named {name!r}") from exc


def render(template: PromptTemplate, context: Mapping[str, str]) -> str:
    """Substitute known placeholders from ``context`` in a single pass.

    Substituted values are inserted verbatim, never rescanned. A known
    placeholder the template references but the context lacks is an error.
    """
    missing = template.placeholders() - set(context)
    if missing:
        raise TemplateError(
            f"template {template.name!r} references missing placeholders: {sorted(missing)}"
        )

    def substitute(match: re.Match[str]) -> str:
        name = match.group(1)
        if name in PLACEHOLDERS:
            return str(context[name])
        return match.group(0)

    return _PLACEHOLDER_RE.sub(substitute, template.text)


def render_grounding(grounding: Sequence[tuple[str, str]] | None) -> str:
    """Format grounding documents after the marker line, empty when absent."""
    if not grounding:
        return ""
    parts = [GROUNDING_MARKER]
    for name, text in grounding:
        parts.append(f"--- {name} ---")
        parts.append(text)
    return "\n".join(parts) + "\n"


def render_expand_prompt(
    subtree: TypeNode,
    target_path: TypePath,
    instructions: str = "",
    grounding: Sequence[tuple[str, str]] | None = None,
    template: PromptTemplate | None = None,
) -> str:
    """The prompt asking for a wholesale rewrite of one branch."""
    if template is None:
        template = load_template("expand")
    return render(
        template,
        {
            "subtree_json": branch_to_json(subtree),
            "target_path": str(target_path),
            "instructions": instructions,
            "grounding": render_grounding(grounding),
        },
    )


def render_insert_prompt(
    context: TypeNode,
    new_type: str,
    instructions: str = "",
    grounding: Sequence[tuple[str, str]] | None = None,
    template: PromptTemplate | None = None,
) -> str:
    """The prompt asking where a single new type belongs."""
    new_type = clean_label(new_type)
    if template is None:
        template = load_template("insert")
    return render(
        template,
        {
            "subtree_json": branch_to_json(context),
            "new_type": new_type,
            "instructions": instructions,
            "grounding": render_grounding(grounding),
        },
    )
