"""Model access: prompt templates, chat backends, and response parsing."""

from .backends import (
    Backend,
    ChatRequest,
    ChatResponse,
    FixtureStep,
    HttpChatBackend,
    ScriptedBackend,
    backend_from_spec,
)
from .parsing import extract_first_json, parse_branch_response, parse_placement_response
from .templates import (
    GROUNDING_MARKER,
    PLACEHOLDERS,
    PromptTemplate,
    load_template,
    render,
    render_expand_prompt,
    render_insert_prompt,
)

__all__ = [
    "Backend",
    "ChatRequest",
    "ChatResponse",
    "FixtureStep",
    "HttpChatBackend",
    "ScriptedBackend",
    "backend_from_spec",
    "extract_first_json",
    "parse_branch_response",
    "parse_placement_response",
    "GROUNDING_MARKER",
    "PLACEHOLDERS",
    "PromptTemplate",
    "load_template",
    "render",
    "render_expand_prompt",
    "render_insert_prompt",
]
