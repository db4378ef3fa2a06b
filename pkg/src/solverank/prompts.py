"""Prompt templates and their renderer.

Templates are plain text with ``{{placeholder}}`` slots.  A line consisting
of a single ``{`` opens an optional block and the next such line closes it:
when every placeholder inside the block resolves to the empty string the
whole block is dropped, together with one immediately following blank line,
so optional sections (retrieved exemplars, sample I/O) disappear cleanly.

The bundled templates are the byte-exact defaults; users may point the
renderer at their own files via configuration.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

from solverank.errors import DataError

_PLACEHOLDER_RE = re.compile(r"\{\{([a-z_]+)\}\}")
_BLOCK_DELIMITER = "{"

GENERATE_TEMPLATE = "generate"
VERIFY_TEMPLATE = "verify"
CODEGEN_TEMPLATE = "codegen"

_GENERATE_PREFIX = "You are an algorithm engineer. Given the following problem: "
_GENERATE_SENTINEL = "\n\nChange the background"


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Load a bundled template by name (without the .txt suffix)."""
    try:
        return (resources.files("solverank") / f"templates/{name}.txt").read_text("utf-8")
    except (FileNotFoundError, OSError) as exc:
        raise DataError(f"unknown prompt template {name!r}") from exc


def render(template_text: str, values: dict[str, str]) -> str:
    """Fill a template; see the module docstring for block semantics.

    Every placeholder must have an entry in ``values`` (possibly empty).
    The rendered prompt carries no trailing newline.
    """
    if template_text.endswith("\n"):
        template_text = template_text[:-1]
    lines = template_text.split("\n")
    out: list[str] = []
    block: list[str] | None = None
    skip_blank_after_dropped_block = False
    for line in lines:
        if line == _BLOCK_DELIMITER:
            if block is None:
                block = []
            else:
                names = set()
                for bl in block:
                    names.update(_PLACEHOLDER_RE.findall(bl))
                drop = bool(names) and all(_lookup(values, n) == "" for n in names)
                if drop:
                    skip_blank_after_dropped_block = True
                else:
                    out.extend(_substitute(bl, values) for bl in block)
                block = None
            continue
        if block is not None:
            block.append(line)
            continue
        if skip_blank_after_dropped_block:
            skip_blank_after_dropped_block = False
            if line == "":
                continue
        out.append(_substitute(line, values))
    if block is not None:
        raise DataError("template has an unterminated optional block")
    return "\n".join(out)


def _lookup(values: dict[str, str], name: str) -> str:
    if name not in values:
        raise DataError(f"template placeholder {name!r} has no value")
    return values[name]


def _substitute(line: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(lambda m: _lookup(values, m.group(1)), line)


def render_generate(description: str, template_text: str | None = None) -> str:
    """Prompt asking for exactly five logic-preserving restatements."""
    text = template_text if template_text is not None else load_template(GENERATE_TEMPLATE)
    return render(text, {"description": description})


def render_verify(query: str, retrieved_question: str, template_text: str | None = None) -> str:
    """Yes/No judge prompt comparing the modeling logic of two problems."""
    text = template_text if template_text is not None else load_template(VERIFY_TEMPLATE)
    return render(text, {"query": query, "retrieved_question": retrieved_question})


def render_codegen(
    description: str,
    retrieved_context: str,
    input_spec: str,
    output_spec: str,
    sample_input: str,
    sample_output: str,
    notes: str,
    lang_cluster: str,
    input_from: str = "standard input",
    output_to: str = "standard output",
    template_text: str | None = None,
) -> str:
    """Code-generation prompt; exemplar and sample blocks are optional."""
    text = template_text if template_text is not None else load_template(CODEGEN_TEMPLATE)
    return render(
        text,
        {
            "description": description,
            "retrieved_context": retrieved_context,
            "input_spec": input_spec,
            "output_spec": output_spec,
            "input": sample_input,
            "output": sample_output,
            "notes": notes,
            "lang_cluster": lang_cluster,
            "input_from": input_from,
            "output_to": output_to,
        },
    )


def extract_generate_description(prompt: str) -> str:
    """Recover the anchor statement from a rendered generation prompt.

    Used by offline mock clients; only valid for the bundled template.
    """
    if not prompt.startswith(_GENERATE_PREFIX):
        raise DataError("prompt does not match the bundled generation template")
    end = prompt.find(_GENERATE_SENTINEL)
    if end < 0:
        raise DataError("prompt does not match the bundled generation template")
    return prompt[len(_GENERATE_PREFIX) : end]
