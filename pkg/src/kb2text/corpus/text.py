"""Tokenization and slot-value collapsing.

A slot value is treated as one information unit: every occurrence of a KB
value inside a reference is replaced by a single unit token before anything
else is tokenized. Unit tokens are wrapped in angle brackets so their
unithood survives round-trips through rendered text.
"""

from __future__ import annotations

import re


UNIT_OPEN = "⟨"   # ⟨
UNIT_CLOSE = "⟩"  # ⟩

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_UNIT_RE = re.compile(re.escape(UNIT_OPEN) + r"([^" + UNIT_OPEN + UNIT_CLOSE + r"]+)" + re.escape(UNIT_CLOSE))


def unit_token(value: str) -> str:
    return f"{UNIT_OPEN}{value}{UNIT_CLOSE}"


def is_unit_token(token: str) -> bool:
    return token.startswith(UNIT_OPEN) and token.endswith(UNIT_CLOSE) and len(token) > 2


def unit_value(token: str) -> str:
    """Surface string of a unit token (identity for plain tokens)."""
    if is_unit_token(token):
        return token[1:-1]
    return token


def normalize_match(s: str) -> str:
    """Collapse-matching normal form: casefolded, whitespace squeezed."""
    return " ".join(s.split()).casefold()


def tokenize(text: str) -> list[str]:
    """Lowercase word/punctuation split. Punctuation marks come out as
    their own tokens; periods stay (they mark sentence boundaries)."""
    return _TOKEN_RE.findall(text.lower())


_TRAILING_PUNCT_RE = re.compile(r"^(.*?)([.,;:!?]*)$", re.DOTALL)


def _value_pattern(value: str) -> re.Pattern:
    core, tail = _TRAILING_PUNCT_RE.match(value).groups()
    if not core:
        core, tail = value, ""
    body = r"\s+".join(re.escape(w) for w in core.split())
    if tail:
        # a value's own trailing punctuation is optional in text, but when
        # present it belongs to the value, not to the sentence boundary
        body += r"(?:" + re.escape(tail) + r")?"
    # guards keep "Israel" from firing inside "Israeli" and "22" inside "226"
    return re.compile(r"(?<![0-9A-Za-z])" + body + r"(?![0-9A-Za-z])", re.IGNORECASE)


def segment_values(text: str, values: list[str]) -> list[tuple[str | None, str]]:
    """Split text into (matched_value, raw_segment) pieces.

    matched_value is the canonical KB value string for value segments and
    None for plain-text segments. Longer values claim their spans first, so
    "ASA Tel Aviv University" wins over "Tel Aviv". Pre-existing
    angle-bracketed units are recognized up front, which makes collapsing
    idempotent.
    """
    canon: dict[str, str] = {}
    for v in values:
        canon.setdefault(normalize_match(v), v)
    ordered = sorted(canon, key=lambda n: (-len(n), n))

    segments: list[tuple[str | None, str]] = []
    pos = 0
    for m in _UNIT_RE.finditer(text):
        if m.start() > pos:
            segments.append((None, text[pos:m.start()]))
        inner = m.group(1)
        matched = canon.get(normalize_match(inner))
        if matched is not None:
            segments.append((matched, m.group(0)))
        else:
            segments.append((None, inner))
        pos = m.end()
    if pos < len(text):
        segments.append((None, text[pos:]))

    for norm in ordered:
        pattern = _value_pattern(canon[norm])
        out: list[tuple[str | None, str]] = []
        for val, seg in segments:
            if val is not None:
                out.append((val, seg))
                continue
            last = 0
            for m in pattern.finditer(seg):
                if m.start() > last:
                    out.append((None, seg[last:m.start()]))
                out.append((canon[norm], m.group(0)))
                last = m.end()
            if last < len(seg):
                out.append((None, seg[last:]))
        segments = out
    return segments


def collapse_values(text: str, kb) -> list[str]:
    """Token sequence with every KB slot-value occurrence collapsed to a
    unit token; remaining text is lowercased and tokenized."""
    values = [t.slot_value for t in kb.triples]
    tokens: list[str] = []
    for val, seg in segment_values(text, values):
        if val is not None:
            tokens.append(unit_token(val))
        else:
            tokens.extend(tokenize(seg))
    return tokens


def render_text(tokens: list[str]) -> str:
    """Human-readable surface string: unit tokens render as their raw
    value, everything else joins with single spaces."""
    return " ".join(unit_value(t) for t in tokens)
