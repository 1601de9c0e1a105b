"""Rename rule table and its application to token streams.

Rules live in a versioned key-value text file so users can extend the
built-in table (``rules_default.txt``). Identifier renames only ever apply
to whole identifier tokens; string literals and comments are never
touched. Inside preprocessor lines, include paths are mapped and
identifier renames apply to the directive body outside any quoted or
commented region.
"""

import re
from dataclasses import dataclass
from importlib import resources

from .tokens import (
    COMMENT,
    IDENTIFIER,
    PREPROCESSOR,
    PUNCT,
    STRING,
    WHITESPACE,
    Token,
    TranslationError,
    TranslationUnit,
)

RULE_KINDS = ("rename", "prefix", "header", "namespace")
_DEFAULT_PRIORITY = {"rename": 10, "namespace": 10, "header": 10, "prefix": 20}


class RuleSyntaxError(TranslationError):
    pass


@dataclass(frozen=True)
class RewriteRule:
    kind: str
    pattern: str
    replacement: str
    priority: int

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise RuleSyntaxError(f"unknown rule kind {self.kind!r}")
        if not self.pattern or not self.replacement:
            raise RuleSyntaxError("rule pattern and replacement must be nonempty")


def parse_rules(text: str, *, default_priority: int = None, path=None) -> list:
    """Parse a rule table; '#' starts a comment, blank lines are ignored."""
    rules = []
    saw_version = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "version":
            if len(fields) != 2 or not fields[1].isdigit():
                raise RuleSyntaxError("malformed version line", path=path, line=line_no)
            saw_version = True
            continue
        if len(fields) not in (3, 4):
            raise RuleSyntaxError(
                f"expected 'kind pattern replacement [priority]', got {raw!r}", path=path, line=line_no
            )
        kind, pattern, replacement = fields[:3]
        if kind not in RULE_KINDS:
            raise RuleSyntaxError(f"unknown rule kind {kind!r}", path=path, line=line_no)
        if len(fields) == 4:
            try:
                priority = int(fields[3])
            except ValueError:
                raise RuleSyntaxError(f"priority must be an integer, got {fields[3]!r}",
                                      path=path, line=line_no) from None
        elif default_priority is not None:
            priority = default_priority
        else:
            priority = _DEFAULT_PRIORITY[kind]
        rules.append(RewriteRule(kind, pattern, replacement, priority))
    if not saw_version:
        raise RuleSyntaxError("rule table must start with a 'version N' line", path=path)
    return rules


def builtin_rules() -> list:
    text = resources.files(__package__).joinpath("rules_default.txt").read_text()
    return parse_rules(text)


def _order(rules):
    return sorted(rules, key=lambda r: (r.priority, -len(r.pattern), r.kind, r.pattern))


def _skip_back(tokens, idx):
    while idx >= 0 and tokens[idx].kind in (WHITESPACE, COMMENT):
        idx -= 1
    return idx if idx >= 0 else None


def _skip_fwd(tokens, idx):
    while idx < len(tokens) and tokens[idx].kind in (WHITESPACE, COMMENT):
        idx += 1
    return idx if idx < len(tokens) else None


def _in_namespace_position(tokens, idx) -> bool:
    nxt = _skip_fwd(tokens, idx + 1)
    if (
        nxt is not None
        and nxt + 1 < len(tokens)
        and tokens[nxt].kind == PUNCT == tokens[nxt + 1].kind
        and tokens[nxt].text == ":" == tokens[nxt + 1].text
    ):
        return True
    prv = _skip_back(tokens, idx - 1)
    if prv is not None:
        if (
            prv >= 1
            and tokens[prv].kind == PUNCT == tokens[prv - 1].kind
            and tokens[prv].text == ":" == tokens[prv - 1].text
        ):
            return True
        if tokens[prv].kind == IDENTIFIER and tokens[prv].text == "namespace":
            return True
    return False


def _rename_identifier(word, rules, namespace_ok):
    for rule in rules:
        if rule.kind == "rename" and word == rule.pattern:
            return rule.replacement
        if rule.kind == "namespace" and namespace_ok and word == rule.pattern:
            return rule.replacement
        if rule.kind == "prefix" and len(word) > len(rule.pattern) and word.startswith(rule.pattern):
            return rule.replacement + word[len(rule.pattern):]
    return word


_INCLUDE_RE = re.compile(r'^(?P<head>\s*#\s*include\s*)(?P<open>[<"])(?P<path>[^<">]+)(?P<close>[>"])')
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INCLUDE_EXT_MAP = {".cu": ".hip.cpp", ".cuh": ".hip.hpp"}


def _map_internal_include(path: str):
    """Mirror the tree-level path mapping for project-internal includes:
    swap cuda/ segments for hip/ and map the .cu/.cuh extensions. Returns
    None when the include does not point into a cuda/ tree."""
    segments = path.split("/")
    if "cuda" not in segments[:-1]:
        return None
    segments = ["hip" if s == "cuda" else s for s in segments]
    for ext, mapped in _INCLUDE_EXT_MAP.items():
        if segments[-1].endswith(ext):
            segments[-1] = segments[-1][: -len(ext)] + mapped
            break
    return "/".join(segments)


def _split_directive(text):
    """Segment a directive body into (is_code, text) pieces so quoted and
    commented spans stay untouched."""
    pieces = []
    i = 0
    n = len(text)
    code_start = 0
    while i < n:
        ch = text[i]
        if ch in "\"'":
            quote = ch
            if code_start < i:
                pieces.append((True, text[code_start:i]))
            j = i + 1
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    j += 2
                    continue
                if text[j] == quote:
                    j += 1
                    break
                j += 1
            pieces.append((False, text[i:j]))
            i = j
            code_start = i
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            if code_start < i:
                pieces.append((True, text[code_start:i]))
            pieces.append((False, text[i:]))
            return pieces
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            if code_start < i:
                pieces.append((True, text[code_start:i]))
            j = text.find("*/", i + 2)
            j = n if j < 0 else j + 2
            pieces.append((False, text[i:j]))
            i = j
            code_start = i
            continue
        i += 1
    if code_start < n:
        pieces.append((True, text[code_start:]))
    return pieces


def _apply_directive(text, header_map, ident_rules, counter):
    match = _INCLUDE_RE.match(text)
    if match:
        include_path = match.group("path").strip()
        mapped = header_map.get(include_path)
        if mapped is not None:
            counter[0] += 1
            # HIP system headers conventionally use angle brackets.
            return f"{match.group('head')}<{mapped}>" + text[match.end():]
        internal = _map_internal_include(include_path)
        if internal is not None:
            counter[0] += 1
            quote_open = match.group("open")
            quote_close = match.group("close")
            return f"{match.group('head')}{quote_open}{internal}{quote_close}" + text[match.end():]
        return text
    out = []
    for is_code, piece in _split_directive(text):
        if not is_code:
            out.append(piece)
            continue

        def sub(m):
            new = _rename_identifier(m.group(), ident_rules, False)
            if new != m.group():
                counter[0] += 1
            return new

        out.append(_WORD_RE.sub(sub, piece))
    return "".join(out)


def apply_rename_rules(tu: TranslationUnit, rules) -> tuple:
    """Apply whole-identifier, header, and namespace renames.

    Returns ``(new_unit, rename_count)``; unknown identifiers pass through.
    """
    ordered = _order(rules)
    ident_rules = [r for r in ordered if r.kind in ("rename", "prefix", "namespace")]
    header_map = {r.pattern: r.replacement for r in ordered if r.kind == "header"}
    tokens = tu.tokens
    out = []
    renames = 0
    for idx, tok in enumerate(tokens):
        if tok.kind == IDENTIFIER:
            new = _rename_identifier(tok.text, ident_rules, _in_namespace_position(tokens, idx))
            if new != tok.text:
                renames += 1
                out.append(Token(IDENTIFIER, new, tok.start))
            else:
                out.append(tok)
        elif tok.kind == PREPROCESSOR:
            counter = [0]
            new = _apply_directive(tok.text, header_map, ident_rules, counter)
            renames += counter[0]
            out.append(tok if new == tok.text else Token(PREPROCESSOR, new, tok.start))
        else:
            out.append(tok)
    return TranslationUnit(tu.path, out), renames
