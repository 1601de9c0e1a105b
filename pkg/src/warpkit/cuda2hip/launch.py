"""Kernel launch syntax rewriting.

Turns ``kernel<<<grid, block[, shmem[, stream]]>>>(args)`` into
``hipLaunchKernelGGL(kernel, grid, block, shmem|0, stream|0, args)``.
Template kernels are wrapped in ``HIP_KERNEL_NAME(...)``; a qualified name
stays attached to the kernel argument, never to the wrapper, which is the
namespace behavior stock hipify scripts get wrong.

The ``<<<`` trigram is recognized only as three byte-adjacent ``<`` tokens
following an identifier or template path. A trigram that does not complete
into a well-formed launch (no matching ``>>>``, config arity outside 2-4,
or no argument list) raises :class:`MalformedLaunch` instead of being
rewritten silently.
"""

from dataclasses import dataclass

from .tokens import (
    COMMENT,
    IDENTIFIER,
    LITERAL,
    PUNCT,
    WHITESPACE,
    MalformedLaunch,
    Token,
    TranslationUnit,
    line_of_offset,
)

_SKIP = (WHITESPACE, COMMENT)


@dataclass(frozen=True)
class LaunchSite:
    """One rewritten launch: kernel path, config expressions, argument text."""

    kernel_path: str
    templated: bool
    config: tuple
    args: str
    span: tuple
    line: int


def _is_punct(tok, ch):
    return tok.kind == PUNCT and tok.text == ch


def _adjacent_run(tokens, idx, ch):
    """Length of the byte-adjacent run of punctuation ``ch`` starting at idx."""
    run = 0
    pos = idx
    while pos < len(tokens) and _is_punct(tokens[pos], ch):
        if run and (tokens[pos].start < 0 or tokens[pos].start != tokens[pos - 1].start + 1):
            break
        run += 1
        pos += 1
    return run


def _skip_back(tokens, idx):
    while idx >= 0 and tokens[idx].kind in _SKIP:
        idx -= 1
    return idx


def _skip_fwd(tokens, idx):
    while idx < len(tokens) and tokens[idx].kind in _SKIP:
        idx += 1
    return idx


def _trim(tokens, lo, hi):
    """Shrink [lo, hi) to exclude boundary whitespace/comments."""
    while lo < hi and tokens[lo].kind in _SKIP:
        lo += 1
    while hi > lo and tokens[hi - 1].kind in _SKIP:
        hi -= 1
    return lo, hi


def _find_kernel_path(tokens, idx, fail):
    """Walk backwards from the ``<<<`` at ``idx`` to the start of the kernel
    path; returns (path_start, path_end_inclusive, templated)."""
    j = _skip_back(tokens, idx - 1)
    if j < 0:
        fail("'<<<' has no kernel expression before it")
    templated = False
    if _is_punct(tokens[j], ">"):
        templated = True
        depth = 1
        j -= 1
        while j >= 0 and depth:
            if _is_punct(tokens[j], ">"):
                depth += 1
            elif _is_punct(tokens[j], "<"):
                depth -= 1
            j -= 1
        if depth:
            fail("unbalanced template argument list before '<<<'")
        j = _skip_back(tokens, j)
    if j < 0 or tokens[j].kind != IDENTIFIER:
        fail("'<<<' does not follow an identifier or template path")
    path_end = _skip_back(tokens, idx - 1)
    path_start = j
    while True:
        k = _skip_back(tokens, path_start - 1)
        if k >= 1 and _is_punct(tokens[k], ":") and _is_punct(tokens[k - 1], ":"):
            k2 = _skip_back(tokens, k - 2)
            if k2 >= 0 and tokens[k2].kind == IDENTIFIER:
                path_start = k2
                continue
            path_start = k - 1  # global-scope qualifier
        break
    return path_start, path_end, templated


def _parse_config(tokens, idx, fail):
    """Parse config expressions after the ``<<<``; returns (spans, closer)."""
    k = idx + 3
    depth = 0
    spans = []
    cur = k
    while k < len(tokens):
        tok = tokens[k]
        if tok.kind == PUNCT:
            if tok.text in "([{":
                depth += 1
            elif tok.text in ")]}":
                depth -= 1
                if depth < 0:
                    fail("unbalanced brackets in launch configuration")
            elif depth == 0 and tok.text == ",":
                spans.append((cur, k))
                cur = k + 1
                k += 1
                continue
            elif depth == 0 and tok.text == ">":
                run = _adjacent_run(tokens, k, ">")
                if run == 3:
                    spans.append((cur, k))
                    return spans, k
                k += run
                continue
        k += 1
    fail("missing '>>>' for launch configuration")


def rewrite_launch_sites(tu: TranslationUnit, source_text: str = None) -> tuple:
    """Rewrite every launch in the unit; returns (new_unit, [LaunchSite...])."""
    tokens = tu.tokens
    text = tu.text() if source_text is None else source_text
    out = []
    sites = []
    cursor = 0
    idx = 0
    n = len(tokens)
    while idx < n:
        if not _is_punct(tokens[idx], "<") or _adjacent_run(tokens, idx, "<") != 3:
            idx += 1
            continue

        def fail(message, _idx=idx):
            offset = tokens[_idx].start
            raise MalformedLaunch(message, path=tu.path, line=line_of_offset(text, offset))

        path_start, path_end, templated = _find_kernel_path(tokens, idx, fail)
        spans, closer = _parse_config(tokens, idx, fail)
        config = []
        for lo, hi in spans:
            lo, hi = _trim(tokens, lo, hi)
            if lo == hi:
                fail("empty launch configuration expression")
            config.append((lo, hi))
        if not 2 <= len(config) <= 4:
            fail(f"launch configuration takes 2 to 4 expressions, got {len(config)}")
        open_paren = _skip_fwd(tokens, closer + 3)
        if open_paren >= n or not _is_punct(tokens[open_paren], "("):
            fail("launch is not followed by an argument list")
        depth = 0
        close_paren = None
        for k in range(open_paren, n):
            if _is_punct(tokens[k], "("):
                depth += 1
            elif _is_punct(tokens[k], ")"):
                depth -= 1
                if depth == 0:
                    close_paren = k
                    break
        if close_paren is None:
            fail("unterminated launch argument list")

        kernel_tokens = tokens[path_start : path_end + 1]
        arg_tokens = tokens[open_paren + 1 : close_paren]
        has_args = any(t.kind not in _SKIP for t in arg_tokens)

        out.extend(tokens[cursor:path_start])
        new = [Token(IDENTIFIER, "hipLaunchKernelGGL", -1), Token(PUNCT, "(", -1)]
        if templated:
            new += [Token(IDENTIFIER, "HIP_KERNEL_NAME", -1), Token(PUNCT, "(", -1)]
            new += kernel_tokens
            new += [Token(PUNCT, ")", -1)]
        else:
            new += kernel_tokens
        config_texts = ["".join(t.text for t in tokens[lo:hi]) for lo, hi in config]
        for slot in range(4):
            new += [Token(PUNCT, ",", -1), Token(WHITESPACE, " ", -1)]
            if slot < len(config):
                lo, hi = config[slot]
                new += tokens[lo:hi]
            else:
                new += [Token(LITERAL, "0", -1)]
        if has_args:
            new += [Token(PUNCT, ",", -1), Token(WHITESPACE, " ", -1)]
            new += arg_tokens
        new += [Token(PUNCT, ")", -1)]
        out.extend(new)
        sites.append(LaunchSite(
            kernel_path="".join(t.text for t in kernel_tokens),
            templated=templated,
            config=tuple(config_texts),
            args="".join(t.text for t in arg_tokens),
            span=(tokens[path_start].start, tokens[close_paren].start + 1),
            line=line_of_offset(text, tokens[idx].start),
        ))
        cursor = close_paren + 1
        idx = close_paren + 1
    out.extend(tokens[cursor:])
    return TranslationUnit(tu.path, out), sites
