"""Lossless tokenizer for C-family GPU sources.

Token kinds: identifier, punctuation (single characters), numeric literal,
string (string and character literals), comment, whitespace, and
preprocessor (a whole directive line, including backslash continuations).
Concatenating token texts reproduces the input bytes exactly; later passes
rely on string/comment/preprocessor isolation to leave quoted and
commented text untouched.

This is a pragmatic lexer: raw string literals, trigraphs, and block
comments opened inside a directive line are outside its contract.
"""

from dataclasses import dataclass

IDENTIFIER = "identifier"
PUNCT = "punctuation"
LITERAL = "literal"
STRING = "string"
COMMENT = "comment"
WHITESPACE = "whitespace"
PREPROCESSOR = "preprocessor"


class TranslationError(Exception):
    """Base class for translation failures; carries file and line."""

    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        super().__init__(message)

    def __str__(self):
        prefix = ""
        if self.path is not None:
            prefix += f"{self.path}:"
        if self.line is not None:
            prefix += f"{self.line}:"
        if prefix:
            prefix += " "
        return prefix + super().__str__()


class UnterminatedString(TranslationError):
    pass


class UnterminatedComment(TranslationError):
    pass


class MalformedLaunch(TranslationError):
    """Unbalanced <<< >>> or a launch configuration outside 2-4 expressions."""


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    start: int  # byte offset in the original source; -1 for synthesized tokens


@dataclass
class TranslationUnit:
    path: object
    tokens: list

    def text(self) -> str:
        return "".join(t.text for t in self.tokens)


def _is_ident_start(ch):
    return ch.isalpha() or ch == "_"


def _is_ident(ch):
    return ch.isalnum() or ch == "_"


def tokenize(source: str, path=None) -> TranslationUnit:
    """Split ``source`` into a lossless token stream."""
    tokens = []
    i = 0
    n = len(source)
    line = 1
    at_line_start = True  # only whitespace seen since the last newline

    def emit(kind, start, end):
        tokens.append(Token(kind, source[start:end], start))

    while i < n:
        ch = source[i]
        if ch in " \t\r\n\f\v":
            start = i
            while i < n and source[i] in " \t\r\n\f\v":
                if source[i] == "\n":
                    line += 1
                    at_line_start = True
                i += 1
            emit(WHITESPACE, start, i)
            continue
        if ch == "#" and at_line_start:
            start = i
            while i < n and source[i] != "\n":
                if source[i] == "\\" and i + 1 < n and source[i + 1] == "\n":
                    line += 1
                    i += 2
                    continue
                i += 1
            emit(PREPROCESSOR, start, i)
            at_line_start = False
            continue
        at_line_start = False
        if ch == "/" and i + 1 < n and source[i + 1] == "/":
            start = i
            while i < n and source[i] != "\n":
                i += 1
            emit(COMMENT, start, i)
            continue
        if ch == "/" and i + 1 < n and source[i + 1] == "*":
            start = i
            start_line = line
            i += 2
            while i < n and not (source[i] == "*" and i + 1 < n and source[i + 1] == "/"):
                if source[i] == "\n":
                    line += 1
                i += 1
            if i >= n:
                raise UnterminatedComment("unterminated block comment", path=path, line=start_line)
            i += 2
            emit(COMMENT, start, i)
            continue
        if ch in "\"'":
            quote = ch
            start = i
            start_line = line
            i += 1
            closed = False
            while i < n:
                c = source[i]
                if c == "\\" and i + 1 < n:
                    i += 2
                    continue
                if c == "\n":
                    break
                i += 1
                if c == quote:
                    closed = True
                    break
            if not closed:
                raise UnterminatedString(
                    f"unterminated {'string' if quote == chr(34) else 'character'} literal",
                    path=path, line=start_line,
                )
            emit(STRING, start, i)
            continue
        if _is_ident_start(ch):
            start = i
            while i < n and _is_ident(source[i]):
                i += 1
            emit(IDENTIFIER, start, i)
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            start = i
            i += 1
            while i < n:
                c = source[i]
                if _is_ident(c) or c == ".":
                    i += 1
                elif c in "+-" and source[i - 1] in "eEpP":
                    i += 1
                else:
                    break
            emit(LITERAL, start, i)
            continue
        emit(PUNCT, i, i + 1)
        i += 1
    return TranslationUnit(path=path, tokens=tokens)


def line_of_offset(source: str, offset: int) -> int:
    return source.count("\n", 0, max(offset, 0)) + 1
