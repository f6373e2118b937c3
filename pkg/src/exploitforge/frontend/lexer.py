"""Hand-rolled tokenizer for the analyzed CommonJS subset.

Produces a flat token stream with 1-based line/column positions and absolute
offsets. Template literals are emitted as single TEMPLATE tokens carrying
their cooked quasi strings plus the raw source (and offsets) of each
``${...}`` hole; the parser re-lexes the holes.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


KEYWORDS = {
    "break", "case", "catch", "class", "const", "continue", "default",
    "delete", "do", "else", "extends", "false", "finally", "for", "function",
    "if", "in", "instanceof", "let", "new", "null", "of", "return", "static",
    "switch", "this", "throw", "true", "try", "typeof", "var", "void",
    "while",
}

PUNCTUATORS = [
    # longest first
    ">>>=", "===", "!==", "**=", "...", ">>>", "<<=", ">>=",
    "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**",
    "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "+", "-", "*", "/",
    "%", "&", "|", "^", "!", "~", "?", ":", "=", ".",
]

# token types: IDENT, KEYWORD, NUM, STR, TEMPLATE, REGEX, PUNCT, EOF


@dataclass
class Token:
    type: str
    value: str
    line: int
    col: int
    offset: int
    end_line: int
    end_col: int
    end_offset: int
    newline_before: bool = False
    # TEMPLATE payload: (quasis, holes) where holes = [(src, line, col)].
    template: tuple | None = None


@dataclass
class _Cursor:
    text: str
    pos: int = 0
    line: int = 1
    col: int = 1

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self, ahead: int = 0) -> str:
        i = self.pos + ahead
        return self.text[i] if i < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


# Previous-token values after which a `/` starts a regex literal rather than
# a division. Standard heuristic; covers the subset we parse.
_REGEX_ALLOWED_AFTER_PUNCT = {
    "(", ",", "=", ":", "[", "!", "&", "|", "?", "{", "}", ";",
    "==", "!=", "===", "!==", "<", ">", "<=", ">=", "+", "-", "*", "/", "%",
    "&&", "||", "??", "=>", "+=", "-=", "*=", "/=", "%=", "~", "^",
}
_REGEX_ALLOWED_AFTER_KEYWORD = {
    "return", "typeof", "instanceof", "in", "of", "new", "delete", "void",
    "case", "do", "else", "throw",
}


def _regex_allowed(prev: Token | None) -> bool:
    if prev is None:
        return True
    if prev.type == "PUNCT":
        return prev.value in _REGEX_ALLOWED_AFTER_PUNCT
    if prev.type == "KEYWORD":
        return prev.value in _REGEX_ALLOWED_AFTER_KEYWORD
    return False  # IDENT, NUM, STR, TEMPLATE, REGEX end an expression


def tokenize(text: str) -> list[Token]:
    cur = _Cursor(text)
    tokens: list[Token] = []
    newline_pending = False

    def push(type_: str, value: str, sl: int, sc: int, so: int, template=None) -> None:
        nonlocal newline_pending
        tokens.append(
            Token(type_, value, sl, sc, so, cur.line, cur.col, cur.pos,
                  newline_before=newline_pending, template=template)
        )
        newline_pending = False

    while not cur.at_end():
        ch = cur.peek()
        if ch in " \t\r":
            cur.advance()
            continue
        if ch == "\n":
            cur.advance()
            newline_pending = True
            continue
        if ch == "/" and cur.peek(1) == "/":
            while not cur.at_end() and cur.peek() != "\n":
                cur.advance()
            continue
        if ch == "/" and cur.peek(1) == "*":
            sl, sc = cur.line, cur.col
            cur.advance()
            cur.advance()
            while True:
                if cur.at_end():
                    raise LexError("unterminated block comment", sl, sc)
                if cur.peek() == "*" and cur.peek(1) == "/":
                    cur.advance()
                    cur.advance()
                    break
                if cur.peek() == "\n":
                    newline_pending = True
                cur.advance()
            continue

        sl, sc, so = cur.line, cur.col, cur.pos

        if _is_ident_start(ch):
            while not cur.at_end() and _is_ident_part(cur.peek()):
                cur.advance()
            word = text[so:cur.pos]
            push("KEYWORD" if word in KEYWORDS else "IDENT", word, sl, sc, so)
            continue

        if ch.isdigit() or (ch == "." and cur.peek(1).isdigit()):
            _scan_number(cur)
            push("NUM", text[so:cur.pos], sl, sc, so)
            continue

        if ch in "'\"":
            value = _scan_string(cur)
            push("STR", value, sl, sc, so)
            continue

        if ch == "`":
            quasis, holes = _scan_template(cur)
            push("TEMPLATE", text[so:cur.pos], sl, sc, so, template=(quasis, holes))
            continue

        if ch == "/" and _regex_allowed(tokens[-1] if tokens else None):
            _scan_regex(cur)
            push("REGEX", text[so:cur.pos], sl, sc, so)
            continue

        for p in PUNCTUATORS:
            if text.startswith(p, cur.pos):
                for _ in p:
                    cur.advance()
                push("PUNCT", p, sl, sc, so)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", cur.line, cur.col)

    tokens.append(Token("EOF", "", cur.line, cur.col, cur.pos, cur.line, cur.col,
                        cur.pos, newline_before=newline_pending))
    return tokens


_HEX = set("0123456789abcdef")


def _scan_number(cur: _Cursor) -> None:
    if cur.peek() == "0" and cur.peek(1) in ("x", "X"):
        cur.advance()
        cur.advance()
        if cur.peek().lower() not in _HEX:
            raise LexError("malformed hex literal", cur.line, cur.col)
        while cur.peek().lower() in _HEX:
            cur.advance()
        return
    while cur.peek().isdigit():
        cur.advance()
    if cur.peek() == ".":
        cur.advance()
        while cur.peek().isdigit():
            cur.advance()
    if cur.peek() in ("e", "E"):
        cur.advance()
        if cur.peek() in ("+", "-"):
            cur.advance()
        if not cur.peek().isdigit():
            raise LexError("malformed exponent", cur.line, cur.col)
        while cur.peek().isdigit():
            cur.advance()


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f", "v": "\v", "0": "\0"}


def _scan_escape(cur: _Cursor) -> str:
    cur.advance()  # backslash
    if cur.at_end():
        raise LexError("unterminated escape", cur.line, cur.col)
    e = cur.advance()
    if e in _ESCAPES:
        return _ESCAPES[e]
    if e == "u":
        if cur.peek() == "{":
            cur.advance()
            hexs = ""
            while cur.peek() != "}":
                if cur.at_end():
                    raise LexError("unterminated unicode escape", cur.line, cur.col)
                hexs += cur.advance()
            cur.advance()
        else:
            hexs = "".join(cur.advance() for _ in range(4))
        try:
            return chr(int(hexs, 16))
        except ValueError:
            raise LexError("bad unicode escape", cur.line, cur.col) from None
    if e == "x":
        hexs = "".join(cur.advance() for _ in range(2))
        try:
            return chr(int(hexs, 16))
        except ValueError:
            raise LexError("bad hex escape", cur.line, cur.col) from None
    if e == "\n":
        return ""  # line continuation
    return e


def _scan_string(cur: _Cursor) -> str:
    quote = cur.advance()
    out: list[str] = []
    while True:
        if cur.at_end() or cur.peek() == "\n":
            raise LexError("unterminated string literal", cur.line, cur.col)
        if cur.peek() == quote:
            cur.advance()
            return "".join(out)
        if cur.peek() == "\\":
            out.append(_scan_escape(cur))
        else:
            out.append(cur.advance())


def _scan_template(cur: _Cursor) -> tuple[list[str], list[tuple[str, int, int]]]:
    cur.advance()  # opening backtick
    quasis: list[str] = []
    holes: list[tuple[str, int, int]] = []
    buf: list[str] = []
    while True:
        if cur.at_end():
            raise LexError("unterminated template literal", cur.line, cur.col)
        if cur.peek() == "`":
            cur.advance()
            quasis.append("".join(buf))
            return quasis, holes
        if cur.peek() == "$" and cur.peek(1) == "{":
            quasis.append("".join(buf))
            buf = []
            cur.advance()
            cur.advance()
            hl, hc, hs = cur.line, cur.col, cur.pos
            depth = 1
            while depth > 0:
                if cur.at_end():
                    raise LexError("unterminated template hole", cur.line, cur.col)
                c = cur.peek()
                if c == "{":
                    depth += 1
                elif c == "}":
                    depth -= 1
                    if depth == 0:
                        break
                elif c == "`":
                    _scan_template(cur)  # nested template: consume it whole
                    continue
                elif c in "'\"":
                    _scan_string(cur)
                    continue
                cur.advance()
            holes.append((cur.text[hs:cur.pos], hl, hc))
            cur.advance()  # closing brace
            continue
        if cur.peek() == "\\":
            buf.append(_scan_escape(cur))
        else:
            buf.append(cur.advance())


def _scan_regex(cur: _Cursor) -> None:
    cur.advance()  # opening slash
    in_class = False
    while True:
        if cur.at_end() or cur.peek() == "\n":
            raise LexError("unterminated regex literal", cur.line, cur.col)
        c = cur.advance()
        if c == "\\":
            if cur.at_end():
                raise LexError("unterminated regex literal", cur.line, cur.col)
            cur.advance()
        elif c == "[":
            in_class = True
        elif c == "]":
            in_class = False
        elif c == "/" and not in_class:
            break
    while not cur.at_end() and _is_ident_part(cur.peek()):
        cur.advance()  # flags
