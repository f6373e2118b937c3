"""Recursive-descent parser for the analyzed CommonJS subset.

Covers: function/class declarations (single inheritance), var/let/const with
object-destructuring of require(), the usual statement forms (if/while/
do-while/for/for-in/for-of/return/throw/try/break/continue), and a full
expression grammar including template strings, regex literals, arrow and
function expressions. Semicolons are optional where automatic insertion
applies.
"""

from __future__ import annotations

from . import jsast as ast
from .lexer import LexError, Token, tokenize
from .model import SourceSpan


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=", "**="}

_BINARY_PREC = {
    "??": 1, "||": 2, "&&": 3,
    "|": 4, "^": 5, "&": 6,
    "==": 7, "!=": 7, "===": 7, "!==": 7,
    "<": 8, ">": 8, "<=": 8, ">=": 8, "in": 8, "instanceof": 8,
    "<<": 9, ">>": 9, ">>>": 9,
    "+": 10, "-": 10,
    "*": 11, "/": 11, "%": 11,
    "**": 12,
}

_UNARY_OPS = {"!", "~", "+", "-", "typeof", "void", "delete"}


def parse_program(source: str, file: str = "<source>") -> ast.Program:
    try:
        tokens = tokenize(source)
    except LexError as e:
        raise ParseError(e.message, e.line, e.col) from None
    return Parser(tokens, file, source).parse_program()


class Parser:
    def __init__(self, tokens: list[Token], file: str, source: str):
        self.tokens = tokens
        self.file = file
        self.source = source
        self.i = 0

    # --- token plumbing ---

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.tokens) - 1)
        return self.tokens[j]

    def at(self, type_: str, value: str | None = None) -> bool:
        t = self.peek()
        return t.type == type_ and (value is None or t.value == value)

    def at_punct(self, value: str) -> bool:
        return self.at("PUNCT", value)

    def at_keyword(self, value: str) -> bool:
        return self.at("KEYWORD", value)

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.type != "EOF":
            self.i += 1
        return t

    def expect(self, type_: str, value: str | None = None) -> Token:
        t = self.peek()
        if t.type != type_ or (value is not None and t.value != value):
            want = value if value is not None else type_
            got = t.value if t.value else t.type
            raise ParseError(f"expected {want!r} but found {got!r}", t.line, t.col)
        return self.advance()

    def _fail(self, message: str) -> None:
        t = self.peek()
        raise ParseError(message, t.line, t.col)

    def _span_from(self, start: Token) -> SourceSpan:
        end = self.tokens[self.i - 1] if self.i > 0 else start
        return SourceSpan(self.file, start.line, start.col, end.end_line, end.end_col)

    def _semicolon(self) -> None:
        if self.at_punct(";"):
            self.advance()
            return
        t = self.peek()
        if t.type == "EOF" or self.at_punct("}") or t.newline_before:
            return  # automatic semicolon insertion
        self._fail(f"expected ';' but found {t.value!r}")

    # --- program / statements ---

    def parse_program(self) -> ast.Program:
        start = self.peek()
        body = []
        while not self.at("EOF"):
            stmt = self.parse_statement()
            if stmt is not None:
                body.append(stmt)
        return ast.Program(self._span_from(start), body)

    def parse_statement(self):
        t = self.peek()
        if t.type == "PUNCT":
            if t.value == "{":
                return self.parse_block()
            if t.value == ";":
                self.advance()
                return None
        if t.type == "KEYWORD":
            handler = {
                "function": self._parse_function_decl,
                "class": self._parse_class_decl,
                "var": self._parse_var_decl,
                "let": self._parse_var_decl,
                "const": self._parse_var_decl,
                "if": self._parse_if,
                "while": self._parse_while,
                "do": self._parse_do_while,
                "for": self._parse_for,
                "return": self._parse_return,
                "throw": self._parse_throw,
                "try": self._parse_try,
                "break": self._parse_break_continue,
                "continue": self._parse_break_continue,
            }.get(t.value)
            if handler is not None:
                return handler()
        start = self.peek()
        expr = self.parse_expression()
        self._semicolon()
        return ast.ExprStmt(self._span_from(start), expr)

    def parse_block(self) -> ast.Block:
        start = self.expect("PUNCT", "{")
        body = []
        while not self.at_punct("}"):
            if self.at("EOF"):
                self._fail("unterminated block")
            stmt = self.parse_statement()
            if stmt is not None:
                body.append(stmt)
        self.expect("PUNCT", "}")
        return ast.Block(self._span_from(start), body)

    def _parse_params(self) -> list[str]:
        self.expect("PUNCT", "(")
        params: list[str] = []
        while not self.at_punct(")"):
            if self.at_punct("..."):
                self.advance()
            name = self.expect("IDENT").value
            params.append(name)
            if self.at_punct("="):  # default value: parsed, semantics ignored
                self.advance()
                self.parse_assignment()
            if self.at_punct(","):
                self.advance()
            elif not self.at_punct(")"):
                self._fail("expected ',' or ')' in parameter list")
        self.expect("PUNCT", ")")
        return params

    def _parse_function_decl(self) -> ast.FuncDecl:
        start = self.expect("KEYWORD", "function")
        name = self.expect("IDENT").value
        params = self._parse_params()
        body = self.parse_block()
        return ast.FuncDecl(self._span_from(start), name, params, body)

    def _parse_class_decl(self) -> ast.ClassDeclNode:
        start = self.expect("KEYWORD", "class")
        name = self.expect("IDENT").value
        superclass = None
        if self.at_keyword("extends"):
            self.advance()
            superclass = self.expect("IDENT").value
        self.expect("PUNCT", "{")
        methods: list[ast.MethodDef] = []
        while not self.at_punct("}"):
            if self.at_punct(";"):
                self.advance()
                continue
            mstart = self.peek()
            static = False
            if self.at_keyword("static"):
                self.advance()
                static = True
            if self.peek().type in ("IDENT", "KEYWORD"):
                mname = self.advance().value
            else:
                self._fail("expected method name")
            params = self._parse_params()
            body = self.parse_block()
            kind = "constructor" if mname == "constructor" else "method"
            methods.append(ast.MethodDef(self._span_from(mstart), kind, mname, params, body, static))
        self.expect("PUNCT", "}")
        return ast.ClassDeclNode(self._span_from(start), name, superclass, methods)

    def _parse_var_decl(self, terminate: bool = True) -> ast.VarDecl:
        start = self.advance()  # var/let/const
        kind = start.value
        declarations: list[ast.Declarator] = []
        while True:
            dstart = self.peek()
            if self.at_punct("{"):
                pattern = self._parse_object_pattern()
                self.expect("PUNCT", "=")
                init = self.parse_assignment()
                declarations.append(ast.Declarator(self._span_from(dstart), None, pattern, init))
            else:
                name = self.expect("IDENT").value
                init = None
                if self.at_punct("="):
                    self.advance()
                    init = self.parse_assignment()
                declarations.append(ast.Declarator(self._span_from(dstart), name, None, init))
            if self.at_punct(","):
                self.advance()
                continue
            break
        if terminate:
            self._semicolon()
        return ast.VarDecl(self._span_from(start), kind, declarations)

    def _parse_object_pattern(self) -> list[tuple[str, str]]:
        self.expect("PUNCT", "{")
        pairs: list[tuple[str, str]] = []
        while not self.at_punct("}"):
            prop = self.expect("IDENT").value
            bound = prop
            if self.at_punct(":"):
                self.advance()
                bound = self.expect("IDENT").value
            pairs.append((prop, bound))
            if self.at_punct(","):
                self.advance()
            elif not self.at_punct("}"):
                self._fail("expected ',' or '}' in destructuring pattern")
        self.expect("PUNCT", "}")
        return pairs

    def _parse_if(self) -> ast.If:
        start = self.expect("KEYWORD", "if")
        self.expect("PUNCT", "(")
        test = self.parse_expression()
        self.expect("PUNCT", ")")
        then = self.parse_statement()
        otherwise = None
        if self.at_keyword("else"):
            self.advance()
            otherwise = self.parse_statement()
        return ast.If(self._span_from(start), test, then, otherwise)

    def _parse_while(self) -> ast.While:
        start = self.expect("KEYWORD", "while")
        self.expect("PUNCT", "(")
        test = self.parse_expression()
        self.expect("PUNCT", ")")
        body = self.parse_statement()
        return ast.While(self._span_from(start), test, body)

    def _parse_do_while(self) -> ast.While:
        start = self.expect("KEYWORD", "do")
        body = self.parse_statement()
        self.expect("KEYWORD", "while")
        self.expect("PUNCT", "(")
        test = self.parse_expression()
        self.expect("PUNCT", ")")
        self._semicolon()
        return ast.While(self._span_from(start), test, body, is_do=True)

    def _for_head_is_enumeration(self) -> bool:
        # Look ahead inside for(...) for a top-level `in`/`of` before any `;`.
        depth = 0
        j = self.i
        while j < len(self.tokens):
            t = self.tokens[j]
            if t.type == "PUNCT":
                if t.value in "([{":
                    depth += 1
                elif t.value in ")]}":
                    if depth == 0:
                        return False
                    depth -= 1
                elif t.value == ";" and depth == 0:
                    return False
            elif t.type == "KEYWORD" and t.value in ("in", "of") and depth == 0:
                return True
            elif t.type == "EOF":
                return False
            j += 1
        return False

    def _parse_for(self):
        start = self.expect("KEYWORD", "for")
        self.expect("PUNCT", "(")
        if self._for_head_is_enumeration():
            if self.peek().type == "KEYWORD" and self.peek().value in ("var", "let", "const"):
                self.advance()
            var_name = self.expect("IDENT").value
            kw = self.advance()  # in / of
            if kw.type != "KEYWORD" or kw.value not in ("in", "of"):
                raise ParseError("expected 'in' or 'of' in for statement", kw.line, kw.col)
            obj = self.parse_expression()
            self.expect("PUNCT", ")")
            body = self.parse_statement()
            return ast.ForIn(self._span_from(start), var_name, obj, body, of=(kw.value == "of"))
        init = None
        if not self.at_punct(";"):
            if self.peek().type == "KEYWORD" and self.peek().value in ("var", "let", "const"):
                init = self._parse_var_decl(terminate=False)
            else:
                estart = self.peek()
                init = ast.ExprStmt(self._span_from(estart), self.parse_expression())
        self.expect("PUNCT", ";")
        test = None if self.at_punct(";") else self.parse_expression()
        self.expect("PUNCT", ";")
        update = None if self.at_punct(")") else self.parse_expression()
        self.expect("PUNCT", ")")
        body = self.parse_statement()
        return ast.For(self._span_from(start), init, test, update, body)

    def _parse_return(self) -> ast.Return:
        start = self.expect("KEYWORD", "return")
        arg = None
        t = self.peek()
        if not (t.type == "EOF" or self.at_punct(";") or self.at_punct("}") or t.newline_before):
            arg = self.parse_expression()
        self._semicolon()
        return ast.Return(self._span_from(start), arg)

    def _parse_throw(self) -> ast.Throw:
        start = self.expect("KEYWORD", "throw")
        if self.peek().newline_before:
            self._fail("newline not allowed after 'throw'")
        arg = self.parse_expression()
        self._semicolon()
        return ast.Throw(self._span_from(start), arg)

    def _parse_try(self) -> ast.Try:
        start = self.expect("KEYWORD", "try")
        block = self.parse_block()
        catch_param = None
        catch_block = None
        finally_block = None
        if self.at_keyword("catch"):
            self.advance()
            if self.at_punct("("):
                self.advance()
                catch_param = self.expect("IDENT").value
                self.expect("PUNCT", ")")
            catch_block = self.parse_block()
        if self.at_keyword("finally"):
            self.advance()
            finally_block = self.parse_block()
        if catch_block is None and finally_block is None:
            self._fail("try statement needs catch or finally")
        return ast.Try(self._span_from(start), block, catch_param, catch_block, finally_block)

    def _parse_break_continue(self):
        start = self.advance()
        self._semicolon()
        cls = ast.Break if start.value == "break" else ast.Continue
        return cls(self._span_from(start))

    # --- expressions ---

    def parse_expression(self) -> ast.Node:
        start = self.peek()
        expr = self.parse_assignment()
        if self.at_punct(","):
            exprs = [expr]
            while self.at_punct(","):
                self.advance()
                exprs.append(self.parse_assignment())
            return ast.Sequence(self._span_from(start), exprs)
        return expr

    def parse_assignment(self) -> ast.Node:
        if self._arrow_ahead():
            return self._parse_arrow()
        start = self.peek()
        left = self._parse_conditional()
        t = self.peek()
        if t.type == "PUNCT" and t.value in _ASSIGN_OPS:
            if not isinstance(left, (ast.Ident, ast.Member)):
                raise ParseError("invalid assignment target", t.line, t.col)
            self.advance()
            value = self.parse_assignment()
            return ast.Assign(self._span_from(start), t.value, left, value)
        return left

    def _arrow_ahead(self) -> bool:
        t = self.peek()
        if t.type == "IDENT" and self.peek(1).type == "PUNCT" and self.peek(1).value == "=>":
            return True
        if t.type == "PUNCT" and t.value == "(":
            depth = 0
            j = self.i
            while j < len(self.tokens):
                tk = self.tokens[j]
                if tk.type == "PUNCT" and tk.value == "(":
                    depth += 1
                elif tk.type == "PUNCT" and tk.value == ")":
                    depth -= 1
                    if depth == 0:
                        nxt = self.tokens[j + 1] if j + 1 < len(self.tokens) else None
                        return nxt is not None and nxt.type == "PUNCT" and nxt.value == "=>"
                elif tk.type == "EOF":
                    return False
                j += 1
        return False

    def _parse_arrow(self) -> ast.FuncExpr:
        start = self.peek()
        if start.type == "IDENT":
            params = [self.advance().value]
        else:
            params = self._parse_params()
        self.expect("PUNCT", "=>")
        if self.at_punct("{"):
            body = self.parse_block()
        else:
            estart = self.peek()
            expr = self.parse_assignment()
            span = self._span_from(estart)
            body = ast.Block(span, [ast.Return(span, expr)])
        return ast.FuncExpr(self._span_from(start), None, params, body, arrow=True)

    def _parse_conditional(self) -> ast.Node:
        start = self.peek()
        test = self._parse_binary(0)
        if self.at_punct("?"):
            self.advance()
            consequent = self.parse_assignment()
            self.expect("PUNCT", ":")
            alternate = self.parse_assignment()
            return ast.Conditional(self._span_from(start), test, consequent, alternate)
        return test

    def _parse_binary(self, min_prec: int) -> ast.Node:
        start = self.peek()
        left = self._parse_unary()
        while True:
            t = self.peek()
            op = t.value
            if t.type == "KEYWORD" and op in ("in", "instanceof"):
                prec = _BINARY_PREC[op]
            elif t.type == "PUNCT" and op in _BINARY_PREC:
                prec = _BINARY_PREC[op]
            else:
                return left
            if prec < min_prec:
                return left
            self.advance()
            next_min = prec if op == "**" else prec + 1  # ** is right-associative
            right = self._parse_binary(next_min)
            span = self._span_from(start)
            if op in ("&&", "||", "??"):
                left = ast.Logical(span, op, left, right)
            else:
                left = ast.Binary(span, op, left, right)

    def _parse_unary(self) -> ast.Node:
        t = self.peek()
        if (t.type == "PUNCT" and t.value in ("!", "~", "+", "-")) or (
            t.type == "KEYWORD" and t.value in ("typeof", "void", "delete")
        ):
            start = self.advance()
            operand = self._parse_unary()
            return ast.Unary(self._span_from(start), start.value, operand)
        if t.type == "PUNCT" and t.value in ("++", "--"):
            start = self.advance()
            target = self._parse_unary()
            return ast.Update(self._span_from(start), start.value, target, prefix=True)
        return self._parse_postfix()

    def _parse_postfix(self) -> ast.Node:
        start = self.peek()
        expr = self._parse_call_member()
        t = self.peek()
        if t.type == "PUNCT" and t.value in ("++", "--") and not t.newline_before:
            self.advance()
            return ast.Update(self._span_from(start), t.value, expr, prefix=False)
        return expr

    def _parse_call_member(self) -> ast.Node:
        start = self.peek()
        if self.at_keyword("new"):
            self.advance()
            callee = self._parse_member_chain(self._parse_primary(), allow_calls=False)
            args: list[ast.Node] = []
            if self.at_punct("("):
                args = self._parse_args()
            expr: ast.Node = ast.New(self._span_from(start), callee, args)
        else:
            expr = self._parse_primary()
        return self._parse_member_chain(expr, allow_calls=True, start=start)

    def _parse_member_chain(self, expr: ast.Node, allow_calls: bool, start: Token | None = None) -> ast.Node:
        if start is None:
            start = self.tokens[max(self.i - 1, 0)]
        while True:
            if self.at_punct("."):
                self.advance()
                prop_tok = self.peek()
                if prop_tok.type not in ("IDENT", "KEYWORD"):
                    self._fail("expected property name after '.'")
                self.advance()
                expr = ast.Member(self._span_from(start), expr, prop_tok.value, computed=False)
            elif self.at_punct("["):
                self.advance()
                prop = self.parse_expression()
                self.expect("PUNCT", "]")
                expr = ast.Member(self._span_from(start), expr, prop, computed=True)
            elif allow_calls and self.at_punct("("):
                args = self._parse_args()
                expr = ast.Call(self._span_from(start), expr, args)
            elif allow_calls and self.at("TEMPLATE"):
                # tagged template: model as a call taking the hole expressions
                tmpl = self._parse_template(self.advance())
                expr = ast.Call(self._span_from(start), expr, list(tmpl.exprs))
            else:
                return expr

    def _parse_args(self) -> list[ast.Node]:
        self.expect("PUNCT", "(")
        args: list[ast.Node] = []
        while not self.at_punct(")"):
            if self.at_punct("..."):
                self.advance()
            args.append(self.parse_assignment())
            if self.at_punct(","):
                self.advance()
            elif not self.at_punct(")"):
                self._fail("expected ',' or ')' in argument list")
        self.expect("PUNCT", ")")
        return args

    def _parse_template(self, tok: Token) -> ast.TemplateLit:
        quasis, holes = tok.template
        exprs = []
        for src, line, col in holes:
            sub = parse_program(src, self.file)
            if len(sub.body) != 1 or not isinstance(sub.body[0], ast.ExprStmt):
                raise ParseError("invalid template expression", line, col)
            exprs.append(_shift(sub.body[0].expr, line, col))
        span = SourceSpan(self.file, tok.line, tok.col, tok.end_line, tok.end_col)
        return ast.TemplateLit(span, quasis, exprs)

    def _parse_primary(self) -> ast.Node:
        t = self.peek()
        if t.type == "IDENT":
            self.advance()
            return ast.Ident(self._span_from(t), t.value)
        if t.type == "NUM":
            self.advance()
            raw = t.value
            value = float(int(raw, 16)) if raw.lower().startswith("0x") else float(raw)
            return ast.Literal(self._span_from(t), value, raw, "number")
        if t.type == "STR":
            self.advance()
            return ast.Literal(self._span_from(t), t.value, t.value, "string")
        if t.type == "REGEX":
            self.advance()
            return ast.Literal(self._span_from(t), t.value, t.value, "regex")
        if t.type == "TEMPLATE":
            self.advance()
            return self._parse_template(t)
        if t.type == "KEYWORD":
            if t.value in ("true", "false"):
                self.advance()
                return ast.Literal(self._span_from(t), t.value == "true", t.value, "boolean")
            if t.value == "null":
                self.advance()
                return ast.Literal(self._span_from(t), None, "null", "null")
            if t.value == "this":
                self.advance()
                return ast.ThisExpr(self._span_from(t))
            if t.value == "function":
                return self._parse_function_expr()
            if t.value == "class":
                decl = self._parse_class_decl()
                return decl  # class expression, reusing the declaration node
            if t.value == "new":
                return self._parse_call_member()
        if t.type == "PUNCT":
            if t.value == "(":
                self.advance()
                expr = self.parse_expression()
                self.expect("PUNCT", ")")
                return expr
            if t.value == "[":
                return self._parse_array()
            if t.value == "{":
                return self._parse_object()
        self._fail(f"unexpected token {t.value or t.type!r}")

    def _parse_function_expr(self) -> ast.FuncExpr:
        start = self.expect("KEYWORD", "function")
        name = None
        if self.at("IDENT"):
            name = self.advance().value
        params = self._parse_params()
        body = self.parse_block()
        return ast.FuncExpr(self._span_from(start), name, params, body)

    def _parse_array(self) -> ast.ArrayLit:
        start = self.expect("PUNCT", "[")
        elements: list[ast.Node] = []
        while not self.at_punct("]"):
            if self.at_punct(","):  # elision
                self.advance()
                continue
            if self.at_punct("..."):
                self.advance()
            elements.append(self.parse_assignment())
            if self.at_punct(","):
                self.advance()
            elif not self.at_punct("]"):
                self._fail("expected ',' or ']' in array literal")
        self.expect("PUNCT", "]")
        return ast.ArrayLit(self._span_from(start), elements)

    def _parse_object(self) -> ast.ObjectLit:
        start = self.expect("PUNCT", "{")
        props: list[ast.Property] = []
        while not self.at_punct("}"):
            pstart = self.peek()
            if self.at_punct("..."):  # spread: parse, keep the value
                self.advance()
                value = self.parse_assignment()
                props.append(ast.Property(self._span_from(pstart), "...", value, computed=False))
            else:
                props.append(self._parse_property(pstart))
            if self.at_punct(","):
                self.advance()
            elif not self.at_punct("}"):
                self._fail("expected ',' or '}' in object literal")
        self.expect("PUNCT", "}")
        return ast.ObjectLit(self._span_from(start), props)

    def _parse_property(self, pstart: Token) -> ast.Property:
        # accessor shorthand: `get name() {}` / `set name(v) {}`
        if (
            self.peek().type == "IDENT"
            and self.peek().value in ("get", "set")
            and self.peek(1).type in ("IDENT", "STR", "KEYWORD")
            and self.peek(2).type == "PUNCT"
            and self.peek(2).value == "("
        ):
            self.advance()
            key = self.advance().value
            params = self._parse_params()
            body = self.parse_block()
            fn = ast.FuncExpr(self._span_from(pstart), None, params, body)
            return ast.Property(self._span_from(pstart), key, fn, computed=False)

        computed = False
        key: object
        if self.at_punct("["):
            self.advance()
            key = self.parse_assignment()
            self.expect("PUNCT", "]")
            computed = True
        elif self.peek().type in ("IDENT", "KEYWORD", "STR", "NUM"):
            key = self.advance().value
        else:
            self._fail("expected property key")

        if self.at_punct("("):  # method shorthand
            params = self._parse_params()
            body = self.parse_block()
            fn = ast.FuncExpr(self._span_from(pstart), None, params, body)
            return ast.Property(self._span_from(pstart), key, fn, computed=computed)
        if self.at_punct(":"):
            self.advance()
            value = self.parse_assignment()
            return ast.Property(self._span_from(pstart), key, value, computed=computed)
        if not computed and isinstance(key, str):  # shorthand {name}
            ident = ast.Ident(self._span_from(pstart), key)
            return ast.Property(self._span_from(pstart), key, ident, computed=False)
        self._fail("expected ':' in object literal")


def _shift(node: ast.Node, line: int, col: int) -> ast.Node:
    """Rebase spans of a template-hole subtree onto its position in the file."""
    for n in ast.walk(node):
        s = n.span
        n.span = SourceSpan(
            s.file,
            s.start_line + line - 1,
            s.start_col + col - 1 if s.start_line == 1 else s.start_col,
            s.end_line + line - 1,
            s.end_col + col - 1 if s.end_line == 1 else s.end_col,
        )
    return node
