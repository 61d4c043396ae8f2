"""Tokenizer and recursive-descent parser for .mm job files.

Grammar (docs/grammar.md has the full EBNF):

    file      = schema+ job
    schema    = "schema" IDENT "{" (IDENT ":" type ";")+ "}"
    job       = "job" IDENT "on" IDENT ["sorted"] "{" [members] map reduce "}"
    members   = "members" "{" (IDENT ":" type "=" literal ";")* "}"
    map       = "map" "(" IDENT "," IDENT ")" block
    reduce    = "reduce" "(" IDENT "," IDENT ")" block

Statement ids are assigned 1..n in source order over map body then reduce
body. Errors carry line:col of the offending token.
"""

from __future__ import annotations

from minimap.errors import ParseError
from minimap.lang.ast import (
    AssignStmt,
    Binary,
    BoolLit,
    Call,
    EmitStmt,
    Expr,
    ExprStmt,
    FieldAccess,
    IfStmt,
    IntLit,
    JobSpec,
    LetStmt,
    LogStmt,
    MemberDecl,
    Program,
    SCALAR_TYPES,
    Schema,
    Stmt,
    StrLit,
    Unary,
    VarRef,
    WhileStmt,
    assign_stmt_ids,
)

KEYWORDS = {
    "schema", "job", "on", "sorted", "members", "map", "reduce",
    "let", "if", "else", "while", "emit", "log", "true", "false",
    "i32", "i64", "str", "blob",
}

_PUNCT = [
    "<=", ">=", "==", "!=", "&&", "||",
    "{", "}", "(", ")", ";", ":", ",", ".", "=",
    "<", ">", "+", "-", "*", "/", "%", "!",
]

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class Token:
    __slots__ = ("kind", "text", "value", "line", "col")

    def __init__(self, kind: str, text: str, value, line: int, col: int):
        self.kind = kind  # ident | keyword | int | string | punct | eof
        self.text = text
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r})"


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            text = src[i:j]
            toks.append(Token("int", text, int(text), start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            text = src[i:j]
            kind = "keyword" if text in KEYWORDS else "ident"
            toks.append(Token(kind, text, text, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n or src[j] == "\n":
                    raise ParseError("unterminated string literal", start_line, start_col)
                ch = src[j]
                if ch == '"':
                    j += 1
                    break
                if ch == "\\":
                    if j + 1 >= n or src[j + 1] not in _ESCAPES:
                        raise ParseError("bad escape in string literal", line, col + (j - i))
                    out.append(_ESCAPES[src[j + 1]])
                    j += 2
                    continue
                out.append(ch)
                j += 1
            toks.append(Token("string", src[i:j], "".join(out), start_line, start_col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if src.startswith(p, i):
                toks.append(Token("punct", p, p, start_line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", None, line, col))
    return toks


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            self.fail(f"expected {want!r}, found {t.text!r}" if t.text else f"expected {want!r}, found end of input")
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    def ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected identifier, found {t.text!r}")
        return self.next()

    # -- declarations ------------------------------------------------------

    def program(self) -> Program:
        schemas: list[Schema] = []
        job: JobSpec | None = None
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "schema":
                schemas.append(self.schema_decl())
            elif t.text == "job":
                if job is not None:
                    self.fail("only one job per file")
                job = self.job_decl()
            else:
                self.fail(f"expected 'schema' or 'job', found {t.text!r}")
        if not schemas:
            self.fail("file declares no schema")
        if job is None:
            self.fail("file declares no job")
        names = [s.name for s in schemas]
        if len(set(names)) != len(names):
            self.fail("duplicate schema name")
        if job.schema_name not in names:
            self.fail(f"job is on unknown schema {job.schema_name!r}")
        assign_stmt_ids([job.map_body, job.reduce_body])
        return Program(schemas=schemas, job=job)

    def schema_decl(self) -> Schema:
        self.expect("keyword", "schema")
        name = self.ident().text
        self.expect("punct", "{")
        fields: list[tuple[str, str]] = []
        while not self.accept("punct", "}"):
            fname = self.ident()
            self.expect("punct", ":")
            fields.append((fname.text, self.type_name()))
            self.expect("punct", ";")
        if not fields:
            self.fail("schema has no fields")
        if len({n for n, _ in fields}) != len(fields):
            self.fail("duplicate field name in schema")
        if fields[0][1] == "blob":
            self.fail("key field (first field) may not be a blob")
        return Schema(name=name, fields=fields)

    def type_name(self) -> str:
        t = self.peek()
        if t.text not in SCALAR_TYPES:
            self.fail(f"expected a type, found {t.text!r}")
        return self.next().text

    def job_decl(self) -> JobSpec:
        self.expect("keyword", "job")
        name = self.ident().text
        self.expect("keyword", "on")
        schema_name = self.ident().text
        sorted_output = self.accept("keyword", "sorted") is not None
        self.expect("punct", "{")
        members: list[MemberDecl] = []
        if self.peek().text == "members":
            members = self.members_block()
        self.expect("keyword", "map")
        self.expect("punct", "(")
        map_k = self.ident().text
        self.expect("punct", ",")
        map_v = self.ident().text
        self.expect("punct", ")")
        map_body = self.block()
        self.expect("keyword", "reduce")
        self.expect("punct", "(")
        red_k = self.ident().text
        self.expect("punct", ",")
        red_vals = self.ident().text
        self.expect("punct", ")")
        reduce_body = self.block()
        self.expect("punct", "}")
        return JobSpec(
            name=name,
            schema_name=schema_name,
            sorted_output=sorted_output,
            members=members,
            map_key_param=map_k,
            map_val_param=map_v,
            map_body=map_body,
            reduce_key_param=red_k,
            reduce_vals_param=red_vals,
            reduce_body=reduce_body,
        )

    def members_block(self) -> list[MemberDecl]:
        self.expect("keyword", "members")
        self.expect("punct", "{")
        out: list[MemberDecl] = []
        while not self.accept("punct", "}"):
            name = self.ident()
            self.expect("punct", ":")
            ty = self.type_name()
            if ty == "blob":
                self.fail("blob members are not supported", name)
            self.expect("punct", "=")
            t = self.peek()
            init: int | str
            if t.kind == "int":
                init = self.next().value
            elif t.kind == "string":
                init = self.next().value
            elif self.accept("punct", "-"):
                init = -self.expect("int").value
            else:
                self.fail("member initializer must be an int or string literal")
            self.expect("punct", ";")
            out.append(MemberDecl(name=name.text, ty=ty, init=init, pos=(name.line, name.col)))
        return out

    # -- statements ----------------------------------------------------------

    def block(self) -> list[Stmt]:
        self.expect("punct", "{")
        out: list[Stmt] = []
        while not self.accept("punct", "}"):
            out.append(self.stmt())
        return out

    def stmt(self) -> Stmt:
        t = self.peek()
        pos = (t.line, t.col)
        if t.text == "let":
            self.next()
            name = self.ident().text
            self.expect("punct", "=")
            e = self.expr()
            self.expect("punct", ";")
            return LetStmt(name=name, expr=e, pos=pos)
        if t.text == "if":
            return self.if_stmt()
        if t.text == "while":
            self.next()
            self.expect("punct", "(")
            cond = self.expr()
            self.expect("punct", ")")
            body = self.block()
            return WhileStmt(cond=cond, body=body, pos=pos)
        if t.text == "emit":
            self.next()
            self.expect("punct", "(")
            key = self.expr()
            self.expect("punct", ",")
            value = self.expr()
            self.expect("punct", ")")
            self.expect("punct", ";")
            return EmitStmt(key=key, value=value, pos=pos)
        if t.text == "log":
            self.next()
            self.expect("punct", "(")
            e = self.expr()
            self.expect("punct", ")")
            self.expect("punct", ";")
            return LogStmt(expr=e, pos=pos)
        # assignment or expression statement
        if t.kind == "ident" and self.toks[self.i + 1].text == "=" and self.toks[self.i + 1].kind == "punct":
            name = self.next().text
            self.expect("punct", "=")
            e = self.expr()
            self.expect("punct", ";")
            return AssignStmt(name=name, expr=e, pos=pos)
        e = self.expr()
        self.expect("punct", ";")
        return ExprStmt(expr=e, pos=pos)

    def if_stmt(self) -> IfStmt:
        t = self.expect("keyword", "if")
        self.expect("punct", "(")
        cond = self.expr()
        self.expect("punct", ")")
        then_body = self.block()
        else_body: list[Stmt] = []
        if self.accept("keyword", "else"):
            if self.peek().text == "if":
                else_body = [self.if_stmt()]
            else:
                else_body = self.block()
        return IfStmt(cond=cond, then_body=then_body, else_body=else_body, pos=(t.line, t.col))

    # -- expressions (precedence climbing) -----------------------------------

    def expr(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while (t := self.accept("punct", "||")) is not None:
            e = Binary(op="||", left=e, right=self.and_expr(), pos=(t.line, t.col))
        return e

    def and_expr(self) -> Expr:
        e = self.cmp_expr()
        while (t := self.accept("punct", "&&")) is not None:
            e = Binary(op="&&", left=e, right=self.cmp_expr(), pos=(t.line, t.col))
        return e

    def cmp_expr(self) -> Expr:
        e = self.add_expr()
        t = self.peek()
        if t.kind == "punct" and t.text in ("<", "<=", ">", ">=", "==", "!="):
            self.next()
            return Binary(op=t.text, left=e, right=self.add_expr(), pos=(t.line, t.col))
        return e

    def add_expr(self) -> Expr:
        e = self.mul_expr()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ("+", "-"):
                self.next()
                e = Binary(op=t.text, left=e, right=self.mul_expr(), pos=(t.line, t.col))
            else:
                return e

    def mul_expr(self) -> Expr:
        e = self.unary_expr()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ("*", "/", "%"):
                self.next()
                e = Binary(op=t.text, left=e, right=self.unary_expr(), pos=(t.line, t.col))
            else:
                return e

    def unary_expr(self) -> Expr:
        t = self.peek()
        if t.kind == "punct" and t.text in ("!", "-"):
            self.next()
            return Unary(op=t.text, operand=self.unary_expr(), pos=(t.line, t.col))
        return self.postfix_expr()

    def postfix_expr(self) -> Expr:
        e = self.primary_expr()
        while (t := self.accept("punct", ".")) is not None:
            name = self.ident().text
            e = FieldAccess(base=e, name=name, pos=(t.line, t.col))
        return e

    def primary_expr(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntLit(value=t.value, pos=(t.line, t.col))
        if t.kind == "string":
            self.next()
            return StrLit(value=t.value, pos=(t.line, t.col))
        if t.text in ("true", "false"):
            self.next()
            return BoolLit(value=t.text == "true", pos=(t.line, t.col))
        if t.kind == "ident":
            self.next()
            if self.peek().text == "(" and self.peek().kind == "punct":
                self.next()
                args: list[Expr] = []
                if not self.accept("punct", ")"):
                    args.append(self.expr())
                    while self.accept("punct", ","):
                        args.append(self.expr())
                    self.expect("punct", ")")
                return Call(name=t.text, args=args, pos=(t.line, t.col))
            return VarRef(name=t.text, pos=(t.line, t.col))
        if self.accept("punct", "("):
            e = self.expr()
            self.expect("punct", ")")
            return e
        self.fail(f"expected an expression, found {t.text!r}" if t.text else "expected an expression, found end of input")
        raise AssertionError("unreachable")


def parse_program(src: str) -> Program:
    """Parse a .mm source file: schemas plus exactly one job."""
    return _Parser(tokenize(src)).program()


def parse_expr(src: str) -> Expr:
    """Parse a standalone expression (used to revive serialized DNF atoms)."""
    p = _Parser(tokenize(src))
    e = p.expr()
    if p.peek().kind != "eof":
        p.fail("trailing input after expression")
    return e
