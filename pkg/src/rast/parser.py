"""Recursive-descent parser for programs, declarations, types, processes,
index expressions, and propositions."""

from __future__ import annotations

from .core import (Add, ArithExp, ArithProp, AssertP, AssertT, AssumeP, AssumeT, BoxT, Call, Case,
                   Close, Const, DelayP, DiamondT, EChoice, EqTypeDecl, ExecDecl, ExistsIdx,
                   ExistsTy, ForallIdx, ForallTy, Forward, Get, GetT, IChoice, IdxVar, Impossible,
                   Lolli, Mul, NextT, Now, PAnd, Pay, PayT, PBot, PEq, PExists, PForall, PGt, PNot,
                   POr, ProcDecl, ProcDef, ProcExpr, PTop, RecvChan, RecvIdx, RecvType,
                   SendChan, SendIdx, SendLabel, SendType, SessionType, Signature, Sub, Tensor,
                   TyName, TypeDef, TyVar, Unit, Wait, When, Work, conj, ONE_E, TOP)
from .errors import ParseError, Span
from .lexer import Token, tokenize

PREFIX_STARTS = {"?{", "!{", "|{", "<{", "()", "[]", "<>", "?", "!"}

_OPTION_KEYS = {"syntax": {"implicit", "explicit"},
                "work": {"none", "send", "recv", "recvsend"},
                "time": {"none", "send", "recv", "recvsend"}}


def parse_pragma(source: str, filename: str) -> dict[str, str]:
    """Reads the optional `#options` line at the top of a file."""
    offset = 0
    for line in source.split("\n"):
        stripped = line.strip()
        if stripped and not stripped.startswith("%"):
            if stripped.startswith("#options"):
                out = {}
                for flag in stripped[len("#options"):].split():
                    if not flag.startswith("--") or "=" not in flag:
                        raise ParseError(f"malformed option '{flag}'",
                                         Span(offset, offset + len(line), filename))
                    key, _, value = flag[2:].partition("=")
                    if key not in _OPTION_KEYS or value not in _OPTION_KEYS[key]:
                        raise ParseError(f"unknown option '{flag}'",
                                         Span(offset, offset + len(line), filename))
                    out[key] = value
                return out
            return {}
        offset += len(line) + 1
    return {}


class Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.tokens = tokens
        self.pos = 0
        self.filename = filename
        self.tyvars: set[str] = set()

    # -- token plumbing ------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def at_sym(self, s: str, ahead: int = 0) -> bool:
        return self.peek(ahead).is_sym(s)

    def at_kw(self, s: str) -> bool:
        return self.peek().is_kw(s)

    def accept_sym(self, s: str) -> bool:
        if self.at_sym(s):
            self.pos += 1
            return True
        return False

    def expect_sym(self, s: str) -> Token:
        if not self.at_sym(s):
            self.fail(f"expected '{s}'")
        return self.next()

    def expect_kw(self, s: str) -> Token:
        if not self.at_kw(s):
            self.fail(f"expected keyword '{s}'")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.peek().kind != "ident":
            self.fail(f"expected {what}")
        return self.next()

    def fail(self, message: str):
        tok = self.peek()
        got = tok.lexeme if tok.kind != "eof" else "end of input"
        raise ParseError(f"{message}, found '{got}'", tok.span)

    # -- index expressions ---------------------------------------------

    def parse_exp(self) -> ArithExp:
        left = self.parse_term()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next()
            right = self.parse_term()
            cls = Add if op.lexeme == "+" else Sub
            left = cls(left, right, span=left.span.merge(right.span))
        return left

    def parse_term(self) -> ArithExp:
        left = self.parse_factor()
        while self.at_sym("*"):
            self.next()
            right = self.parse_factor()
            left = Mul(left, right, span=left.span.merge(right.span))
        return left

    def parse_factor(self) -> ArithExp:
        tok = self.peek()
        if tok.kind == "nat":
            self.next()
            return Const(int(tok.lexeme), span=tok.span)
        if tok.kind == "ident":
            self.next()
            return IdxVar(tok.lexeme, span=tok.span)
        if self.accept_sym("("):
            e = self.parse_exp()
            self.expect_sym(")")
            return e
        self.fail("expected an arithmetic expression")

    # -- propositions ----------------------------------------------------

    def parse_prop(self) -> ArithProp:
        left = self.parse_prop_and()
        while self.at_sym("\\/"):
            self.next()
            right = self.parse_prop_and()
            left = POr(left, right, span=left.span.merge(right.span))
        return left

    def parse_prop_and(self) -> ArithProp:
        left = self.parse_prop_unary()
        while self.at_sym("/\\"):
            self.next()
            right = self.parse_prop_unary()
            left = PAnd(left, right, span=left.span.merge(right.span))
        return left

    def parse_prop_unary(self) -> ArithProp:
        tok = self.peek()
        if self.accept_sym("~"):
            body = self.parse_prop_unary()
            return PNot(body, span=tok.span.merge(body.span))
        if self.at_sym("?") and self.peek(1).kind == "ident" and self.at_sym(".", 2):
            self.next()
            var = self.next().lexeme
            self.next()
            body = self.parse_prop()
            return PExists(var, body, span=tok.span.merge(body.span))
        if self.at_sym("!") and self.peek(1).kind == "ident" and self.at_sym(".", 2):
            self.next()
            var = self.next().lexeme
            self.next()
            body = self.parse_prop()
            return PForall(var, body, span=tok.span.merge(body.span))
        return self.parse_prop_atom()

    def parse_prop_atom(self) -> ArithProp:
        tok = self.peek()
        if self.at_kw("true"):
            self.next()
            return PTop(span=tok.span)
        if self.at_kw("false"):
            self.next()
            return PBot(span=tok.span)
        if self.at_sym("("):
            # may be a parenthesized proposition or a parenthesized expression
            save = self.pos
            try:
                exp = self.parse_factor()
                return self.parse_relation(exp)
            except ParseError:
                self.pos = save
            self.next()
            p = self.parse_prop()
            self.expect_sym(")")
            return p
        left = self.parse_exp()
        return self.parse_relation(left)

    def parse_relation(self, first: ArithExp) -> ArithProp:
        # continue an expression if the factor was only a prefix of one
        left = first
        while self.at_sym("+") or self.at_sym("-") or self.at_sym("*"):
            if self.at_sym("*"):
                self.next()
                left = Mul(left, self.parse_factor(), span=left.span)
            else:
                op = self.next()
                cls = Add if op.lexeme == "+" else Sub
                left = cls(left, self.parse_term(), span=left.span)
        tok = self.peek()
        ops = {"=", ">", ">=", "<", "<=", "!="}
        if tok.kind != "symbol" or tok.lexeme not in ops:
            self.fail("expected a comparison operator")
        self.next()
        right = self.parse_exp()
        span = left.span.merge(right.span)
        # derived comparisons normalize to = and > over naturals
        match tok.lexeme:
            case "=":
                return PEq(left, right, span=span)
            case ">":
                return PGt(left, right, span=span)
            case ">=":
                return PGt(Add(left, ONE_E), right, span=span)
            case "<":
                return PGt(right, left, span=span)
            case "<=":
                return PGt(Add(right, ONE_E), left, span=span)
            case "!=":
                return PNot(PEq(left, right, span=span), span=span)
        raise AssertionError

    # -- types -----------------------------------------------------------

    def at_type_prefix(self) -> bool:
        tok = self.peek()
        if tok.kind != "symbol":
            return False
        if tok.lexeme in {"?{", "!{", "|{", "<{", "()", "[]", "<>", "|>", "<|"}:
            return True
        if tok.lexeme == "(" and self.at_sym("{", 1):
            return True
        if tok.lexeme in {"?", "!"}:
            nxt = self.peek(1)
            return nxt.kind == "ident" or nxt.is_sym("[")
        return False

    def parse_type(self) -> SessionType:
        if self.at_type_prefix():
            return self.parse_type_prefix()
        left = self.parse_type_tensor()
        if self.accept_sym("-o"):
            right = self.parse_type()
            return Lolli(left, right, span=left.span.merge(right.span))
        return left

    def parse_type_prefix(self) -> SessionType:
        tok = self.next()
        span = tok.span
        match tok.lexeme:
            case "?{":
                prop = self.parse_prop()
                self.expect_sym("}")
                self.expect_sym(".")
                body = self.parse_type()
                return AssertT(prop, body, span=span.merge(body.span))
            case "!{":
                prop = self.parse_prop()
                self.expect_sym("}")
                self.expect_sym(".")
                body = self.parse_type()
                return AssumeT(prop, body, span=span.merge(body.span))
            case "|{":
                amount = self.parse_exp()
                self.expect_sym("}")
                self.expect_sym(">")
                body = self.parse_type()
                return PayT(amount, body, span=span.merge(body.span))
            case "<{":
                amount = self.parse_exp()
                self.expect_sym("}")
                self.expect_sym("|")
                body = self.parse_type()
                return GetT(amount, body, span=span.merge(body.span))
            case "|>":
                body = self.parse_type()
                return PayT(ONE_E, body, span=span.merge(body.span))
            case "<|":
                body = self.parse_type()
                return GetT(ONE_E, body, span=span.merge(body.span))
            case "()":
                body = self.parse_type()
                return NextT(ONE_E, body, span=span.merge(body.span))
            case "(":
                self.expect_sym("{")
                amount = self.parse_exp()
                self.expect_sym("}")
                self.expect_sym(")")
                body = self.parse_type()
                return NextT(amount, body, span=span.merge(body.span))
            case "[]":
                body = self.parse_type()
                return BoxT(body, span=span.merge(body.span))
            case "<>":
                body = self.parse_type()
                return DiamondT(body, span=span.merge(body.span))
            case "?" | "!":
                exists = tok.lexeme == "?"
                if self.accept_sym("["):
                    var = self.expect_ident("type variable").lexeme
                    self.expect_sym("]")
                    self.expect_sym(".")
                    self.tyvars.add(var)
                    body = self.parse_type()
                    cls = ExistsTy if exists else ForallTy
                    return cls(var, body, span=span.merge(body.span))
                var = self.expect_ident("index variable").lexeme
                self.expect_sym(".")
                body = self.parse_type()
                cls = ExistsIdx if exists else ForallIdx
                return cls(var, body, span=span.merge(body.span))
        self.fail("expected a type")

    def parse_type_tensor(self) -> SessionType:
        left = self.parse_type_atom()
        if self.accept_sym("*"):
            if self.at_type_prefix():
                right = self.parse_type_prefix()
            else:
                right = self.parse_type_tensor()
            return Tensor(left, right, span=left.span.merge(right.span))
        return left

    def parse_branches(self) -> tuple[tuple[str, SessionType], ...]:
        branches = []
        while True:
            label = self.expect_ident("branch label").lexeme
            self.expect_sym(":")
            branches.append((label, self.parse_type()))
            if not self.accept_sym(","):
                break
        self.expect_sym("}")
        return tuple(branches)

    def parse_type_atom(self) -> SessionType:
        tok = self.peek()
        if tok.kind == "nat" and tok.lexeme == "1":
            self.next()
            return Unit(span=tok.span)
        if tok.is_sym("+{"):
            self.next()
            return IChoice(self.parse_branches(), span=tok.span)
        if tok.is_sym("&{"):
            self.next()
            return EChoice(self.parse_branches(), span=tok.span)
        if tok.is_sym("("):
            self.next()
            t = self.parse_type()
            self.expect_sym(")")
            return t
        if tok.kind == "ident":
            self.next()
            targs = []
            iargs = []
            while self.at_sym("["):
                self.next()
                targs.append(self.parse_type())
                self.expect_sym("]")
            while self.at_sym("{"):
                self.next()
                iargs.append(self.parse_exp())
                self.expect_sym("}")
            if not targs and not iargs and tok.lexeme in self.tyvars:
                return TyVar(tok.lexeme, span=tok.span)
            return TyName(tok.lexeme, tuple(targs), tuple(iargs), span=tok.span)
        self.fail("expected a type")

    # -- processes ---------------------------------------------------------

    def parse_proc(self) -> ProcExpr:
        tok = self.peek()
        span = tok.span

        if self.at_kw("case"):
            self.next()
            chan = self.expect_ident("channel").lexeme
            self.expect_sym("(")
            branches = []
            while True:
                label = self.expect_ident("branch label").lexeme
                self.expect_sym("=>")
                branches.append((label, self.parse_proc()))
                if not self.accept_sym("|"):
                    break
            end = self.expect_sym(")")
            return Case(chan, tuple(branches), span=span.merge(end.span))

        if self.at_kw("close"):
            self.next()
            chan = self.expect_ident("channel")
            return Close(chan.lexeme, span=span.merge(chan.span))

        if self.at_kw("wait"):
            self.next()
            chan = self.expect_ident("channel").lexeme
            self.expect_sym(";")
            cont = self.parse_proc()
            return Wait(chan, cont, span=span.merge(cont.span))

        if self.at_kw("send"):
            self.next()
            chan = self.expect_ident("channel").lexeme
            if self.accept_sym("["):
                payload_t = self.parse_type()
                self.expect_sym("]")
                self.expect_sym(";")
                cont = self.parse_proc()
                return SendType(chan, payload_t, cont, span=span.merge(cont.span))
            if self.accept_sym("{"):
                payload_e = self.parse_exp()
                self.expect_sym("}")
                self.expect_sym(";")
                cont = self.parse_proc()
                return SendIdx(chan, payload_e, cont, span=span.merge(cont.span))
            payload = self.expect_ident("channel").lexeme
            self.expect_sym(";")
            cont = self.parse_proc()
            return SendChan(chan, payload, cont, span=span.merge(cont.span))

        if self.at_kw("assert") or self.at_kw("assume"):
            is_assert = self.next().is_kw("assert")
            chan = self.expect_ident("channel").lexeme
            self.expect_sym("{")
            prop = self.parse_prop()
            self.expect_sym("}")
            self.expect_sym(";")
            cont = self.parse_proc()
            cls = AssertP if is_assert else AssumeP
            return cls(chan, prop, cont, span=span.merge(cont.span))

        if self.at_kw("pay") or self.at_kw("get"):
            is_pay = self.next().is_kw("pay")
            chan = self.expect_ident("channel").lexeme
            self.expect_sym("{")
            amount = self.parse_exp()
            self.expect_sym("}")
            self.expect_sym(";")
            cont = self.parse_proc()
            cls = Pay if is_pay else Get
            return cls(chan, amount, cont, span=span.merge(cont.span))

        if self.at_kw("work") or self.at_kw("delay"):
            is_work = self.next().is_kw("work")
            amount: ArithExp = ONE_E
            if self.accept_sym("{"):
                amount = self.parse_exp()
                self.expect_sym("}")
            self.expect_sym(";")
            cont = self.parse_proc()
            cls = Work if is_work else DelayP
            return cls(amount, cont, span=span.merge(cont.span))

        if self.at_kw("when") or self.at_kw("now"):
            is_when = self.next().is_kw("when")
            chan = self.expect_ident("channel").lexeme
            self.expect_sym(";")
            cont = self.parse_proc()
            cls = When if is_when else Now
            return cls(chan, cont, span=span.merge(cont.span))

        if self.at_kw("impossible"):
            self.next()
            return Impossible(span=span)

        if tok.is_sym("["):  # [a] <- recv x ; P
            self.next()
            var = self.expect_ident("type variable").lexeme
            self.expect_sym("]")
            self.expect_sym("<-")
            self.expect_kw("recv")
            chan = self.expect_ident("channel").lexeme
            self.expect_sym(";")
            self.tyvars.add(var)
            cont = self.parse_proc()
            return RecvType(var, chan, cont, span=span.merge(cont.span))

        if tok.is_sym("{"):  # {n} <- recv x ; P
            self.next()
            var = self.expect_ident("index variable").lexeme
            self.expect_sym("}")
            self.expect_sym("<-")
            self.expect_kw("recv")
            chan = self.expect_ident("channel").lexeme
            self.expect_sym(";")
            cont = self.parse_proc()
            return RecvIdx(var, chan, cont, span=span.merge(cont.span))

        if tok.kind == "ident":
            name = self.next().lexeme
            if self.accept_sym("."):
                label = self.expect_ident("label").lexeme
                self.expect_sym(";")
                cont = self.parse_proc()
                return SendLabel(name, label, cont, span=span.merge(cont.span))
            if self.at_sym("<->"):
                self.next()
                target = self.expect_ident("channel")
                return Forward(name, target.lexeme, span=span.merge(target.span))
            if self.accept_sym("<-"):
                if self.at_kw("recv"):
                    self.next()
                    chan = self.expect_ident("channel").lexeme
                    self.expect_sym(";")
                    cont = self.parse_proc()
                    return RecvChan(name, chan, cont, span=span.merge(cont.span))
                return self.parse_call(name, span)
        self.fail("expected a process expression")

    def parse_call(self, bound: str, span: Span) -> ProcExpr:
        proc = self.expect_ident("process name").lexeme
        targs = []
        iargs = []
        while self.at_sym("["):
            self.next()
            targs.append(self.parse_type())
            self.expect_sym("]")
        while self.at_sym("{"):
            self.next()
            iargs.append(self.parse_exp())
            self.expect_sym("}")
        chans = []
        last_span = span
        while self.peek().kind == "ident":
            tok = self.next()
            chans.append(tok.lexeme)
            last_span = tok.span
        cont = None
        if self.accept_sym(";"):
            cont = self.parse_proc()
            last_span = cont.span
        return Call(bound, proc, tuple(targs), tuple(iargs), tuple(chans), cont,
                    span=span.merge(last_span))

    # -- declarations -------------------------------------------------------

    def parse_params(self) -> tuple[tuple[str, ...], tuple[str, ...], ArithProp]:
        type_params = []
        idx_params = []
        guards: list[ArithProp] = []
        while self.at_sym("["):
            self.next()
            type_params.append(self.expect_ident("type parameter").lexeme)
            self.expect_sym("]")
        while self.at_sym("{"):
            self.next()
            idx_params.append(self.expect_ident("index parameter").lexeme)
            if self.accept_sym("|"):
                guards.append(self.parse_prop())
            self.expect_sym("}")
        return tuple(type_params), tuple(idx_params), conj(*guards)

    def parse_name_inst(self) -> TyName:
        tok = self.expect_ident("type name")
        targs = []
        iargs = []
        while self.at_sym("["):
            self.next()
            targs.append(self.parse_type())
            self.expect_sym("]")
        while self.at_sym("{"):
            self.next()
            iargs.append(self.parse_exp())
            self.expect_sym("}")
        return TyName(tok.lexeme, tuple(targs), tuple(iargs), span=tok.span)

    def parse_program(self, sig: Signature):
        while self.peek().kind != "eof":
            tok = self.peek()
            if self.at_kw("type"):
                self.next()
                name = self.expect_ident("type name").lexeme
                typs, idxs, guard = self.parse_params()
                if not isinstance(guard, PTop):
                    raise ParseError("type parameters cannot carry guards", tok.span)
                self.tyvars = set(typs)
                self.expect_sym("=")
                body = self.parse_type()
                sig.add_type(TypeDef(name, typs, idxs, body, span=tok.span))
            elif self.at_kw("decl"):
                self.next()
                name = self.expect_ident("process name").lexeme
                typs, idxs, guard = self.parse_params()
                self.tyvars = set(typs)
                self.expect_sym(":")
                context = []
                if self.accept_sym("."):
                    pass
                else:
                    while self.at_sym("("):
                        self.next()
                        chan = self.expect_ident("channel").lexeme
                        self.expect_sym(":")
                        context.append((chan, self.parse_type()))
                        self.expect_sym(")")
                potential: ArithExp = Const(0)
                if self.accept_sym("|-"):
                    pass
                elif self.accept_sym("|{"):
                    potential = self.parse_exp()
                    self.expect_sym("}")
                    self.expect_sym("-")
                else:
                    self.fail("expected '|-' or '|{q}-'")
                self.expect_sym("(")
                chan = self.expect_ident("channel").lexeme
                self.expect_sym(":")
                provided = (chan, self.parse_type())
                self.expect_sym(")")
                sig.add_decl(ProcDecl(name, typs, idxs, guard, potential,
                                      tuple(context), provided, span=tok.span))
            elif self.at_kw("proc"):
                self.next()
                provided = self.expect_ident("channel").lexeme
                self.expect_sym("<-")
                name = self.expect_ident("process name").lexeme
                typs, idxs, _ = self.parse_params()
                self.tyvars = set(typs)
                chans = []
                while self.peek().kind == "ident":
                    chans.append(self.next().lexeme)
                self.expect_sym("=")
                body = self.parse_proc()
                sig.add_def(ProcDef(name, typs, idxs, provided, tuple(chans), body,
                                    span=tok.span))
            elif self.at_kw("eqtype"):
                self.next()
                self.tyvars = set()
                left = self.parse_name_inst()
                if self.accept_sym("="):
                    op = "="
                elif self.accept_sym("<="):
                    op = "<="
                else:
                    self.fail("expected '=' or '<='")
                right = self.parse_name_inst()
                sig.eqtypes.append(EqTypeDecl(left, op, right, span=tok.span))
            elif self.at_kw("exec"):
                self.next()
                name = self.expect_ident("process name")
                sig.execs.append(ExecDecl(name.lexeme, span=tok.span.merge(name.span)))
            else:
                self.fail("expected a top-level declaration")


def parse_program(source: str, filename: str = "<input>", defaults=None) -> Signature:
    """Parses a whole program into a signature.

    In declaration and definition bodies the parser tracks which identifiers
    are bound type parameters so bare occurrences become type variables.
    """
    from .core import Options

    sig = Signature()
    sig.options = (defaults or Options()).merged(**parse_pragma(source, filename))
    parser = Parser(tokenize(source, filename), filename)
    parser.parse_program(sig)
    _resolve_tyvars(sig)
    return sig


def _resolve_tyvars(sig: Signature):
    """Rewrites zero-argument type names that refer to bound type parameters
    into type variables (the parser cannot always tell while inside nested
    quantifiers that introduced variables locally)."""
    def fix(t: SessionType, scope: set[str]) -> SessionType:
        def go(t: SessionType) -> SessionType:
            match t:
                case TyName(name, (), ()) if name in scope and name not in sig.type_defs:
                    return TyVar(name, span=t.span)
                case TyName(name, targs, iargs):
                    return TyName(name, tuple(go(a) for a in targs), iargs, span=t.span)
                case IChoice(bs):
                    return IChoice(tuple((k, go(b)) for k, b in bs), span=t.span)
                case EChoice(bs):
                    return EChoice(tuple((k, go(b)) for k, b in bs), span=t.span)
                case Tensor(l, r):
                    return Tensor(go(l), go(r), span=t.span)
                case Lolli(l, r):
                    return Lolli(go(l), go(r), span=t.span)
                case ExistsTy(v, b):
                    return ExistsTy(v, fix(b, scope | {v}), span=t.span)
                case ForallTy(v, b):
                    return ForallTy(v, fix(b, scope | {v}), span=t.span)
                case ExistsIdx(v, b):
                    return ExistsIdx(v, go(b), span=t.span)
                case ForallIdx(v, b):
                    return ForallIdx(v, go(b), span=t.span)
                case AssertT(p, b):
                    return AssertT(p, go(b), span=t.span)
                case AssumeT(p, b):
                    return AssumeT(p, go(b), span=t.span)
                case PayT(e, b):
                    return PayT(e, go(b), span=t.span)
                case GetT(e, b):
                    return GetT(e, go(b), span=t.span)
                case NextT(e, b):
                    return NextT(e, go(b), span=t.span)
                case BoxT(b):
                    return BoxT(go(b), span=t.span)
                case DiamondT(b):
                    return DiamondT(go(b), span=t.span)
                case _:
                    return t

        return go(t)

    def fix_proc(p: ProcExpr, scope: set[str]) -> ProcExpr:
        match p:
            case Call(x, f, targs, iargs, chans, cont):
                new_targs = tuple(fix(a, scope) for a in targs)
                new_cont = fix_proc(cont, scope) if cont is not None else None
                return Call(x, f, new_targs, iargs, chans, new_cont, span=p.span)
            case SendType(c, t, k):
                return SendType(c, fix(t, scope), fix_proc(k, scope), span=p.span)
            case RecvType(v, c, k):
                return RecvType(v, c, fix_proc(k, scope | {v}), span=p.span)
            case Case(c, bs):
                return Case(c, tuple((l, fix_proc(b, scope)) for l, b in bs), span=p.span)
            case SendLabel(c, l, k):
                return SendLabel(c, l, fix_proc(k, scope), span=p.span)
            case SendChan(c, w, k):
                return SendChan(c, w, fix_proc(k, scope), span=p.span)
            case RecvChan(y, c, k):
                return RecvChan(y, c, fix_proc(k, scope), span=p.span)
            case Wait(c, k):
                return Wait(c, fix_proc(k, scope), span=p.span)
            case SendIdx(c, e, k):
                return SendIdx(c, e, fix_proc(k, scope), span=p.span)
            case RecvIdx(v, c, k):
                return RecvIdx(v, c, fix_proc(k, scope), span=p.span)
            case AssertP(c, q, k):
                return AssertP(c, q, fix_proc(k, scope), span=p.span)
            case AssumeP(c, q, k):
                return AssumeP(c, q, fix_proc(k, scope), span=p.span)
            case Pay(c, e, k):
                return Pay(c, e, fix_proc(k, scope), span=p.span)
            case Get(c, e, k):
                return Get(c, e, fix_proc(k, scope), span=p.span)
            case Work(e, k):
                return Work(e, fix_proc(k, scope), span=p.span)
            case DelayP(e, k):
                return DelayP(e, fix_proc(k, scope), span=p.span)
            case When(c, k):
                return When(c, fix_proc(k, scope), span=p.span)
            case Now(c, k):
                return Now(c, fix_proc(k, scope), span=p.span)
            case _:
                return p

    for td in sig.type_defs.values():
        td.body = fix(td.body, set(td.type_params))
    for d in sig.proc_decls.values():
        d.context = tuple((c, fix(t, set(d.type_params))) for c, t in d.context)
        d.provided = (d.provided[0], fix(d.provided[1], set(d.type_params)))
    for d in sig.proc_defs.values():
        d.body = fix_proc(d.body, set(d.type_params))
    for eq in sig.eqtypes:
        ftv = set()
        for t in (eq.left, eq.right):
            for a in t.type_args:
                ftv |= _collect_unknown_names(a, sig)
        eq.left = fix(eq.left, ftv)
        eq.right = fix(eq.right, ftv)


def _collect_unknown_names(t: SessionType, sig: Signature) -> set[str]:
    match t:
        case TyName(name, (), ()) if name not in sig.type_defs:
            return {name}
        case TyName(_, targs, _):
            out = set()
            for a in targs:
                out |= _collect_unknown_names(a, sig)
            return out
        case _:
            return set()
