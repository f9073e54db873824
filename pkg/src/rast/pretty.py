"""Pretty printer.  Output reparses to an alpha-equivalent tree."""

from __future__ import annotations

from .core import (Add, ArithExp, ArithProp, AssertP, AssertT, AssumeP, AssumeT, BoxT, Call, Case,
                   Close, Const, DelayP, DiamondT, EChoice, ExistsIdx, ExistsTy, ForallIdx,
                   ForallTy, Forward, Get, GetT, IChoice, IdxVar, Impossible, Lolli, Mul, NextT,
                   Now, PAnd, Pay, PayT, PBot, PDiv, PEq, PExists, PForall, PGt, PNot, POr,
                   ProcExpr, PTop, RecvChan, RecvIdx, RecvType, SendChan, SendIdx, SendLabel,
                   SendType, SessionType, Signature, Sub, Tensor, TyName, TyVar, Unit, Wait, When,
                   Work)

# -- index expressions ------------------------------------------------------


def pretty_exp(e: ArithExp, level: int = 0) -> str:
    """level 0: sums, level 1: products, level 2: atoms."""
    match e:
        case Const(v):
            return str(v)
        case IdxVar(n):
            return n
        case Add(l, r):
            s = f"{pretty_exp(l, 0)} + {pretty_exp(r, 1)}"
            return f"({s})" if level > 0 else s
        case Sub(l, r):
            s = f"{pretty_exp(l, 0)} - {pretty_exp(r, 1)}"
            return f"({s})" if level > 0 else s
        case Mul(l, r):
            s = f"{pretty_exp(l, 1)} * {pretty_exp(r, 2)}"
            return f"({s})" if level > 1 else s
    raise AssertionError(e)


def pretty_prop(p: ArithProp, level: int = 0) -> str:
    """level 0: disjunctions, level 1: conjunctions, level 2: atoms."""
    match p:
        case PEq(l, r):
            return f"{pretty_exp(l)} = {pretty_exp(r)}"
        case PGt(l, r):
            return f"{pretty_exp(l)} > {pretty_exp(r)}"
        case PTop():
            return "true"
        case PBot():
            return "false"
        case POr(l, r):
            s = f"{pretty_prop(l, 0)} \\/ {pretty_prop(r, 1)}"
            return f"({s})" if level > 0 else s
        case PAnd(l, r):
            s = f"{pretty_prop(l, 1)} /\\ {pretty_prop(r, 2)}"
            return f"({s})" if level > 1 else s
        case PNot(b):
            return f"~({pretty_prop(b, 0)})"
        case PExists(v, b):
            s = f"?{v}. {pretty_prop(b, 0)}"
            return f"({s})" if level > 0 else s
        case PForall(v, b):
            s = f"!{v}. {pretty_prop(b, 0)}"
            return f"({s})" if level > 0 else s
        case PDiv(d, e):
            # internal atom, shown only in diagnostics
            return f"{d} divides ({pretty_exp(e)})"
    raise AssertionError(p)


# -- types --------------------------------------------------------------------

_PREFIXABLE = (ExistsTy, ForallTy, ExistsIdx, ForallIdx, AssertT, AssumeT,
               PayT, GetT, NextT, BoxT, DiamondT)


def _prefix_text(t: SessionType) -> str:
    match t:
        case ExistsTy(v, _):
            return f"?[{v}]. "
        case ForallTy(v, _):
            return f"![{v}]. "
        case ExistsIdx(v, _):
            return f"?{v}. "
        case ForallIdx(v, _):
            return f"!{v}. "
        case AssertT(p, _):
            return f"?{{{pretty_prop(p)}}}. "
        case AssumeT(p, _):
            return f"!{{{pretty_prop(p)}}}. "
        case PayT(Const(1), _):
            return "|> "
        case PayT(e, _):
            return f"|{{{pretty_exp(e)}}}> "
        case GetT(Const(1), _):
            return "<| "
        case GetT(e, _):
            return f"<{{{pretty_exp(e)}}}| "
        case NextT(Const(1), _):
            return "() "
        case NextT(e, _):
            return f"({{{pretty_exp(e)}}}) "
        case BoxT(_):
            return "[] "
        case DiamondT(_):
            return "<> "
    raise AssertionError(t)


def pretty_type(t: SessionType, level: int = 0) -> str:
    """level 0: full type, level 1: arrow operand, level 2: tensor operand."""
    if isinstance(t, _PREFIXABLE):
        body = t.body
        s = _prefix_text(t) + pretty_type(body, 0)
        return f"({s})" if level > 0 else s
    match t:
        case Lolli(l, r):
            s = f"{pretty_type(l, 1)} -o {pretty_type(r, 0)}"
            return f"({s})" if level > 0 else s
        case Tensor(l, r):
            s = f"{pretty_type(l, 2)} * {pretty_type(r, 1)}"
            return f"({s})" if level > 1 else s
        case IChoice(bs):
            inner = ", ".join(f"{k} : {pretty_type(b, 0)}" for k, b in bs)
            return "+{" + inner + "}"
        case EChoice(bs):
            inner = ", ".join(f"{k} : {pretty_type(b, 0)}" for k, b in bs)
            return "&{" + inner + "}"
        case Unit():
            return "1"
        case TyVar(n):
            return n
        case TyName(n, targs, iargs):
            out = n
            for a in targs:
                out += f"[{pretty_type(a, 0)}]"
            for e in iargs:
                out += f"{{{pretty_exp(e)}}}"
            return out
    raise AssertionError(t)


# -- processes -----------------------------------------------------------------


def pretty_proc(p: ProcExpr, indent: int = 0) -> str:
    pad = "  " * indent

    def stmt(text: str, cont: ProcExpr) -> str:
        return f"{text} ;\n{pad}{pretty_proc(cont, indent)}"

    match p:
        case SendLabel(c, k, cont):
            return stmt(f"{c}.{k}", cont)
        case Case(c, bs):
            arm_pad = "  " * (indent + 1)
            arms = []
            for label, body in bs:
                arms.append(f"{label} =>\n{arm_pad}  {pretty_proc(body, indent + 2)}")
            sep = f"\n{arm_pad}| "
            return f"case {c} ({sep.join(arms)} )"
        case SendChan(c, w, cont):
            return stmt(f"send {c} {w}", cont)
        case RecvChan(y, c, cont):
            return stmt(f"{y} <- recv {c}", cont)
        case Close(c):
            return f"close {c}"
        case Wait(c, cont):
            return stmt(f"wait {c}", cont)
        case Forward(c, d):
            return f"{c} <-> {d}"
        case Call(x, f, targs, iargs, chans, cont):
            head = f"{x} <- {f}"
            for a in targs:
                head += f"[{pretty_type(a)}]"
            for e in iargs:
                head += f"{{{pretty_exp(e)}}}"
            for ch in chans:
                head += f" {ch}"
            if cont is None:
                return head
            return stmt(head, cont)
        case SendType(c, t, cont):
            return stmt(f"send {c} [{pretty_type(t)}]", cont)
        case RecvType(v, c, cont):
            return stmt(f"[{v}] <- recv {c}", cont)
        case SendIdx(c, e, cont):
            return stmt(f"send {c} {{{pretty_exp(e)}}}", cont)
        case RecvIdx(v, c, cont):
            return stmt(f"{{{v}}} <- recv {c}", cont)
        case AssertP(c, q, cont):
            return stmt(f"assert {c} {{{pretty_prop(q)}}}", cont)
        case AssumeP(c, q, cont):
            return stmt(f"assume {c} {{{pretty_prop(q)}}}", cont)
        case Pay(c, e, cont):
            return stmt(f"pay {c} {{{pretty_exp(e)}}}", cont)
        case Get(c, e, cont):
            return stmt(f"get {c} {{{pretty_exp(e)}}}", cont)
        case Work(e, cont):
            return stmt(f"work {{{pretty_exp(e)}}}", cont)
        case DelayP(e, cont):
            return stmt(f"delay {{{pretty_exp(e)}}}", cont)
        case When(c, cont):
            return stmt(f"when {c}", cont)
        case Now(c, cont):
            return stmt(f"now {c}", cont)
        case Impossible():
            return "impossible"
    raise AssertionError(p)


def _params_text(type_params, idx_params, guard=None) -> str:
    out = "".join(f"[{a}]" for a in type_params)
    guard_text = None
    if guard is not None and not isinstance(guard, PTop):
        guard_text = pretty_prop(guard)
    for i, n in enumerate(idx_params):
        if guard_text is not None and i == len(idx_params) - 1:
            out += f"{{{n} | {guard_text}}}"
        else:
            out += f"{{{n}}}"
    return out


def pretty_signature(sig: Signature, options_line: bool = True) -> str:
    """Renders a signature back to concrete syntax (internal names omitted)."""
    lines = []
    if options_line:
        o = sig.options
        lines.append(f"#options --syntax={o.syntax} --work={o.work} --time={o.time}")
        lines.append("")
    for td in sig.type_defs.values():
        if td.internal:
            continue
        head = td.name + _params_text(td.type_params, td.idx_params)
        lines.append(f"type {head} = {pretty_type(td.body)}")
    lines.append("")
    for name, decl in sig.proc_decls.items():
        head = name + _params_text(decl.type_params, decl.idx_params, decl.guard)
        ctx = " ".join(f"({c} : {pretty_type(t)})" for c, t in decl.context) or "."
        pot = "|-"
        if decl.potential != Const(0):
            pot = f"|{{{pretty_exp(decl.potential)}}}-"
        pc, pt = decl.provided
        lines.append(f"decl {head} : {ctx} {pot} ({pc} : {pretty_type(pt)})")
        d = sig.proc_defs.get(name)
        if d is not None:
            head_d = name + _params_text(d.type_params, d.idx_params)
            args = "".join(f" {c}" for c in d.chan_args)
            lines.append(f"proc {d.provided} <- {head_d}{args} =")
            lines.append("  " + pretty_proc(d.body, 1))
        lines.append("")
    for eq in sig.eqtypes:
        lines.append(f"eqtype {pretty_type(eq.left)} {eq.op} {pretty_type(eq.right)}")
    for ex in sig.execs:
        lines.append(f"exec {ex.proc}")
    return "\n".join(lines) + "\n"
