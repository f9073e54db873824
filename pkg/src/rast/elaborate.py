"""Signature elaboration: validity checking, internal names for type
subexpressions, variance of type parameters, and type compression for
diagnostics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .arith import Solver
from .core import (Add, ArithExp, ArithProp, AssertT, AssumeT, BoxT, Call, Case, Close, Const,
                   EqTypeDecl, ProcDecl, ProcDef,
                   DelayP, DiamondT, EChoice, ExistsIdx, ExistsTy, ForallIdx, ForallTy, Forward,
                   Get, GetT, IChoice, IdxVar, Lolli, NextT, PayT, PGt, ProcExpr, RecvChan,
                   RecvIdx, RecvType, SendChan, SendIdx, SendLabel, SendType, SessionType,
                   Signature, Tensor, TyName, TypeDef, TyVar, Unit, Wait, When, Now, Pay, AssertP,
                   AssumeP, Work, Impossible, exp_free_vars, prop_free_vars, type_free_idx_vars,
                   type_free_ty_vars, conj, subst_type, subst_exp, proc_channels, ZERO, TOP)
from .errors import Reporter, Span, ValidityError
from .pretty import pretty_exp, pretty_type

VARIANCES = ("nonvariant", "covariant", "contravariant", "bivariant")


def _join(a: str, b: str) -> str:
    if a == b or b == "nonvariant":
        return a
    if a == "nonvariant":
        return b
    return "bivariant"


@dataclass
class Elaboration:
    sig: Signature
    # internal name -> (user name, internal-slot -> user-slot permutations)
    alias: dict[str, tuple[str, tuple[int, ...], tuple[int, ...]]] = field(default_factory=dict)
    variance: dict[str, list[str]] = field(default_factory=dict)
    solver: Solver = field(default_factory=Solver)

    def variance_of(self, name: str, pos: int) -> str:
        table = self.variance.get(name)
        if table is None or pos >= len(table):
            return "bivariant"
        return table[pos]


# ---------------------------------------------------------------------------
# Validity checking

def validate_signature(sig: Signature, reporter: Reporter | None = None,
                       solver: Solver | None = None) -> Reporter:
    """Checks the whole signature, reporting as many violations as possible."""
    rep = reporter or Reporter()
    solver = solver or Solver()

    for td in sig.type_defs.values():
        if td.internal:
            continue
        if isinstance(td.body, (TyName, TyVar)):
            rep.error(f"type '{td.name}' is not contractive: its body must not be "
                      f"a type name", td.span)
            continue
        stray_ty = type_free_ty_vars(td.body) - set(td.type_params)
        for v in sorted(stray_ty):
            rep.error(f"type '{td.name}' mentions unbound type variable '{v}'", td.span)
        stray_idx = type_free_idx_vars(td.body) - set(td.idx_params)
        for v in sorted(stray_idx):
            rep.error(f"type '{td.name}' mentions unbound index variable '{v}'", td.span)
        _check_type(td.body, set(td.idx_params), TOP, sig, rep, solver)

    for d in sig.proc_decls.values():
        vset = set(d.idx_params)
        chans = [c for c, _ in d.context] + [d.provided[0]]
        if len(set(chans)) != len(chans):
            rep.error(f"declaration '{d.name}' repeats a channel name", d.span)
        for v in sorted(prop_free_vars(d.guard) - vset):
            rep.error(f"declaration '{d.name}' guard mentions unbound '{v}'", d.span)
        for v in sorted(exp_free_vars(d.potential) - vset):
            rep.error(f"declaration '{d.name}' potential mentions unbound '{v}'", d.span)
        _obligation(d.potential, vset, d.guard, sig, rep, solver, "declared potential")
        for _, t in list(d.context) + [d.provided]:
            for v in sorted(type_free_ty_vars(t) - set(d.type_params)):
                rep.error(f"declaration '{d.name}' mentions unbound type variable '{v}'",
                          t.span)
            for v in sorted(type_free_idx_vars(t) - vset):
                rep.error(f"declaration '{d.name}' mentions unbound index variable '{v}'",
                          t.span)
            _check_type(t, vset, d.guard, sig, rep, solver)

    for pd in sig.proc_defs.values():
        decl = sig.proc_decls.get(pd.name)
        if decl is None:
            rep.error(f"process '{pd.name}' has no declaration", pd.span)
            continue
        if pd.type_params != decl.type_params or pd.idx_params != decl.idx_params:
            rep.error(f"process '{pd.name}' parameters do not match its declaration",
                      pd.span)
        if len(pd.chan_args) != len(decl.context):
            rep.error(f"process '{pd.name}' takes {len(pd.chan_args)} channel(s) but its "
                      f"declaration lists {len(decl.context)}", pd.span)
            continue
        bound = set(pd.chan_args) | {pd.provided}
        _check_proc_scope(pd.body, bound, sig, rep)

    for name, decl in sig.proc_decls.items():
        if name not in sig.proc_defs:
            rep.error(f"process '{name}' is declared but never defined", decl.span)

    for eq in sig.eqtypes:
        for side in (eq.left, eq.right):
            _check_type(side, type_free_idx_vars(side), TOP, sig, rep, solver)

    for ex in sig.execs:
        decl = sig.proc_decls.get(ex.proc)
        if decl is None:
            rep.error(f"exec target '{ex.proc}' is not declared", ex.span)
            continue
        if decl.type_params or decl.idx_params:
            rep.error(f"exec target '{ex.proc}' must not take type or index parameters",
                      ex.span)
        if decl.context:
            rep.error(f"exec target '{ex.proc}' must have an empty context", ex.span)
    return rep


def _obligation(e: ArithExp, vset: set[str], constraint: ArithProp, sig, rep, solver,
                what: str, span: Span | None = None):
    verdict = solver.entails(vset | prop_free_vars(constraint) | exp_free_vars(e),
                             constraint, PGt(Add(e, Const(1)), ZERO))
    if verdict.kind == "invalid":
        rep.error(f"{what} '{pretty_exp(e)}' may be negative "
                  f"(e.g. {_assignment_text(verdict.assignment)})",
                  span or e.span)


def _assignment_text(assignment: dict[str, int] | None) -> str:
    if not assignment:
        return "always"
    return ", ".join(f"{v} = {n}" for v, n in sorted(assignment.items()))


def _check_type(t: SessionType, vset: set[str], constraint: ArithProp, sig: Signature,
                rep: Reporter, solver: Solver):
    """Arity agreement, duplicate labels, and nonnegativity of every index
    argument, potential, and delay, under the constraints in scope."""
    match t:
        case IChoice(bs) | EChoice(bs):
            labels = [k for k, _ in bs]
            for k in sorted({k for k in labels if labels.count(k) > 1}):
                rep.error(f"duplicate label '{k}' in choice", t.span)
            for _, b in bs:
                _check_type(b, vset, constraint, sig, rep, solver)
        case Tensor(l, r) | Lolli(l, r):
            _check_type(l, vset, constraint, sig, rep, solver)
            _check_type(r, vset, constraint, sig, rep, solver)
        case Unit() | TyVar():
            pass
        case TyName(name, targs, iargs):
            td = sig.type_defs.get(name)
            if td is None:
                rep.error(f"undefined type '{name}'", t.span)
                return
            if len(td.type_params) != len(targs) or len(td.idx_params) != len(iargs):
                rep.error(
                    f"type '{name}' expects {len(td.type_params)} type and "
                    f"{len(td.idx_params)} index argument(s), got {len(targs)} "
                    f"and {len(iargs)}", t.span)
            for a in targs:
                _check_type(a, vset, constraint, sig, rep, solver)
            for e in iargs:
                _obligation(e, vset, constraint, sig, rep, solver,
                            "index argument", t.span)
        case ExistsIdx(v, b) | ForallIdx(v, b):
            _check_type(b, vset | {v}, constraint, sig, rep, solver)
        case ExistsTy(_, b) | ForallTy(_, b):
            _check_type(b, vset, constraint, sig, rep, solver)
        case AssertT(p, b) | AssumeT(p, b):
            _check_type(b, vset, conj(constraint, p), sig, rep, solver)
        case PayT(e, b) | GetT(e, b):
            _obligation(e, vset, constraint, sig, rep, solver, "potential", t.span)
            _check_type(b, vset, constraint, sig, rep, solver)
        case NextT(e, b):
            _obligation(e, vset, constraint, sig, rep, solver, "delay", t.span)
            _check_type(b, vset, constraint, sig, rep, solver)
        case BoxT(b) | DiamondT(b):
            _check_type(b, vset, constraint, sig, rep, solver)
        case _:
            raise AssertionError(t)


def _check_proc_scope(p: ProcExpr, bound: set[str], sig: Signature, rep: Reporter):
    for c in sorted(proc_channels(p) - bound):
        rep.error(f"channel '{c}' is not bound", p.span)
    _check_proc_calls(p, sig, rep)


def _check_proc_calls(p: ProcExpr, sig: Signature, rep: Reporter):
    match p:
        case Call(_, f, targs, iargs, chans, cont):
            decl = sig.proc_decls.get(f)
            if decl is None:
                rep.error(f"call to undeclared process '{f}'", p.span)
            else:
                if len(targs) != len(decl.type_params) or len(iargs) != len(decl.idx_params):
                    rep.error(f"call to '{f}' instantiates {len(targs)} type and "
                              f"{len(iargs)} index parameter(s); expected "
                              f"{len(decl.type_params)} and {len(decl.idx_params)}", p.span)
                if len(chans) != len(decl.context):
                    rep.error(f"call to '{f}' passes {len(chans)} channel(s); expected "
                              f"{len(decl.context)}", p.span)
            if cont is not None:
                _check_proc_calls(cont, sig, rep)
        case Case(_, bs):
            for _, b in bs:
                _check_proc_calls(b, sig, rep)
        case SendLabel(_, _, k) | SendChan(_, _, k) | RecvChan(_, _, k) | Wait(_, k) \
                | SendType(_, _, k) | RecvType(_, _, k) | SendIdx(_, _, k) \
                | RecvIdx(_, _, k) | AssertP(_, _, k) | AssumeP(_, _, k) | Pay(_, _, k) \
                | Get(_, _, k) | Work(_, k) | DelayP(_, k) | When(_, k) | Now(_, k):
            _check_proc_calls(k, sig, rep)
        case _:
            pass


# ---------------------------------------------------------------------------
# Internal names

_ATOMIC = (Unit, TyVar)


class _Interner:
    """Assigns internal definitions to structural type subexpressions,
    sharing syntactically identical ones up to parameter renaming."""

    def __init__(self, sig: Signature):
        self.sig = sig
        self.table: dict[str, str] = {}
        self.counter = itertools.count()

    def intern(self, t: SessionType) -> SessionType:
        """Returns an equivalent type that is a name instantiation, variable,
        or unit."""
        if isinstance(t, _ATOMIC):
            return t
        if isinstance(t, TyName):
            return TyName(t.name,
                          tuple(self.intern(a) for a in t.type_args),
                          t.idx_args, span=t.span)
        body = self.shallow(t)
        key, ty_order, idx_order = _canonical(body)
        name = self.table.get(key)
        if name is None:
            name = f"%{next(self.counter)}"
            self.table[key] = name
            self.sig.type_defs[name] = TypeDef(
                name, tuple(f"%t{i}" for i in range(len(ty_order))),
                tuple(f"%i{i}" for i in range(len(idx_order))),
                subst_type(body,
                           {v: TyVar(f"%t{i}") for i, v in enumerate(ty_order)},
                           {v: IdxVar(f"%i{i}") for i, v in enumerate(idx_order)}),
                span=t.span, internal=True)
        return TyName(name,
                      tuple(TyVar(v) for v in ty_order),
                      tuple(IdxVar(v) for v in idx_order), span=t.span)

    def shallow(self, t: SessionType) -> SessionType:
        """Rebuilds one constructor level with interned children."""
        match t:
            case IChoice(bs):
                return IChoice(tuple((k, self.intern(b)) for k, b in bs), span=t.span)
            case EChoice(bs):
                return EChoice(tuple((k, self.intern(b)) for k, b in bs), span=t.span)
            case Tensor(l, r):
                return Tensor(self.intern(l), self.intern(r), span=t.span)
            case Lolli(l, r):
                return Lolli(self.intern(l), self.intern(r), span=t.span)
            case ExistsTy(v, b):
                return ExistsTy(v, self.intern(b), span=t.span)
            case ForallTy(v, b):
                return ForallTy(v, self.intern(b), span=t.span)
            case ExistsIdx(v, b):
                return ExistsIdx(v, self.intern(b), span=t.span)
            case ForallIdx(v, b):
                return ForallIdx(v, self.intern(b), span=t.span)
            case AssertT(p, b):
                return AssertT(p, self.intern(b), span=t.span)
            case AssumeT(p, b):
                return AssumeT(p, self.intern(b), span=t.span)
            case PayT(e, b):
                return PayT(e, self.intern(b), span=t.span)
            case GetT(e, b):
                return GetT(e, self.intern(b), span=t.span)
            case NextT(e, b):
                return NextT(e, self.intern(b), span=t.span)
            case BoxT(b):
                return BoxT(self.intern(b), span=t.span)
            case DiamondT(b):
                return DiamondT(self.intern(b), span=t.span)
        raise AssertionError(t)


def _canonical(t: SessionType) -> tuple[str, list[str], list[str]]:
    """Canonical text of a type up to renaming of free variables, together
    with the free type and index variables in first-occurrence order."""
    ty_order: list[str] = []
    idx_order: list[str] = []
    ty_map: dict[str, str] = {}
    idx_map: dict[str, str] = {}
    bound_counter = itertools.count()

    def canon_ty(v: str, bound: dict[str, str]) -> str:
        if v in bound:
            return bound[v]
        if v not in ty_map:
            ty_map[v] = f"@t{len(ty_order)}"
            ty_order.append(v)
        return ty_map[v]

    def canon_idx(v: str, bound: dict[str, str]) -> str:
        if v in bound:
            return bound[v]
        if v not in idx_map:
            idx_map[v] = f"@i{len(idx_order)}"
            idx_order.append(v)
        return idx_map[v]

    def exp(e: ArithExp, bound) -> str:
        from .core import Add as A_, Mul as M_, Sub as S_
        match e:
            case Const(v):
                return str(v)
            case IdxVar(n):
                return canon_idx(n, bound)
            case A_(l, r):
                return f"({exp(l, bound)}+{exp(r, bound)})"
            case S_(l, r):
                return f"({exp(l, bound)}-{exp(r, bound)})"
            case M_(l, r):
                return f"({exp(l, bound)}*{exp(r, bound)})"
        raise AssertionError(e)

    def prop(p: ArithProp, bound) -> str:
        from .core import (PAnd as An, PBot as Bo, PDiv as Dv, PEq as Eq, PExists as Ex,
                           PForall as Fa, PGt as Gt, PNot as No, POr as Or, PTop as To)
        match p:
            case Eq(l, r):
                return f"({exp(l, bound)}={exp(r, bound)})"
            case Gt(l, r):
                return f"({exp(l, bound)}>{exp(r, bound)})"
            case To():
                return "T"
            case Bo():
                return "F"
            case An(l, r):
                return f"({prop(l, bound)}&{prop(r, bound)})"
            case Or(l, r):
                return f"({prop(l, bound)}|{prop(r, bound)})"
            case No(b):
                return f"~{prop(b, bound)}"
            case Ex(v, b) | Fa(v, b):
                q = "E" if isinstance(p, Ex) else "A"
                fresh = f"@b{next(bound_counter)}"
                return f"({q}{fresh}.{prop(b, {**bound, v: fresh})})"
            case Dv(d, e):
                return f"({d}|{exp(e, bound)})"
        raise AssertionError(p)

    def ty(t: SessionType, bound) -> str:
        match t:
            case IChoice(bs):
                return "+{" + ",".join(f"{k}:{ty(b, bound)}" for k, b in bs) + "}"
            case EChoice(bs):
                return "&{" + ",".join(f"{k}:{ty(b, bound)}" for k, b in bs) + "}"
            case Tensor(l, r):
                return f"({ty(l, bound)}*{ty(r, bound)})"
            case Lolli(l, r):
                return f"({ty(l, bound)}-o{ty(r, bound)})"
            case Unit():
                return "1"
            case TyVar(n):
                return canon_ty(n, bound)
            case TyName(n, targs, iargs):
                args = "".join(f"[{ty(a, bound)}]" for a in targs)
                args += "".join(f"{{{exp(e, bound)}}}" for e in iargs)
                return n + args
            case ExistsTy(v, b) | ForallTy(v, b):
                q = "Et" if isinstance(t, ExistsTy) else "At"
                fresh = f"@b{next(bound_counter)}"
                return f"({q}{fresh}.{ty(b, {**bound, v: fresh})})"
            case ExistsIdx(v, b) | ForallIdx(v, b):
                q = "Ei" if isinstance(t, ExistsIdx) else "Ai"
                fresh = f"@b{next(bound_counter)}"
                return f"({q}{fresh}.{ty(b, {**bound, v: fresh})})"
            case AssertT(p, b):
                return f"(?{prop(p, bound)}.{ty(b, bound)})"
            case AssumeT(p, b):
                return f"(!{prop(p, bound)}.{ty(b, bound)})"
            case PayT(e, b):
                return f"(pay{exp(e, bound)}.{ty(b, bound)})"
            case GetT(e, b):
                return f"(get{exp(e, bound)}.{ty(b, bound)})"
            case NextT(e, b):
                return f"(next{exp(e, bound)}.{ty(b, bound)})"
            case BoxT(b):
                return f"(box.{ty(b, bound)})"
            case DiamondT(b):
                return f"(dia.{ty(b, bound)})"
        raise AssertionError(t)

    key = ty(t, {})
    return key, ty_order, idx_order


def assign_internal_names(sig: Signature) -> Elaboration:
    """Rewrites the signature so every structural subexpression reachable
    from a declaration is bound to an internal definition parameterized over
    its free variables; syntactically identical subexpressions (up to
    renaming) share one name."""
    interner = _Interner(sig)
    alias: dict[str, tuple[str, tuple[int, ...], tuple[int, ...]]] = {}

    for td in list(sig.type_defs.values()):
        if td.internal:
            continue
        named = interner.intern(td.body)
        if isinstance(named, TyName) and named.name.startswith("%"):
            # args here are the definition's own parameters in the internal
            # order; record the permutation when it covers every parameter
            ty_perm = tuple(td.type_params.index(a.name) for a in named.type_args
                            if isinstance(a, TyVar) and a.name in td.type_params)
            idx_perm = tuple(td.idx_params.index(e.name) for e in named.idx_args
                             if isinstance(e, IdxVar) and e.name in td.idx_params)
            if (len(ty_perm) == len(named.type_args) == len(td.type_params)
                    and len(idx_perm) == len(named.idx_args) == len(td.idx_params)):
                alias.setdefault(named.name, (td.name, ty_perm, idx_perm))
            internal_td = sig.type_defs[named.name]
            td.body = subst_type(
                internal_td.body,
                {p: a for p, a in zip(internal_td.type_params, named.type_args)},
                {p: a for p, a in zip(internal_td.idx_params, named.idx_args)})
        else:
            td.body = named

    for d in sig.proc_decls.values():
        d.context = tuple((c, interner.intern(t)) for c, t in d.context)
        d.provided = (d.provided[0], interner.intern(d.provided[1]))

    for pd in sig.proc_defs.values():
        pd.body = _intern_proc(pd.body, interner)

    for eq in sig.eqtypes:
        eq.left = TyName(eq.left.name, tuple(interner.intern(a) for a in eq.left.type_args),
                         eq.left.idx_args, span=eq.left.span)
        eq.right = TyName(eq.right.name, tuple(interner.intern(a) for a in eq.right.type_args),
                          eq.right.idx_args, span=eq.right.span)

    return Elaboration(sig=sig, alias=alias)


def _intern_proc(p: ProcExpr, interner: _Interner) -> ProcExpr:
    match p:
        case Call(x, f, targs, iargs, chans, cont):
            return Call(x, f, tuple(interner.intern(a) for a in targs), iargs, chans,
                        _intern_proc(cont, interner) if cont is not None else None,
                        span=p.span)
        case SendType(c, t, k):
            return SendType(c, interner.intern(t), _intern_proc(k, interner), span=p.span)
        case Case(c, bs):
            return Case(c, tuple((l, _intern_proc(b, interner)) for l, b in bs), span=p.span)
        case SendLabel(c, l, k):
            return SendLabel(c, l, _intern_proc(k, interner), span=p.span)
        case SendChan(c, w, k):
            return SendChan(c, w, _intern_proc(k, interner), span=p.span)
        case RecvChan(y, c, k):
            return RecvChan(y, c, _intern_proc(k, interner), span=p.span)
        case Wait(c, k):
            return Wait(c, _intern_proc(k, interner), span=p.span)
        case RecvType(v, c, k):
            return RecvType(v, c, _intern_proc(k, interner), span=p.span)
        case SendIdx(c, e, k):
            return SendIdx(c, e, _intern_proc(k, interner), span=p.span)
        case RecvIdx(v, c, k):
            return RecvIdx(v, c, _intern_proc(k, interner), span=p.span)
        case AssertP(c, q, k):
            return AssertP(c, q, _intern_proc(k, interner), span=p.span)
        case AssumeP(c, q, k):
            return AssumeP(c, q, _intern_proc(k, interner), span=p.span)
        case Pay(c, e, k):
            return Pay(c, e, _intern_proc(k, interner), span=p.span)
        case Get(c, e, k):
            return Get(c, e, _intern_proc(k, interner), span=p.span)
        case Work(e, k):
            return Work(e, _intern_proc(k, interner), span=p.span)
        case DelayP(e, k):
            return DelayP(e, _intern_proc(k, interner), span=p.span)
        case When(c, k):
            return When(c, _intern_proc(k, interner), span=p.span)
        case Now(c, k):
            return Now(c, _intern_proc(k, interner), span=p.span)
        case _:
            return p


# ---------------------------------------------------------------------------
# Variance

def compute_variance(sig: Signature) -> dict[str, list[str]]:
    """Occurrence-polarity fixed point over all definitions, starting from
    nonvariant.  Only the left argument of -o flips polarity."""
    table = {name: ["nonvariant"] * len(td.type_params)
             for name, td in sig.type_defs.items()}

    def walk(t: SessionType, polarity: int, params: dict[str, int], name: str) -> bool:
        changed = False
        match t:
            case IChoice(bs) | EChoice(bs):
                for _, b in bs:
                    changed |= walk(b, polarity, params, name)
            case Tensor(l, r):
                changed |= walk(l, polarity, params, name)
                changed |= walk(r, polarity, params, name)
            case Lolli(l, r):
                changed |= walk(l, -polarity, params, name)
                changed |= walk(r, polarity, params, name)
            case Unit():
                pass
            case TyVar(v):
                if v in params:
                    pos = params[v]
                    contrib = "covariant" if polarity > 0 else "contravariant"
                    new = _join(table[name][pos], contrib)
                    if new != table[name][pos]:
                        table[name][pos] = new
                        changed = True
            case TyName(n, targs, _):
                slots = table.get(n, [])
                for i, arg in enumerate(targs):
                    w = slots[i] if i < len(slots) else "bivariant"
                    if w in ("covariant", "bivariant"):
                        changed |= walk(arg, polarity, params, name)
                    if w in ("contravariant", "bivariant"):
                        changed |= walk(arg, -polarity, params, name)
            case ExistsTy(v, b) | ForallTy(v, b):
                inner = {k: p for k, p in params.items() if k != v}
                changed |= walk(b, polarity, inner, name)
            case ExistsIdx(_, b) | ForallIdx(_, b) | AssertT(_, b) | AssumeT(_, b) \
                    | PayT(_, b) | GetT(_, b) | NextT(_, b) | BoxT(b) | DiamondT(b):
                changed |= walk(b, polarity, params, name)
            case _:
                raise AssertionError(t)
        return changed

    changed = True
    while changed:
        changed = False
        for name, td in sig.type_defs.items():
            params = {v: i for i, v in enumerate(td.type_params)}
            if params:
                changed |= walk(td.body, 1, params, name)
    return table


# ---------------------------------------------------------------------------
# Type compression

def match_type(pattern: SessionType, t: SessionType, ty_params: set[str],
               idx_params: set[str],
               tyb: dict[str, SessionType] | None = None,
               idxb: dict[str, ArithExp] | None = None):
    """One-sided syntactic matching: variables among the pattern's parameters
    bind to the corresponding pieces of t.  Returns (tyb, idxb) or None."""
    tyb = dict(tyb or {})
    idxb = dict(idxb or {})

    def exp(p: ArithExp, e: ArithExp) -> bool:
        from .core import Add as A_, Mul as M_, Sub as S_
        match (p, e):
            case (IdxVar(v), _) if v in idx_params:
                if v in idxb:
                    return idxb[v] == e
                idxb[v] = e
                return True
            case (IdxVar(v), IdxVar(w)):
                return v == w
            case (Const(a), Const(b)):
                return a == b
            case (A_(l1, r1), A_(l2, r2)) | (S_(l1, r1), S_(l2, r2)) | (M_(l1, r1), M_(l2, r2)):
                return exp(l1, l2) and exp(r1, r2)
        return False

    def prop(p: ArithProp, q: ArithProp) -> bool:
        from .core import (PAnd as An, PEq as Eq, PExists as Ex, PForall as Fa, PGt as Gt,
                           PNot as No, POr as Or)
        match (p, q):
            case (Eq(l1, r1), Eq(l2, r2)) | (Gt(l1, r1), Gt(l2, r2)):
                return exp(l1, l2) and exp(r1, r2)
            case (An(l1, r1), An(l2, r2)) | (Or(l1, r1), Or(l2, r2)):
                return prop(l1, l2) and prop(r1, r2)
            case (No(a), No(b)):
                return prop(a, b)
            case (Ex(v1, b1), Ex(v2, b2)) | (Fa(v1, b1), Fa(v2, b2)):
                return v1 == v2 and prop(b1, b2)
            case _:
                return p == q

    def ty(p: SessionType, t: SessionType) -> bool:
        match (p, t):
            case (TyVar(v), _) if v in ty_params:
                if v in tyb:
                    return tyb[v] == t
                tyb[v] = t
                return True
            case (TyVar(v), TyVar(w)):
                return v == w
            case (Unit(), Unit()):
                return True
            case (IChoice(bs1), IChoice(bs2)) | (EChoice(bs1), EChoice(bs2)):
                return len(bs1) == len(bs2) and all(
                    k1 == k2 and ty(b1, b2)
                    for (k1, b1), (k2, b2) in zip(bs1, bs2))
            case (Tensor(l1, r1), Tensor(l2, r2)) | (Lolli(l1, r1), Lolli(l2, r2)):
                return ty(l1, l2) and ty(r1, r2)
            case (TyName(n1, t1, i1), TyName(n2, t2, i2)):
                return (n1 == n2 and len(t1) == len(t2) and len(i1) == len(i2)
                        and all(ty(a, b) for a, b in zip(t1, t2))
                        and all(exp(a, b) for a, b in zip(i1, i2)))
            case (ExistsTy(v1, b1), ExistsTy(v2, b2)) | (ForallTy(v1, b1), ForallTy(v2, b2)):
                return v1 == v2 and ty(b1, b2)
            case (ExistsIdx(v1, b1), ExistsIdx(v2, b2)) | (ForallIdx(v1, b1), ForallIdx(v2, b2)):
                return v1 == v2 and ty(b1, b2)
            case (AssertT(p1, b1), AssertT(p2, b2)) | (AssumeT(p1, b1), AssumeT(p2, b2)):
                return prop(p1, p2) and ty(b1, b2)
            case (PayT(e1, b1), PayT(e2, b2)) | (GetT(e1, b1), GetT(e2, b2)) \
                    | (NextT(e1, b1), NextT(e2, b2)):
                return exp(e1, e2) and ty(b1, b2)
            case (BoxT(b1), BoxT(b2)) | (DiamondT(b1), DiamondT(b2)):
                return ty(b1, b2)
            case _:
                return False

    if ty(pattern, t):
        return tyb, idxb
    return None


def decompress_type(t: SessionType, elab: Elaboration) -> SessionType:
    """Maps internal names and freshly expanded bodies back to user-facing
    named instantiations; internal names never survive."""
    sig = elab.sig

    def show(t: SessionType) -> SessionType:
        match t:
            case TyName(name, targs, iargs) if name.startswith("%"):
                shown_args = tuple(show(a) for a in targs)
                entry = elab.alias.get(name)
                if entry is not None:
                    user, ty_perm, idx_perm = entry
                    user_targs = list(shown_args)
                    user_iargs = list(iargs)
                    for slot, user_pos in enumerate(ty_perm):
                        user_targs[user_pos] = shown_args[slot]
                    for slot, user_pos in enumerate(idx_perm):
                        user_iargs[user_pos] = iargs[slot]
                    return TyName(user, tuple(user_targs), tuple(user_iargs), span=t.span)
                td = sig.type_defs[name]
                body = subst_type(td.body, dict(zip(td.type_params, shown_args)),
                                  dict(zip(td.idx_params, iargs)))
                return show(body)
            case TyName(name, targs, iargs):
                return TyName(name, tuple(show(a) for a in targs), iargs, span=t.span)
            case Unit() | TyVar():
                return t
            case _:
                for name, td in sig.type_defs.items():
                    if not td.internal or name not in elab.alias:
                        continue
                    m = match_type(td.body, t, set(td.type_params), set(td.idx_params))
                    if m is not None:
                        tyb, idxb = m
                        if len(tyb) == len(td.type_params) and len(idxb) == len(td.idx_params):
                            return show(TyName(name,
                                               tuple(tyb[v] for v in td.type_params),
                                               tuple(idxb[v] for v in td.idx_params),
                                               span=t.span))
                return _map_children(t, show)

    return show(t)


def compress(t: SessionType, elab: Elaboration) -> str:
    return pretty_type(decompress_type(t, elab))


def surface_signature(elab: Elaboration,
                      proc_bodies: dict[str, ProcExpr] | None = None) -> Signature:
    """A copy of the signature with internal names expanded away, suitable
    for pretty printing and reparsing.  proc_bodies may substitute
    transformed definitions."""
    import copy

    sig = elab.sig
    out = Signature(options=copy.copy(sig.options))
    for name, td in sig.type_defs.items():
        if td.internal:
            continue
        body = _map_children(td.body, lambda c: decompress_type(c, elab))
        out.type_defs[name] = TypeDef(name, td.type_params, td.idx_params, body, td.span)
    for name, d in sig.proc_decls.items():
        out.proc_decls[name] = ProcDecl(
            name, d.type_params, d.idx_params, d.guard, d.potential,
            tuple((c, decompress_type(t, elab)) for c, t in d.context),
            (d.provided[0], decompress_type(d.provided[1], elab)), d.span)
    for name, pd in sig.proc_defs.items():
        body = (proc_bodies or {}).get(name, pd.body)
        out.proc_defs[name] = ProcDef(name, pd.type_params, pd.idx_params, pd.provided,
                                      pd.chan_args, _decompress_proc(body, elab), pd.span)
    out.eqtypes = [EqTypeDecl(decompress_type(eq.left, elab), eq.op,
                              decompress_type(eq.right, elab), eq.span)
                   for eq in sig.eqtypes]
    out.execs = list(sig.execs)
    return out


def _decompress_proc(p: ProcExpr, elab: Elaboration) -> ProcExpr:
    match p:
        case Call(x, f, targs, iargs, chans, cont):
            return Call(x, f, tuple(decompress_type(a, elab) for a in targs), iargs, chans,
                        _decompress_proc(cont, elab) if cont is not None else None,
                        span=p.span)
        case SendType(c, t, k):
            return SendType(c, decompress_type(t, elab), _decompress_proc(k, elab),
                            span=p.span)
        case Case(c, bs):
            return Case(c, tuple((l, _decompress_proc(b, elab)) for l, b in bs), span=p.span)
        case SendLabel(c, l, k):
            return SendLabel(c, l, _decompress_proc(k, elab), span=p.span)
        case SendChan(c, w, k):
            return SendChan(c, w, _decompress_proc(k, elab), span=p.span)
        case RecvChan(y, c, k):
            return RecvChan(y, c, _decompress_proc(k, elab), span=p.span)
        case Wait(c, k):
            return Wait(c, _decompress_proc(k, elab), span=p.span)
        case RecvType(v, c, k):
            return RecvType(v, c, _decompress_proc(k, elab), span=p.span)
        case SendIdx(c, e, k):
            return SendIdx(c, e, _decompress_proc(k, elab), span=p.span)
        case RecvIdx(v, c, k):
            return RecvIdx(v, c, _decompress_proc(k, elab), span=p.span)
        case AssertP(c, q, k):
            return AssertP(c, q, _decompress_proc(k, elab), span=p.span)
        case AssumeP(c, q, k):
            return AssumeP(c, q, _decompress_proc(k, elab), span=p.span)
        case Pay(c, e, k):
            return Pay(c, e, _decompress_proc(k, elab), span=p.span)
        case Get(c, e, k):
            return Get(c, e, _decompress_proc(k, elab), span=p.span)
        case Work(e, k):
            return Work(e, _decompress_proc(k, elab), span=p.span)
        case DelayP(e, k):
            return DelayP(e, _decompress_proc(k, elab), span=p.span)
        case When(c, k):
            return When(c, _decompress_proc(k, elab), span=p.span)
        case Now(c, k):
            return Now(c, _decompress_proc(k, elab), span=p.span)
        case _:
            return p


def _map_children(t: SessionType, f) -> SessionType:
    match t:
        case IChoice(bs):
            return IChoice(tuple((k, f(b)) for k, b in bs), span=t.span)
        case EChoice(bs):
            return EChoice(tuple((k, f(b)) for k, b in bs), span=t.span)
        case Tensor(l, r):
            return Tensor(f(l), f(r), span=t.span)
        case Lolli(l, r):
            return Lolli(f(l), f(r), span=t.span)
        case ExistsTy(v, b):
            return ExistsTy(v, f(b), span=t.span)
        case ForallTy(v, b):
            return ForallTy(v, f(b), span=t.span)
        case ExistsIdx(v, b):
            return ExistsIdx(v, f(b), span=t.span)
        case ForallIdx(v, b):
            return ForallIdx(v, f(b), span=t.span)
        case AssertT(p, b):
            return AssertT(p, f(b), span=t.span)
        case AssumeT(p, b):
            return AssumeT(p, f(b), span=t.span)
        case PayT(e, b):
            return PayT(e, f(b), span=t.span)
        case GetT(e, b):
            return GetT(e, f(b), span=t.span)
        case NextT(e, b):
            return NextT(e, f(b), span=t.span)
        case BoxT(b):
            return BoxT(f(b), span=t.span)
        case DiamondT(b):
            return DiamondT(f(b), span=t.span)
        case _:
            return t


def elaborate(sig: Signature, reporter: Reporter | None = None,
              solver: Solver | None = None) -> tuple[Elaboration, Reporter]:
    """Full elaboration pipeline: validate, intern, compute variance."""
    rep = validate_signature(sig, reporter, solver)
    if rep.failed:
        return Elaboration(sig=sig, solver=solver or Solver()), rep
    elab = assign_internal_names(sig)
    if solver is not None:
        elab.solver = solver
    elab.variance = compute_variance(sig)
    return elab, rep
