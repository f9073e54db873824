"""Abstract syntax shared by all phases: index expressions and propositions,
session types, process expressions, declarations, and signatures, together
with substitution, unfolding, and free-variable computation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from .errors import NO_SPAN, Span, ValidityError

# ---------------------------------------------------------------------------
# Index expressions

_fresh_counter = itertools.count()


def fresh_name(base: str) -> str:
    return f"{base}%{next(_fresh_counter)}"


@dataclass(frozen=True)
class ArithExp:
    span: Span = field(default=NO_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class Const(ArithExp):
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class IdxVar(ArithExp):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Add(ArithExp):
    left: ArithExp
    right: ArithExp


@dataclass(frozen=True)
class Sub(ArithExp):
    left: ArithExp
    right: ArithExp


@dataclass(frozen=True)
class Mul(ArithExp):
    # The surface grammar only produces constant-by-expression products, but
    # general products are representable for the nonlinear normalizer.
    left: ArithExp
    right: ArithExp


ZERO = Const(0)
ONE_E = Const(1)


def exp_free_vars(e: ArithExp) -> set[str]:
    match e:
        case Const():
            return set()
        case IdxVar(name):
            return {name}
        case Add(l, r) | Sub(l, r) | Mul(l, r):
            return exp_free_vars(l) | exp_free_vars(r)
    raise AssertionError(e)


def subst_exp(e: ArithExp, idx: dict[str, ArithExp]) -> ArithExp:
    if not idx:
        return e
    match e:
        case Const():
            return e
        case IdxVar(name):
            return idx.get(name, e)
        case Add(l, r):
            return Add(subst_exp(l, idx), subst_exp(r, idx), span=e.span)
        case Sub(l, r):
            return Sub(subst_exp(l, idx), subst_exp(r, idx), span=e.span)
        case Mul(l, r):
            return Mul(subst_exp(l, idx), subst_exp(r, idx), span=e.span)
    raise AssertionError(e)


# ---------------------------------------------------------------------------
# Propositions

@dataclass(frozen=True)
class ArithProp:
    span: Span = field(default=NO_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class PEq(ArithProp):
    left: ArithExp
    right: ArithExp


@dataclass(frozen=True)
class PGt(ArithProp):
    left: ArithExp
    right: ArithExp


@dataclass(frozen=True)
class PTop(ArithProp):
    pass


@dataclass(frozen=True)
class PBot(ArithProp):
    pass


@dataclass(frozen=True)
class PAnd(ArithProp):
    left: ArithProp
    right: ArithProp


@dataclass(frozen=True)
class POr(ArithProp):
    left: ArithProp
    right: ArithProp


@dataclass(frozen=True)
class PNot(ArithProp):
    body: ArithProp


@dataclass(frozen=True)
class PExists(ArithProp):
    var: str
    body: ArithProp


@dataclass(frozen=True)
class PForall(ArithProp):
    var: str
    body: ArithProp


@dataclass(frozen=True)
class PDiv(ArithProp):
    """Divisibility d | e.  Internal: produced by quantifier elimination,
    never by the parser."""

    divisor: int
    body: ArithExp


TOP = PTop()
BOT = PBot()


def prop_free_vars(p: ArithProp) -> set[str]:
    match p:
        case PEq(l, r) | PGt(l, r):
            return exp_free_vars(l) | exp_free_vars(r)
        case PTop() | PBot():
            return set()
        case PAnd(l, r) | POr(l, r):
            return prop_free_vars(l) | prop_free_vars(r)
        case PNot(b):
            return prop_free_vars(b)
        case PExists(v, b) | PForall(v, b):
            return prop_free_vars(b) - {v}
        case PDiv(_, e):
            return exp_free_vars(e)
    raise AssertionError(p)


def subst_prop(p: ArithProp, idx: dict[str, ArithExp]) -> ArithProp:
    if not idx:
        return p
    match p:
        case PEq(l, r):
            return PEq(subst_exp(l, idx), subst_exp(r, idx), span=p.span)
        case PGt(l, r):
            return PGt(subst_exp(l, idx), subst_exp(r, idx), span=p.span)
        case PTop() | PBot():
            return p
        case PAnd(l, r):
            return PAnd(subst_prop(l, idx), subst_prop(r, idx), span=p.span)
        case POr(l, r):
            return POr(subst_prop(l, idx), subst_prop(r, idx), span=p.span)
        case PNot(b):
            return PNot(subst_prop(b, idx), span=p.span)
        case PExists(v, b) | PForall(v, b):
            cls = PExists if isinstance(p, PExists) else PForall
            inner = {k: e for k, e in idx.items() if k != v}
            captured = set().union(*(exp_free_vars(e) for e in inner.values())) if inner else set()
            if v in captured:
                v2 = fresh_name(v)
                b = subst_prop(b, {v: IdxVar(v2)})
                v = v2
            return cls(v, subst_prop(b, inner), span=p.span)
        case PDiv(d, e):
            return PDiv(d, subst_exp(e, idx), span=p.span)
    raise AssertionError(p)


def conj(*props: ArithProp) -> ArithProp:
    """Conjunction with unit elimination."""
    acc: ArithProp = TOP
    for p in props:
        if isinstance(p, PTop):
            continue
        acc = p if isinstance(acc, PTop) else PAnd(acc, p)
    return acc


# ---------------------------------------------------------------------------
# Session types

@dataclass(frozen=True)
class SessionType:
    span: Span = field(default=NO_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class IChoice(SessionType):
    """Internal choice: the provider selects one of the labels."""

    branches: tuple[tuple[str, SessionType], ...]

    def label(self, name: str) -> Optional[SessionType]:
        for k, t in self.branches:
            if k == name:
                return t
        return None


@dataclass(frozen=True)
class EChoice(SessionType):
    """External choice: the client selects one of the labels."""

    branches: tuple[tuple[str, SessionType], ...]

    def label(self, name: str) -> Optional[SessionType]:
        for k, t in self.branches:
            if k == name:
                return t
        return None


@dataclass(frozen=True)
class Tensor(SessionType):
    left: SessionType
    right: SessionType


@dataclass(frozen=True)
class Lolli(SessionType):
    left: SessionType
    right: SessionType


@dataclass(frozen=True)
class Unit(SessionType):
    pass


@dataclass(frozen=True)
class TyVar(SessionType):
    name: str


@dataclass(frozen=True)
class TyName(SessionType):
    """Named instantiation V[A1]...[Ak]{e1}...{em}."""

    name: str
    type_args: tuple[SessionType, ...] = ()
    idx_args: tuple[ArithExp, ...] = ()


@dataclass(frozen=True)
class ExistsTy(SessionType):
    var: str
    body: SessionType


@dataclass(frozen=True)
class ForallTy(SessionType):
    var: str
    body: SessionType


@dataclass(frozen=True)
class ExistsIdx(SessionType):
    var: str
    body: SessionType


@dataclass(frozen=True)
class ForallIdx(SessionType):
    var: str
    body: SessionType


@dataclass(frozen=True)
class AssertT(SessionType):
    """?{phi}. A — the provider proves phi."""

    prop: ArithProp
    body: SessionType


@dataclass(frozen=True)
class AssumeT(SessionType):
    """!{phi}. A — the provider may assume phi."""

    prop: ArithProp
    body: SessionType


@dataclass(frozen=True)
class PayT(SessionType):
    """|{r}> A — the provider pays r units of potential."""

    amount: ArithExp
    body: SessionType


@dataclass(frozen=True)
class GetT(SessionType):
    """<{r}| A — the provider receives r units of potential."""

    amount: ArithExp
    body: SessionType


@dataclass(frozen=True)
class NextT(SessionType):
    """({t}) A — A after t clock ticks."""

    delay: ArithExp
    body: SessionType


@dataclass(frozen=True)
class BoxT(SessionType):
    """[] A — available at any time in the future."""

    body: SessionType


@dataclass(frozen=True)
class DiamondT(SessionType):
    """<> A — available at some time in the future."""

    body: SessionType


UNIT = Unit()


def type_free_idx_vars(t: SessionType) -> set[str]:
    match t:
        case IChoice(bs) | EChoice(bs):
            out: set[str] = set()
            for _, b in bs:
                out |= type_free_idx_vars(b)
            return out
        case Tensor(l, r) | Lolli(l, r):
            return type_free_idx_vars(l) | type_free_idx_vars(r)
        case Unit() | TyVar():
            return set()
        case TyName(_, targs, iargs):
            out = set()
            for a in targs:
                out |= type_free_idx_vars(a)
            for e in iargs:
                out |= exp_free_vars(e)
            return out
        case ExistsTy(_, b) | ForallTy(_, b):
            return type_free_idx_vars(b)
        case ExistsIdx(v, b) | ForallIdx(v, b):
            return type_free_idx_vars(b) - {v}
        case AssertT(p, b) | AssumeT(p, b):
            return prop_free_vars(p) | type_free_idx_vars(b)
        case PayT(e, b) | GetT(e, b) | NextT(e, b):
            return exp_free_vars(e) | type_free_idx_vars(b)
        case BoxT(b) | DiamondT(b):
            return type_free_idx_vars(b)
    raise AssertionError(t)


def type_free_ty_vars(t: SessionType) -> set[str]:
    match t:
        case IChoice(bs) | EChoice(bs):
            out: set[str] = set()
            for _, b in bs:
                out |= type_free_ty_vars(b)
            return out
        case Tensor(l, r) | Lolli(l, r):
            return type_free_ty_vars(l) | type_free_ty_vars(r)
        case Unit():
            return set()
        case TyVar(name):
            return {name}
        case TyName(_, targs, _):
            out = set()
            for a in targs:
                out |= type_free_ty_vars(a)
            return out
        case ExistsTy(v, b) | ForallTy(v, b):
            return type_free_ty_vars(b) - {v}
        case ExistsIdx(_, b) | ForallIdx(_, b):
            return type_free_ty_vars(b)
        case AssertT(_, b) | AssumeT(_, b) | PayT(_, b) | GetT(_, b) | NextT(_, b):
            return type_free_ty_vars(b)
        case BoxT(b) | DiamondT(b):
            return type_free_ty_vars(b)
    raise AssertionError(t)


def free_idx_vars(x) -> set[str]:
    """Free index variables of an expression, proposition, or type."""
    if isinstance(x, ArithExp):
        return exp_free_vars(x)
    if isinstance(x, ArithProp):
        return prop_free_vars(x)
    return type_free_idx_vars(x)


def subst_type(t: SessionType, tys: dict[str, SessionType] | None = None,
               idx: dict[str, ArithExp] | None = None) -> SessionType:
    """Capture-avoiding simultaneous substitution of type and index variables."""
    tys = tys or {}
    idx = idx or {}
    if not tys and not idx:
        return t

    def go(t: SessionType, tys: dict[str, SessionType], idx: dict[str, ArithExp]) -> SessionType:
        match t:
            case IChoice(bs):
                return IChoice(tuple((k, go(b, tys, idx)) for k, b in bs), span=t.span)
            case EChoice(bs):
                return EChoice(tuple((k, go(b, tys, idx)) for k, b in bs), span=t.span)
            case Tensor(l, r):
                return Tensor(go(l, tys, idx), go(r, tys, idx), span=t.span)
            case Lolli(l, r):
                return Lolli(go(l, tys, idx), go(r, tys, idx), span=t.span)
            case Unit():
                return t
            case TyVar(name):
                return tys.get(name, t)
            case TyName(name, targs, iargs):
                return TyName(name,
                              tuple(go(a, tys, idx) for a in targs),
                              tuple(subst_exp(e, idx) for e in iargs),
                              span=t.span)
            case ExistsTy(v, b) | ForallTy(v, b):
                cls = ExistsTy if isinstance(t, ExistsTy) else ForallTy
                inner_tys = {k: a for k, a in tys.items() if k != v}
                captured = set().union(*(type_free_ty_vars(a) for a in inner_tys.values())) \
                    if inner_tys else set()
                if v in captured:
                    v2 = fresh_name(v)
                    b = go(b, {v: TyVar(v2)}, {})
                    v = v2
                return cls(v, go(b, inner_tys, idx), span=t.span)
            case ExistsIdx(v, b) | ForallIdx(v, b):
                cls = ExistsIdx if isinstance(t, ExistsIdx) else ForallIdx
                inner_idx = {k: e for k, e in idx.items() if k != v}
                captured = set().union(*(exp_free_vars(e) for e in inner_idx.values())) \
                    if inner_idx else set()
                if v in captured:
                    v2 = fresh_name(v)
                    b = go(b, {}, {v: IdxVar(v2)})
                    v = v2
                return cls(v, go(b, tys, inner_idx), span=t.span)
            case AssertT(p, b):
                return AssertT(subst_prop(p, idx), go(b, tys, idx), span=t.span)
            case AssumeT(p, b):
                return AssumeT(subst_prop(p, idx), go(b, tys, idx), span=t.span)
            case PayT(e, b):
                return PayT(subst_exp(e, idx), go(b, tys, idx), span=t.span)
            case GetT(e, b):
                return GetT(subst_exp(e, idx), go(b, tys, idx), span=t.span)
            case NextT(e, b):
                return NextT(subst_exp(e, idx), go(b, tys, idx), span=t.span)
            case BoxT(b):
                return BoxT(go(b, tys, idx), span=t.span)
            case DiamondT(b):
                return DiamondT(go(b, tys, idx), span=t.span)
        raise AssertionError(t)

    return go(t, tys, idx)


# ---------------------------------------------------------------------------
# Process expressions

@dataclass(frozen=True)
class ProcExpr:
    span: Span = field(default=NO_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class SendLabel(ProcExpr):
    chan: str
    label: str
    cont: ProcExpr


@dataclass(frozen=True)
class Case(ProcExpr):
    chan: str
    branches: tuple[tuple[str, ProcExpr], ...]


@dataclass(frozen=True)
class SendChan(ProcExpr):
    chan: str
    payload: str
    cont: ProcExpr


@dataclass(frozen=True)
class RecvChan(ProcExpr):
    bound: str
    chan: str
    cont: ProcExpr


@dataclass(frozen=True)
class Close(ProcExpr):
    chan: str


@dataclass(frozen=True)
class Wait(ProcExpr):
    chan: str
    cont: ProcExpr


@dataclass(frozen=True)
class Forward(ProcExpr):
    chan: str
    target: str


@dataclass(frozen=True)
class Call(ProcExpr):
    """x <- f[A]...{e}... y1 ... yn ; cont — a tail call when cont is None."""

    bound: str
    proc: str
    type_args: tuple[SessionType, ...]
    idx_args: tuple[ArithExp, ...]
    chan_args: tuple[str, ...]
    cont: Optional[ProcExpr]


@dataclass(frozen=True)
class SendType(ProcExpr):
    chan: str
    payload: SessionType
    cont: ProcExpr


@dataclass(frozen=True)
class RecvType(ProcExpr):
    bound: str
    chan: str
    cont: ProcExpr


@dataclass(frozen=True)
class SendIdx(ProcExpr):
    chan: str
    payload: ArithExp
    cont: ProcExpr


@dataclass(frozen=True)
class RecvIdx(ProcExpr):
    bound: str
    chan: str
    cont: ProcExpr


@dataclass(frozen=True)
class AssertP(ProcExpr):
    chan: str
    prop: ArithProp
    cont: ProcExpr


@dataclass(frozen=True)
class AssumeP(ProcExpr):
    chan: str
    prop: ArithProp
    cont: ProcExpr


@dataclass(frozen=True)
class Pay(ProcExpr):
    chan: str
    amount: ArithExp
    cont: ProcExpr


@dataclass(frozen=True)
class Get(ProcExpr):
    chan: str
    amount: ArithExp
    cont: ProcExpr


@dataclass(frozen=True)
class Work(ProcExpr):
    amount: ArithExp
    cont: ProcExpr


@dataclass(frozen=True)
class DelayP(ProcExpr):
    amount: ArithExp
    cont: ProcExpr


@dataclass(frozen=True)
class When(ProcExpr):
    chan: str
    cont: ProcExpr


@dataclass(frozen=True)
class Now(ProcExpr):
    chan: str
    cont: ProcExpr


@dataclass(frozen=True)
class Impossible(ProcExpr):
    pass


def proc_channels(p: ProcExpr) -> set[str]:
    """Channel variables occurring free in a process body."""
    match p:
        case SendLabel(c, _, k) | AssertP(c, _, k) | AssumeP(c, _, k) | Pay(c, _, k) \
                | Get(c, _, k) | SendIdx(c, _, k) | SendType(c, _, k) | Wait(c, k) \
                | When(c, k) | Now(c, k):
            return {c} | proc_channels(k)
        case Case(c, bs):
            out = {c}
            for _, b in bs:
                out |= proc_channels(b)
            return out
        case SendChan(c, w, k):
            return {c, w} | proc_channels(k)
        case RecvChan(y, c, k):
            return {c} | (proc_channels(k) - {y})
        case Close(c):
            return {c}
        case Forward(c, d):
            return {c, d}
        case Call(x, _, _, _, args, k):
            out = set(args)
            if k is not None:
                out |= proc_channels(k) - {x}
            return out
        case RecvType(_, c, k) | RecvIdx(_, c, k):
            return {c} | proc_channels(k)
        case Work(_, k) | DelayP(_, k):
            return proc_channels(k)
        case Impossible():
            return set()
    raise AssertionError(p)


# ---------------------------------------------------------------------------
# Declarations and signatures

@dataclass
class TypeDef:
    name: str
    type_params: tuple[str, ...]
    idx_params: tuple[str, ...]
    body: SessionType
    span: Span = NO_SPAN
    internal: bool = False
    alias_of: Optional[str] = None  # user name this internal definition mirrors


@dataclass
class ProcDecl:
    name: str
    type_params: tuple[str, ...]
    idx_params: tuple[str, ...]
    guard: ArithProp
    potential: ArithExp
    context: tuple[tuple[str, SessionType], ...]
    provided: tuple[str, SessionType]
    span: Span = NO_SPAN


@dataclass
class ProcDef:
    name: str
    type_params: tuple[str, ...]
    idx_params: tuple[str, ...]
    provided: str
    chan_args: tuple[str, ...]
    body: ProcExpr
    span: Span = NO_SPAN


@dataclass
class EqTypeDecl:
    left: TyName
    op: str  # "=" or "<="
    right: TyName
    span: Span = NO_SPAN


@dataclass
class ExecDecl:
    proc: str
    span: Span = NO_SPAN


@dataclass
class Options:
    syntax: str = "implicit"   # implicit | explicit
    work: str = "none"         # none | send | recv | recvsend
    time: str = "none"
    bound: int = 8
    fuel: int = 1_000_000

    def merged(self, **overrides) -> "Options":
        out = replace(self)
        for k, v in overrides.items():
            if v is not None:
                setattr(out, k, v)
        return out


@dataclass
class Signature:
    type_defs: dict[str, TypeDef] = field(default_factory=dict)
    proc_decls: dict[str, ProcDecl] = field(default_factory=dict)
    proc_defs: dict[str, ProcDef] = field(default_factory=dict)
    eqtypes: list[EqTypeDecl] = field(default_factory=list)
    execs: list[ExecDecl] = field(default_factory=list)
    options: Options = field(default_factory=Options)

    def add_type(self, td: TypeDef):
        if td.name in self.type_defs:
            raise ValidityError(f"duplicate type definition '{td.name}'", td.span)
        self.type_defs[td.name] = td

    def add_decl(self, d: ProcDecl):
        if d.name in self.proc_decls:
            raise ValidityError(f"duplicate process declaration '{d.name}'", d.span)
        self.proc_decls[d.name] = d

    def add_def(self, d: ProcDef):
        if d.name in self.proc_defs:
            raise ValidityError(f"duplicate process definition '{d.name}'", d.span)
        self.proc_defs[d.name] = d


def unfold(t: TyName, sig: Signature) -> SessionType:
    """One unfolding step of a named instantiation."""
    td = sig.type_defs.get(t.name)
    if td is None:
        raise ValidityError(f"undefined type '{t.name}'", t.span)
    if len(td.type_params) != len(t.type_args):
        raise ValidityError(
            f"type '{t.name}' expects {len(td.type_params)} type argument(s), "
            f"got {len(t.type_args)}", t.span)
    if len(td.idx_params) != len(t.idx_args):
        raise ValidityError(
            f"type '{t.name}' expects {len(td.idx_params)} index argument(s), "
            f"got {len(t.idx_args)}", t.span)
    return subst_type(td.body,
                      dict(zip(td.type_params, t.type_args)),
                      dict(zip(td.idx_params, t.idx_args)))


def unfold_head(t: SessionType, sig: Signature, limit: int = 1000) -> SessionType:
    """Unfold until the head is not a type name.  Relies on contractivity."""
    seen = 0
    while isinstance(t, TyName):
        t = unfold(t, sig)
        seen += 1
        if seen > limit:
            raise ValidityError(f"type unfolding does not terminate near '{t}'")
    return t


# ---------------------------------------------------------------------------
# Alpha-equivalence

def exp_alpha_eq(a: ArithExp, b: ArithExp, env: dict[str, str]) -> bool:
    match (a, b):
        case (Const(x), Const(y)):
            return x == y
        case (IdxVar(x), IdxVar(y)):
            return env.get(x, x) == y
        case (Add(l1, r1), Add(l2, r2)) | (Sub(l1, r1), Sub(l2, r2)) | (Mul(l1, r1), Mul(l2, r2)):
            return exp_alpha_eq(l1, l2, env) and exp_alpha_eq(r1, r2, env)
    return False


def prop_alpha_eq(a: ArithProp, b: ArithProp, env: dict[str, str]) -> bool:
    match (a, b):
        case (PEq(l1, r1), PEq(l2, r2)) | (PGt(l1, r1), PGt(l2, r2)):
            return exp_alpha_eq(l1, l2, env) and exp_alpha_eq(r1, r2, env)
        case (PTop(), PTop()) | (PBot(), PBot()):
            return True
        case (PAnd(l1, r1), PAnd(l2, r2)) | (POr(l1, r1), POr(l2, r2)):
            return prop_alpha_eq(l1, l2, env) and prop_alpha_eq(r1, r2, env)
        case (PNot(x), PNot(y)):
            return prop_alpha_eq(x, y, env)
        case (PExists(v1, b1), PExists(v2, b2)) | (PForall(v1, b1), PForall(v2, b2)):
            return prop_alpha_eq(b1, b2, {**env, v1: v2})
        case (PDiv(d1, e1), PDiv(d2, e2)):
            return d1 == d2 and exp_alpha_eq(e1, e2, env)
    return False


def type_alpha_eq(a: SessionType, b: SessionType,
                  ienv: dict[str, str] | None = None,
                  tenv: dict[str, str] | None = None) -> bool:
    ienv = ienv or {}
    tenv = tenv or {}
    match (a, b):
        case (IChoice(bs1), IChoice(bs2)) | (EChoice(bs1), EChoice(bs2)):
            return len(bs1) == len(bs2) and all(
                k1 == k2 and type_alpha_eq(t1, t2, ienv, tenv)
                for (k1, t1), (k2, t2) in zip(bs1, bs2))
        case (Tensor(l1, r1), Tensor(l2, r2)) | (Lolli(l1, r1), Lolli(l2, r2)):
            return type_alpha_eq(l1, l2, ienv, tenv) and type_alpha_eq(r1, r2, ienv, tenv)
        case (Unit(), Unit()):
            return True
        case (TyVar(x), TyVar(y)):
            return tenv.get(x, x) == y
        case (TyName(n1, t1, i1), TyName(n2, t2, i2)):
            return (n1 == n2 and len(t1) == len(t2) and len(i1) == len(i2)
                    and all(type_alpha_eq(x, y, ienv, tenv) for x, y in zip(t1, t2))
                    and all(exp_alpha_eq(x, y, ienv) for x, y in zip(i1, i2)))
        case (ExistsTy(v1, b1), ExistsTy(v2, b2)) | (ForallTy(v1, b1), ForallTy(v2, b2)):
            return type_alpha_eq(b1, b2, ienv, {**tenv, v1: v2})
        case (ExistsIdx(v1, b1), ExistsIdx(v2, b2)) | (ForallIdx(v1, b1), ForallIdx(v2, b2)):
            return type_alpha_eq(b1, b2, {**ienv, v1: v2}, tenv)
        case (AssertT(p1, b1), AssertT(p2, b2)) | (AssumeT(p1, b1), AssumeT(p2, b2)):
            return prop_alpha_eq(p1, p2, ienv) and type_alpha_eq(b1, b2, ienv, tenv)
        case (PayT(e1, b1), PayT(e2, b2)) | (GetT(e1, b1), GetT(e2, b2)) \
                | (NextT(e1, b1), NextT(e2, b2)):
            return exp_alpha_eq(e1, e2, ienv) and type_alpha_eq(b1, b2, ienv, tenv)
        case (BoxT(b1), BoxT(b2)) | (DiamondT(b1), DiamondT(b2)):
            return type_alpha_eq(b1, b2, ienv, tenv)
    return False


def proc_alpha_eq(a: ProcExpr, b: ProcExpr,
                  cenv: dict[str, str] | None = None,
                  ienv: dict[str, str] | None = None,
                  tenv: dict[str, str] | None = None) -> bool:
    cenv = cenv or {}
    ienv = ienv or {}
    tenv = tenv or {}

    def ch(x: str) -> str:
        return cenv.get(x, x)

    match (a, b):
        case (SendLabel(c1, k1, p1), SendLabel(c2, k2, p2)):
            return ch(c1) == c2 and k1 == k2 and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (Case(c1, bs1), Case(c2, bs2)):
            return ch(c1) == c2 and len(bs1) == len(bs2) and all(
                k1 == k2 and proc_alpha_eq(q1, q2, cenv, ienv, tenv)
                for (k1, q1), (k2, q2) in zip(bs1, bs2))
        case (SendChan(c1, w1, p1), SendChan(c2, w2, p2)):
            return ch(c1) == c2 and ch(w1) == w2 and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (RecvChan(y1, c1, p1), RecvChan(y2, c2, p2)):
            return ch(c1) == c2 and proc_alpha_eq(p1, p2, {**cenv, y1: y2}, ienv, tenv)
        case (Close(c1), Close(c2)):
            return ch(c1) == c2
        case (Wait(c1, p1), Wait(c2, p2)):
            return ch(c1) == c2 and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (Forward(c1, d1), Forward(c2, d2)):
            return ch(c1) == c2 and ch(d1) == d2
        case (Call(x1, f1, t1, i1, a1, k1), Call(x2, f2, t2, i2, a2, k2)):
            if f1 != f2 or len(t1) != len(t2) or len(i1) != len(i2) or len(a1) != len(a2):
                return False
            if not all(type_alpha_eq(u, v, ienv, tenv) for u, v in zip(t1, t2)):
                return False
            if not all(exp_alpha_eq(u, v, ienv) for u, v in zip(i1, i2)):
                return False
            if tuple(ch(u) for u in a1) != a2:
                return False
            if (k1 is None) != (k2 is None):
                return False
            if k1 is None:
                return ch(x1) == x2
            return proc_alpha_eq(k1, k2, {**cenv, x1: x2}, ienv, tenv)
        case (SendType(c1, t1, p1), SendType(c2, t2, p2)):
            return ch(c1) == c2 and type_alpha_eq(t1, t2, ienv, tenv) \
                and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (RecvType(v1, c1, p1), RecvType(v2, c2, p2)):
            return ch(c1) == c2 and proc_alpha_eq(p1, p2, cenv, ienv, {**tenv, v1: v2})
        case (SendIdx(c1, e1, p1), SendIdx(c2, e2, p2)):
            return ch(c1) == c2 and exp_alpha_eq(e1, e2, ienv) \
                and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (RecvIdx(v1, c1, p1), RecvIdx(v2, c2, p2)):
            return ch(c1) == c2 and proc_alpha_eq(p1, p2, cenv, {**ienv, v1: v2}, tenv)
        case (AssertP(c1, q1, p1), AssertP(c2, q2, p2)) | (AssumeP(c1, q1, p1), AssumeP(c2, q2, p2)):
            return ch(c1) == c2 and prop_alpha_eq(q1, q2, ienv) \
                and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (Pay(c1, e1, p1), Pay(c2, e2, p2)) | (Get(c1, e1, p1), Get(c2, e2, p2)):
            return ch(c1) == c2 and exp_alpha_eq(e1, e2, ienv) \
                and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (Work(e1, p1), Work(e2, p2)) | (DelayP(e1, p1), DelayP(e2, p2)):
            return exp_alpha_eq(e1, e2, ienv) and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (When(c1, p1), When(c2, p2)) | (Now(c1, p1), Now(c2, p2)):
            return ch(c1) == c2 and proc_alpha_eq(p1, p2, cenv, ienv, tenv)
        case (Impossible(), Impossible()):
            return True
    return False


def iter_signature_types(sig: Signature) -> Iterator[tuple[SessionType, str]]:
    """Every type expression in the signature with the name of its owner."""
    for td in sig.type_defs.values():
        if not td.internal:
            yield td.body, td.name
    for d in sig.proc_decls.values():
        for _, t in d.context:
            yield t, d.name
        yield d.provided[1], d.name
