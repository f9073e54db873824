"""Coinductive subtyping by incremental construction of a type simulation,
with reflexivity up to index entailment, variance-guided matching against
cached goals, and a per-pair bound that guarantees termination."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .arith import Solver, evaluate_closed
from .core import (ArithExp, ArithProp, AssertT, AssumeT, BoxT, Const, DiamondT, EChoice,
                   EqTypeDecl, ExistsIdx, ExistsTy, ForallIdx, ForallTy, GetT, IChoice, IdxVar,
                   Lolli, NextT, PayT, PEq, PExists, SessionType, Tensor, TyName, TyVar, Unit,
                   conj, fresh_name, prop_free_vars, exp_free_vars, subst_exp, subst_prop,
                   subst_type, type_free_idx_vars, type_free_ty_vars, unfold, Add, TOP)
from .errors import BoundExceededError, NotClosedError
from .elaborate import Elaboration, match_type

DEFAULT_BOUND = 8


@dataclass(frozen=True)
class SimGoal:
    vset: frozenset[str]
    constraint: ArithProp
    tyvars: frozenset[str]
    left: SessionType
    right: SessionType


@dataclass
class CacheEntry:
    vset: tuple[str, ...]
    constraint: ArithProp
    tyvars: frozenset[str]
    left: TyName
    right: TyName
    seed: bool = False


@dataclass
class SimCache:
    """Partial simulation: assumed goals plus a per-pair counter."""

    bound: int = DEFAULT_BOUND
    entries: dict[tuple[str, str], list[CacheEntry]] = field(default_factory=dict)

    def add(self, entry: CacheEntry):
        key = (entry.left.name, entry.right.name)
        bucket = self.entries.setdefault(key, [])
        if not entry.seed and sum(1 for e in bucket if not e.seed) >= self.bound:
            raise BoundExceededError(entry.left.name, entry.right.name, self.bound,
                                     entry.left.span)
        bucket.append(entry)

    def lookup(self, lname: str, rname: str) -> list[CacheEntry]:
        return self.entries.get((lname, rname), [])


def make_cache(elab: Elaboration, bound: int | None = None,
               skip: EqTypeDecl | None = None) -> SimCache:
    """Fresh cache seeded with the signature's eqtype assertions (both
    orientations for equalities)."""
    cache = SimCache(bound=bound if bound is not None else elab.sig.options.bound)
    for eq in elab.sig.eqtypes:
        if eq is skip:
            continue
        fv = sorted(type_free_idx_vars(eq.left) | type_free_idx_vars(eq.right))
        tv = type_free_ty_vars(eq.left) | type_free_ty_vars(eq.right)
        cache.add(CacheEntry(tuple(fv), TOP, frozenset(tv), eq.left, eq.right, seed=True))
        if eq.op == "=":
            cache.add(CacheEntry(tuple(fv), TOP, frozenset(tv), eq.right, eq.left,
                                 seed=True))
    return cache


def _norm_next(t: SessionType) -> SessionType:
    """Merges stacked next-operators and drops closed zero delays."""
    while isinstance(t, NextT):
        if isinstance(t.body, NextT):
            t = NextT(Add(t.delay, t.body.delay), t.body.body, span=t.span)
            continue
        try:
            if evaluate_closed(t.delay) == 0:
                t = t.body
                continue
        except Exception:
            pass
        break
    return t


class _Checker:
    def __init__(self, elab: Elaboration, cache: SimCache):
        self.elab = elab
        self.cache = cache
        self.solver = elab.solver

    # -- index argument helpers -----------------------------------------

    def exp_equal(self, vset, constraint, a: ArithExp, b: ArithExp) -> bool:
        if a == b:
            return True
        return self.solver.holds(vset, constraint, PEq(a, b))

    # -- cache matching ---------------------------------------------------

    def match_entry(self, entry: CacheEntry, goal: SimGoal) -> bool:
        lg, rg = goal.left, goal.right
        assert isinstance(lg, TyName) and isinstance(rg, TyName)
        # freshen the entry so its variables cannot collide with the goal's
        ren_idx = {v: fresh_name(v) for v in entry.vset}
        ren_ty = {v: fresh_name(v) for v in entry.tyvars}
        idx_sub = {v: IdxVar(w) for v, w in ren_idx.items()}
        ty_sub = {v: TyVar(w) for v, w in ren_ty.items()}
        left = subst_type(entry.left, ty_sub, idx_sub)
        right = subst_type(entry.right, ty_sub, idx_sub)
        constraint = subst_prop(entry.constraint, idx_sub)
        ty_params = set(ren_ty.values())
        idx_params = set(ren_idx.values())

        # syntactic matching of type arguments, instantiating only the
        # cached side; nonvariant slots are unconstrained
        tyb: dict[str, SessionType] = {}
        idxb: dict[str, ArithExp] = {}
        for pos, (pat, arg) in enumerate(
                itertools.chain(zip(left.type_args, lg.type_args),
                                zip(right.type_args, rg.type_args))):
            side = pos < len(left.type_args)
            slot = pos if side else pos - len(left.type_args)
            name = lg.name if side else rg.name
            if self.elab.variance_of(name, slot) == "nonvariant":
                continue
            m = match_type(pat, arg, ty_params, idx_params, tyb, idxb)
            if m is None:
                return False
            tyb, idxb = m

        # index arguments: the goal's constraint must entail the cached
        # constraint with the argument equations, existentially closing any
        # cached variables that matching left unbound
        equations = []
        for pat, arg in itertools.chain(zip(left.idx_args, lg.idx_args),
                                        zip(right.idx_args, rg.idx_args)):
            pat = subst_exp(pat, idxb)
            if isinstance(pat, IdxVar) and pat.name in idx_params and pat.name not in idxb:
                idxb[pat.name] = arg
                pat = arg
            equations.append(PEq(subst_exp(pat, idxb), arg))
        body = conj(subst_prop(constraint, idxb), *equations)
        unbound = (prop_free_vars(body) & idx_params) - set(idxb)
        for v in sorted(unbound):
            body = PExists(v, body)
        if isinstance(body, type(TOP)):
            return True
        verdict = self.solver.entails(
            goal.vset | prop_free_vars(goal.constraint) | prop_free_vars(body),
            goal.constraint, body)
        return verdict.kind == "valid"

    # -- the simulation ----------------------------------------------------

    def sub(self, goal: SimGoal) -> bool:
        A, B = _norm_next(goal.left), _norm_next(goal.right)
        vset, constraint, tyvars = goal.vset, goal.constraint, goal.tyvars
        if A == B:
            return True

        if isinstance(A, TyName) and isinstance(B, TyName):
            # reflexivity up to index entailment
            if A.name == B.name and A.type_args == B.type_args and all(
                    self.exp_equal(vset, constraint, a, b)
                    for a, b in zip(A.idx_args, B.idx_args)):
                return True
            goal = SimGoal(vset, constraint, tyvars, A, B)
            for entry in self.cache.lookup(A.name, B.name):
                if self.match_entry(entry, goal):
                    return True
            self.cache.add(CacheEntry(tuple(sorted(vset)), constraint, tyvars, A, B))
            return self.structural(vset, constraint, tyvars,
                                   unfold(A, self.elab.sig), unfold(B, self.elab.sig))
        if isinstance(A, TyName):
            return self.structural(vset, constraint, tyvars, unfold(A, self.elab.sig), B)
        if isinstance(B, TyName):
            return self.structural(vset, constraint, tyvars, A, unfold(B, self.elab.sig))
        return self.structural(vset, constraint, tyvars, A, B)

    def rec(self, vset, constraint, tyvars, A, B) -> bool:
        return self.sub(SimGoal(vset, constraint, tyvars, A, B))

    def structural(self, vset, constraint, tyvars, A: SessionType, B: SessionType) -> bool:
        A, B = _norm_next(A), _norm_next(B)
        match (A, B):
            case (IChoice(bs1), IChoice(bs2)):
                # width: every label offered on the left must exist on the right
                right = dict(bs2)
                return all(k in right and self.rec(vset, constraint, tyvars, t, right[k])
                           for k, t in bs1)
            case (EChoice(bs1), EChoice(bs2)):
                left = dict(bs1)
                return all(k in left and self.rec(vset, constraint, tyvars, left[k], t)
                           for k, t in bs2)
            case (Tensor(l1, r1), Tensor(l2, r2)):
                return self.rec(vset, constraint, tyvars, l1, l2) \
                    and self.rec(vset, constraint, tyvars, r1, r2)
            case (Lolli(l1, r1), Lolli(l2, r2)):
                return self.rec(vset, constraint, tyvars, l2, l1) \
                    and self.rec(vset, constraint, tyvars, r1, r2)
            case (Unit(), Unit()):
                return True
            case (TyVar(a), TyVar(b)):
                return a == b
            case (AssertT(p1, b1), AssertT(p2, b2)):
                ext = conj(constraint, p1)
                fv = vset | prop_free_vars(ext) | prop_free_vars(p2)
                return self.solver.holds(fv, ext, p2) \
                    and self.rec(fv, ext, tyvars, b1, b2)
            case (AssumeT(p1, b1), AssumeT(p2, b2)):
                ext = conj(constraint, p2)
                fv = vset | prop_free_vars(ext) | prop_free_vars(p1)
                return self.solver.holds(fv, ext, p1) \
                    and self.rec(fv, ext, tyvars, b1, b2)
            case (ExistsIdx(v1, b1), ExistsIdx(v2, b2)) | (ForallIdx(v1, b1), ForallIdx(v2, b2)):
                fresh = fresh_name(v1)
                return self.rec(vset | {fresh}, constraint, tyvars,
                                subst_type(b1, idx={v1: IdxVar(fresh)}),
                                subst_type(b2, idx={v2: IdxVar(fresh)}))
            case (ExistsTy(v1, b1), ExistsTy(v2, b2)) | (ForallTy(v1, b1), ForallTy(v2, b2)):
                fresh = fresh_name(v1)
                return self.rec(vset, constraint, tyvars | {fresh},
                                subst_type(b1, {v1: TyVar(fresh)}),
                                subst_type(b2, {v2: TyVar(fresh)}))
            case (PayT(e1, b1), PayT(e2, b2)) | (GetT(e1, b1), GetT(e2, b2)):
                return self.exp_equal(vset, constraint, e1, e2) \
                    and self.rec(vset, constraint, tyvars, b1, b2)
            case (NextT(e1, b1), NextT(e2, b2)):
                if self.exp_equal(vset, constraint, e1, e2):
                    return self.rec(vset, constraint, tyvars, b1, b2)
                try:
                    n1, n2 = evaluate_closed(e1), evaluate_closed(e2)
                except NotClosedError:
                    return False
                step = min(n1, n2)
                return self.rec(vset, constraint, tyvars,
                                _norm_next(NextT(Const(n1 - step), b1)),
                                _norm_next(NextT(Const(n2 - step), b2)))
            case (BoxT(b1), BoxT(b2)) | (DiamondT(b1), DiamondT(b2)):
                return self.rec(vset, constraint, tyvars, b1, b2)
            case (TyName(), _) | (_, TyName()):
                return self.rec(vset, constraint, tyvars, A, B)
        return False


def subtype(elab: Elaboration, cache: SimCache, vset, constraint: ArithProp,
            tyvars, left: SessionType, right: SessionType) -> bool:
    """Decides left <= right under the given context.  Raises
    BoundExceededError when the per-pair goal budget runs out."""
    goal = SimGoal(frozenset(vset), constraint, frozenset(tyvars), left, right)
    return _Checker(elab, cache).sub(goal)


def check_eqtype_decls(elab: Elaboration) -> list:
    """Checks each asserted equality or inequality, abstracted over its free
    variables, assuming all the others."""
    from .errors import Diagnostic

    diagnostics = []
    for eq in elab.sig.eqtypes:
        fv = type_free_idx_vars(eq.left) | type_free_idx_vars(eq.right)
        tv = type_free_ty_vars(eq.left) | type_free_ty_vars(eq.right)
        directions = [(eq.left, eq.right)]
        if eq.op == "=":
            directions.append((eq.right, eq.left))
        for l, r in directions:
            cache = make_cache(elab, skip=eq)
            try:
                ok = subtype(elab, cache, fv, TOP, tv, l, r)
            except BoundExceededError as exc:
                ok = False
                diagnostics.append(Diagnostic("error", exc.message, eq.span))
                continue
            if not ok:
                from .elaborate import compress
                diagnostics.append(Diagnostic(
                    "error",
                    f"asserted relation does not hold: "
                    f"{compress(l, elab)} <= {compress(r, elab)}", eq.span))
    return diagnostics
