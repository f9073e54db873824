"""Arithmetic layer: closed evaluation, multinomial normalization, Cooper's
quantifier elimination over the naturals, semantic entailment with nonlinear
heuristics, and a bounded brute-force oracle used for differential testing.

Internally the eliminator works over the integers with an explicit `x >= 0`
conjunct per quantified variable; surface variables always range over the
naturals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .core import (Add, ArithExp, ArithProp, Const, IdxVar, Mul, PAnd, PBot, PDiv, PEq, PExists,
                   PForall, PGt, PNot, POr, PTop, Sub, fresh_name, prop_free_vars,
                   subst_exp, subst_prop, BOT, TOP, ONE_E, ZERO)
from .errors import NonlinearAtomError, NotClosedError, UnderflowError
from .pretty import pretty_prop

# ---------------------------------------------------------------------------
# Evaluation

def evaluate_closed(e: ArithExp) -> int:
    """Evaluates a closed expression over the naturals.  Subtraction below
    zero is an error: it signals an ill-typed runtime state."""
    match e:
        case Const(v):
            return v
        case IdxVar(n):
            raise NotClosedError(f"unbound index variable '{n}'", e.span)
        case Add(l, r):
            return evaluate_closed(l) + evaluate_closed(r)
        case Sub(l, r):
            a, b = evaluate_closed(l), evaluate_closed(r)
            if a < b:
                raise UnderflowError(f"natural subtraction underflow: {a} - {b}", e.span)
            return a - b
        case Mul(l, r):
            return evaluate_closed(l) * evaluate_closed(r)
    raise AssertionError(e)


def eval_exp(e: ArithExp, env: dict[str, int]) -> int:
    """Integer-valued evaluation used by the solver (no underflow)."""
    match e:
        case Const(v):
            return v
        case IdxVar(n):
            if n not in env:
                raise NotClosedError(f"unbound index variable '{n}'", e.span)
            return env[n]
        case Add(l, r):
            return eval_exp(l, env) + eval_exp(r, env)
        case Sub(l, r):
            return eval_exp(l, env) - eval_exp(r, env)
        case Mul(l, r):
            return eval_exp(l, env) * eval_exp(r, env)
    raise AssertionError(e)


def eval_prop(p: ArithProp, env: dict[str, int], bound: int = 64) -> bool:
    """Evaluates a proposition under env; quantifiers range over [0, bound]."""
    match p:
        case PEq(l, r):
            return eval_exp(l, env) == eval_exp(r, env)
        case PGt(l, r):
            return eval_exp(l, env) > eval_exp(r, env)
        case PTop():
            return True
        case PBot():
            return False
        case PAnd(l, r):
            return eval_prop(l, env, bound) and eval_prop(r, env, bound)
        case POr(l, r):
            return eval_prop(l, env, bound) or eval_prop(r, env, bound)
        case PNot(b):
            return not eval_prop(b, env, bound)
        case PExists(v, b):
            return any(eval_prop(b, {**env, v: i}, bound) for i in range(bound + 1))
        case PForall(v, b):
            return all(eval_prop(b, {**env, v: i}, bound) for i in range(bound + 1))
        case PDiv(d, e):
            return eval_exp(e, env) % d == 0
    raise AssertionError(p)


# ---------------------------------------------------------------------------
# Multinomial normal form

Monomial = tuple[str, ...]  # sorted variable names with repetition


def normalize_multinomial(e: ArithExp) -> dict[Monomial, int]:
    """Sum-of-monomials normal form; the empty monomial is the constant."""
    match e:
        case Const(v):
            return {(): v} if v else {}
        case IdxVar(n):
            return {(n,): 1}
        case Add(l, r):
            out = dict(normalize_multinomial(l))
            for m, c in normalize_multinomial(r).items():
                out[m] = out.get(m, 0) + c
            return {m: c for m, c in out.items() if c}
        case Sub(l, r):
            out = dict(normalize_multinomial(l))
            for m, c in normalize_multinomial(r).items():
                out[m] = out.get(m, 0) - c
            return {m: c for m, c in out.items() if c}
        case Mul(l, r):
            out: dict[Monomial, int] = {}
            for m1, c1 in normalize_multinomial(l).items():
                for m2, c2 in normalize_multinomial(r).items():
                    m = tuple(sorted(m1 + m2))
                    out[m] = out.get(m, 0) + c1 * c2
            return {m: c for m, c in out.items() if c}
    raise AssertionError(e)


def is_linear_exp(e: ArithExp) -> bool:
    return all(len(m) <= 1 for m in normalize_multinomial(e))


def is_linear_prop(p: ArithProp) -> bool:
    match p:
        case PEq(l, r) | PGt(l, r):
            return is_linear_exp(l) and is_linear_exp(r)
        case PTop() | PBot():
            return True
        case PAnd(l, r) | POr(l, r):
            return is_linear_prop(l) and is_linear_prop(r)
        case PNot(b):
            return is_linear_prop(b)
        case PExists(_, b) | PForall(_, b):
            return is_linear_prop(b)
        case PDiv(_, e):
            return is_linear_exp(e)
    raise AssertionError(p)


# ---------------------------------------------------------------------------
# Linear terms: c1*x1 + ... + ck*xk + c0

class Lin:
    __slots__ = ("coeffs", "const", "_key")

    def __init__(self, coeffs: dict[str, int] | None = None, const: int = 0):
        self.coeffs = {v: c for v, c in (coeffs or {}).items() if c}
        self.const = const
        self._key = (tuple(sorted(self.coeffs.items())), const)

    def __eq__(self, other):
        return isinstance(other, Lin) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    @staticmethod
    def of(e: ArithExp) -> "Lin":
        mono = normalize_multinomial(e)
        coeffs: dict[str, int] = {}
        const = 0
        for m, c in mono.items():
            if len(m) == 0:
                const = c
            elif len(m) == 1:
                coeffs[m[0]] = coeffs.get(m[0], 0) + c
            else:
                raise NonlinearAtomError(f"nonlinear term {'*'.join(m)}")
        return Lin(coeffs, const)

    @staticmethod
    def diff(l: ArithExp, r: ArithExp) -> "Lin":
        return Lin.of(l).plus(Lin.of(r).scaled(-1))

    def plus(self, other: "Lin") -> "Lin":
        coeffs = dict(self.coeffs)
        for v, c in other.coeffs.items():
            coeffs[v] = coeffs.get(v, 0) + c
        return Lin(coeffs, self.const + other.const)

    def shift(self, k: int) -> "Lin":
        return Lin(self.coeffs, self.const + k)

    def scaled(self, k: int) -> "Lin":
        return Lin({v: c * k for v, c in self.coeffs.items()}, self.const * k)

    def drop(self, var: str) -> "Lin":
        coeffs = dict(self.coeffs)
        coeffs.pop(var, None)
        return Lin(coeffs, self.const)

    def is_const(self) -> bool:
        return not self.coeffs

    def to_exp(self) -> ArithExp:
        pos: ArithExp | None = None
        neg: ArithExp | None = None

        def extend(acc, term):
            return term if acc is None else Add(acc, term)

        for v in sorted(self.coeffs):
            c = self.coeffs[v]
            term = IdxVar(v) if abs(c) == 1 else Mul(Const(abs(c)), IdxVar(v))
            if c > 0:
                pos = extend(pos, term)
            else:
                neg = extend(neg, term)
        if self.const > 0:
            pos = extend(pos, Const(self.const))
        elif self.const < 0:
            neg = extend(neg, Const(-self.const))
        if pos is None:
            pos = ZERO
        return pos if neg is None else Sub(pos, neg)


# ---------------------------------------------------------------------------
# Internal formula representation for elimination
#
# IR ::= True | False | ("gt", Lin) | ("eq", Lin) | ("div", d, Lin)
#      | ("ndiv", d, Lin) | ("and", parts) | ("or", parts)

def _gt(lin: Lin):
    if lin.is_const():
        return lin.const > 0
    g = math.gcd(*lin.coeffs.values())
    if g > 1:
        # g*S + c > 0  <=>  S + c' > 0 with the constant tightened
        c = lin.const
        lin = Lin({v: a // g for v, a in lin.coeffs.items()}, 1 - (g - c) // g)
    return ("gt", lin)


def _eq(lin: Lin):
    if lin.is_const():
        return lin.const == 0
    g = math.gcd(*lin.coeffs.values())
    if g > 1:
        if lin.const % g:
            return False
        lin = Lin({v: a // g for v, a in lin.coeffs.items()}, lin.const // g)
    return ("eq", lin)


def _div(d: int, lin: Lin, negated: bool):
    if d == 1:
        return negated is False
    # coefficients matter only modulo d; keep them in (-d/2, d/2]
    coeffs = {}
    for v, a in lin.coeffs.items():
        a %= d
        if a > d // 2:
            a -= d
        if a:
            coeffs[v] = a
    const = lin.const % d
    if not coeffs:
        ok = const % d == 0
        return (not ok) if negated else ok
    # d | g*T  <=>  (d / gcd(d, g)) | T
    g = math.gcd(math.gcd(*coeffs.values()), const)
    if g > 1:
        coeffs = {v: a // g for v, a in coeffs.items()}
        const //= g
        d //= math.gcd(d, g)
        if d == 1:
            return negated is False
    return ("ndiv" if negated else "div", d, Lin(coeffs, const))


def _and_ir(parts):
    flat = []
    seen = set()
    stack = list(reversed(parts))
    while stack:
        p = stack.pop()
        if p is True:
            continue
        if p is False:
            return False
        if isinstance(p, tuple) and p[0] == "and":
            stack.extend(reversed(p[1]))
            continue
        if p not in seen:
            seen.add(p)
            flat.append(p)
    if not flat:
        return True
    if len(flat) == 1:
        return flat[0]
    return ("and", tuple(flat))


def _or_ir(parts):
    flat = []
    seen = set()
    stack = list(reversed(parts))
    while stack:
        p = stack.pop()
        if p is False:
            continue
        if p is True:
            return True
        if isinstance(p, tuple) and p[0] == "or":
            stack.extend(reversed(p[1]))
            continue
        if p not in seen:
            seen.add(p)
            flat.append(p)
    if not flat:
        return False
    if len(flat) == 1:
        return flat[0]
    return ("or", tuple(flat))


def _to_ir(p: ArithProp, neg: bool = False):
    """Converts to IR in negation normal form."""
    match p:
        case PEq(l, r):
            lin = Lin.diff(l, r)
            if not neg:
                return _eq(lin)
            return _or_ir([_gt(lin), _gt(lin.scaled(-1))])
        case PGt(l, r):
            lin = Lin.diff(l, r)
            if not neg:
                return _gt(lin)
            return _gt(lin.scaled(-1).shift(1))  # not(t > 0) <=> -t + 1 > 0
        case PTop():
            return not neg
        case PBot():
            return neg
        case PAnd(l, r):
            mk = _or_ir if neg else _and_ir
            return mk([_to_ir(l, neg), _to_ir(r, neg)])
        case POr(l, r):
            mk = _and_ir if neg else _or_ir
            return mk([_to_ir(l, neg), _to_ir(r, neg)])
        case PNot(b):
            return _to_ir(b, not neg)
        case PDiv(d, e):
            return _div(d, Lin.of(e), neg)
    raise AssertionError(f"quantifier under elimination: {p}")


def _ir_to_prop(ir) -> ArithProp:
    if ir is True:
        return TOP
    if ir is False:
        return BOT
    match ir[0]:
        case "gt":
            return PGt(ir[1].to_exp(), ZERO)
        case "eq":
            return PEq(ir[1].to_exp(), ZERO)
        case "div":
            return PDiv(ir[1], ir[2].to_exp())
        case "ndiv":
            return PNot(PDiv(ir[1], ir[2].to_exp()))
        case "and":
            out = _ir_to_prop(ir[1][0])
            for part in ir[1][1:]:
                out = PAnd(out, _ir_to_prop(part))
            return out
        case "or":
            out = _ir_to_prop(ir[1][0])
            for part in ir[1][1:]:
                out = POr(out, _ir_to_prop(part))
            return out
    raise AssertionError(ir)


def _ir_map_atoms(ir, f):
    if ir is True or ir is False:
        return ir
    kind = ir[0]
    if kind in ("and", "or"):
        mk = _and_ir if kind == "and" else _or_ir
        return mk([_ir_map_atoms(p, f) for p in ir[1]])
    _charge()
    return f(ir)


def _ir_subst(ir, var: str, t: Lin):
    """var := t, folding ground atoms."""

    def atom(a):
        match a[0]:
            case "gt" | "eq":
                lin = a[1]
                c = lin.coeffs.get(var, 0)
                if c == 0:
                    return a
                lin2 = lin.drop(var).plus(t.scaled(c))
                return _gt(lin2) if a[0] == "gt" else _eq(lin2)
            case "div" | "ndiv":
                d, lin = a[1], a[2]
                c = lin.coeffs.get(var, 0)
                if c == 0:
                    return a
                return _div(d, lin.drop(var).plus(t.scaled(c)), a[0] == "ndiv")
        raise AssertionError(a)

    return _ir_map_atoms(ir, atom)


def _ir_eval(ir, env: dict[str, int]) -> bool:
    if ir is True or ir is False:
        return ir

    def lin_val(lin: Lin) -> int:
        return lin.const + sum(c * env.get(v, 0) for v, c in lin.coeffs.items())

    match ir[0]:
        case "gt":
            return lin_val(ir[1]) > 0
        case "eq":
            return lin_val(ir[1]) == 0
        case "div":
            return lin_val(ir[2]) % ir[1] == 0
        case "ndiv":
            return lin_val(ir[2]) % ir[1] != 0
        case "and":
            return all(_ir_eval(p, env) for p in ir[1])
        case "or":
            return any(_ir_eval(p, env) for p in ir[1])
    raise AssertionError(ir)


class EliminationBlowup(Exception):
    """Internal: formula growth exceeded the working limit."""


_IR_NODE_LIMIT = 50_000
_WORK_BUDGET = 2_000_000

import threading

_solver_state = threading.local()


def _charge(n: int = 1):
    budget = getattr(_solver_state, "budget", None)
    if budget is None:
        return
    budget -= n
    _solver_state.budget = budget
    if budget < 0:
        raise EliminationBlowup


def _with_budget(fn):
    """Runs fn under a fresh work budget (outermost call wins)."""
    if getattr(_solver_state, "budget", None) is not None:
        return fn()
    _solver_state.budget = _WORK_BUDGET
    try:
        return fn()
    finally:
        _solver_state.budget = None


def _ir_size(ir) -> int:
    if ir is True or ir is False:
        return 1
    if ir[0] in ("and", "or"):
        return 1 + sum(_ir_size(p) for p in ir[1])
    return 1


def _eliminate_exists_ir(var: str, ir):
    """Cooper's elimination of one existential over the naturals."""
    # existentials distribute over disjunction; the disjuncts produced by a
    # previous elimination are small conjunctions that the x = e shortcut
    # usually dispatches
    if isinstance(ir, tuple) and ir[0] == "or":
        return _or_ir([_eliminate_exists_ir(var, p) for p in ir[1]])
    # natural domain: var >= 0
    ir = _and_ir([ir, _gt(Lin({var: 1}, 1))])
    if ir is True or ir is False:
        return ir

    # Optimization: a top-level conjunct var = e (var not in e) is eliminated
    # by substitution; e >= 0 keeps the natural-domain reading.
    conjuncts = list(ir[1]) if ir[0] == "and" else [ir]
    for i, c in enumerate(conjuncts):
        if isinstance(c, tuple) and c[0] == "eq":
            coeff = c[1].coeffs.get(var, 0)
            if abs(coeff) == 1:
                sol = c[1].drop(var).scaled(-coeff)
                rest = conjuncts[:i] + conjuncts[i + 1:]
                parts = [_ir_subst(r, var, sol) for r in rest]
                return _and_ir(parts + [_gt(sol.shift(1))])

    # Scaling lcm over var's coefficients.
    delta = 1
    occurs = False

    def visit(a):
        nonlocal delta, occurs
        lin = a[1] if a[0] in ("gt", "eq") else a[2]
        c = lin.coeffs.get(var, 0)
        if c:
            occurs = True
            delta = delta * abs(c) // math.gcd(delta, abs(c))
        return a

    _ir_map_atoms(ir, visit)
    if not occurs:
        return ir

    # Scale each atom so var's coefficient becomes +-1 when read over
    # y = delta * var; record the divisibility delta | y.
    divisors = [delta]

    def rescale(a):
        match a[0]:
            case "gt" | "eq":
                lin = a[1]
                c = lin.coeffs.get(var, 0)
                if c == 0:
                    return a
                lin = lin.scaled(delta // abs(c))
                lin = lin.drop(var).plus(Lin({var: 1 if c > 0 else -1}))
                return _gt(lin) if a[0] == "gt" else _eq(lin)
            case "div" | "ndiv":
                d, lin = a[1], a[2]
                c = lin.coeffs.get(var, 0)
                if c == 0:
                    return a
                k = delta // abs(c)
                lin = lin.scaled(k).drop(var).plus(Lin({var: 1 if c > 0 else -1}))
                divisors.append(d * k)
                return _div(d * k, lin, a[0] == "ndiv")
        raise AssertionError(a)

    scaled = _ir_map_atoms(ir, rescale)
    if delta > 1:
        scaled = _and_ir([scaled, _div(delta, Lin({var: 1}), False)])

    lowers: list[Lin] = []
    uppers: list[Lin] = []

    def bounds(a):
        match a[0]:
            case "gt":
                c = a[1].coeffs.get(var, 0)
                if c == 1:
                    lowers.append(a[1].drop(var).scaled(-1))   # y > b
                elif c == -1:
                    uppers.append(a[1].drop(var))              # y < a
            case "eq":
                c = a[1].coeffs.get(var, 0)
                if c:
                    sol = a[1].drop(var).scaled(-c)
                    lowers.append(sol.shift(-1))
                    uppers.append(sol.shift(1))
        return a

    _ir_map_atoms(scaled, bounds)
    period = 1
    for d in divisors:
        period = period * d // math.gcd(period, d)

    def project(a, low: bool):
        match a[0]:
            case "gt":
                c = a[1].coeffs.get(var, 0)
                if c == 0:
                    return a
                return not ((c > 0) == low)
            case "eq":
                return a if a[1].coeffs.get(var, 0) == 0 else False
            case _:
                return a

    # Prefer the side with fewer boundary candidates; over the naturals the
    # lower-bound set always contains -1 from the domain constraint.
    parts = []
    if len(uppers) < len(lowers):
        inf = _ir_map_atoms(scaled, lambda a: project(a, low=False))
        for j in range(1, period + 1):
            parts.append(_ir_subst(inf, var, Lin(const=-j)))
        candidates = [(a, -1) for a in uppers]
    else:
        inf = _ir_map_atoms(scaled, lambda a: project(a, low=True))
        for j in range(1, period + 1):
            parts.append(_ir_subst(inf, var, Lin(const=j)))
        candidates = [(b, 1) for b in lowers]
    for base, sign in candidates:
        for j in range(1, period + 1):
            parts.append(_ir_subst(scaled, var, base.shift(sign * j)))
    out = _or_ir(parts)
    if _ir_size(out) > _IR_NODE_LIMIT:
        raise EliminationBlowup
    return out


def cooper_eliminate(p: ArithProp) -> ArithProp:
    """Removes every quantifier, innermost first.  The result is
    quantifier-free, equivalent over the naturals, and may contain
    divisibility atoms.  Raises NonlinearAtomError on nonlinear input."""
    return _with_budget(lambda: _ir_to_prop(_qelim_ir(p)))


def _ir_vars(ir, acc: set[str]):
    if ir is True or ir is False:
        return
    match ir[0]:
        case "gt" | "eq":
            acc.update(ir[1].coeffs)
        case "div" | "ndiv":
            acc.update(ir[2].coeffs)
        case "and" | "or":
            for p in ir[1]:
                _ir_vars(p, acc)


def _sat_nat(variables: frozenset[str], ir, seen: set) -> bool:
    """Satisfiability over the naturals of a quantifier-free formula, by
    depth-first per-disjunct elimination with early exit."""
    if ir is True:
        return True
    if ir is False:
        return False
    occurring: set[str] = set()
    _ir_vars(ir, occurring)
    live = frozenset(occurring & variables)
    if not live:
        return _ir_eval(ir, {})
    key = (live, ir)
    if key in seen:
        return False
    seen.add(key)
    if isinstance(ir, tuple) and ir[0] == "or":
        return any(_sat_nat(live, d, seen) for d in ir[1])

    # prefer a variable bound by a top-level unit-coefficient equality, else
    # one with the smallest coefficient lcm across all atoms
    conjuncts = ir[1] if ir[0] == "and" else (ir,)
    var = None
    for c in conjuncts:
        if isinstance(c, tuple) and c[0] == "eq":
            for v, a in c[1].coeffs.items():
                if abs(a) == 1 and v in live:
                    var = v
                    break
        if var:
            break
    if var is None:
        deltas = {v: 1 for v in live}

        def visit(a):
            lin = a[1] if a[0] in ("gt", "eq") else a[2]
            for v, c in lin.coeffs.items():
                if v in deltas and c:
                    deltas[v] = deltas[v] * abs(c) // math.gcd(deltas[v], abs(c))
            return a

        _ir_map_atoms(ir, visit)
        var = min(sorted(live), key=lambda v: deltas[v])
    out = _eliminate_exists_ir(var, ir)
    return _sat_nat(live - {var}, out, seen)


def _qelim_ir(p: ArithProp):
    match p:
        case PExists(v, b):
            return _eliminate_exists_ir(v, _qelim_ir(b))
        case PForall(v, b):
            inner = _negate_ir(_qelim_ir(b))
            return _negate_ir(_eliminate_exists_ir(v, inner))
        case PAnd(l, r):
            return _and_ir([_qelim_ir(l), _qelim_ir(r)])
        case POr(l, r):
            return _or_ir([_qelim_ir(l), _qelim_ir(r)])
        case PNot(b):
            return _negate_ir(_qelim_ir(b))
        case _:
            return _to_ir(p)


def _negate_ir(ir):
    if ir is True:
        return False
    if ir is False:
        return True
    match ir[0]:
        case "gt":
            return _gt(ir[1].scaled(-1).shift(1))
        case "eq":
            return _or_ir([_gt(ir[1]), _gt(ir[1].scaled(-1))])
        case "div":
            return _div(ir[1], ir[2], True)
        case "ndiv":
            return _div(ir[1], ir[2], False)
        case "and":
            return _or_ir([_negate_ir(p) for p in ir[1]])
        case "or":
            return _and_ir([_negate_ir(p) for p in ir[1]])
    raise AssertionError(ir)


def find_witness(variables: list[str], p: ArithProp) -> dict[str, int]:
    """A satisfying natural assignment for a satisfiable linear formula.
    Small witnesses are found by iterative-deepening search; the general case
    eliminates trailing variables and scans the remaining one up to its
    periodicity bound."""
    if _quantifier_free(p):
        ir = _to_ir(p)
        for limit in (1, 3, 8, 20):
            for vals in itertools.product(range(limit + 1), repeat=len(variables)):
                if limit == 1 or max(vals, default=0) == limit:
                    env = dict(zip(variables, vals))
                    if _ir_eval(ir, env):
                        return env
    assignment: dict[str, int] = {}
    for i, v in enumerate(variables):
        body = subst_prop(p, {name: Const(val) for name, val in assignment.items()})
        for later in variables[i + 1:]:
            body = PExists(later, body)
        single = _qelim_ir(body)
        limit = _scan_limit(single, v)
        for t in range(limit + 1):
            if _ir_eval(single, {v: t}):
                assignment[v] = t
                break
        else:
            raise AssertionError("witness scan exhausted on satisfiable formula")
    return assignment


def _scan_limit(ir, var: str) -> int:
    consts = [1]
    moduli = [1]

    def visit(a):
        match a[0]:
            case "gt" | "eq":
                c = a[1].coeffs.get(var, 0)
                if c:
                    consts.append(abs(a[1].const) // abs(c) + 1)
            case "div" | "ndiv":
                moduli.append(a[1])
        return a

    _ir_map_atoms(ir, visit)
    lcm = 1
    for m in moduli:
        lcm = lcm * m // math.gcd(lcm, m)
    return max(consts) + lcm + 1


# ---------------------------------------------------------------------------
# Entailment

@dataclass
class Verdict:
    kind: str  # "valid" | "invalid" | "trusted"
    assignment: Optional[dict[str, int]] = None
    residual: Optional[str] = None

    @property
    def holds(self) -> bool:
        return self.kind in ("valid", "trusted")


def _quantifier_free(p: ArithProp) -> bool:
    match p:
        case PExists() | PForall():
            return False
        case PAnd(l, r) | POr(l, r):
            return _quantifier_free(l) and _quantifier_free(r)
        case PNot(b):
            return _quantifier_free(b)
        case _:
            return True


class Solver:
    """Entailment decisions with memoization and once-per-constraint trusted
    warnings on the diagnostic stream."""

    def __init__(self, warn: Callable[[str], None] | None = None):
        self.warn = warn or (lambda s: None)
        self._trusted_seen: set[str] = set()
        self._cache: dict[tuple, Verdict] = {}
        self.trusted_count = 0

    def entails(self, vset, constraint: ArithProp, phi: ArithProp) -> Verdict:
        key = (constraint, phi)
        hit = self._cache.get(key)
        if hit is None:
            hit = entails(vset, constraint, phi)
            self._cache[key] = hit
        if hit.kind == "trusted":
            self.trusted_count += 1
            if hit.residual not in self._trusted_seen:
                self._trusted_seen.add(hit.residual)
                self.warn(f"warning: trusting: {hit.residual}")
        return hit

    def holds(self, vset, constraint: ArithProp, phi: ArithProp) -> bool:
        return self.entails(vset, constraint, phi).holds


def entails(vset, constraint: ArithProp, phi: ArithProp) -> Verdict:
    """Decides `vset ; constraint |= phi` over the naturals."""
    variables = sorted(prop_free_vars(constraint) | prop_free_vars(phi))
    extra = set(variables) - set(vset)
    if extra:
        raise NotClosedError(f"entailment mentions unknown variables {sorted(extra)}")

    negated = PAnd(constraint, PNot(phi))
    qf = _quantifier_free(negated)

    # (1) quick counterexample by plugging in 0 and 1 for the variables
    if qf and len(variables) <= 16:
        cex = _corner_counterexample(variables, constraint, phi)
        if cex is not None:
            return Verdict("invalid", assignment=cex)

    if is_linear_prop(constraint) and is_linear_prop(phi):
        # slightly deeper counterexample search before eliminating
        if qf:
            ir = _to_ir(negated)
            for vals in itertools.product(range(6), repeat=len(variables)):
                env = dict(zip(variables, vals))
                if _ir_eval(ir, env):
                    return Verdict("invalid", assignment=env)
        # (2) universally close and eliminate: valid iff C /\ ~phi has no
        # solution; satisfiability explores one eliminated disjunct at a time
        try:
            inner = _with_budget(lambda: _qelim_ir(negated))
            sat = _with_budget(lambda: _sat_nat(frozenset(variables), inner, set()))
            if not sat:
                return Verdict("valid")
            witness = _with_budget(lambda: find_witness(variables, negated))
            return Verdict("invalid", assignment=witness)
        except EliminationBlowup:
            return Verdict("trusted",
                           residual=f"{pretty_prop(constraint)} |= {pretty_prop(phi)}")

    # (3) nonlinear heuristics
    return nonlinear_check(constraint, phi)


def _corner_counterexample(variables, constraint, phi) -> Optional[dict[str, int]]:
    for mask in range(2 ** len(variables)):
        env = {v: (mask >> i) & 1 for i, v in enumerate(variables)}
        try:
            if eval_prop(constraint, env) and not eval_prop(phi, env):
                return env
        except NotClosedError:
            return None
    return None


def _flatten_and(p: ArithProp) -> list[ArithProp]:
    if isinstance(p, PAnd):
        return _flatten_and(p.left) + _flatten_and(p.right)
    return [p]


def _conjunct_bounds(constraint: ArithProp) -> dict[str, int]:
    """Constant lower bounds x >= c implied by single-variable conjuncts."""
    bounds: dict[str, int] = {}
    for c in _flatten_and(constraint):
        if not isinstance(c, (PGt, PEq)):
            continue
        try:
            lin = Lin.diff(c.left, c.right)
        except NonlinearAtomError:
            continue
        if len(lin.coeffs) != 1:
            continue
        (v, a), = lin.coeffs.items()
        if isinstance(c, PGt) and a > 0:
            # a*v + const > 0  =>  v >= floor(-const/a) + 1
            bounds[v] = max(bounds.get(v, 0), (-lin.const) // a + 1)
        elif isinstance(c, PEq) and lin.const % a == 0 and -lin.const // a >= 0:
            bounds[v] = max(bounds.get(v, 0), -lin.const // a)
    return {v: b for v, b in bounds.items() if b > 0}


def nonlinear_check(constraint: ArithProp, phi: ArithProp) -> Verdict:
    """Coefficient heuristics for nonlinear goals: equalities need an all-zero
    normal form, inequalities an all-nonnegative one; known lower bounds
    x >= c are substituted as x = y + c first."""
    bounds = _conjunct_bounds(constraint)
    shift = {v: Add(IdxVar(fresh_name(v)), Const(c)) for v, c in bounds.items()}

    def check(p: ArithProp) -> bool:
        match p:
            case PEq(l, r):
                shifted = subst_exp(Sub(l, r), shift)
                return all(c == 0 for c in normalize_multinomial(shifted).values())
            case PGt(l, r):
                shifted = subst_exp(Sub(Sub(l, r), ONE_E), shift)
                return all(c >= 0 for c in normalize_multinomial(shifted).values())
            case PTop():
                return True
            case PAnd(l, r):
                return check(l) and check(r)
        return False

    if check(phi):
        return Verdict("valid")
    variables = sorted(prop_free_vars(constraint) | prop_free_vars(phi))
    if _quantifier_free(constraint) and _quantifier_free(phi) and len(variables) <= 16:
        cex = _corner_counterexample(variables, constraint, phi)
        if cex is not None:
            return Verdict("invalid", assignment=cex)
    residual = f"{pretty_prop(constraint)} |= {pretty_prop(phi)}"
    return Verdict("trusted", residual=residual)


# ---------------------------------------------------------------------------
# Bounded brute-force oracle

def oracle_entails(vset, constraint: ArithProp, phi: ArithProp, bound: int = 64) -> bool:
    """Exhaustively evaluates all assignments of vset over [0, bound], with
    quantifiers also ranging over [0, bound].  Vectorized with numpy so the
    differential suites stay fast."""
    import numpy as np

    variables = sorted(set(vset))
    if not variables:
        return (not eval_prop(constraint, {}, bound)) or eval_prop(phi, {}, bound)

    grids = np.meshgrid(*[np.arange(bound + 1, dtype=np.int64) for _ in variables],
                        indexing="ij")
    env = {v: g for v, g in zip(variables, grids)}

    def exp_np(e: ArithExp, env):
        match e:
            case Const(v):
                return np.int64(v)
            case IdxVar(n):
                return env[n]
            case Add(l, r):
                return exp_np(l, env) + exp_np(r, env)
            case Sub(l, r):
                return exp_np(l, env) - exp_np(r, env)
            case Mul(l, r):
                return exp_np(l, env) * exp_np(r, env)
        raise AssertionError(e)

    def prop_np(p: ArithProp, env):
        match p:
            case PEq(l, r):
                return exp_np(l, env) == exp_np(r, env)
            case PGt(l, r):
                return exp_np(l, env) > exp_np(r, env)
            case PTop():
                return np.bool_(True)
            case PBot():
                return np.bool_(False)
            case PAnd(l, r):
                return prop_np(l, env) & prop_np(r, env)
            case POr(l, r):
                return prop_np(l, env) | prop_np(r, env)
            case PNot(b):
                return ~prop_np(b, env)
            case PExists(v, b):
                acc = np.bool_(False)
                for j in range(bound + 1):
                    acc = acc | prop_np(b, {**env, v: np.int64(j)})
                return acc
            case PForall(v, b):
                acc = np.bool_(True)
                for j in range(bound + 1):
                    acc = acc & prop_np(b, {**env, v: np.int64(j)})
                return acc
            case PDiv(d, e):
                return exp_np(e, env) % d == 0
        raise AssertionError(p)

    holds = ~prop_np(constraint, env) | prop_np(phi, env)
    return bool(np.all(holds))
