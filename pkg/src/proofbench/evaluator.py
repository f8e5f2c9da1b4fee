"""Concrete execution of zeroth-order programs on the bounded machine.

Every atom checks its input types, computes, and checks output bounds;
any violation raises ExecError with the offending statement index.  A
disjunction statement executes by trying its operand programs
independently and is computable when at least one of them is.

The module also provides the numeric side of computability checking:
interval arithmetic over discrete boxes, a brute-force range oracle, the
n-fold iteration driver with a deterministic step budget, and enclosure
certificates for iterated maps.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

from .model import MachParams, Program, Statement
from .theory import Theory


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Rat:
    units: int  # value = units * 10**-eps_denom


@dataclass(frozen=True)
class Vec:
    elements: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class Box:
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box bounds differ in dimension")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def point_count(self) -> int:
        n = 1
        for a, b in zip(self.lo, self.hi):
            n *= b - a + 1
        return n

    def points(self):
        for tup in itertools.product(
            *(range(a, b + 1) for a, b in zip(self.lo, self.hi))
        ):
            yield Vec(tup)

    def contains(self, v: Vec) -> bool:
        return v.dim == self.dim and all(
            a <= x <= b for a, x, b in zip(self.lo, v.elements, self.hi)
        )

    def encloses(self, other: "Box") -> bool:
        return other.dim == self.dim and all(
            a <= c and d <= b
            for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi)
        )


@dataclass(frozen=True)
class Prgm:
    program: Program


@dataclass(frozen=True)
class Term:
    text: str


Value = object


class ExecError(Exception):
    """kind: TypeViolation | Overflow | DivisionError | DimMismatch |
    RelationFailure | DisjunctionViolation | DeadlineExceeded"""

    def __init__(self, kind, detail="", site=None):
        self.kind = kind
        self.detail = detail
        self.site = site
        super().__init__(f"{kind}{f' at statement {site}' if site else ''}: {detail}")

    def at(self, site):
        return ExecError(self.kind, self.detail, site)


class Env(dict):
    """Variable bindings; single assignment by construction."""

    def bind(self, name, value):
        if name in self:
            raise ExecError("TypeViolation", f"rebinding of {name}")
        self[name] = value


@dataclass
class Budget:
    limit: int
    spent: int = 0

    def spend(self, n=1):
        self.spent += n
        if self.spent > self.limit:
            raise ExecError("DeadlineExceeded", f"budget of {self.limit} steps spent")


# ---------------------------------------------------------------------------
# Scalar and vector hooks.  A hook takes (args, mach) and returns the output
# value list; relation checks return [].


def _int(v, what="argument"):
    if not isinstance(v, Int):
        raise ExecError("TypeViolation", f"{what} is not an integer value")
    return v.value


def _vec(v, what="argument"):
    if not isinstance(v, Vec):
        raise ExecError("TypeViolation", f"{what} is not a vector value")
    return v


def _box(v, what="argument"):
    if not isinstance(v, Box):
        raise ExecError("TypeViolation", f"{what} is not a box value")
    return v


def _bounded(n, mach):
    if abs(n) > mach.nint:
        raise ExecError("Overflow", f"|{n}| > nint={mach.nint}")
    return n


def hook_int_typei(args, mach):
    _int(args[0])
    return []


def hook_int_lt(args, mach):
    if not _int(args[0]) < _int(args[1]):
        raise ExecError("RelationFailure", f"{args[0].value} < {args[1].value} fails")
    return []


def hook_int_eqi(args, mach):
    if _int(args[0]) != _int(args[1]):
        raise ExecError("RelationFailure", f"{args[0].value} = {args[1].value} fails")
    return []


def hook_int_add(args, mach):
    return [Int(_bounded(_int(args[0]) + _int(args[1]), mach))]


def hook_int_mult(args, mach):
    return [Int(_bounded(_int(args[0]) * _int(args[1]), mach))]


def hook_int_div(args, mach):
    a, b = _int(args[0]), _int(args[1])
    if b == 0:
        raise ExecError("DivisionError", "division by zero")
    if a % b != 0:
        raise ExecError("DivisionError", f"{b} does not divide {a} exactly")
    return [Int(_bounded(a // b, mach))]


def _rat(v, what="argument"):
    if not isinstance(v, Rat):
        raise ExecError("TypeViolation", f"{what} is not a rational value")
    return v.units


def hook_rat_typei(args, mach):
    _rat(args[0])
    return []


def hook_rat_lt(args, mach):
    if not _rat(args[0]) < _rat(args[1]):
        raise ExecError("RelationFailure", "rational < fails")
    return []


def hook_rat_eqi(args, mach):
    if _rat(args[0]) != _rat(args[1]):
        raise ExecError("RelationFailure", "rational = fails")
    return []


def hook_rat_add(args, mach):
    return [Rat(_bounded(_rat(args[0]) + _rat(args[1]), mach))]


def hook_rat_mult(args, mach):
    scale = 10 ** mach.eps_denom
    raw = _rat(args[0]) * _rat(args[1])
    if raw % scale != 0:
        raise ExecError("DivisionError", "product underflows the resolution grid")
    return [Rat(_bounded(raw // scale, mach))]


def hook_rat_div(args, mach):
    scale = 10 ** mach.eps_denom
    a, b = _rat(args[0]), _rat(args[1])
    if b == 0:
        raise ExecError("DivisionError", "division by zero")
    if (a * scale) % b != 0:
        raise ExecError("DivisionError", "quotient leaves the resolution grid")
    return [Rat(_bounded(a * scale // b, mach))]


def _same_dim(a: Vec, b: Vec):
    if a.dim != b.dim:
        raise ExecError("DimMismatch", f"dims {a.dim} vs {b.dim}")


def hook_vec_typev(args, mach):
    _vec(args[0])
    return []


def hook_vec_eqv(args, mach):
    a, b = _vec(args[0]), _vec(args[1])
    _same_dim(a, b)
    if a.elements != b.elements:
        raise ExecError("RelationFailure", "vectors differ")
    return []


def hook_vec_dim(args, mach):
    _same_dim(_vec(args[0]), _vec(args[1]))
    return []


def hook_vec_addv(args, mach):
    a, b = _vec(args[0]), _vec(args[1])
    _same_dim(a, b)
    return [Vec(tuple(_bounded(x + y, mach) for x, y in zip(a.elements, b.elements)))]


def hook_vec_smult(args, mach):
    s, a = _int(args[0]), _vec(args[1])
    return [Vec(tuple(_bounded(s * x, mach) for x in a.elements))]


def hook_vec_zvec(args, mach):
    return [Vec((0,) * _vec(args[0]).dim)]


def hook_vec_ltv(args, mach):
    a, b = _vec(args[0]), _vec(args[1])
    _same_dim(a, b)
    if not all(x < y for x, y in zip(a.elements, b.elements)):
        raise ExecError("RelationFailure", "elementwise < fails")
    return []


def hook_vec_lev(args, mach):
    a, b = _vec(args[0]), _vec(args[1])
    _same_dim(a, b)
    if not all(x <= y for x, y in zip(a.elements, b.elements)):
        raise ExecError("RelationFailure", "elementwise <= fails")
    return []


def hook_box_typebx(args, mach):
    _box(args[0])
    return []


def hook_box_eqbx(args, mach):
    p, q = _box(args[0]), _box(args[1])
    if p.dim != q.dim:
        raise ExecError("DimMismatch", f"dims {p.dim} vs {q.dim}")
    if (p.lo, p.hi) != (q.lo, q.hi):
        raise ExecError("RelationFailure", "boxes differ")
    return []


def hook_box_eltbx(args, mach):
    v, p = _vec(args[0]), _box(args[1])
    if v.dim != p.dim:
        raise ExecError("DimMismatch", f"dims {v.dim} vs {p.dim}")
    if not p.contains(v):
        raise ExecError("RelationFailure", "vector outside box")
    return []


def hook_box_subbx(args, mach):
    q, p = _box(args[0]), _box(args[1])
    if q.dim != p.dim:
        raise ExecError("DimMismatch", f"dims {q.dim} vs {p.dim}")
    if not p.encloses(q):
        raise ExecError("RelationFailure", "box not enclosed")
    return []


def hook_box_lbx(args, mach):
    return [Vec(_box(args[0]).lo)]


def hook_box_ubx(args, mach):
    return [Vec(_box(args[0]).hi)]


def hook_box_box(args, mach):
    a, b = _vec(args[0]), _vec(args[1])
    _same_dim(a, b)
    if any(x > y for x, y in zip(a.elements, b.elements)):
        raise ExecError("RelationFailure", "lower bound exceeds upper bound")
    return [Box(a.elements, b.elements)]


def default_hooks() -> dict:
    return {
        name[len("hook_") :].replace("_", ".", 1): fn
        for name, fn in globals().items()
        if name.startswith("hook_")
    }


# ---------------------------------------------------------------------------
# Program execution.


def eval_program(
    program: Program,
    inputs: Env | dict,
    theory: Theory,
    budget: Budget | None = None,
) -> Env:
    """Execute a program over an input environment; returns all bindings."""
    mach = theory.mach
    env = Env()
    for k, v in dict(inputs).items():
        env.bind(k, v)
    _bind_constants(env, theory)
    budget = budget or Budget(mach.tcpu)
    for site, stmt in enumerate(program, start=1):
        try:
            _exec_statement(stmt, env, theory, budget)
        except ExecError as exc:
            raise exc.at(site) if exc.site is None else exc
    return env


def _bind_constants(env: Env, theory: Theory):
    for name, spec in theory.constants.items():
        semtype, _, literal = spec.partition(" ")
        if name in env:
            continue
        if semtype == "int":
            env[name] = Int(int(literal))
        elif semtype == "rat":
            env[name] = Rat(int(literal) * 10 ** theory.mach.eps_denom)
        elif semtype == "prgm":
            env[name] = Term(literal.strip('"'))
        else:
            env[name] = Term(literal.strip('"') if literal != "-" else name)


def _lookup(env: Env, token: str, theory: Theory):
    if token in env:
        return env[token]
    if token.lstrip("+-").isdigit():
        scalar = "rat" if "rat" in theory.type_table else "int"
        n = int(token)
        return Rat(n * 10 ** theory.mach.eps_denom) if scalar == "rat" else Int(n)
    raise ExecError("TypeViolation", f"unbound input {token}")


def _exec_statement(stmt: Statement, env: Env, theory: Theory, budget: Budget):
    budget.spend()
    args = [_lookup(env, t, theory) for t in stmt.inputs]
    if stmt.name in theory.disjunctions:
        outputs = _exec_disjunction(stmt, args, env, theory, budget)
    else:
        sig = theory.signature(stmt.name)
        hook = theory.hooks.get(sig.hook) if sig.hook else theory.hooks.get(stmt.name)
        if hook is None:
            raise NoEvaluatorHook(stmt.name)
        outputs = hook(args, theory.mach)
    if len(outputs) != len(stmt.outputs):
        raise ExecError("TypeViolation", f"{stmt.name} returned wrong output arity")
    for name, value in zip(stmt.outputs, outputs):
        env.bind(name, value)


class NoEvaluatorHook(ExecError):
    def __init__(self, atom):
        self.atom = atom
        ExecError.__init__(self, "TypeViolation", f"no evaluator hook for {atom}")


def _exec_disjunction(stmt, args, env, theory, budget):
    d = theory.disjunctions[stmt.name]
    results = []
    for operand in d.operands:
        sub_env = Env()
        for formal, actual in zip(d.formal.inputs, args):
            if formal not in theory.constant_names:
                sub_env[formal] = actual
        try:
            out_env = eval_program(operand, sub_env, theory, budget)
        except ExecError as exc:
            if exc.kind == "DeadlineExceeded":
                raise
            continue
        results.append(tuple(out_env[o] for o in d.formal.outputs))
    if not results:
        raise ExecError("DisjunctionViolation", f"no operand of {stmt.name} computes")
    first = results[0]
    if any(r != first for r in results[1:]):
        raise ExecError(
            "DisjunctionViolation", f"operands of {stmt.name} disagree on outputs"
        )
    return list(first)


# ---------------------------------------------------------------------------
# Interval arithmetic over one-dimensional discrete boxes.


Interval = tuple[int, int]


def interval_add(p: Interval, q: Interval, mach: MachParams) -> Interval:
    return (_bounded(p[0] + q[0], mach), _bounded(p[1] + q[1], mach))


def interval_sub(p: Interval, q: Interval, mach: MachParams) -> Interval:
    return (_bounded(p[0] - q[1], mach), _bounded(p[1] - q[0], mach))


def interval_mul(p: Interval, q: Interval, mach: MachParams) -> Interval:
    corners = [_bounded(a * b, mach) for a in p for b in q]
    return (min(corners), max(corners))


def interval_encloses(outer: Interval, inner: Interval) -> bool:
    return outer[0] <= inner[0] and inner[1] <= outer[1]


# ---------------------------------------------------------------------------
# Vector maps: expression maps (one scalar expression per coordinate) and
# rule-driven binary automata.  Both evaluate on points and on boxes.


@dataclass(frozen=True)
class Expr:
    op: str  # var | const | add | mul
    index: int = 0
    value: int = 0
    args: tuple = ()

    def eval_point(self, point, mach) -> int:
        if self.op == "var":
            return point[self.index]
        if self.op == "const":
            return _bounded(self.value, mach)
        a = self.args[0].eval_point(point, mach)
        b = self.args[1].eval_point(point, mach)
        return _bounded(a + b if self.op == "add" else a * b, mach)

    def eval_interval(self, intervals, mach) -> Interval:
        if self.op == "var":
            return intervals[self.index]
        if self.op == "const":
            v = _bounded(self.value, mach)
            return (v, v)
        a = self.args[0].eval_interval(intervals, mach)
        b = self.args[1].eval_interval(intervals, mach)
        fn = interval_add if self.op == "add" else interval_mul
        return fn(a, b, mach)


def var(i) -> Expr:
    return Expr("var", index=i)


def const(v) -> Expr:
    return Expr("const", value=v)


def add(a, b) -> Expr:
    return Expr("add", args=(a, b))


def mul(a, b) -> Expr:
    return Expr("mul", args=(a, b))


@dataclass(frozen=True)
class ExprMap:
    """A vector map given coordinatewise by scalar expressions."""

    exprs: tuple[Expr, ...]

    @property
    def dim(self) -> int:
        return len(self.exprs)

    def __call__(self, v: Vec, mach: MachParams) -> Vec:
        if v.dim != self.dim:
            raise ExecError("DimMismatch", f"map expects dim {self.dim}")
        return Vec(tuple(e.eval_point(v.elements, mach) for e in self.exprs))

    def bound(self, p: Box, mach: MachParams) -> Box:
        """Interval-extension enclosure of the map over a box."""
        if p.dim != self.dim:
            raise ExecError("DimMismatch", f"map expects dim {self.dim}")
        intervals = tuple(zip(p.lo, p.hi))
        out = [e.eval_interval(intervals, mach) for e in self.exprs]
        return Box(tuple(i[0] for i in out), tuple(i[1] for i in out))


@dataclass(frozen=True)
class CellularAutomaton:
    """Elementary binary automaton on a ring of cells."""

    cells: int
    rule: int = 110

    def __call__(self, v: Vec, mach: MachParams) -> Vec:
        if v.dim != self.cells:
            raise ExecError("DimMismatch", f"automaton has {self.cells} cells")
        if any(x not in (0, 1) for x in v.elements):
            raise ExecError("TypeViolation", "cell values must be 0 or 1")
        n = self.cells
        e = v.elements
        out = []
        for i in range(n):
            neigh = (e[(i - 1) % n] << 2) | (e[i] << 1) | e[(i + 1) % n]
            out.append((self.rule >> neigh) & 1)
        return Vec(tuple(out))

    def domain(self) -> Box:
        return Box((0,) * self.cells, (1,) * self.cells)

    def bound(self, p: Box, mach: MachParams) -> Box:
        return p  # binary automata stay inside the unit box: q := p


class CapExceeded(Exception):
    pass


def range_oracle(f, p: Box, mach: MachParams, cap: int = 200_000) -> Box:
    """Exact per-coordinate min/max of f over every lattice point of p."""
    if p.point_count() > cap:
        raise CapExceeded(f"{p.point_count()} lattice points exceed cap {cap}")
    lo = hi = None
    for point in p.points():
        w = f(point, mach)
        if lo is None:
            lo, hi = list(w.elements), list(w.elements)
        else:
            lo = [min(a, x) for a, x in zip(lo, w.elements)]
            hi = [max(a, x) for a, x in zip(hi, w.elements)]
    return Box(tuple(lo), tuple(hi))


def iterate_map(f, v: Vec, n: int, mach: MachParams, budget: Budget | None = None) -> Vec:
    """n-fold composition with discard of intermediates; n=0 returns v."""
    if n < 0:
        raise ExecError("RelationFailure", "0 <= n fails")
    budget = budget or Budget(mach.tcpu)
    w = v
    for t in range(1, n + 1):
        budget.spend()
        try:
            w = f(w, mach)
        except ExecError as exc:
            raise exc.at(t) if exc.site is None else exc
    return w


def system_hooks(f, boundf=None) -> dict:
    """Evaluator hooks binding a vector map as the theory's f/iterf/boundf."""

    def hook_f(args, mach):
        return [f(_vec(args[0]), mach)]

    def hook_iterf(args, mach):
        v, n = _vec(args[0]), _int(args[1])
        return [iterate_map(f, v, n, mach)]

    def hook_boundf(args, mach):
        p = _box(args[0])
        bound = boundf if boundf is not None else getattr(f, "bound")
        return [bound(p, mach) if boundf else f.bound(p, mach)]

    return {"f": hook_f, "iterf": hook_iterf, "boundf": hook_boundf}


# ---------------------------------------------------------------------------
# Computability certificates.


@dataclass(frozen=True)
class Certificate:
    theory: str
    mach: MachParams
    domain: Box
    enclosure: Box
    bound_id: str

    def serialize(self) -> str:
        body = "\n".join(
            [
                f"theory {self.theory}",
                f"mach nint={self.mach.nint} nlst={self.mach.nlst} tcpu={self.mach.tcpu}",
                f"domain {list(self.domain.lo)} {list(self.domain.hi)}",
                f"enclosure {list(self.enclosure.lo)} {list(self.enclosure.hi)}",
                f"bound {self.bound_id}",
            ]
        )
        digest = hashlib.sha256(body.encode()).hexdigest()[:16]
        return f"{body}\nsignature {digest}"


class CertificateRefusal(Exception):
    def __init__(self, kind, detail):
        self.kind = kind  # NotEnclosed | NotElement
        super().__init__(f"{kind}: {detail}")


def certify_iteration(
    f,
    boundf,
    p: Box,
    v: Vec,
    theory: Theory,
    spot_steps: int = 100,
    bound_id: str | None = None,
) -> Certificate:
    """Certify that iterating f from v stays computable for every n >= 0.

    Requires q := boundf(p) to be enclosed by p and v to lie in p; the
    certificate is spot-validated by running the iteration.
    """
    mach = theory.mach
    q = boundf(p, mach)
    if not p.encloses(q):
        raise CertificateRefusal("NotEnclosed", f"bound {q} not inside {p}")
    if not p.contains(v):
        raise CertificateRefusal("NotElement", f"{v} outside {p}")
    iterate_map(f, v, spot_steps, mach)
    if bound_id is None:
        bound_id = getattr(boundf, "__name__", boundf.__class__.__name__)
    return Certificate(theory.name, mach, p, q, bound_id)
