"""Desk-scale empirical arms: axiom soundness sampling, dependency purge,
axiom/theorem relabeling sweeps and bounded axiom search.

Soundness sampling draws random environments over a rule's free premise
variables.  A violation is an environment where the premise computes but
the premise-plus-conclusion does not, or where the premise of a falsity
rule computes at all.  Verdicts are deterministic for a fixed seed and
every counterexample replays through the evaluator.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from . import engine, evaluator, kernel
from .evaluator import Box, Env, ExecError, Int, NoEvaluatorHook, Rat, Vec
from .model import Statement, free_variables, unique, validate_program
from .theory import RuleRecord, Theory


@dataclass
class SoundnessVerdict:
    label: str
    samples: int
    usable: int
    violation: dict | None = None  # replayable environment, plain values

    @property
    def ok(self) -> bool:
        return self.violation is None

    def render(self) -> str:
        if self.ok:
            return (
                f"{self.label}: no violation in {self.samples} samples "
                f"({self.usable} with computable premise)"
            )
        return f"{self.label}: VIOLATION at {self.violation}"


class SamplingError(ValueError):
    pass


def _var_types(rule: RuleRecord, theory: Theory) -> dict[str, str]:
    """Semantic type of each free premise variable, from signature usage."""
    types: dict[str, str] = {}
    for stmt in rule.premise:
        sig = theory.atoms.get(stmt.name)
        if sig is None:
            continue
        for k, tok in enumerate(stmt.inputs):
            t = theory.input_type(stmt.name, k)
            if t and not theory.is_constant(tok):
                types.setdefault(tok, t)
        for k, tok in enumerate(stmt.outputs):
            t = theory.output_type(stmt.name, k)
            if t:
                types.setdefault(tok, t)
    return types


def _scalar(rng: random.Random, mach) -> int:
    # biased towards small magnitudes so product/sum chains stay in range
    mode = rng.random()
    if mode < 0.5:
        return rng.randint(-7, 7)
    if mode < 0.8:
        return rng.randint(-31, 31)
    return rng.randint(-mach.nint, mach.nint)


def _sample_value(semtype: str, rng: random.Random, mach, dim=None):
    if semtype == "int":
        return Int(_scalar(rng, mach))
    if semtype == "rat":
        return Rat(_scalar(rng, mach))
    if semtype == "vec":
        dim = dim or rng.randint(1, 4)
        return Vec(tuple(_scalar(rng, mach) for _ in range(dim)))
    if semtype == "box":
        dim = dim or rng.randint(1, 4)
        lo, hi = [], []
        for _ in range(dim):
            a = _scalar(rng, mach)
            b = a + rng.randint(0, 8)
            lo.append(max(-mach.nint, a))
            hi.append(min(mach.nint, b))
        return Box(tuple(lo), tuple(hi))
    raise SamplingError(f"cannot sample values of type {semtype!r}")


def _plain(value):
    if isinstance(value, Int):
        return value.value
    if isinstance(value, Rat):
        return ("rat", value.units)
    if isinstance(value, Vec):
        return list(value.elements)
    if isinstance(value, Box):
        return [list(value.lo), list(value.hi)]
    return str(value)


def _revive(raw):
    if isinstance(raw, bool):
        raise SamplingError("bad value")
    if isinstance(raw, int):
        return Int(raw)
    if isinstance(raw, tuple) and raw and raw[0] == "rat":
        return Rat(raw[1])
    if isinstance(raw, list) and raw and isinstance(raw[0], list):
        return Box(tuple(raw[0]), tuple(raw[1]))
    if isinstance(raw, list):
        return Vec(tuple(raw))
    raise SamplingError(f"bad value {raw!r}")


def _sample_env(rule, theory, types, free, rng) -> dict:
    """Draw one environment, then repair relation failures so the premise
    computes at a usable rate.

    Repairs re-run the premise: when a statement fails, its free-variable
    arguments are adjusted using the values the partial run produced, and
    the run restarts.  A handful of attempts suffices or the sample is
    given up as unusable (the caller rejects it anyway).
    """
    env: dict[str, object] = {}
    order = [t for s in rule.premise for t in s.inputs if t in free]
    for t in unique(order) + [t for t in free if t not in order]:
        twin = [v for k, v in env.items() if types.get(k) == types[t]]
        if twin and rng.random() < 0.25:
            env[t] = rng.choice(twin)
        else:
            env[t] = _sample_value(types[t], rng, theory.mach)
    for _ in range(8):
        try:
            evaluator.eval_program(rule.premise, dict(env), theory)
            return env
        except ExecError as exc:
            if exc.site is None or not _repair(
                rule.premise, exc.site, env, theory, rng
            ):
                return env
    return env


def _clamp(n, mach):
    return max(-mach.nint, min(mach.nint, n))


def _repair(premise, site, env, theory, rng) -> bool:
    """Adjust free arguments of the failing statement; True when changed."""
    stmt = premise[site - 1]
    try:
        partial = evaluator.eval_program(premise[: site - 1], dict(env), theory)
    except ExecError:
        return False
    values = [partial.get(t) for t in stmt.inputs]
    mach = theory.mach
    name = stmt.name
    eq_atoms = {eq for _, eq in theory.type_table.values()}
    freeargs = [t for t in stmt.inputs if t in env]

    def known(i):
        return values[i]

    def fix(tok, value):
        env[tok] = value
        return True

    if len(stmt.inputs) == 2:
        u, v = stmt.inputs
        if name in eq_atoms or name == "eqbx":
            if v in env and known(0) is not None:
                return fix(v, known(0))
            if u in env and known(1) is not None:
                return fix(u, known(1))
        elif name in ("lt", "le", "neq") and not stmt.outputs:
            low = 0 if name == "le" else 1
            if v in env and isinstance(known(0), (Int, Rat)):
                base = known(0).value if isinstance(known(0), Int) else known(0).units
                n = _clamp(base + rng.randint(low, 7), mach)
                return fix(v, Rat(n) if isinstance(known(0), Rat) else Int(n))
            if u in env and isinstance(known(1), (Int, Rat)):
                base = known(1).value if isinstance(known(1), Int) else known(1).units
                n = _clamp(base - rng.randint(low, 7), mach)
                return fix(u, Rat(n) if isinstance(known(1), Rat) else Int(n))
        elif name in ("ltv", "lev"):
            low = 1 if name == "ltv" else 0
            if v in env and isinstance(known(0), Vec):
                return fix(
                    v,
                    Vec(tuple(_clamp(x + rng.randint(low, 7), mach) for x in known(0).elements)),
                )
            if u in env and isinstance(known(1), Vec):
                return fix(
                    u,
                    Vec(tuple(_clamp(x - rng.randint(low, 7), mach) for x in known(1).elements)),
                )
        elif name == "eltbx":
            if u in env and isinstance(known(1), Box):
                b = known(1)
                return fix(u, Vec(tuple(rng.randint(a, c) for a, c in zip(b.lo, b.hi))))
            if v in env and isinstance(known(0), Vec):
                w = known(0)
                lo = tuple(_clamp(x - rng.randint(0, 4), mach) for x in w.elements)
                hi = tuple(_clamp(x + rng.randint(0, 4), mach) for x in w.elements)
                return fix(v, Box(lo, hi))
        elif name == "subbx":
            if u in env and isinstance(known(1), Box):
                b = known(1)
                lo = tuple(rng.randint(a, c) for a, c in zip(b.lo, b.hi))
                hi = tuple(rng.randint(x, c) for x, c in zip(lo, b.hi))
                return fix(u, Box(lo, hi))
            if v in env and isinstance(known(0), Box):
                b = known(0)
                lo = tuple(_clamp(a - rng.randint(0, 4), mach) for a in b.lo)
                hi = tuple(_clamp(c + rng.randint(0, 4), mach) for c in b.hi)
                return fix(v, Box(lo, hi))
        elif name == "dim":
            for i, (x, y) in enumerate(((u, v), (v, u))):
                other = known(1 - i)
                if x in env and isinstance(env.get(x), Vec) and isinstance(other, Vec):
                    e = env[x].elements
                    return fix(x, Vec(tuple(list(e * other.dim)[: other.dim])))
    # dimension clashes across any arity: redraw a free vector/box argument
    for i, tok in enumerate(stmt.inputs):
        if tok in env and isinstance(env[tok], (Vec, Box)):
            dims = [w.dim for j, w in enumerate(values) if j != i and isinstance(w, (Vec, Box))]
            if dims and env[tok].dim != dims[0]:
                semtype = "vec" if isinstance(env[tok], Vec) else "box"
                return fix(tok, _sample_value(semtype, rng, mach, dim=dims[0]))
    return False


def replay(rule: RuleRecord, theory: Theory, environment: dict) -> ExecError | None:
    """Re-run a counterexample; returns the error the concatenation hits."""
    env = {k: _revive(v) for k, v in environment.items()}
    program = rule.premise + ((rule.conclusion,) if rule.conclusion else ())
    try:
        evaluator.eval_program(program, env, theory)
    except ExecError as exc:
        return exc
    return None


def soundness_sample(
    rule: RuleRecord,
    theory: Theory,
    samples: int = 1000,
    seed: int = 0,
) -> SoundnessVerdict:
    """Empirically hunt for a soundness violation of a stored rule."""
    for stmt in rule.premise + ((rule.conclusion,) if rule.conclusion else ()):
        if stmt.name not in theory.disjunctions:
            sig = theory.signature(stmt.name)
            key = sig.hook or stmt.name
            if key not in theory.hooks:
                raise NoEvaluatorHook(stmt.name)
    rng = random.Random(seed)
    types = _var_types(rule, theory)
    free = free_variables(rule.premise, theory.constant_names)
    for name in free:
        if name not in types:
            raise SamplingError(f"{rule.label}: cannot type free variable {name}")
    usable = 0
    for trial in range(samples):
        env = _sample_env(rule, theory, types, free, rng)
        try:
            evaluator.eval_program(rule.premise, dict(env), theory)
        except ExecError:
            continue  # premise does not compute; not a usable sample
        usable += 1
        plain_env = {k: _plain(v) for k, v in env.items()}
        if rule.is_falsity:
            # a computable premise of a falsity rule is itself the violation
            return SoundnessVerdict(rule.label, trial + 1, usable, plain_env)
        program = rule.premise + (rule.conclusion,)
        try:
            evaluator.eval_program(program, dict(env), theory)
        except ExecError:
            return SoundnessVerdict(rule.label, trial + 1, usable, plain_env)
    return SoundnessVerdict(rule.label, samples, usable)


def sweepable_rules(theory: Theory, kinds=("axiom",)) -> list[RuleRecord]:
    """Rules whose atoms all have evaluator hooks."""
    out = []
    for rule in theory.rules_of_kind(*kinds):
        stmts = rule.premise + ((rule.conclusion,) if rule.conclusion else ())
        ok = True
        for stmt in stmts:
            if stmt.name in theory.disjunctions:
                continue
            sig = theory.atoms.get(stmt.name)
            if sig is None or (sig.hook or stmt.name) not in theory.hooks:
                ok = False
                break
        if ok:
            out.append(rule)
    return out


# ---------------------------------------------------------------------------
# Store surgery.


def purge(label: str, theory: Theory) -> list[str]:
    """Remove a rule and every stored theorem that depends on it."""
    if label not in theory.rules:
        raise kernel.ProofError(f"UnknownLabel: {label}")
    removed = sorted(kernel.dependents_of(label, theory)) + [label]
    for lbl in removed:
        if lbl in theory.rules:
            theory.remove_rule(lbl)
    return removed


@dataclass
class SweepResult:
    relabeled: list[str] = field(default_factory=list)
    flagged: list[tuple[str, str]] = field(default_factory=list)


def relabel_sweep(theory: Theory) -> SweepResult:
    """Relabel stored axioms that are interchangeable with a stored theorem.

    Interchangeable means mutually matchable: each rule's premise plus
    conclusion matches the other as a template.  Equivalent pairs within
    the same kind are flagged for operator review, never merged.
    """
    from .equivalence import io_match

    result = SweepResult()
    rules = list(theory.rules.values())
    for i, a in enumerate(rules):
        for b in rules[i + 1 :]:
            if a.is_falsity != b.is_falsity:
                continue
            pa = a.premise + (() if a.conclusion is None else (a.conclusion,))
            pb = b.premise + (() if b.conclusion is None else (b.conclusion,))
            if len(pa) != len(pb):
                continue
            if not (
                io_match(pa, pb, theory.constant_names)
                and io_match(pb, pa, theory.constant_names)
            ):
                continue
            kinds = {a.kind, b.kind}
            if kinds == {"axiom"} or "axiom" not in kinds:
                result.flagged.append((a.label, b.label))
                continue
            axiom = a if a.kind == "axiom" else b
            other = b if axiom is a else a
            theory.relabel(axiom.label, "theorem", tcl=(other.label,))
            result.relabeled.append(axiom.label)
    return result


# ---------------------------------------------------------------------------
# Bounded axiom search.


@dataclass
class SearchCaps:
    max_atoms: int = 5
    max_premise: int = 3
    max_vars: int = 4


class CapExceeded(Exception):
    pass


_VAR_POOL = ("a", "b", "c", "d", "e", "f")


def _numeric_constants(theory):
    return [c for c in theory.constant_names if c.lstrip("+-").isdigit()]


def _canonical_premises(atom_names, theory, plen, max_vars):
    """Canonical-form premises: fresh variables appear in pool order, every
    statement after the first shares a non-constant token with the prefix,
    and identical repetitions are skipped."""
    consts = _numeric_constants(theory)

    def statements_for(scope, used_new, out_counter, need_link):
        for name in atom_names:
            sig = theory.atoms[name]
            slots = len(sig.input_types)
            for picks in itertools.product(range(len(scope) + len(consts) + 1), repeat=slots):
                inputs, fresh_used, linked = [], 0, not need_link
                ok = True
                for pick in picks:
                    if pick < len(scope):
                        inputs.append(scope[pick])
                        linked = True
                    elif pick < len(scope) + len(consts):
                        inputs.append(consts[pick - len(scope)])
                    else:
                        idx = used_new + fresh_used
                        if idx >= max_vars:
                            ok = False
                            break
                        inputs.append(_VAR_POOL[idx])
                        fresh_used += 1
                if not ok or not linked:
                    continue
                outs = tuple(
                    f"y{out_counter + i}" for i in range(len(sig.output_types))
                )
                yield Statement(name, tuple(inputs), outs), fresh_used

    def walk(prefix, scope, used_new, out_counter):
        if prefix:
            yield tuple(prefix)
        if len(prefix) >= plen:
            return
        for stmt, fresh_used in statements_for(
            scope, used_new, out_counter, need_link=bool(prefix)
        ):
            if stmt in prefix and not stmt.outputs:
                continue
            new_scope = scope + [
                t for t in stmt.tokens() if t not in scope and t not in consts
            ]
            yield from walk(
                prefix + [stmt],
                new_scope,
                used_new + fresh_used,
                out_counter + len(stmt.outputs),
            )

    yield from walk([], [], 0, 0)


def _conclusions_for(premise, atom_names, theory):
    consts = _numeric_constants(theory)
    scope = unique(
        t for s in premise for t in s.tokens() if t not in consts
    )
    out_counter = sum(len(s.outputs) for s in premise)
    for name in atom_names:
        sig = theory.atoms[name]
        slots = len(sig.input_types)
        for inputs in itertools.product(scope + consts, repeat=slots):
            if not any(t in scope for t in inputs):
                continue
            outs = tuple(f"y{out_counter + i}" for i in range(len(sig.output_types)))
            stmt = Statement(name, tuple(inputs), outs)
            if stmt in premise:
                continue
            yield stmt


def search_axioms(
    atom_names,
    theory: Theory,
    max_premise: int = 2,
    samples: int = 200,
    seed: int = 0,
    caps: SearchCaps | None = None,
    derivability_steps: int = 1,
) -> list[RuleRecord]:
    """Enumerate and empirically screen candidate rules at desk scale.

    Candidates are built over canonical variable alphabets, filtered by
    the structural extension conditions, deduplicated up to matching,
    screened by soundness sampling, and finally dropped when the store
    already derives them in a few steps.
    """
    caps = caps or SearchCaps()
    if len(atom_names) > caps.max_atoms:
        raise CapExceeded(f"{len(atom_names)} atoms exceed cap {caps.max_atoms}")
    if max_premise > caps.max_premise:
        raise CapExceeded(f"premise length {max_premise} exceeds cap {caps.max_premise}")
    for name in atom_names:
        theory.signature(name)

    survivors: list[RuleRecord] = []
    seen_keys, seen_premises = set(), set()
    for premise in _canonical_premises(atom_names, theory, max_premise, caps.max_vars):
        if validate_program(premise, theory.constant_names):
            continue
        pkey = _canonical_key(premise, theory)
        if pkey in seen_premises:
            continue
        seen_premises.add(pkey)
        envs = _premise_environments(premise, theory, samples, seed)
        if not envs:
            continue
        for conclusion in _conclusions_for(premise, atom_names, theory):
            key = _canonical_key(premise + (conclusion,), theory)
            if key in seen_keys:
                continue
            seen_keys.add(key)
            if not _conclusion_holds(conclusion, envs, theory):
                continue
            if _derivable(premise, conclusion, theory, derivability_steps):
                continue
            survivors.append(
                RuleRecord(f"cand{len(survivors) + 1}", "axiom", premise, conclusion)
            )
    return survivors


def _premise_environments(premise, theory, samples, seed):
    """Post-premise environments for usable samples, shared by the
    conclusions screened against this premise."""
    for stmt in premise:
        if stmt.name not in theory.disjunctions:
            sig = theory.atoms.get(stmt.name)
            if sig is None or (sig.hook or stmt.name) not in theory.hooks:
                return []
    probe = RuleRecord("probe", "axiom", premise, None)
    types = _var_types(probe, theory)
    free = free_variables(premise, theory.constant_names)
    if any(t not in types for t in free):
        return []
    rng = random.Random(repr((seed, _canonical_key(premise, theory))))
    envs = []
    for _ in range(samples * 3):
        if len(envs) >= samples:
            break
        try:
            env = _sample_env(probe, theory, types, free, rng)
            post = evaluator.eval_program(premise, dict(env), theory)
        except SamplingError:
            return []
        except ExecError:
            continue
        envs.append(post)
    return envs


def _conclusion_holds(conclusion, envs, theory):
    for post in envs:
        try:
            evaluator.eval_program((conclusion,), dict(post), theory)
        except ExecError:
            return False
    return True


def _canonical_key(program, theory):
    """Matching-invariant key: rename variables in first-occurrence order."""
    mapping = {}
    parts = []
    for stmt in program:
        toks = []
        for t in stmt.inputs:
            if theory.is_constant(t):
                toks.append(t)
            else:
                mapping.setdefault(t, f"v{len(mapping)}")
                toks.append(mapping[t])
        outs = []
        for t in stmt.outputs:
            mapping.setdefault(t, f"v{len(mapping)}")
            outs.append(mapping[t])
        parts.append((stmt.name, tuple(toks), tuple(outs)))
    return tuple(parts)


def _derivable(premise, conclusion, theory, steps) -> bool:
    from .model import fresh_names

    def hits(options):
        return any(
            o.conclusion is not None
            and o.conclusion.name == conclusion.name
            and o.conclusion.inputs == conclusion.inputs
            and len(o.conclusion.outputs) == len(conclusion.outputs)
            for o in options
        )

    def all_options(lines):
        return (
            engine.stored_rule_options(lines, theory)
            + engine.sr_options(lines, theory)
            + engine.aio_options(lines, theory)
        )

    lines = list(premise)
    first = all_options(lines)
    if hits(first):
        return True
    if steps < 2:
        return False
    used = engine.used_names(lines)
    for opt in first[:60]:
        if opt.conclusion is None:
            continue
        outs = fresh_names(len(opt.conclusion.outputs), used, theory.constant_names)
        stmt = Statement(opt.conclusion.name, opt.conclusion.inputs, tuple(outs))
        if hits(all_options(lines + [stmt])):
            return True
    return False
