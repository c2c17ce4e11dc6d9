"""Static model of cinnamon programs.

A cinnamon is a set of named subnets (ordered, initialized graphs) with one
main subnet.  Arrows carry labels: a primitive, a subnet call, or (before
normalization) a sequence of such items.  This module defines the data
model plus the structure-level operations: validation, macro expansion,
normalization to single-item labels, and the canonical variable order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

NAT = "nat"
STR = "str"

FINISH = "FINISH"
RETURN = "RETURN"
SYSTEM_NODES = (FINISH, RETURN)

# Primitive tables.  Tests set the failure flag; actions write variables
# (str-mode sep may also fail, on an empty operand).
TEST_PRIMS = frozenset({"nonEq", "eq", "empty"})
NAT_PRIMS = frozenset({"clear", "copy", "inc", "nonEq"})
STR_PRIMS = frozenset({"clear", "copy", "sep", "cons", "eq", "empty"})
PRIM_ARITY = {
    "clear": 1,
    "copy": 2,
    "inc": 1,
    "nonEq": 2,
    "sep": 3,
    "cons": 3,
    "eq": 2,
    "empty": 1,
}


@dataclass(frozen=True)
class Const:
    """A literal value: a natural number, or a symbol/string in str mode."""

    value: object  # int or str


@dataclass(frozen=True)
class Prim:
    """A primitive label item, e.g. clear(x) or if nonEq(x, y).

    Operands are variable names; only eq admits Const symbol literals.
    """

    name: str
    args: tuple

    @property
    def is_test(self) -> bool:
        return self.name in TEST_PRIMS


@dataclass(frozen=True)
class Call:
    """A subnet invocation with actual parameters (variables or constants)."""

    subnet: str
    actuals: tuple


@dataclass(frozen=True)
class MacroUse:
    """A macro occurrence; eliminated by expand_macros."""

    name: str
    actuals: tuple


@dataclass(frozen=True)
class Macro:
    name: str
    params: tuple
    items: tuple  # Prim | MacroUse


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass
class Arrow:
    """One ordered arrow.  id and span are metadata, ignored by equality."""

    source: str
    target: str  # ordinary state id, FINISH, or RETURN
    items: tuple = ()
    id: str = field(default="", compare=False)
    span: SourceSpan | None = field(default=None, compare=False)

    @property
    def is_lambda(self) -> bool:
        return not self.items


@dataclass
class Subnet:
    """An ordered initialized graph with formal parameters.

    `vars` holds the subnet's declared working variables; together with the
    formals they make up the subnet's variable set.  out(s) order is the
    arrow-list order restricted to source s.
    """

    name: str
    formals: tuple
    vars: tuple
    init: str
    arrows: tuple

    @property
    def states(self) -> tuple:
        seen = dict()
        if self.init not in SYSTEM_NODES:
            seen[self.init] = None
        for a in self.arrows:
            seen.setdefault(a.source, None)
            if a.target not in SYSTEM_NODES:
                seen.setdefault(a.target, None)
        return tuple(seen)

    @property
    def variables(self) -> tuple:
        return self.formals + self.vars

    def out(self, state: str) -> tuple:
        return tuple(a for a in self.arrows if a.source == state)


@dataclass
class Cinnamon:
    """A whole program: subnets (main first by convention), mode, macros."""

    name: str
    mode: str
    subnets: tuple
    main: str
    macros: tuple = ()

    def subnet(self, name: str) -> Subnet:
        for s in self.subnets:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def main_subnet(self) -> Subnet:
        return self.subnet(self.main)

    @property
    def variables(self) -> tuple:
        return tuple(v for s in self.subnets for v in s.variables)


@dataclass
class Violation:
    """One well-formedness violation; validation reports are data."""

    rule: str
    message: str
    subnet: str | None = None
    arrow: str | None = None


class MacroError(Exception):
    """Raised by expand_macros: unknown macro, arity mismatch, recursion."""

    def __init__(self, rule: str, message: str):
        super().__init__(message)
        self.rule = rule


def assign_arrow_ids(c: Cinnamon) -> None:
    """Give every arrow a deterministic positional id (subnet_aN)."""
    for s in c.subnets:
        for k, a in enumerate(s.arrows, start=1):
            a.id = f"{s.name}_a{k}"


def _prim_mode_ok(name: str, mode: str) -> bool:
    return name in (NAT_PRIMS if mode == NAT else STR_PRIMS)


def _const_mode_ok(value, mode: str) -> bool:
    if mode == NAT:
        return isinstance(value, int) and value >= 0
    return isinstance(value, str)


def validate(c: Cinnamon, forbid_locals: bool = False) -> list:
    """Check every structural invariant; returns a list of Violations.

    An empty report means the cinnamon is well formed.  forbid_locals
    additionally rejects subnets with declared working variables (off by
    default: the shipped programs all need scratch variables).
    """
    report: list = []

    def bad(rule, message, subnet=None, arrow=None):
        report.append(Violation(rule, message, subnet, arrow))

    names = [s.name for s in c.subnets]
    for n in set(names):
        if names.count(n) > 1:
            bad("duplicate-subnet", f"subnet name {n!r} defined more than once")
    if c.main not in names:
        bad("main-missing", f"main subnet {c.main!r} is not defined")

    by_name = {s.name: s for s in c.subnets}
    macro_names = {m.name: m for m in c.macros}

    seen_states: dict = {}
    seen_vars: dict = {}
    for s in c.subnets:
        for st in s.states:
            if st in seen_states and seen_states[st] != s.name:
                bad(
                    "disjoint-states",
                    f"state {st!r} appears in subnets {seen_states[st]!r} and {s.name!r}",
                    subnet=s.name,
                )
            seen_states.setdefault(st, s.name)
        decls = list(s.formals) + list(s.vars)
        for v in decls:
            if decls.count(v) > 1:
                bad("dup-decl", f"variable {v!r} declared twice in {s.name!r}", subnet=s.name)
                break
        for v in s.variables:
            if v in seen_vars and seen_vars[v] != s.name:
                bad(
                    "disjoint-vars",
                    f"variable {v!r} declared in subnets {seen_vars[v]!r} and {s.name!r}",
                    subnet=s.name,
                )
            seen_vars.setdefault(v, s.name)
        if forbid_locals and s.vars:
            bad("core-locals", f"subnet {s.name!r} declares working variables", subnet=s.name)
        if s.init in SYSTEM_NODES:
            bad("init-ordinary", f"initial node of {s.name!r} is {s.init}", subnet=s.name)

    for m in c.macros:
        for it in m.items:
            if isinstance(it, Call):
                bad("macro-body", f"macro {m.name!r} contains a subnet call")

    def check_operand(s, a, v, allow_const=False):
        if isinstance(v, Const):
            if not allow_const:
                bad(
                    "prim-operand-const",
                    f"constant operand {v.value!r} outside eq in arrow {a.id or a.source}",
                    subnet=s.name,
                    arrow=a.id,
                )
            elif not _const_mode_ok(v.value, c.mode):
                bad(
                    "mode-const",
                    f"constant {v.value!r} does not fit mode {c.mode}",
                    subnet=s.name,
                    arrow=a.id,
                )
            return
        if v not in s.formals and v not in s.vars:
            bad(
                "undeclared-var",
                f"variable {v!r} not declared in subnet {s.name!r}",
                subnet=s.name,
                arrow=a.id,
            )

    for s in c.subnets:
        for a in s.arrows:
            for it in a.items:
                if isinstance(it, Prim):
                    if not _prim_mode_ok(it.name, c.mode):
                        bad(
                            "mode-prim",
                            f"primitive {it.name!r} not available in mode {c.mode}",
                            subnet=s.name,
                            arrow=a.id,
                        )
                        continue
                    allow = it.name == "eq"
                    for v in it.args:
                        check_operand(s, a, v, allow_const=allow)
                elif isinstance(it, Call):
                    callee = by_name.get(it.subnet)
                    if callee is None:
                        bad(
                            "unknown-subnet",
                            f"call to undefined subnet {it.subnet!r}",
                            subnet=s.name,
                            arrow=a.id,
                        )
                    elif len(it.actuals) != len(callee.formals):
                        bad(
                            "arity",
                            f"call {it.subnet!r} passes {len(it.actuals)} actuals, "
                            f"expects {len(callee.formals)}",
                            subnet=s.name,
                            arrow=a.id,
                        )
                    for v in it.actuals:
                        if isinstance(v, Const):
                            if not _const_mode_ok(v.value, c.mode):
                                bad(
                                    "mode-const",
                                    f"constant {v.value!r} does not fit mode {c.mode}",
                                    subnet=s.name,
                                    arrow=a.id,
                                )
                        else:
                            check_operand(s, a, v)
                elif isinstance(it, MacroUse):
                    m = macro_names.get(it.name)
                    if m is None:
                        bad(
                            "macro-unknown",
                            f"use of undefined macro {it.name!r}",
                            subnet=s.name,
                            arrow=a.id,
                        )
                    elif len(it.actuals) != len(m.params):
                        bad(
                            "macro-arity",
                            f"macro {it.name!r} used with {len(it.actuals)} arguments, "
                            f"expects {len(m.params)}",
                            subnet=s.name,
                            arrow=a.id,
                        )

    if _find_macro_cycle(c.macros):
        bad("macro-recursive", "macro definitions are mutually recursive")
    return report


def _find_macro_cycle(macros) -> bool:
    graph = {m.name: [it.name for it in m.items if isinstance(it, MacroUse)] for m in macros}
    state: dict = {}

    def visit(n):
        if state.get(n) == 1:
            return True
        if state.get(n) == 2 or n not in graph:
            return False
        state[n] = 1
        hit = any(visit(s) for s in graph[n])
        state[n] = 2
        return hit

    return any(visit(n) for n in graph)


def expand_macros(c: Cinnamon) -> Cinnamon:
    """Replace every macro occurrence by its substituted body, in place in
    the label; the result carries no macro uses and no macro table."""
    table = {m.name: m for m in c.macros}
    expanded: dict = {}

    def body_of(name: str, trail: tuple) -> tuple:
        if name in trail:
            raise MacroError("macro-recursive", f"macro {name!r} expands through itself")
        if name in expanded:
            return expanded[name]
        m = table[name]
        out = []
        for it in m.items:
            if isinstance(it, MacroUse):
                inner = table.get(it.name)
                if inner is None:
                    raise MacroError("macro-unknown", f"undefined macro {it.name!r}")
                if len(it.actuals) != len(inner.params):
                    raise MacroError(
                        "macro-arity",
                        f"macro {it.name!r} used with {len(it.actuals)} arguments",
                    )
                sub = dict(zip(inner.params, it.actuals))
                out.extend(_subst(p, sub) for p in body_of(it.name, trail + (name,)))
            else:
                out.append(it)
        expanded[name] = tuple(out)
        return expanded[name]

    def _subst(p: Prim, sub: dict) -> Prim:
        args = []
        for a in p.args:
            v = sub.get(a, a) if isinstance(a, str) else a
            if isinstance(v, Const) and p.name != "eq":
                raise MacroError(
                    "macro-subst",
                    f"constant bound to a variable operand of {p.name!r}",
                )
            args.append(v)
        return Prim(p.name, tuple(args))

    def expand_items(items) -> tuple:
        out = []
        for it in items:
            if isinstance(it, MacroUse):
                m = table.get(it.name)
                if m is None:
                    raise MacroError("macro-unknown", f"undefined macro {it.name!r}")
                if len(it.actuals) != len(m.params):
                    raise MacroError(
                        "macro-arity",
                        f"macro {it.name!r} used with {len(it.actuals)} arguments, "
                        f"expects {len(m.params)}",
                    )
                sub = dict(zip(m.params, it.actuals))
                out.extend(_subst(p, sub) for p in body_of(it.name, ()))
            else:
                out.append(it)
        return tuple(out)

    subnets = []
    for s in c.subnets:
        arrows = tuple(
            replace(a, items=expand_items(a.items)) for a in s.arrows
        )
        subnets.append(replace(s, arrows=arrows))
    result = Cinnamon(c.name, c.mode, tuple(subnets), c.main, macros=())
    assign_arrow_ids(result)
    return result


def normalize(c: Cinnamon) -> Cinnamon:
    """Rewrite every multi-item label into a chain of single-item arrows
    through fresh states.  Labels of length 0 or 1 pass through unchanged;
    fresh state names embed the originating arrow id."""
    used = set()
    for s in c.subnets:
        used.update(s.states)

    def fresh(base: str) -> str:
        name = base
        n = 1
        while name in used:
            name = f"{base}_{n}"
            n += 1
        used.add(name)
        return name

    subnets = []
    for s in c.subnets:
        arrows = []
        for a in s.arrows:
            if len(a.items) <= 1:
                arrows.append(a)
                continue
            hops = [a.source]
            hops += [fresh(f"{a.id or a.source}_m{i}") for i in range(1, len(a.items))]
            hops.append(a.target)
            for i, item in enumerate(a.items):
                arrows.append(
                    Arrow(hops[i], hops[i + 1], (item,), id=f"{a.id}_c{i + 1}", span=a.span)
                )
        subnets.append(replace(s, arrows=tuple(arrows)))
    result = Cinnamon(c.name, c.mode, tuple(subnets), c.main, macros=c.macros)
    assign_arrow_ids(result)
    return result


def variable_order(c: Cinnamon) -> list:
    """Canonical enumeration of the cinnamon's variables.

    The main subnet contributes first (formals then declared vars), then the
    remaining subnets in file order.  Position 0 is the output variable.
    """
    order = []
    rest = [s for s in c.subnets if s.name != c.main]
    for s in [c.main_subnet] + rest:
        order.extend(s.formals)
        order.extend(s.vars)
    return order
