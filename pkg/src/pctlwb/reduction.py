"""Compile a two-counter machine into PCTL formulae.

The compiled formula is the conjunction of two per-copy components over
disjoint proposition sets, a synchronization conjunct, and (for the
recurrence variant) a recurrence conjunct:

    compile(M) = psi^1 & psi^2 & Sync [& Recurrent]
    psi^k      = Struct^k & Init^k & G=1 (AND_l (at_l^k => NewSim_l^k))

Struct comes in two shapes selected by the fragment: the until-based one
(r/R/RK succession via U=1 plus escape clauses) and the F,G-only variant
whose propagation clauses use F=1 / F<1 and a handful of global shape
clauses.  All probability bounds are injected from the constants ledger,
never hard-coded.

Copy-k builders emit copy-k atoms only; the deliberate crossings are
NewZero (the tested counter's copy), the partner's at_l guards, Sync and
Recurrent.
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Tuple

from ._rational import Rat
from .formula import (StateFormula, and_, atom, conj, disj, gadget_prop,
                      implies, mk_exclusive, mk_f, mk_g, not_, print_formula,
                      prob, until, subformulae)
from .geometry import DEFAULT_CONSTANTS
from .machines import CounterMachine

WITH_UNTIL = "until"
FG_ONLY = "fg"
RECURRENT = "recurrent"
FINITE_SAT = "finite"

_LOWER = ("r", "a", "abar", "b", "c", "d")
_UPPER = ("A", "B", "C", "D", "E", "R")


class ReductionError(ValueError):
    pass


def _S(i):
    return (i + 1) % 3


def props_b(k):
    """B^k: K plus the six capital families over the three phases."""
    out = {gadget_prop("K", k)}
    for fam in _UPPER:
        for i in range(3):
            out.add(gadget_prop(fam, k, i))
    return frozenset(out)


def props_lower(k, m):
    out = set()
    for fam in _LOWER:
        for i in range(3):
            for l in range(1, m + 1):
                out.add(gadget_prop(fam, k, i, l))
    return frozenset(out)


def props_a(k, m):
    """A^k = B^k plus the six lowercase families over phases and labels."""
    return props_b(k) | props_lower(k, m)


def universe(m):
    return props_a(1, m) | props_a(2, m)


def _ex(L, k, m):
    """<L>_{A^k}."""
    return mk_exclusive(L, props_a(k, m))


def _ex_b(L, k):
    """<L>_{B^k}."""
    return mk_exclusive(L, props_b(k))


def _lp(fam, k, i, l):
    return gadget_prop(fam, k, i, l)


def _up(fam, k, i):
    return gadget_prop(fam, k, i)


def build_at(l, k, m):
    """at_l: one of the three phase-indexed r-atoms holds exclusively."""
    if not 1 <= l <= m:
        raise ReductionError(f"label {l} out of range 1..{m}")
    return disj(_ex({_lp("r", k, i, l)}, k, m) for i in range(3))


def build_rsuc(i, l, l2, k, m):
    parts = [_ex({_lp("r", k, _S(i), l2)}, k, m)]
    for j in range(3):
        for fam in ("a", "abar", "b", "c", "d"):
            parts.append(_ex({_lp(fam, k, i, l), _up("R", k, j)}, k, m))
    return disj(parts)


def build_Rsuc(i, k):
    parts = [_ex_b({_up(fam, k, i)}, k) for fam in ("A", "B", "C", "D", "E")]
    parts.append(_ex_b({_up("R", k, _S(i)), gadget_prop("K", k)}, k))
    return disj(parts)


def build_RKsuc(i, k):
    parts = [_ex_b({_up(fam, k, i), gadget_prop("K", k)}, k)
             for fam in ("A", "B", "C", "D")]
    parts.append(_ex_b({_up("R", k, _S(i)), gadget_prop("K", k)}, k))
    return disj(parts)


def _g1(phi):
    return mk_g("=", 1, phi)


def build_succ(k, m):
    """The until-based succession clauses of the structural formula."""
    parts = []
    for l in range(1, m + 1):
        for i in range(3):
            head = _ex({_lp("r", k, i, l)}, k, m)
            body = disj(prob(until(head, build_rsuc(i, l, l2, k, m)), "=", 1)
                        for l2 in range(1, m + 1))
            parts.append(_g1(implies(head, body)))
    for i in range(3):
        r_head = _ex_b({_up("R", k, i)}, k)
        rk_head = _ex_b({_up("R", k, i), gadget_prop("K", k)}, k)
        parts.append(_g1(and_(
            implies(r_head, prob(until(r_head, build_Rsuc(i, k)), "=", 1)),
            implies(rk_head, prob(until(rk_head, build_RKsuc(i, k)), "=", 1)))))
    return conj(parts)


def build_succ_bar(k, m):
    """The F,G-only succession clauses."""
    parts = []
    lower = sorted(props_lower(k, m))
    c_set = [p for p in lower if p.family in ("a", "abar", "b", "c", "d")]
    r_set = [p for p in lower if p.family == "r"]

    for i in range(3):
        for l in range(1, m + 1):
            head = _ex({_lp("r", k, i, l)}, k, m)
            parts.append(_g1(implies(head, disj(
                mk_f("=", 1, build_rsuc(i, l, l2, k, m))
                for l2 in range(1, m + 1)))))
    for i in range(3):
        for l in range(1, m + 1):
            head = _ex({_lp("r", k, i, l)}, k, m)
            others = disj(_ex({p}, k, m) for p in r_set
                          if (p.phase, p.label) != (i, l))
            parts.append(_g1(implies(head, mk_f("<", 1, others))))

    parts.append(_g1(disj(
        mk_exclusive({p}, props_lower(k, m)) for p in lower)))
    parts.append(_g1(conj(
        implies(atom(x), disj(_ex({x, _up("R", k, j)}, k, m) for j in range(3)))
        for x in c_set)))
    parts.append(_g1(conj(
        implies(atom(x), _ex({x}, k, m)) for x in r_set)))

    for i in range(3):
        parts.append(_g1(implies(_ex_b({_up("R", k, i)}, k),
                                 mk_f("=", 1, build_Rsuc(i, k)))))
    for i in range(3):
        parts.append(_g1(implies(
            _ex_b({_up("R", k, i), gadget_prop("K", k)}, k),
            mk_f("=", 1, build_RKsuc(i, k)))))
    for i in range(3):
        head = disj([_ex_b({_up("R", k, i)}, k),
                     _ex_b({_up("R", k, i), gadget_prop("K", k)}, k)])
        others = disj(_ex_b({_up("R", k, z), gadget_prop("K", k)}, k)
                      for z in range(3) if z != i)
        parts.append(_g1(implies(head, mk_f("<", 1, others))))

    any_b = disj(atom(p) for p in sorted(props_b(k)))
    all_sucs = disj([build_Rsuc(i, k) for i in range(3)]
                    + [build_RKsuc(i, k) for i in range(3)])
    parts.append(_g1(implies(any_b, _g1(all_sucs))))
    parts.append(_g1(implies(atom(gadget_prop("K", k)),
                             _g1(atom(gadget_prop("K", k))))))
    return conj(parts)


def marker_sets(k, m):
    """The persistence-enforced (L, O) pairs: the five lowercase singleton
    families over A \\ B, and the nine capital (optionally K-tagged) sets
    over B."""
    low_univ = props_lower(k, m)
    out = []
    for fam in ("a", "abar", "b", "c", "d"):
        for i in range(3):
            for l in range(1, m + 1):
                out.append((frozenset({_lp(fam, k, i, l)}), low_univ))
    b_univ = props_b(k)
    kp = gadget_prop("K", k)
    for i in range(3):
        for fam in ("A", "B", "C", "D"):
            out.append((frozenset({_up(fam, k, i)}), b_univ))
            out.append((frozenset({_up(fam, k, i), kp}), b_univ))
        out.append((frozenset({_up("E", k, i)}), b_univ))
    return out


def build_mark(k, m):
    parts = []
    for L, O in marker_sets(k, m):
        ex = mk_exclusive(L, O)
        parts.append(_g1(implies(ex, _g1(ex))))
    return conj(parts)


def build_lambda(k, constants=DEFAULT_CONSTANTS):
    parts = []
    for i in range(3):
        head = _ex_b({_up("R", k, i)}, k)
        body = mk_g("=", constants.lam,
                    disj([atom(_up("R", k, i)), atom(_up("E", k, i))]))
        parts.append(_g1(implies(head, body)))
    return conj(parts)


def build_struct(m, k, fragment=WITH_UNTIL, constants=DEFAULT_CONSTANTS):
    if fragment == WITH_UNTIL:
        succ = build_succ(k, m)
    elif fragment == FG_ONLY:
        succ = build_succ_bar(k, m)
    else:
        raise ReductionError(f"unknown fragment {fragment!r}")
    return conj([succ, build_mark(k, m), build_lambda(k, constants)])


def _r_family_disj(k, i, l, with_abar=True):
    parts = [atom(_lp("r", k, i, l)), atom(_lp("a", k, i, l))]
    if with_abar:
        parts.append(atom(_lp("abar", k, i, l)))
    return disj(parts)


def build_zero(k, m, constants=DEFAULT_CONSTANTS):
    z1, z2 = constants.z.v1, constants.z.v2
    parts = []
    for i in range(3):
        for l in range(1, m + 1):
            body = and_(
                mk_g("=", z1, _r_family_disj(k, i, l)),
                mk_g("=", z2, disj([atom(_lp("r", k, i, l)),
                                    atom(_lp("b", k, i, l))])))
            parts.append(implies(atom(_lp("r", k, i, l)), body))
    for i in range(3):
        body = and_(
            mk_g("=", z1, disj([atom(_up("R", k, i)), atom(_up("A", k, i))])),
            mk_g("=", z2, disj([atom(_up("R", k, i)), atom(_up("B", k, i))])))
        parts.append(implies(atom(_up("R", k, i)), body))
    return conj(parts)


def build_eligible(k, m, constants=DEFAULT_CONSTANTS):
    z1 = constants.z.v1
    beta = constants.beta_low
    parts = []
    for i in range(3):
        for l in range(1, m + 1):
            fam = _r_family_disj(k, i, l)
            body = and_(mk_g("<=", z1, fam), mk_g(">=", beta, fam))
            parts.append(_g1(implies(atom(_lp("r", k, i, l)), body)))
    for i in range(3):
        fam = disj([atom(_up("R", k, i)), atom(_up("A", k, i))])
        body = and_(mk_g("<=", z1, fam), mk_g(">=", beta, fam))
        parts.append(_g1(implies(atom(_up("R", k, i)), body)))
    return conj(parts)


def build_copy_i(i, k, constants=DEFAULT_CONSTANTS):
    d = constants.delta
    return and_(
        mk_g("=", d, disj([atom(_up("R", k, i)), atom(_up("A", k, i)),
                           atom(_up("C", k, i))])),
        mk_f("=", d, disj([atom(_up("R", k, _S(i))), atom(_up("C", k, i))])))


def build_succ_i(i, k, constants=DEFAULT_CONSTANTS):
    lam = constants.lam
    tail = [atom(_up("C", k, _S(i))), atom(_up("D", k, _S(i))),
            atom(_up("R", k, _S(_S(i))))]
    return and_(
        mk_f("=", lam, disj([atom(_up("B", k, _S(i)))] + tail)),
        mk_f("=", lam, disj([atom(_up("B", k, i))] + tail)))


def build_decrement(k, m, constants=DEFAULT_CONSTANTS):
    zero = build_zero(k, m, constants)
    parts = []
    for i in range(3):
        head = and_(atom(_up("R", k, i)), not_(zero))
        parts.append(implies(head, and_(build_copy_i(i, k, constants),
                                        build_succ_i(i, k, constants))))
    return conj(parts)


def build_init(k, m, constants=DEFAULT_CONSTANTS):
    return conj([
        _ex({_lp("r", k, 0, 1)}, k, m),
        build_zero(k, m, constants),
        build_eligible(k, m, constants),
        _g1(build_decrement(k, m, constants)),
    ])


def build_udec(i, l, l2, k, m, constants=DEFAULT_CONSTANTS):
    z1, z2 = constants.z.v1, constants.z.v2
    d, lam = constants.delta, constants.lam
    zero = build_zero(k, m, constants)
    Si = _S(i)
    # at a zero state the r-successor mass is z1 and each successor again
    # encodes zero, so the G-masses through the successor's a/abar and b
    # families are z1*z1 and z1*z2
    zero_branch = and_(
        mk_g("=", z1 * z1,
             disj([atom(_lp("r", k, i, l)), atom(_lp("r", k, Si, l2)),
                   atom(_lp("a", k, Si, l2)), atom(_lp("abar", k, Si, l2))])),
        mk_g("=", z1 * z2,
             disj([atom(_lp("r", k, i, l)), atom(_lp("r", k, Si, l2)),
                   atom(_lp("b", k, Si, l2))])))
    ucopy = and_(
        mk_g("=", d, disj([atom(_lp("r", k, i, l)), atom(_lp("a", k, i, l)),
                           atom(_lp("abar", k, i, l)), atom(_lp("c", k, i, l))])),
        mk_f("=", d, disj([atom(_lp("r", k, Si, l2)), atom(_lp("c", k, i, l))])))
    deep = disj(atom(_lp("r", k, _S(Si), x)) for x in range(1, m + 1))
    tail = [atom(_lp("c", k, Si, l2)), atom(_lp("d", k, Si, l2)), deep]
    usucc = and_(
        mk_f("=", lam, disj([atom(_lp("b", k, Si, l2))] + tail)),
        mk_f("=", lam, disj([atom(_lp("b", k, i, l))] + tail)))
    return and_(implies(zero, zero_branch),
                implies(not_(zero), and_(ucopy, usucc)))


def build_uinc(i, l, l2, k, m, constants=DEFAULT_CONSTANTS):
    z = constants
    zero = build_zero(k, m, z)
    Si = _S(i)
    r_il = atom(_lp("r", k, i, l))
    a_il = atom(_lp("a", k, i, l))
    abar_il = atom(_lp("abar", k, i, l))
    K = atom(gadget_prop("K", k))
    any_R = [atom(_up("R", k, j)) for j in range(3)]
    any_A = [atom(_up("A", k, j)) for j in range(3)]
    any_B = [atom(_up("B", k, j)) for j in range(3)]

    # The A- and B-measuring families are sealed against the successor
    # label's own marker fan-out (the b'/c'/d' resp. a'/c'/d' branches of
    # the next simulation state), which would otherwise add G-mass beyond
    # the intended successor-vector sums; dually, the K-escape literal
    # admits the successor-label markers so the measured subtrees absorb
    # their full branch mass.
    a_next = atom(_lp("a", k, Si, l2))
    abar_next = atom(_lp("abar", k, Si, l2))
    b_next = atom(_lp("b", k, Si, l2))
    c_next = atom(_lp("c", k, Si, l2))
    d_next = atom(_lp("d", k, Si, l2))
    one = mk_g("=", z.lam, conj([
        disj([r_il] + any_R + [atom(_lp("r", k, Si, l2)), a_next, abar_next]
             + any_A),
        implies(K, disj([a_next, abar_next])),
        not_(a_il), not_(abar_il),
        not_(b_next), not_(c_next), not_(d_next)]))
    two = mk_g("=", z.rho, conj([
        disj([r_il] + any_R + [atom(_lp("r", k, Si, l2)), abar_il]
             + any_B + [b_next]),
        not_(a_il), implies(K, disj([abar_il, b_next])),
        not_(a_next), not_(c_next), not_(d_next)]))
    three = mk_g("=", z.rho, conj([
        disj([r_il] + any_R + [abar_il]
             + [and_(atom(_up("E", k, j)), atom(_lp("b", k, i, l)))
                for j in range(3)]),
        implies(K, abar_il)]))
    four = implies(not_(zero), mk_g("=", z.lam, and_(
        disj([r_il, a_il, abar_il]),
        conj(implies(atom(_up("A", k, j)), K) for j in range(3)))))
    five = implies(not_(zero), mk_g("=", z.delta, and_(
        disj([r_il, atom(_lp("c", k, i, l))]
             + [and_(atom(_up("R", k, j)), a_il) for j in range(3)]
             + [and_(atom(_up("R", k, j)), abar_il) for j in range(3)]
             + any_B),
        implies(K, atom(_lp("c", k, i, l))))))
    six = implies(not_(zero), mk_g("=", z.delta, disj(
        [r_il, atom(_lp("b", k, i, l)), atom(_lp("c", k, i, l))])))
    return conj([one, two, three, four, five, six])


def build_step(i, l, l2, instr, k, m, constants=DEFAULT_CONSTANTS,
               fragment=WITH_UNTIL):
    """One phase of the step formula: the exclusive r-head implies the
    target-selecting propagation plus the counter-update constraints."""
    head = _ex({_lp("r", k, i, l)}, k, m)
    rsuc = build_rsuc(i, l, l2, k, m)
    if fragment == WITH_UNTIL:
        propagate = prob(until(head, rsuc), "=", 1)
    elif fragment == FG_ONLY:
        propagate = mk_f("=", 1, rsuc)
    else:
        raise ReductionError(f"unknown fragment {fragment!r}")
    if instr.updates[k - 1] == "dec":
        update = build_udec(i, l, l2, k, m, constants)
    else:
        update = build_uinc(i, l, l2, k, m, constants)
    return implies(head, and_(propagate, update))


def build_step_all(l, l2, instr, k, m, constants=DEFAULT_CONSTANTS,
                   fragment=WITH_UNTIL):
    return conj(build_step(i, l, l2, instr, k, m, constants, fragment)
                for i in range(3))


def build_newsim(l, k, machine, constants=DEFAULT_CONSTANTS,
                 fragment=WITH_UNTIL):
    """Per-label simulation clause: target choice guarded by the tested
    counter's zero formula and the partner copy's at_l, plus the
    abandonment clause (self-targeted decrement) when the partner left."""
    m = machine.m
    instr = machine.instruction(l)
    other = 2 if k == 1 else 1
    new_zero = build_zero(instr.test_counter, m, constants)
    at_other = build_at(l, other, m)

    zero_steps = disj(build_step_all(l, l2, instr, k, m, constants, fragment)
                      for l2 in sorted(instr.zero_targets))
    pos_steps = disj(build_step_all(l, l2, instr, k, m, constants, fragment)
                     for l2 in sorted(instr.pos_targets))
    parts = [
        implies(and_(new_zero, at_other), zero_steps),
        implies(and_(not_(new_zero), at_other), pos_steps),
    ]
    for i in range(3):
        head = and_(_ex({_lp("r", k, i, l)}, k, m), not_(at_other))
        rsuc = build_rsuc(i, l, l, k, m)
        if fragment == WITH_UNTIL:
            propagate = prob(until(_ex({_lp("r", k, i, l)}, k, m), rsuc), "=", 1)
        else:
            propagate = mk_f("=", 1, rsuc)
        parts.append(implies(head, and_(
            propagate, build_udec(i, l, l, k, m, constants))))
    return conj(parts)


def build_sync(m):
    parts = []
    for l in range(1, m + 1):
        for i in range(3):
            here = and_(atom(_lp("r", 1, i, l)), atom(_lp("r", 2, i, l)))
            options = disj(
                mk_g(">", 0, disj([
                    here,
                    and_(atom(_lp("r", 1, _S(i), l2)), atom(_lp("r", 2, _S(i), l2))),
                    atom(_lp("a", 1, _S(i), l2))]))
                for l2 in range(1, m + 1))
            parts.append(_g1(implies(here, options)))
    return conj(parts)


def build_recurrent(tau, m):
    tau = sorted(set(tau))
    if not tau:
        raise ReductionError("recurrence label set must be nonempty")
    if any(not 1 <= l <= m for l in tau):
        raise ReductionError("recurrence label out of range")
    target = disj(and_(build_at(l2, 1, m), build_at(l2, 2, m)) for l2 in tau)
    parts = []
    for l in range(1, m + 1):
        here = and_(build_at(l, 1, m), build_at(l, 2, m))
        parts.append(implies(here, mk_f(">", 0, target)))
    return _g1(conj(parts))


@dataclass(frozen=True)
class ReductionConfig:
    constants: object = DEFAULT_CONSTANTS
    fragment: str = WITH_UNTIL
    variant: str = FINITE_SAT
    tau: Optional[FrozenSet[int]] = None

    def __post_init__(self):
        if self.fragment not in (WITH_UNTIL, FG_ONLY):
            raise ReductionError(f"unknown fragment {self.fragment!r}")
        if self.variant not in (RECURRENT, FINITE_SAT):
            raise ReductionError(f"unknown variant {self.variant!r}")
        if self.variant == RECURRENT and not self.tau:
            raise ReductionError("recurrent variant needs a nonempty tau")


@dataclass
class Part:
    """Named conjunct tree used for failure reporting."""

    name: str
    formula: StateFormula
    children: List["Part"]


def _part(name, formula, children=()):
    return Part(name, formula, list(children))


def compile_parts(machine, cfg):
    """The compiled formula as a named conjunct tree (root.formula is the
    full formula)."""
    if machine.d != 2:
        raise ReductionError("the reduction compiles two-counter machines")
    m = machine.m
    c = cfg.constants
    copies = []
    for k in (1, 2):
        sims = []
        for l in range(1, m + 1):
            sims.append(_part(
                f"at_{l}=>sim_{l}",
                implies(build_at(l, k, m),
                        build_newsim(l, k, machine, c, cfg.fragment))))
        sim_all = _g1(conj(p.formula for p in sims))
        struct = _part(f"struct^{k}", build_struct(m, k, cfg.fragment, c), [
            _part(f"succ^{k}",
                  build_succ(k, m) if cfg.fragment == WITH_UNTIL
                  else build_succ_bar(k, m)),
            _part(f"mark^{k}", build_mark(k, m)),
            _part(f"lambda^{k}", build_lambda(k, c)),
        ])
        init = _part(f"init^{k}", build_init(k, m, c), [
            _part(f"init^{k}.at-start", _ex({_lp("r", k, 0, 1)}, k, m)),
            _part(f"init^{k}.zero", build_zero(k, m, c)),
            _part(f"init^{k}.eligible", build_eligible(k, m, c)),
            _part(f"init^{k}.decrement", _g1(build_decrement(k, m, c))),
        ])
        sim_part = _part(f"sim^{k}", sim_all, sims)
        copies.append(_part(
            f"psi^{k}",
            conj([struct.formula, init.formula, sim_all]),
            [struct, init, sim_part]))
    parts = copies + [_part("sync", build_sync(m))]
    if cfg.variant == RECURRENT:
        parts.append(_part("recurrent", build_recurrent(cfg.tau, m)))
    root_formula = conj(p.formula for p in parts)
    return _part("phi", root_formula, parts)


def compile(machine, cfg=ReductionConfig()):
    return compile_parts(machine, cfg).formula


def stats(phi):
    """Sharing statistics: distinct DAG nodes vs expanded tree size."""
    nodes = subformulae(phi)
    sizes = {}
    for f in nodes:
        if f.kind in ("true", "atom"):
            sizes[f.uid] = 1
        elif f.kind == "not":
            sizes[f.uid] = 1 + sizes[f.left.uid]
        elif f.kind == "and":
            sizes[f.uid] = 1 + sizes[f.left.uid] + sizes[f.right.uid]
        else:
            p = f.path
            if p.kind == "next":
                sizes[f.uid] = 2 + sizes[p.left.uid]
            else:
                sizes[f.uid] = 2 + sizes[p.left.uid] + sizes[p.right.uid]
    n_atoms = sum(1 for f in nodes if f.kind == "atom")
    return {"distinct_nodes": len(nodes), "tree_size": sizes[phi.uid],
            "atoms": n_atoms}


def explain_failure(checker, part, state, prefix=()):
    """Minimal named conjuncts of the part tree failing at the state, with
    exact probabilities for failing probability nodes underneath them."""
    out = []
    satmap = checker.sat(part.formula)
    if state in satmap[part.formula.uid]:
        return out
    path = prefix + (part.name,)
    failing_children = [ch for ch in part.children
                        if state not in checker.sat(ch.formula)[ch.formula.uid]]
    if failing_children:
        for ch in failing_children:
            out.extend(explain_failure(checker, ch, state, path))
        return out
    detail = []
    for sub in subformulae(part.formula):
        if sub.kind == "prob" and state not in checker.sat(sub)[sub.uid]:
            vec = checker.path_prob(sub.path)
            detail.append(f"P = {vec[state]} for {print_formula(sub)}")
            if len(detail) >= 5:
                break
    out.append(("/".join(path), detail))
    return out
