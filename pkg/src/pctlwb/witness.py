"""Finite witness Markov chains for lasso computations.

Given a deterministic two-counter machine and a lasso computation, this
module builds the finite chain whose initial state carries r-atoms for
both proposition copies and models the finite-satisfiability formula.
States are tuples [index, props, n1, n2]; the chain is the least fixed
point of closure rules keyed by which relevant atoms (r / R per copy) a
state carries.  Counter value n appears as the probability pair
counter_vec(n) = Inc^n(z) in the outgoing rows.

Printed residuals are never trusted: every row's residual is recomputed
as 1 minus the sum of its siblings, and disagreements with the printed
closed forms are logged as diagnostics.  Two further normalizations are
applied so the chain satisfies the compiled formula's global structure:

* an R-relevant copy without the K tag carries a lambda-weighted E
  branch (its exclusive-R states must lose exactly lambda of G-mass to
  E states); a K-tagged copy does not (its successor palette excludes E);
* the split parameter r of increment rows is, by default, solved from
  the chain so the rho-bounded G-constraint holds exactly; the printed
  closed form is evaluated alongside and logged when it disagrees or
  falls outside (0, <c>_1).

The loop of the lasso is unrolled to a multiple of three steps so the
phase index i = j mod 3 closes up along the back edge.
"""

from dataclasses import dataclass, field
from math import gcd
from typing import Dict, FrozenSet, List, Optional, Tuple

from ._rational import ONE, Rat, ZERO, rat_to_text
from .checker import ModelChecker
from .formula import Proposition, gadget_prop
from .geometry import DEFAULT_CONSTANTS, Vec2, inc_iter
from .markov import MarkovChain, validate


class WitnessError(RuntimeError):
    pass


class StateCapExceeded(WitnessError):
    pass


def counter_vec(n, constants=DEFAULT_CONSTANTS):
    """The probability pair encoding counter value n."""
    return inc_iter(n, constants)


@dataclass(frozen=True)
class WitnessState:
    """[index, props, n1, n2]; index None marks merged terminal states."""

    index: Optional[int]
    props: FrozenSet[Proposition]
    n1: int
    n2: int

    def pretty(self):
        idx = "*" if self.index is None else str(self.index)
        names = " ".join(p.name for p in sorted(self.props))
        return f"[{idx}; {names}; {self.n1},{self.n2}]"


def _relevant(props, k):
    """The r- or R-atom of copy k, or None (free copy)."""
    r_atom = None
    R_atom = None
    for p in props:
        if p.is_gadget and p.copy == k:
            if p.family == "r":
                r_atom = p
            elif p.family == "R":
                R_atom = p
    if r_atom is not None and R_atom is not None:
        raise WitnessError(f"copy {k} carries both r and R: {sorted(props)}")
    return r_atom or R_atom


def is_free(props):
    return all(not (p.is_gadget and p.family in ("r", "R")) for p in props)


@dataclass
class WitnessReport:
    chain: MarkovChain
    states: List[WitnessState]
    state_map: Dict[WitnessState, int]
    init: int
    diagnostics: List[str]
    r_sites: List[dict]
    constants: object
    machine_name: str
    _checker: Optional[ModelChecker] = field(default=None, repr=False)
    _gvec_cache: dict = field(default_factory=dict, repr=False)

    def checker(self):
        if self._checker is None:
            self._checker = ModelChecker(self.chain)
        return self._checker

    def prob_g_atoms(self, atom_set):
        """Exact P(G "some atom of atom_set holds") for every state."""
        key = frozenset(atom_set)
        vec = self._gvec_cache.get(key)
        if vec is None:
            good = {s for s in self.chain.states
                    if self.chain.props(s) & key}
            vec = self.checker().prob_g_set(good)
            self._gvec_cache[key] = vec
        return vec


def characteristic_vector(report, state_id, k):
    """gamma^k of a k-relevant state: the exact probabilities of the two
    G-shaped path formulae tied to its r/R atom."""
    props = report.chain.props(state_id)
    rel = _relevant(props, k)
    if rel is None:
        raise WitnessError(f"state {state_id} is not {k}-relevant")
    if rel.family == "r":
        i, l = rel.phase, rel.label
        phi = {gadget_prop("r", k, i, l), gadget_prop("a", k, i, l),
               gadget_prop("abar", k, i, l)}
        psi = {gadget_prop("r", k, i, l), gadget_prop("b", k, i, l)}
    else:
        i = rel.phase
        phi = {gadget_prop("R", k, i), gadget_prop("A", k, i)}
        psi = {gadget_prop("R", k, i), gadget_prop("B", k, i)}
    return Vec2(report.prob_g_atoms(phi)[state_id],
                report.prob_g_atoms(psi)[state_id])


# ---------------------------------------------------------------------------
# closure construction
# ---------------------------------------------------------------------------

def _S(i):
    return (i + 1) % 3


class _Builder:
    def __init__(self, machine, lasso, constants, state_cap, r_values,
                 diagnostics):
        self.machine = machine
        self.lasso = lasso
        self.c = constants
        self.cap = state_cap
        self.r_values = r_values      # site key -> Rat, filled by caller
        self.diag = diagnostics
        self._diag_seen = set()
        self.r_sites = {}             # site key -> info dict
        # unroll the loop so its length is a multiple of 3
        self.t0 = lasso.alpha - 1
        period = lasso.period
        self.period = period * (3 // gcd(period, 3))
        self.u = self.t0 + self.period
        self.rows = {}                # WitnessState -> list[(Rat, WitnessState)]

    # -- vocabulary helpers -------------------------------------------------

    def vec(self, n):
        return counter_vec(n, self.c)

    def conf(self, j):
        return self.lasso.config(j)

    def _intern(self, index, props, n1, n2):
        props = frozenset(props)
        if is_free(props):
            index = None
        return WitnessState(index, props, n1, n2)

    # -- rule blocks ----------------------------------------------------

    def successor_rows(self, st):
        rel1 = _relevant(st.props, 1)
        rel2 = _relevant(st.props, 2)
        if rel1 is None and rel2 is None:
            return [(ONE, st)]
        kinds = ((rel1.family if rel1 else "-")
                 + (rel2.family if rel2 else "-"))
        if kinds == "rr":
            return self._main_rows(st, rel1, rel2)
        if kinds == "rR":
            return self._mixed_rows(st, rel1, rel2, 1)
        if kinds == "Rr":
            return self._mixed_rows(st, rel2, rel1, 2)
        if kinds == "r-":
            return self._single_r_rows(st, rel1, 1)
        if kinds == "-r":
            return self._single_r_rows(st, rel2, 2)
        if kinds == "RR":
            return self._r_pair_rows(st, rel1, rel2)
        if kinds == "R-":
            return self._single_R_rows(st, rel1, 1)
        if kinds == "-R":
            return self._single_R_rows(st, rel2, 2)
        raise WitnessError(f"no closure rule for state {st.pretty()}")

    def diag_once(self, key, message):
        if key not in self._diag_seen:
            self._diag_seen.add(key)
            self.diag.append(message)

    def _finish(self, st, rows, rule, printed_q, q_target):
        """Append the residual row and check it against the printed form."""
        total = sum((w for w, _ in rows), ZERO)
        q = ONE - total
        if printed_q is not None and printed_q != q:
            self.diag_once(
                ("residual", rule),
                f"{rule} at {st.pretty()}: printed residual "
                f"{rat_to_text(printed_q)} != recomputed {rat_to_text(q)}; "
                "using the recomputed value")
        if q_target is not None:
            rows = rows + [(q, q_target)]
        elif q != 0:
            raise WitnessError(
                f"{rule} at {st.pretty()}: rows sum to {rat_to_text(total)}")
        for w, target in rows:
            if w <= 0 or w > 1:
                raise WitnessError(
                    f"{rule} at {st.pretty()}: transition probability "
                    f"{rat_to_text(w)} to {target.pretty()} outside (0,1]; "
                    f"constants {self.c}")
        merged = {}
        order = []
        for w, target in rows:
            if target in merged:
                merged[target] += w
            else:
                merged[target] = w
                order.append(target)
        return [(merged[t], t) for t in order]

    # lowercase / uppercase prop constructors, copy-k
    @staticmethod
    def lp(fam, k, i, l):
        return gadget_prop(fam, k, i, l)

    @staticmethod
    def up(fam, k, i):
        return gadget_prop(fam, k, i)

    @staticmethod
    def K(k):
        return gadget_prop("K", k)

    def _r_param(self, st, k, c, i, l, l2):
        """Split parameter for an increment row group (copy k, value c)."""
        key = (st, k)
        printed = self.c.rho - self.vec(c + 1).v2 * (1 - self.vec(c).v1)
        cap = self.vec(c).v1
        used = self.r_values.get(key)
        if used is None:
            # pass-1 placeholder: printed value when usable, else mid-range
            used = printed if 0 < printed < cap else cap / 2
        self.r_sites[key] = {
            "state": st, "copy": k, "counter": c, "phase": i, "label": l,
            "target_label": l2, "printed_r": printed, "used_r": used,
        }
        if not 0 < used < cap:
            raise WitnessError(
                f"inc split parameter r = {rat_to_text(used)} outside "
                f"(0, {rat_to_text(cap)}) at {st.pretty()} copy {k} "
                f"(printed form gives {rat_to_text(printed)}); constants {self.c}")
        return used

    def _main_rows(self, st, rel1, rel2):
        j = st.index
        i, l = rel1.phase, rel1.label
        if (rel2.phase, rel2.label) != (i, l):
            raise WitnessError(f"desynchronized main state {st.pretty()}")
        if i != j % 3:
            raise WitnessError(f"phase {i} != {j} mod 3 at {st.pretty()}")
        ins = self.machine.instruction(l)
        upd1, upd2 = ins.updates
        c1, c2 = st.n1, st.n2
        v1, v2 = self.vec(c1), self.vec(c2)
        nj = j + 1 if j + 1 < self.u else self.t0
        nxt = self.conf(j + 1)
        l2 = nxt.label
        Si = _S(i)
        main = self._intern(
            nj,
            {self.lp("r", 1, Si, l2), self.lp("r", 2, Si, l2)},
            nxt.counters[0], nxt.counters[1])

        def pair(p1, p2, n1, n2, extra=()):
            props = {p1, p2, self.up("R", 1, i), self.up("R", 2, i)}
            props.update(extra)
            return self._intern(j, props, n1, n2)

        a1 = self.lp("a", 1, i, l)
        ab1 = self.lp("abar", 1, i, l)
        b1 = self.lp("b", 1, i, l)
        cc1 = self.lp("c", 1, i, l)
        d1 = self.lp("d", 1, i, l)
        a2 = self.lp("a", 2, i, l)
        ab2 = self.lp("abar", 2, i, l)
        b2 = self.lp("b", 2, i, l)
        cc2 = self.lp("c", 2, i, l)
        d2 = self.lp("d", 2, i, l)
        delta = self.c.delta

        if upd1 == "dec" and upd2 == "dec":
            rows = [
                (v1.v1, pair(a1, d2, 0, 0)),
                (v1.v2, pair(b1, d2, 0, 0)),
                (delta - v1.v1, pair(cc1, d2, 0, 0)),
                (v2.v1, pair(d1, a2, 0, 0)),
                (v2.v2, pair(d1, b2, 0, 0)),
                (delta - v2.v1, pair(d1, cc2, 0, 0)),
            ]
            if v1.v1 > v2.v1:
                p, pp = v2.v1, v1.v1 - v2.v1
                rows.append((p, main))
                rows.append((pp, self._intern(
                    j, {self.lp("r", 1, Si, l2), d2, self.up("R", 2, Si)},
                    max(0, c1 - 1), 0)))
            elif v1.v1 < v2.v1:
                p, pp = v1.v1, v2.v1 - v1.v1
                rows.append((p, main))
                rows.append((pp, self._intern(
                    j, {d1, self.lp("r", 2, Si, l2), self.up("R", 1, Si)},
                    0, max(0, c2 - 1))))
            else:
                p, pp = v1.v1, ZERO
                rows.append((p, main))
            printed_q = 1 - v1.v2 - v2.v2 - 2 * delta - p - pp
            return self._finish(st, rows, "dec,dec", printed_q,
                                pair(d1, d2, 0, 0))

        if upd1 == "dec" and upd2 == "inc":
            r = self._r_param(st, 2, c2, i, l, l2)
            rows = [
                (v1.v1, pair(a1, d2, 0, c2 + 1)),
                (v1.v2, pair(b1, d2, 0, c2 + 1)),
                (delta - v1.v1, pair(cc1, d2, 0, c2 + 1)),
                (v2.v1 - r, pair(d1, a2, 0, max(0, c2 - 1))),
                (r, pair(d1, ab2, 0, max(0, c2 - 1))),
                (v2.v2, pair(d1, b2, 0, c2 + 1)),
                (delta - v2.v2, pair(d1, cc2, 0, c2 + 1)),
                (v1.v1, main),
            ]
            printed_q = 1 - v1.v2 - v2.v1 - v1.v1 - 2 * delta
            return self._finish(st, rows, "dec,inc", printed_q,
                                pair(d1, d2, 0, c2 + 1))

        if upd1 == "inc" and upd2 == "dec":
            r = self._r_param(st, 1, c1, i, l, l2)
            rows = [
                (v2.v1, pair(d1, a2, c1 + 1, 0)),
                (v2.v2, pair(d1, b2, c1 + 1, 0)),
                (delta - v2.v1, pair(d1, cc2, c1 + 1, 0)),
                (v1.v1 - r, pair(a1, d2, max(0, c1 - 1), 0)),
                (r, pair(ab1, d2, max(0, c1 - 1), 0)),
                (v1.v2, pair(b1, d2, c1 + 1, 0)),
                (delta - v1.v2, pair(cc1, d2, c1 + 1, 0)),
                (v2.v1, main),
            ]
            printed_q = 1 - v2.v2 - v1.v1 - v2.v1 - 2 * delta
            return self._finish(st, rows, "inc,dec", printed_q,
                                pair(d1, d2, c1 + 1, 0))

        # inc,inc: residual is split over the main edge and the d,d edge
        r1 = self._r_param(st, 1, c1, i, l, l2)
        r2 = self._r_param(st, 2, c2, i, l, l2)
        rows = [
            (v1.v1 - r1, pair(a1, d2, max(0, c1 - 1), c2 + 1)),
            (r1, pair(ab1, d2, max(0, c1 - 1), c2 + 1)),
            (v1.v2, pair(b1, d2, c1 + 1, c2 + 1)),
            (delta - v1.v2, pair(cc1, d2, c1 + 1, c2 + 1)),
            (v2.v1 - r2, pair(d1, a2, c1 + 1, max(0, c2 - 1))),
            (r2, pair(d1, ab2, c1 + 1, max(0, c2 - 1))),
            (v2.v2, pair(d1, b2, c1 + 1, c2 + 1)),
            (delta - v2.v2, pair(d1, cc2, c1 + 1, c2 + 1)),
        ]
        total = sum((w for w, _ in rows), ZERO)
        q = (ONE - total) / 2
        printed_2q = 1 - v2.v2 - v1.v1 - v2.v1 - 2 * self.c.delta
        if printed_2q != 2 * q:
            self.diag.append(
                f"inc,inc at {st.pretty()}: printed residual 2q = "
                f"{rat_to_text(printed_2q)} disagrees with the row sum; using "
                f"2q = {rat_to_text(2 * q)}")
        rows.append((q, main))
        return self._finish(st, rows, "inc,inc", None,
                            pair(d1, d2, c1 + 1, c2 + 1))

    def _mixed_rows(self, st, r_atom, R_atom, rk):
        """[j, alpha, r^rk_{i,l}, R^ok_i, c, 0]: the r-copy rk keeps
        simulating (self-targeted), the R-copy ok resolves its gadget."""
        ok = 2 if rk == 1 else 1
        i, l = r_atom.phase, r_atom.label
        if R_atom.phase != i:
            raise WitnessError(f"phase mismatch in mixed state {st.pretty()}")
        if self.K(ok) in st.props:
            raise WitnessError(f"unexpected K tag in mixed state {st.pretty()}")
        j = st.index
        c = st.n1 if rk == 1 else st.n2
        if (st.n2 if rk == 1 else st.n1) != 0:
            raise WitnessError(f"nonzero absorbed counter at {st.pretty()}")
        v = self.vec(c)
        z1, z2 = self.c.z.v1, self.c.z.v2
        delta, lam = self.c.delta, self.c.lam
        alpha = st.props - {r_atom, R_atom}
        Si = _S(i)

        def nxt(extra, n_r, n_o=0):
            n1, n2 = (n_r, n_o) if rk == 1 else (n_o, n_r)
            return self._intern(j, alpha | set(extra), n1, n2)

        rows = [
            (v.v1, nxt({self.lp("a", rk, i, l), self.up("R", rk, i),
                        self.up("D", ok, i)}, 0)),
            (v.v2, nxt({self.lp("b", rk, i, l), self.up("R", rk, i),
                        self.up("D", ok, i)}, 0)),
            (delta - v.v1, nxt({self.lp("c", rk, i, l), self.up("R", rk, i),
                                self.up("D", ok, i)}, 0)),
            (v.v1, nxt({self.lp("r", rk, Si, l), self.up("D", ok, i)},
                       max(0, c - 1))),
            (z1, nxt({self.lp("d", rk, i, l), self.up("R", rk, i),
                      self.up("A", ok, i)}, 0)),
            (z2, nxt({self.lp("d", rk, i, l), self.up("R", rk, i),
                      self.up("B", ok, i)}, 0)),
            (delta - z1, nxt({self.lp("d", rk, i, l), self.up("R", rk, i),
                              self.up("C", ok, i)}, 0)),
            (lam, nxt({self.lp("d", rk, i, l), self.up("R", rk, i),
                       self.up("E", ok, i)}, 0)),
            (z1, nxt({self.lp("d", rk, i, l), self.up("R", rk, Si),
                      self.up("R", ok, Si), self.K(ok)}, 0)),
        ]
        printed_q = 1 - v.v2 - v.v1 - z2 - z1 - 2 * delta - lam
        q_target = nxt({self.lp("d", rk, i, l), self.up("R", rk, i),
                        self.up("D", ok, i)}, 0)
        return self._finish(st, rows, f"mixed r{rk}", printed_q, q_target)

    def _single_r_rows(self, st, r_atom, rk):
        """[j, alpha, r^rk_{i,l}, c, 0]: abandoned copy decrements forever."""
        i, l = r_atom.phase, r_atom.label
        j = st.index
        c = st.n1 if rk == 1 else st.n2
        v = self.vec(c)
        delta = self.c.delta
        alpha = st.props - {r_atom}

        def nxt(extra, n_r):
            n1, n2 = (n_r, 0) if rk == 1 else (0, n_r)
            return self._intern(j, alpha | set(extra), n1, n2)

        rows = [
            (v.v1, nxt({self.lp("a", rk, i, l), self.up("R", rk, i)}, 0)),
            (v.v2, nxt({self.lp("b", rk, i, l), self.up("R", rk, i)}, 0)),
            (delta - v.v1, nxt({self.lp("c", rk, i, l), self.up("R", rk, i)}, 0)),
            (v.v1, nxt({self.lp("r", rk, _S(i), l)}, max(0, c - 1))),
        ]
        printed_q = 1 - v.v2 - v.v1 - delta
        q_target = nxt({self.lp("d", rk, i, l), self.up("R", rk, i)}, 0)
        return self._finish(st, rows, f"single r{rk}", printed_q, q_target)

    def _R_group(self, st, k, i, c, partner_marker):
        """Successor group of an R-relevant copy: A/B/C(/E)/K-continuation.
        The E branch exists exactly when the copy is not K-tagged (the
        K-tagged successor palette has no E)."""
        lam, delta = self.c.lam, self.c.delta
        v = self.vec(c)
        tagged = self.K(k) in st.props
        group = [
            (v.v1, {self.up("A", k, i)} | partner_marker),
            (v.v2, {self.up("B", k, i)} | partner_marker),
            (delta - v.v1, {self.up("C", k, i)} | partner_marker),
        ]
        if not tagged:
            group.append((lam, {self.up("E", k, i)} | partner_marker))
        cont = ({self.up("R", k, _S(i)), self.K(k)} | partner_marker,
                max(c - 1, 0))
        return group, cont, tagged

    def _r_pair_rows(self, st, R1, R2):
        i = R1.phase
        if R2.phase != i:
            raise WitnessError(f"phase mismatch in R-pair {st.pretty()}")
        j = st.index
        c1, c2 = st.n1, st.n2
        alpha = st.props - {R1, R2}
        d1m = {self.up("D", 1, i)}
        d2m = {self.up("D", 2, i)}

        group1, cont1, tagged1 = self._R_group(st, 1, i, c1, d2m)
        group2, cont2, tagged2 = self._R_group(st, 2, i, c2, d1m)

        rows = []
        for w, extra in group1:
            rows.append((w, self._intern(j, alpha | extra, 0, 0)))
        cont_props, n1c = cont1
        rows.append((self.vec(c1).v1,
                     self._intern(j, alpha | cont_props, n1c, 0)))
        for w, extra in group2:
            rows.append((w, self._intern(j, alpha | extra, 0, 0)))
        cont_props, n2c = cont2
        rows.append((self.vec(c2).v1,
                     self._intern(j, alpha | cont_props, 0, n2c)))

        printed_q = (1 - self.vec(c1).v2 - self.vec(c1).v1
                     - self.vec(c2).v2 - self.vec(c2).v1
                     - 2 * self.c.lam - 2 * self.c.delta)
        if tagged1 or tagged2:
            self.diag_once(
                ("e-branch", "R-pair"),
                f"R-pair at {st.pretty()}: E branch omitted for K-tagged "
                "copy; residual adjusted (and at later states of this kind)")
            printed_q = None
        q_target = self._intern(j, alpha | d1m | d2m, 0, 0)
        return self._finish(st, rows, "R-pair", printed_q, q_target)

    def _single_R_rows(self, st, R_atom, k):
        i = R_atom.phase
        j = st.index
        c = st.n1 if k == 1 else st.n2
        alpha = st.props - {R_atom}

        group, cont, tagged = self._R_group(st, k, i, c, frozenset())

        def nxt(extra, n_r):
            n1, n2 = (n_r, 0) if k == 1 else (0, n_r)
            return self._intern(j, alpha | set(extra), n1, n2)

        rows = [(w, nxt(extra, 0)) for w, extra in group]
        cont_props, nc = cont
        rows.append((self.vec(c).v1, nxt(cont_props, nc)))
        v = self.vec(c)
        printed_q = 1 - v.v2 - v.v1 - self.c.delta
        if not tagged:
            # the lambda-weighted E branch is not in the printed block;
            # it is forced by the exclusive-R lambda constraint
            self.diag_once(
                ("e-branch", f"single R{k}"),
                f"single R{k} at {st.pretty()}: E branch added for the "
                "untagged copy; residual adjusted (and at later states of "
                "this kind)")
            printed_q = None
        q_target = nxt({self.up("D", k, i)}, 0)
        return self._finish(st, rows, f"single R{k}", printed_q, q_target)

    # -- closure ----------------------------------------------------------

    def build(self):
        init = self._intern(
            0, {self.lp("r", 1, 0, 1), self.lp("r", 2, 0, 1)}, 0, 0)
        order = [init]
        seen = {init}
        cursor = 0
        while cursor < len(order):
            st = order[cursor]
            cursor += 1
            rows = self.successor_rows(st)
            self.rows[st] = rows
            for _, target in rows:
                if target not in seen:
                    if len(seen) >= self.cap:
                        raise StateCapExceeded(
                            f"state cap {self.cap} exceeded")
                    seen.add(target)
                    order.append(target)
        return init, order


def _blue_condition(k, i, l, l2):
    """State set of the rho-bounded G-constraint of the increment gadget
    (membership judged on a state's proposition set); sealed against the
    successor label's a/c/d marker fan-out like the compiled formula."""
    Si = _S(i)
    positive = {gadget_prop("r", k, i, l), gadget_prop("r", k, Si, l2),
                gadget_prop("abar", k, i, l), gadget_prop("b", k, Si, l2)}
    positive |= {gadget_prop("R", k, j) for j in range(3)}
    positive |= {gadget_prop("B", k, j) for j in range(3)}
    a_atom = gadget_prop("a", k, i, l)
    abar_atom = gadget_prop("abar", k, i, l)
    b_next = gadget_prop("b", k, Si, l2)
    K_atom = gadget_prop("K", k)
    excluded = {a_atom, gadget_prop("a", k, Si, l2),
                gadget_prop("c", k, Si, l2), gadget_prop("d", k, Si, l2)}

    def member(props):
        if not props & positive:
            return False
        if props & excluded:
            return False
        if K_atom in props and abar_atom not in props and b_next not in props:
            return False
        return True

    return member


def _red_condition(k, i, l):
    positive = {gadget_prop("r", k, i, l), gadget_prop("abar", k, i, l)}
    positive |= {gadget_prop("R", k, j) for j in range(3)}
    b_atom = gadget_prop("b", k, i, l)
    e_atoms = {gadget_prop("E", k, j) for j in range(3)}
    abar_atom = gadget_prop("abar", k, i, l)
    K_atom = gadget_prop("K", k)

    def member(props):
        ok = bool(props & positive) or (b_atom in props and props & e_atoms)
        if not ok:
            return False
        if K_atom in props and abar_atom not in props:
            return False
        return True

    return member


def _prob_g_condition(chain, checker, member):
    good = {s for s in chain.states if member(chain.props(s))}
    return checker.prob_g_set(good)


def _materialize(builder, order):
    ids = {st: n for n, st in enumerate(order)}
    chain = MarkovChain(name="witness")
    for st, n in ids.items():
        chain.states.append(n)
        chain.valuation[n] = st.props
    for st, rows in builder.rows.items():
        chain.trans[ids[st]] = [(ids[t], w) for w, t in rows]
    chain.states.sort()
    chain.init = ids[order[0]]
    return chain, ids


def build_witness(machine, lasso, constants=DEFAULT_CONSTANTS,
                  state_cap=200000, r_mode="solved"):
    """Synthesize the witness chain for a deterministic two-counter
    machine's lasso computation.

    r_mode 'solved' (default) fixes each increment split parameter so the
    rho-bounded G-constraint holds exactly on the built chain; 'printed'
    uses the closed form from the construction tables as-is.
    """
    if machine.d != 2:
        raise WitnessError("witness construction needs a two-counter machine")
    if not machine.deterministic:
        raise WitnessError("witness construction needs a deterministic machine")
    if r_mode not in ("solved", "printed"):
        raise WitnessError(f"unknown r mode {r_mode!r}")

    diagnostics = []
    r_values = {}
    builder = _Builder(machine, lasso, constants, state_cap, r_values,
                       diagnostics)
    init_state, order = builder.build()

    if r_mode == "printed":
        for key, site in builder.r_sites.items():
            if site["used_r"] != site["printed_r"]:
                raise WitnessError(
                    "printed r parameter unusable at "
                    f"{site['state'].pretty()} copy {site['copy']}: "
                    f"{rat_to_text(site['printed_r'])} outside "
                    f"(0, {rat_to_text(counter_vec(site['counter'], constants).v1)})")
    elif builder.r_sites:
        # pass 2: solve each site's split so P(G blue-set) = rho exactly
        chain, ids = _materialize(builder, order)
        checker = ModelChecker(chain)
        gvecs = {}
        for key, site in builder.r_sites.items():
            st, k = key
            i, l, l2 = site["phase"], site["label"], site["target_label"]
            gkey = (k, i, l, l2)
            if gkey not in gvecs:
                gvecs[gkey] = _prob_g_condition(
                    chain, checker, _blue_condition(k, i, l, l2))
            gvec = gvecs[gkey]
            c_val = site["counter"]
            cap_v = counter_vec(c_val, constants).v1
            used = site["used_r"]
            a_like = None
            abar_like = None
            base = ZERO
            for target, w in chain.trans[ids[st]]:
                tprops = chain.props(target)
                if gadget_prop("abar", k, i, l) in tprops:
                    abar_like = target
                elif (gadget_prop("a", k, i, l) in tprops
                      and gadget_prop("R", k, i) in tprops):
                    a_like = target
                else:
                    base += w * gvec[target]
            if a_like is None or abar_like is None:
                raise WitnessError(f"lost track of the split rows at {st.pretty()}")
            ga, gabar = gvec[a_like], gvec[abar_like]
            if ga == gabar:
                diagnostics.append(
                    f"r solve at {st.pretty()} copy {k}: constraint does not "
                    "depend on r; keeping the pass-1 value")
                r_values[key] = used
                continue
            solved = (constants.rho - base - cap_v * ga) / (gabar - ga)
            r_values[key] = solved
            if solved != site["printed_r"]:
                diagnostics.append(
                    f"r solve at {st.pretty()} copy {k}: solved r = "
                    f"{rat_to_text(solved)}, printed closed form gives "
                    f"{rat_to_text(site['printed_r'])}")
        # rebuild with the solved parameters
        diagnostics.append(
            f"re-running closure with {len(r_values)} solved r parameters")
        builder = _Builder(machine, lasso, constants, state_cap, r_values,
                           diagnostics)
        init_state, order = builder.build()

    chain, ids = _materialize(builder, order)
    violations = validate(chain)
    if violations:
        raise WitnessError("witness chain invalid: " + "; ".join(violations))

    report = WitnessReport(
        chain=chain,
        states=order,
        state_map=ids,
        init=ids[init_state],
        diagnostics=diagnostics,
        r_sites=[{**site, "state": site["state"].pretty(),
                  "used_r": rat_to_text(r_values.get(key, site["used_r"])),
                  "printed_r": rat_to_text(site["printed_r"])}
                 for key, site in builder.r_sites.items()],
        constants=constants,
        machine_name=machine.name,
    )

    if r_mode == "solved" and builder.r_sites:
        checker = report.checker()
        for key, site in builder.r_sites.items():
            st, k = key
            i, l, l2 = site["phase"], site["label"], site["target_label"]
            blue = _prob_g_condition(chain, checker, _blue_condition(k, i, l, l2))
            sid = ids[st]
            if blue[sid] != constants.rho:
                raise WitnessError(
                    f"solved r failed to meet the rho constraint at "
                    f"{st.pretty()} copy {k}: got {rat_to_text(blue[sid])}")
            red = _prob_g_condition(chain, checker, _red_condition(k, i, l))
            if red[sid] != constants.rho:
                diagnostics.append(
                    f"companion rho constraint off at {st.pretty()} copy {k}: "
                    f"{rat_to_text(red[sid])} != {rat_to_text(constants.rho)}")
    return report


# ---------------------------------------------------------------------------
# lint
# ---------------------------------------------------------------------------

_MARKER_FAMILIES = ("a", "abar", "b", "c", "d", "A", "B", "C", "D", "E", "K")


@dataclass(frozen=True)
class LintResult:
    name: str
    passed: bool
    detail: str = ""


def lint_witness(report, formula=None):
    """Cheap structural spot checks on a built witness chain."""
    chain = report.chain
    results = []

    bad = validate(chain)
    results.append(LintResult("row-stochastic", not bad, "; ".join(bad)))

    # marker persistence: once a marker atom holds, it holds downstream
    stuck = []
    for s in chain.states:
        markers = {p for p in chain.props(s)
                   if p.is_gadget and p.family in _MARKER_FAMILIES}
        for t, _ in chain.successors(s):
            if not markers <= chain.props(t):
                stuck.append((s, t))
    results.append(LintResult(
        "marker-persistence", not stuck,
        "" if not stuck else f"markers dropped on edges {stuck[:5]}"))

    # the exclusive-R lambda constraint, checked exactly per copy
    lam_bad = []
    for s in chain.states:
        props = chain.props(s)
        for k in (1, 2):
            rel = _relevant(props, k)
            if rel is None or rel.family != "R":
                continue
            if gadget_prop("K", k) in props:
                continue
            i = rel.phase
            vec = report.prob_g_atoms(
                {gadget_prop("R", k, i), gadget_prop("E", k, i)})
            if vec[s] != report.constants.lam:
                lam_bad.append((s, k, rat_to_text(vec[s])))
    results.append(LintResult(
        "lambda-rows", not lam_bad,
        "" if not lam_bad else f"G-mass to R/E != lambda at {lam_bad[:5]}"))

    # the two delta balances of the counter-copy gadget at decrementable
    # R-states (counter > 0)
    delta_bad = []
    checker = report.checker()
    for sid, st in enumerate(report.states):
        props = chain.props(sid)
        for k in (1, 2):
            rel = _relevant(props, k)
            if rel is None or rel.family != "R":
                continue
            c = st.n1 if k == 1 else st.n2
            if c == 0:
                continue
            i = rel.phase
            g_mass = report.prob_g_atoms(
                {gadget_prop("R", k, i), gadget_prop("A", k, i),
                 gadget_prop("C", k, i)})[sid]
            f_targets = {s for s in chain.states
                         if chain.props(s) & {gadget_prop("R", k, _S(i)),
                                              gadget_prop("C", k, i)}}
            f_mass = checker.prob_f_set(f_targets)[sid]
            if g_mass != report.constants.delta or f_mass != report.constants.delta:
                delta_bad.append((sid, k, rat_to_text(g_mass), rat_to_text(f_mass)))
    results.append(LintResult(
        "copy-delta-balance", not delta_bad,
        "" if not delta_bad else f"delta balance off at {delta_bad[:5]}"))

    return results
