"""Exact PCTL model checking over finite chains.

Satisfaction sets are computed bottom-up over the hash-consed subformula
DAG; probabilities for path formulae are exact rationals:

* ``X``: one sparse matrix-vector row sum;
* ``U<=k``: the standard backward recursion;
* ``U``: prob-0 states are removed by graph search, then the remaining
  linear system ``x_s = sum w * x_t`` is solved exactly.  The system is
  processed one strongly connected component at a time (in reverse
  topological order), each block by rational Gaussian elimination with
  partial pivoting; with exact arithmetic this is the plain least-fixpoint
  solution, just ordered so that the dense elimination only ever sees tiny
  blocks.

No probability-1 precomputation is used: the exact solve already returns
exact 1 where appropriate.
"""

from ._rational import ONE, Rat, ZERO
from .formula import subformulae

_CMP_FUNCS = {
    "<=": lambda p, r: p <= r,
    "<": lambda p, r: p < r,
    ">=": lambda p, r: p >= r,
    ">": lambda p, r: p > r,
    "=": lambda p, r: p == r,
    "!=": lambda p, r: p != r,
}


class CheckerError(RuntimeError):
    pass


def _gauss_solve(A, b):
    """Solve A x = b exactly; partial pivoting on the largest entry."""
    n = len(b)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(A[r][col]))
        if A[pivot][col] == 0:
            raise CheckerError("singular after prob-0 elimination")
        if pivot != col:
            A[col], A[pivot] = A[pivot], A[col]
            b[col], b[pivot] = b[pivot], b[col]
        inv = A[col][col]
        for r in range(col + 1, n):
            factor = A[r][col] / inv
            if factor == 0:
                continue
            row, prow = A[r], A[col]
            for c in range(col, n):
                row[c] -= factor * prow[c]
            b[r] -= factor * b[col]
    x = [ZERO] * n
    for r in range(n - 1, -1, -1):
        acc = b[r]
        row = A[r]
        for c in range(r + 1, n):
            acc -= row[c] * x[c]
        x[r] = acc / row[r]
    return x


def _sccs(nodes, succ):
    """Tarjan SCC; emits components after everything they can reach."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    out = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


class ModelChecker:
    """Shared memo tables for repeated queries against one chain."""

    def __init__(self, chain):
        self.chain = chain
        self._all_states = frozenset(chain.states)
        self._pred = chain.predecessors()
        self._sat_memo = {}
        self._path_memo = {}

    # -- path probabilities -------------------------------------------------

    def prob_next(self, target):
        out = {}
        for s in self.chain.states:
            acc = ZERO
            for t, w in self.chain.successors(s):
                if t in target:
                    acc += w
            out[s] = acc
        return out

    def prob_bounded_until(self, s1, s2, k):
        if k < 0:
            raise ValueError("step bound must be >= 0")
        x = {s: (ONE if s in s2 else ZERO) for s in self.chain.states}
        middle = [s for s in self.chain.states if s in s1 and s not in s2]
        for _ in range(k):
            nxt = dict(x)
            for s in middle:
                acc = ZERO
                for t, w in self.chain.successors(s):
                    xv = x[t]
                    if xv:
                        acc += w * xv
                nxt[s] = acc
            x = nxt
        return x

    def prob_until(self, s1, s2):
        # states that can reach s2 through s1-states
        can = set(s2)
        stack = list(s2)
        while stack:
            v = stack.pop()
            for u in self._pred.get(v, ()):
                if u in s1 and u not in can:
                    can.add(u)
                    stack.append(u)
        unknown = can - set(s2)

        p = {s: ZERO for s in self.chain.states}
        for s in s2:
            p[s] = ONE

        if not unknown:
            return p

        def succ_in_unknown(u):
            return [t for t, _ in self.chain.successors(u) if t in unknown]

        for comp in _sccs(sorted(unknown), succ_in_unknown):
            comp_set = set(comp)
            if len(comp) == 1:
                u = comp[0]
                rhs = ZERO
                self_w = ZERO
                for t, w in self.chain.successors(u):
                    if t == u:
                        self_w += w
                    else:
                        rhs += w * p[t]
                if self_w == ONE:
                    raise CheckerError("singular after prob-0 elimination")
                p[u] = rhs / (ONE - self_w)
                continue
            idx = {u: i for i, u in enumerate(comp)}
            n = len(comp)
            A = [[ZERO] * n for _ in range(n)]
            b = [ZERO] * n
            for u in comp:
                i = idx[u]
                A[i][i] = ONE
                for t, w in self.chain.successors(u):
                    if t in comp_set:
                        A[i][idx[t]] -= w
                    else:
                        b[i] += w * p[t]
            x = _gauss_solve(A, b)
            for u in comp:
                p[u] = x[idx[u]]
        return p

    # -- satisfaction -------------------------------------------------------

    def _path_prob(self, path, satmap):
        memo = self._path_memo.get(path.uid)
        if memo is not None:
            return memo
        if path.kind == "next":
            vec = self.prob_next(satmap[path.left.uid])
        elif path.kind == "until":
            vec = self.prob_until(satmap[path.left.uid], satmap[path.right.uid])
        elif path.kind == "buntil":
            vec = self.prob_bounded_until(satmap[path.left.uid],
                                          satmap[path.right.uid],
                                          path.step_bound)
        else:
            raise CheckerError(f"unknown path kind {path.kind!r}")
        self._path_memo[path.uid] = vec
        return vec

    def sat(self, phi):
        """SatMap: formula uid -> frozenset of satisfying states, for phi
        and every state subformula of phi."""
        satmap = self._sat_memo
        for f in subformulae(phi):
            if f.uid in satmap:
                continue
            if f.kind == "true":
                states = self._all_states
            elif f.kind == "atom":
                states = frozenset(
                    s for s in self.chain.states
                    if f.prop in self.chain.props(s))
            elif f.kind == "not":
                states = self._all_states - satmap[f.left.uid]
            elif f.kind == "and":
                states = satmap[f.left.uid] & satmap[f.right.uid]
            elif f.kind == "prob":
                vec = self._path_prob(f.path, satmap)
                check = _CMP_FUNCS[f.cmp]
                states = frozenset(
                    s for s in self.chain.states if check(vec[s], f.bound))
            else:
                raise CheckerError(f"unknown node kind {f.kind!r}")
            satmap[f.uid] = states
        return satmap

    def holds(self, phi, state):
        return state in self.sat(phi)[phi.uid]

    def path_prob(self, path):
        """Exact probability vector of a path formula whose operand state
        formulae have already been run through sat()."""
        vec = self._path_memo.get(path.uid)
        if vec is None:
            raise CheckerError("path formula not evaluated yet; run sat() "
                               "on a formula containing it first")
        return vec

    def prob_g_set(self, good):
        """Exact P_s(G good) for every state, good given as a state set."""
        bad = self._all_states - frozenset(good)
        reach_bad = self.prob_until(self._all_states, bad)
        return {s: ONE - reach_bad[s] for s in self.chain.states}

    def prob_f_set(self, target):
        return self.prob_until(self._all_states, frozenset(target))


def prob_next(chain, target):
    return ModelChecker(chain).prob_next(frozenset(target))


def prob_bounded_until(chain, s1, s2, k):
    return ModelChecker(chain).prob_bounded_until(frozenset(s1), frozenset(s2), k)


def prob_until(chain, s1, s2):
    return ModelChecker(chain).prob_until(frozenset(s1), frozenset(s2))


def sat(chain, phi):
    return ModelChecker(chain).sat(phi)


def brute_force_bounded(chain, s1, s2, k, s):
    """Testing oracle: sum of run-prefix probabilities over explicitly
    enumerated minimal accepting prefixes of length <= k."""
    total = ZERO
    # stack of (state, steps_left, probability of the path so far)
    stack = [(s, k, ONE)]
    while stack:
        u, left, acc = stack.pop()
        if u in s2:
            total += acc          # minimal prefix ends here
            continue
        if left == 0 or u not in s1:
            continue
        for t, w in chain.successors(u):
            stack.append((t, left - 1, acc * w))
    return total
