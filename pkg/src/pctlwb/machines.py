"""Counter machines and Minsky machines.

The main machine model tests one counter for zero and updates *all*
counters simultaneously; Minsky machines are the classical per-counter
inc / test-and-dec programs.  A two-counter Minsky machine compiles into
a 3m-instruction counter machine that preserves boundedness and turns
recurrence at label 1 into {1, m+1}-recurrence.

Machine DSL::

    machine NAME
    counters 2
    1: if C1 = 0 goto {2} else goto {2} ; dec dec

Minsky DSL::

    minsky NAME
    1: inc c1 goto {2}
    2: test c1 zero {2} else {1}

Both formats tolerate '#' comments.
"""

import re
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple


class MachineError(ValueError):
    pass


@dataclass(frozen=True)
class Instruction:
    """<C_k = 0 ? Z : P> : update_1, ..., update_d"""

    test_counter: int
    zero_targets: FrozenSet[int]
    pos_targets: FrozenSet[int]
    updates: Tuple[str, ...]


@dataclass(frozen=True)
class Configuration:
    label: int
    counters: Tuple[int, ...]


@dataclass(frozen=True)
class CounterMachine:
    name: str
    d: int
    instructions: Tuple[Instruction, ...]

    def __post_init__(self):
        m = len(self.instructions)
        if m == 0:
            raise MachineError("machine needs at least one instruction")
        if self.d < 1:
            raise MachineError("machine needs at least one counter")
        for idx, ins in enumerate(self.instructions, start=1):
            if not 1 <= ins.test_counter <= self.d:
                raise MachineError(
                    f"instruction {idx}: tests counter {ins.test_counter} "
                    f"but d = {self.d}")
            if not ins.zero_targets or not ins.pos_targets:
                raise MachineError(f"instruction {idx}: empty target set")
            for t in ins.zero_targets | ins.pos_targets:
                if not 1 <= t <= m:
                    raise MachineError(f"instruction {idx}: target {t} out of range")
            if len(ins.updates) != self.d:
                raise MachineError(
                    f"instruction {idx}: {len(ins.updates)} updates for d = {self.d}")
            if any(u not in ("inc", "dec") for u in ins.updates):
                raise MachineError(f"instruction {idx}: updates must be inc/dec")

    @property
    def m(self):
        return len(self.instructions)

    def instruction(self, label):
        return self.instructions[label - 1]

    @property
    def deterministic(self):
        return all(len(i.zero_targets) == 1 and len(i.pos_targets) == 1
                   for i in self.instructions)


def initial_configuration(machine):
    return Configuration(1, (0,) * machine.d)


def successors(machine, conf):
    """All successor configurations: the zero test only selects the target
    label set; every counter is updated simultaneously."""
    ins = machine.instruction(conf.label)
    tested = conf.counters[ins.test_counter - 1]
    targets = ins.zero_targets if tested == 0 else ins.pos_targets
    updated = tuple(
        c + 1 if u == "inc" else max(0, c - 1)
        for c, u in zip(conf.counters, ins.updates))
    return {Configuration(t, updated) for t in targets}


@dataclass(frozen=True)
class LassoComputation:
    """Configs C_0 .. C_{beta-1} with C_{alpha-1} = C_{beta-1}; the suffix
    from index alpha-1 repeats with period beta - alpha."""

    configs: Tuple[Configuration, ...]
    alpha: int

    def __post_init__(self):
        if not 1 <= self.alpha < self.beta:
            raise MachineError(f"need 1 <= alpha < beta, got {self.alpha}, {self.beta}")
        if self.configs[self.alpha - 1] != self.configs[self.beta - 1]:
            raise MachineError("lasso endpoints do not match")

    @property
    def beta(self):
        return len(self.configs)

    @property
    def period(self):
        return self.beta - self.alpha

    def config(self, j):
        """conf_j of the induced infinite computation."""
        if j < self.beta:
            return self.configs[j]
        start = self.alpha - 1
        return self.configs[start + (j - start) % self.period]


@dataclass(frozen=True)
class Unbounded:
    steps: int


def run_deterministic(machine, max_steps=100000):
    """Simulate from (1, 0, ..., 0); the first repeated configuration
    closes the lasso, else Unbounded after max_steps."""
    if not machine.deterministic:
        raise MachineError("machine is nondeterministic")
    conf = initial_configuration(machine)
    seen = {conf: 0}
    trace = [conf]
    for _ in range(max_steps):
        (conf,) = successors(machine, conf)
        if conf in seen:
            trace.append(conf)
            return LassoComputation(tuple(trace), alpha=seen[conf] + 1)
        seen[conf] = len(trace)
        trace.append(conf)
    return Unbounded(max_steps)


def replay_lasso(machine, lasso):
    """Check that stepping the machine reproduces the lasso configs
    index-for-index (diagnostic helper)."""
    for j in range(lasso.beta - 1):
        if lasso.configs[j + 1] not in successors(machine, lasso.configs[j]):
            return False
    return True


# ---------------------------------------------------------------------------
# Minsky machines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinskyInstruction:
    """Type I:  inc c_j; goto L          (else_targets is None)
    Type II: if c_j = 0 then goto L else dec c_j; goto L'"""

    counter: int
    targets: FrozenSet[int]
    else_targets: Optional[FrozenSet[int]] = None

    @property
    def is_inc(self):
        return self.else_targets is None


@dataclass(frozen=True)
class MinskyMachine:
    name: str
    d: int
    instructions: Tuple[MinskyInstruction, ...]

    def __post_init__(self):
        m = len(self.instructions)
        if m == 0:
            raise MachineError("machine needs at least one instruction")
        for idx, ins in enumerate(self.instructions, start=1):
            if not 1 <= ins.counter <= self.d:
                raise MachineError(f"instruction {idx}: counter out of range")
            sets = [ins.targets] + ([ins.else_targets] if ins.else_targets is not None else [])
            for ts in sets:
                if not 1 <= len(ts) <= 2:
                    raise MachineError(
                        f"instruction {idx}: label sets need one or two elements")
                for t in ts:
                    if not 1 <= t <= m:
                        raise MachineError(f"instruction {idx}: target {t} out of range")

    @property
    def m(self):
        return len(self.instructions)

    @property
    def deterministic(self):
        return all(len(i.targets) == 1
                   and (i.else_targets is None or len(i.else_targets) == 1)
                   for i in self.instructions)


def minsky_successors(machine, conf):
    ins = machine.instructions[conf.label - 1]
    j = ins.counter - 1
    counters = list(conf.counters)
    if ins.is_inc:
        counters[j] += 1
        targets = ins.targets
    elif counters[j] == 0:
        targets = ins.targets
    else:
        counters[j] -= 1
        targets = ins.else_targets
    updated = tuple(counters)
    return {Configuration(t, updated) for t in targets}


def run_minsky(machine, max_steps):
    """Deterministic Minsky trace of labels and configurations."""
    if not machine.deterministic:
        raise MachineError("machine is nondeterministic")
    conf = Configuration(1, (0,) * machine.d)
    trace = [conf]
    for _ in range(max_steps):
        (conf,) = minsky_successors(machine, conf)
        trace.append(conf)
    return trace


def minsky_to_counter(machine):
    """Compile a two-counter Minsky machine into a counter machine with
    exactly 3m instructions.

    Instruction i simulates Ins_i on its active counter and retargets
    every destination label l to l+m or l+2m depending on whether the
    l-active counter matches; i+m performs the compensating update of the
    inactive counter; i+2m inserts the auxiliary decrement.  The result is
    deterministic whenever the input is, preserves boundedness, and has a
    {1, m+1}-recurrent computation iff the input has a recurrent one.
    """
    if machine.d != 2:
        raise MachineError("the reduction handles exactly two counters")
    m = machine.m

    def active(label):
        return machine.instructions[label - 1].counter

    def retarget(labels, j):
        return frozenset(l + m if active(l) == j else l + 2 * m for l in labels)

    def split_updates(j, on_j):
        other = "dec" if on_j == "inc" else "inc"
        return (on_j, other) if j == 1 else (other, on_j)

    first = []
    second = []
    third = []
    for i, ins in enumerate(machine.instructions, start=1):
        j = ins.counter
        if ins.is_inc:
            x = retarget(ins.targets, j)
            first.append(Instruction(j, x, x, ("inc", "inc")))
            second.append(Instruction(j, frozenset(ins.targets),
                                      frozenset(ins.targets),
                                      split_updates(j, "inc")))
        else:
            first.append(Instruction(j, retarget(ins.targets, j),
                                     retarget(ins.else_targets, j),
                                     split_updates(j, "dec")))
            second.append(Instruction(j, frozenset(ins.targets),
                                      frozenset(ins.else_targets),
                                      ("dec", "dec")))
        third.append(Instruction(1, frozenset({i + m}), frozenset({i + m}),
                                 split_updates(j, "dec")))
    return CounterMachine(machine.name + "_3m", 2,
                          tuple(first + second + third))


# ---------------------------------------------------------------------------
# parsing / printing
# ---------------------------------------------------------------------------

_MACHINE_LINE = re.compile(
    r"(\d+)\s*:\s*if\s+C(\d+)\s*=\s*0\s+goto\s*\{([^}]*)\}\s*"
    r"else\s+goto\s*\{([^}]*)\}\s*;\s*(.*)")

_MINSKY_INC = re.compile(r"(\d+)\s*:\s*inc\s+c(\d+)\s+goto\s*\{([^}]*)\}")
_MINSKY_TEST = re.compile(
    r"(\d+)\s*:\s*test\s+c(\d+)\s+zero\s*\{([^}]*)\}\s*else\s*\{([^}]*)\}")


def _parse_label_set(text, lineno):
    items = [w.strip() for w in text.split(",") if w.strip()]
    if not items or any(not w.isdigit() for w in items):
        raise MachineError(f"line {lineno}: bad label set {{{text}}}")
    return frozenset(int(w) for w in items)


def _fmt_labels(labels):
    return "{" + ",".join(str(l) for l in sorted(labels)) + "}"


def parse_machine(text):
    name = "machine"
    d = None
    rows = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("machine "):
            name = line[len("machine "):].strip()
            continue
        if line.startswith("counters "):
            d = int(line[len("counters "):].strip())
            continue
        m = _MACHINE_LINE.fullmatch(line)
        if not m:
            raise MachineError(f"line {lineno}: unrecognized instruction {line!r}")
        label = int(m.group(1))
        if label in rows:
            raise MachineError(f"line {lineno}: duplicate label {label}")
        updates = tuple(m.group(5).split())
        rows[label] = Instruction(int(m.group(2)),
                                  _parse_label_set(m.group(3), lineno),
                                  _parse_label_set(m.group(4), lineno),
                                  updates)
    if d is None:
        raise MachineError("missing 'counters D' header")
    if sorted(rows) != list(range(1, len(rows) + 1)):
        raise MachineError("instruction labels must be 1..m without gaps")
    return CounterMachine(name, d, tuple(rows[i] for i in sorted(rows)))


def print_machine(machine):
    lines = [f"machine {machine.name}", f"counters {machine.d}"]
    for i, ins in enumerate(machine.instructions, start=1):
        upd = " ".join(ins.updates)
        lines.append(
            f"{i}: if C{ins.test_counter} = 0 goto {_fmt_labels(ins.zero_targets)} "
            f"else goto {_fmt_labels(ins.pos_targets)} ; {upd}")
    return "\n".join(lines) + "\n"


def parse_minsky(text, d=2):
    name = "minsky"
    rows = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("minsky "):
            name = line[len("minsky "):].strip()
            continue
        m = _MINSKY_INC.fullmatch(line)
        if m:
            label = int(m.group(1))
            ins = MinskyInstruction(int(m.group(2)),
                                    _parse_label_set(m.group(3), lineno))
        else:
            m = _MINSKY_TEST.fullmatch(line)
            if not m:
                raise MachineError(f"line {lineno}: unrecognized instruction {line!r}")
            label = int(m.group(1))
            ins = MinskyInstruction(int(m.group(2)),
                                    _parse_label_set(m.group(3), lineno),
                                    _parse_label_set(m.group(4), lineno))
        if label in rows:
            raise MachineError(f"line {lineno}: duplicate label {label}")
        rows[label] = ins
    if sorted(rows) != list(range(1, len(rows) + 1)):
        raise MachineError("instruction labels must be 1..m without gaps")
    return MinskyMachine(name, d, tuple(rows[i] for i in sorted(rows)))


def print_minsky(machine):
    lines = [f"minsky {machine.name}"]
    for i, ins in enumerate(machine.instructions, start=1):
        if ins.is_inc:
            lines.append(f"{i}: inc c{ins.counter} goto {_fmt_labels(ins.targets)}")
        else:
            lines.append(f"{i}: test c{ins.counter} zero {_fmt_labels(ins.targets)} "
                         f"else {_fmt_labels(ins.else_targets)}")
    return "\n".join(lines) + "\n"
