"""The Inc/Dec calculus on exact rational points and its validators.

Counter value n is encoded by the point inc_iter(n) = Inc^n(z) where

    Inc(v) = (lam/(1-v1), v2*lam/(1-v1))      Dec(v) = ((v1-lam)/v1, v2/v1)

for a constant lam in (0, 1/4).  The points Inc^n(z) are vertices of a
convex region bounded left/right by x = i_lo and x = z1, above by y = 1,
and below by the segment chain through consecutive orbit points.  All
operations are exact; the lemma validators are seeded sample-based
property checks with zero tolerance.
"""

import math
import random
from dataclasses import dataclass, field
from typing import List, Tuple

from ._rational import ONE, Rat, ZERO, rat_to_text


class GeometryError(ValueError):
    pass


class IrrationalEndpointsError(GeometryError):
    """1 - 4*lam is not the square of a rational."""


class InconclusiveRegionError(GeometryError):
    """in_region needs a deeper orbit prefix to decide this point."""


@dataclass(frozen=True)
class Vec2:
    v1: object
    v2: object

    def __iter__(self):
        return iter((self.v1, self.v2))

    def __str__(self):
        return f"({rat_to_text(self.v1)}, {rat_to_text(self.v2)})"


def rational_sqrt(q):
    """Exact square root of a nonnegative rational, or None."""
    q = Rat(q)
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return Rat(rn, rd)


def interval_endpoints(lam):
    """Endpoints ((1-sqrt(1-4*lam))/2, (1+sqrt(1-4*lam))/2) of the interval
    closed under Inc; requires the discriminant to be a rational square."""
    lam = Rat(lam)
    if not (0 < lam < Rat(1, 4)):
        raise GeometryError(f"lambda {lam} outside (0, 1/4)")
    root = rational_sqrt(1 - 4 * lam)
    if root is None:
        raise IrrationalEndpointsError(
            f"1 - 4*{lam} = {rat_to_text(1 - 4 * lam)} is not a rational square; "
            "the construction needs rational interval endpoints")
    return ((1 - root) / 2, (1 + root) / 2)


@dataclass(frozen=True)
class GadgetConstants:
    """The constant ledger: lam, z, delta, rho and the interval endpoints.

    Defaults follow the consistent reading lam = 14/225 (which yields the
    endpoints (1/15, 14/15)), z = (1/12, 1/15), delta = 1/11, rho = 1/13.
    """

    lam: object = Rat(14, 225)
    z: Vec2 = Vec2(Rat(1, 12), Rat(1, 15))
    delta: object = Rat(1, 11)
    rho: object = Rat(1, 13)
    i_lo: object = None
    i_hi: object = None
    _orbit: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        lo, hi = interval_endpoints(self.lam)
        object.__setattr__(self, "i_lo", lo)
        object.__setattr__(self, "i_hi", hi)
        z = self.z
        if not (lo < z.v1 < hi):
            raise GeometryError(f"z1 = {z.v1} outside I_lambda = ({lo}, {hi})")
        if not (0 < z.v2 < 1):
            raise GeometryError(f"z2 = {z.v2} outside (0, 1)")
        if not (z.v2 < self.rho < z.v1 < self.delta):
            raise GeometryError(
                f"need z2 < rho < z1 < delta, got {z.v2}, {self.rho}, "
                f"{z.v1}, {self.delta}")
        if not 2 * (self.lam + self.delta + z.v1 + z.v2) < 1:
            raise GeometryError("need 2*lam + 2*delta + 2*z1 + 2*z2 < 1")
        self._orbit.append(z)

    @property
    def beta_low(self):
        return self.i_lo


DEFAULT_CONSTANTS = GadgetConstants()


def inc(v, constants=DEFAULT_CONSTANTS):
    if v.v1 == 1:
        raise ZeroDivisionError("Inc undefined at v1 = 1")
    scale = constants.lam / (1 - v.v1)
    return Vec2(scale, v.v2 * scale)


def dec(v, constants=DEFAULT_CONSTANTS):
    if v.v1 == 0:
        raise ZeroDivisionError("Dec undefined at v1 = 0")
    return Vec2((v.v1 - constants.lam) / v.v1, v.v2 / v.v1)


def inc_iter(n, constants=DEFAULT_CONSTANTS):
    """Inc^n(z); the orbit prefix is cached (append-only) per constants."""
    if n < 0:
        raise GeometryError("n must be >= 0")
    orbit = constants._orbit
    while len(orbit) <= n:
        orbit.append(inc(orbit[-1], constants))
    return orbit[n]


def slope(u, v):
    if u.v1 == v.v1:
        raise GeometryError("slope undefined for a vertical line")
    return (v.v2 - u.v2) / (v.v1 - u.v1)


def _above_line(p, a, b):
    """p lies on or above the line through a and b (a.v1 != b.v1)."""
    # cross product test, normalized for a.v1 < b.v1
    if a.v1 > b.v1:
        a, b = b, a
    return (b.v1 - a.v1) * (p.v2 - a.v2) >= (b.v2 - a.v2) * (p.v1 - a.v1)


def in_region(v, n_max, constants=DEFAULT_CONSTANTS):
    """Exact membership in the convex region spanned by the orbit points,
    testing the lower boundary up to edge index n_max."""
    z = constants.z
    if not (constants.i_lo <= v.v1 <= z.v1):
        return False
    if not (0 <= v.v2 <= 1):
        return False
    if v.v1 > constants.i_lo and inc_iter(n_max + 1, constants).v1 >= v.v1:
        raise InconclusiveRegionError(
            f"n_max = {n_max} too shallow for v1 = {rat_to_text(v.v1)}")
    for n in range(n_max + 1):
        if not _above_line(v, inc_iter(n, constants), inc_iter(n + 1, constants)):
            return False
    return True


def vertex_carrier_check(points, weights, n, constants=DEFAULT_CONSTANTS):
    """Whether (sum w_i p_i == Inc^n(z)) implies every p_i == Inc^n(z).

    Vacuously true when the mixture misses the vertex; used as an
    executable check of vertex extremality on in-region point sets.
    """
    weights = [Rat(w) for w in weights]
    if sum(weights, ZERO) != ONE:
        raise GeometryError("weights must sum to exactly 1")
    if any(w <= 0 for w in weights):
        raise GeometryError("weights must be positive")
    if len(points) != len(weights):
        raise GeometryError("points and weights must align")
    mix = Vec2(sum((w * p.v1 for w, p in zip(weights, points)), ZERO),
               sum((w * p.v2 for w, p in zip(weights, points)), ZERO))
    vertex = inc_iter(n, constants)
    if mix != vertex:
        return True
    return all(p == vertex for p in points)


def outlineseg_witness(v, n, constants=DEFAULT_CONSTANTS):
    """The point u with u1 = Inc^{n+1}(z)1 such that v lies on the segment
    [u, Dec(u)].

    u2 solves slope(u, Dec(u)) = slope(u, v), i.e.

        u2 = v2*(u1*(1-u1) - lam)
             / ((1-u1)*(v1 - u1) + u1*(1-u1) - lam)
    """
    u1 = inc_iter(n + 1, constants).v1
    lam = constants.lam
    den = (1 - u1) * (v.v1 - u1) + u1 * (1 - u1) - lam
    if den == 0:
        raise GeometryError("outlineseg witness denominator vanished")
    u2 = v.v2 * (u1 * (1 - u1) - lam) / den
    return Vec2(u1, u2)


def on_segment(p, a, b):
    """Exact test that p lies on the closed segment [a, b]."""
    cross = (b.v1 - a.v1) * (p.v2 - a.v2) - (b.v2 - a.v2) * (p.v1 - a.v1)
    if cross != 0:
        return False
    if a.v1 != b.v1:
        t = (p.v1 - a.v1) / (b.v1 - a.v1)
    elif a.v2 != b.v2:
        t = (p.v2 - a.v2) / (b.v2 - a.v2)
    else:
        return p == a
    return 0 <= t <= 1


def convex_point(a, b, kappa):
    """kappa*a + (1-kappa)*b."""
    kappa = Rat(kappa)
    return Vec2(kappa * a.v1 + (1 - kappa) * b.v1,
                kappa * a.v2 + (1 - kappa) * b.v2)


# ---------------------------------------------------------------------------
# seeded sample-based lemma validators (exact comparisons throughout)
# ---------------------------------------------------------------------------

def sample_rational(rnd, lo, hi, max_den):
    """Uniform-ish rational strictly inside (lo, hi) with denominator
    <= max_den."""
    lo, hi = Rat(lo), Rat(hi)
    for _ in range(10000):
        den = rnd.randint(2, max_den)
        lo_num = int((lo.numerator * den) // lo.denominator)
        hi_num = int(-((-hi.numerator * den) // hi.denominator))
        if hi_num - lo_num < 2:
            continue
        num = rnd.randint(lo_num + 1, hi_num - 1)
        q = Rat(num, den)
        if lo < q < hi:
            return q
    raise GeometryError(f"could not sample a rational in ({lo}, {hi})")


def sample_point(rnd, constants, max_den=10000):
    """Rational point in I_lambda x (0,1)."""
    return Vec2(sample_rational(rnd, constants.i_lo, constants.i_hi, max_den),
                sample_rational(rnd, 0, 1, max_den))


def check_closure_properties(v, constants):
    """Exact per-sample checks of the basic Inc/Dec facts; returns the
    names of violated properties (empty = all hold)."""
    bad = []
    iv = inc(v, constants)
    if not (constants.i_lo < iv.v1 < constants.i_hi and 0 <= iv.v2 <= 1):
        bad.append("inc-range")
    if dec(iv, constants) != v:
        bad.append("dec-inc-identity")
    if not iv.v1 < v.v1:
        bad.append("first-coordinate-decrease")
    if iv.v2 > v.v2 or (v.v2 > 0 and iv.v2 >= v.v2):
        bad.append("second-coordinate-decrease")
    # slope identity: slope((Inc^2(v)1, 0), Inc(v)) == slope(Inc(v), v)
    iiv = inc(iv, constants)
    if slope(Vec2(iiv.v1, ZERO), iv) != slope(iv, v):
        bad.append("slope-identity")
    return bad


def check_chord_slope(v, y, constants):
    """For u = (Inc(v)1, y) with 0 <= y < Inc(v)2:
    slope(u, Dec(u)) < slope(Inc(v), v), exactly."""
    iv = inc(v, constants)
    if not (0 <= y < iv.v2):
        raise GeometryError("y must satisfy 0 <= y < Inc(v)2")
    u = Vec2(iv.v1, y)
    return slope(u, dec(u, constants)) < slope(iv, v)


def check_segment_mapping(v, kappa, constants):
    """Dec maps the segment [Inc^2(v), Inc(v)] into [Inc(v), v]."""
    iv = inc(v, constants)
    iiv = inc(iv, constants)
    u = convex_point(iiv, iv, kappa)
    return on_segment(dec(u, constants), iv, v)


def _endpoint_probes(constants):
    """Deterministic points pressed against the interval endpoints; the
    per-point checks are most sensitive to a wrong constant ledger there."""
    span = constants.i_hi - constants.i_lo
    probes = []
    for j in range(1, 9):
        off = span / 10 ** j
        probes.append(Vec2(constants.i_lo + off, Rat(1, 2)))
        probes.append(Vec2(constants.i_hi - off, Rat(1, 2)))
    return probes


def run_lemma_suite(n_samples, seed, constants=DEFAULT_CONSTANTS,
                    max_den=10000):
    """Run every per-sample validator on n_samples seeded points plus a
    fixed set of endpoint probes; returns (checked, counterexamples) where
    counterexamples is a list of (property-name, point) pairs."""
    rnd = random.Random(seed)
    failures = []
    points = [sample_point(rnd, constants, max_den)
              for _ in range(n_samples)]
    for v in points + _endpoint_probes(constants):
        for name in check_closure_properties(v, constants):
            failures.append((name, v))
        y = inc(v, constants).v2 * sample_rational(rnd, 0, 1, max_den)
        if not check_chord_slope(v, y, constants):
            failures.append(("chord-slope", v))
        kappa = sample_rational(rnd, 0, 1, max_den)
        if not check_segment_mapping(v, kappa, constants):
            failures.append(("segment-mapping", v))
    return n_samples, failures


def limit_gaps(depth, constants=DEFAULT_CONSTANTS):
    """The gaps inc_iter(n)1 - i_lo for n = 0..depth (all positive,
    strictly decreasing, converging to 0)."""
    return [inc_iter(n, constants).v1 - constants.i_lo
            for n in range(depth + 1)]


def emit_points(path, depth, constants=DEFAULT_CONSTANTS):
    """Write 'n x y' rows for inc_iter(0..depth) plus the polytope edge
    list (as comments, so data rows stay exactly depth+1 lines)."""
    lines = []
    for n in range(depth + 1):
        p = inc_iter(n, constants)
        lines.append(f"{n} {rat_to_text(p.v1)} {rat_to_text(p.v2)}")
    lines.append("# region bounds: "
                 f"x in [{rat_to_text(constants.i_lo)}, {rat_to_text(constants.z.v1)}], "
                 "y in [0, 1]")
    for n in range(depth):
        lines.append(f"# edge {n} {n + 1}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
