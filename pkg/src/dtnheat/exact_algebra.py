"""Exact rationals and sparse polynomials in named jet atoms.

Rationals are ``gmpy2.mpq``.  Atoms are interned: each distinct ``Atom`` is
mapped to a small integer id once, and polynomial monomials are sorted tuples
of ids (with repetition).  Interning keeps hashing and sorting cheap; every
user-visible ordering goes back through the atom total order ``(kind, indices)``
so output never depends on interning order.
"""

from __future__ import annotations

import enum
import random
import threading
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Union

from gmpy2 import mpq

__all__ = [
    "Rational",
    "AtomKind",
    "Atom",
    "AtomPoly",
    "MissingAtom",
    "to_rational",
    "poly_arith",
    "poly_eval",
    "poly_equal_probabilistic",
    "random_rational",
    "parse_rational",
]

Rational = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)


def to_rational(x) -> Rational:
    """Coerce ints, Fractions, ``"p/q"`` strings and mpq to mpq (never floats)."""
    if isinstance(x, Rational):
        return x
    if isinstance(x, bool):
        return mpq(int(x))
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def parse_rational(s: str) -> Rational:
    s = s.strip()
    if "/" in s:
        p, q = s.split("/")
        return mpq(int(p), int(q))
    return mpq(int(s))


def format_rational(r: Rational) -> str:
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


class AtomKind(enum.IntEnum):
    """Atom kinds in their fixed sort order."""

    K0 = 0
    Kappa = 1
    BoundaryRiemann = 2
    SecondNormalJet = 3
    ThirdNormalJet = 4
    MetricJet = 5
    PhiJet = 6
    VJet = 7
    Aux = 8


_PREFIX = {
    AtomKind.K0: "K0",
    AtomKind.Kappa: "kappa",
    AtomKind.BoundaryRiemann: "R",
    AtomKind.SecondNormalJet: "S",
    AtomKind.ThirdNormalJet: "T",
    AtomKind.MetricJet: "g",
    AtomKind.PhiJet: "phi",
    AtomKind.VJet: "V",
    AtomKind.Aux: "aux",
}


class Atom(NamedTuple):
    """A named free coefficient.

    ``indices`` are 1-based coordinate labels; in derivative slots the normal
    direction is the largest label ``n``.  Use the constructors below so that
    symmetric slots are canonically sorted.
    """

    kind: AtomKind
    indices: tuple = ()

    def __str__(self) -> str:
        name = _PREFIX[self.kind]
        if not self.indices:
            return name
        return f"{name}[{','.join(str(i) for i in self.indices)}]"

    # constructors -----------------------------------------------------

    @staticmethod
    def kappa(alpha: int) -> "Atom":
        return Atom(AtomKind.Kappa, (alpha,))

    @staticmethod
    def k0() -> "Atom":
        return Atom(AtomKind.K0, ())

    @staticmethod
    def second_normal(a: int, b: int) -> "Atom":
        return Atom(AtomKind.SecondNormalJet, tuple(sorted((a, b))))

    @staticmethod
    def third_normal(a: int, b: int) -> "Atom":
        return Atom(AtomKind.ThirdNormalJet, tuple(sorted((a, b))))

    @staticmethod
    def phi(*derivs: int) -> "Atom":
        return Atom(AtomKind.PhiJet, tuple(sorted(derivs)))

    @staticmethod
    def v(*derivs: int) -> "Atom":
        return Atom(AtomKind.VJet, tuple(sorted(derivs)))

    @staticmethod
    def metric(j: int, k: int, *derivs: int) -> "Atom":
        a, b = sorted((j, k))
        return Atom(AtomKind.MetricJet, (a, b) + tuple(sorted(derivs)))

    @staticmethod
    def aux(*labels: int) -> "Atom":
        return Atom(AtomKind.Aux, tuple(labels))


class MissingAtom(KeyError):
    def __init__(self, atom: Atom):
        super().__init__(str(atom))
        self.atom = atom


# interning -------------------------------------------------------------

_LOCK = threading.Lock()
_ATOMS: list[Atom] = []
_IDS: dict[Atom, int] = {}


def atom_id(a: Atom) -> int:
    i = _IDS.get(a)
    if i is not None:
        return i
    with _LOCK:
        i = _IDS.get(a)
        if i is None:
            i = len(_ATOMS)
            _ATOMS.append(a)
            _IDS[a] = i
    return i


def atom_of(i: int) -> Atom:
    return _ATOMS[i]


Scalar = Union[int, Rational, Fraction]


def _mono_key(mono: tuple) -> tuple:
    """Sort key of a monomial in the atom total order (degree first)."""
    return (len(mono), tuple(_ATOMS[i] for i in mono))


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


class AtomPoly:
    """Sparse polynomial over Q in interned atoms.

    ``terms`` maps a sorted tuple of atom ids to a nonzero mpq.  Instances are
    treated as immutable; arithmetic always builds new objects.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Rational] | None = None, *, _trusted=False):
        if terms is None:
            self.terms = {}
        elif _trusted:
            self.terms = terms
        else:
            clean = {}
            for m, c in terms.items():
                c = to_rational(c)
                if c:
                    key = tuple(sorted(m))
                    v = clean.get(key, ZERO) + c
                    if v:
                        clean[key] = v
                    else:
                        clean.pop(key, None)
            self.terms = clean
        self._hash = None

    # construction -----------------------------------------------------

    @classmethod
    def const(cls, c) -> "AtomPoly":
        c = to_rational(c)
        return cls({(): c}, _trusted=True) if c else cls()

    @classmethod
    def atom(cls, a: Atom, coeff=1) -> "AtomPoly":
        c = to_rational(coeff)
        return cls({(atom_id(a),): c}, _trusted=True) if c else cls()

    @classmethod
    def monomial(cls, atoms: Iterable[Atom], coeff=1) -> "AtomPoly":
        c = to_rational(coeff)
        if not c:
            return cls()
        return cls({tuple(sorted(atom_id(a) for a in atoms)): c}, _trusted=True)

    # inspection -------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_term(self) -> Rational:
        return self.terms.get((), ZERO)

    def atoms(self) -> set[Atom]:
        return {_ATOMS[i] for m in self.terms for i in m}

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def items(self):
        """(tuple of Atoms, coefficient) pairs in canonical order."""
        for m in sorted(self.terms, key=_mono_key):
            yield tuple(_ATOMS[i] for i in m), self.terms[m]

    def coefficient(self, atoms: Iterable[Atom]) -> Rational:
        return self.terms.get(tuple(sorted(atom_id(a) for a in atoms)), ZERO)

    # arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "AtomPoly | None":
        if isinstance(other, AtomPoly):
            return other
        if isinstance(other, (int, Rational, Fraction)):
            return AtomPoly.const(other)
        return None

    def __add__(self, other):
        if isinstance(other, Rational) or isinstance(other, int):
            if not other:
                return self
            t = dict(self.terms)
            v = t.get((), ZERO) + other
            if v:
                t[()] = v
            else:
                del t[()]
            return AtomPoly(t, _trusted=True)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        if not self.terms:
            return o
        a, b = (self.terms, o.terms) if len(self.terms) >= len(o.terms) else (o.terms, self.terms)
        t = dict(a)
        for m, c in b.items():
            v = t.get(m)
            if v is None:
                t[m] = c
            else:
                v = v + c
                if v:
                    t[m] = v
                else:
                    del t[m]
        return AtomPoly(t, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return AtomPoly({m: -c for m, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def scale(self, c) -> "AtomPoly":
        c = to_rational(c)
        if not c:
            return AtomPoly()
        if c == 1:
            return self
        return AtomPoly({m: v * c for m, v in self.terms.items()}, _trusted=True)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            return self.scale(other)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self.terms or not o.terms:
            return AtomPoly()
        if len(o.terms) == 1 and () in o.terms:
            return self.scale(o.terms[()])
        if len(self.terms) == 1 and () in self.terms:
            return o.scale(self.terms[()])
        t: dict = {}
        get = t.get
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = _mono_mul(m1, m2)
                v = get(m)
                t[m] = c1 * c2 if v is None else v + c1 * c2
        return AtomPoly({m: c for m, c in t.items() if c}, _trusted=True)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise ValueError("only nonnegative integer powers")
        r = AtomPoly.const(1)
        base = self
        while e:
            if e & 1:
                r = r * base
            base = base * base
            e >>= 1
        return r

    def __truediv__(self, other):
        if isinstance(other, (int, Rational, Fraction)):
            return self.scale(ONE / to_rational(other))
        if isinstance(other, AtomPoly) and other.is_constant() and other:
            return self.scale(ONE / other.constant_term())
        return NotImplemented

    # comparison -------------------------------------------------------

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # evaluation and substitution ---------------------------------------

    def eval(self, assignment: Mapping[Atom, object]) -> Rational:
        """Exact value at a full assignment of atoms to rationals."""
        vals: dict[int, Rational] = {}
        total = ZERO
        for m, c in self.terms.items():
            v = c
            for i in m:
                x = vals.get(i)
                if x is None:
                    a = _ATOMS[i]
                    if a not in assignment:
                        raise MissingAtom(a)
                    x = vals[i] = to_rational(assignment[a])
                v = v * x
            total += v
        return total

    def subs(self, mapping: Mapping[Atom, object]) -> "AtomPoly":
        """Substitute atoms by rationals or AtomPolys; unmapped atoms stay."""
        ids = {atom_id(a): (v if isinstance(v, AtomPoly) else AtomPoly.const(v)) for a, v in mapping.items()}
        out = AtomPoly()
        cache: dict[tuple, AtomPoly] = {}
        for m, c in self.terms.items():
            keep = tuple(i for i in m if i not in ids)
            sub = tuple(i for i in m if i in ids)
            if not sub:
                out = out + AtomPoly({m: c}, _trusted=True)
                continue
            p = cache.get(sub)
            if p is None:
                p = AtomPoly.const(1)
                for i in sub:
                    p = p * ids[i]
                cache[sub] = p
            out = out + p * AtomPoly({keep: c}, _trusted=True)
        return out

    def map_coefficients(self, fn) -> "AtomPoly":
        return AtomPoly({m: fn(c) for m, c in self.terms.items()})

    # text -------------------------------------------------------------

    def to_str(self) -> str:
        """Deterministic text form, e.g. ``1/2*kappa[1]^2 - phi[3]``."""
        if not self.terms:
            return "0"
        parts = []
        for atoms, c in self.items():
            factors = []
            run = []
            for a in atoms:
                if run and run[0] == a:
                    run.append(a)
                else:
                    if run:
                        factors.append(_pow_str(run))
                    run = [a]
            if run:
                factors.append(_pow_str(run))
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if not factors:
                body = format_rational(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = format_rational(mag) + "*" + "*".join(factors)
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    __str__ = to_str

    def to_latex(self) -> str:
        """LaTeX form with the same term order as :meth:`to_str`."""
        if not self.terms:
            return "0"
        out = ""
        for i, (atoms, c) in enumerate(self.items()):
            counts: dict = {}
            for a in atoms:
                counts[a] = counts.get(a, 0) + 1
            body = " ".join(_atom_latex(a) + (f"^{{{e}}}" if e > 1 else "") for a, e in counts.items())
            mag = abs(c)
            if not body:
                coef = _rational_latex(mag)
            elif mag == 1:
                coef = ""
            else:
                coef = _rational_latex(mag) + " "
            sign = "-" if c < 0 else "+"
            if i == 0:
                out = ("-" if sign == "-" else "") + coef + body
            else:
                out += f" {sign} {coef}{body}"
        return out

    def __repr__(self) -> str:
        return f"AtomPoly({self.to_str()!r})"


_LATEX_NAME = {
    AtomKind.K0: "K_0",
    AtomKind.Kappa: r"\kappa",
    AtomKind.BoundaryRiemann: "R",
    AtomKind.SecondNormalJet: "S",
    AtomKind.ThirdNormalJet: "T",
    AtomKind.MetricJet: "g",
    AtomKind.PhiJet: r"\phi",
    AtomKind.VJet: "V",
    AtomKind.Aux: "a",
}


def _atom_latex(a: Atom) -> str:
    name = _LATEX_NAME[a.kind]
    if not a.indices:
        return name if a.kind != AtomKind.Kappa else r"\kappa"
    sep = "," if any(i > 9 for i in a.indices) else ""
    return f"{name}_{{{sep.join(str(i) for i in a.indices)}}}"


def _rational_latex(r) -> str:
    if r.denominator == 1:
        return str(r.numerator)
    return rf"\frac{{{r.numerator}}}{{{r.denominator}}}"


def _pow_str(run: list) -> str:
    return str(run[0]) if len(run) == 1 else f"{run[0]}^{len(run)}"


# operations ------------------------------------------------------------


def poly_arith(a: AtomPoly, b: AtomPoly, op: str) -> AtomPoly:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def poly_eval(p: AtomPoly, assignment: Mapping[Atom, object]) -> Rational:
    return p.eval(assignment)


# Random points for identity testing.  Numerators are uniform in
# [-NUM_RANGE, NUM_RANGE] and denominators uniform in [1, DEN_RANGE].  The set
# S of reachable values has more than 2*NUM_RANGE distinct elements (all the
# integers alone), so by Schwartz-Zippel a nonzero polynomial of total degree
# d vanishes at one random point with probability at most d/|S| < d/2e6, and
# at all of `trials` independent points with probability below
# (d/2e6)**trials.  For the degrees in this package (d <= 8) and trials >= 5
# that is under 1e-25.
NUM_RANGE = 10**6
DEN_RANGE = 10**3


def random_rational(rng: random.Random, num_range: int = NUM_RANGE, den_range: int = DEN_RANGE) -> Rational:
    return mpq(rng.randint(-num_range, num_range), rng.randint(1, den_range))


def poly_equal_probabilistic(a: AtomPoly, b: AtomPoly, trials: int = 10, seed: int = 0) -> bool:
    """Randomized identity test of ``a == b``.

    Structural equality short-circuits.  Otherwise both sides are evaluated at
    ``trials`` seeded random rational points (range documented above).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if a == b:
        return True
    diff = a - b
    atoms = sorted(diff.atoms())
    rng = random.Random(seed)
    for _ in range(trials):
        point = {x: random_rational(rng) for x in atoms}
        if diff.eval(point) != 0:
            return False
    return True
