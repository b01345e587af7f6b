"""
Exact representation of the Cantor space ``2^N``.

Words are Python strings over ``'0'`` and ``'1'``.  A clopen set is a finite
union of cylinders and is stored as a canonical antichain of words; internally
each cylinder is also viewed as a dyadic interval of integers scaled to
``D_MAX`` bits, which makes boolean operations a matter of merging sorted
interval lists.

Points are eventually periodic sequences ``pre . per . per . ...``.  Maps are
prefix-substitution systems: a complete antichain of source words, each
rewritten to a destination word, ``f(src . w) = dst . w``.

All distances are exact ``fractions.Fraction`` values of the form ``0`` or
``1/n``.
"""
from __future__ import annotations

import bisect
import contextlib
import math
import os
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Rat = Fraction

#: Hard upper bound on word length; also the integer scale of the interval view.
D_MAX = 64


def _initial_cap() -> int:
    raw = os.environ.get("CANTOR_DEPTH_CAP")
    if raw is None:
        return D_MAX
    try:
        val = int(raw)
    except ValueError:
        return D_MAX
    # the environment can only lower the cap
    return max(1, min(D_MAX, val))


_cap = _initial_cap()


class DepthOverflow(ArithmeticError):
    """Raised when a construction would need words longer than the depth cap."""

    def __init__(self, needed: int, cap: int | None = None, what: str = "word"):
        self.needed = needed
        self.cap = depth_cap() if cap is None else cap
        super().__init__(f"depth overflow: {what} of length {needed} exceeds cap {self.cap}")


def depth_cap() -> int:
    """Current maximal admissible word length."""
    return _cap


@contextlib.contextmanager
def capped_depth(n: int):
    """Temporarily lower the depth cap to ``n`` (never raises it)."""
    global _cap
    old = _cap
    _cap = max(1, min(old, int(n)))
    try:
        yield _cap
    finally:
        _cap = old


def set_depth_cap(n: int) -> int:
    """Lower the depth cap for the rest of the process; returns the new cap."""
    global _cap
    _cap = max(1, min(_cap, int(n)))
    return _cap


def _check_len(n: int, what: str = "word") -> None:
    if n > _cap:
        raise DepthOverflow(n, _cap, what)


# ---------------------------------------------------------------------------
# words and intervals

_FULL = 1 << D_MAX


def check_word(w: str) -> str:
    if not isinstance(w, str) or w.strip("01"):
        raise ValueError(f"not a binary word: {w!r}")
    _check_len(len(w))
    return w


def word_interval(w: str) -> tuple[int, int]:
    """The dyadic interval ``[lo, hi)`` of the cylinder ``[w]`` at scale ``D_MAX``."""
    k = D_MAX - len(w)
    lo = int(w, 2) << k if w else 0
    return lo, lo + (1 << k)


def _interval_words(lo: int, hi: int, out: list) -> None:
    # greedy maximal aligned dyadic blocks
    while lo < hi:
        k = (lo & -lo).bit_length() - 1 if lo else D_MAX
        while (1 << k) > hi - lo:
            k -= 1
        n = D_MAX - k
        out.append(format(lo >> k, f"0{n}b") if n else "")
        lo += 1 << k


def _tz(x: int) -> int:
    """Trailing zeros of an interval endpoint (``D_MAX`` for 0 and the full scale)."""
    if x == 0 or x == _FULL:
        return D_MAX
    return (x & -x).bit_length() - 1


def _merge(ivs: list) -> list:
    ivs.sort()
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def lcp_len(a: str, b: str) -> int:
    n = min(len(a), len(b))
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def common_prefix(words: Sequence[str]) -> str:
    if not words:
        return ""
    lo, hi = min(words), max(words)
    return lo[:lcp_len(lo, hi)]


# ---------------------------------------------------------------------------
# clopen sets

class Clopen:
    """A clopen subset of the Cantor space as a canonical antichain of words.

    Two clopen sets are equal iff their canonical word tuples are equal.  The
    empty tuple is the empty set and ``("",)`` is the whole space.
    """

    __slots__ = ("_cyl", "_iv")

    def __init__(self, words: Iterable[str] = ()):
        ivs = [word_interval(check_word(w)) for w in words]
        self._set(_merge(ivs))

    def _set(self, ivs: list) -> None:
        self._iv = tuple(ivs)
        self._cyl = None
        if _cap < D_MAX:
            for lo, hi in ivs:
                n = D_MAX - min(_tz(lo), _tz(hi))
                if n > _cap:
                    raise DepthOverflow(n, _cap)

    @property
    def cyl(self) -> tuple:
        """The canonical antichain, sorted."""
        if self._cyl is None:
            out: list = []
            for lo, hi in self._iv:
                _interval_words(lo, hi, out)
            self._cyl = tuple(out)
        return self._cyl

    @classmethod
    def _from_ivs(cls, ivs: list, merged: bool = False) -> "Clopen":
        obj = cls.__new__(cls)
        obj._set(ivs if merged else _merge(ivs))
        return obj

    @classmethod
    def cylinder(cls, w: str) -> "Clopen":
        return cls._from_ivs([word_interval(check_word(w))], merged=True)

    @classmethod
    def whole(cls) -> "Clopen":
        return cls._from_ivs([(0, _FULL)], merged=True)

    @classmethod
    def empty(cls) -> "Clopen":
        return cls._from_ivs([], merged=True)

    # -- basic protocol
    def __eq__(self, other):
        return isinstance(other, Clopen) and self._iv == other._iv

    def __hash__(self):
        return hash(self._iv)

    def __bool__(self):
        return bool(self._iv)

    def __repr__(self):
        return f"Clopen({list(self.cyl)!r})"

    def sort_key(self) -> tuple:
        return self.cyl

    @property
    def intervals(self) -> tuple:
        return self._iv

    def is_whole(self) -> bool:
        return self._iv == ((0, _FULL),)

    def depth(self) -> int:
        """Length of the longest canonical word (0 for empty or whole)."""
        return max((D_MAX - min(_tz(lo), _tz(hi)) for lo, hi in self._iv), default=0)

    def first_word(self) -> str:
        return self.cyl[0]

    # -- boolean algebra
    def __or__(self, other: "Clopen") -> "Clopen":
        return Clopen._from_ivs(list(self._iv) + list(other._iv))

    def __and__(self, other: "Clopen") -> "Clopen":
        a, b = self._iv, other._iv
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return Clopen._from_ivs(out, merged=True)

    def complement(self) -> "Clopen":
        out = []
        pos = 0
        for lo, hi in self._iv:
            if lo > pos:
                out.append((pos, lo))
            pos = hi
        if pos < _FULL:
            out.append((pos, _FULL))
        return Clopen._from_ivs(out, merged=True)

    def __sub__(self, other: "Clopen") -> "Clopen":
        return self & other.complement()

    def __le__(self, other: "Clopen") -> bool:
        return (self & other) == self

    def __ge__(self, other: "Clopen") -> bool:
        return other <= self

    def isdisjoint(self, other: "Clopen") -> bool:
        return not (self & other)

    def meets_interval(self, lo: int, hi: int) -> bool:
        iv = self._iv
        k = bisect.bisect_right(iv, (lo, _FULL + 1))
        if k and iv[k - 1][1] > lo:
            return True
        return k < len(iv) and iv[k][0] < hi

    def contains_word(self, w: str) -> bool:
        """Whether the cylinder ``[w]`` is contained in the set."""
        lo, hi = word_interval(w)
        iv = self._iv
        k = bisect.bisect_right(iv, (lo, _FULL + 1)) - 1
        return k >= 0 and iv[k][0] <= lo and hi <= iv[k][1]

    def contains_point(self, x: "Point") -> bool:
        return self.contains_word(x.prefix(self.depth()))

    # -- shifting by prefixes
    def shift(self, x: str) -> "Clopen":
        """The set ``{w : x.w in self}``."""
        lo, hi = word_interval(x)
        n = len(x)
        out = []
        for a, b in self._iv:
            a, b = max(a, lo), min(b, hi)
            if a < b:
                out.append(((a - lo) << n, (b - lo) << n))
        return Clopen._from_ivs(out, merged=True)

    def prefixed(self, x: str) -> "Clopen":
        """The set ``x.self``."""
        n = len(x)
        if not n:
            return self
        base = word_interval(x)[0]
        mask = (1 << n) - 1
        out = []
        for a, b in self._iv:
            if (a & mask) or (b & mask):
                raise DepthOverflow(n + self.depth(), _cap)
            out.append((base + (a >> n), base + (b >> n)))
        _check_len(n + self.depth())
        return Clopen._from_ivs(out, merged=True)

    def split(self, k: int) -> list:
        """All nonempty intersections with the depth-``k`` cylinders, sorted."""
        _check_len(k)
        out = []
        for w in self.cyl:
            if len(w) >= k:
                out.append(Clopen.cylinder(w))
            else:
                for t in range(1 << (k - len(w))):
                    out.append(Clopen.cylinder(w + format(t, f"0{k - len(w)}b")))
        out.sort(key=Clopen.sort_key)
        return out

    def to_json(self) -> dict:
        return {"cyl": list(self.cyl)}

    @classmethod
    def from_json(cls, obj) -> "Clopen":
        return cls(obj["cyl"])


def union_all(sets: Iterable[Clopen]) -> Clopen:
    ivs: list = []
    for s in sets:
        ivs.extend(s.intervals)
    return Clopen._from_ivs(ivs)


def from_words_unchecked(words: Iterable[str]) -> Clopen:
    """Build a clopen from already valid words (skips per-word validation)."""
    return Clopen._from_ivs([word_interval(w) for w in words])


def diam(A: Clopen) -> Rat:
    """Exact diameter ``1/(L+1)``, ``L`` the longest common prefix of the canonical words."""
    if not A:
        raise ValueError("empty clopen has no diameter")
    if len(A.cyl) == 1:
        return Fraction(1, len(A.cyl[0]) + 1)
    return Fraction(1, lcp_len(A.cyl[0], A.cyl[-1]) + 1)


def _diam_len(A: Clopen) -> int:
    cyl = A.cyl
    if not cyl:
        raise ValueError("empty clopen has no diameter")
    if len(cyl) == 1:
        return len(cyl[0])
    return lcp_len(cyl[0], cyl[-1])


def mesh(C: Iterable[Clopen]) -> Rat:
    best = None
    for A in C:
        n = _diam_len(A)
        if best is None or n < best:
            best = n
    if best is None:
        raise ValueError("mesh of an empty collection")
    return Fraction(1, best + 1)


# ---------------------------------------------------------------------------
# points

def _primitive_root(w: str) -> str:
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d]
    return w


class Point:
    """The eventually periodic sequence ``pre . per . per . ...`` in canonical form."""

    __slots__ = ("pre", "per")

    def __init__(self, pre: str = "", per: str = "0"):
        if not per:
            raise ValueError("period must be nonempty")
        if pre.strip("01") or per.strip("01"):
            raise ValueError("points are binary")
        per = _primitive_root(per)
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = per[-1] + per[:-1]
        self.pre = pre
        self.per = per

    def __eq__(self, other):
        return isinstance(other, Point) and self.pre == other.pre and self.per == other.per

    def __hash__(self):
        return hash((self.pre, self.per))

    def __repr__(self):
        return f"Point({self.pre!r}, {self.per!r})"

    def __lt__(self, other):
        return (self.pre, self.per) < (other.pre, other.per)

    def bit(self, i: int) -> str:
        """The ``i``-th symbol, 0-based."""
        if i < len(self.pre):
            return self.pre[i]
        return self.per[(i - len(self.pre)) % len(self.per)]

    def prefix(self, n: int) -> str:
        if n <= len(self.pre):
            return self.pre[:n]
        rest = n - len(self.pre)
        reps = rest // len(self.per) + 1
        return self.pre + (self.per * reps)[:rest]

    def startswith(self, w: str) -> bool:
        return self.prefix(len(w)) == w

    def drop(self, k: int) -> "Point":
        """The tail after the first ``k`` symbols."""
        if k <= len(self.pre):
            return Point(self.pre[k:], self.per)
        j = (k - len(self.pre)) % len(self.per)
        return Point("", self.per[j:] + self.per[:j])

    def prepend(self, w: str) -> "Point":
        return Point(w + self.pre, self.per)

    def size(self) -> int:
        return len(self.pre) + len(self.per)

    def to_json(self) -> dict:
        return {"pre": self.pre, "per": self.per}

    @classmethod
    def from_json(cls, obj) -> "Point":
        return cls(obj["pre"], obj["per"])


def dist(x: Point, y: Point) -> Rat:
    """``1/n`` for the first (1-based) disagreement position ``n``; 0 if equal."""
    if x == y:
        return Fraction(0)
    bound = max(len(x.pre), len(y.pre)) + math.lcm(len(x.per), len(y.per))
    a, b = x.prefix(bound), y.prefix(bound)
    n = lcp_len(a, b)
    if n >= bound:  # unreachable for canonical points that differ
        return Fraction(0)
    return Fraction(1, n + 1)


# ---------------------------------------------------------------------------
# partitions

class Partition:
    """A finite clopen partition of the Cantor space (cells in the given order)."""

    __slots__ = ("cells", "_index", "_depth")

    def __init__(self, cells: Sequence[Clopen], check: bool = True):
        self.cells = tuple(cells)
        self._index = None
        self._depth = None
        if check:
            self._validate()

    def _validate(self) -> None:
        if not self.cells:
            raise ValueError("a partition needs at least one cell")
        ivs = []
        for c in self.cells:
            if not c:
                raise ValueError("partition cells must be nonempty")
            ivs.extend(c.intervals)
        ivs.sort()
        pos = 0
        for lo, hi in ivs:
            if lo != pos:
                raise ValueError("cells overlap or do not cover the space")
            pos = hi
        if pos != _FULL:
            raise ValueError("cells do not cover the space")

    @classmethod
    def uniform(cls, d: int) -> "Partition":
        _check_len(d)
        if d == 0:
            return cls([Clopen.whole()], check=False)
        return cls([Clopen.cylinder(format(i, f"0{d}b")) for i in range(1 << d)], check=False)

    @classmethod
    def from_words(cls, words: Sequence[str]) -> "Partition":
        return cls([Clopen.cylinder(w) for w in words])

    def __len__(self):
        return len(self.cells)

    def __iter__(self) -> Iterator[Clopen]:
        return iter(self.cells)

    def __getitem__(self, i):
        return self.cells[i]

    def __eq__(self, other):
        return isinstance(other, Partition) and self.cells == other.cells

    def __hash__(self):
        return hash(self.cells)

    def __repr__(self):
        return f"Partition({[list(c.cyl) for c in self.cells]!r})"

    def same_cells(self, other: "Partition") -> bool:
        return set(self.cells) == set(other.cells)

    def index(self) -> tuple:
        """Sorted ``(lo, hi, cell)`` interval table used for point location."""
        if self._index is None:
            rows = []
            for i, c in enumerate(self.cells):
                for lo, hi in c.intervals:
                    rows.append((lo, hi, i))
            rows.sort()
            self._index = (tuple(r[0] for r in rows), tuple(rows))
        return self._index

    def cells_meeting(self, A: Clopen) -> set:
        """Indices of cells meeting ``A``."""
        los, rows = self.index()
        out = set()
        for lo, hi in A.intervals:
            k = bisect.bisect_right(los, lo) - 1
            k = max(k, 0)
            while k < len(rows) and rows[k][0] < hi:
                if rows[k][1] > lo:
                    out.add(rows[k][2])
                k += 1
        return out

    def locate_word(self, w: str) -> int | None:
        """Cell containing the cylinder ``[w]``, or None if it is split."""
        los, rows = self.index()
        lo, hi = word_interval(w)
        k = bisect.bisect_right(los, lo) - 1
        if k >= 0 and rows[k][0] <= lo and hi <= rows[k][1]:
            return rows[k][2]
        return None

    def locate(self, x: Point) -> int:
        """Cell containing the point ``x``."""
        los, rows = self.index()
        n = self.max_depth()
        p = x.prefix(n)
        lo = int(p, 2) << (D_MAX - n) if n else 0
        k = bisect.bisect_right(los, lo) - 1
        return rows[k][2]

    def max_depth(self) -> int:
        if self._depth is None:
            self._depth = max(c.depth() for c in self.cells)
        return self._depth

    def refines(self, coarse: "Partition") -> bool:
        return refinement_map(self, coarse) is not None

    def to_json(self) -> dict:
        return {"cells": [c.to_json() for c in self.cells]}

    @classmethod
    def from_json(cls, obj) -> "Partition":
        return cls([Clopen.from_json(c) for c in obj["cells"]])


def refinement_map(fine: Partition, coarse: Partition) -> list | None:
    """``nu[i]`` = index of the coarse cell containing fine cell ``i``, or None."""
    out = []
    for c in fine.cells:
        j = coarse.locate_word(c.cyl[0])
        if j is None or not (c <= coarse.cells[j]):
            return None
        out.append(j)
    return out


def min_gap(P: Partition) -> Rat:
    """Smallest set distance between two distinct cells, ``1/(L+1)``."""
    if len(P) < 2:
        raise ValueError("gap undefined")
    rows = sorted((w, i) for i, c in enumerate(P.cells) for w in c.cyl)
    best = -1
    for (a, i), (b, j) in zip(rows, rows[1:]):
        if i != j:
            best = max(best, lcp_len(a, b))
    return Fraction(1, best + 1)


# ---------------------------------------------------------------------------
# prefix maps

def _canonical_rules(rules: list) -> tuple:
    """Merge sibling rules ``(p0,q0),(p1,q1)`` into ``(p,q)`` to a fixpoint."""
    stack: list = []
    for s, d in rules:
        stack.append((s, d))
        while len(stack) >= 2:
            (s0, d0), (s1, d1) = stack[-2], stack[-1]
            if (s0 and s1 and len(s0) == len(s1) and s0[-1] == "0" and s1[-1] == "1"
                    and s0[:-1] == s1[:-1] and d0 and d1 and d0[-1] == "0"
                    and d1[-1] == "1" and d0[:-1] == d1[:-1]):
                stack[-2:] = [(s0[:-1], d0[:-1])]
            else:
                break
    return tuple(stack)


class PrefixMap:
    """A continuous self-map given by prefix substitution rules.

    Parameters
    ----------
    rules : iterable of (src, dst) pairs
        The source words must form a complete antichain.
    canonical : bool
        Merge sibling rules so that equal maps have equal rule tuples.
    check : bool or "complete"
        Validate the words and the completeness of the sources.  The value
        ``"complete"`` skips the per-word validation for trusted input.

    Notes
    -----
    The map sends ``src . w`` to ``dst . w``.  It is a homeomorphism exactly
    when the destination words form a complete antichain as well.
    """

    __slots__ = ("rules", "_srcs", "_los", "_maxsrc", "_homeo", "_inj")

    def __init__(self, rules: Iterable, canonical: bool = True, check: bool = True):
        rs = sorted((s, d) for s, d in rules)
        if check:
            if check != "complete":
                for s, d in rs:
                    check_word(s)
                    check_word(d)
            if not _complete_antichain([s for s, _ in rs]):
                raise ValueError("rule sources must form a complete antichain")
        self.rules = _canonical_rules(rs) if canonical else tuple(rs)
        self._srcs = tuple(s for s, _ in self.rules)
        self._los = tuple(word_interval(s)[0] for s in self._srcs)
        self._maxsrc = max(len(s) for s in self._srcs)
        self._homeo = None
        self._inj = None

    @classmethod
    def identity(cls) -> "PrefixMap":
        return cls([("", "")])

    def __eq__(self, other):
        return isinstance(other, PrefixMap) and self.rules == other.rules

    def __hash__(self):
        return hash(self.rules)

    def __repr__(self):
        if len(self.rules) > 6:
            return f"PrefixMap(<{len(self.rules)} rules>)"
        return f"PrefixMap({list(self.rules)!r})"

    def __len__(self):
        return len(self.rules)

    def is_homeomorphism(self) -> bool:
        if self._homeo is None:
            self._homeo = _complete_antichain([d for _, d in self.rules])
        return self._homeo

    def is_injective(self) -> bool:
        if self._inj is None:
            ds = sorted(d for _, d in self.rules)
            self._inj = all(not b.startswith(a) for a, b in zip(ds, ds[1:]))
        return self._inj

    def inverse(self) -> "PrefixMap":
        if not self.is_homeomorphism():
            raise ValueError("only homeomorphisms have inverses")
        return PrefixMap([(d, s) for s, d in self.rules], check=False)

    def max_src_len(self) -> int:
        return self._maxsrc

    def max_dst_len(self) -> int:
        return max(len(d) for _, d in self.rules)

    def rule_index_for(self, lo: int) -> int:
        return bisect.bisect_right(self._los, lo) - 1

    def rule_for_word(self, w: str) -> int | None:
        """Index of the rule whose source is a prefix of ``w`` (None if ``w`` is split)."""
        k = bisect.bisect_right(self._los, word_interval(w)[0]) - 1
        s = self._srcs[k]
        return k if w.startswith(s) else None

    def to_json(self) -> dict:
        return {"rules": [{"src": s, "dst": d} for s, d in self.rules]}

    @classmethod
    def from_json(cls, obj) -> "PrefixMap":
        return cls([(r["src"], r["dst"]) for r in obj["rules"]])


def _complete_antichain(words: Sequence[str]) -> bool:
    ivs = sorted(word_interval(w) for w in words)
    pos = 0
    for lo, hi in ivs:
        if lo != pos:
            return False
        pos = hi
    return pos == _FULL


def apply(f: PrefixMap, x: Point) -> Point:
    """Image of the point ``x``."""
    p = x.prefix(f._maxsrc)
    k = bisect.bisect_right(f._los, word_interval(p)[0] if p else 0) - 1
    s, d = f.rules[k]
    return x.drop(len(s)).prepend(d)


def _shift_iv(a: int, b: int, slo: int, ls: int, dlo: int, ld: int) -> tuple:
    """Image of ``[a, b)`` inside ``[src]`` under ``src.w -> dst.w`` (interval form)."""
    if ls >= ld:
        k = ls - ld
        return dlo + ((a - slo) << k), dlo + ((b - slo) << k)
    k = ld - ls
    x, y = a - slo, b - slo
    if (x | y) & ((1 << k) - 1):
        raise DepthOverflow(D_MAX + k, _cap)
    return dlo + (x >> k), dlo + (y >> k)


def _image_ivs(f: PrefixMap, lo: int, hi: int, out: list) -> None:
    k = max(bisect.bisect_right(f._los, lo) - 1, 0)
    rules = f.rules
    while k < len(rules):
        s, d = rules[k]
        slo, shi = word_interval(s)
        if slo >= hi:
            break
        a, b = max(lo, slo), min(hi, shi)
        if a < b:
            dlo, dhi = word_interval(d)
            if a == slo and b == shi:
                out.append((dlo, dhi))
            else:
                iv = _shift_iv(a, b, slo, len(s), dlo, len(d))
                if _cap < D_MAX:
                    n = D_MAX - min(_tz(iv[0]), _tz(iv[1]))
                    if n > _cap:
                        raise DepthOverflow(n, _cap)
                out.append(iv)
        k += 1


def image(f: PrefixMap, A: Clopen) -> Clopen:
    out: list = []
    for lo, hi in A.intervals:
        _image_ivs(f, lo, hi, out)
    return Clopen._from_ivs(out)


def preimage(f: PrefixMap, A: Clopen) -> Clopen:
    out: list = []
    if not A:
        return Clopen.empty()
    for s, d in f.rules:
        dlo, dhi = word_interval(d)
        if not A.meets_interval(dlo, dhi):
            continue
        part = A.shift(d)
        if part.is_whole():
            out.append(word_interval(s))
        else:
            out.extend(part.prefixed(s).intervals)
    return Clopen._from_ivs(out)


def compose(f: PrefixMap, g: PrefixMap) -> PrefixMap:
    """The rule system of ``g . f`` (apply ``f`` first)."""
    out = []
    cap = _cap
    for s, d in f.rules:
        dlo, dhi = word_interval(d)
        k = max(bisect.bisect_right(g._los, dlo) - 1, 0)
        s2, d2 = g.rules[k]
        if d.startswith(s2):
            nd = d2 + d[len(s2):]
            if len(nd) > cap:
                raise DepthOverflow(len(nd), cap, "rule destination")
            out.append((s, nd))
            continue
        if not s2.startswith(d):
            # only possible when g is partial: rules inside [d] start later
            k += 1
        while k < len(g.rules):
            s2, d2 = g.rules[k]
            if not s2.startswith(d):
                break
            ns = s + s2[len(d):]
            if len(ns) > cap:
                raise DepthOverflow(len(ns), cap, "rule source")
            out.append((ns, d2))
            k += 1
    return PrefixMap(out, check=False)


def iterate(f: PrefixMap, n: int) -> PrefixMap:
    """``f`` composed with itself ``n`` times (``n = 0`` gives the identity)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    result = PrefixMap.identity()
    base = f
    while n:
        if n & 1:
            result = compose(result, base)
        n >>= 1
        if n:
            base = compose(base, base)
    return result


def _pieces(f: PrefixMap, g: PrefixMap) -> Iterator[tuple]:
    """Common refinement: yields ``(c, x, y)`` with ``f(c.w) = x.w``, ``g(c.w) = y.w``."""
    i = j = 0
    fr, gr = f.rules, g.rules
    while i < len(fr) and j < len(gr):
        s1, d1 = fr[i]
        s2, d2 = gr[j]
        if len(s1) >= len(s2):
            z = s1[len(s2):]
            yield s1, d1, d2 + z
        else:
            z = s2[len(s1):]
            yield s2, d1 + z, d2
        e1 = word_interval(s1)[1]
        e2 = word_interval(s2)[1]
        if e1 <= e2:
            i += 1
        if e2 <= e1:
            j += 1


def sup_dist(f: PrefixMap, g: PrefixMap) -> Rat:
    """The exact sup metric ``max_x d(f(x), g(x))``."""
    best = Fraction(0)
    for _, x, y in _pieces(f, g):
        if x == y:
            continue
        # incomparable words differ right after their common prefix; if one is
        # a proper prefix of the other a suitable suffix splits them there too
        d = Fraction(1, lcp_len(x, y) + 1)
        if d > best:
            best = d
            if best == 1:
                break
    return best


def sim_p(f: PrefixMap, g: PrefixMap, P: Partition) -> bool:
    """Whether ``f(x)`` and ``g(x)`` always lie in the same cell of ``P``."""
    for _, x, y in _pieces(f, g):
        if x == y:
            continue
        i, j = P.locate_word(x), P.locate_word(y)
        if i is not None and j is not None:
            if i != j:
                return False
            continue
        cells = P.cells_meeting(Clopen.cylinder(x)) | P.cells_meeting(Clopen.cylinder(y))
        for c in cells:
            if P.cells[c].shift(x) != P.cells[c].shift(y):
                return False
    return True


def restrict_rules(f: PrefixMap, R: Clopen) -> list:
    """Rules of ``f`` restricted to the region ``R`` (sources split along ``R``)."""
    out = []
    for lo, hi in R.intervals:
        k = max(bisect.bisect_right(f._los, lo) - 1, 0)
        while k < len(f.rules):
            s, d = f.rules[k]
            slo, shi = word_interval(s)
            if slo >= hi:
                break
            a, b = max(lo, slo), min(hi, shi)
            if a < b:
                if a == slo and b == shi:
                    out.append((s, d))
                else:
                    words: list = []
                    _interval_words(a, b, words)
                    for w in words:
                        _check_len(len(w))
                        out.append((w, d + w[len(s):]))
            k += 1
    return out


def clopen_bijection(A: Clopen, B: Clopen) -> list:
    """Rules mapping ``A`` bijectively onto ``B`` (both nonempty).

    The shallowest cylinders are split until both sides have the same number of
    cylinders, which are then paired in lexicographic order.
    """
    if not A or not B:
        raise ValueError("bijection needs nonempty sets")
    a, b = list(A.cyl), list(B.cyl)
    if len(a) == len(b):
        return list(zip(a, b))

    def grow(ws: list, target: int) -> list:
        ws = sorted(ws, key=lambda w: (len(w), w))
        while len(ws) < target:
            w = ws.pop(0)
            _check_len(len(w) + 1)
            ws.append(w + "0")
            ws.append(w + "1")
            ws.sort(key=lambda w: (len(w), w))
        return sorted(ws)

    n = max(len(a), len(b))
    a, b = grow(a, n), grow(b, n)
    return list(zip(a, b))


def split_words(ws: Sequence[str], n: int) -> list:
    """Refine the antichain ``ws`` (shallowest first) until it has at least ``n`` words."""
    ws = sorted(ws, key=lambda w: (len(w), w))
    while len(ws) < n:
        w = ws.pop(0)
        _check_len(len(w) + 1)
        ws.extend([w + "0", w + "1"])
        ws.sort(key=lambda w: (len(w), w))
    return sorted(ws)


def rule_fixed_points(s: str, d: str):
    """Fixed points of the single rule ``s.w -> d.w``.

    Returns ``None`` when there are none, the string ``"cylinder"`` when every
    point of ``[s]`` is fixed, or the unique fixed ``Point``.
    """
    if d == s:
        return "cylinder"
    if d.startswith(s):
        z = d[len(s):]
        return Point(s, z)
    if s.startswith(d):
        z = s[len(d):]
        return Point(s, z)
    return None


def fixed_points(f: PrefixMap) -> list:
    """All fixed points of ``f`` as (rule source, fixed point or "cylinder") pairs."""
    out = []
    for s, d in f.rules:
        fp = rule_fixed_points(s, d)
        if fp is not None:
            out.append((s, fp))
    return out
