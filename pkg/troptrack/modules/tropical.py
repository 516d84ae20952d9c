"""
Tropical points of the cluster A- and X-varieties and their mutations.

Everything is min-plus over exact rationals. Sign decisions at zero are
exact, which the sign-of-path machinery depends on.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple

from troptrack.errors import ChartMismatch
from troptrack.modules.surface import ArcId, ExchangeMatrix, FlipWord

logger = logging.getLogger(__name__)

KINDS = ("A", "X")


def sgn(x) -> int:
    return (x > 0) - (x < 0)


def _pos(x):
    return x if x > 0 else 0


# ── Points ───────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class TropicalPoint:
    chart: str
    kind: str
    arcs: Tuple[ArcId, ...]
    values: Tuple[Fraction, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ChartMismatch(f"kind must be A or X, got {self.kind!r}")
        if len(self.arcs) != len(self.values):
            raise ChartMismatch("coordinate count differs from the chart's arcs")
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))

    @classmethod
    def from_mapping(cls, chart: str, kind: str, arcs: Sequence[ArcId], coords: Mapping) -> "TropicalPoint":
        lookup = {str(k): v for k, v in coords.items()}
        missing = [a for a in arcs if str(a) not in lookup]
        if missing or len(lookup) != len(arcs):
            raise ChartMismatch(f"coordinates must be indexed by the chart arcs, missing {missing}",
                                {"missing": [str(a) for a in missing]})
        return cls(chart, kind, tuple(arcs), tuple(Fraction(lookup[str(a)]) for a in arcs))

    @classmethod
    def zero(cls, chart: str, kind: str, arcs: Sequence[ArcId]) -> "TropicalPoint":
        return cls(chart, kind, tuple(arcs), tuple(Fraction(0) for _ in arcs))

    def __getitem__(self, arc: ArcId) -> Fraction:
        return self.values[self.arcs.index(arc)]

    def as_dict(self) -> Dict[ArcId, Fraction]:
        return dict(zip(self.arcs, self.values))

    def replace(self, values: Sequence[Fraction], chart: str | None = None) -> "TropicalPoint":
        return TropicalPoint(chart or self.chart, self.kind, self.arcs, tuple(values))

    def scaled(self, factor) -> "TropicalPoint":
        f = Fraction(factor)
        return self.replace([v * f for v in self.values])

    def geometric(self) -> Tuple[Fraction, ...]:
        """Geometric presentation of an A-point: 𝖺 = -a."""
        if self.kind != "A":
            raise ChartMismatch("only A-points have a geometric presentation")
        return tuple(-v for v in self.values)

    @classmethod
    def from_geometric(cls, chart: str, arcs: Sequence[ArcId], values: Sequence) -> "TropicalPoint":
        return cls(chart, "A", tuple(arcs), tuple(-Fraction(v) for v in values))

    def norm(self) -> Fraction:
        return sum((abs(v) for v in self.values), Fraction(0))


@dataclass(frozen=True)
class SignSequence:
    signs: Tuple[int, ...]

    @property
    def is_strict(self) -> bool:
        return all(s != 0 for s in self.signs)

    def __len__(self) -> int:
        return len(self.signs)

    def __str__(self) -> str:
        return "".join({1: "+", 0: "0", -1: "-"}[s] for s in self.signs)

    @classmethod
    def parse(cls, text: str) -> "SignSequence":
        table = {"+": 1, "0": 0, "-": -1, "−": -1}
        return cls(tuple(table[c] for c in text.strip()))


# ── Mutations ────────────────────────────────────────────────────────────────


def mutate_exchange(B: ExchangeMatrix, k: ArcId) -> ExchangeMatrix:
    """Matrix mutation at k (skew-symmetric Fomin-Zelevinsky rule)."""
    n = len(B.arcs)
    kk = B.index[k]
    b = B.entries
    out = [list(r) for r in b]
    for i in range(n):
        for j in range(n):
            if i == kk or j == kk:
                out[i][j] = -b[i][j]
            elif b[i][kk] * b[kk][j] > 0:
                sign = 1 if b[i][kk] > 0 else -1
                out[i][j] = b[i][j] + sign * b[i][kk] * b[kk][j]
    return ExchangeMatrix(B.arcs, tuple(tuple(r) for r in out))


def _check(p: TropicalPoint, B: ExchangeMatrix, kind: str) -> None:
    if p.kind != kind:
        raise ChartMismatch(f"expected a tropical {kind}-point, got {p.kind}")
    if tuple(map(str, p.arcs)) != tuple(map(str, B.arcs)):
        raise ChartMismatch("point and exchange matrix live on different arc sets")


def tropical_a_mutate(p: TropicalPoint, B: ExchangeMatrix, k: ArcId) -> TropicalPoint:
    _check(p, B, "A")
    kk = B.index[k]
    row = B.entries[kk]
    a = p.values
    plus = sum((_pos(row[j]) * a[j] for j in range(len(a))), Fraction(0))
    minus = sum((_pos(-row[j]) * a[j] for j in range(len(a))), Fraction(0))
    out = list(a)
    out[kk] = min(plus, minus) - a[kk]
    return p.replace(out, f"{p.chart}/{k}")


def tropical_x_mutate(p: TropicalPoint, B: ExchangeMatrix, k: ArcId) -> TropicalPoint:
    """x'_k = -x_k, x'_i = x_i + [sgn(x_k) b_ik]_+ x_k."""
    _check(p, B, "X")
    kk = B.index[k]
    x = p.values
    s = sgn(x[kk])
    out = [x[i] + _pos(s * B.entries[i][kk]) * x[kk] if i != kk else -x[kk] for i in range(len(x))]
    return p.replace(out, f"{p.chart}/{k}")


def tropical_x_mutate_min_form(p: TropicalPoint, B: ExchangeMatrix, k: ArcId) -> TropicalPoint:
    """x'_i = x_i - b_ik min{0, -sgn(b_ik) x_k}."""
    _check(p, B, "X")
    kk = B.index[k]
    x = p.values
    out = []
    for i in range(len(x)):
        if i == kk:
            out.append(-x[kk])
        else:
            b = B.entries[i][kk]
            out.append(x[i] - b * min(Fraction(0), -sgn(b) * x[kk]))
    return p.replace(out, f"{p.chart}/{k}")


def ensemble_map(p: TropicalPoint, B: ExchangeMatrix) -> TropicalPoint:
    """x_i = sum_j b_ij a_j."""
    _check(p, B, "A")
    a = p.values
    x = [sum((B.entries[i][j] * a[j] for j in range(len(a))), Fraction(0)) for i in range(len(a))]
    return TropicalPoint(p.chart, "X", p.arcs, tuple(x))


def permute_point(p: TropicalPoint, sigma: Mapping[ArcId, ArcId]) -> TropicalPoint:
    """y_{sigma(i)} = x_i."""
    idx = {a: i for i, a in enumerate(p.arcs)}
    out = [Fraction(0)] * len(p.values)
    for i, a in enumerate(p.arcs):
        out[idx[sigma.get(a, a)]] = p.values[i]
    return p.replace(out)


def frozen_x_matrix(B: ExchangeMatrix, k: ArcId, sign: int) -> Tuple[Tuple[Fraction, ...], ...]:
    """Linear matrix of the X-mutation at k on points with sgn(x_k) = sign."""
    n = len(B.arcs)
    kk = B.index[k]
    rows = []
    for i in range(n):
        row = [Fraction(0)] * n
        if i == kk:
            row[kk] = Fraction(-1)
        else:
            row[i] = Fraction(1)
            row[kk] += _pos(sign * B.entries[i][kk])
        rows.append(tuple(row))
    return tuple(rows)


def a_mutation_pieces(B: ExchangeMatrix, k: ArcId) -> Dict[str, object]:
    """The two linear pieces of the A-mutation at k.

    ``wall`` is the form plus - minus; piece "+" applies where wall <= 0
    (the positive monomial is the minimum), piece "-" where wall >= 0.
    """
    n = len(B.arcs)
    kk = B.index[k]
    row = B.entries[kk]
    plus = [Fraction(_pos(row[j])) for j in range(n)]
    minus = [Fraction(_pos(-row[j])) for j in range(n)]
    pieces = {}
    for name, mono in (("+", plus), ("-", minus)):
        mat = []
        for i in range(n):
            if i == kk:
                r = list(mono)
                r[kk] -= 1
            else:
                r = [Fraction(int(i == j)) for j in range(n)]
            mat.append(tuple(r))
        pieces[name] = tuple(mat)
    pieces["wall"] = tuple(p - m for p, m in zip(plus, minus))
    return pieces


def permutation_matrix(arcs: Sequence[ArcId], sigma: Mapping[ArcId, ArcId]) -> Tuple[Tuple[Fraction, ...], ...]:
    """Matrix P with (P x)_{sigma(i)} = x_i."""
    idx = {a: i for i, a in enumerate(arcs)}
    n = len(arcs)
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i, a in enumerate(arcs):
        rows[idx[sigma.get(a, a)]][i] = Fraction(1)
    return tuple(tuple(r) for r in rows)


# ── Paths ────────────────────────────────────────────────────────────────────


def apply_path_x(path: FlipWord, w: TropicalPoint, B0: ExchangeMatrix) -> Tuple[TropicalPoint, SignSequence]:
    """X-action of the path (flips, then sigma) together with its sign word."""
    x, B = w, B0
    signs: List[int] = []
    for k in path.flips:
        signs.append(sgn(x[k]))
        x = tropical_x_mutate(x, B, k)
        B = mutate_exchange(B, k)
    x = permute_point(x, path.sigma_map)
    return x, SignSequence(tuple(signs))


def apply_path_a(path: FlipWord, a: TropicalPoint, B0: ExchangeMatrix) -> TropicalPoint:
    p, B = a, B0
    for k in path.flips:
        p = tropical_a_mutate(p, B, k)
        B = mutate_exchange(B, k)
    return permute_point(p, path.sigma_map)


def sign_of_path(path: FlipWord, w: TropicalPoint, B0: ExchangeMatrix) -> SignSequence:
    return apply_path_x(path, w, B0)[1]
