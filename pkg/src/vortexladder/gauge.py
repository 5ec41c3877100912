"""Z2 link variables, loop observables, and vortex sectors.

A gauge configuration assigns u = +-1 to every bond, stored on the
canonical orientation i -> j with i < j; traversing a bond backwards flips
the sign.  The observable attached to an oriented loop c is

    value(c) = - prod_k u(c_k -> c_{k+1})

so +1 means "vortex free" on that loop.  Site sign flips s: sites -> {+-1}
act by u'(i->j) = s(i) s(j) u(i->j) and leave every loop value unchanged;
a vortex sector is the gauge orbit, recorded as one value per cycle-basis
loop (p1, p2, ..., and "big" on a ring).

Sector ids pack the basis values into a bitmask (bit set = value -1) with
the first cycle name in the most significant position, so ascending id
order is plain counter order with +1 before -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

from .errors import (
    GuardExceededError,
    InconsistentSectorError,
    InvalidLoopError,
    InvalidSpecError,
)
from .lattice import Ladder, Loop

MAX_SECTOR_BASIS = 30  # default guard for full sector enumeration


@dataclass(frozen=True)
class GaugeConfig:
    """Bond signs on canonical orientations; keys are (i, j) with i < j."""

    u: Mapping[tuple[int, int], int]

    def __post_init__(self):
        for key, val in self.u.items():
            if val not in (-1, 1):
                raise InvalidSpecError(f"u{key} = {val!r}, expected +-1")

    def sign(self, a: int, b: int) -> int:
        """Oriented sign u(a -> b); antisymmetric under swap."""
        if a < b:
            try:
                return self.u[(a, b)]
            except KeyError:
                raise InvalidLoopError(f"({a},{b}) is not a bond") from None
        try:
            return -self.u[(b, a)]
        except KeyError:
            raise InvalidLoopError(f"({b},{a}) is not a bond") from None

    @classmethod
    def all_plus(cls, ladder: Ladder) -> "GaugeConfig":
        return cls({b.pair: 1 for b in ladder.bonds})

    def to_json_dict(self) -> dict:
        return {"u": [[i, j, s] for (i, j), s in sorted(self.u.items())]}

    @classmethod
    def from_json_dict(cls, doc: Mapping, ladder: Ladder) -> "GaugeConfig":
        u = {(int(i), int(j)): int(s) for i, j, s in doc["u"]}
        if set(u) != set(ladder.bond_map):
            raise InvalidSpecError("gauge document does not cover exactly the bonds")
        return cls(u)


@dataclass(frozen=True)
class SignAssignment:
    """Site-local Z2 transformation s: sites -> {+-1}."""

    s: Mapping[int, int]

    def __post_init__(self):
        for site, val in self.s.items():
            if val not in (-1, 1):
                raise InvalidSpecError(f"s({site}) = {val!r}, expected +-1")

    def __call__(self, site: int) -> int:
        return self.s.get(site, 1)


@dataclass(frozen=True)
class VortexSector:
    """One +-1 value per cycle-basis loop, keyed by cycle name."""

    values: Mapping[str, int]
    sector_id: int | None = None

    def to_json_dict(self) -> dict:
        return {"cycles": dict(self.values)}


def vortex_value(gauge: GaugeConfig, loop: Loop) -> int:
    """Loop observable -prod u along the oriented traversal of `loop`."""
    if len(loop) < 3 or len(set(loop)) != len(loop):
        raise InvalidLoopError(f"{loop} is not a simple loop")
    prod = 1
    for k, a in enumerate(loop):
        prod *= gauge.sign(a, loop[(k + 1) % len(loop)])
    return -prod


def apply_gauge(gauge: GaugeConfig, assignment: SignAssignment) -> GaugeConfig:
    return GaugeConfig(
        {(i, j): assignment(i) * assignment(j) * s for (i, j), s in gauge.u.items()}
    )


def sector_of(ladder: Ladder, gauge: GaugeConfig) -> VortexSector:
    if set(gauge.u) != set(ladder.bond_map):
        raise InvalidSpecError("gauge does not cover exactly the ladder bonds")
    values = {name: vortex_value(gauge, loop) for name, loop in ladder.cycles.items()}
    return VortexSector(values, sector_id(ladder, values))


def sector_id(ladder: Ladder, values: Mapping[str, int]) -> int:
    names = ladder.cycle_names
    if set(values) != set(names):
        raise InconsistentSectorError(
            f"sector must assign exactly {names}, got {tuple(values)}"
        )
    sid = 0
    for k, name in enumerate(names):
        v = values[name]
        if v not in (-1, 1):
            raise InconsistentSectorError(f"sector value for {name} must be +-1, got {v!r}")
        if v == -1:
            sid |= 1 << (len(names) - 1 - k)
    return sid


def sector_from_id(ladder: Ladder, sid: int) -> VortexSector:
    names = ladder.cycle_names
    values = {
        name: -1 if (sid >> (len(names) - 1 - k)) & 1 else 1
        for k, name in enumerate(names)
    }
    return VortexSector(values, sid)


def enumerate_sectors(ladder: Ladder, guard: int = MAX_SECTOR_BASIS) -> Iterator[VortexSector]:
    """All sectors in ascending sector-id (counter) order."""
    n = len(ladder.cycle_names)
    if n > guard:
        raise GuardExceededError(f"2^{n} sectors exceeds the enumeration guard ({guard})")
    for sid in range(1 << n):
        yield sector_from_id(ladder, sid)


# ---------------------------------------------------------------------------
# spanning-tree gauge construction

def spanning_cotree(ladder: Ladder) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Split bonds into a lexicographically-least spanning tree and the rest."""
    parent = list(range(ladder.n_sites + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree, cotree = [], []
    for b in ladder.bonds:  # already sorted by (i, j)
        ra, rb = find(b.i), find(b.j)
        if ra == rb:
            cotree.append(b.pair)
        else:
            parent[ra] = rb
            tree.append(b.pair)
    return tree, cotree


def cycle_cotree_matrix(ladder: Ladder, cotree: list[tuple[int, int]]) -> list[int]:
    """Row r = bitmask of co-tree bonds used by cycle-basis loop r."""
    col = {pair: c for c, pair in enumerate(cotree)}
    rows = []
    for loop in ladder.cycles.values():
        mask = 0
        for a, b in zip(loop, loop[1:] + loop[:1]):
            pair = (a, b) if a < b else (b, a)
            if pair in col:
                mask |= 1 << col[pair]
        rows.append(mask)
    return rows


def _solve_gf2(rows: list[int], rhs: list[int]) -> int:
    """Solve the square GF(2) system rows . x = rhs; returns x as a bitmask."""
    n = len(rows)
    aug = [rows[r] | (rhs[r] & 1) << n for r in range(n)]
    pivot_row_of_col: dict[int, int] = {}
    for r in range(n):
        row = aug[r]
        for c in sorted(pivot_row_of_col):
            if (row >> c) & 1:
                row ^= aug[pivot_row_of_col[c]]
        lead = next((c for c in range(n) if (row >> c) & 1), None)
        if lead is None:
            raise InconsistentSectorError("cycle basis is linearly dependent")
        aug[r] = row
        pivot_row_of_col[lead] = r
    x = 0
    # back substitution over the (now triangular-ish) pivots
    for c in sorted(pivot_row_of_col, reverse=True):
        r = pivot_row_of_col[c]
        acc = (aug[r] >> n) & 1
        row = aug[r] & ~(1 << c)
        for cc in range(n):
            if (row >> cc) & 1:
                acc ^= (x >> cc) & 1
        if acc:
            x |= 1 << c
    return x


def gauge_for_sector(ladder: Ladder, sector: VortexSector | Mapping[str, int]) -> GaugeConfig:
    """Deterministic representative gauge: u = +1 on a fixed spanning tree,
    co-tree signs solved over GF(2) so every basis loop hits its target."""
    values = sector.values if isinstance(sector, VortexSector) else sector
    sector_id(ladder, values)  # validates names and +-1 entries
    tree, cotree = spanning_cotree(ladder)
    base = GaugeConfig.all_plus(ladder)
    rows = cycle_cotree_matrix(ladder, cotree)
    rhs = []
    for name, loop in ladder.cycles.items():
        # (-1)^x_sum must equal target / base_value on each basis loop
        rhs.append(0 if values[name] == vortex_value(base, loop) else 1)
    x = _solve_gf2(rows, rhs)
    u = {pair: 1 for pair in tree}
    for c, pair in enumerate(cotree):
        u[pair] = -1 if (x >> c) & 1 else 1
    out = GaugeConfig(u)
    got = sector_of(ladder, out)
    if dict(got.values) != dict(values):  # defensive; construction is exact
        raise InconsistentSectorError("solved gauge does not reproduce the sector")
    return out
