"""Quadratic Majorana solver for a fixed Z2 gauge configuration.

For bond couplings J and bond signs u, the quadratic Hamiltonian is encoded
by the real antisymmetric matrix A with A[i,j] = J_(ij) u(i->j) on bonds
(sites 1..4N map to rows 0..4N-1).  Its one-particle modes eps_k >= 0 are
the singular values of A, which come in equal pairs; the many-body levels
are all sums sum_k (+-eps_k), the ground energy is -sum_k eps_k.

The per-sector spectra here are the unconstrained ones: no fermion-parity
restriction is applied when expanding {+-eps_k} sums.  Comparisons against
the spin model treat spectra as value sets, not multisets.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import gauge as gauge_mod
from .errors import (
    GuardExceededError,
    InconsistentSectorError,
    InvalidSpecError,
    MalformedMatrixError,
)
from .gauge import GaugeConfig, VortexSector
from .lattice import Bond, BondType, Ladder

MAX_EXPANSION_MODES = 24   # guard for the 2^m many-body expansion
MAX_SWEEP_BASIS = 30       # guard for full sector sweeps
MAX_SCAN_CELLS = 100       # guard for gap scans over N
PAIR_TOL = 1e-8            # relative tolerance for singular-value pairing


@dataclass(frozen=True)
class CouplingConfig:
    """Real coupling per bond, keyed by canonical (i, j)."""

    values: Mapping[tuple[int, int], float]

    @classmethod
    def homogeneous(cls, ladder: Ladder, jx: float, jy: float, jz: float) -> "CouplingConfig":
        by_type = {BondType.X: float(jx), BondType.Y: float(jy), BondType.Z: float(jz)}
        return cls({b.pair: by_type[b.kind] for b in ladder.bonds})

    def __getitem__(self, pair: tuple[int, int]) -> float:
        return self.values[pair]

    def validate_for(self, ladder: Ladder) -> None:
        if set(self.values) != set(ladder.bond_map):
            raise InvalidSpecError("couplings do not cover exactly the ladder bonds")
        for pair, val in self.values.items():
            if not np.isfinite(val):
                raise InvalidSpecError(f"coupling {pair} is not finite")


@dataclass(frozen=True)
class SkewAdjacency:
    matrix: np.ndarray  # (4N, 4N) real antisymmetric


@dataclass(frozen=True)
class ModeSpectrum:
    eps: np.ndarray  # one-particle energies, sorted descending, >= 0


def assemble_skew(ladder: Ladder, couplings: CouplingConfig, g: GaugeConfig) -> SkewAdjacency:
    couplings.validate_for(ladder)
    if set(g.u) != set(ladder.bond_map):
        raise InvalidSpecError("gauge does not cover exactly the ladder bonds")
    n = ladder.n_sites
    a = np.zeros((n, n))
    for (i, j), J in couplings.values.items():
        w = J * g.u[(i, j)]
        a[i - 1, j - 1] = w
        a[j - 1, i - 1] = -w
    return SkewAdjacency(a)


def mode_spectrum(skew: SkewAdjacency, pair_tol: float = PAIR_TOL) -> ModeSpectrum:
    a = np.asarray(skew.matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MalformedMatrixError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a + a.T).max(initial=0.0) > 1e-12 * scale:
        raise MalformedMatrixError("matrix is not antisymmetric within 1e-12")
    if a.shape[0] % 2:
        raise MalformedMatrixError("odd dimension cannot pair Majorana modes")
    s = np.linalg.svd(a, compute_uv=False)  # descending
    eps = s[0::2]
    mates = s[1::2]
    if np.any(np.abs(eps - mates) > pair_tol * np.maximum(eps, 1.0)):
        raise MalformedMatrixError("singular values do not pair within tolerance")
    dup = np.sort(np.repeat(eps, 2))[::-1]
    if np.any(np.abs(dup - s) > 1e-10 * scale):
        raise MalformedMatrixError("pair reconstruction check failed")
    return ModeSpectrum(eps)


def ground_energy(modes: ModeSpectrum) -> float:
    return -float(modes.eps.sum())


def many_body_spectrum(modes: ModeSpectrum, guard: int = MAX_EXPANSION_MODES) -> np.ndarray:
    """All 2^m sums of +-eps_k, ascending (unconstrained; see module note)."""
    eps = modes.eps
    if len(eps) > guard:
        raise GuardExceededError(f"2^{len(eps)} level expansion exceeds guard ({guard})")
    levels = np.zeros(1)
    for e in eps:
        levels = np.concatenate([levels - e, levels + e])
    levels.sort()
    return levels


def sector_ground_energy(
    ladder: Ladder, couplings: CouplingConfig, sector: VortexSector | Mapping[str, int]
) -> float:
    g = gauge_mod.gauge_for_sector(ladder, sector)
    return ground_energy(mode_spectrum(assemble_skew(ladder, couplings, g)))


# ---------------------------------------------------------------------------
# full sector sweeps

@dataclass(frozen=True)
class SweepRow:
    sector: VortexSector
    energy: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]  # sorted by (energy, sector id)

    @property
    def argmin(self) -> SweepRow:
        return self.rows[0]

    def row_for(self, sid: int) -> SweepRow:
        for row in self.rows:
            if row.sector.sector_id == sid:
                return row
        raise KeyError(sid)


def _cotree_solver(ladder: Ladder):
    """Precompute sid -> co-tree flip bitmask for gauge representatives."""
    tree, cotree = gauge_mod.spanning_cotree(ladder)
    rows = gauge_mod.cycle_cotree_matrix(ladder, cotree)
    n = len(rows)
    unit_cols = [gauge_mod._solve_gf2(rows, [1 if r == k else 0 for r in range(n)]) for k in range(n)]
    base = GaugeConfig.all_plus(ladder)
    x0 = 0
    for r, loop in enumerate(ladder.cycles.values()):
        if gauge_mod.vortex_value(base, loop) == -1:
            x0 ^= unit_cols[r]
    return cotree, unit_cols, x0


def _sector_flip_masks(sids: np.ndarray, unit_cols: Sequence[int], x0: int) -> np.ndarray:
    """Vectorized GF(2) solve: bitmask of co-tree bonds to flip per sector id."""
    n = len(unit_cols)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)  # first cycle = MSB
    bits = (sids[:, None] >> shifts[None, :]) & 1
    cols = np.asarray(unit_cols, dtype=np.int64)
    return np.bitwise_xor.reduce(np.where(bits == 1, cols, 0), axis=1) ^ x0


def sector_sweep(
    ladder: Ladder,
    couplings: CouplingConfig,
    guard: int = MAX_SWEEP_BASIS,
    threads: int | None = None,
    chunk: int = 4096,
) -> SweepResult:
    """Ground energy of every vortex sector, sorted by (energy, sector id)."""
    couplings.validate_for(ladder)
    n = len(ladder.cycle_names)
    if n > guard:
        raise GuardExceededError(f"2^{n} sectors exceeds the sweep guard ({guard})")
    cotree, unit_cols, x0 = _cotree_solver(ladder)
    a0 = assemble_skew(ladder, couplings, GaugeConfig.all_plus(ladder)).matrix
    flip_idx = [(i - 1, j - 1) for (i, j) in cotree]
    total = 1 << n
    all_sids = np.arange(total, dtype=np.int64)
    chunks = [all_sids[lo : lo + chunk] for lo in range(0, total, chunk)]

    def run_chunk(sids: np.ndarray) -> np.ndarray:
        xs = _sector_flip_masks(sids, unit_cols, x0)
        stack = np.broadcast_to(a0, (len(sids),) + a0.shape).copy()
        for c, (r, s) in enumerate(flip_idx):
            hit = ((xs >> c) & 1) == 1
            stack[hit, r, s] *= -1.0
            stack[hit, s, r] *= -1.0
        svals = np.linalg.svd(stack, compute_uv=False)
        eps = svals[:, 0::2]
        if np.abs(eps - svals[:, 1::2]).max(initial=0.0) > PAIR_TOL * max(1.0, svals.max(initial=0.0)):
            raise MalformedMatrixError("singular values do not pair within tolerance")
        return -eps.sum(axis=1)

    if threads is not None and threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            energies = np.concatenate(list(pool.map(run_chunk, chunks)))
    else:
        energies = np.concatenate([run_chunk(c) for c in chunks])

    order = np.lexsort((all_sids, energies))
    rows = tuple(
        SweepRow(gauge_mod.sector_from_id(ladder, int(sid)), float(energies[sid]))
        for sid in order
    )
    return SweepResult(rows)


def sector_union_spectrum(
    ladder: Ladder,
    couplings: CouplingConfig,
    guard: int = MAX_SWEEP_BASIS,
    expansion_guard: int = MAX_EXPANSION_MODES,
) -> np.ndarray:
    """Sorted concatenation of every sector's many-body levels."""
    parts = [
        many_body_spectrum(
            mode_spectrum(assemble_skew(ladder, couplings, gauge_mod.gauge_for_sector(ladder, sec))),
            guard=expansion_guard,
        )
        for sec in gauge_mod.enumerate_sectors(ladder, guard=guard)
    ]
    out = np.concatenate(parts)
    out.sort()
    return out


# ---------------------------------------------------------------------------
# vortex patterns and gaps

def parse_pattern(ladder: Ladder, text: str) -> dict[str, int]:
    """Pattern strings like "BL", "p3", "BL+p2N", "p2N-2+p2N-1" -> -1 flips.

    "p2N", "p2N-1", ... resolve relative to the ladder width; all listed
    cycles get value -1, everything else stays +1.
    """
    import re

    flips: dict[str, int] = {}
    for token in text.replace(" ", "").split("+"):
        if not token:
            raise InconsistentSectorError(f"empty token in pattern {text!r}")
        if token.upper() == "BL" or token == "big":
            name = "big"
        else:
            m = re.fullmatch(r"p2N(?:-(\d+))?", token)
            if m:
                k = 2 * ladder.n_cells - (int(m.group(1)) if m.group(1) else 0)
                name = f"p{k}"
            elif re.fullmatch(r"p\d+", token):
                name = token
            else:
                raise InconsistentSectorError(f"unrecognized pattern token {token!r}")
        if name not in ladder.cycles:
            raise InconsistentSectorError(f"pattern cycle {name!r} not present on this ladder")
        flips[name] = -1
    return flips


def pattern_sector(ladder: Ladder, pattern: Mapping[str, int]) -> VortexSector:
    values = {name: 1 for name in ladder.cycle_names}
    for name, v in pattern.items():
        if name not in values:
            raise InconsistentSectorError(f"pattern cycle {name!r} not present on this ladder")
        if v not in (-1, 1):
            raise InconsistentSectorError(f"pattern value for {name} must be +-1")
        values[name] = v
    return VortexSector(values, gauge_mod.sector_id(ladder, values))


@dataclass(frozen=True)
class GapReport:
    pattern: VortexSector
    energy_pattern: float
    energy_free: float

    @property
    def gap(self) -> float:
        return self.energy_pattern - self.energy_free


def big_loop_gap(
    ladder: Ladder, couplings: CouplingConfig, pattern: Mapping[str, int] | VortexSector | str
) -> GapReport:
    """Excitation energy of a vortex pattern over the all-(+1) sector."""
    if isinstance(pattern, str):
        pattern = parse_pattern(ladder, pattern)
    if isinstance(pattern, VortexSector):
        sec = pattern
    else:
        sec = pattern_sector(ladder, pattern)
    free = pattern_sector(ladder, {})
    return GapReport(
        sec,
        sector_ground_energy(ladder, couplings, sec),
        sector_ground_energy(ladder, couplings, free),
    )
