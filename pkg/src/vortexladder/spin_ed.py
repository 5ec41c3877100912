"""Exact diagonalization of the ladder spin model.

Operators are sums of Pauli strings.  A string is stored as
(x_mask, z_mask, phase_pow) representing i^phase_pow * X^x * Z^z with
sigma_y = i X Z, so products of strings are exact: the phase exponent is
integer arithmetic mod 4 ((X^a Z^b)(X^c Z^d) picks up (-1)^{|b & c|}) and
coefficient cancellations involve identical floats.  Algebraic identities
(loop operators squaring to the identity, commuting with the Hamiltonian)
therefore hold exactly, not just numerically.

Basis convention for matrices: computational z-basis, bit k-1 of the basis
index set <=> sigma^z on site k equals -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import (
    ConvergenceError,
    GuardExceededError,
    InvalidLoopError,
    InvalidSpecError,
    LabelingError,
    MalformedMatrixError,
)
from .freefermion import CouplingConfig
from .lattice import BondType, Ladder, Loop

MAX_DENSE_SPINS = 12   # dense path guard: 2^12 = 4096
MAX_ITER_SPINS = 20    # matrix-free path guard
MAX_ITER_K = 64
RESIDUAL_TOL = 1e-8

_PHASE = (1.0, 1j, -1.0, -1j)  # i**k


@dataclass(frozen=True)
class PauliString:
    x_mask: int
    z_mask: int
    phase_pow: int = 0  # power of i, mod 4

    def __post_init__(self):
        object.__setattr__(self, "phase_pow", self.phase_pow % 4)

    def __mul__(self, other: "PauliString") -> "PauliString":
        swaps = (self.z_mask & other.x_mask).bit_count() & 1
        return PauliString(
            self.x_mask ^ other.x_mask,
            self.z_mask ^ other.z_mask,
            self.phase_pow + other.phase_pow + 2 * swaps,
        )

    def dagger(self) -> "PauliString":
        overlap = (self.x_mask & self.z_mask).bit_count() & 1
        return PauliString(self.x_mask, self.z_mask, -self.phase_pow + 2 * overlap)

    @property
    def phase(self) -> complex:
        return _PHASE[self.phase_pow]

    def commutes_with(self, other: "PauliString") -> bool:
        a = (self.x_mask & other.z_mask).bit_count()
        b = (self.z_mask & other.x_mask).bit_count()
        return (a + b) % 2 == 0


def sigma(kind: BondType | str, site: int) -> PauliString:
    bit = 1 << (site - 1)
    kind = BondType(kind)
    if kind is BondType.X:
        return PauliString(bit, 0, 0)
    if kind is BondType.Z:
        return PauliString(0, bit, 0)
    return PauliString(bit, bit, 1)  # y = i x z


class SpinOperator:
    """Sum of Pauli strings; terms keyed by (x_mask, z_mask), phases folded
    into the complex coefficients.  Terms with exactly-zero coefficient are
    dropped so algebraic cancellations are visible as absent keys."""

    __slots__ = ("n_sites", "terms")

    def __init__(self, n_sites: int, terms: Mapping[tuple[int, int], complex] | None = None):
        self.n_sites = n_sites
        self.terms: dict[tuple[int, int], complex] = {}
        if terms:
            for key, c in terms.items():
                self._accumulate(key, c)

    def _accumulate(self, key: tuple[int, int], c: complex) -> None:
        if key[0] >> self.n_sites or key[1] >> self.n_sites:
            raise InvalidSpecError("Pauli mask exceeds the operator's site count")
        new = self.terms.get(key, 0) + c
        if new == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    def add_string(self, ps: PauliString, coeff: complex = 1.0) -> "SpinOperator":
        self._accumulate((ps.x_mask, ps.z_mask), coeff * ps.phase)
        return self

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "SpinOperator") -> "SpinOperator":
        out = SpinOperator(self.n_sites, self.terms)
        for key, c in other.terms.items():
            out._accumulate(key, c)
        return out

    def __sub__(self, other: "SpinOperator") -> "SpinOperator":
        out = SpinOperator(self.n_sites, self.terms)
        for key, c in other.terms.items():
            out._accumulate(key, -c)
        return out

    def __mul__(self, other):
        if isinstance(other, SpinOperator):
            out = SpinOperator(self.n_sites)
            for (x1, z1), c1 in self.terms.items():
                for (x2, z2), c2 in other.terms.items():
                    ps = PauliString(x1, z1, 0) * PauliString(x2, z2, 0)
                    out.add_string(ps, c1 * c2)
            return out
        out = SpinOperator(self.n_sites)
        for key, c in self.terms.items():
            out._accumulate(key, c * other)
        return out

    __rmul__ = __mul__

    def commutator(self, other: "SpinOperator") -> "SpinOperator":
        return self * other - other * self

    def dagger(self) -> "SpinOperator":
        out = SpinOperator(self.n_sites)
        for (x, z), c in self.terms.items():
            ps = PauliString(x, z, 0).dagger()
            out.add_string(ps, np.conj(c))
        return out

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_identity(self) -> bool:
        return self.terms == {(0, 0): 1.0} or self.terms == {(0, 0): 1.0 + 0.0j}

    def equals(self, other: "SpinOperator") -> bool:
        return self.n_sites == other.n_sites and (self - other).is_zero

    def is_hermitian(self, tol: float = 0.0) -> bool:
        for (x, z), c in self.terms.items():
            want = np.conj(c) * (-1.0 if (x & z).bit_count() & 1 else 1.0)
            if abs(c - want) > tol:
                return False
        return True

    @property
    def is_real(self) -> bool:
        return all(complex(c).imag == 0 for c in self.terms.values())

    def coefficient_norm(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    # -- matrices -----------------------------------------------------------

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def to_dense(self, guard: int = MAX_DENSE_SPINS) -> np.ndarray:
        if self.n_sites > guard:
            raise GuardExceededError(
                f"{self.n_sites} spins exceeds the dense guard ({guard})"
            )
        dim = self.dim
        cols = np.arange(dim)
        dtype = float if self.is_real else complex
        h = np.zeros((dim, dim), dtype=dtype)
        for (x, z), c in self.terms.items():
            signs = 1.0 - 2.0 * (np.bitwise_count(cols & z) & 1)
            val = c if dtype is complex else complex(c).real
            h[cols ^ x, cols] += val * signs
        return h

    def compiled(self) -> "_CompiledOperator":
        return _CompiledOperator(self)

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.compiled().matvec(psi)))


class _CompiledOperator:
    """Matrix-free applier; gathers beat scatters for repeated matvecs."""

    def __init__(self, op: SpinOperator):
        if op.n_sites > MAX_ITER_SPINS:
            raise GuardExceededError(
                f"{op.n_sites} spins exceeds the matrix-free guard ({MAX_ITER_SPINS})"
            )
        dim = op.dim
        self.dim = dim
        self.dtype = np.float64 if op.is_real else np.complex128
        cols = np.arange(dim, dtype=np.int64)
        sign_cache: dict[int, np.ndarray] = {}
        self._terms = []
        for (x, z), c in op.terms.items():
            if z not in sign_cache:
                sign_cache[z] = 1.0 - 2.0 * (np.bitwise_count(cols & z) & 1).astype(np.float64)
            # gather form: out[s] = c' * (-1)^{|z & s|} psi[s ^ x]
            cc = complex(c) * (-1.0 if (z & x).bit_count() & 1 else 1.0)
            self._terms.append((cols ^ x, sign_cache[z], cc if self.dtype == np.complex128 else cc.real))

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi)
        out = np.zeros(self.dim, dtype=np.result_type(self.dtype, psi.dtype))
        for idx, signs, c in self._terms:
            out += c * (signs * psi[idx])
        return out

    def matmat(self, block: np.ndarray) -> np.ndarray:
        out = np.zeros(block.shape, dtype=np.result_type(self.dtype, block.dtype))
        for idx, signs, c in self._terms:
            out += c * (signs[:, None] * block[idx, :])
        return out


# ---------------------------------------------------------------------------
# Hamiltonian and loop operators

def build_spin_hamiltonian(ladder: Ladder, couplings: CouplingConfig) -> SpinOperator:
    """H = -sum_bonds J_(ij) sigma_i^t sigma_j^t with t the bond type."""
    couplings.validate_for(ladder)
    op = SpinOperator(ladder.n_sites)
    for bond in ladder.bonds:
        term = sigma(bond.kind, bond.i) * sigma(bond.kind, bond.j)
        op.add_string(term, -couplings[bond.pair])
    return op


def vortex_operator(ladder: Ladder, loop: Loop | str) -> SpinOperator:
    """Conserved loop operator: i^{|c|+2} times the ordered product of
    sigma_a^t sigma_b^t over the loop's bonds (t = bond type).  Always a
    single Hermitian Pauli string with coefficient exactly +-1."""
    if isinstance(loop, str):
        try:
            loop = ladder.cycles[loop]
        except KeyError:
            raise InvalidLoopError(f"no cycle named {loop!r}") from None
    ps = PauliString(0, 0, len(loop) + 2)
    for a, b in ladder.loop_steps(loop):
        kind = ladder.bond_between(a, b).kind
        ps = ps * sigma(kind, a) * sigma(kind, b)
    if ps.phase_pow % 2:
        raise InvalidLoopError("loop operator did not close to a real string")
    return SpinOperator(ladder.n_sites).add_string(ps)


def cycle_operators(ladder: Ladder) -> dict[str, SpinOperator]:
    return {name: vortex_operator(ladder, name) for name in ladder.cycle_names}


# ---------------------------------------------------------------------------
# spectra

@dataclass
class SpectrumReport:
    method: str
    eigenvalues: np.ndarray
    labels: dict[str, np.ndarray] | None = None
    vectors: np.ndarray | None = None      # dim x n, column i <-> eigenvalue i
    residuals: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        doc: dict = {
            "method": self.method,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "labels": None,
        }
        if self.labels is not None:
            doc["labels"] = {k: [int(v) for v in arr] for k, arr in self.labels.items()}
        return doc


def dense_spectrum(
    h: SpinOperator, with_vectors: bool = False, guard: int = MAX_DENSE_SPINS
) -> SpectrumReport:
    """Full spectrum by dense diagonalization (2^{4N} <= 4096 by default)."""
    if not h.is_hermitian(tol=0.0):
        raise MalformedMatrixError("operator is not Hermitian")
    mat = h.to_dense(guard=guard)
    if with_vectors:
        w, v = np.linalg.eigh(mat)
        return SpectrumReport("dense", w, vectors=v)
    return SpectrumReport("dense", np.linalg.eigvalsh(mat))


def dense_lowest(h: SpinOperator, k: int, guard: int = MAX_DENSE_SPINS) -> SpectrumReport:
    """Lowest k eigenpairs of the dense matrix (for label extraction)."""
    if not h.is_hermitian(tol=0.0):
        raise MalformedMatrixError("operator is not Hermitian")
    mat = h.to_dense(guard=guard)
    k = min(k, mat.shape[0])
    w, v = scipy.linalg.eigh(mat, subset_by_index=(0, k - 1))
    return SpectrumReport("dense", w, vectors=v)


def lowest_eigenvalues(h: SpinOperator, k: int, seed: int) -> SpectrumReport:
    """Lowest k eigenpairs, matrix-free (implicitly restarted Lanczos with
    a seeded start vector; deterministic for a fixed seed)."""
    if h.n_sites > MAX_ITER_SPINS:
        raise GuardExceededError(f"{h.n_sites} spins exceeds the guard ({MAX_ITER_SPINS})")
    if not (1 <= k <= MAX_ITER_K):
        raise GuardExceededError(f"k={k} outside 1..{MAX_ITER_K}")
    if not h.is_hermitian(tol=0.0):
        raise MalformedMatrixError("operator is not Hermitian")
    applier = h.compiled()
    dim = applier.dim
    if k >= dim - 1:  # ARPACK needs k < dim - 1; tiny problems go dense
        rep = dense_spectrum(h, with_vectors=True, guard=MAX_DENSE_SPINS)
        rep.eigenvalues = rep.eigenvalues[:k]
        rep.vectors = rep.vectors[:, :k]
        rep.residuals = np.zeros(len(rep.eigenvalues))
        return rep
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    linop = scipy.sparse.linalg.LinearOperator(
        (dim, dim), matvec=applier.matvec, dtype=applier.dtype
    )
    try:
        w, v = scipy.sparse.linalg.eigsh(linop, k=k, which="SA", v0=v0)
    except scipy.sparse.linalg.ArpackNoConvergence as e:
        raise ConvergenceError(f"Lanczos failed to converge: {e}") from e
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    residuals = np.array(
        [np.linalg.norm(applier.matvec(v[:, i]) - w[i] * v[:, i]) for i in range(k)]
    )
    if residuals.max(initial=0.0) > RESIDUAL_TOL * max(1.0, h.coefficient_norm()):
        raise ConvergenceError(f"residuals {residuals} exceed {RESIDUAL_TOL}")
    return SpectrumReport("iterative-lowest", w, vectors=v, residuals=residuals)


# ---------------------------------------------------------------------------
# labels

def _clusters(values: np.ndarray, tol: float) -> list[slice]:
    edges = [0]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > tol:
            edges.append(i)
    edges.append(len(values))
    return [slice(a, b) for a, b in zip(edges, edges[1:])]


def label_eigenstates(
    h: SpinOperator,
    vortex_ops: Mapping[str, SpinOperator],
    report: SpectrumReport,
    degeneracy_tol: float = 1e-7,
    seed: int = 7,
) -> SpectrumReport:
    """Attach a +-1 label per loop operator to every state in the report.

    Degenerate clusters (eigenvalue spread <= degeneracy_tol) are rotated
    into a simultaneous eigenbasis of the projected loop operators before
    reading labels off the diagonal; labels further than 1e-6 from +-1
    raise LabelingError.
    """
    if report.vectors is None:
        raise LabelingError("report carries no eigenvectors to label")
    _check_commutation(h, vortex_ops, seed)
    w = report.eigenvalues
    vecs = report.vectors
    appliers = {name: op.compiled() for name, op in vortex_ops.items()}
    labels = {name: np.zeros(len(w), dtype=np.int64) for name in vortex_ops}
    rng = np.random.default_rng(seed)
    for sl in _clusters(w, degeneracy_tol):
        block = vecs[:, sl]
        m = block.shape[1]
        projected = {
            name: block.conj().T @ appliers[name].matmat(block) for name in vortex_ops
        }
        if m == 1:
            rotation = np.eye(1)
        else:
            weights = rng.uniform(1.0, 2.0, size=len(projected))
            mix = sum(wt * mat for wt, mat in zip(weights, projected.values()))
            mix = (mix + mix.conj().T) / 2
            _, rotation = np.linalg.eigh(mix)
        for name, mat in projected.items():
            diag = np.real(np.diagonal(rotation.conj().T @ mat @ rotation))
            if np.max(np.abs(np.abs(diag) - 1.0), initial=0.0) > 1e-6:
                raise LabelingError(
                    f"cluster {sl} does not resolve into +-1 labels for {name}"
                )
            labels[name][sl] = np.where(diag > 0, 1, -1)
    return replace(report, labels=labels)


def _check_commutation(h: SpinOperator, ops: Mapping[str, SpinOperator], seed: int) -> None:
    rng = np.random.default_rng(seed)
    applier_h = h.compiled()
    v = rng.standard_normal(applier_h.dim)
    v /= np.linalg.norm(v)
    for name, op in ops.items():
        ap = op.compiled()
        resid = np.linalg.norm(applier_h.matvec(ap.matvec(v)) - ap.matvec(applier_h.matvec(v)))
        if resid > 1e-10 * max(1.0, h.coefficient_norm()):
            raise LabelingError(f"operator {name} does not commute with H (resid {resid:.2e})")


# ---------------------------------------------------------------------------
# spectrum comparison

@dataclass
class SpectrumComparison:
    tol: float
    dedup_a: np.ndarray
    dedup_b: np.ndarray
    matched: list[tuple[float, float]]
    only_a: list[tuple[float, float]]  # (value, distance to nearest b)
    only_b: list[tuple[float, float]]

    @property
    def equal(self) -> bool:
        return not self.only_a and not self.only_b

    def to_json_dict(self) -> dict:
        return {
            "tol": self.tol,
            "dedup_sizes": [len(self.dedup_a), len(self.dedup_b)],
            "matched": len(self.matched),
            "only_a": [[float(v), float(d)] for v, d in self.only_a],
            "only_b": [[float(v), float(d)] for v, d in self.only_b],
            "equal": self.equal,
        }


def dedup_values(values: Iterable[float], tol: float) -> np.ndarray:
    """Cluster within tol and keep one representative (cluster mean)."""
    arr = np.sort(np.asarray(list(values), dtype=float))
    if arr.size == 0:
        return arr
    reps, start = [], 0
    for i in range(1, len(arr) + 1):
        if i == len(arr) or arr[i] - arr[i - 1] > tol:
            reps.append(arr[start:i].mean())
            start = i
    return np.asarray(reps)


def _nearest_distance(value: float, pool: np.ndarray) -> float:
    if pool.size == 0:
        return float("inf")
    idx = np.searchsorted(pool, value)
    cands = pool[max(0, idx - 1) : idx + 1]
    return float(np.min(np.abs(cands - value)))


def compare_spectra(a: Iterable[float], b: Iterable[float], tol: float = 1e-8) -> SpectrumComparison:
    da, db = dedup_values(a, tol), dedup_values(b, tol)
    matched, only_a, only_b = [], [], []
    ia = ib = 0
    while ia < len(da) and ib < len(db):
        if abs(da[ia] - db[ib]) <= tol:
            matched.append((float(da[ia]), float(db[ib])))
            ia += 1
            ib += 1
        elif da[ia] < db[ib]:
            only_a.append((float(da[ia]), _nearest_distance(da[ia], db)))
            ia += 1
        else:
            only_b.append((float(db[ib]), _nearest_distance(db[ib], da)))
            ib += 1
    only_a += [(float(v), _nearest_distance(v, db)) for v in da[ia:]]
    only_b += [(float(v), _nearest_distance(v, da)) for v in db[ib:]]
    return SpectrumComparison(tol, da, db, matched, only_a, only_b)
