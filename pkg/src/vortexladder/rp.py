"""Reflection positivity checks in a Fock representation of Majoranas.

n Majorana generators c_1..c_n (n even) act on a 2^{n/2}-dimensional Fock
space through n/2 ladder pairs: c_{2mu-1} = a_mu + a_mu^*,
c_{2mu} = i(a_mu - a_mu^*), with the usual string of number parities in
front.  The "negative" half of the system is indices 1..n/2 by convention;
reflections are fixed-point-free involutions theta exchanging the halves.

The reflection acts on polynomials antilinearly: coefficients conjugate,
indices map through theta, and monomials are re-sorted with the fermionic
sign.  That action is representation-independent, which is what makes the
trace functionals below well-defined; the concrete theta is never realized
as an (anti)unitary matrix here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidSpecError, MalformedMatrixError
from .freefermion import SkewAdjacency, ground_energy, mode_spectrum
from .gauge import SignAssignment

MAX_FOCK_MAJORANAS = 16
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class MajoranaRep:
    n: int
    matrices: tuple[np.ndarray, ...]  # matrices[j-1] represents c_j

    @property
    def dim(self) -> int:
        return 1 << (self.n // 2)


@lru_cache(maxsize=None)
def fock_majoranas(n: int) -> MajoranaRep:
    """Hermitian anticommuting c_1..c_n with c_j^2 = 1 on 2^{n/2} dimensions."""
    if n % 2 or not (2 <= n <= MAX_FOCK_MAJORANAS):
        raise InvalidSpecError(f"need an even Majorana count in 2..{MAX_FOCK_MAJORANAS}, got {n}")
    modes = n // 2
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # a|1> = |0>
    parity = np.array([[1.0, 0.0], [0.0, -1.0]])
    eye = np.eye(2)
    mats: list[np.ndarray] = []
    for mu in range(modes):
        a = np.array([[1.0]])
        for nu in range(modes):
            if nu < mu:
                a = np.kron(a, parity)
            elif nu == mu:
                a = np.kron(a, lower)
            else:
                a = np.kron(a, eye)
        adag = a.conj().T
        mats.append(a + adag)
        mats.append(1j * (a - adag))
    return MajoranaRep(n, tuple(mats))


def negative_half(n: int) -> frozenset[int]:
    return frozenset(range(1, n // 2 + 1))


def mirror_theta(n: int) -> dict[int, int]:
    """The reference reflection i <-> n+1-i."""
    return {i: n + 1 - i for i in range(1, n + 1)}


def _check_theta(n: int, theta: Mapping[int, int]) -> None:
    neg = negative_half(n)
    if set(theta) != set(range(1, n + 1)):
        raise InvalidSpecError("theta must permute exactly the indices 1..n")
    for i, j in theta.items():
        if i == j or theta[j] != i:
            raise InvalidSpecError(f"theta is not a fixed-point-free involution at {i}")
        if (i in neg) == (j in neg):
            raise InvalidSpecError(f"theta must exchange the two halves (index {i})")


# ---------------------------------------------------------------------------
# polynomial algebra

def _merge_sign(seq: list[int]) -> tuple[tuple[int, ...], int]:
    """Canonically order a generator word; adjacent swaps cost -1, equal
    neighbors annihilate (c^2 = 1)."""
    sign = 1
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    out: list[int] = []
    for v in seq:
        if out and out[-1] == v:
            out.pop()
        else:
            out.append(v)
    return tuple(out), sign


class MajoranaPolynomial:
    """Complex polynomial in c_1..c_n; monomials are strictly increasing
    index tuples, the empty tuple being the identity."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[tuple[int, ...], complex] | None = None):
        self.n = n
        self.terms: dict[tuple[int, ...], complex] = {}
        if terms:
            for mono, c in terms.items():
                self._accumulate(tuple(mono), complex(c))

    def _accumulate(self, mono: tuple[int, ...], c: complex) -> None:
        if any(not (1 <= v <= self.n) for v in mono):
            raise InvalidSpecError(f"monomial {mono} out of range 1..{self.n}")
        if any(a >= b for a, b in zip(mono, mono[1:])):
            raise InvalidSpecError(f"monomial {mono} must be strictly increasing")
        new = self.terms.get(mono, 0) + c
        if new == 0:
            self.terms.pop(mono, None)
        else:
            self.terms[mono] = new

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "MajoranaPolynomial") -> "MajoranaPolynomial":
        out = MajoranaPolynomial(self.n, self.terms)
        for mono, c in other.terms.items():
            out._accumulate(mono, c)
        return out

    def __sub__(self, other: "MajoranaPolynomial") -> "MajoranaPolynomial":
        out = MajoranaPolynomial(self.n, self.terms)
        for mono, c in other.terms.items():
            out._accumulate(mono, -c)
        return out

    def __mul__(self, other):
        if isinstance(other, MajoranaPolynomial):
            out = MajoranaPolynomial(self.n)
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    mono, sign = _merge_sign(list(m1) + list(m2))
                    out._accumulate(mono, sign * c1 * c2)
            return out
        out = MajoranaPolynomial(self.n)
        for mono, c in self.terms.items():
            out._accumulate(mono, c * other)
        return out

    __rmul__ = __mul__

    @property
    def is_even(self) -> bool:
        return all(len(m) % 2 == 0 for m in self.terms)

    def support(self) -> frozenset[int]:
        return frozenset(v for m in self.terms for v in m)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def close_to(self, other: "MajoranaPolynomial", tol: float) -> bool:
        keys = set(self.terms) | set(other.terms)
        scale = max(1.0, self.max_abs_coeff(), other.max_abs_coeff())
        return all(
            abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= tol * scale for k in keys
        )

    def to_matrix(self, rep: MajoranaRep | None = None) -> np.ndarray:
        rep = rep or fock_majoranas(self.n)
        if rep.n != self.n:
            raise InvalidSpecError("representation size does not match the polynomial")
        out = np.zeros((rep.dim, rep.dim), dtype=complex)
        for mono, c in self.terms.items():
            acc = np.eye(rep.dim, dtype=complex)
            for v in mono:
                acc = acc @ rep.matrices[v - 1]
            out += c * acc
        return out


def quadratic(n: int, weights: Mapping[tuple[int, int], float]) -> MajoranaPolynomial:
    """H = sum_{i<j} w_ij * i c_i c_j as a polynomial (weights real)."""
    terms = {}
    for (i, j), w in weights.items():
        if not i < j:
            raise InvalidSpecError(f"weight key {(i, j)} must have i < j")
        terms[(i, j)] = 1j * float(w)
    return MajoranaPolynomial(n, terms)


def _reflect_any(poly: MajoranaPolynomial, theta: Mapping[int, int]) -> MajoranaPolynomial:
    out = MajoranaPolynomial(poly.n)
    for mono, c in poly.terms.items():
        mapped, sign = _merge_sign([theta[v] for v in mono])
        out._accumulate(mapped, sign * np.conj(c))
    return out


def reflect(poly: MajoranaPolynomial, theta: Mapping[int, int]) -> MajoranaPolynomial:
    """Antilinear reflection of a one-sided polynomial across theta."""
    _check_theta(poly.n, theta)
    neg = negative_half(poly.n)
    sup = poly.support()
    if not (sup <= neg or sup.isdisjoint(neg)):
        raise InvalidSpecError("polynomial support straddles the reflection")
    return _reflect_any(poly, theta)


def split_by_side(poly: MajoranaPolynomial) -> tuple[MajoranaPolynomial, ...]:
    """(negative-only, straddling, positive-only) parts of a polynomial."""
    neg = negative_half(poly.n)
    parts = [MajoranaPolynomial(poly.n) for _ in range(3)]
    for mono, c in poly.terms.items():
        inside = set(mono) <= neg
        outside = neg.isdisjoint(mono) and mono != ()
        idx = 0 if (inside and mono != ()) else (2 if outside else 1)
        parts[idx]._accumulate(mono, c)
    return tuple(parts)


# ---------------------------------------------------------------------------
# functionals and checks

def _hermitian_matrix(h: MajoranaPolynomial, rep: MajoranaRep) -> np.ndarray:
    mat = h.to_matrix(rep)
    scale = max(1.0, float(np.abs(mat).max(initial=0.0)))
    if np.abs(mat - mat.conj().T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise MalformedMatrixError("Hamiltonian is not Hermitian in the Fock representation")
    return mat


def _gibbs(h: MajoranaPolynomial, beta: float, rep: MajoranaRep) -> np.ndarray:
    w, v = np.linalg.eigh(_hermitian_matrix(h, rep))
    return (v * np.exp(-beta * w)) @ v.conj().T


def rp_functional(
    B: MajoranaPolynomial,
    H: MajoranaPolynomial,
    theta: Mapping[int, int],
    beta: float = 1.0,
) -> float:
    """Tr(B theta(B) e^{-beta H}) for even one-sided B and symmetric H."""
    if B.n != H.n:
        raise InvalidSpecError("B and H must live on the same Majorana count")
    if not B.is_even:
        raise InvalidSpecError("B must be an even element")
    refl_b = reflect(B, theta)  # validates theta and one-sided support
    if not _reflect_any(H, theta).close_to(H, SYMMETRY_TOL):
        raise InvalidSpecError("H is not reflection-symmetric under theta")
    rep = fock_majoranas(B.n)
    val = complex(np.trace(B.to_matrix(rep) @ refl_b.to_matrix(rep) @ _gibbs(H, beta, rep)))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val)):
        raise MalformedMatrixError(f"trace functional came out non-real: {val}")
    return float(val.real)


def fix_cross_signs(
    H: MajoranaPolynomial, theta: Mapping[int, int]
) -> tuple[MajoranaPolynomial, SignAssignment]:
    """Flip generators on the negative half so every cross coupling w in
    w * i c_i c_theta(i) comes out positive.  Loop/vortex data is unchanged
    (the flip is a local Z2 transformation)."""
    _check_theta(H.n, theta)
    neg = sorted(negative_half(H.n))
    flips: dict[int, int] = {}
    for i in neg:
        j = theta[i]  # always > i: the halves are {1..n/2} and the rest
        c = H.terms.get((i, j), 0)
        w = complex(c / 1j)
        if abs(w) == 0:
            raise InvalidSpecError(f"zero cross coupling on ({i},{j}); cannot fix")
        if abs(w.imag) > 1e-12 * abs(w):
            raise InvalidSpecError(f"cross coupling on ({i},{j}) is not of the form i*w")
        flips[i] = -1 if w.real < 0 else 1
    assignment = SignAssignment({i: flips.get(i, 1) for i in range(1, H.n + 1)})
    fixed = MajoranaPolynomial(H.n)
    for mono, c in H.terms.items():
        s = 1
        for v in mono:
            s *= assignment(v)
        fixed._accumulate(mono, s * c)
    return fixed, assignment


def doubled_hamiltonians(
    h_minus: MajoranaPolynomial,
    h_zero: MajoranaPolynomial,
    h_plus: MajoranaPolynomial,
    theta: Mapping[int, int],
) -> tuple[MajoranaPolynomial, MajoranaPolynomial]:
    """Symmetrized pair (H1, H2) = (H- + H0 + theta(H-), theta(H+) + H0 + H+)."""
    _check_theta(h_minus.n, theta)
    h1 = h_minus + h_zero + _reflect_any(h_minus, theta)
    h2 = _reflect_any(h_plus, theta) + h_zero + h_plus
    for tag, h in (("H1", h1), ("H2", h2)):
        if not _reflect_any(h, theta).close_to(h, 1e-12):
            raise InvalidSpecError(f"{tag} is not reflection-symmetric; check H0")
    return h1, h2


@dataclass(frozen=True)
class TraceBoundReport:
    beta: float
    lhs: float          # Tr e^{-beta H}
    rhs: float          # sqrt(Tr e^{-beta H1}) sqrt(Tr e^{-beta H2})
    margin: float       # lhs - rhs; holds when <= 1e-8 * rhs

    @property
    def holds(self) -> bool:
        return self.margin <= 1e-8 * self.rhs


def trace_bound_check(
    H: MajoranaPolynomial,
    H1: MajoranaPolynomial,
    H2: MajoranaPolynomial,
    beta: float = 1.0,
) -> TraceBoundReport:
    rep = fock_majoranas(H.n)
    lhs = float(np.trace(_gibbs(H, beta, rep)).real)
    t1 = float(np.trace(_gibbs(H1, beta, rep)).real)
    t2 = float(np.trace(_gibbs(H2, beta, rep)).real)
    rhs = float(np.sqrt(t1) * np.sqrt(t2))
    return TraceBoundReport(beta, lhs, rhs, lhs - rhs)


@dataclass(frozen=True)
class EnergyInequalityReport:
    e0: float
    e0_1: float
    e0_2: float
    tol: float

    @property
    def gap(self) -> float:
        return self.e0 - (self.e0_1 + self.e0_2) / 2

    @property
    def holds(self) -> bool:
        return self.e0 <= self.tol and self.gap >= -self.tol


def _ground_state_energy(h: MajoranaPolynomial, rep: MajoranaRep) -> float:
    return float(np.linalg.eigvalsh(_hermitian_matrix(h, rep))[0])


def energy_inequality_check(
    H: MajoranaPolynomial,
    H1: MajoranaPolynomial,
    H2: MajoranaPolynomial,
    tol: float = 1e-9,
) -> EnergyInequalityReport:
    """0 >= E0(H) >= (E0(H1) + E0(H2))/2 within tol.  Quadratic H is also
    cross-checked against the antisymmetric-matrix mode solver."""
    rep = fock_majoranas(H.n)
    e0 = _ground_state_energy(H, rep)
    report = EnergyInequalityReport(
        e0, _ground_state_energy(H1, rep), _ground_state_energy(H2, rep), tol
    )
    if H.terms and all(len(m) == 2 for m in H.terms):
        a = np.zeros((H.n, H.n))
        for (i, j), c in H.terms.items():
            w = complex(c / 1j)
            if abs(w.imag) > 1e-12 * max(1.0, abs(w)):
                return report  # not of the i*w*c_i*c_j form; skip the cross-check
            a[i - 1, j - 1] = w.real
            a[j - 1, i - 1] = -w.real
        modes_e0 = ground_energy(mode_spectrum(SkewAdjacency(a)))
        if abs(modes_e0 - e0) > 1e-10 * max(1.0, abs(e0)):
            raise MalformedMatrixError(
                f"quadratic cross-check failed: modes {modes_e0} vs Fock {e0}"
            )
    return report


# ---------------------------------------------------------------------------
# sampling helpers

def even_monomials(indices: Iterable[int], max_degree: int = 4) -> list[tuple[int, ...]]:
    from itertools import combinations

    idx = sorted(indices)
    out: list[tuple[int, ...]] = []
    for deg in range(0, max_degree + 1, 2):
        out.extend(combinations(idx, deg))
    return out


def random_even_element(
    rng: np.random.Generator, n: int, max_degree: int = 4, side: str = "negative"
) -> MajoranaPolynomial:
    """Even polynomial supported on one half, uniform complex coefficients."""
    half = negative_half(n)
    indices = sorted(half) if side == "negative" else sorted(set(range(1, n + 1)) - half)
    terms = {
        mono: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        for mono in even_monomials(indices, max_degree)
    }
    return MajoranaPolynomial(n, terms)
