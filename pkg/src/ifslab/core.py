"""Family representation, instantiation, fixed points and classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NotSimilarity, SingularSystem, UnsupportedDimension

SIM_TOL = 1e-9
QL_TOL = 1e-9
SEMI_TOL = 1e-12


def _as_matrix(L, d=None) -> np.ndarray:
    M = np.array(L, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"linear part must be square, got shape {M.shape}")
    if d is not None and M.shape[0] != d:
        raise ValueError(f"linear part has dimension {M.shape[0]}, expected {d}")
    M.setflags(write=False)
    return M


def _as_vector(v, d) -> np.ndarray:
    x = np.array(v, dtype=float).reshape(-1)
    if x.shape[0] != d:
        raise ValueError(f"vector has length {x.shape[0]}, expected {d}")
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> L x + a."""

    L: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        L = _as_matrix(self.L)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "a", _as_vector(self.a, L.shape[0]))

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.L.T + self.a

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other."""
        return AffineMap(self.L @ other.L, self.L @ other.a + self.a)

    def __eq__(self, other):
        if not isinstance(other, AffineMap):
            return NotImplemented
        return np.array_equal(self.L, other.L) and np.array_equal(self.a, other.a)

    def __hash__(self):
        return hash((self.L.tobytes(), self.a.tobytes()))

    def __repr__(self):
        return f"AffineMap(L={self.L.tolist()}, a={self.a.tolist()})"


@dataclass(frozen=True, eq=False)
class FamilyMember:
    """One member t*(L x + a) + q of a one-parameter family."""

    f: AffineMap
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _as_vector(self.q, self.f.dim))

    @property
    def L(self):
        return self.f.L

    @property
    def a(self):
        return self.f.a

    @property
    def dim(self):
        return self.f.dim

    def at(self, t: float) -> AffineMap:
        return AffineMap(t * self.f.L, t * self.f.a + self.q)

    def __eq__(self, other):
        if not isinstance(other, FamilyMember):
            return NotImplemented
        return self.f == other.f and np.array_equal(self.q, other.q)

    def __hash__(self):
        return hash((self.f, self.q.tobytes()))


class OneParamFamily:
    """F_t = { t (L_i x + a_i) + q_i }."""

    def __init__(self, members: Sequence[FamilyMember], name: str = ""):
        members = tuple(members)
        if len(members) < 2:
            raise ValueError("a family needs at least two members")
        d = members[0].dim
        for m in members:
            if m.dim != d:
                raise ValueError("members have inconsistent dimensions")
        self.members = members
        self.d = d
        self.name = name

    @classmethod
    def from_arrays(cls, Ls, as_, qs, name=""):
        Ls = [np.atleast_2d(np.asarray(L, dtype=float)) for L in Ls]
        d = Ls[0].shape[0]
        mem = [FamilyMember(AffineMap(L, np.reshape(a, d)), np.reshape(q, d))
               for L, a, q in zip(Ls, as_, qs)]
        return cls(mem, name)

    @property
    def N(self) -> int:
        return len(self.members)

    def linear_parts(self) -> np.ndarray:
        return np.stack([m.L for m in self.members])

    def translations(self) -> np.ndarray:
        return np.stack([m.a for m in self.members])

    def offsets(self) -> np.ndarray:
        return np.stack([m.q for m in self.members])

    def permuted(self, order) -> "OneParamFamily":
        return OneParamFamily([self.members[i] for i in order], self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dim": self.d,
            "members": [{"L": m.L.tolist(), "a": m.a.tolist(), "q": m.q.tolist()}
                        for m in self.members],
        }

    def __eq__(self, other):
        if not isinstance(other, OneParamFamily):
            return NotImplemented
        return (self.name == other.name and self.d == other.d
                and self.members == other.members)

    def __hash__(self):
        return hash((self.name, self.members))

    def __repr__(self):
        return f"OneParamFamily(name={self.name!r}, d={self.d}, N={self.N})"


def instantiate(family: OneParamFamily, t: float) -> list:
    """Maps x -> t L_i x + (t a_i + q_i) of F_t."""
    if not t >= 0:
        raise ValueError("t must be non-negative")
    return [m.at(t) for m in family.members]


def fixed_point(member: FamilyMember, t: float, tol: float = 1e-12) -> np.ndarray:
    """Unique fixed point of t f(x) + q; solves (I - tL) x = t a + q."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return np.array(member.q)
    d = member.dim
    A = np.eye(d) - t * member.L
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    if smin <= tol * (1.0 + np.abs(A).max()):
        raise SingularSystem(f"I - tL is singular at t={t!r}")
    return np.linalg.solve(A, t * member.a + member.q)


def similarity_ratio(L: np.ndarray, tol: float = SIM_TOL) -> Optional[float]:
    """Ratio r if L^T L = r^2 I entrywise within tol, else None."""
    L = np.asarray(L, dtype=float)
    d = L.shape[0]
    G = L.T @ L
    r2 = abs(np.linalg.det(G)) ** (1.0 / d)
    if np.all(np.abs(G - r2 * np.eye(d)) <= tol * max(1.0, r2)):
        return float(np.sqrt(r2))
    return None


@dataclass(frozen=True)
class Classification:
    is_similarity: bool
    is_linear: bool
    is_quasi_linear: bool
    is_semi_linear: bool
    is_bounded: bool
    is_degenerate: str
    scaling_ratios: Optional[tuple] = None
    degenerate_witness: Optional[tuple] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "similarity": self.is_similarity,
            "linear": self.is_linear,
            "quasi_linear": self.is_quasi_linear,
            "semi_linear": self.is_semi_linear,
            "bounded": self.is_bounded,
            "degenerate": self.is_degenerate,
            "scaling_ratios": None if self.scaling_ratios is None else list(self.scaling_ratios),
        }


def is_semi_linear(family: OneParamFamily, tol: float = SEMI_TOL) -> bool:
    for m in family.members:
        r = m.L @ m.q + m.a
        if np.abs(r).max() > tol * (1.0 + np.abs(m.q).max()):
            return False
    return True


def default_samples(family: OneParamFamily, t0_lo: Optional[float] = None) -> np.ndarray:
    """2d+3 distinct values inside (0, t0)."""
    if t0_lo is None:
        from .jsr import t0_threshold
        t0_lo = t0_threshold(family).lo
    k = 2 * family.d + 3
    # irregular spacing keeps samples away from special rational points
    u = (np.arange(1, k + 1) + 0.3183098861837907) / (k + 1.5)
    return t0_lo * u


def classify(family: OneParamFamily, t_samples=None) -> Classification:
    """Linear / quasi-linear / semi-linear / similarity / bounded flags."""
    ratios = [similarity_ratio(m.L) for m in family.members]
    is_sim = all(r is not None for r in ratios)
    semi = is_semi_linear(family)
    qs = family.offsets()
    same_q = bool(np.all(np.abs(qs - qs[0]) <= SEMI_TOL * (1.0 + np.abs(qs).max())))
    linear = semi and same_q

    if t_samples is None:
        t_samples = default_samples(family)
    quasi = True
    for t in np.asarray(t_samples, dtype=float):
        try:
            fps = np.stack([fixed_point(m, float(t)) for m in family.members])
        except SingularSystem:
            continue
        scale = 1.0 + np.abs(fps).max()
        if np.abs(fps - fps[0]).max() > QL_TOL * scale:
            quasi = False
            break
    # linear families are quasi-linear by definition; guard against noisy samples
    quasi = quasi or linear

    bounded = False
    if is_sim and semi:
        r = np.array(ratios)
        rmax = r.max()
        bounded = int(np.sum(r >= rmax * (1 - 1e-12))) == 1

    deg, wit = detect_degenerate(family) if family.d <= 3 else ("unknown", None)
    return Classification(
        is_similarity=is_sim,
        is_linear=linear,
        is_quasi_linear=quasi,
        is_semi_linear=semi,
        is_bounded=bounded,
        is_degenerate=deg,
        scaling_ratios=tuple(float(x) for x in ratios) if is_sim else None,
        degenerate_witness=wit,
    )


def _orth_basis(vectors: np.ndarray, d: int, rtol: float):
    """Orthonormal basis of span(vectors) plus the ambiguity flag."""
    if len(vectors) == 0:
        return np.zeros((0, d)), False
    V = np.asarray(vectors, dtype=float)
    scale = max(1.0, np.abs(V).max())
    U, s, Vt = np.linalg.svd(V, full_matrices=False)
    rank = int(np.sum(s > rtol * scale))
    ambiguous = bool(np.any((s > 1e-13 * scale) & (s <= rtol * scale)))
    return Vt[:rank], ambiguous


def detect_degenerate(family: OneParamFamily, rtol: float = 1e-9):
    """Smallest affine subspace containing every q_i and invariant under all F_t.

    W = q_1 + V where V is the closure of span{q_i - q_1, f_i(q_1)} under every
    L_i. Any invariant W must contain it, so the answer is exact up to the rank
    tolerance. Returns ("yes", (point, basis)), ("no", None) or ("unknown", None).
    """
    d = family.d
    if d > 3:
        raise UnsupportedDimension("degeneracy search supports d <= 3")
    if d == 1:
        return "no", None
    q1 = family.members[0].q
    gens = [m.q - q1 for m in family.members[1:]]
    gens += [m.L @ q1 + m.a for m in family.members]
    basis, amb = _orth_basis(np.array(gens), d, rtol)
    for _ in range(d):
        if basis.shape[0] == 0 or basis.shape[0] == d:
            break
        images = [basis] + [(m.L @ basis.T).T for m in family.members]
        nb, a2 = _orth_basis(np.vstack(images), d, rtol)
        amb = amb or a2
        if nb.shape[0] == basis.shape[0]:
            break
        basis = nb
    if basis.shape[0] == d:
        return ("unknown", None) if amb else ("no", None)
    if amb:
        return "unknown", None
    return "yes", (np.array(q1), basis)


def scaling_data(family: OneParamFamily):
    """Similarity ratios of the L_i and the index of the largest."""
    ratios = []
    for m in family.members:
        r = similarity_ratio(m.L)
        if r is None:
            raise NotSimilarity("family contains a non-similarity linear part")
        ratios.append(r)
    return ratios, int(np.argmax(ratios))
