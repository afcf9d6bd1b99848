"""Joint spectral radius bounds and the existence threshold t0."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import OneParamFamily, similarity_ratio
from .errors import BudgetExceeded, DepthTooSmall

DEFAULT_DEPTH = 10
MAX_DEPTH = 20
MAX_LEVEL_WORDS = 4_000_000
TIE_RTOL = 1e-12


def _cubic_max_abs_root(c2, c1, c0):
    """max |root| of x^3 + c2 x^2 + c1 x + c0, vectorized, closed form."""
    c2 = np.asarray(c2, dtype=float)
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    shift = -c2 / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    out = np.empty(np.broadcast(p, q).shape)
    # three real roots: trigonometric form
    m3 = disc <= 0
    if np.any(m3):
        pp = np.minimum(p[m3], 0.0)
        r = np.sqrt(-pp / 3.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            arg = np.where(r > 0, -q[m3] / (2.0 * r ** 3), 0.0)
        phi = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
        ks = np.arange(3)[:, None] * (2.0 * np.pi / 3.0)
        roots = 2.0 * r * np.cos(phi - ks) + shift[m3]
        out[m3] = np.abs(roots).max(axis=0)
    m1 = ~m3
    if np.any(m1):
        sd = np.sqrt(disc[m1])
        u = np.cbrt(-q[m1] / 2.0 + sd)
        v = np.cbrt(-q[m1] / 2.0 - sd)
        real = u + v + shift[m1]
        re_c = -(u + v) / 2.0 + shift[m1]
        im_c = (u - v) * np.sqrt(3.0) / 2.0
        out[m1] = np.maximum(np.abs(real), np.hypot(re_c, im_c))
    return out


def spectral_radius_batch(P: np.ndarray) -> np.ndarray:
    """Spectral radii of a stack of d x d matrices (closed form for d <= 3)."""
    P = np.asarray(P, dtype=float)
    d = P.shape[-1]
    if d == 1:
        return np.abs(P[..., 0, 0])
    if d == 2:
        tr = P[..., 0, 0] + P[..., 1, 1]
        det = P[..., 0, 0] * P[..., 1, 1] - P[..., 0, 1] * P[..., 1, 0]
        disc = tr * tr / 4.0 - det
        sq = np.sqrt(np.abs(disc))
        real = np.abs(tr) / 2.0 + sq
        cplx = np.sqrt(np.abs(det))
        return np.where(disc >= 0, real, cplx)
    if d == 3:
        tr = np.trace(P, axis1=-2, axis2=-1)
        det = np.linalg.det(P)
        m = (P[..., 0, 0] * P[..., 1, 1] - P[..., 0, 1] * P[..., 1, 0]
             + P[..., 0, 0] * P[..., 2, 2] - P[..., 0, 2] * P[..., 2, 0]
             + P[..., 1, 1] * P[..., 2, 2] - P[..., 1, 2] * P[..., 2, 1])
        return _cubic_max_abs_root(-tr, m, -det)
    return np.abs(np.linalg.eigvals(P)).max(axis=-1)


def spectral_norm_batch(P: np.ndarray) -> np.ndarray:
    """Largest singular values of a stack (closed form for d <= 3)."""
    P = np.asarray(P, dtype=float)
    d = P.shape[-1]
    if d == 1:
        return np.abs(P[..., 0, 0])
    if d == 2:
        a, b, c, e = P[..., 0, 0], P[..., 0, 1], P[..., 1, 0], P[..., 1, 1]
        s = a * a + b * b + c * c + e * e
        det = a * e - b * c
        disc = np.sqrt(np.maximum(s * s - 4.0 * det * det, 0.0))
        return np.sqrt((s + disc) / 2.0)
    if d == 3:
        G = np.swapaxes(P, -1, -2) @ P
        tr = np.trace(G, axis1=-2, axis2=-1)
        det = np.linalg.det(G)
        m = (G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
             + G[..., 0, 0] * G[..., 2, 2] - G[..., 0, 2] * G[..., 2, 0]
             + G[..., 1, 1] * G[..., 2, 2] - G[..., 1, 2] * G[..., 2, 1])
        return np.sqrt(np.maximum(_cubic_max_abs_root(-tr, m, -det), 0.0))
    return np.linalg.norm(P, ord=2, axis=(-2, -1))


def spectral_radius(L) -> float:
    """max |eigenvalue| of L."""
    return float(spectral_radius_batch(np.atleast_2d(np.asarray(L, dtype=float))[None])[0])


def spectral_norm(L) -> float:
    return float(spectral_norm_batch(np.atleast_2d(np.asarray(L, dtype=float))[None])[0])


@dataclass(frozen=True)
class JsrBounds:
    lower: float
    upper: float
    depth: int
    witness_word: tuple
    upper_depth: int = 1

    def to_dict(self):
        return {"lower": self.lower, "upper": self.upper, "depth": self.depth,
                "witness_word": list(self.witness_word)}


def jsr_bounds(linear_parts, max_depth: int = DEFAULT_DEPTH, max_words: int = MAX_LEVEL_WORDS) -> JsrBounds:
    """Anytime bracket of the joint spectral radius.

    lower = max over words |s| <= max_depth of rho(L_s)^(1/|s|)
    upper = min over l <= max_depth of (max_{|s|=l} ||L_s||_2)^(1/l)

    Words are 0-based index tuples and L_s = L_{s1} L_{s2} ... L_{sk}. A word is
    pruned once no extension of length up to MAX_DEPTH can beat the current
    lower bound, so the enumeration at depth k is a prefix of the one at k+1.
    """
    if max_depth < 1:
        raise DepthTooSmall("max_depth must be at least 1")
    if max_depth > MAX_DEPTH:
        raise ValueError(f"max_depth is capped at {MAX_DEPTH}")
    mats = np.asarray(linear_parts, dtype=float)
    if mats.ndim == 2:
        mats = mats[None]
    if mats.ndim == 1:
        mats = mats.reshape(-1, 1, 1)
    N, d = mats.shape[0], mats.shape[1]

    norms1 = spectral_norm_batch(mats)
    # nb[m]: upper bound on the largest norm of any length-m product
    nb = [1.0, float(norms1.max())]

    def nb_at(m):
        while len(nb) <= m:
            k = len(nb)
            nb.append(min(nb[j] * nb[k - j] for j in range(1, k)))
        return nb[m]

    prods = mats.copy()
    words = np.arange(N, dtype=np.int64)[:, None]
    lower = 0.0
    witness = None
    upper = np.inf
    upper_depth = 1
    for k in range(1, max_depth + 1):
        if k > 1:
            n = prods.shape[0]
            if n * N > max_words:
                raise BudgetExceeded(f"{n * N} words at depth {k} exceed the budget")
            prods = (prods[:, None, :, :] @ mats[None, :, :, :]).reshape(n * N, d, d)
            words = np.concatenate([np.repeat(words, N, axis=0),
                                    np.tile(np.arange(N, dtype=np.int64), n)[:, None]], axis=1)
        if prods.shape[0] == 0:
            cand_upper = lower
        else:
            rho = spectral_radius_batch(prods) ** (1.0 / k)
            best = float(rho.max())
            # words at one level are generated in lexicographic order
            if witness is None or best > lower * (1 + TIE_RTOL):
                lower = max(lower, best)
                witness = tuple(int(x) for x in words[int(np.argmax(rho >= best * (1 - TIE_RTOL)))])
            elif best >= lower * (1 - TIE_RTOL):
                lower = max(lower, best)
                w = tuple(int(x) for x in words[int(np.argmax(rho >= lower * (1 - TIE_RTOL)))])
                witness = min(witness, w)
            norms = spectral_norm_batch(prods)
            cand_upper = max(float(norms.max()), lower ** k) ** (1.0 / k)
        if cand_upper < upper:
            upper = cand_upper
            upper_depth = k
        level_bound = max(cand_upper ** k, lower ** k)
        if len(nb) > k:
            nb[k] = min(nb[k], level_bound)
        else:
            nb_at(k - 1)
            nb.append(min(nb[1] * nb[k - 1], level_bound))
        if k == max_depth or prods.shape[0] == 0:
            continue
        # prune words that cannot beat the current lower bound at any length
        keep = np.zeros(prods.shape[0], dtype=bool)
        for m in range(0, MAX_DEPTH - k + 1):
            keep |= norms * nb_at(m) > lower ** (k + m) * (1 + 1e-12)
            if keep.all():
                break
        prods = prods[keep]
        words = words[keep]
    upper = max(upper, lower)
    return JsrBounds(lower=float(lower), upper=float(upper), depth=max_depth,
                     witness_word=witness, upper_depth=upper_depth)


@dataclass(frozen=True)
class T0Result:
    lo: float
    hi: float
    exact: bool
    witness_word: Optional[tuple] = None
    note: str = "at-threshold: see transition module"

    @property
    def value(self) -> float:
        return self.lo if self.exact else 0.5 * (self.lo + self.hi)

    def to_dict(self):
        d = {"t0_lo": self.lo, "t0_hi": self.hi, "exact": self.exact, "note": self.note}
        if self.exact:
            d["t0"] = self.lo
        if self.witness_word is not None:
            d["witness_word"] = list(self.witness_word)
        return d


def t0_threshold(family: OneParamFamily, max_depth: int = DEFAULT_DEPTH) -> T0Result:
    """t0 = 1/rho(F): exact for similarity families, a bracket otherwise."""
    ratios = [similarity_ratio(m.L) for m in family.members]
    if all(r is not None for r in ratios):
        t0 = 1.0 / max(ratios)
        return T0Result(lo=t0, hi=t0, exact=True)
    b = jsr_bounds(family.linear_parts(), max_depth)
    hi = np.inf if b.lower == 0 else 1.0 / b.lower
    return T0Result(lo=1.0 / b.upper, hi=hi, exact=False, witness_word=b.witness_word)
