"""Finite Lorentzian pre-length spaces.

A :class:`DiscreteSpace` stores the strict causal relation together with the
time separation on related pairs as one sorted CSR structure.  Pairs with
positive tau that are not causally related are kept as well so that
validation can report them.  Dense ``n x n`` views are materialized for
``n <= dense_limit``; above that ``tau``/``causal`` are scipy sparse arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import sparse

from . import _kernels as K
from .errors import CyclicOrder, NotTimelikeRelated

DENSE_LIMIT = 4096
AXIOM_TOL = 1e-9
TIE_TOL = 1e-12


class Provenance(str, Enum):
    INHERITED = "inherited"
    INTRINSIC = "intrinsic"
    EXPLICIT = "explicit"


class TauMode(str, Enum):
    WEIGHTED = "weighted"
    LINK_COUNT = "link-count"


@dataclass(frozen=True)
class Chain:
    """Causal chain of vertex indices with its summed tau-length.

    ``gap`` is ``tau(first, last) - tau_length``; ``timelike_steps`` records
    whether every consecutive pair is timelike related.
    """

    vertices: tuple[int, ...]
    tau_length: float
    gap: float = 0.0
    timelike_steps: bool = True

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def first(self) -> int:
        return self.vertices[0]

    @property
    def last(self) -> int:
        return self.vertices[-1]


def _sorted_csr(n, rows, cols, *columns):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    key = np.lexsort((cols, rows))
    rows, cols = rows[key], cols[key]
    if len(rows) > 1:
        dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
        if dup.any():
            raise ValueError("duplicate pair in relation")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return (indptr, cols) + tuple(np.asarray(c)[key] for c in columns)


class DiscreteSpace:
    """Immutable finite Lorentzian pre-length space candidate."""

    def __init__(
        self,
        n: int,
        indptr,
        indices,
        tau,
        causal,
        *,
        coords=None,
        ambient: str | None = None,
        provenance: Provenance | str = Provenance.EXPLICIT,
        meta: dict | None = None,
        dense_limit: int = DENSE_LIMIT,
    ):
        self._n = int(n)
        self._indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self._indices = np.ascontiguousarray(indices, dtype=np.int64)
        self._tau = np.ascontiguousarray(tau, dtype=np.float64)
        self._causal = np.ascontiguousarray(causal, dtype=np.bool_)
        for arr in (self._indptr, self._indices, self._tau, self._causal):
            arr.setflags(write=False)
        if coords is not None:
            coords = np.array(coords, dtype=np.float64).reshape(self._n, 2)
            coords.setflags(write=False)
        self._coords = coords
        self._ambient = ambient
        self._provenance = Provenance(provenance)
        self._meta = dict(meta or {})
        self._dense_limit = int(dense_limit)

    # construction helpers
    @classmethod
    def from_pairs(cls, n, rows, cols, tau, causal=None, **kw) -> "DiscreteSpace":
        tau = np.asarray(tau, dtype=np.float64)
        if causal is None:
            causal = tau > 0
        indptr, indices, tau, causal = _sorted_csr(n, rows, cols, tau, np.asarray(causal, bool))
        return cls(n, indptr, indices, tau, causal, **kw)

    @classmethod
    def from_dense(cls, tau, causal=None, **kw) -> "DiscreteSpace":
        tau = np.asarray(tau, dtype=np.float64)
        n = tau.shape[0]
        if causal is None:
            causal = tau > 0
        causal = np.asarray(causal, dtype=bool)
        mask = causal | (tau != 0)
        rows, cols = np.nonzero(mask)
        return cls.from_pairs(n, rows, cols, tau[rows, cols], causal[rows, cols], **kw)

    @classmethod
    def from_links(cls, n, links, tau_entries=None, **kw) -> "DiscreteSpace":
        """Causal relation = transitive closure of ``links``.

        ``tau_entries`` is an iterable of ``(i, j, value)``; pairs not listed
        get tau 0.
        """
        links = np.asarray(links, dtype=np.int64).reshape(-1, 2)
        lp, li = _sorted_csr(n, links[:, 0], links[:, 1])
        order, ok = K.topological_order(n, lp, li)
        if not ok:
            raise CyclicOrder("links contain a directed cycle")
        bits = K.closure_bits(n, order, lp, li)
        cp, ci = K.bits_to_csr(bits, n)
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(cp))
        pairs = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(rows, ci))}
        tau = np.zeros(len(ci))
        causal = np.ones(len(ci), dtype=bool)
        extra_r, extra_c, extra_t = [], [], []
        for i, j, v in tau_entries or ():
            k = pairs.get((int(i), int(j)))
            if k is None:
                extra_r.append(int(i))
                extra_c.append(int(j))
                extra_t.append(float(v))
            else:
                tau[k] = float(v)
        rows = np.concatenate([rows, np.asarray(extra_r, dtype=np.int64)])
        cols = np.concatenate([ci, np.asarray(extra_c, dtype=np.int64)])
        tau = np.concatenate([tau, np.asarray(extra_t, dtype=float)])
        causal = np.concatenate([causal, np.zeros(len(extra_r), dtype=bool)])
        return cls.from_pairs(n, rows, cols, tau, causal, **kw)

    def replace(self, **changes) -> "DiscreteSpace":
        kw = dict(
            coords=self._coords,
            ambient=self._ambient,
            provenance=self._provenance,
            meta=self._meta,
            dense_limit=self._dense_limit,
        )
        tau = changes.pop("tau_data", self._tau)
        kw.update(changes)
        return DiscreteSpace(self._n, self._indptr, self._indices, tau, self._causal, **kw)

    # plain data
    @property
    def n(self) -> int:
        return self._n

    def __len__(self) -> int:
        return self._n

    @property
    def coords(self):
        return self._coords

    @property
    def ambient(self) -> str | None:
        return self._ambient

    @property
    def provenance(self) -> Provenance:
        return self._provenance

    @property
    def meta(self) -> dict:
        return dict(self._meta)

    @property
    def dense(self) -> bool:
        return self._n <= self._dense_limit

    @property
    def csr(self):
        """(indptr, indices, tau, causal) of the stored relation."""
        return self._indptr, self._indices, self._tau, self._causal

    @property
    def n_pairs(self) -> int:
        return int(self._causal.sum())

    @cached_property
    def _rows(self) -> np.ndarray:
        return np.repeat(np.arange(self._n, dtype=np.int64), np.diff(self._indptr))

    def pairs(self):
        """(rows, cols, tau, causal) of every stored pair."""
        return self._rows, self._indices, self._tau, self._causal

    @cached_property
    def _dense_tau(self) -> np.ndarray:
        out = np.zeros((self._n, self._n))
        out[self._rows, self._indices] = self._tau
        out.setflags(write=False)
        return out

    @cached_property
    def _dense_causal(self) -> np.ndarray:
        out = np.zeros((self._n, self._n), dtype=bool)
        out[self._rows, self._indices] = self._causal
        out.setflags(write=False)
        return out

    @property
    def tau(self):
        if self.dense:
            return self._dense_tau
        return sparse.csr_array((self._tau, self._indices, self._indptr), shape=(self._n, self._n))

    @property
    def causal(self):
        if self.dense:
            return self._dense_causal
        return sparse.csr_array((self._causal, self._indices, self._indptr), shape=(self._n, self._n))

    def tau_matrix(self) -> np.ndarray:
        """Dense tau regardless of storage mode."""
        return self._dense_tau

    def _pos(self, i: int, j: int) -> int:
        lo, hi = self._indptr[i], self._indptr[i + 1]
        k = lo + int(np.searchsorted(self._indices[lo:hi], j))
        return k if k < hi and self._indices[k] == j else -1

    def tau_at(self, i: int, j: int) -> float:
        if self.dense:
            return float(self._dense_tau[i, j])
        k = self._pos(i, j)
        return float(self._tau[k]) if k >= 0 else 0.0

    def leq(self, i: int, j: int) -> bool:
        """Reflexive causal relation."""
        if i == j:
            return True
        if self.dense:
            return bool(self._dense_causal[i, j])
        k = self._pos(i, j)
        return bool(k >= 0 and self._causal[k])

    def ll(self, i: int, j: int) -> bool:
        return self.tau_at(i, j) > 0

    def tau_row(self, i: int) -> np.ndarray:
        if self.dense:
            return self._dense_tau[i]
        out = np.zeros(self._n)
        lo, hi = self._indptr[i], self._indptr[i + 1]
        out[self._indices[lo:hi]] = self._tau[lo:hi]
        return out

    def future(self, i: int) -> np.ndarray:
        lo, hi = self._indptr[i], self._indptr[i + 1]
        return self._indices[lo:hi][self._causal[lo:hi]]

    def timelike_future(self, i: int) -> np.ndarray:
        lo, hi = self._indptr[i], self._indptr[i + 1]
        return self._indices[lo:hi][self._tau[lo:hi] > 0]

    @cached_property
    def _past_csr(self):
        t = self.causal_csr_matrix().T.tocsr()
        t.sort_indices()
        return t.indptr.astype(np.int64), t.indices.astype(np.int64)

    def causal_csr_matrix(self):
        keep = self._causal
        rows = self._rows[keep]
        return sparse.csr_array(
            (np.ones(int(keep.sum()), dtype=bool), (rows, self._indices[keep])),
            shape=(self._n, self._n),
        )

    def past(self, i: int) -> np.ndarray:
        ip, ii = self._past_csr
        return ii[ip[i] : ip[i + 1]]

    def interval(self, x: int, y: int, timelike: bool = True) -> np.ndarray:
        """Points strictly between x and y: I(x, y) (or J(x, y) minus endpoints)."""
        if timelike:
            fut = self.timelike_future(x)
            keep = [z for z in fut if z != y and self.tau_at(int(z), y) > 0]
        else:
            fut = self.future(x)
            keep = [z for z in fut if z != y and self.leq(int(z), y)]
        return np.asarray(keep, dtype=np.int64)

    # order structure
    @cached_property
    def _causal_csr(self):
        keep = self._causal & (self._rows != self._indices)
        rows = self._rows[keep]
        indptr = np.zeros(self._n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return np.cumsum(indptr), self._indices[keep]

    @cached_property
    def order(self) -> np.ndarray:
        """Topological order of the causal relation (Kahn, lowest index first)."""
        ip, ii = self._causal_csr
        order, ok = K.topological_order(self._n, ip, ii)
        if not ok:
            raise CyclicOrder("causal relation contains a cycle")
        return order

    @cached_property
    def position(self) -> np.ndarray:
        pos = np.empty(self._n, dtype=np.int64)
        pos[self.order] = np.arange(self._n)
        return pos

    @cached_property
    def _link_csr(self):
        ip, ii = self._causal_csr
        bits = K.csr_to_bits(self._n, ip, ii)
        lp, li = K.bits_to_csr(K.reduce_bits(bits, self._n), self._n)
        rows = np.repeat(np.arange(self._n, dtype=np.int64), np.diff(lp))
        if self.dense:
            weights = np.ascontiguousarray(self._dense_tau[rows, li])
        else:
            weights = np.array([self.tau_at(int(r), int(c)) for r, c in zip(rows, li)], dtype=float)
        return lp, li, weights

    @property
    def links(self) -> np.ndarray:
        lp, li, _ = self._link_csr
        rows = np.repeat(np.arange(self._n, dtype=np.int64), np.diff(lp))
        return np.stack([rows, li], axis=1)

    @property
    def link_csr(self):
        """(indptr, indices, tau-weights) of the transitively reduced relation."""
        return self._link_csr

    def __repr__(self) -> str:
        return (
            f"DiscreteSpace(n={self._n}, pairs={self.n_pairs}, ambient={self._ambient!r}, "
            f"provenance={self._provenance.value})"
        )


# -- axioms ------------------------------------------------------------------

_CHECK_NAMES = (
    "tau-diagonal-zero",
    "tau-nonnegative",
    "timelike-within-causal",
    "causal-antisymmetric",
    "causal-transitive",
    "timelike-transitive",
    "reverse-triangle",
)


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    passed: bool
    violations: int
    witness: tuple[int, ...] | None


@dataclass(frozen=True)
class AxiomReport:
    """Outcome of :func:`validate_axioms`; violations are content, not errors."""

    passed: bool
    tol: float
    checks: tuple[AxiomCheck, ...]
    chains_scanned: int
    worst_reverse_triangle_margin: float
    worst_reverse_triangle_witness: tuple[int, ...] | None
    vacuous: tuple[str, ...] = field(
        default=(
            "causal-reflexive: implicit (the strict relation is stored)",
            "tau-lower-semicontinuous: vacuous on finite sets",
            "background-metric: chart Euclidean distance, reporting only",
        )
    )

    def check(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[AxiomCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "chains_scanned": self.chains_scanned,
            "worst_reverse_triangle_margin": self.worst_reverse_triangle_margin,
            "worst_reverse_triangle_witness": (
                list(self.worst_reverse_triangle_witness) if self.worst_reverse_triangle_witness else None
            ),
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "violations": c.violations,
                    "witness": list(c.witness) if c.witness else None,
                }
                for c in self.checks
            ],
            "vacuous": list(self.vacuous),
        }


def validate_axioms(sp: DiscreteSpace, tol: float = AXIOM_TOL) -> AxiomReport:
    """Exhaustive pair and 3-chain scan of the pre-length space axioms."""
    ip, ii, tau, causal = sp.csr
    counts, wit, worst, worst_wit, chains = K.axiom_scan(sp.n, ip, ii, tau, causal, float(tol))
    checks = []
    for k, name in enumerate(_CHECK_NAMES):
        w = tuple(int(v) for v in wit[k] if v >= 0) or None
        checks.append(AxiomCheck(name, bool(counts[k] == 0), int(counts[k]), w))
    has_worst = worst_wit[0] >= 0
    return AxiomReport(
        passed=all(c.passed for c in checks),
        tol=float(tol),
        checks=tuple(checks),
        chains_scanned=int(chains),
        worst_reverse_triangle_margin=float(worst) if has_worst else 0.0,
        worst_reverse_triangle_witness=tuple(int(v) for v in worst_wit) if has_worst else None,
    )


# -- derived quantities --------------------------------------------------------


def tau_intrinsic(sp: DiscreteSpace, mode: TauMode | str = TauMode.WEIGHTED):
    """Longest-chain time separation over the link graph.

    ``weighted`` sums tau over links; ``link-count`` counts links.  Returns a
    matrix in the same storage mode as ``sp.tau``.
    """
    mode = TauMode(mode)
    order, pos = sp.order, sp.position
    lp, li, w = sp.link_csr
    if mode is TauMode.LINK_COUNT:
        w = np.ones_like(w)
    if sp.dense:
        return K.longest_all(sp.n, order, pos, lp, li, np.ascontiguousarray(w))
    rows, cols, vals = [], [], []
    for s in range(sp.n):
        d = K.longest_from(sp.n, order, pos, lp, li, w, s)
        d[s] = -np.inf
        hit = np.nonzero(d > 0)[0]
        rows.append(np.full(len(hit), s))
        cols.append(hit)
        vals.append(d[hit])
    return sparse.csr_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(sp.n, sp.n)
    )


def with_intrinsic_tau(sp: DiscreteSpace, mode: TauMode | str = TauMode.WEIGHTED) -> DiscreteSpace:
    """Copy of ``sp`` whose tau is replaced by :func:`tau_intrinsic`."""
    mode = TauMode(mode)
    m = tau_intrinsic(sp, mode)
    rows, cols, _, causal = sp.pairs()
    if sparse.issparse(m):
        vals = np.asarray(m[rows, cols]).ravel()
    else:
        vals = m[rows, cols]
    vals = np.where(causal, vals, 0.0)
    meta = sp.meta
    meta["tau_mode"] = f"intrinsic-{'weighted' if mode is TauMode.WEIGHTED else 'link'}"
    return sp.replace(tau_data=vals, provenance=Provenance.INTRINSIC, meta=meta)


def _best_into(sp: DiscreteSpace, y: int) -> np.ndarray:
    lp, li, w = sp.link_csr
    return K.longest_to(sp.n, sp.order, sp.position, lp, li, w, y)


def geodesic_chain(sp: DiscreteSpace, x: int, y: int) -> Chain:
    """Maximal-weight link chain from x to y, lexicographically smallest on ties."""
    x, y = int(x), int(y)
    tau_xy = sp.tau_at(x, y)
    if not tau_xy > 0:
        raise NotTimelikeRelated(f"{x} is not in the timelike past of {y}")
    lp, li, w = sp.link_csr
    best = _best_into(sp, y)
    if best[x] == -np.inf:
        raise NotTimelikeRelated(f"no causal chain from {x} to {y}")
    verts = [x]
    timelike = True
    v = x
    while v != y:
        slack = TIE_TOL * max(1.0, abs(best[v]))
        nxt = -1
        for e in range(lp[v], lp[v + 1]):
            u = int(li[e])
            if best[u] != -np.inf and best[u] + w[e] >= best[v] - slack:
                nxt = u
                timelike = timelike and bool(w[e] > 0)
                break
        verts.append(nxt)
        v = nxt
    length = float(best[x])
    return Chain(tuple(verts), length, tau_xy - length if math.isfinite(tau_xy) else math.inf, timelike)


def maximizer_count(sp: DiscreteSpace, x: int, y: int, rel_tol: float = TIE_TOL) -> int:
    """Number of link chains from x to y within ``rel_tol`` of the longest."""
    lp, li, w = sp.link_csr
    best = _best_into(sp, int(y))
    counts = K.maximizer_counts(sp.n, sp.order, sp.position, lp, li, w, best, int(y), float(rel_tol))
    return int(counts[int(x)])


def finite_diameter(sp: DiscreteSpace) -> float:
    _, _, tau, _ = sp.csr
    finite = tau[np.isfinite(tau)]
    return float(finite.max()) if finite.size else 0.0


def chain_from_vertices(sp: DiscreteSpace, vertices) -> Chain:
    vs = tuple(int(v) for v in vertices)
    steps = [sp.tau_at(a, b) for a, b in zip(vs, vs[1:])]
    length = float(sum(steps))
    tau_xy = sp.tau_at(vs[0], vs[-1]) if len(vs) > 1 else 0.0
    return Chain(vs, length, tau_xy - length, all(s > 0 for s in steps))


def subspace(sp: DiscreteSpace, indices) -> DiscreteSpace:
    """Restriction of ``sp`` to ``indices`` (kept in the given order)."""
    idx = np.asarray(indices, dtype=np.int64)
    remap = np.full(sp.n, -1, dtype=np.int64)
    remap[idx] = np.arange(len(idx))
    rows, cols, tau, causal = sp.pairs()
    keep = (remap[rows] >= 0) & (remap[cols] >= 0)
    meta = {k: v for k, v in sp.meta.items() if k not in ("triangles", "pair", "subdivision", "labels")}
    meta["parent_indices"] = idx.tolist()
    return DiscreteSpace.from_pairs(
        len(idx),
        remap[rows[keep]],
        remap[cols[keep]],
        tau[keep],
        causal[keep],
        coords=None if sp.coords is None else sp.coords[idx],
        ambient=sp.ambient,
        provenance=sp.provenance,
        meta=meta,
    )
