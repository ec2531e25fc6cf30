"""Closed-form link statistics, objectives, gradients, and stationarity
aggregates.

A transmission from sender j to receiver i succeeds in a slot iff j
transmits, i stays in receive mode, and every other neighbor of i stays
silent, giving the per-slot success probability

    mu_{i,j} = p_j q_j * (1 - p_i q_i) * prod_{k in B_i, k != j} (1 - p_k q_k)

where p are per-node generation probabilities and q per-node transmit
probabilities. Inter-delivery gaps are then geometric with mean 1/mu, so the
long-run average age of the link is 1/mu. Everything here is a pure function
of its inputs; no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .graph import DirectedLink, Topology

# Neighbor products switch to log-space above this degree to dodge underflow
# on very large hubs.
_LOG_SPACE_DEGREE = 64


class InfeasiblePointError(ValueError):
    """A required link has zero success probability (divergent age)."""


class ObjectiveKind(Enum):
    """Aggregation variant: plain sum over directed links, or each receiver's
    incoming links averaged over its degree and then over nodes."""

    TOTAL = "total"
    NEIGHBOR_NORMALIZED = "neighbor-normalized"


@dataclass(frozen=True, eq=False)
class NetworkParams:
    """Per-node generation probabilities ``p`` and transmit probabilities ``q``."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        if p.ndim != 1 or q.ndim != 1 or p.shape != q.shape:
            raise ValueError("p and q must be 1-d vectors of equal length")
        for name, vec in (("p", p), ("q", q)):
            if np.any((vec < 0.0) | (vec > 1.0)) or not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} entries must lie in [0, 1]")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def uniform(cls, n: int, p: float, q: float) -> "NetworkParams":
        return cls(np.full(n, float(p)), np.full(n, float(q)))

    def validate_for(self, t: Topology) -> None:
        if self.n != t.n:
            raise ValueError(f"params length {self.n} does not match n={t.n}")


class LinkStat(NamedTuple):
    mu: float
    aoi: float


@dataclass(frozen=True)
class LinkMetrics:
    """Success probability and average age per directed link."""

    entries: dict[DirectedLink, LinkStat] = field(default_factory=dict)

    def __getitem__(self, link: DirectedLink) -> LinkStat:
        return self.entries[link]


def _product(factors: np.ndarray, use_log: bool) -> float:
    # log-space above the degree threshold; zero factors short-circuit
    if use_log:
        if np.any(factors == 0.0):
            return 0.0
        return float(math.exp(np.sum(np.log(factors))))
    out = 1.0
    for f in factors:
        out *= f
    return out


def link_success_prob(t: Topology, params: NetworkParams, link: DirectedLink) -> float:
    """Per-slot delivery probability of ``link``, by direct substitution."""
    params.validate_for(t)
    link = DirectedLink(*link)
    if not t.has_link(link):
        raise ValueError(f"{link} is not a directed link of the topology")
    i, j = link.receiver, link.sender
    x = params.p * params.q
    others = np.array([1.0 - x[k] for k in t.neighbors(i) if k != j])
    rest = _product(others, use_log=t.degree(i) > _LOG_SPACE_DEGREE)
    return float(x[j] * (1.0 - x[i]) * rest)


def avg_aoi_link(mu: float) -> float:
    """Average age of a link with per-slot success probability ``mu``:
    1/mu, or +inf when the link never delivers."""
    if not (0.0 <= mu <= 1.0):
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    return math.inf if mu == 0.0 else 1.0 / mu


class Evaluator:
    """Precomputed link structure for fast repeated evaluation at varying q.

    Holds index arrays for one (topology, p, objective-kind) triple so that
    objective values, gradients, and stationarity aggregates cost O(links)
    numpy work per call. Used heavily by the iterative solvers.
    """

    def __init__(self, t: Topology, p: np.ndarray, kind: ObjectiveKind):
        self.t = t
        self.kind = kind
        self.p = np.asarray(p, dtype=np.float64)
        if self.p.shape != (t.n,):
            raise ValueError(f"p must have length {t.n}")
        links = t.directed_links()  # sorted by (receiver, sender)
        self.links = links
        self.recv = np.fromiter((l.receiver for l in links), dtype=np.intp,
                                count=len(links))
        self.send = np.fromiter((l.sender for l in links), dtype=np.intp,
                                count=len(links))
        degs = np.array(t.degrees(), dtype=np.intp)
        self.degrees = degs
        self.active = degs > 0
        # segment pointers into the link arrays, one segment per receiver
        indptr = np.zeros(t.n + 1, dtype=np.intp)
        np.cumsum(np.bincount(self.recv, minlength=t.n), out=indptr[1:])
        self._indptr = indptr
        if kind is ObjectiveKind.NEIGHBOR_NORMALIZED:
            w_node = np.zeros(t.n)
            w_node[self.active] = 1.0 / (t.n * degs[self.active])
            self.link_weight = w_node[self.recv]
        else:
            self.link_weight = np.ones(len(links))
        self._use_log = t.max_degree() > _LOG_SPACE_DEGREE

    def mus(self, q: np.ndarray) -> np.ndarray:
        """Success probability per directed link, in link order."""
        x = self.p * np.asarray(q, dtype=np.float64)
        om = 1.0 - x
        om_send = om[self.send]
        zero = om_send == 0.0
        nz = np.where(zero, 1.0, om_send)
        n = self.t.n
        # per-receiver product over neighbor factors, zeros factored out
        prod_nz = np.ones(n)
        zcount = np.zeros(n, dtype=np.intp)
        nonempty = self.degrees > 0
        if self._use_log:
            sums = np.zeros(n)
            np.add.at(sums, self.recv, np.log(nz))
            prod_nz[nonempty] = np.exp(sums[nonempty])
        else:
            starts = self._indptr[:-1][nonempty]
            prod_nz[nonempty] = np.multiply.reduceat(nz, starts)
        np.add.at(zcount, self.recv, zero.astype(np.intp))
        rest_zeros = zcount[self.recv] - zero  # zeros among B_i \ {j}
        rest = np.where(rest_zeros > 0, 0.0,
                        np.where(zero, prod_nz[self.recv], prod_nz[self.recv] / nz))
        return x[self.send] * om[self.recv] * rest

    def value(self, q: np.ndarray) -> float:
        mus = self.mus(q)
        if np.any(mus == 0.0):
            return math.inf
        return float(np.sum(self.link_weight / mus))

    def link_ages(self, q: np.ndarray) -> np.ndarray:
        mus = self.mus(q)
        with np.errstate(divide="ignore"):
            return np.where(mus == 0.0, np.inf, 1.0 / mus)

    def aggregates_all(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Stationarity aggregates (A, B) for every node at once.

        A[l] collects the (weighted) ages of links sent by l; B[l] collects
        the ages of links whose success probability shrinks when l transmits
        more: l's own incoming links plus the other links received by l's
        neighbors. Raises if any link age diverges.
        """
        mus = self.mus(q)
        if np.any(mus == 0.0):
            raise InfeasiblePointError("some link has mu = 0 at this point")
        g = self.link_weight / mus
        n = self.t.n
        recv_sum = np.zeros(n)
        np.add.at(recv_sum, self.recv, g)
        a = np.zeros(n)
        np.add.at(a, self.send, g)
        cross = np.zeros(n)
        np.add.at(cross, self.send, recv_sum[self.recv])
        b = recv_sum + cross - a
        return a, b

    def gradient(self, q: np.ndarray) -> np.ndarray:
        """Objective derivative per node: -A_l/q_l + p_l B_l/(1 - p_l q_l)."""
        q = np.asarray(q, dtype=np.float64)
        a, b = self.aggregates_all(q)
        grad = np.zeros(self.t.n)
        act = self.active
        grad[act] = -a[act] / q[act] + self.p[act] * b[act] / (1.0 - self.p[act] * q[act])
        return grad


def link_metrics(t: Topology, params: NetworkParams) -> LinkMetrics:
    """Success probability and average age for every directed link."""
    params.validate_for(t)
    ev = Evaluator(t, params.p, ObjectiveKind.TOTAL)
    mus = ev.mus(params.q)
    entries = {
        link: LinkStat(mu=float(m), aoi=(math.inf if m == 0.0 else 1.0 / float(m)))
        for link, m in zip(ev.links, mus)
    }
    return LinkMetrics(entries)


def objective(t: Topology, params: NetworkParams,
              kind: ObjectiveKind = ObjectiveKind.TOTAL) -> float:
    """Aggregate average age at the given operating point.

    TOTAL sums 1/mu over all directed links; NEIGHBOR_NORMALIZED averages each
    receiver's incoming ages over its degree and then over all nodes
    (degree-0 nodes contribute 0). Returns +inf if any contributing link has
    mu = 0.
    """
    params.validate_for(t)
    return Evaluator(t, params.p, kind).value(params.q)


def aggregates(t: Topology, params: NetworkParams, ell: int,
               kind: ObjectiveKind = ObjectiveKind.TOTAL) -> tuple[float, float]:
    """Stationarity aggregates (A_l, B_l) for node ``ell``.

    Only links received in the closed neighborhood of ``ell`` enter the two
    sums; raises :class:`InfeasiblePointError` if any of those diverges.
    """
    params.validate_for(t)
    if not (0 <= ell < t.n):
        raise IndexError(f"node {ell} out of range for n={t.n}")
    ev = Evaluator(t, params.p, kind)
    mus = ev.mus(params.q)
    closed = set(t.neighbors(ell)) | {ell}
    referenced = np.fromiter((l.receiver in closed for l in ev.links),
                             dtype=bool, count=len(ev.links))
    if np.any(referenced & (mus == 0.0)):
        raise InfeasiblePointError(
            f"a link referenced by node {ell} has mu = 0")
    if t.degree(ell) == 0:
        return 0.0, 0.0
    if np.any(mus == 0.0):
        # diverging links exist but none is referenced by ell; zero them out
        a, b = _aggregates_masked(ev, mus)
    else:
        a, b = ev.aggregates_all(params.q)
    return float(a[ell]), float(b[ell])


def _aggregates_masked(ev: Evaluator, mus: np.ndarray):
    g = np.where(mus == 0.0, 0.0, ev.link_weight / np.where(mus == 0.0, 1.0, mus))
    n = ev.t.n
    recv_sum = np.zeros(n)
    np.add.at(recv_sum, ev.recv, g)
    a = np.zeros(n)
    np.add.at(a, ev.send, g)
    cross = np.zeros(n)
    np.add.at(cross, ev.send, recv_sum[ev.recv])
    return a, recv_sum + cross - a


def gradient(t: Topology, params: NetworkParams,
             kind: ObjectiveKind = ObjectiveKind.TOTAL) -> np.ndarray:
    """Gradient of the objective with respect to q at an interior point.

    Degree-0 nodes get component 0. Raises :class:`InfeasiblePointError`
    when some link has mu = 0.
    """
    params.validate_for(t)
    return Evaluator(t, params.p, kind).gradient(params.q)
