"""Time-slotted Monte Carlo simulation of the half-duplex broadcast protocol.

Per slot, every node draws whether it generates a fresh update (probability
p_i) and, if it holds one, whether it broadcasts it (probability q_i);
non-transmitted packets are dropped (no buffering). A directed link (i, j)
delivers exactly when j transmits while i and all of i's other neighbors stay
in receive mode. Link ages are sampled at slot ends: a delivery in slot s
resets the age to 1 at the end of s, otherwise it grows by 1. The empirical
mean age over the measured window is an independent check on the closed-form
value 1/mu.

Reproducibility: all randomness flows from ``SimConfig.seed``. Replication r
uses ``numpy.random.PCG64(numpy.random.SeedSequence(entropy=seed,
spawn_key=(r,)))``, and the uniform draw for slot s (1-based), node v is
stream position (s-1)*2n + v for generation and (s-1)*2n + n + v for the
transmit decision: per slot, all generation draws by node index, then all
transmit draws by node index. Results are independent of chunking and of the
kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .analysis import NetworkParams
from .graph import DirectedLink, Topology

_CHUNK_SLOTS = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    slots: int
    seed: int = 0
    warmup: int = 0
    replications: int = 1

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError("slots must be >= 1")
        if not (0 <= self.warmup < self.slots):
            raise ValueError("warmup must satisfy 0 <= warmup < slots")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class SimResult:
    """Empirical per-link statistics over the measured window.

    ``slots_measured`` counts measured slots across all replications;
    ``per_link_deliveries / slots_measured`` estimates each link's success
    probability.
    """

    per_link_aoi: dict[DirectedLink, float]
    per_link_deliveries: dict[DirectedLink, int]
    slots_measured: int
    seed: int
    delivery_slots: dict[DirectedLink, np.ndarray] | None = field(
        default=None, compare=False)


def _replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(rep,))))


def run(t: Topology, params: NetworkParams, cfg: SimConfig,
        backend: str | None = None,
        record_delivery_slots: bool = False) -> SimResult:
    """Simulate the protocol and return per-link empirical average ages.

    Identical (topology, params, config) produce bit-identical results.
    ``record_delivery_slots`` additionally returns each link's delivery slot
    numbers from the measured window (single replication only), for
    distributional diagnostics.
    """
    params.validate_for(t)
    if record_delivery_slots and cfg.replications != 1:
        raise ValueError("delivery-slot recording supports a single replication")
    links = t.directed_links()
    m = len(links)
    recv = np.fromiter((l.receiver for l in links), dtype=np.int32, count=m)
    send = np.fromiter((l.sender for l in links), dtype=np.int32, count=m)
    nbr_ptr = np.zeros(t.n + 1, dtype=np.int32)
    nbr_idx_list: list[int] = []
    for v in range(t.n):
        nbr_idx_list.extend(t.neighbors(v))
        nbr_ptr[v + 1] = len(nbr_idx_list)
    nbr_idx = np.array(nbr_idx_list, dtype=np.int32)

    age_total = np.zeros(m, dtype=np.int64)
    deliv_total = np.zeros(m, dtype=np.int64)
    recorded: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * m
    for rep in range(cfg.replications):
        rng = _replication_rng(cfg.seed, rep)
        last_slot = np.zeros(m, dtype=np.int64)
        s0 = 0
        while s0 < cfg.slots:
            chunk = min(_CHUNK_SLOTS, cfg.slots - s0)
            u = rng.random((chunk, 2, t.n))
            succ = _kernels.sim_chunk(
                u, params.p, params.q, recv, send, nbr_ptr, nbr_idx,
                s0, cfg.warmup, last_slot, age_total, deliv_total,
                collect=record_delivery_slots, backend=backend)
            if record_delivery_slots:
                slots = s0 + 1 + np.arange(chunk, dtype=np.int64)
                keep = slots > cfg.warmup
                for e in range(m):
                    hits = slots[succ[:, e] & keep]
                    recorded[e] = np.concatenate([recorded[e], hits])
            s0 += chunk

    measured = (cfg.slots - cfg.warmup) * cfg.replications
    per_link_aoi = {link: float(age_total[e] / measured)
                    for e, link in enumerate(links)}
    per_link_deliveries = {link: int(deliv_total[e]) for e, link in enumerate(links)}
    slots_rec = {link: recorded[e] for e, link in enumerate(links)} \
        if record_delivery_slots else None
    return SimResult(per_link_aoi=per_link_aoi,
                     per_link_deliveries=per_link_deliveries,
                     slots_measured=measured, seed=cfg.seed,
                     delivery_slots=slots_rec)


def estimate_mu(result: SimResult, link: DirectedLink) -> float:
    """Empirical per-slot success probability of ``link``."""
    link = DirectedLink(*link)
    if link not in result.per_link_deliveries:
        raise KeyError(f"{link} not present in the simulation result")
    return result.per_link_deliveries[link] / result.slots_measured
