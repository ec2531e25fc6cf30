"""Shared test helpers: seeded random topologies and a deliberately naive
reference simulator used as an independent oracle for the kernels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aoinet.graph import Topology


def random_connected_topology(rng: np.random.Generator, n: int,
                              extra_edge_prob: float = 0.3) -> Topology:
    """Random connected graph: a random spanning tree plus a sprinkle of
    extra edges. Test-local; the library deliberately ships no random
    generators."""
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        u = int(order[k])
        v = int(order[rng.integers(0, k)])
        edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_edge_prob:
                edges.add((u, v))
    return Topology(n, tuple(sorted(edges)))


@dataclass
class NaiveSimOutput:
    per_link_aoi: dict
    per_link_deliveries: dict
    slots_measured: int
    # full per-slot instrumentation for invariant checks
    generated: np.ndarray = field(repr=False, default=None)  # (slots, n) bool
    transmitted: np.ndarray = field(repr=False, default=None)  # (slots, n) bool
    delivered: dict = field(repr=False, default=None)  # link -> (slots,) bool


def naive_simulate(t: Topology, p: np.ndarray, q: np.ndarray, slots: int,
                   seed: int, warmup: int = 0,
                   replications: int = 1) -> NaiveSimOutput:
    """Slot-by-slot reference implementation of the protocol.

    Consumes the RNG stream exactly as documented by the simulator (per slot:
    generation draws by node, then transmit draws by node; replication r
    seeded from SeedSequence(seed, spawn_key=(r,))), so its integer outputs
    must match the production kernels bit for bit.
    """
    n = t.n
    links = t.directed_links()
    age_sum = {l: 0 for l in links}
    deliveries = {l: 0 for l in links}
    gen_all = np.zeros((replications * slots, n), dtype=bool)
    tx_all = np.zeros((replications * slots, n), dtype=bool)
    deliv_all = {l: np.zeros(replications * slots, dtype=bool) for l in links}
    for rep in range(replications):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(rep,))))
        age = {l: 1 for l in links}
        for s in range(1, slots + 1):
            u = rng.random((2, n))
            gen = u[0] < p
            tx = gen & (u[1] < q)
            row = rep * slots + (s - 1)
            gen_all[row] = gen
            tx_all[row] = tx
            for link in links:
                i, j = link
                ok = bool(tx[j]) and not bool(tx[i]) and not any(
                    tx[k] for k in t.neighbors(i) if k != j)
                if ok:
                    age[link] = 1
                else:
                    age[link] += 1
                deliv_all[link][row] = ok
                if s > warmup:
                    age_sum[link] += age[link]
                    if ok:
                        deliveries[link] += 1
    measured = (slots - warmup) * replications
    return NaiveSimOutput(
        per_link_aoi={l: age_sum[l] / measured for l in links},
        per_link_deliveries=deliveries,
        slots_measured=measured,
        generated=gen_all, transmitted=tx_all, delivered=deliv_all)
