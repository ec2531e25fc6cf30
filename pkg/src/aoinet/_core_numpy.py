"""Pure-numpy implementations of the hot kernels.

Semantics (including accumulation order, tie-breaking, and every integer
update) match ``aoinet._core`` exactly; the test suite asserts bit-identical
results between the two backends. Used automatically when the compiled
extension is unavailable.
"""

from __future__ import annotations

import numpy as np


def sim_chunk(u, p, q, recv, send, nbr_ptr, nbr_idx, s0, warmup,
              last_slot, age_sum, deliveries, collect=False):
    """Advance the slotted protocol over one chunk of pre-drawn uniforms.

    ``u`` has shape (chunk, 2, n): per slot, generation draws for all nodes
    then transmit draws for all nodes. A link delivers when its sender
    transmits while the receiver and the receiver's other neighbors all stay
    in receive mode. Ages are sampled at slot ends (a delivery in slot s makes
    the age 1 at the end of s); slots <= warmup are excluded from the sums.
    State arrays (``last_slot``, ``age_sum``, ``deliveries``) are updated in
    place. Returns the per-slot delivery matrix when ``collect`` is true.
    """
    chunk, _, n = u.shape
    tx = (u[:, 0, :] < p) & (u[:, 1, :] < q)
    # transmitters among each node's neighborhood, per slot
    counts = tx.astype(np.float64) @ _adjacency_from_csr(n, nbr_ptr, nbr_idx)
    slots = s0 + 1 + np.arange(chunk, dtype=np.int64)
    measured = slots > warmup
    succ = np.empty((chunk, len(recv)), dtype=bool) if collect else None
    for e in range(len(recv)):
        i, j = recv[e], send[e]
        hit = tx[:, j] & ~tx[:, i] & (counts[:, i] == 1.0)
        if collect:
            succ[:, e] = hit
        hit_slots = np.where(hit, slots, 0)
        last = np.maximum.accumulate(np.maximum(hit_slots, last_slot[e]))
        age_sum[e] += int(np.sum((slots - last + 1)[measured]))
        deliveries[e] += int(np.count_nonzero(hit & measured))
        last_slot[e] = last[-1]
    return succ


def _adjacency_from_csr(n, nbr_ptr, nbr_idx):
    adj = np.zeros((n, n))
    for v in range(n):
        adj[nbr_idx[nbr_ptr[v]:nbr_ptr[v + 1]], v] = 1.0
    return adj


def grid_scan(u_tab, w_tab, axis_len, closed_ptr, closed_idx,
              nbr_ptr, nbr_idx, wrecv):
    """Scan the full grid and return (flat index, value) of the objective
    minimum.

    The flat index is row-major over the axes; ties resolve to the smallest
    flat index. Per grid point the objective is assembled receiver by
    receiver as w_r * S_r / P_r with P_r the product of (1 - p q) over the
    receiver's closed neighborhood and S_r the sum of (1 - p q)/(p q) over
    its senders, both accumulated in ascending axis order.
    """
    na = len(axis_len)
    lens = [int(l) for l in axis_len]
    nrecv = len(wrecv)
    if na == 1:
        raise ValueError("grid scan needs at least two axes (one edge)")
    a_ax, b_ax = na - 2, na - 1
    la, lb = lens[a_ax], lens[b_ax]
    ua = u_tab[a_ax, :la][:, None]
    ub = u_tab[b_ax, :lb][None, :]
    wa = w_tab[a_ax, :la][:, None]
    wb = w_tab[b_ax, :lb][None, :]

    closed = [list(closed_idx[closed_ptr[r]:closed_ptr[r + 1]]) for r in range(nrecv)]
    nbrs = [list(nbr_idx[nbr_ptr[r]:nbr_ptr[r + 1]]) for r in range(nrecv)]

    best_f = np.inf
    best_flat = -1
    outer_lens = lens[:-2]
    block = la * lb
    for combo_id, combo in enumerate(np.ndindex(*outer_lens) if outer_lens else [()]):
        f = np.zeros((la, lb))
        for r in range(nrecv):
            p_sc = 1.0
            has_a = has_b = False
            for ax in closed[r]:
                if ax == a_ax:
                    has_a = True
                elif ax == b_ax:
                    has_b = True
                else:
                    p_sc *= u_tab[ax, combo[ax]]
            s_sc = 0.0
            add_a = add_b = False
            for ax in nbrs[r]:
                if ax == a_ax:
                    add_a = True
                elif ax == b_ax:
                    add_b = True
                else:
                    s_sc += w_tab[ax, combo[ax]]
            s = np.full((la, lb), s_sc)
            if add_a:
                s = s + wa
            if add_b:
                s = s + wb
            pr = np.full((la, lb), p_sc)
            if has_a:
                pr = pr * ua
            if has_b:
                pr = pr * ub
            f += wrecv[r] * (s / pr)
        local = int(np.argmin(f))
        f_local = f.flat[local]
        if f_local < best_f:
            best_f = float(f_local)
            best_flat = combo_id * block + local
    return best_flat, best_f
