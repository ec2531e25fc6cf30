# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: the per-slot protocol loop and the brute-force grid
scan. Semantics are identical to ``aoinet._core_numpy`` (asserted by tests);
this module only exists for speed.
"""

from libc.stdlib cimport free, malloc


def sim_chunk(const double[:, :, ::1] u, const double[::1] p, const double[::1] q,
              const int[::1] recv, const int[::1] send,
              const int[::1] nbr_ptr, const int[::1] nbr_idx,
              long long s0, long long warmup,
              long long[::1] last_slot, long long[::1] age_sum,
              long long[::1] deliveries):
    """Advance the slotted protocol over one chunk of pre-drawn uniforms.

    Mirrors ``_core_numpy.sim_chunk`` (without the ``collect`` mode): per
    slot, build the transmitter set, count transmitters around each receiver,
    and update per-link last-delivery slots, age sums, and delivery counts in
    place. Slots <= warmup are excluded from the sums.
    """
    cdef Py_ssize_t chunk = u.shape[0]
    cdef Py_ssize_t n = u.shape[2]
    cdef Py_ssize_t m = recv.shape[0]
    cdef Py_ssize_t si, v, e, t
    cdef long long s
    cdef int i, j, c
    cdef char *tx = <char *> malloc(n * sizeof(char))
    cdef int *cnt = <int *> malloc(n * sizeof(int))
    if tx == NULL or cnt == NULL:
        free(tx)
        free(cnt)
        raise MemoryError()
    try:
        with nogil:
            for si in range(chunk):
                s = s0 + si + 1
                for v in range(n):
                    tx[v] = 1 if (u[si, 0, v] < p[v] and u[si, 1, v] < q[v]) else 0
                for v in range(n):
                    c = 0
                    for t in range(nbr_ptr[v], nbr_ptr[v + 1]):
                        c += tx[nbr_idx[t]]
                    cnt[v] = c
                for e in range(m):
                    i = recv[e]
                    j = send[e]
                    if tx[j] and tx[i] == 0 and cnt[i] == 1:
                        last_slot[e] = s
                        if s > warmup:
                            deliveries[e] += 1
                    if s > warmup:
                        age_sum[e] += s - last_slot[e] + 1
    finally:
        free(tx)
        free(cnt)


def grid_scan(const double[:, ::1] u_tab, const double[:, ::1] w_tab,
              const int[::1] axis_len,
              const int[::1] closed_ptr, const int[::1] closed_idx,
              const int[::1] nbr_ptr, const int[::1] nbr_idx,
              const double[::1] wrecv):
    """Scan the full grid; return (flat index, value) of the objective
    minimum, ties to the smallest row-major flat index.

    Mirrors ``_core_numpy.grid_scan`` including accumulation order: per point
    the objective is sum over receivers of w_r * S_r / P_r, with factors taken
    in ascending axis order. The innermost axis is peeled so the per-receiver
    partial products and sums are reused across its values.
    """
    cdef Py_ssize_t na = axis_len.shape[0]
    cdef Py_ssize_t nrecv = wrecv.shape[0]
    if na < 2:
        raise ValueError("grid scan needs at least two axes (one edge)")
    cdef Py_ssize_t last = na - 1
    cdef int llast = axis_len[last]
    cdef Py_ssize_t r, ax, k, v
    cdef int t
    cdef double best_f = float("inf")
    cdef long long best_flat = -1
    cdef long long base = 0
    cdef double p0, s0, f, pr, sm, ul, wl
    cdef int *idx = <int *> malloc(na * sizeof(int))
    cdef double *p_part = <double *> malloc(nrecv * sizeof(double))
    cdef double *s_part = <double *> malloc(nrecv * sizeof(double))
    cdef char *has_last_p = <char *> malloc(nrecv * sizeof(char))
    cdef char *has_last_s = <char *> malloc(nrecv * sizeof(char))
    if (idx == NULL or p_part == NULL or s_part == NULL
            or has_last_p == NULL or has_last_s == NULL):
        free(idx); free(p_part); free(s_part); free(has_last_p); free(has_last_s)
        raise MemoryError()
    try:
        for r in range(nrecv):
            has_last_p[r] = 0
            for t in range(closed_ptr[r], closed_ptr[r + 1]):
                if closed_idx[t] == <int> last:
                    has_last_p[r] = 1
            has_last_s[r] = 0
            for t in range(nbr_ptr[r], nbr_ptr[r + 1]):
                if nbr_idx[t] == <int> last:
                    has_last_s[r] = 1
        for ax in range(na):
            idx[ax] = 0
        with nogil:
            while True:
                # per-receiver partials over all axes except the innermost
                for r in range(nrecv):
                    p0 = 1.0
                    for t in range(closed_ptr[r], closed_ptr[r + 1]):
                        ax = closed_idx[t]
                        if ax != last:
                            p0 *= u_tab[ax, idx[ax]]
                    s0 = 0.0
                    for t in range(nbr_ptr[r], nbr_ptr[r + 1]):
                        ax = nbr_idx[t]
                        if ax != last:
                            s0 += w_tab[ax, idx[ax]]
                    p_part[r] = p0
                    s_part[r] = s0
                for v in range(llast):
                    ul = u_tab[last, v]
                    wl = w_tab[last, v]
                    f = 0.0
                    for r in range(nrecv):
                        pr = p_part[r]
                        if has_last_p[r]:
                            pr = pr * ul
                        sm = s_part[r]
                        if has_last_s[r]:
                            sm = sm + wl
                        f += wrecv[r] * (sm / pr)
                    if f < best_f:
                        best_f = f
                        best_flat = base + v
                base += llast
                # odometer over the outer axes
                k = na - 2
                while k >= 0:
                    idx[k] += 1
                    if idx[k] < axis_len[k]:
                        break
                    idx[k] = 0
                    k -= 1
                if k < 0:
                    break
    finally:
        free(idx)
        free(p_part)
        free(s_part)
        free(has_last_p)
        free(has_last_s)
    return int(best_flat), best_f
