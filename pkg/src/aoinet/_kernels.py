"""Backend selection for the hot kernels.

The compiled extension (``aoinet._core``) is preferred when it imported
cleanly; otherwise the numpy fallback takes over. Both produce bit-identical
results, so the choice only affects speed. Callers may force a backend by
name ("compiled" / "numpy"), which the benchmark and the equivalence tests
rely on.
"""

from __future__ import annotations

from . import _core_numpy

try:
    from . import _core  # type: ignore[attr-defined]
except ImportError:  # extension not built on this install
    _core = None

HAVE_COMPILED = _core is not None
DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "numpy"


def resolve(backend: str | None) -> str:
    name = backend or DEFAULT_BACKEND
    if name not in ("compiled", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel requested but the extension is "
                           "not available; rebuild or use backend='numpy'")
    return name


def sim_chunk(u, p, q, recv, send, nbr_ptr, nbr_idx, s0, warmup,
              last_slot, age_sum, deliveries, collect=False, backend=None):
    name = resolve(backend)
    if collect or name == "numpy":
        # delivery-slot collection only exists in the numpy path
        return _core_numpy.sim_chunk(u, p, q, recv, send, nbr_ptr, nbr_idx,
                                     s0, warmup, last_slot, age_sum,
                                     deliveries, collect=collect)
    _core.sim_chunk(u, p, q, recv, send, nbr_ptr, nbr_idx, s0, warmup,
                    last_slot, age_sum, deliveries)
    return None


def grid_scan(u_tab, w_tab, axis_len, closed_ptr, closed_idx,
              nbr_ptr, nbr_idx, wrecv, backend=None):
    name = resolve(backend)
    if name == "numpy":
        return _core_numpy.grid_scan(u_tab, w_tab, axis_len, closed_ptr,
                                     closed_idx, nbr_ptr, nbr_idx, wrecv)
    return _core.grid_scan(u_tab, w_tab, axis_len, closed_ptr, closed_idx,
                           nbr_ptr, nbr_idx, wrecv)
