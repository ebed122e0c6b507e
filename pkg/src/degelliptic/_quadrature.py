"""Batched adaptive Simpson quadrature.

One worklist is shared across many intervals so the integrand is called on
a single flat array per refinement sweep; that keeps vectorized integrands
(root finders, in practice) cheap even for thousands of panels.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericError

MAX_PANELS = 1 << 20


def integrate_intervals(
    f,
    edges,
    panel_tol: float = 1e-10,
    max_panels: int = MAX_PANELS,
) -> np.ndarray:
    """Integral of ``f`` over each consecutive pair of ``edges``.

    Each initial interval is one panel with absolute error budget
    ``panel_tol``; budgets halve on subdivision.  A panel is accepted by the
    Richardson test |S2 - S1| <= 15 tol and contributes the corrected value
    S2 + (S2 - S1)/15.  Every panel is split at least once so a lucky
    agreement on the coarsest level cannot slip through.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ConfigError("need at least two interval edges")
    if np.any(np.diff(edges) <= 0):
        raise ConfigError("interval edges must be strictly increasing")

    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    n_int = lo.size
    owner = np.arange(n_int)
    mid = 0.5 * (lo + hi)
    vals = f(np.concatenate([lo, mid, hi]))
    vals = np.asarray(vals, dtype=float)
    flo, fmid, fhi = vals[:n_int], vals[n_int : 2 * n_int], vals[2 * n_int :]
    s = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    tol = np.full(n_int, panel_tol)

    out = np.zeros(n_int)
    total_panels = n_int
    depth = 0
    while lo.size:
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        m = lo.size
        fnew = np.asarray(f(np.concatenate([lm, rm])), dtype=float)
        if not np.all(np.isfinite(fnew)):
            bad = int(np.argmax(~np.isfinite(fnew)))
            raise NumericError(
                "integrand returned a non-finite value",
                {"point": float(np.concatenate([lm, rm])[bad])},
            )
        flm, frm = fnew[:m], fnew[m:]
        s_left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        s_right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        s2 = s_left + s_right
        err = s2 - s
        accept = np.abs(err) <= 15.0 * tol
        if depth == 0:
            accept[:] = False  # force one refinement
        np.add.at(out, owner[accept], s2[accept] + err[accept] / 15.0)

        rej = ~accept
        total_panels += 2 * int(rej.sum())
        if total_panels > max_panels:
            worst = int(np.argmax(np.abs(err[rej])))
            raise NumericError(
                "adaptive quadrature exceeded the panel budget",
                {
                    "panels": total_panels,
                    "worst_panel_error": float(np.abs(err[rej])[worst]),
                    "interval": int(owner[rej][worst]),
                    "depth": depth,
                },
            )
        lo = np.concatenate([lo[rej], mid[rej]])
        hi = np.concatenate([mid[rej], hi[rej]])
        owner = np.concatenate([owner[rej], owner[rej]])
        flo = np.concatenate([flo[rej], fmid[rej]])
        fhi = np.concatenate([fmid[rej], fhi[rej]])
        fmid = np.concatenate([flm[rej], frm[rej]])
        mid = 0.5 * (lo + hi)
        s = np.concatenate([s_left[rej], s_right[rej]])
        tol = np.concatenate([0.5 * tol[rej], 0.5 * tol[rej]])
        depth += 1
    return out


def integrate(f, a: float, b: float, tol: float = 1e-10) -> float:
    """Single-interval convenience wrapper."""
    if not b > a:
        raise ConfigError("integration interval must have positive length")
    return float(integrate_intervals(f, np.array([a, b]), panel_tol=tol)[0])
