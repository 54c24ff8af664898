"""Point-to-polyline distances and Hausdorff distances for sampled curves."""
from __future__ import annotations

import numpy as np

_CHUNK = 2048


def polyline_distance(points, poly) -> np.ndarray:
    """Distance from each point to the polyline through ``poly`` (complex arrays)."""
    q = np.atleast_1d(np.asarray(points, dtype=complex))
    p = np.asarray(poly, dtype=complex)
    if p.size == 0:
        return np.full(q.shape, np.inf)
    if p.size == 1:
        return np.abs(q - p[0])
    a = p[:-1]
    d = p[1:] - a
    dd = np.abs(d) ** 2
    out = np.empty(q.shape)
    for start in range(0, q.size, _CHUNK):
        qq = q[start : start + _CHUNK, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            s = ((qq - a) * d.conj()).real / dd
        s = np.where(dd > 0, np.clip(s, 0.0, 1.0), 0.0)
        seg = np.min(np.abs(qq - (a + s * d)), axis=1)
        # projections can round away from an endpoint; vertex distances are exact
        out[start : start + _CHUNK] = np.minimum(seg, np.min(np.abs(qq - p), axis=1))
    return out


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two polylines given by their vertices."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size == 0 or b.size == 0:
        return float("inf")
    return float(max(polyline_distance(a, b).max(), polyline_distance(b, a).max()))


def clip_to_disk(z, center: complex, radius: float) -> np.ndarray:
    """Vertices inside the closed disk (order preserved)."""
    z = np.asarray(z, dtype=complex)
    return z[np.abs(z - center) <= radius]


def head_in_disk(z, center: complex, radius: float) -> np.ndarray:
    """Initial part of a polyline up to where it first leaves the disk.

    The exit point on the circle is interpolated, so two curves cut this way
    end on the same circle.
    """
    z = np.asarray(z, dtype=complex)
    inside = np.abs(z - center) <= radius
    if not inside[0]:
        return z[:0]
    out = np.flatnonzero(~inside)
    if out.size == 0:
        return z.copy()
    j = out[0]
    a, b = z[j - 1] - center, z[j] - center
    # Solve |a + s (b - a)| = radius for s in (0, 1].
    d = b - a
    qa = abs(d) ** 2
    qb = 2 * (a * d.conjugate()).real
    qc = abs(a) ** 2 - radius**2
    s = (-qb + np.sqrt(max(qb * qb - 4 * qa * qc, 0.0))) / (2 * qa)
    return np.concatenate([z[:j], [center + a + s * d]])
