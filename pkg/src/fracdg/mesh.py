"""Triangulation loading, connectivity, geometric factors, and segment tracing.

Meshes arrive as the two-file ASCII node/ele format.  Tracing walks the
axis-aligned segment from a point to the domain boundary and reports every
crossed triangle with its crossing interval; the fractional stiffness
assembly consumes those interval lists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from ._assembly_cy import walk_trace as _walk_trace_c
except ImportError:
    _walk_trace_c = None

_GEOM_TOL_FACTOR = 1.0e-12   # of the larger domain extent
_AREA_TOL = 1.0e-14          # of bbox scale squared
_COVER_TOL_FACTOR = 1.0e-10  # trace coverage, of the traced extent


class MeshError(ValueError):
    """Malformed mesh input or geometry that violates mesh invariants."""


class TraceError(RuntimeError):
    """Segment tracing failed to cover the segment (degenerate/non-conforming mesh)."""


@dataclass
class TraceResult:
    """Triangles crossed by an axis-aligned segment, with crossing intervals.

    entries are sorted by ascending interval; ``elements[i]`` crosses
    ``intervals[i] = (lo, hi)`` measured along the traced axis.  ``host`` is
    the element containing the query point; its interval terminates at the
    point itself.
    """
    elements: np.ndarray    # (M,) int
    intervals: np.ndarray   # (M, 2) float
    host: int
    axis: str
    side: str

    @property
    def total_length(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))


class Mesh:
    """Immutable conforming triangulation with connectivity and affine factors."""

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be (V, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be (K, 3)")
        if len(self.triangles) < 1:
            raise MeshError("mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise MeshError("triangle references vertex index out of range")

        self.bbox = (self.vertices[:, 0].min(), self.vertices[:, 0].max(),
                     self.vertices[:, 1].min(), self.vertices[:, 1].max())
        self.geom_tol = _GEOM_TOL_FACTOR * max(self.bbox[1] - self.bbox[0],
                                               self.bbox[3] - self.bbox[2])

        self._fix_orientation()
        self._build_geometry()
        self._build_connectivity()
        # per-triangle coordinate tables for the tracing hot path
        self.tri_x = np.ascontiguousarray(self.vertices[self.triangles, 0])
        self.tri_y = np.ascontiguousarray(self.vertices[self.triangles, 1])
        self._tx = self.tri_x.tolist()
        self._ty = self.tri_y.tolist()
        self._e2e = self.elem_to_elem.tolist()

    # -- construction ------------------------------------------------------

    def _fix_orientation(self):
        v = self.vertices
        t = self.triangles
        d1 = v[t[:, 1]] - v[t[:, 0]]
        d2 = v[t[:, 2]] - v[t[:, 0]]
        signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        flip = signed < 0
        if np.any(flip):
            t[flip] = t[flip][:, [0, 2, 1]]

    def _build_geometry(self):
        v = self.vertices
        t = self.triangles
        x1, x2, x3 = (v[t[:, i], 0] for i in range(3))
        y1, y2, y3 = (v[t[:, i], 1] for i in range(3))
        xr = (x2 - x1) / 2.0
        xs = (x3 - x1) / 2.0
        yr = (y2 - y1) / 2.0
        ys = (y3 - y1) / 2.0
        self.jacobian = xr * ys - xs * yr
        scale = max(self.bbox[1] - self.bbox[0], self.bbox[3] - self.bbox[2])
        if np.any(np.abs(self.jacobian) < _AREA_TOL * scale * scale):
            bad = int(np.argmin(np.abs(self.jacobian)))
            raise MeshError(f"zero-area triangle (element {bad})")
        self.rx = ys / self.jacobian
        self.ry = -xs / self.jacobian
        self.sx = -yr / self.jacobian
        self.sy = xr / self.jacobian
        # physical -> reference affine: r = rmap . (1, x, y), s = smap . (1, x, y)
        self.rmap = np.column_stack([-1.0 - self.rx * x1 - self.ry * y1, self.rx, self.ry])
        self.smap = np.column_stack([-1.0 - self.sx * x1 - self.sy * y1, self.sx, self.sy])

        e1 = np.hypot(x2 - x1, y2 - y1)
        e2 = np.hypot(x3 - x2, y3 - y2)
        e3 = np.hypot(x1 - x3, y1 - y3)
        self.h_per_elem = np.maximum(np.maximum(e1, e2), e3)
        self.face_jacobian = np.column_stack([e1, e2, e3]) / 2.0

        # outward unit normals of the CCW-ordered faces
        normals = np.empty((len(t), 3, 2))
        for f, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
            dx = v[t[:, b], 0] - v[t[:, a], 0]
            dy = v[t[:, b], 1] - v[t[:, a], 1]
            ln = np.hypot(dx, dy)
            normals[:, f, 0] = dy / ln
            normals[:, f, 1] = -dx / ln
        self.normals = normals

    def _build_connectivity(self):
        t = self.triangles
        K = len(t)
        edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for k in range(K):
            for f, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
                key = (min(t[k, a], t[k, b]), max(t[k, a], t[k, b]))
                edges.setdefault(key, []).append((k, f))
        self.elem_to_elem = np.tile(np.arange(K)[:, None], (1, 3))
        self.elem_to_face = np.tile(np.arange(3)[None, :], (K, 1))
        for key, owners in edges.items():
            if len(owners) > 2:
                raise MeshError(f"non-conforming mesh: edge {key} shared by {len(owners)} triangles")
            if len(owners) == 2:
                (k1, f1), (k2, f2) = owners
                self.elem_to_elem[k1, f1] = k2
                self.elem_to_face[k1, f1] = f2
                self.elem_to_elem[k2, f2] = k1
                self.elem_to_face[k2, f2] = f1
        self.boundary_faces = self.elem_to_elem == np.arange(K)[:, None]

    # -- queries -----------------------------------------------------------

    @property
    def num_elements(self) -> int:
        return len(self.triangles)

    @property
    def h_max(self) -> float:
        return float(self.h_per_elem.max())

    @property
    def h_min(self) -> float:
        return float(self.h_per_elem.min())

    def physical_nodes(self, ref) -> tuple[np.ndarray, np.ndarray]:
        """Map reference nodes to all elements; two (K, Np) arrays."""
        return self.map_points(ref.nodes)

    def map_points(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map reference points (P, 2) into every element; two (K, P) arrays."""
        r, s = pts[:, 0], pts[:, 1]
        v = self.vertices
        t = self.triangles
        lam = np.stack([-(r + s) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0])
        x = sum(np.outer(v[t[:, i], 0], lam[i]) for i in range(3))
        y = sum(np.outer(v[t[:, i], 1], lam[i]) for i in range(3))
        return x, y

    def to_reference(self, k, x, y):
        """Physical (x, y) to element k's reference coordinates."""
        r = self.rmap[k, 0] + self.rmap[k, 1] * x + self.rmap[k, 2] * y
        s = self.smap[k, 0] + self.smap[k, 1] * x + self.smap[k, 2] * y
        return r, s

    def locate(self, x: float, y: float) -> int:
        """Element containing (x, y); raises MeshError if outside the mesh."""
        r = self.rmap[:, 0] + self.rmap[:, 1] * x + self.rmap[:, 2] * y
        s = self.smap[:, 0] + self.smap[:, 1] * x + self.smap[:, 2] * y
        lam_min = np.minimum(np.minimum(-(r + s) / 2.0, (1.0 + r) / 2.0), (1.0 + s) / 2.0)
        k = int(np.argmax(lam_min))
        if lam_min[k] < -1e-9:
            raise MeshError(f"point ({x}, {y}) lies outside the mesh")
        return k


# -- parsing ---------------------------------------------------------------

def _data_lines(text: str):
    for line in text.splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield stripped


def load_mesh(node_text: str, ele_text: str) -> Mesh:
    """Build a Mesh from the contents of a .node and a .ele file."""
    lines = _data_lines(node_text)
    try:
        header = next(lines).split()
        nv = int(header[0])
        if int(header[1]) != 2:
            raise MeshError("node file is not 2-dimensional")
        verts = np.empty((nv, 2))
        seen = 0
        for line in lines:
            parts = line.split()
            idx = int(parts[0]) - 1
            if not (0 <= idx < nv):
                raise MeshError(f"vertex index {idx + 1} out of range 1..{nv}")
            verts[idx] = (float(parts[1]), float(parts[2]))
            seen += 1
        if seen != nv:
            raise MeshError(f"node file promises {nv} vertices, found {seen}")
    except (StopIteration, IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"malformed node file: {exc}") from exc

    lines = _data_lines(ele_text)
    try:
        header = next(lines).split()
        nt = int(header[0])
        if int(header[1]) != 3:
            raise MeshError("ele file does not contain triangles")
        tris = np.empty((nt, 3), dtype=np.int64)
        seen = 0
        for line in lines:
            parts = line.split()
            idx = int(parts[0]) - 1
            if not (0 <= idx < nt):
                raise MeshError(f"element index {idx + 1} out of range 1..{nt}")
            vs = [int(p) - 1 for p in parts[1:4]]
            for vi in vs:
                if not (0 <= vi < nv):
                    raise MeshError(f"element {idx + 1} references vertex {vi + 1} out of range 1..{nv}")
            tris[idx] = vs
            seen += 1
        if seen != nt:
            raise MeshError(f"ele file promises {nt} elements, found {seen}")
    except (StopIteration, IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"malformed ele file: {exc}") from exc

    return Mesh(verts, tris)


def load_mesh_files(prefix: str) -> Mesh:
    """Load <prefix>.node and <prefix>.ele."""
    with open(prefix + ".node") as fh:
        node_text = fh.read()
    with open(prefix + ".ele") as fh:
        ele_text = fh.read()
    return load_mesh(node_text, ele_text)


# -- tracing ---------------------------------------------------------------

def _walk_trace(mesh: Mesh, host: int, tcoord: float, fcoord: float,
                ax: int, toward_min: bool):
    """Fast face-adjacency walk; returns (elements, breakpoints) or None on a
    degenerate configuration (then the exhaustive path takes over).

    breakpoints run from the query point outward: b[0] = tcoord, and element
    elements[i] covers [b[i+1], b[i]] (toward_min) or [b[i], b[i+1]] mirrored.
    """
    tol = mesh.geom_tol
    tx, ty = (mesh._tx, mesh._ty) if ax == 0 else (mesh._ty, mesh._tx)
    e2e = mesh._e2e
    lo_bound = mesh.bbox[0] if ax == 0 else mesh.bbox[2]
    hi_bound = mesh.bbox[1] if ax == 0 else mesh.bbox[3]
    target_bound = lo_bound if toward_min else hi_bound

    elements = [host]
    breaks = [tcoord]
    k = host
    enter_face = -1
    cur = tcoord
    max_steps = mesh.num_elements + 2
    for _ in range(max_steps):
        xt = tx[k]
        xf = ty[k]
        crossings = []  # (t_value, face)
        for f in range(3):
            g = (f + 1) % 3
            fa = xf[f] - fcoord
            fb = xf[g] - fcoord
            if abs(fa) <= tol or abs(fb) <= tol:
                return None  # vertex on the line: degenerate
            if (fa > 0.0) != (fb > 0.0):
                tcross = xt[f] + (xt[g] - xt[f]) * fa / (fa - fb)
                crossings.append((tcross, f))
        if len(crossings) != 2:
            return None
        if toward_min:
            exit_t, exit_f = min(crossings)
        else:
            exit_t, exit_f = max(crossings)
        if enter_face >= 0:
            enter_t = (max(crossings) if toward_min else min(crossings))[0]
            if abs(enter_t - cur) > 100.0 * tol + 1e-12 * abs(cur):
                return None  # inconsistent shared-face crossing
        if exit_f == enter_face:
            return None
        breaks.append(exit_t)
        cur = exit_t
        nxt = e2e[k][exit_f]
        if nxt == k:  # boundary face
            if abs(exit_t - target_bound) > 1e4 * tol:
                return None  # left the domain before reaching the wall
            breaks[-1] = target_bound
            return elements, breaks
        # entering neighbor: find which of its faces we came through
        enter_face = int(mesh.elem_to_face[k, exit_f])
        k = nxt
        elements.append(k)
    return None


def _exhaustive_trace(mesh: Mesh, host: int, tcoord: float, fcoord: float,
                      ax: int, toward_min: bool):
    """Vectorized all-triangles intersection; handles vertex/edge degeneracies."""
    tol = mesh.geom_tol
    v = mesh.vertices
    t = mesh.triangles
    T = v[t, ax]            # traveling coordinate, (K, 3)
    F = v[t, 1 - ax]        # fixed coordinate, (K, 3)
    lo_bound = mesh.bbox[0] if ax == 0 else mesh.bbox[2]
    hi_bound = mesh.bbox[1] if ax == 0 else mesh.bbox[3]
    seg_lo = lo_bound if toward_min else tcoord
    seg_hi = tcoord if toward_min else hi_bound

    lo = np.full(len(t), np.inf)
    hi = np.full(len(t), -np.inf)
    for f in range(3):
        g = (f + 1) % 3
        fa = F[:, f] - fcoord
        fb = F[:, g] - fcoord
        on_a = np.abs(fa) <= tol
        span = ((fa > 0) != (fb > 0)) & ~on_a & ~(np.abs(fb) <= tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = T[:, f] + (T[:, g] - T[:, f]) * fa / (fa - fb)
        lo = np.where(span, np.minimum(lo, tc), lo)
        hi = np.where(span, np.maximum(hi, tc), hi)
        # vertices lying exactly on the line count as crossings
        lo = np.where(on_a, np.minimum(lo, T[:, f]), lo)
        hi = np.where(on_a, np.maximum(hi, T[:, f]), hi)

    lo_c = np.maximum(lo, seg_lo)
    hi_c = np.minimum(hi, seg_hi)
    valid = hi_c - lo_c > tol

    # keep only triangles whose interior the line actually passes through;
    # for a segment collinear with an internal edge keep the lower/left side
    mid = np.where(valid, 0.5 * (np.where(valid, lo_c, 0.0) + np.where(valid, hi_c, 0.0)), 0.0)
    px = mid if ax == 0 else np.full_like(mid, fcoord)
    py = np.full_like(mid, fcoord) if ax == 0 else mid
    r = mesh.rmap[:, 0] + mesh.rmap[:, 1] * px + mesh.rmap[:, 2] * py
    s = mesh.smap[:, 0] + mesh.smap[:, 1] * px + mesh.smap[:, 2] * py
    lam_min = np.minimum(np.minimum(-(r + s) / 2.0, (1.0 + r) / 2.0), (1.0 + s) / 2.0)
    strict_inside = lam_min > 1e-12
    on_edge = np.abs(lam_min) <= 1e-12
    centroid_f = F.mean(axis=1)
    valid &= strict_inside | (on_edge & (centroid_f < fcoord))

    idx = np.nonzero(valid)[0]
    order = np.argsort(lo_c[idx])
    idx = idx[order]
    intervals = np.column_stack([lo_c[idx], hi_c[idx]])
    return idx, intervals


def _validate_partition(mesh: Mesh, elements, intervals, seg_lo, seg_hi, extent):
    cover_tol = _COVER_TOL_FACTOR * extent
    if len(elements) == 0:
        if seg_hi - seg_lo > cover_tol:
            raise TraceError("trace found no crossed elements over a nonempty segment")
        return
    lengths = intervals[:, 1] - intervals[:, 0]
    gap = abs(float(lengths.sum()) - (seg_hi - seg_lo))
    if gap > cover_tol:
        raise TraceError(f"trace coverage gap {gap:.3e} exceeds tolerance {cover_tol:.3e} "
                         "(non-conforming or degenerate mesh?)")
    overlap = intervals[1:, 0] - intervals[:-1, 1]
    if len(overlap) and float(overlap.min()) < -100.0 * mesh.geom_tol:
        raise TraceError("trace intervals overlap beyond geometric tolerance")


def _walk_trace_fast(mesh: Mesh, host: int, tcoord: float, fcoord: float,
                     ax: int, toward_min: bool, scratch=None):
    """Compiled walker when built; returns (elements, breaks host-outward) or None."""
    if _walk_trace_c is None:
        return _walk_trace(mesh, host, tcoord, fcoord, ax, toward_min)
    if scratch is None:
        scratch = trace_scratch(mesh)
    se, sb = scratch
    T, F = (mesh.tri_x, mesh.tri_y) if ax == 0 else (mesh.tri_y, mesh.tri_x)
    lo_bound = mesh.bbox[0] if ax == 0 else mesh.bbox[2]
    hi_bound = mesh.bbox[1] if ax == 0 else mesh.bbox[3]
    m = _walk_trace_c(T, F, mesh.elem_to_elem, mesh.elem_to_face,
                      host, tcoord, fcoord, toward_min, mesh.geom_tol,
                      lo_bound, hi_bound, se, sb)
    if m < 0:
        return None
    return se[:m].tolist(), sb[:m + 1].tolist()


def trace_scratch(mesh: Mesh):
    """Reusable output buffers for the compiled walker."""
    return (np.empty(mesh.num_elements + 2, dtype=np.int64),
            np.empty(mesh.num_elements + 3))


def trace_axis(mesh: Mesh, host: int, tcoord: float, fcoord: float,
               ax: int, toward_min: bool):
    """Internal tracer: (elements int array, intervals (M,2)) ascending."""
    res = _walk_trace_fast(mesh, host, tcoord, fcoord, ax, toward_min)
    if res is not None:
        elements, breaks = res
        if toward_min:
            elements = np.asarray(elements[::-1], dtype=np.int64)
            b = np.asarray(breaks[::-1])
            intervals = np.column_stack([b[:-1], b[1:]])
        else:
            elements = np.asarray(elements, dtype=np.int64)
            b = np.asarray(breaks)
            intervals = np.column_stack([b[:-1], b[1:]])
    else:
        elements, intervals = _exhaustive_trace(mesh, host, tcoord, fcoord, ax, toward_min)

    lo_bound = mesh.bbox[0] if ax == 0 else mesh.bbox[2]
    hi_bound = mesh.bbox[1] if ax == 0 else mesh.bbox[3]
    seg_lo = lo_bound if toward_min else tcoord
    seg_hi = tcoord if toward_min else hi_bound
    extent = hi_bound - lo_bound
    _validate_partition(mesh, elements, intervals, seg_lo, seg_hi, extent)
    return elements, intervals


def trace_segment(mesh: Mesh, point, axis: str = "x", side: str = "left",
                  host: int | None = None) -> TraceResult:
    """Trace the axis-aligned segment from ``point`` to the domain boundary.

    side="left" walks toward the lower bound of the axis, side="right" toward
    the upper bound.  Every crossed triangle is reported with its crossing
    interval; the host element's interval terminates at the point itself.
    """
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    x, y = float(point[0]), float(point[1])
    if host is None:
        host = mesh.locate(x, y)
    ax = 0 if axis == "x" else 1
    tcoord = x if ax == 0 else y
    fcoord = y if ax == 0 else x
    elements, intervals = trace_axis(mesh, host, tcoord, fcoord, ax, side == "left")
    return TraceResult(elements=elements, intervals=intervals,
                       host=host, axis=axis, side=side)
