"""Quadratic quadrilateral meshes for the half compact-tension specimen.

Elements are 8-node serendipity quadrilaterals with the VTK node order:
corners counter-clockwise, then the midside nodes of edges 0-1, 1-2, 2-3, 3-0.

The compact-tension mesh is built in horizontal layers.  The bottom layer is a
uniform band of square elements along the crack plane; every layer above it
merges groups of three columns with a four-quad transition template, so the
element size triples per level while aspect ratios stay moderate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# ---------------------------------------------------------------------------
# Reference element
# ---------------------------------------------------------------------------

Q8_REF_NODES = np.array([
    [-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0],
    [0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0],
])


def q8_shape(xi, eta):
    """Serendipity shape functions and their reference derivatives.

    Returns ``N`` with shape (..., 8) and ``dN`` with shape (..., 8, 2).
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xs, ys = Q8_REF_NODES[:, 0], Q8_REF_NODES[:, 1]
    x = xi[..., None]
    y = eta[..., None]
    N = np.empty(xi.shape + (8,))
    dN = np.empty(xi.shape + (8, 2))

    c = slice(0, 4)
    xc, yc = xs[c], ys[c]
    N[..., c] = 0.25 * (1 + x * xc) * (1 + y * yc) * (x * xc + y * yc - 1)
    dN[..., c, 0] = 0.25 * xc * (1 + y * yc) * (2 * x * xc + y * yc)
    dN[..., c, 1] = 0.25 * yc * (1 + x * xc) * (x * xc + 2 * y * yc)

    # midside nodes on eta = +-1 edges (xi_i = 0)
    for i in (4, 6):
        yi = ys[i]
        N[..., i] = 0.5 * (1 - xi**2) * (1 + eta * yi)
        dN[..., i, 0] = -xi * (1 + eta * yi)
        dN[..., i, 1] = 0.5 * yi * (1 - xi**2)
    # midside nodes on xi = +-1 edges (eta_i = 0)
    for i in (5, 7):
        xi_i = xs[i]
        N[..., i] = 0.5 * (1 + xi * xi_i) * (1 - eta**2)
        dN[..., i, 0] = 0.5 * xi_i * (1 - eta**2)
        dN[..., i, 1] = -eta * (1 + xi * xi_i)
    return N, dN


def gauss_legendre_2d(order: int = 3):
    g, w = np.polynomial.legendre.leggauss(order)
    xi, eta = np.meshgrid(g, g, indexing="ij")
    W = np.outer(w, w)
    return np.column_stack([xi.ravel(), eta.ravel()]), W.ravel()


def quadrature_rule(element: Optional[np.ndarray] = None, order: int = 3):
    """Tensor Gauss rule on the reference square or on a physical element.

    Without ``element`` the reference points and weights are returned
    (weights sum to 4).  With an (8, 2) coordinate array the points are mapped
    to the element and the weights include ``det J``.
    """
    pts, wts = gauss_legendre_2d(order)
    if element is None:
        return pts, wts
    X = np.asarray(element, dtype=float)
    N, dN = q8_shape(pts[:, 0], pts[:, 1])
    J = np.einsum("qad,ai->qid", dN, X)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(det <= 0):
        raise ValueError("element has a non-positive Jacobian")
    return N @ X, wts * det


# ---------------------------------------------------------------------------
# Mesh container
# ---------------------------------------------------------------------------


@dataclass
class Mesh:
    """Q8 mesh with named node sets.

    ``band`` flags the elements of the refined crack-path band; ``meta``
    carries generator information (CT dimensions, band extent).
    """

    nodes: np.ndarray
    elements: np.ndarray
    node_sets: dict = field(default_factory=dict)
    band: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        if self.band is None:
            self.band = np.zeros(len(self.elements), dtype=bool)
        self.nodes.setflags(write=False)
        self.elements.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def element_sizes(self) -> np.ndarray:
        """Longest corner-to-corner edge of each element [mm]."""
        c = self.nodes[self.elements[:, :4]]
        e = np.linalg.norm(c - np.roll(c, -1, axis=1), axis=2)
        return e.max(axis=1)

    def area(self) -> float:
        pts, wts = gauss_legendre_2d(3)
        _, dN = q8_shape(pts[:, 0], pts[:, 1])
        X = self.nodes[self.elements]
        J = np.einsum("qad,eai->eqid", dN, X)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        return float((det * wts).sum())

    def nodes_in(self, name: str) -> np.ndarray:
        return self.node_sets[name]


def quad4_to_quad8(points: np.ndarray, quads: np.ndarray):
    """Insert straight-edge midside nodes into a 4-node quad mesh."""
    points = np.asarray(points, dtype=float)
    quads = np.asarray(quads, dtype=np.int64)
    edges = np.stack([quads, np.roll(quads, -1, axis=1)], axis=2).reshape(-1, 2)
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    mids = 0.5 * (points[uniq[:, 0]] + points[uniq[:, 1]])
    nodes = np.vstack([points, mids])
    mid_ids = len(points) + inv.reshape(-1, 4)
    return nodes, np.hstack([quads, mid_ids])


class _NodePool:
    """Deduplicates corner points by rounded coordinates."""

    def __init__(self, scale: float):
        self._ids: dict = {}
        self.points: list = []
        self._q = 1e-9 * scale

    def __call__(self, x: float, y: float) -> int:
        k = (round(x / self._q), round(y / self._q))
        i = self._ids.get(k)
        if i is None:
            i = len(self.points)
            self._ids[k] = i
            self.points.append((x, y))
        return i


def rectangle_mesh(lx: float, ly: float, nx: int, ny: int, origin=(0.0, 0.0)) -> Mesh:
    """Structured ``nx`` x ``ny`` Q8 mesh of a rectangle.

    Node sets LEFT, RIGHT, BOTTOM, TOP hold the boundary nodes.
    """
    x0, y0 = origin
    xs = x0 + np.linspace(0.0, lx, nx + 1)
    ys = y0 + np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    quads = np.column_stack([
        idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(),
        idx[1:, 1:].ravel(), idx[:-1, 1:].ravel(),
    ])
    nodes, elems = quad4_to_quad8(pts, quads)
    tol = 1e-9 * max(lx, ly)
    sets = {
        "LEFT": np.flatnonzero(np.abs(nodes[:, 0] - x0) < tol),
        "RIGHT": np.flatnonzero(np.abs(nodes[:, 0] - x0 - lx) < tol),
        "BOTTOM": np.flatnonzero(np.abs(nodes[:, 1] - y0) < tol),
        "TOP": np.flatnonzero(np.abs(nodes[:, 1] - y0 - ly) < tol),
    }
    return Mesh(nodes, elems, sets, meta={"kind": "rectangle", "lx": lx, "ly": ly})


# ---------------------------------------------------------------------------
# Compact tension specimen
# ---------------------------------------------------------------------------


class MeshConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class CTGeometry:
    """Planar dimensions of a compact-tension specimen [mm].

    The load line is ``x = 0``; the crack plane is ``y = 0`` and only the
    upper half ``0 <= y <= half_height`` is meshed.  The notch is a slit from
    the front face ``x = -front`` to the initial crack tip ``x = a0``.
    Defaults are the ASTM E647 1T proportions.

    ``band_length`` is the refined length of crack plane ahead of ``a0``
    (None: the whole ligament), ``band_behind`` the refined length behind it
    and ``band_half_height`` the height of the uniform refined layer.
    """

    W: float = 50.8
    B: float = 25.4
    a0: float = 10.16
    front: Optional[float] = None
    half_height: Optional[float] = None
    pin_x: float = 0.0
    pin_y: Optional[float] = None
    pin_radius: Optional[float] = None
    band_length: Optional[float] = None
    band_behind: float = 0.5
    band_half_height: Optional[float] = None
    h_ratio: float = 6.0
    growth: float = 1.3
    h_max: Optional[float] = None

    def resolved(self, ell: float) -> "CTGeometry":
        W = self.W
        g = CTGeometry(
            W=W, B=self.B, a0=self.a0,
            front=0.25 * W if self.front is None else self.front,
            half_height=0.6 * W if self.half_height is None else self.half_height,
            pin_x=self.pin_x,
            pin_y=0.275 * W if self.pin_y is None else self.pin_y,
            pin_radius=0.125 * W if self.pin_radius is None else self.pin_radius,
            band_length=W - self.a0 if self.band_length is None else self.band_length,
            band_behind=self.band_behind,
            band_half_height=0.5 * ell if self.band_half_height is None else self.band_half_height,
            h_ratio=self.h_ratio, growth=self.growth,
            h_max=W / 20.0 if self.h_max is None else self.h_max,
        )
        g.validate(ell)
        return g

    def validate(self, ell: float) -> None:
        if not (self.W > 0 and self.B > 0):
            raise MeshConfigurationError("W and B must be positive")
        if not 0 < self.a0 < self.W:
            raise MeshConfigurationError("initial crack length must satisfy 0 < a0 < W")
        if not (-self.front < self.pin_x < self.W and 0 < self.pin_y < self.half_height):
            raise MeshConfigurationError("pin lies outside the specimen")
        if not self.band_length > 0 or self.a0 + self.band_length > self.W + 1e-9:
            raise MeshConfigurationError("refinement band must lie on the ligament a0..W")
        h0 = ell / self.h_ratio
        if not self.band_half_height >= h0 * (1 - 1e-9):
            raise MeshConfigurationError(
                f"band half-height {self.band_half_height} cannot hold an element of "
                f"size ell/{self.h_ratio} = {h0:.4g}")
        if self.band_behind < 0 or self.a0 - self.band_behind < -self.front:
            raise MeshConfigurationError("band_behind reaches past the front face")
        if self.growth < 1.0:
            raise MeshConfigurationError("growth ratio must be >= 1")


def _graded(start: float, end: float, h_first: float, growth: float, h_max: float):
    """Points from ``start`` to ``end`` with sizes growing from ``h_first``."""
    L = abs(end - start)
    if L <= 0:
        return np.array([start])
    sizes = []
    h = h_first
    while sum(sizes) < L * (1 - 1e-12):
        sizes.append(min(h, h_max))
        h *= growth
    sizes = np.array(sizes)
    if len(sizes) > 1 and sizes.sum() - L > 0.5 * sizes[-1]:
        sizes = sizes[:-1]
    sizes *= L / sizes.sum()
    direction = 1.0 if end > start else -1.0
    return start + direction * np.concatenate([[0.0], np.cumsum(sizes)])


def _uniform(start: float, end: float, h: float):
    n = max(1, int(math.ceil((end - start) / h - 1e-9)))
    return np.linspace(start, end, n + 1)


def _merge_columns(X: np.ndarray, size: float, cap: float, protected: np.ndarray):
    """Coarsen breakpoints by joining runs of three fine intervals."""
    w = np.diff(X)
    keep = [X[0]]
    i = 0
    merged = False
    n = len(w)
    while i < n:
        if i + 2 < n:
            trio = w[i:i + 3]
            inner = X[i + 1:i + 3]
            ok = (trio.max() <= 1.05 * size and trio.sum() <= cap
                  and not np.any(np.isin(np.round(inner, 9), protected)))
            if ok:
                keep.append(X[i + 3])
                i += 3
                merged = True
                continue
        keep.append(X[i + 1])
        i += 1
    return np.array(keep), merged


def generate_ct_half_mesh(geom: CTGeometry, ell: float) -> Mesh:
    """Mesh the upper half of a CT specimen with a refined crack-plane band.

    Node sets: SYMMETRY (crack plane ahead of the notch tip, ``y = 0``),
    NOTCH_FACES (slit faces behind the tip), OUTER (front, back and top
    faces), PIN (single node nearest the pin centre), PIN_AREA (nodes within
    the pin radius), ANCHOR (back-face node on the crack plane) and TIP.
    """
    if not ell > 0:
        raise MeshConfigurationError("length scale must be positive")
    g = geom.resolved(ell)
    h0 = ell / g.h_ratio
    x_left, x_right, H = -g.front, g.W, g.half_height

    xb0 = max(x_left, g.a0 - g.band_behind)
    xb1 = min(x_right, g.a0 + g.band_length)
    band = np.concatenate([_uniform(xb0, g.a0, h0) if g.a0 > xb0 else [g.a0],
                           _uniform(g.a0, xb1, h0)[1:]])
    hb = band[1] - band[0] if len(band) > 1 else h0

    pieces = [band]
    if xb0 > x_left:
        if x_left < g.pin_x < xb0:
            p1 = _graded(xb0, g.pin_x, hb * g.growth, g.growth, g.h_max)
            last = abs(p1[-1] - p1[-2]) if len(p1) > 1 else hb
            p2 = _graded(g.pin_x, x_left, last * g.growth, g.growth, g.h_max)
            pieces += [p1, p2]
        else:
            pieces.append(_graded(xb0, x_left, hb * g.growth, g.growth, g.h_max))
    if xb1 < x_right:
        pieces.append(_graded(xb1, x_right, hb * g.growth, g.growth, g.h_max))
    X0 = np.unique(np.round(np.concatenate(pieces), 12))

    protected = np.round(np.array([g.pin_x]), 9)
    pool = _NodePool(g.W)
    quads: list = []

    def add_rows(X, y_levels):
        for j in range(len(y_levels) - 1):
            ya, yb = y_levels[j], y_levels[j + 1]
            for i in range(len(X) - 1):
                quads.append((pool(X[i], ya), pool(X[i + 1], ya),
                              pool(X[i + 1], yb), pool(X[i], yb)))

    def add_transition(Xf, Xc, yb, t):
        yt, ym = yb + t, yb + 0.5 * t
        j = 0
        for i in range(len(Xc) - 1):
            xa, xb = Xc[i], Xc[i + 1]
            k = j
            while Xf[k] < xb - 1e-9 * g.W:
                k += 1
            fine = Xf[j:k + 1]
            if len(fine) == 2:
                quads.append((pool(xa, yb), pool(xb, yb), pool(xb, yt), pool(xa, yt)))
            else:
                f0, f1, f2, f3 = fine
                p1, p2 = pool(f1, ym), pool(f2, ym)
                quads.append((pool(f0, yb), pool(f1, yb), p1, pool(f0, yt)))
                quads.append((pool(f1, yb), pool(f2, yb), p2, p1))
                quads.append((pool(f2, yb), pool(f3, yb), pool(f3, yt), p2))
                quads.append((p1, p2, pool(f3, yt), pool(f0, yt)))
            j = k

    n0 = int(math.ceil(g.band_half_height / h0 - 1e-9))
    y_band = np.linspace(0.0, g.band_half_height, n0 + 1)
    add_rows(X0, y_band)
    n_band_quads = len(quads)
    band_x = (xb0, xb1)

    X, y, size = X0, g.band_half_height, h0
    cap = 1.5 * g.h_max
    while True:
        Xc, merged = _merge_columns(X, size, cap, protected)
        t = 2.0 * size
        if not merged or y + t + 3.0 * size > H - 3.0 * size:
            break
        add_transition(X, Xc, y, t)
        y += t
        size *= 3.0
        add_rows(Xc, [y, y + size])
        y += size
        X = Xc

    target = max(np.diff(X).max(), size)
    stops = [y]
    if y + 0.5 * target < g.pin_y < H - 0.5 * target:
        stops.append(g.pin_y)
    stops.append(H)
    y_fill = [y]
    for a, b in zip(stops[:-1], stops[1:]):
        y_fill.extend(_uniform(a, b, target)[1:])
    add_rows(X, np.array(y_fill))

    points = np.array(pool.points)
    quads_arr = np.array(quads, dtype=np.int64)
    nodes, elems = quad4_to_quad8(points, quads_arr)

    band_mask = np.zeros(len(elems), dtype=bool)
    cx = nodes[elems[:, :4], 0].mean(axis=1)
    band_mask[:n_band_quads] = ((cx > band_x[0]) & (cx < band_x[1]))[:n_band_quads]

    tol = 1e-9 * g.W
    x, yv = nodes[:, 0], nodes[:, 1]
    on_plane = np.abs(yv) < tol
    sym = np.flatnonzero(on_plane & (x >= g.a0 - tol))
    sym = sym[np.argsort(x[sym])]
    notch = np.flatnonzero(on_plane & (x <= g.a0 + tol))
    outer = np.flatnonzero((np.abs(x - x_left) < tol) | (np.abs(x - x_right) < tol)
                           | (np.abs(yv - H) < tol))
    d = np.hypot(x - g.pin_x, yv - g.pin_y)
    pin = int(np.argmin(d))
    pin_area = np.flatnonzero(d <= g.pin_radius)
    if pin not in pin_area:
        pin_area = np.append(pin_area, pin)
    anchor = int(np.argmin(np.hypot(x - x_right, yv)))
    tip = int(np.argmin(np.hypot(x - g.a0, yv)))
    sets = {
        "SYMMETRY": sym,
        "NOTCH_FACES": notch,
        "OUTER": outer,
        "PIN": np.array([pin]),
        "PIN_AREA": pin_area,
        "ANCHOR": np.array([anchor]),
        "TIP": np.array([tip]),
    }
    meta = {
        "kind": "ct_half", "W": g.W, "B": g.B, "a0": g.a0, "x_left": x_left,
        "half_height": H, "band_x": band_x, "band_half_height": g.band_half_height,
        "h_band": h0, "ell": ell, "pin": (float(x[pin]), float(yv[pin])),
    }
    mesh = Mesh(nodes, elems, sets, band_mask, meta)
    hmax_band = mesh.element_sizes[band_mask].max() if band_mask.any() else 0.0
    if hmax_band > h0 * (1 + 1e-9):
        raise MeshConfigurationError(f"band element size {hmax_band:.4g} exceeds ell/{g.h_ratio}")
    return mesh


def ct_half_area(geom: CTGeometry, ell: float) -> float:
    """Analytic area of the meshed half specimen (slit notch, no pin hole)."""
    g = geom.resolved(ell)
    return (g.W + g.front) * g.half_height


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

VTK_QUADRATIC_QUAD = 23


def write_vtk(path, mesh: Mesh, point_data: Optional[dict] = None,
              cell_data: Optional[dict] = None, title: str = "h2fatigue") -> None:
    """Write a legacy ASCII VTK unstructured grid of quadratic quads."""
    nn, ne = mesh.n_nodes, mesh.n_elements
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nn} double"]
    lines += [f"{x:.10g} {y:.10g} 0" for x, y in mesh.nodes]
    lines.append(f"CELLS {ne} {ne * 9}")
    lines += ["8 " + " ".join(map(str, e)) for e in mesh.elements]
    lines.append(f"CELL_TYPES {ne}")
    lines += [str(VTK_QUADRATIC_QUAD)] * ne

    def block(data, n):
        out = []
        for name, arr in data.items():
            a = np.asarray(arr, dtype=float)
            if a.shape[0] != n:
                raise ValueError(f"field {name!r} has {a.shape[0]} entries, expected {n}")
            if a.ndim == 1:
                out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                out += [f"{v:.10g}" for v in a]
            else:
                vec = np.zeros((n, 3))
                vec[:, :a.shape[1]] = a
                out.append(f"VECTORS {name} double")
                out += [f"{u:.10g} {v:.10g} {w:.10g}" for u, v, w in vec]
        return out

    if point_data:
        lines.append(f"POINT_DATA {nn}")
        lines += block(point_data, nn)
    if cell_data:
        lines.append(f"CELL_DATA {ne}")
        lines += block(cell_data, ne)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
