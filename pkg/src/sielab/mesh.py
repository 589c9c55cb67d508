"""Concentric polar-ring triangulations, red refinement, crack meshes and a text format.

A mesh covers the disk ``|x| < R`` (or the annular part outside a circular
obstacle) and resolves every interface circle as a closed polyline of mesh
edges.  Nodes are laid out on rings; consecutive rings are stitched by a
zipper sweep in angle.  Region ``0`` is the outermost annulus next to the
truncation circle; region numbers increase towards the centre.

Boundary and interface edges carry string tags::

    OUTER      edges on the truncation circle |x| = R
    DIR, NEU   Dirichlet / Neumann arcs of the obstacle boundary
    IFACE:k    edges on interface circle k (ascending radius order)

Examples
--------
>>> spec = GeometrySpec(R=2.0, interface_radii=(1.0,))
>>> mesh = build_concentric_mesh(spec, 0.25)
>>> sorted(set(mesh.regions.tolist()))
[0, 1]
"""

from dataclasses import dataclass, field
import io
import math
import os

import numpy as np

from .errors import MeshError, ConfigurationError

TWO_PI = 2.0 * math.pi
_ARC_TAGS = {"DIRICHLET": "DIR", "NEUMANN": "NEU"}
_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# geometry description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Obstacle:
    """Circular obstacle of radius ``radius`` centred at the origin.

    ``arcs`` is a sequence of ``(angle_start, angle_end, kind)`` with kind in
    ``{"DIRICHLET", "NEUMANN"}``; the arcs must tile ``[0, 2*pi)`` in order.
    """

    radius: float
    arcs: tuple = ((0.0, TWO_PI, "DIRICHLET"),)

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError("obstacle radius must be positive")
        arcs = tuple((float(a), float(b), str(k).upper()) for a, b, k in self.arcs)
        if not arcs:
            raise ConfigurationError("obstacle needs at least one boundary arc")
        if abs(arcs[0][0]) > 1e-12 or abs(arcs[-1][1] - TWO_PI) > 1e-9:
            raise ConfigurationError("obstacle arcs must cover [0, 2*pi)")
        for (a, b, k), nxt in zip(arcs, arcs[1:] + (None,)):
            if k not in _ARC_TAGS:
                raise ConfigurationError(f"unknown boundary arc kind {k!r}")
            if not b > a:
                raise ConfigurationError("obstacle arcs must have positive length")
            if nxt is not None and abs(nxt[0] - b) > 1e-12:
                raise ConfigurationError("obstacle arcs must not overlap or leave gaps")
        object.__setattr__(self, "arcs", arcs)

    def kind_at(self, theta):
        """Boundary tag (``"DIR"`` or ``"NEU"``) at the angles ``theta``."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        out = np.empty(theta.shape, dtype=object)
        for a, b, k in self.arcs:
            out[(theta >= a) & (theta < b)] = _ARC_TAGS[k]
        return out


@dataclass(frozen=True)
class GeometrySpec:
    """Truncation radius, ascending interface radii and an optional obstacle."""

    R: float
    interface_radii: tuple = ()
    obstacle: Obstacle = None

    def __post_init__(self):
        radii = tuple(float(r) for r in self.interface_radii)
        object.__setattr__(self, "interface_radii", radii)
        if not self.R > 0:
            raise ConfigurationError("C3: truncation radius R must be positive")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigurationError("interface radii must be strictly increasing")
        if radii and not (radii[0] > 0 and radii[-1] < self.R):
            raise ConfigurationError("C3: all interfaces must lie strictly inside B_R")
        if self.obstacle is not None:
            lim = radii[0] if radii else self.R
            if not self.obstacle.radius < lim:
                raise ConfigurationError(
                    "obstacle radius must be smaller than every interface radius and R")

    @property
    def n_regions(self):
        return len(self.interface_radii) + 1

    def region_of_radius(self, r):
        """Region index of points at radius ``r`` (0 = outermost annulus)."""
        r = np.asarray(r, dtype=float)
        idx = np.zeros(r.shape, dtype=int)
        for c in self.interface_radii:
            idx += (r < c)
        return idx

    def region_bounds(self, j):
        """Inner and outer radius of region ``j`` (inner radius 0 for a disk)."""
        outer = [self.R] + list(self.interface_radii[::-1])
        inner = list(self.interface_radii[::-1]) + [
            self.obstacle.radius if self.obstacle is not None else 0.0]
        return inner[j], outer[j]


# ---------------------------------------------------------------------------
# mesh containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with region ids and tagged boundary edges.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    regions : (nt,) int array
    edges : (ne, 2) int array of tagged edges
    edge_tags : tuple of str, one per tagged edge
    """

    vertices: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    edges: np.ndarray
    edge_tags: tuple

    def __post_init__(self):
        for name, dt in (("vertices", float), ("triangles", np.int64),
                         ("regions", np.int64), ("edges", np.int64)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=dt)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "edge_tags", tuple(self.edge_tags))
        if self.edges.shape[0] != len(self.edge_tags):
            raise MeshError("one tag per boundary edge required")

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def h(self):
        """Largest edge length."""
        p = self.vertices[self.triangles]
        e = p - np.roll(p, -1, axis=1)
        return float(np.sqrt((e ** 2).sum(axis=2)).max())

    def areas(self):
        """Signed triangle areas (positive for counter-clockwise triangles)."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def min_angle(self):
        """Smallest interior angle in degrees."""
        p = self.vertices[self.triangles]
        ang = []
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            c = (a * b).sum(1) / np.sqrt((a * a).sum(1) * (b * b).sum(1))
            ang.append(np.degrees(np.arccos(np.clip(c, -1, 1))))
        return float(np.min(ang))

    def tags(self):
        """Sorted list of distinct edge tags."""
        return sorted(set(self.edge_tags))

    def tag_edges(self, tag):
        """Edges carrying ``tag`` (a string or a collection of strings)."""
        tags = {tag} if isinstance(tag, str) else set(tag)
        sel = np.array([t in tags for t in self.edge_tags], dtype=bool)
        return self.edges[sel] if sel.size else np.zeros((0, 2), dtype=np.int64)

    def tag_nodes(self, tag):
        """Nodes on edges with ``tag``, ordered by polar angle in ``[0, 2*pi)``."""
        nodes = np.unique(self.tag_edges(tag))
        theta = np.mod(np.arctan2(self.vertices[nodes, 1], self.vertices[nodes, 0]), TWO_PI)
        return nodes[np.argsort(theta, kind="stable")]

    def same_as(self, other):
        """Exact structural and coordinate equality."""
        return (np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles)
                and np.array_equal(self.regions, other.regions)
                and np.array_equal(self.edges, other.edges)
                and self.edge_tags == other.edge_tags)


def interface_tag(k):
    return f"IFACE:{int(k)}"


def check_mesh(mesh, spec=None):
    """Return a list of violated mesh invariants (empty when valid)."""
    problems = []
    if np.any(mesh.areas() <= 0):
        problems.append("non-positive triangle area")
    tri = mesh.triangles
    e = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    if np.any(counts > 2):
        problems.append("edge shared by more than two triangles")
    boundary = {tuple(x) for x in uniq[counts == 1]}
    tagged = {tuple(sorted(x)) for x in mesh.edges.tolist()}
    if not boundary <= tagged:
        problems.append("untagged boundary edge")
    # regions may only meet across interface edges
    eidx = {tuple(x): i for i, x in enumerate(uniq.tolist())}
    owner = {}
    for t, (a, b, c) in enumerate(tri.tolist()):
        for p, q in ((a, b), (b, c), (c, a)):
            key = (min(p, q), max(p, q))
            owner.setdefault(key, []).append(mesh.regions[t])
    iface = {tuple(sorted(x)) for x, tg in zip(mesh.edges.tolist(), mesh.edge_tags)
             if tg.startswith("IFACE")}
    for key, regs in owner.items():
        if len(regs) == 2 and regs[0] != regs[1] and key not in iface:
            problems.append("regions meet across a non-interface edge")
            break
    # Euler characteristic: V - E + F = 1 - (number of holes)
    holes = 1 if any(t in ("DIR", "NEU") for t in mesh.edge_tags) else 0
    chi = mesh.n_vertices - len(eidx) + mesh.n_triangles
    if chi != 1 - holes:
        problems.append(f"Euler characteristic {chi} != {1 - holes}")
    if spec is not None:
        radius_of = {"OUTER": spec.R}
        for k, r in enumerate(spec.interface_radii):
            radius_of[interface_tag(k)] = r
        if spec.obstacle is not None:
            radius_of["DIR"] = radius_of["NEU"] = spec.obstacle.radius
        for tg in set(mesh.edge_tags):
            nodes = np.unique(mesh.tag_edges(tg))
            rr = np.hypot(*mesh.vertices[nodes].T)
            if tg in radius_of and np.max(np.abs(rr - radius_of[tg])) > 1e-12 * spec.R:
                problems.append(f"nodes of {tg} off their circle")
    if mesh.min_angle() < 15.0:
        problems.append("minimum angle below 15 degrees")
    return problems


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------

def _ring_count(rho, hr):
    return 6 * max(1, math.ceil(rho / hr - 1e-9))


def _zipper(inner, inner_theta, outer, outer_theta):
    """Stitch two closed rings (angles ascending from ~0) into triangles."""
    na, nb = len(inner), len(outer)
    a_th = np.append(inner_theta, inner_theta[0] + TWO_PI)
    b_th = np.append(outer_theta, outer_theta[0] + TWO_PI)
    tris = []
    i = j = 0
    while i < na or j < nb:
        adv_a = j == nb or (i < na and a_th[i] + a_th[i + 1] <= b_th[j] + b_th[j + 1])
        if adv_a:
            tris.append((inner[i % na], outer[j % nb], inner[(i + 1) % na]))
            i += 1
        else:
            tris.append((inner[i % na], outer[j % nb], outer[(j + 1) % nb]))
            j += 1
    return tris


def _polar_mesh(R, circles, target_h, obstacle=None):
    """Full-disk mesh; ``circles`` are ascending radii tagged IFACE:0.. in order."""
    if not (0 < target_h <= R / 4):
        raise MeshError("target_h must lie in (0, R/4]")
    anchors = [0.0] + list(circles) + [R]
    for a, b in zip(anchors, anchors[1:]):
        if b - a < 2 * target_h:
            raise MeshError(
                f"target_h={target_h:g} too coarse to resolve the annulus between radii "
                f"{a:g} and {b:g} (gap < 2*target_h)")
    hr = 0.9 * target_h
    ring_r = [0.0]
    for a, b in zip(anchors, anchors[1:]):
        k = max(1, math.ceil((b - a) / hr - 1e-9))
        ring_r.extend(a + (b - a) * np.arange(1, k) / k)
        ring_r.append(b)                     # anchor radii are placed exactly
    ring_r = np.array(ring_r)

    verts = [np.zeros((1, 2))]
    rings = [(np.array([0]), np.array([0.0]))]
    nv = 1
    obst_r = obstacle.radius if obstacle is not None else None
    for rho in ring_r[1:]:
        n = _ring_count(rho, hr)
        if obst_r is not None and rho == obst_r:
            theta = []
            tau = TWO_PI / n
            for a, b, _ in obstacle.arcs:
                k = max(1, math.ceil((b - a) / tau - 1e-9))
                theta.extend(a + (b - a) * np.arange(k) / k)
            theta = np.array(theta)
        else:
            theta = TWO_PI * np.arange(n) / n
        pts = rho * np.column_stack([np.cos(theta), np.sin(theta)])
        verts.append(pts)
        rings.append((np.arange(nv, nv + len(theta)), theta))
        nv += len(theta)
    vertices = np.concatenate(verts)

    tris = []
    center = rings[0][0][0]
    ids, _ = rings[1]
    for k in range(len(ids)):
        tris.append((center, ids[k], ids[(k + 1) % len(ids)]))
    for (ia, ta), (ib, tb) in zip(rings[1:], rings[2:]):
        tris.extend(_zipper(ia, ta, ib, tb))
    tris = np.array(tris, dtype=np.int64)

    ring_of_radius = {float(r): i for i, r in enumerate(ring_r)}
    edges, tags = [], []
    for k, c in enumerate(circles):
        ids = rings[ring_of_radius[float(c)]][0]
        edges.append(np.column_stack([ids, np.roll(ids, -1)]))
        tags.extend([interface_tag(k)] * len(ids))
    ids = rings[-1][0]
    edges.append(np.column_stack([ids, np.roll(ids, -1)]))
    tags.extend(["OUTER"] * len(ids))

    cen = vertices[tris].mean(axis=1)
    rc = np.hypot(cen[:, 0], cen[:, 1])
    regions = np.zeros(len(tris), dtype=np.int64)
    for c in circles:
        regions += (rc < c)
    mesh = Mesh(vertices, _orient(vertices, tris), regions, np.concatenate(edges), tags)
    return mesh


def _orient(vertices, tris):
    p = vertices[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    neg = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tris = tris.copy()
    tris[neg] = tris[neg][:, [0, 2, 1]]
    return tris


def _background_circles(spec):
    circles = list(spec.interface_radii)
    if spec.obstacle is not None:
        circles = [spec.obstacle.radius] + circles
    return circles


def _retag_background(mesh, spec):
    # generator numbering includes the obstacle circle first; map to the
    # public convention: interfaces 0..J-1 ascending, obstacle circle = IFACE:J
    if spec.obstacle is None:
        return mesh
    J = len(spec.interface_radii)
    tags = []
    for t in mesh.edge_tags:
        if t.startswith("IFACE:"):
            k = int(t[6:])
            tags.append(interface_tag(J) if k == 0 else interface_tag(k - 1))
        else:
            tags.append(t)
    return Mesh(mesh.vertices, mesh.triangles, mesh.regions, mesh.edges, tags)


def build_background_mesh(spec, target_h):
    """Mesh of the full disk ``B_R`` including the obstacle interior.

    The obstacle circle (if any) is an ordinary interface tagged
    ``IFACE:J`` with ``J = len(spec.interface_radii)``; the obstacle interior
    is region ``J + 1``.  Node positions coincide with those of
    :func:`build_concentric_mesh` for the same arguments.
    """
    return _retag_background(
        _polar_mesh(spec.R, _background_circles(spec), target_h, spec.obstacle), spec)


def strip_obstacle(background, spec):
    """Remove the obstacle interior from a background mesh (see :func:`build_background_mesh`)."""
    if spec.obstacle is None:
        return background
    J = len(spec.interface_radii)
    keep = background.regions <= J
    tris = background.triangles[keep]
    used = np.unique(tris)
    new_id = -np.ones(background.n_vertices, dtype=np.int64)
    new_id[used] = np.arange(len(used))
    obst_tag = interface_tag(J)
    edges, tags = [], []
    for (a, b), t in zip(background.edges.tolist(), background.edge_tags):
        if t == obst_tag:
            mid = 0.5 * (background.vertices[a] + background.vertices[b])
            t = spec.obstacle.kind_at(math.atan2(mid[1], mid[0])).item()
        edges.append((new_id[a], new_id[b]))
        tags.append(t)
    return Mesh(background.vertices[used], new_id[tris], background.regions[keep],
                np.array(edges, dtype=np.int64), tags)


def build_concentric_mesh(spec, target_h):
    """Triangulate ``B_R`` minus the obstacle with every interface resolved.

    Parameters
    ----------
    spec : GeometrySpec
    target_h : float
        Target edge length in ``(0, R/4]``; the largest edge is at most
        ``1.5 * target_h``.

    Raises
    ------
    MeshError
        If an annulus is thinner than ``2 * target_h``.
    """
    return strip_obstacle(build_background_mesh(spec, target_h), spec)


def refine(mesh):
    """Uniform red refinement; midpoints of tagged edges are snapped onto their circle."""
    tri = mesh.triangles
    nv = mesh.n_vertices
    loc = np.stack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=1)  # (nt,3,2)
    key = np.sort(loc.reshape(-1, 2), axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1, 3)
    mid = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    # snap tagged (circular) edges radially
    tag_key = np.sort(mesh.edges, axis=1)
    pos = _row_lookup(uniq, tag_key)
    a, b = mesh.edges[:, 0], mesh.edges[:, 1]
    r_target = 0.5 * (np.hypot(*mesh.vertices[a].T) + np.hypot(*mesh.vertices[b].T))
    m = mid[pos]
    mid[pos] = m * (r_target / np.hypot(m[:, 0], m[:, 1]))[:, None]
    vertices = np.vstack([mesh.vertices, mid])
    m01, m12, m20 = (nv + inv[:, 0], nv + inv[:, 1], nv + inv[:, 2])
    t0, t1, t2 = tri[:, 0], tri[:, 1], tri[:, 2]
    children = np.concatenate([
        np.column_stack([t0, m01, m20]),
        np.column_stack([m01, t1, m12]),
        np.column_stack([m20, m12, t2]),
        np.column_stack([m01, m12, m20]),
    ])
    regions = np.tile(mesh.regions, 4)
    emid = nv + pos
    edges = np.concatenate([np.column_stack([a, emid]), np.column_stack([emid, b])])
    tags = list(mesh.edge_tags) + list(mesh.edge_tags)
    # keep edges of one tag contiguous in the original order
    order = np.argsort(np.concatenate([np.arange(len(a)) * 2, np.arange(len(a)) * 2 + 1]),
                       kind="stable")
    edges = edges[order]
    tags = [tags[i] for i in order]
    return Mesh(vertices, children, regions, edges, tags)


def _row_lookup(table, rows):
    """Indices of ``rows`` within the lexicographically sorted unique ``table``."""
    view = lambda x: np.ascontiguousarray(x).view([("a", x.dtype), ("b", x.dtype)]).ravel()
    t = view(table)
    r = view(rows)
    idx = np.searchsorted(t, r)
    if np.any(idx >= len(t)) or np.any(t[np.minimum(idx, len(t) - 1)] != r):
        raise MeshError("tagged edge is not an edge of the triangulation")
    return idx


# ---------------------------------------------------------------------------
# crack meshes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CrackMesh:
    """Mesh with the nodes of selected interfaces duplicated.

    ``inner[k]`` lists the interior-copy node ids of interface ``k`` (these are
    the original ids of the base mesh, ordered by angle) and ``outer[k]`` the
    paired exterior copies (new ids appended after the base vertices).
    """

    base: Mesh
    mesh: Mesh
    interface_ids: tuple
    inner: dict = field(default_factory=dict)
    outer: dict = field(default_factory=dict)

    @property
    def pairing(self):
        """Dictionary interior-copy id -> exterior-copy id over all duplicated interfaces."""
        out = {}
        for k in self.interface_ids:
            out.update(zip(self.inner[k].tolist(), self.outer[k].tolist()))
        return out

    def jump(self, values, k):
        """Dirichlet jump (interior minus exterior copy) of nodal ``values`` on interface ``k``."""
        values = np.asarray(values)
        return values[self.inner[k]] - values[self.outer[k]]


def _closed_loop(edges, n_nodes_hint):
    nodes, counts = np.unique(edges, return_counts=True)
    if len(nodes) == 0 or np.any(counts != 2):
        return False
    adj = {}
    for a, b in edges.tolist():
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    start = nodes[0]
    prev, cur, steps = None, start, 0
    while True:
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        prev, cur = cur, nxt
        steps += 1
        if cur == start:
            break
        if steps > len(nodes):
            return False
    return steps == len(nodes)


def _inside_polygon(points, poly):
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    crosses = ((y0 > y) != (y1 > y))
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(crosses & (x < xint), axis=1) % 2 == 1


def make_crack_mesh(mesh, interface_id):
    """Duplicate the nodes of one or several interfaces.

    Parameters
    ----------
    mesh : Mesh
    interface_id : int or sequence of int
        Interface numbers ``k`` of the ``IFACE:k`` tags to split.

    Returns
    -------
    CrackMesh
        Triangles inside the interface polyline keep the original nodes,
        triangles outside reference the new exterior copies.
    """
    ids = (interface_id,) if np.isscalar(interface_id) else tuple(interface_id)
    vertices = [mesh.vertices]
    tris = mesh.triangles.copy()
    nv = mesh.n_vertices
    edges = [mesh.edges]
    tags = list(mesh.edge_tags)
    inner, outer = {}, {}
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    for k in ids:
        tag = interface_tag(k)
        e = mesh.tag_edges(tag)
        if len(e) == 0:
            raise MeshError(f"interface {k} not present in mesh")
        if not _closed_loop(e, None):
            raise MeshError(f"interface {k} is an open polyline")
        nodes = mesh.tag_nodes(tag)
        copies = np.arange(nv, nv + len(nodes))
        nv += len(nodes)
        vertices.append(mesh.vertices[nodes])
        poly = mesh.vertices[nodes]
        is_out = ~_inside_polygon(centroids, poly)
        remap = np.arange(nv)
        remap[nodes] = copies
        sel = is_out & np.isin(tris, nodes).any(axis=1)
        tris[sel] = remap[tris[sel]]
        edges.append(remap[e])
        tags.extend([tag] * len(e))
        inner[k] = nodes
        outer[k] = copies
    split = Mesh(np.concatenate(vertices), tris, mesh.regions, np.concatenate(edges), tags)
    return CrackMesh(base=mesh, mesh=split, interface_ids=ids, inner=inner, outer=outer)


def collapse(crack):
    """Merge paired nodes of a :class:`CrackMesh`, recovering the base mesh."""
    back = np.arange(crack.mesh.n_vertices)
    for k in crack.interface_ids:
        back[crack.outer[k]] = crack.inner[k]
    n = crack.base.n_vertices
    return Mesh(crack.mesh.vertices[:n], back[crack.mesh.triangles], crack.mesh.regions,
                crack.base.edges, crack.base.edge_tags)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def _valid_tag(tag):
    if tag in ("OUTER", "DIR", "NEU"):
        return True
    return tag.startswith("IFACE:") and tag[6:].isdigit()


def save_mesh(mesh, sink):
    """Write ``mesh`` in the ``siemesh 1`` text format to a path or text stream."""
    lines = [f"siemesh {_FORMAT_VERSION}"]
    lines += [f"v {x:.17g} {y:.17g}" for x, y in mesh.vertices.tolist()]
    lines += [f"t {a} {b} {c} {r}" for (a, b, c), r in
              zip(mesh.triangles.tolist(), mesh.regions.tolist())]
    lines += [f"e {a} {b} {t}" for (a, b), t in zip(mesh.edges.tolist(), mesh.edge_tags)]
    text = "\n".join(lines) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sink.write(text)


def load_mesh(source):
    """Read a mesh written by :func:`save_mesh`.

    Raises
    ------
    MeshError
        On an unsupported version header, malformed lines (with line number),
        unknown edge tags or out-of-range vertex indices.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    rows = text.splitlines()
    if not rows:
        raise MeshError("empty mesh file")
    head = rows[0].split()
    if len(head) != 2 or head[0] != "siemesh":
        raise MeshError("line 1: missing 'siemesh <version>' header")
    if head[1] != str(_FORMAT_VERSION):
        raise MeshError(f"unsupported mesh format version {head[1]!r}")
    verts, tris, regs, edges, tags = [], [], [], [], []
    for lineno, line in enumerate(rows[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        try:
            kind = parts[0]
            if kind == "v" and len(parts) == 3:
                verts.append((float(parts[1]), float(parts[2])))
            elif kind == "t" and len(parts) == 5:
                tris.append(tuple(int(p) for p in parts[1:4]))
                regs.append(int(parts[4]))
            elif kind == "e" and len(parts) == 4:
                if not _valid_tag(parts[3]):
                    raise MeshError(f"line {lineno}: unknown edge tag {parts[3]!r}")
                edges.append((int(parts[1]), int(parts[2])))
                tags.append(parts[3])
            else:
                raise MeshError(f"line {lineno}: malformed line {line!r}")
        except ValueError as exc:
            if isinstance(exc, MeshError):
                raise
            raise MeshError(f"line {lineno}: malformed line {line!r}") from None
    nv = len(verts)
    for arr in (tris, edges):
        if arr and (min(min(x) for x in arr) < 0 or max(max(x) for x in arr) >= nv):
            raise MeshError("vertex index out of range")
    return Mesh(np.array(verts, dtype=float).reshape(-1, 2),
                np.array(tris, dtype=np.int64).reshape(-1, 3),
                np.array(regs, dtype=np.int64),
                np.array(edges, dtype=np.int64).reshape(-1, 2), tags)


def mesh_to_text(mesh):
    buf = io.StringIO()
    save_mesh(mesh, buf)
    return buf.getvalue()
