"""Finite metric measure spaces and dyadic systems built over them.

Everything lives on a finite point set: integrals are mass-weighted sums,
balls and cubes are arrays of point indices.  Two constructions are provided:
the standard (and one-third shifted) dyadic lattices on a uniform 1D grid, and
a greedy-net Christ-type construction for an arbitrary finite quasi-metric
space.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

# relative slack used when comparing distances against radii
_RTOL = 1e-12


class GridSpace:
    """A finite set of points with a quasi-metric and positive point masses.

    Distances are either given as an explicit table or derived from 1D
    coordinates.  The quasi-triangle constant ``kappa_d`` and the doubling
    constant ``c_mu`` are measured exhaustively the first time they are
    requested (the scans are cubic / quadratic in the number of points).
    """

    def __init__(self, coords=None, dist=None, mass=None, c_d: float = 2.0,
                 labels: Optional[Sequence[str]] = None, validate: bool = True):
        if coords is None and dist is None:
            raise ValueError("either coordinates or a distance table is required")
        self.coords = None if coords is None else np.asarray(coords, dtype=float).ravel()
        if dist is not None:
            dist = np.asarray(dist, dtype=float)
            if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
                raise ValueError("distance table must be square")
        self._dist = dist
        self._explicit_dist = dist is not None
        n = len(self.coords) if self.coords is not None else dist.shape[0]
        if self.coords is not None and dist is not None and dist.shape[0] != n:
            raise ValueError("coordinates and distance table disagree in size")
        self.n = n
        if mass is None:
            mass = np.full(n, 1.0 / n)
        self.mass = np.asarray(mass, dtype=float).ravel()
        if self.mass.shape != (n,):
            raise ValueError("mass must have one entry per point")
        self.c_d = float(c_d)
        self.labels = list(labels) if labels is not None else None
        self._kappa = None
        self._c_mu = None
        if validate:
            self._validate()

    # -- basic geometry ---------------------------------------------------
    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            x = self.coords
            self._dist = np.abs(x[:, None] - x[None, :])
        return self._dist

    def distances_from(self, i: int) -> np.ndarray:
        if self._dist is None:
            return np.abs(self.coords - self.coords[i])
        return self._dist[i]

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def measure(self, idx) -> float:
        return float(self.mass[idx].sum())

    def ball(self, center: int, radius: float, closed: bool = False) -> np.ndarray:
        """Indices of the open (or closed) ball around ``center``."""
        d = self.distances_from(center)
        if closed:
            return np.flatnonzero(d <= radius * (1 + _RTOL))
        return np.flatnonzero(d < radius)

    def diameter(self, idx=None) -> float:
        if idx is None:
            idx = np.arange(self.n)
        idx = np.asarray(idx)
        if len(idx) <= 1:
            return 0.0
        if self._dist is None:
            c = self.coords[idx]
            return float(c.max() - c.min())
        return float(self._dist[np.ix_(idx, idx)].max())

    def min_positive_distance(self) -> float:
        if self.n <= 1:
            return 0.0
        if self._dist is None:
            s = np.sort(self.coords)
            gaps = np.diff(s)
            gaps = gaps[gaps > 0]
            return float(gaps.min()) if gaps.size else 0.0
        d = self._dist[np.triu_indices(self.n, 1)]
        d = d[d > 0]
        return float(d.min()) if d.size else 0.0

    def _validate(self):
        if np.any(~np.isfinite(self.mass)) or np.any(self.mass <= 0):
            raise ValueError("all point masses must be positive and finite")
        if self._dist is not None:
            d = self._dist
            if np.any(~np.isfinite(d)) or np.any(d < 0):
                raise ValueError("distances must be finite and nonnegative")
            if not np.allclose(d, d.T, rtol=0, atol=0):
                raise ValueError("distance table must be symmetric")
            if np.any(np.diag(d) != 0):
                raise ValueError("dist(x, x) must vanish")
            off = d[~np.eye(self.n, dtype=bool)]
            if np.any(off <= 0):
                raise ValueError("distinct points must have positive distance")
        elif self.coords is not None and len(np.unique(self.coords)) != self.n:
            raise ValueError("coordinates must be distinct")

    # -- measured structural constants -------------------------------------
    @property
    def kappa_d(self) -> float:
        """Exhaustive max of d(x,y) / (d(x,z) + d(z,y)) over all triples."""
        if self._kappa is None:
            d = self.dist
            best = 1.0
            for z in range(self.n):
                denom = d[:, z][:, None] + d[z, :][None, :]
                with np.errstate(divide="ignore", invalid="ignore"):
                    r = np.where(denom > 0, d / np.where(denom > 0, denom, 1.0), 0.0)
                best = max(best, float(r.max()))
            self._kappa = best
        return self._kappa

    @property
    def c_mu(self) -> float:
        """Exhaustive doubling constant over radii in the pairwise-distance set."""
        if self._c_mu is None:
            d = self.dist
            radii = np.unique(d[d > 0])
            best = 1.0
            for x in range(self.n):
                order = np.argsort(d[x], kind="stable")
                ds = d[x][order]
                cm = np.concatenate([[0.0], np.cumsum(self.mass[order])])
                small = cm[np.searchsorted(ds, radii, side="left")]
                big = cm[np.searchsorted(ds, 2 * radii, side="left")]
                best = max(best, float((big / small).max()))
            self._c_mu = best
        return self._c_mu

    # -- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        out = {"points": self.labels if self.coords is None else self.coords.tolist(),
               "mass": self.mass.tolist(), "c_d": self.c_d}
        if self._explicit_dist:
            out["dist"] = self.dist.tolist()
            out["kappa_d"] = self.kappa_d
        else:
            out["kappa_d"] = 1.0
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpace":
        pts = obj.get("points")
        dist = obj.get("dist")
        coords = None
        labels = None
        if pts is not None and len(pts) and all(isinstance(p, (int, float)) for p in pts):
            coords = pts
        elif pts is not None:
            labels = [str(p) for p in pts]
        if coords is None and dist is None:
            raise ValueError("space needs numeric points or a distance table")
        sp = cls(coords=coords if dist is None else None, dist=dist, mass=obj.get("mass"),
                 c_d=obj.get("c_d", 2.0), labels=labels)
        if dist is not None and coords is not None:
            sp.coords = np.asarray(coords, dtype=float)
        if "kappa_d" in obj and dist is not None:
            # the declared constant must not understate the measured one
            if obj["kappa_d"] < sp.kappa_d - 1e-12:
                raise ValueError("declared kappa_d %g is below the measured %g"
                                 % (obj["kappa_d"], sp.kappa_d))
        return sp


def uniform_grid(n: int, c_d: float = 2.0) -> GridSpace:
    """Uniform grid {i/n} on [0, 1) with equal masses 1/n."""
    return GridSpace(coords=np.arange(n) / n, mass=np.full(n, 1.0 / n), c_d=c_d)


def random_space(n: int, seed: int, kind: str = "line", c_d: float = 2.0) -> GridSpace:
    """Seeded random finite metric spaces used for testing.

    ``line``: random points of [0, 1] with random masses;
    ``plane``: random points of the unit square with Euclidean distance;
    ``snowflake``: a line space with distance |x-y|^{1/2};
    ``quasi``: squared line distance (a genuine quasi-metric, kappa_d = 2).
    """
    rng = np.random.default_rng(seed)
    mass = rng.uniform(0.5, 1.5, size=n)
    mass /= mass.sum()
    if kind == "line":
        x = np.sort(rng.uniform(0, 1, size=n))
        return GridSpace(coords=x, mass=mass, c_d=c_d)
    if kind == "plane":
        p = rng.uniform(0, 1, size=(n, 2))
        d = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1))
        return GridSpace(dist=d, mass=mass, c_d=c_d)
    x = np.sort(rng.uniform(0, 1, size=n))
    d = np.abs(x[:, None] - x[None, :])
    if kind == "snowflake":
        d = np.sqrt(d)
    elif kind == "quasi":
        d = d ** 2
    else:
        raise ValueError("unknown space kind %r" % kind)
    sp = GridSpace(dist=d, mass=mass, c_d=c_d)
    sp.coords = x
    return sp


@dataclass
class Cube:
    id: int
    system: int
    generation: int
    center: int
    side_scale: float
    members: np.ndarray
    parent: Optional[int] = None
    children: List[int] = field(default_factory=list)

    def __len__(self):
        return len(self.members)


class DyadicSystem:
    """A nested family of partitions of a GridSpace.

    Cubes are stored in a flat list; ``generations[i]`` lists the cube ids of
    generation ``k_min + i``.
    """

    def __init__(self, space: GridSpace, cubes: List[Cube], generations: List[List[int]],
                 delta: float, k_min: int, seed: Optional[int] = None, system_id: int = 0,
                 label: str = ""):
        self.space = space
        self.cubes = cubes
        self.generations = generations
        self.delta = float(delta)
        self.k_min = int(k_min)
        self.k_max = int(k_min + len(generations) - 1)
        self.seed = seed
        self.system_id = system_id
        self.label = label
        self._measure_sandwich()

    def __len__(self):
        return len(self.cubes)

    @property
    def root(self) -> Cube:
        return self.cubes[self.generations[0][0]]

    def generation(self, k: int) -> List[Cube]:
        return [self.cubes[i] for i in self.generations[k - self.k_min]]

    def _measure_sandwich(self):
        sp = self.space
        big, small = 0.0, np.inf
        for c in self.cubes:
            d = sp.distances_from(c.center)
            inside = np.zeros(sp.n, dtype=bool)
            inside[c.members] = True
            big = max(big, float(d[inside].max()) / c.side_scale)
            if not inside.all():
                small = min(small, float(d[~inside].min()) / c.side_scale)
        if not np.isfinite(small):
            small = max(big, 1.0)
        if big < small:
            # only singletons / whole-space cubes: any C0 >= c0 is achieved
            big = small
        self.C0 = big
        self.c0 = small

    def dilate(self, cube: Cube, alpha: float) -> np.ndarray:
        """Closed ball of radius alpha*C0*delta^k around the cube center."""
        if alpha < 1:
            raise ValueError("dilation factor must be >= 1")
        return self.space.ball(cube.center, alpha * self.C0 * cube.side_scale, closed=True)

    def descendants(self, cube_id: int, include_self: bool = True) -> List[int]:
        out = [cube_id] if include_self else []
        stack = list(self.cubes[cube_id].children)
        while stack:
            c = stack.pop()
            out.append(c)
            stack.extend(self.cubes[c].children)
        return sorted(out)

    def ancestors(self, cube_id: int) -> List[int]:
        out = []
        p = self.cubes[cube_id].parent
        while p is not None:
            out.append(p)
            p = self.cubes[p].parent
        return out

    def finest_cube_of(self, point: int) -> Cube:
        for cid in self.generations[-1]:
            if point in self.cubes[cid].members:
                return self.cubes[cid]
        raise KeyError(point)

    def point_cube_table(self) -> np.ndarray:
        """table[g, x] = id of the generation-g cube containing point x."""
        t = np.full((len(self.generations), self.space.n), -1, dtype=int)
        for g, ids in enumerate(self.generations):
            for cid in ids:
                t[g, self.cubes[cid].members] = cid
        return t

    def check_invariants(self) -> List[str]:
        """Exhaustively check partition, nesting and the ball sandwich.

        Returns a list of human-readable violations (empty when valid).
        """
        sp = self.space
        errs = []
        for g, ids in enumerate(self.generations):
            cnt = np.zeros(sp.n, dtype=int)
            for cid in ids:
                cnt[self.cubes[cid].members] += 1
            if np.any(cnt != 1):
                errs.append("generation %d is not a partition" % (g + self.k_min))
        table = self.point_cube_table()
        for c in self.cubes:
            g = c.generation - self.k_min
            # nesting: every member lies in one coarser cube per generation
            for l in range(g):
                owners = np.unique(table[l, c.members])
                if len(owners) != 1:
                    errs.append("cube %d straddles generation %d" % (c.id, l + self.k_min))
            if c.children:
                kid = np.sort(np.concatenate([self.cubes[k].members for k in c.children]))
                if not np.array_equal(kid, np.sort(c.members)):
                    errs.append("children of cube %d do not partition it" % c.id)
            d = sp.distances_from(c.center)
            inner = np.flatnonzero(d < self.c0 * c.side_scale * (1 - _RTOL))
            if not np.isin(inner, c.members).all():
                errs.append("inner ball of cube %d not contained" % c.id)
            if np.any(d[c.members] > self.C0 * c.side_scale * (1 + _RTOL)):
                errs.append("cube %d exceeds its outer ball" % c.id)
        return errs

    def to_json(self) -> dict:
        return {
            "delta": self.delta, "c0": self.c0, "C0": self.C0, "seed": self.seed,
            "k_min": self.k_min, "k_max": self.k_max, "label": self.label,
            "cubes": [{"id": c.id, "generation": c.generation, "center": int(c.center),
                       "members": [int(i) for i in c.members], "parent": c.parent}
                      for c in self.cubes],
        }


def _assemble(space, member_lists, centers, scales, gens, parents, delta, k_min,
              seed=None, system_id=0, label="") -> DyadicSystem:
    cubes = []
    generations: List[List[int]] = [[] for _ in range(max(gens) - k_min + 1)]
    for i, (mem, z, s, k, p) in enumerate(zip(member_lists, centers, scales, gens, parents)):
        cubes.append(Cube(i, system_id, k, int(z), float(s), np.asarray(sorted(mem), dtype=int), p))
        generations[k - k_min].append(i)
    for c in cubes:
        if c.parent is not None:
            cubes[c.parent].children.append(c.id)
    return DyadicSystem(space, cubes, generations, delta, k_min, seed, system_id, label)


def build_euclidean_grids(n_points: int, depth: int, n_shifts: int = 1,
                          space: Optional[GridSpace] = None) -> List[DyadicSystem]:
    """Standard dyadic lattice on the uniform grid, plus two shifted lattices.

    Generation k has side 2^-k.  The shifted lattice t (t=1,2) has left
    endpoints 2^-k (j + (-1)^k t/3), wrapped periodically onto [0, 1).  Point
    assignment uses exact integer arithmetic.
    """
    if n_points < 1 or n_points & (n_points - 1):
        raise ValueError("n_points must be a power of two")
    if depth < 0 or 2 ** depth > n_points:
        raise ValueError("depth must satisfy 0 <= depth and 2^depth <= n_points")
    if n_shifts not in (1, 3):
        raise ValueError("n_shifts must be 1 or 3")
    if space is None:
        space = uniform_grid(n_points)
    i = np.arange(n_points)
    systems = []
    for t in range(n_shifts):
        mems, centers, scales, gens, parents = [], [], [], [], []
        prev = None  # map: cell index at previous generation -> cube id
        prev_cell = None
        for k in range(depth + 1):
            sign = 1 if k % 2 == 0 else -1
            num = 3 * i * 2 ** k - sign * t * n_points
            cell = np.floor_divide(num, 3 * n_points) % (2 ** k)
            ids = {}
            for c in np.unique(cell):
                mem = i[cell == c]
                # center: the member closest to the (unwrapped) midpoint of the cell
                lo = (c + sign * t / 3.0) / 2 ** k
                mid = (lo + 0.5 / 2 ** k) % 1.0
                x = mem / n_points
                gap = np.abs(x - mid)
                gap = np.minimum(gap, 1 - gap)
                z = mem[np.argmin(gap)]
                parent = None
                if prev is not None:
                    owners = np.unique(prev_cell[mem])
                    assert len(owners) == 1
                    parent = prev[owners[0]]
                ids[c] = len(mems)
                mems.append(mem)
                centers.append(z)
                scales.append(2.0 ** -k)
                gens.append(k)
                parents.append(parent)
            prev, prev_cell = ids, cell
        label = "standard" if t == 0 else "shift%d" % t
        systems.append(_assemble(space, mems, centers, scales, gens, parents, 0.5, 0,
                                 system_id=t, label=label))
    return systems


def build_hk_system(space: GridSpace, delta: float = 0.5, seed: int = 0,
                    system_id: int = 0) -> DyadicSystem:
    """Greedy-net dyadic system on an arbitrary finite quasi-metric space.

    Centers of generation k form a maximal delta^k-separated net chosen in a
    seed-permuted order and containing all centers of generation k-1.  Each
    new center hangs from its nearest coarser center (smaller id on ties; a
    center that persists is its own parent), and a cube is the set of finest
    points whose ancestor chain passes through its center.  This makes the
    partition and nesting properties hold by construction; the achieved c0,
    C0 are measured afterwards.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n = space.n
    if n == 1:
        return _assemble(space, [[0]], [0], [1.0], [0], [None], delta, 0, seed, system_id, "hk")
    diam = space.diameter()
    dmin = space.min_positive_distance()
    # coarsest generation: delta^k > diam, so the net is a single point
    k_min = int(np.floor(np.log(diam) / np.log(delta))) - 1
    while delta ** (k_min + 1) > diam:
        k_min += 1
    # finest generation: delta^k < dmin, so every point is a center
    k_max = int(np.ceil(np.log(dmin) / np.log(delta)))
    while delta ** k_max >= dmin:
        k_max += 1
    order = np.random.default_rng(seed).permutation(n)

    nets = []
    centers: List[int] = []
    is_center = np.zeros(n, dtype=bool)
    for k in range(k_min, k_max + 1):
        r = delta ** k
        if centers:
            dmin_to_net = np.min(np.stack([space.distances_from(c) for c in centers]), axis=0)
        else:
            dmin_to_net = np.full(n, np.inf)
        for x in order:
            if is_center[x] or dmin_to_net[x] < r:
                continue
            centers.append(int(x))
            is_center[x] = True
            dmin_to_net = np.minimum(dmin_to_net, space.distances_from(x))
        nets.append(list(centers))

    # parent links between consecutive nets (by point id)
    parent_of = []  # per generation (after the first): dict center -> parent center
    for g in range(1, len(nets)):
        coarse = np.array(sorted(nets[g - 1]))
        cset = set(nets[g - 1])
        pm = {}
        for z in nets[g]:
            if z in cset:
                pm[z] = z
            else:
                d = space.distances_from(z)[coarse]
                pm[z] = int(coarse[np.flatnonzero(d == d.min())[0]])
        parent_of.append(pm)

    # ancestor of each point at each generation
    G = len(nets)
    anc = np.zeros((G, n), dtype=int)
    anc[G - 1] = np.arange(n)
    for g in range(G - 2, -1, -1):
        pm = parent_of[g]
        anc[g] = [pm[z] for z in anc[g + 1]]

    mems, ctrs, scales, gens, parents = [], [], [], [], []
    prev_ids = None
    for g in range(G):
        ids = {}
        for z in sorted(nets[g]):
            mem = np.flatnonzero(anc[g] == z)
            parent = None if prev_ids is None else prev_ids[parent_of[g - 1][z]]
            ids[z] = len(mems)
            mems.append(mem)
            ctrs.append(z)
            scales.append(delta ** (k_min + g))
            gens.append(k_min + g)
            parents.append(parent)
        prev_ids = ids
    return _assemble(space, mems, ctrs, scales, gens, parents, delta, k_min, seed,
                     system_id, "hk")


@dataclass
class CoveringReport:
    gamma: float
    per_ball: List[tuple]
    failures: List[tuple]


def build_adjacent_systems(space: GridSpace, delta: float = 0.5, m: int = 3, seed: int = 0,
                           radii: Optional[Sequence[float]] = None, scale_gap: int = 3,
                           max_tries: int = 8):
    """m greedy-net systems from derived seeds plus an empirical covering report.

    For each point s and sampled radius rho, the best gamma(s, rho) = diam(Q)/rho
    over cubes Q (any system) containing B(s, rho) is recorded.  The default
    radius sample covers the pairwise-distance set up to delta^(k_min +
    scale_gap), i.e. balls at least ``scale_gap`` generations below the root
    scale; a ball only contained in root cubes is a covering failure.  The last
    system is re-drawn (up to ``max_tries`` derived seeds) while failures
    remain.
    """
    if m < 1:
        raise ValueError("need at least one system")
    if radii is None and space.n > 1:
        probe = build_hk_system(space, delta, 0)
        d = space.dist
        cap = delta ** (probe.k_min + scale_gap)
        radii = np.unique(d[(d > 0) & (d <= cap)])
        if len(radii) > 32:
            radii = np.unique(np.quantile(radii, np.linspace(0, 1, 32)))
    rng = np.random.default_rng(seed)
    systems: List[DyadicSystem] = []
    # Systems are picked one at a time; when the balls left uncovered by the
    # systems chosen so far remain uncovered, a few further derived seeds are
    # tried and the best candidate is kept.  The search is deterministic.
    for j in range(m):
        if j < m - 1:
            systems.append(build_hk_system(space, delta, int(rng.integers(0, 2 ** 31 - 1)),
                                           system_id=j))
            continue
        best = None
        for _ in range(max_tries):
            cand = build_hk_system(space, delta, int(rng.integers(0, 2 ** 31 - 1)), system_id=j)
            rep = covering_report(space, systems + [cand], radii)
            if best is None or len(rep.failures) < best[0]:
                best = (len(rep.failures), cand)
            if best[0] == 0:
                break
        systems.append(best[1])
    return systems, covering_report(space, systems, radii)


def covering_report(space: GridSpace, systems: List[DyadicSystem],
                    radii: Optional[Sequence[float]] = None) -> CoveringReport:
    n = space.n
    if radii is None:
        d = space.dist
        radii = np.unique(d[d > 0])
    tables = [s.point_cube_table() for s in systems]
    diams = [np.array([space.diameter(c.members) for c in s.cubes]) for s in systems]
    radii = np.asarray(radii, dtype=float)
    per_ball, failures = [], []
    gamma = 0.0
    for s in range(n):
        ds = space.distances_from(s)
        inside = radii <= ds.max()  # balls ds < rho that are not the whole space
        best = np.full(len(radii), np.inf)
        for tab, dm in zip(tables, diams):
            # B(s, rho) lies in the generation-g cube of s iff rho <= R[g], the
            # distance from s to the nearest point outside that cube; R is
            # non-increasing in g, so the finest such generation is a count.
            R = np.where(tab != tab[:, s:s + 1], ds[None, :], np.inf).min(axis=1)
            lo = (R[None, :] >= radii[:, None]).sum(axis=1) - 1
            ok = lo >= 1  # lo == 0: only the root holds it
            cand = np.full(len(radii), np.inf)
            cand[ok] = dm[tab[lo[ok], s]] / radii[ok]
            best = np.minimum(best, cand)
        for rho, b in zip(radii[inside], best[inside]):
            if not np.isfinite(b):
                failures.append((s, float(rho)))
                continue
            per_ball.append((s, float(rho), float(b)))
            gamma = max(gamma, float(b))
    return CoveringReport(gamma, per_ball, failures)


def covering_partition(system: DyadicSystem, support, alpha: float) -> List[Cube]:
    """Partition of the space into cubes whose alpha-dilations contain ``support``.

    Starting from the root, a cube is split into its children whenever every
    child's dilation still contains the support; otherwise it is kept.
    """
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    support = np.unique(np.asarray(support, dtype=int))
    if support.size == 0:
        raise ValueError("support must be nonempty")
    out = []
    stack = [system.root.id]
    while stack:
        cid = stack.pop()
        c = system.cubes[cid]
        kids = c.children
        if kids and all(np.isin(support, system.dilate(system.cubes[k], alpha)).all()
                        for k in kids):
            stack.extend(kids)
        else:
            out.append(c)
    return sorted(out, key=lambda c: c.id)


def interval_cover_check(systems: List[DyadicSystem], max_len_frac: float = 0.5):
    """Shifted-lattice covering oracle on a uniform grid.

    For every discrete interval I = {a, ..., a+L-1} (cyclic indices excluded)
    with |I| = L/n <= max_len_frac, finds the smallest cube containing I over
    all systems and returns the worst ratio |Q|/|I| together with any interval
    not contained in a non-root cube.
    """
    n = systems[0].space.n
    worst = 0.0
    missing = []
    fams = []
    for s in systems:
        for c in s.cubes:
            fams.append((set(c.members.tolist()), c.side_scale))
    for L in range(1, int(max_len_frac * n) + 1):
        for a in range(0, n - L + 1):
            I = set(range(a, a + L))
            best = np.inf
            for mem, side in fams:
                if side < L / n:
                    continue
                if I <= mem:
                    best = min(best, side)
            if not np.isfinite(best):
                missing.append((a, L))
            else:
                worst = max(worst, best / (L / n))
    return worst, missing


def system_from_json(space: GridSpace, obj: dict, system_id: int = 0) -> DyadicSystem:
    cubes = obj["cubes"]
    k_min = min(c["generation"] for c in cubes)
    delta = obj["delta"]
    return _assemble(space, [c["members"] for c in cubes], [c["center"] for c in cubes],
                     [delta ** c["generation"] for c in cubes], [c["generation"] for c in cubes],
                     [c["parent"] for c in cubes], delta, k_min, obj.get("seed"), system_id,
                     obj.get("label", ""))


def load_space(path) -> GridSpace:
    with open(path) as fh:
        return GridSpace.from_json(json.load(fh))


class CubeFamily:
    """An explicit finite family of cubes, possibly drawn from several systems.

    This is the object all weight constants and maximal functions take their
    sups over.  It keeps a dense membership matrix (cubes x points), the
    cube centers and outer radii C0*delta^k (for dilations), and lazily the
    containment relation between cubes.
    """

    def __init__(self, space: GridSpace, systems: Sequence[DyadicSystem],
                 max_generation: Optional[int] = None, cube_ids=None, name: str = "",
                 unique: bool = False):
        self.space = space
        self.systems = list(systems)
        entries = []
        seen = set()
        for s_idx, sys_ in enumerate(self.systems):
            ids = range(len(sys_.cubes)) if cube_ids is None else cube_ids[s_idx]
            for cid in ids:
                c = sys_.cubes[cid]
                if max_generation is not None and c.generation > max_generation:
                    continue
                if unique:
                    # repeated member sets (persisting cubes, shared cubes of
                    # several systems) are kept once, at their coarsest copy
                    key = tuple(np.sort(c.members).tolist())
                    if key in seen:
                        continue
                    seen.add(key)
                entries.append((s_idx, c))
        self.refs = [(s, c.id) for s, c in entries]
        self.cubes = [c for _, c in entries]
        n = space.n
        self.members = [c.members for c in self.cubes]
        self.indicator = np.zeros((len(self.cubes), n), dtype=bool)
        for i, c in enumerate(self.cubes):
            self.indicator[i, c.members] = True
        self.centers = np.array([c.center for c in self.cubes], dtype=int)
        self.radii = np.array([self.systems[s].C0 * c.side_scale for s, c in entries])
        self.generation = np.array([c.generation for c in self.cubes], dtype=int)
        self.name = name or "+".join(s.label or "sys" for s in self.systems)
        self._contain = None
        self._dil = {}

    def __len__(self):
        return len(self.cubes)

    @property
    def size(self) -> np.ndarray:
        return self.indicator.sum(axis=1)

    def measures(self, w=None) -> np.ndarray:
        m = self.space.mass if w is None else self.space.mass * w
        return self.indicator @ m

    @property
    def contains(self) -> np.ndarray:
        """contains[P, Q] is True when cube P is a subset of cube Q."""
        if self._contain is None:
            I = self.indicator.astype(np.int32)
            inter = I @ I.T
            self._contain = inter == self.size[:, None]
        return self._contain

    def dilated_indicator(self, alpha: float) -> np.ndarray:
        """Membership matrix of the closed balls alpha*Q (centre z, radius alpha*C0*delta^k)."""
        key = float(alpha)
        if key not in self._dil:
            out = np.zeros_like(self.indicator)
            for i, (z, r) in enumerate(zip(self.centers, self.radii)):
                out[i] = self.space.distances_from(z) <= alpha * r * (1 + _RTOL)
            self._dil[key] = out
        return self._dil[key]

    def descriptor(self) -> dict:
        return {"name": self.name, "n_cubes": len(self), "systems": [s.label for s in self.systems]}


def full_family(system_or_systems, max_generation: Optional[int] = None) -> CubeFamily:
    systems = system_or_systems if isinstance(system_or_systems, (list, tuple)) else [system_or_systems]
    return CubeFamily(systems[0].space, systems, max_generation)
