"""Sparse families of cubes and the four sparseness certificates.

A family is stored by its dyadic cores.  An *enlarged* family stands for the
boxes ``3Q`` clipped to the unit cube, one per core.  Dyadic containment is
kept as a forest in a :class:`networkx.DiGraph` whose edges run from a cube
to its S-children (maximal members strictly inside it).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import ceil

import networkx as nx
import numpy as np

from cbdom.dyadic.lattice import DyadicCube, DyadicLattice, GridBox
from cbdom.errors import DomainError

log = logging.getLogger(__name__)

KINDS = ("eps", "weak", "dyadic_carleson", "carleson")

_BISECT_STEPS = 30


@dataclass(frozen=True)
class FamilyCheck:
    """Best constant of one sparseness definition, with its witness.

    For ``weak`` the witness sets ``E_Q`` (flat cell indices) are kept in
    ``sets`` so the certificate can be re-verified cellwise.
    """

    kind: str
    value: float
    witness: DyadicCube | GridBox | None = None
    sets: dict[DyadicCube, np.ndarray] | None = None
    target: float | None = None
    target_met: bool | None = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "value": self.value}
        if isinstance(self.witness, DyadicCube):
            out["witness"] = {"level": self.witness.level,
                              "index": list(self.witness.index)}
        elif isinstance(self.witness, GridBox):
            out["witness"] = {"lo": list(self.witness.lo), "hi": list(self.witness.hi)}
        if self.target is not None:
            out["target"] = self.target
            out["target_met"] = self.target_met
        return out


@dataclass(eq=False)
class SparseFamily:
    lattice: DyadicLattice
    cubes: list[DyadicCube]
    enlarged: bool = False
    scales: dict[DyadicCube, float] | None = None
    certificates: dict[str, FamilyCheck] = field(default_factory=dict)

    def __post_init__(self):
        self.lattice = self.lattice.full()
        for Q in self.cubes:
            self.lattice.check_cube(Q)
        self.cubes = sorted(set(self.cubes))

    def __len__(self) -> int:
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __contains__(self, Q: DyadicCube) -> bool:
        return Q in self.graph

    def region(self, Q: DyadicCube) -> GridBox:
        """The member set of core ``Q``: Q itself, or 3Q clipped."""
        if self.enlarged:
            return self.lattice.enlarge(Q)
        return Q.box(self.lattice.max_level)

    def regions(self) -> list[GridBox]:
        return [self.region(Q) for Q in self.cubes]

    # ---- containment forest ----

    @cached_property
    def graph(self) -> nx.DiGraph:
        G = nx.DiGraph()
        members = set(self.cubes)
        for Q in self.cubes:
            G.add_node(Q, cells=Q.box(self.lattice.max_level).n_cells)
        for Q in self.cubes:
            for level in range(Q.level - 1, -1, -1):
                R = Q.ancestor(level)
                if R in members:
                    G.add_edge(R, Q)
                    break
        return G

    def children(self, Q: DyadicCube) -> list[DyadicCube]:
        return sorted(self.graph.successors(Q))

    def tops(self) -> list[DyadicCube]:
        return sorted(Q for Q in self.graph if self.graph.in_degree(Q) == 0)

    def is_simple(self) -> bool:
        """Every member has at most one S-child."""
        return all(deg <= 1 for _, deg in self.graph.out_degree())

    def subtree_cells(self) -> dict[DyadicCube, int]:
        """``sum_{R in S, R inside Q} cells(R)`` for every member Q (Q included)."""
        G = self.graph
        total: dict[DyadicCube, int] = {}
        for Q in reversed(list(nx.topological_sort(G))):
            total[Q] = G.nodes[Q]["cells"] + sum(total[R] for R in G.successors(Q))
        return total

    # ---- certificates ----

    def check(self, kind: str, target: float | None = None) -> FamilyCheck:
        return check_family(self, kind, target=target)

    def certify(self, kinds: tuple[str, ...] = KINDS,
                eta_target: float | None = None) -> dict[str, FamilyCheck]:
        for kind in kinds:
            self.certificates[kind] = self.check(
                kind, target=eta_target if kind == "weak" else None)
        return self.certificates

    # ---- conversions between the definitions ----

    def weak_from_eps(self) -> FamilyCheck:
        """Weak sparseness with ``E_Q = Q minus its S-children`` (dyadic cores)."""
        n = self.lattice.max_level
        sets, worst, witness = {}, 1.0, None
        for Q in self.cubes:
            mask = np.zeros(self.lattice.shape, dtype=bool)
            mask[Q.box(n).slices] = True
            for R in self.graph.successors(Q):
                mask[R.box(n).slices] = False
            cells = np.flatnonzero(mask.ravel())
            sets[Q] = cells
            ratio = cells.size / Q.box(n).n_cells
            if ratio < worst or witness is None:
                worst, witness = ratio, Q
        return FamilyCheck("weak", float(worst), witness, sets)

    def enlarge(self) -> SparseFamily:
        return SparseFamily(self.lattice, list(self.cubes), enlarged=True, scales=self.scales)

    def conversion_bounds(self) -> dict:
        """Constants implied by one definition for the others.

        ``eps`` gives weak ``1 - eps``; weak ``eta`` gives dyadic ``1/eta``;
        dyadic ``lambda < 2`` gives ``eps = lambda - 1``; dyadic ``lambda``
        brackets ``Lambda`` in ``[lambda, 2^N lambda]``; the enlargement of a
        weakly ``eta``-sparse family is ``eta / 3^N``-sparse.
        """
        N = self.lattice.dim
        eps = self.check("eps").value
        eta = self.check("weak").value
        lam = self.check("dyadic_carleson").value
        return {
            "weak_from_eps": 1.0 - eps,
            "dyadic_carleson_from_weak": 1.0 / eta if eta > 0 else float("inf"),
            "eps_from_dyadic_carleson": lam - 1.0 if lam < 2.0 else None,
            "carleson_window": [lam, 2.0 ** N * lam],
            "weak_of_enlargement": eta / 3.0 ** N,
        }

    def to_dict(self) -> dict:
        return {
            "enlarged": self.enlarged,
            "size": len(self.cubes),
            "cubes": [{"level": Q.level, "index": list(Q.index)} for Q in self.cubes],
            "certificates": {k: c.to_dict() for k, c in sorted(self.certificates.items())},
        }


# ---- check_family ----

def check_family(family: SparseFamily | list[DyadicCube], kind: str,
                 lattice: DyadicLattice | None = None,
                 target: float | None = None) -> FamilyCheck:
    """Optimal constant of ``kind`` for a family, computed exhaustively.

    ``eps`` and ``dyadic_carleson`` are dyadic notions and use the cores of an
    enlarged family; ``weak`` and ``carleson`` use the member sets.
    """
    if not isinstance(family, SparseFamily):
        if lattice is None:
            raise DomainError("a bare cube list needs its lattice")
        family = SparseFamily(lattice, list(family))
    if kind not in KINDS:
        raise DomainError(f"unknown family kind {kind!r}; expected one of {KINDS}")
    if not family.cubes:
        return FamilyCheck(kind, 0.0 if kind in ("eps", "dyadic_carleson", "carleson") else 1.0)
    if kind == "eps":
        return _eps_sparse(family)
    if kind == "dyadic_carleson":
        return _dyadic_carleson(family)
    if kind == "carleson":
        return _carleson(family)
    return _weak_sparse(family, target)


def _eps_sparse(family: SparseFamily) -> FamilyCheck:
    G = family.graph
    best, witness = -1.0, None
    for Q in family.cubes:
        ratio = sum(G.nodes[R]["cells"] for R in G.successors(Q)) / G.nodes[Q]["cells"]
        if ratio > best:
            best, witness = ratio, Q
    return FamilyCheck("eps", float(best), witness)


def _dyadic_carleson(family: SparseFamily) -> FamilyCheck:
    G = family.graph
    totals = family.subtree_cells()
    best, witness = 0.0, None
    for Q in family.cubes:
        ratio = totals[Q] / G.nodes[Q]["cells"]
        if ratio > best:
            best, witness = ratio, Q
    return FamilyCheck("dyadic_carleson", float(best), witness)


def _window_sums(A: np.ndarray, s: int) -> np.ndarray:
    """Sums of ``A`` over every ``s``-sided window inside the grid."""
    cs = A.cumsum(axis=0)
    cs = np.concatenate([np.zeros((1,) + A.shape[1:]), cs], axis=0)
    out = cs[s:] - cs[:-s]
    if A.ndim == 2:
        cs = out.cumsum(axis=1)
        cs = np.concatenate([np.zeros((out.shape[0], 1)), cs], axis=1)
        out = cs[:, s:] - cs[:, :-s]
    return out


def _carleson(family: SparseFamily) -> FamilyCheck:
    """``sup_Q |Q|^-1 sum_{R in S, l(R) <= l(Q)} |R cap Q|`` over aligned cubes.

    The sup runs over every cell-aligned cube inside the grid whose side is a
    member side or a dyadic side, so the value is a lower bound for the sup
    over all cubes.
    """
    lat = family.lattice
    n = lat.n_side
    regions = family.regions()
    sides = sorted({b.side for b in regions if b.side <= n} | {1 << j for j in range(lat.max_level + 1)})
    order = sorted(range(len(regions)), key=lambda i: regions[i].side)
    counts = np.zeros(lat.shape)
    best, witness, k = 0.0, None, 0
    for s in sides:
        while k < len(order) and regions[order[k]].side <= s:
            counts[regions[order[k]].slices] += 1.0
            k += 1
        sums = _window_sums(counts, s) / float(s ** lat.dim)
        i = int(np.argmax(sums))
        if sums.flat[i] > best:
            lo = np.unravel_index(i, sums.shape)
            best = float(sums.flat[i])
            witness = GridBox(tuple(int(a) for a in lo), tuple(int(a) + s for a in lo))
    return FamilyCheck("carleson", best, witness)


def _claim_orders(family: SparseFamily) -> list[tuple[DyadicCube, int, np.ndarray]]:
    """Members smallest first, each with its cells ordered core first."""
    lat = family.lattice
    out = []
    for Q in family.cubes:
        box = family.region(Q)
        core = lat.cell_indices(Q)
        rest = np.setdiff1d(lat.cell_indices(box), core, assume_unique=True)
        out.append((Q, box.n_cells, np.concatenate([core, rest])))
    out.sort(key=lambda item: (item[1], -item[0].level, item[0].index))
    return out


def _greedy_claim(orders, n_cells: int, eta: float) -> dict[DyadicCube, np.ndarray] | None:
    taken = np.zeros(n_cells, dtype=bool)
    sets = {}
    for Q, size, cells in orders:
        need = ceil(eta * size - 1e-12)
        free = cells[~taken[cells]]
        if free.size < need:
            return None
        sets[Q] = free[:need]
        taken[sets[Q]] = True
    return sets


def _weak_sparse(family: SparseFamily, target: float | None) -> FamilyCheck:
    """Best weak ``eta`` from greedy claiming, smallest members first.

    Each member claims ``ceil(eta |Q|)`` free cells, preferring its dyadic
    core; the largest feasible ``eta`` is found by bisection and ``target``
    is tried explicitly.
    """
    orders = _claim_orders(family)
    n = family.lattice.n_cells
    best_sets = _greedy_claim(orders, n, 0.0)
    lo, hi = 0.0, 1.0
    full = _greedy_claim(orders, n, 1.0)
    if full is not None:
        best_sets, lo = full, 1.0
    else:
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            sets = _greedy_claim(orders, n, mid)
            if sets is None:
                hi = mid
            else:
                lo, best_sets = mid, sets
    target_met = None
    if target is not None:
        sets = _greedy_claim(orders, n, target)
        target_met = sets is not None
        if sets is not None and target > lo:
            best_sets = sets
    sizes = {Q: size for Q, size, _ in orders}
    witness = min(best_sets, key=lambda Q: (best_sets[Q].size / sizes[Q], Q))
    value = best_sets[witness].size / sizes[witness]
    return FamilyCheck("weak", float(value), witness, best_sets, target, target_met)


def verify_weak_sets(family: SparseFamily, check: FamilyCheck) -> bool:
    """Re-verify a weak certificate cellwise: sets inside members, disjoint, large enough."""
    if check.sets is None:
        return False
    lat = family.lattice
    seen = np.zeros(lat.n_cells, dtype=bool)
    for Q in family.cubes:
        cells = check.sets.get(Q)
        if cells is None:
            return False
        box = family.region(Q)
        allowed = np.zeros(lat.n_cells, dtype=bool)
        allowed[lat.cell_indices(box)] = True
        if not np.all(allowed[cells]) or np.any(seen[cells]):
            return False
        if cells.size < check.value * box.n_cells - 1e-9:
            return False
        seen[cells] = True
    return True


def maximal_cubes(cubes) -> list[DyadicCube]:
    """Members not strictly contained in another member."""
    members = set(cubes)
    out = []
    for Q in sorted(members):
        if not any(Q.ancestor(level) in members for level in range(Q.level)):
            out.append(Q)
    return out


def make_simple_sparse(lattice: DyadicLattice, depth: int) -> SparseFamily:
    """The chain ``[0,1)^N > [0,1/2)^N > ... > [0,2^-depth)^N``."""
    if not 0 <= depth <= lattice.max_level:
        raise DomainError(f"chain depth {depth} outside [0, {lattice.max_level}]")
    cubes = [DyadicCube(level, (0,) * lattice.dim) for level in range(depth + 1)]
    return SparseFamily(lattice, cubes)
