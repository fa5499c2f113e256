"""Verification suites run by ``fractal-tops verify`` and the test-suite.

Each suite returns a list of :class:`Check` records; a suite passes when all
of its checks do.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .addresses import InfiniteAddress, PriorityOrder
from .attractor import Raster, attractor_raster
from .config import DEFAULTS
from .errors import NotCommonRatio, NotTranslationFamily
from .ifs_core import Ifs, apply, compose_word, invert, uniform_ratio
from .tiling import (
    PartialTiling,
    blowup_region,
    blowup_viewport,
    classify_transition,
    classify_transition_exact,
    osc_new_cylinder_count,
    partial_tiling,
    verify_nesting_exact,
    verify_nesting_onebar,
)
from .tops import TopField, brute_force_top_field, resolvable_depth, check_reversible, compute_top_field, top_words, top_words_1d_exact


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}" + (f": {self.detail}" if self.detail else "")


class Session:
    """Caches the reference raster, top fields and tilings of one system."""

    def __init__(self, ifs: Ifs, config: dict | None = None, order: PriorityOrder | None = None):
        self.ifs = ifs
        self.cfg = dict(DEFAULTS, **(config or {}))
        if order is None and self.cfg.get("priority_order"):
            order = PriorityOrder(tuple(self.cfg["priority_order"]))
        self.order = order
        self._fields: dict[int, TopField] = {}
        self._tilings: dict[tuple[str, int], PartialTiling] = {}

    @cached_property
    def base(self) -> Raster:
        res = self.cfg["resolution_1d"] if self.ifs.dim == 1 else self.cfg["resolution"]
        return attractor_raster(self.ifs, res, n_points=self.cfg["n_points"], seed=self.cfg["seed"])

    def field(self, k: int) -> TopField:
        if k not in self._fields:
            self._fields[k] = compute_top_field(self.ifs, k, self.base, self.order, workers=self.cfg["workers"])
        return self._fields[k]

    def top_words(self, k: int):
        return top_words(self.field(k), ifs=self.ifs)

    def tiling(self, i: InfiniteAddress, k: int) -> PartialTiling:
        key = (str(i), k)
        if key not in self._tilings:
            f = self.field(k) if k > 0 else None
            self._tilings[key] = partial_tiling(self.ifs, i, k, self.base, field=f, order=self.order)
        return self._tilings[key]

    @cached_property
    def resolvable(self) -> int:
        return resolvable_depth(self.ifs, self.base)

    def address(self, text: str) -> InfiniteAddress:
        return InfiniteAddress.parse(text, self.ifs.m)


def suite_ifs(s: Session) -> list[Check]:
    ifs = s.ifs
    rng = np.random.default_rng(s.cfg["seed"])
    pts = rng.uniform(-1, 1, (100, 2))
    out = []
    err = max(float(np.abs(apply(invert(f), apply(f, pts)) - pts).max()) for f in ifs.maps)
    out.append(Check("invert round-trip", err < 1e-12, f"max error {err:.2e}"))
    words = [tuple(rng.integers(1, ifs.m + 1, n)) for n in (1, 2, 3, 5)]
    hom = all(compose_word(ifs, u + v).allclose(compose_word(ifs, u) @ compose_word(ifs, v)) for u in words for v in words)
    out.append(Check("compose_word is a homomorphism", hom))
    if ifs.is_similitude_system():
        ok = all(abs(compose_word(ifs, w).scale - math.prod(ifs.scales[j - 1] for j in w)) < 1e-9 for w in words)
        out.append(Check("scale of a composite is the product of scales", ok))
    return out


def suite_tops(s: Session, depth: int | None = None) -> list[Check]:
    ifs = s.ifs
    depth = depth or s.cfg["depth"]
    out = []
    for n in range(1, min(depth, 4) + 1):
        same = np.array_equal(s.field(n).keys, brute_force_top_field(ifs, n, s.base, s.order).keys)
        out.append(Check(f"paint order equals brute force, n={n}", same))
    if ifs.dim == 1:
        exact = {n: top_words_1d_exact(ifs, n, s.order) for n in range(1, s.cfg["exact_depth"] + 1)}
        # below one cell per cylinder the raster cannot resolve the words
        for n in range(1, min(s.cfg["exact_depth"], s.resolvable) + 1):
            got = s.top_words(n).words
            out.append(Check(f"raster tops equal exact tops, n={n}", got == exact[n].words, f"{len(got)} vs {len(exact[n])} words"))
        for n in range(2, s.cfg["exact_depth"] + 1):
            w = exact[n]
            trunc = w.left_truncations() <= exact[n - 1].words and w.right_truncations() <= exact[n - 1].words
            out.append(Check(f"truncation lemma (exact), n={n}", trunc))
            out.append(Check(f"shift invariance (exact), n={n - 1}", w.left_truncations() == exact[n - 1].words))
    else:
        for n in range(2, depth + 1):
            w = s.top_words(n)
            prev = set(s.field(n - 1).counts())
            ok = w.left_truncations() <= prev and w.right_truncations() <= prev
            out.append(Check(f"truncation lemma (raster), n={n}", ok))
    return out


def suite_theorem5(s: Session, addresses=("(1)",), depth: int | None = None) -> list[Check]:
    depth = depth or s.cfg["depth"]
    out = []
    for text in addresses:
        i = s.address(text)
        for k in range(min(depth, s.resolvable - 1)):
            r = classify_transition(
                s.ifs, i, k, s.tiling(i, k), s.tiling(i, k + 1), threshold=s.cfg["containment_threshold"], strict=False
            )
            detail = r.summary()
            if r.violations:
                detail += "; " + "; ".join(r.violations[:4])
                if r.missing_extensions:
                    detail += f"; parents without an i_{k + 1}-extension: {r.missing_extensions}"
            out.append(Check(f"children/new tiles i={i} k={k}->{k + 1}", r.ok, detail))
        if s.ifs.dim == 1:
            for k in range(s.cfg["exact_depth"]):
                r = classify_transition_exact(s.ifs, i, k, s.order)
                out.append(Check(f"exact children/new tiles i={i} k={k}->{k + 1}", r.ok, "; ".join(r.violations[:4])))
    return out


def suite_theorem6(s: Session, depth: int | None = None) -> list[Check]:
    depth = min(depth or s.cfg["depth"], s.resolvable - 1)
    i = InfiniteAddress.constant(1, s.ifs.m)
    tilings = [s.tiling(i, k) for k in range(depth + 1)]
    flags = verify_nesting_onebar(s.ifs, depth, tilings, s.cfg["containment_threshold"])
    out = [Check(f"level {k} tiles reappear at level {k + 1}", ok) for k, ok in enumerate(flags)]
    if s.ifs.dim == 1:
        for k, ok in enumerate(verify_nesting_exact(s.ifs, s.cfg["exact_depth"], s.order)):
            out.append(Check(f"exact nesting {k}->{k + 1}", ok))
    return out


def suite_osc(s: Session, depth: int = 6) -> list[Check]:
    ifs = s.ifs
    if uniform_ratio(ifs) is None:
        return [Check("new cylinder count", False, "system has no single ratio")]
    out = []
    i = InfiniteAddress.constant(1, ifs.m)
    for n in range(depth + 1):
        new, nested = osc_new_cylinder_count(ifs, i, n)
        want = ifs.m**n * (ifs.m - 1)
        out.append(Check(f"new cylinders at level {n + 1}", new == want and nested, f"{new} (expected {want})"))
    return out


def suite_theorem4(s: Session, depth: int = 10) -> list[Check]:
    from .attractor import hausdorff_estimate
    from .rifs import blowup_decomposition, minkowski_raster, offsets_by_orbit

    ifs = s.ifs
    try:
        blowup_decomposition(ifs, 0)
    except (NotCommonRatio, NotTranslationFamily) as e:
        return [Check("A(1-bar|n) = A + D_n", False, f"not applicable: {e}")]
    i = InfiniteAddress.constant(1, ifs.m)
    # dust-like 2D attractors need forward pushing; 1D bases are exact
    method = "pull" if ifs.dim == 1 else "push"
    out = []
    for n in range(depth + 1):
        dec = blowup_decomposition(ifs, n)
        same = dec.offsets == offsets_by_orbit(dec.rifs, n)
        vp = blowup_viewport(ifs, i, n, s.base)
        a = blowup_region(ifs, i, n, s.base, viewport=vp, method=method)
        b = minkowski_raster(s.base, dec.offsets, vp, method=method)
        d = hausdorff_estimate(a, b) / vp.cell_size
        ok = same and d <= s.cfg["hausdorff_cells"]
        out.append(Check(f"A(1-bar|{n}) = A + D_{n}", ok, f"|D|={len(dec.offsets)}, distance {d:.3f} cells"))
    return out


def suite_reversible(s: Session, addresses=("(1)", "(2)", "(12)", "(21)"), depth: int | None = None) -> list[Check]:
    depth = depth or (s.cfg["reversible_depth"] if s.ifs.dim == 1 else s.cfg["depth"])
    if s.ifs.dim == 1:
        sets = {n: top_words_1d_exact(s.ifs, n, s.order) for n in range(1, depth + 1)}
    else:
        sets = {n: s.top_words(n) for n in range(1, depth + 1)}
    out = []
    for text in addresses:
        flags = check_reversible(s.address(text), depth, sets)
        bad = [n + 1 for n, f in enumerate(flags) if not f]
        out.append(Check(f"{text} reversible to depth {depth}", not bad, f"fails at depths {bad}" if bad else ""))
    return out


def suite_rifs(cfg: dict | None = None) -> list[Check]:
    from .rifs import (
        RHO,
        Window,
        example1,
        example2,
        fib_projection,
        forward_orbit,
        in_golden_strip,
        strip_lattice_points,
        verify_invariance_window,
    )

    cfg = dict(DEFAULTS, **(cfg or {}))
    out = []
    r = cfg["orbit_radius"]
    e1 = example1()
    o1 = forward_orbit(e1, [0, 1], Window.radius(r, 1))
    out.append(Check(f"Example 1 orbit is all integers in [-{r}, {r}]", {p[0] for p in o1.points} == set(range(-r, r + 1))))
    out.append(Check("Example 1 windowed invariance", verify_invariance_window(e1, o1).ok))
    e2 = example2()
    R = cfg["fib_radius"]
    w = Window.radius(R)
    o2 = forward_orbit(e2, [(0, 0), (0, 1)], w)
    out.append(Check("Example 2 orbit lies in the strip", all(in_golden_strip(p) for p in o2.points)))
    out.append(Check("Example 2 orbit is every strip lattice point", o2.point_set == strip_lattice_points(w)))
    out.append(Check("Example 2 windowed invariance", verify_invariance_window(e2, o2).ok))
    g = fib_projection(o2)
    lengths, counts = g.generic()
    ok = len(lengths) == 2 and abs(lengths[1] / lengths[0] - (1 + RHO)) < 1e-9
    out.append(Check("Example 2 projection: two recurring gap lengths in ratio 1+rho", ok, g.summary()))
    if len(counts) == 2:
        q = counts[1] / counts[0]
        out.append(Check("Example 2 long/short count ratio within 10% of 1/rho", abs(q * RHO - 1) < 0.1, f"{q:.4f}"))
    return out


SUITES = ("ifs", "tops", "theorem5", "theorem6", "osc", "theorem4", "reversible", "rifs")


def run_suite(name: str, s: Session | None, depth: int | None = None, addresses=None) -> list[Check]:
    if name == "rifs":
        return suite_rifs(s.cfg if s else None)
    if s is None:
        raise ValueError(f"suite {name} needs an IFS")
    if name == "ifs":
        return suite_ifs(s)
    if name == "tops":
        return suite_tops(s, depth)
    if name == "theorem5":
        return suite_theorem5(s, addresses or ("(1)",), depth)
    if name == "theorem6":
        return suite_theorem6(s, depth)
    if name == "osc":
        return suite_osc(s, depth or 6)
    if name == "theorem4":
        return suite_theorem4(s, depth if depth is not None else 10)
    if name == "reversible":
        return suite_reversible(s, addresses or ("(1)", "(2)", "(12)", "(21)"), depth)
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
