"""Finite weighted measures on the line: atoms plus a piecewise-constant density.

This is the weight class behind every other module: exponential-moment
bounds depend on the measure only through its maximal atom and its
concentration function, and the Monte Carlo estimators integrate paths
against it.  Measures are immutable; all derived objects (splits,
restrictions, sums) are new instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import yaml

from .errors import MeasureConfigError

__all__ = [
    "Atom",
    "DensityPiece",
    "WeightedMeasure",
    "counterexample_measure",
    "measure_from_dict",
    "load_measure",
    "parse_measure_text",
]


def _require_finite(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise MeasureConfigError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise MeasureConfigError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Atom:
    """Point mass `mass` at `location`; mass must be strictly positive."""

    location: float
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "location", _require_finite(self.location, "atom location"))
        object.__setattr__(self, "mass", _require_finite(self.mass, "atom mass"))
        if self.mass <= 0.0:
            raise MeasureConfigError(f"atom mass must be > 0, got {self.mass}")


@dataclass(frozen=True)
class DensityPiece:
    """Constant density `value` on the half-open interval [lo, hi)."""

    lo: float
    hi: float
    value: float

    def __post_init__(self):
        object.__setattr__(self, "lo", _require_finite(self.lo, "density piece lo"))
        object.__setattr__(self, "hi", _require_finite(self.hi, "density piece hi"))
        object.__setattr__(self, "value", _require_finite(self.value, "density piece value"))
        if not self.lo < self.hi:
            raise MeasureConfigError(
                f"density piece needs lo < hi, got [{self.lo}, {self.hi})"
            )
        if self.value < 0.0:
            raise MeasureConfigError(f"density piece value must be >= 0, got {self.value}")

    @property
    def mass(self):
        return self.value * (self.hi - self.lo)


@dataclass(frozen=True)
class WeightedMeasure:
    """Finite nonnegative measure: a finite set of atoms plus a step density.

    Atoms are kept sorted by location with distinct locations; density
    pieces are sorted with pairwise-disjoint interiors.  The empty measure
    (no atoms, no pieces) is valid and behaves as zero everywhere.
    """

    atoms: tuple[Atom, ...] = ()
    density: tuple[DensityPiece, ...] = ()

    def __post_init__(self):
        atoms = tuple(sorted(self.atoms, key=lambda a: a.location))
        for prev, cur in zip(atoms, atoms[1:]):
            if prev.location == cur.location:
                raise MeasureConfigError(
                    f"duplicate atom location {cur.location}; merge masses instead"
                )
        pieces = tuple(sorted(self.density, key=lambda p: (p.lo, p.hi)))
        for prev, cur in zip(pieces, pieces[1:]):
            if cur.lo < prev.hi:
                raise MeasureConfigError(
                    f"density pieces overlap: [{prev.lo}, {prev.hi}) and [{cur.lo}, {cur.hi})"
                )
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "density", pieces)

    # -- basic queries ------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.total_mass() == 0.0

    def total_mass(self) -> float:
        return math.fsum(
            [a.mass for a in self.atoms] + [p.mass for p in self.density]
        )

    def max_atom(self) -> float:
        """Largest single atom mass; 0 for a purely continuous (or empty) measure."""
        return max((a.mass for a in self.atoms), default=0.0)

    def interval_mass(self, a: float, b: float) -> float:
        """Mass of the closed interval [a, b]; requires a <= b.

        Atoms at either endpoint count in full; density contributes
        value * overlap length per piece.
        """
        a = _require_finite(a, "interval endpoint a")
        b = _require_finite(b, "interval endpoint b")
        if a > b:
            raise ValueError(f"interval_mass needs a <= b, got [{a}, {b}]")
        parts = [at.mass for at in self.atoms if a <= at.location <= b]
        for p in self.density:
            overlap = min(b, p.hi) - max(a, p.lo)
            if overlap > 0.0:
                parts.append(p.value * overlap)
        return math.fsum(parts)

    def breakpoints(self) -> tuple[float, ...]:
        """Sorted distinct atom locations and density piece edges."""
        pts = {a.location for a in self.atoms}
        for p in self.density:
            pts.add(p.lo)
            pts.add(p.hi)
        return tuple(sorted(pts))

    def support_bounds(self) -> tuple[float, float] | None:
        """(min, max) of the support, or None for the zero measure."""
        pts = self.breakpoints()
        if not pts:
            return None
        return pts[0], pts[-1]

    def density_sup(self) -> float:
        return max((p.value for p in self.density), default=0.0)

    # -- concentration ------------------------------------------------

    def concentration(self, gamma: float) -> float:
        """sup over centers x of the mass of the closed window [x-gamma, x+gamma].

        Exact for this measure class: the window mass, as a function of the
        center, is piecewise linear between the points where a window edge
        meets an atom or a density breakpoint, and it jumps upward only at
        such points, so the sup is attained by a window with one edge pinned
        on a breakpoint.  Atom membership in a pinned window is tested by
        distance to the pinned edge, which keeps edge ties (gap exactly
        2 gamma) exact instead of losing them to rounding.
        """
        gamma = _require_finite(gamma, "gamma")
        if gamma <= 0.0:
            raise ValueError(f"concentration needs gamma > 0, got {gamma}")
        width = 2.0 * gamma
        best = 0.0
        for b in self.breakpoints():
            for left_pinned in (True, False):
                total = 0.0
                for at in self.atoms:
                    d = at.location - b if left_pinned else b - at.location
                    if 0.0 <= d <= width:
                        total += at.mass
                lo, hi = (b, b + width) if left_pinned else (b - width, b)
                for p in self.density:
                    overlap = min(hi, p.hi) - max(lo, p.lo)
                    if overlap > 0.0:
                        total += p.value * overlap
                best = max(best, total)
        return best

    # -- decompositions -----------------------------------------------

    def restrict(self, x: float, radius: float) -> tuple["WeightedMeasure", "WeightedMeasure"]:
        """Split into (inside, outside) of the closed ball [x-radius, x+radius].

        Atoms on the boundary go inside.  inside + outside recomposes the
        measure up to the half-open density convention at the cut points.
        """
        x = _require_finite(x, "center x")
        radius = _require_finite(radius, "radius")
        if radius <= 0.0:
            raise ValueError(f"restrict needs radius > 0, got {radius}")
        lo, hi = x - radius, x + radius
        in_atoms, out_atoms = [], []
        for a in self.atoms:
            (in_atoms if lo <= a.location <= hi else out_atoms).append(a)
        in_pieces, out_pieces = [], []
        for p in self.density:
            cut_lo, cut_hi = max(p.lo, lo), min(p.hi, hi)
            if cut_lo < cut_hi:
                in_pieces.append(DensityPiece(cut_lo, cut_hi, p.value))
                if p.lo < cut_lo:
                    out_pieces.append(DensityPiece(p.lo, cut_lo, p.value))
                if cut_hi < p.hi:
                    out_pieces.append(DensityPiece(cut_hi, p.hi, p.value))
            else:
                out_pieces.append(p)
        return (
            WeightedMeasure(tuple(in_atoms), tuple(in_pieces)),
            WeightedMeasure(tuple(out_atoms), tuple(out_pieces)),
        )

    def split_atoms_vs_diffuse(
        self, chi: float
    ) -> tuple["WeightedMeasure", "WeightedMeasure", float]:
        """Split into (atomic part with masses >= chi, remainder, gamma).

        gamma is the largest power of two for which the remainder's
        concentration within any window of half-width gamma stays below chi,
        so the remainder qualifies as diffuse at scale (chi, gamma).
        Returns gamma = 1.0 when the remainder is zero.
        """
        chi = _require_finite(chi, "chi")
        if chi <= 0.0:
            raise ValueError(f"split needs chi > 0, got {chi}")
        big = tuple(a for a in self.atoms if a.mass >= chi)
        small = tuple(a for a in self.atoms if a.mass < chi)
        diffuse = WeightedMeasure(small, self.density)
        atomic = WeightedMeasure(big, ())
        if diffuse.is_zero:
            return atomic, diffuse, 1.0
        gamma = 1.0
        while diffuse.concentration(gamma) >= chi:
            gamma /= 2.0
            if gamma < 2.0 ** -40:
                raise ValueError(
                    "no dyadic window half-width above 2^-40 makes the "
                    f"remainder diffuse at level chi={chi}"
                )
        return atomic, diffuse, gamma

    # -- algebra -------------------------------------------------------

    def scaled(self, factor: float) -> "WeightedMeasure":
        """Measure with every mass multiplied by factor >= 0."""
        factor = _require_finite(factor, "scale factor")
        if factor < 0.0:
            raise ValueError(f"scale factor must be >= 0, got {factor}")
        if factor == 0.0:
            return WeightedMeasure()
        return WeightedMeasure(
            tuple(Atom(a.location, a.mass * factor) for a in self.atoms),
            tuple(DensityPiece(p.lo, p.hi, p.value * factor) for p in self.density),
        )

    def __add__(self, other: "WeightedMeasure") -> "WeightedMeasure":
        if not isinstance(other, WeightedMeasure):
            return NotImplemented
        masses: dict[float, float] = {}
        for a in (*self.atoms, *other.atoms):
            masses[a.location] = masses.get(a.location, 0.0) + a.mass
        atoms = tuple(Atom(loc, m) for loc, m in sorted(masses.items()))
        pieces = _merge_densities((*self.density, *other.density))
        return WeightedMeasure(atoms, pieces)

    def as_dict(self) -> dict:
        """Plain-dict form, inverse of measure_from_dict."""
        return {
            "atoms": [{"loc": a.location, "mass": a.mass} for a in self.atoms],
            "density": [
                {"lo": p.lo, "hi": p.hi, "value": p.value} for p in self.density
            ],
        }

    def describe(self) -> str:
        """Short human-readable summary used in report headers."""
        bits = [f"{len(self.atoms)} atoms", f"{len(self.density)} density pieces"]
        return f"measure({', '.join(bits)}, total={self.total_mass():g})"


def _merge_densities(pieces: Sequence[DensityPiece]) -> tuple[DensityPiece, ...]:
    """Sum possibly-overlapping step densities into disjoint sorted pieces."""
    if not pieces:
        return ()
    edges = sorted({e for p in pieces for e in (p.lo, p.hi)})
    out: list[DensityPiece] = []
    for lo, hi in zip(edges, edges[1:]):
        value = math.fsum(p.value for p in pieces if p.lo <= lo and p.hi >= hi)
        if value <= 0.0:
            continue
        if out and out[-1].hi == lo and out[-1].value == value:
            out[-1] = DensityPiece(out[-1].lo, hi, value)
        else:
            out.append(DensityPiece(lo, hi, value))
    return tuple(out)


def counterexample_measure(K: int) -> WeightedMeasure:
    """Pairs of unit atoms at k^2 and k^2 + 2^-k for k = 1..K.

    Every atom has mass 1, yet windows of half-width >= 2^-K around the
    pair locations hold mass 2, so window concentration overshoots the
    maximal atom at every fixed scale.  Used by the counterexample CLI
    subcommand and the matching experiment.
    """
    if not isinstance(K, int) or isinstance(K, bool) or K < 1:
        raise MeasureConfigError(f"counterexample K must be an integer >= 1, got {K!r}")
    atoms = []
    for k in range(1, K + 1):
        base = float(k * k)
        atoms.append(Atom(base, 1.0))
        atoms.append(Atom(base + 2.0 ** -k, 1.0))
    return WeightedMeasure(tuple(atoms), ())


def measure_from_dict(cfg: dict) -> WeightedMeasure:
    """Build a measure from a config mapping.

    Recognized keys: `atoms` (list of {loc, mass}), `density` (list of
    {lo, hi, value}), or the generator directive `counterexample: {K: n}`.
    The directive excludes the explicit lists.
    """
    if not isinstance(cfg, dict):
        raise MeasureConfigError(f"measure config must be a mapping, got {type(cfg).__name__}")
    unknown = set(cfg) - {"atoms", "density", "counterexample"}
    if unknown:
        raise MeasureConfigError(f"unknown measure config keys: {sorted(unknown)}")
    if "counterexample" in cfg:
        if "atoms" in cfg or "density" in cfg:
            raise MeasureConfigError(
                "counterexample directive cannot be combined with atoms/density"
            )
        directive = cfg["counterexample"]
        if not isinstance(directive, dict) or set(directive) != {"K"}:
            raise MeasureConfigError("counterexample directive must be {'K': <int>}")
        return counterexample_measure(directive["K"])
    atoms = []
    for i, entry in enumerate(_config_list(cfg.get("atoms", ()), "atoms")):
        if not isinstance(entry, dict) or set(entry) != {"loc", "mass"}:
            raise MeasureConfigError(f"atoms[{i}] must be {{loc, mass}}, got {entry!r}")
        try:
            atoms.append(Atom(entry["loc"], entry["mass"]))
        except MeasureConfigError as exc:
            raise MeasureConfigError(f"atoms[{i}]: {exc}") from None
    pieces = []
    for i, entry in enumerate(_config_list(cfg.get("density", ()), "density")):
        if not isinstance(entry, dict) or set(entry) != {"lo", "hi", "value"}:
            raise MeasureConfigError(f"density[{i}] must be {{lo, hi, value}}, got {entry!r}")
        try:
            pieces.append(DensityPiece(entry["lo"], entry["hi"], entry["value"]))
        except MeasureConfigError as exc:
            raise MeasureConfigError(f"density[{i}]: {exc}") from None
    return WeightedMeasure(tuple(atoms), tuple(pieces))


def _config_list(value, name) -> Iterable:
    if value is None:
        return ()
    if not isinstance(value, (list, tuple)):
        raise MeasureConfigError(f"{name} must be a list, got {type(value).__name__}")
    return value


def load_measure(path: str) -> WeightedMeasure:
    """Load a measure config from a YAML (or JSON) file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise MeasureConfigError(f"cannot parse {path}: {exc}") from None
    if cfg is None:
        raise MeasureConfigError(f"{path} is empty")
    return measure_from_dict(cfg)


def parse_measure_text(text: str) -> WeightedMeasure:
    """Parse an inline YAML/JSON measure config string (CLI --measure)."""
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise MeasureConfigError(f"cannot parse measure config: {exc}") from None
    return measure_from_dict(cfg)
