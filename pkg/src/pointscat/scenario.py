"""Experiment configurations: dimension, background, density, strength.

Units are hbar = 2m = 1, so H0 = -Delta (+ omega^2 |x|^2) and energies carry
inverse length squared. Scenarios are immutable value objects; validation
returns violations as data rather than raising.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass(frozen=True)
class Background:
    kind: str  # "Free" or "Harmonic"
    omega: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("Free", "Harmonic"):
            raise ValueError(f"unknown background kind {self.kind!r}")
        if self.kind == "Harmonic":
            if self.omega is None or self.omega <= 0:
                raise ValueError("Harmonic background requires omega > 0")
        elif self.omega is not None:
            raise ValueError("Free background takes no omega")


def spectral_bottom(bg: Background, d: int) -> float:
    """Infimum of the background spectrum: 0 free, d*omega for the trap."""
    if bg.kind == "Free":
        return 0.0
    return d * bg.omega


@dataclass(frozen=True)
class DensitySpec:
    """Normalized limit density U: uniform ball, uniform box, or piecewise
    constant on disjoint axis-aligned cells.

    cells are given as (lo, hi) corner pairs; raw cell values are rescaled at
    construction so the density integrates to 1.
    """
    shape: str
    radius: Optional[float] = None
    halfwidths: Optional[tuple] = None
    cells: Optional[tuple] = None  # tuple of (lo, hi) corner pairs
    values: Optional[tuple] = None  # normalized at construction

    def __post_init__(self):
        if self.shape == "UniformBall":
            if self.radius is None or self.radius <= 0:
                raise ValueError("UniformBall requires radius > 0")
        elif self.shape == "UniformBox":
            if self.halfwidths is None or any(w <= 0 for w in self.halfwidths):
                raise ValueError("UniformBox requires positive halfwidths")
            object.__setattr__(self, "halfwidths", tuple(float(w) for w in self.halfwidths))
        elif self.shape == "PiecewiseConstant":
            if not self.cells or not self.values or len(self.cells) != len(self.values):
                raise ValueError("PiecewiseConstant requires matching cells and values")
            cells = tuple(
                (tuple(float(v) for v in lo), tuple(float(v) for v in hi))
                for lo, hi in self.cells
            )
            for lo, hi in cells:
                if len(lo) != len(hi) or any(h <= l for l, h in zip(lo, hi)):
                    raise ValueError(f"degenerate cell {(lo, hi)}")
            for i, (lo_i, hi_i) in enumerate(cells):
                for lo_j, hi_j in cells[:i]:
                    if all(lo_i[k] < hi_j[k] and lo_j[k] < hi_i[k] for k in range(len(lo_i))):
                        raise ValueError("PiecewiseConstant cells must be disjoint")
            vals = np.asarray(self.values, dtype=float)
            if np.any(vals < 0) or not np.any(vals > 0):
                raise ValueError("cell values must be non-negative with positive mass")
            vols = np.array([np.prod(np.subtract(hi, lo)) for lo, hi in cells])
            vals = vals / float(np.dot(vals, vols))
            object.__setattr__(self, "cells", cells)
            object.__setattr__(self, "values", tuple(vals))
        else:
            raise ValueError(f"unknown density shape {self.shape!r}")

    @property
    def dim(self) -> Optional[int]:
        # ball leaves the dimension to the scenario; boxes/cells pin it
        if self.shape == "UniformBox":
            return len(self.halfwidths)
        if self.shape == "PiecewiseConstant":
            return len(self.cells[0][0])
        return None

    def support_bbox(self, d: int) -> tuple:
        """Axis-aligned (lo, hi) corners enclosing supp U."""
        if self.shape == "UniformBall":
            r = self.radius
            return (np.full(d, -r), np.full(d, r))
        if self.shape == "UniformBox":
            w = np.asarray(self.halfwidths)
            return (-w, w.copy())
        los = np.array([lo for lo, _ in self.cells])
        his = np.array([hi for _, hi in self.cells])
        return (los.min(axis=0), his.max(axis=0))

    def support_volume(self, d: int) -> float:
        if self.shape == "UniformBall":
            return _unit_ball_volume(d) * self.radius**d
        if self.shape == "UniformBox":
            return float(np.prod(2.0 * np.asarray(self.halfwidths)))
        return float(sum(np.prod(np.subtract(hi, lo)) for lo, hi in self.cells))

    def max_value(self, d: int) -> float:
        if self.shape == "PiecewiseConstant":
            return float(max(self.values))
        return 1.0 / self.support_volume(d)


def _unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def density_eval(spec: DensitySpec, x) -> np.ndarray:
    """U(x) for a single point or an (m, d) batch; zero outside the support."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if spec.shape == "UniformBall":
        inside = np.sum(pts**2, axis=1) <= spec.radius**2
        val = 1.0 / spec.support_volume(pts.shape[1])
        out = np.where(inside, val, 0.0)
    elif spec.shape == "UniformBox":
        w = np.asarray(spec.halfwidths)
        inside = np.all(np.abs(pts) <= w, axis=1)
        out = np.where(inside, 1.0 / spec.support_volume(pts.shape[1]), 0.0)
    else:
        out = np.zeros(len(pts))
        for (lo, hi), v in zip(spec.cells, spec.values):
            inside = np.all((pts >= lo) & (pts <= hi), axis=1)
            out = np.where(inside, v, out)
    return out if np.ndim(x) > 1 else float(out[0])


@dataclass(frozen=True)
class StrengthSpec:
    """Scattering-strength profile a(x); alpha_j = N a(x_j) at sampling time."""
    form: str
    a0: float = 1.0
    slope: float = 0.0
    cutoff: float = 0.0

    def __post_init__(self):
        if self.form not in ("Constant", "AffineRadial"):
            raise ValueError(f"unknown strength form {self.form!r}")
        if self.form == "AffineRadial" and (self.slope < 0 or self.cutoff <= 0):
            raise ValueError("AffineRadial requires slope >= 0 and cutoff > 0")


def strength_eval(spec: StrengthSpec, x) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if spec.form == "Constant":
        out = np.full(len(pts), spec.a0)
    else:
        r = np.minimum(np.linalg.norm(pts, axis=1), spec.cutoff)
        out = spec.a0 + spec.slope * r
    return out if np.ndim(x) > 1 else float(out[0])


@dataclass(frozen=True)
class Scenario:
    d: int
    background: Background
    density: DensitySpec
    strength: StrengthSpec
    ell: float
    lambda0: float = 1.0
    seed: int = 0


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, assumption: str, message: str):
        self.violations.append((assumption, message))


# dart throwing degrades sharply past this exclusion-volume fraction
PACKING_LIMIT = 0.3


def validate(scn: Scenario) -> ValidationReport:
    """Check a scenario against the standing assumptions.

    Violations are returned as (assumption, message) pairs; assumption is
    "1" (limit density), "2" (minimal distance / packing), or "3" (strength
    positivity), with "setup" for structural problems.
    """
    rep = ValidationReport()
    if scn.d not in (2, 3):
        rep.add("setup", f"dimension must be 2 or 3, got {scn.d}")
        return rep
    ddim = scn.density.dim
    if ddim is not None and ddim != scn.d:
        rep.add("1", f"density is {ddim}-dimensional but scenario has d={scn.d}")
        return rep
    if scn.lambda0 <= 0:
        rep.add("setup", "lambda0 must be positive")
    if scn.ell <= 0:
        rep.add("2", "minimal-distance constant ell must be positive")
    else:
        # exclusion-volume fraction is N-independent: N kappa_d (ell N^{-1/d} / 2)^d
        frac = _unit_ball_volume(scn.d) * (scn.ell / 2.0) ** scn.d / scn.density.support_volume(scn.d)
        if frac > PACKING_LIMIT:
            rep.add("2", f"packing infeasible: exclusion fraction {frac:.3f} > {PACKING_LIMIT}")
    lo, hi = scn.density.support_bbox(scn.d)
    corners = np.stack([lo, hi, np.zeros_like(lo)])
    if np.any(strength_eval(scn.strength, corners) <= 0) or scn.strength.a0 <= 0:
        rep.add("3", "strength a(x) must be strictly positive on supp U")
    return rep


_SECTION_KEYS = {
    "scenario": {"d", "ell", "lambda0", "seed"},
    "background": {"kind", "omega"},
    "density": {"shape", "radius", "halfwidths", "cells", "values"},
    "strength": {"form", "a0", "slope", "cutoff"},
}


def load_scenario(path) -> Scenario:
    """Parse a scenario TOML file; unknown sections or keys are errors."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    unknown = set(raw) - set(_SECTION_KEYS)
    if unknown:
        raise ValueError(f"unknown sections {sorted(unknown)} in {path}")
    for name, allowed in _SECTION_KEYS.items():
        if name not in raw:
            raise ValueError(f"missing [{name}] section in {path}")
        extra = set(raw[name]) - allowed
        if extra:
            raise ValueError(f"unknown keys {sorted(extra)} in [{name}]")
    bg = Background(kind=raw["background"]["kind"], omega=raw["background"].get("omega"))
    dens = raw["density"]
    density = DensitySpec(
        shape=dens["shape"],
        radius=dens.get("radius"),
        halfwidths=tuple(dens["halfwidths"]) if "halfwidths" in dens else None,
        cells=tuple((tuple(c[0]), tuple(c[1])) for c in dens["cells"]) if "cells" in dens else None,
        values=tuple(dens["values"]) if "values" in dens else None,
    )
    strength = StrengthSpec(
        form=raw["strength"]["form"],
        a0=raw["strength"].get("a0", 1.0),
        slope=raw["strength"].get("slope", 0.0),
        cutoff=raw["strength"].get("cutoff", 0.0),
    )
    sc = raw["scenario"]
    return Scenario(
        d=int(sc["d"]),
        background=bg,
        density=density,
        strength=strength,
        ell=float(sc["ell"]),
        lambda0=float(sc.get("lambda0", 1.0)),
        seed=int(sc.get("seed", 0)),
    )
