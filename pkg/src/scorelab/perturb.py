"""Departure families: binary (p, gamma) pairs and odd grid perturbations."""

from dataclasses import asdict, dataclass

import numpy as np

from .core import DELTA_MARGIN, DomainError, OddPerturbation, ProbVector, ValidationError

SHAPES = ("bump", "sine", "tanh-step")


def make_binary_pair(p, gamma):
    """Return ``(f_plus, f_minus)`` = ``((p+g, q-g), (p-g, q+g))``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    q = 1.0 - p
    if abs(gamma) >= p:
        raise DomainError(f"|gamma|={abs(gamma)} must be < p={p}")
    if abs(gamma) >= q:
        raise DomainError(f"|gamma|={abs(gamma)} must be < q={q:.9g}")
    return ProbVector([p + gamma, q - gamma]), ProbVector([p - gamma, q + gamma])


@dataclass(frozen=True)
class PerturbationShape:
    """Raw odd shape w(x), bounded by 1 and nonpositive for x > 0.

    ``bump``
        Gaussians of sd ``width`` at -center (up) and +center (down).
    ``sine``
        One period of -sin(pi x / width) on [-width, width], zero outside.
    ``tanh-step``
        -tanh(x / width) under a Gaussian envelope of sd ``center``.
    """

    kind: str = "bump"
    center: float = 1.0
    width: float = 0.7

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise ValidationError(f"unknown shape {self.kind!r}; choose from {SHAPES}")
        if not self.width > 0.0:
            raise ValidationError(f"width must be positive, got {self.width}")
        if self.kind in ("bump", "tanh-step") and not self.center > 0.0:
            raise ValidationError(f"center must be positive for {self.kind}, got {self.center}")

    def raw(self, x):
        x = np.asarray(x, dtype=float)
        c, s = self.center, self.width
        if self.kind == "bump":
            w = np.exp(-0.5 * ((x + c) / s) ** 2) - np.exp(-0.5 * ((x - c) / s) ** 2)
        elif self.kind == "sine":
            w = np.where(np.abs(x) <= s, -np.sin(np.pi * x / s), 0.0)
        else:
            w = -np.tanh(x / s) * np.exp(-0.5 * (x / c) ** 2)
        return w

    def on_grid(self, grid):
        """w sampled on ``grid`` and averaged with its reflection so it is exactly odd."""
        if not grid.symmetric:
            raise ValidationError(f"odd shapes need a symmetric grid, got [{grid.lo}, {grid.hi}]")
        w = self.raw(grid.x)
        return 0.5 * (w - w[::-1])

    def to_text(self, epsilon=None):
        """Plain ``key = value`` block; round-trips through :func:`parse_shape_text`."""
        fields = asdict(self)
        lines = [f"shape = {fields['kind']}", f"center = {fields['center']!r}", f"width = {fields['width']!r}"]
        if epsilon is not None:
            lines.append(f"epsilon = {float(epsilon)!r}")
        return "\n".join(lines) + "\n"


def parse_shape_text(text):
    """Inverse of :meth:`PerturbationShape.to_text`; returns ``(shape, epsilon or None)``."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        values[key] = val
    unknown = set(values) - {"shape", "center", "width", "epsilon"}
    if unknown:
        raise ValidationError(f"unknown perturbation keys: {sorted(unknown)}")
    try:
        shape = PerturbationShape(
            kind=values.get("shape", "bump"),
            center=float(values.get("center", 1.0)),
            width=float(values.get("width", 0.7)),
        )
        eps = float(values["epsilon"]) if "epsilon" in values else None
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return shape, eps


def max_feasible_epsilon(shape, target, margin=DELTA_MARGIN):
    """Largest eps with eps |w(x_i)| <= (1 - margin) p(x_i) at every grid point."""
    w = np.abs(shape.on_grid(target.grid))
    active = w > 0.0
    if not np.any(active):
        raise ValidationError(f"shape {shape.kind!r} vanishes on the grid")
    return float(np.min((1.0 - margin) * target.values[active] / w[active]))


def make_odd_perturbation(shape, epsilon, target, margin=DELTA_MARGIN):
    """gamma = epsilon * w on the target's grid, validated against the target."""
    if epsilon < 0.0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    gamma = OddPerturbation(target.grid, epsilon * shape.on_grid(target.grid), sign_constrained=True)
    bad = gamma.violations(target, margin)
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"epsilon={epsilon:.9g} infeasible: |gamma|={abs(gamma.values[i]):.9g} > "
            f"(1-{margin:g})*p={(1 - margin) * target.values[i]:.9g} at x={target.grid.x[i]:.9g}"
        )
    return gamma
