"""Discretized parameter paths: a bare phase phi, or (theta, phi) on the sphere."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class ParameterLoop:
    """Ordered path points including the terminal point.

    ``points`` has shape (M + 1, d).  For a closed loop the terminal point
    maps to the same Hamiltonian as the first (possibly only up to the
    family's periodicity, e.g. phi = 2 pi), and the M distinct nodes are
    ``points[:-1]``.  The path parameter of point k is s = k / M.

    ``breaks`` lists the point indices where straight legs meet; schedules
    ramp the velocity down to zero at each of them.
    """

    points: np.ndarray
    closed: bool = True
    breaks: tuple[int, ...] = ()

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] < 4:
            raise ValueError("a loop needs at least 3 nodes plus its terminal point")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        brk = tuple(sorted({0, *self.breaks, p.shape[0] - 1}))
        object.__setattr__(self, "breaks", brk)

    @property
    def ndim(self) -> int:
        return self.points.shape[1]

    @property
    def segments(self) -> int:
        return self.points.shape[0] - 1

    @property
    def nodes(self) -> np.ndarray:
        return self.points[:-1] if self.closed else self.points

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.points.shape[0]) / self.segments

    def at(self, k: int):
        """Point k as a float (1-D loops) or a (theta, phi) tuple."""
        row = self.points[k]
        return float(row[0]) if self.ndim == 1 else tuple(float(x) for x in row)

    def point(self, s: float):
        """Piecewise-linear interpolation at path parameter s in [0, 1]."""
        x = np.clip(s, 0.0, 1.0) * self.segments
        k = min(int(np.floor(x)), self.segments - 1)
        row = self.points[k] + (x - k) * (self.points[k + 1] - self.points[k])
        return float(row[0]) if self.ndim == 1 else tuple(float(v) for v in row)

    def positions(self, s: np.ndarray) -> np.ndarray:
        """Vectorized ``point``: rows of loop coordinates at parameters s."""
        x = np.clip(np.asarray(s, dtype=float), 0.0, 1.0) * self.segments
        grid = np.arange(self.points.shape[0])
        return np.column_stack([np.interp(x, grid, col) for col in self.points.T])

    def legs(self) -> list[tuple[int, int]]:
        b = self.breaks
        return list(zip(b[:-1], b[1:]))

    def leg_lengths(self) -> np.ndarray:
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.array([steps[i:j].sum() for i, j in self.legs()])

    def reversed(self) -> ParameterLoop:
        m = self.segments
        return ParameterLoop(self.points[::-1], self.closed, tuple(m - b for b in self.breaks))

    @property
    def is_spherical(self) -> bool:
        return self.ndim == 2


def phi_circle(nodes: int, period: float = TWO_PI, start: float = 0.0) -> ParameterLoop:
    """phi from ``start`` to ``start + period`` in ``nodes`` equal steps."""
    return ParameterLoop(start + period * np.arange(nodes + 1) / nodes)


def latitude_loop(theta: float, nodes: int, period: float = TWO_PI) -> ParameterLoop:
    """Fixed-theta circle traversed with increasing phi."""
    phi = period * np.arange(nodes + 1) / nodes
    return ParameterLoop(np.column_stack([np.full_like(phi, theta), phi]))


def cap_boundary(theta: float, nodes: int) -> ParameterLoop:
    """Boundary of the region 0 <= theta' <= theta, 0 <= phi <= 2 pi.

    Legs: down the phi = 0 meridian, around the latitude circle, back up the
    phi = 2 pi meridian, then along the pole from phi = 2 pi back to 0.  The
    pole leg has zero solid angle but closes the loop in (theta, phi) itself,
    so Hamiltonians with half-angle phi dependence return exactly to their
    start.  ``nodes`` is the number of steps per full turn in phi; the
    meridians use the same angular spacing.
    """
    if theta <= 0.0:
        raise ValueError("cap_boundary needs theta > 0")
    m = max(2, int(np.ceil(nodes * theta / TWO_PI)))
    down = np.linspace(0.0, theta, m + 1)
    around = np.linspace(0.0, TWO_PI, nodes + 1)
    legs = [
        np.column_stack([down, np.zeros_like(down)]),
        np.column_stack([np.full_like(around, theta), around])[1:],
        np.column_stack([down[::-1], np.full_like(down, TWO_PI)])[1:],
        np.column_stack([np.zeros_like(around), around[::-1]])[1:],
    ]
    breaks = np.cumsum([0] + [len(leg) for leg in legs])[1:-1] - 1
    return ParameterLoop(np.vstack(legs), True, tuple(int(b) for b in breaks))
