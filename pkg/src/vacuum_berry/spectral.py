"""Hermitian eigensolver, analytic dressed states, and adiabatic band tracking."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BandCrossingError,
    ConvergenceError,
    CutoffError,
    DegeneracyError,
    DegeneracyWarning,
    PreconditionError,
)
from .fock import Operator, SpaceSpec, StateVector, is_hermitian
from .hamiltonians import SingleModeParams
from .loops import ParameterLoop

RESIDUAL_TOL = 1e-10
MIN_TRACK_OVERLAP = 0.9
DEGENERATE_GAP = 1e-8


def eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """numpy eigh with solver failures mapped to ConvergenceError."""
    try:
        return np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc


def eig_hermitian(h: Operator) -> tuple[np.ndarray, list[StateVector]]:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian operator."""
    if not (h.hermitian or is_hermitian(h.matrix)):
        raise PreconditionError("eig_hermitian needs a Hermitian operator")
    w, v = eigh(h.matrix)
    return w, [StateVector(h.space, v[:, k]) for k in range(len(w))]


@dataclass(frozen=True)
class DressedLabel:
    """Rung n and branch sign of |Phi_n^+-> (optionally with spectator n')."""

    n: int
    sign: int
    nprime: int | None = None

    def __post_init__(self):
        sign = {"+": 1, "-": -1}.get(self.sign, self.sign)
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        object.__setattr__(self, "sign", sign)
        if self.n < 0 or (self.nprime is not None and self.nprime < 0):
            raise ValueError("photon numbers must be >= 0")


def mixing_angle(delta: float, lam: float, n: int) -> float:
    """theta_n in [0, pi] with cos theta_n = delta / sqrt(delta^2 + 4 lam^2 (n+1))."""
    if delta == 0 and lam == 0:
        raise DegeneracyError("mixing angle undefined at delta = lam = 0")
    return float(np.arctan2(2 * lam * np.sqrt(n + 1), delta))


def mixing_cos(delta: float, lam: float, n: int) -> float:
    if delta == 0 and lam == 0:
        raise DegeneracyError("mixing angle undefined at delta = lam = 0")
    return float(delta / np.hypot(delta, 2 * lam * np.sqrt(n + 1)))


def dressed_state(label: DressedLabel, params: SingleModeParams, cutoff: int,
                  cutoff_b: int | None = None) -> StateVector:
    """Jaynes-Cummings eigenstate on rung n.

    |Phi_n^+> =  cos(t/2)|e,n> + sin(t/2)|g,n+1>
    |Phi_n^-> = -sin(t/2)|e,n> + cos(t/2)|g,n+1>,   t = theta_n.

    With ``label.nprime`` set, the state is tensored with |n'> of mode b on a
    space with ``cutoff_b``.
    """
    n = label.n
    if n + 1 > cutoff:
        raise CutoffError(f"rung n={n} needs cutoff >= {n + 1}, got {cutoff}")
    if label.nprime is None:
        space = SpaceSpec(has_qubit=True, cutoff_a=cutoff)
        nprime = 0
    else:
        if cutoff_b is None or label.nprime > cutoff_b:
            raise CutoffError(f"spectator n'={label.nprime} needs cutoff_b >= {label.nprime}")
        space = SpaceSpec(has_qubit=True, cutoff_a=cutoff, cutoff_b=cutoff_b)
        nprime = label.nprime
    t = mixing_angle(params.delta, params.lam, n)
    c, s = np.cos(t / 2), np.sin(t / 2)
    ce, cg = (c, s) if label.sign > 0 else (-s, c)
    v = np.zeros(space.total_dim, dtype=complex)
    v[space.index("e", n, nprime)] = ce
    v[space.index("g", n + 1, nprime)] = cg
    return StateVector(space, v)


@dataclass(frozen=True, eq=False)
class TrackedBand:
    """Eigenstate followed around a loop in the parallel-transport gauge.

    ``states`` rows are amplitudes over ``indices`` of the full space (the
    whole space unless a symmetry sector was requested).  Consecutive
    overlaps <psi_k|psi_k+1> are real and positive; for a closed loop the
    holonomy sits entirely in the closing overlap <psi_last|psi_0>.
    """

    loop: ParameterLoop
    states: np.ndarray
    energies: np.ndarray
    min_gap: float
    overlaps: np.ndarray
    indices: np.ndarray
    space: SpaceSpec | None = None

    def state(self, k: int) -> StateVector:
        if self.space is None:
            raise ValueError("band was tracked on bare matrices")
        v = np.zeros(self.space.total_dim, dtype=complex)
        v[self.indices] = self.states[k]
        return StateVector(self.space, v)

    @property
    def closing_overlap(self) -> complex:
        return complex(np.vdot(self.states[-1], self.states[0]))


Family = Callable[[object], "Operator | np.ndarray"]


def _matrix(h) -> np.ndarray:
    return h.matrix if isinstance(h, Operator) else np.asarray(h)


def track_band(family: Family, loop: ParameterLoop, seed: StateVector | np.ndarray,
               sector: Sequence[int] | None = None,
               residual_tol: float = RESIDUAL_TOL) -> TrackedBand:
    """Follow the eigenstate of ``family`` that starts at ``seed``.

    At each node the eigenvector with the largest |overlap| with the previous
    state is kept (ties go to the closest energy) and rephased so the overlap
    is real positive.  ``sector`` restricts every matrix to a block of basis
    indices left invariant by the family, which removes accidental crossings
    with levels of other conserved-quantity sectors.
    """
    space = seed.space if isinstance(seed, StateVector) else None
    seed_vec = seed.amplitudes if isinstance(seed, StateVector) else np.asarray(seed, complex)
    idx = np.arange(seed_vec.size) if sector is None else np.asarray(sector)
    if sector is not None:
        outside = np.delete(seed_vec, idx)
        if outside.size and np.max(np.abs(outside)) > 1e-12:
            raise PreconditionError("seed has weight outside the requested sector")
    psi = seed_vec[idx]
    psi = psi / np.linalg.norm(psi)

    h0 = _matrix(family(loop.at(0)))[np.ix_(idx, idx)]
    e0 = float(np.real(np.vdot(psi, h0 @ psi)))
    resid = np.linalg.norm(h0 @ psi - e0 * psi)
    if resid > residual_tol * max(np.linalg.norm(h0, 2), 1.0):
        raise PreconditionError(f"seed is not an eigenstate (residual {resid:.3g})")

    nodes = loop.nodes.shape[0]
    hs = np.empty((nodes, idx.size, idx.size), dtype=complex)
    hs[0] = h0
    for k in range(1, nodes):
        hs[k] = _matrix(family(loop.at(k)))[np.ix_(idx, idx)]
    w_all, v_all = eigh(hs)  # batched: one LAPACK sweep over all nodes

    states = np.empty((nodes, idx.size), dtype=complex)
    overlaps = np.empty(max(nodes - 1, 0))
    chosen = np.empty(nodes, dtype=int)
    prev, e_prev = psi, e0
    for k in range(nodes):
        w, v = w_all[k], v_all[k]
        ov = v.conj().T @ prev
        mag = np.abs(ov)
        best = mag.max()
        if best < MIN_TRACK_OVERLAP:
            raise BandCrossingError(
                f"lost the band at node {k} (max overlap {best:.3f}); refine the loop "
                "or move away from the degeneracy")
        cands = np.flatnonzero(mag >= best - 1e-12)
        j = cands[np.argmin(np.abs(w[cands] - e_prev))]
        # <prev|new> = conj(ov_j) * phase -> make it real positive
        new = v[:, j] * (ov[j] / mag[j])
        if k:
            overlaps[k - 1] = mag[j]
        states[k], chosen[k] = new, j
        prev, e_prev = new, w[j]
    rows = np.arange(nodes)
    energies = w_all[rows, chosen]
    if idx.size > 1:
        others = np.abs(w_all - energies[:, None])
        others[rows, chosen] = np.inf
        min_gap = float(others.min())
    else:
        min_gap = float("inf")
    if min_gap < DEGENERATE_GAP:
        warnings.warn(f"tracked level comes within {min_gap:.2e} of another",
                      DegeneracyWarning, stacklevel=2)
    return TrackedBand(loop, states, energies, float(min_gap), overlaps, idx, space)
