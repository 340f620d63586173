"""Geometric phases: discrete holonomy, closed-form references, mixed states.

Conventions (fixed once, checked by the test oracles):

* A chain of states psi_0 .. psi_M has phase -arg prod_k <psi_k|psi_k+1>,
  which is the discrete form of i \\oint <psi|d psi>.  Loops run with
  increasing parameter.
* ``unwrapped`` is -sum_k arg<psi_k|psi_k+1> taken term by term.  It keeps
  the 2 pi windings only for chains built in a smooth single-valued gauge
  (states generated by an explicit unitary family from one eigenvector),
  which is how the ``connection`` methods below build them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegeneracyError,
    DegenerateLoopWarning,
    OverlapError,
    PreconditionError,
    VanishingVisibilityError,
)
from .fock import SpaceSpec, StateVector, spin_ops
from .hamiltonians import (
    SingleModeParams,
    TwoModeParams,
    TwoModeSector,
    phase_shifted_jc_family,
    semiclassical_h,
)
from .loops import TWO_PI, ParameterLoop, cap_boundary, phi_circle
from .spectral import (
    DressedLabel,
    dressed_state,
    eigh,
    mixing_cos,
    track_band,
)

METHODS = ("pancharatnam", "connection", "analytic", "expectation", "evolution", "mixed")
MIN_OVERLAP = 1e-6
MIN_VISIBILITY = 1e-12
DEFAULT_NODES = 2000
TWO_MODE_NODES = 4000


def wrap_phase(x: float) -> float:
    """Map x into (-pi, pi]."""
    return float(np.pi - (np.pi - x) % TWO_PI)


def phase_distance(x: float, y: float) -> float:
    """Distance between two angles on the circle."""
    return abs(wrap_phase(x - y))


@dataclass(frozen=True)
class PhaseResult:
    wrapped: float
    unwrapped: float
    winding: int
    method: str
    visibility: float = 1.0
    extras: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 <= self.visibility <= 1.0 + 1e-12:
            raise ValueError(f"visibility {self.visibility} outside [0, 1]")

    @classmethod
    def build(cls, unwrapped: float, method: str, wrapped: float | None = None,
              visibility: float = 1.0, **extras: float) -> PhaseResult:
        w = wrap_phase(unwrapped if wrapped is None else wrapped)
        winding = int(round((unwrapped - w) / TWO_PI))
        return cls(w, float(unwrapped), winding, method, min(visibility, 1.0), dict(extras))


def _as_rows(states) -> np.ndarray:
    if isinstance(states, np.ndarray):
        return states
    rows = []
    space = None
    for s in states:
        if isinstance(s, StateVector):
            if space is not None and s.space != space:
                raise ValueError("all states must share one space")
            space = s.space
            rows.append(s.amplitudes)
        else:
            rows.append(np.asarray(s, dtype=complex))
    return np.array(rows)


def chain_overlaps(states, closed: bool = True) -> np.ndarray:
    psi = _as_rows(states)
    ov = np.einsum("ij,ij->i", psi[:-1].conj(), psi[1:])
    if closed:
        ov = np.append(ov, np.vdot(psi[-1], psi[0]))
    return ov


def pancharatnam_phase(states: Sequence[StateVector] | np.ndarray,
                       closed: bool = True) -> PhaseResult:
    """Gauge-invariant holonomy of a chain of states (rows of an array or
    StateVectors)."""
    psi = _as_rows(states)
    if psi.shape[0] < 3:
        raise PreconditionError("need at least 3 states")
    ov = chain_overlaps(psi, closed)
    mag = np.abs(ov)
    if mag.min() < MIN_OVERLAP:
        k = int(mag.argmin())
        raise OverlapError(f"overlap {mag[k]:.2e} between states {k} and {k + 1}")
    unwrapped = -float(np.sum(np.angle(ov)))
    wrapped = -float(np.angle(np.prod(ov / mag)))
    return PhaseResult.build(unwrapped, "pancharatnam", wrapped=wrapped)


def random_rephase(states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return states * np.exp(1j * rng.uniform(0, TWO_PI, size=(states.shape[0], 1)))


# --- semiclassical spin ----------------------------------------------------

def analytic_phase_semiclassical(delta: float, lam: float, alpha: float) -> float:
    """pi (1 - cos theta), cos theta = delta / sqrt(delta^2 + 4 (alpha lam)^2)."""
    g = alpha * lam
    if delta == 0 and g == 0:
        raise DegeneracyError("field vanishes: delta = alpha lam = 0")
    return float(np.pi * (1 - delta / np.hypot(delta, 2 * g)))


def semiclassical_loop_phase(delta: float, lam: float, alpha: float, sign: int = -1,
                             nodes: int = DEFAULT_NODES) -> PhaseResult:
    """Numeric holonomy of a 2x2 eigenstate as phi runs over [0, 2 pi].

    ``sign=+1`` follows the level aligned with the effective field (upper
    energy), ``sign=-1`` the anti-aligned one.  With the phi dependence
    e^{-i phi} s+ the anti-aligned level picks up +pi(1 - cos theta) and the
    aligned one the negative of it, both mod 2 pi.
    """
    if delta == 0 and alpha * lam == 0:
        raise DegeneracyError("field vanishes: delta = alpha lam = 0")
    loop = phi_circle(nodes)

    base = semiclassical_h(delta, lam, alpha, 0.0).matrix
    diag, off = np.diag(np.diag(base)), np.tril(base, -1)  # off = coefficient of s+

    def family(phi):
        k = np.exp(-1j * phi) * off
        return diag + k + k.conj().T

    w, v = eigh(family(0.0))
    seed = v[:, 1 if sign > 0 else 0]
    band = track_band(family, loop, seed)
    pc = pancharatnam_phase(band.states)
    return PhaseResult.build(pc.unwrapped, "pancharatnam", wrapped=pc.wrapped,
                             min_gap=band.min_gap)


# --- single quantized mode -------------------------------------------------

def analytic_phase_single_mode(delta: float, lam: float, n: int, sign: int) -> float:
    """pi(1 - cos theta_n) + 2 pi n on the + branch,
    -pi(1 - cos theta_n) + 2 pi (n + 1) on the - branch."""
    c = mixing_cos(delta, lam, n)
    if sign > 0:
        return float(np.pi * (1 - c) + TWO_PI * n)
    return float(-np.pi * (1 - c) + TWO_PI * (n + 1))


def phase_via_number_expectation(state: StateVector) -> PhaseResult:
    """2 pi <a^dag a>: the loop integral of i<psi|U^dag dU|psi> for
    U(phi) = exp(-i phi a^dag a), phi over [0, 2 pi]."""
    if state.space.cutoff_a is None:
        raise PreconditionError("state has no mode a")
    n = np.array([lab[1] for lab in state.space.labels()])
    p = np.abs(state.amplitudes) ** 2
    value = TWO_PI * float(p @ n) / float(p.sum())
    return PhaseResult.build(value, "expectation")


def _matched_eigenvector(h: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Numerical eigenvector of h closest to ``target``, phase-aligned with it."""
    w, v = eigh(h)
    ov = v.conj().T @ target
    j = int(np.argmax(np.abs(ov)))
    return v[:, j] * (ov[j] / abs(ov[j]))


def single_mode_loop_phase(params: SingleModeParams, label: DressedLabel, cutoff: int,
                           nodes: int = DEFAULT_NODES, gauge_seed: int | None = None,
                           track: bool = True) -> PhaseResult:
    """Phase of a dressed state carried around phi in [0, 2 pi] by
    U(phi) = exp(-i phi a^dag a).

    The chain U(phi_k)|Phi> starts from the numerically diagonalized
    eigenvector, so its term-by-term sum keeps the 2 pi n windings.  With
    ``track`` the eigenstate of the phase-shifted Hamiltonian is also followed
    by the eigensolver and its (mod 2 pi) holonomy is returned in
    ``extras['tracked_wrapped']``.  ``gauge_seed`` rephases every node at
    random before the wrapped value is formed.
    """
    if params.lam <= 0:
        raise PreconditionError("single-mode loop needs lam > 0 (dressed doublet degenerate)")
    seed = dressed_state(label, params, cutoff)
    space = seed.space
    sector = np.flatnonzero(space.excitations() == label.n + 1)
    family = phase_shifted_jc_family(params, cutoff, sector)
    phi0 = _matched_eigenvector(family(0.0), seed.amplitudes[sector])

    loop = phi_circle(nodes)
    phis = loop.nodes[:, 0]
    n_a = np.array([space.label(i)[1] for i in sector])
    chain = np.exp(-1j * np.outer(phis, n_a)) * phi0
    pc = pancharatnam_phase(chain)
    wrapped = pc.wrapped
    if gauge_seed is not None:
        wrapped = pancharatnam_phase(random_rephase(chain, np.random.default_rng(gauge_seed))).wrapped
    extras = {}
    if track:
        band = track_band(family, loop, phi0)
        extras = {"tracked_wrapped": pancharatnam_phase(band.states).wrapped,
                  "min_gap": band.min_gap}
    return PhaseResult.build(pc.unwrapped, "connection", wrapped=wrapped, **extras)


def semiclassical_cos_from_photons(delta: float, lam: float, n: int) -> float:
    """cos theta of the classical field with alpha = sqrt(n + 1)."""
    return float(delta / np.hypot(delta, 2 * np.sqrt(n + 1) * lam))


# --- Poincare sphere ---------------------------------------------------------

def solid_angle(loop: ParameterLoop) -> float:
    """Signed solid angle \\oint (1 - cos theta) d phi by the trapezoid rule,
    reduced to the principal range (-4 pi, 4 pi)."""
    if not loop.is_spherical:
        raise ValueError("solid angle needs a (theta, phi) loop")
    th, ph = loop.points[:, 0], loop.points[:, 1]
    f = 1 - np.cos(th)
    omega = float(np.sum(0.5 * (f[:-1] + f[1:]) * np.diff(ph)))
    return math.fmod(omega, 2 * TWO_PI)


def cap_solid_angle(theta: float) -> float:
    return float(TWO_PI * (1 - np.cos(theta)))


def analytic_phase_two_mode(omega: float, n: int, nprime: int) -> float:
    """(omega / 2)(n - n' + 1/2); omega / 4 for the vacuum n = n' = 0."""
    if n < 0 or nprime < 0:
        raise ValueError("photon numbers must be >= 0")
    return 0.5 * omega * (n - nprime + 0.5)


def fock_rotation_phase(n: int, nprime: int, omega: float) -> float:
    """Phase of |n, n'> under a polarization loop of solid angle omega."""
    return 0.5 * (n - nprime) * omega


def _frame_chain(sector: TwoModeSector, loop: ParameterLoop, vec: np.ndarray) -> np.ndarray:
    """exp(i phi Jz) exp(-i theta Jy) vec at every node of ``loop``."""
    mu, q = np.linalg.eigh(sector.jy)
    coeff = q.conj().T @ vec
    m = np.real(np.diag(sector.jz))
    th, ph = loop.nodes[:, 0], loop.nodes[:, 1]
    rotated = (np.exp(-1j * np.outer(th, mu)) * coeff) @ q.T
    return np.exp(1j * np.outer(ph, m)) * rotated


def _leg_phases(loop: ParameterLoop, chain: np.ndarray) -> list[float]:
    args = -np.angle(chain_overlaps(chain))
    return [float(args[i:j].sum()) for i, j in loop.legs()]


def two_mode_state_loop_phase(params: TwoModeParams, seed: StateVector,
                              nodes: int = TWO_MODE_NODES, gauge_seed: int | None = None,
                              track: bool = True) -> PhaseResult:
    """Phase of an eigenstate of the initial two-mode Hamiltonian carried
    around the boundary of the polar cap 0 <= theta' <= params.theta.

    The loop is closed in (theta, phi) itself (see ``cap_boundary``), so the
    Hamiltonian returns exactly to its start and no period normalization is
    needed.  ``extras`` carries the tracked (eigensolver) holonomy, the solid
    angle, and the phase picked up on the latitude leg and on the pole leg.
    """
    space = seed.space
    theta = params.theta
    if theta == 0.0:
        warnings.warn("theta = 0 encloses no solid angle", DegenerateLoopWarning, stacklevel=2)
        return PhaseResult.build(0.0, "connection", solid_angle=0.0)
    if theta >= np.pi:
        raise PreconditionError("theta = pi is the whole sphere (solid angle 4 pi); "
                                "use theta in (0, pi)")
    exc = space.excitations()[np.abs(seed.amplitudes) > 1e-12]
    if exc.min() != exc.max():
        raise PreconditionError("seed mixes excitation sectors")
    sector = TwoModeSector(int(exc[0]), space.cutoff_a, space.cutoff_b)
    if not sector.complete:
        raise PreconditionError(
            f"sector with {sector.total} excitations is cut by the cutoffs "
            f"({space.cutoff_a}, {space.cutoff_b})")
    h0 = sector.hamiltonian(params.at(0.0, 0.0))
    vec = sector.restrict(seed.amplitudes)
    resid = np.linalg.norm(h0 @ vec - np.vdot(vec, h0 @ vec) * vec)
    if resid > 1e-10 * max(np.linalg.norm(h0, 2), 1.0):
        raise PreconditionError(f"seed is not an eigenstate of H0 (residual {resid:.3g})")
    if params.lam > 0:
        vec = _matched_eigenvector(h0, vec)

    loop = cap_boundary(theta, nodes)
    chain = _frame_chain(sector, loop, vec)
    pc = pancharatnam_phase(chain)
    wrapped = pc.wrapped
    if gauge_seed is not None:
        wrapped = pancharatnam_phase(random_rephase(chain, np.random.default_rng(gauge_seed))).wrapped
    legs = _leg_phases(loop, chain)
    extras = {"solid_angle": solid_angle(loop), "latitude_phase": legs[1],
              "pole_phase": legs[3]}
    if track and params.lam > 0:
        band = track_band(lambda p: sector.hamiltonian(params.at(*p)), loop, vec)
        extras.update(tracked_wrapped=pancharatnam_phase(band.states).wrapped,
                      min_gap=band.min_gap)
    return PhaseResult.build(pc.unwrapped, "connection", wrapped=wrapped, **extras)


def two_mode_loop_phase(params: TwoModeParams, label: DressedLabel, cutoff_a: int,
                        cutoff_b: int, nodes: int = TWO_MODE_NODES,
                        gauge_seed: int | None = None, track: bool = True) -> PhaseResult:
    """Loop phase of |Psi^+-_{n,n'}> = (|e,n> +- |g,n+1>)|n'>/sqrt(2)."""
    if label.nprime is None:
        raise ValueError("two-mode label needs nprime")
    if label.n + label.nprime + 2 > min(cutoff_a, cutoff_b):
        raise PreconditionError("cutoffs must satisfy n + n' + 2 <= min(cutoff_a, cutoff_b)")
    if params.lam <= 0:
        raise PreconditionError("two-mode loop needs lam > 0")
    resonant = SingleModeParams(params.nu, params.nu, params.lam)
    seed = dressed_state(label, resonant, cutoff_a, cutoff_b)
    return two_mode_state_loop_phase(params, seed, nodes, gauge_seed, track)


def fock_rotation_loop_phase(n: int, nprime: int, theta: float, cutoff_a: int,
                             cutoff_b: int, nodes: int = TWO_MODE_NODES) -> PhaseResult:
    """Numeric counterpart of ``fock_rotation_phase``: the qubit is decoupled
    (lam = 0) and parked in |g>, so |g, n, n'> is carried around the cap
    boundary by the loop unitaries alone."""
    space = SpaceSpec(has_qubit=True, cutoff_a=cutoff_a, cutoff_b=cutoff_b)
    v = np.zeros(space.total_dim, dtype=complex)
    v[space.index("g", n, nprime)] = 1.0
    return two_mode_state_loop_phase(TwoModeParams(1.0, 0.0, theta), StateVector(space, v),
                                     nodes, track=False)


# --- mixed states and the classical picture ---------------------------------

def mixed_state_phase(weights: Sequence[float], phases: Sequence[float]) -> PhaseResult:
    """arg sum_k w_k e^{i gamma_k}; the modulus is the interference visibility."""
    w = np.asarray(weights, dtype=float)
    g = np.asarray(phases, dtype=float)
    if w.shape != g.shape or w.ndim != 1 or w.size == 0:
        raise ValueError("weights and phases must be equal-length 1-D lists")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    z = complex(np.sum(w * np.exp(1j * g)))
    if abs(z) < MIN_VISIBILITY:
        raise VanishingVisibilityError(f"visibility {abs(z):.2e}: phase undefined")
    phase = float(np.angle(z))
    return PhaseResult.build(phase, "mixed", visibility=abs(z))


def polarization_vector(theta: float, phi: float) -> np.ndarray:
    """(e^{i phi/2} cos(theta/2), e^{-i phi/2} sin(theta/2))."""
    return np.array([np.exp(0.5j * phi) * np.cos(theta / 2),
                     np.exp(-0.5j * phi) * np.sin(theta / 2)])


def classical_polarization_phase(loop: ParameterLoop) -> PhaseResult:
    """Pancharatnam phase of the classical polarization vector along a loop.

    For a latitude circle over phi in [0, 2 pi] the vector returns to minus
    itself, i.e. to the same ray, and the phase is pi (1 - cos theta) =
    omega / 2 mod 2 pi.
    """
    if not loop.is_spherical:
        raise ValueError("polarization loops live on the sphere")
    th = loop.nodes[:, 0]
    if np.ptp(th) == 0 and (th[0] == 0.0 or th[0] == np.pi):
        warnings.warn("loop sits on a pole and encloses no area", DegenerateLoopWarning,
                      stacklevel=2)
        return PhaseResult.build(0.0, "pancharatnam")
    eps = np.array([polarization_vector(t, p) for t, p in loop.nodes])
    return pancharatnam_phase(eps)


def history_hamiltonian_eigenphase(omega: float, coupling: float = 1.0) -> tuple[float, float]:
    """Component phases (of |e>, of |g>) of the upper eigenvector of
    coupling * (s+ e^{i omega/2} + s- e^{-i omega/2}), split symmetrically.

    Returns (omega/4, -omega/4) on the principal branch omega in (-2 pi, 2 pi].
    """
    if coupling <= 0:
        raise ValueError("coupling must be > 0")
    _, sp, sm = spin_ops()
    h = coupling * (np.exp(0.5j * omega) * sp + np.exp(-0.5j * omega) * sm)
    _, v = eigh(h.matrix)
    upper = v[:, 1]
    rel = float(np.angle(upper[1] * np.conj(upper[0])))  # index 1 = e, 0 = g
    return 0.5 * rel, -0.5 * rel
