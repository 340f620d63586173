"""Hamiltonians of a qubit driven by a classical field or coupled to one or two
quantized modes, all in the frame rotating at the field frequency.

Sign conventions worth knowing up front:

* ``phase_shifted_jc(phi)`` is exactly U(phi) H U(phi)^dagger with
  U(phi) = exp(-i phi a^dagger a), so its eigenstates are U(phi)|Phi>.
  Conjugation gives a -> e^{+i phi} a.
* ``two_mode_transformed(theta, phi)`` is the closed form in which mode a is
  weighted by cos(theta/2) e^{-i phi/2} and mode b by sin(theta/2) e^{+i phi/2}.
  It equals V H0 V^dagger with V = ``frame_unitary(theta, phi)``
  = ``loop_unitary(theta, -phi)`` = exp(+i phi Jz) exp(-i theta Jy).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import (
    Operator,
    SpaceSpec,
    embed,
    mode_operator,
    schwinger_ops,
    sector_indices,
    spin_ops,
)


@dataclass(frozen=True)
class SingleModeParams:
    """Field frequency nu, qubit frequency omega, coupling lam (rad/time)."""

    nu: float
    omega: float
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("coupling lam must be >= 0 (absorb its sign into phases)")

    @property
    def delta(self) -> float:
        return self.omega - self.nu

    @classmethod
    def from_detuning(cls, delta: float, lam: float, nu: float = 1.0) -> SingleModeParams:
        return cls(nu=nu, omega=nu + delta, lam=lam)


@dataclass(frozen=True)
class TwoModeParams:
    """Resonant two-mode system: common frequency nu, coupling lam to the
    mode selected by the Poincare-sphere angles (theta, phi)."""

    nu: float
    lam: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("coupling lam must be >= 0")
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")

    def at(self, theta: float, phi: float) -> TwoModeParams:
        return TwoModeParams(self.nu, self.lam, theta, phi)


QUBIT = SpaceSpec(has_qubit=True)


def semiclassical_h(delta: float, lam: float, alpha: float, phi: float) -> Operator:
    """(delta/2) sz + lam alpha (s+ e^{-i phi} + s- e^{i phi}) = B . sigma."""
    sz, sp, sm = spin_ops()
    h = 0.5 * delta * sz + lam * alpha * (np.exp(-1j * phi) * sp + np.exp(1j * phi) * sm)
    return h.as_hermitian()


def _jc_parts(cutoff: int):
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    space = SpaceSpec(has_qubit=True, cutoff_a=cutoff)
    sz, sp, sm = (embed(op, space) for op in spin_ops())
    a = mode_operator(space, "a")
    return space, sz, sp, sm, a


def jc_single_mode(params: SingleModeParams, cutoff: int) -> Operator:
    """nu a^dag a + (omega/2) sz + lam (s+ a + s- a^dag)."""
    return phase_shifted_jc(params, cutoff, 0.0)


def phase_shifted_jc(params: SingleModeParams, cutoff: int, phi: float) -> Operator:
    """U(phi) H U(phi)^dag for U(phi) = exp(-i phi a^dag a), in closed form."""
    space, sz, sp, sm, a = _jc_parts(cutoff)
    ad = a.dag()
    h = (params.nu * (ad @ a) + 0.5 * params.omega * sz
         + params.lam * (np.exp(1j * phi) * (sp @ a) + np.exp(-1j * phi) * (sm @ ad)))
    return h.as_hermitian()


def phase_shift_unitary(cutoff: int, phi: float) -> Operator:
    """exp(-i phi a^dag a) on qubit (x) mode a (diagonal, exact)."""
    space = SpaceSpec(has_qubit=True, cutoff_a=cutoff)
    n = np.array([lab[1] for lab in space.labels()])
    return Operator(space, np.diag(np.exp(-1j * phi * n)))


def excitation_number(space: SpaceSpec) -> Operator:
    """a^dag a (+ b^dag b) + (sz + 1)/2: conserved by every JC-type builder."""
    return Operator(space, np.diag(space.excitations().astype(float)), hermitian=True)


def _two_mode_parts(cutoff_a: int, cutoff_b: int):
    if cutoff_a < 1 or cutoff_b < 1:
        raise ValueError("cutoffs must be >= 1")
    space = SpaceSpec(has_qubit=True, cutoff_a=cutoff_a, cutoff_b=cutoff_b)
    sz, sp, _ = (embed(op, space) for op in spin_ops())
    return space, sz, sp, mode_operator(space, "a"), mode_operator(space, "b")


def two_mode_initial(params: TwoModeParams, cutoff_a: int, cutoff_b: int) -> Operator:
    """nu a^dag a + nu b^dag b + (nu/2) sz + lam (s+ a + s- a^dag)."""
    if params.theta != 0.0 or params.phi != 0.0:
        raise ValueError("two_mode_initial takes theta = phi = 0")
    return two_mode_transformed(params, cutoff_a, cutoff_b)


def two_mode_transformed(params: TwoModeParams, cutoff_a: int, cutoff_b: int) -> Operator:
    """nu (sz/2 + a^dag a + b^dag b)
    + lam (cos(theta/2) s+ a e^{-i phi/2} + sin(theta/2) s+ b e^{i phi/2} + h.c.)."""
    space, sz, sp, a, b = _two_mode_parts(cutoff_a, cutoff_b)
    th, ph = params.theta, params.phi
    mode = np.cos(th / 2) * np.exp(-0.5j * ph) * a + np.sin(th / 2) * np.exp(0.5j * ph) * b
    coupling = params.lam * (sp @ mode)
    free = params.nu * (0.5 * sz + a.dag() @ a + b.dag() @ b)
    return (free + coupling + coupling.dag()).as_hermitian()


def loop_unitary(theta: float, phi: float, cutoff_a: int, cutoff_b: int) -> Operator:
    """exp(-i phi Jz) exp(-i theta Jy) on the field, tensored with qubit identity.

    Unitary on every complete excitation sector (n + n' <= min cutoff).
    """
    if cutoff_a < 1 or cutoff_b < 1:
        raise ValueError("cutoffs must be >= 1")
    _, jy, jz = schwinger_ops(cutoff_a, cutoff_b)
    field = jz.expi(phi) @ jy.expi(theta)
    space = SpaceSpec(has_qubit=True, cutoff_a=cutoff_a, cutoff_b=cutoff_b)
    return Operator(space, np.kron(field.matrix, np.eye(2)))


def frame_unitary(theta: float, phi: float, cutoff_a: int, cutoff_b: int) -> Operator:
    """V with two_mode_transformed(theta, phi) = V H0 V^dag on complete sectors."""
    return loop_unitary(theta, -phi, cutoff_a, cutoff_b)


class TwoModeSector:
    """One excitation sector of the two-mode problem, built without ever forming
    the full composite matrix.

    The sector holds all |level, n, n'> with n + n' + [level == e] = total that
    fit under the cutoffs.  Every two-mode Hamiltonian and the Schwinger
    generators map the sector to itself, so the restriction is exact whenever
    ``complete`` is true.
    """

    def __init__(self, total: int, cutoff_a: int, cutoff_b: int):
        self.total = total
        self.space = SpaceSpec(has_qubit=True, cutoff_a=cutoff_a, cutoff_b=cutoff_b)
        self.indices = sector_indices(self.space, total)
        self.labels = [self.space.label(i) for i in self.indices]
        self.complete = total <= min(cutoff_a, cutoff_b)
        pos = {lab: k for k, lab in enumerate(self.labels)}
        d = len(self.labels)
        self.ka = np.zeros((d, d))  # sigma_+ a
        self.kb = np.zeros((d, d))  # sigma_+ b
        jplus = np.zeros((d, d))    # a^dag b
        for k, (level, n, m) in enumerate(self.labels):
            if level == "g":
                if n > 0 and ("e", n - 1, m) in pos:
                    self.ka[pos["e", n - 1, m], k] = np.sqrt(n)
                if m > 0 and ("e", n, m - 1) in pos:
                    self.kb[pos["e", n, m - 1], k] = np.sqrt(m)
            if m > 0 and (level, n + 1, m - 1) in pos:
                jplus[pos[level, n + 1, m - 1], k] = np.sqrt((n + 1) * m)
        self.jz = np.diag([0.5 * (n - m) for _, n, m in self.labels]).astype(complex)
        self.jy = (jplus - jplus.T) / 2j
        self.jx = (jplus + jplus.T) / 2

    @property
    def dim(self) -> int:
        return len(self.labels)

    def hamiltonian(self, params: TwoModeParams) -> np.ndarray:
        th, ph = params.theta, params.phi
        c = params.lam * (np.cos(th / 2) * np.exp(-0.5j * ph) * self.ka
                          + np.sin(th / 2) * np.exp(0.5j * ph) * self.kb)
        return params.nu * (self.total - 0.5) * np.eye(self.dim) + c + c.conj().T

    def restrict(self, amplitudes: np.ndarray) -> np.ndarray:
        return np.asarray(amplitudes)[self.indices]


def phase_shifted_jc_family(params: SingleModeParams, cutoff: int,
                            sector: np.ndarray | None = None):
    """Fast phi -> matrix callable equal to ``phase_shifted_jc(...).matrix``,
    optionally restricted to a block of basis indices."""
    space, sz, sp, _, a = _jc_parts(cutoff)
    free = (params.nu * (a.dag() @ a) + 0.5 * params.omega * sz).matrix
    k = params.lam * (sp @ a).matrix
    if sector is not None:
        ix = np.ix_(sector, sector)
        free, k = free[ix], k[ix]
    kd = k.conj().T

    def h(phi: float) -> np.ndarray:
        return free + np.exp(1j * phi) * k + np.exp(-1j * phi) * kd

    return h


class SectorLoopFamily:
    """(theta, phi) -> sector Hamiltonian, plus its exact eigensystem.

    Since H(theta, phi) = V H0 V^dag with V = exp(i phi Jz) exp(-i theta Jy),
    the eigenvalues never change and the eigenvectors are V times those of
    H0.  ``eigensystem`` evaluates them for a batch of points with matrix
    products only.
    """

    def __init__(self, sector: TwoModeSector, params: TwoModeParams):
        self.sector = sector
        self.params = params.at(0.0, 0.0)
        self.w0, self.v0 = np.linalg.eigh(sector.hamiltonian(self.params))
        self._mu, self._q = np.linalg.eigh(sector.jy)
        self._qv = self._q.conj().T @ self.v0
        self._m = np.real(np.diag(sector.jz))

    def __call__(self, point) -> np.ndarray:
        return self.sector.hamiltonian(self.params.at(*point))

    def eigensystem(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.atleast_2d(points)
        th, ph = points[:, 0], points[:, 1]
        rotated = np.exp(-1j * np.outer(th, self._mu))[:, :, None] * self._qv
        v = np.exp(1j * np.outer(ph, self._m))[:, :, None] * (self._q @ rotated)
        return np.broadcast_to(self.w0, (len(points), self.w0.size)), v
