"""Truncated bosonic Fock spaces, a qubit, and operators on their products.

Basis ordering is fixed: the composite space is qubit (x) mode a (x) mode b
with the qubit index running fastest, i.e.

    index(level, n, n') = q + d_q * (n + (cutoff_a + 1) * n')

where ``q = 0`` for ``g`` and ``q = 1`` for ``e``.  Matrices are dense
complex arrays; every object here is immutable once built.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Sequence

import numpy as np
from scipy.stats import poisson

from .errors import CutoffError, LeakageError

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10
DEFAULT_LEAKAGE_TOL = 1e-8

LEVELS = ("g", "e")
# slowest to fastest
_FACTOR_ORDER = ("b", "a", "q")


@dataclass(frozen=True)
class SpaceSpec:
    """Dimensions of qubit (x) mode a (x) optional mode b.

    A factor is absent when its flag is false / cutoff is None, so the same
    type describes the single-factor spaces ladder and spin operators live on.
    """

    has_qubit: bool = False
    cutoff_a: int | None = None
    cutoff_b: int | None = None

    def __post_init__(self):
        for name in ("cutoff_a", "cutoff_b"):
            c = getattr(self, name)
            if c is not None and (int(c) != c or c < 0):
                raise ValueError(f"{name} must be a nonnegative integer, got {c!r}")

    @property
    def factors(self) -> tuple[str, ...]:
        present = {"q": self.has_qubit, "a": self.cutoff_a is not None,
                   "b": self.cutoff_b is not None}
        return tuple(f for f in _FACTOR_ORDER if present[f])

    def factor_dim(self, factor: str) -> int:
        if factor == "q":
            return 2 if self.has_qubit else 1
        cutoff = self.cutoff_a if factor == "a" else self.cutoff_b
        return 1 if cutoff is None else cutoff + 1

    @property
    def total_dim(self) -> int:
        return self.factor_dim("q") * self.factor_dim("a") * self.factor_dim("b")

    def index(self, level: str | None = None, n: int = 0, nprime: int = 0) -> int:
        """Flat index of the basis state |level, n, n'>."""
        dq, da, db = (self.factor_dim(f) for f in ("q", "a", "b"))
        if self.has_qubit:
            if level not in LEVELS:
                raise ValueError(f"level must be 'g' or 'e', got {level!r}")
            q = LEVELS.index(level)
        else:
            if level is not None:
                raise ValueError("space has no qubit")
            q = 0
        if not (0 <= n < da and 0 <= nprime < db):
            raise CutoffError(f"photon numbers ({n}, {nprime}) outside {self}")
        return q + dq * (n + da * nprime)

    def label(self, index: int) -> tuple[str | None, int, int]:
        dq, da = self.factor_dim("q"), self.factor_dim("a")
        q, rest = index % dq, index // dq
        level = LEVELS[q] if self.has_qubit else None
        return level, rest % da, rest // da

    def labels(self) -> Iterator[tuple[str | None, int, int]]:
        return (self.label(i) for i in range(self.total_dim))

    def excitations(self) -> np.ndarray:
        """Total excitation n + n' + [level == e] of every basis state."""
        dq, da, db = (self.factor_dim(f) for f in ("q", "a", "b"))
        q = np.arange(dq) if self.has_qubit else np.zeros(1, dtype=int)
        grid = (np.arange(db)[:, None, None] + np.arange(da)[None, :, None]
                + q[None, None, :])
        return grid.reshape(-1)

    def union(self, other: SpaceSpec) -> SpaceSpec:
        shared = set(self.factors) & set(other.factors)
        if shared:
            raise ValueError(f"factors {sorted(shared)} appear in both spaces")
        return SpaceSpec(
            has_qubit=self.has_qubit or other.has_qubit,
            cutoff_a=self.cutoff_a if self.cutoff_a is not None else other.cutoff_a,
            cutoff_b=self.cutoff_b if self.cutoff_b is not None else other.cutoff_b,
        )


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


def is_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) < tol)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense square matrix tagged with the space it acts on."""

    space: SpaceSpec
    matrix: np.ndarray
    hermitian: bool = False

    # let numpy scalars defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dim {d}")
        if self.hermitian and not is_hermitian(m):
            raise ValueError("operator flagged hermitian is not")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def dag(self) -> Operator:
        return Operator(self.space, self.matrix.conj().T, self.hermitian)

    def _check(self, other) -> None:
        if other.space != self.space:
            raise ValueError(f"space mismatch: {self.space} vs {other.space}")

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            self._check(other)
            return StateVector(self.space, self.matrix @ other.amplitudes)
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix,
                        self.hermitian and other.hermitian)

    def __sub__(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix,
                        self.hermitian and other.hermitian)

    def __neg__(self) -> Operator:
        return Operator(self.space, -self.matrix, self.hermitian)

    def __mul__(self, scalar) -> Operator:
        herm = self.hermitian and np.isreal(scalar)
        return Operator(self.space, scalar * self.matrix, bool(herm))

    __rmul__ = __mul__

    def commutator(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix - other.matrix @ self.matrix)

    def as_hermitian(self) -> Operator:
        """Same operator with the hermitian flag set (validated)."""
        return Operator(self.space, self.matrix, hermitian=True)

    def expect(self, state: StateVector) -> complex:
        self._check(state)
        v = state.amplitudes
        return complex(np.vdot(v, self.matrix @ v))

    def expi(self, t: float) -> Operator:
        """exp(-i t M) for Hermitian M, via its eigendecomposition."""
        if not is_hermitian(self.matrix):
            raise ValueError("expi needs a Hermitian operator")
        w, v = np.linalg.eigh(self.matrix)
        return Operator(self.space, (v * np.exp(-1j * t * w)) @ v.conj().T)

    def restrict(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices)
        return self.matrix[np.ix_(idx, idx)]


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitude vector over the labeled product basis.

    Construction does not force unit norm (``a|0>`` is a legitimate zero
    vector); the state factories below always return normalized states.
    """

    space: SpaceSpec
    amplitudes: np.ndarray

    __array_ufunc__ = None

    def __post_init__(self):
        v = _frozen(self.amplitudes).reshape(-1)
        if v.shape != (self.space.total_dim,):
            raise ValueError(f"{v.shape[0]} amplitudes for dim {self.space.total_dim}")
        object.__setattr__(self, "amplitudes", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm - 1.0) < tol

    def normalized(self) -> StateVector:
        nrm = self.norm
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / nrm)

    def overlap(self, other: StateVector) -> complex:
        """<self|other>."""
        if other.space != self.space:
            raise ValueError("space mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def rephased(self, phase: float) -> StateVector:
        return StateVector(self.space, np.exp(1j * phase) * self.amplitudes)

    def amplitude(self, level: str | None = None, n: int = 0, nprime: int = 0) -> complex:
        return complex(self.amplitudes[self.space.index(level, n, nprime)])

    def __add__(self, other: StateVector) -> StateVector:
        if other.space != self.space:
            raise ValueError("space mismatch")
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __mul__(self, scalar) -> StateVector:
        return StateVector(self.space, scalar * self.amplitudes)

    __rmul__ = __mul__


def identity(space: SpaceSpec) -> Operator:
    return Operator(space, np.eye(space.total_dim), hermitian=True)


def _mode_space(cutoff: int, mode: str) -> SpaceSpec:
    if mode == "a":
        return SpaceSpec(cutoff_a=cutoff)
    if mode == "b":
        return SpaceSpec(cutoff_b=cutoff)
    raise ValueError(f"mode must be 'a' or 'b', got {mode!r}")


def annihilation(cutoff: int, mode: str = "a") -> Operator:
    """Truncated ladder operator with <n-1|a|n> = sqrt(n)."""
    space = _mode_space(cutoff, mode)
    return Operator(space, np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1))


def creation(cutoff: int, mode: str = "a") -> Operator:
    return annihilation(cutoff, mode).dag()


def number(cutoff: int, mode: str = "a") -> Operator:
    return Operator(_mode_space(cutoff, mode), np.diag(np.arange(cutoff + 1)), hermitian=True)


def spin_ops() -> tuple[Operator, Operator, Operator]:
    """(sigma_z, sigma_+, sigma_-) in the (g, e) basis; sigma_+ |g> = |e>."""
    q = SpaceSpec(has_qubit=True)
    sz = Operator(q, np.diag([-1.0, 1.0]), hermitian=True)
    sp = Operator(q, [[0.0, 0.0], [1.0, 0.0]])
    return sz, sp, sp.dag()


def embed(op: Operator, space: SpaceSpec) -> Operator:
    """Extend ``op`` by identities onto the larger ``space``."""
    sub = op.space
    for f in sub.factors:
        if f not in space.factors or sub.factor_dim(f) != space.factor_dim(f):
            raise ValueError(f"factor {f!r} of {sub} does not fit into {space}")
    if sub == space:
        return op
    letters = iter(string.ascii_letters)
    rows = {f: next(letters) for f in space.factors}
    cols = {f: next(letters) for f in space.factors}
    dims_sub = [sub.factor_dim(f) for f in sub.factors]
    operands = [op.matrix.reshape(dims_sub * 2)]
    subscripts = ["".join(rows[f] for f in sub.factors) + "".join(cols[f] for f in sub.factors)]
    for f in space.factors:
        if f not in sub.factors:
            operands.append(np.eye(space.factor_dim(f)))
            subscripts.append(rows[f] + cols[f])
    out = "".join(rows[f] for f in space.factors) + "".join(cols[f] for f in space.factors)
    full = np.einsum(",".join(subscripts) + "->" + out, *operands)
    d = space.total_dim
    return Operator(space, full.reshape(d, d), op.hermitian)


def tensor(*ops: Operator) -> Operator:
    """Tensor product of operators on disjoint factors, in canonical order.

    The result lives on the union space, so ``tensor(A, B) == tensor(B, A)``
    when A and B act on different factors.
    """
    if not ops:
        raise ValueError("tensor needs at least one operator")
    space = reduce(SpaceSpec.union, (o.space for o in ops))
    mats = [embed(o, space).matrix for o in ops]
    herm = all(o.hermitian for o in ops)
    return Operator(space, reduce(np.matmul, mats), herm)


def basis_state(space: SpaceSpec, level: str | None = None, n: int = 0,
                nprime: int = 0) -> StateVector:
    v = np.zeros(space.total_dim, dtype=complex)
    v[space.index(level, n, nprime)] = 1.0
    return StateVector(space, v)


def coherent_leakage(amplitude: complex, cutoff: int) -> float:
    """Poisson weight sum_{n > cutoff} of |amplitude> lost to truncation."""
    return float(poisson.sf(cutoff, abs(amplitude) ** 2))


def coherent_amplitudes(amplitude: complex, cutoff: int) -> np.ndarray:
    """Renormalized truncated amplitudes e^{-|a|^2/2} a^n / sqrt(n!)."""
    c = np.empty(cutoff + 1, dtype=complex)
    c[0] = np.exp(-abs(amplitude) ** 2 / 2)
    for n in range(1, cutoff + 1):
        c[n] = c[n - 1] * amplitude / np.sqrt(n)
    return c / np.linalg.norm(c)


def coherent_state(amplitude: complex, cutoff: int, tol: float = DEFAULT_LEAKAGE_TOL,
                   mode: str = "a") -> StateVector:
    """Truncated coherent state |amplitude> of one mode.

    Raises LeakageError when the Poisson tail above ``cutoff`` exceeds
    ``tol``.  A cutoff of at least |a|^2 + 6|a| + 10 is always safe.
    """
    leak = coherent_leakage(amplitude, cutoff)
    if leak > tol:
        raise LeakageError(
            f"coherent state {amplitude} leaks {leak:.3g} above cutoff {cutoff} (tol {tol:g})")
    return StateVector(_mode_space(cutoff, mode), coherent_amplitudes(amplitude, cutoff))


def product_state(*states: StateVector) -> StateVector:
    """Product of states on disjoint factors, placed in canonical order."""
    space = reduce(SpaceSpec.union, (s.space for s in states))
    # Kronecker in slow-to-fast factor order
    ordered = sorted(states, key=lambda s: _FACTOR_ORDER.index(s.space.factors[0]))
    for s in states:
        if len(s.space.factors) != 1:
            raise ValueError("product_state takes single-factor states")
    return StateVector(space, reduce(np.kron, (s.amplitudes for s in ordered)))


def qubit_state(c_e: complex, c_g: complex) -> StateVector:
    v = np.array([c_g, c_e], dtype=complex)
    return StateVector(SpaceSpec(has_qubit=True), v / np.linalg.norm(v))


def schwinger_ops(cutoff_a: int, cutoff_b: int) -> tuple[Operator, Operator, Operator]:
    """(Jx, Jy, Jz) built from truncated ladder operators of modes a and b.

    The algebra su(2) closes exactly only on states with n + n' below both
    cutoffs; see ``guarded_indices``.
    """
    space = SpaceSpec(cutoff_a=cutoff_a, cutoff_b=cutoff_b)
    a = embed(annihilation(cutoff_a, "a"), space).matrix
    b = embed(annihilation(cutoff_b, "b"), space).matrix
    ad, bd = a.conj().T, b.conj().T
    jz = Operator(space, (ad @ a - bd @ b) / 2, hermitian=True)
    jx = Operator(space, (ad @ b + a @ bd) / 2, hermitian=True)
    jy = Operator(space, (ad @ b - a @ bd) / 2j, hermitian=True)
    return jx, jy, jz


def mode_operator(space: SpaceSpec, mode: str) -> Operator:
    """Annihilation operator of ``mode`` embedded in ``space``."""
    cutoff = space.cutoff_a if mode == "a" else space.cutoff_b
    if cutoff is None:
        raise ValueError(f"space has no mode {mode}")
    return embed(annihilation(cutoff, mode), space)


def qubit_operator(space: SpaceSpec, op: Operator) -> Operator:
    return embed(op, space)


def sector_indices(space: SpaceSpec, total: int) -> np.ndarray:
    """Basis indices with total excitation n + n' + [e] equal to ``total``."""
    return np.flatnonzero(space.excitations() == total)


def guarded_indices(space: SpaceSpec, max_total: int) -> np.ndarray:
    """Basis indices with total excitation at most ``max_total``."""
    return np.flatnonzero(space.excitations() <= max_total)
