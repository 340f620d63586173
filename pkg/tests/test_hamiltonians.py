import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vacuum_berry.fock import SpaceSpec, embed, mode_operator, spin_ops
from vacuum_berry.hamiltonians import (
    SectorLoopFamily,
    SingleModeParams,
    TwoModeParams,
    TwoModeSector,
    excitation_number,
    frame_unitary,
    jc_single_mode,
    loop_unitary,
    phase_shift_unitary,
    phase_shifted_jc,
    phase_shifted_jc_family,
    semiclassical_h,
    two_mode_initial,
    two_mode_transformed,
)

angles = st.floats(0, 2 * np.pi)
thetas = st.floats(0, np.pi)
couplings = st.floats(0, 3)


def _herm_err(m):
    return np.max(np.abs(m - m.conj().T))


def test_semiclassical_h_is_field_dot_sigma():
    h = semiclassical_h(2.0, 0.5, 3.0, 0.3).matrix
    bx, by, bz = 1.5 * np.cos(0.3), 1.5 * np.sin(0.3), 1.0
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, 1j], [-1j, 0]])  # (g, e) ordering flips the sign of sigma_y
    sz = np.diag([-1, 1])
    assert np.allclose(h, bx * sx + by * sy + bz * sz)


def test_jc_spectrum_matches_closed_form():
    p = SingleModeParams(nu=1.0, omega=1.7, lam=0.4)
    w = np.linalg.eigvalsh(jc_single_mode(p, 10).matrix)
    ground = -p.omega / 2
    rungs = []
    for n in range(10):
        r = 0.5 * np.hypot(p.delta, 2 * p.lam * np.sqrt(n + 1))
        rungs += [p.nu * (n + 0.5) + r, p.nu * (n + 0.5) - r]
    top = p.nu * 10 + p.omega / 2  # |e, cutoff> is uncoupled
    assert np.allclose(w, np.sort([ground, top] + rungs), atol=1e-12)


@given(couplings, st.floats(-2, 2), angles)
def test_phase_shifted_jc_is_conjugation(lam, delta, phi):
    p = SingleModeParams.from_detuning(delta, lam)
    u = phase_shift_unitary(6, phi).matrix
    h0 = jc_single_mode(p, 6).matrix
    assert np.max(np.abs(phase_shifted_jc(p, 6, phi).matrix - u @ h0 @ u.conj().T)) < 1e-12
    fam = phase_shifted_jc_family(p, 6)
    assert np.max(np.abs(fam(phi) - phase_shifted_jc(p, 6, phi).matrix)) < 1e-12


@given(couplings, st.floats(-2, 2), angles)
def test_single_mode_builders_hermitian_and_conserving(lam, delta, phi):
    p = SingleModeParams.from_detuning(delta, lam)
    h = phase_shifted_jc(p, 5, phi)
    n = excitation_number(h.space).matrix
    assert _herm_err(h.matrix) < 1e-12
    assert np.max(np.abs(h.matrix @ n - n @ h.matrix)) < 1e-12


@given(couplings, thetas, angles)
def test_two_mode_builders_hermitian_and_conserving(lam, theta, phi):
    h = two_mode_transformed(TwoModeParams(1.0, lam, theta, phi), 4, 3).matrix
    n = excitation_number(SpaceSpec(True, 4, 3)).matrix
    assert _herm_err(h) < 1e-12
    assert np.max(np.abs(h @ n - n @ h)) < 1e-12


@given(couplings, st.floats(-2, 2), st.floats(0, 5), angles)
def test_semiclassical_builder_hermitian(lam, delta, alpha, phi):
    assert _herm_err(semiclassical_h(delta, lam, alpha, phi).matrix) < 1e-12


def test_two_mode_initial_is_single_mode_jc_on_a():
    h = two_mode_initial(TwoModeParams(1.0, 0.6), 4, 3)
    space = h.space
    sz, sp, _ = (embed(o, space) for o in spin_ops())
    a, b = mode_operator(space, "a"), mode_operator(space, "b")
    expect = (0.5 * sz + a.dag() @ a + b.dag() @ b + 0.6 * (sp @ a + (sp @ a).dag()))
    assert np.allclose(h.matrix, expect.matrix)
    with pytest.raises(ValueError):
        two_mode_initial(TwoModeParams(1.0, 0.6, theta=0.1), 4, 3)


@given(thetas, angles)
def test_transformed_equals_frame_conjugation(theta, phi):
    # exact on complete excitation sectors only
    ca = cb = 4
    params = TwoModeParams(1.0, 0.7)
    v = frame_unitary(theta, phi, ca, cb).matrix
    h0 = two_mode_initial(params, ca, cb).matrix
    h = two_mode_transformed(params.at(theta, phi), ca, cb).matrix
    space = SpaceSpec(True, ca, cb)
    keep = np.flatnonzero(space.excitations() <= min(ca, cb))
    diff = (v @ h0 @ v.conj().T - h)[np.ix_(keep, keep)]
    assert np.max(np.abs(diff)) < 1e-12


def test_loop_unitary_rotates_modes():
    # exp(-i phi Jz) a exp(i phi Jz) = e^{i phi/2} a
    u = loop_unitary(0.0, 0.9, 3, 3).matrix
    a = mode_operator(SpaceSpec(True, 3, 3), "a").matrix
    assert np.allclose(u @ a @ u.conj().T, np.exp(0.45j) * a)


@given(st.integers(0, 6), thetas, angles, couplings)
def test_sector_hamiltonian_matches_full(total, theta, phi, lam):
    ca, cb = 6, 5
    params = TwoModeParams(1.0, lam, theta, phi)
    sector = TwoModeSector(total, ca, cb)
    full = two_mode_transformed(params, ca, cb).matrix
    ix = np.ix_(sector.indices, sector.indices)
    assert np.max(np.abs(sector.hamiltonian(params) - full[ix])) < 1e-12


def test_sector_schwinger_blocks():
    from vacuum_berry.fock import schwinger_ops
    sector = TwoModeSector(3, 4, 4)
    jx, jy, jz = schwinger_ops(4, 4)
    ix = np.ix_(sector.indices, sector.indices)
    for small, big in ((sector.jx, jx), (sector.jy, jy), (sector.jz, jz)):
        assert np.allclose(small, np.kron(big.matrix, np.eye(2))[ix])


def test_sector_loop_family_eigensystem(rng):
    sector = TwoModeSector(4, 6, 6)
    fam = SectorLoopFamily(sector, TwoModeParams(1.0, 0.8))
    pts = rng.uniform([0, 0], [np.pi, 2 * np.pi], size=(20, 2))
    w, v = fam.eigensystem(pts)
    for k, p in enumerate(pts):
        h = fam(tuple(p))
        assert np.max(np.abs(h @ v[k] - v[k] * w[k])) < 1e-12
        assert np.allclose(v[k].conj().T @ v[k], np.eye(sector.dim), atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        SingleModeParams(1.0, 1.0, -0.1)
    with pytest.raises(ValueError):
        TwoModeParams(1.0, 1.0, theta=4.0)
