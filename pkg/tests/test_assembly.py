import numpy as np
import pytest

from viscap.assembly import (ExteriorScaling, build_grid, cap_matrix, davies_matrix,
                             derivative_matrix, laplacian_matrix)
from viscap.eig import eigenvalues
from viscap.errors import ConfigurationError
from viscap.potentials import custom, expwell, sech2, square_well, zero_potential


def test_grid_points_small():
    g = build_grid(20, 4)
    assert np.allclose(g.points, [-20, -10, 0, 10]) and g.h == 10


def test_grid_spacing():
    assert build_grid(10, 400).h == pytest.approx(0.05)


@pytest.mark.parametrize("L,N", [(20, 5), (20, 2), (0, 10), (-1, 10), (10, 7.5)])
def test_grid_rejects(L, N):
    with pytest.raises(ConfigurationError):
        build_grid(L, N)


def test_grid_uniform_increasing():
    x = build_grid(7.5, 90).points
    assert np.all(np.diff(x) > 0) and np.allclose(np.diff(x), 2 * 7.5 / 90)


def test_laplacian_on_cosine():
    g = build_grid(10, 64)
    x = g.points
    A = laplacian_matrix(g)
    assert np.max(np.abs(A @ np.cos(np.pi * x / 10) - (np.pi / 10) ** 2 * np.cos(np.pi * x / 10))) < 1e-10


def test_laplacian_zero_mode_and_symmetry():
    g = build_grid(10, 64)
    A = laplacian_matrix(g)
    assert np.max(np.abs(A @ np.ones(64))) < 1e-12
    assert np.max(np.abs(A - A.T)) < 1e-12
    assert np.max(np.abs(A.imag)) == 0


@pytest.mark.parametrize("m", [1, 5, 17, 31])
def test_laplacian_resolved_modes(m):
    g = build_grid(3.0, 64)
    k = np.pi * m / g.L
    e = np.exp(1j * k * g.points)
    assert np.max(np.abs(laplacian_matrix(g) @ e - k * k * e)) < 1e-9 * k * k


def test_laplacian_spectrum_is_fourier():
    g = build_grid(4.0, 32)
    ev = np.sort(np.linalg.eigvalsh(laplacian_matrix(g).real))
    m = np.fft.fftfreq(32, 1 / 32)
    ref = np.sort((np.pi * m / 4.0) ** 2)
    assert np.max(np.abs(ev - ref)) < 1e-10 * ref.max()


def test_cap_degenerate_and_diagonal_entry():
    g = build_grid(4.0, 8)   # x_j = -4 + j, so x_6 = 2
    assert np.array_equal(cap_matrix(g, zero_potential(), 0.0), laplacian_matrix(g))
    one = custom("one", lambda x: np.ones_like(np.asarray(x, dtype=float)), 1.0, 1.0)
    diff = cap_matrix(g, one, 0.5) - laplacian_matrix(g)
    assert g.points[6] == 2.0
    assert diff[6, 6] == 1 - 2j
    assert cap_matrix(g, one, 0.5).shape == (8, 8)


def test_cap_difference_is_diagonal():
    g = build_grid(6.0, 40)
    p = sech2(8.0)
    D = cap_matrix(g, p, 0.3) - cap_matrix(g, p, 0.0)
    assert np.array_equal(D - np.diag(np.diag(D)), np.zeros_like(D))
    assert np.allclose(np.diag(D), -0.3j * g.points ** 2, rtol=0, atol=1e-14)


def test_cap_negative_eps():
    with pytest.raises(ConfigurationError):
        cap_matrix(build_grid(4, 8), zero_potential(), -1e-3)


def test_davies_ground_state():
    w = eigenvalues(davies_matrix(build_grid(12, 512), 1.0)).eigenvalues
    assert abs(min(w, key=abs) - 1.0) < 1e-8


def test_davies_on_ray():
    w = eigenvalues(davies_matrix(build_grid(12, 256), -1j)).eigenvalues
    low = sorted(w, key=abs)[:8]
    assert all(abs(np.angle(z) + np.pi / 4) < 1e-8 for z in low)


def test_davies_c_zero_and_bad_arg():
    g = build_grid(4, 16)
    assert np.array_equal(davies_matrix(g, 0), laplacian_matrix(g))
    with pytest.raises(ConfigurationError):
        davies_matrix(g, 1j)
    with pytest.raises(ConfigurationError):
        davies_matrix(g, -1.0)


def test_davies_doubling_n():
    a = eigenvalues(davies_matrix(build_grid(12, 256), 1.0)).eigenvalues
    b = eigenvalues(davies_matrix(build_grid(12, 512), 1.0)).eigenvalues
    for k in range(5):
        za = min(a, key=lambda z: abs(z - (2 * k + 1)))
        zb = min(b, key=lambda z: abs(z - (2 * k + 1)))
        assert abs(za - zb) < 1e-10


def test_derivative_matrix_exact_on_sine():
    g = build_grid(5, 32)
    k = np.pi * 3 / 5
    assert np.allclose(derivative_matrix(g) @ np.sin(k * g.points), k * np.cos(k * g.points), atol=1e-11)


def test_scaling_contour_shape():
    s = ExteriorScaling(3.0, 3.0, 0.5)
    t = np.linspace(-12, 12, 241)
    x, dx = s.contour(t)
    core = np.abs(t) <= 3
    assert np.array_equal(x[core], t[core] + 0j) and np.all(dx[core] == 1)
    far = np.abs(t) >= 6
    assert np.allclose(dx[far], 1 + 1j * np.tan(0.5))
    assert np.allclose(x.imag, -x[::-1].imag)
    # x' is the derivative of x
    h = 1e-6
    xp, _ = s.contour(t + h)
    xm, _ = s.contour(t - h)
    assert np.max(np.abs((xp - xm) / (2 * h) - dx)) < 1e-7


def test_scaling_without_potential_scaling_is_identity_in_core():
    # scaled and unscaled P_eps share eigenvalues (contour deformation), eps = 0.1
    p = sech2(8.0)
    target = complex(np.sqrt(7.75), -0.5) ** 2
    a = eigenvalues(cap_matrix(build_grid(40, 1024), p, 0.1)).eigenvalues
    b = eigenvalues(cap_matrix(build_grid(16, 256), p, 0.1, ExteriorScaling())).eigenvalues
    za = min(a, key=lambda z: abs(z - target))
    zb = min(b, key=lambda z: abs(z - target))
    assert abs(za - zb) < 1e-6


def test_scaling_requires_analytic_potential():
    g = build_grid(16, 64)
    p = custom("x", lambda x: np.exp(-np.asarray(x) ** 2), 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        cap_matrix(g, p, 0.1, ExteriorScaling())
    with pytest.raises(ConfigurationError):
        cap_matrix(g, square_well(1.0, 4.0), 0.1, ExteriorScaling(3.0, 3.0, 0.5))
    with pytest.raises(ConfigurationError):
        cap_matrix(build_grid(5, 64), expwell(1.0), 0.1, ExteriorScaling(3.0, 3.0, 0.5))
