import numpy as np
import pytest
from scipy.linalg import fractional_matrix_power

from tfloc.core import gauss_window
from tfloc.covers import Cover, Symbol
from tfloc.errors import InvalidArgumentError, NotAFrameError, PreconditionViolation
from tfloc.frames import SelectionPolicy, frame_operator
from tfloc.gabor import (
    Lattice,
    LatticeGaborSystem,
    canonical_tight,
    gabor_eigenframe,
    gabor_frame_operator,
    gabor_multiplier,
    lattice_coverage_min,
    lattice_masses,
    symbol_on_lattice,
)
from tfloc.locop import assemble_locop, tf_shift_matrix

L16 = 16

# golden values for L=16, a=b=2 with the Gaussian window (independent
# double-loop oracle, frozen before the build)
GABOR16_A = 3.9701767137710937
GABOR16_B = 4.0299348811843
GM16_BLOCK_TOP8 = [
    0.9870592851010586,
    0.9261806741305996,
    0.7878388372734503,
    0.5857597270262443,
    0.3722985812609125,
    0.20007098588158684,
    0.09083121957665807,
    0.03491242848579908,
]


@pytest.fixture(scope="module")
def phi16():
    return gauss_window(L16)


@pytest.fixture(scope="module")
def lat22():
    return Lattice(L16, 2, 2)


@pytest.fixture(scope="module")
def tight22(phi16, lat22):
    return LatticeGaborSystem.build(canonical_tight(phi16, lat22), lat22)


def lattice_block_cover(L=L16, a=2, b=2):
    """Partition of the (L/a) x (L/b) lattice into four quadrant blocks."""
    nj, nk = L // a // 2, L // b // 2
    regions = []
    for bj in range(2):
        for bk in range(2):
            cells = [
                (a * (nj * bj + j), b * (nk * bk + k)) for j in range(nj) for k in range(nk)
            ]
            center = (a * (nj * bj + nj // 2), b * (nk * bk + nk // 2))
            regions.append(Symbol.indicator(L, center, cells))
    return Cover(L, tuple(regions))


class TestLattice:
    def test_point_count(self):
        lat = Lattice(16, 2, 4)
        assert lat.n_points == 8 * 4
        pts = lat.points()
        assert pts.shape == (32, 2)
        assert lat.contains((2, 4)) and not lat.contains((1, 4))

    def test_rejects_non_divisors(self):
        with pytest.raises(InvalidArgumentError):
            Lattice(16, 3, 2)


class TestFrameOperator:
    def test_full_grid_is_L_times_identity(self, phi16):
        S, A, B = gabor_frame_operator(phi16, Lattice(L16, 1, 1))
        assert np.max(np.abs(S - L16 * np.eye(L16))) <= 1e-9
        assert A == pytest.approx(L16, abs=1e-9)
        assert B == pytest.approx(L16, abs=1e-9)

    def test_golden_bounds(self, phi16, lat22):
        _, A, B = gabor_frame_operator(phi16, lat22)
        assert A == pytest.approx(GABOR16_A, abs=1e-8)
        assert B == pytest.approx(GABOR16_B, abs=1e-8)

    def test_undersampled_reports_zero_lower_bound(self, phi16):
        lat = Lattice(L16, 8, 8)  # 4 points < 16 dimensions
        _, A, _ = gabor_frame_operator(phi16, lat)
        assert abs(A) <= 1e-9

    def test_commutes_with_lattice_shifts(self, phi16, lat22):
        S, _, _ = gabor_frame_operator(phi16, lat22)
        for z in [(2, 0), (0, 2), (4, 6)]:
            U = tf_shift_matrix(L16, z)
            assert np.max(np.abs(U @ S - S @ U)) <= 1e-9


class TestCanonicalTight:
    def test_already_tight_returns_same_window(self, phi16):
        phit = canonical_tight(phi16, Lattice(L16, 1, 1))
        assert abs(abs(np.vdot(phit.samples, phi16.samples)) - 1.0) <= 1e-12

    def test_forces_tightness(self, tight22):
        assert tight22.tight
        assert tight22.B_gab / tight22.A_gab <= 1 + 1e-8
        assert tight22.tight_constant == pytest.approx(L16 / tight22.lattice.n_points, rel=1e-9)

    def test_against_matrix_power_oracle(self, phi16, lat22):
        phit = canonical_tight(phi16, lat22)
        S, _, _ = gabor_frame_operator(phi16, lat22)
        oracle = fractional_matrix_power(S, -0.5) @ phi16.samples
        oracle = oracle / np.linalg.norm(oracle)
        assert np.max(np.abs(phit.samples - oracle)) <= 1e-9

    def test_not_a_frame_rejected(self, phi16):
        with pytest.raises(NotAFrameError):
            canonical_tight(phi16, Lattice(L16, 8, 8))


class TestGaborMultiplier:
    def test_unit_mask_is_identity(self, tight22):
        GM = gabor_multiplier(np.ones((8, 8)), tight22)
        assert np.max(np.abs(GM.matrix - np.eye(L16))) <= 1e-9

    def test_point_mask_rank_one(self, tight22):
        m = np.zeros((8, 8))
        m[2, 3] = 1.0
        GM = gabor_multiplier(m, tight22)
        ev = GM.spectrum().eigenvalues
        assert ev[0] == pytest.approx(tight22.tight_constant, abs=1e-10)
        assert np.max(np.abs(ev[1:])) <= 1e-10

    def test_block_mask_golden_spectrum(self, tight22):
        m = np.zeros((8, 8))
        m[:4, :4] = 1.0
        ev = gabor_multiplier(m, tight22).spectrum().eigenvalues
        np.testing.assert_allclose(ev[:8], GM16_BLOCK_TOP8, atol=1e-8)

    def test_trace_identity_random_masks(self, tight22):
        rng = np.random.default_rng(40)
        A = tight22.tight_constant
        for _ in range(20):
            m = rng.random((8, 8))
            GM = gabor_multiplier(m, tight22)
            assert GM.trace == pytest.approx(A * float(m.sum()), rel=1e-10)

    def test_lattice_covariance(self, tight22):
        rng = np.random.default_rng(41)
        m = rng.random((8, 8))
        ev = gabor_multiplier(m, tight22).spectrum().eigenvalues
        for shift in [(1, 0), (0, 3), (2, 5)]:  # lattice-index shifts
            m_shifted = np.roll(np.roll(m, shift[0], axis=0), shift[1], axis=1)
            ev_s = gabor_multiplier(m_shifted, tight22).spectrum().eigenvalues
            np.testing.assert_allclose(ev_s, ev, atol=1e-9)

    def test_full_grid_bridge_to_locop(self, phi16):
        sys1 = LatticeGaborSystem.build(phi16, Lattice(L16, 1, 1))
        rng = np.random.default_rng(42)
        m = rng.random((L16, L16))
        GM = gabor_multiplier(m, sys1)
        cells = [(x, xi) for x in range(L16) for xi in range(L16)]
        H = assemble_locop(Symbol(L16, (0, 0), cells, m.reshape(-1)), phi16)
        assert np.max(np.abs(GM.matrix - H.matrix)) <= 1e-9

    def test_rejects_negative_mask(self, tight22):
        m = np.zeros((8, 8))
        m[0, 0] = -1.0
        with pytest.raises(InvalidArgumentError):
            gabor_multiplier(m, tight22)

    def test_rejects_non_tight_system(self, phi16, lat22):
        loose = LatticeGaborSystem.build(phi16, lat22)  # condition ~ 1.015
        assert not loose.tight
        with pytest.raises(PreconditionViolation):
            gabor_multiplier(np.ones((8, 8)), loose)


class TestLatticeSymbols:
    def test_symbol_restriction(self, lat22):
        s = Symbol(L16, (0, 0), [(0, 0), (2, 4)], [0.5, 2.0])
        mask = symbol_on_lattice(s, lat22)
        assert mask[0, 0] == 0.5 and mask[1, 2] == 2.0
        assert mask.sum() == pytest.approx(2.5)

    def test_off_lattice_cell_rejected_with_index(self, lat22):
        s = Symbol(L16, (0, 0), [(0, 0), (3, 4)], [1.0, 1.0])
        with pytest.raises(InvalidArgumentError) as err:
            symbol_on_lattice(s, lat22)
        assert err.value.context["cell_index"] == 1

    def test_masses_match_direct_sums(self, lat22):
        cover = lattice_block_cover()
        assert lattice_masses(cover, lat22) == [16.0, 16.0, 16.0, 16.0]
        assert lattice_coverage_min(cover, lat22) == 1.0


class TestGaborEigenframe:
    def test_whole_lattice_single_region_orthonormal(self, tight22, lat22):
        cells = [tuple(p) for p in lat22.points()]
        cover = Cover(L16, (Symbol.indicator(L16, (0, 0), cells),))
        frame, cert = gabor_eigenframe(
            cover, tight22, SelectionPolicy("epsilon", epsilon=0.5, n_max=L16)
        )
        assert len(frame.atoms) == L16
        assert cert.A == pytest.approx(1.0, abs=1e-9)
        assert cert.B == pytest.approx(1.0, abs=1e-9)

    def test_block_partition_frame_with_oracle(self, tight22):
        cover = lattice_block_cover()
        policy = SelectionPolicy("epsilon", epsilon=0.1, n_max=L16)
        frame, cert = gabor_eigenframe(cover, tight22, policy)
        assert cert.is_frame and cert.A > 0
        # frame operator oracle: sum over regions of (GM^eps)^2
        expected = np.zeros((L16, L16), complex)
        for s in cover.regions:
            GM = gabor_multiplier(symbol_on_lattice(s, tight22.lattice), tight22)
            spec = GM.spectrum()
            keep = spec.eigenvalues > 0.1
            Q = spec.eigenvectors[:, keep]
            expected += (Q * spec.eigenvalues[keep] ** 2) @ Q.conj().T
        assert np.max(np.abs(frame_operator(frame) - expected)) <= 1e-9

    def test_noncovering_lattice_rejected(self, tight22):
        cover = Cover(L16, (Symbol.indicator(L16, (0, 0), [(0, 0)]),))
        with pytest.raises(PreconditionViolation):
            gabor_eigenframe(cover, tight22, SelectionPolicy("epsilon", epsilon=0.1))

    def test_degenerate_region_warns(self, tight22, lat22):
        cells = [tuple(p) for p in lat22.points()]
        full = Symbol.indicator(L16, (0, 0), cells)
        dead = Symbol(L16, (2, 2), [(2, 2)], [0.0])  # zero mask on the lattice
        cover = Cover(L16, (full, dead))
        with pytest.warns(UserWarning, match="numerically zero"):
            frame, cert = gabor_eigenframe(
                cover, tight22, SelectionPolicy("epsilon", epsilon=0.5, n_max=L16)
            )
        assert all(a.gamma == 0 for a in frame.atoms)
        assert cert.A == pytest.approx(1.0, abs=1e-9)

    def test_off_lattice_center_rejected(self, tight22, lat22):
        cells = [tuple(p) for p in lat22.points()]
        cover = Cover(L16, (Symbol.indicator(L16, (1, 0), cells),))
        with pytest.raises(InvalidArgumentError):
            gabor_eigenframe(cover, tight22, SelectionPolicy("epsilon", epsilon=0.1))
