import numpy as np
import pytest

from inpaint_opt import (
    Image,
    KnownData,
    Mask,
    NoKnownDataError,
    SolverParams,
    TonalParams,
    inpaint,
    load_known,
    mask_random,
    save_image,
    load_image,
    save_known,
    tonal_echo,
    tonal_lsq,
)
from inpaint_opt.solver import solve_channel
from oracles import dense_tonal_optimum

TIGHT = TonalParams(outer_tolerance=1e-9, solver=SolverParams(rel_tolerance=1e-12))


def reconstruction_mse(f, kd, tol=1e-10):
    u = inpaint(kd, SolverParams(rel_tolerance=tol))
    return float(np.mean((u.data - f.data) ** 2))


def random_instance(rng, n=6, k=4, channels=1):
    f = Image(rng.random((n, n, channels)))
    values = np.zeros((n, n))
    values.reshape(-1)[rng.choice(n * n, size=k, replace=False)] = 1.0
    return f, Mask(values, "binary")


class TestTonalLsq:
    def test_full_mask_returns_original(self, rng):
        f = Image(rng.random((5, 5)))
        full = Mask(np.ones((5, 5)), "binary")
        kd = tonal_lsq(f, full)
        assert np.array_equal(kd.values[:, 0], f.data[:, :, 0].reshape(-1))

    def test_single_pixel_optimum_is_mean(self, rng):
        f = Image(rng.random((7, 6)))
        values = np.zeros((7, 6))
        values[3, 2] = 1.0
        kd = tonal_lsq(f, Mask(values, "binary"), TIGHT)
        assert kd.values[0, 0] == pytest.approx(float(f.data.mean()), abs=1e-8)

    def test_matches_dense_normal_equations(self, rng):
        f, mask = random_instance(rng)
        kd = tonal_lsq(f, mask, TIGHT)
        expected = dense_tonal_optimum(f, mask)
        assert np.abs(kd.values - expected).max() < 1e-6

    def test_never_worse_than_unoptimised(self, rng):
        for _ in range(5):
            f, mask = random_instance(rng, n=8, k=6)
            optimised = reconstruction_mse(f, tonal_lsq(f, mask))
            plain = reconstruction_mse(f, KnownData.from_image(f, mask))
            assert optimised <= plain + 1e-12

    def test_colour_channels_independent(self, rng):
        f, mask = random_instance(rng, n=6, k=5, channels=3)
        kd = tonal_lsq(f, mask, TIGHT)
        for ch in range(3):
            single = Image(f.data[:, :, ch])
            kd_ch = tonal_lsq(single, mask, TIGHT)
            assert np.abs(kd.values[:, ch] - kd_ch.values[:, 0]).max() < 1e-7

    def test_empty_mask_rejected(self, rng):
        f = Image(rng.random((4, 4)))
        with pytest.raises(NoKnownDataError):
            tonal_lsq(f, Mask(np.zeros((4, 4)), "binary"))


class TestTonalEcho:
    def test_single_pixel_one_update_is_mean(self, rng):
        f = Image(rng.random((6, 6)))
        values = np.zeros((6, 6))
        values[2, 4] = 1.0
        kd = tonal_echo(f, Mask(values, "binary"), TonalParams(echo_sweeps=1))
        assert kd.values[0, 0] == pytest.approx(float(f.data.mean()), abs=1e-9)

    def test_stationary_at_the_optimum(self, rng):
        f, mask = random_instance(rng, n=8, k=6)
        optimal = tonal_lsq(f, mask, TIGHT)
        initial = reconstruction_mse(f, optimal)
        swept = tonal_echo_from(f, mask, optimal.values, sweeps=1)
        assert abs(reconstruction_mse(f, swept) - initial) < 1e-4 * initial + 1e-15

    def test_converges_to_lsq_mse(self, rng):
        f, mask = random_instance(rng, n=12, k=10)
        lsq_mse = reconstruction_mse(f, tonal_lsq(f, mask, TIGHT))
        echo_mse = reconstruction_mse(f, tonal_echo(f, mask, TonalParams(echo_sweeps=40)))
        assert abs(echo_mse - lsq_mse) <= 1e-4 * lsq_mse

    def test_deterministic_given_seed(self, rng):
        f, mask = random_instance(rng, n=8, k=5)
        a = tonal_echo(f, mask, TonalParams(echo_sweeps=2, rng_seed=3))
        b = tonal_echo(f, mask, TonalParams(echo_sweeps=2, rng_seed=3))
        assert np.array_equal(a.values, b.values)


def tonal_echo_from(f, mask, start_values, sweeps):
    """Run echo sweeps from explicit starting values (test helper)."""
    from inpaint_opt.tonal import _ECHO_TOLERANCE

    known = mask.bool_array()
    params = SolverParams(rel_tolerance=_ECHO_TOLERANCE)
    values = start_values.copy()
    grid = np.zeros((f.n_y, f.n_x, f.channels))
    grid[known, :] = values
    u = np.stack(
        [solve_channel(known, grid[:, :, ch], SolverParams(rel_tolerance=1e-10))
         for ch in range(f.channels)],
        axis=2,
    )
    rng = np.random.default_rng(0)
    positions = np.flatnonzero(known.reshape(-1))
    index_of = {int(p): i for i, p in enumerate(positions)}
    impulse = np.zeros(known.shape)
    for _ in range(sweeps):
        for flat in rng.permutation(positions):
            y, x = divmod(int(flat), known.shape[1])
            impulse[y, x] = 1.0
            echo = solve_channel(known, impulse, params)
            impulse[y, x] = 0.0
            ee = float(np.vdot(echo, echo))
            for ch in range(f.channels):
                step = float(np.vdot(f.data[:, :, ch] - u[:, :, ch], echo)) / ee
                u[:, :, ch] += step * echo
                values[index_of[int(flat)], ch] += step
    return KnownData(mask=mask, values=values)


class TestTonalFile:
    def test_roundtrip_to_printed_precision(self, rng, tmp_path):
        f, mask = random_instance(rng, n=6, k=5, channels=3)
        kd = KnownData.from_image(f, mask)
        save_known(kd, tmp_path / "values.tonal")
        back = load_known(tmp_path / "values.tonal")
        assert np.array_equal(back.mask.values, mask.values)
        assert np.abs(back.values - kd.values).max() < 1e-8

    def test_unclamped_values_roundtrip(self, tmp_path):
        mask = Mask(np.array([[1.0, 0.0], [0.0, 1.0]]), "binary")
        kd = KnownData(mask=mask, values=np.array([[1.31], [-0.25]]))
        save_known(kd, tmp_path / "wide.tonal")
        back = load_known(tmp_path / "wide.tonal")
        assert np.abs(back.values - kd.values).max() < 1e-8

    def test_eight_bit_export_clamps_but_float_path_does_not(self, tmp_path, rng):
        # Reconstructions from out-of-range tonal values leave [0, 1]; the
        # PGM export clamps while the TONAL path preserves the values.
        mask_values = np.zeros((6, 6))
        mask_values[0, 0] = mask_values[5, 5] = 1.0
        mask = Mask(mask_values, "binary")
        kd = KnownData(mask=mask, values=np.array([[1.4], [-0.3]]))
        u = inpaint(kd)
        assert u.data.max() > 1.0 and u.data.min() < 0.0
        save_image(u, tmp_path / "clamped.pgm")
        back = load_image(tmp_path / "clamped.pgm")
        assert back.data.max() <= 1.0 and back.data.min() >= 0.0

    def test_empty_count_rejected(self, tmp_path):
        path = tmp_path / "empty.tonal"
        path.write_text("TONAL 4 4 1 0\n")
        with pytest.raises(ValueError, match="empty"):
            load_known(path)

    def test_duplicate_coordinate_rejected(self, tmp_path):
        path = tmp_path / "dup.tonal"
        path.write_text("TONAL 4 4 1 2\n1 1 0.5\n1 1 0.25\n")
        with pytest.raises(ValueError, match="duplicate"):
            load_known(path)

    def test_out_of_range_coordinate_rejected(self, tmp_path):
        path = tmp_path / "oob.tonal"
        path.write_text("TONAL 4 4 1 1\n4 0 0.5\n")
        with pytest.raises(ValueError, match="out of range"):
            load_known(path)

    def test_count_mismatch_rejected(self, tmp_path):
        path = tmp_path / "count.tonal"
        path.write_text("TONAL 4 4 1 2\n0 0 0.5\n")
        with pytest.raises(ValueError, match="announces"):
            load_known(path)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.tonal"
        path.write_text("VALUES 4 4 1 1\n0 0 0.5\n")
        with pytest.raises(ValueError, match="header"):
            load_known(path)


def test_params_validation():
    with pytest.raises(ValueError):
        TonalParams(method="gradient")
    with pytest.raises(ValueError):
        TonalParams(outer_tolerance=0.0)
    with pytest.raises(ValueError):
        TonalParams(echo_sweeps=0)
