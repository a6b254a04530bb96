import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coophaul import netmodel


def test_hex_layout_site_counts():
    for rings, expected in [(0, 1), (1, 7), (2, 19), (3, 37)]:
        geometry = netmodel.hex_layout(rings, 500.0)
        assert geometry.n_bs == expected
        # closed form 1 + 3 r (r+1) checked against direct enumeration
        assert expected == 1 + 3 * rings * (rings + 1)


def test_hex_layout_inter_site_distance():
    geometry = netmodel.hex_layout(2, 500.0)
    d = np.linalg.norm(
        geometry.bs_positions[:, None, :] - geometry.bs_positions[None, :, :], axis=-1
    )
    np.fill_diagonal(d, np.inf)
    assert d.min() == pytest.approx(math.sqrt(3.0) * 500.0, rel=1e-12)


def test_hex_layout_positions_distinct():
    with pytest.raises(ValueError):
        netmodel.NetworkGeometry(np.zeros((2, 2)), 500.0, 1)


@pytest.mark.parametrize(
    "d_km, expected",
    [(1.0, 148.1), (0.1, 110.5), (10.0, 185.7)],
)
def test_path_loss_values(d_km, expected):
    assert netmodel.path_loss_db(d_km) == pytest.approx(expected, abs=1e-9)


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        netmodel.path_loss_db(0.0)
    with pytest.raises(ValueError):
        netmodel.path_loss_db(-1.0)


@given(
    st.floats(min_value=0.01, max_value=50.0),
    st.floats(min_value=1.01, max_value=3.0),
)
def test_path_loss_monotone_in_distance(d, factor):
    assert netmodel.path_loss_db(d * factor) > netmodel.path_loss_db(d)


def test_snr_offset_examples():
    cfg = netmodel.ScenarioConfig(system_snr_db=6.2, cell_radius_m=500.0)
    assert netmodel.snr_offset_db(cfg) == pytest.approx(6.2 + netmodel.path_loss_db(0.5))
    assert netmodel.snr_offset_db(cfg) == pytest.approx(142.98, abs=0.01)
    cfg = netmodel.ScenarioConfig(system_snr_db=0.0, cell_radius_m=1000.0)
    assert netmodel.snr_offset_db(cfg) == pytest.approx(148.1)


def test_drop_users_inside_cells_and_clamped():
    cfg = netmodel.ScenarioConfig(rings=1, users_per_bs=3)
    geometry = netmodel.hex_layout(1, 500.0)
    rng = np.random.default_rng(0)
    pos = netmodel.drop_users(geometry, cfg, rng)
    assert pos.shape == (21, 2)
    inside = np.zeros(len(pos), dtype=bool)
    for center in geometry.bs_positions:
        inside |= netmodel.point_in_hex(pos, center, 500.0)
    assert inside.all()
    d = np.linalg.norm(geometry.bs_positions[:, None, :] - pos[None, :, :], axis=-1)
    assert d.min() >= cfg.min_distance_m


def test_scenario_determinism():
    cfg = netmodel.ScenarioConfig(rings=1, rng_seed=42)
    a = netmodel.realize_scenario(cfg)
    b = netmodel.realize_scenario(cfg)
    assert np.array_equal(a.H, b.H)
    assert np.array_equal(a.ms_positions, b.ms_positions)
    assert np.array_equal(a.serving_bs, b.serving_bs)


def test_association_is_gain_argmax():
    cfg = netmodel.ScenarioConfig(rings=1, rng_seed=3)
    real = netmodel.realize_scenario(cfg)
    best = real.long_term_gain.max(axis=0)
    chosen = real.long_term_gain[real.serving_bs, np.arange(real.n_users)]
    assert np.all(chosen >= best - 1e-15)


def test_no_shadowing_associates_with_closest_site():
    cfg = netmodel.ScenarioConfig(rings=2, shadowing_enabled=False, rng_seed=8)
    real = netmodel.realize_scenario(cfg)
    d = np.linalg.norm(
        real.geometry.bs_positions[:, None, :] - real.ms_positions[None, :, :], axis=-1
    )
    assert np.array_equal(real.serving_bs, np.argmin(d, axis=0))


def test_deterministic_channel_without_fading_or_shadowing():
    cfg = netmodel.ScenarioConfig(
        rings=0, shadowing_enabled=False, fading_enabled=False, rng_seed=1
    )
    real = netmodel.realize_scenario(cfg)
    d_km = max(
        np.linalg.norm(real.ms_positions[0] - real.geometry.bs_positions[0]) / 1000.0,
        cfg.min_distance_m / 1000.0,
    )
    gain_db = -netmodel.path_loss_db(d_km) + netmodel.snr_offset_db(cfg)
    assert np.abs(real.H[0, 0]) ** 2 == pytest.approx(10 ** (gain_db / 10.0), rel=1e-12)
    assert real.long_term_gain[0, 0] == pytest.approx(10 ** (gain_db / 10.0), rel=1e-12)


def test_fading_moment_matches_long_term_gain():
    # Monte-Carlo second moment over 1e5 draws must sit within 2%
    cfg = netmodel.ScenarioConfig(rings=0, rng_seed=5)
    geometry = netmodel.with_antennas(netmodel.hex_layout(0, 500.0), 1)
    rng = np.random.default_rng(5)
    pos = netmodel.drop_users(geometry, cfg, rng)
    draws = 100_000
    fading = (
        rng.standard_normal(draws) + 1j * rng.standard_normal(draws)
    ) / math.sqrt(2.0)
    real = netmodel.realize_channel(geometry, pos, cfg, np.random.default_rng(6))
    sample = real.long_term_gain[0, 0] * np.abs(fading) ** 2
    assert sample.mean() == pytest.approx(real.long_term_gain[0, 0], rel=0.02)


def test_snr_offset_scales_channel_power():
    cfg1 = netmodel.ScenarioConfig(rings=1, system_snr_db=6.2, rng_seed=11)
    cfg2 = netmodel.ScenarioConfig(rings=1, system_snr_db=9.2, rng_seed=11)
    a = netmodel.realize_scenario(cfg1)
    b = netmodel.realize_scenario(cfg2)
    assert np.allclose(b.H, a.H * 10 ** (3.0 / 20.0), rtol=1e-12)


def test_balanced_scenario_counts():
    for antennas in (1, 2):
        cfg = netmodel.ScenarioConfig(
            rings=2, antennas_per_bs=antennas, users_per_bs=antennas, rng_seed=4
        )
        real = netmodel.realize_balanced_scenario(cfg)
        assert real.is_balanced(antennas)
        best = real.long_term_gain.max(axis=0)
        chosen = real.long_term_gain[real.serving_bs, np.arange(real.n_users)]
        assert np.all(chosen >= best - 1e-15)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "scenario.txt"
    path.write_text(
        "rings = 1\n"
        "system_snr_db = 11.8\n"
        "antennas_per_bs = 2\n"
        "users_per_bs = 2\n"
        "shadowing_enabled = false\n"
        "# a comment\n"
        "rng_seed = 99\n"
    )
    cfg = netmodel.ScenarioConfig.from_file(path)
    assert cfg.rings == 1
    assert cfg.system_snr_db == 11.8
    assert cfg.antennas_per_bs == 2
    assert not cfg.shadowing_enabled
    assert cfg.rng_seed == 99


def test_config_file_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("bogus_key = 3\n")
    with pytest.raises(ValueError):
        netmodel.ScenarioConfig.from_file(path)


def test_channel_dump_roundtrip(tmp_path):
    cfg = netmodel.ScenarioConfig(rings=1, antennas_per_bs=2, users_per_bs=2, rng_seed=17)
    real = netmodel.realize_scenario(cfg)
    path = tmp_path / "chan.txt"
    netmodel.write_channel(real, path)
    back = netmodel.read_channel(path)
    assert np.array_equal(back.H, real.H)
    assert np.array_equal(back.long_term_gain, real.long_term_gain)
    assert np.array_equal(back.serving_bs, real.serving_bs)
    assert np.array_equal(back.ms_positions, real.ms_positions)
    assert back.geometry.antennas_per_bs == 2
    assert back.seed == real.seed


def test_channel_dump_rejects_other_files(tmp_path):
    path = tmp_path / "other.txt"
    path.write_text("not a dump\n")
    with pytest.raises(ValueError):
        netmodel.read_channel(path)


@settings(max_examples=20)
@given(st.integers(min_value=0, max_value=3))
def test_hex_count_formula(rings):
    assert netmodel.hex_layout(rings, 250.0).n_bs == 1 + 3 * rings * (rings + 1)
