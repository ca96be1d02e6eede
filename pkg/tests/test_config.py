"""Key-value configuration: defaults, unit conversion, diagnostics and
the resolved-value hash."""

import hashlib
import math

import pytest

from negdelay.config import (
    DEFAULT_SIGMA0_OVER_AREA,
    default_config,
    dump_config,
    load_config,
    parse_config,
)
from negdelay.errors import ConfigError

TWO_PI = 2.0 * math.pi


def test_defaults_mirror_standing_constants():
    run = default_config()
    m = run.medium
    assert m.od == 4.0
    assert m.gamma == pytest.approx(1.0 / 26e-9, rel=1e-15)
    assert m.probe_detuning == pytest.approx(-TWO_PI * 20e6, rel=1e-15)
    assert m.omega_atom == pytest.approx(TWO_PI * 384.2302e12, rel=1e-15)
    assert m.omega_probe == m.omega_atom + m.probe_detuning
    assert m.sigma0_over_area == DEFAULT_SIGMA0_OVER_AREA
    assert m.n_slabs == 128
    assert run.pulse.sigma_rms == pytest.approx(10e-9, rel=1e-15)
    assert run.pulse.center_detuning == 0.0
    s = run.shot
    assert s.n_samples == 36 and s.dt == pytest.approx(16e-9, rel=1e-15)
    assert s.mean_photons == 100.0 and s.target_click_prob == 0.2
    assert s.phase_noise_rms == pytest.approx(0.120, rel=1e-15)
    assert s.background_click_fraction == 0.1
    assert not s.lowpass_enabled
    assert s.shots_per_cycle == 1500
    assert s.pulse_center == pytest.approx(260e-9, rel=1e-15)
    assert run.n_cycles == 100 and run.seed == 0
    assert run.n_atoms == 64 and run.checkpoint_interval == 64
    assert run.window_fraction == 0.3
    assert run.sweep_sigmas == (10.0, 18.0, 27.0, 36.0)
    assert run.sweep_ods == (2.0, 4.0)


def test_default_hash_is_frozen():
    assert default_config().config_hash == "da103f89373a"


def test_dump_is_the_hash_preimage():
    run = parse_config("medium.od = 3.0\ncampaign.seed = 5")
    text = dump_config(run)
    assert hashlib.sha256(text.encode()).hexdigest()[:12] == run.config_hash
    for key in (
        "medium.od = 3.0",
        "campaign.seed = 5",
        "shot.shots_per_cycle = 1500",
        "sweep.od = 2.0,4.0",
    ):
        assert key in text


def test_hash_tracks_resolved_values_only():
    base = default_config().config_hash
    assert parse_config("medium.od = 2").config_hash != base
    # explicitly writing a default changes nothing resolved
    assert parse_config("medium.od = 4.0").config_hash == base
    assert parse_config("# just a comment\n\n").config_hash == base


def test_empty_file_is_the_default():
    assert parse_config("").config_hash == default_config().config_hash


def test_lifetime_and_linewidth_are_exclusive():
    with pytest.raises(ConfigError, match="not both"):
        parse_config("medium.tau_sp_ns = 26\nmedium.gamma_MHz = 6.1")
    run = parse_config("medium.gamma_MHz = 6.0")
    assert run.medium.gamma == pytest.approx(TWO_PI * 6e6, rel=1e-15)
    run = parse_config("medium.tau_sp_ns = 13")
    assert run.medium.gamma == pytest.approx(1.0 / 13e-9, rel=1e-15)


def test_comments_and_blank_lines():
    run = parse_config("# header\n\nmedium.od = 2.5  # inline note\n\n")
    assert run.medium.od == 2.5


@pytest.mark.parametrize(
    "text, msg",
    [
        ("\n\nfoo.bar = 1", "line 3: unknown key"),
        ("medium.od = 2\nmedium.od = 3", "line 2: duplicate"),
        ("medium.od 4", "line 1: expected"),
        ("medium.od = four", "key 'medium.od'"),
        ("shot.lowpass_enabled = maybe", "not a boolean"),
        ("shot.n_samples = 3.5", "key 'shot.n_samples'"),
    ],
)
def test_parse_diagnostics(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


@pytest.mark.parametrize(
    "text, msg",
    [
        ("campaign.n_cycles = -1", "non-negative"),
        ("campaign.seed = -1", "non-negative"),
        ("oracle.n_atoms = 0", "at least 1"),
        ("oracle.checkpoint_interval = 0", "at least 1"),
        ("analysis.window_fraction = 1.0", "lie in"),
        ("medium.tau_sp_ns = 0", "positive"),
        ("medium.tau_sp_ns = -26", "positive"),
    ],
)
def test_value_validation(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_inconsistent_window_surfaces_shot_validation():
    with pytest.raises(ConfigError, match="does not"):
        parse_config("shot.dt_ns = 17")


def test_sweep_lists():
    run = parse_config("sweep.sigma_rms_ns = 5, 10.5, 20\nsweep.od = 1")
    assert run.sweep_sigmas == (5.0, 10.5, 20.0)
    assert run.sweep_ods == (1.0,)
    with pytest.raises(ConfigError, match="key 'sweep.od'"):
        parse_config("sweep.od = 1;2")


def test_unit_conversions():
    run = parse_config(
        "shot.phase_noise_mrad = 80\n"
        "shot.wobble_amplitude_urad = 90\n"
        "pulse.center_detuning_MHz = 3.0\n"
    )
    assert run.shot.phase_noise_rms == pytest.approx(0.080, rel=1e-15)
    assert run.shot.wobble_amplitude == pytest.approx(90e-6, rel=1e-15)
    assert run.pulse.center_detuning == pytest.approx(TWO_PI * 3e6, rel=1e-15)


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("medium.od = 2.0\ncampaign.n_cycles = 7\n")
    run = load_config(path)
    assert run.medium.od == 2.0 and run.n_cycles == 7
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")
