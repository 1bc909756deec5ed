import random

import pytest

from rtsim.config import (ConfigError, ScenarioConfig, bundled_config_path, bundled_configs,
                          parse_config, resolve_config)
from rtsim.scheduling import PolicyVariant
from rtsim.traffic import TrafficSource, generate_traffic, toggle_times


def test_empty_file_gives_table_defaults():
    cfg = parse_config("")
    assert (cfg.node_count, cfg.area, cfg.radio_range) == (100, 1000.0, 250.0)
    assert (cfg.bandwidth, cfg.packet_bytes, cfg.data_rate, cfg.sim_time) == (
        2_000_000.0, 32, 2.0, 120.0)
    assert cfg == ScenarioConfig()


def test_deadline_sweep():
    cfg = parse_config("deadline = 0.5,1.0,1.5,2.0\nseeds = 1..5")
    assert cfg.deadlines == [0.5, 1.0, 1.5, 2.0]
    assert cfg.seeds == [1, 2, 3, 4, 5]


def test_sections_and_dotted_keys():
    text = """
    # comment
    name = demo
    node_count = 49
    [sched]
    policy = SRTS, DVM
    alpha = 0.3, 0.7
    [routing]
    protocol = sp, gf
    power_aware = off
    [mac]
    w0 = 16
    energy.capacity = 500
    fail node 7 at 12.5
    """
    cfg = parse_config(text)
    assert cfg.name == "demo" and cfg.node_count == 49
    assert cfg.policies == [PolicyVariant.SRTS, PolicyVariant.DVM]
    assert cfg.alphas == [0.3, 0.7]
    assert cfg.protocols == ["sp", "gf"] and cfg.power_aware is False
    assert cfg.mac.w0 == 16 and cfg.energy.capacity == 500
    assert cfg.failures[0].node == "7" and cfg.failures[0].time == 12.5


@pytest.mark.parametrize("text,line", [
    ("nodeCount = -5", 1),
    ("\nbogus = 3", 2),
    ("deadline = 1\nno equals sign here", 2),
    ("[weird]", 1),
    ("alpha = 1.5", 1),
    ("nodeCount = 50", 1),
    ("fail node G", 1),
    ("seeds = 5..1", 1),
])
def test_parse_errors_name_lines(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    if line:
        assert f"line {line}" in str(info.value)


def test_bundled_configs_parse():
    names = bundled_configs()
    for expected in ("paper_grid", "paper_random", "paper_bursty", "fig2_repair",
                     "alpha_sweep"):
        assert expected in names
    for name in names:
        cfg = resolve_config(name)
        assert cfg.name
        assert bundled_config_path(name).exists()


def test_bursty_config_spans_tenth_second_steps():
    cfg = resolve_config("paper_bursty")
    assert cfg.traffic == "bursty"
    assert len(cfg.deadlines) == 30
    assert cfg.deadlines[0] == pytest.approx(0.1) and cfg.deadlines[-1] == pytest.approx(3.0)


def test_missing_config_file():
    with pytest.raises(FileNotFoundError):
        resolve_config("/nonexistent/none.cfg")


# traffic

def test_steady_publication_count():
    times = list(generate_traffic(TrafficSource(3), random.Random(1), 120.0))
    assert abs(len(times) - 240) <= 1
    gaps = {round(b - a, 9) for a, b in zip(times, times[1:])}
    assert gaps == {0.5}


def test_bursty_publication_count():
    src = TrafficSource(3, "bursty")
    times = list(generate_traffic(src, random.Random(1), 120.0))
    assert abs(len(times) - 120) <= 2
    assert all(t % 10.0 < 5.0 for t in times)


def test_distinct_phases_per_node():
    from rtsim.engine import make_rng
    first = [next(generate_traffic(TrafficSource(u), make_rng(1, ("traffic", u)), 120.0))
             for u in range(5)]
    assert len(set(first)) == 5
    assert all(0 <= t < 0.5 for t in first)


def test_phase_spread_narrows_offsets():
    src = TrafficSource(0, phase_spread=0.01)
    for seed in range(20):
        assert next(generate_traffic(src, random.Random(seed), 120.0)) < 0.01


def test_toggle_times():
    src = TrafficSource(0, "bursty")
    toggles = toggle_times(src, 20.0)
    assert toggles == [(0.0, True), (5.0, False), (10.0, True), (15.0, False)]
    assert toggle_times(TrafficSource(0), 20.0) == []
