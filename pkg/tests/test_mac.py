import statistics

import pytest

from rtsim.engine import Simulator, make_rng
from rtsim.mac import (Channel, MacLayer, MacParams, TxAttempt, TxStatus, backoff_window,
                       measure_hop_delay, payload_time, priority_class,
                       sample_contended_hop_delay)
from rtsim.topology import deploy_positions

PARAMS = MacParams()


def _net(positions, params=PARAMS, seed=1):
    topo = deploy_positions(positions, sink=0)
    sim = Simulator(end=10.0)
    done = []
    rngs = [make_rng(seed, ("mac", i)) for i in range(len(positions))]
    mac = MacLayer(sim, topo, params, rngs,
                   lambda att, status, delay: done.append((att, status, delay, sim.now)))
    mac.channel.delivered_log = []
    return topo, sim, mac, done


def test_payload_time_of_default_packet():
    assert payload_time(32, 2_000_000) == pytest.approx(0.000128, abs=1e-12)
    assert PARAMS.payload_time == pytest.approx(0.000128, abs=1e-12)


def test_idle_delay_is_backoff_plus_payload():
    topo, sim, mac, done = _net([(0, 0), (100, 0)])
    mac.submit(TxAttempt(1, 0, None))
    sim.run()
    (att, status, delay, _), = done
    assert status is TxStatus.DELIVERED
    backoff = delay - PARAMS.payload_time
    slots = backoff / PARAMS.slot
    assert slots == pytest.approx(round(slots), abs=1e-6)
    assert 0 <= round(slots) < PARAMS.w0


def test_measure_hop_delay():
    assert measure_hop_delay(10.0, 10.004) == pytest.approx(0.004)
    with pytest.raises(ValueError):
        measure_hop_delay(2.0, 1.0)


def test_simultaneous_senders_collide_and_back_off():
    # no carrier sense and a single-slot window force a head-on start
    params = MacParams(w0=1, max_retries=0, carrier_sense=False)
    topo, sim, mac, done = _net([(0, 0), (100, 0), (-100, 0)], params)
    mac.submit(TxAttempt(1, 0, None))
    mac.submit(TxAttempt(2, 0, None))
    sim.run()
    assert sorted(s.value for _, s, _, _ in done) == ["MacFailure", "MacFailure"]
    assert mac.collisions == 2


def test_retry_exhaustion_reports_mac_failure():
    params = MacParams(w0=1, max_retries=3, carrier_sense=False)
    topo, sim, mac, done = _net([(0, 0), (100, 0), (-100, 0)], params)
    mac.submit(TxAttempt(1, 0, None))
    mac.submit(TxAttempt(2, 0, None))
    sim.run()
    assert all(att.retries == 4 for att, *_ in done)
    assert all(s is TxStatus.MAC_FAILURE for _, s, _, _ in done)


def test_broken_link_is_reported():
    topo, sim, mac, done = _net([(0, 0), (100, 0), (600, 0)])
    mac.submit(TxAttempt(1, 2, None))
    sim.run(1.0)
    assert done[0][1] is TxStatus.LINK_BROKEN
    topo.nodes[0].alive = False
    mac.submit(TxAttempt(1, 0, None))
    sim.run()
    assert done[1][1] is TxStatus.LINK_BROKEN


def test_delivered_transmissions_never_overlap_in_range():
    positions = [(500 + dx, 500 + dy) for dx in (-150, 0, 150) for dy in (-150, 0, 150)]
    topo, sim, mac, done = _net(positions, seed=4)
    for k in range(1, len(positions)):
        mac.submit(TxAttempt(k, 4 if k != 4 else 0, None))
    sim.run()
    ch = mac.channel
    log = ch.delivered_log
    assert log
    for i, a in enumerate(log):
        assert a.end - a.start >= PARAMS.payload_time - 1e-12
        for b in log[i + 1:]:
            if a.start < b.end and b.start < a.end:
                assert not ch.interferes(a.sender, b.receiver)
                assert not ch.interferes(b.sender, a.receiver)
    for att, status, delay, _ in done:
        if status is TxStatus.DELIVERED:
            assert delay >= PARAMS.payload_time - 1e-12


def test_channel_collision_rule():
    topo = deploy_positions([(0, 0), (200, 0), (400, 0), (900, 0)], sink=0)
    ch = Channel(topo)
    a = ch.begin(1, 0, 0.0, 1.0)
    b = ch.begin(2, 1, 0.5, 1.5)  # b's receiver is busy sending a
    c = ch.begin(3, 2, 2.0, 3.0)  # after both ended
    assert b.collided
    assert not a.collided  # node 2 is 400 m from node 0, out of range
    assert not c.collided
    # hidden terminals: 0 and 2 cannot hear each other but share receiver 1
    d = ch.begin(0, 1, 4.0, 5.0)
    e = ch.begin(2, 1, 4.5, 5.5)
    assert d.collided and e.collided


def test_priority_classes_and_windows():
    assert priority_class(5.0, PARAMS) == 0
    assert priority_class(3.5, PARAMS) == 1
    assert priority_class(2.0, PARAMS) == 2
    assert priority_class(0.1, PARAMS) == 3
    windows = [backoff_window(0, PARAMS, c) for c in range(PARAMS.n_classes)]
    assert windows == sorted(windows) and len(set(windows)) == len(windows)
    assert backoff_window(2, PARAMS) == 4 * PARAMS.w0


def _mean_idle_backoff(pclass, trials):
    rng = make_rng(99, ("class", pclass))
    return statistics.fmean(rng.randrange(backoff_window(0, PARAMS, pclass))
                            for _ in range(trials))


def test_higher_class_has_smaller_expected_backoff():
    means = [_mean_idle_backoff(c, 2000) for c in range(PARAMS.n_classes)]
    assert all(a < b for a, b in zip(means, means[1:]))


def test_contention_raises_expected_delay():
    trials = 1000
    idle = statistics.fmean(sample_contended_hop_delay(0, s) for s in range(trials))
    busy = statistics.fmean(sample_contended_hop_delay(3, s) for s in range(trials))
    # the idle mean matches the closed form for a uniform window
    assert idle == pytest.approx(PARAMS.payload_time + PARAMS.mean_idle_backoff(), rel=0.08)
    assert busy > idle
