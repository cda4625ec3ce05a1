import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradcast.phys import (RadioParams, Transmission, decode, distance,
                           is_neighbor, pathloss_db, received_power_dbm)

PARAMS = RadioParams()


def test_pathloss_reference_values():
    assert pathloss_db(1.0, 3.0) == 0.0
    assert pathloss_db(10.0, 3.0) == pytest.approx(30.0, abs=1e-12)
    assert pathloss_db(100.0, 2.0) == pytest.approx(40.0, abs=1e-12)


def test_pathloss_clamps_small_distances():
    assert pathloss_db(0.0, 3.0) == pathloss_db(0.1, 3.0)
    assert pathloss_db(-5.0, 3.0) == pathloss_db(0.05, 3.0) == pathloss_db(0.1, 3.0)
    assert pathloss_db(0.1, 3.0) == pytest.approx(-30.0, abs=1e-12)


def test_received_power_values():
    assert received_power_dbm(0.0, 1.0, 3.0) == 0.0
    assert received_power_dbm(5.0, 10.0, 3.0) == pytest.approx(-25.0, abs=1e-12)


@given(st.floats(min_value=0.1, max_value=1e4), st.floats(min_value=0.1, max_value=1e4),
       st.floats(min_value=2.0, max_value=6.0))
def test_pathloss_monotone_in_distance(d1, d2, alpha):
    if d1 == d2:
        return
    lo, hi = sorted((d1, d2))
    assert pathloss_db(lo, alpha) < pathloss_db(hi, alpha)


@given(st.floats(min_value=-20, max_value=20), st.floats(min_value=0.2, max_value=5000))
def test_tx_minus_rx_equals_pathloss(tx, d):
    # the two cost routes (geometry vs power difference) agree
    pl = pathloss_db(d, 3.0)
    rx = received_power_dbm(tx, d, 3.0)
    assert tx - rx == pytest.approx(pl, rel=1e-12, abs=1e-12)


def test_neighbor_threshold_is_strict():
    p = RadioParams(alpha_exp=3.0, tx_power_dbm=0.0, sensitivity_dbm=-54.5)
    d_edge = 10.0 ** (54.5 / 30.0)   # received power lands exactly on sensitivity
    assert not is_neighbor((0.0, 0.0), (d_edge, 0.0), p)
    assert is_neighbor((0.0, 0.0), (d_edge - 0.01, 0.0), p)


def test_colocated_nodes_are_neighbors():
    assert is_neighbor((5.0, 5.0), (5.0, 5.0), PARAMS)


@given(st.tuples(st.floats(0, 250), st.floats(0, 250)),
       st.tuples(st.floats(0, 250), st.floats(0, 250)))
def test_neighbor_relation_symmetric(a, b):
    assert is_neighbor(a, b, PARAMS) == is_neighbor(b, a, PARAMS)


def _tx(sender, pos, power, start, end, ident="p"):
    return Transmission(sender, pos, power, start, end, ident)


def test_decode_clean_reception():
    wanted = _tx(0, (0.0, 0.0), 0.0, 10.0, 17.5)
    assert decode((30.0, 0.0), wanted, [], PARAMS)


def test_decode_below_sensitivity_fails():
    wanted = _tx(0, (0.0, 0.0), 0.0, 10.0, 17.5)
    far = (10.0 ** (54.5 / 30.0) + 1.0, 0.0)
    assert not decode(far, wanted, [], PARAMS)


def test_equal_power_full_overlap_interferer_fails():
    # both senders 30 m away on opposite sides: SINR ~ 0 dB, below any
    # threshold of 3 dB or more
    wanted = _tx(0, (-30.0, 0.0), 0.0, 10.0, 17.5)
    interf = _tx(1, (30.0, 0.0), 0.0, 10.0, 17.5)
    assert not decode((0.0, 0.0), wanted, [interf], PARAMS)


def test_interferer_ending_before_start_is_ignored():
    wanted = _tx(0, (-30.0, 0.0), 0.0, 10.0, 17.5)
    early = _tx(1, (30.0, 0.0), 0.0, 2.0, 10.0)   # ends exactly at start
    assert decode((0.0, 0.0), wanted, [early], PARAMS) == \
        decode((0.0, 0.0), wanted, [], PARAMS) is True


def test_partial_overlap_still_fails_whole_duration_rule():
    # strong interferer covering only the first millisecond of the reception
    wanted = _tx(0, (-30.0, 0.0), 0.0, 10.0, 17.5)
    burst = _tx(1, (10.0, 0.0), 0.0, 9.0, 11.0)
    assert not decode((0.0, 0.0), wanted, [burst], PARAMS)


def test_own_transmission_blocks_reception():
    # a receiver transmitting anything during the window cannot decode
    wanted = _tx(0, (-30.0, 0.0), 0.0, 10.0, 17.5)
    own = _tx(2, (0.0, 0.0), -20.0, 12.0, 13.0)
    assert not decode((0.0, 0.0), wanted, [own], PARAMS)


def _sampled_decode(rx_pos, wanted, concurrent, params, steps=2000):
    """Independent check: sample the SINR densely over the reception."""
    pr = received_power_dbm(wanted.tx_power_dbm, distance(rx_pos, wanted.sender_pos),
                            params.alpha_exp, params.d_min_m)
    if pr <= params.sensitivity_dbm:
        return False
    sig = 10.0 ** (pr / 10.0)
    noise = 10.0 ** (params.noise_floor_dbm / 10.0)
    thr = 10.0 ** (params.sinr_threshold_db / 10.0)
    span = wanted.end - wanted.start
    for k in range(steps + 1):
        t = wanted.start + span * k / steps
        interference = 0.0
        for o in concurrent:
            if o is wanted or not (o.start < t < o.end):
                continue
            interference += 10.0 ** (received_power_dbm(
                o.tx_power_dbm, distance(rx_pos, o.sender_pos),
                params.alpha_exp, params.d_min_m) / 10.0)
        if sig / (noise + interference) < thr:
            return False
    return True


@given(st.lists(st.tuples(st.floats(0, 120), st.floats(0, 120),
                          st.floats(5, 25), st.floats(1, 8)),
                min_size=0, max_size=5),
       st.floats(10, 60))
def test_decode_matches_dense_sampling(interferers, rx_x):
    params = RadioParams()
    wanted = _tx(0, (0.0, 0.0), 0.0, 10.0, 17.5)
    concurrent = []
    for i, (x, y, start, dur) in enumerate(interferers):
        concurrent.append(_tx(i + 1, (x, y), 0.0, start, start + dur))
    got = decode((rx_x, 0.0), wanted, concurrent, params)
    # the boundary sweep is exact, so it is at least as strict as sampling at
    # any finite set of instants: a sampled failure forces an exact failure
    assert not got or _sampled_decode((rx_x, 0.0), wanted, concurrent, params)
    assert _sampled_decode((rx_x, 0.0), wanted, concurrent, params, steps=997) or not got


@given(st.lists(st.tuples(st.floats(0, 120), st.floats(0, 120),
                          st.floats(5, 25), st.floats(1, 8)),
                min_size=1, max_size=5))
def test_adding_interferers_never_helps(interferers):
    wanted = _tx(0, (0.0, 0.0), 0.0, 10.0, 17.5)
    rx = (40.0, 0.0)
    concurrent = []
    previous = decode(rx, wanted, concurrent, PARAMS)
    for i, (x, y, start, dur) in enumerate(interferers):
        concurrent.append(_tx(i + 1, (x, y), 0.0, start, start + dur))
        now = decode(rx, wanted, concurrent, PARAMS)
        assert not (now and not previous)
        previous = now


def test_perfect_decode_hook_skips_interference_not_sensitivity():
    params = RadioParams(perfect_decode=True)
    wanted = _tx(0, (-30.0, 0.0), 0.0, 10.0, 17.5)
    jam = _tx(1, (1.0, 0.0), 0.0, 10.0, 17.5)
    assert decode((0.0, 0.0), wanted, [jam], params)
    far = (10.0 ** (54.5 / 30.0) + 1.0, 0.0)
    assert not decode(far, wanted, [], params)


def test_airtime():
    assert PARAMS.airtime_ms(36) == pytest.approx(7.5)
    assert PARAMS.airtime_ms(0) == 0.0
