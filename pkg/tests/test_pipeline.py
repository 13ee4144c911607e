import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thomascore.pipeline import (BlockSchedule, LatencyProfile, QueueOverflow, SimJob,
                                 StackOverflow, bandwidth_partition, compute_cycles,
                                 compute_time, device_resources, get_profile, max_throughput_ok,
                                 preset_profiles, rate_of_computation, simulate, speedup_table)

PRESETS = preset_profiles()
FLOAT = PRESETS["floating"]
F30 = PRESETS["fixed[2,30]"]


@pytest.mark.parametrize("name,cf", [("floating", 44), ("fixed[2,30]", 69),
                                     ("fixed[2,22]", 60), ("fixed[2,14]", 44)])
def test_presets_forward_composition(name, cf):
    p = PRESETS[name]
    assert p.C_F == cf == p.C_div + p.C_mul + p.C_sub
    assert p.forward_composition_ok
    assert p.C_add == p.C_sub


def test_preset_values():
    assert (FLOAT.C_B, FLOAT.C_A, FLOAT.f_clock, FLOAT.D) == (16, 3, 100e6, 32)
    assert (F30.C_div, F30.C_B, F30.f_clock) == (61, 8, 200e6)
    assert PRESETS["fixed[2,14]"].D == 16


def test_get_profile_aliases():
    assert get_profile("[2,30]") == F30
    assert get_profile("Floating") == FLOAT
    with pytest.raises(KeyError):
        get_profile("fixed[4,28]")


def test_profile_json_roundtrip(tmp_path):
    d = F30.to_dict()
    (tmp_path / "p.json").write_text(json.dumps(d))
    assert LatencyProfile.from_json(tmp_path / "p.json") == F30


def test_profile_validation():
    with pytest.raises(ValueError):
        LatencyProfile("x", 0, 1, 1, 1, 2, 1, 1, 1e6, 32)
    with pytest.raises(ValueError):
        LatencyProfile("x", 1, 1, 1, 1, 3, 1, 1, 0.0, 32)


def test_min_throughput_times():
    single = BlockSchedule((1,))
    assert compute_cycles(100, single, FLOAT) == 100 * 47 + 28 + 1600
    assert compute_time(100, single, FLOAT) == pytest.approx(0.06328e-3)
    assert compute_cycles(100, single, F30) == 100 * 72 + 61 + 800
    assert compute_time(100, single, F30) == pytest.approx(0.040305e-3)


def test_empty_schedule_takes_no_time():
    assert compute_time(100, BlockSchedule(()), FLOAT) == 0.0


def test_partition_ample_bandwidth():
    r_c = rate_of_computation(F30)
    assert r_c == 5 * 32 * 200e6
    assert bandwidth_partition(F30.C_F, F30, r_c).sizes == (F30.C_F,)
    s = bandwidth_partition(690, F30, 2 * r_c)
    assert s.B == 10 and set(s.sizes) == {69}
    s = bandwidth_partition(700, F30, r_c)
    assert s.sizes[-1] == 700 - 690 and s.M == 700


def test_partition_limited_bandwidth():
    r_c = rate_of_computation(F30)
    s = bandwidth_partition(10, F30, r_c / 2)
    assert s.sizes == (2,) * 5 and s.input_interval == 2
    s = bandwidth_partition(7, F30, r_c / 2.5)
    assert s.sizes == (3, 3, 1)


def test_max_throughput_condition():
    assert max_throughput_ok(2 * F30.C_F, F30)
    assert not max_throughput_ok(F30.C_F, F30)
    assert not max_throughput_ok(F30.C_F + 1, F30)


def test_speedup_table():
    rows = {r.name: r for r in speedup_table(PRESETS, 0.020e-3)}
    assert rows["fixed[2,30]"].max_time * 1e3 == pytest.approx(0.00055, rel=0.05)
    assert rows["fixed[2,30]"].max_speedup == pytest.approx(36, rel=0.05)
    assert rows["floating"].max_speedup == pytest.approx(16, rel=0.07)
    same = speedup_table([F30], rows["fixed[2,30]"].min_time)[0]
    assert same.min_speedup == pytest.approx(1.0)
    with pytest.raises(ValueError):
        speedup_table([F30], 0)


# -- simulator ---------------------------------------------------------------------

def jobs_for(schedule, N):
    return [SimJob(i, N) for i in range(schedule.M)]


def test_single_job_matches_closed_form():
    s = BlockSchedule((1,))
    res = simulate(jobs_for(s, 100), FLOAT, s)
    assert res.total_cycles == 6328 == compute_cycles(100, s, FLOAT)


def test_two_full_blocks():
    for p in PRESETS.values():
        s = BlockSchedule.uniform(2, p.C_F)
        res = simulate(jobs_for(s, 100), p, s)
        assert abs(res.total_cycles - compute_cycles(100, s, p)) <= p.C_A * s.B


def test_zero_jobs():
    assert simulate([], FLOAT, BlockSchedule(())).total_cycles == 0


def test_rejects_bad_job_lists():
    s = BlockSchedule((2,))
    with pytest.raises(ValueError):
        simulate([SimJob(1, 10), SimJob(1, 10)], FLOAT, s)
    with pytest.raises(ValueError):
        simulate([SimJob(1, 10)], FLOAT, s)


def test_stack_and_queue_limits():
    s = BlockSchedule((1,))
    with pytest.raises(StackOverflow) as err:
        simulate([SimJob(7, 100)], FLOAT, s, stack_capacity=50)
    assert err.value.job_id == 7
    s = BlockSchedule((4,))
    with pytest.raises(QueueOverflow):
        simulate(jobs_for(s, 20), FLOAT, s, queue_capacity=2)


def test_fast_forward_is_exact():
    s = BlockSchedule((3, 5, 2))
    a = simulate(jobs_for(s, 17), F30, s, fast_forward=True)
    b = simulate(jobs_for(s, 17), F30, s, fast_forward=False)
    assert a == b


def test_deterministic():
    s = BlockSchedule((10, 10))
    runs = [simulate(jobs_for(s, 33), FLOAT, s) for _ in range(3)]
    assert all(r == runs[0] for r in runs)


@settings(max_examples=30)
@given(st.sampled_from(sorted(PRESETS)), st.integers(8, 256), st.integers(1, 6),
       st.integers(0, 2**32 - 1))
def test_simulator_tracks_closed_form(name, N, B, seed):
    p = PRESETS[name]
    rng = np.random.default_rng(seed)
    s = BlockSchedule(tuple(int(m) for m in rng.integers(1, p.C_F + 1, size=B)))
    res = simulate(jobs_for(s, N), p, s)
    assert abs(res.total_cycles - compute_cycles(N, s, p)) <= p.C_A * s.B
    assert res.max_forward_inflight <= p.C_F
    assert res.max_rows_per_cycle <= 1


def test_slow_link_stalls_input():
    s = BlockSchedule((4,), input_interval=3)
    fast = simulate(jobs_for(BlockSchedule((4,)), 20), F30, BlockSchedule((4,)))
    slow = simulate(jobs_for(s, 20), F30, s)
    assert slow.total_cycles >= fast.total_cycles


def test_device_resources_reference_data():
    res = device_resources()
    assert set(res["designs"]) == set(PRESETS)
    assert res["designs"]["fixed[2,30]"]["dsp"] == 15
