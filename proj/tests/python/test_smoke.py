"""Smoke tests for the python bindings: compile a map from an array, query
it, run a short simulate -> locate -> evaluate round trip."""

import json
import math

import numpy as np
import pytest

import fpbp


WALK, WALL, DOOR = (255, 255, 255), (0, 0, 0), (255, 0, 0)


def two_room_array():
    # 14.4 x 8.4 m at 10 px/m: two rooms joined by a 1.2 m door.
    img = np.full((84, 144, 3), 255, dtype=np.uint8)
    img[:3, :] = WALL
    img[-3:, :] = WALL
    img[:, :3] = WALL
    img[:, -3:] = WALL
    img[:, 70:74] = WALL
    img[36:48, 70:74] = DOOR
    return img


@pytest.fixture(scope="module")
def tmap():
    return fpbp.compile_map(two_room_array(), resolution_px_per_m=10.0,
                            grid_interval_m=0.3, floor_id=1)


def test_map_queries(tmap):
    assert tmap.width_px == 144
    assert tmap.room_count == 2
    assert tmap.feature_at(3.0, 4.0) == fpbp.MapFeature.WALKABLE
    assert tmap.feature_at(7.2, 7.0) == fpbp.MapFeature.WALL
    assert tmap.feature_at(7.2, 4.2) == fpbp.MapFeature.DOOR
    assert tmap.value_at(7.2, 4.2) == 0.5
    assert tmap.room_of(3.0, 4.0) != tmap.room_of(11.0, 4.0)
    assert tmap.room_of(7.2, 7.0) is None
    assert len(tmap.grid_points) > 500


def test_raycast_thresholds(tmap):
    clear = tmap.raycast(2.0, 2.0, 5.0, 2.0)
    assert not clear["hit"]
    blocked = tmap.raycast(5.0, 4.2, 9.0, 4.2)
    assert blocked["hit"]
    assert blocked["feature"] == fpbp.MapFeature.DOOR
    # Doors do not block at the wall-only threshold.
    assert not tmap.raycast(5.0, 4.2, 9.0, 4.2, threshold=fpbp.WALL_ONLY)["hit"]


def test_artifact_round_trip(tmap):
    text = tmap.to_artifact_json()
    restored = fpbp.FloorPlanMap.from_artifact_json(text)
    assert restored.to_artifact_json() == text
    assert json.loads(text)["schema"] == "fpbp-map/1"


def test_radio_primitives():
    model = fpbp.PathLossModel(n=2.0, r0_dbm=-59.0, sigma_db=0.0)
    assert fpbp.rssi_to_distance(-59.0, model) == pytest.approx(1.0)
    assert fpbp.rssi_to_distance(-79.0, model) == pytest.approx(10.0)
    assert fpbp.expected_distance(1.0, 4.0, 2.0) == pytest.approx(1.111864, rel=1e-5)

    kf = fpbp.RssiKalman()
    for _ in range(200):
        out = kf.update(-60.0)
    assert out == pytest.approx(-60.0, abs=1e-6)


def test_step_detector_counts():
    det = fpbp.StepDetector()
    count = 0
    for i in range(600):
        z = 2.0 * math.sin(2.0 * math.pi * 2.0 * i / 60.0)
        if det.push(z) is not None:
            count += 1
    assert 18 <= count <= 21
    assert fpbp.weinberg_step_length(16.0, 0.5) == pytest.approx(1.0)


def test_particles_deterministic():
    def run():
        ps = fpbp.ParticleSet.init(1.0, 2.0, count=200, seed=9)
        out = []
        for k in range(20):
            ps.propagate(k, 0.6, 0.0)
            ps.reweight(1.0 + 0.6 * (k + 1), 2.0)
            ps.resample()
            out.append(ps.estimate())
        return out

    a, b = run(), run()
    assert a == b
    x, y = a[-1]
    assert x == pytest.approx(1.0 + 0.6 * 20, abs=0.5)
    assert y == pytest.approx(2.0, abs=0.5)


def test_full_pipeline(tmap):
    registry = fpbp.BeaconRegistry([
        ("b-00", 2.0, 2.0, 1),
        ("b-01", 2.0, 6.0, 1),
        ("b-02", 5.0, 4.2, 1),
        ("b-03", 9.5, 4.2, 1),
        ("b-04", 12.0, 2.0, 1),
        ("b-05", 12.0, 6.0, 1),
    ])
    scenario = fpbp.Scenario.from_json(json.dumps({
        "schema": "fpbp-scenario/1",
        "maps": {"1": "unused"},
        "beacons": "unused",
        "start_floor": 1,
        "speed_mps": 1.0,
        "stride_m": 0.6,
        "pathloss": {"n": 2.2, "r0_dbm": -59.0, "sigma_db": 3.0},
        "broadcast_interval_ms": 66,
        "heading_noise_std_rad": 0.03,
        "steplen_noise_std_m": 0.02,
        "seed": 5,
        "path": [{"floor": 1, "points": [[2.0, 4.2], [12.0, 4.2], [12.0, 2.4],
                                         [12.0, 6.0], [12.0, 4.2], [3.0, 4.2]]}],
    }))
    events, truth = fpbp.simulate(scenario, [tmap], registry)
    assert len(truth) > 30
    outputs = fpbp.run_replay([tmap], registry, events, algorithm="fpbp", seed=5)
    assert len(outputs) > 20
    report = fpbp.evaluate(outputs, truth, [tmap])
    assert report["mpe_m"] < 3.0
    assert report["wall_crossings"] == 0
    assert report["p50_m"] <= report["p80_m"]

    # The ablation without the correction stage is also runnable.
    bp = fpbp.run_replay([tmap], registry, events, algorithm="bp", seed=5)
    assert len(bp) == len(outputs)


def test_error_mapping(tmap):
    with pytest.raises(fpbp.FpbpError):
        fpbp.compile_map(np.zeros((4, 4, 3), dtype=np.uint8) + 7, 10.0)
    with pytest.raises(fpbp.FpbpError):
        tmap.feature_at(-5.0, -5.0)
