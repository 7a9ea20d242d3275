"""Floor-plan-assisted BLE + PDR indoor positioning."""

try:
    from . import _fpbp as _core  # installed package layout
except ImportError:  # in-tree builds put the module on sys.path directly
    import _fpbp as _core

OBSTACLE_ANY = _core.OBSTACLE_ANY
PASS_FTA = _core.PASS_FTA
WALL_ONLY = _core.WALL_ONLY
BeaconRegistry = _core.BeaconRegistry
FloorPlanMap = _core.FloorPlanMap
FpbpError = _core.FpbpError
MapFeature = _core.MapFeature
ParticleSet = _core.ParticleSet
PathLossModel = _core.PathLossModel
PoseOutput = _core.PoseOutput
RssiKalman = _core.RssiKalman
Scenario = _core.Scenario
StepDetector = _core.StepDetector
Vec2 = _core.Vec2
compile_map = _core.compile_map
default_config_json = _core.default_config_json
evaluate = _core.evaluate
event_log_from_jsonl = _core.event_log_from_jsonl
event_log_to_jsonl = _core.event_log_to_jsonl
expected_distance = _core.expected_distance
rssi_from_distance = _core.rssi_from_distance
rssi_to_distance = _core.rssi_to_distance
run_replay = _core.run_replay
simulate = _core.simulate
weinberg_step_length = _core.weinberg_step_length

__all__ = [
    "OBSTACLE_ANY",
    "PASS_FTA",
    "WALL_ONLY",
    "BeaconRegistry",
    "FloorPlanMap",
    "FpbpError",
    "MapFeature",
    "ParticleSet",
    "PathLossModel",
    "PoseOutput",
    "RssiKalman",
    "Scenario",
    "StepDetector",
    "Vec2",
    "compile_map",
    "default_config_json",
    "evaluate",
    "event_log_from_jsonl",
    "event_log_to_jsonl",
    "expected_distance",
    "rssi_from_distance",
    "rssi_to_distance",
    "run_replay",
    "simulate",
    "weinberg_step_length",
]
