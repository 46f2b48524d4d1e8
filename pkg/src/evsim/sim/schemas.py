"""Message schemas for the simulator's topics and command channel."""

from __future__ import annotations

import numpy as np

from ..dynamics import ControlCommand, ImuSample, VehicleState
from ..events.types import DepthFrame, EventBatch, IntensityFrame
from ..messaging import parse_schema

INTENSITY_SCHEMA = parse_schema("Intensity{step_id:u64;t_us:u64;values:f32[*][*]}")
DEPTH_SCHEMA = parse_schema("Depth{step_id:u64;t_us:u64;values:f32[*][*]}")
EVENTS_SCHEMA = parse_schema(
    "Events{step_id:u64;t_us:u64;dropped:u64;t:u64[*];x:u16[*];y:u16[*];polarity:i8[*]}"
)
IMU_SCHEMA = parse_schema("ImuBatch{step_id:u64;t:u64[*];accel:f64[*][*];gyro:f64[*][*]}")
POSE_SCHEMA = parse_schema(
    "Pose{step_id:u64;t_us:u64;position:f64[3];orientation:f64[4];"
    "velocity:f64[3];angular_velocity:f64[3]}"
)
COMMAND_SCHEMA = parse_schema(
    "Command{step_id:u64;t_cmd_us:u64;mode:u8;rotor_speeds:f64[4];thrust:f64;torque:f64[3]}"
)

TOPIC_SCHEMAS = {
    "intensity": INTENSITY_SCHEMA,
    "depth": DEPTH_SCHEMA,
    "events": EVENTS_SCHEMA,
    "imu": IMU_SCHEMA,
    "pose": POSE_SCHEMA,
    "cmd": COMMAND_SCHEMA,
}

_CMD_MODES = {"wrench": 0, "rotor_speeds": 1}
_CMD_MODES_BACK = {v: k for k, v in _CMD_MODES.items()}


def frame_values(step_id: int, frame: IntensityFrame | DepthFrame) -> dict:
    return {"step_id": step_id, "t_us": frame.t, "values": frame.values}


def events_values(step_id: int, t_us: int, batch: EventBatch) -> dict:
    return {
        "step_id": step_id, "t_us": t_us, "dropped": batch.dropped_count,
        "t": batch.t, "x": batch.x, "y": batch.y, "polarity": batch.polarity,
    }


def events_from_values(v: dict) -> EventBatch:
    return EventBatch(
        t=np.asarray(v["t"], np.uint64), x=np.asarray(v["x"], np.uint16),
        y=np.asarray(v["y"], np.uint16), polarity=np.asarray(v["polarity"], np.int8),
        dropped_count=int(v["dropped"]),
    )


def imu_values(step_id: int, samples: list[ImuSample]) -> dict:
    n = len(samples)
    return {
        "step_id": step_id,
        "t": np.array([s.t for s in samples], np.uint64),
        "accel": (np.stack([s.accel for s in samples])
                  if n else np.zeros((0, 3))),
        "gyro": (np.stack([s.gyro for s in samples])
                 if n else np.zeros((0, 3))),
    }


def pose_values(step_id: int, t_us: int, state: VehicleState) -> dict:
    return {
        "step_id": step_id, "t_us": t_us,
        "position": state.p, "orientation": np.asarray(state.q, np.float64),
        "velocity": state.v, "angular_velocity": state.w,
    }


def command_values(cmd: ControlCommand) -> dict:
    return {
        "step_id": cmd.step_id, "t_cmd_us": cmd.t_cmd, "mode": _CMD_MODES[cmd.mode],
        "rotor_speeds": np.asarray(cmd.rotor_speeds, np.float64),
        "thrust": cmd.thrust, "torque": np.asarray(cmd.torque, np.float64),
    }


def command_from_values(v: dict) -> ControlCommand:
    return ControlCommand(
        mode=_CMD_MODES_BACK[int(v["mode"])],
        thrust=float(v["thrust"]),
        torque=tuple(float(c) for c in v["torque"]),
        rotor_speeds=tuple(float(c) for c in v["rotor_speeds"]),
        step_id=int(v["step_id"]),
        t_cmd=int(v["t_cmd_us"]),
    )
