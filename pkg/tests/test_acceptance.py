"""Acceptance suite: one test per release criterion, printed pass/fail lines.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Tolerances are fixed here, not tuned at runtime.
"""

import functools
import math
import time

import numpy as np
import pytest

from evsim.bench import bench_messaging, run_lockstep_session, summarize
from evsim.dynamics import (
    ControlCommand,
    G_WORLD,
    ImuNoise,
    VehicleParams,
    VehicleState,
    hover_command,
    sample_imu,
    step_dynamics,
)
from evsim.events import (
    CHUNK_WIDTH,
    AggregationStats,
    EventCameraConfig,
    canonical_sort,
    generate_events_parallel,
    generate_events_serial,
    init_pixel_states,
)
from evsim.messaging import (
    ArraySpec,
    DiscoveryClient,
    DiscoveryDaemon,
    FieldSpec,
    MessageSchema,
    Publication,
    Publisher,
    SendQueuePolicy,
    Subscriber,
    TypeMismatchError,
    deserialize,
    fnv1a64,
    parse_schema,
    schema_hash,
    serialize,
)
from evsim.metrics import (
    depth_objective,
    depth_objective_gradient,
    gradient_regularizer,
    normalize_disparity,
    silog_loss,
)
from evsim.sim import SimNode, config_from_dict
from evsim.sim import schemas as sim_schemas
from helpers import frame_from_log, random_walk_sequence, single_pixel_state
from test_metrics import oracle_objective


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                out = fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {name}")
                raise
            print(f"[PASS] {name}")
            return out
        return wrapper
    return deco


@criterion("oracle equivalence: parallel == serial on 100 random sequences, workers 1/2/4/8")
def test_oracle_equivalence():
    t_start = time.perf_counter()
    cfg = EventCameraConfig(sigma_c=0.03)
    worker_counts = (1, 2, 4, 8)
    for seq_id in range(100):
        rng = np.random.default_rng(10_000 + seq_id)
        frames = random_walk_sequence(rng, 64, 48, 50, step_std=0.08)
        state_serial = init_pixel_states(frames[0], cfg, seed=seq_id)
        par_states = {w: state_serial.copy() for w in worker_counts}
        for k in range(1, len(frames)):
            t0, t1 = frames[k - 1].t, frames[k].t
            ref = canonical_sort(generate_events_serial(state_serial, frames[k], t0, t1, cfg))
            for w in worker_counts:
                got = canonical_sort(
                    generate_events_parallel(par_states[w], frames[k], t0, t1, cfg, workers=w))
                assert got.same_events(ref), (seq_id, k, w)
                assert got.dropped_count == ref.dropped_count == 0
        for w in worker_counts:
            assert np.array_equal(par_states[w].ref_log, state_serial.ref_log)
    elapsed = time.perf_counter() - t_start
    assert elapsed < 60.0, f"oracle equivalence took {elapsed:.1f}s (budget 60s)"


@criterion("atomic reduction: 2048 single-event pixels -> exactly 64 reservations")
def test_atomic_reduction():
    w, h = 64, 32
    cfg = EventCameraConfig()
    state = init_pixel_states(frame_from_log(np.full((h, w), -2.0), 0), cfg, seed=0)
    frame = frame_from_log(np.full((h, w), -1.7), 1000)
    stats = AggregationStats()
    batch = generate_events_parallel(state, frame, 0, 1000, cfg, workers=4, stats=stats)
    assert len(batch) == w * h == 2048
    assert stats.reservation_count == (w * h) // CHUNK_WIDTH == 64


@criterion("contrast model: ramp k*c -> k events for k,splits in 1..10; exact timestamps")
def test_contrast_model_correctness():
    c = 0.2
    cfg = EventCameraConfig(c_pos=c, c_neg=c, max_events_per_frame=10**9)
    for k in range(1, 11):
        for splits in range(1, 11):
            state = single_pixel_state(-3.0, c_pos=c, c_neg=c)
            rng = np.random.default_rng(k * 37 + splits)
            incs = rng.dirichlet(np.ones(splits)) * (k * c)
            total = 0
            level = -3.0
            for j, inc in enumerate(incs):
                level += inc
                frame = frame_from_log(np.full((1, 1), level), (j + 1) * 1000)
                batch = generate_events_serial(state, frame, j * 1000, (j + 1) * 1000, cfg)
                assert np.all(batch.polarity == 1)
                total += len(batch)
            assert total == k, (k, splits, total)

    # constant scene: zero events
    cfg0 = EventCameraConfig()
    f = frame_from_log(np.full((8, 8), -1.0), 0)
    state = init_pixel_states(f, cfg0, seed=0)
    f1 = frame_from_log(np.full((8, 8), -1.0), 1000)
    assert len(generate_events_serial(state, f1, 0, 1000, cfg0)) == 0

    # derived two-event example to the microsecond
    state = single_pixel_state(0.0, c_pos=0.25, c_neg=0.25)
    cfg2 = EventCameraConfig(c_pos=0.25, c_neg=0.25, log_eps=1.0)
    from evsim.events.types import IntensityFrame
    frame = IntensityFrame(width=1, height=1, t=1000,
                           values=np.full((1, 1), math.exp(0.55) - 1.0, np.float32))
    batch = generate_events_serial(state, frame, 0, 1000, cfg2)
    assert batch.t.tolist() == [454, 909]
    assert batch.polarity.tolist() == [1, 1]


@criterion("wire contract: 1000 random messages per schema bit-exact; FNV vectors; hash gate")
def test_wire_contract():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C

    rng = np.random.default_rng(99)
    test_schemas = {
        "pose": sim_schemas.POSE_SCHEMA,
        "events": sim_schemas.EVENTS_SCHEMA,
        "command": sim_schemas.COMMAND_SCHEMA,
        "mixed": MessageSchema("Mixed", (
            FieldSpec("name", "string"), FieldSpec("ok", "bool"),
            FieldSpec("count", "i32"), FieldSpec("grid", ArraySpec("f64", shape=(2, 3))),
            FieldSpec("blob", ArraySpec("u8", rank=1)),
        )),
    }

    def random_values(schema):
        out = {}
        for f in schema.fields:
            t = f.type
            if t == "string":
                out[f.name] = "".join(chr(rng.integers(32, 127)) for _ in range(rng.integers(0, 12)))
            elif t == "bool":
                out[f.name] = bool(rng.integers(0, 2))
            elif isinstance(t, str):
                out[f.name] = int(rng.integers(0, 100))
            else:
                shape = t.shape if not t.dynamic else tuple(rng.integers(0, 6, t.rank))
                if t.kind.startswith("f"):
                    arr = rng.normal(size=shape)
                elif t.kind == "bool":
                    arr = rng.integers(0, 2, shape).astype(bool)
                else:
                    arr = rng.integers(0, 100, shape)
                from evsim.messaging.schema import NUMPY_DTYPES
                out[f.name] = np.asarray(arr).astype(NUMPY_DTYPES[t.kind])
        return out

    for name, schema in test_schemas.items():
        h = schema_hash(schema)
        for _ in range(1000):
            values = random_values(schema)
            payload = serialize(values, schema)
            back = deserialize(payload, schema, h)
            assert serialize(back, schema) == payload, name  # bit-exact round trip

    # any single-bit perturbation of the header hash is rejected before decode
    schema = test_schemas["pose"]
    payload = serialize(random_values(schema), schema)
    good = schema_hash(schema)
    for bit in range(64):
        with pytest.raises(TypeMismatchError):
            deserialize(payload, schema, good ^ (1 << bit))


@pytest.fixture(scope="module")
def daemon():
    d = DiscoveryDaemon(port=0, lease_ttl=2.0).start()
    yield d
    d.stop()


class TestMessagingSemantics:
    @criterion("messaging: 4 subscribers x 1000 messages complete and in order")
    def test_fanout_in_order(self, daemon):
        schema = parse_schema("Seq{seq:u64;data:u8[*]}")
        addr = (daemon.host, daemon.port)
        with Publisher("/acc/fan", schema, daemon_addr=addr,
                       policy=SendQueuePolicy(high_water_mark=5000)) as pub:
            subs = [Subscriber("/acc/fan", schema, daemon_addr=addr, poll_interval=0.1,
                               queue_depth=5000) for _ in range(4)]
            try:
                for s in subs:
                    assert s.wait_connected(1, 5.0)
                blob = np.zeros(16, np.uint8)
                for i in range(1000):
                    pub.publish({"seq": i, "data": blob})
                for s in subs:
                    got = []
                    while len(got) < 1000:
                        msgs = s.receive_many(2048, timeout=2.0)
                        if not msgs:
                            break
                        got.extend(int(m["seq"]) for m in msgs)
                    assert got == list(range(1000))
            finally:
                for s in subs:
                    s.close()

    @criterion("messaging: drop-oldest under 2xHWM stall")
    def test_drop_oldest(self, daemon):
        schema = parse_schema("Seq{seq:u64;data:u8[*]}")
        addr = (daemon.host, daemon.port)
        hwm = 100
        with Publisher("/acc/stall", schema, daemon_addr=addr,
                       policy=SendQueuePolicy(high_water_mark=hwm)) as pub:
            with Subscriber("/acc/stall", schema, daemon_addr=addr,
                            poll_interval=0.1) as sub:
                assert sub.wait_connected(1, 5.0)
                sub.pause()
                time.sleep(0.2)
                blob = np.zeros(8, np.uint8)
                for i in range(2 * hwm):
                    pub.publish({"seq": i, "data": blob})
                time.sleep(0.2)
                sub.resume()
                got = []
                while len(got) < hwm:
                    msgs = sub.receive_many(1024, timeout=2.0)
                    if not msgs:
                        break
                    got.extend(int(m["seq"]) for m in msgs)
                assert got == list(range(hwm, 2 * hwm))

    @criterion("messaging: discovery lease expiry within lease_ttl + 1s")
    def test_lease_expiry(self, daemon):
        c = DiscoveryClient((daemon.host, daemon.port))
        c.register("ghost", 777, [Publication("/acc/ghost", 1, "tcp://127.0.0.1:1")])
        assert len(c.query("/acc/ghost")) == 1
        time.sleep(daemon.lease_ttl + 1.0)
        assert c.query("/acc/ghost") == []

    @criterion("messaging floors: >=50k msg/s at 40B and >=500 MB/s at 1MB (local)")
    def test_performance_floors(self):
        report = bench_messaging(payload_bytes=[40], duration_s=3.0, subscribers=1,
                                 transport="local")
        rate_small = report.samples[0]["rate_hz"]
        assert rate_small >= 50_000, f"40B rate {rate_small:,.0f}/s below 50k floor"
        report = bench_messaging(payload_bytes=[1_000_000], duration_s=3.0, subscribers=1,
                                 transport="local")
        tp_large = report.samples[0]["throughput_mb_s"]
        assert tp_large >= 500.0, f"1MB throughput {tp_large:,.0f} MB/s below 500 floor"


@criterion("fan-out shape: rate non-increasing in payload; 1->4 subscriber flatness within 20%")
def test_fanout_shape():
    sizes = [40, 4096, 65536, 1_000_000]
    report = bench_messaging(payload_bytes=sizes, duration_s=2.0, subscribers=1,
                             transport="local")
    rates = [s["rate_hz"] for s in report.samples]
    for a, b in zip(rates, rates[1:]):
        assert b <= a * 1.05, f"rate increased with payload size: {rates}"
    # fan-out fairness at a fixed rate this host can carry with 5 processes
    paced = 15_000.0
    r1 = bench_messaging(payload_bytes=[40], duration_s=2.5, subscribers=1,
                         target_rate_hz=paced)
    r4 = bench_messaging(payload_bytes=[40], duration_s=2.5, subscribers=4,
                         target_rate_hz=paced)
    rate1 = r1.samples[0]["rate_hz"]
    per_sub = [s["rate_hz"] for s in r4.samples]
    for r in per_sub:
        assert abs(r - rate1) / rate1 <= 0.20, (rate1, per_sub)


@criterion("closed loop: echo 1000 ticks @100Hz -> 0 ZOH, mean latency < 5 ms")
def test_closedloop_echo():
    sim_report, stats = run_lockstep_session(ticks=1000, rate_hz=100.0,
                                             width=64, height=48, zoh_timeout_s=2.0)
    assert sim_report["ticks"] == 1000
    assert sim_report["zoh_activations"] == 0
    lat = summarize(stats.latencies_s)
    assert lat["mean"] < 0.005, f"mean latency {lat['mean'] * 1e3:.2f} ms"


@criterion("closed loop: skip-every-3rd controller -> exactly ceil(1000/3) ZOH activations")
def test_closedloop_skip():
    sim_report, stats = run_lockstep_session(ticks=1000, rate_hz=0.0, skip_every=3,
                                             width=64, height=48, zoh_timeout_s=0.01)
    assert sim_report["ticks"] == 1000
    assert sim_report["zoh_activations"] == math.ceil(1000 / 3) == 334
    assert stats.skipped == 334


@criterion("dynamics/IMU: hover exact; |q| drift < 1e-6 over 1e6 steps; energy; IMU statics")
def test_dynamics_imu():
    params = VehicleParams()
    out = step_dynamics(VehicleState(), hover_command(params), 0.001, params)
    assert np.all(out.p == 0.0) and np.all(out.v == 0.0)
    assert out.q == (1.0, 0.0, 0.0, 0.0) and np.all(out.w == 0.0)

    st = VehicleState(w=[0.3, -0.2, 0.5])
    cmd = ControlCommand(thrust=9.81, torque=(1e-4, -2e-4, 5e-5))
    for _ in range(1_000_000):
        st = step_dynamics(st, cmd, 1e-3, params)
    assert abs(math.sqrt(sum(c * c for c in st.q)) - 1.0) < 1e-6

    ballistic = VehicleParams(drag=0.0)
    st = VehicleState(p=[0.0, 0.0, 50.0], v=[20.0, 5.0, 10.0])
    e0 = 0.5 * float(st.v @ st.v) + ballistic.g * st.p[2]
    zero = ControlCommand(thrust=0.0)
    for _ in range(1000):
        st = step_dynamics(st, zero, 1e-3, ballistic)
    e1 = 0.5 * float(st.v @ st.v) + ballistic.g * st.p[2]
    assert abs(e1 - e0) / e0 < 1e-4

    s = sample_imu(VehicleState(), np.zeros(3), ImuNoise(), seed=0)
    assert np.array_equal(s.accel, np.array([0.0, 0.0, 9.81]))
    assert np.array_equal(s.gyro, np.zeros(3))
    s = sample_imu(VehicleState(), G_WORLD, ImuNoise(), seed=0)
    assert np.allclose(s.accel, 0.0, atol=1e-15)


@criterion("depth metrics: hand values, scale invariance, FD gradient, oracle agreement")
def test_depth_metrics():
    e = math.e
    assert abs(silog_loss(np.array([[e, e]]), np.ones((1, 2))) - 0.5) < 1e-9
    assert abs(silog_loss(np.array([[e, 1 / e]]), np.ones((1, 2))) - 1.0) < 1e-9

    rng = np.random.default_rng(0)
    d = rng.uniform(0.2, 5.0, (6, 7))
    base = normalize_disparity(d)
    for s in (0.1, 1.0, 3.7, 100.0):
        assert np.max(np.abs(normalize_disparity(s * d) - base)) < 1e-6

    r = gradient_regularizer(np.array([[0.0, 1.0], [0.0, 1.0]]), np.zeros((2, 2)),
                             num_scales=1)
    assert abs(r - 0.5) < 1e-12

    d = rng.uniform(0.5, 2.0, (8, 8))
    ds = rng.uniform(0.5, 2.0, (8, 8))
    grad = depth_objective_gradient(d, ds)
    h = 1e-7
    for k in rng.choice(64, 16, replace=False):
        i, j = divmod(int(k), 8)
        dp = d.copy(); dp[i, j] += h
        dm = d.copy(); dm[i, j] -= h
        fd = (depth_objective(dp, ds) - depth_objective(dm, ds)) / (2 * h)
        assert abs(fd - grad[i, j]) / max(abs(fd), 1e-12) < 1e-4

    for trial in range(3):
        d = rng.uniform(0.3, 3.0, (8, 8))
        ds = rng.uniform(0.3, 3.0, (8, 8))
        assert abs(depth_objective(d, ds) - oracle_objective(d, ds)) < 1e-6


@criterion("determinism: fixed-seed 200-tick free run bit-identical across executions")
def test_determinism():
    import yaml
    from test_orchestrator import _bundle_hash
    doc = yaml.safe_load(open("configs/default.yaml"))
    doc["sim"].update(seed=7, pacing="free_running")
    doc["event_camera"]["sigma_c"] = 0.03
    doc["event_camera"]["noise_rate_hz"] = 1.0
    doc["imu_noise"] = {"std_accel": 0.01, "std_gyro": 0.001}
    h1 = _bundle_hash(SimNode(config_from_dict(doc)), 200)
    h2 = _bundle_hash(SimNode(config_from_dict(doc)), 200)
    assert h1 == h2


_FRONTEND = __import__("pathlib").Path(__file__).resolve().parent.parent / "frontend"


@pytest.mark.skipif(
    __import__("shutil").which("npx") is None or not (_FRONTEND / "node_modules").exists(),
    reason="node toolchain or frontend dependencies not installed",
)
@criterion("secondary: golden corpus, 20 schema hashes, and 500-tick cross-language lockstep")
def test_secondary_cross_language():
    import subprocess
    result = subprocess.run(
        ["npx", "vitest", "run"], cwd=_FRONTEND,
        capture_output=True, text=True, timeout=300,
    )
    assert result.returncode == 0, result.stdout[-3000:] + result.stderr[-2000:]
