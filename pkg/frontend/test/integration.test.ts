/**
 * Cross-language integration: a TypeScript controller closes the loop with
 * the Python simulator over the live wire protocol.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { ClientPublisher, ClientSubscription } from "../src/client.js";
import { DiscoveryClient } from "../src/discovery.js";
import { NdArray } from "../src/schema.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO = path.resolve(HERE, "..", "..");

const POSE_DECL =
  "Pose{step_id:u64;t_us:u64;position:f64[3];orientation:f64[4];"
  + "velocity:f64[3];angular_velocity:f64[3]}";
const CMD_DECL =
  "Command{step_id:u64;t_cmd_us:u64;mode:u8;rotor_speeds:f64[4];thrust:f64;torque:f64[3]}";
const INTENSITY_DECL = "Intensity{step_id:u64;t_us:u64;values:f32[*][*]}";
const EVENTS_DECL =
  "Events{step_id:u64;t_us:u64;dropped:u64;t:u64[*];x:u16[*];y:u16[*];polarity:i8[*]}";

const DAEMON_SCRIPT = `
import sys, time
from evsim.messaging import DiscoveryDaemon
d = DiscoveryDaemon(port=0, lease_ttl=6.0).start()
print(f"PORT {d.port}", flush=True)
time.sleep(3600)
`;

function simConfig(daemonPort: number): string {
  return `
sim:
  dynamics_rate_hz: 1000
  sensor_rate_hz: 100
  mode: lockstep
  control: external
  zoh_timeout_s: 5.0
  peer_timeout_s: 60.0
  seed: 3
camera:
  width: 64
  height: 48
  fx: 60.0
  fy: 60.0
  cx: 32.0
  cy: 24.0
  mount_quat: [-0.5, 0.5, -0.5, 0.5]
scene:
  ambient: 0.15
  planes:
    - axis: x
      offset: 4.0
      bounds: [-6.0, 6.0, -2.0, 4.0]
      texture: {type: checker, cell: 0.5, intensity_a: 0.2, intensity_b: 0.9}
vehicle:
  drag: 0.05
messaging:
  transport: local
  daemon_host: 127.0.0.1
  daemon_port: ${daemonPort}
`;
}

let daemonProc: ChildProcess;
let daemonPort = 0;

beforeAll(async () => {
  daemonProc = spawn("python3", ["-c", DAEMON_SCRIPT], { cwd: REPO });
  daemonPort = await new Promise<number>((resolve, reject) => {
    const t = setTimeout(() => reject(new Error("daemon did not start")), 20_000);
    daemonProc.stdout!.on("data", (chunk: Buffer) => {
      const m = /PORT (\d+)/.exec(chunk.toString());
      if (m) {
        clearTimeout(t);
        resolve(parseInt(m[1], 10));
      }
    });
    daemonProc.on("exit", () => reject(new Error("daemon exited early")));
  });
});

afterAll(() => {
  daemonProc?.kill();
});

describe("cross-language lockstep", () => {
  it("completes 500 ticks with zero ZOH activations", async () => {
    const tmp = mkdtempSync(path.join(tmpdir(), "evsim-ts-"));
    const cfgPath = path.join(tmp, "sim.yaml");
    const reportPath = path.join(tmp, "report.json");
    writeFileSync(cfgPath, simConfig(daemonPort));

    const TICKS = 500;
    const sim = spawn(
      "python3",
      ["-m", "evsim.sim.cli", "--config", cfgPath, "--ticks", String(TICKS),
       "--report", reportPath],
      { cwd: REPO },
    );
    let simErr = "";
    sim.stderr!.on("data", (c: Buffer) => { simErr += c.toString(); });
    const simExit = new Promise<number>((resolve) => sim.on("exit", (c) => resolve(c ?? -1)));

    // sensor subscriptions first, command publisher after they are live:
    // the simulator starts ticking once the command publisher appears
    const pose = new ClientSubscription("/sim/pose", POSE_DECL,
      { daemonPort, pollIntervalMs: 100 });
    const intensity = new ClientSubscription("/sim/intensity", INTENSITY_DECL,
      { daemonPort, pollIntervalMs: 100 });
    const events = new ClientSubscription("/sim/events", EVENTS_DECL,
      { daemonPort, pollIntervalMs: 100 });
    expect(await pose.waitConnected(1, 30_000)).toBe(true);
    expect(await intensity.waitConnected(1, 30_000)).toBe(true);
    expect(await events.waitConnected(1, 30_000)).toBe(true);

    const cmd = new ClientPublisher("/sim/cmd", CMD_DECL, { daemonPort });
    await cmd.start();

    let replies = 0;
    try {
      for (;;) {
        const msg = await pose.receive(20_000);
        if (msg === null) break;
        const stepId = msg.step_id as bigint;
        cmd.publish({
          step_id: stepId,
          t_cmd_us: msg.t_us as bigint,
          mode: 0,
          rotor_speeds: { shape: [4], data: Float64Array.from([0, 0, 0, 0]) },
          thrust: 9.81,
          torque: { shape: [3], data: Float64Array.from([0, 0, 0]) },
        });
        replies += 1;
        if (stepId === BigInt(TICKS - 1)) break;
      }
      expect(replies).toBe(TICKS);
      expect(await simExit, simErr).toBe(0);
      const report = JSON.parse(readFileSync(reportPath, "utf-8"));
      expect(report.ticks).toBe(TICKS);
      expect(report.zoh_activations).toBe(0);
      expect(report.stale_discarded).toBe(0);

      // the sensor streams decoded as real arrays along the way
      const frame = await intensity.receive(5_000);
      expect(frame).not.toBeNull();
      const values = frame!.values as NdArray;
      expect(values.shape).toEqual([48, 64]);
      expect(values.data).toBeInstanceOf(Float32Array);
      let lo = Infinity;
      let hi = -Infinity;
      for (const v of values.data as Float32Array) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
      expect(lo).toBeGreaterThanOrEqual(0);
      expect(hi).toBeLessThanOrEqual(1);

      const ev = await events.receive(5_000);
      expect(ev).not.toBeNull();
      const t = ev!.t as NdArray;
      const x = ev!.x as NdArray;
      const y = ev!.y as NdArray;
      const pol = ev!.polarity as NdArray;
      expect(x.data.length).toBe(t.data.length);
      expect(y.data.length).toBe(t.data.length);
      expect(pol.data.length).toBe(t.data.length);
      for (const p of pol.data as Int8Array) {
        expect(p === 1 || p === -1).toBe(true);
      }
    } finally {
      pose.stop();
      intensity.stop();
      events.stop();
      await cmd.stop();
      sim.kill();
    }
  });

  it("sustains paced intensity + events ingestion with zero hash errors", async () => {
    const tmp = mkdtempSync(path.join(tmpdir(), "evsim-ts-stream-"));
    const cfgPath = path.join(tmp, "sim.yaml");
    writeFileSync(cfgPath, simConfig(daemonPort)
      .replace("mode: lockstep", "mode: streaming")
      .replace("control: external", "control: internal")
      + "trajectory: {type: circle, center: [0.0, 0.0, 1.0], radius: 1.0, omega: 1.0}\n");

    const SECONDS = 10;
    const TICKS = 100 * SECONDS;
    const sim = spawn(
      "python3",
      ["-m", "evsim.sim.cli", "--config", cfgPath, "--ticks", String(TICKS)],
      { cwd: REPO },
    );
    const simExit = new Promise<number>((resolve) => sim.on("exit", (c) => resolve(c ?? -1)));
    const intensity = new ClientSubscription("/sim/intensity", INTENSITY_DECL,
      { daemonPort, pollIntervalMs: 100, queueDepth: 4096 });
    const events = new ClientSubscription("/sim/events", EVENTS_DECL,
      { daemonPort, pollIntervalMs: 100, queueDepth: 4096 });
    try {
      expect(await intensity.waitConnected(1, 30_000)).toBe(true);
      expect(await events.waitConnected(1, 30_000)).toBe(true);
      let frames = 0;
      let eventCount = 0;
      let done = 0;
      while (done < 2) {
        const [f, e] = await Promise.all([
          intensity.receive(3_000), events.receive(3_000),
        ]);
        if (f !== null) {
          frames += 1;
          expect((f.values as NdArray).shape).toEqual([48, 64]);
        }
        if (e !== null) eventCount += (e.t as NdArray).data.length;
        done = (f === null ? 1 : 0) + (e === null ? 1 : 0);
      }
      // joined mid-stream: expect nearly the full paced run on both topics
      expect(frames).toBeGreaterThan(TICKS - 100);
      expect(eventCount).toBeGreaterThan(0);
      expect(intensity.stats.typeMismatch).toBe(0);
      expect(events.stats.typeMismatch).toBe(0);
      expect(intensity.stats.queueDropped).toBe(0);
      expect(await simExit).toBe(0);
    } finally {
      intensity.stop();
      events.stop();
      sim.kill();
    }
  });

  it("surfaces schema mismatches as typed errors without corrupt values", async () => {
    // publish Pose-typed frames on a topic the subscriber reads as Command
    const pub = new ClientPublisher("/mismatch", POSE_DECL, { daemonPort });
    await pub.start();
    const sub = new ClientSubscription("/mismatch", CMD_DECL,
      { daemonPort, pollIntervalMs: 100 });
    try {
      expect(await sub.waitConnected(1, 15_000)).toBe(true);
      await pub.waitForSubscriber();
      pub.publish({
        step_id: 1n,
        t_us: 2n,
        position: { shape: [3], data: Float64Array.from([0, 0, 0]) },
        orientation: { shape: [4], data: Float64Array.from([1, 0, 0, 0]) },
        velocity: { shape: [3], data: Float64Array.from([0, 0, 0]) },
        angular_velocity: { shape: [3], data: Float64Array.from([0, 0, 0]) },
      });
      await expect(sub.receive(10_000)).rejects.toThrow(/hash mismatch/);
    } finally {
      sub.stop();
      await pub.stop();
    }
  });

  it("talks to discovery directly", async () => {
    const c = new DiscoveryClient("127.0.0.1", daemonPort);
    const nodeId = 0x1234_5678_9abc_def0n;
    await c.register("ts-node", nodeId,
      [{ topic: "/ts/topic", schemaHash: 0xffffffffffffffffn, endpoint: "tcp://127.0.0.1:1" }]);
    const pubs = await c.query("/ts/topic");
    expect(pubs.length).toBe(1);
    expect(pubs[0].schemaHash).toBe(0xffffffffffffffffn);
    await c.unregister(nodeId);
    expect(await c.query("/ts/topic")).toEqual([]);
  });
});
