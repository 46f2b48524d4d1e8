/**
 * Subscribing and publishing ends of the data plane.
 *
 * A subscription polls the discovery daemon for publishers of its topic,
 * performs the SUBSCRIBE line handshake, and feeds decoded messages into a
 * bounded queue consumed with `receive()` or async iteration. A publisher
 * binds a TCP endpoint, registers it, heartbeats, and fans frames out to
 * every subscribed connection.
 */

import * as net from "node:net";
import * as crypto from "node:crypto";

import { DiscoveryClient } from "./discovery.js";
import {
  Message,
  Schema,
  TypeMismatchError,
  decodePayload,
  encodePayload,
  parseSchema,
  schemaHash,
} from "./schema.js";
import { decodeFramePrefix, encodeFrame } from "./wire.js";

function connectEndpoint(endpoint: string): net.Socket {
  if (endpoint.startsWith("tcp://")) {
    const rest = endpoint.slice(6);
    const i = rest.lastIndexOf(":");
    return net.createConnection({ host: rest.slice(0, i), port: parseInt(rest.slice(i + 1), 10) });
  }
  if (endpoint.startsWith("local://")) {
    return net.createConnection(endpoint.slice(8));
  }
  throw new Error(`malformed endpoint: ${endpoint}`);
}

type QueueItem = { kind: "msg"; value: Message } | { kind: "err"; error: Error };

export interface SubscriptionOptions {
  daemonHost?: string;
  daemonPort?: number;
  queueDepth?: number;
  pollIntervalMs?: number;
  /** connect straight to these endpoints instead of using discovery */
  endpoints?: string[];
}

export class ClientSubscription {
  readonly schema: Schema;
  readonly expectedHash: bigint;
  private readonly discovery: DiscoveryClient | null;
  private readonly queueDepth: number;
  private readonly pollIntervalMs: number;
  private readonly queue: QueueItem[] = [];
  private readonly waiters: Array<(item: QueueItem | null) => void> = [];
  private readonly sockets = new Set<net.Socket>();
  private readonly connected = new Map<string, boolean>();
  private pollTimer: NodeJS.Timeout | null = null;
  private stopped = false;
  stats = { frames: 0, typeMismatch: 0, queueDropped: 0 };

  constructor(readonly topic: string, declaration: string,
              opts: SubscriptionOptions = {}) {
    this.schema = parseSchema(declaration);
    this.expectedHash = schemaHash(this.schema);
    this.queueDepth = opts.queueDepth ?? 8192;
    this.pollIntervalMs = opts.pollIntervalMs ?? 250;
    this.discovery = opts.endpoints
      ? null
      : new DiscoveryClient(opts.daemonHost ?? "127.0.0.1", opts.daemonPort ?? 7780);
    if (opts.endpoints) {
      for (const ep of opts.endpoints) this.connect(ep);
    } else {
      void this.poll();
      this.pollTimer = setInterval(() => void this.poll(), this.pollIntervalMs);
    }
  }

  private async poll(): Promise<void> {
    if (this.stopped || this.discovery === null) return;
    let pubs;
    try {
      pubs = await this.discovery.query(this.topic);
    } catch {
      return; // daemon briefly unreachable: retry next interval
    }
    for (const p of pubs) {
      if (!this.connected.get(p.endpoint)) this.connect(p.endpoint);
    }
  }

  private connect(endpoint: string): void {
    this.connected.set(endpoint, true);
    let sock: net.Socket;
    try {
      sock = connectEndpoint(endpoint);
    } catch {
      this.connected.set(endpoint, false);
      return;
    }
    sock.setNoDelay(true);
    let handshaken = false;
    let buf: Buffer = Buffer.alloc(0);
    sock.on("connect", () => {
      sock.write(`SUBSCRIBE ${JSON.stringify({ topics: [this.topic] })}\n`);
    });
    sock.on("data", (chunk) => {
      buf = buf.length === 0 ? chunk : Buffer.concat([buf, chunk]);
      if (!handshaken) {
        const nl = buf.indexOf(0x0a);
        if (nl < 0) return;
        const line = buf.subarray(0, nl).toString("utf-8");
        buf = buf.subarray(nl + 1);
        if (!line.startsWith("OK")) {
          sock.destroy();
          return;
        }
        handshaken = true;
        this.sockets.add(sock);
      }
      let off = 0;
      while (true) {
        let out;
        try {
          out = decodeFramePrefix(buf.subarray(off));
        } catch (e) {
          sock.destroy();
          return;
        }
        if (out === null) break;
        this.dispatch(out.frame.schemaHash, out.frame.payload);
        off += out.consumed;
      }
      if (off > 0) buf = Buffer.from(buf.subarray(off)); // own the leftover bytes
    });
    const drop = () => {
      this.sockets.delete(sock);
      this.connected.set(endpoint, false);
    };
    sock.on("error", drop);
    sock.on("close", drop);
  }

  private dispatch(frameHash: bigint, payload: Uint8Array): void {
    let item: QueueItem;
    if (frameHash !== this.expectedHash) {
      this.stats.typeMismatch += 1;
      item = { kind: "err", error: new TypeMismatchError(this.expectedHash, frameHash) };
    } else {
      try {
        // copy once: the decode views must outlive the parse buffer
        item = { kind: "msg", value: decodePayload(Uint8Array.from(payload), this.schema) };
      } catch (e) {
        item = { kind: "err", error: e as Error };
      }
    }
    this.stats.frames += 1;
    const waiter = this.waiters.shift();
    if (waiter) {
      waiter(item);
      return;
    }
    if (this.queue.length >= this.queueDepth) {
      this.queue.shift();
      this.stats.queueDropped += 1;
    }
    this.queue.push(item);
  }

  /** True once at least `count` publisher connections are confirmed. */
  async waitConnected(count = 1, timeoutMs = 10_000): Promise<boolean> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      if (this.sockets.size >= count) return true;
      await new Promise((r) => setTimeout(r, 10));
    }
    return this.sockets.size >= count;
  }

  /**
   * Next message, or null after the timeout. A schema-hash mismatch throws
   * TypeMismatchError for that frame; the stream continues afterwards.
   */
  receive(timeoutMs?: number): Promise<Message | null> {
    const item = this.queue.shift();
    if (item) return Promise.resolve(this.unwrap(item));
    if (this.stopped) return Promise.resolve(null);
    return new Promise((resolve, reject) => {
      let timer: NodeJS.Timeout | null = null;
      const waiter = (it: QueueItem | null) => {
        if (timer) clearTimeout(timer);
        if (it === null) return resolve(null);
        try {
          resolve(this.unwrap(it));
        } catch (e) {
          reject(e);
        }
      };
      this.waiters.push(waiter);
      if (timeoutMs !== undefined) {
        timer = setTimeout(() => {
          const i = this.waiters.indexOf(waiter);
          if (i >= 0) this.waiters.splice(i, 1);
          resolve(null);
        }, timeoutMs);
      }
    });
  }

  private unwrap(item: QueueItem): Message {
    if (item.kind === "err") throw item.error;
    return item.value;
  }

  async *messages(timeoutMs?: number): AsyncGenerator<Message> {
    while (!this.stopped) {
      const m = await this.receive(timeoutMs);
      if (m === null) return;
      yield m;
    }
  }

  stop(): void {
    this.stopped = true;
    if (this.pollTimer) clearInterval(this.pollTimer);
    for (const s of this.sockets) s.destroy();
    this.sockets.clear();
    while (this.waiters.length) this.waiters.shift()!(null);
  }
}

export interface PublisherOptions {
  daemonHost?: string;
  daemonPort?: number;
  nodeName?: string;
}

export class ClientPublisher {
  readonly schema: Schema;
  readonly hash: bigint;
  readonly nodeId: bigint;
  private readonly discovery: DiscoveryClient;
  private readonly subs = new Set<net.Socket>();
  private server: net.Server | null = null;
  private heartbeatTimer: NodeJS.Timeout | null = null;
  endpoint = "";

  constructor(readonly topic: string, declaration: string,
              private readonly opts: PublisherOptions = {}) {
    this.schema = parseSchema(declaration);
    this.hash = schemaHash(this.schema);
    this.nodeId = crypto.randomBytes(8).readBigUInt64LE();
    this.discovery = new DiscoveryClient(
      opts.daemonHost ?? "127.0.0.1", opts.daemonPort ?? 7780);
  }

  /** Bind, register with the daemon, and begin accepting subscribers. */
  async start(): Promise<void> {
    const server = net.createServer((sock) => this.handshake(sock));
    this.server = server;
    await new Promise<void>((resolve, reject) => {
      server.once("error", reject);
      server.listen(0, "127.0.0.1", () => resolve());
    });
    const addr = server.address() as net.AddressInfo;
    this.endpoint = `tcp://${addr.address}:${addr.port}`;
    const lease = await this.discovery.register(
      this.opts.nodeName ?? `client-pub-${this.topic}`,
      this.nodeId,
      [{ topic: this.topic, schemaHash: this.hash, endpoint: this.endpoint }],
    );
    this.heartbeatTimer = setInterval(() => {
      this.discovery.heartbeat(this.nodeId).catch(() => {
        // daemon restarted: re-register so it can rebuild its registry
        void this.discovery.register(
          this.opts.nodeName ?? `client-pub-${this.topic}`, this.nodeId,
          [{ topic: this.topic, schemaHash: this.hash, endpoint: this.endpoint }],
        ).catch(() => undefined);
      });
    }, (lease / 3) * 1000);
  }

  private handshake(sock: net.Socket): void {
    sock.setNoDelay(true);
    let buf: Buffer = Buffer.alloc(0);
    const onData = (chunk: Buffer) => {
      buf = buf.length === 0 ? chunk : Buffer.concat([buf, chunk]);
      const nl = buf.indexOf(0x0a);
      if (nl < 0) return;
      sock.off("data", onData);
      const line = buf.subarray(0, nl).toString("utf-8");
      if (!line.startsWith("SUBSCRIBE")) {
        sock.end('ERR {"error": "expected SUBSCRIBE"}\n');
        return;
      }
      try {
        const body = JSON.parse(line.slice(line.indexOf(" ") + 1));
        const topics: string[] = body.topics ?? [];
        if (topics.length > 0 && !topics.includes(this.topic)) {
          sock.end('ERR {"error": "topic not served here"}\n');
          return;
        }
      } catch {
        sock.end('ERR {"error": "malformed subscribe"}\n');
        return;
      }
      sock.write("OK {}\n");
      this.subs.add(sock);
      sock.on("close", () => this.subs.delete(sock));
      sock.on("error", () => this.subs.delete(sock));
    };
    sock.on("data", onData);
  }

  get subscriberCount(): number {
    return this.subs.size;
  }

  async waitForSubscriber(timeoutMs = 10_000): Promise<boolean> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      if (this.subs.size > 0) return true;
      await new Promise((r) => setTimeout(r, 10));
    }
    return this.subs.size > 0;
  }

  /** Encode once and fan out; node sockets buffer internally. */
  publish(values: Message, publishTimeNs?: bigint): void {
    const frame = encodeFrame(
      this.topic, this.hash,
      publishTimeNs ?? BigInt(Date.now()) * 1_000_000n,
      encodePayload(values, this.schema),
    );
    for (const s of this.subs) s.write(frame);
  }

  async stop(): Promise<void> {
    if (this.heartbeatTimer) clearInterval(this.heartbeatTimer);
    try {
      await this.discovery.unregister(this.nodeId);
    } catch {
      // daemon may already be gone
    }
    for (const s of this.subs) s.destroy();
    this.subs.clear();
    if (this.server) {
      await new Promise<void>((resolve) => this.server!.close(() => resolve()));
    }
  }
}
