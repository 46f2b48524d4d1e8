/** Discovery daemon client: line-delimited `VERB json` over TCP. */

import * as net from "node:net";

export interface PublicationInfo {
  topic: string;
  schemaHash: bigint;
  endpoint: string;
}

function hex64(v: bigint): string {
  return "0x" + v.toString(16).padStart(16, "0");
}

export class DiscoveryClient {
  constructor(
    readonly host = "127.0.0.1",
    readonly port = 7780,
    readonly timeoutMs = 2000,
  ) {}

  private request(verb: string, body: unknown): Promise<Record<string, unknown>> {
    return new Promise((resolve, reject) => {
      const sock = net.createConnection({ host: this.host, port: this.port });
      let buf = "";
      const fail = (err: Error) => {
        sock.destroy();
        reject(err);
      };
      sock.setTimeout(this.timeoutMs, () => fail(new Error("discovery request timed out")));
      sock.on("error", fail);
      sock.on("connect", () => {
        sock.write(`${verb} ${JSON.stringify(body)}\n`);
      });
      sock.on("data", (chunk) => {
        buf += chunk.toString("utf-8");
        const nl = buf.indexOf("\n");
        if (nl < 0) return;
        sock.destroy();
        const line = buf.slice(0, nl);
        const space = line.indexOf(" ");
        const status = space < 0 ? line : line.slice(0, space);
        const payload = space < 0 ? {} : JSON.parse(line.slice(space + 1));
        if (status !== "OK") {
          reject(new Error(`discovery error: ${payload.error ?? "unknown"}`));
        } else {
          resolve(payload);
        }
      });
    });
  }

  async register(
    nodeName: string,
    nodeId: bigint,
    publications: PublicationInfo[],
  ): Promise<number> {
    const body = {
      node_name: nodeName,
      node_id: hex64(nodeId),
      publications: publications.map((p) => ({
        topic: p.topic,
        schema_hash: hex64(p.schemaHash),
        endpoint: p.endpoint,
      })),
    };
    const reply = await this.request("REGISTER", body);
    return Number(reply.lease_ttl);
  }

  async heartbeat(nodeId: bigint): Promise<void> {
    await this.request("HEARTBEAT", { node_id: hex64(nodeId) });
  }

  async query(topic: string): Promise<PublicationInfo[]> {
    const reply = await this.request("QUERY", { topic });
    const pubs = reply.publishers as { endpoint: string; schema_hash: string }[];
    return pubs.map((p) => ({
      topic,
      schemaHash: BigInt(p.schema_hash),
      endpoint: p.endpoint,
    }));
  }

  async unregister(nodeId: bigint): Promise<void> {
    await this.request("UNREGISTER", { node_id: hex64(nodeId) });
  }
}
