/** A fixture snapshot server: serves captured API bodies over real HTTP. */

import { createServer, type Server } from "node:http";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function body(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf-8");
}

export interface FixtureServer {
  url: string;
  close(): Promise<void>;
}

export async function startFixtureServer(): Promise<FixtureServer> {
  const server: Server = createServer((req, res) => {
    const url = new URL(req.url ?? "/", "http://localhost");
    const path = url.pathname;
    const send = (status: number, payload: string) => {
      res.writeHead(status, { "Content-Type": "application/json" });
      res.end(payload);
    };
    try {
      if (req.method === "POST" && path === "/enforce") {
        send(202, JSON.stringify({ job_id: "job-000001" }));
        return;
      }
      if (path === "/snapshot") return send(200, body("snapshot.json"));
      if (path === "/roads") return send(200, body("roads.json"));
      if (path === "/clusters") return send(200, body("clusters.json"));
      if (path === "/speeds") return send(200, body("speeds.json"));
      if (path === "/headclusters") {
        const scale = url.searchParams.get("scale") ?? "global";
        return send(200, body(`headclusters_${scale}.json`));
      }
      if (/^\/enforce\/job-/.test(path)) return send(200, body("enforce_job.json"));
      const roadMatch = path.match(/^\/roads\/[^/]+\/(trend|series|attention|causality)$/);
      if (roadMatch) return send(200, body(`${roadMatch[1]}.json`));
      send(404, JSON.stringify({ error: `no fixture for ${path}` }));
    } catch (err) {
      send(500, JSON.stringify({ error: String(err) }));
    }
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const address = server.address();
  if (address === null || typeof address === "string") {
    throw new Error("fixture server failed to bind");
  }
  return {
    url: `http://127.0.0.1:${address.port}`,
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}
