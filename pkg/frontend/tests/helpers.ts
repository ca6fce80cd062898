import { spawn, type ChildProcess } from "node:child_process";

// Boots a real chainmart service for one test file and tears it down after.
// A random high port keeps reruns from tripping over lingering sockets.

export type Service = { url: string; stop(): Promise<void> };

export async function startService(seed: number): Promise<Service> {
  const port = 18100 + Math.floor(Math.random() * 2000);
  const url = `http://127.0.0.1:${port}`;
  const proc = spawn("chainmart", ["serve", "--port", String(port), "--seed", String(seed)], {
    stdio: ["ignore", "ignore", "pipe"],
  });
  let stderr = "";
  proc.stderr?.on("data", (chunk) => {
    stderr += chunk;
  });

  const deadline = Date.now() + 20000;
  while (Date.now() < deadline && proc.exitCode === null) {
    try {
      const res = await fetch(`${url}/catalog`);
      if (res.ok) return { url, stop: () => stop(proc) };
    } catch {
      // not listening yet
    }
    await sleep(200);
  }
  await stop(proc);
  throw new Error(`service failed to start on ${url}\n${stderr}`);
}

async function stop(proc: ChildProcess): Promise<void> {
  if (proc.exitCode !== null) return;
  proc.kill("SIGTERM");
  await new Promise<void>((resolve) => {
    proc.once("exit", () => resolve());
    const fallback = setTimeout(() => {
      proc.kill("SIGKILL");
      resolve();
    }, 3000);
    fallback.unref();
  });
}

export function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

// Poll until fn returns something truthy; DOM updates land asynchronously
// after click handlers await the service.
export async function until<T>(fn: () => T | false | null | undefined, timeoutMs = 8000): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = fn();
    if (value) return value;
    if (Date.now() > deadline) throw new Error("condition not met in time");
    await sleep(25);
  }
}

export function q<T extends HTMLElement = HTMLElement>(root: ParentNode, testId: string): T {
  const node = root.querySelector(`[data-test="${testId}"]`);
  if (!node) throw new Error(`no element with data-test=${testId}`);
  return node as T;
}

export function maybeQ(root: ParentNode, testId: string): HTMLElement | null {
  return root.querySelector(`[data-test="${testId}"]`);
}

export function setInput(root: ParentNode, testId: string, value: string): void {
  const input = q<HTMLInputElement>(root, testId);
  input.value = value;
  input.dispatchEvent(new Event("change"));
}

export function balanceShown(root: ParentNode): number {
  return Number(q(root, "wallet-balance").textContent);
}
