import { ApiClient, ServiceDown } from "./api.js";
import type { AppContext, Panel } from "./context.js";
import { clear, el } from "./dom.js";
import { mountConsent } from "./consent.js";
import { mountConsumer } from "./consumer.js";
import { mountStorefront } from "./storefront.js";
import { mountTimeline } from "./timeline.js";

// Assembles the four panels, the actor switcher, the error banner, and the
// toast area. Polling just re-runs every panel's refresh; it never mutates.

export type App = {
  refresh(): Promise<void>;
  startPolling(intervalMs?: number): void;
  stopPolling(): void;
};

export async function mountApp(root: HTMLElement, client: ApiClient, session = "web"): Promise<App> {
  const banner = el("div", { "data-test": "banner", class: "banner", hidden: "" });
  const retry = el("button", { onclick: () => void refresh() }, "retry");
  const bannerText = el("span", {});
  banner.append(bannerText, " ", retry);

  const actorSelect = el("select", { "data-test": "actor", onchange: switchActor });
  const toasts = el("div", { "data-test": "toasts" });

  const shopRoot = el("section", { class: "panel" });
  const consentRoot = el("section", { class: "panel" });
  const timelineRoot = el("section", { class: "panel" });
  const consumerRoot = el("section", { class: "panel" });

  clear(root).append(
    banner,
    el("header", {}, el("h1", {}, "chainmart"), el("label", {}, "customer ", actorSelect)),
    shopRoot,
    consentRoot,
    timelineRoot,
    consumerRoot,
    toasts,
  );

  let names = new Map<string, string>();

  const ctx: AppContext = {
    client,
    session,
    nameOf: (address) => names.get(address) ?? address.slice(0, 10) + "…",
    refreshAll: () => refresh(),
    banner(message) {
      if (message === null) {
        banner.setAttribute("hidden", "");
      } else {
        bannerText.textContent = message;
        banner.removeAttribute("hidden");
      }
    },
    toast(text, outcome) {
      toasts.append(
        el("div", { "data-test": "toast", "data-outcome": outcome, class: "toast" }, text),
      );
      while (toasts.childElementCount > 5) toasts.firstElementChild?.remove();
    },
  };

  const panels: Panel[] = [
    mountStorefront(shopRoot, ctx),
    mountConsent(consentRoot, ctx),
    mountTimeline(timelineRoot, ctx),
    mountConsumer(consumerRoot, ctx),
  ];

  async function refreshDirectory() {
    const dir = await client.directory();
    names = new Map(Object.entries(dir.names).map(([name, e]) => [e.address, name]));
    const current = actorSelect.value;
    clear(actorSelect);
    for (const [name, entry] of Object.entries(dir.names)) {
      if (!entry.node) continue; // only sharing customers can act
      actorSelect.append(el("option", { value: name }, name));
    }
    if (current) {
      actorSelect.value = current;
    } else if (dir.actor) {
      const actorName = names.get(dir.actor);
      if (actorName) actorSelect.value = actorName;
    }
  }

  async function switchActor() {
    try {
      await client.setActor(actorSelect.value);
      await refresh();
    } catch (err) {
      if (err instanceof ServiceDown) ctx.banner("service unreachable — retry");
      else throw err;
    }
  }

  async function refresh() {
    try {
      await refreshDirectory();
      for (const panel of panels) await panel.refresh();
      ctx.banner(null);
    } catch (err) {
      if (err instanceof ServiceDown) {
        ctx.banner("service unreachable — retry");
        return;
      }
      throw err;
    }
  }

  let timer: ReturnType<typeof setInterval> | null = null;

  await refresh();

  return {
    refresh,
    startPolling(intervalMs = 1000) {
      if (timer !== null) return;
      timer = setInterval(() => void refresh(), intervalMs);
    },
    stopPolling() {
      if (timer !== null) clearInterval(timer);
      timer = null;
    },
  };
}
