import { ApiError, ServiceDown } from "./api.js";
import type { AppContext, Panel } from "./context.js";
import { clear, el } from "./dom.js";

// Demo consumer panel: trigger a data purchase as one of the enterprise
// nodes and toast the outcome, so a single person can play both sides.

export function mountConsumer(root: HTMLElement, ctx: AppContext): Panel {
  const enterpriseSelect = el("select", { "data-test": "enterprise" });
  const categoryInput = el("input", { "data-test": "consume-category", value: "purchase-history" });
  const purposeInput = el("input", { "data-test": "consume-purpose", value: "analytics" });

  root.append(
    el("h2", {}, "Enterprise view (demo)"),
    el(
      "div",
      {},
      el("label", {}, "buyer ", enterpriseSelect),
      el("label", {}, " category ", categoryInput),
      el("label", {}, " purpose ", purposeInput),
      el("button", { "data-test": "consume", onclick: buy }, "buy access"),
    ),
  );

  async function buy() {
    try {
      const res = await ctx.client.consume({
        enterprise: enterpriseSelect.value || undefined,
        category: categoryInput.value,
        purpose: purposeInput.value,
      });
      const detail =
        res.outcome === "Delivered"
          ? `${res.category} at ${res.price}`
          : res.reason || "no reason given";
      ctx.toast(`${res.outcome} — ${detail}`, res.outcome);
      // a purchase moves money and appends audit rows
      await ctx.refreshAll();
    } catch (err) {
      if (err instanceof ApiError) {
        ctx.toast(`${err.code}: ${err.message}`, "Error");
      } else if (err instanceof ServiceDown) {
        ctx.banner("service unreachable — retry");
      } else {
        throw err;
      }
    }
  }

  return {
    async refresh() {
      const dir = await ctx.client.directory();
      const current = enterpriseSelect.value;
      clear(enterpriseSelect);
      for (const [name, entry] of Object.entries(dir.names)) {
        if (!entry.node || entry.address === dir.actor) continue;
        enterpriseSelect.append(el("option", { value: name }, name));
      }
      if (current) enterpriseSelect.value = current;
    },
  };
}
