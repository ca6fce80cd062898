import { ApiError, ServiceDown } from "./api.js";
import type { AppContext, Panel } from "./context.js";
import { clear, el, shortHex, tokens } from "./dom.js";

// Consent dashboard: one card per category with an enable/disable toggle,
// price and purposes editors, and a two-step purge. The enabled flag flips
// only after the matching POST or DELETE succeeds.

type CategoryState = {
  enabled: boolean;
  purposes: string[];
  price: number;
  purged: boolean;
  listedDigest: string | null;
};

const DEFAULT_CATEGORY = "purchase-history";

export function mountConsent(root: HTMLElement, ctx: AppContext): Panel {
  const cards = el("div", { "data-test": "consent-cards" });
  const addInput = el("input", { "data-test": "add-category-name", placeholder: "category" });
  const statusLine = el("div", { "data-test": "consent-status", class: "error" });

  root.append(
    el("h2", {}, "Data sharing"),
    cards,
    el(
      "div",
      {},
      addInput,
      el("button", { "data-test": "add-category", onclick: addCategory }, "track category"),
    ),
    statusLine,
  );

  const state = new Map<string, CategoryState>();
  state.set(DEFAULT_CATEGORY, {
    enabled: false,
    purposes: ["analytics"],
    price: 10,
    purged: false,
    listedDigest: null,
  });

  function addCategory() {
    const name = addInput.value.trim();
    if (!name || state.has(name)) return;
    state.set(name, { enabled: false, purposes: ["analytics"], price: 10, purged: false, listedDigest: null });
    addInput.value = "";
    render();
  }

  async function toggle(category: string) {
    const entry = state.get(category);
    if (!entry) return;
    try {
      if (entry.enabled) {
        await ctx.client.revoke(category);
        entry.enabled = false;
        entry.listedDigest = null;
      } else {
        const ack = await ctx.client.optIn(category, entry.purposes, entry.price);
        entry.enabled = true;
        entry.purged = false;
        entry.listedDigest = ack.digest;
      }
      statusLine.textContent = "";
      render();
    } catch (err) {
      handle(err);
    }
  }

  async function purge(category: string) {
    const entry = state.get(category);
    if (!entry) return;
    try {
      await ctx.client.revoke(category, true);
      entry.enabled = false;
      entry.purged = true;
      entry.listedDigest = null;
      statusLine.textContent = "";
      render();
    } catch (err) {
      handle(err);
    }
  }

  function handle(err: unknown) {
    if (err instanceof ApiError) {
      statusLine.textContent = `${err.code}: ${err.message}`;
    } else if (err instanceof ServiceDown) {
      ctx.banner("service unreachable — retry");
    } else {
      throw err;
    }
  }

  function render() {
    clear(cards);
    for (const [category, entry] of state) {
      const card = el("div", { "data-test": `consent-${category}`, class: "card" });
      card.append(el("strong", {}, category), " ");

      const priceInput = el("input", {
        "data-test": `price-${category}`,
        value: String(entry.price),
        onchange: (ev) => {
          const v = Number((ev.target as HTMLInputElement).value);
          if (Number.isInteger(v) && v >= 0) entry.price = v;
        },
      });
      const purposesInput = el("input", {
        "data-test": `purposes-${category}`,
        value: entry.purposes.join(","),
        onchange: (ev) => {
          entry.purposes = (ev.target as HTMLInputElement).value
            .split(",")
            .map((s) => s.trim())
            .filter(Boolean);
        },
      });

      card.append(
        el("label", {}, "price ", priceInput),
        el("label", {}, " purposes ", purposesInput),
        el(
          "button",
          { "data-test": `consent-toggle-${category}`, onclick: () => toggle(category) },
          entry.enabled ? "disable" : "enable",
        ),
      );

      if (entry.enabled && entry.listedDigest) {
        card.append(
          el(
            "div",
            { "data-test": `consent-note-${category}` },
            `listed at ${tokens(entry.price)} (digest ${shortHex(entry.listedDigest)})`,
          ),
        );
      } else if (entry.purged) {
        card.append(
          el(
            "div",
            { "data-test": `consent-note-${category}` },
            "deleted — stored data gone, old listing proofs stay valid",
          ),
        );
      }

      // purge asks twice: the confirm row only appears after the first click
      const confirmRow = el("span", { "data-test": `purge-confirm-${category}`, hidden: "" });
      confirmRow.append(
        " really delete stored data? ",
        el("button", { "data-test": `purge-yes-${category}`, onclick: () => purge(category) }, "yes"),
        el(
          "button",
          { onclick: () => confirmRow.setAttribute("hidden", "") },
          "no",
        ),
      );
      card.append(
        el(
          "button",
          { "data-test": `purge-${category}`, onclick: () => confirmRow.removeAttribute("hidden") },
          "purge…",
        ),
        confirmRow,
      );
      cards.append(card);
    }
  }

  render();

  return {
    // consent state is intentionally client-held configuration; nothing
    // to pull on poll, but render once so tests can mount-and-look
    async refresh() {
      render();
    },
  };
}
