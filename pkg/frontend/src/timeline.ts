import type { AuditRow, Rewards } from "./api.js";
import type { AppContext, Panel } from "./context.js";
import { clear, el, shortHex, tokens } from "./dom.js";

// Audit timeline plus the rewards ticker. Every rendered row comes from
// GET /audit; the ticker mirrors GET /rewards. Polling re-runs refresh().

export function mountTimeline(root: HTMLElement, ctx: AppContext): Panel {
  const ticker = el("div", { "data-test": "rewards-ticker", class: "ticker" });
  const list = el("ol", { "data-test": "timeline" });

  root.append(el("h2", {}, "Access log"), ticker, list);

  function renderTicker(rewards: Rewards) {
    clear(ticker).append(
      el("strong", { "data-test": "rewards-total" }, String(rewards.balance_delta)),
      " tokens earned",
    );
    const last = rewards.entries[rewards.entries.length - 1];
    if (last) {
      ticker.append(
        el(
          "span",
          { "data-test": "rewards-last" },
          ` (+${last.amount} for ${last.category})`,
        ),
      );
    }
  }

  function renderRows(rows: AuditRow[]) {
    clear(list);
    for (const row of rows) {
      const outcome = row.outcome.toLowerCase();
      list.append(
        el(
          "li",
          {
            "data-test": "timeline-row",
            "data-outcome": row.outcome,
            class: `row outcome-${outcome}`,
          },
          el("span", { class: "when" }, `t=${row.when_ms}ms `),
          el("span", { class: `outcome ${outcome}` }, row.outcome),
          ` ${ctx.nameOf(row.who)} • ${row.category} • ${row.purpose} • ${shortHex(row.what)}`,
        ),
      );
    }
  }

  return {
    async refresh() {
      const [rows, rewards] = await Promise.all([ctx.client.audit(), ctx.client.rewards()]);
      renderRows(rows);
      renderTicker(rewards);
    },
  };
}
