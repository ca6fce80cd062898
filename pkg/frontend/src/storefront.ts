import { ApiError, ServiceDown } from "./api.js";
import type { CartView, Product, Receipt } from "./api.js";
import type { AppContext, Panel } from "./context.js";
import { clear, el, shortHex, tokens } from "./dom.js";

// Catalog, cart, checkout, and the receipt view with its proof badge.
// The wallet line re-renders from GET /wallet after every checkout, never
// from arithmetic done here.

export function mountStorefront(root: HTMLElement, ctx: AppContext): Panel {
  const walletLine = el("div", { "data-test": "wallet" });
  const catalogList = el("ul", { "data-test": "catalog", class: "catalog" });
  const cartBox = el("div", { "data-test": "cart" });
  const errorLine = el("div", { "data-test": "checkout-error", class: "error" });
  const receiptBox = el("div", { "data-test": "receipt" });

  root.append(
    el("h2", {}, "Shop"),
    walletLine,
    catalogList,
    cartBox,
    errorLine,
    receiptBox,
  );

  let lines: Record<string, number> = {};

  // mutations run one at a time so rapid add clicks compose instead of
  // racing each other with stale quantities
  let chain: Promise<unknown> = Promise.resolve();
  function mutate(fn: () => Promise<void>): void {
    chain = chain.then(fn, fn);
  }

  function renderWallet(address: string, balance: number, pending: number) {
    clear(walletLine).append(
      `${shortHex(address)} — `,
      el("strong", { "data-test": "wallet-balance" }, String(balance)),
      ` tokens (cart ${pending})`,
    );
  }

  function renderCatalog(products: Product[]) {
    clear(catalogList);
    for (const p of products) {
      catalogList.append(
        el(
          "li",
          { "data-test": `product-${p.sku}` },
          `${p.name} — ${tokens(p.price)}, ${p.stock} left `,
          el(
            "button",
            {
              "data-test": `add-${p.sku}`,
              onclick: () => mutate(() => setQty(p.sku, (lines[p.sku] ?? 0) + 1)),
            },
            "add",
          ),
        ),
      );
    }
  }

  function renderCart(cart: CartView) {
    lines = { ...cart.lines };
    clear(cartBox).append(el("h3", {}, "Cart"));
    for (const [sku, qty] of Object.entries(cart.lines)) {
      const qtyInput = el("input", {
        "data-test": `qty-${sku}`,
        value: String(qty),
        onchange: (ev) => {
          const v = Number((ev.target as HTMLInputElement).value);
          if (Number.isInteger(v) && v >= 0) mutate(() => setQty(sku, v));
        },
      });
      cartBox.append(
        el(
          "div",
          { "data-test": `cart-line-${sku}` },
          `${sku} × `,
          qtyInput,
          " ",
          el(
            "button",
            { "data-test": `remove-${sku}`, onclick: () => mutate(() => setQty(sku, 0)) },
            "remove",
          ),
        ),
      );
    }
    cartBox.append(
      el("div", { "data-test": "cart-total" }, `total ${tokens(cart.total)}`),
      el("button", { "data-test": "checkout", onclick: () => mutate(checkout) }, "checkout"),
    );
  }

  function renderReceipt(receipt: Receipt, verified: boolean) {
    clear(receiptBox).append(
      el("h3", {}, "Receipt"),
      el("div", {}, `order ${shortHex(receipt.order_id, 16)}`),
      el("div", {}, `tx ${shortHex(receipt.txid, 16)} at height ${receipt.proof.height}`),
      el("div", {}, `paid ${tokens(receipt.total)}`),
      el(
        "span",
        { "data-test": "proof-badge", class: verified ? "badge ok" : "badge bad" },
        verified ? "proof verified" : "proof FAILED",
      ),
    );
  }

  async function setQty(sku: string, qty: number) {
    try {
      const cart = await ctx.client.setItem(ctx.session, sku, qty);
      errorLine.textContent = "";
      renderCart(cart);
      await refreshWallet();
    } catch (err) {
      handle(err);
    }
  }

  async function checkout() {
    try {
      const receipt = await ctx.client.checkout(ctx.session);
      const verified = await ctx.client.verifyReceipt(receipt);
      errorLine.textContent = "";
      renderReceipt(receipt, verified);
      // balance, stock, and the emptied cart all changed server-side
      await ctx.refreshAll();
    } catch (err) {
      handle(err);
    }
  }

  // inline message for domain errors, banner for transport failure;
  // the cart is preserved server-side so nothing is re-rendered here
  function handle(err: unknown) {
    if (err instanceof ApiError) {
      errorLine.textContent = `${err.code}: ${err.message}`;
    } else if (err instanceof ServiceDown) {
      ctx.banner("service unreachable — retry");
    } else {
      throw err;
    }
  }

  async function refreshWallet() {
    const [wallet, cart] = await Promise.all([
      ctx.client.wallet(),
      currentCart(),
    ]);
    renderWallet(wallet.address, wallet.balance, cart.total);
    renderCart(cart);
  }

  // a session that has never seen a PUT is a 404, rendered as empty
  async function currentCart(): Promise<CartView> {
    try {
      return await ctx.client.cart(ctx.session);
    } catch (err) {
      if (err instanceof ApiError && err.code === "UnknownSession") {
        return { session: ctx.session, customer: "", lines: {}, total: 0 };
      }
      throw err;
    }
  }

  return {
    async refresh() {
      const products = await ctx.client.catalog();
      renderCatalog(products);
      await refreshWallet();
    },
  };
}
