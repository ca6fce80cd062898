// Small createElement wrapper so panels can build trees without innerHTML.

export type Attrs = Record<string, string | ((ev: Event) => void)>;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(name.replace(/^on/, ""), value);
    } else {
      node.setAttribute(name, value);
    }
  }
  node.append(...children);
  return node;
}

export function clear(node: HTMLElement): HTMLElement {
  node.replaceChildren();
  return node;
}

export function shortHex(hex: string, chars = 10): string {
  return hex.length <= chars ? hex : hex.slice(0, chars) + "…";
}

export function tokens(amount: number): string {
  return `${amount} token${amount === 1 ? "" : "s"}`;
}
