// Typed client for the chainmart shop service. Every method maps to one
// endpoint; nothing here caches or invents state.

export type Product = { sku: string; name: string; price: number; stock: number };

export type CartView = {
  session: string;
  customer: string;
  lines: Record<string, number>;
  total: number;
};

export type Proof = {
  txid: string;
  height: number;
  merkle_path: [string, string][];
  header_digest: string;
};

export type Receipt = {
  order_id: string;
  customer: string;
  merchant: string;
  total: number;
  txid: string;
  created_ms: number;
  body: { lines: Record<string, number>; total: number; created_ms: number; seq: number };
  proof: Proof;
};

export type ConsentAck = {
  txid: string;
  category: string;
  purposes: string[];
  price: number;
  digest: string;
};

export type AuditRow = {
  who: string;
  what: string;
  whom: string;
  when_ms: number;
  means_stream: string;
  means_txid: string;
  purpose: string;
  outcome: string;
  category: string;
};

export type RewardEntry = {
  customer: string;
  amount: number;
  contract_id: string;
  when_ms: number;
  category: string;
};

export type Rewards = { balance_delta: number; entries: RewardEntry[] };

export type Wallet = { address: string; balance: number };

export type DirectoryEntry = { address: string; balance: number; node: boolean };
export type Directory = { actor: string | null; names: Record<string, DirectoryEntry> };

export type ConsumeOutcome = {
  outcome: string;
  reason: string;
  record: Record<string, unknown> | null;
  contract_id?: string;
  contract_state?: string;
  price?: number;
  owner?: string;
  category?: string;
};

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export class ServiceDown extends Error {
  constructor(cause: unknown) {
    super("service unreachable");
    this.cause = cause;
  }
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceDown(err);
    }
    const data = await res.json();
    if (!res.ok) {
      throw new ApiError(data.error ?? "Unknown", data.message ?? res.statusText, res.status);
    }
    return data as T;
  }

  catalog(): Promise<Product[]> {
    return this.call("GET", "/catalog");
  }

  cart(session: string): Promise<CartView> {
    return this.call("GET", `/cart/${session}`);
  }

  // PUT sets the line quantity outright; qty 0 removes the line
  setItem(session: string, sku: string, qty: number): Promise<CartView> {
    return this.call("PUT", `/cart/${session}/items`, { sku, qty });
  }

  checkout(session: string): Promise<Receipt> {
    return this.call("POST", `/checkout/${session}`);
  }

  receipt(orderId: string): Promise<Receipt> {
    return this.call("GET", `/receipts/${orderId}`);
  }

  async verifyReceipt(receipt: Receipt): Promise<boolean> {
    const res = await this.call<{ valid: boolean }>("POST", "/receipts/verify", receipt);
    return res.valid;
  }

  optIn(category: string, purposes: string[], price: number): Promise<ConsentAck> {
    return this.call("POST", "/consent", { category, purposes, price });
  }

  revoke(category: string, purge = false): Promise<{ revoked: boolean; purged: number }> {
    const suffix = purge ? "?purge=true" : "";
    return this.call("DELETE", `/consent/${category}${suffix}`);
  }

  audit(): Promise<AuditRow[]> {
    return this.call("GET", "/audit");
  }

  rewards(): Promise<Rewards> {
    return this.call("GET", "/rewards");
  }

  wallet(): Promise<Wallet> {
    return this.call("GET", "/wallet");
  }

  directory(): Promise<Directory> {
    return this.call("GET", "/demo/directory");
  }

  setActor(name: string): Promise<{ actor: string; name: string }> {
    return this.call("POST", "/demo/actor", { name });
  }

  consume(opts: {
    enterprise?: string;
    owner?: string;
    category?: string;
    purpose?: string;
  }): Promise<ConsumeOutcome> {
    return this.call("POST", "/demo/consume", opts);
  }
}
