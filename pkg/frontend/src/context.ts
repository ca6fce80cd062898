import type { ApiClient } from "./api.js";

// Shared wiring handed to every panel. Panels render only from API
// responses; after a mutation they ask the app to refresh everyone.
export type AppContext = {
  client: ApiClient;
  session: string;
  // address -> directory name, for readable rendering of audit rows
  nameOf(address: string): string;
  refreshAll(): Promise<void>;
  banner(message: string | null): void;
  toast(text: string, outcome: string): void;
};

export type Panel = { refresh(): Promise<void> };
