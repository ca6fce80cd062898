"""Command line entry points: bench, demo e2e, serve."""

from __future__ import annotations

import os

import click

from .bench import ScenarioConfig, run_scenario, write_csv
from .encoding import canonical_json_bytes
from .errors import ChainmartError
from .ledger import export_chain
from .marketplace import PlatformConfig
from .records import ProfileRecord
from .shop import build_demo


@click.group()
def main() -> None:
    """Shopping-cart chain with consent-gated customer data sharing."""


SCENARIO_ALIASES = {"s1": "s1-publish", "s2": "s2-retrieve", "s3": "s3-mixed"}


@main.command()
@click.option(
    "--scenario",
    required=True,
    type=click.Choice(["s1", "s2", "s3", "s1-publish", "s2-retrieve", "s3-mixed"]),
)
@click.option("--nodes", default=4, show_default=True, type=int)
@click.option("--items", default=100, show_default=True, type=int)
@click.option("--latency-ms", default=50, show_default=True, type=int)
@click.option("--drop", default=0.0, show_default=True, type=float)
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--record-bytes", default=256, show_default=True, type=int)
@click.option("--out", default="metrics.csv", show_default=True, type=click.Path(dir_okay=False))
def bench(scenario, nodes, items, latency_ms, drop, seed, record_bytes, out) -> None:
    """Run one benchmark scenario and write a CSV report."""
    cfg = ScenarioConfig(
        name=SCENARIO_ALIASES.get(scenario, scenario),
        nodes=nodes,
        items=items,
        link_latency_ms=latency_ms,
        drop_rate=drop,
        seed=seed,
        record_bytes=record_bytes,
    )
    try:
        report = run_scenario(cfg)
        write_csv(report, out)
    except ChainmartError as exc:
        raise click.ClickException(f"{exc.code}: {exc}")
    except OSError as exc:
        raise click.ClickException(str(exc))
    for row in report.rows:
        click.echo(
            f"{row.scenario} {row.op_kind:8s} count={row.count:4d} "
            f"sim p50/p95/max = {row.sim_p50_ms}/{row.sim_p95_ms}/{row.sim_max_ms} ms "
            f"wall p50 = {row.wall_p50_ms} ms"
        )
    click.echo(f"chain export: {report.chain_bytes} bytes, store: {report.store_bytes} bytes")
    click.echo(f"wrote {out}")


@main.group()
def demo() -> None:
    """Scripted demonstrations on a fresh simulated world."""


@demo.command("e2e")
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--out", default="demo-out", show_default=True, type=click.Path(file_okay=False))
def demo_e2e(seed: int, out: str) -> None:
    """Checkout, opt in, sell one profile record, print the audit trail.

    Writes chain_export.jsonl and audit_log.jsonl under --out. Reruns with
    the same seed produce byte-identical files.
    """
    world = build_demo(seed=seed)
    shop, market = world.shop, world.market
    alice = world.names["alice"]
    names_by_address = {address: name for name, address in world.names.items()}

    shop.open_session("demo", alice)
    shop.cart_update("demo", "sku-003", 2)
    shop.cart_update("demo", "sku-004", 1)
    receipt = shop.checkout("demo", 1000)
    click.echo(f"checkout: order {receipt.order_id.hex()[:16]}… total {receipt.total} tokens")
    click.echo(f"receipt verifies: {shop.verify_receipt(receipt)}")

    record = ProfileRecord(
        owner=alice,
        category="purchase-history",
        fields={
            "orders": 1,
            "total_spent": receipt.total,
            "last_order_ms": 1000,
            "skus": ",".join(sorted(receipt.body["lines"])),
        },
    )
    listing = shop.opt_in_sharing(alice, record, ["analytics", "personalization"], 15, 2000)
    click.echo(f"opt-in: listed purchase-history at price 15 (tx {listing.txid.hex()[:16]}…)")

    acme = world.enterprises["acme"]
    found = acme.discover("purchase-history", "analytics")
    if not found:
        raise click.ClickException("discovery returned no listings")
    entry = acme.request_data(found[-1], "analytics", 3000)
    market.advance(6500)
    state = entry.state
    click.echo(f"acme retrieval: {state}" + (f" ({entry.failure_reason})" if entry.failure_reason else ""))

    click.echo("")
    click.echo("audit trail for alice:")
    for row in market.audit_query(whom=alice):
        who = names_by_address.get(row.who, row.who.hex()[:12])
        click.echo(
            f"  t={row.when_ms}ms {row.outcome:9s} who={who} purpose={row.purpose} "
            f"category={row.category} means={row.means_stream}/{row.means_txid.hex()[:12]}…"
        )
    rewards = market.rewards_for(alice)
    click.echo(f"rewards for alice: {sum(e.amount for e in rewards)} tokens in {len(rewards)} entries")
    for name in ("alice", "bob", "carol", "acme", "insight", "merchant"):
        click.echo(f"  balance {name:9s} {market.ledger.balance(world.names[name])}")

    os.makedirs(out, exist_ok=True)
    export_path = os.path.join(out, "chain_export.jsonl")
    audit_path = os.path.join(out, "audit_log.jsonl")
    with open(export_path, "wb") as fh:
        fh.write(export_chain(market.chain))
    with open(audit_path, "wb") as fh:
        for entry_row in market.audit_log:
            fh.write(canonical_json_bytes(entry_row.to_record()) + b"\n")
    click.echo(f"wrote {export_path} and {audit_path}")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", default=1, show_default=True, type=int)
def serve(config_path, port, host, seed) -> None:
    """Start the shop HTTP service on a fresh demo world."""
    import uvicorn

    from .api import create_app

    cfg = PlatformConfig.from_file(config_path) if config_path else PlatformConfig()
    world = build_demo(seed=seed, config=cfg)
    app = create_app(world.shop, names=world.names, demo=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
