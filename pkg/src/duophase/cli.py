"""Command-line client for the experiment service.

Every subcommand resolves its config (a file path or a shipped recipe
name), posts one run to the service, writes the returned files under
``--out``, prints the one-line summary, and exits with the run's exit
code: 0 pass, 1 fail (witness included in the outputs), 2 usage error.

By default the service runs in-process, so no server is needed; pass
``--server URL`` to talk to a remote instance, and ``serve`` to start
one.
"""

from __future__ import annotations

import os
import sys

import click
import httpx

_SEED_MAX = 2**64 - 1


# ---------------------------------------------------------------------------
# service clients


def _make_client(server: str | None):
    """An httpx-compatible client: remote when a URL is given, else in-process."""
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _fail_usage(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _resolve_config(client, config: str) -> str:
    """Config text from a file path, or from the service's recipe store."""
    if os.path.exists(config):
        with open(config, "r", encoding="utf-8") as fh:
            return fh.read()
    response = client.get(f"/recipes/{config}")
    if response.status_code == 404:
        _fail_usage(
            f"config {config!r} is neither a readable file nor a known recipe; "
            f"server says: {response.json().get('detail', 'not found')}"
        )
    response.raise_for_status()
    return response.json()["content"]


def _run(operation: str, config: str, out: str, seed, force: bool, server):
    try:
        client = _make_client(server)
        config_text = _resolve_config(client, config)
        payload = {"config": config_text, "force": force}
        if seed is not None:
            payload["seed"] = seed
        response = client.post(f"/run/{operation}", json=payload)
        if response.status_code == 404:
            _fail_usage(response.json().get("detail", f"unknown operation {operation}"))
        response.raise_for_status()
        result = response.json()
    except (httpx.HTTPError, OSError) as exc:
        _fail_usage(f"cannot reach the experiment service: {exc}")

    os.makedirs(out, exist_ok=True)
    for entry in result["files"]:
        path = os.path.join(out, entry["name"])
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(entry["content"])
        click.echo(f"wrote {path}")
    click.echo(result["summary"])
    sys.exit(result["exit_code"])


# ---------------------------------------------------------------------------
# shared options


def run_options(fn):
    decorators = [
        click.option(
            "--config",
            required=True,
            metavar="PATH|RECIPE",
            help="Config file path, or the name of a shipped recipe",
        ),
        click.option(
            "--out",
            default=".",
            show_default=True,
            metavar="DIR",
            help="Directory for the run's output files",
        ),
        click.option(
            "--seed",
            type=click.IntRange(0, _SEED_MAX),
            default=None,
            help="Seed override (default: [sampling] seed from the config, else 0)",
        ),
        click.option(
            "--force",
            is_flag=True,
            help="Skip refusable pre-checks",
        ),
        click.option(
            "--server",
            default=None,
            metavar="URL",
            help="Remote service URL (default: run the service in-process)",
        ),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _op_command(group, cli_name: str, operation: str, help_text: str):
    @group.command(name=cli_name, help=help_text)
    @run_options
    def _cmd(config, out, seed, force, server):
        _run(operation, config, out, seed, force, server)

    return _cmd


# ---------------------------------------------------------------------------
# command tree


@click.group()
@click.version_option(package_name="duophase")
def main():
    """Structure checks and approximation experiments for double-phase densities."""


@main.group()
def check():
    """Verify one structure condition on samples (exit 1 with a witness on failure)."""


_op_command(check, "f1", "check-f1", "Exponent balance between growth rates and dimension.")
_op_command(check, "f2", "check-f2", "Pairwise spatial comparison with distance-power slack.")
_op_command(check, "f3", "check-f3", "Midpoint convexity in the gradient argument.")
_op_command(check, "f4", "check-f4", "Common minimizing point across gradients on a ball.")
_op_command(check, "zsigma", "check-zsigma", "Weight comparison inequality for a 1-d weight.")
_op_command(check, "hprop", "check-hprop", "Localization property via the local convex envelope.")


@main.group()
def witness():
    """Run a counterexample search and emit its full numeric transcript."""


_op_command(witness, "non-uhlenbeck", "witness-non-uhlenbeck",
            "Show the density is not a function of |z| alone.")
_op_command(witness, "non-product", "witness-non-product",
            "Show the threshold excess does not factor as b(x) * t(z).")
_op_command(witness, "bcdfm", "witness-bcdfm",
            "Break a split-exponent sandwich structure on the density.")
_op_command(witness, "bcm", "witness-bcm",
            "Break a reflection comparison bound on a one-sided density.")
_op_command(witness, "hh", "witness-hh",
            "Break a radial derivative bound at moderate gradient size.")


_op_command(main, "mollify", "mollify",
            "Smooth a sampled field by kernel convolution; emit the smoothed field.")
_op_command(main, "energy", "energy",
            "Integrate the density over a sampled field on a region.")
_op_command(main, "converge", "converge",
            "Trace mollified-energy convergence along a shrinking-width sequence.")
_op_command(main, "truncate", "truncate",
            "Radially truncate a field and verify the gradient contraction.")
_op_command(main, "lavrentiev", "lavrentiev",
            "Compare full vs smooth-class discrete minimization across meshes.")


@main.command()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL (default: list the shipped recipes in-process)")
def recipes(server):
    """List the shipped experiment recipes."""
    try:
        client = _make_client(server)
        response = client.get("/recipes")
        response.raise_for_status()
    except (httpx.HTTPError, OSError) as exc:
        _fail_usage(f"cannot reach the experiment service: {exc}")
    for entry in response.json():
        click.echo(f"{entry['name']:24s} {entry['summary']}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8711, show_default=True, type=int)
def serve(host, port):
    """Start the experiment service over HTTP."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
