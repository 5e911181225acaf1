"""`acai` command-line client (and the `acai serve` service entry point).

All data-plane verbs are thin wrappers over the HTTP API; the server
address and token come from --server/--token or the ACAI_SERVER and
ACAI_TOKEN environment variables.
"""

import json
import os
import sys
import time
from pathlib import Path

import click
import httpx


def _client(ctx) -> httpx.Client:
    server = ctx.obj["server"] or os.environ.get("ACAI_SERVER")
    token = ctx.obj["token"] or os.environ.get("ACAI_TOKEN")
    if not server:
        raise click.UsageError("no server: pass --server or set ACAI_SERVER")
    headers = {"X-ACAI-Token": token} if token else {}
    return httpx.Client(base_url=server, headers=headers, timeout=300.0)


def _check(resp: httpx.Response) -> dict:
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        click.echo(f"error ({resp.status_code}): {detail}", err=True)
        sys.exit(1)
    if resp.headers.get("content-type", "").startswith("application/json"):
        return resp.json()
    return {}


def _echo_json(data) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


@click.group()
@click.option("--server", default=None, help="gateway base URL")
@click.option("--token", default=None, help="access token")
@click.pass_context
def main(ctx, server, token):
    ctx.ensure_object(dict)
    ctx.obj["server"] = server
    ctx.obj["token"] = token


@main.command()
@click.option("--config", "config_path", default=None,
              help="YAML config: data_dir, quota_k, host, port, prices")
def serve(config_path):
    """Run the platform service."""
    import uvicorn

    from .api.app import create_app
    from .config import Config
    from .platform import Platform

    config = Config.load(config_path) if config_path else Config()
    platform = Platform(config)
    click.echo(f"data dir: {config.data_dir}")
    click.echo(f"admin token file: {Path(config.data_dir) / 'admin_token'}")
    uvicorn.run(create_app(platform), host=config.host, port=config.port)


# -- admin ----------------------------------------------------------------

@main.group()
def admin():
    """Project and user administration."""


@admin.command("create-project")
@click.argument("name")
@click.pass_context
def create_project(ctx, name):
    with _client(ctx) as c:
        _echo_json(_check(c.post("/admin/projects", json={"name": name})))


@admin.command("create-user")
@click.argument("name")
@click.pass_context
def create_user(ctx, name):
    with _client(ctx) as c:
        _echo_json(_check(c.post("/admin/users", json={"name": name})))


# -- files ----------------------------------------------------------------

@main.command()
@click.argument("files", nargs=-1, required=True)
@click.option("--dest", default="/", help="lake path prefix for uploads")
@click.pass_context
def upload(ctx, files, dest):
    """Upload local files. Each FILE is LOCAL or LOCAL=REMOTE_PATH."""
    pairs = []
    for item in files:
        if "=" in item:
            local, remote = item.split("=", 1)
        else:
            local = item
            remote = dest.rstrip("/") + "/" + Path(item).name
        pairs.append((Path(local), remote))
    with _client(ctx) as c:
        resp = _check(c.post("/sessions",
                             json={"paths": [r for _, r in pairs]}))
        for local, remote in pairs:
            _check(c.put(f"/blobs/{resp['tickets'][remote]}",
                         content=local.read_bytes()))
        out = _check(c.post(f"/sessions/{resp['session_id']}/commit"))
    for v in out["versions"]:
        click.echo(f"{v['path']}:{v['version']}")


@main.command()
@click.argument("spec")
@click.argument("local", type=click.Path())
@click.pass_context
def download(ctx, spec, local):
    """Download one file. SPEC is path[:version] or path@fileset[:version]."""
    with _client(ctx) as c:
        if "@" in spec:
            path, _, fsref = spec.partition("@")
            name, _, fsver = fsref.partition(":")
            params = {"version": fsver} if fsver else {}
            fs = _check(c.get(f"/filesets/{name}", params=params))
            version = dict((p, v) for p, v in fs["entries"]).get(path)
            if version is None:
                click.echo(f"{path} not in fileset {fsref}", err=True)
                sys.exit(1)
        elif ":" in spec:
            path, _, ver = spec.rpartition(":")
            version = int(ver)
        else:
            path, version = spec, None
        params = {"version": version} if version else {}
        resp = c.get(f"/files{path}", params=params)
        if resp.status_code >= 400:
            _check(resp)
        Path(local).write_bytes(resp.content)
    click.echo(f"wrote {local}")


@main.command()
@click.argument("prefix", default="/")
@click.pass_context
def ls(ctx, prefix):
    """List latest-version files under a prefix."""
    with _client(ctx) as c:
        out = _check(c.get("/files", params={"prefix": prefix}))
    for f in out["files"]:
        click.echo(f"{f['path']}:{f['version']}\t{f['size']}\t{f['creator']}")


# -- filesets -------------------------------------------------------------

@main.group()
def fileset():
    """Create and inspect filesets."""


@fileset.command("create")
@click.argument("name")
@click.argument("specs", nargs=-1, required=True)
@click.pass_context
def fileset_create(ctx, name, specs):
    with _client(ctx) as c:
        _echo_json(_check(c.post("/filesets",
                                 json={"name": name, "specs": list(specs)})))


@fileset.command("get")
@click.argument("name")
@click.option("--version", type=int, default=None)
@click.pass_context
def fileset_get(ctx, name, version):
    params = {"version": version} if version else {}
    with _client(ctx) as c:
        _echo_json(_check(c.get(f"/filesets/{name}", params=params)))


# -- jobs -----------------------------------------------------------------

@main.group()
def job():
    """Submit and manage jobs."""


@job.command("submit")
@click.option("--input-fileset", required=True)
@click.option("--output", "output_fileset_name", required=True)
@click.option("--command", required=True)
@click.option("--vcpu", type=float, default=1.0)
@click.option("--mem-mb", type=int, default=1024)
@click.option("--code", multiple=True, help="path spec for program files")
@click.option("--wait", is_flag=True, help="block until the job is terminal")
@click.pass_context
def job_submit(ctx, input_fileset, output_fileset_name, command, vcpu,
               mem_mb, code, wait):
    with _client(ctx) as c:
        out = _check(c.post("/jobs", json={
            "input_fileset": input_fileset,
            "output_fileset_name": output_fileset_name,
            "command": command, "vcpu": vcpu, "mem_mb": mem_mb,
            "code": list(code)}))
        job_id = out["job_id"]
        click.echo(job_id)
        if wait:
            while True:
                state = _check(c.get(f"/jobs/{job_id}"))["state"]
                if state in ("finished", "failed", "killed"):
                    click.echo(state)
                    break
                time.sleep(0.2)


@job.command("get")
@click.argument("job_id")
@click.pass_context
def job_get(ctx, job_id):
    with _client(ctx) as c:
        _echo_json(_check(c.get(f"/jobs/{job_id}")))


@job.command("list")
@click.pass_context
def job_list(ctx):
    with _client(ctx) as c:
        for j in _check(c.get("/jobs")):
            click.echo(f"{j['job_id']}\t{j['state']}\t{j['command'][:50]}")


@job.command("kill")
@click.argument("job_id")
@click.pass_context
def job_kill(ctx, job_id):
    with _client(ctx) as c:
        click.echo(_check(c.post(f"/jobs/{job_id}/kill"))["notice"])


@job.command("watch")
@click.argument("job_id")
@click.pass_context
def job_watch(ctx, job_id):
    """Stream state/log events (replay then live) until the job ends."""
    with _client(ctx) as c:
        with c.stream("GET", f"/jobs/{job_id}/events") as resp:
            for line in resp.iter_lines():
                if line:
                    click.echo(line)


# -- metadata -------------------------------------------------------------

_OPS = [(">=", "ge"), ("<=", "le"), (">", "gt"), ("<", "lt"), ("=", "eq")]


def _parse_predicate(text):
    for symbol, op in _OPS:
        if symbol in text:
            key, _, raw = text.partition(symbol)
            try:
                value = float(raw)
            except ValueError:
                value = raw
            return {"key": key, "op": op, "value": value}
    raise click.UsageError(f"bad predicate: {text!r} (use key=v, key>v, ...)")


@main.command()
@click.option("--kind", type=click.Choice(["file", "fileset", "job"]),
              required=True)
@click.option("--where", multiple=True, help="predicate, e.g. 'precision>0.5'")
@click.option("--max", "max_key", default=None, help="return argmax of key")
@click.option("--min", "min_key", default=None, help="return argmin of key")
@click.option("--limit", type=int, default=None)
@click.pass_context
def search(ctx, kind, where, max_key, min_key, limit):
    """Query entities by metadata predicates."""
    body = {"kind": kind,
            "predicates": [_parse_predicate(w) for w in where],
            "limit": limit}
    if max_key:
        body["aggregate"] = ["max", max_key]
    elif min_key:
        body["aggregate"] = ["min", min_key]
    with _client(ctx) as c:
        for entity_id in _check(c.post("/query", json=body))["ids"]:
            click.echo(entity_id)


@main.command()
@click.argument("kind", type=click.Choice(["file", "fileset", "job"]))
@click.argument("entity_id")
@click.argument("pairs", nargs=-1, required=True)
@click.option("--num", is_flag=True, help="store values as numbers")
@click.pass_context
def tag(ctx, kind, entity_id, pairs, num):
    """Set KEY=VALUE metadata on an entity."""
    attrs = {}
    for pair in pairs:
        key, _, value = pair.partition("=")
        attrs[key] = {"type": "number", "value": float(value)} if num \
            else {"type": "string", "value": value}
    with _client(ctx) as c:
        _echo_json(_check(c.post(f"/meta/{kind}/{entity_id}",
                                 json={"attrs": attrs})))


# -- provenance -----------------------------------------------------------

@main.group()
def provenance():
    """Inspect the provenance graph."""


@provenance.command("graph")
@click.pass_context
def provenance_graph(ctx):
    with _client(ctx) as c:
        _echo_json(_check(c.get("/provenance/graph")))


@provenance.command("trace")
@click.argument("name")
@click.argument("version", type=int)
@click.option("--dir", "direction", type=click.Choice(["forward", "backward"]),
              default="backward")
@click.pass_context
def provenance_trace(ctx, name, version, direction):
    with _client(ctx) as c:
        _echo_json(_check(c.get(f"/provenance/{name}/{version}/trace",
                                params={"dir": direction})))


# -- profiling / auto-provisioning ---------------------------------------

@main.command()
@click.option("--template_name", required=True)
@click.option("--command_template", required=True)
@click.option("--input-fileset", required=True)
@click.option("--code", multiple=True)
@click.option("--wait/--no-wait", default=True)
@click.pass_context
def profile(ctx, template_name, command_template, input_fileset, code, wait):
    """Launch the profiling grid and fit a runtime model."""
    with _client(ctx) as c:
        _check(c.post("/templates/profile", json={
            "template_name": template_name,
            "command_template": command_template,
            "input_fileset": input_fileset, "code": list(code)}))
        click.echo("profiling started")
        if wait:
            while True:
                status = _check(c.get(f"/templates/{template_name}"))
                if status["status"] != "profiling":
                    _echo_json(status)
                    break
                time.sleep(0.3)


@main.command()
@click.option("--template_name", required=True)
@click.option("--values", required=True,
              help="comma-separated template values, e.g. '2,1024'")
@click.option("--max-cost", type=float, default=None)
@click.option("--max-runtime", type=float, default=None)
@click.option("--input-fileset", required=True)
@click.option("--output", "output_fileset_name", default=None)
@click.option("--code", multiple=True)
@click.pass_context
def autoprovision(ctx, template_name, values, max_cost, max_runtime,
                  input_fileset, output_fileset_name, code):
    """Choose the optimal resource config and submit the job."""
    with _client(ctx) as c:
        _echo_json(_check(c.post(f"/templates/{template_name}/autoprovision",
                                 json={
                                     "values": [int(v) for v in
                                                values.split(",") if v],
                                     "max_cost": max_cost,
                                     "max_runtime": max_runtime,
                                     "input_fileset": input_fileset,
                                     "output_fileset_name": output_fileset_name,
                                     "code": list(code)})))


if __name__ == "__main__":
    main()
