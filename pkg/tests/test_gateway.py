import time

import pytest
from fastapi.testclient import TestClient

from acai import Config, Platform
from acai.api.app import create_app


@pytest.fixture
def service(tmp_path):
    platform = Platform(Config(data_dir=str(tmp_path / "data"), fsync=False))
    client = TestClient(create_app(platform))
    return platform, client


@pytest.fixture
def admin(service):
    platform, client = service
    return {"X-ACAI-Token": platform.auth.global_admin_token}


@pytest.fixture
def member(service, admin):
    """Headers for a regular member of a fresh project."""
    _, client = service
    project = client.post("/admin/projects", json={"name": "proj"},
                          headers=admin).json()
    user = client.post("/admin/users", json={"name": "alice"},
                       headers={"X-ACAI-Token": project["token"]}).json()
    return {"X-ACAI-Token": user["token"]}


def upload(client, headers, files: dict):
    r = client.post("/sessions", json={"paths": list(files)}, headers=headers)
    assert r.status_code == 200, r.text
    session = r.json()
    for path, data in files.items():
        r = client.put(f"/blobs/{session['tickets'][path]}", content=data,
                       headers=headers)
        assert r.status_code == 200
    r = client.post(f"/sessions/{session['session_id']}/commit",
                    headers=headers)
    assert r.status_code == 200, r.text
    return r.json()["versions"]


class TestAuth:
    def test_missing_token_is_401(self, service):
        _, client = service
        assert client.get("/files").status_code == 401

    def test_bad_token_is_401(self, service):
        _, client = service
        r = client.get("/files", headers={"X-ACAI-Token": "nope"})
        assert r.status_code == 401

    def test_admin_token_file_bootstrap(self, service, tmp_path):
        platform, _ = service
        token_file = tmp_path / "data" / "admin_token"
        assert token_file.read_text().strip() == \
            platform.auth.global_admin_token
        assert (token_file.stat().st_mode & 0o777) == 0o600

    def test_member_cannot_create_projects(self, service, member):
        _, client = service
        r = client.post("/admin/projects", json={"name": "x"}, headers=member)
        assert r.status_code == 403

    def test_member_cannot_create_users(self, service, member):
        _, client = service
        r = client.post("/admin/users", json={"name": "x"}, headers=member)
        assert r.status_code == 403

    def test_duplicate_project_is_409(self, service, admin, member):
        _, client = service
        r = client.post("/admin/projects", json={"name": "proj"},
                        headers=admin)
        assert r.status_code == 409


class TestFiles:
    def test_upload_download_round_trip(self, service, member):
        _, client = service
        versions = upload(client, member, {"/data/a.txt": b"hello"})
        assert versions == [dict(versions[0], path="/data/a.txt", version=1)]
        r = client.get("/files/data/a.txt", headers=member)
        assert r.content == b"hello"

    def test_version_pinned_download(self, service, member):
        _, client = service
        upload(client, member, {"/x": b"one"})
        upload(client, member, {"/x": b"two"})
        assert client.get("/files/x", headers=member).content == b"two"
        r = client.get("/files/x", params={"version": 1}, headers=member)
        assert r.content == b"one"

    def test_list_by_prefix(self, service, member):
        _, client = service
        upload(client, member, {"/data/a": b"1", "/other/b": b"2"})
        r = client.get("/files", params={"prefix": "/data/"}, headers=member)
        assert [f["path"] for f in r.json()["files"]] == ["/data/a"]

    def test_abort_releases_session(self, service, member):
        _, client = service
        r = client.post("/sessions", json={"paths": ["/x"]}, headers=member)
        sid = r.json()["session_id"]
        assert client.post(f"/sessions/{sid}/abort",
                           headers=member).status_code == 200
        assert client.post(f"/sessions/{sid}/commit",
                           headers=member).status_code == 409

    def test_incomplete_commit_is_409(self, service, member):
        _, client = service
        r = client.post("/sessions", json={"paths": ["/x"]}, headers=member)
        sid = r.json()["session_id"]
        assert client.post(f"/sessions/{sid}/commit",
                           headers=member).status_code == 409

    def test_missing_file_is_404(self, service, member):
        _, client = service
        assert client.get("/files/ghost", headers=member).status_code == 404


class TestFileSets:
    def test_create_and_get(self, service, member):
        _, client = service
        upload(client, member, {"/data/a": b"1"})
        r = client.post("/filesets",
                        json={"name": "DS", "specs": ["/data/a"]},
                        headers=member)
        assert r.status_code == 200
        assert r.json()["entries"] == [["/data/a", 1]]
        got = client.get("/filesets/DS", headers=member).json()
        assert got["version"] == 1

    def test_bad_spec_is_422(self, service, member):
        _, client = service
        r = client.post("/filesets",
                        json={"name": "DS", "specs": ["no-slash"]},
                        headers=member)
        assert r.status_code == 422


class TestJobs:
    def _prepare(self, client, member):
        upload(client, member, {"/data/a": b"payload"})
        client.post("/filesets", json={"name": "input", "specs": ["/data/a"]},
                    headers=member)

    def _wait(self, client, member, job_id, timeout=20):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = client.get(f"/jobs/{job_id}", headers=member).json()
            if job["state"] in ("finished", "failed", "killed"):
                return job
            time.sleep(0.05)
        raise AssertionError("job did not finish")

    def test_submit_run_finish(self, service, member):
        _, client = service
        self._prepare(client, member)
        r = client.post("/jobs", json={
            "input_fileset": "input", "output_fileset_name": "out",
            "command": "cp input/data/a output/b", "vcpu": 1.0,
            "mem_mb": 1024}, headers=member)
        assert r.status_code == 200
        job = self._wait(client, member, r.json()["job_id"])
        assert job["state"] == "finished"
        assert job["output_fileset_version"] == 1
        assert client.get("/files/out/b", headers=member).content == b"payload"

    def test_events_stream_replay(self, service, member):
        _, client = service
        self._prepare(client, member)
        r = client.post("/jobs", json={
            "input_fileset": "input", "output_fileset_name": "out",
            "command": "echo hi", "vcpu": 0.5, "mem_mb": 512},
            headers=member)
        job_id = r.json()["job_id"]
        self._wait(client, member, job_id)
        import json as jsonlib
        with client.stream("GET", f"/jobs/{job_id}/events",
                           headers=member) as resp:
            events = [jsonlib.loads(line) for line in resp.iter_lines() if line]
        states = [e["state"] for e in events if e["type"] == "state"]
        assert states == ["queued", "launching", "running", "finished"]
        assert any(e.get("line") == "hi" for e in events)

    def test_kill(self, service, member):
        _, client = service
        self._prepare(client, member)
        r = client.post("/jobs", json={
            "input_fileset": "input", "output_fileset_name": "out",
            "command": "sleep 30", "vcpu": 0.5, "mem_mb": 512},
            headers=member)
        job_id = r.json()["job_id"]
        assert client.post(f"/jobs/{job_id}/kill",
                           headers=member).status_code == 200
        assert self._wait(client, member, job_id)["state"] == "killed"

    def test_off_grid_resources_rejected(self, service, member):
        _, client = service
        self._prepare(client, member)
        r = client.post("/jobs", json={
            "input_fileset": "input", "output_fileset_name": "out",
            "command": "true", "vcpu": 0.3, "mem_mb": 512}, headers=member)
        assert r.status_code == 422


class TestMetadataAndQuery:
    def test_tag_query_round_trip(self, service, member):
        _, client = service
        upload(client, member, {"/a": b"1"})
        client.post("/filesets", json={"name": "DS", "specs": ["/a"]},
                    headers=member)
        r = client.post("/meta/fileset/DS:1", json={"attrs": {
            "precision": {"type": "number", "value": 0.72},
            "model": {"type": "string", "value": "BERT"}}}, headers=member)
        assert r.status_code == 200
        got = client.get("/meta/fileset/DS:1", headers=member).json()
        assert got["attributes"]["precision"] == {"type": "number",
                                                  "value": 0.72}
        r = client.post("/query", json={
            "kind": "fileset",
            "predicates": [{"key": "precision", "op": "gt", "value": 0.5},
                           {"key": "model", "op": "eq", "value": "BERT"}]},
            headers=member)
        assert r.json()["ids"] == ["DS:1"]

    def test_range_over_string_is_422(self, service, member):
        _, client = service
        upload(client, member, {"/a": b"1"})
        client.post("/filesets", json={"name": "DS", "specs": ["/a"]},
                    headers=member)
        r = client.post("/meta/fileset/DS:1", json={"attrs": {
            "note": {"type": "string", "value": "x"}}}, headers=member)
        assert r.status_code == 200
        r = client.post("/query", json={
            "kind": "fileset",
            "predicates": [{"key": "note", "op": "gt", "value": 1}]},
            headers=member)
        assert r.status_code == 422

    def test_unknown_entity_is_404(self, service, member):
        _, client = service
        assert client.get("/meta/job/ghost",
                          headers=member).status_code == 404


class TestProvenance:
    def test_graph_and_trace(self, service, member):
        _, client = service
        upload(client, member, {"/a": b"1", "/b": b"2"})
        client.post("/filesets", json={"name": "A", "specs": ["/a"]},
                    headers=member)
        client.post("/filesets", json={"name": "B", "specs": ["/b"]},
                    headers=member)
        client.post("/filesets", json={"name": "M", "specs": ["/@A", "/@B"]},
                    headers=member)
        graph = client.get("/provenance/graph", headers=member).json()
        assert sorted(map(tuple, graph["nodes"])) == \
            [("A", 1), ("B", 1), ("M", 1)]
        assert len(graph["edges"]) == 2
        assert all(e["kind"] == "fileset_creation" for e in graph["edges"])
        trace = client.get("/provenance/M/1/trace",
                           params={"dir": "backward"}, headers=member).json()
        assert sorted(map(tuple, trace["nodes"])) == [("A", 1), ("B", 1)]
        forward = client.get("/provenance/A/1/trace",
                             params={"dir": "forward"}, headers=member).json()
        assert list(map(tuple, forward["nodes"])) == [("M", 1)]

    def test_bad_direction_is_422(self, service, member):
        _, client = service
        r = client.get("/provenance/A/1/trace", params={"dir": "sideways"},
                       headers=member)
        assert r.status_code == 422


class TestProfiling:
    def test_profile_then_autoprovision(self, service, member):
        _, client = service
        upload(client, member, {"/a": b"1"})
        client.post("/filesets", json={"name": "input", "specs": ["/a"]},
                    headers=member)
        r = client.post("/templates/profile", json={
            "template_name": "noop", "command_template": "true # {1,2}",
            "input_fileset": "input"}, headers=member)
        assert r.status_code == 200
        assert r.json()["status"] == "profiling"
        deadline = time.monotonic() + 60
        while time.monotonic() < deadline:
            status = client.get("/templates/noop", headers=member).json()
            if status["status"] in ("ready", "failed"):
                break
            time.sleep(0.1)
        assert status["status"] == "ready", status
        assert "model" in status
        r = client.post("/templates/noop/autoprovision", json={
            "values": [1], "max_runtime": 3600.0,
            "input_fileset": "input"}, headers=member)
        assert r.status_code == 200
        body = r.json()
        assert body["job_id"]
        assert body["predicted_runtime"] <= 3600.0
        # must match an exhaustive search over the fitted model
        from acai.engine.jobs import ResourceConfig
        from acai.provisioner import (PriceSchedule, RuntimeModel, job_cost,
                                      resource_grid)
        m = status["model"]
        model = RuntimeModel(alpha=m["alpha"], betas=tuple(m["betas"]),
                             features=tuple(m["features"]))
        schedule = PriceSchedule()
        best = min(
            (float(job_cost(c, model.predict([1], c), schedule)),
             c.vcpu, c.mem_mb)
            for c in resource_grid()
            if model.predict([1], c) <= 3600.0)
        assert (body["vcpu"], body["mem_mb"]) == (best[1], best[2])

    def test_unknown_template_is_404(self, service, member):
        _, client = service
        assert client.get("/templates/ghost",
                          headers=member).status_code == 404

    def test_profile_requires_existing_input(self, service, member):
        _, client = service
        r = client.post("/templates/profile", json={
            "template_name": "t", "command_template": "true",
            "input_fileset": "ghost"}, headers=member)
        assert r.status_code == 404


class TestProjectIsolation:
    def test_files_jobs_meta_invisible_across_projects(self, service, admin):
        _, client = service
        headers = []
        for name in ("p1", "p2"):
            proj = client.post("/admin/projects", json={"name": name},
                               headers=admin).json()
            user = client.post("/admin/users", json={"name": "u"},
                               headers={"X-ACAI-Token": proj["token"]}).json()
            headers.append({"X-ACAI-Token": user["token"]})
        h1, h2 = headers
        upload(client, h1, {"/secret": b"p1-only"})
        client.post("/filesets", json={"name": "input", "specs": ["/secret"]},
                    headers=h1)
        job_id = client.post("/jobs", json={
            "input_fileset": "input", "output_fileset_name": "out",
            "command": "true", "vcpu": 0.5, "mem_mb": 512},
            headers=h1).json()["job_id"]
        assert client.get("/files/secret", headers=h2).status_code == 404
        assert client.get("/files", headers=h2).json()["files"] == []
        assert client.get("/filesets/input", headers=h2).status_code == 404
        assert client.get(f"/jobs/{job_id}", headers=h2).status_code == 404
        assert client.post(f"/jobs/{job_id}/kill",
                           headers=h2).status_code == 404
        assert client.get("/jobs", headers=h2).json() == []
        assert client.get("/provenance/graph", headers=h2).json() == \
            {"nodes": [], "edges": []}
