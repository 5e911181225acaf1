import random
import threading

import pytest

from acai.errors import (
    ConflictError,
    IncompleteSessionError,
    NotFoundError,
    StaleTicketError,
    ValidationError,
)
from acai.store import LakeStore

from conftest import upload_files

P, U = "proj", "alice"


@pytest.fixture
def store(tmp_path):
    return LakeStore(tmp_path / "lake", fsync=False)


def _upload(store, files):
    session = store.start_session(P, U, list(files))
    for path, data in files.items():
        store.store_blob(session.entries[path].ticket, data)
    return store.commit_session(session.session_id)


class TestSessions:
    def test_single_file_session(self, store):
        session = store.start_session(P, U, ["/data/train.json"])
        assert session.state == "pending"
        assert len(session.entries) == 1
        assert session.entries["/data/train.json"].blob_id >= 1

    def test_duplicate_path_rejected(self, store):
        with pytest.raises(ValidationError):
            store.start_session(P, U, ["/a", "/a"])

    def test_invalid_path_rejected(self, store):
        with pytest.raises(ValidationError):
            store.start_session(P, U, ["not-absolute"])

    def test_concurrent_sessions_get_distinct_blob_ids(self, store):
        s1 = store.start_session(P, U, ["/x"])
        s2 = store.start_session(P, U, ["/x"])
        assert s1.entries["/x"].blob_id != s2.entries["/x"].blob_id
        assert s1.state == s2.state == "pending"

    def test_empty_blob_allowed(self, store):
        session = store.start_session(P, U, ["/empty"])
        assert store.store_blob(session.entries["/empty"].ticket, b"") == 0
        [fv] = store.commit_session(session.session_id)
        assert fv.size == 0

    def test_restore_overwrites_while_pending(self, store):
        session = store.start_session(P, U, ["/x"])
        ticket = session.entries["/x"].ticket
        store.store_blob(ticket, b"first")
        store.store_blob(ticket, b"second")
        store.commit_session(session.session_id)
        assert store.download(P, "/x") == b"second"

    def test_store_on_aborted_session(self, store):
        session = store.start_session(P, U, ["/x"])
        ticket = session.entries["/x"].ticket
        store.abort_session(session.session_id)
        with pytest.raises(StaleTicketError):
            store.store_blob(ticket, b"data")

    def test_store_on_committed_session(self, store):
        session = store.start_session(P, U, ["/x"])
        ticket = session.entries["/x"].ticket
        store.store_blob(ticket, b"data")
        store.commit_session(session.session_id)
        with pytest.raises(StaleTicketError):
            store.store_blob(ticket, b"again")


class TestCommit:
    def test_first_version_is_one(self, store):
        [fv] = _upload(store, {"/x": b"a"})
        assert (fv.path, fv.version) == ("/x", 1)

    def test_sequential_commits(self, store):
        for _ in range(3):
            _upload(store, {"/x": b"a"})
        a = store.start_session(P, U, ["/x"])
        b = store.start_session(P, U, ["/x"])
        store.store_blob(a.entries["/x"].ticket, b"A")
        store.store_blob(b.entries["/x"].ticket, b"B")
        [fa] = store.commit_session(a.session_id)
        [fb] = store.commit_session(b.session_id)
        assert (fa.version, fb.version) == (4, 5)

    def test_abort_leaves_no_gap(self, store):
        for _ in range(3):
            _upload(store, {"/x": b"a"})
        a = store.start_session(P, U, ["/x"])
        b = store.start_session(P, U, ["/x"])
        store.store_blob(b.entries["/x"].ticket, b"B")
        store.abort_session(a.session_id)
        [fb] = store.commit_session(b.session_id)
        assert fb.version == 4

    def test_incomplete_commit_rejected(self, store):
        session = store.start_session(P, U, ["/x", "/y"])
        store.store_blob(session.entries["/x"].ticket, b"a")
        with pytest.raises(IncompleteSessionError):
            store.commit_session(session.session_id)
        assert store.get_session(session.session_id).state == "pending"

    def test_unknown_session(self, store):
        with pytest.raises(NotFoundError):
            store.commit_session("nope")

    def test_commit_twice_rejected(self, store):
        session = store.start_session(P, U, ["/x"])
        store.store_blob(session.entries["/x"].ticket, b"a")
        store.commit_session(session.session_id)
        with pytest.raises(ConflictError):
            store.commit_session(session.session_id)


class TestAbort:
    def test_abort_fresh_session(self, store):
        session = store.start_session(P, U, ["/x"])
        store.abort_session(session.session_id)
        assert store.get_session(session.session_id).state == "aborted"
        assert not (store.blob_dir / str(session.entries["/x"].blob_id)).exists()

    def test_abort_after_partial_stores(self, store):
        session = store.start_session(P, U, ["/x", "/y"])
        store.store_blob(session.entries["/x"].ticket, b"a")
        store.abort_session(session.session_id)
        for entry in session.entries.values():
            assert not (store.blob_dir / str(entry.blob_id)).exists()

    def test_abort_committed_rejected(self, store):
        session = store.start_session(P, U, ["/x"])
        store.store_blob(session.entries["/x"].ticket, b"a")
        store.commit_session(session.session_id)
        with pytest.raises(ConflictError):
            store.abort_session(session.session_id)

    def test_abort_after_restart(self, tmp_path):
        store = LakeStore(tmp_path / "lake", fsync=False)
        session = store.start_session(P, U, ["/x", "/y"])
        store.store_blob(session.entries["/x"].ticket, b"a")
        # simulated crash: reopen from the journal
        reopened = LakeStore(tmp_path / "lake", fsync=False)
        recovered = reopened.get_session(session.session_id)
        assert recovered.state == "pending"
        assert recovered.entries["/x"].stored
        assert not recovered.entries["/y"].stored
        reopened.abort_session(session.session_id)
        for entry in recovered.entries.values():
            assert not (reopened.blob_dir / str(entry.blob_id)).exists()

    def test_continue_after_restart(self, tmp_path):
        store = LakeStore(tmp_path / "lake", fsync=False)
        session = store.start_session(P, U, ["/x"])
        reopened = LakeStore(tmp_path / "lake", fsync=False)
        ticket = reopened.get_session(session.session_id).entries["/x"].ticket
        reopened.store_blob(ticket, b"late")
        [fv] = reopened.commit_session(session.session_id)
        assert fv.version == 1
        assert reopened.download(P, "/x") == b"late"


class TestReads:
    def test_download_round_trip(self, store):
        _upload(store, {"/a/b.bin": bytes(range(256))})
        assert store.download(P, "/a/b.bin") == bytes(range(256))

    def test_immutability_across_versions(self, store):
        _upload(store, {"/x": b"v1"})
        _upload(store, {"/x": b"v2"})
        assert store.download(P, "/x", 1) == b"v1"
        assert store.download(P, "/x") == b"v2"

    def test_list_after_uploads(self, store):
        _upload(store, {"/a/x": b"1", "/b/y": b"2"})
        assert len(store.list(P, "/")) == 2
        assert [fv.path for fv in store.list(P, "/a/")] == ["/a/x"]

    def test_list_empty_prefix(self, store):
        assert store.list(P, "/nothing/") == []

    def test_not_found(self, store):
        with pytest.raises(NotFoundError):
            store.download(P, "/missing")
        _upload(store, {"/x": b"a"})
        with pytest.raises(NotFoundError):
            store.stat(P, "/x", 5)

    def test_project_isolation(self, store):
        _upload(store, {"/x": b"a"})
        with pytest.raises(NotFoundError):
            store.download("other", "/x")


class TestResolve:
    def test_latest_by_default(self, store):
        for data in (b"1", b"2", b"3"):
            _upload(store, {"/x": data})
        assert store.resolve(P, "/x") == [("/x", 3)]

    def test_exact_version(self, store):
        _upload(store, {"/data/train.json": b"1"})
        _upload(store, {"/data/train.json": b"2"})
        assert store.resolve(P, "/data/train.json:2") == [("/data/train.json", 2)]

    def test_fileset_pinned_version(self, store):
        class FS:
            entries = [("/data/train.json", 1), ("/data/val.json", 2)]

        _upload(store, {"/data/train.json": b"1"})
        result = store.resolve(P, "/data/train.json@HotpotQA:1",
                               lambda n, v: FS())
        assert result == [("/data/train.json", 1)]

    def test_prefix_in_fileset(self, store):
        class FS:
            entries = [("/data/a", 1), ("/data/b", 2), ("/other/c", 1)]

        result = store.resolve(P, "/data/@HotpotQA:1", lambda n, v: FS())
        assert result == [("/data/a", 1), ("/data/b", 2)]

    def test_path_not_in_fileset(self, store):
        class FS:
            entries = [("/data/a", 1)]

        with pytest.raises(NotFoundError):
            store.resolve(P, "/missing@FS", lambda n, v: FS())

    def test_resolution_is_deterministic(self, store):
        _upload(store, {"/x": b"a"})
        first = store.resolve(P, "/x")
        assert all(store.resolve(P, "/x") == first for _ in range(5))


class TestConcurrency:
    def test_interleaved_sessions_gap_free(self, tmp_path):
        store = LakeStore(tmp_path / "lake", fsync=False)
        rng = random.Random(7)
        paths = [f"/f{i}" for i in range(5)]
        errors = []

        def writer(seed):
            local = random.Random(seed)
            for _ in range(10):
                chosen = local.sample(paths, local.randint(1, 3))
                session = store.start_session(P, U, chosen)
                for path in chosen:
                    store.store_blob(session.entries[path].ticket,
                                     path.encode())
                if local.random() < 0.25:
                    store.abort_session(session.session_id)
                else:
                    try:
                        store.commit_session(session.session_id)
                    except Exception as exc:  # pragma: no cover
                        errors.append(exc)

        threads = [threading.Thread(target=writer, args=(rng.random(),))
                   for _ in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        # per-path versions are 1..n with no gaps or duplicates
        for path in paths:
            try:
                latest = store.stat(P, path).version
            except NotFoundError:
                continue
            versions = [store.stat(P, path, v).version
                        for v in range(1, latest + 1)]
            assert versions == list(range(1, latest + 1))


def test_commit_registers_metadata(platform, project, user):
    upload_files(platform, project, user, {"/x": b"a"})
    record = platform.metastore.get(project, "file", "/x:1")
    assert record.attributes["creator"] == user
