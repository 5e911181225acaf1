import pytest

from acai import Config, Platform


@pytest.fixture
def platform(tmp_path):
    return Platform(Config(data_dir=str(tmp_path / "data"), fsync=False))


@pytest.fixture
def project(platform):
    return "proj"


@pytest.fixture
def user():
    return "alice"


def upload_files(platform, project, user, files: dict):
    """Upload {path: bytes} in one session; returns the FileVersion list."""
    session = platform.store.start_session(project, user, list(files))
    for path, data in files.items():
        platform.store.store_blob(session.entries[path].ticket, data)
    return platform.store.commit_session(session.session_id)


@pytest.fixture
def uploader(platform, project, user):
    def _upload(files):
        return upload_files(platform, project, user, files)
    return _upload
