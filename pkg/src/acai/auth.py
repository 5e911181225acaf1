"""Token-based access control: projects, users, roles.

Every request carries an opaque random token that maps to exactly one
(user, project) principal.  A global admin creates projects; each project
admin creates member users.
"""

import secrets
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

from .errors import ConflictError, ForbiddenError, UnauthorizedError
from .journal import Journal

MEMBER = "member"
PROJECT_ADMIN = "project_admin"
GLOBAL_ADMIN = "global_admin"

GLOBAL_PROJECT = "_global"


@dataclass(frozen=True)
class Principal:
    user_id: str
    project: str
    token: str
    role: str


def _new_token() -> str:
    return secrets.token_hex(16)  # 128 bits


class AuthStore:
    def __init__(self, root, fsync: bool = True):
        self.root = Path(root)
        self._journal = Journal(self.root / "principals.jsonl", fsync=fsync)
        self._lock = threading.RLock()
        self._by_token: Dict[str, Principal] = {}
        self._projects: Dict[str, Principal] = {}  # project -> admin principal
        for rec in self._journal.replay():
            self._index(Principal(rec["user_id"], rec["project"],
                                  rec["token"], rec["role"]))
        if not any(p.role == GLOBAL_ADMIN for p in self._by_token.values()):
            admin = Principal("admin", GLOBAL_PROJECT, _new_token(), GLOBAL_ADMIN)
            self._persist(admin)
            # written to a file so operators can bootstrap the first client
            token_file = self.root / "admin_token"
            token_file.write_text(admin.token + "\n")
            token_file.chmod(0o600)

    def _index(self, principal: Principal) -> None:
        self._by_token[principal.token] = principal
        if principal.role == PROJECT_ADMIN:
            self._projects[principal.project] = principal

    def _persist(self, principal: Principal) -> None:
        self._journal.append({
            "user_id": principal.user_id, "project": principal.project,
            "token": principal.token, "role": principal.role,
        })
        self._index(principal)

    @property
    def global_admin_token(self) -> str:
        with self._lock:
            for p in self._by_token.values():
                if p.role == GLOBAL_ADMIN:
                    return p.token
        raise RuntimeError("no global admin")

    def authenticate(self, token: Optional[str]) -> Principal:
        with self._lock:
            if not token or token not in self._by_token:
                raise UnauthorizedError("invalid or missing token")
            return self._by_token[token]

    def create_project(self, caller: Principal, name: str) -> Principal:
        """Create a project and return its admin principal."""
        if caller.role != GLOBAL_ADMIN:
            raise ForbiddenError("only the global admin can create projects")
        with self._lock:
            if name in self._projects or name == GLOBAL_PROJECT:
                raise ConflictError(f"project already exists: {name}")
            admin = Principal(f"{name}-admin", name, _new_token(), PROJECT_ADMIN)
            self._persist(admin)
            return admin

    def create_user(self, caller: Principal, name: str) -> Principal:
        if caller.role != PROJECT_ADMIN:
            raise ForbiddenError("only a project admin can create users")
        with self._lock:
            if any(p.project == caller.project and p.user_id == name
                   for p in self._by_token.values()):
                raise ConflictError(f"user already exists: {name}")
            user = Principal(name, caller.project, _new_token(), MEMBER)
            self._persist(user)
            return user
