"""Pydantic request/response models for the HTTP API."""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class StartSessionRequest(BaseModel):
    paths: List[str]


class StartSessionResponse(BaseModel):
    session_id: str
    tickets: Dict[str, str]  # path -> opaque write ticket


class FileVersionOut(BaseModel):
    path: str
    version: int
    size: int
    created_at: float
    creator: str


class CommitResponse(BaseModel):
    versions: List[FileVersionOut]


class CreateFileSetRequest(BaseModel):
    name: str
    specs: List[str]


class FileSetOut(BaseModel):
    name: str
    version: int
    entries: List[Tuple[str, int]]
    created_at: float
    creator: str
    source_specs: List[str] = []


class SubmitJobRequest(BaseModel):
    input_fileset: str
    output_fileset_name: str
    command: str
    vcpu: float
    mem_mb: int
    code: List[str] = []
    job_id: Optional[str] = None


class JobOut(BaseModel):
    job_id: str
    user: str
    input_fileset: str
    input_fileset_version: int
    output_fileset_name: str
    output_fileset_version: Optional[int] = None
    command: str
    vcpu: float
    mem_mb: int
    state: str
    submitted_at: float
    started_at: Optional[float] = None
    ended_at: Optional[float] = None
    runtime: Optional[float] = None
    cost: Optional[float] = None
    error: Optional[str] = None


# Metadata values travel as tagged (type, value) pairs.
class TaggedValue(BaseModel):
    type: str  # "string" | "number" | "null"
    value: Any = None


def tag_value(value) -> TaggedValue:
    if value is None:
        return TaggedValue(type="null")
    if isinstance(value, bool):
        return TaggedValue(type="string", value=str(value))
    if isinstance(value, (int, float)):
        return TaggedValue(type="number", value=value)
    return TaggedValue(type="string", value=str(value))


def untag_value(tagged: TaggedValue):
    if tagged.type == "null":
        return None
    if tagged.type == "number":
        return float(tagged.value)
    return str(tagged.value)


class SetAttrsRequest(BaseModel):
    attrs: Dict[str, TaggedValue]


class MetaRecordOut(BaseModel):
    kind: str
    entity_id: str
    attributes: Dict[str, TaggedValue]


class PredicateIn(BaseModel):
    key: str
    op: str  # eq | gt | ge | lt | le | between
    value: Any


class QueryRequest(BaseModel):
    kind: str
    predicates: List[PredicateIn] = []
    aggregate: Optional[Tuple[str, str]] = None
    sort: Optional[Tuple[str, bool]] = None
    limit: Optional[int] = None


class QueryResponse(BaseModel):
    ids: List[str]


class GraphEdgeOut(BaseModel):
    action_id: str
    kind: str
    src: Tuple[str, int] = Field(alias="from")
    dst: Tuple[str, int] = Field(alias="to")

    model_config = {"populate_by_name": True}


class GraphOut(BaseModel):
    nodes: List[Tuple[str, int]]
    edges: List[GraphEdgeOut]


class TraceOut(BaseModel):
    neighbors: List[GraphEdgeOut]
    nodes: List[Tuple[str, int]]


class ProfileRequest(BaseModel):
    template_name: str
    command_template: str
    input_fileset: str
    code: List[str] = []


class AutoprovisionRequest(BaseModel):
    values: List[int]
    max_cost: Optional[float] = None
    max_runtime: Optional[float] = None
    input_fileset: str
    output_fileset_name: Optional[str] = None
    code: List[str] = []


class AutoprovisionResponse(BaseModel):
    vcpu: float
    mem_mb: int
    predicted_runtime: float
    predicted_cost: float
    job_id: Optional[str] = None


class CreateProjectRequest(BaseModel):
    name: str


class CreateUserRequest(BaseModel):
    name: str


class PrincipalOut(BaseModel):
    user_id: str
    project: str
    token: str
    role: str
