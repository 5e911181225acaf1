"""HTTP gateway: authentication, routing, and the platform's public API.

Every endpoint is scoped to the project of the authenticated principal;
the token travels in the X-ACAI-Token header.
"""

import json

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from .. import errors
from ..auth import Principal
from ..metastore import Predicate
from ..metastore import Query as MetaQuery
from ..platform import Platform
from ..provisioner import JobSkeleton
from . import schemas as s

_STATUS = {
    errors.ValidationError: 422,
    errors.QueryError: 422,
    errors.FitError: 422,
    errors.NotFoundError: 404,
    errors.ConflictError: 409,
    errors.StaleTicketError: 409,
    errors.IncompleteSessionError: 409,
    errors.EmptyFileSetError: 422,
    errors.InfeasibleError: 409,
    errors.ProfilingError: 409,
    errors.UnauthorizedError: 401,
    errors.ForbiddenError: 403,
}


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="acai", version="0.1.0")

    @app.exception_handler(errors.AcaiError)
    async def acai_error_handler(request: Request, exc: errors.AcaiError):
        status = 500
        for cls, code in _STATUS.items():
            if isinstance(exc, cls):
                status = code
                break
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__,
                                     "detail": str(exc)})

    def principal(x_acai_token: str | None = Header(default=None)) -> Principal:
        return platform.auth.authenticate(x_acai_token)

    def _fileset_out(fs) -> s.FileSetOut:
        return s.FileSetOut(name=fs.name, version=fs.version,
                            entries=list(fs.entries), created_at=fs.created_at,
                            creator=fs.creator,
                            source_specs=list(fs.source_specs))

    def _job_out(job) -> s.JobOut:
        return s.JobOut(job_id=job.job_id, user=job.user,
                        input_fileset=job.input_fileset,
                        input_fileset_version=job.input_fileset_version,
                        output_fileset_name=job.output_fileset_name,
                        output_fileset_version=job.output_fileset_version,
                        command=job.command, vcpu=job.resources.vcpu,
                        mem_mb=job.resources.mem_mb, state=job.state,
                        submitted_at=job.submitted_at,
                        started_at=job.started_at, ended_at=job.ended_at,
                        runtime=job.runtime, cost=job.cost, error=job.error)

    # -- lake store -------------------------------------------------------

    @app.post("/sessions", response_model=s.StartSessionResponse)
    def start_session(req: s.StartSessionRequest, p: Principal = Depends(principal)):
        session = platform.store.start_session(p.project, p.user_id, req.paths)
        return s.StartSessionResponse(
            session_id=session.session_id,
            tickets={e.path: e.ticket for e in session.entries.values()})

    @app.put("/blobs/{ticket}")
    async def store_blob(ticket: str, request: Request,
                         p: Principal = Depends(principal)):
        data = await request.body()
        size = platform.store.store_blob(ticket, data)
        return {"size": size}

    @app.post("/sessions/{session_id}/commit", response_model=s.CommitResponse)
    def commit_session(session_id: str, p: Principal = Depends(principal)):
        versions = platform.store.commit_session(session_id)
        return s.CommitResponse(versions=[
            s.FileVersionOut(path=v.path, version=v.version, size=v.size,
                             created_at=v.created_at, creator=v.creator)
            for v in versions])

    @app.post("/sessions/{session_id}/abort")
    def abort_session(session_id: str, p: Principal = Depends(principal)):
        platform.store.abort_session(session_id)
        return {"status": "aborted"}

    @app.get("/files")
    def list_files(prefix: str = "/", p: Principal = Depends(principal)):
        entries = platform.store.list(p.project, prefix)
        return {"files": [
            s.FileVersionOut(path=v.path, version=v.version, size=v.size,
                             created_at=v.created_at, creator=v.creator)
            for v in entries]}

    @app.get("/files/{path:path}")
    def download_file(path: str, version: int | None = Query(default=None),
                      p: Principal = Depends(principal)):
        data = platform.store.download(p.project, "/" + path, version)
        return Response(content=data, media_type="application/octet-stream")

    # -- filesets ---------------------------------------------------------

    @app.post("/filesets", response_model=s.FileSetOut)
    def create_fileset(req: s.CreateFileSetRequest,
                       p: Principal = Depends(principal)):
        fs = platform.filesets.create(p.project, p.user_id, req.name, req.specs)
        return _fileset_out(fs)

    @app.get("/filesets/{name}", response_model=s.FileSetOut)
    def get_fileset(name: str, version: int | None = Query(default=None),
                    p: Principal = Depends(principal)):
        return _fileset_out(platform.filesets.get(p.project, name, version))

    # -- jobs -------------------------------------------------------------

    @app.post("/jobs")
    def submit_job(req: s.SubmitJobRequest, p: Principal = Depends(principal)):
        job_id = platform.engine.submit(
            project=p.project, user=p.user_id,
            input_fileset=req.input_fileset,
            output_fileset_name=req.output_fileset_name,
            command=req.command, vcpu=req.vcpu, mem_mb=req.mem_mb,
            code=req.code, job_id=req.job_id)
        return {"job_id": job_id}

    @app.get("/jobs", response_model=list[s.JobOut])
    def list_jobs(user: str | None = Query(default=None),
                  p: Principal = Depends(principal)):
        jobs = platform.engine.registry.list(project=p.project, user=user)
        return [_job_out(j) for j in sorted(jobs, key=lambda j: j.submitted_at)]

    @app.get("/jobs/{job_id}", response_model=s.JobOut)
    def get_job(job_id: str, p: Principal = Depends(principal)):
        job = platform.engine.get(job_id)
        if job.project != p.project:
            raise errors.NotFoundError(f"no such job: {job_id}")
        return _job_out(job)

    @app.post("/jobs/{job_id}/kill")
    def kill_job(job_id: str, p: Principal = Depends(principal)):
        job = platform.engine.get(job_id)
        if job.project != p.project:
            raise errors.NotFoundError(f"no such job: {job_id}")
        return {"notice": platform.engine.kill(job_id)}

    @app.get("/jobs/{job_id}/events")
    def job_events(job_id: str, p: Principal = Depends(principal)):
        job = platform.engine.get(job_id)
        if job.project != p.project:
            raise errors.NotFoundError(f"no such job: {job_id}")

        def stream():
            for event in platform.engine.watch(job_id):
                yield json.dumps(event) + "\n"

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    # -- metadata ---------------------------------------------------------

    @app.post("/meta/{kind}/{entity_id:path}", response_model=s.MetaRecordOut)
    def set_meta(kind: str, entity_id: str, req: s.SetAttrsRequest,
                 p: Principal = Depends(principal)):
        attrs = {k: s.untag_value(v) for k, v in req.attrs.items()}
        record = platform.metastore.set_attrs(p.project, kind, entity_id, attrs)
        return s.MetaRecordOut(kind=kind, entity_id=entity_id, attributes={
            k: s.tag_value(v) for k, v in record.attributes.items()})

    @app.get("/meta/{kind}/{entity_id:path}", response_model=s.MetaRecordOut)
    def get_meta(kind: str, entity_id: str, p: Principal = Depends(principal)):
        record = platform.metastore.get(p.project, kind, entity_id)
        return s.MetaRecordOut(kind=kind, entity_id=entity_id, attributes={
            k: s.tag_value(v) for k, v in record.attributes.items()})

    @app.post("/query", response_model=s.QueryResponse)
    def run_query(req: s.QueryRequest, p: Principal = Depends(principal)):
        predicates = []
        for pred in req.predicates:
            value = tuple(pred.value) if pred.op == "between" else pred.value
            predicates.append(Predicate(pred.key, pred.op, value))
        q = MetaQuery(kind=req.kind, predicates=predicates,
                      aggregate=req.aggregate, sort=req.sort, limit=req.limit)
        return s.QueryResponse(ids=platform.metastore.query(p.project, q))

    # -- provenance -------------------------------------------------------

    @app.get("/provenance/graph", response_model=s.GraphOut)
    def provenance_graph(p: Principal = Depends(principal)):
        nodes, edges = platform.provenance.full_graph(p.project)
        return s.GraphOut(nodes=nodes, edges=[
            s.GraphEdgeOut.model_validate(e.to_dict()) for e in edges])

    @app.get("/provenance/{name}/{version}/trace", response_model=s.TraceOut)
    def provenance_trace(name: str, version: int,
                         dir: str = Query(pattern="^(forward|backward)$"),
                         p: Principal = Depends(principal)):
        pairs = platform.provenance.trace(p.project, name, version, dir)
        return s.TraceOut(
            neighbors=[s.GraphEdgeOut.model_validate(e.to_dict())
                       for e, _ in pairs],
            nodes=[n for _, n in pairs])

    # -- profiling / auto-provisioning ------------------------------------

    @app.post("/templates/profile")
    def profile(req: s.ProfileRequest, p: Principal = Depends(principal)):
        skeleton = JobSkeleton(project=p.project, user=p.user_id,
                               input_fileset=req.input_fileset,
                               code=tuple(req.code))
        platform.filesets.get(p.project,
                              req.input_fileset.partition(":")[0])  # fail fast
        platform.profiler.profile_async(req.template_name,
                                        req.command_template, skeleton)
        return {"template_name": req.template_name, "status": "profiling"}

    @app.get("/templates/{name}")
    def template_status(name: str, p: Principal = Depends(principal)):
        return platform.profiler.status(name)

    @app.post("/templates/{name}/autoprovision",
              response_model=s.AutoprovisionResponse)
    def autoprovision(name: str, req: s.AutoprovisionRequest,
                      p: Principal = Depends(principal)):
        skeleton = JobSkeleton(project=p.project, user=p.user_id,
                               input_fileset=req.input_fileset,
                               code=tuple(req.code))
        choice, job_id = platform.profiler.autoprovision(
            name, req.values, skeleton, platform.config.price_schedule,
            max_cost=req.max_cost, max_runtime=req.max_runtime,
            output_fileset_name=req.output_fileset_name)
        return s.AutoprovisionResponse(
            vcpu=choice.config.vcpu, mem_mb=choice.config.mem_mb,
            predicted_runtime=choice.predicted_runtime,
            predicted_cost=choice.predicted_cost, job_id=job_id)

    # -- admin ------------------------------------------------------------

    @app.post("/admin/projects", response_model=s.PrincipalOut)
    def create_project(req: s.CreateProjectRequest,
                       p: Principal = Depends(principal)):
        admin = platform.auth.create_project(p, req.name)
        return s.PrincipalOut(**admin.__dict__)

    @app.post("/admin/users", response_model=s.PrincipalOut)
    def create_user(req: s.CreateUserRequest,
                    p: Principal = Depends(principal)):
        user = platform.auth.create_user(p, req.name)
        return s.PrincipalOut(**user.__dict__)

    return app
