"""FastAPI service wrapping the analysis library.

Spec-file text travels in request bodies; reports come back both as JSON and
in their canonical byte-stable serialization.  Domain errors map to 422
(invalid spec) and 409 (numerical failure)."""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from .. import catalog, coupling, report, specfile, transforms, verify
from ..errors import NumericalError, SpecError
from ..expr import parse as parse_expr
from . import models


def create_app():
    app = FastAPI(title="consym", version=__version__)

    @app.exception_handler(SpecError)
    async def _spec_error(request, exc):
        payload = models.ErrorPayload(kind="spec", message=str(exc),
                                      line=getattr(exc, "line", None),
                                      col=getattr(exc, "col", None))
        return JSONResponse(status_code=422, content=payload.model_dump())

    @app.exception_handler(NumericalError)
    async def _numeric_error(request, exc):
        payload = models.ErrorPayload(kind="numeric", message=str(exc))
        return JSONResponse(status_code=409, content=payload.model_dump())

    @app.get("/health")
    def health():
        return {"name": "consym", "version": __version__, "schema": report.SCHEMA_VERSION}

    @app.post("/analyze", response_model=models.AnalyzeResponse)
    def analyze(req: models.AnalyzeRequest):
        sys_ = specfile.load(req.spec_text)
        rep = report.analyze(sys_, samples=req.samples, seed=req.seed,
                             tol=req.tol or 1e-9,
                             spec_sha=specfile.spec_hash(req.spec_text))
        return models.AnalyzeResponse(report=rep, canonical=report.to_canonical_json(rep))

    @app.post("/verify", response_model=models.VerifyResponse)
    def verify_endpoint(req: models.VerifyRequest):
        sys_ = specfile.load(req.spec_text)
        passed, checks = verify.verify(sys_, samples=req.samples, seed=req.seed,
                                       tol=req.tol or 1e-9)
        return models.VerifyResponse(passed=passed,
                                     checks=[models.CheckResult(**c) for c in checks])

    @app.post("/transform", response_model=models.SpecFileResponse)
    def transform(req: models.TransformRequest):
        sys_ = specfile.load(req.spec_text)
        if req.op == "qu":
            if req.q is None:
                raise SpecError("op 'qu' needs the matrix q")
            out = transforms.t_qu(sys_, np.asarray(req.q, dtype=float))
        elif req.op == "reduce":
            if req.c_e is None:
                raise SpecError("op 'reduce' needs c_e")
            out = transforms.t_reduce(sys_, req.c_e, axis=req.axis)
        elif req.op == "exchange":
            if req.c_e is None or req.l is None:
                raise SpecError("op 'exchange' needs l and c_e")
            out = transforms.t_exchange(sys_, req.l, req.c_e)
        else:
            if req.f is None:
                raise SpecError("op 'zeta-f' needs the map expression f")
            out = transforms.t_zeta_f(sys_, parse_expr(req.f, 1))
        return models.SpecFileResponse(
            spec_text=specfile.emit(out, comments=(f"source-hash: {specfile.spec_hash(req.spec_text)}",)),
            name=out.name)

    @app.post("/couple", response_model=models.SpecFileResponse)
    def couple(req: models.CoupleRequest):
        systems = [specfile.load(t) for t in req.spec_texts]
        if req.strategy == "A":
            if req.e is None or req.lam is None:
                raise SpecError("strategy A needs the phase direction e and weights lam")
            if len(systems) == 1:
                K = req.copies or len(req.lam)
                spec = coupling.spec_a_identical(systems[0], K, np.asarray(req.e, float),
                                                 np.asarray(req.lam, float), req.c_lambda)
            else:
                spec = coupling.spec_a_shared_zeta(systems, np.asarray(req.e, float),
                                                   np.asarray(req.lam, float), req.c_lambda)
            out, _ = coupling.couple_a(spec)
        else:
            if req.rank1 is not None:
                B = coupling.rank_one_mixing(*req.rank1)
            elif req.b is not None:
                B = np.asarray(req.b, dtype=float)
            else:
                raise SpecError("strategy B needs the mixing matrix b or rank1 weights")
            out = coupling.couple_b(coupling.CouplingSpecB(constituents=systems, B=B))
        sources = ", ".join(specfile.spec_hash(t)[:12] for t in req.spec_texts)
        return models.SpecFileResponse(
            spec_text=specfile.emit(out, comments=(f"coupled strategy {req.strategy} from {sources}",)),
            name=out.name)

    @app.get("/catalog/{entry_id}", response_model=models.SpecFileResponse)
    def catalog_entry(entry_id: str, n: int | None = None, gamma: float | None = None,
                      count: int = 256, seed: int = 0):
        params = {"sampling": (count, seed)}
        if gamma is not None and entry_id in ("euler-isentropic", "gex-counterexample"):
            params["gamma"] = gamma
        sys_ = catalog.build(entry_id, n=n, **params)
        expect = catalog.expected_properties(entry_id, sys_.n)
        return models.SpecFileResponse(
            spec_text=specfile.emit(sys_, comments=(f"catalog entry {entry_id}",), expect=expect),
            name=sys_.name)

    return app


app = create_app()
