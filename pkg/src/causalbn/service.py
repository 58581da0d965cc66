"""Local HTTP/JSON query service over fitted CBNs.

Loopback-oriented analyst tool: models are loaded at startup and immutable;
every response is a pure function of (model, request body). No learning
endpoints; learning is batch, interaction is querying.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .cbn import (Cbn, InterventionQuery, ZeroProbabilityEvidence, ace,
                  intervene, load_cbn, posterior, sensitivity)
from .graph import GraphError, to_json_obj

SCHEMA_VERSION = 1


@dataclass
class ModelEntry:
    cbn: Cbn
    algorithm: str
    fitted_at: str


@dataclass
class ModelRegistry:
    models: dict[str, ModelEntry] = field(default_factory=dict)

    def register(self, model_id: str, cbn: Cbn, algorithm: str = "",
                 fitted_at: str = "") -> None:
        if model_id in self.models:
            raise ValueError(f"duplicate model id {model_id!r}")
        self.models[model_id] = ModelEntry(cbn=cbn, algorithm=algorithm,
                                           fitted_at=fitted_at)

    def get(self, model_id: str) -> ModelEntry:
        entry = self.models.get(model_id)
        if entry is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown model {model_id!r}")
        return entry

    @staticmethod
    def from_directory(models_dir: str | Path) -> "ModelRegistry":
        reg = ModelRegistry()
        for path in sorted(Path(models_dir).glob("*.json")):
            cbn = load_cbn(path)
            reg.register(path.stem, cbn, algorithm=path.stem)
        return reg


class QueryRequest(BaseModel):
    target: str
    evidence: dict[str, str] = Field(default_factory=dict)
    do: dict[str, str] = Field(default_factory=dict)


class AceRequest(BaseModel):
    target: str
    target_state: str
    variable: str
    state1: str
    state0: str


def create_app(registry: ModelRegistry, ui_origin: str = "*") -> FastAPI:
    app = FastAPI(title="causalbn query service", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=[ui_origin],
                       allow_methods=["*"], allow_headers=["*"])

    def _model(model_id: str) -> ModelEntry:
        return registry.get(model_id)

    @app.get("/models")
    def list_models():
        out = []
        for mid, e in sorted(registry.models.items()):
            out.append({
                "id": mid,
                "algorithm": e.algorithm,
                "fitted_at": e.fitted_at,
                "nodes": len(e.cbn.dag.nodes),
                "edges": len(e.cbn.dag.directed),
            })
        return {"schema_version": SCHEMA_VERSION, "models": out}

    @app.get("/models/{model_id}/graph")
    def model_graph(model_id: str):
        e = _model(model_id)
        obj = to_json_obj(e.cbn.dag)
        obj["schema_version"] = SCHEMA_VERSION
        obj["states"] = {v.name: list(v.states) for v in e.cbn.variables}
        return obj

    @app.post("/models/{model_id}/query")
    def query(model_id: str, req: QueryRequest):
        e = _model(model_id)
        t0 = time.monotonic()
        try:
            q = InterventionQuery(target=req.target, do_assignments=req.do,
                                  evidence=req.evidence)
            baseline = posterior(e.cbn, req.target)
            dist = intervene(e.cbn, q)
        except ZeroProbabilityEvidence as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (GraphError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        states = list(e.cbn.spec_of(req.target).states)
        return {
            "schema_version": SCHEMA_VERSION,
            "target": req.target,
            "states": states,
            "baseline": [float(x) for x in baseline],
            "posterior": [float(x) for x in dist],
            "delta_pp": [100.0 * float(p - b) for p, b in zip(dist, baseline)],
            "elapsed_ms": 1000.0 * (time.monotonic() - t0),
        }

    @app.post("/models/{model_id}/ace")
    def ace_endpoint(model_id: str, req: AceRequest):
        e = _model(model_id)
        try:
            value = ace(e.cbn, req.target, req.target_state, req.variable,
                        req.state1, req.state0)
        except ZeroProbabilityEvidence as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except GraphError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"schema_version": SCHEMA_VERSION, "ace": value}

    @app.get("/models/{model_id}/sensitivity")
    def sensitivity_endpoint(model_id: str, target: str = Query(...)):
        e = _model(model_id)
        try:
            report = sensitivity(e.cbn, target)
        except GraphError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "schema_version": SCHEMA_VERSION,
            "target": target,
            "ranking": report["ranking"],
            "max_abs_derivative": {
                n: report["nodes"][n]["max_abs_derivative"]
                for n in report["nodes"]
            },
        }

    @app.get("/spec")
    def openapi_spec():
        return app.openapi()

    return app


def serve(models_dir: str | Path, bind: str = "127.0.0.1", port: int = 8321):
    import uvicorn

    registry = ModelRegistry.from_directory(models_dir)
    app = create_app(registry)
    uvicorn.run(app, host=bind, port=port)
