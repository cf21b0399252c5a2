"""HTTP prediction service over a loaded, read-only bundle."""

import logging

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, StrictStr, model_validator

from .bundle import bundle_checksum, load_bundle
from .exceptions import ProfetError, ValidationError
from .trace import check_op_map, load_op_map

logger = logging.getLogger(__name__)

DEFAULT_LISTEN = "127.0.0.1:8080"


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    anchor: StrictStr
    target: StrictStr
    ops: dict[str, float] | None = None
    trace: StrictStr | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.ops is None) == (self.trace is None):
            raise ValueError("exactly one of 'ops' or 'trace' is required")
        return self


def _bad_request(request: Request, exc: RequestValidationError):
    errors = [
        {"loc": list(e.get("loc", ())), "msg": e.get("msg", "")} for e in exc.errors()
    ]
    return JSONResponse(status_code=400, content={"detail": "malformed request",
                                                  "errors": errors})


def create_app(registry, checksum, expose_base=True):
    """Build the FastAPI app around an immutable registry.

    Refuses to start with an empty registry. ``expose_base=False`` drops the
    per-model predictions from responses.
    """
    if not len(registry):
        raise ProfetError("refusing to serve an empty registry")
    pairs = [list(p) for p in registry.pairs()]

    app = FastAPI(title="profet", version="1")
    app.add_exception_handler(RequestValidationError, _bad_request)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "bundle_checksum": checksum}

    @app.get("/v1/pairs")
    def list_pairs():
        return pairs

    @app.post("/v1/predict")
    def predict(req: PredictRequest):
        if req.anchor == req.target:
            raise HTTPException(status_code=422, detail="anchor and target must differ")
        predictor = registry.get(req.anchor, req.target)
        if predictor is None:
            return JSONResponse(status_code=404, content={
                "detail": f"no predictor for ({req.anchor}, {req.target})",
                "available_pairs": pairs,
            })
        try:
            if req.ops is not None:
                op_map = check_op_map(req.ops)
            else:
                op_map = load_op_map(req.trace, "jsonl")
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        body = {
            "latency_ms": predictor.predict(op_map),
            "pair": [req.anchor, req.target],
            "vocabulary_version": predictor.vocabulary.version,
        }
        if expose_base:
            body["base_predictions"] = predictor.predict_base(op_map)
        return body

    return app


def app_from_bundle(path, expose_base=True):
    registry = load_bundle(path)
    return create_app(registry, bundle_checksum(path), expose_base=expose_base)


def parse_listen(listen):
    host, sep, port = listen.rpartition(":")
    if not sep or not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise ValidationError(f"--listen expects host:port, got {listen!r}")
    return host, int(port)


def serve(path, listen=DEFAULT_LISTEN, expose_base=True):  # pragma: no cover
    import uvicorn

    host, port = parse_listen(listen)
    app = app_from_bundle(path, expose_base=expose_base)
    logger.info("serving %s on %s:%d", path, host, port)
    uvicorn.run(app, host=host, port=port, log_level="info")
