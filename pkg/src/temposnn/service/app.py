"""FastAPI application exposing the experiment jobs over HTTP.

The service runs on the same filesystem as its clients: requests carry input
and output paths, jobs write their artifacts there, responses report metrics
and the files written. Module errors map onto a structured 400 body whose
`kind` field the CLI turns into exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ArgumentError, DataFormatError, NumericError
from . import jobs
from . import schemas as sc


def create_app() -> FastAPI:
    app = FastAPI(title="temposnn", version="0.1.0")

    @app.exception_handler(ArgumentError)
    async def _validation(_: Request, exc: ArgumentError):
        return JSONResponse(status_code=400, content={"kind": "validation", "detail": str(exc)})

    @app.exception_handler(DataFormatError)
    async def _data(_: Request, exc: DataFormatError):
        return JSONResponse(status_code=400, content={"kind": "data", "detail": str(exc)})

    @app.exception_handler(NumericError)
    async def _numeric(_: Request, exc: NumericError):
        return JSONResponse(status_code=400, content={"kind": "numeric", "detail": str(exc)})

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/convert", response_model=sc.ConvertResponse)
    def convert(req: sc.ConvertRequest):
        return jobs.run_convert(req)

    @app.post("/v1/train", response_model=sc.TrainResponse)
    def train(req: sc.TrainRequest):
        return jobs.run_train(req)

    @app.post("/v1/eval", response_model=sc.EvalResponse)
    def evaluate(req: sc.EvalRequest):
        return jobs.run_eval(req)

    @app.post("/v1/associate", response_model=sc.TrainResponse)
    def associate(req: sc.AssociateRequest):
        return jobs.run_associate(req)

    @app.post("/v1/gradcheck", response_model=sc.GradcheckResponse)
    def gradcheck(req: sc.GradcheckRequest):
        return jobs.run_gradcheck(req)

    @app.post("/v1/sweep", response_model=sc.SweepResponse)
    def sweep(req: sc.SweepRequest):
        return jobs.run_sweep(req)

    @app.post("/v1/circuit", response_model=sc.CircuitResponse)
    def circuit(req: sc.CircuitRequest):
        return jobs.run_circuit(req)

    @app.post("/v1/synth", response_model=sc.SynthResponse)
    def synth(req: sc.SynthRequest):
        return jobs.run_synth(req)

    return app


app = create_app()
