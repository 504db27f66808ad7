"""HTTP service exposing the consistency checker.

Every endpoint is a stateless wrapper over the core library: requests carry
the same JSON shapes as the on-disk file formats, responses carry the same
result payloads the command line embeds in its reports. Domain errors map
to HTTP 400 with the exception class name so clients can distinguish parse
problems from semantic ones.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..consistency import (
    OptimizerConfig,
    consistency_verdict,
    search_counterexamples,
)
from ..distributions import distribution_from_dict, space_from_dict
from ..errors import BayescheckError, InvalidDistribution, ParseError
from ..inference import map_inference, marginal_inference, scores_from_dict
from ..losses import LossKind
from ..reporting import (
    enumeration_to_dict,
    map_result_to_dict,
    marginal_result_to_dict,
    reproduce_results_to_dict,
    search_result_to_dict,
    verdict_to_dict,
)
from ..reproduce import reproduce
from ..structures import enumerate_outputs
from .schemas import (
    CheckRequest,
    EnumerateRequest,
    InferRequest,
    OptimizerModel,
    ReproduceRequest,
    SearchRequest,
)


def _optimizer(model: OptimizerModel | None) -> OptimizerConfig | None:
    if model is None:
        return None
    return OptimizerConfig(
        step_rule=model.step_rule,
        eta=model.eta,
        beta=model.beta,
        armijo_c=model.armijo_c,
        grad_tolerance=model.grad_tolerance,
        max_iters=model.max_iters,
        seed=model.seed,
    )


def _algorithm(algo: str) -> str:
    return "bruteforce" if algo == "brute" else "fast"


def create_app() -> FastAPI:
    app = FastAPI(title="bayescheck", version=__version__)

    @app.exception_handler(BayescheckError)
    async def _domain_error(request: Request, exc: BayescheckError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/version")
    def version():
        return {"version": __version__}

    @app.post("/check")
    def check(req: CheckRequest):
        dist = distribution_from_dict(req.distribution.model_dump())
        verdict = consistency_verdict(
            LossKind(req.loss),
            dist,
            optimizer=_optimizer(req.optimizer),
            tie_tolerance=req.tie_tolerance,
        )
        return verdict_to_dict(verdict)

    @app.post("/infer")
    def infer(req: InferRequest):
        space, w = scores_from_dict(req.scores.model_dump())
        algorithm = _algorithm(req.algo)
        if req.mode == "map":
            return map_result_to_dict(space, map_inference(space, w, algorithm), algorithm)
        return marginal_result_to_dict(
            space, marginal_inference(space, w, algorithm), algorithm
        )

    @app.post("/search")
    def search(req: SearchRequest):
        space = space_from_dict(req.space.model_dump())
        result = search_counterexamples(
            LossKind(req.loss),
            space,
            req.trials,
            req.seed,
            tie_tolerance=req.tie_tolerance,
            alpha=req.alpha,
            optimizer=_optimizer(req.optimizer),
            jobs=req.jobs,
        )
        return search_result_to_dict(result, req.tie_tolerance)

    @app.post("/reproduce")
    def run_reproduce(req: ReproduceRequest):
        results = reproduce(req.target, req.fixture_dir, req.tie_tolerance)
        return reproduce_results_to_dict(results)

    @app.post("/enumerate")
    def enumerate_space(req: EnumerateRequest):
        space = space_from_dict(req.space.model_dump())
        return enumeration_to_dict(space, enumerate_outputs(space))

    return app
