"""FastAPI app: run experiments, list recipes, report health.

Routing policy: a *run* always answers 200 with the exit code inside the
body (a failed check is a successful run), while addressing errors —
unknown operation or recipe name — answer 404 so thin clients can map
them to their usage-error exit without parsing bodies.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..experiments import OPERATIONS, run_operation
from ..recipes import recipe_names, recipe_summary, recipe_text
from .schemas import FilePayload, HealthInfo, RecipeDetail, RecipeInfo, RunRequest, RunResult


def create_app() -> FastAPI:
    app = FastAPI(
        title="duophase",
        version=__version__,
        description=(
            "Structure checks, localization certificates, mollified-energy "
            "experiments, and minimization probes for double-phase densities"
        ),
    )

    @app.get("/healthz", response_model=HealthInfo)
    def healthz() -> HealthInfo:
        return HealthInfo(
            status="ok", version=__version__, operations=sorted(OPERATIONS)
        )

    @app.get("/recipes", response_model=list[RecipeInfo])
    def list_recipes() -> list[RecipeInfo]:
        return [
            RecipeInfo(name=name, summary=recipe_summary(name))
            for name in recipe_names()
        ]

    @app.get("/recipes/{name}", response_model=RecipeDetail)
    def get_recipe(name: str) -> RecipeDetail:
        if name not in recipe_names():
            raise HTTPException(
                status_code=404,
                detail=f"unknown recipe {name!r}; shipped recipes: "
                + ", ".join(recipe_names()),
            )
        return RecipeDetail(
            name=name, summary=recipe_summary(name), content=recipe_text(name)
        )

    @app.post("/run/{operation}", response_model=RunResult)
    def run(operation: str, request: RunRequest) -> RunResult:
        if operation not in OPERATIONS:
            raise HTTPException(
                status_code=404,
                detail=f"unknown operation {operation!r}; known: "
                + ", ".join(sorted(OPERATIONS)),
            )
        outcome = run_operation(
            operation, request.config, seed=request.seed, force=request.force
        )
        return RunResult(
            exit_code=outcome.exit_code,
            verdict=outcome.verdict,
            summary=outcome.summary,
            files=[FilePayload(name=n, content=c) for n, c in outcome.files],
            config_digest=outcome.config_digest,
            seed=outcome.seed,
        )

    return app


app = create_app()
