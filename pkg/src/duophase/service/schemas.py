"""Request/response models for the experiment service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    """One experiment run: raw config text plus the runtime switches."""

    config: str = Field(description="Raw config text (flat key = value sections)")
    seed: int | None = Field(
        default=None,
        ge=0,
        le=2**64 - 1,
        description="Seed override; falls back to [sampling] seed, then 0",
    )
    force: bool = Field(
        default=False,
        description="Skip refusable pre-checks (convergence structure screens)",
    )


class FilePayload(BaseModel):
    """One output file, content carried inline."""

    name: str
    content: str


class RunResult(BaseModel):
    """Outcome of one run; mirrors the in-process result exactly."""

    exit_code: int = Field(description="0 pass, 1 fail/witness-missing, 2 usage error")
    verdict: str
    summary: str
    files: list[FilePayload]
    config_digest: str
    seed: int


class RecipeInfo(BaseModel):
    """Shipped recipe listing entry."""

    name: str
    summary: str


class RecipeDetail(RecipeInfo):
    """Full recipe: listing entry plus the raw config text."""

    content: str


class HealthInfo(BaseModel):
    status: str
    version: str
    operations: list[str]
