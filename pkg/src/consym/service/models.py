"""Request/response models for the analysis service."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class AnalyzeRequest(BaseModel):
    spec_text: str
    samples: Optional[int] = Field(None, ge=4)
    seed: Optional[int] = None
    tol: Optional[float] = Field(None, gt=0)


class AnalyzeResponse(BaseModel):
    report: dict[str, Any]
    canonical: str


class VerifyRequest(AnalyzeRequest):
    pass


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class VerifyResponse(BaseModel):
    passed: bool
    checks: list[CheckResult]


class TransformRequest(BaseModel):
    spec_text: str
    op: Literal["qu", "reduce", "exchange", "zeta-f"]
    q: Optional[list[list[float]]] = None
    c_e: Optional[float] = None
    axis: Optional[int] = Field(None, ge=1)
    l: Optional[int] = Field(None, ge=1)
    f: Optional[str] = None


class CoupleRequest(BaseModel):
    spec_texts: list[str] = Field(min_length=1)
    strategy: Literal["A", "B"]
    copies: Optional[int] = Field(None, ge=2)
    e: Optional[list[float]] = None
    lam: Optional[list[float]] = None
    c_lambda: float = 0.0
    b: Optional[list[list[float]]] = None
    rank1: Optional[tuple[float, float]] = None


class SpecFileResponse(BaseModel):
    spec_text: str
    name: str


class ErrorPayload(BaseModel):
    kind: Literal["spec", "numeric"]
    message: str
    line: Optional[int] = None
    col: Optional[int] = None
