import logging
from typing import Optional

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import ValidationError
from starlette.exceptions import HTTPException

from . import schemas
from .errors import KernelError
from .parser import pretty_print
from .syntax import free_vars
from .vernacular import Session

logger = logging.getLogger(__name__)

app = FastAPI(title="CC Kernel", version="0.1.0")


def error_body(code: str, message: str, rule: str = "") -> dict:
    return {"error": {"code": code, "message": message, "rule": rule}}


@app.exception_handler(HTTPException)
async def http_exception_handler(request: Request, exc: HTTPException):
    """
    Стандартные HTTP-ошибки (404, 405 и т.д.) в едином формате.
    """
    if exc.status_code == status.HTTP_404_NOT_FOUND:
        error_code = "not_found"
    elif exc.status_code == status.HTTP_405_METHOD_NOT_ALLOWED:
        error_code = "method_not_allowed"
    else:
        error_code = "http_error"

    return JSONResponse(
        status_code=exc.status_code,
        content=error_body(error_code, str(exc.detail)),
    )


@app.exception_handler(RequestValidationError)
@app.exception_handler(ValidationError)
async def validation_exception_handler(request: Request, exc: Exception):
    """
    Ошибки валидации pydantic (тело запроса и конфигурация) -> 422 validation_error.
    """
    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content=error_body(
            "validation_error", "Invalid data format or missing required fields"
        ),
    )


@app.exception_handler(KernelError)
async def kernel_error_handler(request: Request, exc: KernelError):
    return JSONResponse(
        status_code=exc.status,
        content=error_body(exc.code, exc.message, exc.rule),
    )


def _reduction(max_steps: Optional[int]) -> schemas.ReductionConfig:
    if max_steps is None:
        return schemas.ReductionConfig()
    return schemas.ReductionConfig(max_steps=max_steps)


def _loaded(
    source: str,
    reduction: schemas.ReductionConfig,
    model: Optional[schemas.ModelConfig] = None,
) -> Session:
    """Сессия с загруженным источником; отвергнутый источник -> 422."""
    session = Session(reduction, model).load(source)
    if not session.ok:
        first = session.diagnostics[0]
        raise KernelError(
            code="source_rejected",
            message=first.render(),
            rule=first.rule,
            status=status.HTTP_422_UNPROCESSABLE_ENTITY,
        )
    return session


def _term(session: Session, text: str):
    term = session.parse_term(text)
    unknown = sorted(free_vars(term) - set(session.ctx.domain()))
    if unknown:
        raise KernelError(
            code="not_found",
            message=f"unknown name {unknown[0]}",
            status=status.HTTP_404_NOT_FOUND,
        )
    return term


@app.post("/check", response_model=schemas.CheckResponse)
def check(request: schemas.CheckRequest):
    session = Session(_reduction(request.max_steps)).load(request.source)
    logger.info(
        "checked %d items, %d rejected", len(session.results), len(session.diagnostics)
    )
    return schemas.CheckResponse(
        ok=session.ok, items=session.results, diagnostics=session.diagnostics
    )


@app.post("/normalize", response_model=schemas.NormalizeResponse)
def normalize(request: schemas.NormalizeRequest):
    session = _loaded(request.source, _reduction(request.max_steps))
    term = _term(session, request.term)
    return schemas.NormalizeResponse(
        term=pretty_print(term), normal_form=pretty_print(session.normalize(term))
    )


@app.post("/model", response_model=schemas.ModelResponse)
def model(request: schemas.ModelRequest):
    cfg = request.model_config_override()
    session = _loaded(request.source, schemas.ReductionConfig(), cfg)
    term = _term(session, request.term)
    ty = _term(session, request.type)
    value, result = session.probe(term, ty, cfg)
    return schemas.ModelResponse(
        value=value, member=result.verdict, depth=result.depth, samples=result.samples
    )


@app.post("/soundness", response_model=schemas.SoundnessReport)
def soundness(request: schemas.CheckRequest):
    session = _loaded(request.source, _reduction(request.max_steps))
    return session.soundness()


@app.get("/health")
def health():
    return {"status": "ok"}
