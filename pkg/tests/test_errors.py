import pytest
from fastapi.testclient import TestClient
from starlette import status

from app.errors import BoundExceeded, FuelExhausted, GuardError, KernelError, TypingError
from app.main import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_not_found_route(client):
    """
    Проверка унифицированного ответа 404 для несуществующего маршрута.
    """
    r = client.get("/nowhere")

    assert r.status_code == status.HTTP_404_NOT_FOUND
    body = r.json()

    assert "error" in body
    assert body["error"]["code"] == "not_found"


def test_unknown_name_in_term(client):
    """
    Имя, которого нет в контексте, тоже даёт 404 not_found.
    """
    r = client.post("/normalize", json={"source": "", "term": "mystery"})
    assert r.status_code == status.HTTP_404_NOT_FOUND
    assert r.json()["error"]["code"] == "not_found"
    assert "mystery" in r.json()["error"]["message"]


def test_method_not_allowed(client):
    r = client.get("/check")
    assert r.status_code == status.HTTP_405_METHOD_NOT_ALLOWED
    assert r.json()["error"]["code"] == "method_not_allowed"


def test_validation_error(client):
    """
    Проверка унифицированного ответа 422 (ошибка валидации).
    Пустой источник не проходит ограничения CheckRequest.
    """
    r = client.post("/check", json={"source": ""})
    assert r.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    body = r.json()
    assert "error" in body
    assert body["error"]["code"] == "validation_error"


def test_model_bounds_are_validated(client):
    r = client.post("/model", json={"term": "Prop", "type": "Type0", "rank": 7})
    assert r.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert r.json()["error"]["code"] == "validation_error"


def test_syntax_error_is_a_bad_request(client):
    r = client.post("/normalize", json={"source": "", "term": "fun =>"})
    assert r.status_code == status.HTTP_400_BAD_REQUEST
    assert r.json()["error"]["code"] == "parse_error"
    assert r.json()["error"]["rule"] == "syntax"


def test_ill_typed_term_names_the_rule(client):
    r = client.post("/normalize", json={"source": "", "term": "Prop Prop"})
    assert r.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert r.json()["error"] == {
        "code": "type_error",
        "message": r.json()["error"]["message"],
        "rule": "(app)",
    }


def test_fuel_exhaustion(client):
    r = client.post(
        "/normalize",
        json={
            "source": "Parameter A : Prop.\nParameter a : A.\n",
            "term": "(fun (x : A) => x) ((fun (x : A) => x) ((fun (x : A) => x) a))",
            "max_steps": 2,
        },
    )
    assert r.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert r.json()["error"]["code"] == "fuel_exhausted"


def test_error_classes():
    assert TypingError("(var)", "x").status == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert GuardError("no").rule == "F guard"
    assert GuardError("no").code == "guard_error"
    assert FuelExhausted(3).max_steps == 3
    assert BoundExceeded("big").rule == "model"
    assert str(TypingError("(conv)", "mismatch")) == "(conv): mismatch"
    assert KernelError("c", "m").at(3, 4).at(5, 6).line == 3
