import pytest
from fastapi.testclient import TestClient

from scorer_shim.server import ShimConfig, create_app


def _client(max_batch=8):
    return TestClient(create_app(ShimConfig(echo=True, max_batch=max_batch)))


def test_healthz():
    response = _client().get("/healthz")
    assert response.status_code == 200
    assert response.text == "ok"


def test_single_pair_contract_shape():
    response = _client().post("/v1/score", json={"pairs": [{"premise": "a", "hypothesis": "a"}]})
    assert response.status_code == 200
    payload = response.json()
    assert list(payload) == ["scores"]
    assert len(payload["scores"]) == 1
    assert 0.0 <= payload["scores"][0] <= 1.0


def test_echo_formula():
    response = _client().post(
        "/v1/score", json={"pairs": [{"premise": "", "hypothesis": "x" * 42}]}
    )
    assert response.json()["scores"] == [0.42]


def test_empty_pairs():
    response = _client().post("/v1/score", json={"pairs": []})
    assert response.status_code == 200
    assert response.json() == {"scores": []}


def test_order_preserved():
    pairs = [{"premise": "p", "hypothesis": "h" * n} for n in (7, 3, 99, 1)]
    response = _client().post("/v1/score", json={"pairs": pairs})
    assert response.json()["scores"] == [0.07, 0.03, 0.99, 0.01]


def test_identical_requests_identical_scores():
    client = _client()
    body = {"pairs": [{"premise": "a b c", "hypothesis": "d e f"}]}
    first = client.post("/v1/score", json=body).json()
    second = client.post("/v1/score", json=body).json()
    assert first == second


def test_two_instances_agree():
    body = {"pairs": [{"premise": "p", "hypothesis": "same input"}]}
    assert _client().post("/v1/score", json=body).json() == _client().post("/v1/score", json=body).json()


@pytest.mark.parametrize(
    "body",
    [
        {"not_pairs": []},
        {"pairs": "nope"},
        {"pairs": [{"premise": "only"}]},
        {"pairs": [{"premise": 1, "hypothesis": "x"}]},
        {"pairs": ["flat"]},
        [1, 2, 3],
    ],
)
def test_malformed_body_is_400(body):
    assert _client().post("/v1/score", json=body).status_code == 400


def test_unparseable_body_is_400():
    response = _client().post(
        "/v1/score", content=b"{broken", headers={"Content-Type": "application/json"}
    )
    assert response.status_code == 400


def test_oversized_batch_is_413():
    pairs = [{"premise": "p", "hypothesis": "h"}] * 9
    assert _client(max_batch=8).post("/v1/score", json={"pairs": pairs}).status_code == 413


def test_inference_failure_is_500():
    class Broken:
        def score_pairs(self, pairs):
            raise RuntimeError("weights corrupted")

    client = TestClient(create_app(ShimConfig(echo=True), backend=Broken()))
    response = client.post("/v1/score", json={"pairs": [{"premise": "p", "hypothesis": "h"}]})
    assert response.status_code == 500
    assert "error" in response.json()


def test_scores_are_clamped():
    class Hot:
        def score_pairs(self, pairs):
            return [1.7 for _ in pairs]

    client = TestClient(create_app(ShimConfig(echo=True), backend=Hot()))
    response = client.post("/v1/score", json={"pairs": [{"premise": "p", "hypothesis": "h"}]})
    assert response.json()["scores"] == [1.0]


def test_config_rejects_bad_batch():
    with pytest.raises(ValueError):
        ShimConfig(max_batch=0)
