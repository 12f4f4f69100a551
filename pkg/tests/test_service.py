"""Service endpoints: analysis, verification, transforms, coupling, errors."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from consym import catalog as cat
from consym import specfile as sf
from consym.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def isentropic_spec():
    sys_ = cat.euler_isentropic(3, sampling=(192, 0))
    return sf.emit(sys_, expect=cat.expected_properties("euler-isentropic", 3))


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["name"] == "consym" and body["schema"] == 1


def test_analyze_endpoint(client, isentropic_spec):
    resp = client.post("/analyze", json={"spec_text": isentropic_spec})
    assert resp.status_code == 200
    body = resp.json()
    rep = body["report"]
    assert rep["lambda"]["L"] == 3
    assert rep["symmetry"]["dim_zero"] == 3
    assert rep["hyperbolicity"]["verdict"] == "uniform"
    assert body["canonical"].startswith("{")
    assert rep["system"]["spec_sha256"] == sf.spec_hash(isentropic_spec)


def test_analyze_deterministic(client, isentropic_spec):
    a = client.post("/analyze", json={"spec_text": isentropic_spec, "seed": 5}).json()
    b = client.post("/analyze", json={"spec_text": isentropic_spec, "seed": 5}).json()
    assert a["canonical"] == b["canonical"]


def test_analyze_rejects_malformed_spec(client):
    resp = client.post("/analyze", json={"spec_text": "[system]\nkind = 7\n"})
    assert resp.status_code == 422
    assert resp.json()["kind"] == "spec"


def test_analyze_numeric_error(client):
    text = """
[system]
name = "bad"
kind = "zsystem-eos"
n = 2
m = 2

[zeta]
expr = "z1 + 0.5*z2^2"

[sigma]
expr = "z1"
bracket = [1e-6, 0.001]

[domain]
lower = [3.0, -0.5]
upper = [4.0, 0.5]
"""
    resp = client.post("/analyze", json={"spec_text": text})
    # the scale root escapes the configured bracket
    assert resp.status_code in (409, 422)
    assert resp.json()["kind"] in ("numeric", "spec")


def test_verify_endpoint(client, isentropic_spec):
    resp = client.post("/verify", json={"spec_text": isentropic_spec, "samples": 128})
    assert resp.status_code == 200
    body = resp.json()
    assert body["passed"] is True
    names = {c["name"] for c in body["checks"]}
    assert "gradient-structure" in names and "expect-richness" in names


def test_verify_detects_tampering(client, isentropic_spec):
    # a coefficient change would be class-preserving (a linear rescaling of
    # z3); a quartic term genuinely moves the system out of the class
    tampered = isentropic_spec.replace("z1 + 0.5*z2^2 + 0.5*z3^2",
                                       "z1 + 0.5*z2^2 + 0.5*z3^4", 1)
    assert tampered != isentropic_spec
    resp = client.post("/verify", json={"spec_text": tampered, "samples": 128})
    assert resp.status_code == 200
    body = resp.json()
    assert body["passed"] is False
    failing = {c["name"] for c in body["checks"] if not c["passed"]}
    assert failing & {"expect-dim-zero", "expect-flags", "expect-verdict"}


def test_transform_endpoint_roundtrip(client, isentropic_spec):
    resp = client.post("/transform", json={"spec_text": isentropic_spec,
                                           "op": "reduce", "c_e": 0.0})
    assert resp.status_code == 200
    reduced = resp.json()["spec_text"]
    sys_ = sf.load(reduced)
    assert sys_.n == 2
    assert "source-hash" in reduced

    resp2 = client.post("/analyze", json={"spec_text": reduced})
    assert resp2.json()["report"]["lambda"]["L"] == 2


def test_transform_missing_params(client, isentropic_spec):
    resp = client.post("/transform", json={"spec_text": isentropic_spec, "op": "qu"})
    assert resp.status_code == 422


def test_couple_strategy_b(client):
    s1 = sf.emit(cat.euler_isentropic(3, gamma=1.4))
    s2 = sf.emit(cat.euler_isentropic(3, gamma=5 / 3))
    resp = client.post("/couple", json={"spec_texts": [s1, s2], "strategy": "B",
                                        "rank1": [1.0, 1.0]})
    assert resp.status_code == 200
    coupled = sf.load(resp.json()["spec_text"])
    assert coupled.n == 6 and coupled.m == 3
    assert coupled.recipe["mixing"] is not None


def test_couple_strategy_a_explicit_constituent(client):
    text = """
[system]
name = "toy"
kind = "zsystem"
n = 2
m = 2

[zeta]
expr = "z1 + 0.5*z2^2"

[xi]
expr = "2 + z1"

[domain]
lower = [0.5, -1]
upper = [2, 1]

[hyperbolicity]
e_H = [1, 0]
"""
    lam = [1.0 / np.sqrt(2), -1.0 / np.sqrt(2)]
    resp = client.post("/couple", json={"spec_texts": [text], "strategy": "A",
                                        "copies": 2, "e": [0.0, 1.0], "lam": lam})
    assert resp.status_code == 200
    coupled = sf.load(resp.json()["spec_text"])
    assert coupled.n == 3 and coupled.kind == "explicit"


def test_catalog_endpoint(client):
    resp = client.get("/catalog/euler-extended", params={"n": 3})
    assert resp.status_code == 200
    sys_ = sf.load(resp.json()["spec_text"])
    assert sys_.n == 3
    assert "expect" in sys_.recipe

    resp2 = client.get("/catalog/not-a-system")
    assert resp2.status_code == 422
