"""
Tests for the Flask interface
"""

import pytest

from engine.pipeline import MultigramPipeline
from ui.app import create_app


@pytest.fixture
def client(words_path, worked_queries_path):
    app = create_app(words_path, "", worked_queries_path, mode="IPMS")
    app.config["TESTING"] = True
    return app.test_client()


def test_home_page(client):
    response = client.get("/")
    assert response.status_code == 200
    assert b"8 records, 58 characters." in response.data
    assert b"Index: IPMS, 3 grams." in response.data


def test_query_through_index(client):
    response = client.post("/query", data={"query": "(ex).{1,3}(ess)"})
    assert response.status_code == 200
    assert b"excess" in response.data
    assert b"exceed" not in response.data


def test_prosite_query(client):
    response = client.post("/query", data={"query": "P-R-x(1)-C-E-D-E", "syntax": "prosite"})
    assert response.status_code == 200
    assert b"precede" not in response.data
    response = client.post("/query", data={"query": "[pr]-r-x(1)-c-e", "syntax": "prosite"})
    assert response.status_code == 400


def test_bad_queries(client):
    assert client.post("/query", data={"query": ""}).status_code == 400
    response = client.post("/query", data={"query": "(ex).{3,1}(ess)"})
    assert response.status_code == 400
    assert b"QuerySyntaxError" in response.data


def test_dashboard_lists_grams(client):
    response = client.get("/dashboard")
    assert response.status_code == 200
    for g in (b"cede", b"ex", b"pr"):
        assert b"<code>" + g + b"</code>" in response.data


def test_record_pages(client):
    response = client.get("/record/7")
    assert response.status_code == 200
    assert b"excess" in response.data
    assert client.get("/record/99").status_code == 404
    assert client.get("/nowhere").status_code == 404


def test_app_loads_saved_index(words_path, worked_queries_path, tmp_path):
    pipeline = MultigramPipeline(words_path, worked_queries_path)
    pipeline.run("IPMS")
    pipeline.save_results(str(tmp_path))

    app = create_app(words_path, str(tmp_path / "index.mgidx"), "")
    assert app.config["PIPELINE"].index.grams == ("cede", "ex", "pr")
    assert app.config["PIPELINE"].queries == []
