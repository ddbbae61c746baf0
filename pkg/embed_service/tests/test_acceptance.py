"""Shape-contract acceptance: window counts, logits normalization, and
byte compatibility with the soundtrack evaluator's matrix reader."""

import numpy as np
from fastapi.testclient import TestClient

from embed_service.cli import embed_file_main
from embed_service.service import create_app

from conftest import pcm16_b64, tone


def test_shape_contract_90s_wav(wav_90s, tmp_path):
    # Spans 10 and 30 over the same 90 s input: 9 rows and 3 rows.
    for span, expected_rows in ((10.0, 9), (30.0, 3)):
        out = tmp_path / f"span{int(span)}.emb"
        rc = embed_file_main([str(wav_90s), str(out), "--span", str(span),
                              "--kind", "logits"])
        assert rc == 0

        # The files must parse in the primary component's reader with
        # matching header fields; that reader is the compatibility oracle.
        from storytrack.metrics import EmbeddingKind, read_embedding_file, softmax

        matrix, kind = read_embedding_file(out)
        assert kind is EmbeddingKind.LOGITS
        assert matrix.n == expected_rows
        assert matrix.dim == 16
        assert matrix.segment_span_s == span
        assert matrix.source_tag == "spectral-16"

        # LOGITS rows softmax-normalize to 1 within 1e-5.
        for row in matrix.rows:
            assert abs(float(softmax(row).probs.sum()) - 1.0) <= 1e-5


def test_endpoint_payload_matches_batch_file(wav_90s, tmp_path):
    out = tmp_path / "batch.emb"
    assert embed_file_main([str(wav_90s), str(out), "--span", "30"]) == 0

    client = TestClient(create_app(model_dir=None))
    response = client.post("/embed", json={
        "audio": pcm16_b64(tone(90.0)),
        "sample_rate_hz": 32000,
        "segment_span_s": 30.0,
        "kind": "embedding",
        "model_tag": "spectral-16",
    })
    assert response.status_code == 200
    assert response.content == out.read_bytes()


def test_span_ratio_row_counts(wav_90s, tmp_path):
    counts = {}
    for span in (10.0, 30.0):
        out = tmp_path / f"r{int(span)}.emb"
        assert embed_file_main([str(wav_90s), str(out), "--span", str(span)]) == 0
        import json

        header = json.loads(out.read_bytes().split(b"\n", 1)[0])
        counts[span] = header["n"]
    assert counts[10.0] == 3 * counts[30.0]


def test_evaluators_http_client_against_live_service():
    """The consumer's own HTTP provider, over a real socket, end to end."""
    import socket
    import threading
    import time

    import uvicorn

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    server = uvicorn.Server(uvicorn.Config(
        create_app(model_dir=None), host="127.0.0.1", port=port, log_level="error"
    ))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started and time.time() < deadline:
        time.sleep(0.05)
    assert server.started, "service did not come up"

    try:
        from storytrack.embeddings import HttpEmbeddingProvider
        from storytrack.gateway import ApiStyle, BackendConfig
        from storytrack.metrics import EmbeddingKind

        provider = HttpEmbeddingProvider(
            BackendConfig(endpoint_url=f"http://127.0.0.1:{port}/embed",
                          api_style=ApiStyle.TEXT_TO_MUSIC),
            model_tag="spectral-16",
        )
        matrix = provider.embed(tone(30.0), 32000, segment_span_s=10.0,
                                kind=EmbeddingKind.LOGITS)
        assert matrix.n == 3
        assert matrix.dim == 16
        assert matrix.source_tag == "spectral-16"
    finally:
        server.should_exit = True
        thread.join(timeout=5)
