import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from mirrorgame import PhasePDF, synth_signature
from mirrorgame.experiments import TrialAnalysis
from mirrorgame.liveplay import SessionConfig
from mirrorgame.server import create_app, session_presets


@pytest.fixture()
def client():
    sig = synth_signature(seed=7, duration=5.0, rate=50.0)
    presets = session_presets(sig, period=0.02, max_duration=30.0)
    app = create_app(presets=presets)
    with TestClient(app) as tc:
        yield tc


def send(ws, obj):
    ws.send_text(json.dumps(obj) + "\n")


def recv(ws):
    return json.loads(ws.receive_text())


class TestHandshake:
    def test_hello_ready(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, {"type": "hello", "config_preset": "default"})
            msg = recv(ws)
            assert msg["type"] == "ready"
            assert msg["T"] == 0.02
            assert msg["domain"] == [-0.5, 0.5]
            send(ws, {"type": "stop"})

    def test_unknown_preset(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, {"type": "hello", "config_preset": "dyad99.vp9"})
            msg = recv(ws)
            assert msg["type"] == "error" and msg["code"] == "unknown_preset"

    def test_requires_hello_first(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, {"type": "hp", "t": 0.0, "x": 0.1})
            msg = recv(ws)
            assert msg["type"] == "error" and msg["code"] == "expected_hello"

    def test_weight_presets_available(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, {"type": "hello", "config_preset": "dyad5.vp1"})
            assert recv(ws)["type"] == "ready"
            send(ws, {"type": "stop"})


class TestSessionFlow:
    def test_vp_stream_and_short_stop(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, {"type": "hello", "config_preset": "default"})
            assert recv(ws)["type"] == "ready"
            deadline = time.time() + 5.0
            vps = []
            sent = 0
            while len(vps) < 5 and time.time() < deadline:
                send(ws, {"type": "hp", "t": sent * 0.02, "x": 0.2})
                sent += 1
                msg = recv(ws)
                if msg["type"] == "vp":
                    vps.append(msg)
            assert len(vps) >= 5
            ts = [m["t"] for m in vps]
            assert all(b > a for a, b in zip(ts, ts[1:]))
            assert all(-0.5 <= m["x"] <= 0.5 for m in vps)
            send(ws, {"type": "stop"})
            # shorter than the 10 s reporting minimum
            while True:
                msg = recv(ws)
                if msg["type"] != "vp":
                    break
            assert msg["type"] == "error" and msg["code"] == "too_short"

    def test_bad_message_reported(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, {"type": "hello", "config_preset": "default"})
            assert recv(ws)["type"] == "ready"
            ws.send_text("this is not json\n")
            msg = recv(ws)
            assert msg["type"] == "error" and msg["code"] == "bad_message"
            send(ws, {"type": "hp"})  # missing x
            msg = recv(ws)
            assert msg["type"] == "error" and msg["code"] == "bad_message"
            send(ws, {"type": "stop"})

    def test_report_serialization(self, monkeypatch):
        # a canned analysis stands in for the 10 s session a real report needs
        canned = TrialAnalysis(
            e_p=0.12,
            emd_sigma1_nu1=0.05,
            emd_sigma2_nu2=None,
            emd_nu1_nu2=0.03,
            phase_pdf=PhasePDF(z=np.array([-np.pi, 0.0, np.pi]), p=np.array([0.1, 0.3, 0.1])),
            mds=np.array([[0.0, 0.1], [0.2, -0.1], [-0.2, 0.0]]),
            mds_labels=["sigma_vp", "nu", "mu"],
        )
        import mirrorgame.server as server_mod

        monkeypatch.setattr(server_mod, "session_report", lambda state: canned)
        sig = synth_signature(seed=7, duration=5.0, rate=50.0)
        app = create_app(presets=session_presets(sig, period=0.02, max_duration=30.0))
        with TestClient(app) as tc:
            with tc.websocket_connect("/ws") as ws:
                send(ws, {"type": "hello", "config_preset": "default"})
                assert recv(ws)["type"] == "ready"
                send(ws, {"type": "hp", "t": 0.0, "x": 0.1})
                send(ws, {"type": "stop"})
                while True:
                    msg = recv(ws)
                    if msg["type"] != "vp":
                        break
                assert msg["type"] == "report"
                for key in ("e_p", "emd_sigma1_nu1", "emd_sigma2_nu2", "emd_nu1_nu2", "phase_pdf", "mds"):
                    assert key in msg
                assert msg["e_p"] == 0.12
                assert msg["mds_labels"] == ["sigma_vp", "nu", "mu"]
                assert msg["phase_pdf"]["grid"][0] == -np.pi
