"""Session-oriented HTTP/JSON API for the full plant-vs-defend workflow.

Sessions are in-memory and isolated; within one session at most one mutating
call runs at a time (a second one is rejected with 409, not queued).  All
doubles cross the wire as shortest round-trip decimal strings so clients can
display them without lossy re-formatting.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse

from . import backdoor, datagen, defense, nn
from .checksum import ChecksumConfig
from .errors import (ConcurrentMutation, CsumnetError, Exhausted,
                     UnknownSession)

_STATUS = {
    "unknown_session": 404,
    "concurrent_mutation": 409,
}


def _f(v) -> float:
    """Accept a JSON number or a round-trip decimal string."""
    return float(v)


def _cfg_from(payload: dict | None, base: ChecksumConfig) -> ChecksumConfig:
    if not payload:
        return base
    d = base.to_json()
    d.update({k: payload[k] for k in d if k in payload})
    return ChecksumConfig.from_json(d)


@dataclass
class Session:
    id: str
    dataset: datagen.Dataset | None = None
    model: nn.Model | None = None
    memory: nn.ModelMemory | None = None
    cfg: ChecksumConfig = field(default_factory=ChecksumConfig)
    mask: tuple = ("x", "y")
    last_histogram: backdoor.ChecksumHistogram | None = None
    last_distances: defense.DistanceHistograms | None = None
    last_trace: backdoor.BacktrackTrace | None = None
    created: float = field(default_factory=time.time)
    modified: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _dataset_json(d: datagen.Dataset) -> dict:
    pts = [{"x": repr(p.x), "y": repr(p.y), "label": p.label,
            "split": "train" if i < d.n_train else "test"}
           for i, p in enumerate(d.points)]
    return {"n": len(d.points), "n_train": d.n_train, "points": pts}


def create_app(session_ttl: float | None = None,
               default_cfg: ChecksumConfig | None = None) -> FastAPI:
    session_ttl = session_ttl or float(os.environ.get("CSUMNET_SESSION_TTL", 0) or 0)
    default_cfg = default_cfg or ChecksumConfig()
    app = FastAPI(title="csumnet")
    sessions: dict[str, Session] = {}

    def get_session(sid: str) -> Session:
        if session_ttl:
            cutoff = time.time() - session_ttl
            for k in [k for k, s in sessions.items() if s.modified < cutoff]:
                sessions.pop(k, None)
        s = sessions.get(sid)
        if s is None:
            raise UnknownSession(f"no session {sid}")
        return s

    @contextmanager
    def mutating(s: Session):
        if not s.lock.acquire(blocking=False):
            raise ConcurrentMutation("another mutating call is in flight")
        try:
            yield
            s.modified = time.time()
        finally:
            s.lock.release()

    @app.exception_handler(CsumnetError)
    async def _handle(request: Request, exc: CsumnetError):
        return JSONResponse(status_code=_STATUS.get(exc.code, 400),
                            content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(ValueError)
    async def _handle_value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content={"code": "invalid_value", "message": str(exc)})

    @app.post("/sessions")
    async def create_session():
        sid = uuid.uuid4().hex
        sessions[sid] = Session(id=sid, cfg=default_cfg)
        return {"id": sid}

    @app.post("/sessions/{sid}/dataset")
    async def make_dataset(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            d = datagen.generate(payload["pattern"], int(payload["n"]),
                                 noise=float(payload.get("noise", 0.0)),
                                 seed=int(payload.get("seed", 0)),
                                 split=float(payload.get("split", 0.5)))
            trojan = float(payload.get("trojan", 0.0))
            if trojan > 0:
                d = datagen.poison(d, trojan, seed=int(payload.get("seed", 0)))
            s.dataset = d
        return _dataset_json(d)

    @app.get("/sessions/{sid}/dataset")
    async def read_dataset(sid: str):
        s = get_session(sid)
        if s.dataset is None:
            raise CsumnetError("no dataset in session")
        return _dataset_json(s.dataset)

    @app.post("/sessions/{sid}/train")
    async def train(sid: str, payload: dict):
        s = get_session(sid)
        if s.dataset is None:
            raise CsumnetError("generate a dataset before training")
        spec_in = payload.get("spec", {})
        mask = datagen.normalize_mask(tuple(spec_in.get("features", s.mask)))
        kind = spec_in.get("activation", {"kind": nn.RELU})
        cfg = _cfg_from(kind.get("checksum_config"), s.cfg)
        spec = nn.make_spec(len(mask), spec_in.get("hidden_layers", [4]),
                            kind.get("kind", nn.RELU), cfg)
        h = payload.get("hyper", {})
        hyper = nn.Hyper(lr=float(h.get("lr", 0.03)),
                         batch=int(h.get("batch", 10)),
                         epochs=int(h.get("epochs", 100)),
                         seed=int(h.get("seed", 0)))
        if not s.lock.acquire(blocking=False):
            raise ConcurrentMutation("another mutating call is in flight")

        def stream():
            try:
                model = nn.init(spec, seed=hyper.seed)
                d = s.dataset
                fvs = [datagen.features(p, mask) for p in d.train]
                ys = [p.label for p in d.train]
                rng = np.random.default_rng(hyper.seed)
                for epoch in range(hyper.epochs):
                    order = rng.permutation(len(fvs))
                    for start in range(0, len(order), hyper.batch):
                        idx = order[start:start + hyper.batch]
                        gw, gb, _ = nn.loss_gradients(
                            model, [fvs[i] for i in idx], [ys[i] for i in idx])
                        for l in range(len(model.weights)):
                            model.weights[l] -= hyper.lr * gw[l]
                            model.biases[l] -= hyper.lr * gb[l]
                    loss = nn.batch_loss(model, fvs, ys)
                    yield json.dumps({"epoch": epoch, "loss": repr(loss)}) + "\n"
                s.model = model
                s.mask = mask
                if spec.activations and spec.activations[0].kind == nn.RELU_CSUM:
                    s.cfg = cfg
                acc = nn.accuracy(model, d.train, mask) if d.train else None
                yield json.dumps({"done": True, "train_accuracy": acc}) + "\n"
                s.modified = time.time()
            finally:
                s.lock.release()

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.post("/sessions/{sid}/model/store")
    async def model_store(sid: str):
        s = get_session(sid)
        with mutating(s):
            if s.model is None:
                raise CsumnetError("no model to store")
            s.memory = nn.store(s.model)
        return {"stored": True}

    @app.post("/sessions/{sid}/model/recall")
    async def model_recall(sid: str):
        s = get_session(sid)
        with mutating(s):
            if s.memory is None:
                raise CsumnetError("model memory is empty")
            if s.model is None:
                raise CsumnetError("no target model; train or switch activation first")
            s.model = nn.recall(s.memory, s.model)
        return {"recalled": True}

    @app.post("/sessions/{sid}/activation")
    async def set_activation(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            if s.model is None:
                raise CsumnetError("no model in session")
            kind = payload["kind"]
            cfg = _cfg_from(payload.get("checksum_config"), s.cfg)
            if kind == nn.RELU_CSUM:
                s.cfg = cfg
            s.model = s.model.with_activation(
                kind, cfg if kind == nn.RELU_CSUM else None)
        return {"kind": kind}

    @app.post("/sessions/{sid}/attack/signature")
    async def attack_signature(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            if s.dataset is None:
                raise CsumnetError("no dataset in session")
            cfg = _cfg_from(payload, s.cfg)
            s.cfg = cfg
            before = [p.label for p in s.dataset.test]
            s.dataset, hist = backdoor.signature_attack(s.dataset, cfg)
            flipped = [i for i, (a, p) in enumerate(zip(before, s.dataset.test))
                       if a != p.label]
            s.last_histogram = hist
        return {"flipped": flipped, "histogram": hist.to_json()}

    @app.post("/sessions/{sid}/attack/backtrack")
    async def attack_backtrack(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            if s.model is None:
                raise CsumnetError("no model in session")
            if "point_index" in payload:
                if s.dataset is None:
                    raise CsumnetError("no dataset in session")
                p = s.dataset.points[int(payload["point_index"])]
            else:
                p = datagen.LabeledPoint(_f(payload["x"]), _f(payload["y"]), 1)
            trace = backdoor.backtrack_trigger(s.model, p, s.mask)
            s.last_trace = trace
        return trace.to_json()

    @app.post("/sessions/{sid}/attack/random_search")
    async def attack_random_search(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            if s.model is None:
                raise CsumnetError("no model in session")
            budget = int(payload.get("budget", 1_000_000))
            seed = int(payload.get("seed", 0))
            warning = None
            cfg = next((a.csum_cfg for a in s.model.spec.activations
                        if a.kind == nn.RELU_CSUM), s.cfg)
            if cfg.m >= backdoor.INTERACTIVE_M_LIMIT:
                warning = (f"m={cfg.m} is not interactive; expected attempts "
                           f"grow as m^n_1")
            try:
                r = backdoor.random_search_guaranteed(s.model, budget, seed)
            except Exhausted:
                return {"exhausted": True, "budget": budget, "warning": warning}
        return {"x": repr(r["x"]), "y": repr(r["y"]),
                "attempts": r["attempts"], "warning": warning}

    @app.post("/sessions/{sid}/defense/histograms")
    async def defense_histograms(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            if s.dataset is None:
                raise CsumnetError("no dataset in session")
            delta_r = float(payload.get("delta_r", defense.DEFAULT_DELTA_R))
            h = defense.pairwise_histograms(s.dataset.train, delta_r)
            s.last_distances = h
            radius = defense.select_radius(h)
        return {"histograms": h.to_json(), "recommended_radius": repr(radius)}

    @app.post("/sessions/{sid}/defense/robustify")
    async def defense_robustify(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            if s.dataset is None:
                raise CsumnetError("no dataset in session")
            if "R" in payload and payload["R"] is not None:
                radius = _f(payload["R"])
            else:
                h = s.last_distances or defense.pairwise_histograms(s.dataset.train)
                radius = defense.select_radius(h)
            corrected, report = defense.robustify(
                s.dataset.train, s.dataset.test, radius)
            s.dataset = datagen.Dataset(s.dataset.train + corrected,
                                        s.dataset.n_train, s.dataset.seed)
        return report.to_json()

    @app.get("/sessions/{sid}/predict")
    async def predict(sid: str, x: str = Query(...), y: str = Query(...)):
        s = get_session(sid)
        if s.model is None:
            raise CsumnetError("no model in session")
        p = datagen.LabeledPoint(_f(x), _f(y), 1)
        trace = nn.forward(s.model, datagen.features(p, s.mask))
        return {"label": trace.label, "output": repr(trace.output)}

    @app.get("/sessions/{sid}/boundary")
    async def boundary(sid: str, grid: int = 25):
        s = get_session(sid)
        if s.model is None:
            raise CsumnetError("no model in session")
        if grid < 2 or grid > 400:
            raise ValueError("grid must be in [2, 400]")
        labels, outputs = [], []
        step = 2 * datagen.DOMAIN / (grid - 1)
        for gy in range(grid):
            row_l, row_o = [], []
            for gx in range(grid):
                p = datagen.LabeledPoint(-datagen.DOMAIN + gx * step,
                                         -datagen.DOMAIN + gy * step, 1)
                t = nn.forward(s.model, datagen.features(p, s.mask))
                row_l.append(t.label)
                row_o.append(repr(t.output))
            labels.append(row_l)
            outputs.append(row_o)
        return {"grid": grid, "labels": labels, "outputs": outputs}

    @app.get("/sessions/{sid}/model")
    async def get_model(sid: str):
        s = get_session(sid)
        if s.model is None:
            raise CsumnetError("no model in session")
        return nn.model_to_json(s.model)

    @app.put("/sessions/{sid}/model")
    async def put_model(sid: str, payload: dict):
        s = get_session(sid)
        with mutating(s):
            s.model = nn.model_from_json(payload)
            if s.model.spec.n_inputs == 2:
                s.mask = ("x", "y")
        return {"loaded": True}

    app.state.sessions = sessions
    return app


app = create_app()
