"""HTTP adapter for the perception provider roles.

One service, four model endpoints plus health:

    GET  /health         -> {"status", "mode", "proto"}
    POST /pose_estimate  -> relative pose + monocular reference depth
    POST /trajectory     -> frame-0-relative camera deltas
    POST /human_mesh     -> body parameters + 2D/3D keypoints
    POST /segment        -> person mask

Every response carries the protocol version header ``x-sidecar-proto: 1``.
Request/response bodies are JSON; rasters travel in the engine's documented
base64 container (magic ``DFR1``: dtype string, uint8 ndim, uint64 shape,
little-endian C-order payload).

Stub mode answers with the engine's own deterministic mock math, so a stub
sidecar and the in-process mock suite are field-identical on the shared test
vectors.  Real mode dispatches to injected handlers (actual model wrappers);
without one bound the endpoint reports 501.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from dramaforge.providers.mocks import (
    MockGeometryModel,
    MockHumanModel,
    MockSegmentation,
    MockTrajectoryModel,
    WorldState,
)
from dramaforge.providers.vectors import ENDPOINT_ROLES

PROTO_VERSION = "1"

_REQUIRED_FIELDS = {
    "pose_estimate": ("first_frame", "reference", "mask", "context"),
    "trajectory": ("n_frames",),
    "human_mesh": ("context",),
    "segment": ("context",),
}


@dataclass
class SidecarConfig:
    mode: str = "stub"  # stub | real
    seed: int = 0
    real_handlers: dict[str, Callable[[dict], dict]] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("stub", "real"):
            raise ValueError(f"unknown sidecar mode {self.mode!r}")


def _stub_providers(seed: int) -> dict[str, Callable[[dict], dict]]:
    state = WorldState(seed=seed)
    providers = {
        "pose_estimate": MockGeometryModel(seed, state),
        "trajectory": MockTrajectoryModel(seed, state),
        "human_mesh": MockHumanModel(seed, state),
        "segment": MockSegmentation(seed, state),
    }
    return {
        endpoint: (lambda body, p=provider, t=ENDPOINT_ROLES[endpoint][1]: p.handle({"task": t, **body}))
        for endpoint, provider in providers.items()
    }


def create_app(config: Optional[SidecarConfig] = None) -> FastAPI:
    config = config or SidecarConfig()
    app = FastAPI(title="drama-sidecar")
    handlers = _stub_providers(config.seed) if config.mode == "stub" else dict(config.real_handlers)

    @app.middleware("http")
    async def add_proto_header(request: Request, call_next):
        response = await call_next(request)
        response.headers["x-sidecar-proto"] = PROTO_VERSION
        return response

    @app.get("/health")
    def health():
        return {"status": "ok", "mode": config.mode, "proto": int(PROTO_VERSION)}

    def endpoint_for(name: str):
        async def run(request: Request):
            try:
                body = await request.json()
            except Exception:
                return JSONResponse({"error": "body must be JSON"}, status_code=400)
            missing = [f for f in _REQUIRED_FIELDS[name] if f not in body]
            if missing:
                return JSONResponse(
                    {"error": f"missing fields: {', '.join(missing)}"}, status_code=400
                )
            handler = handlers.get(name)
            if handler is None:
                return JSONResponse(
                    {"error": f"no real-model handler bound for {name}"}, status_code=501
                )
            try:
                return JSONResponse(handler(body))
            except (KeyError, ValueError, TypeError) as err:
                return JSONResponse({"error": f"malformed request: {err}"}, status_code=400)

        return run

    for name in _REQUIRED_FIELDS:
        app.add_api_route(f"/{name}", endpoint_for(name), methods=["POST"])
    return app


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="drama-sidecar")
    parser.add_argument("--mode", default="stub", choices=["stub", "real"])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8701)
    args = parser.parse_args(argv)
    import uvicorn

    uvicorn.run(create_app(SidecarConfig(mode=args.mode, seed=args.seed)), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
