"""Engine-wide configuration with flags > env > file > defaults precedence.

The config file is JSON; every section is optional and falls back to the
module defaults.  Environment variables override listen addresses only
(PALP_HTTP_ADDR, PALP_TCP_ADDR).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Tuple, Union

from .assessment import AssessmentConfig
from .core import QUARTET_BOUND
from .segmentation import SegmentationConfig

ENV_HTTP_ADDR = "PALP_HTTP_ADDR"
ENV_TCP_ADDR = "PALP_TCP_ADDR"


@dataclass(frozen=True)
class EngineConfig:
    segmentation: SegmentationConfig = SegmentationConfig()
    assessment: AssessmentConfig = AssessmentConfig()
    quartet_bound: int = QUARTET_BOUND
    reference_model: Optional[str] = None
    calibration: Optional[str] = None
    http_addr: str = "127.0.0.1:8077"
    tcp_addr: str = "127.0.0.1:9077"
    data_dir: str = "palp-data"

    def __post_init__(self) -> None:
        if self.quartet_bound <= 0 or self.quartet_bound % 4 != 0:
            raise ValueError("quartet_bound must be a positive multiple of 4")
        split_addr(self.http_addr)
        split_addr(self.tcp_addr)

    def to_dict(self) -> dict:
        return {
            "segmentation": self.segmentation.to_dict(),
            "assessment": self.assessment.to_dict(),
            "quartet_bound": self.quartet_bound,
            "reference_model": self.reference_model,
            "calibration": self.calibration,
            "listen": {"http": self.http_addr, "tcp": self.tcp_addr},
            "data_dir": self.data_dir,
        }


def split_addr(addr: str) -> Tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address {addr!r} must be host:port")
    return host, int(port)


def load_config(path: Optional[Union[str, Path]] = None) -> EngineConfig:
    """Build the engine config from an optional file plus env overrides."""
    cfg = EngineConfig()
    if path is not None:
        raw = json.loads(Path(path).read_text("utf-8"))
        listen = raw.get("listen", {})
        cfg = EngineConfig(
            segmentation=SegmentationConfig.from_dict(raw.get("segmentation", {})),
            assessment=AssessmentConfig.from_dict(raw.get("assessment", {})),
            quartet_bound=raw.get("quartet_bound", QUARTET_BOUND),
            reference_model=raw.get("reference_model"),
            calibration=raw.get("calibration"),
            http_addr=listen.get("http", cfg.http_addr),
            tcp_addr=listen.get("tcp", cfg.tcp_addr),
            data_dir=raw.get("data_dir", cfg.data_dir),
        )
    env_http = os.environ.get(ENV_HTTP_ADDR)
    env_tcp = os.environ.get(ENV_TCP_ADDR)
    if env_http:
        cfg = replace(cfg, http_addr=env_http)
    if env_tcp:
        cfg = replace(cfg, tcp_addr=env_tcp)
    return cfg
