"""
Head Benchmark
Forward-only latency of the NOAH head against the GAP head on identical
geometry, measured for the head alone and end-to-end behind a pointwise
backbone. Timings vary run to run; the logits checksums must not.
"""

import hashlib
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd

from autodiff.tensor_ops import STORAGE_DTYPE
from backbones.toy_backbone import BackboneConfig
from heads.gap_head import gap_forward, init_gap
from heads.noah_config import GapConfig, NoahConfig
from heads.noah_head import init_noah, noah_forward
from training.model import build_model
from utils.errors import ConfigurationError

SCOPES = ("head", "end_to_end")
E2E_HIDDEN_WIDTH = 16


def logits_checksum(logits: np.ndarray) -> str:
    """SHA-256 of the logits as little-endian float32"""
    return hashlib.sha256(np.ascontiguousarray(logits, dtype="<f4").tobytes()).hexdigest()


def time_call(fn: Callable[[], np.ndarray], repeats: int, warmup: int) -> Tuple[pd.Series, np.ndarray]:
    """Wall time of `repeats` calls after `warmup` discarded ones, plus the last output"""
    if repeats < 1:
        raise ConfigurationError(f"repeats must be >= 1, got {repeats}")
    if warmup < 0:
        raise ConfigurationError(f"warmup must be >= 0, got {warmup}")
    for _ in range(warmup):
        fn()
    samples = []
    output = None
    for _ in range(repeats):
        started = time.perf_counter()
        output = fn()
        samples.append(time.perf_counter() - started)
    return pd.Series(samples, name="seconds"), output


@dataclass(frozen=True)
class BenchGeometry:
    channels: int = 512
    height: int = 7
    width: int = 7
    batch: int = 32
    repeats: int = 20
    warmup: int = 5
    seed: int = 0

    def __post_init__(self):
        for name in ("channels", "height", "width", "batch"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.repeats < 1:
            raise ConfigurationError(f"repeats must be >= 1, got {self.repeats}")
        if self.warmup < 0:
            raise ConfigurationError(f"warmup must be >= 0, got {self.warmup}")


class HeadBenchmark:
    """Time NOAH and GAP heads with the same seeded inputs"""

    def __init__(self, noah_config: NoahConfig, geometry: BenchGeometry, gap_bias: bool = False):
        noah_config.split_sizes(geometry.channels)
        self.noah_config = noah_config
        self.gap_config = GapConfig(num_classes=noah_config.num_classes, use_bias=gap_bias)
        self.geometry = geometry
        self.results: List[Dict] = []

    def _head_calls(self) -> Dict[str, Callable[[], np.ndarray]]:
        g = self.geometry
        rng = np.random.default_rng(g.seed)
        features = rng.standard_normal((g.batch, g.height, g.width, g.channels)).astype(STORAGE_DTYPE)
        noah = init_noah(self.noah_config, g.channels, g.seed)
        gap = init_gap(self.gap_config, g.channels, g.seed)
        return {
            "noah": lambda: noah_forward(features, noah)[0],
            "gap": lambda: gap_forward(features, gap)[0],
        }

    def _end_to_end_calls(self) -> Dict[str, Callable[[], np.ndarray]]:
        g = self.geometry
        rng = np.random.default_rng([g.seed, 1])
        images = rng.random((g.batch, g.height, g.width, 1)).astype(STORAGE_DTYPE)
        backbone = BackboneConfig(kind="pointwise", widths=(E2E_HIDDEN_WIDTH, g.channels), seed=g.seed)
        models = {
            "noah": build_model(backbone, self.noah_config, g.seed),
            "gap": build_model(backbone, self.gap_config, g.seed),
        }
        return {kind: (lambda model=model: model.forward(images)[0]) for kind, model in models.items()}

    def run(self, verbose: bool = False) -> pd.DataFrame:
        """One row per (scope, head): mean/median/min seconds, FPS and checksum"""
        g = self.geometry
        self.results = []
        for scope, calls in (("head", self._head_calls()), ("end_to_end", self._end_to_end_calls())):
            for kind, fn in calls.items():
                if verbose:
                    print(f"  ⏱️ {scope:<10} {kind.upper():<4} {g.warmup} warmup + {g.repeats} timed runs")
                seconds, logits = time_call(fn, g.repeats, g.warmup)
                self.results.append({
                    "scope": scope,
                    "head": kind,
                    "mean_s": float(seconds.mean()),
                    "median_s": float(seconds.median()),
                    "min_s": float(seconds.min()),
                    "fps": g.batch / float(seconds.median()) if seconds.median() > 0 else float("inf"),
                    "checksum": logits_checksum(logits),
                })
        return self.to_frame()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.results, columns=["scope", "head", "mean_s", "median_s", "min_s", "fps", "checksum"])

    def overhead_percent(self, scope: str = "head") -> float:
        """(t_noah - t_gap) / t_gap * 100 on median wall time"""
        frame = self.to_frame().set_index(["scope", "head"])
        noah, gap = frame.loc[(scope, "noah"), "median_s"], frame.loc[(scope, "gap"), "median_s"]
        return float((noah - gap) / gap * 100.0) if gap > 0 else float("nan")

    def summary(self) -> Dict:
        """Flat key -> value view used for key=value output and the CSV row"""
        g = self.geometry
        row = {
            "channels": g.channels, "height": g.height, "width": g.width,
            "num_classes": self.noah_config.num_classes, "groups": self.noah_config.num_groups,
            "key_ratio": str(self.noah_config.ratio), "batch": g.batch,
            "repeats": g.repeats, "warmup": g.warmup,
        }
        for result in self.results:
            stem = f"{result['head']}_{result['scope']}"
            for field_name in ("mean_s", "median_s", "min_s", "fps", "checksum"):
                row[f"{stem}_{field_name}"] = result[field_name]
        for scope in SCOPES:
            row[f"{scope}_overhead_percent"] = self.overhead_percent(scope)
        row["overhead_percent"] = row["head_overhead_percent"]
        return row

    def csv_row(self) -> pd.DataFrame:
        return pd.DataFrame([self.summary()])


if __name__ == "__main__":
    bench = HeadBenchmark(NoahConfig(num_classes=100), BenchGeometry(repeats=5, warmup=1))
    print(bench.run(verbose=True).to_string(index=False))
    print(f"📊 head overhead: {bench.overhead_percent('head'):.2f}%")
