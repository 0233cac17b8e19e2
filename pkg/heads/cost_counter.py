"""
Exact parameter and multiply-add accounting for both heads
"""

from dataclasses import dataclass, field
from typing import Dict, Union

from heads.gap_head import GapHeadParams
from heads.noah_config import GapConfig, NoahConfig
from heads.noah_head import NoahHeadParams
from utils.errors import ConfigurationError, InvariantViolation


@dataclass
class CostReport:
    params: int
    madds: int
    params_breakdown: Dict[str, int] = field(default_factory=dict)
    madds_breakdown: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.params != sum(self.params_breakdown.values()):
            raise InvariantViolation(f"params {self.params} != breakdown {self.params_breakdown}")
        if self.madds != sum(self.madds_breakdown.values()):
            raise InvariantViolation(f"madds {self.madds} != breakdown {self.madds_breakdown}")

    def as_lines(self, prefix: str) -> list:
        lines = [f"{prefix}_params={self.params}", f"{prefix}_madds={self.madds}"]
        lines += [f"{prefix}_params.{key}={value}" for key, value in self.params_breakdown.items()]
        lines += [f"{prefix}_madds.{key}={value}" for key, value in self.madds_breakdown.items()]
        return lines


def _check_geometry(height: int, width: int):
    if height < 1 or width < 1:
        raise ConfigurationError(f"spatial extents must be >= 1, got H={height}, W={width}")


def noah_cost_formula(channels: int, height: int, width: int, classes: int, groups: int) -> tuple:
    """(params, madds) of the standard bias-free head in closed form"""
    if min(channels, height, width, classes, groups) < 1:
        raise ConfigurationError("cost formula needs positive C, H, W, M and N")
    pixels = height * width
    return classes * channels, pixels * classes * channels + 2 * pixels * classes * groups + classes


def count_cost(config: NoahConfig, channels: int, height: int, width: int) -> CostReport:
    """
    NOAH costs without bias: M*C params and H*W*M*C + 2*H*W*M*N + M MAdds
    (embeddings, Hadamard product plus merge, softmax classifier).
    """
    _check_geometry(height, width)
    plan = config.plan(channels)
    pixels = height * width
    classes, groups = config.num_classes, config.num_groups

    params_breakdown = {}
    for index in range(groups):
        params_breakdown[f"block{index}"] = plan.key_in * plan.key_out + plan.value_in * plan.value_out
    if config.use_bias:
        params_breakdown["bias"] = groups * (plan.key_out + plan.value_out)

    embedding = plan.key_in * plan.key_out + plan.value_in * plan.value_out
    madds_breakdown = {
        "embeddings": pixels * embedding * groups,
        "hadamard": pixels * classes * groups,
        "merge": pixels * classes * groups,
        "classifier": classes,
    }
    if config.use_bias:
        madds_breakdown["bias"] = pixels * (plan.key_out + plan.value_out) * groups

    return CostReport(params=sum(params_breakdown.values()), madds=sum(madds_breakdown.values()),
                      params_breakdown=params_breakdown, madds_breakdown=madds_breakdown)


def count_gap_cost(config: GapConfig, channels: int, height: int, width: int) -> CostReport:
    """GAP costs: M*C params; H*W*C pooling adds plus M*C linear MAdds"""
    _check_geometry(height, width)
    if channels < 1:
        raise ConfigurationError(f"channels must be >= 1, got {channels}")
    classes = config.num_classes
    params_breakdown = {"weight": channels * classes}
    madds_breakdown = {"pooling": height * width * channels, "linear": channels * classes}
    if config.use_bias:
        params_breakdown["bias"] = classes
        madds_breakdown["bias"] = classes
    return CostReport(params=sum(params_breakdown.values()), madds=sum(madds_breakdown.values()),
                      params_breakdown=params_breakdown, madds_breakdown=madds_breakdown)


def audit_params(params: Union[NoahHeadParams, GapHeadParams]) -> int:
    """Count the elements actually stored in the head"""
    return sum(int(array.size) for array in params.named_arrays().values())


if __name__ == "__main__":
    report = count_cost(NoahConfig(num_classes=1000, num_groups=4, key_ratio=1 / 8), 2048, 7, 7)
    print("\n".join(report.as_lines("noah")))
