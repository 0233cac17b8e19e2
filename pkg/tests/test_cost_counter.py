import numpy as np
import pytest

from heads.cost_counter import CostReport, audit_params, count_cost, count_gap_cost, noah_cost_formula
from heads.gap_head import init_gap
from heads.noah_config import GapConfig, NoahConfig
from heads.noah_head import init_noah
from utils.errors import ConfigurationError, InvariantViolation


def test_large_head_costs():
    report = count_cost(NoahConfig(num_classes=1000, num_groups=4, key_ratio=1 / 8), 2048, 7, 7)
    assert report.params == 2_048_000
    assert report.madds == 100_352_000 + 392_000 + 1_000 == 100_745_000
    assert (report.params, report.madds) == noah_cost_formula(2048, 7, 7, 1000, 4)


def test_formula_at_the_degenerate_point():
    assert noah_cost_formula(1, 1, 1, 1, 1) == (1, 4)
    with pytest.raises(ConfigurationError):
        noah_cost_formula(0, 1, 1, 1, 1)


def test_breakdown_is_itemized():
    report = count_cost(NoahConfig(num_classes=10, num_groups=4), 64, 3, 3)
    assert report.params_breakdown == {f"block{n}": 160 for n in range(4)}
    assert report.madds_breakdown == {"embeddings": 9 * 640, "hadamard": 360, "merge": 360, "classifier": 10}
    assert "noah_madds.merge=360" in report.as_lines("noah")


def test_bias_adds_two_n_m_params():
    plain = count_cost(NoahConfig(num_classes=10, num_groups=4), 64, 5, 5)
    biased = count_cost(NoahConfig(num_classes=10, num_groups=4, use_bias=True), 64, 5, 5)
    assert biased.params - plain.params == 80
    assert biased.params_breakdown["bias"] == 80
    head = init_noah(NoahConfig(num_classes=10, num_groups=4, use_bias=True), 64, seed=0)
    assert audit_params(head) - audit_params(init_noah(NoahConfig(num_classes=10, num_groups=4), 64, seed=0)) == 80


def test_gap_costs():
    report = count_gap_cost(GapConfig(num_classes=1000), 2048, 7, 7)
    assert report.params == 2_048_000
    assert report.madds == 7 * 7 * 2048 + 2048 * 1000
    assert count_gap_cost(GapConfig(num_classes=1000, use_bias=True), 2048, 7, 7).params == 2_049_000
    assert audit_params(init_gap(GapConfig(num_classes=10), 64, seed=0)) == 640


def test_noah_and_gap_store_the_same_number_of_weights():
    noah = init_noah(NoahConfig(num_classes=10, num_groups=4), 64, seed=0)
    gap = init_gap(GapConfig(num_classes=10), 64, seed=0)
    assert audit_params(noah) == audit_params(gap) == 640


def test_audit_matches_count_over_random_configs(rng):
    for _ in range(50):
        groups = int(rng.choice([1, 2, 4]))
        config = NoahConfig(
            num_classes=int(rng.integers(2, 7)),
            num_groups=groups,
            key_ratio=float(rng.choice([1 / 8, 1 / 4, 1 / 2])),
            shared_single_attention=bool(rng.integers(2)),
            second_split=bool(rng.integers(2)),
            use_bias=bool(rng.integers(2)),
        )
        channels = groups * int(rng.integers(8, 25))
        report = count_cost(config, channels, 3, 3)
        assert audit_params(init_noah(config, channels, seed=0)) == report.params
        if not (config.use_bias or config.shared_single_attention or not config.second_split):
            assert report.params == config.num_classes * channels


def test_variant_param_counts():
    no_split = count_cost(NoahConfig(num_classes=10, num_groups=4, second_split=False), 64, 3, 3)
    assert no_split.params == 2 * 10 * 64
    shared = count_cost(NoahConfig(num_classes=10, num_groups=4, shared_single_attention=True), 64, 3, 3)
    assert shared.params == 64 + 10 * 64


def test_inconsistent_report_is_rejected():
    with pytest.raises(InvariantViolation):
        CostReport(params=5, madds=0, params_breakdown={"weight": 4})
    with pytest.raises(InvariantViolation):
        CostReport(params=0, madds=3, madds_breakdown={"linear": 2})


def test_invalid_geometry_is_rejected():
    with pytest.raises(ConfigurationError, match="not divisible"):
        count_cost(NoahConfig(num_classes=10, num_groups=4), 10, 7, 7)
    with pytest.raises(ConfigurationError):
        count_cost(NoahConfig(num_classes=10, num_groups=4), 64, 0, 7)
    with pytest.raises(ConfigurationError):
        count_gap_cost(GapConfig(num_classes=10), 0, 7, 7)
