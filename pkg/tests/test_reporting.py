import numpy as np
import pytest

from backbones.toy_backbone import BackboneConfig, BackboneLayer, BackboneParams
from data_collectors.quadrant_collector import QuadrantSpec, gen_quadrant
from heads.cost_counter import count_cost, count_gap_cost
from heads.noah_config import GapConfig, NoahConfig
from heads.noah_head import NoahHeadParams, PocaBlockParams
from reporting.attention_visualizer import AttentionVisualizer, quadrant_mass
from reporting.head_benchmark import BenchGeometry, HeadBenchmark, logits_checksum, time_call
from reporting.pgm import normalize_min_max, normalize_symmetric, quantize, read_pgm, write_pgm
from reporting.report_generator import ReportGenerator
from training.model import Model, build_model
from utils.errors import ConfigurationError, DataFormatError, IndexRangeError, UnsupportedHeadError

SMALL = BenchGeometry(channels=16, height=3, width=3, batch=4, repeats=2, warmup=1)


# PGM -----------------------------------------------------------------------

def test_min_max_normalization():
    np.testing.assert_allclose(normalize_min_max([[1.0, 3.0], [2.0, 5.0]]), [[0.0, 0.5], [0.25, 1.0]])
    np.testing.assert_array_equal(normalize_min_max(np.full((2, 2), 0.25)), 0.0)


def test_symmetric_normalization_keeps_zero_in_the_middle():
    np.testing.assert_allclose(normalize_symmetric([[-2.0, 0.0, 1.0]]), [[0.0, 0.5, 0.75]])
    np.testing.assert_array_equal(normalize_symmetric(np.zeros((2, 2))), 0.5)


def test_uniform_slice_gives_identical_pixels():
    pixels = quantize(normalize_min_max(np.full((4, 4), 1 / 16)))
    assert len(set(pixels.ravel().tolist())) == 1


def test_one_hot_slice_gives_a_single_white_pixel():
    attention = np.zeros((3, 4))
    attention[1, 2] = 1.0
    pixels = quantize(normalize_min_max(attention))
    assert pixels[1, 2] == 255
    assert pixels.sum() == 255


def test_write_then_read(tmp_path):
    pixels = np.arange(12, dtype=np.uint8).reshape(3, 4)
    path = write_pgm(tmp_path / "map.pgm", pixels)
    assert path.read_bytes().startswith(b"P5\n4 3\n255\n")
    np.testing.assert_array_equal(read_pgm(path), pixels)


def test_read_accepts_header_comments(tmp_path):
    path = tmp_path / "map.pgm"
    path.write_bytes(b"P5\n# exported\n2 1\n255\n\x00\xff")
    np.testing.assert_array_equal(read_pgm(path), [[0, 255]])


@pytest.mark.parametrize("raw", [b"P2\n1 1\n255\n\x00", b"P5\n1 1\n65535\n\x00", b"P5\n2 2\n255\n\x00", b"P5\n2"])
def test_read_rejects_bad_files(tmp_path, raw):
    path = tmp_path / "bad.pgm"
    path.write_bytes(raw)
    with pytest.raises(DataFormatError):
        read_pgm(path)


def test_write_needs_2d_bytes(tmp_path):
    with pytest.raises(DataFormatError):
        write_pgm(tmp_path / "a.pgm", np.zeros((2, 2), np.float32))
    with pytest.raises(DataFormatError):
        write_pgm(tmp_path / "a.pgm", np.zeros((2, 2, 1), np.uint8))


# attention maps ------------------------------------------------------------

def intensity_keyed_model() -> Model:
    """Position-blind model whose attention follows bright pixels"""
    backbone = BackboneParams(config=BackboneConfig(kind="pointwise", widths=(4,)), layers=[
        BackboneLayer(weight=np.ones((1, 4), np.float32), bias=np.zeros(4, np.float32))])
    config = NoahConfig(num_classes=8, num_groups=1, key_ratio=0.5)
    head = NoahHeadParams(config=config, channels=4, blocks=[PocaBlockParams(
        wk=np.full((2, 8), 20.0, np.float32), wv=np.ones((2, 8), np.float32))])
    return Model(backbone=backbone, head=head)


def test_quadrant_mass_splits_at_the_middle():
    grid = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(quadrant_mass(grid), [0 + 1 + 4 + 5, 2 + 3 + 6 + 7, 8 + 9 + 12 + 13, 10 + 11 + 14 + 15])


def test_attention_mass_lands_in_the_glyph_quadrant(tmp_path):
    batch = gen_quadrant(QuadrantSpec(noise=0.0), 8)
    visualizer = AttentionVisualizer(intensity_keyed_model(), tmp_path)
    attention = visualizer.compute_maps(batch.images)["attention"][0]
    for sample, label in enumerate(batch.labels):
        mass = quadrant_mass(attention[sample, :, :, label])
        assert int(np.argmax(mass)) == label % 4
        assert mass[label % 4] > 0.99


def test_export_writes_three_maps_per_pair(tmp_path):
    batch = gen_quadrant(QuadrantSpec(noise=0.0), 2)
    visualizer = AttentionVisualizer(intensity_keyed_model(), tmp_path / "maps")
    written = visualizer.export(batch.images, block=0, categories=[0, 5])
    assert len(written) == 12
    names = {path.name for path in written}
    assert {"attention_s1_n0_m5.pgm", "value_s1_n0_m5.pgm", "poca_s1_m5.pgm"} <= names
    for path in written:
        assert read_pgm(path).shape == (28, 28)


def test_export_defaults_to_each_label(tmp_path):
    batch = gen_quadrant(QuadrantSpec(noise=0.0), 3)
    written = AttentionVisualizer(intensity_keyed_model(), tmp_path).export(batch.images, 0, labels=batch.labels)
    assert {path.name for path in written if path.name.startswith("attention")} == {
        "attention_s0_n0_m0.pgm", "attention_s1_n0_m1.pgm", "attention_s2_n0_m2.pgm"}


def test_shared_attention_exports_its_single_map(tmp_path):
    model = build_model(BackboneConfig(widths=(4, 8)),
                        NoahConfig(num_classes=3, num_groups=2, shared_single_attention=True), seed=0)
    images = gen_quadrant(QuadrantSpec(), 1).images
    assert len(AttentionVisualizer(model, tmp_path).export(images, 1, categories=[2])) == 3


def test_gap_models_have_no_attention(tmp_path):
    model = build_model(BackboneConfig(widths=(4,)), GapConfig(num_classes=8), seed=0)
    with pytest.raises(UnsupportedHeadError):
        AttentionVisualizer(model, tmp_path)


@pytest.mark.parametrize("kwargs", [
    {"block": 1, "categories": [0]},
    {"block": 0, "categories": [8]},
    {"block": 0, "categories": [0], "samples": [2]},
    {"block": 0, "labels": [0, 1], "samples": [5]},
    {"block": 0},
])
def test_export_index_errors(tmp_path, kwargs):
    images = gen_quadrant(QuadrantSpec(), 2).images
    with pytest.raises(IndexRangeError):
        AttentionVisualizer(intensity_keyed_model(), tmp_path).export(images, **kwargs)


# benchmark -----------------------------------------------------------------

def test_benchmark_rows_and_checksums():
    config = NoahConfig(num_classes=5, num_groups=2)
    first = HeadBenchmark(config, SMALL)
    frame = first.run()
    assert list(zip(frame["scope"], frame["head"])) == [
        ("head", "noah"), ("head", "gap"), ("end_to_end", "noah"), ("end_to_end", "gap")]
    assert (frame["fps"] > 0).all()
    assert np.isfinite(first.overhead_percent("head"))
    second = HeadBenchmark(config, SMALL).run()
    assert list(second["checksum"]) == list(frame["checksum"])


def test_benchmark_summary_keys():
    bench = HeadBenchmark(NoahConfig(num_classes=5, num_groups=2), SMALL)
    bench.run()
    summary = bench.summary()
    assert summary["overhead_percent"] == summary["head_overhead_percent"]
    assert {"noah_head_fps", "gap_end_to_end_checksum", "end_to_end_overhead_percent"} <= set(summary)
    assert bench.csv_row().shape == (1, len(summary))


def test_benchmark_at_the_reference_geometry():
    bench = HeadBenchmark(NoahConfig(num_classes=100), BenchGeometry(channels=512, batch=32, repeats=2, warmup=1))
    bench.run()
    assert np.isfinite(bench.summary()["overhead_percent"])


def test_timing_arguments_are_checked():
    with pytest.raises(ConfigurationError):
        time_call(lambda: np.zeros(1), repeats=0, warmup=0)
    with pytest.raises(ConfigurationError):
        time_call(lambda: np.zeros(1), repeats=1, warmup=-1)
    with pytest.raises(ConfigurationError):
        BenchGeometry(repeats=0)
    with pytest.raises(ConfigurationError):
        HeadBenchmark(NoahConfig(num_classes=5), BenchGeometry(channels=10))


def test_time_call_returns_samples_and_last_output():
    calls = []
    seconds, output = time_call(lambda: calls.append(1) or np.array([len(calls)]), repeats=3, warmup=2)
    assert len(seconds) == 3 and len(calls) == 5
    assert output[0] == 5


def test_checksum_depends_on_values_only():
    logits = np.array([[1.0, 2.0]])
    assert logits_checksum(logits) == logits_checksum(logits.astype(np.float32))
    assert logits_checksum(logits) != logits_checksum(logits + 1)


# reports -------------------------------------------------------------------

def test_report_files(tmp_path):
    reports = ReportGenerator(tmp_path / "reports")
    noah = count_cost(NoahConfig(num_classes=10, num_groups=4), 64, 7, 7)
    gap = count_gap_cost(GapConfig(num_classes=10), 64, 7, 7)
    cost_path = reports.generate_cost_report({"C": 64, "M": 10}, noah, gap)
    assert "Params: 640" in cost_path.read_text(encoding="utf-8")

    eval_path = reports.generate_eval_report({"count": 8, "top1": 0.5, "top5": None}, "model.ckpt")
    text = eval_path.read_text(encoding="utf-8")
    assert "Top-1: 0.5000" in text and "Top-5" not in text

    bench = HeadBenchmark(NoahConfig(num_classes=5, num_groups=2), SMALL)
    frame = bench.run()
    bench_path = reports.generate_bench_report(frame, bench.summary())
    assert "END TO END" in bench_path.read_text(encoding="utf-8")
    csv_path = reports.save_csv_row(bench.csv_row(), "bench.csv")
    assert csv_path.read_text().splitlines()[0].startswith("channels,height,width")
