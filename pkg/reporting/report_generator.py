"""
Automated Report Generator
Readable text reports and CSV rows for cost, benchmark and evaluation runs
"""

import sys
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

from heads.cost_counter import CostReport


class ReportGenerator:
    """Write reports into one output directory"""

    def __init__(self, reports_dir: str = "results"):
        self.reports_dir = Path(reports_dir)
        self.reports_dir.mkdir(parents=True, exist_ok=True)

    def _write(self, filename: str, report_lines: list) -> Path:
        filepath = self.reports_dir / filename
        filepath.write_text("\n".join(report_lines) + "\n", encoding="utf-8")
        print(f"✅ Report saved: {filepath}", file=sys.stderr)
        return filepath

    def _header(self, title: str) -> list:
        return [
            "=" * 60,
            title,
            "=" * 60,
            f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            "",
        ]

    def generate_cost_report(self, geometry: Dict, noah: CostReport, gap: CostReport,
                             filename: str = "cost_report.txt") -> Path:
        """Side-by-side parameter and MAdds accounting of both heads"""
        report_lines = self._header("HEAD COST REPORT")
        report_lines.append("📐 GEOMETRY")
        report_lines += [f"{key}: {value}" for key, value in geometry.items()]
        report_lines.append("")

        for name, report in (("NOAH", noah), ("GAP", gap)):
            report_lines.append(f"📊 {name}")
            report_lines.append(f"Params: {report.params:,}")
            report_lines.append(f"MAdds:  {report.madds:,}")
            for key, value in report.params_breakdown.items():
                report_lines.append(f"  params.{key}: {value:,}")
            for key, value in report.madds_breakdown.items():
                report_lines.append(f"  madds.{key}: {value:,}")
            report_lines.append("")

        extra = noah.madds - gap.madds
        report_lines.append("💡 COMPARISON")
        report_lines.append(f"Param difference: {noah.params - gap.params:+,}")
        report_lines.append(f"MAdds difference: {extra:+,} ({extra / gap.madds * 100:+.2f}%)")
        report_lines.append("=" * 60)
        return self._write(filename, report_lines)

    def generate_bench_report(self, frame: pd.DataFrame, summary: Dict,
                              filename: str = "bench_report.txt") -> Path:
        """Timing table, FPS and overhead for each scope"""
        report_lines = self._header("HEAD LATENCY BENCHMARK")
        report_lines.append(f"Batch: {summary['batch']}  Repeats: {summary['repeats']}  Warmup: {summary['warmup']}")
        report_lines.append(f"Geometry: C={summary['channels']} H={summary['height']} W={summary['width']} "
                            f"M={summary['num_classes']} N={summary['groups']} r={summary['key_ratio']}")
        report_lines.append("")
        for scope, rows in frame.groupby("scope", sort=False):
            report_lines.append(f"⏱️ {scope.replace('_', ' ').upper()}")
            for row in rows.itertuples(index=False):
                report_lines.append(
                    f"{row.head.upper():<5} mean={row.mean_s * 1e3:8.3f}ms  median={row.median_s * 1e3:8.3f}ms  "
                    f"min={row.min_s * 1e3:8.3f}ms  fps={row.fps:10.1f}")
            report_lines.append(f"Overhead: {summary[f'{scope}_overhead_percent']:+.2f}%")
            report_lines.append("")
        report_lines.append("=" * 60)
        return self._write(filename, report_lines)

    def save_csv_row(self, row: pd.DataFrame, filename: str) -> Path:
        filepath = self.reports_dir / filename
        row.to_csv(filepath, index=False, lineterminator="\n")
        return filepath

    def generate_eval_report(self, result: Dict, checkpoint: Optional[str] = None,
                             filename: str = "eval_report.txt") -> Path:
        report_lines = self._header("EVALUATION REPORT")
        if checkpoint:
            report_lines.append(f"Checkpoint: {checkpoint}")
        report_lines.append(f"Samples: {result['count']}")
        report_lines.append(f"Top-1: {result['top1']:.4f}")
        if result.get("top5") is not None:
            report_lines.append(f"Top-5: {result['top5']:.4f}")
        report_lines.append("=" * 60)
        return self._write(filename, report_lines)
