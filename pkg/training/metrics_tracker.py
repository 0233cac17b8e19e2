"""
Training Metrics Tracker
Tracks per-epoch loss and accuracy and writes the metrics CSV
"""

from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

from config.settings import METRICS_COLUMNS


class MetricsTracker:
    """Collect one row per epoch and export them as CSV"""

    def __init__(self, columns: Optional[List[str]] = None):
        self.columns = list(columns or METRICS_COLUMNS)
        self.rows: List[Dict] = []

    def track_epoch(self, row: Dict) -> bool:
        """Record one epoch; the row must carry exactly the tracked columns"""
        if set(row) != set(self.columns):
            return False
        self.rows.append({column: row[column] for column in self.columns})
        return True

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=self.columns)
        if not frame.empty:
            frame["epoch"] = frame["epoch"].astype(int)
        return frame

    def save_csv(self, path: Union[str, Path]) -> Path:
        """Comma separated, header row, '.' decimals, fixed 6-digit floats"""
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
        return path

    def get_performance_summary(self) -> Dict:
        frame = self.to_frame()
        if frame.empty:
            return {"epochs": 0, "overall_status": "Not started"}
        best = frame.loc[frame["eval_top1"].fillna(frame["train_top1"]).idxmax()]
        return {
            "epochs": int(len(frame)),
            "first_loss": float(frame["train_loss"].iloc[0]),
            "final_loss": float(frame["train_loss"].iloc[-1]),
            "final_train_top1": float(frame["train_top1"].iloc[-1]),
            "final_eval_top1": float(frame["eval_top1"].iloc[-1]),
            "best_epoch": int(best["epoch"]),
            "total_seconds": float(frame["seconds"].sum()),
            "overall_status": "Improving" if frame["train_loss"].iloc[-1] < frame["train_loss"].iloc[0] else "Stalled",
        }

    def generate_metrics_report(self) -> str:
        """Readable summary of the tracked epochs"""
        summary = self.get_performance_summary()
        report = ["📈 TRAINING METRICS REPORT", "=" * 40]
        if summary["epochs"] == 0:
            report.append("No epochs tracked yet")
            return "\n".join(report)
        report.append(f"Epochs: {summary['epochs']}")
        report.append(f"Loss: {summary['first_loss']:.4f} -> {summary['final_loss']:.4f}")
        report.append(f"Final Train Top-1: {summary['final_train_top1']:.4f}")
        report.append(f"Final Eval Top-1: {summary['final_eval_top1']:.4f}")
        report.append(f"Best Epoch: {summary['best_epoch']}")
        report.append(f"Wall Time: {summary['total_seconds']:.1f}s")
        report.append(f"Status: {summary['overall_status']}")
        return "\n".join(report)
