"""
Output folder preparation
"""

from pathlib import Path
from typing import Iterable, Union

from utils.errors import UsageError


def prepare_output_dir(out_dir: Union[str, Path], subfolders: Iterable[str] = (),
                       verbose: bool = False) -> Path:
    """Create the run's output directory (and any subfolders) if missing"""
    out_dir = Path(out_dir)
    if out_dir.exists() and not out_dir.is_dir():
        raise UsageError(f"output path exists and is not a directory: {out_dir}")
    for folder in [out_dir] + [out_dir / name for name in subfolders]:
        if not folder.exists():
            folder.mkdir(parents=True)
            if verbose:
                print(f"✅ Created: {folder}")
    return out_dir
