import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple

from centrality import BINARY, DEFAULT_MODES, INVERSE_WEIGHT, WEIGHTED
from errors import UsageError

logger = logging.getLogger(__name__)

COMPUTED_MEASURES = ("degree", "closeness", "betweenness", "eigenvector")

_MODE_CHOICES = {
    "degree": (BINARY, WEIGHTED),
    "closeness": (BINARY, INVERSE_WEIGHT),
    "betweenness": (BINARY, INVERSE_WEIGHT),
    "eigenvector": (BINARY, WEIGHTED),
}


def split_path_and_year(arg: str) -> Tuple[str, Optional[int]]:
    """
    Allow 'path/net.json:2013'. If there is no ':' followed by a year, return (arg, None).
    Note: split only after the last ':' (Windows drive letters are OK).
    """
    if ":" in arg:
        path, year = arg.rsplit(":", 1)
        year = year.strip()
        if year == "":
            return path, None
        if year.isdigit():
            return path, int(year)
    return arg, None


def parse_csv_list(text: Optional[str]) -> List[str]:
    """'a, b,,c' -> ['a', 'b', 'c']"""
    if not text:
        return []
    return [part.strip() for part in text.split(",") if part.strip()]


def parse_measures(text: Optional[str]) -> List[str]:
    measures: List[str] = []
    for m in parse_csv_list(text) or list(COMPUTED_MEASURES):
        m = "degree" if m == "weighted_degree" else m
        if m not in COMPUTED_MEASURES:
            raise UsageError(f"--measures: unknown measure '{m}' (choose from {', '.join(COMPUTED_MEASURES)})")
        if m not in measures:
            measures.append(m)
    return measures


def parse_modes(measures: Sequence[str], text: Optional[str]) -> Dict[str, str]:
    """Pair `--mode` entries with `--measures` positionally; missing entries keep the defaults."""
    modes = parse_csv_list(text)
    if modes and len(modes) != len(measures):
        raise UsageError(f"--mode: expected {len(measures)} value(s) to match --measures, got {len(modes)}")
    out: Dict[str, str] = {}
    for measure, mode in zip(measures, modes):
        # shortest-path measures read 'weighted' as 1/weight lengths
        if mode == WEIGHTED and measure in ("closeness", "betweenness"):
            mode = INVERSE_WEIGHT
        if mode not in _MODE_CHOICES[measure]:
            raise UsageError(
                f"--mode: '{mode}' is not valid for {measure} (choose from {', '.join(_MODE_CHOICES[measure])})"
            )
        out[measure] = mode
    for measure in measures:
        out.setdefault(measure, DEFAULT_MODES[measure])
    return out


def stage(k: int, n: int, message: str) -> None:
    logger.info(f"[{k}/{n}] {message}")


class StageTimer:
    """Logs '[TIME] <label>: 1.23s' on exit."""

    def __init__(self, label: str):
        self.label = label
        self.start = 0.0
        self.elapsed = 0.0

    def __enter__(self) -> "StageTimer":
        self.start = time.time()
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed = time.time() - self.start
        logger.info(f"[TIME] {self.label}: {self.elapsed:.2f}s", extra={"timing": True})
