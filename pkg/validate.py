import logging
import os
from typing import TYPE_CHECKING

from class_rules import ERIH_DISCIPLINES, JournalDossier
from cocit_graph import CoCitationNetwork
from errors import InvalidDossier, MalformedFile, UsageError

if TYPE_CHECKING:
    from journalnet import RunConfig

logger = logging.getLogger(__name__)


def validate_network(net: CoCitationNetwork, path: str = None) -> None:
    """
    Check the co-citation network invariants: listed endpoints, no self-loops,
    positive weights, and weight(a, b) <= min(citations(a), citations(b)).
    """
    for name, count in net.nodes.items():
        if not name:
            raise MalformedFile("Network has a node with an empty name.", path=path)
        if count < 0:
            raise MalformedFile(f"Node '{name}' has a negative citation count {count}.", path=path)
    for (a, b), w in net.edges.items():
        if a not in net.nodes or b not in net.nodes:
            missing = a if a not in net.nodes else b
            raise MalformedFile(f"Edge {a} -- {b} references unlisted node '{missing}'.", path=path)
        if a == b:
            raise MalformedFile(f"Self-loop on '{a}'.", path=path)
        if w <= 0:
            raise MalformedFile(f"Edge {a} -- {b} has non-positive weight {w}.", path=path)
        if w > min(net.nodes[a], net.nodes[b]):
            raise MalformedFile(
                f"Edge {a} -- {b} has weight {w} above the citation count of one endpoint.", path=path
            )


def validate_dossier(d: JournalDossier) -> None:
    """Type-check one dossier; the line is filled in by the file reader."""
    for attr in ("jcr_ss_quartile", "scopus_ipp_quartile"):
        q = getattr(d, attr)
        if q is not None and q not in (1, 2, 3, 4):
            raise InvalidDossier(f"'{d.journal}': {attr} must be 1-4, got {q}.")
    if d.ipp_value is not None and d.ipp_value < 0:
        raise InvalidDossier(f"'{d.journal}': ipp_value must be non-negative, got {d.ipp_value}.")
    if d.erih_discipline not in ERIH_DISCIPLINES:
        raise InvalidDossier(f"'{d.journal}': unknown erih_discipline '{d.erih_discipline}'.")
    if d.jcr_ss_quartile is not None and not d.indexed_ssci:
        raise InvalidDossier(f"'{d.journal}': a JCR quartile requires indexed_ssci=true.")
    if d.latindex_catalogue and not d.latindex_directory:
        raise InvalidDossier(f"'{d.journal}': latindex_catalogue requires latindex_directory=true.")
    if d.scopus_ipp_quartile is not None and d.ipp_value is None:
        raise InvalidDossier(f"'{d.journal}': a Scopus IPP quartile requires ipp_value.")


def validate_run_config(cfg: "RunConfig") -> None:
    """Paths and numeric flags are checked before any computation starts."""
    for flag, path in cfg.inputs:
        if not os.path.isfile(path):
            raise UsageError(f"--{flag}: input file '{path}' does not exist.")
    for flag, path in cfg.outputs:
        if path in (None, "-"):
            continue
        parent = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(parent):
            raise UsageError(f"--{flag}: output directory '{parent}' does not exist.")
    if cfg.min_citations < 1:
        raise UsageError(f"--threshold must be >= 1, got {cfg.min_citations}.")
    if cfg.top_n < 1:
        raise UsageError(f"--top must be >= 1, got {cfg.top_n}.")
    if cfg.tol <= 0:
        raise UsageError(f"--tol must be > 0, got {cfg.tol}.")
    if cfg.max_iter < 1:
        raise UsageError(f"--max-iter must be >= 1, got {cfg.max_iter}.")
    if not 0 < cfg.max_share <= 1:
        raise UsageError(f"--max-share must be in (0, 1], got {cfg.max_share}.")
    years = [y for _, y in cfg.snapshots if y is not None]
    if len(set(years)) != len(years):
        raise UsageError(f"--snapshot: duplicate years {sorted(years)}.")
    logger.debug(f"Validated {cfg!r}")
