import argparse
import json
import logging
import os
import sys
import time
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

from audit import (
    DEFAULT_SKEW_TOLERANCE,
    Policy,
    Snapshot,
    boxplot_summary,
    composition,
    crosstab,
    crosstab_shares,
    evolution_series,
    group_medians,
    listing_tier,
    recommend_all,
)
from bib_ingest import FormatConfig, Normalizer, RecordReader, load_aliases
from centrality import DEFAULT_MAX_ITER, DEFAULT_TOL, compute_report, correlate_measures, quartile_bins
from class_rules import (
    LEVEL2_MAX_SHARE,
    TRACK_HUMANITIES,
    TRACK_SOCIAL,
    DanishLevel,
    bfi_points,
    classify,
    fired_criteria,
    validate_level2_share,
)
from cocit_graph import DEFAULT_MIN_CITATIONS, DEFAULT_TOP_N, ThresholdConfig, apply_threshold, build_cocitation
from errors import JournalNetError, MalformedFile, UsageError
from formats_io import (
    load_network,
    parse_records_json,
    parse_series_json,
    read_dossiers,
    read_fields,
    read_labels,
    read_levels,
    read_production,
    read_scores_csv,
    read_text,
    render_labels_csv,
    render_records_json,
    render_series_json,
    write_pajek,
    write_reports,
)
from log import setup_logging
from utils import StageTimer, parse_csv_list, parse_measures, parse_modes, split_path_and_year, stage
from validate import validate_network, validate_run_config

logger = logging.getLogger("journalnet")

SCHEME_DANISH = "danish"
SCHEMES = (TRACK_SOCIAL, TRACK_HUMANITIES, SCHEME_DANISH)
EVOLVE_MEASURES = ("betweenness", "eigenvector")


class RunConfig:
    """Everything a subcommand needs, checked by validate.validate_run_config before any work."""

    INPUT_FLAGS = ("input", "aliases", "net", "dossiers", "levels", "production", "scores", "labels", "fields",
                   "series")
    OUTPUT_FLAGS = ("out", "pajek", "correlations", "meta")

    def __init__(
        self,
        command: str,
        inputs: Optional[List[Tuple[str, str]]] = None,
        outputs: Optional[List[Tuple[str, str]]] = None,
        min_citations: int = DEFAULT_MIN_CITATIONS,
        top_n: int = DEFAULT_TOP_N,
        measures: Sequence[str] = (),
        modes: Optional[Dict[str, str]] = None,
        scheme: Optional[str] = None,
        policy: Optional[Policy] = None,
        snapshots: Optional[List[Tuple[str, Optional[int]]]] = None,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        max_share: float = LEVEL2_MAX_SHARE,
        year: Optional[int] = None,
    ):
        self.command = command
        self.inputs = inputs or []
        self.outputs = outputs or []
        self.min_citations = min_citations
        self.top_n = top_n
        self.measures = list(measures)
        self.modes = modes or {}
        self.scheme = scheme
        self.policy = policy
        self.snapshots = snapshots or []
        self.tol = tol
        self.max_iter = max_iter
        self.max_share = max_share
        self.year = year

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        def get(name, default=None):
            return getattr(args, name, default)

        command = args.command if get("action") is None else f"{args.command} {args.action}"
        inputs = [(flag, get(flag)) for flag in cls.INPUT_FLAGS if get(flag) not in (None, "-")]
        snapshots = [split_path_and_year(s) for s in get("snapshot") or []]
        inputs += [("snapshot", path) for path, _ in snapshots]
        outputs = [(flag, get(flag)) for flag in cls.OUTPUT_FLAGS if get(flag) is not None]

        measures: List[str] = []
        modes: Dict[str, str] = {}
        if args.command == "centrality":
            measures = parse_measures(get("measures"))
            modes = parse_modes(measures, get("mode"))

        policy = None
        if args.command == "recommend":
            policy = _load_policy(get("policy"), get("decline_delta"), get("promotion_window"))

        return cls(
            command,
            inputs=inputs,
            outputs=outputs,
            min_citations=get("threshold", DEFAULT_MIN_CITATIONS),
            top_n=get("top", DEFAULT_TOP_N),
            measures=measures,
            modes=modes,
            scheme=get("scheme"),
            policy=policy,
            snapshots=snapshots,
            tol=get("tol", DEFAULT_TOL),
            max_iter=get("max_iter", DEFAULT_MAX_ITER),
            max_share=get("max_share", LEVEL2_MAX_SHARE),
            year=get("year"),
        )

    def output(self, flag: str) -> Optional[str]:
        return dict(self.outputs).get(flag)

    def __repr__(self):
        return f"<RunConfig {self.command} inputs={[p for _, p in self.inputs]}>"


def _load_policy(source: Optional[str], decline_delta: Optional[float], promotion_window: Optional[int]) -> Policy:
    data: Dict = {}
    if source and source != "default":
        if not os.path.isfile(source):
            raise UsageError(f"--policy: expected 'default' or a JSON file, got '{source}'.")
        try:
            data = json.loads(read_text(source))
        except ValueError as e:
            raise MalformedFile(f"Policy is not valid JSON: {e}", path=source)
        if not isinstance(data, dict):
            raise MalformedFile("Policy must be a JSON object.", path=source)
    if decline_delta is not None:
        data["decline_delta"] = decline_delta
    if promotion_window is not None:
        data["promotion_window"] = promotion_window
    try:
        return Policy.from_dict(data)
    except (TypeError, ValueError) as e:
        raise UsageError(f"--policy: {e}")


# --------------------------------------------------------------------------------------
# Input helpers
# --------------------------------------------------------------------------------------


def _normalizer(args: argparse.Namespace) -> Normalizer:
    path = getattr(args, "aliases", None)
    if not path:
        return Normalizer()
    aliases = load_aliases([read_text(path)], path)
    logger.info(f"Loaded {len(aliases)} journal aliases from {path}.")
    return Normalizer(aliases)


def _load_records(args: argparse.Namespace):
    path = args.input
    if path.lower().endswith(".json"):
        return parse_records_json(read_text(path), path), []
    text = sys.stdin.read() if path == "-" else read_text(path)
    fmt = FormatConfig(args.id_col, args.year_col, args.source_col, args.cited_col, args.separator)
    reader = RecordReader(fmt, None if path == "-" else path)
    records = reader.parse([text])
    return records, reader.skipped


def _require(args: argparse.Namespace, *flags: str) -> None:
    for flag in flags:
        if not getattr(args, flag.replace("-", "_"), None):
            raise UsageError(f"--{flag} is required for '{args.command}'" +
                             (f" with --scheme {args.scheme}" if getattr(args, "scheme", None) else "") + ".")


def _scores_and_bins(path: str, canon: Normalizer):
    scores, bins = read_scores_csv(path, canon)
    if not bins.bins:
        if not scores["eigenvector"]:
            raise MalformedFile("Scores file has neither a quartile nor an eigenvector column.", path=path)
        bins = quartile_bins(scores["eigenvector"])
    return scores, bins


# --------------------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig, args: argparse.Namespace) -> None:
    stage(1, 2, "Reading records...")
    canon = _normalizer(args)
    records, skipped = _load_records(args)
    logger.info(f"Kept {len(records)} records, skipped {len(skipped)}.")
    stage(2, 2, "Writing normalized record store...")
    write_reports([(cfg.output("out"), render_records_json(records, canon))])


def cmd_build(cfg: RunConfig, args: argparse.Namespace) -> None:
    stage(1, 3, "Reading input...")
    if args.input.lower().endswith(".net"):
        net = load_network(args.input, cfg.year)
    else:
        canon = _normalizer(args)
        records, _ = _load_records(args)
        stage(2, 3, "Counting citations and co-citations...")
        with StageTimer("co-citation counting"):
            net = build_cocitation(records, canon, cfg.year)
        logger.info(f"Unthresholded network: {len(net)} journals, {len(net.edges)} edges, year {net.year_label}.")
    stage(3, 3, f"Applying threshold {cfg.min_citations} and top-{cfg.top_n} cap...")
    net = apply_threshold(net, ThresholdConfig(cfg.min_citations, cfg.top_n))
    validate_network(net)
    outputs = [(cfg.output("out"), net)]
    if cfg.output("pajek"):
        outputs.append((cfg.output("pajek"), write_pajek(net)))
    write_reports(outputs)


def cmd_centrality(cfg: RunConfig, args: argparse.Namespace) -> None:
    stage(1, 3, f"Loading network {args.net}...")
    net = load_network(args.net)
    validate_network(net, args.net)

    stage(2, 3, f"Computing {', '.join(f'{m} ({cfg.modes[m]})' for m in cfg.measures)}...")
    with StageTimer("centrality"):
        report = compute_report(net, cfg.measures, cfg.modes, cfg.tol, cfg.max_iter, args.normalized)
    if report.iterations is not None:
        logger.info(f"Power iteration converged in {report.iterations} iterations, "
                    f"dominant eigenvalue {report.eigenvalue:.6g}.")

    quartile_measure = args.quartile_measure or ("eigenvector" if report.scores["eigenvector"] else None)
    bins = None
    if quartile_measure:
        if not report.scores[quartile_measure]:
            raise UsageError(f"--quartile-measure: '{quartile_measure}' was not computed; add it to --measures.")
        bins = quartile_bins(report.scores[quartile_measure])
        logger.info(f"Quartiles by {quartile_measure}: {bins.sizes()}")

    stage(3, 3, "Writing scores...")
    outputs = [(cfg.output("out"), (report, bins))]
    if cfg.output("correlations"):
        outputs.append((cfg.output("correlations"), correlate_measures(report)))
    if cfg.output("meta"):
        outputs.append((cfg.output("meta"), json.dumps(report.metadata(), indent=2) + "\n"))
    write_reports(outputs)


def cmd_classify(cfg: RunConfig, args: argparse.Namespace) -> None:
    canon = _normalizer(args)
    if cfg.scheme == SCHEME_DANISH:
        _require(args, "levels")
        stage(1, 2, "Reading Danish levels...")
        levels = read_levels(args.levels, canon)
        points = {j: bfi_points(lv) for j, lv in levels.items()}
        if args.production:
            prod = read_production(args.production, canon)
            check = validate_level2_share(prod, [j for j, lv in levels.items() if lv == DanishLevel.LEVEL2],
                                          cfg.max_share)
            msg = f"Level-2 share of world production: {check.share:.1%} (limit {cfg.max_share:.0%})"
            if check.passed:
                logger.info(msg)
            else:
                logger.warning(msg + " exceeds the limit.")
        stage(2, 2, "Writing labels with BFI points...")
        write_reports([(cfg.output("out"), render_labels_csv(levels, points))])
        return

    _require(args, "dossiers")
    stage(1, 2, f"Classifying dossiers ({cfg.scheme})...")
    labels = {}
    for d in read_dossiers(args.dossiers, canon):
        labels[d.journal] = classify(d, cfg.scheme)
        logger.debug(f"{d.journal}: {labels[d.journal].label} "
                     f"[{', '.join(c.name for c in fired_criteria(d, cfg.scheme)) or 'no criterion'}]")
    counts = Counter(lab.label for lab in labels.values())
    logger.info("Class sizes: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    stage(2, 2, "Writing labels...")
    write_reports([(cfg.output("out"), render_labels_csv(labels))])


def cmd_audit(cfg: RunConfig, args: argparse.Namespace) -> None:
    canon = _normalizer(args)
    labels = read_labels(args.labels, canon)

    if args.action == "crosstab":
        scores, bins = _scores_and_bins(args.scores, canon)
        classes = {j: lab for j, lab in labels.items() if j in bins}
        ct = crosstab(classes, bins)
        for group in args.group or []:
            ct = ct.merge_rows(parse_csv_list(group))
        prestigious = parse_csv_list(args.prestigious) or sorted(
            {lab.label if hasattr(lab, "label") else str(lab)
             for lab in classes.values() if _is_prestigious(lab)}
        )
        for key, share in crosstab_shares(ct, prestigious).items():
            logger.info(f"{key}: {share:.1%}")
        write_reports([(cfg.output("out"), ct)])

    elif args.action == "boxplot":
        scores, _ = read_scores_csv(args.scores, canon)
        values = scores[args.measure]
        if not values:
            raise MalformedFile(f"Scores file has no '{args.measure}' values.", path=args.scores)
        classes = {j: lab for j, lab in labels.items() if j in values}
        summaries = boxplot_summary(values, classes, skew_tolerance=args.skew_tolerance)
        write_reports([(cfg.output("out"), summaries)])

    elif args.action == "composition":
        fields = read_fields(args.fields, canon)
        journals = None
        if args.scores:
            scores, _ = read_scores_csv(args.scores, canon)
            journals = sorted(set().union(*(set(col) for col in scores.values())))
        comp = composition(labels, fields, journals)
        logger.info(f"Composition over {comp.total} journals.")
        write_reports([(cfg.output("out"), comp)])


def _is_prestigious(label) -> bool:
    try:
        return listing_tier(label) == DanishLevel.LEVEL2
    except ValueError:
        return False


def cmd_evolve(cfg: RunConfig, args: argparse.Namespace) -> None:
    canon = _normalizer(args)
    total = 3
    stage(1, total, f"Scoring {len(cfg.snapshots)} snapshot(s)...")
    snapshots: List[Snapshot] = []
    for path, year in cfg.snapshots:
        net = load_network(path, year)
        validate_network(net, path)
        with StageTimer(f"snapshot {net.year_label}"):
            report = compute_report(net, EVOLVE_MEASURES, tol=cfg.tol, max_iter=cfg.max_iter)
        snapshots.append(Snapshot(net.year_label, net, report))
    snapshots.sort(key=lambda s: s.year)

    stage(2, total, "Building series...")
    journals = [canon(j) for j in parse_csv_list(args.journals)]
    if not journals:
        journals = sorted(set().union(*(set(s.network.names) for s in snapshots)))
    series = [evolution_series(snapshots, j) for j in journals]
    medians = None
    if args.levels:
        medians = group_medians(snapshots, read_labels(args.levels, canon))

    stage(3, total, "Writing series...")
    write_reports([(cfg.output("out"), render_series_json(series, medians))])


def cmd_recommend(cfg: RunConfig, args: argparse.Namespace) -> None:
    canon = _normalizer(args)
    stage(1, 2, f"Applying policy {cfg.policy.to_dict()}...")
    series, medians = parse_series_json(read_text(args.series), args.series)
    current = read_labels(args.levels, canon)
    recs = recommend_all(series, current, medians, cfg.policy)
    counts = Counter(r.action for r in recs)
    logger.info("Actions: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    stage(2, 2, "Writing recommendations...")
    write_reports([(cfg.output("out"), recs)])


def cmd_export(cfg: RunConfig, args: argparse.Namespace) -> None:
    net = load_network(args.net)
    write_reports([(cfg.output("out"), write_pajek(net))])


COMMANDS = {
    "ingest": cmd_ingest,
    "build": cmd_build,
    "centrality": cmd_centrality,
    "classify": cmd_classify,
    "audit": cmd_audit,
    "evolve": cmd_evolve,
    "recommend": cmd_recommend,
    "export": cmd_export,
}


# --------------------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------------------


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors exiting 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"[ERROR] {message}\n")
        self.exit(1)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--verbose", "-v", action="store_true", help="Show debug messages")
    p.add_argument("--quiet", "-q", action="store_true", help="Only show warnings and errors")
    p.add_argument("--aliases", help="CSV file with 'alias,canonical' journal name pairs")


def _add_record_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="Records TSV ('-' for stdin) or a record store JSON")
    p.add_argument("--id-col", default="id", help="Column holding the record id")
    p.add_argument("--year-col", default="year", help="Column holding the publication year")
    p.add_argument("--source-col", default="source", help="Column holding the source journal")
    p.add_argument("--cited-col", default="cited", help="Column holding the cited references")
    p.add_argument("--separator", default="; ", help="Separator between cited references")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = ArgumentParser(
        prog="journalnet",
        description="JOURNALNET: journal co-citation networks, centrality, classification audits and "
                    "reclassification recommendations.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("ingest", help="Records TSV -> normalized record store", formatter_class=fmt)
    _add_record_format(p)
    p.add_argument("--out", default="-", help="Output record store JSON")
    _add_common(p)

    p = sub.add_parser("build", help="Records -> thresholded co-citation network", formatter_class=fmt)
    _add_record_format(p)
    p.add_argument("--threshold", type=int, default=DEFAULT_MIN_CITATIONS, help="Minimum citations per journal")
    p.add_argument("--top", type=int, default=DEFAULT_TOP_N, help="Maximum number of journals kept")
    p.add_argument("--year", type=int, help="Year label (default: latest publication year in the corpus)")
    p.add_argument("--out", default="-", help="Output network JSON")
    p.add_argument("--pajek", help="Also write the network as Pajek NET")
    _add_common(p)

    p = sub.add_parser("centrality", help="Network -> centrality scores and eigenvector quartiles",
                       formatter_class=fmt)
    p.add_argument("--net", required=True, help="Network JSON or Pajek .net file")
    p.add_argument("--measures", default="degree,closeness,betweenness,eigenvector",
                   help="Comma-separated measures")
    p.add_argument("--mode", help="Comma-separated modes paired with --measures "
                                  "(binary, weighted, inverse_weight)")
    p.add_argument("--normalized", action="store_true", help="Normalize betweenness by (n-1)(n-2)/2")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Power-iteration residual tolerance")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="Power-iteration iteration cap")
    p.add_argument("--quartile-measure", choices=["degree", "closeness", "betweenness", "eigenvector"],
                   help="Measure binned into quartiles (default: eigenvector when computed)")
    p.add_argument("--out", default="-", help="Output scores CSV")
    p.add_argument("--correlations", help="Also write Pearson/Spearman correlations between measures")
    p.add_argument("--meta", help="Also write run metadata JSON")
    _add_common(p)

    p = sub.add_parser("classify", help="Dossiers or Danish levels -> labels", formatter_class=fmt)
    p.add_argument("--scheme", choices=SCHEMES, default=TRACK_SOCIAL, help="Classification scheme")
    p.add_argument("--dossiers", help="Dossier CSV (CIRC schemes)")
    p.add_argument("--levels", help="Danish levels CSV 'journal,level' (danish scheme)")
    p.add_argument("--production", help="World production CSV 'journal,articles' for the level-2 share check")
    p.add_argument("--max-share", type=float, default=LEVEL2_MAX_SHARE, help="Level-2 share limit")
    p.add_argument("--out", default="-", help="Output labels CSV")
    _add_common(p)

    p = sub.add_parser("audit", help="Labels + scores -> audit reports")
    audit_sub = p.add_subparsers(dest="action", required=True, metavar="report")
    q = audit_sub.add_parser("crosstab", help="Class x eigenvector quartile counts", formatter_class=fmt)
    q.add_argument("--scores", required=True, help="Scores CSV")
    q.add_argument("--labels", required=True, help="Labels CSV")
    q.add_argument("--prestigious", help="Comma-separated prestigious rows (default: Level 2 or A+/A)")
    q.add_argument("--group", action="append", metavar="CLASSES",
                   help="Comma-separated classes printed as one row, e.g. C,D gives a 'C/D' row; repeatable")
    q.add_argument("--out", default="-", help="Output cross-tab CSV")
    _add_common(q)
    q = audit_sub.add_parser("boxplot", help="Per-class boxplot statistics", formatter_class=fmt)
    q.add_argument("--scores", required=True, help="Scores CSV")
    q.add_argument("--labels", required=True, help="Labels CSV")
    q.add_argument("--measure", default="eigenvector",
                   choices=["degree", "weighted_degree", "closeness", "betweenness", "eigenvector"],
                   help="Measure summarized")
    q.add_argument("--skew-tolerance", type=float, default=DEFAULT_SKEW_TOLERANCE,
                   help="Half-difference tolerance, as a share of the IQR, below which a box is symmetric")
    q.add_argument("--out", default="-", help="Output boxplot CSV")
    _add_common(q)
    q = audit_sub.add_parser("composition", help="Field x class shares", formatter_class=fmt)
    q.add_argument("--labels", required=True, help="Labels CSV")
    q.add_argument("--fields", required=True, help="Field CSV 'journal,field'")
    q.add_argument("--scores", help="Scores CSV restricting the journal set to the network")
    q.add_argument("--out", default="-", help="Output composition CSV")
    _add_common(q)

    p = sub.add_parser("evolve", help="Year-tagged networks -> per-journal series", formatter_class=fmt)
    p.add_argument("--snapshot", action="append", required=True,
                   help="Network file, optionally with a year (path[:year]); repeat per year")
    p.add_argument("--journals", help="Comma-separated journals (default: every journal in any snapshot)")
    p.add_argument("--levels", help="Labels or levels CSV; embeds per-year group medians in the output")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Power-iteration residual tolerance")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="Power-iteration iteration cap")
    p.add_argument("--out", default="-", help="Output series JSON")
    _add_common(p)

    p = sub.add_parser("recommend", help="Series + labels -> reclassification actions", formatter_class=fmt)
    p.add_argument("--series", required=True, help="Series JSON with group medians (from 'evolve --levels')")
    p.add_argument("--levels", required=True, help="Current labels or levels CSV")
    p.add_argument("--policy", default="default", help="'default' or a JSON file with the policy thresholds")
    p.add_argument("--decline-delta", type=float, help="Override the decline threshold")
    p.add_argument("--promotion-window", type=int, help="Override the promotion window (snapshots)")
    p.add_argument("--out", default="-", help="Output recommendations JSON")
    _add_common(p)

    p = sub.add_parser("export", help="Export a network")
    export_sub = p.add_subparsers(dest="action", required=True, metavar="format")
    q = export_sub.add_parser("pajek", help="Network JSON -> Pajek NET", formatter_class=fmt)
    q.add_argument("--net", required=True, help="Network JSON or Pajek .net file")
    q.add_argument("--out", default="-", help="Output .net file")
    _add_common(q)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1

    setup_logging(verbose=args.verbose, quiet=args.quiet)
    overall_start = time.time()
    try:
        cfg = RunConfig.from_args(args)
        validate_run_config(cfg)
        logger.info(f"journalnet {cfg.command}", extra={"stage": True})
        COMMANDS[args.command](cfg, args)
    except JournalNetError as e:
        logger.error(e.located())
        return e.exit_code

    overall_elapsed = time.time() - overall_start
    logger.info(f"[TIME] End-to-end time: {overall_elapsed:.2f}s", extra={"timing": True})
    return 0


if __name__ == "__main__":
    sys.exit(main())
