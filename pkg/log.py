import logging
import sys

ERROR_COLOR = "\033[91m"
WARN_COLOR = "\033[93m"
TIME_COLOR = "\033[94m"
STAGE_COLOR = "\033[95m"
RESET_COLOR = "\033[0m"

_PREFIX = {
    logging.ERROR: ("[ERROR] ", ERROR_COLOR),
    logging.CRITICAL: ("[ERROR] ", ERROR_COLOR),
    logging.WARNING: ("[WARN] ", WARN_COLOR),
}


class ConsoleFormatter(logging.Formatter):
    """One line per record: '[ERROR] msg', '[WARN] msg', or the bare message for info/debug.

    Records logged with extra={"timing": True} are rendered in the timing colour,
    records with extra={"stage": True} in the stage colour.
    """

    def __init__(self, color: bool):
        super().__init__("%(message)s")
        self.color = color

    def format(self, record: logging.LogRecord) -> str:
        msg = super().format(record)
        prefix, color = _PREFIX.get(record.levelno, ("", None))
        if getattr(record, "timing", False):
            color = TIME_COLOR
        elif getattr(record, "stage", False):
            color = STAGE_COLOR
        text = prefix + msg
        if self.color and color:
            return f"{color}{text}{RESET_COLOR}"
        return text


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Route every journalnet logger to stderr through ConsoleFormatter."""
    root = logging.getLogger()
    for h in list(root.handlers):
        if getattr(h, "_journalnet", False):
            root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(ConsoleFormatter(color=sys.stderr.isatty()))
    handler._journalnet = True
    root.addHandler(handler)
    if quiet:
        root.setLevel(logging.WARNING)
    elif verbose:
        root.setLevel(logging.DEBUG)
    else:
        root.setLevel(logging.INFO)
