"""Journal classification rules: the Spanish CIRC decision table (social sciences and
humanities tracks) and the Danish authority levels with their BFI points."""
import logging
from enum import IntEnum
from typing import Callable, Dict, Iterable, List, Optional

from errors import EmptyProduction

logger = logging.getLogger(__name__)

LEVEL2_MAX_SHARE = 0.20

SOCIAL_SCIENCES = "social_sciences"
HUMANITIES = "humanities"
NO_DISCIPLINE = "none"
ERIH_DISCIPLINES = (SOCIAL_SCIENCES, HUMANITIES, NO_DISCIPLINE)

TRACK_SOCIAL = "circ-ss"
TRACK_HUMANITIES = "circ-hum"


class ClassLabel(IntEnum):
    NOT_INCLUDED = 0
    D = 1
    C = 2
    B = 3
    A = 4
    A_PLUS = 5

    @property
    def label(self) -> str:
        return _CLASS_TEXT[self]

    @classmethod
    def parse(cls, text: str) -> "ClassLabel":
        key = text.strip().upper().replace(" ", "")
        for member, shown in _CLASS_TEXT.items():
            if key == shown.upper().replace(" ", ""):
                return member
        if key in ("NOTINCLUDED", "NONE", ""):
            return cls.NOT_INCLUDED
        raise ValueError(f"Unknown CIRC class '{text}'")

    def __str__(self):
        return self.label


_CLASS_TEXT = {
    ClassLabel.A_PLUS: "A+",
    ClassLabel.A: "A",
    ClassLabel.B: "B",
    ClassLabel.C: "C",
    ClassLabel.D: "D",
    ClassLabel.NOT_INCLUDED: "Not included",
}


class DanishLevel(IntEnum):
    NOT_LISTED = 0
    LEVEL1 = 1
    LEVEL2 = 2

    @property
    def label(self) -> str:
        return {DanishLevel.LEVEL2: "Level 2", DanishLevel.LEVEL1: "Level 1", DanishLevel.NOT_LISTED: "Level 0"}[self]

    @classmethod
    def parse(cls, text) -> "DanishLevel":
        key = str(text).strip().lower().replace("level", "").strip()
        if key in ("2", "1", "0"):
            return cls(int(key))
        raise ValueError(f"Unknown Danish level '{text}' (expected 2, 1 or 0)")

    def __str__(self):
        return self.label


class JournalDossier:
    """Classification inputs for one journal. Invariants are checked by validate.validate_dossier."""

    def __init__(
        self,
        journal: str,
        jcr_ss_quartile: Optional[int] = None,
        indexed_ssci: bool = False,
        indexed_ahci: bool = False,
        scopus_ipp_quartile: Optional[int] = None,
        ipp_value: Optional[float] = None,
        erih_plus: bool = False,
        erih_discipline: str = NO_DISCIPLINE,
        fecyt_seal: bool = False,
        latindex_catalogue: bool = False,
        latindex_directory: bool = False,
    ):
        self.journal = journal
        self.jcr_ss_quartile = jcr_ss_quartile
        self.indexed_ssci = indexed_ssci
        self.indexed_ahci = indexed_ahci
        self.scopus_ipp_quartile = scopus_ipp_quartile
        self.ipp_value = ipp_value
        self.erih_plus = erih_plus
        self.erih_discipline = erih_discipline
        self.fecyt_seal = fecyt_seal
        self.latindex_catalogue = latindex_catalogue
        self.latindex_directory = latindex_directory

    @property
    def scopus_indexed(self) -> bool:
        return self.ipp_value is not None

    def __repr__(self):
        return f"<JournalDossier {self.journal}>"


class Criterion:
    """One cell of the CIRC decision table."""

    def __init__(self, name: str, label: ClassLabel, test: Callable[[JournalDossier], bool], text: str):
        self.name = name
        self.label = label
        self.test = test
        self.text = text

    def fires(self, d: JournalDossier) -> bool:
        return bool(self.test(d))

    def __repr__(self):
        return f"<Criterion {self.name} -> {self.label.label}>"


SOCIAL_TABLE: List[Criterion] = [
    Criterion("jcr_q1", ClassLabel.A_PLUS,
              lambda d: d.jcr_ss_quartile == 1,
              "First quartile of the JCR Social Sciences Edition"),
    Criterion("wos_not_q4", ClassLabel.A,
              lambda d: (d.indexed_ssci or d.indexed_ahci) and d.jcr_ss_quartile != 4,
              "Indexed in SSCI or A&HCI, excluding JCR fourth quartile"),
    Criterion("scopus_q1", ClassLabel.A,
              lambda d: d.scopus_ipp_quartile == 1,
              "Scopus first quartile by IPP"),
    Criterion("jcr_q4", ClassLabel.B,
              lambda d: d.jcr_ss_quartile == 4,
              "Fourth quartile of the JCR Social Sciences Edition"),
    Criterion("scopus_q2_q4", ClassLabel.B,
              lambda d: d.scopus_ipp_quartile in (2, 3, 4) and d.ipp_value is not None and d.ipp_value > 0,
              "Scopus second to fourth quartile by IPP, IPP > 0"),
    Criterion("fecyt_seal", ClassLabel.B,
              lambda d: d.fecyt_seal,
              "FECYT quality seal"),
    Criterion("scopus_ipp_zero", ClassLabel.C,
              lambda d: d.scopus_indexed and d.ipp_value <= 0,
              "Indexed in Scopus with IPP = 0"),
    Criterion("erih_social", ClassLabel.C,
              lambda d: d.erih_plus and d.erih_discipline == SOCIAL_SCIENCES,
              "Social sciences journal in ERIH Plus"),
    Criterion("latindex_catalogue", ClassLabel.C,
              lambda d: d.latindex_catalogue,
              "LATINDEX catalogue"),
    Criterion("latindex_directory", ClassLabel.D,
              lambda d: d.latindex_directory,
              "LATINDEX directory"),
]

# A, C and D have no printed humanities criterion.
HUMANITIES_TABLE: List[Criterion] = [
    Criterion("ahci_scopus_q1", ClassLabel.A_PLUS,
              lambda d: d.indexed_ahci and d.scopus_ipp_quartile == 1,
              "Indexed in A&HCI and Scopus first quartile by IPP"),
    Criterion("erih_plus", ClassLabel.B,
              lambda d: d.erih_plus,
              "Indexed in ERIH Plus"),
]

TABLES: Dict[str, List[Criterion]] = {
    TRACK_SOCIAL: SOCIAL_TABLE,
    TRACK_HUMANITIES: HUMANITIES_TABLE,
}


def fired_criteria(d: JournalDossier, track: str = TRACK_SOCIAL) -> List[Criterion]:
    """Every criterion of the track's table that holds, best class first."""
    if track not in TABLES:
        raise ValueError(f"Unknown CIRC track '{track}'")
    hits = [c for c in TABLES[track] if c.fires(d)]
    return sorted(hits, key=lambda c: -int(c.label))


def _highest(d: JournalDossier, track: str) -> ClassLabel:
    hits = fired_criteria(d, track)
    return hits[0].label if hits else ClassLabel.NOT_INCLUDED


def classify_circ_social(d: JournalDossier) -> ClassLabel:
    return _highest(d, TRACK_SOCIAL)


def classify_circ_humanities(d: JournalDossier) -> ClassLabel:
    return _highest(d, TRACK_HUMANITIES)


def classify(d: JournalDossier, track: str) -> ClassLabel:
    return _highest(d, track)


BFI_POINTS = {
    DanishLevel.LEVEL2: 3.0,
    DanishLevel.LEVEL1: 1.0,
    DanishLevel.NOT_LISTED: 0.0,
}


def bfi_points(level: DanishLevel) -> float:
    return BFI_POINTS[DanishLevel(level)]


class Level2ShareCheck:
    def __init__(self, share: float, passed: bool, level2_articles: float, total_articles: float,
                 missing: List[str]):
        self.share = share
        self.passed = passed
        self.level2_articles = level2_articles
        self.total_articles = total_articles
        self.missing = missing

    def __repr__(self):
        return f"<Level2ShareCheck share={self.share:.4f} pass={self.passed}>"


def validate_level2_share(
    production: Dict[str, float],
    level2_set: Iterable[str],
    max_share: float = LEVEL2_MAX_SHARE,
) -> Level2ShareCheck:
    """Share of world production published in level-2 journals; passes at or below max_share."""
    total = float(sum(production.values()))
    if total <= 0:
        raise EmptyProduction("Total world production is zero; the level-2 share is undefined.")
    level2 = sorted(set(level2_set))
    missing = [j for j in level2 if j not in production]
    if missing:
        logger.warning(f"{len(missing)} level-2 journal(s) have no production figure and count as 0.")
    part = float(sum(production.get(j, 0) for j in level2))
    share = part / total
    return Level2ShareCheck(share, share <= max_share, part, total, missing)
