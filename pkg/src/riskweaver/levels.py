"""Qualitative three-level scale shared by every analysis engine.

One ordered scale serves impact, likelihood, and risk. Risk combination is
the ceiling of the mean ordinal, which is the unique symmetric, monotone
fill of the 3x3 grid that agrees with the component rating tables shipped
in the reference corpus:

              likelihood
              L    M    H
    impact L  L    M    M
           M  M    M    H
           H  M    H    H
"""

from __future__ import annotations

import enum


class QualitativeLevel(enum.IntEnum):
    """Ordered Low < Medium < High; the ordinal is the enum value."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def ordinal(self) -> int:
        return int(self)

    @property
    def keyword(self) -> str:
        """Spelling used by the model format (``low``/``medium``/``high``)."""
        return self.name.lower()

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def from_keyword(cls, word: str) -> "QualitativeLevel":
        try:
            return _BY_KEYWORD[word]
        except KeyError:
            raise ValueError(f"unknown level {word!r}") from None


_BY_KEYWORD = {level.keyword: level for level in QualitativeLevel}


def likelihood_display(level: QualitativeLevel) -> str:
    """Reporting alias: the top of the likelihood axis reads "Very Likely".

    The alias applies to likelihood only; impact and risk always display
    "High".
    """
    if level is QualitativeLevel.HIGH:
        return "Very Likely"
    return level.name.capitalize()


def combine_risk(
    impact: QualitativeLevel, likelihood: QualitativeLevel
) -> QualitativeLevel:
    """Combine an impact and a likelihood level into a risk level.

    Ceiling of the mean ordinal; symmetric and monotone in both arguments.
    """
    return QualitativeLevel((impact.ordinal + likelihood.ordinal + 1) // 2)


# Assessment criteria attached to the scale. Documentation only: nothing in
# the engines evaluates this prose.
IMPACT_CRITERIA: dict[QualitativeLevel, str] = {
    QualitativeLevel.HIGH: (
        "Endangers people on board, causes major damage to the vessel or "
        "cargo, or halts an essential operation."
    ),
    QualitativeLevel.MEDIUM: (
        "Degrades an essential operation or causes repairable damage; "
        "recovery is possible without loss of the vessel."
    ),
    QualitativeLevel.LOW: (
        "Annoyance or minor rework; no meaningful effect on operation, "
        "people, or equipment."
    ),
}

LIKELIHOOD_CRITERIA: dict[QualitativeLevel, str] = {
    QualitativeLevel.HIGH: (
        "Directly reachable from the Internet or routinely exercised "
        "attack surface; occurrence is expected within the year."
    ),
    QualitativeLevel.MEDIUM: (
        "Reachable through one intermediate system or requires insider "
        "or physical access; occurrence is plausible over the system's "
        "service life."
    ),
    QualitativeLevel.LOW: (
        "Requires compromising several independent layers; occurrence is "
        "not expected over the system's service life."
    ),
}
