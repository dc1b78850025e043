from .ops import (
    HullMembership,
    MazurResult,
    NoApproximant,
    SeparationCertificate,
    bipolar_member,
    bipolar_report,
    gauge,
    hull_member,
    mazur_project,
    polar_member,
    polar_support,
    separate,
)
from .projection import project_hull
from .sets import GeneratedSet, NormBall

__all__ = [
    "GeneratedSet",
    "HullMembership",
    "MazurResult",
    "NoApproximant",
    "NormBall",
    "SeparationCertificate",
    "bipolar_member",
    "bipolar_report",
    "gauge",
    "hull_member",
    "mazur_project",
    "polar_member",
    "polar_support",
    "project_hull",
    "separate",
]
