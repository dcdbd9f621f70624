"""Seeded synthetic corpora: threat tables and bar-orientation images."""

from __future__ import annotations

import numpy as np

from .dataset import ThreatRecord, ThreatTable, parse_threat_csv
from .imaging import GrayImage

THREAT_TYPES = ("Malware", "Data Breach", "Ransomware", "Social Engineering", "Phishing")
SECTORS = ("Data Breach", "Ransomware", "Phishing", "Social Engineering", "Malware")

# nine pre-processed sample rows
SAMPLE_CSV = """\
Type of Threat,Targeted Sector,Number of Attempts,Impact Level,Target
Malware,Data Breach,85,26,0
Data Breach,Data Breach,86,32,0
Ransomware,Ransomware,99,55,0
Data Breach,Ransomware,9,78,0
Social Engineering,Phishing,21,92,0
Social Engineering,Social Engineering,71,47,0
Phishing,Ransomware,35,74,0
Malware,Malware,53,92,1
Ransomware,Ransomware,95,91,0
"""

_TYPE_BONUS = {"Malware": 12.0, "Ransomware": 8.0, "Phishing": 0.0,
               "Social Engineering": -4.0, "Data Breach": -8.0}
_SECTOR_BONUS = {"Malware": 6.0, "Ransomware": 4.0, "Phishing": 0.0,
                 "Social Engineering": -2.0, "Data Breach": -6.0}


def sample_table() -> ThreatTable:
    return parse_threat_csv(SAMPLE_CSV, source_name="sample")


def threat_table(n: int, seed: int, margin: float = 4.0, threshold: float = 60.0) -> ThreatTable:
    """Linearly separable table in the five-column schema.

    ``target`` is 1 when ``0.5*attempts + 0.5*impact`` plus per-category
    offsets exceeds ``threshold``; rows scoring within ``margin`` of the
    threshold are rejected so a gap separates the classes.
    """
    rng = np.random.default_rng(seed)
    records = []
    while len(records) < n:
        kind = THREAT_TYPES[rng.integers(len(THREAT_TYPES))]
        sector = SECTORS[rng.integers(len(SECTORS))]
        attempts = int(rng.integers(0, 101))
        impact = int(rng.integers(0, 101))
        score = 0.5 * attempts + 0.5 * impact + _TYPE_BONUS[kind] + _SECTOR_BONUS[sector]
        if abs(score - threshold) < margin:
            continue
        records.append(ThreatRecord(kind, sector, attempts, impact, int(score > threshold)))
    return ThreatTable(tuple(records), f"synthetic-{seed}")


def bar_image(orientation: int, rng: np.random.Generator, size: int = 8,
              noise: float = 20.0, salt: float = 0.03) -> GrayImage:
    """A two-pixel-wide bright bar on a dark background.

    ``orientation`` 0 draws a vertical bar, 1 a horizontal one. Gaussian noise
    and salt-and-pepper speckle are added, then values are rounded so the
    image survives a PGM round trip unchanged.
    """
    img = np.full((size, size), 40.0)
    pos = int(rng.integers(1, size - 2))
    if orientation == 0:
        img[:, pos:pos + 2] = 210.0
    else:
        img[pos:pos + 2, :] = 210.0
    img += rng.normal(0.0, noise, img.shape)
    speckle = rng.random(img.shape)
    img[speckle < salt / 2] = 0.0
    img[speckle > 1.0 - salt / 2] = 255.0
    return GrayImage(np.rint(np.clip(img, 0.0, 255.0)))


def bar_corpus(n: int, seed: int, size: int = 8, **kwargs):
    """``n`` images alternating vertical (label 0) and horizontal (label 1) bars."""
    rng = np.random.default_rng(seed)
    labels = [i % 2 for i in range(n)]
    return [bar_image(lab, rng, size, **kwargs) for lab in labels], labels
