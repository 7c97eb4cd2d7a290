"""Timbre descriptor vocabulary and its output-dimension index map.

Eighteen descriptor names exist; "Shrill" applies only to female voices and
"Husky" only to male voices, so each gender has exactly 17 valid descriptors
and the detector's output vector has 17 + 17 = 34 dimensions. Male
descriptors occupy indices 0..16, female descriptors 17..33 in the same
order with the Husky slot holding Shrill instead. A descriptor dimension is
therefore always a (gender, name) pair; the shared 16 names are distinct
dimensions per gender.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .errors import UnknownDescriptor


class Gender(str, Enum):
    MALE = "M"
    FEMALE = "F"

    @classmethod
    def from_code(cls, code: str) -> "Gender":
        """Parse the one-letter file code, case-insensitively."""
        c = code.strip().upper()
        if c == "M":
            return cls.MALE
        if c == "F":
            return cls.FEMALE
        raise ValueError(f"gender code must be M or F, got {code!r}")


# Male ordering. The female block reuses it with the male-only "Husky" slot
# replaced by the female-only "Shrill".
_MALE_NAMES: tuple[str, ...] = (
    "Bright",
    "Thin",
    "Coarse",
    "Slim",
    "Low",
    "Pure",
    "Rich",
    "Magnetic",
    "Muddy",
    "Hoarse",
    "Round",
    "Flat",
    "Shriveled",
    "Muffled",
    "Soft",
    "Transparent",
    "Husky",
)
_FEMALE_NAMES: tuple[str, ...] = _MALE_NAMES[:-1] + ("Shrill",)

N_DIMS = len(_MALE_NAMES) + len(_FEMALE_NAMES)


@dataclass(frozen=True)
class Descriptor:
    """One catalog entry: a gender-qualified descriptor name."""

    gender: Gender
    name: str

    def __str__(self) -> str:
        return f"{self.gender.value}:{self.name}"


@dataclass(frozen=True)
class DescriptorCatalog:
    """Immutable bidirectional map between descriptors and output indices."""

    entries: tuple[Descriptor, ...]

    def __post_init__(self) -> None:
        index = {(d.gender, d.name.lower()): i for i, d in enumerate(self.entries)}
        object.__setattr__(self, "_index", index)

    @property
    def n_dims(self) -> int:
        return len(self.entries)

    def index_of(self, gender: Gender, name: str) -> int:
        """Catalog index for a descriptor; matching is case-insensitive."""
        key = (gender, name.strip().lower())
        idx = self._index.get(key)  # type: ignore[attr-defined]
        if idx is None:
            raise UnknownDescriptor(
                f"descriptor {name!r} is not valid for gender {gender.value}"
            )
        return idx

    def descriptor_at(self, index: int) -> Descriptor:
        if not 0 <= index < len(self.entries):
            raise UnknownDescriptor(f"descriptor index {index} out of range 0..{len(self.entries) - 1}")
        return self.entries[index]

    def canonical_name(self, gender: Gender, name: str) -> str:
        """Canonical capitalization of a (possibly lowercased) descriptor name."""
        return self.entries[self.index_of(gender, name)].name

    def names_for(self, gender: Gender) -> tuple[str, ...]:
        return tuple(d.name for d in self.entries if d.gender == gender)

    def has(self, gender: Gender, name: str) -> bool:
        return (gender, name.strip().lower()) in self._index  # type: ignore[attr-defined]

    def fingerprint(self) -> str:
        """sha256 over the canonical serialization; stored in checkpoints."""
        text = "vtad-catalog v1\n" + "\n".join(
            f"{i}\t{d.gender.value}\t{d.name}" for i, d in enumerate(self.entries)
        )
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@lru_cache(maxsize=1)
def build_catalog() -> DescriptorCatalog:
    """The canonical 34-dimension catalog. Deterministic across calls."""
    entries = tuple(
        [Descriptor(Gender.MALE, n) for n in _MALE_NAMES]
        + [Descriptor(Gender.FEMALE, n) for n in _FEMALE_NAMES]
    )
    return DescriptorCatalog(entries=entries)


def descriptor_index(catalog: DescriptorCatalog, gender: Gender, name: str) -> int:
    """Free-function form of DescriptorCatalog.index_of."""
    return catalog.index_of(gender, name)
