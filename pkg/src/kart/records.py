"""Patient attribute tables.

A PhiTable is the ground truth (role "gold") or an attacker's estimate
(role "attacker_estimate") of every personal attribute appearing in a
corpus. One row per patient, patient ids dense in [0, N).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TemplateError, ValidationError

SEXES = ("male", "female")


@dataclass
class PhiRecord:
    patient_id: int
    first_name: str = ""
    last_name: str = ""
    age: int = 0
    sex: str = "female"
    phone: str = ""
    address: str = ""
    dates: list[str] = field(default_factory=list)
    mrn: str = ""
    email: str = ""
    url: str = ""
    ip: str = ""
    other_ids: dict[str, str] = field(default_factory=dict)
    pmh: list[str] = field(default_factory=list)
    medications: list[str] = field(default_factory=list)

    @property
    def full_name(self) -> str:
        return f"{self.first_name} {self.last_name}"

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "first_name": self.first_name,
            "last_name": self.last_name,
            "age": self.age,
            "sex": self.sex,
            "phone": self.phone,
            "address": self.address,
            "dates": list(self.dates),
            "mrn": self.mrn,
            "email": self.email,
            "url": self.url,
            "ip": self.ip,
            "other_ids": dict(self.other_ids),
            "pmh": list(self.pmh),
            "medications": list(self.medications),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhiRecord":
        return cls(
            patient_id=int(d["patient_id"]),
            first_name=d.get("first_name", ""),
            last_name=d.get("last_name", ""),
            age=int(d.get("age", 0)),
            sex=d.get("sex", "female"),
            phone=d.get("phone", ""),
            address=d.get("address", ""),
            dates=list(d.get("dates", [])),
            mrn=d.get("mrn", ""),
            email=d.get("email", ""),
            url=d.get("url", ""),
            ip=d.get("ip", ""),
            other_ids=dict(d.get("other_ids", {})),
            pmh=list(d.get("pmh", [])),
            medications=list(d.get("medications", [])),
        )


@dataclass
class PhiTable:
    rows: list[PhiRecord]
    role: str = "gold"

    def __post_init__(self):
        if self.role not in ("gold", "attacker_estimate"):
            raise ValidationError(f"unknown table role {self.role!r}")

    def __len__(self) -> int:
        return len(self.rows)

    def record(self, patient_id: int) -> PhiRecord:
        row = self.rows[patient_id]
        if row.patient_id != patient_id:
            raise ValidationError(
                f"table rows are not dense: expected {patient_id}, "
                f"found {row.patient_id}"
            )
        return row

    def patient_ids(self) -> set[int]:
        return {r.patient_id for r in self.rows}


def validate_table(table: PhiTable) -> None:
    seen: set[int] = set()
    for i, row in enumerate(table.rows):
        if row.patient_id != i:
            raise ValidationError(
                f"patient ids must be dense in [0, N): row {i} has "
                f"patient_id {row.patient_id}"
            )
        if row.patient_id in seen:
            raise ValidationError(f"duplicate patient_id {row.patient_id}")
        seen.add(row.patient_id)
        if not (0 <= row.age <= 120):
            raise ValidationError(
                f"patient {row.patient_id}: age {row.age} out of [0, 120]"
            )
        # Attacker tables may leave sex blank (unknown); gold tables may not.
        if row.sex not in SEXES and (table.role == "gold" or row.sex != ""):
            raise ValidationError(
                f"patient {row.patient_id}: unknown sex {row.sex!r}"
            )
        if table.role == "gold" and row.first_name:
            if row.full_name != f"{row.first_name} {row.last_name}":
                raise ValidationError(
                    f"patient {row.patient_id}: full name is not "
                    "'first last'"
                )


# Value lookup for template slots (see kart.hipaa.SLOT_CATEGORIES).
def slot_value(record: PhiRecord, slot: str) -> str:
    if slot == "first_name":
        return record.first_name
    if slot == "last_name":
        return record.last_name
    if slot == "full_name":
        return record.full_name
    if slot == "address":
        return record.address
    if slot.startswith("date_"):
        idx = int(slot.split("_", 1)[1])
        if not record.dates:
            raise TemplateError(
                f"slot {slot!r}: patient {record.patient_id} has no dates"
            )
        return record.dates[idx % len(record.dates)]
    if slot == "phone":
        return record.phone
    if slot == "email":
        return record.email
    if slot == "url":
        return record.url
    if slot == "ip_address":
        return record.ip
    if slot == "mrn":
        return record.mrn
    if slot in record.other_ids:
        return record.other_ids[slot]
    raise TemplateError(
        f"template slot {slot!r} has no attribute on patient "
        f"{record.patient_id}"
    )
