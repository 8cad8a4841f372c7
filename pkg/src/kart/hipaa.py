"""Identifier taxonomy shared across the harness.

Defines the 18 HIPAA identifier categories, the clinical note categories,
and the placeholder slots that document templates use. A placeholder slot is
the unit of surrogate substitution: it knows its HIPAA category and how to
pull the replacement value out of a patient record.
"""

from __future__ import annotations

# The 18 identifier categories that must be removed for de-identification,
# in their conventional (A)..(R) order.
HIPAA_CATEGORIES: tuple[str, ...] = (
    "name",                            # (A)
    "geographic_subdivision",          # (B) street address, city, zip, ...
    "date",                            # (C) dates and ages over 89
    "phone",                           # (D)
    "fax",                             # (E)
    "email",                           # (F)
    "ssn",                             # (G)
    "mrn",                             # (H)
    "health_plan_beneficiary_number",  # (I)
    "account_number",                  # (J)
    "certificate_license_number",      # (K)
    "vehicle_id",                      # (L)
    "device_id",                       # (M)
    "url",                             # (N)
    "ip_address",                      # (O)
    "biometric_id",                    # (P)
    "photo_id",                        # (Q)
    "other_unique_id",                 # (R)
)

HIPAA_CATEGORY_SET = frozenset(HIPAA_CATEGORIES)

# Spans whose category could not be attributed to one of the 18 buckets
# (e.g. externally ingested corpora with opaque masks).
PLACEHOLDER_CATEGORY = "placeholder"

VALID_SPAN_CATEGORIES = HIPAA_CATEGORY_SET | {PLACEHOLDER_CATEGORY}

# Clinical note categories.
NOTE_CATEGORIES: tuple[str, ...] = (
    "discharge_summary",
    "progress_note",
    "nursing_note",
    "physician_note",
    "radiology_report",
    "ecg_report",
    "echo_report",
    "respiratory_note",
    "nutrition_note",
    "pharmacy_note",
    "social_work_note",
    "case_management_note",
    "consult_note",
    "rehab_note",
    "general_note",
)

NOTE_CATEGORY_SET = frozenset(NOTE_CATEGORIES)

# Note categories kept by the "small_like" subset filter.
MEDICALLY_DENSE_CATEGORIES = frozenset({"discharge_summary", "progress_note"})


def placeholder_token(slot: str) -> str:
    """Placeholder text inserted by document synthesis for a template slot."""
    return f"[ph-{slot.replace('_', '-')}]"


def mask_placeholder_token(category: str) -> str:
    """Category-tagged placeholder written by the anonymizer."""
    return f"[ph-{category.replace('_', '-')}]"


def is_placeholder_text(text: str) -> bool:
    return text.startswith("[ph-") and text.endswith("]")


# Template slots. Each maps to (HIPAA category, PhiRecord accessor name).
# Accessors are resolved by kart.records.slot_value.
SLOT_CATEGORIES: dict[str, str] = {
    "first_name": "name",
    "last_name": "name",
    "full_name": "name",
    "address": "geographic_subdivision",
    "date_0": "date",
    "date_1": "date",
    "date_2": "date",
    "phone": "phone",
    "fax": "fax",
    "email": "email",
    "ssn": "ssn",
    "mrn": "mrn",
    "health_plan_beneficiary_number": "health_plan_beneficiary_number",
    "account_number": "account_number",
    "certificate_license_number": "certificate_license_number",
    "vehicle_id": "vehicle_id",
    "device_id": "device_id",
    "url": "url",
    "ip_address": "ip_address",
    "biometric_id": "biometric_id",
    "photo_id": "photo_id",
    "hospital": "other_unique_id",
}

_TOKEN_TO_SLOT = {placeholder_token(slot): slot for slot in SLOT_CATEGORIES}
# Bare category-tagged masks produced by the anonymizer resolve back to a
# slot only where the category determines a unique record attribute.
_CATEGORY_FALLBACK_SLOT = {
    "name": "full_name",
    "geographic_subdivision": "address",
    "date": "date_0",
    "phone": "phone",
    "fax": "fax",
    "email": "email",
    "ssn": "ssn",
    "mrn": "mrn",
    "health_plan_beneficiary_number": "health_plan_beneficiary_number",
    "account_number": "account_number",
    "certificate_license_number": "certificate_license_number",
    "vehicle_id": "vehicle_id",
    "device_id": "device_id",
    "url": "url",
    "ip_address": "ip_address",
    "biometric_id": "biometric_id",
    "photo_id": "photo_id",
    "other_unique_id": "hospital",
}


def slot_for_placeholder(text: str, category: str) -> str | None:
    """Resolve the template slot behind a placeholder token.

    Falls back to the category's canonical attribute for bare masks like
    "[ph-name]"; returns None when nothing can be resolved.
    """
    slot = _TOKEN_TO_SLOT.get(text)
    if slot is not None:
        return slot
    return _CATEGORY_FALLBACK_SLOT.get(category)


# Attribute vocabulary for scenario knowledge/target sets.
NON_MEDICAL_PHI = frozenset(
    {
        "full_name",
        "first_name",
        "last_name",
        "sex",
        "age",
        "phone",
        "address",
        "dates",
        "mrn",
        "email",
        "url",
        "ip",
    }
    | set(HIPAA_CATEGORIES)
)
MEDICAL_PHI = frozenset({"pmh", "medications"})
MEMBERSHIP = "membership"
SCENARIO_CATEGORIES = NON_MEDICAL_PHI | MEDICAL_PHI | {MEMBERSHIP}
