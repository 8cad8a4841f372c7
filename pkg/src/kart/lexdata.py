"""Shipped word lists.

Everything here is synthetic or generic. Names are screened so that no name
occurs as a substring of any other lexicon entry or narrative word; the
exact-substring PHI scanner relies on that (see tests/test_lexicon.py).
"""

# First/last name pools, most popular first. Zipf weights are assigned by
# rank in kart.lexicon.default_name_lexicon.
FIRST_NAMES = (
    "james", "mary", "robert", "jennifer", "michael", "linda", "david",
    "elizabeth", "william", "barbara", "richard", "susan", "joseph",
    "jessica", "thomas", "karen", "charles", "sarah", "christopher",
    "nancy", "daniel", "margaret", "matthew", "betty", "anthony",
    "sandra", "mark", "ashley", "donald", "kimberly", "steven", "emily",
    "andrew", "donna", "joshua", "michelle", "kenneth", "carol", "kevin",
    "amanda", "brian", "dorothy", "george", "melissa", "edward",
    "deborah", "ronald", "stephanie",
)

LAST_NAMES = (
    "smith", "johnson", "williams", "brown", "jones", "garcia", "miller",
    "davis", "rodriguez", "martinez", "hernandez", "lopez", "gonzalez",
    "wilson", "anderson", "taylor", "moore", "jackson", "martin", "lee",
    "perez", "thompson", "white", "harris", "sanchez", "clark",
    "ramirez", "lewis", "robinson", "walker", "young", "allen", "king",
    "wright", "scott", "torres", "nguyen", "hill", "flores", "green",
    "adams", "nelson", "baker", "hall", "rivera", "campbell", "mitchell",
    "carter", "roberts", "gomez", "phillips", "evans", "turner", "diaz",
    "parker", "cruz",
)

CONDITIONS = (
    "hypertension", "diabetes-mellitus", "asthma", "copd", "leukemia",
    "lymphoma", "anemia", "atrial-fibrillation", "coronary-artery-disease",
    "congestive-heart-failure", "chronic-kidney-disease", "cirrhosis",
    "hypothyroidism", "hyperthyroidism", "osteoarthritis",
    "rheumatoid-arthritis", "gout", "epilepsy", "migraine", "depression",
    "anxiety-disorder", "schizophrenia", "bipolar-disorder", "dementia",
    "parkinsonism", "stroke", "pulmonary-embolism", "deep-vein-thrombosis",
    "pneumonia", "bronchiectasis", "narcolepsy", "obesity",
    "hyperlipidemia", "peptic-ulcer-disease", "gerd", "diverticulosis",
    "pancreatitis", "hepatitis", "cholelithiasis", "nephrolithiasis",
    "prostate-cancer", "breast-cancer", "colon-cancer", "melanoma",
    "psoriasis", "eczema", "glaucoma", "cataract", "macular-degeneration",
    "osteoporosis", "scoliosis", "fibromyalgia", "sarcoidosis",
    "tuberculosis", "endocarditis", "myocarditis", "pericarditis",
    "aortic-stenosis", "mitral-regurgitation", "cardiomyopathy",
)

MEDICATIONS = (
    "metformin", "lisinopril", "atorvastatin", "amlodipine", "metoprolol",
    "omeprazole", "simvastatin", "losartan", "albuterol", "gabapentin",
    "hydrochlorothiazide", "sertraline", "furosemide", "fluoxetine",
    "pantoprazole", "prednisone", "citalopram", "insulin", "warfarin",
    "clopidogrel", "carvedilol", "tamsulosin", "rosuvastatin",
    "escitalopram", "bupropion", "venlafaxine", "duloxetine",
    "trazodone", "lamotrigine", "levetiracetam", "topiramate",
    "amoxicillin", "azithromycin", "ciprofloxacin", "doxycycline",
    "cephalexin", "vancomycin", "nitrofurantoin", "spironolactone",
    "diltiazem", "verapamil", "digoxin", "amiodarone", "apixaban",
    "rivaroxaban", "enoxaparin", "heparin", "morphine", "oxycodone",
    "tramadol", "acetaminophen", "ibuprofen", "naproxen", "aspirin",
    "levothyroxine", "methimazole", "allopurinol", "colchicine",
)

HOSPITALS = (
    "north ridge general hospital",
    "blue harbor medical center",
    "cedar valley regional hospital",
    "eastgate community hospital",
    "silver lake university hospital",
    "pine crest memorial hospital",
    "west meadow clinic",
    "granite peak medical center",
    "maple grove care center",
    "fox hollow regional center",
    "stone bridge general hospital",
    "clear springs medical center",
    "iron gate hospital",
    "sunrise bay medical center",
    "old mill county hospital",
    "three rivers health center",
)

STREETS = (
    "maple", "cedar", "oak", "birch", "spruce", "aspen", "willow",
    "chestnut", "sycamore", "juniper", "magnolia", "dogwood", "hickory",
    "poplar", "alder", "hawthorn",
)

CITIES = (
    "springdale", "laketown", "fairview", "ridgefield", "brookhaven",
    "stonybrook", "eastport", "westbrook", "northfield", "southgate",
    "riverbend", "crestwood", "meadowvale", "pinehurst", "oakmont",
    "claremont",
)

# Per note-category narrative filler. Sentences end without punctuation;
# the synthesizer adds the terminal period.
NARRATIVE = {
    "discharge_summary": (
        "hospital course was uncomplicated",
        "patient tolerated the regimen well",
        "follow up arranged with the outpatient clinic",
        "discharge condition stable",
    ),
    "progress_note": (
        "overnight events none",
        "vital signs remained stable",
        "plan continue current management",
        "patient resting comfortably",
    ),
    "nursing_note": (
        "patient ambulating with assistance",
        "skin intact no pressure injury noted",
        "intake and output adequate",
    ),
    "physician_note": (
        "examination findings within normal limits today",
        "assessment reviewed with the team",
        "continue monitoring clinical status",
    ),
    "radiology_report": (
        "impression no acute process",
        "lungs clear without consolidation",
        "osseous structures intact",
    ),
    "ecg_report": (
        "sinus rhythm without ectopy",
        "intervals within normal limits",
        "no ischemic changes seen",
    ),
    "echo_report": (
        "ejection fraction preserved",
        "valves structurally normal",
        "no pericardial effusion",
    ),
    "respiratory_note": (
        "breath sounds clear bilaterally",
        "weaning protocol continued",
        "oxygen requirement unchanged",
    ),
    "nutrition_note": (
        "diet advanced as tolerated",
        "caloric intake meets estimated needs",
        "no swallowing difficulty reported",
    ),
    "pharmacy_note": (
        "medication reconciliation completed",
        "no interactions identified",
        "dosing appropriate for renal function",
    ),
    "social_work_note": (
        "support system in place at home",
        "transportation arranged for follow up",
        "coping adequately with admission",
    ),
    "case_management_note": (
        "disposition planning in progress",
        "insurance authorization obtained",
        "home services referral submitted",
    ),
    "consult_note": (
        "thank you for this interesting consultation",
        "recommendations discussed with the admitting team",
        "will continue to follow",
    ),
    "rehab_note": (
        "mobility improving with therapy",
        "patient participates fully in sessions",
        "strength grossly symmetric",
    ),
    "general_note": (
        "seen and examined at bedside",
        "no new complaints voiced",
        "plan of care reviewed",
    ),
}
