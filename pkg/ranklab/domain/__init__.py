from .types import (
    AMENITIES, DISTRICTS, BASELINE_DISTRICT, DISTRICT_DUMMIES, MATCH_NAMES,
    X1_NAMES, X2_NAMES, Z_NAMES, BETA2_NAMES, BETA_XZ_NAMES, REQUEST_NAMES,
    POSITION_NAMES, CLICK_NAMES,
    UserProfile, Listing, SearchResultSlot, SearchLog, DerivedCovariates,
    DatasetMeta, Dataset,
)
from .covariates import (
    derive_covariates, gender_match, age_match, occupation_match, position_features,
)
from .table import SlotTable
from .validation import (
    Violation, ValidationReport, validate_dataset, validate, restrict_sample,
)
