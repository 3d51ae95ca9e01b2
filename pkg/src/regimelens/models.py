"""Named model specifications and their reference coefficient sets."""

from __future__ import annotations

from .dataset import AuctionMonth, ModelSpec, Term

DEBATE = AuctionMonth(2004, 5)
REFORM = AuctionMonth(2008, 1)

INTERCEPT = Term.intercept()
PMIN_1 = Term.lagged("p_min", 1)
PMIN_0 = Term.lagged("p_min", 0)
QUOTA_0 = Term.lagged("n_quota", 0)
QUOTA_1 = Term.lagged("n_quota", 1)
BIDDER_0 = Term.lagged("n_bidder", 0)
BIDDER_1 = Term.lagged("n_bidder", 1)
D2004 = Term.dummy(DEBATE)
D2008 = Term.dummy(REFORM)
DQUOTA = Term.delta_quota()

_TERMS: dict[str, tuple[Term, ...]] = {
    "m1": (INTERCEPT, PMIN_1, QUOTA_0, QUOTA_1, BIDDER_1),
    "m2": (INTERCEPT, PMIN_1, QUOTA_0, QUOTA_1),
    "m3": (INTERCEPT, PMIN_1, QUOTA_0, QUOTA_1, BIDDER_1, D2004, D2008),
    "m4": (INTERCEPT, PMIN_1, QUOTA_0, QUOTA_1, D2008),
    "m5": (INTERCEPT, PMIN_1, D2004),
    "m6": (INTERCEPT, PMIN_1),
    "m10": (INTERCEPT, PMIN_1, DQUOTA, D2008),
    "simple": (INTERCEPT, PMIN_0),
    "robust-simple": (INTERCEPT, PMIN_0),
    "bidder-quota": (INTERCEPT, QUOTA_0),
}

MODEL_IDS = ("m1", "m2", "m3", "m4", "m5", "m6", "m10", "simple", "robust-simple")

# Full-sample estimates reported for the original series; m5 and m6 were
# never fitted on the full sample, so theirs are plausible stand-ins.
REFERENCE_COEFFICIENTS: dict[str, dict[Term, float]] = {
    "m1": {INTERCEPT: 8601, PMIN_1: 0.814, QUOTA_0: -2.343, QUOTA_1: 2.243, BIDDER_1: 0.025},
    "m2": {INTERCEPT: 8584, PMIN_1: 0.814, QUOTA_0: -2.316, QUOTA_1: 2.277},
    "m3": {
        INTERCEPT: 7925, PMIN_1: 0.780, QUOTA_0: -2.009, QUOTA_1: 2.423,
        BIDDER_1: 0.040, D2004: -771, D2008: -3144,
    },
    "m4": {INTERCEPT: 8144, PMIN_1: 0.774, QUOTA_0: -2.007, QUOTA_1: 2.401, D2008: -3020},
    "m5": {INTERCEPT: 8000, PMIN_1: 0.78, D2004: -800},
    "m6": {INTERCEPT: 8000, PMIN_1: 0.80},
    "m10": {INTERCEPT: 8144, PMIN_1: 0.774, DQUOTA: -2.401, D2008: -3020},
    "simple": {INTERCEPT: 1251, PMIN_0: 0.988},
    "robust-simple": {INTERCEPT: 1251, PMIN_0: 0.988},
}


def get_spec(model_id: str) -> ModelSpec:
    try:
        terms = _TERMS[model_id]
    except KeyError:
        raise KeyError(
            f"unknown model {model_id!r}; valid ids: {', '.join(MODEL_IDS)}"
        ) from None
    return ModelSpec(terms, name=model_id)
