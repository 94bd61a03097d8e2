"""Financial-distress identification from financial ratios.

Ratio computation and labelling (:mod:`finstat`), correlation PCA with varimax
rotation (:mod:`pca`), agglomerative clustering (:mod:`hcluster`), CHAID trees
(:mod:`chaid`) and a binary logit (:mod:`logit`), tied together by
:mod:`pipeline` and the ``distress-lab`` command line.
"""
from .finstat import (
    RATIO_CODES,
    CompanyRecord,
    Dataset,
    HealthLabel,
    Label,
    RatioVector,
    Reason,
    build_dataset,
    compute_ratios,
    label_company,
    parse_statements,
)

__version__ = "0.1.0"
