"""
mcvar configuration file
"""

from os import getenv
from typing import List, Tuple

commodity_types: List[str] = [
    "global",
    "energy",
    "metal",
    "agriculture",
]
_env_types = getenv("MCVAR_COMMODITY_TYPES", None)
if _env_types:
    commodity_types = [label.strip() for label in _env_types.split(",") if label]

burn_in: int = 200
zero_variance_threshold: float = 1e-12
standardization_tolerance: float = 1e-8
fusion_merge_tolerance: float = 1e-6
null_model_margin: float = 1e-3
adf_min_length: int = 25

pen_width_range: Tuple[float, float] = (0.5, 4.0)
positive_color = "blue"
negative_color = "red"
positive_gray = "gray25"
negative_gray = "gray70"
missing_marker = "NA"

price_columns: List[str] = ["date", "class", "series", "type", "price"]
return_columns: List[str] = ["date", "class", "series", "type", "return"]
table_extensions: List[str] = [".csv", ".parquet", ".feather", ".fea", ".csv.gz"]
