"""Development configuration."""

import os

# Environment
ENV = "dev"

# Logging settings
log_to_file = os.getenv("BIGCM_LOG_TO_FILE", "false").lower() == "true"
log_level = os.getenv("BIGCM_LOG_LEVEL", "DEBUG")

# Arithmetic bounds
factor_bound = int(os.getenv("BIGCM_FACTOR_BOUND", str(10**12)))
disc_bound = int(os.getenv("BIGCM_DISC_BOUND", str(10**6)))

# Numerics
default_precision = int(os.getenv("BIGCM_PRECISION", "128"))
trace_bound = int(os.getenv("BIGCM_TRACE_BOUND", "200"))
divisor_threshold = float(os.getenv("BIGCM_DIVISOR_THRESHOLD", "1e-6"))
tail_tolerance = float(os.getenv("BIGCM_TAIL_TOLERANCE", "1e-6"))
modularity_tolerance = float(os.getenv("BIGCM_MODULARITY_TOLERANCE", "1e-8"))
identity_tolerance = float(os.getenv("BIGCM_IDENTITY_TOLERANCE", "1e-3"))

# Conventions (see DESIGN.md)
bt_ord_mode = os.getenv("BIGCM_BT_ORD_MODE", "td")
petersson_model = os.getenv("BIGCM_PETERSSON_MODEL", "sl2")
xi_height_factor = int(os.getenv("BIGCM_XI_HEIGHT_FACTOR", "10"))

# Workers and cache
workers = int(os.getenv("BIGCM_WORKERS", "4"))
cache_dir = os.getenv("BIGCM_CACHE", ".bigcm-cache")

# Service info
service_name = "bigcm"
version = "1.0"
