"""Project-wide constants for CoughScreen."""

from pathlib import Path

PROJECT_NAME = "coughscreen"
PROJECT_DISPLAY_NAME = "CoughScreen"
PROJECT_VERSION = "0.1.0"

# Default network config: LOOPBACK ONLY, never 0.0.0.0
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 18790

DEFAULT_CONFIG_FILE = Path(__file__).parent.parent / "config" / "default.toml"

# Routing anchors (Hz)
ANCHOR_RATES = (4000, 8000, 48000)

# Log-Mel feature constants
DB_FLOOR = -100.0
POWER_AMIN = 1e-10
DEFAULT_FMIN_HZ = 50.0

# Network input scaling of dB features: (dB - center) / scale
DB_INPUT_CENTER = -50.0
DB_INPUT_SCALE = 50.0

# Embedding sizes
EMBEDDING1_DIM = 64
CONV_BLOCK6_DIM = 128
EMBEDDING_LAYER_DIM = 64

# Serving
DEFAULT_THRESHOLD = 0.5
MAX_BODY_BYTES = 25 * 1024 * 1024
