"""Feature extraction scripts feeding the evaluation toolchain's TFV1 files."""

from .encoders import ALL_KINDS, IMAGE_KINDS, TEXT_KINDS, get_encoder
from .extract import ExtractionJob, run_extraction, write_tfv1

__version__ = "0.1.0"
