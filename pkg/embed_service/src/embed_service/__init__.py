"""Audio embedding microservice and batch tool.

Wraps per-window feature models behind one HTTP endpoint and a batch CLI,
producing the binary matrix files the soundtrack evaluator consumes.
"""

from .matrix import matrix_payload, parse_matrix_payload
from .models import build_registry
from .service import create_app

__version__ = "0.1.0"
