"""Entry point for ``python -m prpd_classifier``."""

import sys

from .cli import main

sys.exit(main())
