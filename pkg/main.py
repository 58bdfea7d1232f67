"""
Entry point for the Langevin smoothing lab.

    python main.py experiment --config config/config.json --seed 42
    python main.py plan --config config/experiment.cfg
"""

import sys
import logging
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from app.harness.cli import main

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)


if __name__ == "__main__":
    sys.exit(main())
