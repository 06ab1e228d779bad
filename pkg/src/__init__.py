"""PaLoRA toolkit

Pareto Front Learning with task-specific low-rank adapters composed by a preference vector.
"""

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()
__version__ = "1.0.0"
__author__ = "PaLoRA toolkit"
