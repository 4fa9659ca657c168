from typing import Optional
from pydantic import BaseModel


class EditLabConfig(BaseModel):
    """Optional configuration for editlab behavior."""

    log_runs: bool = True
    log_path: Optional[str] = None
    log_level: str = "INFO"
    raise_on_divergence: bool = False
