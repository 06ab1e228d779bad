from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class FrontRecord(BaseModel):
    """One evaluated row of a front: preference, per-task losses and metrics."""

    preference: List[float]
    losses: List[float]
    task_metrics: List[float]
    nondominated: Optional[bool] = None

    @model_validator(mode="after")
    def _same_task_count(self) -> "FrontRecord":
        if len(self.preference) != len(self.losses) or len(self.losses) != len(self.task_metrics):
            raise ValueError("preference, losses and task_metrics must share the task count")
        return self


class HistoryRow(BaseModel):
    epoch: int
    scalarized_loss: float
    uniform_losses: List[float]
    hv: float
    hv_reference: List[float]
    alignment: List[float]
    nondominated_count: int
    learning_rate: float


class TrainHistory(BaseModel):
    rows: List[HistoryRow] = Field(default_factory=list)
    epoch_fronts: List[List[FrontRecord]] = Field(default_factory=list)
    steps: int = 0
    final_learning_rate: Optional[float] = None
