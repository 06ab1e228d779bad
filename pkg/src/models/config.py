import math
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from src.core.constants import Constants


class HeadSpec(BaseModel):
    out_dim: int = Field(ge=1)
    loss: Literal["classification", "regression"] = Constants.LOSS_CLASSIFICATION
    name: Optional[str] = None


class ModelSpec(BaseModel):
    input_dim: int = Field(ge=1)
    encoder_dims: List[int] = Field(default_factory=list)
    activation: Literal["relu", "tanh", "identity"] = Constants.ACTIVATION_RELU
    heads: List[HeadSpec]
    num_tasks: Optional[int] = None
    rank: int = Field(default=1, ge=1)
    alpha: float = Field(default=1.0, ge=0.0)
    # All tasks read the output of one head layer (conflicting objectives on a single predictor)
    shared_head: bool = False

    @field_validator("encoder_dims")
    @classmethod
    def _positive_widths(cls, value: List[int]) -> List[int]:
        if any(width < 1 for width in value):
            raise ValueError("encoder widths must be positive")
        return value

    @model_validator(mode="after")
    def _check_tasks(self) -> "ModelSpec":
        if not self.heads:
            raise ValueError("at least one head is required")
        if self.num_tasks is None:
            self.num_tasks = len(self.heads)
        elif self.num_tasks != len(self.heads):
            raise ValueError(f"num_tasks={self.num_tasks} but {len(self.heads)} heads given")
        if self.shared_head and len({head.out_dim for head in self.heads}) != 1:
            raise ValueError("a shared head requires equal out_dim for every task")
        return self

    @property
    def task_count(self) -> int:
        return len(self.heads)


class ScheduleConfig(BaseModel):
    num_tasks: Optional[int] = None
    samples_per_batch: int = Field(default=5, ge=1)
    mode: Literal["deterministic", "dirichlet", "fixed"] = Constants.SCHEDULE_DETERMINISTIC
    annealed: bool = True
    temperature: float = Field(default=1.0, gt=0.0)
    concentration: float = Field(default=1.0, gt=0.0)
    fixed_preference: Optional[List[float]] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check_fixed(self) -> "ScheduleConfig":
        if self.fixed_preference is not None:
            if any(w < 0 for w in self.fixed_preference):
                raise ValueError("fixed_preference must be nonnegative")
            if abs(sum(self.fixed_preference) - 1.0) > Constants.SIMPLEX_TOLERANCE:
                raise ValueError("fixed_preference must sum to 1")
            if self.num_tasks is not None and len(self.fixed_preference) != self.num_tasks:
                raise ValueError("fixed_preference length must equal num_tasks")
        return self


class OptimizerConfig(BaseModel):
    name: Literal["adam", "sgd"] = Constants.OPTIMIZER_ADAM
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    momentum: float = Field(default=0.0, ge=0.0, lt=1.0)


class TrainConfig(BaseModel):
    epochs: int = Field(ge=0)
    batch_size: int = Field(gt=0)
    # expansion falls back to the checkpoint's final learning rate when omitted
    learning_rate: Optional[float] = Field(default=None, gt=0.0)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    mode: Literal["scratch", "expand"] = Constants.MODE_SCRATCH
    seed: int
    hv_reference: Optional[List[float]] = None
    eval_grid_size: Optional[int] = Field(default=None, ge=1)
    keep_epoch_fronts: bool = False

    @model_validator(mode="after")
    def _learning_rate_for_scratch(self) -> "TrainConfig":
        if self.learning_rate is None and self.mode == Constants.MODE_SCRATCH:
            raise ValueError("learning_rate is required when training from scratch")
        return self

    @field_validator("hv_reference")
    @classmethod
    def _finite_reference(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and not all(math.isfinite(v) for v in value):
            raise ValueError("hv_reference must be finite")
        return value


class SyntheticSpec(BaseModel):
    input_dim: int = Field(default=5, ge=2)
    num_samples: int = Field(default=10000, ge=2)
    noise: float = Field(default=0.01, ge=0.0)
    anchor_a: Optional[List[float]] = None
    anchor_b: Optional[List[float]] = None


class MultiMnistSpec(BaseModel):
    images_path: str = "train-images-idx3-ubyte.gz"
    labels_path: str = "train-labels-idx1-ubyte.gz"
    num_samples: int = Field(default=10000, ge=1)
    without_replacement: bool = False


class DataConfig(BaseModel):
    kind: Literal["synthetic", "multimnist"] = Constants.DATA_SYNTHETIC
    val_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)
    multimnist: MultiMnistSpec = Field(default_factory=MultiMnistSpec)


class RunConfig(BaseModel):
    model: ModelSpec
    train: TrainConfig
    data: DataConfig = Field(default_factory=DataConfig)
    outputs: Optional[str] = None

    @model_validator(mode="after")
    def _propagate(self) -> "RunConfig":
        schedule = self.train.schedule
        if schedule.num_tasks is None:
            schedule.num_tasks = self.model.task_count
        elif schedule.num_tasks != self.model.task_count:
            raise ValueError("schedule.num_tasks must match the number of heads")
        if schedule.seed is None:
            schedule.seed = self.train.seed
        if schedule.fixed_preference is not None and len(schedule.fixed_preference) != schedule.num_tasks:
            raise ValueError("fixed_preference length must equal the number of tasks")
        if self.train.hv_reference is not None and len(self.train.hv_reference) != schedule.num_tasks:
            raise ValueError("hv_reference length must equal the number of tasks")
        if schedule.mode == Constants.SCHEDULE_DETERMINISTIC:
            # scheduler imports this module
            from src.training.scheduler import base_grid

            base_grid(schedule.num_tasks, schedule.samples_per_batch)
        return self


class SweepAxes(BaseModel):
    samples_per_batch: List[int] = Field(default_factory=lambda: [3, 5])
    alpha: List[float] = Field(default_factory=lambda: [1.0, 5.0])
    mode: List[Literal["deterministic", "dirichlet"]] = Field(
        default_factory=lambda: ["deterministic", "dirichlet"]
    )
    annealed: List[bool] = Field(default_factory=lambda: [True, False])
    temperature: List[float] = Field(default_factory=lambda: [1.0])
    concentration: List[float] = Field(default_factory=lambda: [1.0])
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])


class AblationConfig(BaseModel):
    base: RunConfig
    sweep: SweepAxes = Field(default_factory=SweepAxes)
