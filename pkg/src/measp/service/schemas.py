"""Request/response models for the HTTP service.

Programs, registries, models, and CSV tables travel inline as text, so
the service holds no state between calls. The two exceptions are solve
and bench, which point at files on the server's filesystem because the
engines themselves run there.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class GroundFeaturesRequest(BaseModel):
    program: str
    format: Literal["ground-numeric", "ground-text"] = "ground-numeric"
    instance_id: str = "instance"


class NongroundFeaturesRequest(BaseModel):
    program: str
    instance_id: str = "instance"


class FeaturesResponse(BaseModel):
    instance_id: str
    manifest: str
    names: list[str]
    values: list[float]
    warnings: list[str] = Field(default_factory=list)


class TrainRequest(BaseModel):
    algo: Literal["knn", "part"]
    features_csv: str
    runtimes_csv: str
    k: int = 1
    min_leaf: int = 2


class TrainResponse(BaseModel):
    model_text: str
    algo: str
    manifest: str
    n_rows: int
    excluded: list[str]
    label_counts: dict[str, int]


class PredictRequest(BaseModel):
    model_text: str
    features_csv: str


class PredictionRow(BaseModel):
    instance_id: str
    label: str


class PredictResponse(BaseModel):
    predictions: list[PredictionRow]


class SolveRequest(BaseModel):
    program_path: str
    registry_text: str
    solver_model_text: Optional[str] = None
    grounder_model_text: Optional[str] = None
    timeout_seconds: float = 600.0
    memory_mib: int = 2048
    bridge_mode: Literal["canonical", "paper-faithful"] = "canonical"
    simulate: bool = False
    instance_id: Optional[str] = None


class SolveResponse(BaseModel):
    instance_id: str
    status: str
    exit_code: int
    cpu_seconds: float
    answer_digest: Optional[str] = None
    selected_grounder: str
    selected_solver: str
    trace_text: str
    trace_csv_header: str
    trace_csv_row: str


class BenchRequest(BaseModel):
    instance_paths: list[str]
    registry_text: str
    timeout_seconds: float = 600.0
    memory_mib: int = 2048
    jobs: int = 1
    resume_path: Optional[str] = None
    simulate: bool = False


class EngineStatsRow(BaseModel):
    engine: str
    n_solved: int
    total_time_solved: float
    mean_time_solved: Optional[float] = None


class SotaRow(BaseModel):
    solved: int
    total: int
    mean_time_solved: Optional[float] = None


class BenchResponse(BaseModel):
    table_csv: str
    engines: list[EngineStatsRow]
    sota: SotaRow


class StatsRequest(BaseModel):
    runtimes_csv: str


class StatsResponse(BaseModel):
    engines: list[EngineStatsRow]
    sota: SotaRow


class CactusRequest(BaseModel):
    runtimes_csv: str


class CactusResponse(BaseModel):
    csv: str


class CvRequest(BaseModel):
    features_csv: str
    runtimes_csv: str
    algo: Literal["knn", "part"]
    folds: int = 10
    k: int = 1
    min_leaf: int = 2
    seed: int = 0


class CvResponse(BaseModel):
    accuracy: float
    fold_accuracies: list[float]
    confusion: dict[str, dict[str, int]]
    n_rows: int
    excluded: list[str]
