"""FastAPI application wrapping the core package.

Handlers are sync functions (FastAPI runs them in a worker threadpool),
so engine subprocesses never block the event loop. Domain failures map
to HTTP 400 with a plain-text detail; everything stateful stays on the
caller's side.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, features, ground, harness, nonground
from ..classifiers import (KnnModel, ModelFormatError, dumps_model,
                           loads_model, predict_knn, predict_part, train_knn,
                           train_part)
from ..engines import Limits, RegistryError, registry_loads
from ..pipeline import PipelineConfig, PipelineError, PipelineTrace, evaluate
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="measp", version=__version__,
                  description="Multi-engine ASP toolkit: feature extraction, "
                              "engine selection, benchmarking")

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/features/ground", response_model=schemas.FeaturesResponse)
    def features_ground(req: schemas.GroundFeaturesRequest
                        ) -> schemas.FeaturesResponse:
        with _domain_errors():
            if req.format == "ground-numeric":
                program = ground.parse_numeric(req.program)
            else:
                program = ground.parse_text_ground(req.program)
            fv = features.extract_ground(program)
        return schemas.FeaturesResponse(
            instance_id=req.instance_id, manifest=fv.manifest_id,
            names=list(fv.names), values=list(fv.values))

    @app.post("/features/nonground", response_model=schemas.FeaturesResponse)
    def features_nonground(req: schemas.NongroundFeaturesRequest
                           ) -> schemas.FeaturesResponse:
        with _domain_errors():
            program = nonground.parse_nonground(req.program)
            fv = features.extract_nonground(program)
        return schemas.FeaturesResponse(
            instance_id=req.instance_id, manifest=fv.manifest_id,
            names=list(fv.names), values=list(fv.values),
            warnings=list(program.warnings))

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
        with _domain_errors():
            training, excluded = _training_set(req.features_csv,
                                               req.runtimes_csv)
            if req.algo == "knn":
                model = train_knn(training, k=req.k)
            else:
                model = train_part(training, min_leaf=req.min_leaf)
            counts: dict[str, int] = {}
            for lab in training.labels:
                counts[lab] = counts.get(lab, 0) + 1
        return schemas.TrainResponse(
            model_text=dumps_model(model), algo=req.algo,
            manifest=training.manifest_id, n_rows=len(training),
            excluded=list(excluded), label_counts=counts)

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
        with _domain_errors():
            model = loads_model(req.model_text)
            _, rows = features.from_csv(req.features_csv)
            predictions = []
            for iid, fv in rows:
                if isinstance(model, KnnModel):
                    label = predict_knn(model, fv)
                else:
                    label = predict_part(model, fv)
                predictions.append(
                    schemas.PredictionRow(instance_id=iid, label=label))
        return schemas.PredictResponse(predictions=predictions)

    @app.post("/solve", response_model=schemas.SolveResponse)
    def solve(req: schemas.SolveRequest) -> schemas.SolveResponse:
        with _domain_errors():
            cfg = PipelineConfig(
                registry=registry_loads(req.registry_text),
                grounder_model=_load_model_text(req.grounder_model_text),
                solver_model=_load_model_text(req.solver_model_text),
                limits=Limits(req.timeout_seconds,
                              req.memory_mib * 1024 * 1024),
                bridge_mode=req.bridge_mode)
            record, trace = evaluate(req.program_path, cfg,
                                     instance_id=req.instance_id,
                                     simulate=req.simulate)
        return schemas.SolveResponse(
            instance_id=record.instance_id, status=record.status,
            exit_code=trace.exit_code, cpu_seconds=record.cpu_seconds,
            answer_digest=record.answer_digest,
            selected_grounder=trace.selected_grounder,
            selected_solver=trace.selected_solver,
            trace_text=trace.to_text(),
            trace_csv_header=PipelineTrace.csv_header(),
            trace_csv_row=trace.to_csv_row())

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest) -> schemas.BenchResponse:
        with _domain_errors():
            registry = registry_loads(req.registry_text)
            instances = harness.scan_instances(req.instance_paths)
            table = harness.collect(
                instances, registry,
                Limits(req.timeout_seconds, req.memory_mib * 1024 * 1024),
                parallelism=req.jobs, resume_path=req.resume_path,
                simulate=req.simulate)
            engines, sota_row = _stats_rows(table)
        return schemas.BenchResponse(table_csv=table.to_csv(),
                                     engines=engines, sota=sota_row)

    @app.post("/stats", response_model=schemas.StatsResponse)
    def stats_endpoint(req: schemas.StatsRequest) -> schemas.StatsResponse:
        with _domain_errors():
            table = harness.RuntimeTable.from_csv(req.runtimes_csv)
            engines, sota_row = _stats_rows(table)
        return schemas.StatsResponse(engines=engines, sota=sota_row)

    @app.post("/cactus", response_model=schemas.CactusResponse)
    def cactus_endpoint(req: schemas.CactusRequest) -> schemas.CactusResponse:
        with _domain_errors():
            table = harness.RuntimeTable.from_csv(req.runtimes_csv)
            csv_text = harness.cactus_csv(harness.cactus(table))
        return schemas.CactusResponse(csv=csv_text)

    @app.post("/cv", response_model=schemas.CvResponse)
    def cv(req: schemas.CvRequest) -> schemas.CvResponse:
        with _domain_errors():
            training, excluded = _training_set(req.features_csv,
                                               req.runtimes_csv)
            params = {"k": req.k} if req.algo == "knn" \
                else {"min_leaf": req.min_leaf}
            report = harness.cross_validate(training, req.folds, req.algo,
                                            params, seed=req.seed)
            confusion: dict[str, dict[str, int]] = {}
            for (truth, got), count in sorted(report.confusion.items()):
                confusion.setdefault(truth, {})[got] = count
        return schemas.CvResponse(
            accuracy=report.accuracy,
            fold_accuracies=list(report.fold_accuracies),
            confusion=confusion, n_rows=len(training),
            excluded=list(excluded))

    return app


def _load_model_text(text: str | None):
    return loads_model(text) if text else None


def _training_set(features_csv: str, runtimes_csv: str):
    table = harness.RuntimeTable.from_csv(runtimes_csv)
    _, rows = features.from_csv(features_csv)
    fmap = dict(rows)
    result = harness.label_training(table, fmap)
    return result.training, result.excluded


def _stats_rows(table):
    per_engine = harness.stats(table)
    rows = [schemas.EngineStatsRow(
        engine=s.engine, n_solved=s.n_solved,
        total_time_solved=s.total_time_solved,
        mean_time_solved=s.mean_time_solved)
        for s in per_engine.values()]
    oracle = harness.sota(table)
    sota_row = schemas.SotaRow(solved=oracle.solved,
                               total=len(table.instances),
                               mean_time_solved=oracle.mean_time_solved)
    return rows, sota_row


class _domain_errors:
    """Translate domain failures into HTTP 400 responses."""

    _types = (ground.ParseError, ground.UnsupportedConstructError,
              ModelFormatError, RegistryError, PipelineError, ValueError,
              OSError)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, self._types):
            raise HTTPException(status_code=400, detail=str(exc))
        return False
