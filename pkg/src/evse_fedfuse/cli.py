"""EVSE FedFuse CLI."""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click
import numpy as np
from rich.console import Console
from rich.table import Table

from evse_fedfuse import __version__
from evse_fedfuse.core.checkpoint import save_checkpoint
from evse_fedfuse.core.dataset import IngestReport, load_csv, normalize
from evse_fedfuse.core.evaluation import FUSED
from evse_fedfuse.core.experiments import EXPERIMENTS, run_experiment, write_experiment
from evse_fedfuse.core.metrics import MetricsReport, write_metrics
from evse_fedfuse.core.pipeline import (
    centralized_arm,
    evaluate_saved,
    federated_arm,
    prepare_data,
    save_bundles,
    train_autoencoders,
)
from evse_fedfuse.core.run_paths import RunPaths
from evse_fedfuse.core.synth import synth_generate, to_frames
from evse_fedfuse.errors import FedFuseError
from evse_fedfuse.models.config import (
    ExperimentConfig,
    apply_overrides,
    load_config,
)
from evse_fedfuse.models.labels import CLASS_NAMES, Modality, cicevse_schema
from evse_fedfuse.utils.io import format_cell, write_json, write_jsonl
from evse_fedfuse.utils.log import setup_logging
from evse_fedfuse.utils.seeding import derive_seed

console = Console()


def _handle_errors(f):
    """패키지 예외를 ClickException(종료 코드 1)으로 바꾼다."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except FedFuseError as e:
            raise click.ClickException(str(e)) from e

    return wrapper


def _common_options(f):
    """공통 옵션 데코레이터."""
    f = click.option(
        "--config", "config_path", default=None, type=click.Path(dir_okay=False),
        help="설정 파일 (TOML 또는 JSON)",
    )(f)
    f = click.option("--seed", default=None, type=int, help="마스터 시드")(f)
    f = click.option(
        "--out", default=None, type=click.Path(file_okay=False), help="출력 디렉토리"
    )(f)
    f = click.option(
        "--jobs", default=None, type=click.IntRange(min=1),
        help="병렬 작업 수 (기본: 프로세서 수)",
    )(f)
    f = click.option(
        "--dataset-net", default=None, type=click.Path(exists=True, dir_okay=False),
        help="네트워크 트래픽 특성 CSV",
    )(f)
    f = click.option(
        "--dataset-kernel", default=None, type=click.Path(exists=True, dir_okay=False),
        help="커널/HPC 이벤트 특성 CSV",
    )(f)
    f = click.option(
        "--cap-per-class", default=None, type=click.IntRange(min=1),
        help="클래스별 최대 페어 수",
    )(f)
    f = click.option("--synth", is_flag=True, help="합성 데이터로 실행")(f)
    return f


def _fed_options(f):
    f = click.option(
        "--clients", default=None, type=click.IntRange(min=1), help="충전소(클라이언트) 수"
    )(f)
    f = click.option(
        "--rounds", default=None, type=click.IntRange(min=1), help="연합 라운드 수"
    )(f)
    return f


def _resolve_config(
    config_path: str | None,
    seed: int | None,
    out: str | None,
    dataset_net: str | None,
    dataset_kernel: str | None,
    cap_per_class: int | None,
    synth: bool,
    clients: int | None = None,
    rounds: int | None = None,
) -> ExperimentConfig:
    """기본값 < 설정 파일 < 플래그 순서로 설정을 합친다."""
    config = load_config(Path(config_path) if config_path else None)
    if synth and (dataset_net or dataset_kernel):
        raise click.UsageError("--synth와 --dataset-* 옵션은 함께 쓸 수 없습니다.")

    overrides: dict = {
        "seed": seed,
        "out_dir": out,
        "data.net_path": dataset_net,
        "data.kernel_path": dataset_kernel,
        "data.cap_per_class": cap_per_class,
        "fed.n_clients": clients,
        "fed.rounds": rounds,
    }
    if synth:
        spec = config.data.synth
        overrides["data.synth"] = spec.model_dump() if spec else {}
    config = apply_overrides(config, overrides)
    if synth:
        data = config.data.model_copy(update={"net_path": None, "kernel_path": None})
        config = config.model_copy(update={"data": data})

    data = config.data
    if not data.uses_csv and data.synth is None:
        raise click.UsageError(
            "데이터가 없습니다. --dataset-net/--dataset-kernel 또는 --synth를 지정하세요."
        )
    if data.uses_csv and (data.net_path is None or data.kernel_path is None):
        raise click.UsageError("--dataset-net과 --dataset-kernel을 모두 지정해야 합니다.")
    return config


def _start_run(config: ExperimentConfig) -> RunPaths:
    paths = RunPaths(config.out_dir)
    paths.out_dir.mkdir(parents=True, exist_ok=True)
    write_json(paths.config_file, config.model_dump(mode="json"))
    return paths


def _print_reports(title: str, reports: dict[str, MetricsReport]) -> None:
    table = Table(title=title)
    table.add_column("Scope", style="cyan")
    for name in ("Accuracy", "Precision", "Recall", "F1", "FPR"):
        table.add_column(name, justify="right", style="green")
    table.add_column("N", justify="right", style="yellow")
    for scope, r in reports.items():
        values = (r.accuracy, r.precision, r.recall, r.f1, r.fpr_binary)
        table.add_row(scope, *(format_cell(v) for v in values), str(r.n_samples))
    console.print(table)


def _print_rows(title: str, columns: list[str], rows: list[dict]) -> None:
    table = Table(title=title)
    for i, col in enumerate(columns):
        if i == 0:
            table.add_column(col, style="cyan")
        else:
            table.add_column(col, justify="right")
    for row in rows:
        table.add_row(*(format_cell(row.get(col, "")) for col in columns))
    console.print(table)


@click.group()
@click.version_option(__version__, prog_name="evse-fedfuse")
@click.option("--verbose", "-v", count=True, help="DEBUG 로그 출력")
@click.option("--quiet", "-q", is_flag=True, help="경고 이상만 출력")
def main(verbose: int, quiet: bool):
    """EVSE FedFuse: 충전소 멀티모달 연합 침입 탐지 실험 도구."""
    setup_logging(-1 if quiet else verbose)


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option(
    "--modality", type=click.Choice([m.value for m in Modality]),
    default=Modality.NETWORK.value, help="텔레메트리 종류",
)
@click.option("--label-column", default=None, help="라벨 열 이름 (기본: Scenario)")
@_handle_errors
def ingest(paths: tuple[str, ...], modality: str, label_column: str | None):
    """CSV 특성 테이블을 적재해 클래스별 표본 수를 보여줍니다."""
    kind = Modality(modality)
    schema = cicevse_schema(kind)
    if label_column:
        schema = schema.model_copy(update={"label_column": label_column})

    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found = sorted(p.glob("*.csv"))
            if not found:
                raise click.UsageError(f"CSV 파일이 없는 디렉토리입니다: {p}")
            files.extend(found)
        else:
            files.append(p)

    table = Table(title=f"적재 결과 ({kind.value})")
    table.add_column("파일", style="cyan")
    table.add_column("읽음", justify="right")
    table.add_column("제외", justify="right", style="dim")
    table.add_column("결측 삭제", justify="right", style="yellow")
    for name in CLASS_NAMES:
        table.add_column(name, justify="right", style="green")
    table.add_column("특성", justify="right")
    table.add_column("상수 특성", justify="right", style="dim")

    reports: list[IngestReport] = []
    for path in files:
        dataset, report = load_csv(path, schema, kind)
        stats = normalize(dataset).norm_stats
        reports.append(report)
        table.add_row(
            path.name,
            str(report.rows_read),
            str(report.rows_skipped),
            str(report.rows_dropped),
            *(str(report.class_counts.get(n, 0)) for n in CLASS_NAMES),
            str(report.n_features),
            str(stats.constant_count),
        )
    console.print(table)


@main.command()
@click.option(
    "--out", default="data/synth", type=click.Path(file_okay=False), help="출력 디렉토리"
)
@click.option(
    "--n-per-class", default=500, type=click.IntRange(min=10), help="클래스당 표본 수"
)
@click.option("--d1", default=48, type=click.IntRange(min=3), help="네트워크 특성 수")
@click.option("--d2", default=40, type=click.IntRange(min=3), help="커널 특성 수")
@click.option(
    "--coupling", type=click.Choice(["joint-only", "independent"]),
    default="joint-only", help="클래스 신호 배치 방식",
)
@click.option(
    "--noise", default=0.1, type=click.FloatRange(min=0.0), help="가우시안 잡음 표준편차"
)
@click.option("--seed", default=0, type=int, help="시드")
@_handle_errors
def synth(
    out: str, n_per_class: int, d1: int, d2: int, coupling: str, noise: float, seed: int
):
    """합성 페어 데이터셋을 network.csv / kernel.csv로 씁니다."""
    paths = RunPaths(Path(out))
    paths.out_dir.mkdir(parents=True, exist_ok=True)
    dataset = synth_generate(n_per_class, d1, d2, coupling, noise, seed)
    for modality, frame in zip(Modality, to_frames(dataset)):
        frame.to_csv(paths.dataset_csv(modality), index=False, lineterminator="\n")

    console.print(f"[green]생성 완료![/green] {len(dataset)}쌍 ({coupling})")
    console.print(f"  네트워크: {paths.dataset_csv(Modality.NETWORK)}")
    console.print(f"  커널: {paths.dataset_csv(Modality.KERNEL)}")


@main.command("train-ae")
@_common_options
@_handle_errors
def train_ae(
    config_path, seed, out, jobs, dataset_net, dataset_kernel, cap_per_class, synth
):
    """모달리티별 오토인코더만 학습해 저장합니다."""
    config = _resolve_config(
        config_path, seed, out, dataset_net, dataset_kernel, cap_per_class, synth
    )
    paths = _start_run(config).ensure()
    prepared = prepare_data(config)
    aes = train_autoencoders(
        prepared.train, config, derive_seed(config.seed, "ae", "central"), FUSED, jobs
    )

    table = Table(title="오토인코더")
    table.add_column("모달리티", style="cyan")
    table.add_column("입력 차원", justify="right")
    table.add_column("파라미터", justify="right")
    table.add_column("테스트 MSE", justify="right", style="green")
    summary = {}
    for modality, ae in aes.items():
        stats = prepared.norm_stats[modality]
        save_checkpoint(paths.ae_checkpoint(modality), ae, stats)
        x = prepared.test.features(modality)
        mse = float(np.mean((ae.reconstruct(x) - x) ** 2))
        summary[modality.value] = {
            "d": ae.d, "parameters": ae.params.count, "test_mse": mse
        }
        table.add_row(modality.value, str(ae.d), str(ae.params.count), f"{mse:.6f}")
    write_json(paths.metrics_json, {"command": "train-ae", "autoencoders": summary})
    console.print(table)


@main.command()
@_common_options
@_handle_errors
def train(
    config_path, seed, out, jobs, dataset_net, dataset_kernel, cap_per_class, synth
):
    """중앙집중 방식으로 AE + 융합 CNN을 학습합니다."""
    config = _resolve_config(
        config_path, seed, out, dataset_net, dataset_kernel, cap_per_class, synth
    )
    paths = _start_run(config)
    prepared = prepare_data(config)
    arm = centralized_arm(prepared, config, jobs=jobs)
    save_bundles(paths, [arm.bundle], prepared.norm_stats)

    reports = evaluate_saved(paths, prepared, config)
    write_metrics(
        paths.out_dir,
        reports,
        extra={
            "command": "train",
            "parameter_counts": arm.bundle.parameter_counts,
            "train_loss": arm.history.loss,
            "train_accuracy": arm.history.accuracy,
        },
    )
    _print_reports("중앙집중 학습 결과", reports)


@main.command("train-fed")
@_common_options
@_fed_options
@_handle_errors
def train_fed(
    config_path, seed, out, jobs, dataset_net, dataset_kernel, cap_per_class, synth,
    clients, rounds,
):
    """충전소별 로컬 AE와 연합 CNN을 학습합니다."""
    config = _resolve_config(
        config_path, seed, out, dataset_net, dataset_kernel, cap_per_class, synth,
        clients, rounds,
    )
    paths = _start_run(config)
    prepared = prepare_data(config)
    arm = federated_arm(prepared, config, jobs=jobs)
    save_bundles(paths, arm.bundles, prepared.norm_stats, federated=True)
    write_jsonl(paths.rounds_log, [r.to_record() for r in arm.rounds])

    reports = evaluate_saved(paths, prepared, config)
    write_metrics(
        paths.out_dir,
        reports,
        extra={
            "command": "train-fed",
            "parameter_counts": arm.bundles[0].parameter_counts,
            "client_samples": [s.sample_count for s in arm.train_shards],
        },
    )
    _print_reports("연합 학습 결과", reports)


@main.command("eval")
@click.option(
    "--out", required=True, type=click.Path(file_okay=False), help="학습 실행 디렉토리"
)
@click.option(
    "--config", "config_path", default=None, type=click.Path(dir_okay=False),
    help="설정 파일 (기본: <out>/config.json)",
)
@click.option("--json", "as_json", is_flag=True, help="지표를 JSON으로 출력")
@_handle_errors
def eval_cmd(out: str, config_path: str | None, as_json: bool):
    """저장된 체크포인트로 테스트 분할을 다시 평가합니다."""
    paths = RunPaths(Path(out))
    if not paths.has_checkpoints():
        raise click.UsageError(f"체크포인트가 없습니다: {paths.checkpoints_dir}")
    source = Path(config_path) if config_path else paths.config_file
    if not source.is_file():
        raise click.UsageError(f"설정 파일이 없습니다: {source}")
    config = load_config(source)

    reports = evaluate_saved(paths, prepare_data(config), config)
    if as_json:
        document = {scope: r.model_dump() for scope, r in reports.items()}
        click.echo(json.dumps(document, indent=2))
    else:
        _print_reports("평가 결과", reports)


@main.command()
@click.argument("name", type=click.Choice(EXPERIMENTS))
@_common_options
@_fed_options
@_handle_errors
def experiment(
    name, config_path, seed, out, jobs, dataset_net, dataset_kernel, cap_per_class,
    synth, clients, rounds,
):
    """비교 실험 프로토콜을 실행합니다."""
    config = _resolve_config(
        config_path, seed, out, dataset_net, dataset_kernel, cap_per_class, synth,
        clients, rounds,
    )
    paths = _start_run(config)
    prepared = prepare_data(config)
    result = run_experiment(name, config, prepared, jobs)
    write_experiment(result, paths)
    _print_rows(name, result.columns, result.rows)


if __name__ == "__main__":  # pragma: no cover
    main()
