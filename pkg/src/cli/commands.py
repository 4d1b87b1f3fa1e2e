"""
CLI commands for CoughScreen — Click-based interface.

Commands:
    coughscreen routes         — Print the sampling-rate routing table
    coughscreen featurize      — Dump the Log-Mel features of one WAV
    coughscreen gen-synthetic  — Write a synthetic labelled corpus + manifest
    coughscreen pretrain       — Pretrain and freeze the stage-2 backbones
    coughscreen train          — Fit one deployable model per case
    coughscreen cv             — k-fold cross-validation (AUC per fold and case)
    coughscreen predict        — Score one WAV with trained models
    coughscreen evaluate       — Score a labelled manifest and report AUC
    coughscreen serve          — Start the HTTP scoring service

Command results go to stdout (JSON lines, or the routing table); tables for
humans and all logs go to stderr.
"""

from __future__ import annotations

import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from src.constants import ANCHOR_RATES, PROJECT_DISPLAY_NAME, PROJECT_NAME, PROJECT_VERSION
from src.errors import CoughScreenError

console = Console(stderr=True)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

BACKBONE_SUFFIX = "-backbone.fcv"
CV_REPORT_FILE = "cv_report.json"


# ──────────────────────── shared options ────────────────────────


def config_option(fn: Callable) -> Callable:
    return click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="Config file (JSON or TOML) layered over the defaults",
    )(fn)


def seed_option(fn: Callable) -> Callable:
    return click.option("--seed", default=42, show_default=True, type=int, help="Master random seed")(fn)


def models_option(fn: Callable) -> Callable:
    return click.option(
        "--model",
        "model_paths",
        multiple=True,
        required=True,
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Model checkpoint (.fcv); repeat once per case",
    )(fn)


def manifest_option(fn: Callable) -> Callable:
    return click.option(
        "--manifest",
        "manifest_path",
        required=True,
        type=click.Path(dir_okay=False, path_type=Path),
        help="CSV manifest with uuid,path,label[,fold]",
    )(fn)


def threshold_option(fn: Callable) -> Callable:
    return click.option(
        "--threshold",
        type=click.FloatRange(0.0, 1.0),
        default=None,
        help="Decision threshold for the label (default from config)",
    )(fn)


def _load(config_path: Path | None):  # -> CoughScreenConfig
    """Load configuration and configure logging; invalid config is a usage error."""
    from src.config import load_config
    from src.utils.logging import bind_command, setup_logging

    try:
        config = load_config(config_path)
    except (ValidationError, ValueError) as e:
        raise click.UsageError(f"invalid configuration: {e}") from e
    setup_logging(level=config.logging.level, json_format=config.logging.format == "json")
    bind_command(click.get_current_context().info_name)
    return config


def _emit(payload: Any) -> None:
    """One JSON document per line on stdout."""
    click.echo(json.dumps(payload, sort_keys=True))


def _scorer(model_paths: Sequence[Path], config, threshold: float | None):
    from src.pipeline.scoring import Scorer

    try:
        return Scorer.from_paths(
            model_paths,
            config.dsp,
            config.serving.threshold if threshold is None else threshold,
        )
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--model") from e


@click.group()
@click.version_option(PROJECT_VERSION, prog_name=PROJECT_DISPLAY_NAME)
def cli() -> None:
    """CoughScreen — two-stage cough-sound screening."""
    pass


# ──────────────────────── coughscreen routes ────────────────────────


@cli.command()
def routes() -> None:
    """Print the sampling-rate routing table."""
    from src.audio.routing import format_routes

    click.echo(format_routes())


# ──────────────────────── coughscreen featurize ────────────────────────


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@config_option
def featurize(input_path: Path, out_path: Path, config_path: Path | None) -> None:
    """Route one WAV and dump its stage-1/stage-2 features."""
    from src.audio.routing import route
    from src.audio.wav import read_wav
    from src.features.featurizer import CaseFeaturizer
    from src.pipeline.dump import write_feature_dump

    config = _load(config_path)
    clip = read_wav(input_path)
    case = route(clip.sample_rate)
    features = CaseFeaturizer(case, config.dsp).featurize(clip)
    write_feature_dump(features, case, out_path)
    _emit(
        {
            "case_id": case.case_id.value,
            "stage1_shape": list(features.stage1.shape),
            "stage2_shape": list(features.stage2.shape),
            "wavegram_samples": None if features.waveform is None else len(features.waveform),
            "out": str(out_path),
        }
    )


# ──────────────────────── coughscreen gen-synthetic ────────────────────────


@cli.command("gen-synthetic")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--per-case", default=600, show_default=True, type=click.IntRange(min=2), help="Clips per rate")
@click.option(
    "--extra-rate",
    "extra_rates",
    multiple=True,
    type=click.IntRange(min=1000),
    help="Also write clips at this non-anchor rate (e.g. 44100)",
)
@seed_option
def gen_synthetic(out_dir: Path, per_case: int, extra_rates: tuple[int, ...], seed: int) -> None:
    """Write a balanced synthetic corpus and its manifest.csv."""
    from src.pipeline.synthetic import generate_corpus

    _load(None)
    rates = tuple(dict.fromkeys((*ANCHOR_RATES, *extra_rates)))
    manifest = generate_corpus(out_dir, per_case=per_case, seed=seed, rates=rates)
    _emit({"manifest": str(manifest.source), "clips": len(manifest), "rates": list(rates)})


# ──────────────────────── coughscreen pretrain ────────────────────────


@cli.command()
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option(
    "--case",
    "case_ids",
    multiple=True,
    type=click.Choice(["CASE_4K", "CASE_8K", "CASE_48K"]),
    help="Only pretrain these cases (default: all)",
)
@config_option
@seed_option
def pretrain(out_dir: Path, case_ids: tuple[str, ...], config_path: Path | None, seed: int) -> None:
    """Pretrain the stage-2 backbone of each case on the proxy tag corpus."""
    from src.audio.routing import CASES, CaseId
    from src.models.checkpoint import save_backbone
    from src.pipeline.training import derive_seed, pretrain_case_cnn14

    config = _load(config_path)
    wanted = {CaseId(c) for c in case_ids} or set(CaseId)
    results: dict[str, dict[str, Any]] = {}
    for case_index, case_id in enumerate(CaseId):
        if case_id not in wanted:
            continue
        cnn14, score = pretrain_case_cnn14(CASES[case_id], config, derive_seed(seed, case_index))
        path = out_dir / f"{case_id.value}{BACKBONE_SUFFIX}"
        crc = save_backbone(cnn14, case_id, path, proxy_auc=score)
        results[case_id.value] = {"path": str(path), "proxy_auc": score, "crc": f"{crc:08x}"}

    table = Table(title="Proxy pretraining")
    table.add_column("Case", style="cyan")
    table.add_column("Held-out proxy AUC", style="green")
    for case_id, result in results.items():
        table.add_row(case_id, f"{result['proxy_auc']:.4f}")
    console.print(table)
    _emit(results)


# ──────────────────────── coughscreen train ────────────────────────


def _load_backbones(directory: Path | None) -> dict:
    from src.models.checkpoint import load_backbone

    if directory is None:
        return {}
    backbones = {}
    for path in sorted(directory.glob(f"*{BACKBONE_SUFFIX}")):
        case_id, cnn14 = load_backbone(path)
        backbones[case_id] = cnn14
    if not backbones:
        raise FileNotFoundError(f"no *{BACKBONE_SUFFIX} files in {directory}")
    return backbones


@cli.command()
@manifest_option
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option(
    "--pretrained",
    "pretrained_dir",
    default=None,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help="Directory of backbones written by `pretrain` (default: pretrain now)",
)
@config_option
@seed_option
def train(
    manifest_path: Path, out_dir: Path, pretrained_dir: Path | None, config_path: Path | None, seed: int
) -> None:
    """Fit one model per routed case on the whole manifest."""
    from src.models.checkpoint import CHECKPOINT_SUFFIX, save_checkpoint
    from src.pipeline.manifest import load_manifest
    from src.pipeline.training import train_models

    config = _load(config_path)
    manifest = load_manifest(manifest_path)
    models = train_models(manifest, config, seed=seed, backbones=_load_backbones(pretrained_dir))
    results = {}
    for model in models:
        path = out_dir / f"{model.case.case_id.value}{CHECKPOINT_SUFFIX}"
        crc = save_checkpoint(model, path)
        results[model.case.case_id.value] = {"path": str(path), "crc": f"{crc:08x}"}
    _emit(results)


# ──────────────────────── coughscreen cv ────────────────────────


@cli.command()
@manifest_option
@click.option(
    "--out",
    "out_dir",
    default=None,
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory for fold checkpoints and the full JSON report",
)
@click.option("--shuffle-labels", is_flag=True, default=False, help="Permute labels first (null control)")
@config_option
@seed_option
def cv(manifest_path: Path, out_dir: Path | None, shuffle_labels: bool, config_path: Path | None, seed: int) -> None:
    """Run k-fold cross-validation and report AUC per fold and per case."""
    from src.pipeline.cv import cross_validate
    from src.pipeline.manifest import load_manifest

    config = _load(config_path)
    manifest = load_manifest(manifest_path)
    report = cross_validate(manifest, config, seed=seed, shuffle_labels=shuffle_labels, checkpoint_dir=out_dir)
    if out_dir is not None:
        (out_dir / CV_REPORT_FILE).write_text(report.model_dump_json(indent=2), encoding="utf-8")

    table = Table(title=f"{config.cv.folds}-fold cross-validation" + (" (shuffled labels)" if shuffle_labels else ""))
    table.add_column("Case", style="cyan")
    table.add_column("n")
    table.add_column("Stage-1 AUC")
    table.add_column("Fused AUC", style="green")
    table.add_column("Proxy AUC")
    for case_id, summary in report.cases.items():
        table.add_row(
            case_id,
            str(summary.n),
            f"{summary.mean_stage1_auc:.4f} ± {summary.std_stage1_auc:.4f}",
            f"{summary.mean_auc:.4f} ± {summary.std_auc:.4f}",
            f"{summary.proxy_auc:.4f}",
        )
    table.add_row("pooled", str(report.n), "", f"{report.mean_auc:.4f} ± {report.std_auc:.4f}", "")
    console.print(table)
    _emit(report.summary())


# ──────────────────────── coughscreen predict ────────────────────────


@cli.command()
@models_option
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@threshold_option
@config_option
def predict(model_paths: tuple[Path, ...], input_path: Path, threshold: float | None, config_path: Path | None) -> None:
    """Score one WAV; prints one ScoreResponse JSON line."""
    config = _load(config_path)
    scorer = _scorer(model_paths, config, threshold)
    response = scorer.score_bytes(input_path.read_bytes(), source_id=str(input_path))
    click.echo(response.model_dump_json())


# ──────────────────────── coughscreen evaluate ────────────────────────


@cli.command()
@models_option
@manifest_option
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False, path_type=Path))
@threshold_option
@config_option
def evaluate(
    model_paths: tuple[Path, ...],
    manifest_path: Path,
    out_path: Path | None,
    threshold: float | None,
    config_path: Path | None,
) -> None:
    """Score a labelled manifest and report pooled and per-case AUC."""
    from src.pipeline.manifest import load_manifest
    from src.pipeline.scoring import evaluate_manifest

    config = _load(config_path)
    scorer = _scorer(model_paths, config, threshold)
    report = evaluate_manifest(scorer, load_manifest(manifest_path))
    if out_path is not None:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    _emit(report.model_dump(exclude={"predictions"}))


# ──────────────────────── coughscreen serve ────────────────────────


@cli.command()
@models_option
@click.option("--port", type=click.IntRange(1, 65535), default=None, help="Port (default from config)")
@threshold_option
@config_option
def serve(model_paths: tuple[Path, ...], port: int | None, threshold: float | None, config_path: Path | None) -> None:
    """Start the scoring service on the configured loopback host."""
    import uvicorn

    from src.gateway.app import create_app

    config = _load(config_path)
    scorer = _scorer(model_paths, config, threshold)
    port = config.serving.port if port is None else port
    console.print(
        f"[bold green]{PROJECT_DISPLAY_NAME} v{PROJECT_VERSION}[/] serving "
        f"{', '.join(scorer.cases)} on [cyan]http://{config.serving.host}:{port}/v1/score[/]"
    )
    uvicorn.run(create_app(config, scorer), host=config.serving.host, port=port, log_level="warning")


# ──────────────────────── Entry point ────────────────────────


def cli_main(argv: Sequence[str] | None = None) -> int:
    """
    Run the CLI and map failures to exit codes.

    0 on success, 1 for usage or configuration errors (usage on stderr),
    2 for data errors (bad audio, manifests, checkpoints, missing files).
    """
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name=PROJECT_NAME,
            standalone_mode=False,
        )
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted.", err=True)
        return EXIT_USAGE
    except (CoughScreenError, OSError) as e:
        code = e.code if isinstance(e, CoughScreenError) else type(e).__name__.removesuffix("Error")
        click.echo(f"error: {code}: {e}", err=True)
        return EXIT_DATA
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    """Console-script entry point."""
    from dotenv import load_dotenv

    load_dotenv()
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
