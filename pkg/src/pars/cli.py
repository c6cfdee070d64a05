"""Command-line interface.

Batch jobs (curate, simulate, sweep, judge-score) run in-process; the pure
computations (account, evaluate) can also be sent to a running service
instance with --server.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import sys

import click
import httpx

from .config import RunConfig, load_config
from .errors import ParsError
from .evaluation import PredictionSet, compute_metrics
from .experiments import (
    frontier_csv,
    halting_ablation,
    simulate_frontier,
    sweep_correctness_ratio,
    sweep_csv,
)
from .judge import JudgeClient, JudgeConfig, method_score
from .pipeline import curate_to_dir, load_prompt_records, read_jsonl
from .selectors import Strategy
from .teacher import PrefetchingTeacher, RemoteTeacher, SimTeacher

logger = logging.getLogger(__name__)


def _apply_overrides(cfg: RunConfig, seed, strategy, sim, concurrency) -> RunConfig:
    if seed is not None:
        cfg.seed = seed
        cfg.sim_teacher = dataclasses.replace(cfg.sim_teacher, seed=seed)
    if strategy is not None:
        cfg.strategy = Strategy(strategy)
    if sim:
        cfg.use_sim = True
    if concurrency is not None:
        cfg.concurrency = concurrency
    return cfg


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="TOML run configuration.")
@click.option("--seed", type=int, default=None, help="Override the run seed.")
@click.option("--strategy",
              type=click.Choice([s.value for s in Strategy]), default=None)
@click.option("--out", "out_dir", type=click.Path(), default="out",
              help="Output directory.")
@click.option("--concurrency", type=int, default=None)
@click.option("--sim", is_flag=True, help="Force the simulated teacher.")
@click.pass_context
def main(ctx, config_path, seed, strategy, out_dir, concurrency, sim):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(config_path) if config_path else RunConfig()
    cfg = _apply_overrides(cfg, seed, strategy, sim, concurrency)
    ctx.obj = {"cfg": cfg, "out_dir": out_dir}


def _make_teacher(cfg: RunConfig):
    if cfg.use_sim or cfg.teacher_endpoint is None:
        return SimTeacher(cfg.sim_teacher)
    teacher = RemoteTeacher(cfg.teacher_endpoint)
    if cfg.concurrency > 1:
        return PrefetchingTeacher(teacher, max_workers=cfg.concurrency)
    return teacher


@main.command()
@click.argument("prompts", type=click.Path(exists=True))
@click.pass_context
def curate(ctx, prompts):
    """Curate traces from a prompts JSONL file into the output directory."""
    cfg: RunConfig = ctx.obj["cfg"]
    out_dir = ctx.obj["out_dir"]
    records = load_prompt_records(prompts)
    judge = None
    if cfg.strategy is Strategy.JUDGE_RANKED:
        if cfg.judge_endpoint is None:
            raise click.ClickException("judge_ranked needs a judge_endpoint in config")
        judge = JudgeClient(JudgeConfig(endpoint=cfg.judge_endpoint))
    report = curate_to_dir(records, cfg, out_dir,
                           teacher=_make_teacher(cfg), judge=judge)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--seeds", default="0,1,2,3,4", show_default=True)
@click.option("--n-prompts", default=300, show_default=True)
@click.option("--ablation/--no-ablation", default=True, show_default=True,
              help="Also run the halting on/off comparison.")
@click.pass_context
def simulate(ctx, seeds, n_prompts, ablation):
    """Run the compute-accuracy frontier over strategies and seeds."""
    cfg: RunConfig = ctx.obj["cfg"]
    out_dir = ctx.obj["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    seed_list = tuple(int(s) for s in seeds.split(","))
    rows = simulate_frontier(cfg.sim_teacher, seeds=seed_list,
                             n_prompts=n_prompts, base_cfg=cfg)
    csv_path = os.path.join(out_dir, "frontier.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(frontier_csv(rows))
    summary = {}
    if ablation:
        result = halting_ablation(cfg.sim_teacher, seed=seed_list[0],
                                  n_prompts=max(n_prompts, 1000), pars_cfg=cfg.pars)
        summary["halting_ablation"] = dataclasses.asdict(result)
    summary["frontier"] = [dataclasses.asdict(r) for r in rows]
    with open(os.path.join(out_dir, "frontier_summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    click.echo(f"wrote {csv_path}")


@main.command()
@click.option("--sigmas", default="0.0,0.5,1.0,2.0,4.0,8.0", show_default=True)
@click.option("--n-prompts", default=500, show_default=True)
@click.pass_context
def sweep(ctx, sigmas, n_prompts):
    """Sweep teacher noise levels and report acceptance-ratio statistics."""
    cfg: RunConfig = ctx.obj["cfg"]
    out_dir = ctx.obj["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    levels = tuple(float(s) for s in sigmas.split(","))
    rows = sweep_correctness_ratio(levels, seed=cfg.seed, n_prompts=n_prompts,
                                   base_sim=cfg.sim_teacher)
    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sweep_csv(rows))
    click.echo(f"wrote {path}")


@main.command(name="judge-score")
@click.argument("curated", type=click.Path(exists=True))
@click.pass_context
def judge_score(ctx, curated):
    """Score curated traces with the configured judge endpoint."""
    cfg: RunConfig = ctx.obj["cfg"]
    if cfg.judge_endpoint is None:
        raise click.ClickException("judge-score needs a judge_endpoint in config")
    client = JudgeClient(JudgeConfig(endpoint=cfg.judge_endpoint))
    composites = []
    for row in read_jsonl(curated):
        score = client.score_trace(row["prompt_text"], row["trace"])
        composites.append(score.composite)
        click.echo(json.dumps({"prompt_id": row["prompt_id"],
                               "composite": score.composite}, sort_keys=True))
    click.echo(json.dumps({"method_score": method_score(composites),
                           "n_traces": len(composites)}, sort_keys=True))


@main.command()
@click.option("--t-in", "t_in", type=float, required=True)
@click.option("--t-out", "t_out", type=float, required=True)
@click.option("--t-select", "t_select", type=float, default=0.0, show_default=True)
@click.option("--k-avg", "k_avg", type=float, required=True)
@click.option("--r-acc", "r_acc", type=float, default=1.0, show_default=True)
@click.option("--judge", "judge_pass", is_flag=True)
@click.option("--server", default=None, help="Service base URL for thin-client mode.")
def account(t_in, t_out, t_select, k_avg, r_acc, judge_pass, server):
    """Print the expected token costs for the given accounting inputs."""
    body = {"t_teach_in": t_in, "t_teach_out": t_out, "t_select": t_select,
            "k_avg": k_avg, "r_acc": r_acc, "judge_pass": judge_pass}
    if server:
        response = httpx.post(f"{server.rstrip('/')}/account", json=body)
        response.raise_for_status()
        payload = response.json()
    else:
        from .accounting import TokenCostModel, tokens_per_accepted, tokens_per_prompt

        model = TokenCostModel(**body)
        payload = {
            "tokens_per_prompt": tokens_per_prompt(model),
            "tokens_per_accepted": tokens_per_accepted(model) if r_acc > 0 else None,
        }
    click.echo(f"{'tokens/prompt':>16}  {payload['tokens_per_prompt']:.1f}")
    if payload["tokens_per_accepted"] is not None:
        click.echo(f"{'tokens/accepted':>16}  {payload['tokens_per_accepted']:.1f}")


@main.command()
@click.argument("predictions", type=click.Path(exists=True))
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Write the report JSON here as well as stdout.")
@click.option("--server", default=None, help="Service base URL for thin-client mode.")
def evaluate(predictions, report_path, server):
    """Compute student-side metrics from a predictions JSONL file.

    Rows carry prompt_id, y, envelope, and a runs array.
    """
    rows = read_jsonl(predictions)
    if server:
        body = {"sets": [{"prompt_id": r["prompt_id"], "y": r["y"],
                          "envelope": r.get("envelope", 100.0),
                          "runs": r["runs"]} for r in rows]}
        response = httpx.post(f"{server.rstrip('/')}/evaluate", json=body)
        response.raise_for_status()
        payload = response.json()
    else:
        sets = [PredictionSet(prompt_id=r["prompt_id"], ground_truth_y=r["y"],
                              envelope_percent=r.get("envelope", 100.0),
                              runs=tuple(r["runs"])) for r in rows]
        payload = compute_metrics(sets).__dict__
    text = json.dumps(payload, indent=2, sort_keys=True)
    click.echo(text)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


def cli_entry():
    try:
        main(standalone_mode=False)
    except ParsError as exc:
        click.echo(f"error [{type(exc).__name__}]: {exc}", err=True)
        sys.exit(2)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)


if __name__ == "__main__":
    cli_entry()
