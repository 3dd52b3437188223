"""``wssed`` command line: pool, gradcheck, decode, fuse, eval, synth, pipeline."""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import io
from .core import InvalidInputError
from .decode import fuse as fuse_clips
from .decode import mask_to_events
from .evaluation import EvalParams, score
from .pooling import PoolingKind, pool_posteriors
from .postprocess import DoubleThresholdParams, MedianFilterParams, postprocess
from .subsample import ConvPool, gradcheck as run_gradcheck, make_kind
from .synth import SynthSpec, generate

JOBS_ENV = "SED_DECODE_JOBS"
REPORT_DECIMALS = 4


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _dump_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text)


def make_post_params(method: str, phi=None, omega=None, phi_low=None, phi_hi=None):
    """Post-processing parameters from possibly-missing CLI/config values."""
    if method == "median":
        kw = {k: v for k, v in (("phi", phi), ("omega", omega)) if v is not None}
        return MedianFilterParams(**kw)
    if method == "double":
        kw = {k: v for k, v in (("phi_low", phi_low), ("phi_hi", phi_hi), ("omega", omega)) if v is not None}
        return DoubleThresholdParams(**kw)
    raise InvalidInputError(f"unknown post-processing method {method!r}")


def load_buckets(value):
    """Buckets as ``{"short": [...], "long": [...]}`` (file path or mapping) -> class map."""
    if value is None:
        return None
    if isinstance(value, (str, Path)):
        try:
            value = json.loads(Path(value).read_text())
        except (OSError, ValueError) as exc:
            raise InvalidInputError(f"cannot read buckets file {value}: {exc}") from None
    if set(value) <= {"short", "long"} and all(isinstance(v, list) for v in value.values()):
        out = {}
        for bucket, labels in value.items():
            for label in labels:
                if label in out:
                    raise InvalidInputError(f"class {label!r} appears in more than one bucket")
                out[label] = bucket
        return out
    return dict(value)


def _decode_one(clip, params):
    return mask_to_events(postprocess(clip, params))


def decode_corpus(paths, params, jobs: int = 1):
    """Read posterior files and decode them; returns ``(clips, events)`` keyed by clip id."""
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        clips = list(pool.map(io.read_posterior, paths))
        seen = {}
        for path, clip in zip(paths, clips):
            if clip.clip_id in seen:
                raise InvalidInputError(
                    f"duplicate clip id {clip.clip_id!r} in {seen[clip.clip_id]} and {path}"
                )
            seen[clip.clip_id] = path
        clips.sort(key=lambda c: c.clip_id)
        decoded = list(pool.map(lambda c: _decode_one(c, params), clips))
    return {c.clip_id: c for c in clips}, {e.clip_id: e for e in decoded}


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (InvalidInputError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(2)


@click.group(cls=_Group)
def main():
    """Post-processing, decoding and evaluation for weakly supervised SED."""


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["ls", "mean", "max"]), default="ls", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output TSV (default: stdout).")
def pool(inputs, kind, out):
    """Pool posterior files to one probability per class."""
    lines = ["clip_id\tlabel\tprobability"]
    clips = sorted((io.read_posterior(p) for p in io.collect_posterior_paths(inputs)), key=lambda c: c.clip_id)
    for clip in clips:
        for label, value in pool_posteriors(clip, PoolingKind.parse(kind)).items():
            lines.append(f"{clip.clip_id}\t{label}\t{value!r}")
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--kind", type=click.Choice(["mm", "amm", "lp", "conv", "ls"]), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--alpha", type=click.FloatRange(0, 1), default=0.5, show_default=True)
@click.option("--p", "p", type=click.FloatRange(min=1), default=4.0, show_default=True)
@click.option("--kernel-size", type=click.IntRange(min=1), default=2, show_default=True)
def gradcheck(kind, trials, seed, alpha, p, kernel_size):
    """Check analytic gradients against central finite differences."""
    if kind == "ls":
        op = PoolingKind.LINEAR_SOFTMAX
    elif kind == "conv":
        op = ConvPool.random(kernel_size, seed)
    else:
        op = make_kind(kind, alpha=alpha, p=p)
    report = run_gradcheck(op, trials=trials, seed=seed)
    _dump_json(report.as_dict())
    if not report.passed:
        sys.exit(1)


def _post_options(f):
    f = click.option("--phi-hi", type=float, default=None, help="Double threshold: seed threshold (0.75).")(f)
    f = click.option("--phi-low", type=float, default=None, help="Double threshold: growth threshold (0.2).")(f)
    f = click.option("--omega", type=int, default=None,
                     help="Median window (51) or double-threshold connect window (1).")(f)
    f = click.option("--phi", type=float, default=None, help="Median filter threshold (0.5).")(f)
    f = click.option("--post", type=click.Choice(["median", "double"]), default=None,
                     help="Post-processing method (default: double).")(f)
    f = click.option("--jobs", type=click.IntRange(min=1), default=None,
                     help=f"Parallel workers (default: ${JOBS_ENV} or 1).")(f)
    return f


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Annotation TSV to write.")
@_post_options
def decode(inputs, out, post, phi, omega, phi_low, phi_hi, jobs):
    """Decode posterior files (or directories of them) into an annotation TSV."""
    params = make_post_params(post or "double", phi, omega, phi_low, phi_hi)
    paths = io.collect_posterior_paths(inputs)
    _, events = decode_corpus(paths, params, jobs or _default_jobs())
    io.write_annotations(events.values(), out)


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Fused posterior TSV.")
def fuse(inputs, out):
    """Average the posteriors of several models for one clip."""
    fused = fuse_clips([io.read_posterior(p) for p in inputs])
    io.write_posterior(fused, out)


def _eval_params(t_collar, offset_ratio, buckets, group_by):
    kw = {}
    if t_collar is not None:
        kw["t_collar"] = t_collar
    if offset_ratio is not None:
        kw["offset_ratio"] = offset_ratio
    if group_by is not None:
        kw["group_by"] = group_by
    return EvalParams(buckets=load_buckets(buckets), **kw)


@main.command(name="eval")
@click.option("--ref", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--t-collar", type=float, default=None, help="Onset collar in seconds (0.2).")
@click.option("--offset-ratio", type=float, default=None, help="Offset collar as a fraction of duration (0.2).")
@click.option("--buckets", type=click.Path(exists=True, dir_okay=False), default=None,
              help='JSON {"short": [...], "long": [...]}.')
@click.option("--group-by", type=click.Choice(["class", "clip"]), default=None,
              help="Short/long grouping: by class bucket (default) or by clip event duration.")
@click.option("--json", "json_out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here instead of stdout.")
def eval_cmd(ref, pred, t_collar, offset_ratio, buckets, group_by, json_out):
    """Event-based F1 of predicted against reference annotations."""
    params = _eval_params(t_collar, offset_ratio, buckets, group_by)
    report = score(io.read_annotations(ref), io.read_annotations(pred), params)
    click.echo(report.format_table())
    if json_out:
        _dump_json(report.to_dict(REPORT_DECIMALS), json_out)
    else:
        click.echo()
        _dump_json(report.to_dict(REPORT_DECIMALS))


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Synth spec JSON (defaults for missing fields).")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--n-clips", type=click.IntRange(min=1), required=True)
@click.option("--seed", type=int, default=None, help="Override the seed from --spec.")
def synth(spec_path, out_dir, n_clips, seed):
    """Write a seeded synthetic corpus: posteriors/ and ground_truth.tsv."""
    data = json.loads(Path(spec_path).read_text()) if spec_path else {}
    if seed is not None:
        data["seed"] = seed
    spec = SynthSpec.from_json(data)
    truth, posteriors = generate(spec, n_clips)
    out = Path(out_dir)
    (out / "posteriors").mkdir(parents=True, exist_ok=True)
    for cid, clip in posteriors.items():
        io.write_posterior(clip, out / "posteriors" / f"{cid}.tsv")
    io.write_annotations(truth.values(), out / "ground_truth.tsv")
    (out / "synth_spec.json").write_text(json.dumps(spec.to_json(), indent=2) + "\n")


PIPELINE_KEYS = {"posteriors", "ground_truth", "output", "report", "post", "eval", "jobs"}


def _load_config(path):
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None
    unknown = set(cfg) - PIPELINE_KEYS
    if unknown:
        raise InvalidInputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    base = Path(path).parent

    def rel(p):
        return str(base / p) if p is not None and not Path(p).is_absolute() else p

    if isinstance(cfg.get("posteriors"), str):
        cfg["posteriors"] = [cfg["posteriors"]]
    cfg["posteriors"] = [rel(p) for p in cfg.get("posteriors", [])]
    for key in ("ground_truth", "output", "report"):
        cfg[key] = rel(cfg.get(key))
    ev = dict(cfg.get("eval") or {})
    if isinstance(ev.get("buckets"), str):
        ev["buckets"] = rel(ev["buckets"])
    cfg["eval"] = ev
    return cfg


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--posteriors", multiple=True, type=click.Path(), help="Posterior files or directories.")
@click.option("--ground-truth", type=click.Path(dir_okay=False), default=None)
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Decoded annotation TSV.")
@click.option("--report", type=click.Path(dir_okay=False), default=None, help="JSON report path.")
@_post_options
@click.option("--t-collar", type=float, default=None)
@click.option("--offset-ratio", type=float, default=None)
@click.option("--buckets", type=click.Path(dir_okay=False), default=None)
@click.option("--group-by", type=click.Choice(["class", "clip"]), default=None)
def pipeline(config_path, posteriors, ground_truth, output, report, post, phi, omega, phi_low, phi_hi,
             jobs, t_collar, offset_ratio, buckets, group_by):
    """Post-process, decode and evaluate in one go (flags override the config)."""
    cfg = _load_config(config_path)
    pcfg = dict(cfg.get("post") or {})
    ecfg = cfg.get("eval") or {}

    def pick(flag, section, key):
        return flag if flag is not None else section.get(key)

    params = make_post_params(
        pick(post, pcfg, "method") or "double",
        pick(phi, pcfg, "phi"),
        pick(omega, pcfg, "omega"),
        pick(phi_low, pcfg, "phi_low"),
        pick(phi_hi, pcfg, "phi_hi"),
    )
    eparams = _eval_params(
        pick(t_collar, ecfg, "t_collar"),
        pick(offset_ratio, ecfg, "offset_ratio"),
        pick(buckets, ecfg, "buckets"),
        pick(group_by, ecfg, "group_by"),
    )
    inputs = list(posteriors) or cfg.get("posteriors") or []
    gt = ground_truth or cfg.get("ground_truth")
    out = output or cfg.get("output")
    rep = report or cfg.get("report")
    missing = [n for n, v in (("posteriors", inputs), ("ground_truth", gt), ("output", out)) if not v]
    if missing:
        raise InvalidInputError(f"pipeline needs: {', '.join(missing)}")
    for p in inputs:
        if not Path(p).exists():
            raise InvalidInputError(f"{p}: no such file or directory")
    refs = io.read_annotations(gt)
    n_jobs = jobs or cfg.get("jobs") or _default_jobs()
    _, events = decode_corpus(io.collect_posterior_paths(inputs), params, n_jobs)
    io.write_annotations(events.values(), out)
    # score what was written so re-running `eval` on the file gives the same report
    result = score(refs, io.read_annotations(out), eparams)
    click.echo(result.format_table())
    if rep:
        _dump_json(result.to_dict(REPORT_DECIMALS), rep)


if __name__ == "__main__":
    main()
