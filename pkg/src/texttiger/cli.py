"""Command-line pipeline: build-dataset, summarize, assemble, generate,
evaluate, audit.

Each subcommand reads an optional JSON run configuration (``--config``) whose
values individual flags override, writes its outputs under the output
directory, and drops a ``<command>-manifest.json`` recording the resolved
configuration hash, package version, and every file written. Timestamps live
only in the manifest's ``created_at`` field, so primary outputs are
byte-identical across reruns with identical inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, audit, featureio, metrics, promptgen, refine, tokenizer, witcub
from .errors import EmptyDataset, MissingDescription, TextTigerError
from .promptgen import PromptMethod
from .refine import SummaryMethod

logger = logging.getLogger("texttiger")

SUMMARY_METHOD_FOR_PROMPT = {
    PromptMethod.TEXTTIGER_WO_LEN: SummaryMethod.WITHOUT_LENGTH,
    PromptMethod.TEXTTIGER: SummaryMethod.WITH_LENGTH,
    PromptMethod.ITERATIVE_TEXTTIGER: SummaryMethod.ITERATIVE,
}


# ------------------------------------------------------------------ config

def load_config(path) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as f:
        config = json.load(f)
    if not isinstance(config, dict):
        raise ValueError("run configuration must be a JSON object")
    validate_config(config, Path(path).parent)
    return config


def validate_config(config: dict, base_dir: Path) -> None:
    """Referenced paths must exist; a methods list must be nonempty and known."""
    def check_path(value, label):
        if value and not (Path(value).exists() or (base_dir / value).exists()):
            raise ValueError(f"{label} {value!r} does not exist")

    check_path(config.get("dataset_path"), "dataset_path")
    for label, value in (config.get("feature_paths") or {}).items():
        check_path(value, f"feature_paths.{label}")
    methods = config.get("methods")
    if methods is not None:
        if not methods:
            raise ValueError("methods must be nonempty")
        known = {m.value for m in PromptMethod}
        for name in methods:
            if name not in known:
                raise ValueError(f"unknown method {name!r}")


def resolve(flag_value, *fallbacks):
    for value in (flag_value, *fallbacks):
        if value is not None:
            return value
    return None


def budget_from(config: dict) -> tokenizer.TokenBudget:
    section = config.get("budget") or {}
    return tokenizer.TokenBudget(
        clip_limit=section.get("clip_limit", 77),
        t5_limit=section.get("t5_limit", 256),
        summary_budget=section.get("summary_budget", 180),
    )


# ------------------------------------------------------------------ outputs

def write_manifest(output_dir: Path, command: str, resolved: dict, outputs: list[Path]) -> Path:
    def relative(p: Path) -> str:
        try:
            return str(p.relative_to(output_dir))
        except ValueError:
            return str(p)

    payload = {
        "command": command,
        "config_hash": hashlib.sha256(
            json.dumps(resolved, sort_keys=True).encode("utf-8")
        ).hexdigest(),
        "package_version": __version__,
        "outputs": sorted(relative(p) for p in outputs),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    path = output_dir / f"{command}-manifest.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _out_dir(args, config) -> Path:
    out = Path(resolve(args.output_dir, config.get("output_dir"), "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------------ commands

def cmd_build_dataset(args) -> int:
    config = load_config(args.config)
    wiki = config.get("wikipedia") or {}
    output_dir = _out_dir(args, config)
    out = Path(resolve(args.out, None) or output_dir / "dataset.jsonl")
    client = witcub.WikipediaClient(
        api_url=resolve(args.api_url, wiki.get("api_url"), witcub.DEFAULT_API_URL),
        delay=wiki.get("delay", 0.0),
    )
    rows = read_jsonl(args.wit_rows)
    parallel = resolve(args.parallel, wiki.get("parallel"), 4)
    try:
        dataset = witcub.build_dataset(rows, client, parallel=parallel)
    except EmptyDataset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    witcub.save_dataset(dataset, out)
    write_manifest(
        output_dir,
        "build-dataset",
        {"wit_rows": str(args.wit_rows), "api_url": client.api_url, "parallel": parallel},
        [out],
    )
    stats = dataset.stats
    print(
        f"dataset: {stats.instance_count} instances, "
        f"{stats.mean_entities_per_instance:.2f} entities/instance, "
        f"{stats.mean_caption_tokens:.2f} caption tokens -> {out}"
    )
    return 0


def _summarizer_config(args, config, method: PromptMethod) -> refine.SummarizeConfig:
    section = config.get("summarizer") or {}
    summary_method = SUMMARY_METHOD_FOR_PROMPT[method]
    params = refine.LlmParams(
        model_name=resolve(args.model, section.get("model"), "default-model"),
        seed=resolve(args.seed, section.get("seed"), 0),
        max_output_tokens=512 if summary_method is SummaryMethod.WITHOUT_LENGTH else 180,
        temperature=resolve(args.temperature, section.get("temperature"), 0.0),
    )
    return refine.SummarizeConfig(
        method=summary_method,
        llm=params,
        budget=budget_from(config),
        max_iterations=resolve(args.max_iterations, section.get("max_iterations"), 3),
    )


def cmd_summarize(args) -> int:
    config = load_config(args.config)
    section = config.get("summarizer") or {}
    method = PromptMethod(args.method)
    if method not in SUMMARY_METHOD_FOR_PROMPT:
        print(f"error: {method.value} has no summarization step", file=sys.stderr)
        return 1
    output_dir = _out_dir(args, config)
    out = Path(resolve(args.out, None) or output_dir / f"summaries-{method.value}.jsonl")
    endpoint = resolve(
        args.llm_endpoint, section.get("endpoint"), os.environ.get(refine.DEFAULT_LLM_ENDPOINT_ENV)
    )
    if not endpoint:
        print("error: no LLM endpoint configured", file=sys.stderr)
        return 1
    client = refine.LlmClient(base_url=endpoint)
    summarize_config = _summarizer_config(args, config, method)
    dataset = witcub.load_dataset(resolve(args.dataset, config.get("dataset_path")))
    records, failures = [], 0
    for instance in dataset.instances:
        augmented = refine.build_augmentation(instance)
        if not augmented.joined_text:
            logger.warning("%s: no matched entities, skipping", instance.id)
            continue
        try:
            result = refine.summarize(augmented.joined_text, summarize_config, client)
        except TextTigerError as exc:
            logger.error("%s: summarization failed: %s", instance.id, exc)
            failures += 1
            continue
        records.append(
            {
                "id": instance.id,
                "method": method.value,
                "text": result.text,
                "token_count": result.token_count,
                "iterations_used": result.iterations_used,
                "compliant": result.compliant,
                "raw_outputs": list(result.raw_outputs),
            }
        )
    write_jsonl(out, records)
    write_manifest(
        output_dir,
        "summarize",
        {
            "dataset": str(resolve(args.dataset, config.get("dataset_path"))),
            "method": method.value,
            "model": summarize_config.llm.model_name,
            "seed": summarize_config.llm.seed,
            "max_iterations": summarize_config.max_iterations,
        },
        [out],
    )
    compliant = sum(1 for r in records if r["compliant"])
    print(f"summaries: {len(records)} written ({compliant} compliant), {failures} failed -> {out}")
    return 1 if failures else 0


def cmd_assemble(args) -> int:
    config = load_config(args.config)
    method = PromptMethod(args.method)
    output_dir = _out_dir(args, config)
    out = Path(resolve(args.out, None) or output_dir / f"prompts-{method.value}.jsonl")
    budget = budget_from(config)
    dataset = witcub.load_dataset(resolve(args.dataset, config.get("dataset_path")))
    summaries = {}
    if method in SUMMARY_METHOD_FOR_PROMPT:
        if not args.summaries:
            print(f"error: --summaries required for {method.value}", file=sys.stderr)
            return 1
        summaries = {r["id"]: r["text"] for r in read_jsonl(args.summaries)}
    records = []
    for instance in dataset.instances:
        if method is PromptMethod.CAP_ONLY:
            description = None
        elif method is PromptMethod.CAP_AUG_ONLY:
            description = refine.build_augmentation(instance).per_entity
        else:
            description = summaries.get(instance.id)
        try:
            prompt = promptgen.assemble_prompt(method, instance.caption, description, budget=budget)
        except MissingDescription:
            logger.warning("%s: no description available, skipping", instance.id)
            continue
        records.append(
            {
                "id": instance.id,
                "method": method.value,
                "text": prompt.text,
                "token_count": prompt.token_count,
                "truncated_at_t5": prompt.truncated_at_t5,
                "truncated_at_clip": prompt.truncated_at_clip,
            }
        )
    if not records:
        print("error: no prompts assembled", file=sys.stderr)
        return 1
    write_jsonl(out, records)
    write_manifest(
        output_dir,
        "assemble",
        {
            "dataset": str(resolve(args.dataset, config.get("dataset_path"))),
            "method": method.value,
            "summaries": str(args.summaries) if args.summaries else None,
            "budget": [budget.clip_limit, budget.t5_limit, budget.summary_budget],
        },
        [out],
    )
    print(f"prompts: {len(records)} assembled -> {out}")
    return 0


def cmd_generate(args) -> int:
    config = load_config(args.config)
    section = config.get("backend") or {}
    output_dir = _out_dir(args, config)
    out = Path(resolve(args.out, None) or output_dir / "generations.jsonl")
    endpoint = resolve(
        args.backend_url,
        section.get("endpoint"),
        os.environ.get(promptgen.DEFAULT_IMAGE_ENDPOINT_ENV),
    )
    if not endpoint:
        print("error: no image backend configured", file=sys.stderr)
        return 1
    images_dir = output_dir / "images"
    client = promptgen.ImageGenClient(
        endpoint=endpoint,
        model=resolve(args.model, section.get("model"), "default-model"),
        out_dir=images_dir,
    )
    seed = resolve(args.seed, section.get("seed"), 42)
    records, outputs = [], [out]
    for record in read_jsonl(args.prompts):
        request = promptgen.ImageGenRequest(
            prompt=record["text"],
            seed=seed,
            guidance_scale=resolve(args.guidance_scale, section.get("guidance_scale"), 3.5),
            steps=resolve(args.steps, section.get("steps"), 50),
            width=section.get("width", 1024),
            height=section.get("height", 1024),
            max_sequence_length=section.get("max_sequence_length", 512),
        )
        result = promptgen.generate_image(request, client)
        image_path = Path(result.image_ref)
        if image_path.is_file():
            outputs.append(image_path)
        records.append(
            {
                "id": record["id"],
                "method": record["method"],
                "image_ref": result.image_ref,
                "request": result.request,
            }
        )
    write_jsonl(out, records)
    write_manifest(
        output_dir,
        "generate",
        {"prompts": str(args.prompts), "endpoint": endpoint, "model": client.model, "seed": seed},
        outputs,
    )
    print(f"generated: {len(records)} images -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    feature_paths = config.get("feature_paths") or {}
    output_dir = _out_dir(args, config)
    out = Path(resolve(args.out, None) or output_dir / "metrics.json")

    def feats(flag_value, key):
        path = resolve(flag_value, feature_paths.get(key))
        if not path:
            print(f"error: missing feature file for {key}", file=sys.stderr)
            raise SystemExit(1)
        return featureio.read_features(path)

    label_dists = feats(args.label_dists, "label_dists")
    real_features = feats(args.real_features, "real_features")
    gen_features = feats(args.gen_features, "gen_features")
    clip_gen = feats(args.clip_gen, "clip_gen")
    clip_txt = feats(args.clip_txt, "clip_txt")
    clip_real = feats(args.clip_real, "clip_real")
    report = metrics.aggregate_report(
        label_dists,
        real_features,
        gen_features,
        (clip_gen, clip_txt),
        (clip_gen, clip_real),
        splits=resolve(args.splits, config.get("splits"), 1),
        scale_display_100=not args.raw_cosine,
    )
    with open(out, "w", encoding="utf-8") as f:
        f.write(report.to_json())
    write_manifest(
        output_dir,
        "evaluate",
        {"splits": resolve(args.splits, config.get("splits"), 1), "out": str(out)},
        [out],
    )
    print(metrics.format_report_table(report), end="")
    print(f"report -> {out}")
    return 0


def cmd_audit(args) -> int:
    config = load_config(args.config)
    output_dir = _out_dir(args, config)
    out = Path(resolve(args.out, None) or output_dir / "audit.json")
    budget = budget_from(config)
    prompts = []
    for path in args.prompts:
        for record in read_jsonl(path):
            prompts.append(
                promptgen.AssembledPrompt(
                    method=PromptMethod(record["method"]),
                    text=record["text"],
                    token_count=record["token_count"],
                    truncated_at_t5=record["truncated_at_t5"],
                    truncated_at_clip=record["truncated_at_clip"],
                )
            )
    limit = resolve(args.limit, budget.t5_limit)
    report = audit.audit_prompts(
        prompts, limit=limit, clip_limit=budget.clip_limit if args.clip_column else None
    )
    with open(out, "w", encoding="utf-8") as f:
        f.write(report.to_json())
    write_manifest(
        output_dir,
        "audit",
        {"prompts": [str(p) for p in args.prompts], "limit": limit, "clip_column": args.clip_column},
        [out],
    )
    print(audit.format_audit_table(report), end="")
    print(f"audit -> {out}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texttiger",
        description="Entity-aware prompt refinement and image-generation evaluation pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration; flags override its values")
        p.add_argument("--output-dir", help="directory for outputs and the manifest")
        p.add_argument("--out", help="primary output path (overrides the default name)")

    p = sub.add_parser("build-dataset", help="fetch entities and persist a dataset")
    common(p)
    p.add_argument("--wit-rows", required=True, help="JSONL of {caption, image_ref, entity_urls}")
    p.add_argument("--parallel", type=int, help="fetch workers (default 4)")
    p.add_argument("--api-url", help="MediaWiki action API endpoint")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("summarize", help="augment entities and summarize under the budget")
    common(p)
    p.add_argument("--dataset", help="dataset file from build-dataset")
    p.add_argument(
        "--method",
        required=True,
        choices=[m.value for m in SUMMARY_METHOD_FOR_PROMPT],
    )
    p.add_argument("--llm-endpoint", help="chat-completion base URL")
    p.add_argument("--model", help="summarization model name")
    p.add_argument("--seed", type=int, help="completion seed (default 0)")
    p.add_argument("--temperature", type=float, help="sampling temperature (default 0)")
    p.add_argument("--max-iterations", type=int, help="iterative rounds (default 3)")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("assemble", help="build image-generation prompts for a method")
    common(p)
    p.add_argument("--dataset", help="dataset file from build-dataset")
    p.add_argument("--method", required=True, choices=[m.value for m in PromptMethod])
    p.add_argument("--summaries", help="summaries file (required for refinement methods)")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("generate", help="submit prompts to an image-generation backend")
    common(p)
    p.add_argument("--prompts", required=True, help="prompts file from assemble")
    p.add_argument("--backend-url", help="image-generation endpoint")
    p.add_argument("--model", help="image model identifier")
    p.add_argument("--seed", type=int, help="generation seed (default 42)")
    p.add_argument("--guidance-scale", type=float, help="guidance scale (default 3.5)")
    p.add_argument("--steps", type=int, help="inference steps (default 50)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="compute IS/FID/CLIPScore from feature files")
    common(p)
    p.add_argument("--label-dists", help="TFV1 label distributions (generated images)")
    p.add_argument("--real-features", help="TFV1 pooled features (reference images)")
    p.add_argument("--gen-features", help="TFV1 pooled features (generated images)")
    p.add_argument("--clip-gen", help="TFV1 embeddings of generated images")
    p.add_argument("--clip-txt", help="TFV1 embeddings of prompt texts")
    p.add_argument("--clip-real", help="TFV1 embeddings of reference images")
    p.add_argument("--splits", type=int, help="IS splits (default 1)")
    p.add_argument("--raw-cosine", action="store_true", help="print raw cosines, not x100")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("audit", help="token accounting over assembled prompts")
    common(p)
    p.add_argument("--prompts", action="append", required=True, help="prompts file (repeatable)")
    p.add_argument("--limit", type=int, help="token limit (default: budget t5_limit)")
    p.add_argument("--clip-column", action="store_true", help="add a CLIP-window violation column")
    p.set_defaults(func=cmd_audit)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except TextTigerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
