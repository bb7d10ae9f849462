"""
Command Line Interface for orientnav
Scene generation, single episodes, benchmarks, ablations and visualization export
"""

import json
import os
import time
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ValidationError

from core.config_loader import BenchConfig, ConfigLoader, Mode, PipelineConfig, ScorerConfig
from core.episode_service import EpisodeService
from core.errors import ScorerError
from core.evalbench import BenchmarkReport, bench_suite, run_benchmark
from core.pipeline import EpisodeTrace
from core.scorer_factory import ScorerFactory
from core.visualize import render_trace, write_occupancy_pgm
from simworld.occupancy import build_occupancy_map
from simworld.scene import SceneSpec
from simworld.templates import TEMPLATE_REGISTRY, generate_scene

DEFAULT_CONFIG = "config.yaml"
SCORER_FAILURES = {cls.__name__ for cls in ScorerError.__subclasses__()} | {"ScorerError"}


def load_settings(config_path: Optional[str] = None, seed: Optional[int] = None, mode: Optional[str] = None,
                  threshold: Optional[float] = None, scorer: Optional[str] = None, repeats: Optional[int] = None,
                  jobs: Optional[int] = None, out: Optional[str] = None,
                  suite: Optional[str] = None) -> Dict[str, BaseModel]:
    """
    Settings from the config file (defaults when the default file is absent) with flags on top.

    Raises:
        FileNotFoundError: If an explicitly given config file does not exist
        pydantic.ValidationError: Naming the offending field
    """
    if config_path is None and not os.path.exists(DEFAULT_CONFIG):
        config: Dict[str, Any] = {}
    else:
        config = ConfigLoader.load_config(config_path or DEFAULT_CONFIG)
    settings = ConfigLoader.load_settings(config)

    pipeline = settings["pipeline"].model_dump()
    if seed is not None:
        pipeline["seed"] = seed
    if mode is not None:
        pipeline["mode"] = mode
    if threshold is not None:
        pipeline["success_threshold"] = threshold
    settings["pipeline"] = PipelineConfig(**pipeline)

    bench = settings["bench"].model_dump()
    for key, value in (("repeats", repeats), ("jobs", jobs), ("output_dir", out), ("suite", suite)):
        if value is not None:
            bench[key] = value
    settings["bench"] = BenchConfig(**bench)

    if scorer is not None:
        settings["scorer"] = ScorerConfig(**ScorerFactory.parse_spec(scorer))
    return settings


def print_validation_error(error: ValidationError):
    print("❌ Invalid configuration:")
    for item in error.errors():
        field = ".".join(str(part) for part in item["loc"])
        print(f"   • {field}: {item['msg']}")


def create_run_dir(output_dir: str, command: str) -> str:
    """`<output_dir>/<timestamp>-<command>/`, suffixed when the name is taken"""
    base = os.path.join(output_dir, f"{datetime.now().strftime('%Y%m%d-%H%M%S')}-{command}")
    run_dir, suffix = base, 1
    while os.path.exists(run_dir):
        run_dir = f"{base}-{suffix}"
        suffix += 1
    os.makedirs(run_dir)
    return run_dir


def write_manifest(run_dir: str, command: str, settings: Dict[str, BaseModel], seeds: Sequence[int],
                   extra: Optional[Dict[str, Any]] = None) -> str:
    files = sorted(name for name in os.listdir(run_dir) if name != "manifest.json")
    manifest = {
        "command": command,
        "created": datetime.now().isoformat(),
        "config": {name: model.model_dump(mode="json") for name, model in settings.items()},
        "seeds": list(seeds),
        "files": files,
    }
    manifest.update(extra or {})
    path = os.path.join(run_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as file:
        json.dump(manifest, file, indent=2, sort_keys=True)
    return path


def write_report(report: BenchmarkReport, run_dir: str) -> List[str]:
    traces = os.path.join(run_dir, "traces.jsonl")
    csv_path = os.path.join(run_dir, "report.csv")
    json_path = os.path.join(run_dir, "report.json")
    report.write_traces(traces)
    report.write_csv(csv_path)
    report.write_json(json_path)
    return [traces, csv_path, json_path]


def scorer_failures(report: BenchmarkReport) -> int:
    return sum(1 for r in report.results if r.failure_reason in SCORER_FAILURES)


def resolve_scene(scene: str, seed: int = 0) -> SceneSpec:
    """A scene file path, or a template name generated with `seed`"""
    if os.path.exists(scene):
        return SceneSpec.load(scene)
    if scene in TEMPLATE_REGISTRY:
        return generate_scene(scene, seed)
    raise FileNotFoundError(f"Scene {scene} is neither a file nor a template ({', '.join(TEMPLATE_REGISTRY)})")


def cmd_gen_scene(template: str, seed: int = 0, params: Optional[Dict[str, Any]] = None,
                  out: Optional[str] = None) -> str:
    """Write a template scene as JSON; returns the file path"""
    scene = generate_scene(template, seed, params)
    path = out or os.path.join("scenes", f"{scene.name}.json")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    scene.save(path)
    print(f"🏠 Scene {scene.name}: {len(scene.primitives)} primitives")
    if scene.task is not None:
        print(f"🎯 Task: {scene.task.text} ({scene.task.label})")
    print(f"💾 Saved to {path}")
    return path


def cmd_run(settings: Dict[str, BaseModel], scene: SceneSpec, query: Optional[str] = None,
            verbose: bool = False) -> int:
    """Run one episode; exit code 0 when it succeeds"""
    pipeline = settings["pipeline"]
    query = query or (scene.task.text if scene.task is not None else None)
    if not query:
        print("❌ The scene has no task; pass --query")
        return 2

    scorer = ScorerFactory.create_scorer(settings["scorer"].to_factory_config())
    service = EpisodeService(scorer, pipeline, settings["simulation"], settings["logging"])
    print(f"🏠 Scene: {scene.name}")
    print(f"🔍 Query: {query}")
    print(f"🤖 Scorer: {scorer.name}, mode: {pipeline.mode.value}, seed: {pipeline.seed}")
    print("⏳ Running episode...")

    try:
        response = service.run_query(scene, query, show_live_output=verbose)
    finally:
        service.close()
    result = response["result"]

    if verbose:
        print("\n" + "=" * 60)
        print("📋 EXECUTION LOGS")
        print("=" * 60)
        for i, log in enumerate(response["logs"], 1):
            print(f"{i:2d}. {log}")

    if result is None:
        print(f"\n❌ Error: {response['metadata'].get('error')}")
        return 2

    run_dir = create_run_dir(settings["bench"].output_dir, "run")
    report = BenchmarkReport([result], {"pipeline": pipeline.model_dump(mode="json"), "scorer": scorer.name,
                                        "seeds": [pipeline.seed], "scenes": [scene.name]})
    write_report(report, run_dir)
    write_manifest(run_dir, "run", settings, [pipeline.seed],
                   {"scene": scene.name, "scene_spec": scene.to_dict(), "query": query})

    print("\n" + "=" * 60)
    print("📊 RESULT")
    print("=" * 60)
    print(f"{'✅' if result.success else '❌'} success: {result.success}")
    print(f"📏 DTG: {result.dtg:.3f} m (threshold {pipeline.success_threshold} m)")
    print(f"🧭 Heading error: {result.heading_error_deg:.1f} deg")
    print(f"🚶 Traveled: {result.traveled:.2f} m, shortest: {result.shortest_path:.2f} m")
    if result.failure_reason:
        print(f"⚠️ Failure: {result.failure_reason}")
    print(f"⏱️ Execution time: {response['metadata']['execution_time']:.2f}s")
    print(f"📁 Run directory: {run_dir}")
    print("=" * 60)
    return 0 if result.success else 1


def cmd_bench(settings: Dict[str, BaseModel], modes: Optional[Sequence[Mode]] = None,
              command: str = "bench") -> int:
    """Run the configured suite; exit code 1 when a gate is violated or the scorer failed"""
    pipeline, bench = settings["pipeline"], settings["bench"]
    seeds = bench.episode_seeds(pipeline.seed)
    modes = list(modes or [pipeline.mode])
    suite = bench_suite(bench.suite, bench.suite_seed)
    scorer = ScorerFactory.create_scorer(settings["scorer"].to_factory_config())

    print(f"🧪 Suite {bench.suite}: {len(suite)} scenes x {len(seeds)} seeds x {len(modes)} modes")
    print(f"🤖 Scorer: {scorer.name}, jobs: {bench.jobs}")
    start_time = time.time()
    report = run_benchmark(suite, scorer, pipeline, settings["simulation"], seeds, modes, bench.jobs)
    execution_time = time.time() - start_time

    run_dir = create_run_dir(bench.output_dir, command)
    write_report(report, run_dir)
    violations = report.check_gates(bench.gates)
    failed_scoring = scorer_failures(report)
    write_manifest(run_dir, command, settings, seeds,
                   {"suite": bench.suite, "modes": [m.value for m in modes], "gate_violations": violations})

    print("\n" + "=" * 60)
    print("📊 REPORT")
    print("=" * 60)
    print(report.format_table())
    print("=" * 60)
    print(f"⏱️ Execution time: {execution_time:.2f}s")
    print(f"📁 Run directory: {run_dir}")
    for violation in violations:
        print(f"🚫 Gate violated: {violation}")
    if failed_scoring:
        print(f"🚫 {failed_scoring} episode(s) failed in the scorer")
    return 1 if violations or failed_scoring else 0


def cmd_ablate(settings: Dict[str, BaseModel]) -> int:
    """Full pipeline and its three ablations on the configured suite"""
    return cmd_bench(settings, modes=list(Mode), command="ablate")


def cmd_viz(out_dir: str, trace_path: Optional[str] = None, scene_path: Optional[str] = None,
            index: Optional[int] = None, map_resolution: float = 0.05) -> List[str]:
    """
    Render traces and/or a scene's occupancy map. Input files are only read.

    Raises:
        ValueError: If neither a trace file nor a scene is given
        MalformedTrace: If the trace file cannot be read
    """
    if trace_path is None and scene_path is None:
        raise ValueError("viz needs a trace file or a scene")
    os.makedirs(out_dir, exist_ok=True)
    scene = SceneSpec.load(scene_path) if scene_path else None
    written = []

    if scene is not None:
        path = os.path.join(out_dir, f"{scene.name}_occupancy.pgm")
        write_occupancy_pgm(build_occupancy_map(scene, map_resolution), path)
        written.append(path)

    if trace_path is not None:
        traces = EpisodeTrace.load_jsonl(trace_path)
        selected = [(index, traces[index])] if index is not None else list(enumerate(traces))
        for number, trace in selected:
            prefix = os.path.join(out_dir, f"{number:03d}-{trace.scene}-{trace.mode}-{trace.seed}")
            matching = scene if scene is not None and scene.name == trace.scene else None
            written.extend(render_trace(trace, prefix, matching))

    for path in written:
        print(f"🖼️ {path}")
    return written


def parse_params(pairs: Optional[Sequence[str]]) -> Dict[str, Any]:
    """`key=value` flags; values are parsed as JSON when possible"""
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ValueError(f"Template parameter must be key=value, got {pair}")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params
