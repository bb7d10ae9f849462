"""
Main entry point for orientnav
Scene generation, episodes, benchmarks, ablations, visualization and the stub scoring server
"""

import sys
import os
import argparse

from dotenv import load_dotenv

# Add project root to Python path
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)


def add_settings_flags(parser: argparse.ArgumentParser, with_mode: bool = True):
    parser.add_argument('--config', default=None, help='Configuration file (default: config.yaml when present)')
    parser.add_argument('--scorer', default=None,
                        help='oracle | scripted:<log> | remote:<url> | recording:<log> (default: from config)')
    if with_mode:
        parser.add_argument('--mode', default=None, choices=['full', 'dnt', 'ogd', 'norts'],
                            help='Pipeline mode (default: from config)')
    parser.add_argument('--seed', type=int, default=None, help='Episode seed')
    parser.add_argument('--threshold', type=float, default=None, help='DTG success threshold in meters')
    parser.add_argument('--out', default=None, help='Output directory for run directories (default: runs)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="orientnav - task-aware object navigation with a pluggable scorer",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py gen-scene --template wall-backed-object --seed 7
  python main.py run --scene scenes/wall-backed-object-7.json
  python main.py run --scene open-room --query "open the refrigerator" --scorer oracle
  python main.py bench --suite oracle-10 --repeats 3 --jobs 4
  python main.py ablate --suite ablation-20 --repeats 3
  python main.py viz --trace runs/<run>/traces.jsonl --out viz/
  python main.py serve --port 8090 --behavior prefer_first
        """
    )

    subparsers = parser.add_subparsers(dest='command', help='Command')

    gen_parser = subparsers.add_parser('gen-scene', help='Generate a scene from a template')
    gen_parser.add_argument('--template', required=True, help='Template name')
    gen_parser.add_argument('--seed', type=int, default=0, help='Template seed')
    gen_parser.add_argument('--param', action='append', default=[], help='Template parameter key=value')
    gen_parser.add_argument('--out', default=None, help='Scene file (default: scenes/<name>.json)')

    run_parser = subparsers.add_parser('run', help='Run one episode')
    run_parser.add_argument('--scene', required=True, help='Scene file or template name')
    run_parser.add_argument('--query', default=None, help='Task text (default: the scene task)')
    run_parser.add_argument('-v', '--verbose', action='store_true', help='Show execution logs')
    add_settings_flags(run_parser)

    bench_parser = subparsers.add_parser('bench', help='Run a benchmark suite')
    bench_parser.add_argument('--suite', default=None, help='Suite name (default: from config)')
    bench_parser.add_argument('--repeats', type=int, default=None, help='Seeds per scene')
    bench_parser.add_argument('--jobs', type=int, default=None, help='Parallel episodes')
    add_settings_flags(bench_parser)

    ablate_parser = subparsers.add_parser('ablate', help='Run full, dnt, ogd and norts on a suite')
    ablate_parser.add_argument('--suite', default=None, help='Suite name (default: from config)')
    ablate_parser.add_argument('--repeats', type=int, default=None, help='Seeds per scene')
    ablate_parser.add_argument('--jobs', type=int, default=None, help='Parallel episodes')
    add_settings_flags(ablate_parser, with_mode=False)

    viz_parser = subparsers.add_parser('viz', help='Render traces or a scene')
    viz_parser.add_argument('--trace', default=None, help='traces.jsonl of a run')
    viz_parser.add_argument('--scene', default=None, help='Scene file')
    viz_parser.add_argument('--index', type=int, default=None, help='Render only this trace')
    viz_parser.add_argument('--out', default='viz', help='Output directory (default: viz)')

    server_parser = subparsers.add_parser('serve', help='Stub scoring HTTP server')
    server_parser.add_argument('--host', default='0.0.0.0', help='Host to bind to (default: 0.0.0.0)')
    server_parser.add_argument('--port', type=int, default=8090, help='Port to bind to (default: 8090)')
    server_parser.add_argument('--behavior', default='largest_image', help='Default scoring behavior')
    server_parser.add_argument('--debug', action='store_true', help='Enable debug mode')
    return parser


def main(argv=None) -> int:
    """Main entry point with command selection"""
    parser = build_parser()
    args = parser.parse_args(argv)
    load_dotenv()

    if not args.command:
        parser.print_help()
        print("\n🚀 Welcome to orientnav!")
        print("Choose a command: gen-scene, run, bench, ablate, viz, serve")
        return 0

    if args.command == 'serve':
        print("🌐 Starting stub scoring server...")
        try:
            from http_server import run_server
            run_server(host=args.host, port=args.port, debug=args.debug, behavior=args.behavior)
            return 0
        except ImportError as e:
            print(f"❌ Error importing HTTP server: {e}")
            print("Make sure FastAPI and uvicorn are installed:")
            print("pip install fastapi uvicorn[standard]")
            return 1
        except Exception as e:
            print(f"❌ Error running HTTP server: {e}")
            return 1

    from pydantic import ValidationError

    import cli_interface
    from core.errors import NavigationError

    try:
        if args.command == 'gen-scene':
            cli_interface.cmd_gen_scene(args.template, args.seed, cli_interface.parse_params(args.param), args.out)
            return 0

        if args.command == 'viz':
            cli_interface.cmd_viz(args.out, args.trace, args.scene, args.index)
            return 0

        settings = cli_interface.load_settings(
            args.config, seed=args.seed, mode=getattr(args, 'mode', None), threshold=args.threshold,
            scorer=args.scorer, repeats=getattr(args, 'repeats', None), jobs=getattr(args, 'jobs', None),
            out=args.out, suite=getattr(args, 'suite', None),
        )

        if args.command == 'run':
            scene = cli_interface.resolve_scene(args.scene, settings["pipeline"].seed)
            return cli_interface.cmd_run(settings, scene, args.query, args.verbose)
        if args.command == 'bench':
            return cli_interface.cmd_bench(settings)
        if args.command == 'ablate':
            return cli_interface.cmd_ablate(settings)

    except ValidationError as e:
        cli_interface.print_validation_error(e)
        return 2
    except (NavigationError, ValueError, KeyError, FileNotFoundError) as e:
        print(f"❌ Error: {e}")
        return 2
    except KeyboardInterrupt:
        print("\n👋 Interrupted")
        return 130

    parser.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
