#!/usr/bin/env python3
"""
QuDASH Toolkit - Point d'entrée principal
Simulation DASH pilotée par traces : run, sweep, compare, synth
"""

import argparse
import logging
import sys

from colorama import Fore, Style, init as colorama_init

from src import __version__
from src.config import load_config
from src.errors import ConfigError, QuDashError, TraceFormatError
from src.experiments import cmd_compare, cmd_run, cmd_sweep, cmd_synth
from src.trace import PROFILE_PRESETS


EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def banner(title: str):
    print(f"{Style.BRIGHT}{title}{Style.RESET_ALL}")
    print("-" * 50)


def success(message: str):
    print(f"{Fore.GREEN}✅ {message}{Style.RESET_ALL}")


def warn(message: str):
    print(f"{Fore.YELLOW}⚠️  {message}{Style.RESET_ALL}")


def fail(message: str):
    print(f"{Fore.RED}❌ {message}{Style.RESET_ALL}", file=sys.stderr)


def list_files(paths):
    print("Fichiers générés :")
    for path in paths:
        print(f"   📁 {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qudash", description="Simulateur DASH et contrôleur QuDASH")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="journalisation DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="fichier JSON de l'expérience")
        p.add_argument("--out", help="dossier de sortie (remplace output_dir)")
        p.add_argument("--seed", type=int, help="graine globale (remplace seed)")
        p.add_argument("--jobs", type=int, help="processus parallèles (remplace jobs)")
        return p

    run = experiment("run", "une session : segments.csv et qoe.json")
    run.add_argument("--trace", help="nom de la trace (défaut : la première)")
    run.add_argument("--algorithm", help="nom de l'algorithme (défaut : le premier)")
    run.add_argument("--decisions", action="store_true", help="écrire decisions.jsonl")
    run.add_argument("--timing", action="store_true", help="inclure le temps de décision (implique --decisions)")

    experiment("sweep", "balayage d'un paramètre de QuDASH : sweep.csv")
    experiment("compare", "comparaison d'algorithmes : compare.csv, summary.json, cdf.csv")

    synth = sub.add_parser("synth", help="trace synthétique au format t,mbps")
    synth.add_argument("--profile", choices=sorted(PROFILE_PRESETS), default="walk")
    synth.add_argument("--duration", type=int, default=100, help="durée en secondes")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="fichier CSV (dossier avec --suite)")
    synth.add_argument("--suite", action="store_true", help="jeu complet : 7 static, 9 walk, 6 bus")
    synth.add_argument("--mean", type=float)
    synth.add_argument("--stddev", type=float)
    synth.add_argument("--drop-rate", dest="drop_rate", type=float)
    synth.add_argument("--drop-depth", dest="drop_depth", type=float)
    return parser


def dispatch(args) -> int:
    if args.command == "synth":
        banner("Génération de trace synthétique")
        paths = cmd_synth(args.profile, args.out, duration=args.duration, seed=args.seed, suite=args.suite,
                          mean=args.mean, stddev=args.stddev, drop_rate=args.drop_rate,
                          drop_depth=args.drop_depth)
        success(f"{len(paths)} trace(s) écrite(s)")
        list_files(paths)
        return EXIT_OK

    # === ÉTAPE 1 : Configuration ===
    banner("ÉTAPE 1/2 : Lecture de la configuration")
    config = load_config(args.config).apply_overrides(args.out, args.seed, args.jobs)
    print(f"   • Traces : {len(config.traces)}")
    print(f"   • Algorithmes : {', '.join(a.name for a in config.algorithms)}")
    print(f"   • Segments : {config.manifest.num_segments}")
    print()

    # === ÉTAPE 2 : Simulation ===
    if args.command == "run":
        banner("ÉTAPE 2/2 : Simulation de la session")
        paths = cmd_run(config, args.trace, args.algorithm, timing=args.timing, decisions=args.decisions)
        success("Session terminée")
        list_files(paths)

    elif args.command == "sweep":
        sweep = config.sweep
        if sweep is None:
            raise ConfigError("La configuration ne définit pas de balayage")
        banner(f"ÉTAPE 2/2 : Balayage de {sweep.param} ({len(sweep.values)} valeurs)")
        paths = cmd_sweep(config)
        success("Balayage terminé")
        list_files(paths)

    elif args.command == "compare":
        banner("ÉTAPE 2/2 : Comparaison des algorithmes")
        result = cmd_compare(config)
        for algo, entry in result["summary"]["algorithms"].items():
            mean = entry["mean_qoe_per_chunk"]
            shown = f"{mean:.3f}" if mean is not None else "n/a"
            print(f"   • {algo} : QoE moyenne par segment {shown}, victoires {entry['wins']}")
        for item in result["highlights"]:
            (warn if item["type"] == "warning" else success)(item["message"])
        list_files(result["paths"])

    return EXIT_OK


def main(argv=None) -> int:
    """Point d'entrée principal de l'application"""
    colorama_init()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    print("QuDASH Toolkit")
    print("=" * 50)
    print()
    try:
        return dispatch(args)
    except (ConfigError, TraceFormatError, FileNotFoundError) as e:
        fail(str(e))
        return EXIT_USAGE
    except QuDashError as e:
        fail(str(e))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
