# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------


import argparse
import datetime
import json
import time
from pathlib import Path

import util.misc as utils
from engine import (RESULT_COLUMNS, SPLIT_COLUMNS, TIMING_COLUMNS, dump_effective, run_study,
                    write_csv)
from models.hmm_fvm import dump_solution
from models.mesh import dump_mesh
from models.ops.sparse import dump_matrix
from problems import CATALOG
from util.config import (STUDIES, build_study_config, config_defaults, float_list, int_list,
                         load_config)


def get_args_parser():
    parser = argparse.ArgumentParser('HMM-FVM study', add_help=False)
    parser.add_argument('--config', default='', type=str,
                        help="flat `key = value` file whose entries become defaults")
    parser.add_argument('--out', default='', type=str,
                        help='path where to write results, empty for no saving')
    parser.add_argument('--threads', default=1, type=int,
                        help="worker threads for the per-element micro solves")
    parser.add_argument('--cache_effective', '--cache-effective', action='store_true',
                        help="share one effective record across elements for x-independent problems")
    parser.add_argument('--progress', action='store_true')
    parser.add_argument('--dump_matrix', action='store_true',
                        help="write the assembled coarse matrix as row col value lines (solve only)")
    parser.add_argument('--seed', default=42, type=int)

    # * Problem
    parser.add_argument('--problem', default='smooth-periodic', type=str, choices=sorted(CATALOG),
                        help="Name of the catalog problem")
    parser.add_argument('--epsilon', default=0.01, type=float,
                        help="period of the fast variable")
    parser.add_argument('--zero_source', action='store_true',
                        help="replace the source by f = 0")

    # * Micro cells
    parser.add_argument('--delta_over_eps', default='1', type=float_list,
                        help="comma-separated sampling cell sizes in periods")
    parser.add_argument('--cells_per_period', default=16, type=int)
    parser.add_argument('--bc_mode', default='dirichlet', type=str, choices=('dirichlet', 'periodic'))

    # * Macro and reference meshes
    parser.add_argument('--resolutions', default='4,8,16,32', type=int_list,
                        help="comma-separated coarse cells per side")
    parser.add_argument('--n_fine', default=128, type=int,
                        help="cells per side of the reference mesh")
    parser.add_argument('--n_cell', default=64, type=int,
                        help="cells per side of the periodic unit-cell mesh")
    return parser


def build_parser():
    parser = argparse.ArgumentParser('HMM-FVM multiscale studies')
    commands = parser.add_subparsers(dest='command', required=True)
    subparsers = {name: commands.add_parser(name, parents=[get_args_parser()]) for name in STUDIES}
    # matched periodic cells suppress the delta/eps floor in H refinement
    subparsers['h-sweep'].set_defaults(bc_mode='periodic')
    subparsers['delta-sweep'].set_defaults(resolutions='8', delta_over_eps='1,2,4,8')
    subparsers['lemmas'].set_defaults(bc_mode='periodic', resolutions='4,8,16', n_fine=16)
    subparsers['solve'].set_defaults(resolutions='8')
    subparsers['effective'].set_defaults(resolutions='4')
    return parser, subparsers


def parse_args(argv=None):
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = subparsers[args.command]
        sub.set_defaults(**config_defaults(sub, load_config(args.config), args.config))
        args = parser.parse_args(argv)
    return args


def main(args):
    print("git:\n  {}\n".format(utils.get_sha()))
    print(args)

    # fix the seed for reproducibility
    utils.fix_seed(args.seed)

    cfg = build_study_config(args)
    output_dir = Path(cfg.out) if cfg.out else None

    print("Start {}".format(cfg.study))
    start_time = time.time()
    results = run_study(cfg)

    if output_dir:
        if 'rows' in results:
            write_csv(output_dir / 'results.csv', RESULT_COLUMNS, results['rows'])
        if 'timings' in results:
            write_csv(output_dir / 'timings.csv', TIMING_COLUMNS, results['timings'])
        if 'split' in results:
            write_csv(output_dir / 'error_split.csv', SPLIT_COLUMNS, results['split'])
        if 'report' in results:
            with (output_dir / 'lemmas.json').open('w') as f:
                json.dump(results['report'], f, indent=2)
        if 'solution' in results:
            n = results['mesh'].n
            dump_solution(results['solution'], output_dir / f'solution_n{n}.txt')
            dump_mesh(results['mesh'], output_dir / f'mesh_n{n}.txt')
            if args.dump_matrix:
                dump_matrix(results['form'].system, output_dir / f'matrix_n{n}.txt')
        if 'provider' in results:
            dump_effective(results['mesh'], results['provider'],
                           output_dir / f"effective_n{results['mesh'].n}.txt")
        utils.append_log(output_dir, results['log_stats'])

    total_time = time.time() - start_time
    total_time_str = str(datetime.timedelta(seconds=int(total_time)))
    print('{} time {}'.format(cfg.study, total_time_str))


if __name__ == '__main__':
    args = parse_args()
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
    main(args)
