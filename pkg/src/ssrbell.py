#!/usr/bin/python
import os
import sys
import argparse
import logging
import json
from dataclasses import asdict, dataclass, fields
from typing import Dict, List, Optional

import json5

import analysis
import bell
import states
from reproduce import reproducer

__author__ = 'ssrbell developers'
__license__ = "Creative Commons Attribution-NonCommercial-NoDerivs 4.0 Unported License https://creativecommons.org/licenses/by-nc-nd/4.0/"
__version__ = "1.1"
__status__ = "Development"


FAMILIES = ['bec', 'noon', 'squeezed', 'toy_mixed', 'custom']

# parameters reported for each family
FAMILY_KEYS = {'bec': ['n'], 'noon': ['n', 'm'], 'squeezed': ['c'], 'toy_mixed': ['p'], 'custom': ['amplitudes']}


@dataclass
class RunConfig:
    family: str = 'bec'
    n: int = 1
    m: int = 0
    c: float = 0.5
    p: float = 0.5
    n2: Optional[int] = None
    # second copy from another family; same as family when None
    family2: Optional[str] = None
    # custom family only: {"n,m": amplitude}, config file only
    amplitudes: Optional[Dict[str, object]] = None
    alpha: Optional[float] = None
    grid: int = 64
    resolution: int = 101
    refine: bool = True
    fixed_angles: Optional[List[float]] = None
    co_optimize: bool = False
    alice_particles: Optional[int] = None
    d: Optional[int] = None
    item: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0

    @classmethod
    def from_sources(cls, args):
        '''
        Config file values first, then every flag given on the command line
        '''
        values = {}
        if args.config:
            with open(args.config) as f:
                loaded = json5.load(f)
            if not isinstance(loaded, dict):
                raise ValueError(f"config file {args.config} must hold a key-value object")
            known = {f.name for f in fields(cls)}
            unknown = sorted(set(loaded) - known)
            if unknown:
                raise ValueError(f"unknown keys in config file {args.config}: {', '.join(unknown)}")
            values.update(loaded)
        for f in fields(cls):
            v = getattr(args, f.name, None)
            if v is not None:
                values[f.name] = v
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown state family '{self.family}'. Try with: {', '.join(FAMILIES)}")
        if isinstance(self.fixed_angles, str):
            self.fixed_angles = parse_angles(self.fixed_angles)
        if self.fixed_angles is not None and len(self.fixed_angles) != 2:
            raise ValueError(f"--fixed-angles takes two angles, got {len(self.fixed_angles)}")
        if self.family2 is not None and self.family2 not in FAMILIES:
            raise ValueError(f"unknown state family '{self.family2}'. Try with: {', '.join(FAMILIES)}")
        second = self.family2 or self.family
        if self.n2 is not None and second not in ('bec', 'noon'):
            raise ValueError(f"--n2 applies to the bec and noon families only, not '{second}'")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"--alpha must lie in [0, 1], got {self.alpha}")
        # the constructors check the family preconditions
        self.copies()

    def copies(self):
        first = states.family_state(self.family, self.n, self.m, self.c, self.p, self.amplitudes)
        if self.n2 is None and self.family2 is None:
            return first, first
        n2 = self.n if self.n2 is None else self.n2
        return first, states.family_state(self.family2 or self.family, n2, self.m, self.c, self.p, self.amplitudes)

    def arrangement(self):
        return states.two_copy(*self.copies())

    def family_parameters(self):
        keys = FAMILY_KEYS[self.family] + ['n2']
        if self.family2 is not None:
            keys += ['family2'] + [k for k in FAMILY_KEYS[self.family2] if k not in keys]
        out = {'family': self.family}
        out.update({k: getattr(self, k) for k in keys if getattr(self, k) is not None})
        if self.alpha is not None:
            out['alpha'] = self.alpha
        return out


###################
# Local functions #
###################

def parse_angles(text):
    try:
        return [float(x) for x in text.split(',')]
    except ValueError:
        raise ValueError(f"angles must be comma-separated numbers, got '{text}'")


def write_json(data, outfile=None):
    text = json.dumps(data, indent=2, sort_keys=True) + '\n'
    if outfile:
        outdir = os.path.dirname(outfile)
        if outdir:
            os.makedirs(outdir, exist_ok=True)
        with open(outfile, 'w') as f:
            f.write(text)
        logging.info(f"wrote {outfile}")
    else:
        sys.stdout.write(text)


def cmd_surface(cfg):
    out = cfg.out or 'surface.csv'
    surface = analysis.bell_surface(cfg.arrangement(), fixed=cfg.fixed_angles, resolution=cfg.resolution, alpha=cfg.alpha)
    outdir = os.path.dirname(out)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    surface.to_frame().to_csv(out, index=False, float_format='%.12g')
    logging.info(f"wrote {out}")
    sidecar = {
        'parameters': cfg.family_parameters(),
        'fixed_angles': {'phi_A1': surface.fixed[0], 'phi_B1': surface.fixed[1]},
        'swept_angles': ['phi_A2', 'phi_B2'],
        'resolution': cfg.resolution,
        'max_value': surface.max(),
        'argmax': dict(zip(['phi_A2', 'phi_B2'], surface.argmax())),
    }
    write_json(sidecar, os.path.splitext(out)[0] + '.json')


def cmd_optimize(cfg):
    result = analysis.optimize_bell(cfg.arrangement(), cfg.grid, cfg.refine, alice_particles=cfg.alice_particles,
                                    optimize_transmissivity=cfg.co_optimize, alpha=cfg.alpha)
    report = result.as_dict()
    report['parameters'] = cfg.family_parameters()
    write_json(report, cfg.out)


def cmd_reproduce(cfg):
    items = reproducer.ITEMS if cfg.item == 'all' else [cfg.item]
    outdir = cfg.out or 'results'
    for item in items:
        reproducer(item, outdir, grid=cfg.grid, refine=cfg.refine, resolution=cfg.resolution, seed=cfg.seed).run()


def cmd_entropy(cfg):
    first, second = cfg.copies()
    state = states.two_copy(first, second)
    report = {'parameters': cfg.family_parameters()}
    if state.is_pure:
        report['projected_entropy'] = analysis.projected_entropy(state)
        report['mode_entropy'] = analysis.entanglement_entropy(first)
    else:
        raise ValueError("entropies need a pure state, the copies are mixed")
    report['alice_total_probabilities'] = {str(k): v for k, v in bell.alice_total_probabilities(state).items()}
    write_json(report, cfg.out)


def cmd_squeezing(cfg):
    state, _ = cfg.copies()
    if not isinstance(state, states.PureState):
        raise ValueError(f"squeezing needs a pure state, the '{cfg.family}' family is mixed")
    report = {'parameters': cfg.family_parameters()}
    for axis in ('z', 'y'):
        try:
            report[f'squeezing_{axis}'] = analysis.squeezing_parameter(state, axis)
        except analysis.SqueezingUndefinedError as e:
            logging.warning(f"axis {axis}: {e}")
            report[f'squeezing_{axis}'] = None
    write_json(report, cfg.out)


def cmd_cglmp(cfg):
    state = cfg.arrangement()
    if cfg.fixed_angles is not None:
        raise ValueError("cglmp takes its settings from the optimizer; --fixed-angles does not apply")
    result = analysis.optimize_bell(state, cfg.grid, cfg.refine, alpha=cfg.alpha)
    dists = bell.bell_distributions(state, result.best_settings)
    d = cfg.d or state.total + 1
    value = analysis.cglmp_value(dists, d=d)
    write_json({
        'parameters': cfg.family_parameters(),
        'd': d,
        'cglmp_value': value,
        'local_bound': 2.0,
        'violation': bool(value > 2.0 + 1e-9),
        'settings': result.best_settings.as_dict(),
        'bell_term': result.best_value,
    }, cfg.out)


COMMANDS = {
    'surface': cmd_surface,
    'optimize': cmd_optimize,
    'reproduce': cmd_reproduce,
    'entropy': cmd_entropy,
    'squeezing': cmd_squeezing,
    'cglmp': cmd_cglmp,
}


#################
# Main function #
#################

def main(args):
    ''' Main function'''
    try:
        cfg = RunConfig.from_sources(args)
        logging.debug(f"run config: {asdict(cfg)}")
        COMMANDS[args.command](cfg)
    except OSError as e:
        logging.error(e)
        sys.exit(2)
    except ValueError as e:
        sys.exit(f"ERROR: {e}")


def build_parser():
    class CustomFormatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawTextHelpFormatter):
        pass
    # flags default to None so that unset flags never hide config-file values
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--family', choices=FAMILIES, help='State family of each copy (default: bec); custom takes its amplitudes from --config')
    common.add_argument('--n', type=int, help='Particle number N of the first copy (default: 1)')
    common.add_argument('--m', type=int, help='m of the |N-m,m> + |m,N-m> family (default: 0)')
    common.add_argument('--c', type=float, help='Squeezing amplitude c in [0, 1/sqrt(2)] (default: 0.5)')
    common.add_argument('--p', type=float, help='Mixing weight p of the toy mixed state (default: 0.5)')
    common.add_argument('--n2', type=int, help='Particle number of the second copy (default: same as --n)')
    common.add_argument('--family2', choices=FAMILIES, help='State family of the second copy (default: same as --family)')
    common.add_argument('--alpha', type=float, help='Transmissivity amplitude of every beamsplitter (default: balanced)')
    common.add_argument('--grid', type=int, help='Grid points per angle of the optimizer (default: 64)')
    common.add_argument('--resolution', type=int, help='Points per swept angle (default: 101)')
    common.add_argument('--refine', action=argparse.BooleanOptionalAction, default=None, help='Nelder-Mead refinement after the grid (default: on)')
    common.add_argument('--fixed-angles', dest='fixed_angles', type=parse_angles, help='phi_A1,phi_B1 of a surface (default: optimized)')
    common.add_argument('--co-optimize', dest='co_optimize', action='store_true', default=None, help='Also optimize one transmissivity per party')
    common.add_argument('--alice-particles', dest='alice_particles', type=int, help="Post-select on Alice's particle number")
    common.add_argument('--out', help='Output file (surface, optimize, entropy, squeezing, cglmp) or folder (reproduce)')
    common.add_argument('--config', help='JSON5 run-config file; flags override its values')
    common.add_argument('--seed', type=int, help='Seed of the randomized reproduction checks (default: 0)')
    common.add_argument('-v', dest='verbose', action='store_true', help="Increase output verbosity")

    parser = argparse.ArgumentParser(
        description='Bell tests on two copies of superselection-restricted bosonic states',
        epilog='''
Examples:
    ssrbell.py optimize  --family bec --n 2
    ssrbell.py surface   --family squeezed --c 0.6 --resolution 101 --out results/c06.csv
    ssrbell.py reproduce fig2 --out results
    ssrbell.py squeezing --family squeezed --c 0.6
        ''',
        formatter_class=CustomFormatter)
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('surface', parents=[common], help='Bell term over (phi_A2, phi_B2) as CSV plus JSON sidecar')
    sub.add_parser('optimize', parents=[common], help='Maximal Bell term and its settings as JSON')
    rep = sub.add_parser('reproduce', parents=[common], help='Regenerate a figure or claim and compare it with the quoted values')
    rep.add_argument('item', choices=reproducer.ITEMS + ['all'], help='Reproduction item')
    sub.add_parser('entropy', parents=[common], help='Projected and mode entanglement entropies as JSON')
    sub.add_parser('squeezing', parents=[common], help='Spin squeezing parameters of one copy as JSON')
    cg = sub.add_parser('cglmp', parents=[common], help='CGLMP value at the optimal Bell settings as JSON')
    cg.add_argument('--d', type=int, help='Number of outcomes per party (default: particles + 1)')
    return parser


if __name__ == "__main__":
    args = build_parser().parse_args()

    # get the name of script
    script_name = os.path.splitext(os.path.basename(__file__))[0].upper()

    # logging debug level. By default, info level
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG,
                            format=script_name+' - '+str(os.getpid())+' - %(asctime)s - %(levelname)s - %(message)s',
                            datefmt='%m/%d/%Y %I:%M:%S %p')
    else:
        logging.basicConfig(level=logging.INFO,
                            format=script_name+' - '+str(os.getpid())+' - %(asctime)s - %(levelname)s - %(message)s',
                            datefmt='%m/%d/%Y %I:%M:%S %p')

    # start main function
    logging.info('start script: '+"{0}".format(" ".join([x for x in sys.argv])))
    main(args)
    logging.info('end script')
