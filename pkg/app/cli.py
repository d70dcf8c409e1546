"""
Command-line entry point: extract, eval, render, sweep, synth.

Exit codes: 0 success, 1 usage or parameter error, 2 data error.
"""

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from app import __version__
from app.config import RunConfig, load_run_config, parse_int_list, with_overrides
from app.errors import DatasetError, ParameterError, TextureSignatureError
from app.evaluation import leave_one_out, sweep, sweep_grid, SWEEP_MODES
from app.figures import plot_sweep_grid
from app.network import MEASURES, compute_measures, render_measure
from app.signature import SignatureExtractor, feature_names
from data.feature_store import read_features, write_eval_result, write_features, write_sweep
from data.image_loader import load_gray, save_gray, scan_dataset
from data.synthetic import generate_synthetic_dataset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_extract(root, config: RunConfig, out) -> dict:
    """One psi signature per image of <root>/<class>/<image>, written as CSV + sidecar."""
    dataset = scan_dataset(root)
    extractor = SignatureExtractor(config.lam, config.label_normalization)
    radii, qs = config.radii, config.qs

    def extract_one(sample):
        try:
            return extractor.psi(load_gray(sample.path), radii, qs).values, None
        except TextureSignatureError as e:
            return None, e

    logger.info(f"Extracting psi signatures (R={radii}, Q={qs}) for {len(dataset)} images "
                f"with {config.threads} thread(s)")
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        results = list(tqdm(
            pool.map(extract_one, dataset.samples),
            total=len(dataset),
            desc="Extracting",
            disable=not config.progress,
        ))

    failures = [(s.path, e) for s, (_, e) in zip(dataset.samples, results) if e is not None]
    for path, error in failures:
        logger.error(f"Could not process {path}: {error}")
    if failures:
        raise DatasetError(f"{len(failures)} of {len(dataset)} images could not be processed")

    rows = np.stack([values for values, _ in results])
    return write_features(
        out,
        paths=[dataset.relative_path(s) for s in dataset.samples],
        class_names_per_row=[dataset.class_names[s.class_id] for s in dataset.samples],
        rows=rows,
        columns=feature_names(radii, qs),
        extraction=config.extraction_params(),
        class_names=dataset.class_names,
        dataset_root=str(dataset.root),
    )


def cmd_eval(csv_path, config: RunConfig, out=None):
    """Leave-one-out LDA over a feature CSV; writes JSON + text report."""
    table, _, meta = read_features(csv_path)
    result = leave_one_out(
        table,
        gamma=config.lda_gamma,
        threads=config.threads,
        downdate=config.loo_downdate,
        progress=config.progress,
    )
    csv_path = Path(csv_path)
    out = Path(out) if out else csv_path.with_name(csv_path.stem + ".eval.json")
    write_eval_result(result, out, source=csv_path.name, n_features=meta.get("n_features", table.n_features))
    return result


def cmd_render(image_path, r, measure: str, out=None) -> Path:
    """Write one measure map as an 8-bit image."""
    if measure not in MEASURES:
        raise ParameterError(f"measure must be one of {MEASURES}, got '{measure}'")
    img = load_gray(image_path)
    rendered = render_measure(compute_measures(img, r), measure)
    image_path = Path(image_path)
    out = Path(out) if out else image_path.with_name(f"{image_path.stem}_{measure}_r{r}.png")
    save_gray(rendered, out)
    logger.info(f"✓ Rendered {measure} (r={r}) of {image_path} to {out}")
    return out


def cmd_sweep(root, config: RunConfig, mode: str, radius_grid: List[int], q_grid: List[int],
              out, figure=None) -> pd.DataFrame:
    """Accuracy of every parameter combination of `mode`, one CSV row each."""
    dataset = scan_dataset(root)
    results = sweep(
        dataset.paths,
        dataset.labels,
        dataset.class_names,
        mode,
        radii_grid=radius_grid,
        qs_grid=q_grid,
        fixed_radii=config.radii,
        theta_q=config.theta_q,
        lam=config.lam,
        label_normalization=config.label_normalization,
        gamma=config.lda_gamma,
        threads=config.threads,
        downdate=config.loo_downdate,
        progress=config.progress,
        loader=load_gray,
    )
    write_sweep(results, out)
    if figure:
        if mode == "psi_triples":
            logger.warning("psi_triples has no matrix form; skipping figure")
        else:
            plot_sweep_grid(sweep_grid(results), figure)
    return results


def _shared_options() -> argparse.ArgumentParser:
    shared = ArgumentParser(add_help=False)
    shared.add_argument('--config', help='JSON run configuration (default config/run_config.json)')
    shared.add_argument('--radii', type=parse_int_list, help='radius set, e.g. 2,9')
    shared.add_argument('--qs', type=parse_int_list, help='hidden-neuron counts, e.g. 4,19,29')
    shared.add_argument('--lambda', dest='lam', type=float, help='ridge parameter (default 1e-3)')
    shared.add_argument('--no-label-norm', dest='label_normalization', action='store_false', default=None,
                        help='train on raw out-degree labels')
    shared.add_argument('--gamma', dest='lda_gamma', type=float, help='LDA covariance ridge (default 1e-4)')
    shared.add_argument('--threads', type=int, help='worker threads (default: all cores)')
    shared.add_argument('--downdate', dest='loo_downdate', action='store_true', default=None,
                        help='rank-one downdated leave-one-out')
    shared.add_argument('--out', help='output path')
    shared.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    shared.add_argument('-q', '--quiet', action='store_true', help='warnings only, no progress bars')
    return shared


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_options()
    parser = ArgumentParser(
        prog='cnrnn',
        description='Complex-network texture signatures learned by randomized neural networks',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    extract = commands.add_parser('extract', parents=[shared], help='extract signatures for a dataset')
    extract.add_argument('root', help='dataset root: <root>/<class>/<image>')

    evaluate = commands.add_parser('eval', parents=[shared], help='leave-one-out LDA on a feature CSV')
    evaluate.add_argument('features', help='feature CSV written by extract')

    render = commands.add_parser('render', parents=[shared], help='render a measure map as an image')
    render.add_argument('image')
    render.add_argument('-r', '--radius', type=int, default=2)
    render.add_argument('-m', '--measure', choices=MEASURES, default='k')

    sweep_cmd = commands.add_parser('sweep', parents=[shared], help='accuracy over R or Q combinations')
    sweep_cmd.add_argument('root', help='dataset root: <root>/<class>/<image>')
    sweep_cmd.add_argument('--mode', choices=SWEEP_MODES, default='theta_pairs')
    sweep_cmd.add_argument('--radius-grid', type=parse_int_list, default=list(range(2, 11)),
                           help='radii for theta_pairs (default 2..10)')
    sweep_cmd.add_argument('--q-grid', type=parse_int_list, default=[4, 9, 14, 19, 24, 29],
                           help='Q values for psi modes (default 4,9,14,19,24,29)')
    sweep_cmd.add_argument('--theta-q', type=int, help='Q used by theta_pairs (default 4)')
    sweep_cmd.add_argument('--figure', help='also save the accuracy matrix as an image')

    synth = commands.add_parser('synth', parents=[shared], help='write the synthetic 4-class texture set')
    synth.add_argument('root')
    synth.add_argument('--samples', type=int, default=20, help='images per class')
    synth.add_argument('--size', type=int, default=64, help='image side in pixels')
    synth.add_argument('--seed', type=int, default=7)

    return parser


def _configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')


def _run_config(args) -> RunConfig:
    config = load_run_config(args.config)
    return with_overrides(
        config,
        radii=args.radii,
        qs=args.qs,
        lam=args.lam,
        label_normalization=args.label_normalization,
        lda_gamma=args.lda_gamma,
        threads=args.threads,
        loo_downdate=args.loo_downdate,
        theta_q=getattr(args, 'theta_q', None),
        progress=False if args.quiet else None,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)

    try:
        config = _run_config(args)

        if args.command == 'extract':
            meta = cmd_extract(args.root, config, args.out or 'features.csv')
            logger.info(f"✓ {meta['n_samples']} signatures of {meta['n_features']} features")
        elif args.command == 'eval':
            result = cmd_eval(args.features, config, args.out)
            print(f"{100 * result.accuracy:.2f}")
        elif args.command == 'render':
            cmd_render(args.image, args.radius, args.measure, args.out)
        elif args.command == 'sweep':
            results = cmd_sweep(args.root, config, args.mode, args.radius_grid, args.q_grid,
                                args.out or f'sweep_{args.mode}.csv', args.figure)
            if not args.quiet:
                print(results.to_string(index=False))
        elif args.command == 'synth':
            dataset = generate_synthetic_dataset(args.root, args.samples, args.size, args.seed)
            logger.info(f"✓ {len(dataset)} images in {len(dataset.class_names)} classes at {args.root}")

    except ParameterError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except TextureSignatureError as e:
        logger.error(str(e))
        return EXIT_DATA

    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
