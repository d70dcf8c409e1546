"""
Regenerate accuracy matrices from sweep CSVs written by `cnrnn sweep`.

    python scripts/generate_sweep_figures.py [PATTERN ...] [--mean]

With --mean the matching tables (one per dataset, same mode and grid) are
averaged into one matrix, plotted as outputs/sweep_figures/mean_<mode>.png.
"""

import argparse
import glob
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.errors import TextureSignatureError
from app.evaluation import best_single, mean_sweep, sweep_grid
from app.figures import plot_sweep_grid
from data.feature_store import read_sweep, write_sweep

os.makedirs('outputs/sweep_figures', exist_ok=True)


def figure_for(results, stem: str):
    mode = results['mode'].iloc[0]

    if mode == 'psi_triples':
        best = results.sort_values('accuracy', ascending=False).iloc[0]
        print(f"  {stem}: triples table, best Q={{{best['qs']}}} "
              f"({best['n_features']} features) {best['accuracy_percent']:.2f}%")
        return None

    grid = sweep_grid(results)
    value, accuracy = best_single(grid)
    print(f"  {stem}: best single {grid.index.name}={value} ({accuracy:.2f}%)")
    return plot_sweep_grid(grid, f'outputs/sweep_figures/{stem}.png', title=stem)


def mean_figure(paths):
    tables = [read_sweep(p) for p in paths]
    mean = mean_sweep(tables)
    stem = f"mean_{mean['mode'].iloc[0]}"
    write_sweep(mean, f'outputs/sweep_figures/{stem}.csv')
    print(f"  averaged {len(tables)} tables over {len(mean)} combinations")
    return figure_for(mean, stem)


def main():
    parser = argparse.ArgumentParser(description="Accuracy matrices from sweep CSVs")
    parser.add_argument('patterns', nargs='*', default=['outputs/sweep_*.csv'])
    parser.add_argument('--mean', action='store_true', help="average all matching tables into one matrix")
    args = parser.parse_args()

    paths = sorted({p for pattern in args.patterns for p in glob.glob(pattern)})

    print("=" * 70)
    print("Generating Sweep Figures")
    print("=" * 70)

    if not paths:
        print(f"\nNo sweep CSVs match {' '.join(args.patterns)}. Run `python main.py sweep ...` first.")
        return

    try:
        if args.mean:
            mean_figure(paths)
        else:
            for path in paths:
                figure_for(read_sweep(path), os.path.splitext(os.path.basename(path))[0])
    except TextureSignatureError as e:
        print(f"\n✗ {e}")
        sys.exit(1)

    print("\n" + "=" * 70)
    print("All figures generated!")
    print("=" * 70)


if __name__ == '__main__':
    main()
