"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --frames 5000 --classes 10 --repeat 20
"""

import timeit

import click
import numpy as np

from wssed import _pykernels

try:
    from wssed import _ckernels
except ImportError:
    _ckernels = None


def cases(probs, mask):
    return {
        "binary_median(w=51)": lambda k: k.binary_median(mask, 51),
        "hysteresis": lambda k: k.hysteresis(probs, 0.2, 0.75),
        "bridge_gaps(w=9)": lambda k: k.bridge_gaps(mask, 9),
        "runs(col 0)": lambda k: k.runs(mask[:, 0]),
    }


@click.command()
@click.option("--frames", default=5000, show_default=True)
@click.option("--classes", default=10, show_default=True)
@click.option("--repeat", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
def main(frames, classes, repeat, seed):
    rng = np.random.default_rng(seed)
    probs = rng.random((frames, classes))
    mask = probs > 0.5
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        click.echo("compiled extension not built; timing the fallback only")
    click.echo(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name, fn in cases(probs, mask).items():
        results = [fn(k) for k in backends.values()]
        assert all(np.array_equal(np.asarray(results[0]), np.asarray(r)) for r in results[1:])
        times = {b: min(timeit.repeat(lambda: fn(k), number=1, repeat=repeat)) for b, k in backends.items()}
        row = f"{name:<22}" + "".join(f"{1e3 * t:>10.3f}ms" for t in times.values())
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:>9.1f}x"
        click.echo(row)


if __name__ == "__main__":
    main()
