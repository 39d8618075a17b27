"""Command-line interface.

Subcommands wrap the library pipelines: ``cluster`` (mean-shift or blurring
variants on CSV points), ``segment`` (PGM images), ``denoise`` (manifold
denoising), ``kmodes`` (K-modes and Laplacian K-modes), ``condmodes``
(conditional-mode multivalued regression), and ``modetree`` (mode tracking
over a bandwidth grid).  Exit codes: 0 success, 1 input error, 2 numerical
failure.  ``MODESEEK_THREADS`` caps worker threads.
"""

import argparse
import json
import sys

import numpy as np

from . import blur, fileio, image, kmodes as km, seek
from .errors import InputError, NumericError
from .kde import Kernel, entropic_bandwidths

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    # usage problems are input errors (exit 1), not argparse's exit 2
    def error(self, message):
        raise InputError(message)


def build_parser():
    parser = _Parser(prog="modeseek", description="Mean-shift clustering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cluster", parents=[], description="Cluster CSV points")
    c.add_argument("--input", required=True)
    c.add_argument("--kernel", choices=["gaussian", "epanechnikov"], default="gaussian")
    c.add_argument("--bandwidth", type=float, required=True)
    c.add_argument("--adaptive-perplexity", type=float, default=None)
    c.add_argument("--method", choices=["ms", "bms", "bms-accel"], default="ms")
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--merge-eps", type=float, default=None)
    c.add_argument("--output", required=True)
    c.add_argument("--modes", default=None)

    s = sub.add_parser("segment", description="Segment a PGM image")
    s.add_argument("--image", required=True)
    s.add_argument("--bandwidth", type=float, required=True)
    s.add_argument("--method", choices=list(image.SEGMENT_METHODS), default="ms")
    s.add_argument("--range-scale", type=float, default=100.0)
    s.add_argument("--output", required=True)
    s.add_argument("--report", default=None)

    d = sub.add_parser("denoise", description="Manifold-denoise CSV points")
    d.add_argument("--input", required=True)
    d.add_argument("--bandwidth", type=float, required=True)
    d.add_argument("--knn", type=int, default=10)
    d.add_argument("--tangent-dim", type=int, default=1)
    d.add_argument("--max-iter", type=int, default=5)
    d.add_argument("--output", required=True)

    k = sub.add_parser("kmodes", description="K-modes / Laplacian K-modes")
    k.add_argument("--input", required=True)
    k.add_argument("--k", type=int, required=True)
    k.add_argument("--bandwidth", type=float, required=True)
    k.add_argument("--lambda", dest="lam", type=float, default=None)
    k.add_argument("--graph-knn", type=int, default=10)
    k.add_argument("--output", required=True)
    k.add_argument("--centers", required=True)
    k.add_argument("--soft", default=None)

    q = sub.add_parser("condmodes", description="Modes of p(y|x) per query")
    q.add_argument("--input", required=True)
    q.add_argument("--xdim", type=int, required=True)
    q.add_argument("--bandwidth", type=float, required=True)
    q.add_argument("--query", required=True)
    q.add_argument("--output", required=True)

    t = sub.add_parser("modetree", description="Modes tracked over a sigma grid")
    t.add_argument("--input", required=True)
    t.add_argument("--sigma-grid", required=True, help="a:b:n -> n values from a to b")
    t.add_argument("--output", required=True)
    return parser


def _cmd_cluster(args):
    X = fileio.read_points_csv(args.input)
    kernel = Kernel.parse(args.kernel)
    if args.adaptive_perplexity is not None:
        if args.method != "ms" or kernel is not Kernel.GAUSSIAN:
            raise InputError("adaptive bandwidths require --method ms --kernel gaussian")
        bandwidth = entropic_bandwidths(X, args.adaptive_perplexity)
    else:
        bandwidth = args.bandwidth
    if args.method == "ms":
        cfg = seek.MsConfig(tol=args.tol, merge_eps=args.merge_eps)
        result = seek.ms_cluster(X, kernel, bandwidth, cfg)
    else:
        if kernel is not Kernel.GAUSSIAN:
            raise InputError("blurring methods use the Gaussian kernel")
        cfg = blur.BmsConfig(merge_eps=args.merge_eps)
        if args.method == "bms":
            result = blur.bms_cluster(X, args.bandwidth, cfg)
        else:
            result = blur.bms_cluster_accelerated(X, args.bandwidth, cfg)
    fileio.write_labels_csv(args.output, result.labels)
    if args.modes:
        fileio.write_points_csv(args.modes, result.centers)
    return 0


def _cmd_segment(args):
    img, maxval = fileio.read_pgm(args.image)
    spec = image.ImageFeatureSpec(range_scale=args.range_scale)
    label_img = image.segment_image(
        img, args.bandwidth, method=args.method, spec=spec, in_max=maxval
    )
    fileio.write_pgm(args.output, label_img.labels, maxval=max(1, label_img.k - 1))
    if args.report:
        iters = np.asarray(label_img.diagnostics["iterations"]).ravel()
        values, counts = np.unique(iters, return_counts=True)
        report = {
            "cluster_count": label_img.diagnostics["cluster_count"],
            "runtime_seconds": label_img.diagnostics["runtime_seconds"],
            "mean_iterations": label_img.diagnostics["mean_iterations"],
            "iterations_histogram": {int(v): int(c) for v, c in zip(values, counts)},
        }
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_denoise(args):
    from .denoise import MbmsConfig, mbms_run

    X = fileio.read_points_csv(args.input)
    cfg = MbmsConfig(
        sigma=args.bandwidth,
        k=args.knn,
        tangent_dim=args.tangent_dim,
        max_iter=args.max_iter,
    )
    fileio.write_points_csv(args.output, mbms_run(X, cfg))
    return 0


def _cmd_kmodes(args):
    X = fileio.read_points_csv(args.input)
    if args.lam is not None:
        graph = km.build_knn_graph(X, k=args.graph_knn, bandwidth=args.bandwidth)
        result = km.lap_kmodes_fit(X, args.k, args.bandwidth, args.lam, graph=graph)
        soft = result.assignments
    else:
        result = km.kmodes_fit(X, args.k, sigmas=km.homotopy_schedule(X, args.bandwidth))
        soft = None
    fileio.write_labels_csv(args.output, result.labels)
    fileio.write_points_csv(args.centers, result.centers)
    if args.soft:
        if soft is None:
            raise InputError("--soft requires --lambda (soft assignments)")
        fileio.write_points_csv(args.soft, soft)
    return 0


def _cmd_condmodes(args):
    pairs = fileio.read_points_csv(args.input)
    queries = fileio.read_points_csv(args.query)
    if args.xdim < 1 or args.xdim >= pairs.shape[1]:
        raise InputError("--xdim must split the pair columns in two")
    if queries.shape[1] != args.xdim:
        raise InputError("query columns must match --xdim")
    rows = []
    for qi, q in enumerate(queries):
        for m in seek.conditional_modes(pairs, args.bandwidth, q):
            rows.append(np.concatenate([[qi], m.mode, [m.weight]]))
    if not rows:
        raise NumericError("no conditional modes found")
    fileio.write_points_csv(args.output, np.vstack(rows))
    return 0


def _parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError("--sigma-grid expects a:b:n")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError("--sigma-grid expects numeric a:b:n") from exc
    if n < 1 or a <= 0 or b <= a:
        raise InputError("--sigma-grid needs 0 < a < b and n >= 1")
    return np.linspace(a, b, n)


def _cmd_modetree(args):
    X = fileio.read_points_csv(args.input)
    grid = _parse_grid(args.sigma_grid)
    result = seek.mode_continuation(X, grid)
    rows = []
    for level, sigma in enumerate(result.sigmas):
        modes = result.modes[level]
        nxt = result.parents[level + 1] if level + 1 < len(result.sigmas) else None
        for j in range(modes.shape[0]):
            next_index = -1 if nxt is None else int(nxt[j])
            rows.append(np.concatenate([[level, j, sigma, next_index], modes[j]]))
    fileio.write_points_csv(args.output, np.vstack(rows))
    return 0


_COMMANDS = {
    "cluster": _cmd_cluster,
    "segment": _cmd_segment,
    "denoise": _cmd_denoise,
    "kmodes": _cmd_kmodes,
    "condmodes": _cmd_condmodes,
    "modetree": _cmd_modetree,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
