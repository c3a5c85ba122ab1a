"""Command-line driver.

Every command writes its outputs plus ``<command>.manifest.json`` into ``--out``.
Files are written to a temporary name and renamed into place. The
manifest records the argument vector, so ``maglap replay heat.manifest.json``
reruns the command and reproduces the outputs.

Exit codes: 0 success, 2 malformed input or arguments, 3 mathematical
failure (degenerate graph, eigensolver, size mismatch), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import coarse, embed, generators, render, som, thermo
from .errors import MaglapError, ParseError
from .graph import dump_edge_list, dump_labels, labels_array, load_edge_list, load_labels

EXIT_PARSE, EXIT_MATH, EXIT_IO = 2, 3, 4

log = logging.getLogger("maglap")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_grid(spec: str) -> np.ndarray:
    """``a:b:n`` gives ``n`` evenly spaced points; a bare number gives one point."""
    try:
        parts = spec.split(":")
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:n, got {spec!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs at least one point")
    return np.linspace(a, b, n)


def parse_values(spec: str) -> np.ndarray:
    """Comma list (``2,3,4``) or ``a:b:n`` grid."""
    if ":" in spec:
        return parse_grid(spec)
    try:
        return np.array([float(x) for x in spec.split(",") if x.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {spec!r}") from None


def parse_fraction(spec: str) -> float:
    try:
        if "/" in spec:
            a, b = spec.split("/", 1)
            return float(a) / float(b)
        return float(spec)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {spec!r}") from None


def _kv(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ParseError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = generators._parse_scalar(v.strip())
    return out


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


class Run:
    """Collects outputs of one command and writes the manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out)
        self.outputs: list[str] = []
        self.result: dict = {}
        self.start = time.perf_counter()

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        write_atomic(path, text)
        self.outputs.append(name)
        return path

    def finish(self) -> None:
        params = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                  for k, v in vars(self.args).items() if k not in ("func", "inputs_")}
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "parameters": params,
            "seed": self.args.seed,
            "inputs": [str(p) for p in getattr(self.args, "inputs_", [])],
            "outputs": self.outputs,
            "result": self.result,
            "version": _version(),
            "wall_time": time.perf_counter() - self.start,
        }
        write_atomic(self.out / f"{self.args.command}.manifest.json",
                     json.dumps(manifest, indent=2, default=str) + "\n")


def cmd_generate(args, run: Run) -> None:
    if args.config:
        cfg = generators.GenConfig.from_text(_read(args.config))
        args.inputs_ = [args.config]
    else:
        if not args.family:
            raise ParseError("generate needs a config file or --family")
        cfg = generators.GenConfig(generators.Family(args.family), _kv(args.param), 0)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    g, labels = generators.generate(cfg)
    run.write("graph.txt", dump_edge_list(g))
    run.write("config.txt", cfg.to_text())
    if labels is not None:
        run.write("labels.txt", dump_labels(labels))
    run.result = {"n": g.n, "edges": g.num_edges}


def cmd_heat(args, run: Run) -> None:
    g = load_edge_list(_read(args.graph))
    args.inputs_ = [args.graph]
    hm = thermo.heat_map(g, args.q_grid, args.t_grid, normalized=not args.unnormalized,
                         largest_component=args.largest_component, jobs=args.jobs)
    run.write("heat.csv", thermo.heatmap_to_csv(hm))


def cmd_infer(args, run: Run) -> None:
    g = load_edge_list(_read(args.graph))
    args.inputs_ = [args.graph]
    res = thermo.infer_parameter(
        g, args.family, args.param, args.candidates, n_exp=args.n_exp, method=args.method,
        q_grid=args.q_grid, T_grid=args.t_grid, fixed=_kv(args.fixed), trick=not args.full,
        seed=args.seed or 0, jobs=args.jobs)
    run.write("inference.csv", res.table_csv())
    run.result = {"best": res.best}
    print(f"{args.param} = {res.best:g}")


def cmd_embed(args, run: Run) -> None:
    g = load_edge_list(_read(args.graph))
    args.inputs_ = [args.graph]
    labels = None
    if args.labels:
        labels = load_labels(_read(args.labels), g.n)
        args.inputs_.append(args.labels)
    if args.method == "frustration":
        coords = embed.eigenmap_t2(g, args.q)
    else:
        coords = embed.diffusion_embedding(g, args.q, kernel=args.kernel, s=args.s, epsilon=args.epsilon,
                                           t=args.t, m=args.m, transform=args.transform)
    run.write("coords.csv", coords.to_csv(labels))
    if labels is not None and args.method == "diffusion":
        truth = labels_array(labels, g.n)
        pred = embed.two_means(coords.coords[:, :2], seed=args.seed or 0)
        run.result = {"two_means_purity": embed.purity(pred, truth)}


def cmd_coarsen(args, run: Run) -> None:
    g = load_edge_list(_read(args.graph))
    args.inputs_ = [args.graph]
    flow = coarse.coarse_flow(g, args.q, args.steps, args.embedder, q_grid=args.q_grid, T_grid=args.t_grid,
                              jobs=args.jobs)
    for i, st in enumerate(flow):
        run.write(f"step{i}_graph.txt", dump_edge_list(st.graph))
        run.write(f"step{i}_heat.csv", thermo.heatmap_to_csv(st.heatmap))
        run.write(f"step{i}_coords.csv", st.coords.to_csv())
    run.result = {"steps": [
        {"step": i, "n": st.graph.n, "edges": st.graph.num_edges, "disconnected": st.disconnected,
         "petals": coarse.petal_count(st.heatmap, args.t_ring)}
        for i, st in enumerate(flow)]}
    print(" ".join(str(s["petals"]) for s in run.result["steps"]))


def _load_dataset(path: Path):
    """Heat-map CSVs in ``path`` plus ``labels.txt`` with ``<file stem> <label>`` lines."""
    label_file = path / "labels.txt"
    names = {}
    for lineno, line in enumerate(_read(label_file).splitlines(), start=1):
        body = line.split("#", 1)[0].split()
        if not body:
            continue
        if len(body) != 2:
            raise ParseError("expected '<name> <label>'", lineno)
        names[body[0]] = body[1]
    samples, labels = [], []
    for name, lab in sorted(names.items()):
        hm = thermo.heatmap_from_csv(_read(path / f"{name}.csv"))
        samples.append(hm.flat())
        labels.append(lab)
    return np.array(samples), labels


def cmd_som(args, run: Run) -> None:
    if args.dataset:
        X, y = _load_dataset(Path(args.dataset))
        args.inputs_ = [args.dataset]
    else:
        X, y, _ = som.build_corpus(per_class=args.per_class, seed=args.seed or 0, q_grid=args.q_grid,
                                   T_grid=args.t_grid, jobs=args.jobs)
    grid = som.train(X, args.width, args.height, epochs=args.epochs, lr_initial=args.lr[0], lr_final=args.lr[1],
                     radius_initial=args.radius[0], radius_final=args.radius[1], seed=args.seed or 0)
    hist = som.label_map(grid, X, y)
    U = som.u_matrix(grid)
    run.write("som.txt", som.save(grid))
    run.write("labelmap.csv", som.label_map_csv(hist))
    run.write("umatrix.csv", som.grid_csv(U))
    edge, inner = som.boundary_elevation(grid, X, y)
    run.result = {"purity": som.map_purity(hist), "u_boundary": edge, "u_interior": inner}
    print(f"purity {run.result['purity']:.3f}")


def _read_coords(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split(",")
    has_label = head[-1] == "label"
    ncol = len(head) - 1 - int(has_label)
    X, labels = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        try:
            X.append([float(c) for c in cells[1:1 + ncol]])
        except ValueError:
            raise ParseError("non-numeric coordinate", lineno) from None
        if has_label:
            labels.append(cells[-1])
    return np.array(X), (labels if has_label else None)


def cmd_render(args, run: Run) -> None:
    text = _read(args.csv)
    args.inputs_ = [args.csv]
    if args.kind == "polar":
        svg = render.polar_heatmap_svg(thermo.heatmap_from_csv(text), title=args.title)
    else:
        X, labels = _read_coords(text)
        svg = render.scatter_svg(X, labels, title=args.title)
    run.write(args.name, svg)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (output does not depend on it)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="maglap", description="Magnetic-Laplacian analysis of directed networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def grids(p, q="0:0.5:25", t="0.01:0.15:25"):
        p.add_argument("--q-grid", type=parse_grid, default=parse_grid(q), help="charges as a:b:n")
        p.add_argument("--t-grid", type=parse_grid, default=parse_grid(t), help="temperatures as a:b:n")

    p = sub.add_parser("generate", parents=[common], help="generate a network")
    p.add_argument("config", nargs="?", help="key=value config file")
    p.add_argument("--family", choices=[f.value for f in generators.Family])
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("heat", parents=[common], help="specific-heat map")
    p.add_argument("graph")
    grids(p)
    p.add_argument("--unnormalized", action="store_true")
    p.add_argument("--largest-component", action="store_true")
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("infer", parents=[common], help="infer a generator parameter")
    p.add_argument("graph")
    p.add_argument("--family", required=True, choices=[f.value for f in generators.Family])
    p.add_argument("--param", required=True)
    p.add_argument("--candidates", required=True, type=parse_values)
    p.add_argument("--method", choices=[m.value for m in thermo.Method], default="HEAT_DEV")
    p.add_argument("--n-exp", type=int, default=10)
    p.add_argument("--fixed", action="append", metavar="KEY=VALUE")
    p.add_argument("--full", action="store_true", help="label-dependent entropic distance")
    grids(p, q="0.3333333333333333", t="0.01:0.7:10")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("embed", parents=[common], help="embed vertices")
    p.add_argument("graph")
    p.add_argument("--method", choices=["frustration", "diffusion"], default="frustration")
    p.add_argument("--q", type=parse_fraction, default=1 / 3)
    p.add_argument("--kernel", choices=["phase", "hadamard"], default="phase")
    p.add_argument("--transform", choices=["power", "complement"], default=None)
    p.add_argument("--s", type=float, default=0.01)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--labels")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("coarsen", parents=[common], help="coarse-graining flow")
    p.add_argument("graph")
    p.add_argument("--q", type=parse_fraction, default=1 / 3)
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--embedder", choices=[e.value for e in coarse.Embedder], default="FRUSTRATION_T2")
    p.add_argument("--t-ring", type=float, default=0.25)
    grids(p, t="0.01:0.3:30")
    p.set_defaults(func=cmd_coarsen)

    p = sub.add_parser("som", parents=[common], help="train a self-organizing map")
    p.add_argument("dataset", nargs="?", help="directory of heat-map CSVs with labels.txt; "
                                              "omit to build the desk-scale corpus")
    p.add_argument("--per-class", type=int, default=10)
    p.add_argument("--width", type=int, default=12)
    p.add_argument("--height", type=int, default=12)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, nargs=2, default=[0.5, 0.01], metavar=("START", "END"))
    p.add_argument("--radius", type=float, nargs=2, default=[None, 1.0], metavar=("START", "END"))
    grids(p)
    p.set_defaults(func=cmd_som)

    p = sub.add_parser("render", parents=[common], help="render a CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--kind", choices=["polar", "scatter"], default="polar")
    p.add_argument("--name", default="plot.svg")
    p.add_argument("--title")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("replay", help="rerun a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory (default: the recorded one)")
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, MaglapError) or isinstance(exc, ArithmeticError):
        return EXIT_MATH
    if isinstance(exc, (ValueError, KeyError)):
        return EXIT_PARSE
    raise exc


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            manifest = json.loads(_read(args.manifest))
            replay = list(manifest["argv"])
            if args.out:
                replay += ["--out", args.out]
            return main(replay)
        run = Run(args, argv)
        args.func(args, run)
        run.finish()
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = _exit_code(exc)
        print(f"maglap: error: {exc}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
