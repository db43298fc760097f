"""Command-line interface: ``osl <subcommand> [options]``.

Exit codes: 0 pass, 1 configuration error, 2 budget (or bound) failure,
3 hypothesis failure.  Every artifact carries the sha256 of the canonical
effective configuration and the package version.

Heavy modules (numpy and friends) are imported inside the subcommands so that
``--threads`` can set the BLAS/OpenMP thread counts before they load.
"""

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .errors import BudgetExceeded, ConfigError, HypothesisFailed

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_HYPOTHESIS = 0, 1, 2, 3

REQUIRED = {
    "dyadic-build": ["space"],
    "weight-constants": ["space", "weight"],
    "sparse-dominate": ["space", "kernel", "f", "eps"],
    "verify-mixed": ["space", "u", "v", "kernel", "theorem", "f"],
    "lemma-suite": [],
    "hormander": ["space", "kernel"],
}


# --------------------------------------------------------------------------
# files and configuration


def data_dir() -> Path:
    return Path(str(resources.files("osl") / "data"))


def resolve_path(name, base=None) -> Path:
    """Look a file up relative to ``base`` (the referring config), the
    working directory, $OSL_DATA_DIR and the packaged data directory."""
    p = Path(name)
    if p.is_absolute():
        if p.exists():
            return p
        raise ConfigError("file not found: %s" % name, path=str(name))
    roots = [base] if base is not None else []
    roots += [Path.cwd()]
    if os.environ.get("OSL_DATA_DIR"):
        roots.append(Path(os.environ["OSL_DATA_DIR"]))
    roots.append(data_dir())
    for r in roots:
        if (Path(r) / p).exists():
            return Path(r) / p
    raise ConfigError("file not found: %s" % name, path=str(name))


def _read_json(path: Path, where: str):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc), path=where)
    if not text.strip():
        raise ConfigError("empty JSON file %s" % path, path=where or "<root>")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("malformed JSON in %s: %s" % (path, exc), path=where or "<root>")


def _schema():
    return json.loads((data_dir() / "config.schema.json").read_text())


def validate_config(cfg, command: str):
    import jsonschema

    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object", path="<root>")
    validator = jsonschema.Draft7Validator(_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(x) for x in e.absolute_path) or "<root>"
        raise ConfigError("invalid value at %s: %s" % (path, e.message), path=path)
    for key in REQUIRED[command]:
        if key not in cfg:
            raise ConfigError("missing required field %r for %s" % (key, command), path=key)


def load_config(path, command: str) -> tuple:
    """(config dict, directory of the config file)."""
    if path is None:
        return {}, None
    p = resolve_path(path)
    cfg = _read_json(p, "<root>")
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object", path="<root>")
    return cfg, p.parent


def _deref(obj, base, where):
    """Inline a string reference to a JSON file."""
    if isinstance(obj, str) and obj.endswith(".json"):
        return _read_json(resolve_path(obj, base), where)
    return obj


def config_hash(cfg) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


# --------------------------------------------------------------------------
# builders


def build_space(spec, base=None, seed=0):
    """GridSpace, dyadic systems, the cube family and whether the setting is
    Euclidean (shifted lattices) or a general space (adjacent systems)."""
    from .grid import (CubeFamily, GridSpace, build_adjacent_systems, build_euclidean_grids,
                       random_space)

    spec = _deref(spec, base, "space")
    if not isinstance(spec, dict):
        raise ConfigError("space must be an object or a file name", path="space")
    kind = spec.get("kind", "explicit" if "points" in spec or "dist" in spec else "uniform")
    if kind == "file":
        return build_space(_read_json(resolve_path(spec["path"], base), "space/path"), base, seed)
    try:
        if kind == "uniform":
            n = int(spec.get("n", 256))
            if n < 1 or n & (n - 1):
                raise ConfigError("uniform grids need n a power of two", path="space/n")
            depth = int(spec.get("depth", round(math.log2(n))))
            systems = build_euclidean_grids(n, depth, n_shifts=int(spec.get("shifts", 3)))
            space = systems[0].space
            return space, systems, CubeFamily(space, systems, unique=True), False
        if kind == "random":
            space = random_space(int(spec.get("n", 128)), int(spec.get("seed", seed)),
                                 spec.get("type", "line"))
        else:
            space = GridSpace.from_json(spec)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("bad space description: %s" % exc, path="space")
    delta = float(spec.get("delta", 0.5))
    systems, cov = build_adjacent_systems(space, delta, int(spec.get("systems", 3)),
                                          int(spec.get("seed", seed)))
    family = CubeFamily(space, systems, unique=True)
    family.covering = cov
    return space, systems, family, True


def build_weight(spec, space, base, where):
    from .weights import weight_from_spec

    spec = _deref(spec, base, where)
    try:
        w = weight_from_spec(space, spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("bad weight description: %s" % exc, path=where)
    if len(w.values) != space.n:
        raise ConfigError("weight has %d values for %d points" % (len(w.values), space.n),
                          path=where)
    return w


def build_kernel(spec, space):
    from .operators import kernel_from_spec

    try:
        return kernel_from_spec(space, spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("bad kernel description: %s" % exc, path="kernel")


def build_symbols(spec, space, m_default=0):
    from .symbols import SymbolSet, log_symbol, random_symbol, split_symbol

    spec = spec or {}
    kind = spec.get("kind", "log")
    if kind == "explicit":
        vals = spec.get("values", [])
        if any(len(b) != space.n for b in vals):
            raise ConfigError("symbol length does not match the space", path="symbols/values")
        return SymbolSet(vals, spec.get("exponents"))
    m = int(spec.get("m", m_default))
    seed = int(spec.get("seed", 0))
    if kind == "log":
        bs = [log_symbol(space) for _ in range(m)]
    elif kind == "split":
        bs = [split_symbol(space) for _ in range(m)]
    else:
        bs = [random_symbol(space, seed + i) for i in range(m)]
    exps = spec.get("exponents")
    if exps is not None and len(exps) != m:
        raise ConfigError("one exponent per symbol is required", path="symbols/exponents")
    return SymbolSet(bs, exps)


def build_young(spec, where):
    from .orlicz import young_from_json

    if spec is None:
        spec = {"tag": "power", "r": 1.0}
    try:
        return young_from_json(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("bad Young function: %s" % exc, path=where)


def build_function(spec, space, seed=0):
    import numpy as np

    kind = spec.get("kind")
    n = space.n
    if kind == "zero":
        return np.zeros(n)
    if kind == "delta":
        at = int(spec.get("at", 0))
        if not 0 <= at < n:
            raise ConfigError("delta position out of range", path="f/at")
        f = np.zeros(n)
        f[at] = 1.0 / space.mass[at]
        return f
    if kind == "indicator":
        if space.coords is None or space.coords.ndim != 1:
            raise ConfigError("indicator functions need a one-dimensional space", path="f")
        x = space.coords
        return ((x >= spec.get("lo", 0.0)) & (x < spec.get("hi", 1.0))).astype(float)
    if kind == "random":
        from .verify.mixed import random_functions

        rng = np.random.default_rng(int(spec.get("seed", seed)))
        return random_functions(space, rng, 1)[0]
    vals = np.asarray(spec.get("values", []), dtype=float)
    if vals.shape != (n,):
        raise ConfigError("f has %d values for %d points" % (vals.size, n), path="f/values")
    return vals


# --------------------------------------------------------------------------
# output


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, arrays become lists."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj


class Output:
    def __init__(self, out_dir, cfg):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hash = config_hash(cfg)
        self.files = []

    def json(self, name, payload):
        body = {"config_hash": self.hash, "version": __version__}
        body.update(_clean(payload))
        p = self.dir / name
        p.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        self.files.append(str(p))
        return p

    def csv(self, name, header, rows):
        """RFC 4180 CSV (CRLF line ends); floats written with %.17g."""
        p = self.dir / name
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(list(header) + ["config_hash", "version"])
            for row in rows:
                w.writerow([("%.17g" % v) if isinstance(v, float) else v for v in row]
                           + [self.hash, __version__])
        self.files.append(str(p))
        return p

    def png(self, name, draw):
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        ax.set_title(ax.get_title() + "\n" + self.hash[:12], fontsize=9)
        fig.tight_layout()
        p = self.dir / name
        fig.savefig(p, dpi=100, metadata={"Software": "osl " + __version__})
        plt.close(fig)
        self.files.append(str(p))
        return p


# --------------------------------------------------------------------------
# subcommands


def cmd_dyadic_build(args, cfg, base):
    space, systems, family, general = build_space(cfg["space"], base, args.seed)
    out = Output(args.out_dir, cfg)
    inv = []
    for s in systems:
        inv.append({"label": s.label, "seed": s.seed, "c0": s.c0, "C0": s.C0,
                    "delta": s.delta, "n_cubes": len(s.cubes),
                    "violations": s.check_invariants()})
    report = {"n_points": space.n, "n_systems": len(systems), "n_family_cubes": len(family),
              "systems": inv}
    if general:
        cov = family.covering
        report["covering"] = {"gamma": cov.gamma, "failures": cov.failures}
    out.json("systems.json", {"space": space.to_json(),
                              "systems": [s.to_json() for s in systems]})
    out.json("invariants.json", report)
    rows = []
    for si, s in enumerate(systems):
        for c in s.cubes:
            rows.append((si, c.id, c.generation, int(c.center), len(c.members),
                         -1 if c.parent is None else c.parent,
                         float(space.mass[c.members].sum())))
    out.csv("cubes.csv", ["system", "cube", "generation", "center", "size", "parent", "measure"],
            rows)

    def draw(ax):
        for si, s in enumerate(systems):
            for c in s.cubes:
                x = space.coords[c.members] if space.coords is not None and space.coords.ndim == 1 \
                    else c.members
                ax.plot([min(x), max(x)], [c.generation + 0.25 * si] * 2, lw=1.5,
                        color="C%d" % si)
        ax.invert_yaxis()
        ax.set_xlabel("point")
        ax.set_ylabel("generation")
        ax.set_title("dyadic systems")

    out.png("systems.png", draw)
    bad = any(r["violations"] for r in inv)
    if bad:
        raise HypothesisFailed("dyadic invariants violated", item="invariants")
    return EXIT_OK


def cmd_weight_constants(args, cfg, base):
    import numpy as np

    from .weights import all_constants

    space, systems, family, general = build_space(cfg["space"], base, args.seed)
    w = build_weight(cfg["weight"], space, base, "weight")
    u = build_weight(cfg["u"], space, base, "u") if "u" in cfg else None
    p, q = float(cfg.get("p", 2.0)), float(cfg.get("q", 2.0))
    with np.errstate(all="ignore"):
        wc = all_constants(w, family, p, q, u, homogeneous=general)
    out = Output(args.out_dir, cfg)
    consts = wc.to_json()
    out.json("weight_constants.json", {"constants": consts, "p": p, "q": q,
                                       "homogeneous": general})

    def draw(ax):
        x = space.coords if space.coords is not None and space.coords.ndim == 1 else range(space.n)
        ax.semilogy(x, w.values, ".", ms=3, label="w")
        if u is not None:
            ax.semilogy(x, u.values, ".", ms=3, label="u")
        ax.legend()
        ax.set_title("weights")

    out.png("weights.png", draw)
    for key, val in consts.items():
        vals = val.values() if isinstance(val, dict) else [val]
        if key != "family" and not all(np.isfinite(float(x)) for x in vals):
            raise HypothesisFailed("weight characteristic is not finite", item=key)
    return EXIT_OK


def cmd_sparse_dominate(args, cfg, base):
    import numpy as np

    from .sparse import sparse_dominate

    space, systems, family, general = build_space(cfg["space"], base, args.seed)
    T = build_kernel(cfg["kernel"], space)
    bset = build_symbols(cfg.get("symbols"), space, int(cfg.get("m", 0)))
    f = build_function(cfg["f"], space, args.seed)
    A = build_young(cfg.get("A"), "A")
    B = build_young(cfg.get("B"), "B")
    try:
        fam, cert = sparse_dominate(T, bset, f, systems[0], float(cfg["eps"]),
                                    cfg.get("alpha"), A, B, cfg.get("constants"))
    except ValueError as exc:
        raise HypothesisFailed(str(exc), item="system")
    out = Output(args.out_dir, cfg)
    out.json("certificate.json", dict(cert.to_json(), holds=cert.holds, eps=cfg["eps"],
                                      carleson_family_size=len(fam.cube_ids)))
    from .operators import multisymbol_apply
    from .symbols import sigma_enumerate, sigma_product

    Tbf = np.abs(multisymbol_apply(T, bset, f))
    bound = np.zeros(space.n)
    sig_all = [s for h in range(bset.m + 1) for s in sigma_enumerate(bset.m, h)]
    for cid in cert.cubes:
        mem = systems[0].cubes[cid].members
        for sig, sigp in sig_all:
            key = "{" + ",".join(str(i + 1) for i in sigp) + "}"
            outer = sigma_product(bset, sig, cert.centers[cid], absolute=True, n=space.n)
            bound[mem] += cert.kappa * outer[mem] * cert.coefficients[cid][key]
    out.csv("domination.csv", ["point", "abs_Tbf", "bound"],
            [(i, float(Tbf[i]), float(bound[i])) for i in range(space.n)])

    def draw(ax):
        ax.semilogy(Tbf + 1e-300, label="|T_b f|")
        ax.semilogy(bound + 1e-300, label="sparse bound")
        ax.legend()
        ax.set_xlabel("point")
        ax.set_title("sparse domination")

    out.png("domination.png", draw)
    if not cert.holds:
        raise BudgetExceeded("sparse bound violated: residual %g" % cert.residual)
    return EXIT_OK


def cmd_verify_mixed(args, cfg, base):
    import numpy as np

    from .verify.constants import ConstantsConfig
    from .verify.mixed import (calibration_corpus, check_mixed_inequality, fit_budget,
                               parse_lambda_grid, theorem_setup)

    space, systems, family, general = build_space(cfg["space"], base, args.seed)
    u = build_weight(cfg["u"], space, base, "u")
    v = build_weight(cfg["v"], space, base, "v")
    T = build_kernel(cfg["kernel"], space)
    theorem = cfg["theorem"]
    m = cfg.get("m")
    bset = build_symbols(cfg.get("symbols"), space, int(m or 0))
    if theorem == "thm3" and bset.m == 0:
        bset = build_symbols(dict(cfg.get("symbols") or {}, m=1), space)
    f = build_function(cfg["f"], space, args.seed)
    try:
        cc = ConstantsConfig.from_json(cfg.get("constants"))
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad constants block: %s" % exc, path="constants")
    grid = args.lambda_grid or cfg.get("lambda_grid")
    lam = None
    if grid is not None:
        try:
            lam = parse_lambda_grid(grid)
        except ValueError as exc:
            raise ConfigError(str(exc), path="lambda_grid")
    setup = theorem_setup(theorem, u, v, family, float(cfg.get("p", 2.0)),
                          float(cfg.get("r", 1.0)), float(cfg.get("gamma", 0.0)), bset, m, cc)
    budget = args.budget if args.budget is not None else cfg.get("budget", cc.c_nT.get(theorem))
    calibrated = False
    if budget is None:
        corpus = calibration_corpus(space, args.seed, n_random=20)
        budget = fit_budget(T, bset, [(u, v, setup)], corpus)
        calibrated = True
    rep = check_mixed_inequality(T, bset, f, u, v, theorem, family, lam, cc, setup=setup,
                                 budget=float(budget))
    rep.extras.update(calibrated_budget=calibrated, n_points=space.n, homogeneous=general)
    out = Output(args.out_dir, cfg)
    out.csv("mixed.csv", ["lambda", "lhs", "rhs", "ratio"], rep.rows())
    out.json("mixed.json", rep.summary())

    def draw(ax):
        ax.loglog(rep.lambdas, np.maximum(rep.lhs, 1e-300), label="LHS")
        ax.loglog(rep.lambdas, np.maximum(rep.budget * rep.rhs, 1e-300), label="budget x RHS")
        ax.set_xlabel("lambda")
        ax.legend()
        ax.set_title("mixed weak-type check (%s)" % theorem)

    out.png("mixed.png", draw)
    if not rep.passed:
        raise BudgetExceeded("sup ratio %g exceeds budget %g" % (rep.sup_ratio, rep.budget))
    return EXIT_OK


def cmd_lemma_suite(args, cfg, base):
    from .verify.lemmas import run_lemma_suite

    n = int(args.points or cfg.get("n", 128))
    rows = run_lemma_suite(n, args.seed)
    out = Output(args.out_dir, dict(cfg, n=n, seed=args.seed))
    tail = [r.get("max_rel_tail") for r in rows if "max_rel_tail" in r]
    tail_ok = all(t <= 1e-8 for t in tail)
    out.csv("lemmas.csv", ["lemma", "C_a", "C_b", "C", "finite", "stable"],
            [(r["lemma"], float(r["C_a"]), float(r["C_b"]), float(r["C"]), r["finite"],
              r["stable"]) for r in rows])
    out.json("lemmas.json", {"rows": rows, "tail_ok": tail_ok, "tail_threshold": 1e-8})

    def draw(ax):
        ax.bar(range(len(rows)), [r["C"] for r in rows])
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels([r["lemma"] for r in rows], rotation=60, fontsize=7)
        ax.set_yscale("log")
        ax.set_title("fitted lemma constants")

    out.png("lemmas.png", draw)
    if not all(r["finite"] and r["stable"] for r in rows) or not tail_ok:
        raise BudgetExceeded("lemma suite: unstable constants or truncated tail too large")
    return EXIT_OK


def cmd_hormander(args, cfg, base):
    from .operators import hormander_constant

    space, systems, family, general = build_space(cfg["space"], base, args.seed)
    T = build_kernel(cfg["kernel"], space)
    A = build_young(cfg.get("A"), "A")
    H1, H2 = hormander_constant(T, A, family, max_pairs=64, seed=args.seed)
    out = Output(args.out_dir, cfg)
    out.json("hormander.json", {"H1": H1, "H2": H2, "young": A.to_json(), "kernel": T.name})
    return EXIT_OK


COMMANDS = {
    "dyadic-build": cmd_dyadic_build,
    "weight-constants": cmd_weight_constants,
    "sparse-dominate": cmd_sparse_dominate,
    "verify-mixed": cmd_verify_mixed,
    "lemma-suite": cmd_lemma_suite,
    "hormander": cmd_hormander,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out-dir", default=".", help="directory for reports")
    common.add_argument("--threads", type=int, help="BLAS/OpenMP thread count")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--lambda-grid", help="log-spaced grid lo:hi:n")
    common.add_argument("--budget", type=float, help="budget for the absolute constant")

    parser = argparse.ArgumentParser(prog="osl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dyadic-build", parents=[common], help="build dyadic systems")
    p.add_argument("--points", type=int, help="uniform grid size (power of two)")
    p.add_argument("--depth", type=int)
    p.add_argument("--shifts", type=int, choices=[1, 3])
    p.add_argument("--space", help="space JSON file (general spaces)")
    p.add_argument("--delta", type=float)
    p.add_argument("--systems", type=int)
    p = sub.add_parser("weight-constants", parents=[common], help="weight characteristics")
    p.add_argument("--space")
    p.add_argument("--weight")
    p.add_argument("--u", help="base weight for the A_p(u) constant")
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    sub.add_parser("sparse-dominate", parents=[common], help="constructive sparse domination")
    sub.add_parser("verify-mixed", parents=[common], help="mixed weak-type inequality check")
    p = sub.add_parser("lemma-suite", parents=[common], help="fitted lemma constants")
    p.add_argument("--points", type=int)
    sub.add_parser("hormander", parents=[common], help="Hörmander constants of a kernel")
    return parser


def _apply_flags(args, cfg):
    """Fold subcommand flags into the configuration (flags win)."""
    cfg = dict(cfg)
    if args.command == "dyadic-build":
        if args.space:
            sp = {"kind": "file", "path": args.space}
            if args.delta is not None:
                sp["delta"] = args.delta
            if args.systems is not None:
                sp["systems"] = args.systems
            cfg["space"] = sp
        elif args.points is not None:
            sp = {"kind": "uniform", "n": args.points, "shifts": args.shifts or 3}
            if args.depth is not None:
                sp["depth"] = args.depth
            cfg["space"] = sp
    if args.command == "weight-constants":
        for key in ("space", "weight", "u"):
            if getattr(args, key):
                cfg[key] = getattr(args, key)
        for key in ("p", "q"):
            if getattr(args, key) is not None:
                cfg[key] = getattr(args, key)
    if args.lambda_grid:
        cfg["lambda_grid"] = args.lambda_grid
    if args.budget is not None:
        cfg["budget"] = args.budget
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        cfg, base = load_config(args.config, args.command)
        cfg = _apply_flags(args, cfg)
        validate_config(cfg, args.command)
        if args.budget is not None and args.budget <= 0:
            raise ConfigError("budget must be positive", path="budget")
        code = COMMANDS[args.command](args, cfg, base)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print("budget failure: %s" % exc, file=sys.stderr)
        return EXIT_BUDGET
    except HypothesisFailed as exc:
        print("hypothesis failure [%s]: %s" % (exc.item, exc), file=sys.stderr)
        return EXIT_HYPOTHESIS
    return code


if __name__ == "__main__":
    sys.exit(main())
