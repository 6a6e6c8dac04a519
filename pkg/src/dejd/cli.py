"""Command-line interface: ``dejd simulate|fit|summarize|jumps|diagnose``.

Settings come from built-in defaults, then ``--config`` (``key = value``
lines), then command-line flags. ``fit`` writes a ``manifest.txt`` that is
itself a valid config file: running ``dejd fit --config manifest.txt --out D``
reproduces every output byte for byte.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import (
    SUMMARY_ROWS,
    JumpProbabilities,
    cusum_path,
    detect_jumps,
    ergodic_paths,
    sign_changes,
    summarize,
)
from .distributions import ParameterError, RngStream
from .io import (
    DRAWS_HEADER,
    JUMP_PROB_HEADER,
    DataError,
    atomic_outputs,
    file_sha256,
    ingest,
    keyvalue_text,
    read_draws,
    read_jump_probabilities,
    read_keyvalue,
    write_table,
)
from .model import DEFAULT_DELTA, InputError, ModelParams, simulate
from .priors import PRESET_NAMES, PriorSpec, preset
from .sampler import ChainConfig, Chain, ConfigError, NumericError, run_chain

log = logging.getLogger("dejd")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DIAGNOSTIC_PARAMS = ("mu", "mu_prime", "sigma", "lambda", "p_U", "eta_D", "eta_U")
INIT_FIELDS = ("mu_prime", "h", "L", "p_U", "eta_U", "eta_D")


@dataclass
class RunConfig:
    input: str | None = None
    kind: str = "prices"
    delta: float = DEFAULT_DELTA
    prior: str = "III"
    prior_overrides: dict = field(default_factory=dict)
    burn_in: int = 30_000
    draws: int = 70_000
    thin: int = 1
    l_sampler: str = "auto"
    seed: int = 1
    init: dict | None = None
    kernels: str = "auto"
    tau: float = 0.5
    out: str = "dejd_out"
    store_latents: bool = False
    emit_diagnostics: bool = False
    layout: str = "table3"
    expected_input_sha256: str | None = None
    # simulate only
    n: int = 10_000
    true_mu: float = 0.25
    true_sigma: float = 0.4
    true_lambda: float = 30.0
    true_p_U: float = 0.5
    true_eta_U: float = 30.0
    true_eta_D: float = 5.0

    def prior_spec(self) -> PriorSpec:
        try:
            spec = preset(self.prior, self.delta)
            return spec.with_overrides(**self.prior_overrides) if self.prior_overrides else spec
        except (KeyError, ParameterError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def chain_config(self) -> ChainConfig:
        init = None
        if self.init is not None:
            try:
                init = ModelParams(**self.init)
            except (TypeError, ParameterError) as exc:
                raise ConfigError(f"bad init parameters: {exc}") from None
        return ChainConfig(burn_in=self.burn_in, draws=self.draws, thin=self.thin,
                           L_sampler=self.l_sampler, seed=self.seed, init=init,
                           store_latents=self.store_latents, kernels=self.kernels)

    def truth(self) -> ModelParams:
        try:
            return ModelParams.from_natural(self.true_mu, self.true_sigma, self.true_lambda,
                                            self.true_p_U, self.true_eta_U, self.true_eta_D, self.delta)
        except ParameterError as exc:
            raise ConfigError(f"bad simulation parameters: {exc}") from None


_SCALAR_TYPES = {f.name: f.type for f in fields(RunConfig)}
_PARSERS = {"int": int, "float": float, "str": str, "bool": None, "str | None": str}


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {v!r}")


def apply_settings(cfg: RunConfig, settings: dict, base_dir: Path | None = None) -> RunConfig:
    """Apply string ``key = value`` settings onto ``cfg`` (keys ``run.*`` are ignored)."""
    for key, raw in settings.items():
        if key == "run.input_sha256":
            cfg.expected_input_sha256 = raw
            continue
        if key.startswith("run."):
            continue
        if key.startswith("prior."):
            name = key[len("prior."):]
            try:
                cfg.prior_overrides[name] = float(raw)
            except ValueError:
                raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
            continue
        if key.startswith("init."):
            name = key[len("init."):]
            if name not in INIT_FIELDS:
                raise ConfigError(f"unknown init field {name!r}")
            try:
                cfg.init = dict(cfg.init or {}, **{name: float(raw)})
            except ValueError:
                raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
            continue
        if key == "init":
            if raw.strip() != "prior":
                raise ConfigError("init must be 'prior' or given as init.<field> keys")
            cfg.init = None
            continue
        typ = _SCALAR_TYPES.get(key)
        if typ is None or key in ("prior_overrides", "expected_input_sha256"):
            raise ConfigError(f"unknown config key {key!r}")
        try:
            if typ == "bool":
                value = _parse_bool(raw)
            else:
                value = _PARSERS[typ](raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r} as {typ}") from None
        if key == "input" and base_dir is not None and not Path(value).is_absolute():
            value = str((base_dir / value).resolve())
        setattr(cfg, key, value)
    return cfg


def validate(cfg: RunConfig, command: str) -> None:
    if cfg.kind not in ("prices", "returns"):
        raise ConfigError(f"kind must be 'prices' or 'returns', got {cfg.kind!r}")
    if not cfg.delta > 0:
        raise ConfigError(f"delta must be positive, got {cfg.delta}")
    if cfg.prior not in PRESET_NAMES:
        raise ConfigError(f"prior must be one of {PRESET_NAMES}, got {cfg.prior!r}")
    if not 0.0 < cfg.tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {cfg.tau}")
    if cfg.layout not in ("full", "table2", "table3"):
        raise ConfigError(f"layout must be full, table2 or table3, got {cfg.layout!r}")
    cfg.prior_spec()
    cfg.chain_config()
    if command == "fit":
        if cfg.input is None:
            raise ConfigError("fit needs an input file (--input or 'input = ...')")
        if not Path(cfg.input).is_file():
            raise ConfigError(f"input file not found: {cfg.input}")
    if command == "simulate":
        if cfg.n < 2:
            raise ConfigError(f"n must be at least 2, got {cfg.n}")
        cfg.truth()


# --- manifest ------------------------------------------------------------------------

def config_items(cfg: RunConfig):
    """Canonical ``(key, value)`` pairs that fully determine a fit."""
    spec = cfg.prior_spec()
    items = [
        ("input", str(Path(cfg.input).resolve())),
        ("kind", cfg.kind),
        ("delta", cfg.delta),
        ("prior", cfg.prior),
    ]
    items += [(f"prior.{k}", v) for k, v in spec.as_dict().items()]
    items += [
        ("burn_in", cfg.burn_in),
        ("draws", cfg.draws),
        ("thin", cfg.thin),
        ("l_sampler", cfg.chain_config().L_sampler),
        ("seed", cfg.seed),
        ("kernels", kernels.backend_name(kernels.get_backend(cfg.kernels))),
        ("store_latents", cfg.store_latents),
        ("tau", cfg.tau),
    ]
    if cfg.init is None:
        items.append(("init", "prior"))
    else:
        init = cfg.chain_config().init
        items += [(f"init.{k}", getattr(init, k)) for k in INIT_FIELDS]
    return items


def _chain_from_files(out: Path, cfg: RunConfig) -> Chain:
    sweep_index, values = read_draws(out / "draws.csv")
    return Chain(sweep_index=sweep_index, values=values, count_minus=None, count_plus=None,
                 config=cfg.chain_config(), delta=cfg.delta)


def _load_fit_settings(out: Path, cfg: RunConfig) -> RunConfig:
    manifest = out / "manifest.txt"
    if not manifest.is_file():
        raise DataError(f"no fit manifest in {out}; run 'dejd fit' first")
    fit_cfg = apply_settings(RunConfig(), read_keyvalue(manifest))
    # analysis settings of the current invocation take precedence
    fit_cfg.tau, fit_cfg.layout, fit_cfg.out = cfg.tau, cfg.layout, cfg.out
    return fit_cfg


# --- commands -------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, explicit=frozenset()) -> None:
    truth = cfg.truth()
    x, latents = simulate(truth, cfg.n, cfg.delta, RngStream(cfg.seed))
    prices = 100.0 * np.exp(np.concatenate(([0.0], np.cumsum(x.values))))
    days = np.arange(1, cfg.n + 1)
    items = [("n", cfg.n), ("delta", cfg.delta), ("seed", cfg.seed),
             ("true_mu", cfg.true_mu), ("true_sigma", cfg.true_sigma),
             ("true_lambda", cfg.true_lambda), ("true_p_U", cfg.true_p_U),
             ("true_eta_U", cfg.true_eta_U), ("true_eta_D", cfg.true_eta_D)]
    with atomic_outputs(cfg.out) as stage:
        write_table(stage.path("returns.csv"), ("return",), [x.values])
        write_table(stage.path("prices.csv"), ("date", "price"), [np.arange(cfg.n + 1), prices])
        write_table(stage.path("latents.csv"), ("day_index", "xi", "J"),
                    [days, latents.xi.astype(int), latents.J])
        stage.write_text("simulate_manifest.txt", "# dejd simulate manifest\n" + keyvalue_text(items))
    log.info("simulated %d returns into %s", cfg.n, cfg.out)


def cmd_fit(cfg: RunConfig, explicit=frozenset()) -> None:
    input_sha = file_sha256(cfg.input)
    if cfg.expected_input_sha256 is not None and cfg.expected_input_sha256 != input_sha:
        raise DataError(f"input {cfg.input} does not match the manifest checksum")
    x = ingest(cfg.input, cfg.kind, cfg.delta)
    spec = cfg.prior_spec()
    for w in spec.warnings():
        log.warning("prior: %s", w)
    chain_cfg = cfg.chain_config()

    def progress(done, total):
        log.info("sweep %d / %d", done, total)

    try:
        chain = run_chain(x, spec, chain_cfg, progress=progress)
    except ParameterError as exc:
        raise NumericError(f"sampler failed: {exc}") from exc
    if not np.all(np.isfinite(chain.values)):
        raise NumericError("sampler produced non-finite draws")

    items = config_items(cfg)
    cfg_text = keyvalue_text(items)
    counters = chain.counters.as_dict()
    meta = [
        ("run.version", __version__),
        ("run.config_hash", hashlib.sha256(cfg_text.encode()).hexdigest()),
        ("run.input_sha256", input_sha),
        ("run.n_observations", len(x)),
        ("run.n_samples", len(chain)),
    ] + [(f"run.{k}", v if v is not None else "") for k, v in counters.items()]

    n = len(x)
    day = np.arange(1, n + 1)
    m = len(chain)
    with atomic_outputs(cfg.out) as stage:
        write_table(stage.path("draws.csv"), DRAWS_HEADER,
                    [chain.sweep_index] + [chain.values[:, j] if j < 6 else chain.values[:, j].astype(int)
                                           for j in range(chain.values.shape[1])])
        write_table(stage.path("jump_probabilities.csv"), JUMP_PROB_HEADER,
                    [day, chain.count_minus / m, chain.count_plus / m])
        if cfg.store_latents:
            header = ("sweep_index",) + tuple(f"d{i}" for i in day)
            write_table(stage.path("latent_xi.csv"), header,
                        [chain.sweep_index] + [chain.latent_xi[:, i].astype(int) for i in range(n)])
            write_table(stage.path("latent_J.csv"), header,
                        [chain.sweep_index] + [chain.latent_J[:, i] for i in range(n)])
        if cfg.emit_diagnostics:
            _write_diagnostics(stage, chain)
        stage.write_text("manifest.txt", "# dejd fit manifest\n" + cfg_text + keyvalue_text(meta))
    log.info("fit complete: %d draws written to %s", m, cfg.out)


def _write_diagnostics(stage, chain: Chain) -> None:
    cols, header, crossings = [chain.sweep_index], ["sweep_index"], []
    for p in DIAGNOSTIC_PARAMS:
        mean, std = ergodic_paths(chain, p)
        cs = cusum_path(chain, p) if len(chain) > 1 else np.zeros(len(chain))
        cols += [mean, std, cs]
        header += [f"{p}_mean", f"{p}_std", f"{p}_cusum"]
        crossings.append((f"cusum_sign_changes.{p}", sign_changes(cs)))
    write_table(stage.path("diagnostics.csv"), header, cols)
    stage.write_text("diagnostics_summary.txt", keyvalue_text([("draws", len(chain))] + crossings))


def cmd_summarize(cfg: RunConfig, explicit=frozenset()) -> None:
    out = Path(cfg.out)
    fit_cfg = _load_fit_settings(out, cfg)
    summary = summarize(_chain_from_files(out, fit_cfg), fit_cfg.delta)
    rows = [(SUMMARY_ROWS[k], summary.mean[k], summary.sd[k]) for k in SUMMARY_ROWS]
    with atomic_outputs(out) as stage:
        write_table(stage.path("summary.csv"), ("parameter", "mean", "sd"),
                    [[r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]])
        stage.write_text("summary.txt", summary.render(cfg.layout) + "\n")
    print(summary.render(cfg.layout))


def cmd_jumps(cfg: RunConfig, explicit=frozenset()) -> None:
    out = Path(cfg.out)
    fit_cfg = _load_fit_settings(out, cfg)
    x = ingest(fit_cfg.input, fit_cfg.kind, fit_cfg.delta)
    p_minus, p_plus = read_jump_probabilities(out / "jump_probabilities.csv")
    if p_minus.size != len(x):
        raise DataError("jump probabilities do not match the input series")
    report = detect_jumps(JumpProbabilities(p_minus, p_plus), x, cfg.tau)
    day = np.arange(1, len(x) + 1)
    down = np.zeros(len(x), dtype=int)
    up = np.zeros(len(x), dtype=int)
    down[report.down_days] = 1
    up[report.up_days] = 1
    items = [("tau", report.tau), ("n_days", len(x)), ("n_down", report.down_days.size),
             ("n_up", report.up_days.size), ("xbar", report.xbar), ("sigma_n", report.sigma_n),
             ("J_D", report.J_D), ("J_U", report.J_U), ("k_D", report.k_D), ("k_U", report.k_U)]
    with atomic_outputs(out) as stage:
        write_table(stage.path("jumps.csv"),
                    ("day_index", "label", "return", "p_minus", "p_plus", "down", "up"),
                    [day, list(x.labels), x.values, p_minus, p_plus, down, up])
        stage.write_text("jump_report.txt", keyvalue_text(items))
    print(keyvalue_text(items), end="")


def cmd_diagnose(cfg: RunConfig, explicit=frozenset()) -> None:
    out = Path(cfg.out)
    fit_cfg = _load_fit_settings(out, cfg)
    chain = _chain_from_files(out, fit_cfg)
    with atomic_outputs(out) as stage:
        _write_diagnostics(stage, chain)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "summarize": cmd_summarize,
    "jumps": cmd_jumps,
    "diagnose": cmd_diagnose,
}

_FLAG_KEYS = {
    "seed": "seed", "prior": "prior", "burn_in": "burn_in", "draws": "draws", "thin": "thin",
    "l_sampler": "l_sampler", "tau": "tau", "delta": "delta", "input": "input", "kind": "kind",
    "out": "out", "kernels": "kernels", "n": "n", "layout": "layout",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dejd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dejd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=str)
        p.add_argument("--prior", choices=PRESET_NAMES)
        p.add_argument("--burn-in", dest="burn_in", type=str)
        p.add_argument("--draws", type=str)
        p.add_argument("--thin", type=str)
        p.add_argument("--l-sampler", dest="l_sampler", choices=("mh", "ar", "auto"))
        p.add_argument("--tau", type=str)
        p.add_argument("--delta", type=str)
        p.add_argument("--input")
        p.add_argument("--kind", choices=("prices", "returns"))
        p.add_argument("--out")
        p.add_argument("--kernels", choices=("auto", "compiled", "python"))
        p.add_argument("--layout", choices=("full", "table2", "table3"))
        p.add_argument("--n", type=str, help="number of returns to simulate")
        p.add_argument("--store-latents", dest="store_latents", action="store_true", default=None)
        p.add_argument("--emit-diagnostics", dest="emit_diagnostics", action="store_true", default=None)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        path = Path(args.config)
        try:
            settings = read_keyvalue(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        apply_settings(cfg, settings, base_dir=path.resolve().parent)
    flags = {key: getattr(args, attr) for attr, key in _FLAG_KEYS.items() if getattr(args, attr) is not None}
    if flags.get("input"):
        flags["input"] = str(Path(flags["input"]).resolve())
    apply_settings(cfg, {k: str(v) for k, v in flags.items()})
    for key in ("store_latents", "emit_diagnostics"):
        if getattr(args, key):
            setattr(cfg, key, True)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
        validate(cfg, args.command)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"dejd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, InputError) as exc:
        print(f"dejd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"dejd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
