"""Command-line driver: configuration, training, evaluation, baselines,
inspection, and run logging.

Config files are flat ``section.key=value`` text with ``#`` comments.
Unknown keys are a hard error. A preset (paper or desk) supplies
defaults; config keys override the preset and command-line flags
override both. All reports are tab-separated with one header line.
"""

from __future__ import annotations

import argparse
import statistics
import sys
from dataclasses import dataclass

import numpy as np

from molforge.actions import MdpConfig, State
from molforge.driver import (
    EvalRow,
    TrainSettings,
    baseline_episode,
    evaluate,
    train,
)
from molforge.env import MoleculeEnv
from molforge.fingerprint import morgan_fingerprint
from molforge.molgraph import (
    Molecule,
    ParseError,
    new_empty,
    parse_smiles,
    ring_info,
    write_smiles,
)
from molforge.properties import (
    evaluate as evaluate_property,
    logp,
    long_cycle_count,
    molecular_weight,
    penalized_logp,
    registered_properties,
)
from molforge.qlearn import (
    ArchitectureMismatch,
    ValueNetwork,
    head_mean_values,
    load_checkpoint,
    save_checkpoint,
)
from molforge.rewards import (
    ConstrainedLogP,
    Maximize,
    MultiObjective,
    RewardSpec,
    TargetRange,
    raw_reward,
    similarity,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class ConfigError(Exception):
    pass


PRESETS = {
    # Paper-faithful profile.
    "paper": {
        "train.hidden_dims": "1024,512,128,32",
        "train.episodes": "5000",
        "train.fp_length": "2048",
        "train.batch_size": "128",
        "train.train_every": "1",
        "train.sync_every": "500",
        "train.replay_capacity": "100000",
        "train.warmup_transitions": "500",
    },
    # Shrunk profile for acceptance-test runtimes on a workstation.
    "desk": {
        "train.hidden_dims": "256,128,32",
        "train.episodes": "2000",
        "train.fp_length": "1024",
        "train.batch_size": "32",
        "train.train_every": "4",
        "train.sync_every": "250",
        "train.replay_capacity": "20000",
        "train.warmup_transitions": "500",
    },
}

_KNOWN_KEYS = {
    "mdp.elements",
    "mdp.max_steps",
    "mdp.allowed_ring_sizes",
    "mdp.allow_bond_removal",
    "mdp.allow_no_modification",
    "mdp.initial_molecule",
    "reward.variant",
    "reward.property",
    "reward.lower",
    "reward.upper",
    "reward.origin",
    "reward.delta",
    "reward.lambda",
    "reward.weight",
    "reward.gamma",
    "reward.per_step",
    "train.episodes",
    "train.hidden_dims",
    "train.heads",
    "train.learning_rate",
    "train.batch_size",
    "train.train_every",
    "train.warmup_transitions",
    "train.sync_every",
    "train.replay_capacity",
    "train.clip_norm",
    "train.anneal_episodes",
    "train.final_epsilon",
    "train.fp_radius",
    "train.fp_length",
    "train.dtype",
    "io.out_dir",
    "io.seed",
    "io.preset",
    "io.checkpoint_every",
}


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        values[key] = value
    return values


def _parse_bool(key: str, value: str) -> bool:
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_molecule(key: str, value: str) -> Molecule:
    if value == "":
        return new_empty()
    try:
        return parse_smiles(value)
    except ParseError as exc:
        raise ConfigError(f"{key}: {exc}") from None


@dataclass
class RunConfig:
    """Everything one run needs: environment, reward, learner, and io."""

    mdp: MdpConfig
    reward: RewardSpec
    train: TrainSettings
    fp_radius: int
    fp_length: int
    dtype: str
    out_dir: str | None
    seed: int
    preset: str
    checkpoint_every: int

    def make_env(self) -> MoleculeEnv:
        return MoleculeEnv(
            self.mdp,
            self.reward,
            fp_radius=self.fp_radius,
            fp_length=self.fp_length,
            feature_dtype=np.float32 if self.dtype == "float32" else np.float64,
        )


def build_run_config(
    values: dict[str, str],
    preset: str | None = None,
    seed: int | None = None,
    out_dir: str | None = None,
    episodes: int | None = None,
) -> RunConfig:
    preset_name = preset or values.get("io.preset", "paper")
    if preset_name not in PRESETS:
        raise ConfigError(
            f"io.preset: unknown preset {preset_name!r}; choose paper or desk"
        )
    merged = dict(PRESETS[preset_name])
    merged.update(values)

    def get(key, default=None):
        return merged.get(key, default)

    mdp = MdpConfig(
        elements=tuple(
            s.strip() for s in get("mdp.elements", "C,N,O").split(",")
        ),
        max_steps=_parse_int("mdp.max_steps", get("mdp.max_steps", "40")),
        allowed_ring_sizes=frozenset(
            _parse_int("mdp.allowed_ring_sizes", s)
            for s in get("mdp.allowed_ring_sizes", "3,4,5,6").split(",")
        ),
        allow_bond_removal=_parse_bool(
            "mdp.allow_bond_removal", get("mdp.allow_bond_removal", "true")
        ),
        allow_no_modification=_parse_bool(
            "mdp.allow_no_modification",
            get("mdp.allow_no_modification", "true"),
        ),
        initial_molecule=_parse_molecule(
            "mdp.initial_molecule", get("mdp.initial_molecule", "")
        ),
    )

    variant_name = get("reward.variant", "maximize")
    prop = get("reward.property", "penalized_logp")
    if prop not in registered_properties():
        raise ConfigError(
            f"reward.property: unknown property {prop!r}; "
            f"registered: {registered_properties()}"
        )
    if variant_name == "maximize":
        variant = Maximize(prop)
    elif variant_name == "target_range":
        if "reward.lower" not in merged or "reward.upper" not in merged:
            raise ConfigError("target_range needs reward.lower and reward.upper")
        variant = TargetRange(
            prop,
            _parse_float("reward.lower", merged["reward.lower"]),
            _parse_float("reward.upper", merged["reward.upper"]),
        )
    elif variant_name == "constrained_logp":
        origin = _parse_molecule("reward.origin", get("reward.origin", ""))
        variant = ConstrainedLogP(
            origin,
            _parse_float("reward.delta", get("reward.delta", "0.6")),
            _parse_float("reward.lambda", get("reward.lambda", "100")),
        )
    elif variant_name == "multi_objective":
        origin = _parse_molecule("reward.origin", get("reward.origin", ""))
        variant = MultiObjective(
            origin,
            _parse_float("reward.weight", get("reward.weight", "0.5")),
            prop,
        )
    else:
        raise ConfigError(
            f"reward.variant: unknown variant {variant_name!r}; choose "
            "maximize, target_range, constrained_logp, or multi_objective"
        )

    reward = RewardSpec(
        variant,
        gamma=_parse_float("reward.gamma", get("reward.gamma", "0.9")),
        per_step=_parse_bool("reward.per_step", get("reward.per_step", "true")),
    )

    run_seed = seed if seed is not None else _parse_int(
        "io.seed", get("io.seed", "0")
    )
    anneal = get("train.anneal_episodes")
    settings = TrainSettings(
        episodes=episodes
        if episodes is not None
        else _parse_int("train.episodes", get("train.episodes", "5000")),
        hidden_dims=tuple(
            _parse_int("train.hidden_dims", s)
            for s in get("train.hidden_dims", "1024,512,128,32").split(",")
        ),
        heads=_parse_int("train.heads", get("train.heads", "10")),
        learning_rate=_parse_float(
            "train.learning_rate", get("train.learning_rate", "0.0001")
        ),
        batch_size=_parse_int("train.batch_size", get("train.batch_size", "128")),
        train_every=_parse_int("train.train_every", get("train.train_every", "1")),
        warmup_transitions=_parse_int(
            "train.warmup_transitions", get("train.warmup_transitions", "500")
        ),
        sync_every=_parse_int("train.sync_every", get("train.sync_every", "500")),
        replay_capacity=_parse_int(
            "train.replay_capacity", get("train.replay_capacity", "100000")
        ),
        clip_norm=_parse_float("train.clip_norm", get("train.clip_norm", "10")),
        anneal_episodes=_parse_int("train.anneal_episodes", anneal)
        if anneal is not None
        else None,
        final_epsilon=_parse_float(
            "train.final_epsilon", get("train.final_epsilon", "0.01")
        ),
        seed=run_seed,
    )

    dtype = get("train.dtype", "float32")
    if dtype not in ("float32", "float64"):
        raise ConfigError(f"train.dtype: expected float32 or float64, got {dtype!r}")

    return RunConfig(
        mdp=mdp,
        reward=reward,
        train=settings,
        fp_radius=_parse_int("train.fp_radius", get("train.fp_radius", "3")),
        fp_length=_parse_int("train.fp_length", get("train.fp_length", "2048")),
        dtype=dtype,
        out_dir=out_dir if out_dir is not None else get("io.out_dir"),
        seed=run_seed,
        preset=preset_name,
        checkpoint_every=_parse_int(
            "io.checkpoint_every", get("io.checkpoint_every", "500")
        ),
    )


def load_run_config(path: str, **overrides) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_run_config(parse_config_text(text), **overrides)


def read_origins(path: str) -> list[Molecule]:
    origins = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                origins.append(parse_smiles(line))
            except ParseError as exc:
                raise ConfigError(f"{path} line {lineno}: {exc}") from None
    if not origins:
        raise ConfigError(f"{path}: no origin molecules found")
    return origins


# ---------------------------------------------------------------------------
# Report helpers
# ---------------------------------------------------------------------------

RUN_LOG_COLUMNS = (
    "episode", "epsilon", "head", "terminal", "raw_reward",
    "discounted_return", "loss_avg",
)
LEDGER_COLUMNS = ("key", "best_reward", "first_seen", "last_seen")
EVAL_COLUMNS = (
    "episode", "origin", "terminal", "raw_reward", "property_value",
    "similarity", "improvement", "success",
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


class TsvWriter:
    """Line-flushed tab-separated writer with one header row."""

    def __init__(self, stream, columns):
        self.stream = stream
        self.columns = columns
        stream.write("\t".join(columns) + "\n")
        stream.flush()

    def row(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("column count mismatch")
        self.stream.write("\t".join(_fmt(v) for v in values) + "\n")
        self.stream.flush()


def _success_fn(env: MoleculeEnv, terminal: State) -> bool:
    spec = env.reward_spec
    v = spec.variant
    mol = terminal.molecule
    if isinstance(v, TargetRange):
        value = evaluate_property(v.property, mol)
        return v.lower <= value <= v.upper
    if isinstance(v, ConstrainedLogP):
        return similarity(mol, v.origin) >= v.delta
    # maximization flavors: improved (or matched) the starting reward
    return raw_reward(spec, mol) >= raw_reward(spec, env.initial().molecule)


def _eval_detail(env: MoleculeEnv, terminal_key: str) -> tuple[str, str, str]:
    """(property_value, similarity, improvement) columns for a report row."""
    spec = env.reward_spec
    v = spec.variant
    mol = parse_smiles(terminal_key) if terminal_key else new_empty()
    prop_value = ""
    sim_value = ""
    improvement = ""
    if isinstance(v, (Maximize, TargetRange, MultiObjective)):
        prop_value = _fmt(evaluate_property(v.property, mol))
    if isinstance(v, (ConstrainedLogP, MultiObjective)):
        sim_value = _fmt(similarity(mol, v.origin))
    if isinstance(v, ConstrainedLogP):
        prop_value = _fmt(logp(mol))
        improvement = _fmt(logp(mol) - logp(v.origin))
    return prop_value, sim_value, improvement


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    config = load_run_config(
        args.config, preset=args.preset, seed=args.seed,
        out_dir=args.out_dir, episodes=args.episodes,
    )
    out_dir = config.out_dir
    if out_dir is None:
        raise ConfigError("training requires io.out_dir or --out-dir")
    import os

    os.makedirs(out_dir, exist_ok=True)
    env = config.make_env()
    origins = read_origins(args.origins) if args.origins else None

    restart_molecules: list[Molecule] = []
    if args.restart_from:
        restart_molecules = _top_ledger_molecules(args.restart_from, 5)

    log_path = os.path.join(out_dir, "run_log.tsv")
    ledger_path = os.path.join(out_dir, "ledger.tsv")
    final_path = os.path.join(out_dir, "checkpoint_final.mfq")

    net = None
    adam = None
    if args.checkpoint:
        net, adam = load_checkpoint(args.checkpoint)
        _check_architecture(net, env, config)

    with open(log_path, "w", encoding="utf-8") as log_fh:
        writer = TsvWriter(log_fh, RUN_LOG_COLUMNS)

        def sink(row):
            writer.row(
                row.episode, row.epsilon, row.head, row.terminal_key,
                row.raw_reward, row.discounted_return, row.loss_avg,
            )

        def hook(episode, current_net, current_adam):
            every = config.checkpoint_every
            if every > 0 and (episode + 1) % every == 0:
                save_checkpoint(
                    current_net, current_adam,
                    os.path.join(out_dir, f"checkpoint_ep{episode + 1:06d}.mfq"),
                )

        stages: list[Molecule | None] = [None]
        if restart_molecules:
            stages = restart_molecules
        result = None
        ledger: dict = {}
        for stage in stages:
            if stage is not None:
                env.set_initial(stage)
            result = train(
                env, config.train, net=net, adam=adam, origins=origins,
                row_sink=sink, episode_hook=hook,
            )
            net, adam = result.net, result.adam
            for key, entry in result.ledger.items():
                known = ledger.get(key)
                if known is None:
                    ledger[key] = entry
                else:
                    known.best_reward = max(known.best_reward, entry.best_reward)
                    known.last_seen = max(known.last_seen, entry.last_seen)

    save_checkpoint(net, adam, final_path)
    with open(ledger_path, "w", encoding="utf-8") as fh:
        writer = TsvWriter(fh, LEDGER_COLUMNS)
        for entry in sorted(ledger.values(), key=lambda e: e.first_seen):
            writer.row(entry.key, entry.best_reward, entry.first_seen,
                       entry.last_seen)

    print(f"checkpoint: {final_path}")
    print(f"run log:    {log_path}")
    print(f"ledger:     {ledger_path}")
    print("top molecules by reward:")
    top = sorted(ledger.values(), key=lambda e: (-e.best_reward, e.key))[:3]
    for entry in top:
        print(f"  {entry.best_reward:10.4f}  {entry.key}")
    return EXIT_OK


def _top_ledger_molecules(path: str, k: int) -> list[Molecule]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split("\t")
        if tuple(header) != LEDGER_COLUMNS:
            raise ConfigError(f"{path}: not a ledger file")
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(LEDGER_COLUMNS):
                continue
            entries.append((float(parts[1]), parts[0]))
    entries.sort(key=lambda p: (-p[0], p[1]))
    return [parse_smiles(key) if key else new_empty() for _, key in entries[:k]]


def _check_architecture(net: ValueNetwork, env: MoleculeEnv, config: RunConfig):
    expected = (env.feature_dim,) + tuple(config.train.hidden_dims) + (
        config.train.heads,
    )
    if net.layer_dims != expected:
        raise ArchitectureMismatch(
            f"checkpoint dims {net.layer_dims} != configured {expected}"
        )


def cmd_eval(args) -> int:
    config = load_run_config(args.config, preset=args.preset, seed=args.seed)
    net, _ = load_checkpoint(args.checkpoint)
    env_probe = config.make_env()
    _check_architecture(net, env_probe, config)

    origins = read_origins(args.origins) if args.origins else None
    episodes = args.episodes
    origin_for_episode = None
    if origins:
        per_origin = max(1, episodes // len(origins))
        episodes = per_origin * len(origins)
        origin_for_episode = lambda ep: origins[ep // per_origin]

    rows = evaluate(
        config.make_env, net, episodes, args.epsilon, config.seed,
        _success_fn, origin_for_episode,
    )
    writer = TsvWriter(sys.stdout, EVAL_COLUMNS)
    probe_env = config.make_env()
    for row in rows:
        if row.origin_key is not None:
            probe_env.set_origin(parse_smiles(row.origin_key)
                                 if row.origin_key else new_empty())
        detail = _eval_detail(probe_env, row.terminal_key)
        writer.row(
            row.episode, row.origin_key or "", row.terminal_key,
            row.raw_reward, detail[0], detail[1], detail[2], int(row.success),
        )
    _print_eval_summary(rows, probe_env, per_origin=args.per_origin)
    return EXIT_OK


def _print_eval_summary(rows: list[EvalRow], env: MoleculeEnv,
                        per_origin: bool = False):
    n = len(rows)
    unique = len({r.terminal_key for r in rows})
    success = sum(1 for r in rows if r.success)
    print(
        f"# episodes={n} unique_molecules={unique} "
        f"success_rate={success / n:.4f}",
        file=sys.stderr,
    )
    if per_origin:
        by_origin: dict[str, list[EvalRow]] = {}
        for r in rows:
            by_origin.setdefault(r.origin_key or "", []).append(r)
        improvements = []
        for origin_key, group in sorted(by_origin.items()):
            origin = parse_smiles(origin_key) if origin_key else new_empty()
            imps = [
                logp(parse_smiles(r.terminal_key)
                     if r.terminal_key else new_empty()) - logp(origin)
                for r in group
            ]
            improvements.extend(imps)
            rate = sum(1 for r in group if r.success) / len(group)
            print(
                f"# origin={origin_key} episodes={len(group)} "
                f"success_rate={rate:.4f} "
                f"mean_improvement={statistics.fmean(imps):.4f}",
                file=sys.stderr,
            )
        sd = statistics.pstdev(improvements) if len(improvements) > 1 else 0.0
        print(
            f"# overall mean_improvement={statistics.fmean(improvements):.4f} "
            f"sd={sd:.4f}",
            file=sys.stderr,
        )


def cmd_baseline(args) -> int:
    config = load_run_config(args.config, preset=args.preset, seed=args.seed)
    env = config.make_env()
    writer = TsvWriter(sys.stdout, EVAL_COLUMNS)
    successes = 0
    keys = []
    for episode in range(args.episodes):
        states, _rewards = baseline_episode(
            env, args.kind, config.seed, episode, epsilon=args.epsilon
        )
        terminal = states[-1]
        key = write_smiles(terminal.molecule)
        keys.append(key)
        ok = _success_fn(env, terminal)
        successes += int(ok)
        detail = _eval_detail(env, key)
        writer.row(
            episode, "", key, raw_reward(env.reward_spec, terminal.molecule),
            detail[0], detail[1], detail[2], int(ok),
        )
    print(
        f"# episodes={args.episodes} unique_molecules={len(set(keys))} "
        f"success_rate={successes / max(1, args.episodes):.4f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_inspect(args) -> int:
    config = load_run_config(args.config, preset=args.preset, seed=args.seed)
    mol = _parse_molecule("--smiles", args.smiles)
    env = config.make_env()
    state = State(mol, 0)
    cands = env.candidates(state, need_features=args.checkpoint is not None)

    q_scaled = None
    if args.checkpoint:
        net, _ = load_checkpoint(args.checkpoint)
        _check_architecture(net, env, config)
        q = head_mean_values(net, cands)
        lo, hi = float(np.min(q)), float(np.max(q))
        if hi > lo:
            q_scaled = (q - lo) / (hi - lo)
        else:
            q_scaled = np.zeros_like(q)

    columns = ("action", "successor", "reward") + (
        ("q_scaled",) if q_scaled is not None else ()
    )
    writer = TsvWriter(sys.stdout, columns)
    for i, action in enumerate(cands.actions):
        kind = type(action.kind).__name__
        detail = action.kind
        if kind == "AtomAddition":
            label = f"add {detail.element} order {detail.order} at {detail.anchor}"
        elif kind == "BondChange":
            label = (
                f"bond ({detail.a},{detail.b}) "
                f"{detail.old_order}->{detail.new_order}"
            )
        else:
            label = "no modification"
        raw = raw_reward(env.reward_spec, action.successor)
        row = [label, write_smiles(action.successor), raw]
        if q_scaled is not None:
            row.append(float(q_scaled[i]))
        writer.row(*row)
    return EXIT_OK


def cmd_props(args) -> int:
    writer = TsvWriter(
        sys.stdout,
        ("smiles", "canonical", "molecular_weight", "logp", "penalized_logp",
         "heavy_atoms", "rings", "long_cycles"),
    )
    for smiles in args.smiles:
        mol = _parse_molecule("smiles", smiles)
        info = ring_info(mol)
        writer.row(
            smiles, write_smiles(mol), molecular_weight(mol), logp(mol),
            penalized_logp(mol), len(mol.elements), len(info.ring_sizes),
            long_cycle_count(mol),
        )
    return EXIT_OK


def cmd_sim(args) -> int:
    a = _parse_molecule("smiles", args.smiles_a)
    b = _parse_molecule("smiles", args.smiles_b)
    print(f"{similarity(a, b):.6f}")
    return EXIT_OK


def cmd_fp(args) -> int:
    mol = _parse_molecule("smiles", args.smiles)
    fp = morgan_fingerprint(mol, radius=args.radius, length=args.length)
    print(fp.to_hex())
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required,
                   help="path to a key=value run config")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="base defaults: paper or desk")
    p.add_argument("--seed", type=int, help="override io.seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molforge",
        description="Molecule optimization by step-limited graph edits "
                    "and deep Q-learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a value network")
    _add_common(p)
    p.add_argument("--out-dir", help="override io.out_dir")
    p.add_argument("--episodes", type=int, help="override train.episodes")
    p.add_argument("--origins", help="file of origin SMILES, one per line")
    p.add_argument("--restart-from",
                   help="ledger file; fine-tune from its top-5 molecules")
    p.add_argument("--checkpoint", help="resume from a checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="roll evaluation episodes")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--origins", help="file of origin SMILES")
    p.add_argument("--per-origin", action="store_true",
                   help="print per-origin improvement statistics")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="learning-free reference policies")
    _add_common(p)
    p.add_argument("--kind", required=True,
                   choices=("random", "greedy", "eps-greedy"))
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("inspect", help="list the action set of a molecule")
    _add_common(p)
    p.add_argument("--smiles", required=True)
    p.add_argument("--checkpoint", help="add rescaled Q-values")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("props", help="print property values")
    p.add_argument("smiles", nargs="+")
    p.set_defaults(func=cmd_props)

    p = sub.add_parser("sim", help="radius-2 Tanimoto similarity")
    p.add_argument("smiles_a")
    p.add_argument("smiles_b")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("fp", help="hex-encoded fingerprint")
    p.add_argument("smiles")
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--length", type=int, default=2048)
    p.set_defaults(func=cmd_fp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
