"""Molecule optimization by step-limited graph editing and deep Q-learning."""

from molforge.actions import (
    Action,
    AtomAddition,
    BondChange,
    ForeignAction,
    MdpConfig,
    NoModification,
    State,
    TerminalState,
    apply,
    enumerate_atom_additions,
    enumerate_bond_additions,
    enumerate_bond_removals,
    valid_actions,
)
from molforge.env import MoleculeEnv
from molforge.fingerprint import (
    BitFingerprint,
    StateFeatures,
    featurize,
    morgan_fingerprint,
    tanimoto,
)
from molforge.molgraph import (
    CanonicalKey,
    Element,
    ElementTable,
    Molecule,
    ParseError,
    RingInfo,
    canonical_key,
    free_valence,
    new_empty,
    parse_smiles,
    ring_info,
    set_bond,
    write_smiles,
)
from molforge.properties import (
    LogPTable,
    evaluate,
    logp,
    long_cycle_count,
    molecular_weight,
    penalized_logp,
    register_property,
)
from molforge.qlearn import (
    AdamState,
    CandidateSet,
    EpsilonSchedule,
    ReplayBuffer,
    Transition,
    ValueNetwork,
    action_values,
    huber,
    load_checkpoint,
    run_episode,
    save_checkpoint,
    select_action,
    sync_target,
    td_target,
    train_step,
)
from molforge.rewards import (
    ConstrainedLogP,
    Maximize,
    MultiObjective,
    RewardSpec,
    TargetRange,
    constrained_reward,
    relative_improvement,
    scalarize,
    similarity,
    step_reward,
    target_range_reward,
)

__version__ = "0.1.0"
