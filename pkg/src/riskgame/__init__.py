"""Game-theoretic risk management with loss distributions as payoffs."""

from .aptmodel import (
    AptStageSpec,
    AttackGraph,
    StagePartition,
    build_stages,
    enumerate_attack_paths,
    solve_sequential_apt,
    stage_game_matrix,
    static_apt_game,
)
from .errors import RiskModelError
from .gamecore import (
    Equilibrium,
    Game,
    assemble_game,
    fictitious_play,
    mixture_payoff,
    scalarize,
    solve,
    solve_degenerate,
)
from .lossdist import (
    KernelWeights,
    LossDistribution,
    Observations,
    build_empirical,
    discrete_kernel,
    loss_distribution,
    mixture,
    remove_outliers,
    rescale_to_common_range,
    silverman_bandwidth,
    smooth,
    stat,
    sup_distance,
    truncate,
)
from .ordering import PreferenceResult, prefer, prefer_multi, sort_by_preference
from .riskops import (
    ControlRelation,
    RateTestResult,
    Schedule,
    ThreatRanking,
    interpret_equilibrium,
    minimal_hitting_set,
    rank_threats,
    rate_ratio_test,
    schedule_actions,
)

__version__ = "0.1.0"
