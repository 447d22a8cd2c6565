"""Shapley group values: merging games, exact and sampled group values, axiom checks and group search."""

from .applied import (
    InfluenceModel,
    Network,
    SurveyData,
    connectivity_game,
    linear_threshold_game,
    reach_noise_game,
    star_network,
    wconn2_game,
    wconn_game,
)
from .coalition import from_members, full, members
from .estimation import Estimate, SamplerConfig, mc_group_value, mc_shapley
from .games import (
    CapacityError,
    Game,
    TableGame,
    UnanimityCombination,
    game_from_json,
    game_to_json,
    harsanyi_dividends,
    merge,
    restrict,
    unanimity,
)
from .search import SearchConfig, explain_group, greedy_group, rank_groups
from .shapley import (
    additive_group_value,
    average_complementarity,
    group_value,
    marginal_group_contribution,
    profitability,
    shapley_group_value,
    shapley_value,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "Estimate",
    "Game",
    "InfluenceModel",
    "Network",
    "SamplerConfig",
    "SearchConfig",
    "SurveyData",
    "TableGame",
    "UnanimityCombination",
    "additive_group_value",
    "average_complementarity",
    "connectivity_game",
    "explain_group",
    "from_members",
    "full",
    "game_from_json",
    "game_to_json",
    "greedy_group",
    "group_value",
    "harsanyi_dividends",
    "linear_threshold_game",
    "marginal_group_contribution",
    "mc_group_value",
    "mc_shapley",
    "members",
    "merge",
    "profitability",
    "rank_groups",
    "reach_noise_game",
    "restrict",
    "shapley_group_value",
    "shapley_value",
    "star_network",
    "unanimity",
    "wconn2_game",
    "wconn_game",
]
