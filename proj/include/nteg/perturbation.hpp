#pragma once

#include <string>
#include <variant>
#include <vector>

#include "nteg/dynamics.hpp"
#include "nteg/equilibrium.hpp"
#include "nteg/model.hpp"

namespace nteg {

struct JoinEvent {
    PlayerParams params;
};
struct LeaveEvent {
    int player;  ///< 0-based
};
struct DeviateEvent {
    int player;  ///< 0-based
    double value;
    bool frozen = false;  ///< hold the deviator fixed while the rest re-equilibrate
};
using PerturbationEvent = std::variant<JoinEvent, LeaveEvent, DeviateEvent>;

/// Which closed-form disruption rule produced a prediction.
enum class DisruptionRule {
    JoinOneValue,
    JoinTwoValue,
    LeaveOneValue,
    LeaveTwoValue,
    DeviateOneValue,
    DeviateTwoValue,
};

std::string to_string(DisruptionRule rule);

/// Closed-form verdict: will any incumbent's next best response move?
/// boundary_margin is the smallest relative distance of the decisive
/// comparisons to flipping (infinite when the verdict is structural);
/// callers treat cases within ~10 tolerances as boundary cases.
struct DisruptionPrediction {
    bool others_change = false;
    DisruptionRule rule;
    double boundary_margin = 0.0;
    std::string details;
};

/// Disruption verdicts for a newcomer / a leaver / a deviator against a
/// classified equilibrium. The rules follow the shared-value theory: the
/// newcomer's entry response decides joins; leaves and downward deviations
/// additionally account for free riders re-entering when the remaining total
/// drops below their ratio, and for a lone remaining contributor collapsing
/// to zero (outside the all-contributors scope of the source analysis, both
/// are exact first-step facts). Reward-bearing specs are rejected: the rules
/// have no closed form there.
DisruptionPrediction predict_join(const GameSpec& spec, const Profile& x,
                                  const EquilibriumReport& report, PlayerParams newcomer);
DisruptionPrediction predict_leave(const GameSpec& spec, const Profile& x,
                                   const EquilibriumReport& report, int leaver);
DisruptionPrediction predict_deviation(const GameSpec& spec, const Profile& x,
                                       const EquilibriumReport& report, int deviator,
                                       double new_value);

/// Outcome of applying an event and re-running the dynamics.
/// observed_change: whether any incumbent's first-step best response differs
/// from its pre-event contribution beyond `observation_tol` (defaults to the
/// spec tolerance). For joins the newcomer moves first (entry response) and
/// incumbents are measured against the post-entry profile.
struct SettleResult {
    GameSpec post_spec;
    Profile post_initial;
    Trace trace;
    bool observed_change = false;
};

SettleResult apply_and_settle(const GameSpec& spec, const Profile& x,
                              const PerturbationEvent& event, const DynamicsConfig& cfg,
                              std::optional<double> observation_tol = std::nullopt);

/// Members pool their contributions into one entry (placed at the smallest
/// member index, other member slots removed). Total effort is preserved, so
/// the normalised total effort never rises, and falls strictly when the
/// pooled sum exceeds the previous maximum.
Profile coalition_merge(const Profile& x, const std::vector<int>& members);

struct NonMyopicOutcome {
    double forced_value;  ///< the deviator's held contribution
    Profile settled;
    double utility_delta;  ///< settled minus equilibrium utility for the deviator
};

struct NonMyopicReport {
    int deviator = 0;
    std::vector<NonMyopicOutcome> outcomes;  ///< sorted by utility_delta, best first
    bool any_positive = false;
    bool diagnostic = false;  ///< reward-free spec: profitability claim not applicable
};

/// Scans forced deviations over (x_k, K * x_k] (step defaults to x_k / 50),
/// holding the deviator frozen while the rest settle, and reports the
/// deviator's utility change at each settled state, best outcome first.
/// Intended for reward-bearing specs; reward-free specs still run but are
/// flagged diagnostic (the profitability claim cannot hold without a reward).
NonMyopicReport non_myopic_search(const GameSpec& spec, const Profile& equilibrium, int deviator,
                                  const DynamicsConfig& cfg, double K = 3.0,
                                  std::optional<double> grid_step = std::nullopt);

}  // namespace nteg
