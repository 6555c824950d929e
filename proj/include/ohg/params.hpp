#pragma once

#include <cmath>
#include <stdexcept>

namespace ohg {

/// Model primitives: discounting, prize hazard rate, per-player inspection
/// costs, and the values to the finder and to the other player.
struct GameParams {
  double r = 0.0;         // discount rate per unit time, >= 0
  double lambda = 1.0;    // prize arrival rate, > 0
  double cost1 = 0.0;     // player 1's cost per actual inspection
  double cost2 = 0.0;     // player 2's cost per actual inspection
  double v_finder = 1.0;  // value to the player who finds the prize
  double v_other = 0.0;   // value to the non-finding player

  static GameParams make(double r, double lambda, double cost, double v_finder,
                         double v_other) {
    return GameParams{r, lambda, cost, cost, v_finder, v_other};
  }

  /// The same game seen from player 2's seat (cost roles exchanged; the
  /// finder/other values are already role-relative).
  GameParams swapped() const {
    GameParams p = *this;
    p.cost1 = cost2;
    p.cost2 = cost1;
    return p;
  }

  void check_valid() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("lambda must be positive and finite");
    if (!(r >= 0.0) || !std::isfinite(r))
      throw std::invalid_argument("r must be non-negative and finite");
    if (!(cost1 >= 0.0) || !(cost2 >= 0.0) || !std::isfinite(cost1) ||
        !std::isfinite(cost2))
      throw std::invalid_argument("costs must be non-negative and finite");
    if (!std::isfinite(v_finder) || !std::isfinite(v_other))
      throw std::invalid_argument("values must be finite");
  }
};

}  // namespace ohg
