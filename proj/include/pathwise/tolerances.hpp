#pragma once

namespace pathwise::tol {

// Numerical tolerances shared by every module.
inline constexpr double kProbabilitySum = 1e-12;     // ProbVector normalization
inline constexpr double kMarginal = 1e-10;           // coupling row/column sums
inline constexpr double kDualityGap = 1e-9;          // primal vs dual KR
inline constexpr double kMembership = 1e-9;          // LP feasibility residual (G, H)
inline constexpr double kInvariance = 1e-9;          // apply_H(mu*, sigma*) vs mu*
inline constexpr double kLipschitz = 1e-9;           // slack allowed in Lipschitz checks
inline constexpr double kBellman = 1e-12;            // Bellman consistency
inline constexpr double kDiscountedStop = 1e-12;     // sup-norm stop for discounted VI
inline constexpr double kAverageReward = 1e-9;       // average-reward optimality equations
inline constexpr double kPolicyImprovement = 1e-11;  // strict-improvement threshold in PI
inline constexpr double kSupport = 1e-12;            // weights below this are off-support
inline constexpr double kNullSignal = 1e-15;         // signal probability treated as zero
inline constexpr double kVProxyGap = 1e-4;           // |v_N - v_2N| stabilization target

}  // namespace pathwise::tol
