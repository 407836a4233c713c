// Pass/fail thresholds shared by the `verify` command and the test suites.
#pragma once

namespace mukf::tol {

// Two-step UKF against the Kalman filter on linear systems.
inline constexpr double kStateDeviation = 1e-9;       // relative to 1 + |x_kf|
inline constexpr double kGainDeviation = 1e-9;        // absolute Frobenius
inline constexpr double kCovarianceDeviation = 1e-9;  // relative Frobenius

// One-step UKF deficit identities, absolute Frobenius.
inline constexpr double kDeficitIdentity = 1e-9;

// Modified one-step UKF against the Kalman filter, relative Frobenius.
inline constexpr double kMukfCovarianceDeviation = 1e-9;

// Two-step UKF gain and covariance across alpha values, absolute Frobenius.
inline constexpr double kAlphaInvariance = 1e-9;

// Lowest admissible tr P(K + dK) - tr P(K).
inline constexpr double kGainOptimalitySlack = 1e-12;

// |relative trace error| of MUKF against UKF2 on linear-output systems.
inline constexpr double kLinearOutputRelativeError = 1e-10;

// Steady-state UKF1-vs-UKF2 relative error bands.
inline constexpr double kVdpBandLow = 0.5;
inline constexpr double kVdpBandHigh = 1.5;
inline constexpr double kLorenzBandLow = 0.10;
inline constexpr double kLorenzBandHigh = 0.25;

// Fraction of trailing steps averaged for steady-state figures.
inline constexpr double kSteadyStateFraction = 0.1;

}  // namespace mukf::tol
