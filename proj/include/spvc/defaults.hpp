#pragma once

// Every numeric default used by the library and the command-line tool.
// docs/config_schema.md documents the same values key by key.

#include <cstddef>
#include <cstdint>

namespace spvc::defaults {

// Model structure
inline constexpr std::size_t kNeighbors = 10;
inline constexpr std::size_t kKnots = 10;
inline constexpr double kAlphaCar = 0.99;
inline constexpr double kThetaInitSigma2 = 1.0;
inline constexpr double kThetaInitPhi = 0.5;
inline constexpr double kThetaInitNu = 1.0;

// Hyperpriors
inline constexpr double kMuPriorVar = 1e4;
inline constexpr double kGammaDfExtra = 2.0;
inline constexpr double kGammaScale = 1.0;
inline constexpr double kSigmaDfExtra = 2.0;
inline constexpr double kSigmaScale = 1.0;
inline constexpr double kSigma2Min = 1e-3, kSigma2Max = 1e4;
inline constexpr double kPhiMin = 0.01, kPhiMax = 10.0;
inline constexpr double kNuMin = 0.1, kNuMax = 30.0;

// MCMC
inline constexpr std::size_t kChains = 2;
inline constexpr std::size_t kIters = 25000;
inline constexpr std::size_t kBurnin = 5000;
inline constexpr std::size_t kThin = 1;
inline constexpr std::uint64_t kSeed = 1;
inline constexpr double kTargetAcceptance = 0.25;
inline constexpr std::size_t kAdaptWindow = 50;
inline constexpr std::size_t kAdaptCovMin = 200;
inline constexpr double kInitialStep = 0.1;
inline constexpr double kInitJitter = 0.1;

// Prediction and evaluation
inline constexpr std::size_t kInnerSweeps = 20;
inline constexpr std::size_t kInnerBurn = 10;
inline constexpr double kSmoothingBandwidth = 0.08;
inline constexpr std::size_t kFolds = 5;
inline constexpr double kSpecificity = 0.8;

// Simulation
inline constexpr std::size_t kFeatureDim = 4;
inline constexpr double kPrevalencePZ = 0.35;
inline constexpr double kPrevalenceCG = 0.15;
inline constexpr double kMaskStep = 0.04;
inline constexpr double kFeatureCorrelation = 0.3;   // equicorrelation of Gamma and Sigma
inline constexpr double kClassSeparationPZ = 0.62;   // cancer mean shift per feature, PZ
inline constexpr double kClassSeparationCG = 0.52;   // cancer mean shift per feature, CG
inline constexpr double kCancerVarianceScale = 1.2;  // Gamma_{1,r} = scale * Gamma_{0,r}
inline constexpr double kSubjectScale = 1.0;         // Sigma = scale * correlation

}  // namespace spvc::defaults
