#pragma once

namespace levyvar {

/// FixedHorizon: T = n delta stays fixed as delta shrinks.
/// GrowingHorizon: T_n = n delta_n -> infinity (the "bar" functionals).
enum class HorizonMode { FixedHorizon, GrowingHorizon };

inline const char* to_string(HorizonMode m) { return m == HorizonMode::FixedHorizon ? "fixed" : "growing"; }

}  // namespace levyvar
