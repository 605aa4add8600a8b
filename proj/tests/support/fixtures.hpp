#pragma once

#include <string>

#include "touchauth/config.hpp"
#include "touchauth/session.hpp"
#include "touchauth/synth.hpp"

namespace touchauth::testing {

/// Smallest valid session: flat background, two cap frames, eight IMU samples.
Session minimal_session();

/// Constant-background frames with a Gaussian blob; centre in cells.
Session blob_session(double x, double y, int n_cap = 16, int n_imu = 160);

/// One synthetic genuine session of a seeded user.
GeneratedSession synthetic_session(std::uint64_t user_seed, std::uint64_t session_seed,
                                   const SynthConfig& cfg = {});

/// Config for quick end-to-end runs (fewer epochs).
PipelineConfig quick_config(std::uint64_t seed = 0);

}  // namespace touchauth::testing
