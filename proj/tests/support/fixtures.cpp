#include "fixtures.hpp"

#include <cmath>

namespace touchauth::testing {

Session minimal_session() {
  Session s;
  s.meta.session_id = "min";
  s.meta.user_id = "u";
  for (int i = 0; i < 2; ++i) s.cap.push_back({i * 50, std::vector<std::int64_t>(405, 10)});
  for (int i = 0; i < 8; ++i) {
    ImuSample m;
    m.ts_ms = i * 5;
    m.a = {0.0, 0.0, 9.81};
    m.m = {20.0, 0.0, -40.0};
    s.imu.push_back(m);
  }
  return s;
}

Session blob_session(double x, double y, int n_cap, int n_imu) {
  Session s;
  s.meta.session_id = "blob";
  s.meta.user_id = "u";
  for (int t = 0; t < n_cap; ++t) {
    CapFrame f{static_cast<std::int64_t>(t * 50), std::vector<std::int64_t>(405, 20)};
    for (int r = 0; r < 27; ++r)
      for (int c = 0; c < 15; ++c) {
        const double d2 = (c - x) * (c - x) + (r - y) * (r - y);
        f.values[r * 15 + c] += static_cast<std::int64_t>(std::lround(100.0 * std::exp(-d2 / 4.0)));
      }
    s.cap.push_back(std::move(f));
  }
  for (int i = 0; i < n_imu; ++i) {
    ImuSample m;
    m.ts_ms = i * 5;
    m.a = {0.0, 0.0, 9.81};
    m.m = {20.0, 0.0, -40.0};
    s.imu.push_back(m);
  }
  return s;
}

GeneratedSession synthetic_session(std::uint64_t user_seed, std::uint64_t session_seed,
                                   const SynthConfig& cfg) {
  const auto user = gen_user(user_seed, cfg);
  Rng rng(session_seed);
  return gen_session(user, rng, cfg, "s" + std::to_string(session_seed));
}

PipelineConfig quick_config(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.seed = seed;
  cfg.embed.epochs = 10;
  cfg.embed.hidden = 64;
  cfg.embed.output = 32;
  return cfg;
}

}  // namespace touchauth::testing
