#include "touchauth/pipeline.hpp"

namespace touchauth {

Preprocessed preprocess(const Session& session, const PipelineConfig& cfg) {
  if (const auto bad = validate_session(session); !bad.empty()) {
    throw InvariantError("invalid session: " + bad.front());
  }
  Preprocessed p;
  p.seq = interpolate_frames(session, cfg.capsense.n_frames);
  p.track = track_touch(p.seq, cfg.capsense);

  p.imu = wavelet_denoise(resample_imu(session), cfg.motion.wavelet_levels);
  p.magnitude = accel_magnitude(p.imu);
  p.orientation = fuse_orientation(p.imu, cfg.motion.beta);
  const int len = static_cast<int>(p.imu.size());
  p.coarse = coarse_window(p.track, session.meta, len, cfg.motion.pad_s);
  p.extrema = find_extremum_pair(p.magnitude, p.coarse);
  p.interval = refine_interval(p.magnitude, p.extrema, p.coarse, cfg.motion.rho);
  p.segment = build_motion_segment(p.imu, p.orientation, p.interval, cfg.motion.segment_len);
  return p;
}

Eigen::VectorXd Descriptors::joined() const {
  Eigen::VectorXd x(cap.size() + imu.size());
  x << cap, imu;
  return x;
}

Descriptors describe(const Preprocessed& p, const PipelineConfig& cfg) {
  return {cap_descriptor(p.seq, p.track, cfg.capsense.smooth_window),
          imu_descriptor(p.segment, p.imu.fs(), cfg.motion.stft_win, cfg.motion.stft_hop)};
}

Eigen::VectorXd describe_cap(const CapSequence& seq, const PipelineConfig& cfg) {
  return cap_descriptor(seq, track_touch(seq, cfg.capsense), cfg.capsense.smooth_window);
}

Descriptors describe(const Session& session, const PipelineConfig& cfg) {
  return describe(preprocess(session, cfg), cfg);
}

Eigen::VectorXd embed_session(const Session& session, const FusionModel& model,
                              const PipelineConfig& cfg) {
  return model.forward_joined(describe(session, cfg).joined());
}

void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(context + ": " + e.what(), e.residual());
  } catch (const ParseError& e) {
    throw ParseError(context + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(context + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(context + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(context + ": " + e.what());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(context + ": " + e.what());
  } catch (const Error& e) {
    throw Error(context + ": " + e.what());
  }
}

}  // namespace touchauth
