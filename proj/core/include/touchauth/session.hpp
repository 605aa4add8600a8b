#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace touchauth {

enum class Label { genuine, mimicry, replica, puppet };

std::string_view to_string(Label label);
Label label_from_string(std::string_view name);

struct SessionMeta {
  std::string session_id;
  std::string user_id;
  Label label = Label::genuine;
  int cap_hz = 20;
  int cap_rows = 27;
  int cap_cols = 15;
  int imu_hz = 200;
  int duration_ms = 800;

  int cells() const { return cap_rows * cap_cols; }
  bool operator==(const SessionMeta&) const = default;
};

/// One raw capacitive frame, row-major (row index outer).
struct CapFrame {
  std::int64_t ts_ms = 0;
  std::vector<std::int64_t> values;

  bool operator==(const CapFrame&) const = default;
};

struct ImuSample {
  std::int64_t ts_ms = 0;
  std::array<double, 3> a{};  // m/s^2
  std::array<double, 3> g{};  // rad/s
  std::array<double, 3> m{};  // uT

  bool operator==(const ImuSample&) const = default;
};

struct Session {
  SessionMeta meta;
  std::vector<CapFrame> cap;
  std::vector<ImuSample> imu;

  bool operator==(const Session&) const = default;
};

/// Returns one human-readable description per violated invariant.
std::vector<std::string> validate_session(const Session& session);

/// Serializes to the NDJSON session format. Throws InvariantError on an
/// invalid session.
std::string serialize_session(const Session& session);
Session parse_session(std::string_view text);

Session read_session(const std::string& path);
void write_session(const Session& session, const std::string& path);

/// Rounds to the 6-decimal grid used on disk, so that values survive a
/// write/read cycle unchanged.
double quantize6(double v);

struct ManifestEntry {
  std::string path;
  std::string user_id;
  Label label = Label::genuine;
};

/// Manifest paths are stored as written; resolve_manifest_path joins
/// relative entries onto the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);
std::string resolve_manifest_path(const std::string& manifest_path, const std::string& entry_path);

}  // namespace touchauth
