#include "touchauth/session.hpp"

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "touchauth/util.hpp"

namespace touchauth {

using nlohmann::json;

std::string_view to_string(Label label) {
  switch (label) {
    case Label::genuine: return "genuine";
    case Label::mimicry: return "mimicry";
    case Label::replica: return "replica";
    case Label::puppet: return "puppet";
  }
  return "genuine";
}

Label label_from_string(std::string_view name) {
  if (name == "genuine") return Label::genuine;
  if (name == "mimicry") return Label::mimicry;
  if (name == "replica") return Label::replica;
  if (name == "puppet") return Label::puppet;
  throw SchemaError("unknown label '" + std::string(name) + "'");
}

double quantize6(double v) {
  const double q = std::round(v * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

std::vector<std::string> validate_session(const Session& s) {
  std::vector<std::string> out;
  const auto& m = s.meta;
  if (m.cap_rows <= 0 || m.cap_cols <= 0) out.push_back("meta: cap_rows*cap_cols > 0");
  if (m.cap_hz <= 0) out.push_back("meta: cap_hz > 0");
  if (m.imu_hz <= m.cap_hz) out.push_back("meta: imu_hz > cap_hz");
  if (m.duration_ms <= 0) out.push_back("meta: duration_ms > 0");
  if (s.cap.size() < 2) out.push_back("len(cap) >= 2");
  if (s.imu.size() < 8) out.push_back("len(imu) >= 8");

  const double limit = m.duration_ms * 1.1;
  const auto cells = static_cast<std::size_t>(std::max(0, m.cells()));
  for (std::size_t i = 0; i < s.cap.size(); ++i) {
    const auto& f = s.cap[i];
    if (f.values.size() != cells) {
      out.push_back("cap[" + std::to_string(i) + "]: expected " + std::to_string(cells) +
                    " values, got " + std::to_string(f.values.size()));
    }
    for (auto v : f.values) {
      if (v < 0) {
        out.push_back("cap[" + std::to_string(i) + "]: negative count");
        break;
      }
    }
    if (i > 0 && f.ts_ms < s.cap[i - 1].ts_ms) {
      out.push_back("cap: ts_ms decreasing at index " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < s.imu.size(); ++i) {
    const auto& r = s.imu[i];
    if (i > 0 && r.ts_ms < s.imu[i - 1].ts_ms) {
      out.push_back("imu: ts_ms decreasing at index " + std::to_string(i));
    }
    bool finite = true;
    for (int k = 0; k < 3; ++k) {
      finite = finite && std::isfinite(r.a[k]) && std::isfinite(r.g[k]) && std::isfinite(r.m[k]);
    }
    if (!finite) out.push_back("imu[" + std::to_string(i) + "]: non-finite component");
  }
  if (!s.cap.empty() && s.cap.back().ts_ms > limit) out.push_back("cap: last ts_ms exceeds duration + 10%");
  if (!s.imu.empty() && s.imu.back().ts_ms > limit) out.push_back("imu: last ts_ms exceeds duration + 10%");
  return out;
}

namespace {

void append_vec3(std::string& out, const std::array<double, 3>& v) {
  out += '[';
  out += fixed6(v[0]);
  out += ',';
  out += fixed6(v[1]);
  out += ',';
  out += fixed6(v[2]);
  out += ']';
}

std::string json_string(const std::string& s) { return json(s).dump(); }

template <typename T>
T required(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw SchemaError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError("line " + std::to_string(line) + ": field '" + key + "' has wrong type");
  }
}

std::array<double, 3> vec3(const json& j, const char* key, std::size_t line) {
  auto v = required<std::vector<double>>(j, key, line);
  if (v.size() != 3) {
    throw SchemaError("line " + std::to_string(line) + ": field '" + key + "' must have 3 values");
  }
  return {v[0], v[1], v[2]};
}

}  // namespace

std::string serialize_session(const Session& s) {
  const auto violations = validate_session(s);
  if (!violations.empty()) throw InvariantError("invalid session: " + violations.front());

  std::string out;
  const auto& m = s.meta;
  out += "{\"t\":\"meta\",\"session_id\":" + json_string(m.session_id) +
         ",\"user_id\":" + json_string(m.user_id) + ",\"label\":\"" +
         std::string(to_string(m.label)) + "\",\"cap_hz\":" + std::to_string(m.cap_hz) +
         ",\"cap_rows\":" + std::to_string(m.cap_rows) + ",\"cap_cols\":" +
         std::to_string(m.cap_cols) + ",\"imu_hz\":" + std::to_string(m.imu_hz) +
         ",\"duration_ms\":" + std::to_string(m.duration_ms) + "}\n";
  for (const auto& f : s.cap) {
    out += "{\"t\":\"cap\",\"ts_ms\":" + std::to_string(f.ts_ms) + ",\"v\":[";
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(f.values[i]);
    }
    out += "]}\n";
  }
  for (const auto& r : s.imu) {
    out += "{\"t\":\"imu\",\"ts_ms\":" + std::to_string(r.ts_ms) + ",\"a\":";
    append_vec3(out, r.a);
    out += ",\"g\":";
    append_vec3(out, r.g);
    out += ",\"m\":";
    append_vec3(out, r.m);
    out += "}\n";
  }
  return out;
}

Session parse_session(std::string_view text) {
  Session s;
  bool have_meta = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + ": not an object");
    const auto type = required<std::string>(j, "t", line_no);

    if (type == "meta") {
      if (have_meta || line_no != 1) {
        throw SchemaError("line " + std::to_string(line_no) + ": meta record must be the single first line");
      }
      have_meta = true;
      auto& m = s.meta;
      m.session_id = required<std::string>(j, "session_id", line_no);
      m.user_id = required<std::string>(j, "user_id", line_no);
      m.label = label_from_string(required<std::string>(j, "label", line_no));
      m.cap_hz = required<int>(j, "cap_hz", line_no);
      m.cap_rows = required<int>(j, "cap_rows", line_no);
      m.cap_cols = required<int>(j, "cap_cols", line_no);
      m.imu_hz = required<int>(j, "imu_hz", line_no);
      m.duration_ms = required<int>(j, "duration_ms", line_no);
      continue;
    }
    if (!have_meta) throw SchemaError("line 1: first record must be meta");

    if (type == "cap") {
      CapFrame f;
      f.ts_ms = required<std::int64_t>(j, "ts_ms", line_no);
      f.values = required<std::vector<std::int64_t>>(j, "v", line_no);
      const auto want = static_cast<std::size_t>(std::max(0, s.meta.cells()));
      if (f.values.size() != want) {
        throw SchemaError("line " + std::to_string(line_no) + ": cap record has " +
                          std::to_string(f.values.size()) + " values, expected " +
                          std::to_string(want));
      }
      s.cap.push_back(std::move(f));
    } else if (type == "imu") {
      ImuSample r;
      r.ts_ms = required<std::int64_t>(j, "ts_ms", line_no);
      r.a = vec3(j, "a", line_no);
      r.g = vec3(j, "g", line_no);
      r.m = vec3(j, "m", line_no);
      s.imu.push_back(r);
    } else {
      throw SchemaError("line " + std::to_string(line_no) + ": unknown record type '" + type + "'");
    }
  }
  if (!have_meta) throw SchemaError("missing meta record");

  const auto violations = validate_session(s);
  if (!violations.empty()) {
    std::string msg = "session violates invariants:";
    for (const auto& v : violations) msg += " [" + v + "]";
    throw InvariantError(msg);
  }
  return s;
}

Session read_session(const std::string& path) { return parse_session(read_text_file(path)); }

void write_session(const Session& session, const std::string& path) {
  write_text_file(path, serialize_session(session));
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_array()) throw SchemaError(path + ": manifest must be a JSON array");
  std::vector<ManifestEntry> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_object() || !e.contains("path") || !e.contains("user_id") || !e.contains("label")) {
      throw SchemaError(path + ": entry " + std::to_string(i) + " needs path, user_id, label");
    }
    out.push_back({e["path"].get<std::string>(), e["user_id"].get<std::string>(),
                   label_from_string(e["label"].get<std::string>())});
  }
  return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  json j = json::array();
  for (const auto& e : entries) {
    json o;
    o["path"] = e.path;
    o["user_id"] = e.user_id;
    o["label"] = std::string(to_string(e.label));
    j.push_back(std::move(o));
  }
  write_text_file(path, j.dump(1) + "\n");
}

std::string resolve_manifest_path(const std::string& manifest_path, const std::string& entry_path) {
  namespace fs = std::filesystem;
  fs::path p(entry_path);
  if (p.is_absolute()) return p.string();
  return (fs::path(manifest_path).parent_path() / p).string();
}

}  // namespace touchauth
