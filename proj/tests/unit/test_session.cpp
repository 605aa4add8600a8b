#include <gtest/gtest.h>

#include "checks.hpp"
#include "fixtures.hpp"
#include "touchauth/session.hpp"

namespace touchauth {
namespace {

using testing::TempDir;

TEST(ReadSession, MinimalFile) {
  TempDir dir;
  std::string text =
      R"({"t":"meta","session_id":"m","user_id":"u","label":"genuine","cap_hz":20,"cap_rows":27,"cap_cols":15,"imu_hz":200,"duration_ms":800})"
      "\n";
  for (int i = 0; i < 2; ++i) {
    text += R"({"t":"cap","ts_ms":)" + std::to_string(i * 50) + R"(,"v":[)";
    for (int c = 0; c < 405; ++c) text += (c ? ",1" : "1");
    text += "]}\n";
  }
  for (int i = 0; i < 8; ++i) {
    text += R"({"t":"imu","ts_ms":)" + std::to_string(i * 5) +
            R"(,"a":[0,0,9.81],"g":[0,0,0],"m":[20,0,-40]})" "\n";
  }
  write_text_file(dir.str("m.ndjson"), text);
  const auto s = read_session(dir.str("m.ndjson"));
  EXPECT_EQ(s.cap.size(), 2u);
  EXPECT_EQ(s.imu.size(), 8u);
  EXPECT_EQ(s.meta.session_id, "m");
}

TEST(ReadSession, WrongCellCountIsSchemaError) {
  auto text = serialize_session(testing::minimal_session());
  const auto pos = text.find("\"v\":[10,");
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos + 5, 3);  // drop one value
  EXPECT_THROW(parse_session(text), SchemaError);
}

TEST(ReadSession, MalformedLineIsParseError) {
  auto text = serialize_session(testing::minimal_session());
  text += "{not json\n";
  EXPECT_THROW(parse_session(text), ParseError);
}

TEST(ReadSession, MissingFieldIsSchemaError) {
  auto text = serialize_session(testing::minimal_session());
  const std::string field = "\"user_id\":\"u\",";
  const auto pos = text.find(field);
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos, field.size());
  EXPECT_THROW(parse_session(text), SchemaError);
}

TEST(ReadSession, SyntheticRoundTripIsBitIdentical) {
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto g = testing::synthetic_session(k % 7, 100 + k);
    const auto bytes = serialize_session(g.session);
    EXPECT_EQ(serialize_session(parse_session(bytes)), bytes) << "session " << k;
  }
}

TEST(WriteSession, RoundTripAndDeterminism) {
  TempDir dir;
  const auto s = testing::synthetic_session(1, 2).session;
  write_session(s, dir.str("a.ndjson"));
  write_session(s, dir.str("b.ndjson"));
  EXPECT_EQ(read_text_file(dir.str("a.ndjson")), read_text_file(dir.str("b.ndjson")));
  // Synthetic values are already on the 6-decimal grid.
  EXPECT_EQ(read_session(dir.str("a.ndjson")), s);
}

TEST(WriteSession, RefusesInvalidSession) {
  TempDir dir;
  auto s = testing::minimal_session();
  s.cap.pop_back();
  EXPECT_THROW(write_session(s, dir.str("x.ndjson")), InvariantError);
}

TEST(ValidateSession, ValidSyntheticSession) {
  EXPECT_TRUE(validate_session(testing::synthetic_session(3, 4).session).empty());
}

TEST(ValidateSession, DecreasingImuTimestamps) {
  auto s = testing::minimal_session();
  s.imu[5].ts_ms = 2;
  const auto v = validate_session(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("imu"), std::string::npos);
  EXPECT_NE(v[0].find("5"), std::string::npos);
}

TEST(ValidateSession, SingleCapFrame) {
  auto s = testing::minimal_session();
  s.cap.pop_back();
  const auto v = validate_session(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "len(cap) >= 2");
}

TEST(ValidateSession, MetaInvariants) {
  auto s = testing::minimal_session();
  s.meta.imu_hz = 10;
  EXPECT_FALSE(validate_session(s).empty());
  s = testing::minimal_session();
  s.imu.back().ts_ms = 2000;
  EXPECT_FALSE(validate_session(s).empty());
}

TEST(Manifest, RoundTripAndResolve) {
  TempDir dir;
  std::vector<ManifestEntry> entries = {{"sessions/a.ndjson", "u1", Label::genuine},
                                        {"sessions/b.ndjson", "u1", Label::replica}};
  write_manifest(entries, dir.str("manifest.json"));
  const auto back = read_manifest(dir.str("manifest.json"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].label, Label::replica);
  EXPECT_EQ(resolve_manifest_path(dir.str("manifest.json"), back[0].path),
            (dir.path() / "sessions/a.ndjson").string());
  EXPECT_EQ(resolve_manifest_path(dir.str("manifest.json"), "/abs/x.ndjson"), "/abs/x.ndjson");
}

TEST(Label, StringRoundTrip) {
  for (auto l : {Label::genuine, Label::mimicry, Label::replica, Label::puppet}) {
    EXPECT_EQ(label_from_string(to_string(l)), l);
  }
  EXPECT_THROW(label_from_string("nope"), SchemaError);
}

}  // namespace
}  // namespace touchauth
