#include <gtest/gtest.h>

#include "checks.hpp"
#include "touchauth/config.hpp"

namespace touchauth {
namespace {

TEST(Config, DefaultsRoundTrip) {
  const PipelineConfig d;
  const auto text = config_to_json(d);
  EXPECT_EQ(config_to_json(apply_config_json(PipelineConfig{}, text)), text);
  EXPECT_NO_THROW(d.validate());
}

TEST(Config, JsonOverlay) {
  const auto c = apply_config_json({}, R"({"embed": {"epochs": 7}, "oneclass": {"kind": "lof"}, "seed": 3})");
  EXPECT_EQ(c.embed.epochs, 7);
  EXPECT_EQ(c.oneclass.kind, ClassifierKind::lof);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.embed.hidden, PipelineConfig{}.embed.hidden);
}

TEST(Config, UnknownKeyNamed) {
  try {
    apply_config_json({}, R"({"embed": {"epoch": 7}})");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("embed.epoch"), std::string::npos) << e.what();
  }
  EXPECT_THROW(apply_override({}, "nope.key=1"), SchemaError);
}

TEST(Config, TypeMismatch) {
  EXPECT_THROW(apply_config_json({}, R"({"embed": {"epochs": "many"}})"), SchemaError);
  EXPECT_THROW(apply_config_json({}, "[1, 2"), ParseError);
}

TEST(Config, Overrides) {
  auto c = apply_override({}, "embed.epochs=20");
  EXPECT_EQ(c.embed.epochs, 20);
  c = apply_override(c, "paths.out_dir=results");
  EXPECT_EQ(c.paths.out_dir, "results");
  c = apply_override(c, "oneclass.grid.nu=[0.05,0.2]");
  EXPECT_EQ(c.oneclass.grid.nu, (std::vector<double>{0.05, 0.2}));
}

TEST(Config, OverridesBeatFile) {
  testing::TempDir dir;
  write_text_file(dir.str("c.json"), R"({"embed": {"epochs": 5, "hidden": 16}})");
  auto c = load_config(dir.str("c.json"));
  c = apply_override(c, "embed.epochs=9");
  EXPECT_EQ(c.embed.epochs, 9);
  EXPECT_EQ(c.embed.hidden, 16);
  EXPECT_THROW(load_config(dir.str("missing.json")), IoError);
}

TEST(Config, ValidateNamesKey) {
  PipelineConfig c;
  c.capsense.connectivity = 6;
  try {
    c.validate();
    FAIL();
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find("capsense.connectivity"), std::string::npos);
  }
  c = {};
  c.workers = 0;
  EXPECT_THROW(c.validate(), InvariantError);
}

}  // namespace
}  // namespace touchauth
