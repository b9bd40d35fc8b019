#include <gtest/gtest.h>

#include <filesystem>

#include "fitted/class_spaces.hpp"
#include "fitted/errors.hpp"
#include "fitted/space_io.hpp"

using namespace fitted;

TEST(SpaceIo, CanonicalRoundTripIsByteStable) {
  const FittedEnsembleSpec spec(
      ClassSet(10), {Sequel({gen_consecutive_pairs(10, 0), gen_consecutive_pairs(10, 1)}),
                     gen_random_sequel(10, 2, 2, 9)},
      true);
  const std::string text = serialize_spec(spec);
  const FittedEnsembleSpec back = parse_spec_text(text);
  EXPECT_EQ(back, spec);
  EXPECT_EQ(serialize_spec(back), text);
}

TEST(SpaceIo, NamesAndIdentityFlag) {
  const FittedEnsembleSpec spec(ClassSet(4, {"A", "B", "C", "D"}),
                                {Sequel({SuperclassSpace({{0, 3}, {1, 2}}, 4)})}, false);
  const auto back = parse_spec_text(serialize_spec(spec));
  EXPECT_EQ(back.class_set.names(), (std::vector<std::string>{"A", "B", "C", "D"}));
  EXPECT_FALSE(back.include_identity);
}

TEST(SpaceIo, IdentityDefaultsOn) {
  const auto spec = parse_spec_text(R"({"num_classes": 4, "sequels": [[[[0,1],[2,3]]]]})");
  EXPECT_TRUE(spec.include_identity);
  EXPECT_EQ(spec.member_count(), 2u);
}

TEST(SpaceIo, NonCanonicalInputIsCanonicalized) {
  const auto spec = parse_spec_text(R"({"num_classes": 4, "sequels": [[[[3,0],[2,1]]]]})");
  EXPECT_EQ(spec.sequels[0].spaces()[0].blocks(), (std::vector<Block>{{0, 3}, {1, 2}}));
}

TEST(SpaceIo, Errors) {
  EXPECT_THROW(parse_spec_text(R"({"num_classes": 4, "sequels": [[[[0,1],[1,2,3]]]]})"),
               OverlapError);
  EXPECT_THROW(parse_spec_text(R"({"sequels": [[[[0,1]]]]})"), SchemaError);
  EXPECT_THROW(parse_spec_text("{not json"), Error);
}

TEST(SpaceIo, SidecarRoundTrip) {
  const SuperclassSpace s({{0, 3}, {1, 2}}, 4);
  const auto dir = std::filesystem::temp_directory_path() / "fitted_space_io_test";
  write_text_file(dir / "s.json", serialize_space(s));
  EXPECT_EQ(load_space(dir / "s.json"), s);
  std::filesystem::remove_all(dir);
}
