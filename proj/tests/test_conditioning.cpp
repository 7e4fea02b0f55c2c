#include <gtest/gtest.h>

#include <filesystem>

#include "tango/conditioning.hpp"
#include "tango/errors.hpp"

using namespace tango;

namespace {

ToyVocabulary dog_vocab() { return ToyVocabulary({"dog", "barks", "rain"}, 8, 11); }

}  // namespace

TEST(Encode, EmptyCaptionIsNull) {
  const auto v = dog_vocab();
  EXPECT_TRUE(v.encode("").is_null());
  EXPECT_TRUE(v.encode("  ,. ").is_null());
  EXPECT_EQ(v.encode("").d_text(), 8u);
  EXPECT_GE(v.encode("").length(), 1u);
}

TEST(Encode, RowsAreTableLookups) {
  const auto v = dog_vocab();
  const auto seq = v.encode("Dog barks!");
  ASSERT_EQ(seq.length(), 2u);
  EXPECT_FALSE(seq.is_null());
  for (std::size_t l = 0; l < 2; ++l) {
    const auto id = seq.tokens()[l];
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(seq.tau().at(l, k), v.table().at(id, k));
  }
  EXPECT_EQ(seq.tokens()[0], v.id("dog"));
  EXPECT_EQ(seq.tokens()[1], v.id("barks"));
}

TEST(Encode, UnknownWordsMapToUnknownId) {
  const auto v = dog_vocab();
  const auto seq = v.encode("cat barks");
  EXPECT_EQ(seq.tokens()[0], ToyVocabulary::kUnknownId);
}

TEST(Encode, FrozenAndDeterministic) {
  const auto a = dog_vocab(), b = dog_vocab();
  EXPECT_EQ(a.encode("rain dog").tau(), b.encode("rain dog").tau());
  EXPECT_EQ(a.encode("rain dog").key(), a.encode("RAIN, dog").key());
  EXPECT_NE(ToyVocabulary({"dog"}, 8, 12).table(), ToyVocabulary({"dog"}, 8, 11).table());
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const auto v = ToyVocabulary::from_captions(std::vector<std::string>{"a dog barks", "rain falls"}, 6, 4);
  const auto path = std::filesystem::temp_directory_path() / "tango_vocab_test.txt";
  v.save(path);
  const auto back = ToyVocabulary::load(path);
  EXPECT_EQ(back.size(), v.size());
  EXPECT_EQ(back.table(), v.table());
  EXPECT_EQ(back.id("falls"), v.id("falls"));
  std::filesystem::remove(path);
}

TEST(ConcatCaptions, Examples) {
  EXPECT_EQ(concat_captions("a dog barks", "rain falls"), "a dog barks rain falls");
  EXPECT_EQ(concat_captions("x", "x"), "x x");
  EXPECT_NE(concat_captions("a", "b"), concat_captions("b", "a"));
  EXPECT_THROW(concat_captions("", "b"), ParameterError);
  EXPECT_THROW(concat_captions("a", ""), ParameterError);
}

TEST(ClassifyTemporal, Examples) {
  EXPECT_EQ(classify_temporal("A toy train running as a young boy talks followed by plastic "
                              "clanking then a child laughing"),
            EventStructure::kMultipleEvents);
  EXPECT_EQ(classify_temporal("Rolling thunder with lightning strikes"), EventStructure::kSingleEvent);
  EXPECT_EQ(classify_temporal("the aftermath"), EventStructure::kSingleEvent);
  EXPECT_EQ(classify_temporal("Birds chirp, while a car passes"), EventStructure::kMultipleEvents);
  EXPECT_EQ(classify_temporal("Speech BEFORE music"), EventStructure::kMultipleEvents);
}

TEST(ClassifyTemporal, PartitionsCaptionSets) {
  const std::vector<std::string> captions = {"rain then thunder", "dog barks", "after the bell",
                                             "thereafter silence", "wind followed by rain", ""};
  std::size_t multi = 0, single = 0;
  for (const auto& c : captions) {
    const auto e = classify_temporal(c);
    multi += e == EventStructure::kMultipleEvents;
    single += e == EventStructure::kSingleEvent;
  }
  EXPECT_EQ(multi + single, captions.size());
  EXPECT_EQ(multi, 3u);
}
