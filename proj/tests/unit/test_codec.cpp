// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "seqattr/codec/codec.hpp"
#include "seqattr/errors.hpp"
#include "seqattr/numkit/random.hpp"

namespace seqattr::codec {
namespace {

const MappingTable& table() {
  static const MappingTable t = MappingTable::pedestrian_default();
  return t;
}

AttributeRecord random_record(nk::Rng& rng, const MappingTable& t, bool allow_partial) {
  AttributeRecord r;
  for (const AttributeGroup& g : t.groups()) {
    if (allow_partial && rng.bernoulli(0.3)) continue;
    r.values[g.name] = g.values[rng.below(g.values.size())];
  }
  if (r.values.empty()) r.values[t.group(0).name] = t.group(0).values[0];
  return r;
}

TEST(MappingTable, DefaultTableIsABijection) {
  const MappingTable& t = table();
  EXPECT_EQ(t.label_count(), 17u);
  EXPECT_EQ(t.group_count(), 6u);
  for (int label = 1; label <= 17; ++label) {
    const auto ref = t.lookup(label);
    ASSERT_TRUE(ref.has_value());
    EXPECT_EQ(t.label_of(ref->group, ref->value), label);
  }
  EXPECT_FALSE(t.lookup(0));
  EXPECT_FALSE(t.lookup(18));
}

TEST(MappingTable, StartSymbolAvoidsLabels) {
  EXPECT_EQ(table().start_symbol(), 100);
  EXPECT_EQ(table().vocab_size(), 19u);
  EXPECT_EQ(table().vocab_index(100), 18u);
  EXPECT_EQ(table().vocab_index(0), 0u);
  EXPECT_EQ(table().vocab_index(17), 17u);
  EXPECT_THROW(table().vocab_index(18), CodecError);

  std::vector<AttributeGroup> big{{"g", {}}};
  for (int i = 0; i < 120; ++i) big[0].values.push_back("v" + std::to_string(i));
  const MappingTable wide = MappingTable::contiguous(big);
  EXPECT_EQ(wide.start_symbol(), 121);
  EXPECT_EQ(wide.vocab_index(121), 121u);
}

TEST(MappingTable, ParseRoundTripsThroughText) {
  const MappingTable back = MappingTable::parse(table().format());
  EXPECT_EQ(back, table());
}

TEST(MappingTable, LoadsFileWithComments) {
  const auto path = std::filesystem::temp_directory_path() / "seqattr_table_test.tsv";
  {
    std::ofstream out(path);
    out << "# comment\n\ncolor\tred\t2\r\ncolor\tblue\t1\nsize\tbig\t3\n";
  }
  const MappingTable t = MappingTable::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(t.label_of("color", "red"), 2);
  EXPECT_EQ(t.label_of("color", "blue"), 1);
  EXPECT_EQ(t.group_count(), 2u);
}

TEST(MappingTable, RejectsBrokenTables) {
  EXPECT_THROW(MappingTable::parse("a\tx\t1\na\ty\t1\n"), CodecError);   // label reused
  EXPECT_THROW(MappingTable::parse("a\tx\t1\na\ty\t3\n"), CodecError);   // gap
  EXPECT_THROW(MappingTable::parse("a\tx\t1\na\tx\t2\n"), CodecError);   // pair reused
  EXPECT_THROW(MappingTable::parse("a\tx\n"), CodecError);                // missing field
  EXPECT_THROW(MappingTable::parse("a\tx\tone\n"), CodecError);
  EXPECT_THROW(MappingTable::parse(""), CodecError);
  EXPECT_THROW(MappingTable::parse("# start_symbol 1\na\tx\t1\n"), CodecError);
}

TEST(MappingTable, DerivedTablesRenumber) {
  const MappingTable dropped = table().without_group("hat");
  EXPECT_EQ(dropped.group_count(), 5u);
  EXPECT_EQ(dropped.label_count(), 15u);
  EXPECT_FALSE(dropped.group_index("hat"));
  const MappingTable reversed = table().with_group_order({5, 4, 3, 2, 1, 0});
  EXPECT_EQ(reversed.group(0).name, "backpack");
  EXPECT_EQ(reversed.label_of("backpack", "no"), 1);
  EXPECT_THROW(table().with_group_order({0, 0, 1, 2, 3, 4}), CodecError);
}

TEST(EncodeRecord, WorkedExample) {
  AttributeRecord r;
  r.values = {{"gender", "male"}, {"hat", "yes"}, {"up_color", "red"}};
  EXPECT_EQ(encode_record(r, table()), (LabelSequence{1, 5, 8}));
}

TEST(EncodeRecord, EmptyRecordIsRejected) {
  EXPECT_THROW(encode_record({}, table()), CodecError);
}

TEST(EncodeRecord, FullRecordFollowsGroupOrder) {
  AttributeRecord r;
  r.values = {{"backpack", "yes"}, {"low_color", "gray"}, {"up_color", "green"},
              {"hat", "no"},       {"sleeve", "long"},    {"gender", "female"}};
  EXPECT_EQ(encode_record(r, table()), (LabelSequence{2, 4, 6, 11, 14, 17}));
}

TEST(EncodeRecord, UnknownValueIsNamed) {
  AttributeRecord r;
  r.values = {{"up_color", "purpple"}};
  try {
    encode_record(r, table());
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_NE(std::string(e.what()).find("purpple"), std::string::npos);
  }
  r.values = {{"shoes", "red"}};
  EXPECT_THROW(encode_record(r, table()), CodecError);
}

TEST(DecodeSequence, InverseOfWorkedExample) {
  const std::vector<int> y{1, 5, 8};
  const AttributeRecord r = decode_sequence(y, table());
  const std::map<std::string, std::string> expected{
      {"gender", "male"}, {"hat", "yes"}, {"up_color", "red"}};
  EXPECT_EQ(r.values, expected);
}

TEST(DecodeSequence, FirstOccurrenceWins) {
  const std::vector<int> dup{1, 1, 1};
  EXPECT_EQ(decode_sequence(dup, table()).values,
            (std::map<std::string, std::string>{{"gender", "male"}}));
  const std::vector<int> clash{2, 1};
  EXPECT_EQ(decode_sequence(clash, table()).values.at("gender"), "female");
}

TEST(DecodeSequence, OutOfRangeIgnored) {
  const MappingTable small = MappingTable::contiguous(
      {{"gender", {"male", "female"}}, {"other", {"a", "b", "c", "d", "e", "f", "g", "h"}}});
  ASSERT_EQ(small.label_count(), 10u);
  const std::vector<int> y{99, 1, 0, -3};
  EXPECT_EQ(decode_sequence(y, small).values,
            (std::map<std::string, std::string>{{"gender", "male"}}));
}

TEST(Codec, RoundTripOverRandomRecords) {
  nk::Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const AttributeRecord r = random_record(rng, table(), true);
    const LabelSequence y = encode_record(r, table());
    EXPECT_NO_THROW(validate_sequence(y, table()));
    ASSERT_EQ(decode_sequence(y, table()).values, r.values);
  }
}

TEST(Codec, GroupOrderStableUnderReload) {
  const MappingTable reloaded = MappingTable::parse(table().format());
  nk::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const AttributeRecord r = random_record(rng, table(), true);
    EXPECT_EQ(encode_record(r, table()), encode_record(r, reloaded));
  }
}

TEST(ValidateSequence, RejectsBadSequences) {
  const std::vector<int> empty;
  EXPECT_THROW(validate_sequence(empty, table()), CodecError);
  const std::vector<int> same_group{1, 2};
  EXPECT_THROW(validate_sequence(same_group, table()), CodecError);
  const std::vector<int> out{1, 40};
  EXPECT_THROW(validate_sequence(out, table()), CodecError);
}

TEST(ExtendWithBlanks, WorkedExample) {
  const std::vector<int> y{1, 5, 8};
  EXPECT_EQ(extend_with_blanks(y), (std::vector<int>{0, 1, 0, 5, 0, 8, 0}));
  const std::vector<int> single{7};
  EXPECT_EQ(extend_with_blanks(single), (std::vector<int>{0, 7, 0}));
}

TEST(ExtendWithBlanks, LengthLawAndLayout) {
  nk::Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    std::vector<int> y(1 + rng.below(6));
    for (int& v : y) v = 1 + static_cast<int>(rng.below(17));
    const auto ext = extend_with_blanks(y);
    ASSERT_EQ(ext.size(), 2 * y.size() + 1);
    for (std::size_t s = 0; s < ext.size(); ++s) {
      EXPECT_EQ(ext[s], s % 2 == 0 ? kCtcBlank : y[s / 2]);
    }
  }
}

TEST(PrepareDecoderIo, WorkedExample) {
  const std::vector<int> y{1, 5, 8};
  const DecoderIo io = prepare_decoder_io(y, table(), 6);
  EXPECT_EQ(io.target, (std::vector<int>{1, 5, 8, 0, 0, 0}));
  EXPECT_EQ(io.input, (std::vector<int>{100, 1, 5, 8, 0, 0}));
}

TEST(PrepareDecoderIo, BoundaryAndErrors) {
  const std::vector<int> y{1, 3, 5, 7, 12};
  const DecoderIo io = prepare_decoder_io(y, table(), 6);
  EXPECT_EQ(io.input, (std::vector<int>{100, 1, 3, 5, 7, 12}));
  EXPECT_EQ(io.target, (std::vector<int>{1, 3, 5, 7, 12, 0}));
  EXPECT_THROW(prepare_decoder_io(y, table(), 5), LengthError);
}

TEST(PrepareDecoderIo, ShiftingLeftRecoversTarget) {
  nk::Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const LabelSequence y = encode_record(random_record(rng, table(), true), table());
    const DecoderIo io = prepare_decoder_io(y, table(), 8);
    std::vector<int> shifted(io.input.begin() + 1, io.input.end());
    shifted.push_back(kDecoderPad);
    EXPECT_EQ(io.input[0], table().start_symbol());
    EXPECT_EQ(shifted, io.target);
  }
}

}  // namespace
}  // namespace seqattr::codec
