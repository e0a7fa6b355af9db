#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "ctishare/error.hpp"
#include "ctishare/model.hpp"
#include "test_support.hpp"

using namespace ctishare;
using testing_support::labeled_bundle;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

// Splits a group payload into its length-prefixed entries.
std::vector<Bytes> entries(const DataGroup& g) {
  std::vector<Bytes> out;
  std::size_t off = 0;
  while (off < g.payload.size()) {
    auto len = read_u32be(g.payload, off);
    off += 4;
    out.emplace_back(g.payload.begin() + off, g.payload.begin() + off + len);
    off += len;
  }
  EXPECT_EQ(off, g.payload.size());
  return out;
}

}  // namespace

TEST(Segment, SingleObjectAtLevelZero) {
  auto groups = segment(labeled_bundle({0}));
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].level, 0);
}

TEST(Segment, LabelsGiveMemberCounts) {
  auto groups = segment(labeled_bundle({0, 1, 1, 2}));
  ASSERT_EQ(groups.size(), 3u);
  std::vector<std::size_t> counts;
  for (const auto& g : groups) counts.push_back(entries(g).size());
  EXPECT_EQ(counts, (std::vector<std::size_t>{1, 2, 1}));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(groups[i].level, i);
}

TEST(Segment, MissingLevelRejected) {
  EXPECT_EQ(code_of([] { segment(labeled_bundle({0, 2})); }), ErrorCode::MissingLevel);
  EXPECT_EQ(code_of([] { segment(labeled_bundle({1, 2})); }), ErrorCode::MissingLevel);
}

TEST(Segment, EmptyBundleRejected) {
  EXPECT_EQ(code_of([] { segment(labeled_bundle({})); }), ErrorCode::EmptyBundle);
}

TEST(Segment, MembersSortedByIdWithFrozenEncoding) {
  CtiBundle b = labeled_bundle({0});
  b.objects.push_back({testing_support::object("zeta", "{}", ObjectType::Malware), 1});
  b.objects.push_back({testing_support::object("alpha", "[1]", ObjectType::Vulnerability), 1});
  auto groups = segment(b);
  auto e = entries(groups[1]);
  ASSERT_EQ(e.size(), 2u);
  // u32be(|id|) id u32be(|type|) type payload
  Bytes alpha{0, 0, 0, 5, 'a', 'l', 'p', 'h', 'a', 0, 0, 0, 13};
  append(alpha, as_view("vulnerability"));
  append(alpha, as_view("[1]"));
  EXPECT_EQ(e[0], alpha);
  EXPECT_EQ(e[1], object_bytes(b.objects[1].object));
}

TEST(Segment, DeterministicUnderObjectReordering) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + static_cast<int>(rng() % 6);
    std::vector<int> labels;
    for (int l = 0; l <= n; ++l) labels.push_back(l);
    for (int extra = 0; extra < 10; ++extra) labels.push_back(static_cast<int>(rng() % (n + 1)));
    auto a = labeled_bundle(labels);
    auto b = a;
    std::shuffle(b.objects.begin(), b.objects.end(), rng);
    auto ga = segment(a);
    EXPECT_EQ(ga, segment(b));
    EXPECT_EQ(ga, segment(a));
    EXPECT_EQ(static_cast<int>(ga.size()), a.max_level() + 1);
    std::size_t total = 0;
    for (const auto& g : ga) total += entries(g).size();
    EXPECT_EQ(total, a.objects.size());
  }
}

TEST(Segment, ValidationErrors) {
  auto dup = labeled_bundle({0, 1});
  dup.objects[1].object.id = dup.objects[0].object.id;
  EXPECT_EQ(code_of([&] { segment(dup); }), ErrorCode::DuplicateObjectId);

  auto empty_payload = labeled_bundle({0});
  empty_payload.objects[0].object.payload.clear();
  EXPECT_EQ(code_of([&] { segment(empty_payload); }), ErrorCode::SchemaError);

  auto no_type = labeled_bundle({0});
  no_type.metadata.erase("threat_type");
  EXPECT_EQ(code_of([&] { segment(no_type); }), ErrorCode::BadMetadata);

  auto bad_time = labeled_bundle({0});
  bad_time.metadata["created_at"] = "yesterday";
  EXPECT_EQ(code_of([&] { segment(bad_time); }), ErrorCode::BadMetadata);
}

TEST(CanonicalBytes, LengthPrefix) {
  DataGroup g{1, to_bytes("ab")};
  EXPECT_EQ(canonical_bytes(g), (Bytes{0, 0, 0, 2, 0x61, 0x62}));
  EXPECT_EQ(canonical_size(g), 6u);
}

TEST(CanonicalBytes, EmptyPayloadRejected) {
  EXPECT_EQ(code_of([] { canonical_bytes(DataGroup{1, {}}); }), ErrorCode::EmptyGroup);
}

TEST(CanonicalBytes, SampleFilePrefix) {
  auto file = read_file(testing_support::fixture("bundles/sample_94kb.json"));
  ASSERT_EQ(file.size(), 96256u);
  DataGroup g{1, file};
  auto cb = canonical_bytes(g);
  EXPECT_EQ(Bytes(cb.begin(), cb.begin() + 4), (Bytes{0x00, 0x01, 0x78, 0x00}));
  EXPECT_TRUE(std::equal(file.begin(), file.end(), cb.begin() + 4));
}

TEST(CanonicalBytes, InjectiveOnRandomPairs) {
  std::mt19937_64 rng(12);
  std::set<Bytes> seen;
  std::set<Bytes> payloads;
  for (int i = 0; i < 2000; ++i) {
    auto p = testing_support::random_bytes(rng, 1 + rng() % 8);
    auto cb = canonical_bytes(DataGroup{1, p});
    if (payloads.insert(p).second) {
      EXPECT_TRUE(seen.insert(cb).second);
    } else {
      EXPECT_TRUE(seen.contains(cb));
    }
  }
}

TEST(ParseBundle, MinimalDocument) {
  auto b = parse_bundle(R"({"bundle_id":"m","metadata":{"threat_type":"x","created_at":"2023-01-01T00:00:00Z"},
    "objects":[{"id":"i1","type":"indicator","level":0,"payload":{"pattern":"[x]"}}]})");
  EXPECT_EQ(b.max_level(), 0);
  EXPECT_EQ(b.objects.size(), 1u);
  EXPECT_EQ(b.objects[0].object.type, ObjectType::Indicator);
}

TEST(ParseBundle, PayloadCompactSortedKeys) {
  auto b = parse_bundle(R"({"bundle_id":"m","metadata":{"threat_type":"x","created_at":"2023-01-01T00:00:00Z"},
    "objects":[{"id":"i1","type":"indicator","level":0,"payload":{ "z": 1, "a": [true, null] }}]})");
  EXPECT_EQ(to_string(b.objects[0].object.payload), R"({"a":[true,null],"z":1})");
}

TEST(ParseBundle, DuplicateObjectId) {
  EXPECT_EQ(code_of([] {
              parse_bundle(R"({"bundle_id":"m","metadata":{"threat_type":"x","created_at":"2023-01-01T00:00:00Z"},
      "objects":[{"id":"i1","type":"indicator","level":0,"payload":1},
                 {"id":"i1","type":"malware","level":0,"payload":2}]})");
            }),
            ErrorCode::DuplicateObjectId);
}

TEST(ParseBundle, SchemaErrorCarriesPointer) {
  try {
    parse_bundle(R"({"bundle_id":"m","metadata":{"threat_type":"x","created_at":"2023-01-01T00:00:00Z"},
      "objects":[{"id":"i1","type":"indicator","level":0,"payload":1},{"id":"i2","type":"indicator","payload":1}]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
    EXPECT_NE(std::string(e.what()).find("/objects/1/level"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { parse_bundle("not json"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { parse_bundle(R"({"bundle_id":"m","objects":[]})"); }), ErrorCode::SchemaError);
}

TEST(ParseBundle, SampleFixtureHasFiftyGroups) {
  auto b = load_bundle(testing_support::fixture("bundles/sample_94kb.json"));
  EXPECT_EQ(b.objects.size(), 50u);
  EXPECT_EQ(segment(b).size(), 50u);
}

TEST(ObjectTypes, StixNames) {
  EXPECT_EQ(object_type_from_string("attack-pattern"), ObjectType::AttackPattern);
  EXPECT_EQ(object_type_from_string("x-custom"), ObjectType::Other);
  EXPECT_EQ(to_string(ObjectType::Vulnerability), "vulnerability");
}
