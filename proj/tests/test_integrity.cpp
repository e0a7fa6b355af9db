#include <gtest/gtest.h>

#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "ctishare/error.hpp"
#include "ctishare/integrity.hpp"
#include "oracle/sha256_oracle.hpp"
#include "test_support.hpp"

using namespace ctishare;
using testing_support::groups_of;

namespace {

std::vector<Nonce> zero_nonces(std::size_t n) { return std::vector<Nonce>(n, Nonce{}); }

std::set<int> prefix(int k) {
  std::set<int> s;
  for (int i = 1; i <= k; ++i) s.insert(i);
  return s;
}

std::vector<oracle::Bytes> oracle_groups(const std::vector<DataGroup>& groups) {
  std::vector<oracle::Bytes> out;
  for (const auto& g : groups) out.emplace_back(g.payload.begin(), g.payload.end());
  return out;
}

std::vector<oracle::Bytes> oracle_nonces(const std::vector<Nonce>& nonces) {
  std::vector<oracle::Bytes> out;
  for (const auto& n : nonces) out.emplace_back(n.begin(), n.end());
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(GenerateHashes, FrozenVectorsSingle) {
  auto set = generate_hashes(groups_of({"a", "b", "c"}), zero_nonces(3), HashScheme::Single);
  ASSERT_EQ(set.digests.size(), 3u);
  EXPECT_EQ(to_hex(set.digests[0]), "27598abce977b88ab6016112a8767b2cdf3ae3f8d1187af80f324fcf09cc5419");
  EXPECT_EQ(to_hex(set.digests[1]), "407b225826c8e7f6dca7b6feabce21d04fdc6b80d581c45625287de91d0fdd57");
  EXPECT_EQ(to_hex(set.digests[2]), "8a5e25c72d7decd5ae52ab1134a983d57e2d54757c13386b6ea661382538e9d0");
  EXPECT_EQ(set.hash_function_id, "sha256");
}

TEST(GenerateHashes, FrozenVectorsMulti) {
  auto set = generate_hashes(groups_of({"a", "b", "c"}), zero_nonces(3), HashScheme::Multi);
  ASSERT_EQ(set.digests.size(), 3u);
  EXPECT_EQ(to_hex(set.digests[0]), "27598abce977b88ab6016112a8767b2cdf3ae3f8d1187af80f324fcf09cc5419");
  EXPECT_EQ(to_hex(set.digests[1]), "8d7fe6c7f3732c5909f8a7091bfd325cf77f1ca9c1c555a57e1bb97d6d2617f1");
  EXPECT_EQ(to_hex(set.digests[2]), "2206a69969cf8868a774ca1b50f415f8e3dd16f88639a889e6b9451cd27d4035");
}

TEST(GenerateHashes, FrozenVectorsAgreeWithOracle) {
  auto groups = groups_of({"a", "b", "c"});
  auto nonces = zero_nonces(3);
  auto single = oracle::single_digests(oracle_groups(groups), oracle_nonces(nonces));
  auto multi = oracle::prefix_digests(oracle_groups(groups), oracle_nonces(nonces));
  EXPECT_EQ(oracle::hex(single[1]), "407b225826c8e7f6dca7b6feabce21d04fdc6b80d581c45625287de91d0fdd57");
  EXPECT_EQ(oracle::hex(multi[2]), "2206a69969cf8868a774ca1b50f415f8e3dd16f88639a889e6b9451cd27d4035");
}

TEST(GenerateHashes, RandomInstancesAgreeWithOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 1 + rng() % 8;
    std::vector<DataGroup> groups;
    for (std::size_t i = 0; i < n; ++i) {
      groups.push_back({static_cast<int>(i) + 1, testing_support::random_bytes(rng, 1 + rng() % 300)});
    }
    auto nonces = draw_nonces(n);
    auto s = generate_hashes(groups, nonces, HashScheme::Single);
    auto m = generate_hashes(groups, nonces, HashScheme::Multi);
    auto os = oracle::single_digests(oracle_groups(groups), oracle_nonces(nonces));
    auto om = oracle::prefix_digests(oracle_groups(groups), oracle_nonces(nonces));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(to_hex(s.digests[i]), oracle::hex(os[i]));
      EXPECT_EQ(to_hex(m.digests[i]), oracle::hex(om[i]));
    }
  }
}

TEST(GenerateHashes, SchemesCoincideAtOneGroup) {
  auto groups = groups_of({"only"});
  auto nonces = draw_nonces(1);
  EXPECT_EQ(generate_hashes(groups, nonces, HashScheme::Single).digests,
            generate_hashes(groups, nonces, HashScheme::Multi).digests);
}

TEST(GenerateHashes, NonceCountMismatch) {
  EXPECT_EQ(code_of([] { generate_hashes(groups_of({"a", "b"}), zero_nonces(1), HashScheme::Single); }),
            ErrorCode::NonceCountMismatch);
}

TEST(GenerateHashes, ByteWorkMatchesIndependentFormula) {
  std::mt19937_64 rng(22);
  for (int n : {1, 2, 5, 17}) {
    std::vector<DataGroup> groups;
    std::vector<std::uint64_t> sizes;
    for (int i = 0; i < n; ++i) {
      auto len = 1 + rng() % 500;
      groups.push_back({i + 1, testing_support::random_bytes(rng, len)});
      sizes.push_back(len + 4);
    }
    std::uint64_t single = 0, multi = 0, running = 0;
    for (auto s : sizes) {
      single += s + 32;
      running += s;
      multi += 32 + running;
    }
    auto nonces = draw_nonces(n);
    HashWork ws, wm;
    generate_hashes(groups, nonces, HashScheme::Single, &ws);
    generate_hashes(groups, nonces, HashScheme::Multi, &wm);
    EXPECT_EQ(ws.bytes_hashed, single);
    EXPECT_EQ(wm.bytes_hashed, multi);
    EXPECT_EQ(modeled_bytes_hashed(groups, HashScheme::Single), single);
    EXPECT_EQ(modeled_bytes_hashed(groups, HashScheme::Multi), multi);
    EXPECT_EQ(ws.hash_calls, static_cast<std::uint64_t>(n));
    if (n >= 2) EXPECT_GT(wm.bytes_hashed, ws.bytes_hashed);
  }
}

TEST(GenerateHashes, SampleFiftyGroupsMultiHashesMoreBytes) {
  auto groups = segment(load_bundle(testing_support::fixture("bundles/sample_94kb.json")));
  ASSERT_EQ(groups.size(), 50u);
  HashWork ws, wm;
  auto nonces = draw_nonces(groups.size());
  generate_hashes(groups, nonces, HashScheme::Single, &ws);
  generate_hashes(groups, nonces, HashScheme::Multi, &wm);
  EXPECT_GT(wm.bytes_hashed, ws.bytes_hashed);
}

TEST(GenerateHashes, ParallelMatchesSerial) {
  std::mt19937_64 rng(23);
  std::vector<DataGroup> groups;
  for (int i = 0; i < 40; ++i) groups.push_back({i + 1, testing_support::random_bytes(rng, 1 + rng() % 2000)});
  auto nonces = draw_nonces(groups.size());
  for (auto scheme : {HashScheme::Single, HashScheme::Multi}) {
    HashWork a, b;
    auto serial = generate_hashes(groups, nonces, scheme, &a);
    auto parallel = generate_hashes_parallel(groups, nonces, scheme, &b);
    EXPECT_EQ(serial, parallel);
    EXPECT_EQ(a.bytes_hashed, b.bytes_hashed);
    EXPECT_EQ(a.hash_calls, b.hash_calls);

    auto pkg = make_disclosure(groups, nonces, scheme, prefix(25));
    auto rs = validate(pkg, serial);
    auto rp = validate_parallel(pkg, serial);
    EXPECT_EQ(rs.pass, rp.pass);
    EXPECT_EQ(rs.comparisons_performed, rp.comparisons_performed);
    pkg.groups[3].payload[0] ^= 1;
    EXPECT_FALSE(validate(pkg, serial).pass);
    EXPECT_FALSE(validate_parallel(pkg, serial).pass);
  }
}

TEST(DrawNonces, Basics) {
  EXPECT_TRUE(draw_nonces(0).empty());
  auto s1 = seed_from_u64(1), s2 = seed_from_u64(2);
  EXPECT_EQ(draw_nonces(5, s1), draw_nonces(5, s1));
  EXPECT_NE(draw_nonces(5, s1)[0], draw_nonces(5, s2)[0]);
  auto many = draw_nonces(10000);
  std::set<Nonce> unique(many.begin(), many.end());
  EXPECT_EQ(unique.size(), 10000u);
}

TEST(Validate, EmptyDisclosureIsVacuousPass) {
  auto groups = groups_of({"a", "b", "c"});
  auto nonces = draw_nonces(3);
  for (auto scheme : {HashScheme::Single, HashScheme::Multi}) {
    auto set = generate_hashes(groups, nonces, scheme);
    auto report = validate(make_disclosure(groups, nonces, scheme, {}), set);
    EXPECT_TRUE(report.pass);
    EXPECT_EQ(report.comparisons_performed, 0u);
  }
}

TEST(Validate, SingleThreeOfFive) {
  auto groups = groups_of({"g1", "g2", "g3", "g4", "g5"});
  auto nonces = draw_nonces(5);
  auto set = generate_hashes(groups, nonces, HashScheme::Single);
  auto report = validate(make_disclosure(groups, nonces, HashScheme::Single, {1, 3, 5}), set);
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.comparisons_performed, 3u);
  ASSERT_EQ(report.verdicts.size(), 3u);
  EXPECT_EQ(report.verdicts[1].index, 3);
}

TEST(Validate, MultiPrefixFlipFailsWithOneComparison) {
  auto groups = groups_of({"g1", "g2", "g3", "g4", "g5"});
  auto nonces = draw_nonces(5);
  auto set = generate_hashes(groups, nonces, HashScheme::Multi);
  auto pkg = make_disclosure(groups, nonces, HashScheme::Multi, prefix(3));
  ASSERT_EQ(pkg.nonces.size(), 1u);
  EXPECT_EQ(pkg.nonces[0].index, 3);
  for (std::size_t pos = 0; pos < pkg.groups[1].payload.size(); ++pos) {
    auto tampered = pkg;
    tampered.groups[1].payload[pos] ^= 0x01;
    auto report = validate(tampered, set);
    EXPECT_FALSE(report.pass);
    EXPECT_EQ(report.comparisons_performed, 1u);
  }
}

TEST(Validate, ComparisonCounts) {
  auto groups = groups_of({"g1", "g2", "g3", "g4", "g5"});
  auto nonces = draw_nonces(5);
  auto single = generate_hashes(groups, nonces, HashScheme::Single);
  auto multi = generate_hashes(groups, nonces, HashScheme::Multi);
  for (int k = 0; k <= 5; ++k) {
    auto rs = validate(make_disclosure(groups, nonces, HashScheme::Single, prefix(k)), single);
    auto rm = validate(make_disclosure(groups, nonces, HashScheme::Multi, prefix(k)), multi);
    EXPECT_TRUE(rs.pass && rm.pass);
    EXPECT_EQ(rs.comparisons_performed, static_cast<std::uint64_t>(k));
    EXPECT_EQ(rm.comparisons_performed, k == 0 ? 0u : 1u);
  }
}

TEST(Validate, TamperSoundnessExhaustiveSmall) {
  auto groups = groups_of({"alpha", "beta!", "gamma", "delta"});
  auto nonces = draw_nonces(4);
  for (auto scheme : {HashScheme::Single, HashScheme::Multi}) {
    auto set = generate_hashes(groups, nonces, scheme);
    auto pkg = make_disclosure(groups, nonces, scheme, prefix(4));
    for (std::size_t g = 0; g < pkg.groups.size(); ++g) {
      for (std::size_t pos = 0; pos < pkg.groups[g].payload.size(); ++pos) {
        for (int bit = 0; bit < 8; ++bit) {
          auto t = pkg;
          t.groups[g].payload[pos] ^= static_cast<std::uint8_t>(1 << bit);
          EXPECT_FALSE(validate(t, set).pass);
        }
      }
    }
    for (std::size_t n = 0; n < pkg.nonces.size(); ++n) {
      for (std::size_t pos = 0; pos < 32; ++pos) {
        for (int bit = 0; bit < 8; ++bit) {
          auto t = pkg;
          t.nonces[n].nonce[pos] ^= static_cast<std::uint8_t>(1 << bit);
          EXPECT_FALSE(validate(t, set).pass);
        }
      }
    }
  }
}

TEST(Validate, PackageShapeErrors) {
  auto groups = groups_of({"a", "b", "c"});
  auto nonces = draw_nonces(3);
  auto single = generate_hashes(groups, nonces, HashScheme::Single);
  auto multi = generate_hashes(groups, nonces, HashScheme::Multi);

  auto spkg = make_disclosure(groups, nonces, HashScheme::Single, {1, 2});
  EXPECT_EQ(code_of([&] { validate(spkg, multi); }), ErrorCode::SchemeMismatch);
  EXPECT_EQ(code_of([&] { make_disclosure(groups, nonces, HashScheme::Multi, {2, 3}); }),
            ErrorCode::NonPrefixDisclosure);

  auto mpkg = make_disclosure(groups, nonces, HashScheme::Multi, prefix(2));
  auto gap = mpkg;
  gap.groups.erase(gap.groups.begin());
  EXPECT_EQ(code_of([&] { validate(gap, multi); }), ErrorCode::NonPrefixDisclosure);

  auto wrong_nonce = mpkg;
  wrong_nonce.nonces[0].index = 1;
  EXPECT_EQ(code_of([&] { validate(wrong_nonce, multi); }), ErrorCode::MalformedPackage);

  auto missing_nonce = spkg;
  missing_nonce.nonces.pop_back();
  EXPECT_EQ(code_of([&] { validate(missing_nonce, single); }), ErrorCode::MalformedPackage);

  auto other_hash = single;
  other_hash.hash_function_id = "md5";
  EXPECT_EQ(code_of([&] { validate(spkg, other_hash); }), ErrorCode::MalformedPackage);
}

TEST(Validate, OutOfRangeLevelFails) {
  auto groups = groups_of({"a", "b"});
  auto nonces = draw_nonces(2);
  auto set = generate_hashes(groups, nonces, HashScheme::Single);
  auto pkg = make_disclosure(groups, nonces, HashScheme::Single, {1});
  pkg.groups[0].level = 7;
  pkg.nonces[0].index = 7;
  EXPECT_FALSE(validate(pkg, set).pass);
}

TEST(Privacy, IdenticalContentGivesDisjointDigests) {
  auto groups = groups_of({"same", "content", "here"});
  for (auto scheme : {HashScheme::Single, HashScheme::Multi}) {
    auto a = generate_hashes(groups, draw_nonces(3), scheme);
    auto b = generate_hashes(groups, draw_nonces(3), scheme);
    std::set<Digest> da(a.digests.begin(), a.digests.end());
    for (const auto& d : b.digests) EXPECT_FALSE(da.contains(d));
  }
}

TEST(Serialization, HashSetJson) {
  auto set = generate_hashes(groups_of({"a", "b", "c"}), zero_nonces(3), HashScheme::Multi);
  auto text = serialize(set);
  EXPECT_EQ(text.rfind(R"({"scheme":"multi","hash":"sha256","digests":["27598abce977)", 0), 0u) << text;
  EXPECT_EQ(hash_set_from_json(nlohmann::ordered_json::parse(text)), set);
  auto upper = nlohmann::ordered_json::parse(text);
  upper["digests"][0] = "27598ABCE977B88AB6016112A8767B2CDF3AE3F8D1187AF80F324FCF09CC5419";
  EXPECT_EQ(code_of([&] { hash_set_from_json(upper); }), ErrorCode::SchemaError);
}

TEST(Serialization, DisclosureRoundTrip) {
  auto groups = groups_of({"a", "b", "c"});
  auto nonces = draw_nonces(3);
  for (auto scheme : {HashScheme::Single, HashScheme::Multi}) {
    auto pkg = make_disclosure(groups, nonces, scheme, prefix(2));
    EXPECT_EQ(disclosure_from_json(to_json(pkg)), pkg);
  }
}

TEST(Schemes, Names) {
  EXPECT_EQ(scheme_from_string("single"), HashScheme::Single);
  EXPECT_EQ(to_string(HashScheme::Multi), "multi");
  EXPECT_EQ(code_of([] { scheme_from_string("both"); }), ErrorCode::SchemaError);
}
