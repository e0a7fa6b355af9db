#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <thread>

#include "ctishare/content_store.hpp"
#include "ctishare/error.hpp"
#include "oracle/sha256_oracle.hpp"
#include "test_support.hpp"

using namespace ctishare;
using testing_support::TempDir;

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

}  // namespace

TEST(ContentStore, PutAbcKnownCid) {
  TempDir dir;
  ContentStore store(dir.path());
  auto cid = store.put(as_view("abc"));
  EXPECT_EQ(cid.str(), "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(cid.str(), "sha256:" + oracle::hex(oracle::sha256(oracle::bytes_of("abc"))));
  EXPECT_EQ(store.object_path(cid),
            dir.path() / "objects" / "ba" / "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_TRUE(std::filesystem::exists(store.object_path(cid)));
}

TEST(ContentStore, IdempotentPut) {
  TempDir dir;
  ContentStore store(dir.path());
  auto a = store.put(as_view("x"));
  auto b = store.put(as_view("x"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(store.size(), 1u);
}

TEST(ContentStore, EmptyBlob) {
  TempDir dir;
  ContentStore store(dir.path());
  EXPECT_EQ(code_of([&] { store.put({}); }), ErrorCode::EmptyBlob);
}

TEST(ContentStore, RoundTripRandomBlobs) {
  TempDir dir;
  ContentStore store(dir.path());
  std::mt19937_64 rng(51);
  for (int i = 0; i < 200; ++i) {
    auto blob = testing_support::random_bytes(rng, 1 + rng() % 3000);
    EXPECT_EQ(store.get(store.put(blob)), blob);
  }
}

TEST(ContentStore, NotFoundAndInvalidCid) {
  TempDir dir;
  ContentStore store(dir.path());
  EXPECT_EQ(code_of([&] { store.get(Cid::of(as_view("never stored"))); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([] { Cid::parse("md5:abc"); }), ErrorCode::InvalidCid);
  EXPECT_EQ(code_of([] { Cid::parse("sha256:ABC"); }), ErrorCode::InvalidCid);
  auto cid = Cid::of(as_view("abc"));
  EXPECT_EQ(Cid::parse(cid.str()), cid);
}

TEST(ContentStore, CorruptionDetected) {
  TempDir dir;
  ContentStore store(dir.path());
  auto cid = store.put(as_view("important bytes"));
  auto other = store.put(as_view("untouched"));
  {
    std::fstream f(store.object_path(cid), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('X');
  }
  EXPECT_EQ(code_of([&] { store.get(cid); }), ErrorCode::IntegrityError);
  auto findings = store.audit();
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].cid, cid);
  EXPECT_EQ(to_string(store.get(other)), "untouched");
}

TEST(ContentStore, SurvivesReopen) {
  TempDir dir;
  Cid cid;
  {
    ContentStore store(dir.path());
    cid = store.put(as_view("persisted"));
  }
  ContentStore reopened(dir.path());
  EXPECT_EQ(reopened.size(), 1u);
  EXPECT_TRUE(reopened.contains(cid));
  EXPECT_EQ(to_string(reopened.get(cid)), "persisted");
  EXPECT_TRUE(reopened.audit().empty());
}

TEST(ContentStore, ConcurrentPutsOfSameBytes) {
  TempDir dir;
  ContentStore store(dir.path());
  std::vector<std::thread> threads;
  std::vector<Cid> cids(8);
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        cids[t] = store.put(as_view("shared-" + std::to_string(i % 5)));
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.size(), 5u);
  EXPECT_TRUE(store.audit().empty());
}
