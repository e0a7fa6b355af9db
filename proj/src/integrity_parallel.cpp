// OpenMP variants of the integrity kernels. Every digest is independent, so
// generation splits over digest index; Multi digests grow linearly with k and
// use dynamic scheduling.

#include <algorithm>
#include <map>

#include "ctishare/error.hpp"
#include "ctishare/integrity.hpp"

namespace ctishare {

IntegrityHashSet generate_hashes_parallel(std::span<const DataGroup> groups,
                                          std::span<const Nonce> nonces, HashScheme scheme,
                                          HashWork* work) {
  if (groups.size() != nonces.size()) {
    throw Error(ErrorCode::NonceCountMismatch, std::to_string(groups.size()) + " groups but " +
                                                   std::to_string(nonces.size()) + " nonces");
  }
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
  IntegrityHashSet set{scheme, std::vector<Digest>(groups.size()), std::string(kHashFunctionId)};
  std::uint64_t bytes = 0;
  std::uint64_t calls = 0;

#pragma omp parallel for schedule(dynamic) reduction(+ : bytes, calls)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    HashWork local;
    const auto idx = static_cast<std::size_t>(i);
    set.digests[idx] = scheme == HashScheme::Single
                           ? detail::single_digest(nonces[idx], groups[idx], local)
                           : detail::prefix_digest(nonces[idx], groups.first(idx + 1), local);
    bytes += local.bytes_hashed;
    calls += local.hash_calls;
  }
  if (work) *work = HashWork{bytes, calls};
  return set;
}

ValidationReport validate_parallel(const DisclosurePackage& package,
                                   const IntegrityHashSet& published, HashWork* work) {
  // A Multi disclosure is a single digest; nothing to split.
  if (package.scheme == HashScheme::Multi) return validate(package, published, work);

  detail::check_package(package, published);
  std::map<int, const Nonce*> nonce_for;
  for (const auto& e : package.nonces) nonce_for[e.index] = &e.nonce;

  const auto n = static_cast<std::ptrdiff_t>(package.groups.size());
  std::vector<IndexVerdict> verdicts(package.groups.size());
  std::vector<const Nonce*> nonce_ptrs(package.groups.size());
  for (std::size_t i = 0; i < package.groups.size(); ++i) {
    nonce_ptrs[i] = nonce_for.at(package.groups[i].level);
  }
  const auto available = published.digests.size();
  std::uint64_t bytes = 0;
  std::uint64_t calls = 0;
  std::uint64_t comparisons = 0;

#pragma omp parallel for schedule(static) reduction(+ : bytes, calls, comparisons)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const auto& g = package.groups[idx];
    bool ok = false;
    if (g.level >= 1 && static_cast<std::size_t>(g.level) <= available) {
      HashWork local;
      auto digest = detail::single_digest(*nonce_ptrs[idx], g, local);
      ++comparisons;
      ok = digest_equal(digest, published.digests[static_cast<std::size_t>(g.level - 1)]);
      bytes += local.bytes_hashed;
      calls += local.hash_calls;
    }
    verdicts[idx] = {g.level, ok};
  }

  ValidationReport report;
  report.verdicts = std::move(verdicts);
  report.comparisons_performed = comparisons;
  report.pass = std::all_of(report.verdicts.begin(), report.verdicts.end(),
                            [](const auto& v) { return v.pass; });
  if (work) *work = HashWork{bytes, calls};
  return report;
}

}  // namespace ctishare
