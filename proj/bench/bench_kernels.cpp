// Serial reference kernels against the OpenMP kernels: checks that both
// produce identical digests and verdicts, then prints timings.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctishare/bench.hpp"
#include "ctishare/integrity.hpp"

using namespace ctishare;

namespace {

template <typename Fn>
double mean_seconds(int iterations, Fn&& fn) {
  fn();
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < iterations; ++i) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / iterations;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP integrity kernels"};
  int iterations = 50;
  std::vector<int> sizes_kb{94, 500};
  std::vector<int> group_counts{5, 20, 50};
  app.add_option("--iterations", iterations)->check(CLI::PositiveNumber);
  app.add_option("--sizes", sizes_kb, "Data sizes in KiB")->delimiter(',');
  app.add_option("--groups", group_counts, "Group counts")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::printf("threads %d\n", omp_get_max_threads());
  std::printf("%-7s %-6s %-6s %12s %12s %12s %12s %s\n", "size_kb", "groups", "scheme", "gen_ser_ms",
              "gen_omp_ms", "val_ser_ms", "val_omp_ms", "equal");
  bool all_equal = true;
  for (int kb : sizes_kb) {
    for (int n : group_counts) {
      auto groups = gen_synthetic(static_cast<std::size_t>(kb) * kKiB, n, 1);
      auto nonces = draw_nonces(groups.size(), seed_from_u64(1));
      std::set<int> levels;
      for (int i = 1; i <= n; ++i) levels.insert(i);
      for (auto scheme : {HashScheme::Single, HashScheme::Multi}) {
        auto serial = generate_hashes(groups, nonces, scheme);
        auto parallel = generate_hashes_parallel(groups, nonces, scheme);
        auto pkg = make_disclosure(groups, nonces, scheme, levels);
        auto vs = validate(pkg, serial);
        auto vp = validate_parallel(pkg, serial);
        bool equal = serial == parallel && vs.pass == vp.pass &&
                     vs.comparisons_performed == vp.comparisons_performed;
        all_equal = all_equal && equal;

        double gs = mean_seconds(iterations, [&] { generate_hashes(groups, nonces, scheme); });
        double gp = mean_seconds(iterations, [&] { generate_hashes_parallel(groups, nonces, scheme); });
        double ts = mean_seconds(iterations, [&] { validate(pkg, serial); });
        double tp = mean_seconds(iterations, [&] { validate_parallel(pkg, serial); });
        std::printf("%-7d %-6d %-6s %12.4f %12.4f %12.4f %12.4f %s\n", kb, n,
                    std::string(to_string(scheme)).c_str(), gs * 1e3, gp * 1e3, ts * 1e3, tp * 1e3,
                    equal ? "yes" : "NO");
      }
    }
  }
  return all_equal ? 0 : 1;
}
