#pragma once

// Integrity-hash timing harness: generation, validation of a disclosure and a
// whole-data baseline hash, over synthetic or sample data split into groups.
// Runs single-threaded with the serial kernels.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctishare/integrity.hpp"

namespace ctishare {

inline constexpr std::size_t kKiB = 1024;

enum class DataKind { Sample, Synthetic };
std::string_view to_string(DataKind kind);

struct BenchCase {
  DataKind data_kind = DataKind::Synthetic;
  std::size_t data_size_bytes = 0;
  int group_count = 1;
  HashScheme scheme = HashScheme::Single;
  int iterations = 1000;
  int repeats = 3;  // reported time is the median of this many means
  std::optional<int> disclosed;  // validate levels 1..k instead of all
  std::uint64_t seed = 1;
};

struct BenchResult {
  double gen_time = 0;       // seconds, mean per call
  double val_time = 0;
  double baseline_time = 0;  // one SHA-256 over the whole data
  std::uint64_t bytes_hashed_gen = 0;
  std::uint64_t bytes_modeled = 0;
  std::uint64_t val_comparisons = 0;
};

/// Deterministic pseudo-random payloads totalling size_bytes; even split with
/// the remainder on the last group. Throws TooManyGroups when size < count.
std::vector<DataGroup> gen_synthetic(std::size_t size_bytes, int group_count, std::uint64_t seed);

/// Same split rule applied to existing bytes.
std::vector<DataGroup> partition(ByteView data, int group_count);

BenchResult run_bench(const BenchCase& bench_case, std::span<const DataGroup> groups);
/// Builds synthetic data for the case. Sample cases need the overload above.
BenchResult run_bench(const BenchCase& bench_case);

// Matrix file:
// {
//   "iterations": 200, "repeats": 5, "seed": 1,
//   "sample": "../bundles/sample_94kb.json",     // relative to the matrix file
//   "schemes": ["single", "multi"],
//   "cases": [
//     {"data": "sample", "groups": [10, 20, 50]},
//     {"data": "synthetic", "size_kb": [50, 200, 500], "groups": [5, 20, 50]}
//   ]
// }
// A sample case uses the whole sample file unless "size_kb" is given.
struct MatrixConfig {
  int iterations = 1000;
  int repeats = 3;
  std::uint64_t seed = 1;
  std::filesystem::path sample_path;
  std::vector<BenchCase> cases;
};

MatrixConfig matrix_from_json(const nlohmann::ordered_json& doc,
                              const std::filesystem::path& base_dir);
MatrixConfig load_matrix(const std::filesystem::path& path);

/// Check cells hold "pass", "fail", "na", or a recorded value.
struct MatrixRow {
  BenchCase bench_case;
  BenchResult result;
  std::string bytes_model_ok;
  std::string gen_ratio;          // multi rows: gen(Multi)/gen(Single) of the same cell
  std::string gen_ratio_ok;       // asserted on sample data at 50 groups
  std::string multi_gen_growth;   // gen(Multi) strictly increasing in groups at fixed size
  std::string single_gen_growth;  // gen(Single) non-decreasing in groups at fixed size
  std::string val_order;          // val(Single) >= val(Multi); recorded only at >= 200 KB
};

struct MatrixReport {
  std::vector<MatrixRow> rows;
  double wall_seconds = 0;

  static const char* csv_header();
  std::string to_csv() const;
  /// "<row label>: <check>" for every asserted check that failed.
  std::vector<std::string> failures() const;
};

MatrixReport run_matrix(const MatrixConfig& config);

}  // namespace ctishare
