#include "ctishare/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "ctishare/error.hpp"

namespace ctishare {

using nlohmann::ordered_json;

namespace {

constexpr int kWarmups = 10;

template <typename Fn>
double median_mean_seconds(int iterations, int repeats, Fn&& fn) {
  for (int i = 0; i < kWarmups; ++i) fn();
  std::vector<double> means;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < iterations; ++i) fn();
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    means.push_back(elapsed.count() / iterations);
  }
  std::sort(means.begin(), means.end());
  return means[means.size() / 2];
}

std::vector<std::size_t> split_sizes(std::size_t size, int count) {
  if (count < 1) throw Error(ErrorCode::TooManyGroups, "group count must be at least 1");
  if (size < static_cast<std::size_t>(count)) {
    throw Error(ErrorCode::TooManyGroups, std::to_string(count) + " groups for " +
                                              std::to_string(size) + " bytes");
  }
  std::vector<std::size_t> sizes(count, size / count);
  sizes.back() += size % count;
  return sizes;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string row_label(const BenchCase& c) {
  return std::string(to_string(c.data_kind)) + " " + std::to_string(c.data_size_bytes / kKiB) +
         "KB " + std::to_string(c.group_count) + "g " + std::string(to_string(c.scheme));
}

}  // namespace

std::string_view to_string(DataKind kind) {
  return kind == DataKind::Sample ? "sample" : "synthetic";
}

std::vector<DataGroup> gen_synthetic(std::size_t size_bytes, int group_count, std::uint64_t seed) {
  auto sizes = split_sizes(size_bytes, group_count);
  Bytes data(size_bytes);
  ensure_crypto_ready();
  deterministic_fill(data, seed_from_u64(seed));
  return partition(data, group_count);
}

std::vector<DataGroup> partition(ByteView data, int group_count) {
  auto sizes = split_sizes(data.size(), group_count);
  std::vector<DataGroup> groups;
  groups.reserve(sizes.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto part = data.subspan(offset, sizes[i]);
    groups.push_back(DataGroup{static_cast<int>(i) + 1, Bytes(part.begin(), part.end())});
    offset += sizes[i];
  }
  return groups;
}

BenchResult run_bench(const BenchCase& c, std::span<const DataGroup> groups) {
  const int n = static_cast<int>(groups.size());
  auto nonces = draw_nonces(groups.size(), seed_from_u64(c.seed ^ 0x6e6f6e6365ULL));

  BenchResult r;
  HashWork work;
  auto published = generate_hashes(groups, nonces, c.scheme, &work);
  r.bytes_hashed_gen = work.bytes_hashed;
  r.bytes_modeled = modeled_bytes_hashed(groups, c.scheme);

  int k = c.disclosed.value_or(n);
  std::set<int> levels;
  for (int i = 1; i <= k; ++i) levels.insert(i);
  auto package = make_disclosure(groups, nonces, c.scheme, levels);
  r.val_comparisons = validate(package, published).comparisons_performed;

  Bytes whole;
  for (const auto& g : groups) append(whole, g.payload);

  r.gen_time = median_mean_seconds(c.iterations, c.repeats, [&] {
    auto set = generate_hashes(groups, nonces, c.scheme);
    if (set.digests.empty()) std::abort();
  });
  r.val_time = median_mean_seconds(c.iterations, c.repeats, [&] {
    if (!validate(package, published).pass) std::abort();
  });
  r.baseline_time = median_mean_seconds(c.iterations, c.repeats, [&] {
    auto d = sha256(whole);
    if (d[0] == 0 && d[1] == 0 && d[2] == 0 && d[3] == 0 && d[4] == 0 && d[5] == 0) std::abort();
  });
  return r;
}

BenchResult run_bench(const BenchCase& c) {
  auto groups = gen_synthetic(c.data_size_bytes, c.group_count, c.seed);
  return run_bench(c, groups);
}

MatrixConfig matrix_from_json(const ordered_json& doc, const std::filesystem::path& base_dir) {
  MatrixConfig cfg;
  try {
    cfg.iterations = doc.value("iterations", cfg.iterations);
    cfg.repeats = doc.value("repeats", cfg.repeats);
    cfg.seed = doc.value("seed", cfg.seed);
    if (cfg.iterations < 1 || cfg.repeats < 1) {
      throw Error(ErrorCode::ConfigError, "iterations and repeats must be positive");
    }
    if (doc.contains("sample")) cfg.sample_path = base_dir / doc.at("sample").get<std::string>();

    std::vector<HashScheme> schemes{HashScheme::Single, HashScheme::Multi};
    if (doc.contains("schemes")) {
      schemes.clear();
      for (const auto& s : doc.at("schemes")) schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    std::optional<std::size_t> sample_size;
    for (const auto& entry : doc.at("cases")) {
      auto kind_name = entry.at("data").get<std::string>();
      DataKind kind;
      if (kind_name == "sample") {
        kind = DataKind::Sample;
      } else if (kind_name == "synthetic") {
        kind = DataKind::Synthetic;
      } else {
        throw Error(ErrorCode::ConfigError, "unknown data kind '" + kind_name + "'");
      }
      std::vector<std::size_t> sizes;
      if (entry.contains("size_kb")) {
        const auto& s = entry.at("size_kb");
        if (s.is_array()) {
          for (const auto& v : s) sizes.push_back(v.get<std::size_t>() * kKiB);
        } else {
          sizes.push_back(s.get<std::size_t>() * kKiB);
        }
      } else if (kind == DataKind::Sample) {
        if (cfg.sample_path.empty()) throw Error(ErrorCode::ConfigError, "sample case without \"sample\"");
        if (!sample_size) sample_size = std::filesystem::file_size(cfg.sample_path);
        sizes.push_back(*sample_size);
      } else {
        throw Error(ErrorCode::ConfigError, "synthetic case without size_kb");
      }
      std::vector<int> counts;
      const auto& g = entry.at("groups");
      if (g.is_array()) {
        counts = g.get<std::vector<int>>();
      } else {
        counts.push_back(g.get<int>());
      }
      std::optional<int> disclosed;
      if (entry.contains("disclosed")) disclosed = entry.at("disclosed").get<int>();
      for (auto size : sizes) {
        for (int count : counts) {
          for (auto scheme : schemes) {
            BenchCase c;
            c.data_kind = kind;
            c.data_size_bytes = size;
            c.group_count = count;
            c.scheme = scheme;
            c.iterations = cfg.iterations;
            c.repeats = cfg.repeats;
            c.disclosed = disclosed;
            c.seed = cfg.seed;
            cfg.cases.push_back(c);
          }
        }
      }
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bench matrix: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorCode::IoError, e.what());
  }
  return cfg;
}

MatrixConfig load_matrix(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return matrix_from_json(doc, path.parent_path());
}

const char* MatrixReport::csv_header() {
  return "data_kind,size_kb,groups,scheme,gen_ms,val_ms,baseline_ms,bytes_hashed,"
         "bytes_model_ok,gen_ratio,gen_ratio_ok,multi_gen_growth,single_gen_growth,val_order";
}

std::string MatrixReport::to_csv() const {
  std::string out = std::string(csv_header()) + "\n";
  for (const auto& row : rows) {
    const auto& c = row.bench_case;
    out += std::string(to_string(c.data_kind)) + "," +
           fmt(static_cast<double>(c.data_size_bytes) / kKiB, "%g") + "," +
           std::to_string(c.group_count) + "," + std::string(to_string(c.scheme)) + "," +
           fmt(row.result.gen_time * 1e3) + "," + fmt(row.result.val_time * 1e3) + "," +
           fmt(row.result.baseline_time * 1e3) + "," + std::to_string(row.result.bytes_hashed_gen) +
           "," + row.bytes_model_ok + "," + row.gen_ratio + "," + row.gen_ratio_ok + "," +
           row.multi_gen_growth + "," + row.single_gen_growth + "," + row.val_order + "\n";
  }
  return out;
}

std::vector<std::string> MatrixReport::failures() const {
  std::vector<std::string> out;
  for (const auto& row : rows) {
    auto label = row_label(row.bench_case);
    if (row.bytes_model_ok == "fail") out.push_back(label + ": bytes_model_ok");
    if (row.gen_ratio_ok == "fail") out.push_back(label + ": gen_ratio_ok");
    if (row.multi_gen_growth == "fail") out.push_back(label + ": multi_gen_growth");
    if (row.single_gen_growth == "fail") out.push_back(label + ": single_gen_growth");
    if (row.val_order == "fail") out.push_back(label + ": val_order");
  }
  return out;
}

MatrixReport run_matrix(const MatrixConfig& config) {
  auto start = std::chrono::steady_clock::now();
  MatrixReport report;

  Bytes sample;
  if (!config.sample_path.empty()) sample = read_file(config.sample_path);

  for (const auto& c : config.cases) {
    std::vector<DataGroup> groups;
    if (c.data_kind == DataKind::Sample) {
      if (c.data_size_bytes > sample.size()) {
        throw Error(ErrorCode::ConfigError, "sample case larger than the sample file");
      }
      groups = partition(ByteView(sample).first(c.data_size_bytes), c.group_count);
    } else {
      groups = gen_synthetic(c.data_size_bytes, c.group_count, c.seed);
    }
    MatrixRow row;
    row.bench_case = c;
    row.result = run_bench(c, groups);
    row.bytes_model_ok = row.result.bytes_hashed_gen == row.result.bytes_modeled ? "pass" : "fail";
    report.rows.push_back(std::move(row));
  }

  // Trend checks compare rows of the same data kind and size.
  using CellKey = std::tuple<DataKind, std::size_t, int, std::optional<int>>;
  std::map<CellKey, std::map<HashScheme, const MatrixRow*>> cells;
  for (const auto& row : report.rows) {
    const auto& c = row.bench_case;
    cells[{c.data_kind, c.data_size_bytes, c.group_count, c.disclosed}][c.scheme] = &row;
  }
  auto find_row = [&](const BenchCase& c, int groups, HashScheme scheme) -> const MatrixRow* {
    auto it = cells.find({c.data_kind, c.data_size_bytes, groups, c.disclosed});
    if (it == cells.end()) return nullptr;
    auto jt = it->second.find(scheme);
    return jt == it->second.end() ? nullptr : jt->second;
  };

  for (auto& row : report.rows) {
    const auto& c = row.bench_case;
    const auto* single = find_row(c, c.group_count, HashScheme::Single);
    const auto* multi = find_row(c, c.group_count, HashScheme::Multi);

    row.gen_ratio = "na";
    row.gen_ratio_ok = "na";
    if (c.scheme == HashScheme::Multi && single) {
      double ratio = row.result.gen_time / single->result.gen_time;
      row.gen_ratio = fmt(ratio, "%.3f");
      if (c.data_kind == DataKind::Sample && c.group_count == 50) {
        row.gen_ratio_ok = ratio >= 4.0 && ratio <= 20.0 ? "pass" : "fail";
      }
    }

    // Previous group count at the same size, if the matrix has one.
    const MatrixRow* prev = nullptr;
    int prev_groups = 0;
    for (const auto& [key, by_scheme] : cells) {
      auto [kind, size, groups, disclosed] = key;
      if (kind == c.data_kind && size == c.data_size_bytes && disclosed == c.disclosed &&
          groups < c.group_count && groups > prev_groups && by_scheme.contains(c.scheme)) {
        prev_groups = groups;
        prev = by_scheme.at(c.scheme);
      }
    }
    row.multi_gen_growth = "na";
    row.single_gen_growth = "na";
    if (prev && c.scheme == HashScheme::Multi) {
      row.multi_gen_growth = row.result.gen_time > prev->result.gen_time ? "pass" : "fail";
    }
    if (prev && c.scheme == HashScheme::Single) {
      row.single_gen_growth = row.result.gen_time >= prev->result.gen_time ? "pass" : "fail";
    }

    row.val_order = "na";
    if (single && multi) {
      bool ge = single->result.val_time >= multi->result.val_time;
      if (c.data_kind == DataKind::Sample && c.group_count >= 20) {
        row.val_order = ge ? "pass" : "fail";
      } else {
        row.val_order = ge ? "recorded:ge" : "recorded:lt";
      }
    }
  }

  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.wall_seconds = elapsed.count();
  return report;
}

}  // namespace ctishare
