#include "mapl/choice_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>

#include "mapl/error.hpp"
#include "mapl/rng.hpp"

namespace mapl {

ChoiceDataset::ChoiceDataset(std::size_t individuals, std::size_t tasks, std::size_t alternatives,
                             std::vector<double> features, std::vector<std::int32_t> chosen,
                             std::vector<std::string> feature_names)
    : n_(individuals), t_(tasks), j_(alternatives), features_(std::move(features)),
      chosen_(std::move(chosen)), names_(std::move(feature_names)) {
  if (n_ == 0 || t_ == 0 || j_ == 0) throw DataError("dataset dimensions must be positive");
  if (chosen_.size() != n_ * t_) throw DataError("chosen tensor must have N*T entries");
  if (features_.empty() || features_.size() % (n_ * t_ * j_) != 0)
    throw DataError("feature tensor size is not a positive multiple of N*T*J");
  k_ = features_.size() / (n_ * t_ * j_);
  if (names_.empty()) names_ = default_feature_names(k_);
  if (names_.size() != k_) throw DataError("feature_names must have K entries");
}

ChoiceDataset ChoiceDataset::subset(std::span<const std::size_t> individuals) const {
  std::vector<double> f;
  std::vector<std::int32_t> c;
  f.reserve(individuals.size() * t_ * j_ * k_);
  c.reserve(individuals.size() * t_);
  const std::size_t block = t_ * j_ * k_;
  for (std::size_t i : individuals) {
    if (i >= n_) throw DataError("subset: individual index out of range");
    f.insert(f.end(), features_.begin() + static_cast<std::ptrdiff_t>(i * block),
             features_.begin() + static_cast<std::ptrdiff_t>((i + 1) * block));
    c.insert(c.end(), chosen_.begin() + static_cast<std::ptrdiff_t>(i * t_),
             chosen_.begin() + static_cast<std::ptrdiff_t>((i + 1) * t_));
  }
  return ChoiceDataset(individuals.size(), t_, j_, std::move(f), std::move(c), names_);
}

std::vector<std::string> default_feature_names(std::size_t k) {
  std::vector<std::string> names;
  names.reserve(k);
  for (std::size_t i = 0; i < k; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

ValidationReport validate_dataset(const ChoiceDataset& ds) {
  ValidationReport report;
  const std::size_t n = ds.individuals(), t = ds.tasks_per_individual(), j = ds.alternatives(),
                    k = ds.num_features();
  if (n == 0 || t == 0 || j == 0 || k == 0) {
    report.violations.push_back("empty dimension (N, T, J and K must be at least 1)");
    return report;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t tt = 0; tt < t; ++tt) {
      const auto c = ds.choice(i, tt);
      if (c < 0 || static_cast<std::size_t>(c) >= j) {
        report.violations.push_back("chosen index out of range at (" + std::to_string(i) + "," +
                                    std::to_string(tt) + ")");
      }
      for (std::size_t jj = 0; jj < j; ++jj) {
        const auto x = ds.row(i, tt, jj);
        for (std::size_t kk = 0; kk < k; ++kk) {
          if (!std::isfinite(x[kk])) {
            report.violations.push_back("non-finite feature at (" + std::to_string(i) + "," +
                                        std::to_string(tt) + "," + std::to_string(jj) + "," +
                                        std::to_string(kk) + ")");
          }
        }
      }
    }
  }
  return report;
}

DatasetSplit split_individuals(const ChoiceDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  const std::size_t n = ds.individuals();
  if (n < 2) throw ConfigError("splitting requires at least 2 individuals");

  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  // Rank individuals by a keyed hash of their index; ties broken by index.
  const CounterRng rng(seed, Stream::kSplit);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = rng.at(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
  });

  DatasetSplit split;
  split.train_individuals.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_individuals.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train_individuals.begin(), split.train_individuals.end());
  std::sort(split.test_individuals.begin(), split.test_individuals.end());
  split.train = ds.subset(split.train_individuals);
  split.test = ds.subset(split.test_individuals);
  split.split_seed = seed;
  split.train_fraction = train_fraction;
  return split;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const ChoiceDataset& ds, std::ostream& out) {
  out << "individual_id,task_id,alt_id";
  for (std::size_t k = 0; k < ds.num_features(); ++k) out << ",x" << k;
  out << ",chosen\n";
  std::string line;
  for (std::size_t i = 0; i < ds.individuals(); ++i) {
    for (std::size_t t = 0; t < ds.tasks_per_individual(); ++t) {
      for (std::size_t j = 0; j < ds.alternatives(); ++j) {
        line.clear();
        line += std::to_string(i);
        line += ',';
        line += std::to_string(t);
        line += ',';
        line += std::to_string(j);
        for (double x : ds.row(i, t, j)) {
          line += ',';
          line += format_double(x);
        }
        line += static_cast<std::size_t>(ds.choice(i, t)) == j ? ",1\n" : ",0\n";
        out << line;
      }
    }
  }
}

void write_csv(const ChoiceDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_csv(ds, out);
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view s, std::size_t line_no, const char* what) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": malformed " + what + " '" +
                    std::string(s) + "'");
  }
  return value;
}

struct Record {
  std::size_t i, t, j;
  std::vector<double> x;
  bool chosen;
};

}  // namespace

ChoiceDataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("no records");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 5 || header[0] != "individual_id" || header[1] != "task_id" ||
      header[2] != "alt_id" || header.back() != "chosen") {
    throw DataError("malformed header: expected individual_id,task_id,alt_id,x0,...,chosen");
  }
  const std::size_t k = header.size() - 4;
  for (std::size_t c = 0; c < k; ++c) {
    if (header[3 + c] != "x" + std::to_string(c))
      throw DataError("malformed header: expected column x" + std::to_string(c));
  }

  std::vector<Record> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    Record r;
    r.i = parse_number<std::size_t>(f[0], line_no, "individual_id");
    r.t = parse_number<std::size_t>(f[1], line_no, "task_id");
    r.j = parse_number<std::size_t>(f[2], line_no, "alt_id");
    r.x.resize(k);
    for (std::size_t c = 0; c < k; ++c) r.x[c] = parse_number<double>(f[3 + c], line_no, "feature");
    const int ch = parse_number<int>(f.back(), line_no, "chosen flag");
    if (ch != 0 && ch != 1) throw DataError("line " + std::to_string(line_no) + ": chosen must be 0 or 1");
    r.chosen = ch == 1;
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("no records");

  std::size_t n = 0, t = 0;
  for (const auto& r : records) {
    n = std::max(n, r.i + 1);
    t = std::max(t, r.t + 1);
  }
  // Alternatives per task must agree.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> alts;
  for (const auto& r : records) {
    auto& a = alts[{r.i, r.t}];
    a = std::max(a, r.j + 1);
  }
  if (alts.size() != n * t) throw DataError("ragged panel: not every individual has every task id");
  const std::size_t j = alts.begin()->second;
  for (const auto& [key, count] : alts) {
    if (count != j) {
      throw DataError("inconsistent J across tasks: task (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") has " + std::to_string(count) +
                      " alternatives, expected " + std::to_string(j));
    }
  }
  if (records.size() != n * t * j) throw DataError("duplicate or missing (individual, task, alternative) rows");

  std::vector<double> features(n * t * j * k);
  std::vector<std::int32_t> chosen(n * t, -1);
  std::vector<unsigned char> seen(n * t * j, 0);
  for (const auto& r : records) {
    const std::size_t cell = (r.i * t + r.t) * j + r.j;
    if (seen[cell]++) {
      throw DataError("duplicate row for (" + std::to_string(r.i) + "," + std::to_string(r.t) +
                      "," + std::to_string(r.j) + ")");
    }
    std::copy(r.x.begin(), r.x.end(), features.begin() + static_cast<std::ptrdiff_t>(cell * k));
    if (r.chosen) {
      auto& c = chosen[r.i * t + r.t];
      if (c != -1) {
        throw DataError("multiple chosen alternatives in task (" + std::to_string(r.i) + "," +
                        std::to_string(r.t) + ")");
      }
      c = static_cast<std::int32_t>(r.j);
    }
  }
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    if (chosen[c] == -1) {
      throw DataError("missing chosen marker in task (" + std::to_string(c / t) + "," +
                      std::to_string(c % t) + ")");
    }
  }
  return ChoiceDataset(n, t, j, std::move(features), std::move(chosen));
}

ChoiceDataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace mapl
