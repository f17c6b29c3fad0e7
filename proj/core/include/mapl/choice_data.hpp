#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mapl {

/// Rectangular panel of N individuals, each facing T choice tasks among J
/// alternatives described by K features. Immutable after construction.
///
/// Features are stored in (individual, task, alternative, feature) row-major
/// order, so the K features of one alternative are contiguous and the J*K block
/// of one task is contiguous.
class ChoiceDataset {
 public:
  ChoiceDataset() = default;

  /// Checks only that the tensor sizes agree with the dimensions; value-level
  /// invariants are reported by validate_dataset().
  ChoiceDataset(std::size_t individuals, std::size_t tasks, std::size_t alternatives,
                std::vector<double> features, std::vector<std::int32_t> chosen,
                std::vector<std::string> feature_names = {});

  std::size_t individuals() const noexcept { return n_; }
  std::size_t tasks_per_individual() const noexcept { return t_; }
  std::size_t alternatives() const noexcept { return j_; }
  std::size_t num_features() const noexcept { return k_; }
  std::size_t num_tasks() const noexcept { return n_ * t_; }
  std::size_t num_rows() const noexcept { return n_ * t_ * j_; }

  std::span<const double> features() const noexcept { return features_; }
  std::span<const std::int32_t> chosen() const noexcept { return chosen_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  /// Features of one alternative (length K).
  std::span<const double> row(std::size_t i, std::size_t t, std::size_t j) const noexcept {
    return {features_.data() + ((i * t_ + t) * j_ + j) * k_, k_};
  }
  /// Features of all alternatives in one task (length J*K).
  std::span<const double> task(std::size_t i, std::size_t t) const noexcept {
    return {features_.data() + (i * t_ + t) * j_ * k_, j_ * k_};
  }
  std::int32_t choice(std::size_t i, std::size_t t) const noexcept { return chosen_[i * t_ + t]; }

  /// New dataset holding the listed individuals, in the given order.
  ChoiceDataset subset(std::span<const std::size_t> individuals) const;

  friend bool operator==(const ChoiceDataset&, const ChoiceDataset&) = default;

 private:
  std::size_t n_ = 0, t_ = 0, j_ = 0, k_ = 0;
  std::vector<double> features_;
  std::vector<std::int32_t> chosen_;
  std::vector<std::string> names_;
};

/// Default feature labels x0..x{K-1}.
std::vector<std::string> default_feature_names(std::size_t k);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_dataset(const ChoiceDataset& ds);

struct DatasetSplit {
  ChoiceDataset train;
  ChoiceDataset test;
  /// Original individual indices on each side, in ascending order.
  std::vector<std::size_t> train_individuals;
  std::vector<std::size_t> test_individuals;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.0;
};

/// Individual-level split: every task of an individual lands on the same side.
/// The train side receives round(train_fraction * N) individuals, clamped so that
/// both sides are nonempty. Membership depends only on (seed, individual index).
DatasetSplit split_individuals(const ChoiceDataset& ds, double train_fraction, std::uint64_t seed);

/// Long-format CSV: `individual_id,task_id,alt_id,x0,...,x{K-1},chosen`.
void write_csv(const ChoiceDataset& ds, std::ostream& out);
void write_csv(const ChoiceDataset& ds, const std::filesystem::path& path);
ChoiceDataset read_csv(std::istream& in);
ChoiceDataset read_csv(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace mapl
