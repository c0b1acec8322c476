#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iotad/error.hpp"

namespace iotad::kdd {

inline constexpr std::size_t kFeatureCount = 41;
inline constexpr std::size_t kNumericFeatureCount = 38;
inline constexpr std::size_t kCategoryCount = 5;

/// Column names in canonical KDD Cup 99 order.
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

/// Position of the three categorical columns in the 41 feature fields.
inline constexpr std::size_t kProtocolColumn = 1;
inline constexpr std::size_t kServiceColumn = 2;
inline constexpr std::size_t kFlagColumn = 3;

/// Class codes are fixed: Normal=0, DoS=1, Probe=2, R2L=3, U2R=4.
enum class Category : std::uint8_t { kNormal = 0, kDoS = 1, kProbe = 2, kR2L = 3, kU2R = 4 };

std::string_view category_name(Category c);
Category category_from_code(int code);
inline int category_code(Category c) { return static_cast<int>(c); }

/// True for the fifteen *_rate columns, which must lie in [0, 1].
bool is_rate_column(std::size_t feature_index);

/// Maps a feature column (0..40, not categorical) to its slot in
/// Record::numeric.
std::size_t numeric_slot(std::size_t feature_index);
/// Inverse of numeric_slot.
std::size_t feature_index_of_slot(std::size_t slot);

struct Record {
  /// Zero-based line position in the source file; the record's identity.
  std::size_t index = 0;
  std::array<double, kNumericFeatureCount> numeric{};
  std::string protocol_type;
  std::string service;
  std::string flag;
  std::string raw_label;
  Category category = Category::kNormal;

  double duration() const { return numeric[0]; }
  double feature(std::size_t feature_index) const {
    return numeric[numeric_slot(feature_index)];
  }
  const std::string& categorical(std::size_t feature_index) const;
};

/// Re-serializes a record in the KDD text format (no trailing newline).
std::string to_line(const Record& record);

struct Dataset {
  std::vector<Record> records;
  std::string source_path;
  /// Hex SHA-256 of the source file bytes (empty for derived datasets).
  std::string checksum;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::array<std::size_t, kCategoryCount> category_counts() const;
};

enum class SplitMode { kStratifiedExact };

class SplitSpec {
 public:
  /// Throws kInvalidArgument unless 0 < train_fraction < 1.
  explicit SplitSpec(double train_fraction = 0.8, std::uint64_t seed = 0,
                     SplitMode mode = SplitMode::kStratifiedExact);

  double train_fraction() const { return train_fraction_; }
  std::uint64_t seed() const { return seed_; }
  SplitMode mode() const { return mode_; }

 private:
  double train_fraction_;
  std::uint64_t seed_;
  SplitMode mode_;
};

/// Resolves a label with its trailing period already stripped.
Category map_attack_category(std::string_view raw_label);

/// The in-repo label fixture as (label, category) pairs, in fixture order.
const std::vector<std::pair<std::string, Category>>& attack_category_table();

/// Parses one 42-field KDD line. Errors name the offending column.
Record parse_record(std::string_view line, std::size_t index = 0);

/// Reads a KDD file (plain or gzip-compressed). Parse errors carry the
/// 1-based line number.
Dataset load_dataset(const std::string& path);

/// Parses in-memory text with the same rules as load_dataset.
Dataset parse_dataset(std::string_view text, std::string source_path = {});

/// Per category, floor(train_fraction * n) records go to train after a seeded
/// shuffle; outputs keep file order.
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, const SplitSpec& spec);

/// Keeps floor(fraction * n) records per category, chosen by a seeded shuffle.
/// fraction must lie in (0, 1]; 1 returns a copy.
Dataset stratified_subsample(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Hex-encoded SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace iotad::kdd
