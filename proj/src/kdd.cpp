#include "iotad/kdd.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "iotad/rng.hpp"

namespace iotad::kdd {
namespace {

constexpr std::string_view kAttackTypesFixture =
#include "attack_types_fixture.inc"
    ;

constexpr std::size_t kFieldCount = kFeatureCount + 1;

bool is_categorical(std::size_t feature_index) {
  return feature_index == kProtocolColumn || feature_index == kServiceColumn ||
         feature_index == kFlagColumn;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

Category parse_category_name(std::string_view name) {
  if (name == "normal") return Category::kNormal;
  if (name == "dos") return Category::kDoS;
  if (name == "probe") return Category::kProbe;
  if (name == "r2l") return Category::kR2L;
  if (name == "u2r") return Category::kU2R;
  throw Error(ErrorCode::kInvalidArgument,
              "attack type fixture: unknown category '" + std::string(name) + "'");
}

std::vector<std::pair<std::string, Category>> load_fixture() {
  std::vector<std::pair<std::string, Category>> table;
  std::istringstream in{std::string(kAttackTypesFixture)};
  std::string line;
  while (std::getline(in, line)) {
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::istringstream fields{std::string(view)};
    std::string label, category;
    fields >> label >> category;
    table.emplace_back(label, parse_category_name(category));
  }
  return table;
}

const std::map<std::string, Category, std::less<>>& label_map() {
  static const auto map = [] {
    std::map<std::string, Category, std::less<>> m;
    for (const auto& [label, category] : attack_category_table()) m.emplace(label, category);
    return m;
  }();
  return map;
}

std::size_t floor_fraction(double fraction, std::size_t n) {
  // The epsilon absorbs representation error (0.7 * 10 must give 7).
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

std::array<std::vector<std::size_t>, kCategoryCount> positions_by_category(const Dataset& d) {
  std::array<std::vector<std::size_t>, kCategoryCount> out;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    out[category_code(d.records[i].category)].push_back(i);
  }
  return out;
}

// Seeded per-category shuffle; returns a mask of the positions selected.
std::vector<bool> select_per_category(const Dataset& dataset, double fraction,
                                      std::uint64_t seed) {
  std::vector<bool> selected(dataset.records.size(), false);
  auto groups = positions_by_category(dataset);
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    auto& group = groups[c];
    Rng rng(derive_seed(seed, c));
    rng.shuffle(group);
    const std::size_t take = floor_fraction(fraction, group.size());
    for (std::size_t i = 0; i < take; ++i) selected[group[i]] = true;
  }
  return selected;
}

Dataset empty_like(const Dataset& d) {
  Dataset out;
  out.source_path = d.source_path;
  out.checksum = d.checksum;
  return out;
}

void append_number(std::string& out, double value, bool rate) {
  char buf[64];
  int n;
  if (rate) {
    n = std::snprintf(buf, sizeof buf, "%.2f", value);
  } else if (value == std::floor(value) && std::fabs(value) < 9.0e15) {
    n = std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(value));
  } else {
    n = std::snprintf(buf, sizeof buf, "%.17g", value);
  }
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
};

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kNormal: return "Normal";
    case Category::kDoS: return "DoS";
    case Category::kProbe: return "Probe";
    case Category::kR2L: return "R2L";
    case Category::kU2R: return "U2R";
  }
  return "?";
}

Category category_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kCategoryCount)) {
    throw Error(ErrorCode::kCodeOutOfRange, "category code out of range: " + std::to_string(code));
  }
  return static_cast<Category>(code);
}

bool is_rate_column(std::size_t i) { return (i >= 24 && i <= 30) || (i >= 33 && i <= 40); }

std::size_t numeric_slot(std::size_t i) {
  if (i == 0) return 0;
  if (is_categorical(i) || i >= kFeatureCount) {
    throw Error(ErrorCode::kInvalidArgument, "not a numeric feature column: " + std::to_string(i));
  }
  return i - 3;
}

std::size_t feature_index_of_slot(std::size_t slot) { return slot == 0 ? 0 : slot + 3; }

const std::string& Record::categorical(std::size_t feature_index) const {
  switch (feature_index) {
    case kProtocolColumn: return protocol_type;
    case kServiceColumn: return service;
    case kFlagColumn: return flag;
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  "not a categorical column: " + std::to_string(feature_index));
  }
}

const std::vector<std::pair<std::string, Category>>& attack_category_table() {
  static const auto table = load_fixture();
  return table;
}

Category map_attack_category(std::string_view raw_label) {
  const auto& m = label_map();
  const auto it = m.find(raw_label);
  if (it == m.end()) {
    throw Error(ErrorCode::kUnknownLabel, "unknown attack label '" + std::string(raw_label) + "'",
                "label");
  }
  return it->second;
}

Record parse_record(std::string_view line, std::size_t index) {
  line = trim(line);
  std::array<std::string_view, kFieldCount> fields;
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto token = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start);
    if (count < kFieldCount) fields[count] = token;
    ++count;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (count != kFieldCount) {
    const std::string column =
        count < kFeatureCount ? std::string(kFeatureNames[count]) : std::string("label");
    throw Error(ErrorCode::kWrongFieldCount,
                "expected " + std::to_string(kFieldCount) + " fields, found " + std::to_string(count),
                column);
  }

  Record r;
  r.index = index;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto token = fields[i];
    const std::string column(kFeatureNames[i]);
    if (token.empty()) throw Error(ErrorCode::kEmptyField, "empty field '" + column + "'", column);
    if (is_categorical(i)) {
      std::string value(token);
      if (i == kProtocolColumn) r.protocol_type = std::move(value);
      else if (i == kServiceColumn) r.service = std::move(value);
      else r.flag = std::move(value);
      continue;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value) ||
        value < 0.0) {
      throw Error(ErrorCode::kNonNumericField,
                  "field '" + column + "' is not a non-negative number: '" + std::string(token) + "'",
                  column);
    }
    if (is_rate_column(i) && value > 1.0) {
      throw Error(ErrorCode::kRateOutOfRange,
                  "rate field '" + column + "' outside [0, 1]: " + std::string(token), column);
    }
    r.numeric[numeric_slot(i)] = value;
  }

  auto label = fields[kFeatureCount];
  if (label.empty()) throw Error(ErrorCode::kEmptyField, "empty label", "label");
  if (label.back() == '.') label.remove_suffix(1);
  r.category = map_attack_category(label);
  r.raw_label = std::string(label);
  return r;
}

std::string to_line(const Record& r) {
  std::string out;
  out.reserve(160);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (i > 0) out.push_back(',');
    if (is_categorical(i)) {
      out += r.categorical(i);
    } else {
      append_number(out, r.feature(i), is_rate_column(i));
    }
  }
  out.push_back(',');
  out += r.raw_label;
  out.push_back('.');
  return out;
}

std::array<std::size_t, kCategoryCount> Dataset::category_counts() const {
  std::array<std::size_t, kCategoryCount> counts{};
  for (const auto& r : records) ++counts[category_code(r.category)];
  return counts;
}

SplitSpec::SplitSpec(double train_fraction, std::uint64_t seed, SplitMode mode)
    : train_fraction_(train_fraction), seed_(seed), mode_(mode) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "train_fraction must lie in (0, 1), got " + std::to_string(train_fraction));
  }
}

Dataset parse_dataset(std::string_view text, std::string source_path) {
  Dataset d;
  d.source_path = std::move(source_path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      d.records.push_back(parse_record(line, d.records.size()));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what(),
                  e.column().value_or(""), line_no);
    }
  }
  return d;
}

Dataset load_dataset(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string text;
  std::array<char, 1 << 16> buf;
  while (true) {
    const int n = gzread(file, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      gzclose(file);
      throw Error(ErrorCode::kIo, "read error in '" + path + "'");
    }
    if (n == 0) break;
    text.append(buf.data(), static_cast<std::size_t>(n));
  }
  gzclose(file);
  Dataset d = parse_dataset(text, path);
  d.checksum = sha256_file(path);
  return d;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot split an empty dataset");
  const auto in_train = select_per_category(dataset, spec.train_fraction(), spec.seed());
  Dataset train = empty_like(dataset);
  Dataset test = empty_like(dataset);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    (in_train[i] ? train : test).records.push_back(dataset.records[i]);
  }
  return {std::move(train), std::move(test)};
}

Dataset stratified_subsample(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "subsample fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  if (fraction == 1.0) return dataset;
  const auto keep = select_per_category(dataset, fraction, seed);
  Dataset out = empty_like(dataset);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (keep[i]) out.records.push_back(dataset.records[i]);
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

}  // namespace iotad::kdd
