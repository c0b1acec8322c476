#include <gtest/gtest.h>

#include <cmath>

#include "iotad/preprocess.hpp"
#include "synthetic_kdd.hpp"

using namespace iotad;
using namespace iotad::kdd;

namespace {

Dataset synthetic(double scale, std::uint64_t seed) {
  return parse_dataset(testkit::synthetic_kdd_text(scale, seed));
}

Record record_with(const std::string& protocol, const std::string& service, const std::string& flag) {
  Record r;
  r.protocol_type = protocol;
  r.service = service;
  r.flag = flag;
  r.raw_label = "normal";
  return r;
}

Dataset from_records(std::vector<Record> records) {
  Dataset d;
  for (std::size_t i = 0; i < records.size(); ++i) records[i].index = i;
  d.records = std::move(records);
  return d;
}

}  // namespace

TEST(LabelEncoder, SortedCodes) {
  const auto d = from_records({record_with("udp", "http", "SF"), record_with("tcp", "http", "SF"),
                               record_with("icmp", "http", "SF")});
  const auto enc = fit_label_encoder(d);
  EXPECT_EQ(enc.encode(0, "icmp"), 0u);
  EXPECT_EQ(enc.encode(0, "tcp"), 1u);
  EXPECT_EQ(enc.encode(0, "udp"), 2u);
  EXPECT_EQ(enc.encode(1, "http"), 0u);
  try {
    enc.encode(1, "xyz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnseenCategory);
    EXPECT_EQ(e.column().value_or(""), "service");
  }
}

TEST(LabelEncoder, RoundTrip) {
  const auto enc = fit_label_encoder(synthetic(0.01, 2));
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t c = 0; c < enc.vocabulary(g).size(); ++c) {
      EXPECT_EQ(enc.encode(g, enc.decode(g, c)), c);
    }
  }
}

TEST(LabelEncoder, EmptyTrainRejected) {
  EXPECT_THROW(fit_label_encoder(Dataset{}), Error);
}

TEST(OneHotEncoder, IndicatorLayout) {
  const auto d = from_records({record_with("udp", "http", "SF"), record_with("tcp", "smtp", "REJ"),
                               record_with("icmp", "http", "SF")});
  const auto enc = fit_one_hot_encoder(d);
  EXPECT_EQ(enc.output_width(), 38u + 3 + 2 + 2);
  std::vector<double> out(enc.output_width());
  enc.encode_record(record_with("tcp", "http", "REJ"), out);
  EXPECT_EQ(std::vector<double>(out.begin() + 38, out.begin() + 41), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(std::vector<double>(out.begin() + 41, out.end()), (std::vector<double>{1, 0, 1, 0}));
  const auto names = enc.column_names();
  EXPECT_EQ(names[38], "protocol_type=icmp");
  EXPECT_EQ(names[41], "service=http");
  EXPECT_EQ(names.back(), "flag=SF");
}

TEST(OneHotEncoder, OneIndicatorPerGroupAfterTransform) {
  const auto train = synthetic(0.01, 3);
  const auto pre = Preprocessor::fit(train, EncoderKind::kOneHot, false);
  const auto m = pre.apply(train);
  const auto& enc = pre.encoder;
  const std::size_t width = 3 + enc.vocabulary(1).size() + enc.vocabulary(2).size();
  EXPECT_EQ(m.cols, 38 + width);
  for (std::size_t i = 0; i < m.rows; ++i) {
    std::size_t offset = 38;
    for (std::size_t g = 0; g < 3; ++g) {
      float sum = 0;
      for (std::size_t k = 0; k < enc.vocabulary(g).size(); ++k) {
        const float v = m.at(i, offset + k);
        ASSERT_TRUE(v == 0.0f || v == 1.0f);
        sum += v;
      }
      ASSERT_EQ(sum, 1.0f);
      offset += enc.vocabulary(g).size();
    }
  }
}

TEST(OneHotEncoder, LenientUnseenIsAllZeros) {
  const auto d = from_records({record_with("tcp", "http", "SF")});
  auto enc = fit_one_hot_encoder(d);
  std::vector<double> out(enc.output_width());
  EXPECT_THROW(enc.encode_record(record_with("tcp", "gopher", "SF"), out), Error);
  enc.set_lenient(true);
  enc.encode_record(record_with("tcp", "gopher", "SF"), out);
  EXPECT_EQ(out[38], 1.0);
  EXPECT_EQ(out[39], 0.0);
  EXPECT_EQ(out[40], 1.0);
}

TEST(MinMaxScaler, Examples) {
  const std::vector<double> col = {0, 5, 10};
  const auto s = MinMaxScaler::fit(col, 1, {true});
  EXPECT_DOUBLE_EQ(s.apply(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(s.apply(0, 5), 0.5);
  EXPECT_DOUBLE_EQ(s.apply(0, 10), 1.0);
  EXPECT_DOUBLE_EQ(s.apply(0, 20), 2.0);
  const std::vector<double> constant = {3, 3, 3};
  const auto c = MinMaxScaler::fit(constant, 1, {true});
  EXPECT_DOUBLE_EQ(c.apply(0, 3), 0.0);
  EXPECT_DOUBLE_EQ(c.apply(0, 7), 0.0);
}

TEST(Transform, TrainInUnitRangeAndStable) {
  const auto [train, test] = split_train_test(synthetic(0.01, 4), SplitSpec(0.8, 1));
  const auto pre = Preprocessor::fit(train, EncoderKind::kLabel, false, true);
  const auto a = pre.apply(train);
  const auto b = pre.apply(train);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.cols, 41u);
  for (float v : a.values) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    EXPECT_EQ(a.labels[i], category_code(train.records[i].category));
    EXPECT_EQ(a.row_ids[i], train.records[i].index);
  }
  EXPECT_NO_THROW(pre.apply(test).validate());
}

TEST(Transform, FitDependsOnlyOnTrain) {
  const auto [train, test] = split_train_test(synthetic(0.01, 5), SplitSpec(0.8, 2));
  const auto p1 = Preprocessor::fit(train, EncoderKind::kOneHot, true);
  auto modified = test;
  for (auto& r : modified.records) r.numeric[4] *= 1000;
  const auto p2 = Preprocessor::fit(train, EncoderKind::kOneHot, true);
  EXPECT_EQ(p1.scaler.min(), p2.scaler.min());
  EXPECT_EQ(p1.scaler.max(), p2.scaler.max());
}

TEST(L2Normalize, Examples) {
  FeatureMatrix m(3, 2);
  m.values = {3, 4, 0, 0, 1, 1};
  m.labels = {0, 0, 0};
  m.row_ids = {0, 1, 2};
  const auto n = l2_normalize_rows(m);
  EXPECT_NEAR(n.at(0, 0), 0.6, 1e-7);
  EXPECT_NEAR(n.at(0, 1), 0.8, 1e-7);
  EXPECT_EQ(n.at(1, 0), 0.0f);
  EXPECT_EQ(n.at(1, 1), 0.0f);
  const auto big = Preprocessor::fit(synthetic(0.005, 6), EncoderKind::kOneHot, true).apply(synthetic(0.005, 7));
  for (std::size_t i = 0; i < big.rows; ++i) {
    double s = 0;
    for (float v : big.row(i)) s += double(v) * v;
    if (s > 0) {
      ASSERT_NEAR(std::sqrt(s), 1.0, 1e-6);
    }
  }
}

TEST(Labels, BinaryView) {
  const std::vector<int> labels = {0, 1, 2, 3, 4, 0};
  EXPECT_EQ(to_binary_labels(labels), (std::vector<int>{0, 1, 1, 1, 1, 0}));
}
