#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace smoothrob;

namespace {

const Dataset& blobs_train() {
  static const Dataset d = synth_blobs(4, 150, 6, 8.0, 1, "train");
  return d;
}
const Dataset& blobs_test() {
  static const Dataset d = synth_blobs(4, 50, 6, 8.0, 2, "test");
  return d;
}

TrainConfig base_config() {
  TrainConfig c;
  c.epochs = 20;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Train, SmoothedAndHardLabelsReachHighAccuracy) {
  for (double alpha : {0.0, 0.9}) {
    auto c = base_config();
    c.label_mode = alpha > 0 ? LabelMode::smoothed : LabelMode::hard;
    c.alpha = alpha;
    const auto res = train(Model::glorot_uniform({6, 32, 4}, 1), blobs_train(), c, &blobs_test());
    EXPECT_GE(batch::accuracy(res.model, blobs_test()), 95.0) << alpha;
    EXPECT_EQ(res.log.size(), 20u);
    EXPECT_NEAR(res.log.back().test_acc, batch::accuracy(res.model, blobs_test()), 1e-12);
  }
}

TEST(Train, SameSeedIsBitwiseIdentical) {
  auto c = base_config();
  c.epochs = 3;
  c.label_mode = LabelMode::smoothed;
  c.alpha = 0.5;
  const auto a = train(Model::glorot_uniform({6, 16, 4}, 2), blobs_train(), c);
  const auto b = train(Model::glorot_uniform({6, 16, 4}, 2), blobs_train(), c);
  EXPECT_EQ(a.model, b.model);
  c.seed = 6;
  const auto d = train(Model::glorot_uniform({6, 16, 4}, 2), blobs_train(), c);
  EXPECT_NE(a.model, d.model);
}

TEST(Train, ZeroSmoothingEqualsHardLabels) {
  auto c = base_config();
  c.epochs = 2;
  const auto hard = train(Model::glorot_uniform({6, 8, 4}, 3), blobs_train(), c);
  c.label_mode = LabelMode::smoothed;
  c.alpha = 0.0;
  const auto smooth = train(Model::glorot_uniform({6, 8, 4}, 3), blobs_train(), c);
  EXPECT_EQ(hard.model, smooth.model);
}

TEST(Train, AdversarialModeRunsAndIsDeterministic) {
  auto c = base_config();
  c.epochs = 2;
  c.label_mode = LabelMode::adversarial;
  c.adv_eps = 0.05;
  c.adv_steps = 3;
  c.adv_step_size = 0.02;
  const auto a = train(Model::glorot_uniform({6, 8, 4}, 4), blobs_train(), c);
  const auto b = train(Model::glorot_uniform({6, 8, 4}, 4), blobs_train(), c);
  EXPECT_EQ(a.model, b.model);
  c.label_mode = LabelMode::hard;
  EXPECT_NE(train(Model::glorot_uniform({6, 8, 4}, 4), blobs_train(), c).model, a.model);
}

TEST(Train, InnerPgdStaysFeasible) {
  const auto m = testutil::random_model({6, 8, 4}, 4);
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const RowMatrix x = batch::gather(blobs_train(), idx);
  std::vector<std::size_t> labels;
  for (auto i : idx) labels.push_back(blobs_train().label(i));
  Rng rng(1);
  const RowMatrix xa = detail::pgd_batch(m, x, labels, 0.1, 5, 0.03, rng);
  EXPECT_LE((xa - x).cwiseAbs().maxCoeff(), 0.1 + 1e-12);
  EXPECT_GE(xa.minCoeff(), 0.0);
  EXPECT_LE(xa.maxCoeff(), 1.0);
}

TEST(Train, ValidationAndDivergence) {
  auto c = base_config();
  c.label_mode = LabelMode::smoothed;
  c.alpha = 1.5;
  EXPECT_THROW(train(Model::glorot_uniform({6, 4}, 1), blobs_train(), c), ParameterError);
  c = base_config();
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = base_config();
  EXPECT_THROW(train(Model::glorot_uniform({5, 4}, 1), blobs_train(), c), ShapeError);
  c.learning_rate = 1e200;
  c.epochs = 5;
  EXPECT_THROW(train(Model::glorot_uniform({6, 32, 4}, 1), blobs_train(), c), DivergenceError);
  EXPECT_EQ(label_mode_from_string("smoothed"), LabelMode::smoothed);
  EXPECT_THROW(label_mode_from_string("soft"), ParameterError);
}

TEST(LogitRange, ZeroModelAndEmptyDataset) {
  const auto st = logit_range_stats(Model::zeros({6, 4}), blobs_test());
  EXPECT_EQ(st.min, 0.0);
  EXPECT_EQ(st.max, 0.0);
  EXPECT_EQ(st.width(), 0.0);
  EXPECT_THROW(logit_range_stats(Model::zeros({6, 4}), blobs_test().slice(0, 0)), ParameterError);
}

TEST(LogitRange, WidthShrinksWithSmoothing) {
  double last = std::numeric_limits<double>::infinity();
  for (double alpha : {0.1, 0.5, 0.9}) {
    auto c = base_config();
    c.label_mode = LabelMode::smoothed;
    c.alpha = alpha;
    const auto res = train(Model::glorot_uniform({6, 32, 4}, 1), blobs_train(), c);
    const auto st = logit_range_stats(res.model, blobs_test());
    EXPECT_LT(st.width(), last) << alpha;
    last = st.width();
  }
}

TEST(LogitRange, LogFormat) {
  std::vector<EpochRecord> log{{1, 0.5, 90.0, 88.0}};
  EXPECT_NE(format_log(log).find("epoch=1"), std::string::npos);
}
