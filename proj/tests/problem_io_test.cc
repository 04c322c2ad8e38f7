#include "slq/problem_io.h"

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "fixtures.h"
#include "slq/errors.h"
#include "slq/verification.h"

namespace slq {
namespace {

const char* kTemplate = R"({
  "n": 2, "m": 1,
  "a": [[0.3, 0.7], [-0.9, 0.5]],
  "b": B,
  "c": [[0.05, 0.03], [0.05, 0.02]],
  "d": [[0.05], [0.06]],
  "q": Q,
  "r": [[1.25]],
  "sigma0": [[3.0, 0.0], [0.0, 1.0]],
  "k0": [[-6.0, 3.0]]
})";

std::string document(const std::string& b, const std::string& q) {
  std::string s = kTemplate;
  s.replace(s.find("B"), 1, b);
  s.replace(s.find("Q"), 1, q);
  return s;
}

std::string error_of(const std::string& text) {
  try {
    parse_problem_text(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(ProblemIoTest, BundledBenchmark) {
  const auto doc = testing::benchmark();
  EXPECT_EQ(doc.name, "slq_sec5");
  EXPECT_EQ(doc.n, 2);
  EXPECT_EQ(doc.m, 1);
  EXPECT_EQ(doc.k0, testing::mat(1, 2, {-6, 3}));
  ASSERT_TRUE(doc.optimizer);
  EXPECT_EQ(doc.optimizer->tol, 1e-3);
  EXPECT_EQ(step_rule_name(doc.optimizer->step_rule), "bb");
  ASSERT_TRUE(doc.simulation);
  EXPECT_EQ(doc.simulation->paths, 20000u);
}

TEST(ProblemIoTest, ZeroStateWeightIsRejected) {
  const auto text = document("[[0.2], [0.0]]", "[[0, 0], [0, 0]]");
  EXPECT_THROW(parse_problem_text(text), ValidationError);
  EXPECT_NE(error_of(text).find("q not positive-definite"), std::string::npos);
}

TEST(ProblemIoTest, WrongShapeNamesTheField) {
  const auto text = document("[[0.2, 0.0], [0.0, 0.1]]", "[[3, 0], [0, 2]]");
  EXPECT_THROW(parse_problem_text(text), ValidationError);
  EXPECT_NE(error_of(text).find("\"b\""), std::string::npos);
}

TEST(ProblemIoTest, AsymmetricWeightIsRejected) {
  const auto text = document("[[0.2], [0.0]]", "[[3, 1], [0, 2]]");
  EXPECT_THROW(parse_problem_text(text), ValidationError);
}

TEST(ProblemIoTest, MalformedJsonReportsPosition) {
  const auto msg = error_of("{\n  \"n\": 2,\n  \"m\": ]\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_THROW(parse_problem_text("{"), ParseError);
}

TEST(ProblemIoTest, MissingFieldIsNamed) {
  EXPECT_NE(error_of(R"({"n": 1, "m": 1})").find("\"a\""), std::string::npos);
}

TEST(ProblemIoTest, UnknownBundledNameFallsThrough) {
  EXPECT_THROW(parse_problem(resolve_problem_path("no_such_problem")), Error);
}

TEST(ProblemIoTest, RoundTripOnRandomDocuments) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (auto& v : m.reshaped()) v = normal(rng);
    return m;
  };
  for (int trial = 0; trial < 50; ++trial) {
    ProblemDocument doc;
    doc.n = 1 + trial % 4;
    doc.m = 1 + trial % 3;
    doc.name = "random_" + std::to_string(trial);
    doc.a = random(doc.n, doc.n);
    doc.b = random(doc.n, doc.m);
    doc.c = random(doc.n, doc.n);
    doc.d = random(doc.n, doc.m);
    doc.q = random_spd(rng, doc.n);
    doc.r = random_spd(rng, doc.m);
    doc.sigma0 = random_spd(rng, doc.n);
    doc.k0 = random(doc.m, doc.n);
    if (trial % 2) {
      OptimizerConfig opt;
      opt.step_rule = trial % 3 ? StepRule{step::Fixed{0.01 * (trial + 1)}}
                                : StepRule{step::TwoOverL{}};
      opt.tol = 1e-5 * (trial + 1);
      opt.gamma = 0.25;
      opt.max_iter = 10 + trial;
      doc.optimizer = opt;
    }
    if (trial % 3 == 0) {
      SimConfig sim;
      sim.horizon = 5 + trial;
      sim.dt = 1e-2;
      sim.paths = 100 + trial;
      sim.seed = 1234567890123ull + trial;
      if (trial % 2 == 0) sim.initial_sampler = sampler::FixedVector{random(doc.n, 1)};
      doc.simulation = sim;
    }
    const auto text = write_problem(doc);
    EXPECT_EQ(parse_problem_text(text), doc) << text;
  }
}

}  // namespace
}  // namespace slq
