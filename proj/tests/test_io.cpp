#include <gtest/gtest.h>

#include "mkbary/error.hpp"
#include "mkbary/io.hpp"

namespace mkbary {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(Io, MeasureRoundTrip) {
  const Json j = Json::parse(R"({"space":{"kind":"euclidean","dim":2},
      "atoms":[[1,0.5],[0,0],[1,0.5]], "weights":[0.25,0.5,0.25]})");
  const auto mu = measure_from_json(j);
  ASSERT_EQ(mu.size(), 2u);
  EXPECT_EQ(mu.atom(0), (Point{0.0, 0.0}));
  const auto back = measure_from_json(measure_to_json(mu));
  EXPECT_TRUE(approx_equal(mu, back, 0.0));
}

TEST(Io, FiniteAtomsByIndex) {
  const Json j = Json::parse(R"({"space":{"kind":"finite","n":3,"rho":[[0,1,2],[1,0,1],[2,1,0]]},
      "atoms":[0,[2]], "weights":[0.5,0.5]})");
  const auto mu = measure_from_json(j);
  EXPECT_EQ(mu.atom(1), Point{2.0});
  EXPECT_EQ(code_of([&] {
              measure_from_json(Json::parse(R"({"space":{"kind":"finite","n":2,"rho":[[0,1],[1,0]]},
                  "atoms":[5], "weights":[1]})"));
            }),
            ErrorCode::ParseError);
}

TEST(Io, RejectsMalformed) {
  EXPECT_EQ(code_of([] {
              measure_from_json(Json::parse(R"({"space":{"kind":"euclidean","dim":1},
                  "atoms":[[0],[1]], "weights":[0.5,0.6]})"));
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { measure_from_json(Json::parse(R"({"atoms":[[0]], "weights":[1]})")); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { cost_from_json(Json::parse(R"({"kind":"wavy","p":2})")); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { read_json_file("/nonexistent/file.json"); }), ErrorCode::ParseError);
}

TEST(Io, CostWithDeclaredConstants) {
  const auto cost = cost_from_json(Json::parse(R"({"kind":"norm_power","p":2,"q":0.5})"));
  ASSERT_TRUE(cost.declared().has_value());
  EXPECT_EQ(*cost.declared()->q, 0.5);
  EXPECT_FALSE(cost.declared()->B.has_value());
  EXPECT_EQ(cost_to_json(cost).dump(), R"({"kind":"norm_power","p":2.0,"q":0.5})");
}

TEST(Io, ProblemAndConstraints) {
  const Json j = Json::parse(R"({
    "inputs":[{"measure":{"space":{"kind":"euclidean","dim":1},"atoms":[[0]],"weights":[1]},"lambda":1},
              {"measure":{"space":{"kind":"euclidean","dim":1},"atoms":[[1]],"weights":[1]},"lambda":1}],
    "constraint":{"kind":"fixed_support","atoms":[[0],[0.5],[1]]},
    "cost":{"kind":"metric_power","p":2}})");
  const auto problem = problem_from_json(j);
  EXPECT_EQ(problem.constraint(), BarycenterProblem::Constraint::SimplexOver);
  EXPECT_EQ(problem.candidates().size(), 3u);
  EXPECT_DOUBLE_EQ(problem.inputs()[0].lambda, 0.5);

  const auto grid = constraint_from_json(
      Json::parse(R"({"kind":"simplex_over","grid":{"box":{"lo":[0,0],"hi":[1,1]},"points":[9,9]}})"),
      GroundSpace::euclidean(2));
  EXPECT_EQ(grid.candidates.size(), 81u);
  const auto free = constraint_from_json(Json::parse(R"({"kind":"free","k":3})"), GroundSpace::euclidean(1));
  EXPECT_EQ(free.atom_budget, 3u);
  EXPECT_EQ(code_of([] { constraint_from_json(Json::parse(R"({"kind":"free","k":0})"), GroundSpace::euclidean(1)); }),
            ErrorCode::ParseError);
}

TEST(Io, Population) {
  const auto gen = meta_from_json(Json::parse(
      R"({"generator":{"box":{"lo":[0,0],"hi":[1,1]},"max_atoms":3,"count":4,"seed":7}})"));
  EXPECT_EQ(gen.size(), 4u);
  const auto listed = meta_from_json(Json::parse(R"({"measures":[
      {"space":{"kind":"euclidean","dim":1},"atoms":[[0]],"weights":[1]},
      {"space":{"kind":"euclidean","dim":1},"atoms":[[1]],"weights":[1]}], "probs":[0.25,0.75]})"));
  EXPECT_DOUBLE_EQ(listed.probs()[1], 0.75);
}

TEST(Io, Formatting) {
  EXPECT_EQ(format_short(0.1 + 0.2), "0.3");
  EXPECT_EQ(format_exact(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field(R"({"a":1,"b":2})"), R"("{""a"":1,""b"":2}")");
}

}  // namespace
}  // namespace mkbary
