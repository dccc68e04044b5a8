#include "fgsmooth/problem_io.hpp"
#include "fgsmooth/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <sstream>

using fgs::LinearProblem;

TEST_CASE("round-trip through the text format") {
  fgs::Rng rng(31);
  oracles::RandomProblemOptions opt;
  for (int trial = 0; trial < 5; ++trial) {
    const LinearProblem p = oracles::random_problem(rng, opt);
    std::stringstream ss;
    fgs::write_problem(ss, p);
    const LinearProblem q = fgs::read_problem(ss);

    CHECK(q.layout.count() == p.layout.count());
    CHECK(q.prior.a0.isApprox(p.prior.a0));
    CHECK(q.prior.P0.isApprox(p.prior.P0));
    REQUIRE(q.props.size() == p.props.size());
    for (size_t k = 0; k < p.props.size(); ++k) {
      CHECK(q.props[k].F.isApprox(p.props[k].F));
      CHECK(q.props[k].a.isApprox(p.props[k].a));
      CHECK(q.props[k].Q.isApprox(p.props[k].Q));
    }
    REQUIRE(q.obs.size() == p.obs.size());
    for (size_t j = 0; j < p.obs.size(); ++j) {
      REQUIRE(q.obs[j].involved.size() == p.obs[j].involved.size());
      for (size_t i = 0; i < p.obs[j].involved.size(); ++i) {
        CHECK(q.obs[j].involved[i].first == p.obs[j].involved[i].first);
        CHECK(q.obs[j].involved[i].second.isApprox(p.obs[j].involved[i].second));
      }
      CHECK(q.obs[j].c.isApprox(p.obs[j].c));
      CHECK(q.obs[j].R.isApprox(p.obs[j].R));
    }
  }
}

TEST_CASE("parses the documented example layout") {
  std::stringstream ss(
      "# two scalar states, one relative observation\n"
      "vars 2 1\n"
      "prior 0.5 cov 1\n"
      "prop 0 1 0 cov 0.25\n"
      "obs 1 0: -1 1: 1 resid 2 cov 0.09\n");
  const LinearProblem p = fgs::read_problem(ss);
  CHECK(p.layout.count() == 2);
  CHECK(p.prior.a0(0) == 0.5);
  CHECK(p.props[0].Q(0, 0) == 0.25);
  REQUIRE(p.obs.size() == 1);
  CHECK(p.obs[0].involved[0].first == 0);
  CHECK(p.obs[0].involved[0].second(0, 0) == -1.0);
  CHECK(p.obs[0].involved[1].second(0, 0) == 1.0);
  CHECK(p.obs[0].c(0) == 2.0);
}

TEST_CASE("parse failures carry line context") {
  auto expect_fail = [](const std::string& text) {
    std::stringstream ss(text);
    CHECK_THROWS_AS(fgs::read_problem(ss), fgs::ParseError);
  };
  expect_fail("");                               // no header
  expect_fail("vars 2 1\n");                     // missing prior
  expect_fail("prior 1 cov 1\n");                // record before header
  expect_fail("vars 1 1\nprior x cov 1\n");      // bad number
  expect_fail("vars 1 1\nprior 1 cov 1 extra\n");  // trailing tokens
  expect_fail(
      "vars 2 1\nprior 0 cov 1\nprop 0 1 0 cov 1\n"
      "obs 1 0: 1 resid 0 cov 1\n");  // anchor mismatch
}
