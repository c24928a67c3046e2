#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "generators.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/serialization.hpp"
#include "syntaxlens/tlp.hpp"

using namespace syntaxlens;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("softmax at the realized token") {
  CHECK(softmax_at({{"a", 1}, {"b", 2}, {"c", 3}}, "c") == doctest::Approx(0.66524).epsilon(1e-5));
  const double hand = std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  CHECK(softmax_at({{"a", 1}, {"b", 2}, {"c", 3}}, "c") == doctest::Approx(hand).epsilon(1e-12));
  CHECK(softmax_at({{"a", 5}, {"b", 5}}, "a") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(softmax_at({{"x", -7}}, "x") == 1.0);
  CHECK(code_of([] { softmax_at({{"a", 1}}, "z"); }) == ErrorCode::MissingRealizedToken);
}

TEST_CASE("softmax is stable for large logits and sums to one") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-800.0, 800.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, double> logits;
    for (int k = 0; k < 20; ++k) logits["t" + std::to_string(k)] = u(rng);
    double total = 0.0;
    for (const auto& [tok, y] : logits) {
      const double p = softmax_at(logits, tok);
      CHECK(std::isfinite(p));
      total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("distribution rows become probabilities") {
  const auto seq = tlp_from_distributions("ab", {{"a", {0, 1}, {{"a", 0.0}, {"b", 0.0}}, "a"},
                                                 {"b", {1, 2}, {{"b", 1.0}}, "b"}});
  REQUIRE(seq.records.size() == 2);
  CHECK(seq.records[0].probability == doctest::Approx(0.5));
  CHECK(seq.records[1].probability == 1.0);
  CHECK(seq.records[0].logprob == doctest::Approx(std::log(0.5)));
}

TEST_CASE("pairs ingestion") {
  SUBCASE("probability from logprob") {
    const auto seq = tlp_from_pairs("x", {{"x", {0, 1}, std::log(0.5)}});
    CHECK(seq.records[0].probability == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("certainty") {
    CHECK(tlp_from_pairs("x", {{"x", {0, 1}, 0.0}}).records[0].probability == 1.0);
  }
  SUBCASE("tiny positive rounding noise is clamped") {
    const auto seq = tlp_from_pairs("x", {{"x", {0, 1}, 5e-7}});
    CHECK(seq.records[0].probability == 1.0);
    CHECK(seq.records[0].logprob == 0.0);
  }
  SUBCASE("errors") {
    CHECK(code_of([] { tlp_from_pairs("abc", {{"ab", {0, 2}, -1}, {"bc", {1, 3}, -1}}); }) == ErrorCode::SpanOverlap);
    CHECK(code_of([] { tlp_from_pairs("abc", {{"b", {1, 2}, -1}, {"a", {0, 1}, -1}}); }) ==
          ErrorCode::UnsortedSpans);
    CHECK(code_of([] { tlp_from_pairs("x", {{"x", {0, 1}, 0.1}}); }) == ErrorCode::ProbabilityOutOfRange);
    CHECK(code_of([] { tlp_from_pairs("x", {{"x", {0, 1}, std::nan("")}}); }) == ErrorCode::ProbabilityOutOfRange);
    CHECK(code_of([] { tlp_from_pairs("x", {{"x", {0, 2}, -1}}); }) == ErrorCode::InvalidSpan);
  }
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(tlp_from_pairs("ab", {{"a", {0, 1}, 0.0}, {"b", {1, 2}, 0.0}})) == 0.0);
  CHECK(cross_entropy(tlp_from_pairs("ab", {{"a", {0, 1}, -1.0}, {"b", {1, 2}, -3.0}})) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(code_of([] { cross_entropy(tlp_from_pairs("", {})); }) == ErrorCode::EmptySequence);
  TlpSequence zero;
  zero.source = "a";
  zero.records.push_back({"a", {0, 1}, 0.0, -INFINITY});
  CHECK(code_of([&] { cross_entropy(zero); }) == ErrorCode::ZeroProbability);
}

TEST_CASE("cross entropy is permutation invariant and monotone") {
  std::mt19937_64 rng(8);
  const std::string src(40, 'x');
  for (int trial = 0; trial < 50; ++trial) {
    auto seq = gen::random_sequence(src, rng);
    const double base = cross_entropy(seq);
    auto shuffled = seq;
    std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
    CHECK(cross_entropy(shuffled) == doctest::Approx(base).epsilon(1e-12));

    auto better = seq;
    auto& r = better.records[trial % better.records.size()];
    r.probability = std::min(1.0, r.probability * 1.5 + 1e-3);
    r.logprob = std::log(r.probability);
    CHECK(cross_entropy(better) < base);
  }
}

TEST_CASE("truncation keeps the first records") {
  auto seq = tlp_from_pairs("abcd", {{"a", {0, 1}, -1}, {"b", {1, 2}, -1}, {"c", {2, 3}, -1}, {"d", {3, 4}, -1}});
  CHECK_FALSE(truncate_sequence(seq, 10));
  CHECK(truncate_sequence(seq, 2));
  REQUIRE(seq.records.size() == 2);
  CHECK(seq.records[1].token_text == "b");
}

TEST_CASE("JSON round trip is exact") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto seq = gen::random_sequence("for i in range(10):\n    print(i)\n", rng);
    seq.snippet_id = "s" + std::to_string(trial);
    seq.model_id = "m";
    if (trial % 2) seq.generated_span = Span{5, seq.source.size()};
    const auto back = tlp_from_json(parse_json(to_json(seq).dump(), "test"));
    CHECK(back.snippet_id == seq.snippet_id);
    CHECK(back.model_id == seq.model_id);
    CHECK(back.source == seq.source);
    CHECK(back.generated_span == seq.generated_span);
    REQUIRE(back.records.size() == seq.records.size());
    for (std::size_t i = 0; i < seq.records.size(); ++i) {
      CHECK(back.records[i].token_text == seq.records[i].token_text);
      CHECK(back.records[i].span == seq.records[i].span);
      CHECK(back.records[i].logprob == seq.records[i].logprob);
      CHECK(back.records[i].probability == seq.records[i].probability);
    }
  }
}

TEST_CASE("JSON logits variant") {
  const auto j = parse_json(
      R"({"snippet_id":"s","model_id":"m","source":"ab","tokens":[
          {"text":"a","start":0,"end":1,"logits":{"a":1,"b":2,"c":3},"realized":"c"}]})",
      "test");
  const auto seq = tlp_from_json(j);
  CHECK(seq.records[0].probability == doctest::Approx(0.66524).epsilon(1e-5));
}
