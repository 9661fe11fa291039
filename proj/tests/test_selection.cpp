// Copyright 2026 The MBL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mbl/corpus.hpp"
#include "mbl/embeddings.hpp"
#include "mbl/error.hpp"
#include "mbl/metrics.hpp"
#include "mbl/random.hpp"
#include "mbl/selection.hpp"
#include "oracles/sari_oracle.hpp"
#include "test_util.hpp"

namespace mbl {
namespace {

using test::TempDir;
using test::write_file;

Sentence S(const std::string& raw) { return Sentence::from_raw(raw); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

ScoredPair pair(std::string id, std::size_t ref, std::optional<double> score) {
  ScoredPair p;
  p.instance_id = std::move(id);
  p.reference_index = ref;
  p.source = S("source " + p.instance_id);
  p.simple = S("simple " + p.instance_id + " " + std::to_string(ref));
  p.score = score;
  return p;
}

std::vector<std::pair<std::string, std::size_t>> keys(const ExampleSet& s) {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& p : s.pairs) out.emplace_back(p.instance_id, p.reference_index);
  return out;
}

Corpus mini() { return load_parallel(test::data_dir() / "mini"); }
Corpus tune() { return load_corpus(test::data_dir() / "tune" / "tune.jsonl"); }

TEST_CASE("mt19937_64 output is fixed by the standard") {
  std::mt19937_64 e;
  e.discard(9999);
  CHECK(e() == 9981545732273789042ULL);
}

TEST_CASE("SeededRng draws are bounded and reproducible") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.below(7);
    CHECK(x < 7);
    CHECK(x == b.below(7));
  }
}

TEST_CASE("seeded shuffle is a reproducible permutation") {
  for (std::uint64_t seed : {1, 2, 3}) {
    std::vector<int> v(20), w(20);
    std::iota(v.begin(), v.end(), 0);
    w = v;
    seeded_shuffle(std::span<int>(v), seed);
    seeded_shuffle(std::span<int>(w), seed);
    CHECK(v == w);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> ident(20);
    std::iota(ident.begin(), ident.end(), 0);
    CHECK(sorted == ident);
  }
  std::vector<int> a(20), b(20);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  seeded_shuffle(std::span<int>(a), 1);
  seeded_shuffle(std::span<int>(b), 2);
  CHECK(a != b);
}

TEST_CASE("shuffle follows Durstenfeld's algorithm on mt19937_64") {
  std::vector<int> v(10);
  std::iota(v.begin(), v.end(), 0);
  auto expected = v;
  std::mt19937_64 e(3);
  for (std::size_t i = expected.size(); i > 1; --i) {
    const std::uint64_t max = ~0ULL, limit = max - max % i;
    std::uint64_t x;
    do x = e(); while (x >= limit);
    std::swap(expected[i - 1], expected[x % i]);
  }
  seeded_shuffle(std::span<int>(v), 3);
  CHECK(v == expected);
}

TEST_CASE("compression-ratio scoring covers every pair") {
  const auto scores = score_pairs(mini(), Metric::kCompressionRatio);
  REQUIRE(scores.pairs.size() == 9);
  CHECK(scores.pairs[0].instance_id == "0");
  CHECK(scores.pairs[0].reference_index == 0);
  CHECK(*scores.pairs[0].score ==
        doctest::Approx(double(char_count("The cat sat on the mat.")) / double(char_count("The cat sat."))));
  CHECK(scores.pairs[8].instance_id == "2");
  CHECK(scores.pairs[8].reference_index == 2);
  CHECK(scores.pairs[4].method == SelectionMethod::kCompressionRatio);
}

TEST_CASE("leave-one-out SARI uses the other references") {
  const Corpus c = mini();
  std::mutex mu;
  std::vector<std::tuple<std::string, std::size_t, std::size_t, double>> calls;
  ScoreOptions options;
  options.on_sari = [&](const SariScoringCall& call) {
    std::lock_guard<std::mutex> lock(mu);
    // The prediction must not be among the references.
    for (const auto* r : call.references) CHECK(r != &call.prediction);
    const auto* inst = c.find(call.instance_id);
    REQUIRE(inst != nullptr);
    CHECK(call.prediction == inst->references[call.prediction_index].tokens());
    std::vector<oracle::Tokens> others;
    for (std::size_t i = 0; i < inst->references.size(); ++i) {
      if (i != call.prediction_index) others.push_back(inst->references[i].tokens());
    }
    std::vector<oracle::Tokens> got;
    for (const auto* r : call.references) got.push_back(*r);
    CHECK(got == others);
    CHECK(std::abs(call.score - oracle::sari(inst->source.tokens(), call.prediction, others)) < 1e-9);
    calls.emplace_back(std::string(call.instance_id), call.prediction_index, call.references.size(),
                       call.score);
  };
  options.threads = 2;
  const auto scores = score_pairs(c, Metric::kSari, options);
  CHECK(scores.pairs.size() == 9);
  CHECK(calls.size() == 9);
  for (const auto& call : calls) CHECK(std::get<2>(call) == 2);
  for (const auto& p : scores.pairs) {
    for (const auto& call : calls) {
      if (std::get<0>(call) == p.instance_id && std::get<1>(call) == p.reference_index) {
        CHECK(*p.score == std::get<3>(call));
      }
    }
  }
}

TEST_CASE("SARI scoring rejects single-reference corpora and skips short instances") {
  const Corpus single = load_parallel(test::data_dir() / "single");
  try {
    score_pairs(single, Metric::kSari);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSariNeedsMultipleReferences);
    CHECK(std::string(e.what()).find("two references") != std::string::npos);
  }
  TempDir dir;
  write_file(dir / "r.jsonl", R"({"id":"a","source":"A b c.","references":["A b.","B c."]})" "\n"
                              R"({"id":"b","source":"C d.","references":["C."]})" "\n");
  const auto scores = score_pairs(load_jsonl(dir / "r.jsonl"), Metric::kSari);
  CHECK(scores.pairs.size() == 2);
  CHECK(scores.skipped_instances == 1);
}

TEST_CASE("scoring argument errors") {
  CHECK(code_of([] { score_pairs(Corpus{}, Metric::kCompressionRatio); }) == ErrorCode::kEmptyCorpus);
  CHECK(code_of([] { score_pairs(mini(), Metric::kBleu); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { score_pairs(mini(), Metric::kBertPrecision); }) ==
        ErrorCode::kEmbeddingBackendMissing);
}

TEST_CASE("BERTPrec scoring discards pairs identical to their source") {
  const HashEmbeddingProvider emb;
  ScoreOptions options;
  options.embeddings = &emb;
  const Corpus t = tune();
  const auto scores = score_pairs(t, Metric::kBertPrecision, options);
  CHECK(scores.discarded_duplicates >= 1);
  CHECK(scores.pairs.size() + scores.discarded_duplicates == 36);
  for (const auto& p : scores.pairs) {
    CHECK(p.source.tokens() != p.simple.tokens());
    CHECK(*p.score < 1.0);
  }
  const auto set = select_top_k(scores.pairs, scores.pairs.size());
  for (const auto& p : set.pairs) CHECK(p.source.tokens() != p.simple.tokens());
}

TEST_CASE("canonical ranking breaks ties by byte-wise id then reference") {
  std::vector<ScoredPair> pool{pair("2", 0, 0.5), pair("10", 1, 0.5), pair("10", 0, 0.5), pair("3", 0, 0.9)};
  const auto set = select_top_k(pool, 3);
  CHECK(keys(set) == std::vector<std::pair<std::string, std::size_t>>{{"3", 0}, {"10", 0}, {"10", 1}});
  CHECK(set.ordering == Ordering::kHighToLow);
  CHECK_FALSE(set.truncated);
  CHECK(select_top_k(pool, 9).truncated);
  CHECK(select_top_k(pool, 9).pairs.size() == 4);
  CHECK(code_of([&] { select_top_k(pool, 0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("select_top_k ignores input order") {
  std::mt19937_64 rng(8);
  std::vector<ScoredPair> pool;
  for (int i = 0; i < 50; ++i) pool.push_back(pair(std::to_string(i % 17), i / 17, double(rng() % 6) / 5));
  const auto want = select_top_k(pool, 10);
  for (int trial = 0; trial < 200; ++trial) {
    std::shuffle(pool.begin(), pool.end(), rng);
    CHECK(select_top_k(pool, 10) == want);
  }
}

TEST_CASE("orderings rearrange the same pairs") {
  std::vector<ScoredPair> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(pair(std::to_string(i), 0, 0.1 * i));
  const auto high = order_examples(select_top_k(pool, 5), Ordering::kHighToLow);
  const auto low = order_examples(select_top_k(pool, 5), Ordering::kLowToHigh);
  auto reversed = keys(high);
  std::reverse(reversed.begin(), reversed.end());
  CHECK(keys(low) == reversed);
  CHECK(ordering_consistent(high));
  CHECK(ordering_consistent(low));
  CHECK(low.ordering == Ordering::kLowToHigh);

  const auto r1 = order_examples(select_top_k(pool, 5), Ordering::kRandom, 17);
  const auto r2 = order_examples(select_top_k(pool, 5), Ordering::kRandom, 17);
  CHECK(r1 == r2);
  CHECK(r1.ordering_seed == 17);
  auto sorted = keys(r1);
  std::sort(sorted.begin(), sorted.end());
  auto high_sorted = keys(high);
  std::sort(high_sorted.begin(), high_sorted.end());
  CHECK(sorted == high_sorted);

  std::vector<std::vector<std::pair<std::string, std::size_t>>> seen;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    seen.push_back(keys(order_examples(select_top_k(pool, 5), Ordering::kRandom, seed)));
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::unique(seen.begin(), seen.end()) - seen.begin() > 1);
}

TEST_CASE("random selection draws distinct pairs reproducibly") {
  const Corpus t = tune();
  const auto a = random_select(t, 5, 17), b = random_select(t, 5, 17), c = random_select(t, 5, 18);
  CHECK(a == b);
  CHECK(keys(a) != keys(c));
  CHECK(a.pairs.size() == 5);
  auto k = keys(a);
  std::sort(k.begin(), k.end());
  CHECK(std::unique(k.begin(), k.end()) == k.end());
  for (const auto& p : a.pairs) {
    CHECK_FALSE(p.score.has_value());
    CHECK(p.simple == t.find(p.instance_id)->references[p.reference_index]);
  }
  CHECK(a.selection_seed == 17);

  // Same draw order as a forward partial Fisher-Yates over the flattened
  // (instance, reference) population.
  std::vector<std::pair<std::string, std::size_t>> pop;
  for (const auto& inst : t.instances) {
    for (std::size_t r = 0; r < inst.references.size(); ++r) pop.emplace_back(inst.id, r);
  }
  SeededRng rng(17);
  for (std::size_t i = 0; i < 5; ++i) std::swap(pop[i], pop[i + rng.below(pop.size() - i)]);
  pop.resize(5);
  CHECK(keys(a) == pop);

  const auto all = random_select(t, 100, 1);
  CHECK(all.truncated);
  CHECK(all.pairs.size() == 36);
}

TEST_CASE("KATE retrieves nearest examples, nearest last") {
  const HashEmbeddingProvider emb;
  const Corpus t = tune();
  const KateIndex index(t, emb);
  const auto query = t.instances[3].source;
  const auto set = index.select(query, 3);
  REQUIRE(set.pairs.size() == 3);
  CHECK(set.pairs.back().instance_id == t.instances[3].id);
  CHECK(*set.pairs.back().score == doctest::Approx(1.0));
  CHECK(*set.pairs[0].score <= *set.pairs[1].score);
  CHECK(*set.pairs[1].score <= *set.pairs[2].score);
  for (const auto& p : set.pairs) CHECK(p.reference_index == 0);
  CHECK(set.method == SelectionMethod::kKate);

  const KateIndex first(t, emb, {1, false});
  const auto set2 = first.select(query, 3);
  CHECK(set2.pairs.front().instance_id == t.instances[3].id);
  CHECK(set2.pairs.front().reference_index == 1);
  CHECK(code_of([&] { kate_select(t, query, 2, nullptr); }) == ErrorCode::kEmbeddingBackendMissing);
  CHECK(kate_select(t, query, 3, &emb) == set);
}

TEST_CASE("scored pairs and example sets round-trip through JSON") {
  auto scores = score_pairs(mini(), Metric::kCompressionRatio).pairs;
  scores.push_back(pair("x", 0, std::nullopt));
  std::stringstream buf;
  write_scored_pairs(scores, buf);
  TempDir dir;
  write_file(dir / "s.jsonl", buf.str());
  const auto back = read_scored_pairs(dir / "s.jsonl");
  REQUIRE(back.size() == scores.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].instance_id == scores[i].instance_id);
    CHECK(back[i].reference_index == scores[i].reference_index);
    CHECK(back[i].score == scores[i].score);
    CHECK(back[i].simple == scores[i].simple);
  }
  const auto set = order_examples(select_top_k(scores, 4), Ordering::kRandom, 5);
  CHECK(example_set_from_json(to_json(set)) == set);
}

TEST_CASE("method and ordering names") {
  for (auto m : {SelectionMethod::kSari, SelectionMethod::kCompressionRatio, SelectionMethod::kBertPrecision,
                 SelectionMethod::kRandom, SelectionMethod::kKate, SelectionMethod::kZeroShot}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  for (auto o : {Ordering::kHighToLow, Ordering::kLowToHigh, Ordering::kRandom}) {
    CHECK(parse_ordering(ordering_name(o)) == o);
  }
  CHECK(method_metric(SelectionMethod::kBertPrecision) == Metric::kBertPrecision);
  CHECK(code_of([] { method_metric(SelectionMethod::kRandom); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_ordering("sideways"); }) == ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace mbl
