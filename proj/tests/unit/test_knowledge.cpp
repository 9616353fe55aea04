#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <thread>
#include <unistd.h>

#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/dsl/dsl.hpp"
#include "dashgen/knowledge/knowledge.hpp"
#include "support/fixtures.hpp"

using namespace dashgen;
using namespace dashgen::knowledge;
using nlohmann::json;

namespace {

std::shared_ptr<provider::Provider> mock() {
  return provider::Provider::mock(provider::MockFixture::from_json(json::parse(R"({"rules": [{"response": "ok"}]})")));
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dashgen_kb_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Brute-force oracle: full sort by (score desc, id asc) with a plain dot
// product over normalized copies.
std::vector<Hit> brute_force(const std::vector<double>& q, const std::vector<KnowledgeDoc>& docs, std::size_t k) {
  auto unit = [](std::vector<double> v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return v;
  };
  const auto uq = unit(q);
  std::vector<Hit> all;
  for (const auto& d : docs) {
    const auto ud = unit(d.embedding);
    double dot = 0;
    for (std::size_t i = 0; i < ud.size(); ++i) dot += uq[i] * ud[i];
    all.push_back({d.id, dot});
  }
  std::stable_sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    if (std::abs(a.score - b.score) > 1e-12) return a.score > b.score;
    return a.id < b.id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST_CASE("embedding is deterministic and unit norm") {
  auto p = mock();
  CHECK(embed_text("retail sales by region", *p) == embed_text("retail sales by region", *p));
  CHECK_THROWS_AS(embed_text("", *p), EmptyInput);
  CHECK_THROWS_AS(embed_text("   ", *p), EmptyInput);
  Rng rng(3);
  const std::vector<std::string> words = {"sales", "plant", "yield", "region", "monthly", "alarm", "energy", "store"};
  for (int i = 0; i < 100; ++i) {
    std::string text;
    for (int w = rng.between(1, 12); w > 0; --w) text += words[rng.below(words.size())] + " ";
    const auto v = embed_text(text, *p);
    REQUIRE(v.size() == 256);
    double n = 0;
    for (double x : v) n += x * x;
    REQUIRE(std::abs(std::sqrt(n) - 1.0) < 1e-9);
  }
}

TEST_CASE("retrieval over a two-doc corpus") {
  auto p = mock();
  KnowledgeBase kb(p);
  kb.add({"health", KnowledgeKind::DesignPattern, "hospital patient admissions and bed occupancy", std::nullopt, {}});
  kb.add({"retail", KnowledgeKind::DesignPattern, "retail store sales dashboard by product category", std::nullopt, {}});
  auto hits = kb.retrieve_topk("retail sales dashboard", 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].id == "retail");
  const auto oracle = brute_force(embed_text("retail sales dashboard", *p), kb.documents(), 2);
  CHECK(oracle[0].id == "retail");
  CHECK(hits[0].score == doctest::Approx(oracle[0].score));

  auto all = kb.retrieve_topk("anything at all", 50);
  CHECK(all.size() == 2);
  CHECK(all[0].score >= all[1].score);

  auto self = kb.retrieve_topk("hospital patient admissions and bed occupancy", 1);
  CHECK(self[0].id == "health");
  CHECK(std::abs(self[0].score - 1.0) < 1e-9);

  CHECK_THROWS_AS(kb.retrieve_topk("x", 0), InvariantViolation);
  CHECK_THROWS_AS(KnowledgeBase(p).retrieve_topk("x", 1), InvariantViolation);
  CHECK_THROWS_AS(kb.add({"retail", KnowledgeKind::TaskRule, "again", std::nullopt, {}}), InvariantViolation);
  CHECK_THROWS_AS(kb.add({"blank", KnowledgeKind::TaskRule, " ", std::nullopt, {}}), InvariantViolation);
}

TEST_CASE("flat scan matches the brute-force oracle") {
  auto p = mock();
  Rng rng(77);
  std::vector<KnowledgeDoc> docs;
  for (int i = 0; i < 1000; ++i) {
    KnowledgeDoc d;
    char id[16];
    std::snprintf(id, sizeof id, "d%04d", i);
    d.id = id;
    d.text = "doc";
    d.embedding.resize(32);
    // Quantized coordinates create exact ties that must break by id.
    for (auto& x : d.embedding) x = static_cast<double>(rng.between(-2, 2));
    if (std::all_of(d.embedding.begin(), d.embedding.end(), [](double x) { return x == 0; })) d.embedding[0] = 1;
    docs.push_back(std::move(d));
  }
  for (int q = 0; q < 50; ++q) {
    std::vector<double> query(32);
    for (auto& x : query) x = rng.uniform(-1, 1);
    const auto k = static_cast<std::size_t>(rng.between(1, 40));
    const auto got = rank(query, docs, k);
    const auto want = brute_force(query, docs, k);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].id == want[i].id);
      REQUIRE(std::abs(got[i].score - want[i].score) < 1e-12);
    }
  }
  // Duplicate vectors tie exactly; lower id wins.
  std::vector<KnowledgeDoc> twins = {{"b", KnowledgeKind::TaskRule, "x", std::nullopt, {1, 0}},
                                     {"a", KnowledgeKind::TaskRule, "x", std::nullopt, {1, 0}}};
  CHECK(rank({1, 0}, twins, 2)[0].id == "a");

  // Permuted coordinates give the same cosine up to the last bit; the id
  // still decides.
  std::vector<KnowledgeDoc> permuted = {{"p1", KnowledgeKind::TaskRule, "x", std::nullopt, {0.85, 0.26, 0.76, 0.13}},
                                        {"p0", KnowledgeKind::TaskRule, "x", std::nullopt, {0.13, 0.76, 0.85, 0.26}}};
  const auto hits = rank({1, 1, 1, 1}, permuted, 2);
  CHECK(hits[0].id == "p0");
  CHECK(std::abs(hits[0].score - hits[1].score) < 1e-12);
}

TEST_CASE("seed corpus holds each knowledge kind and answers layout queries") {
  const auto seeds = seed_documents();
  CHECK(seeds.size() >= 16);
  std::set<KnowledgeKind> kinds;
  for (const auto& d : seeds) kinds.insert(d.kind);
  CHECK(kinds.count(KnowledgeKind::DesignPattern));
  CHECK(kinds.count(KnowledgeKind::TaskRule));
  CHECK(kinds.count(KnowledgeKind::LayoutTemplate));

  KnowledgeBase kb(mock());
  kb.add_all(seed_documents());
  CHECK(kb.retrieve_topk("layout levels and level-1 nodes", 3)[0].id == "dp-two-level-layout");
  CHECK(kb.retrieve_topk("comparison views side by side with one chart type", 1)[0].id == "tr-comparison");
  auto two_level = kb.find("dp-two-level-layout");
  REQUIRE(two_level);
  CHECK(two_level->payload->at("two_level_share").get<double>() == doctest::Approx(0.8));
  CHECK(kb.find("dp-corpus-scope")->payload->at("dashboards").get<int>() == 114);
}

TEST_CASE("enrichment and persistence") {
  auto dir = temp_dir("enrich");
  const auto file = dir / "index.json";
  auto p = mock();
  auto kb = KnowledgeBase::open(p, file);
  REQUIRE(std::filesystem::exists(file));
  const auto before = kb->size();
  const auto prior = kb->documents();

  auto spec = dsl::parse_spec(test::read_fixture("golden_3view.dash.json"));
  CHECK_THROWS_AS(kb->enrich(spec, "summary", std::nullopt), EvaluationRequired);
  evaluator::Verdict failed;
  failed.passed = false;
  failed.violations.push_back({"layout-depth", "layout.root", "too deep"});
  CHECK_THROWS_AS(kb->enrich(spec, "summary", failed), EvaluationRequired);

  const std::string summary = "Global e-commerce sales overview with a country map and quarterly profit";
  auto doc = kb->enrich(spec, summary, evaluator::evaluate(spec));
  CHECK(kb->size() == before + 1);
  CHECK(doc.kind == KnowledgeKind::AcceptedPrototype);
  CHECK(doc.id == "accepted-0001");
  for (std::size_t i = 0; i < prior.size(); ++i) CHECK(to_json(kb->documents()[i]) == to_json(prior[i]));
  CHECK(kb->retrieve_topk(summary, 1)[0].id == doc.id);

  // Reopening reproduces identical bytes.
  auto reopened = KnowledgeBase::open(p, file);
  CHECK(reopened->size() == before + 1);
  CHECK(reopened->serialize() == kb->serialize());
  CHECK(test::read_file(file) == kb->serialize());
  CHECK_FALSE(std::filesystem::exists(dir / "index.json.tmp"));

  test::write_file(dir / "bad.json", R"({"format": "other", "version": 1})");
  CHECK_THROWS_AS(KnowledgeBase::open(p, dir / "bad.json"), StorageError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("retrievals run against snapshots while enrichment proceeds") {
  auto p = mock();
  auto kb = std::make_shared<KnowledgeBase>(p);
  kb->add_all(seed_documents());
  const auto spec = dsl::parse_spec(test::read_fixture("golden_3view.dash.json"));
  const auto verdict = evaluator::evaluate(spec);
  std::atomic<bool> stop{false};
  std::atomic<int> reads{0};
  std::vector<std::jthread> readers;
  for (int r = 0; r < 3; ++r) {
    readers.emplace_back([&] {
      while (!stop) {
        auto hits = kb->retrieve_topk("layout levels", 5);
        if (hits.size() == 5) ++reads;
      }
    });
  }
  for (int i = 0; i < 20; ++i) kb->enrich(spec, "accepted prototype " + std::to_string(i), verdict);
  stop = true;
  readers.clear();
  CHECK(kb->size() == seed_documents().size() + 20);
  CHECK(reads > 0);
  std::set<std::string> ids;
  for (const auto& d : kb->documents()) ids.insert(d.id);
  CHECK(ids.size() == kb->size());
}
