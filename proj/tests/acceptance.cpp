// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion with its
// runtime and exits non-zero if any criterion fails.

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "mhop/pipeline.hpp"
#include "synthetic.hpp"

using namespace mhop;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond && failures_++ < 3) detail_ += (detail_.empty() ? "" : "; ") + what;
  }
  Outcome result() const { return {failures_ == 0, detail_}; }

 private:
  int failures_ = 0;
  std::string detail_;
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mhop_accept_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome round_trip() {
  Check c;
  auto corpus = synth::make_corpus(200, 101);
  auto dir = scratch("rt");
  ingest::write_source(corpus, dir / "cases.json");
  auto parsed = ingest::parse_source(dir / "cases.json");
  c.expect(parsed == corpus, "parse(emit(corpus)) differs from corpus");
  ingest::write_source(parsed, dir / "again.json");
  c.expect(text::read_file(dir / "cases.json") == text::read_file(dir / "again.json"), "second emit differs");
  bool extras = true;
  for (std::size_t i = 0; i < parsed.size() && i < corpus.size(); ++i) extras = extras && parsed[i].extras == corpus[i].extras;
  c.expect(extras, "extras not carried through");
  fs::remove_all(dir);
  return c.result();
}

Outcome split_correctness() {
  Check c;
  for (std::size_t n : {1u, 3u, 10u, 999u, 1000u}) {
    auto corpus = synth::make_corpus(n, 200 + n, 2, 2);
    auto a = datasetgen::split(corpus, 0.7, 42);
    auto b = datasetgen::split(corpus, 0.7, 42);
    const auto expected = static_cast<std::size_t>((7 * n + 5) / 10);
    c.expect(a.train_ids.size() == expected, "N=" + std::to_string(n) + " train size " + std::to_string(a.train_ids.size()));
    c.expect(datasetgen::manifest_csv(a) == datasetgen::manifest_csv(b), "N=" + std::to_string(n) + " manifests differ");
  }
  // Both variants through the file pipeline: train id sets must agree.
  auto dir = scratch("split");
  auto corpus = synth::make_corpus(100, 7);
  ingest::write_source(corpus, dir / "in.json");
  pipeline::convert(dir / "in.json", dir);
  pipeline::split(dir, 0.7, 42, dir);
  auto manifest = datasetgen::parse_manifest_csv(text::read_file(dir / pipeline::files::manifest));
  auto single_train = datasetgen::parse_dataset(dir / "single_train.json");
  auto multi_train = datasetgen::parse_dataset(dir / "multi_train.json");
  std::map<std::string, std::string> id_of_question;
  for (const auto& r : corpus) id_of_question[r.question_variants[0]] = r.case_id;
  auto ids = [&](const std::vector<AlpacaRecord>& records) {
    std::set<std::string> out;
    for (const auto& r : records)
      for (const auto& [question, id] : id_of_question)
        if (r.input.find(question) != std::string::npos) out.insert(id);
    return out;
  };
  const std::set<std::string> from_manifest(manifest.train_ids.begin(), manifest.train_ids.end());
  c.expect(ids(single_train) == ids(multi_train), "single/multi train id sets differ");
  c.expect(ids(single_train) == from_manifest, "train files disagree with manifest");
  c.expect(from_manifest.size() == 70, "train partition size");
  fs::remove_all(dir);
  return c.result();
}

Outcome oracle_consistency() {
  Check c;
  auto corpus = synth::make_corpus(250, 303);
  auto store = kg::build_store(corpus);
  auto facts = synth::all_triples(corpus);
  std::size_t pass = 0;
  for (const auto& r : corpus) {
    auto res = kg::check_consistency(r, store);
    pass += res.passed() ? 1 : 0;
    auto resolved = synth::resolve_recursive(facts, r.edits, r.hop_chain.front().triple->subject, synth::relation_chain(r));
    c.expect(resolved && *resolved == r.final_answer, "recursive resolver disagrees on " + r.case_id);
    auto corrupt = r;
    corrupt.final_answer = "Not " + r.final_answer;
    c.expect(kg::check_consistency(corrupt, store).status == kg::CheckStatus::fail, "corruption not caught on " + r.case_id);
  }
  c.expect(pass == corpus.size(), std::to_string(pass) + "/" + std::to_string(corpus.size()) + " passed");
  return c.result();
}

Outcome edit_semantics() {
  Check c;
  const std::string uk = "United Kingdom";
  const std::string hog = "head_of_government";
  kg::TripleStore s;
  s.put({"London", "country", uk});
  s.put({uk, hog, "Boris Johnson"});
  std::vector<EditSpec> edit{{uk, hog, "Boris Johnson", "Rishi Sunak"}};
  auto edited = kg::apply_edits(s, edit);
  auto hit = edited.lookup(uk, hog);
  c.expect(hit && hit->object == "Rishi Sunak", "edited lookup is not Rishi Sunak");
  for (const auto& [key, e] : edited.entries()) c.expect(e.object != "Boris Johnson", "Boris Johnson still reachable");
  std::vector<std::string> rels{"country", hog};
  auto walk = kg::walk_chain(edited, "London", rels);
  c.expect(walk.ok() && *walk.entity == "Rishi Sunak", "chain walk after edit");

  std::mt19937_64 rng(404);
  auto pick = [&](const char* p, int n) { return std::string(p) + std::to_string(rng() % static_cast<unsigned>(n)); };
  for (int trial = 0; trial < 2000; ++trial) {
    kg::TripleStore store;
    for (int k = 0; k < 12; ++k) store.put({pick("s", 6), pick("r", 3), pick("o", 10)});
    std::vector<EditSpec> edits{{pick("s", 6), pick("r", 3), "", pick("e", 10)}, {pick("s", 6), pick("r", 3), "", pick("e", 10)}};
    auto once = kg::apply_edits(store, edits);
    c.expect(kg::apply_edits(once, edits) == once, "edit idempotence");
    if (edits[0].subject != edits[1].subject || edits[0].relation != edits[1].relation) {
      std::vector<EditSpec> swapped{edits[1], edits[0]};
      c.expect(kg::apply_edits(store, swapped) == once, "disjoint edits do not commute");
    }
  }
  return c.result();
}

Outcome scorer_rule() {
  Check c;
  std::vector<std::string> aliases{"Siddhartha Gautama"};
  c.expect(scoring::is_correct("Siddhartha Gautama", "Gautama Buddha", aliases), "alias example");
  std::mt19937_64 rng(505);
  for (int i = 0; i < 10000; ++i) {
    auto s = synth::random_text(rng);
    auto n = scoring::normalize(s);
    c.expect(scoring::normalize(n) == n, "normalize not idempotent");
    auto g = synth::random_text(rng);
    std::vector<std::string> al{synth::random_text(rng)};
    c.expect(scoring::is_correct(s, g, al) == scoring::is_correct(n, g, al), "is_correct not normalization-invariant");
  }
  return c.result();
}

Outcome decomposition_advantage() {
  Check c;
  auto dir = scratch("adv");
  ingest::write_source(synth::make_corpus(150, 606), dir / "in.json");
  pipeline::convert(dir / "in.json", dir);
  pipeline::RunRequest req;
  req.data_dir = dir;
  req.output_dir = dir;
  req.partition = "all";
  req.mock_scope = backend::MockScope::hops;
  req.config.parallelism = 4;
  req.mode = EvalMode::direct;
  auto direct = pipeline::run(req);
  req.mode = EvalMode::decomposed_scripted;
  auto scripted = pipeline::run(req);
  c.expect(direct.outcomes.size() >= 100, "fewer than 100 cases");
  c.expect(direct.summary.accuracy == 0.0, "direct accuracy " + text::format_double(direct.summary.accuracy));
  c.expect(scripted.summary.accuracy == 1.0, "scripted accuracy " + text::format_double(scripted.summary.accuracy));
  std::vector<fs::path> logs{dir / pipeline::files::outcomes(EvalMode::direct),
                             dir / pipeline::files::outcomes(EvalMode::decomposed_scripted)};
  auto rep = pipeline::score(logs, "mock hops-only");
  auto rows = report::parse_plot_data(rep.plot_csv);
  c.expect(rows.size() == 1 && rows[0].abs_improvement_pp > 0.0, "no positive improvement row");
  c.expect(rep.text.find("+100.00") != std::string::npos, "report text lacks +100.00");
  fs::remove_all(dir);
  return c.result();
}

Outcome train_config() {
  Check c;
  for (int epochs : {2, 10}) {
    TrainConfigSpec spec;
    spec.num_train_epochs = epochs;
    auto dir = scratch("yaml");
    datasetgen::emit_train_config(spec, dir / "train_config.yaml");
    auto lines = text::lines(text::read_file(dir / "train_config.yaml"));
    std::set<std::string> got(lines.begin(), lines.end());
    const std::vector<std::string> wanted{"per_device_train_batch_size: 1", "gradient_accumulation_steps: 8",
                                          "learning_rate: 1.0e-4", "num_train_epochs: " + std::to_string(epochs)};
    for (const auto& want : wanted)
      c.expect(got.contains(want), "missing line '" + want + "'");
    fs::remove_all(dir);
  }
  return c.result();
}

Outcome report_shape() {
  Check c;
  auto dir = scratch("report");
  auto write_log = [&](const std::string& name, EvalMode mode, std::size_t trues) {
    eval::RunHeader header;
    header.mode = mode;
    std::string out = eval::header_json(header).dump() + "\n";
    for (std::size_t i = 0; i < 10000; ++i) {
      EvalOutcome o;
      o.case_id = std::to_string(i);
      o.mode = mode;
      o.verdict = i < trues;
      out += eval::outcome_json(o).dump() + "\n";
    }
    text::write_file(dir / name, out);
    return dir / name;
  };
  std::vector<pipeline::ReportSpec> specs{
      {"Not fine-tuned (base)", write_log("b1.jsonl", EvalMode::direct, 2547), write_log("b2.jsonl", EvalMode::decomposed_scripted, 2593)},
      {"LoRA epoch 2", write_log("e2a.jsonl", EvalMode::direct, 8889), write_log("e2b.jsonl", EvalMode::decomposed_scripted, 8932)},
      {"LoRA epoch 10", write_log("e10a.jsonl", EvalMode::direct, 9033), write_log("e10b.jsonl", EvalMode::decomposed_scripted, 9044)}};
  auto rep = pipeline::report_rows(specs);
  for (const auto* row : {"| Not fine-tuned (base) | 25.47 | 25.93 | +0.46 | +1.81 |",
                          "| LoRA epoch 2 | 88.89 | 89.32 | +0.43 | +0.48 |",
                          "| LoRA epoch 10 | 90.33 | 90.44 | +0.11 | +0.12 |"})
    c.expect(rep.markdown.find(row) != std::string::npos, std::string("missing row ") + row);
  c.expect(rep.text.find(report::kImprovementNote) != std::string::npos, "note missing from text report");
  c.expect(rep.markdown.find(report::kImprovementNote) != std::string::npos, "note missing from markdown report");
  c.expect(report::parse_plot_data(rep.plot_csv).size() == 3, "plot data rows");
  fs::remove_all(dir);
  return c.result();
}

Outcome backend_robustness() {
  Check c;
  httplib::Server server;
  std::atomic<int> requests{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++requests == 1) {
      res.status = 500;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Rishi Sunak"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  RunConfig cfg;
  cfg.max_retries = 3;
  cfg.retry_backoff_ms = 10;
  cfg.timeout_seconds = 2;
  backend::HttpBackend b("http://127.0.0.1:" + std::to_string(port) + "/v1");
  std::vector<backend::ChatMessage> msgs{{backend::Role::user, "Who is the head of government of the United Kingdom?"}};
  try {
    c.expect(b.complete(msgs, cfg) == "Rishi Sunak", "unexpected completion");
  } catch (const std::exception& e) {
    c.expect(false, std::string("complete threw: ") + e.what());
  }
  c.expect(b.attempts() == 2, "attempts " + std::to_string(b.attempts()));
  c.expect(b.attempts() <= 1 + cfg.max_retries, "attempt budget exceeded");
  server.stop();
  t.join();
  return c.result();
}

}  // namespace

int main() {
  log::set_level(log::Level::error);
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;
  };
  const std::vector<Criterion> criteria{
      {"1 round-trip fidelity", round_trip, 1},
      {"2 split correctness", split_correctness, 1},
      {"3 oracle consistency", oracle_consistency, 1},
      {"4 edit semantics", edit_semantics, 5},
      {"5 scorer rule", scorer_rule, 5},
      {"6 decomposition advantage", decomposition_advantage, 10},
      {"7 training-config emission", train_config, 1},
      {"8 report shape", report_shape, 1},
      {"9 backend robustness", backend_robustness, 5},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string note = o.detail;
    if (o.ok && secs > cr.budget_s) {
      o.ok = false;
      note = "took " + text::format_fixed(secs, 3) + " s, budget " + text::format_double(cr.budget_s) + " s";
    }
    failed += o.ok ? 0 : 1;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << cr.name << "  (" << text::format_fixed(secs, 3) << " s)";
    if (!note.empty()) std::cout << "  " << note;
    std::cout << '\n';
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
