// SPDX-License-Identifier: Apache-2.0
//
// Test-only corpus generator and brute-force oracles. Nothing here calls the
// TripleStore, scorer normalization, or converters, so the checks built on it
// stay independent of the code under test.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mhop/model.hpp"

namespace synth {

inline const std::vector<std::string>& relations() {
  static const std::vector<std::string> r{"capital", "head of government", "spouse", "country of citizenship",
                                          "founder", "place of birth", "continent", "official language"};
  return r;
}

inline std::string entity(std::size_t record, std::size_t k) {
  return "Entity " + std::to_string(record) + "-" + std::to_string(k);
}

/// Generated-consistent records: entities are unique per record, every hop
/// carries its triple, and one hop per record is the target of an edit.
inline std::vector<mhop::SourceRecord> make_corpus(std::size_t n, std::uint64_t seed, int min_hops = 2, int max_hops = 4) {
  std::mt19937_64 rng(seed);
  std::vector<mhop::SourceRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int hops = min_hops + static_cast<int>(rng() % static_cast<std::uint64_t>(max_hops - min_hops + 1));
    mhop::SourceRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    r.case_id = id;
    std::vector<std::string> rels;
    for (int k = 0; k < hops; ++k) rels.push_back(relations()[rng() % relations().size()]);
    for (int k = 0; k < hops; ++k) {
      mhop::HopStep h;
      h.index = k + 1;
      h.question = "What is the " + rels[k] + " of " + entity(i, k) + "?";
      h.answer = entity(i, k + 1);
      h.triple = mhop::FactTriple{entity(i, k), rels[k], entity(i, k + 1)};
      r.hop_chain.push_back(h);
    }
    std::string nested = entity(i, 0);
    for (int k = 0; k < hops; ++k) nested = "the " + rels[k] + " of " + nested;
    r.question_variants.push_back("What is " + nested + "?");
    if (rng() % 2) r.question_variants.push_back("Tell me " + nested + ".");
    r.final_answer = entity(i, hops);
    r.final_answer_aliases = {"Alias of " + r.final_answer};
    r.hop_chain.back().answer_aliases = r.final_answer_aliases;
    const auto j = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(hops));
    r.edits.push_back({entity(i, j), rels[j], "Former " + std::to_string(i) + "-" + std::to_string(j), entity(i, j + 1)});
    r.extras = {{"orig", "{\"note\":\"synthetic\",\"n\":" + std::to_string(i) + "}"},
                {"counterfactual_only", "[1,2,{\"x\":null}]"}};
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<mhop::FactTriple> all_triples(const std::vector<mhop::SourceRecord>& records) {
  std::vector<mhop::FactTriple> out;
  for (const auto& r : records)
    for (const auto& h : r.hop_chain)
      if (h.triple) out.push_back(*h.triple);
  return out;
}

/// Recursive resolver over a flat fact list: an edit for the key wins, else
/// the last matching fact in the list.
inline std::optional<std::string> resolve_recursive(const std::vector<mhop::FactTriple>& facts,
                                                    const std::vector<mhop::EditSpec>& edits, const std::string& start,
                                                    const std::vector<std::string>& rels, std::size_t k = 0) {
  if (k == rels.size()) return start;
  std::optional<std::string> next;
  for (const auto& f : facts)
    if (f.subject == start && f.relation == rels[k]) next = f.object;
  for (const auto& e : edits)
    if (e.subject == start && e.relation == rels[k]) next = e.new_object;
  if (!next) return std::nullopt;
  return resolve_recursive(facts, edits, *next, rels, k + 1);
}

/// Every endpoint reachable by following `rels` in order, treating facts as a multigraph.
inline std::set<std::string> enumerate_paths(const std::vector<mhop::FactTriple>& facts, const std::string& start,
                                             const std::vector<std::string>& rels) {
  std::set<std::string> frontier{start};
  for (const auto& rel : rels) {
    std::set<std::string> next;
    for (const auto& node : frontier)
      for (const auto& f : facts)
        if (f.subject == node && f.relation == rel) next.insert(f.object);
    frontier = std::move(next);
  }
  return frontier;
}

inline std::vector<std::string> relation_chain(const mhop::SourceRecord& r) {
  std::vector<std::string> out;
  for (const auto& h : r.hop_chain) out.push_back(h.triple->relation);
  return out;
}

/// The London example: London is in the United Kingdom, whose head of
/// government moved from Boris Johnson to Rishi Sunak.
inline mhop::SourceRecord london_record() {
  mhop::SourceRecord r;
  r.case_id = "london";
  r.question_variants = {"Who is the head of government of the country where London is located?"};
  r.final_answer = "Rishi Sunak";
  r.final_answer_aliases = {"Sunak"};
  r.hop_chain = {
      {1, "Where is London located?", "United Kingdom", {"UK"}, mhop::FactTriple{"London", "country", "United Kingdom"}},
      {2, "Who is the head of government of the United Kingdom?", "Rishi Sunak", {"Sunak"},
       mhop::FactTriple{"United Kingdom", "head_of_government", "Rishi Sunak"}},
  };
  r.edits = {{"United Kingdom", "head_of_government", "Boris Johnson", "Rishi Sunak"}};
  return r;
}

/// Random printable/Unicode-ish string for property tests.
inline std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> atoms{
      "a", "b", "Z", "the ", "The ", "an ", "A ", " ", "  ", "\t", "\n", ".", ",", "!", "?", "\"", "'", "-", "(", ")",
      "\xC3\xA9",          // é precomposed
      "e\xCC\x81",         // e + combining acute
      "\xC3\x89",          // É
      "\xC3\x9F",          // ß
      "\xE1\xBA\x9E",      // ẞ
      "\xEF\xAC\x81",      // ﬁ ligature
      "\xE2\x80\x94",      // em dash (punctuation)
      "\xC2\xA0",          // no-break space
      "\xE3\x80\x80",      // ideographic space
      "\xCE\xA3",          // Σ
      "\xCF\x82",          // final sigma
      "Rishi", "Sunak", "\xE5\x8C\x97\xE4\xBA\xAC",  // 北京
      "\xFF",              // invalid UTF-8 byte
      "0", "9", "\xE2\x80\x9C", "\xE2\x80\x9D"};
  std::string out;
  const auto len = rng() % 12;
  for (std::size_t i = 0; i < len; ++i) out += atoms[rng() % atoms.size()];
  return out;
}

}  // namespace synth
