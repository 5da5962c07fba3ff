// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mhop/error.hpp"
#include "mhop/log.hpp"
#include "mhop/model.hpp"
#include "mhop/scoring.hpp"

namespace mhop::kg {

enum class Provenance { original, edited };

struct StoreEntry {
  std::string subject;   // display labels as last written
  std::string relation;
  std::string object;
  Provenance provenance = Provenance::original;

  bool operator==(const StoreEntry&) const = default;
};

/// Functional (subject, relation) -> object map. Keys are matched on
/// normalized text; values keep the label they were written with.
class TripleStore {
 public:
  using Key = std::pair<std::string, std::string>;

  static Key key_of(std::string_view subject, std::string_view relation) {
    return {scoring::normalize(subject), scoring::normalize(relation)};
  }

  std::optional<StoreEntry> lookup(std::string_view subject, std::string_view relation) const {
    auto it = entries_.find(key_of(subject, relation));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<Key, StoreEntry>& entries() const { return entries_; }

  /// Returns the replaced entry, if any.
  std::optional<StoreEntry> put(StoreEntry entry) {
    auto key = key_of(entry.subject, entry.relation);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      entries_.emplace(std::move(key), std::move(entry));
      return std::nullopt;
    }
    auto previous = std::move(it->second);
    it->second = std::move(entry);
    return previous;
  }

  bool operator==(const TripleStore&) const = default;

 private:
  std::map<Key, StoreEntry> entries_;
};

struct StoreConflict {
  std::string case_id;
  FactTriple previous;
  FactTriple replacement;
};

struct BuiltStore {
  TripleStore store;
  std::vector<StoreConflict> conflicts;
};

/// Loads every hop triple; a later record overwriting a different object for
/// the same key counts as one conflict.
inline BuiltStore build_store_with_report(std::span<const SourceRecord> records) {
  BuiltStore out;
  for (const auto& r : records) {
    for (const auto& h : r.hop_chain) {
      if (!h.triple) continue;
      const auto& t = *h.triple;
      auto prev = out.store.put({t.subject, t.relation, t.object, Provenance::original});
      if (prev && scoring::normalize(prev->object) != scoring::normalize(t.object)) {
        log::info("kg: conflicting fact for (" + t.subject + ", " + t.relation + "): '" + prev->object +
                  "' replaced by '" + t.object + "' from case " + r.case_id);
        out.conflicts.push_back({r.case_id, {prev->subject, prev->relation, prev->object}, t});
      }
    }
  }
  return out;
}

inline TripleStore build_store(std::span<const SourceRecord> records) {
  return build_store_with_report(records).store;
}

/// Returns a new store with each edit applied; the key is created if it was absent.
inline TripleStore apply_edits(TripleStore store, std::span<const EditSpec> edits) {
  for (const auto& e : edits) store.put({e.subject, e.relation, e.new_object, Provenance::edited});
  return store;
}

struct WalkResult {
  std::optional<std::string> entity;
  int failed_hop = 0;  // 1-based; 0 on success
  std::string missing_subject;
  std::string missing_relation;

  bool ok() const { return entity.has_value(); }
  std::string diagnostic() const {
    if (ok()) return {};
    return "unresolvable step at hop " + std::to_string(failed_hop) + ": no fact for (" + missing_subject + ", " +
           missing_relation + ")";
  }
};

inline WalkResult walk_chain(const TripleStore& store, std::string_view start, std::span<const std::string> relations) {
  if (relations.empty()) throw Error(ErrorKind::precondition_violation, "walk_chain needs at least one relation");
  std::string current(start);
  for (std::size_t k = 0; k < relations.size(); ++k) {
    auto entry = store.lookup(current, relations[k]);
    if (!entry) {
      WalkResult failed;
      failed.failed_hop = static_cast<int>(k) + 1;
      failed.missing_subject = current;
      failed.missing_relation = relations[k];
      return failed;
    }
    current = entry->object;
  }
  WalkResult done;
  done.entity = std::move(current);
  return done;
}

enum class CheckStatus { pass, fail, not_checkable };

inline std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::not_checkable: return "NOT-CHECKABLE";
  }
  return "FAIL";
}

struct ConsistencyResult {
  CheckStatus status = CheckStatus::not_checkable;
  std::string expected;
  std::string found;
  std::string diagnostic;

  bool passed() const { return status == CheckStatus::pass; }
};

/// Walks the record's relation chain from its first hop subject over the
/// store with the record's own edits applied, and compares the end entity to
/// the record's final answer (aliases allowed).
inline ConsistencyResult check_consistency(const SourceRecord& record, const TripleStore& store) {
  ConsistencyResult result;
  result.expected = record.final_answer;
  if (!record.all_hops_have_triples()) {
    result.diagnostic = "record lacks hop triples";
    return result;
  }
  std::vector<std::string> relations;
  for (const auto& h : record.hop_chain) relations.push_back(h.triple->relation);
  auto edited = apply_edits(store, record.edits);
  auto walk = walk_chain(edited, record.hop_chain.front().triple->subject, relations);
  if (!walk.ok()) {
    result.status = CheckStatus::fail;
    result.diagnostic = walk.diagnostic();
    return result;
  }
  result.found = *walk.entity;
  if (scoring::is_correct(result.found, record.final_answer, record.final_answer_aliases)) {
    result.status = CheckStatus::pass;
  } else {
    result.status = CheckStatus::fail;
    result.diagnostic = "expected '" + record.final_answer + "' but chain walk found '" + result.found + "'";
  }
  return result;
}

}  // namespace mhop::kg
