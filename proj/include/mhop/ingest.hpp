// SPDX-License-Identifier: Apache-2.0
//
// Reader/writer for MQuAKE-T style case files (a JSON array of objects).
//
// Accepted field aliases (first match wins, the other spelling is kept in
// extras untouched):
//   questions | question                 -> question_variants
//   new_answer | answer                  -> final_answer
//   new_answer_alias | answer_alias      -> final_answer_aliases
//   new_single_hops | single_hops        -> hop_chain
//   requested_rewrite                    -> edits
//   case_id                              -> case_id (synthesized when absent)
// Every other top-level key is carried through verbatim in `extras`.
#pragma once

#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "mhop/error.hpp"
#include "mhop/log.hpp"
#include "mhop/model.hpp"
#include "mhop/scoring.hpp"
#include "mhop/text.hpp"

namespace mhop::ingest {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string where(std::size_t case_index, std::string_view field) {
  return "case " + std::to_string(case_index) + ": " + std::string(field);
}

[[noreturn]] inline void bad_type(std::size_t case_index, std::string_view field, std::string_view expected) {
  throw Error(ErrorKind::malformed_syntax, where(case_index, field) + " must be " + std::string(expected));
}

inline std::string as_text(const Json& v, std::size_t case_index, std::string_view field) {
  if (!v.is_string()) bad_type(case_index, field, "a string");
  return v.get<std::string>();
}

inline std::vector<std::string> as_text_list(const Json& v, std::size_t case_index, std::string_view field) {
  if (!v.is_array()) bad_type(case_index, field, "an array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& item : v) out.push_back(as_text(item, case_index, field));
  return out;
}

/// Entity targets appear either as {"str": "..."} (MQuAKE) or as a bare string.
inline std::string as_entity(const Json& v, std::size_t case_index, std::string_view field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object() && v.contains("str")) return as_text(v.at("str"), case_index, field);
  bad_type(case_index, field, "a string or an object with \"str\"");
}

inline FactTriple as_triple(const Json& v, std::size_t case_index, std::string_view field) {
  if (v.is_array() && v.size() == 3) {
    return {as_text(v[0], case_index, field), as_text(v[1], case_index, field), as_text(v[2], case_index, field)};
  }
  if (v.is_object() && v.contains("subject") && v.contains("relation") && v.contains("object")) {
    return {as_text(v.at("subject"), case_index, field), as_text(v.at("relation"), case_index, field),
            as_text(v.at("object"), case_index, field)};
  }
  bad_type(case_index, field, "[subject, relation, object] or {subject, relation, object}");
}

inline std::string synthesize_question(const FactTriple& t) {
  return "What is the " + t.relation + " of " + t.subject + "?";
}

/// Picks the first present key among `names`; returns nullptr when none is present.
inline const Json* pick(const Json& obj, std::initializer_list<std::string_view> names, std::string* chosen) {
  for (auto n : names) {
    auto it = obj.find(std::string(n));
    if (it != obj.end()) {
      if (chosen) *chosen = std::string(n);
      return &*it;
    }
  }
  return nullptr;
}

/// Hop triples taken from the MQuAKE "orig" block when hops carry none:
/// labels from *_triples_labeled, relation ids from *_triples when aligned.
inline std::vector<FactTriple> triples_from_orig(const Json& record, bool use_new, std::size_t hop_count,
                                                 std::size_t case_index) {
  auto orig = record.find("orig");
  if (orig == record.end() || !orig->is_object()) return {};
  const std::string labeled_key = use_new ? "new_triples_labeled" : "triples_labeled";
  const std::string id_key = use_new ? "new_triples" : "triples";
  auto labeled = orig->find(labeled_key);
  if (labeled == orig->end() || !labeled->is_array() || labeled->size() != hop_count) return {};
  std::vector<FactTriple> out;
  for (const auto& t : *labeled) out.push_back(as_triple(t, case_index, "orig." + labeled_key));
  auto ids = orig->find(id_key);
  if (ids != orig->end() && ids->is_array() && ids->size() == hop_count) {
    for (std::size_t k = 0; k < hop_count; ++k) {
      const auto& t = (*ids)[k];
      if (t.is_array() && t.size() == 3 && t[1].is_string()) out[k].relation = t[1].get<std::string>();
    }
  }
  return out;
}

inline HopStep parse_hop(const Json& hop, std::size_t position, std::size_t case_index) {
  const auto field = "hop_chain[" + std::to_string(position) + "]";
  if (!hop.is_object()) bad_type(case_index, field, "an object");
  HopStep step;
  step.index = static_cast<int>(position) + 1;
  if (auto it = hop.find("index"); it != hop.end()) {
    if (!it->is_number_integer()) bad_type(case_index, field + ".index", "an integer");
    step.index = it->get<int>();
  }
  if (auto it = hop.find("triple"); it != hop.end() && !it->is_null())
    step.triple = as_triple(*it, case_index, field + ".triple");
  if (auto it = hop.find("answer"); it != hop.end())
    step.answer = as_text(*it, case_index, field + ".answer");
  else
    throw Error(ErrorKind::missing_required_field, where(case_index, field + ".answer"));
  if (auto it = hop.find("answer_alias"); it != hop.end() && !it->is_null())
    step.answer_aliases = as_text_list(*it, case_index, field + ".answer_alias");
  if (auto it = hop.find("question"); it != hop.end()) {
    step.question = as_text(*it, case_index, field + ".question");
  } else if (step.triple) {
    step.question = synthesize_question(*step.triple);
  } else {
    throw Error(ErrorKind::missing_required_field, where(case_index, field + ".question"));
  }
  return step;
}

inline EditSpec parse_edit(const Json& e, std::size_t position, std::size_t case_index) {
  const auto field = "edits[" + std::to_string(position) + "]";
  if (!e.is_object()) bad_type(case_index, field, "an object");
  auto require = [&](std::initializer_list<std::string_view> names, std::string_view canonical) -> const Json& {
    if (const Json* v = pick(e, names, nullptr)) return *v;
    throw Error(ErrorKind::missing_required_field, where(case_index, field + "." + std::string(canonical)));
  };
  EditSpec spec;
  spec.subject = as_text(require({"subject"}, "subject"), case_index, field + ".subject");
  spec.relation = as_text(require({"relation", "relation_id"}, "relation"), case_index, field + ".relation");
  spec.old_object = as_entity(require({"target_true", "old_object"}, "old_object"), case_index, field + ".old_object");
  spec.new_object = as_entity(require({"target_new", "new_object"}, "new_object"), case_index, field + ".new_object");
  return spec;
}

inline std::string padded_ordinal(std::size_t n) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << n;
  return ss.str();
}

inline SourceRecord parse_record(const Json& obj, std::size_t case_index) {
  if (!obj.is_object()) throw Error(ErrorKind::malformed_syntax, "case " + std::to_string(case_index) + " is not an object");
  std::unordered_set<std::string> consumed;
  SourceRecord r;

  if (auto it = obj.find("case_id"); it != obj.end()) {
    consumed.insert("case_id");
    if (it->is_string())
      r.case_id = it->get<std::string>();
    else if (it->is_number_integer())
      r.case_id = std::to_string(it->get<long long>());
    else
      bad_type(case_index, "case_id", "a string or an integer");
  } else {
    r.case_id = padded_ordinal(case_index + 1);
  }

  std::string key;
  if (const Json* q = pick(obj, {"questions", "question"}, &key)) {
    consumed.insert(key);
    r.question_variants = q->is_string() ? std::vector<std::string>{q->get<std::string>()}
                                         : as_text_list(*q, case_index, "question_variants");
  } else {
    throw Error(ErrorKind::missing_required_field, where(case_index, "question_variants"));
  }

  if (const Json* a = pick(obj, {"new_answer", "answer"}, &key)) {
    consumed.insert(key);
    r.final_answer = as_text(*a, case_index, "final_answer");
  } else {
    throw Error(ErrorKind::missing_required_field, where(case_index, "final_answer"));
  }

  if (const Json* a = pick(obj, {"new_answer_alias", "answer_alias"}, &key)) {
    consumed.insert(key);
    if (!a->is_null()) r.final_answer_aliases = as_text_list(*a, case_index, "final_answer_aliases");
  }

  bool new_chain = false;
  if (const Json* hops = pick(obj, {"new_single_hops", "single_hops"}, &key)) {
    consumed.insert(key);
    new_chain = key == "new_single_hops";
    if (!hops->is_array()) bad_type(case_index, "hop_chain", "an array");
    for (std::size_t k = 0; k < hops->size(); ++k) r.hop_chain.push_back(parse_hop((*hops)[k], k, case_index));
  } else {
    throw Error(ErrorKind::missing_required_field, where(case_index, "hop_chain"));
  }

  bool any_triple = false;
  for (const auto& h : r.hop_chain) any_triple = any_triple || h.triple.has_value();
  if (!any_triple && !r.hop_chain.empty()) {
    auto triples = triples_from_orig(obj, new_chain, r.hop_chain.size(), case_index);
    for (std::size_t k = 0; k < triples.size(); ++k) r.hop_chain[k].triple = triples[k];
  }

  if (auto it = obj.find("requested_rewrite"); it != obj.end()) {
    consumed.insert("requested_rewrite");
    if (it->is_object()) {
      r.edits.push_back(parse_edit(*it, 0, case_index));
    } else if (it->is_array()) {
      for (std::size_t k = 0; k < it->size(); ++k) r.edits.push_back(parse_edit((*it)[k], k, case_index));
    } else {
      bad_type(case_index, "edits", "an array of objects");
    }
  } else {
    throw Error(ErrorKind::missing_required_field, where(case_index, "edits"));
  }

  for (const auto& [k, v] : obj.items()) {
    if (!consumed.contains(k)) r.extras.emplace_back(k, v.dump());
  }
  return r;
}

}  // namespace detail

/// Parses file content. Throws malformed-syntax (with byte offset) or missing-required-field.
inline std::vector<SourceRecord> parse_source_text(std::string_view content) {
  Json doc;
  try {
    doc = Json::parse(content.begin(), content.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::malformed_syntax, "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::malformed_syntax, "top level must be an array of objects");
  std::vector<SourceRecord> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(detail::parse_record(doc[i], i));
  return out;
}

inline std::vector<SourceRecord> parse_source(const std::filesystem::path& path) {
  return parse_source_text(text::read_file(path));
}

inline Json to_json(const SourceRecord& r) {
  Json obj = Json::object();
  obj["case_id"] = r.case_id;
  obj["questions"] = r.question_variants;
  obj["new_answer"] = r.final_answer;
  obj["new_answer_alias"] = r.final_answer_aliases;
  Json hops = Json::array();
  for (const auto& h : r.hop_chain) {
    Json hop = Json::object();
    hop["index"] = h.index;
    hop["question"] = h.question;
    hop["answer"] = h.answer;
    hop["answer_alias"] = h.answer_aliases;
    if (h.triple) hop["triple"] = {{"subject", h.triple->subject}, {"relation", h.triple->relation}, {"object", h.triple->object}};
    hops.push_back(std::move(hop));
  }
  obj["new_single_hops"] = std::move(hops);
  Json edits = Json::array();
  for (const auto& e : r.edits) {
    edits.push_back({{"subject", e.subject},
                     {"relation", e.relation},
                     {"target_true", {{"str", e.old_object}}},
                     {"target_new", {{"str", e.new_object}}}});
  }
  obj["requested_rewrite"] = std::move(edits);
  for (const auto& [k, v] : r.extras) obj[k] = Json::parse(v);
  return obj;
}

/// Writes records back in the canonical (post-edit field names) layout.
inline std::string serialize_source(std::span<const SourceRecord> records) {
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr.dump(2) + "\n";
}

inline void write_source(std::span<const SourceRecord> records, const std::filesystem::path& path) {
  text::write_file(path, serialize_source(records));
}

struct DedupeResult {
  std::vector<SourceRecord> records;
  std::vector<std::string> dropped_case_ids;
};

inline std::string dedupe_key(const SourceRecord& r) {
  const std::string question = r.question_variants.empty() ? std::string() : r.question_variants.front();
  return scoring::normalize(question) + '\x1f' + r.final_answer;
}

/// First occurrence of each (normalized first question, final answer) key wins.
inline DedupeResult dedupe(std::vector<SourceRecord> records) {
  DedupeResult result;
  std::unordered_set<std::string> seen;
  for (auto& r : records) {
    if (seen.insert(dedupe_key(r)).second) {
      result.records.push_back(std::move(r));
    } else {
      log::info("dedupe: dropping case " + r.case_id + " (duplicate question/answer)");
      result.dropped_case_ids.push_back(r.case_id);
    }
  }
  return result;
}

struct DroppedRecord {
  std::string case_id;
  std::vector<Violation> reasons;
};

struct CleanResult {
  std::vector<SourceRecord> records;
  std::vector<DroppedRecord> dropped;
};

inline SourceRecord trimmed(SourceRecord r) {
  auto trim_all = [](std::vector<std::string>& xs) {
    for (auto& x : xs) x = text::trim(x);
  };
  auto trim_triple = [](FactTriple& t) {
    t.subject = text::trim(t.subject);
    t.relation = text::trim(t.relation);
    t.object = text::trim(t.object);
  };
  r.case_id = text::trim(r.case_id);
  trim_all(r.question_variants);
  r.final_answer = text::trim(r.final_answer);
  trim_all(r.final_answer_aliases);
  for (auto& h : r.hop_chain) {
    h.question = text::trim(h.question);
    h.answer = text::trim(h.answer);
    trim_all(h.answer_aliases);
    if (h.triple) trim_triple(*h.triple);
  }
  for (auto& e : r.edits) {
    e.subject = text::trim(e.subject);
    e.relation = text::trim(e.relation);
    e.old_object = text::trim(e.old_object);
    e.new_object = text::trim(e.new_object);
  }
  return r;
}

/// Trims every text field (extras excluded) and drops records that fail validation.
inline CleanResult clean(std::vector<SourceRecord> records) {
  CleanResult result;
  for (auto& raw : records) {
    auto r = trimmed(std::move(raw));
    auto violations = validate(r);
    if (violations.empty()) {
      result.records.push_back(std::move(r));
      continue;
    }
    std::string msg = "clean: dropping case " + r.case_id + ":";
    for (const auto& v : violations) msg += " [" + describe(v) + "]";
    log::warning(msg);
    result.dropped.push_back({r.case_id, std::move(violations)});
  }
  return result;
}

}  // namespace mhop::ingest
