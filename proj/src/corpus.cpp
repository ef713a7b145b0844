#include "attitude/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attitude/errors.hpp"
#include "attitude/text.hpp"

namespace attitude {

namespace {

using nlohmann::json;

std::string group_id_from(const json& v, const std::string& file, std::size_t line) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(file, line, "group id must be a string or an integer");
}

std::size_t index_from(const json& v, const std::string& file, std::size_t line, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(file, line, std::string(what) + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

Document parse_document(const json& rec, const std::string& file, std::size_t line) {
  if (!rec.is_object()) throw ParseError(file, line, "record is not an object");
  for (const char* field : {"doc_id", "sentences", "mentions", "groups"}) {
    if (!rec.contains(field)) throw ParseError(file, line, std::string("missing field '") + field + "'");
  }
  Document doc;
  if (!rec["doc_id"].is_string()) throw ParseError(file, line, "field 'doc_id' must be a string");
  doc.doc_id = rec["doc_id"].get<std::string>();

  if (!rec["sentences"].is_array()) throw ParseError(file, line, "field 'sentences' must be an array");
  for (const auto& s : rec["sentences"]) {
    if (!s.is_array()) throw ParseError(file, line, "sentence must be an array of tokens");
    std::vector<std::string> tokens;
    for (const auto& t : s) {
      if (!t.is_string()) throw ParseError(file, line, "token must be a string");
      tokens.push_back(t.get<std::string>());
    }
    doc.sentences.push_back(Sentence::from_tokens(std::move(tokens)));
  }

  if (!rec["groups"].is_array()) throw ParseError(file, line, "field 'groups' must be an array");
  for (const auto& g : rec["groups"]) {
    if (!g.is_array() || g.size() < 2) {
      throw ParseError(file, line, "group must be [group_id, variant, ...] with at least one variant");
    }
    SynonymGroup group;
    group.group_id = group_id_from(g[0], file, line);
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!g[i].is_string()) throw ParseError(file, line, "group variant must be a string");
      group.variants.push_back(g[i].get<std::string>());
    }
    doc.groups.push_back(std::move(group));
  }

  if (!rec["mentions"].is_array()) throw ParseError(file, line, "field 'mentions' must be an array");
  for (const auto& m : rec["mentions"]) {
    if (!m.is_array() || m.size() != 4) {
      throw ParseError(file, line, "mention must be [sentence_idx, start, end, group_id]");
    }
    EntityMention mention;
    mention.sentence_idx = index_from(m[0], file, line, "mention sentence index");
    mention.begin = index_from(m[1], file, line, "mention start");
    mention.end = index_from(m[2], file, line, "mention end");
    mention.group_id = group_id_from(m[3], file, line);
    doc.mentions.push_back(std::move(mention));
  }

  try {
    validate_document(doc);
  } catch (const DataError& e) {
    throw ParseError(file, line, e.what());
  }
  return doc;
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Positive: return "positive";
    case Label::Negative: return "negative";
    case Label::Neutral: return "neutral";
  }
  return "neutral";
}

std::optional<Label> parse_label(std::string_view s) {
  if (s == "positive" || s == "pos") return Label::Positive;
  if (s == "negative" || s == "neg") return Label::Negative;
  if (s == "neutral" || s == "neu") return Label::Neutral;
  return std::nullopt;
}

Sentence Sentence::from_tokens(std::vector<std::string> tokens) {
  Sentence s;
  std::size_t offset = 0;
  for (const auto& t : tokens) {
    s.offsets.push_back(offset);
    offset += t.size() + 1;
  }
  s.tokens = std::move(tokens);
  return s;
}

const SynonymGroup* Document::find_group(std::string_view id) const {
  for (const auto& g : groups) {
    if (g.group_id == id) return &g;
  }
  return nullptr;
}

void validate_document(const Document& doc) {
  std::set<std::string> ids;
  for (const auto& g : doc.groups) {
    if (!ids.insert(g.group_id).second) throw DataError("duplicate group id '" + g.group_id + "'");
    if (g.variants.empty()) throw DataError("group '" + g.group_id + "' has no variants");
    std::set<std::string> folded;
    for (const auto& v : g.variants) {
      if (!folded.insert(text::to_lower(v)).second) {
        throw DataError("group '" + g.group_id + "' repeats variant '" + v + "'");
      }
    }
  }
  for (const auto& m : doc.mentions) {
    if (m.sentence_idx >= doc.sentences.size()) {
      throw DataError("mention sentence index " + std::to_string(m.sentence_idx) + " out of range");
    }
    if (m.begin >= m.end) throw DataError("mention span is empty");
    if (m.end > doc.sentences[m.sentence_idx].size()) {
      throw DataError("mention span end " + std::to_string(m.end) + " exceeds sentence length " +
                      std::to_string(doc.sentences[m.sentence_idx].size()));
    }
    if (!ids.count(m.group_id)) throw DataError("mention references unknown group '" + m.group_id + "'");
  }
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    for (std::size_t j = i + 1; j < doc.mentions.size(); ++j) {
      const auto& a = doc.mentions[i];
      const auto& b = doc.mentions[j];
      if (a.sentence_idx == b.sentence_idx && a.begin < b.end && b.begin < a.end) {
        throw DataError("overlapping entity mentions in sentence " + std::to_string(a.sentence_idx));
      }
    }
  }
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open documents file " + path.string());
  const std::string file = path.string();
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(file, lineno, std::string("invalid JSON: ") + e.what());
    }
    Document doc = parse_document(rec, file, lineno);
    if (!seen.insert(doc.doc_id).second) throw ParseError(file, lineno, "duplicate doc_id '" + doc.doc_id + "'");
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Opinion> load_opinions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open opinions file " + path.string());
  const std::string file = path.string();
  std::vector<Opinion> opinions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = text::split(line, '\t');
    if (fields.size() != 4) throw ParseError(file, lineno, "expected 4 tab-separated fields");
    const auto label = parse_label(fields[3]);
    if (!label) throw ParseError(file, lineno, "unknown label '" + fields[3] + "'");
    if (*label == Label::Neutral) throw ParseError(file, lineno, "annotated opinions cannot be neutral");
    if (fields[1] == fields[2]) throw ParseError(file, lineno, "opinion source equals target");
    opinions.push_back({fields[0], fields[1], fields[2], *label, Provenance::Annotated});
  }
  return opinions;
}

Corpus load_corpus(const std::filesystem::path& documents, const std::filesystem::path& opinions) {
  Corpus corpus;
  corpus.documents = load_documents(documents);
  if (!opinions.empty()) corpus.opinions = load_opinions(opinions);
  std::map<std::string, const Document*> by_id;
  for (const auto& d : corpus.documents) by_id[d.doc_id] = &d;
  for (std::size_t i = 0; i < corpus.opinions.size(); ++i) {
    const auto& op = corpus.opinions[i];
    const auto it = by_id.find(op.doc_id);
    if (it == by_id.end()) {
      throw ParseError(opinions.string(), i + 1, "opinion references unknown document '" + op.doc_id + "'");
    }
    for (const auto* g : {&op.source_group, &op.target_group}) {
      if (!it->second->find_group(*g)) {
        throw ParseError(opinions.string(), i + 1, "opinion references unknown group '" + *g + "'");
      }
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    const auto docs = path / "documents.jsonl";
    const auto ops = path / "opinions.tsv";
    return load_corpus(docs, std::filesystem::exists(ops) ? ops : std::filesystem::path());
  }
  return load_corpus(path, std::filesystem::path());
}

void write_documents(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& d : docs) {
    json rec;
    rec["doc_id"] = d.doc_id;
    rec["sentences"] = json::array();
    for (const auto& s : d.sentences) rec["sentences"].push_back(s.tokens);
    rec["mentions"] = json::array();
    for (const auto& m : d.mentions) rec["mentions"].push_back({m.sentence_idx, m.begin, m.end, m.group_id});
    rec["groups"] = json::array();
    for (const auto& g : d.groups) {
      json arr = json::array({g.group_id});
      for (const auto& v : g.variants) arr.push_back(v);
      rec["groups"].push_back(arr);
    }
    out << rec.dump() << '\n';
  }
}

void write_opinions(const std::vector<Opinion>& opinions, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& op : opinions) {
    out << op.doc_id << '\t' << op.source_group << '\t' << op.target_group << '\t' << to_string(op.label) << '\n';
  }
}

std::vector<Opinion> augment_neutral(const Document& doc, const std::vector<Opinion>& annotated) {
  std::set<std::pair<std::string, std::string>> present;
  for (const auto& op : annotated) present.emplace(op.source_group, op.target_group);

  std::set<std::pair<std::string, std::string>> cooccurring;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    std::set<std::string> groups;
    for (const auto& m : doc.mentions) {
      if (m.sentence_idx == s) groups.insert(m.group_id);
    }
    for (const auto& a : groups) {
      for (const auto& b : groups) {
        if (a != b) cooccurring.emplace(a, b);
      }
    }
  }

  std::vector<Opinion> out = annotated;
  for (const auto& [src, tgt] : cooccurring) {
    if (!present.count({src, tgt})) {
      out.push_back({doc.doc_id, src, tgt, Label::Neutral, Provenance::Augmented});
    }
  }
  return out;
}

std::vector<ContextAnchor> extract_contexts(const Document& doc, const std::vector<Opinion>& opinions) {
  std::vector<ContextAnchor> out;
  for (const auto& op : opinions) {
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      std::optional<std::pair<std::size_t, std::size_t>> best;
      std::size_t best_dist = 0;
      for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
        const auto& subj = doc.mentions[i];
        if (subj.sentence_idx != s || subj.group_id != op.source_group) continue;
        for (std::size_t j = 0; j < doc.mentions.size(); ++j) {
          const auto& obj = doc.mentions[j];
          if (obj.sentence_idx != s || obj.group_id != op.target_group) continue;
          const std::size_t dist = subj.begin > obj.begin ? subj.begin - obj.begin : obj.begin - subj.begin;
          const bool better = !best || dist < best_dist ||
                              (dist == best_dist && (subj.begin < doc.mentions[best->first].begin ||
                                                     (subj.begin == doc.mentions[best->first].begin &&
                                                      obj.begin < doc.mentions[best->second].begin)));
          if (better) {
            best = std::pair{i, j};
            best_dist = dist;
          }
        }
      }
      if (best) {
        out.push_back({doc.doc_id, s, op.source_group, op.target_group, op.label, best->first, best->second});
      }
    }
  }
  return out;
}

std::vector<std::string> FoldAssignment::docs_in(std::size_t fold) const {
  std::vector<std::string> ids;
  for (const auto& [id, f] : fold_of_doc) {
    if (f == fold) ids.push_back(id);
  }
  return ids;
}

FoldAssignment split_folds(const std::vector<Document>& documents, std::size_t k, std::uint64_t seed) {
  std::vector<DocumentInfo> infos;
  for (const auto& d : documents) infos.push_back({d.doc_id, d.sentences.size()});
  return split_folds(infos, k, seed);
}

FoldAssignment split_folds(const std::vector<DocumentInfo>& docs, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw DataError("fold count must be positive");
  if (docs.size() < k) {
    throw DataError("cannot split " + std::to_string(docs.size()) + " documents into " + std::to_string(k) +
                    " folds");
  }
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return docs[a].sentence_count > docs[b].sentence_count;
  });

  FoldAssignment fa;
  fa.sentence_counts.assign(k, 0);
  std::vector<std::size_t> members(k, 0);
  for (std::size_t idx : order) {
    // Lightest fold; empty folds first so that every fold receives a document.
    std::size_t target = 0;
    for (std::size_t f = 1; f < k; ++f) {
      const auto key = [&](std::size_t g) { return std::pair{members[g] > 0, fa.sentence_counts[g]}; };
      if (key(f) < key(target)) target = f;
    }
    fa.fold_of_doc[docs[idx].doc_id] = target;
    fa.sentence_counts[target] += docs[idx].sentence_count;
    ++members[target];
  }
  return fa;
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  SplitManifest manifest;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    if (line.back() == '\r') line.pop_back();
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2) throw ParseError(path.string(), lineno, "expected doc_id<TAB>train|test");
    Split split;
    if (fields[1] == "train") {
      split = Split::Train;
    } else if (fields[1] == "test") {
      split = Split::Test;
    } else {
      throw ParseError(path.string(), lineno, "unknown split '" + fields[1] + "'");
    }
    if (!manifest.emplace(fields[0], split).second) {
      throw ParseError(path.string(), lineno, "duplicate doc_id '" + fields[0] + "'");
    }
  }
  return manifest;
}

std::pair<std::vector<Document>, std::vector<Document>> train_test_split(const std::vector<Document>& docs,
                                                                         const SplitManifest& manifest) {
  std::set<std::string> ids;
  for (const auto& d : docs) ids.insert(d.doc_id);
  for (const auto& [id, split] : manifest) {
    if (!ids.count(id)) throw DataError("manifest lists unknown document '" + id + "'");
  }
  std::pair<std::vector<Document>, std::vector<Document>> out;
  for (const auto& d : docs) {
    const auto it = manifest.find(d.doc_id);
    if (it == manifest.end()) throw DataError("manifest is missing document '" + d.doc_id + "'");
    (it->second == Split::Train ? out.first : out.second).push_back(d);
  }
  return out;
}

}  // namespace attitude
