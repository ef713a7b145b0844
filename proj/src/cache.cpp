#include "attitude/dataset.hpp"

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "attitude/errors.hpp"
#include "attitude/text.hpp"

namespace attitude {

using nlohmann::json;

PreparedCorpus PreparedCorpus::subset(const std::set<std::string>& ids) const {
  PreparedCorpus out;
  out.max_length = max_length;
  for (const auto& d : documents) {
    if (ids.count(d.doc_id)) out.documents.push_back(d);
  }
  for (const auto& op : opinions) {
    if (ids.count(op.doc_id)) out.opinions.push_back(op);
  }
  for (const auto& c : contexts) {
    if (ids.count(c.doc_id)) out.contexts.push_back(c);
  }
  return out;
}

std::vector<std::string> PreparedCorpus::doc_ids() const {
  std::vector<std::string> ids;
  for (const auto& d : documents) ids.push_back(d.doc_id);
  return ids;
}

PreparedCorpus prepare_corpus(const Corpus& corpus, const Lexicons& lex, std::size_t n,
                              const Lemmatizer& lemmatizer) {
  PreparedCorpus out;
  out.max_length = n;
  std::map<std::string, std::vector<Opinion>> by_doc;
  for (const auto& op : corpus.opinions) by_doc[op.doc_id].push_back(op);
  for (const auto& doc : corpus.documents) {
    out.documents.push_back({doc.doc_id, doc.sentences.size()});
    const auto opinions = augment_neutral(doc, by_doc[doc.doc_id]);
    out.opinions.insert(out.opinions.end(), opinions.begin(), opinions.end());
    for (const auto& anchor : extract_contexts(doc, opinions)) {
      auto seq = crop_to_window(termize(doc, anchor, lex, lemmatizer), n);
      if (!seq) {
        ++out.dropped;
        continue;
      }
      ContextSample sample;
      sample.doc_id = anchor.doc_id;
      sample.sentence_idx = anchor.sentence_idx;
      sample.source_group = anchor.source_group;
      sample.target_group = anchor.target_group;
      sample.label = anchor.label;
      sample.terms = std::move(*seq);
      for (const auto& t : sample.terms.terms) sample.groups.push_back(group_of(t, lex));
      out.contexts.push_back(std::move(sample));
    }
  }
  return out;
}

namespace {

json term_to_json(const Term& t, AnalysisGroup g) {
  json j;
  j["k"] = to_string(t.kind);
  j["s"] = t.surface;
  j["g"] = to_string(g);
  if (t.kind == TermKind::Word || t.kind == TermKind::Frame) j["l"] = t.lemma;
  if (t.kind == TermKind::Frame) j["p"] = to_string(t.polarity);
  if (t.kind == TermKind::Token) j["t"] = to_string(t.token);
  return j;
}

template <typename T>
T field(const json& j, const char* name, const std::string& file, std::size_t line) {
  if (!j.contains(name)) throw ParseError(file, line, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ParseError(file, line, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

void write_cache(const PreparedCorpus& prepared, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write cache " + path.string());
  {
    json rec;
    rec["type"] = "meta";
    rec["max_length"] = prepared.max_length;
    rec["dropped"] = prepared.dropped;
    out << rec.dump() << '\n';
  }
  for (const auto& d : prepared.documents) {
    json rec;
    rec["type"] = "document";
    rec["doc_id"] = d.doc_id;
    rec["sentences"] = d.sentence_count;
    out << rec.dump() << '\n';
  }
  for (const auto& op : prepared.opinions) {
    json rec;
    rec["type"] = "opinion";
    rec["doc_id"] = op.doc_id;
    rec["source"] = op.source_group;
    rec["target"] = op.target_group;
    rec["label"] = to_string(op.label);
    rec["provenance"] = op.provenance == Provenance::Annotated ? "annotated" : "augmented";
    out << rec.dump() << '\n';
  }
  for (const auto& c : prepared.contexts) {
    json rec;
    rec["type"] = "context";
    rec["doc_id"] = c.doc_id;
    rec["sentence"] = c.sentence_idx;
    rec["source"] = c.source_group;
    rec["target"] = c.target_group;
    rec["label"] = to_string(c.label);
    rec["subj_pos"] = c.terms.subj_pos;
    rec["obj_pos"] = c.terms.obj_pos;
    json terms = json::array();
    for (std::size_t i = 0; i < c.terms.size(); ++i) {
      terms.push_back(term_to_json(c.terms.terms[i], i < c.groups.size() ? c.groups[i] : AnalysisGroup::Other));
    }
    rec["terms"] = std::move(terms);
    out << rec.dump() << '\n';
  }
}

PreparedCorpus read_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open cache " + path.string());
  const std::string file = path.string();
  PreparedCorpus out;
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
    const auto type = field<std::string>(rec, "type", file, lineno);
    if (type == "meta") {
      out.max_length = field<std::size_t>(rec, "max_length", file, lineno);
      out.dropped = field<std::size_t>(rec, "dropped", file, lineno);
    } else if (type == "document") {
      out.documents.push_back(
          {field<std::string>(rec, "doc_id", file, lineno), field<std::size_t>(rec, "sentences", file, lineno)});
    } else if (type == "opinion") {
      Opinion op;
      op.doc_id = field<std::string>(rec, "doc_id", file, lineno);
      op.source_group = field<std::string>(rec, "source", file, lineno);
      op.target_group = field<std::string>(rec, "target", file, lineno);
      const auto label = parse_label(field<std::string>(rec, "label", file, lineno));
      if (!label) throw ParseError(file, lineno, "unknown label");
      op.label = *label;
      op.provenance = field<std::string>(rec, "provenance", file, lineno) == "annotated" ? Provenance::Annotated
                                                                                          : Provenance::Augmented;
      out.opinions.push_back(std::move(op));
    } else if (type == "context") {
      ContextSample c;
      c.doc_id = field<std::string>(rec, "doc_id", file, lineno);
      c.sentence_idx = field<std::size_t>(rec, "sentence", file, lineno);
      c.source_group = field<std::string>(rec, "source", file, lineno);
      c.target_group = field<std::string>(rec, "target", file, lineno);
      const auto label = parse_label(field<std::string>(rec, "label", file, lineno));
      if (!label) throw ParseError(file, lineno, "unknown label");
      c.label = *label;
      c.terms.subj_pos = field<std::size_t>(rec, "subj_pos", file, lineno);
      c.terms.obj_pos = field<std::size_t>(rec, "obj_pos", file, lineno);
      if (!rec.contains("terms") || !rec["terms"].is_array()) throw ParseError(file, lineno, "missing terms");
      for (const auto& tj : rec["terms"]) {
        const auto kind = parse_term_kind(field<std::string>(tj, "k", file, lineno));
        const auto group = parse_analysis_group(field<std::string>(tj, "g", file, lineno));
        if (!kind || !group) throw ParseError(file, lineno, "unknown term kind or group");
        Term t;
        t.kind = *kind;
        t.surface = field<std::string>(tj, "s", file, lineno);
        if (t.kind == TermKind::Word || t.kind == TermKind::Frame) t.lemma = field<std::string>(tj, "l", file, lineno);
        if (t.kind == TermKind::Frame) {
          const auto p = parse_polarity(field<std::string>(tj, "p", file, lineno));
          if (!p) throw ParseError(file, lineno, "unknown polarity");
          t.polarity = *p;
        }
        if (t.kind == TermKind::Token) {
          const auto tk = parse_token_kind(field<std::string>(tj, "t", file, lineno));
          if (!tk) throw ParseError(file, lineno, "unknown token kind");
          t.token = *tk;
        }
        c.terms.terms.push_back(std::move(t));
        c.groups.push_back(*group);
      }
      if (!c.terms.valid()) throw ParseError(file, lineno, "invalid term sequence");
      out.contexts.push_back(std::move(c));
    } else {
      throw ParseError(file, lineno, "unknown record type '" + type + "'");
    }
  }
  return out;
}

LabelCounts count_labels(const std::vector<ContextSample>& contexts) {
  LabelCounts counts;
  for (const auto& c : contexts) {
    switch (c.label) {
      case Label::Positive: ++counts.positive; break;
      case Label::Negative: ++counts.negative; break;
      case Label::Neutral: ++counts.neutral; break;
    }
  }
  return counts;
}

}  // namespace attitude
