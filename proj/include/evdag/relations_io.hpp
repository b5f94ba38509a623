#pragma once

// Predicted-relation files: newline-delimited JSON records with fields
// doc_id, trigger_id, role, arg_id. Records that do not resolve against the
// loaded documents go to a rejects report; the run continues.

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "evdag/error.hpp"
#include "evdag/types.hpp"

namespace evdag {

struct RelationsFile {
  std::map<std::string, std::vector<Relation>> by_doc;
  std::vector<std::string> rejects;
  long accepted = 0;
};

inline RelationsFile read_relations_file(const std::string& path,
                                         const std::vector<Document>& docs) {
  std::map<std::string, const Document*> doc_by_id;
  for (const Document& d : docs) doc_by_id[d.id] = &d;

  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open relations file '" + path + "'");

  RelationsFile out;
  std::map<std::string, std::set<std::string>> seen; // doc -> relation keys
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::string origin = path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, origin + ": " + e.what());
    }
    std::string doc_id, trigger_id, role, arg_id;
    try {
      doc_id = j.at("doc_id").get<std::string>();
      trigger_id = j.at("trigger_id").get<std::string>();
      role = j.at("role").get<std::string>();
      arg_id = j.at("arg_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, origin + ": " + e.what());
    }

    auto doc_it = doc_by_id.find(doc_id);
    if (doc_it == doc_by_id.end()) {
      out.rejects.push_back(origin + ": unknown document '" + doc_id + "'");
      continue;
    }
    const Document& doc = *doc_it->second;
    const Mention* trig = doc.find_mention(trigger_id);
    const Mention* arg = doc.find_mention(arg_id);
    if (!trig) {
      out.rejects.push_back(origin + ": unknown trigger id '" + trigger_id + "'");
      continue;
    }
    if (!arg) {
      out.rejects.push_back(origin + ": unknown argument id '" + arg_id + "'");
      continue;
    }
    if (!trig->is_trigger()) {
      out.rejects.push_back(origin + ": '" + trigger_id + "' is not a trigger mention");
      continue;
    }
    if (trig->sentence != arg->sentence) {
      out.rejects.push_back(origin + ": relation crosses sentence bounds");
      continue;
    }
    Relation r;
    r.trigger_id = trigger_id;
    r.role = role;
    r.arg_id = arg_id;
    r.provenance = Provenance::Predicted;
    if (!seen[doc_id].insert(r.key()).second) continue; // set semantics
    r.id = "R" + std::to_string(++out.accepted);
    out.by_doc[doc_id].push_back(std::move(r));
  }
  return out;
}

inline void write_relations_file(const std::string& path,
                                 const std::map<std::string, std::vector<Relation>>& by_doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write relations file '" + path + "'");
  for (const auto& [doc_id, rels] : by_doc) {
    for (const Relation& r : rels) {
      nlohmann::json j{{"doc_id", doc_id},
                       {"trigger_id", r.trigger_id},
                       {"role", r.role},
                       {"arg_id", r.arg_id}};
      out << j.dump() << '\n';
    }
  }
}

} // namespace evdag
