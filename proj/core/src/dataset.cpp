// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/dataset.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

namespace referi {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, const std::filesystem::path& path, int line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ValueError(path.string() + ":" + std::to_string(line_no) + ": malformed record: " +
                     e.what());
  }
}

std::string require_string(const json& j, const char* field, const std::filesystem::path& path,
                           int line_no) {
  if (!j.contains(field) || !j[field].is_string())
    throw ValueError(path.string() + ":" + std::to_string(line_no) + ": missing field '" +
                     field + "'");
  return j[field].get<std::string>();
}

}  // namespace

FewShotSet load_few_shot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("few-shot file not found: " + path.string());
  std::vector<Example> examples;
  std::set<std::string> seen_queries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const json j = parse_line(line, path, line_no);
    Example ex = make_example(require_string(j, "query", path, line_no),
                              require_string(j, "answer", path, line_no));
    if (!seen_queries.insert(ex.query).second)
      std::cerr << "[referi] warning: duplicate few-shot query at " << path.string() << ":"
                << line_no << "\n";
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw ValueError("few-shot file is empty: " + path.string());
  return FewShotSet(std::move(examples));
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("dataset file not found: " + path.string());
  std::vector<DatasetRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const json j = parse_line(line, path, line_no);
    DatasetRecord rec;
    rec.id = require_string(j, "id", path, line_no);
    rec.query = require_string(j, "query", path, line_no);
    if (j.contains("gold") && !j["gold"].is_null()) rec.gold = j["gold"].get<std::string>();
    if (!seen_ids.insert(rec.id).second)
      throw ValueError(path.string() + ":" + std::to_string(line_no) + ": duplicate id '" +
                       rec.id + "'");
    if (trim(rec.query).empty())
      throw ValueError(path.string() + ":" + std::to_string(line_no) + ": empty query");
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ValueError("dataset file is empty: " + path.string());
  return records;
}

DemonstrationTemplate load_template_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("template file not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValueError("template file unreadable: " + std::string(e.what()));
  }
  DemonstrationTemplate tpl;
  tpl.header = j.value("header", "");
  tpl.example_block = j.value("example_block", "Q: {query}\nA: {answer}");
  tpl.query_block = j.value("query_block", "Q: {query}\nA: ");
  tpl.separator = j.value("separator", "\n\n");
  validate_template(tpl);
  return tpl;
}

}  // namespace referi
