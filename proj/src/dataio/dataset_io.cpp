// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/dataio/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "promptforge/core/error.hpp"

namespace promptforge::dataio {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

// `where` is "line N" or "record N" and prefixes every error.
TaskExample example_from_object(const ordered_json& obj, std::size_t ordinal,
                                const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where, "expected a JSON object");
  TaskExample ex;
  for (const char* key : {"question", "prompt", "answer"}) {
    if (!obj.contains(key)) throw ValidationError(where + ": " + key, "missing mandatory key");
    if (!obj.at(key).is_string()) throw ValidationError(where + ": " + key, "must be a string");
  }
  ex.question = obj.at("question").get<std::string>();
  ex.prompt = obj.at("prompt").get<std::string>();
  ex.answer = strip_trailing_newlines(obj.at("answer").get<std::string>());
  if (trim(ex.question).empty()) throw ValidationError(where + ": question", "must not be blank");
  if (trim(ex.answer).empty()) throw ValidationError(where + ": answer", "must not be blank");

  if (obj.contains("id") && !obj.at("id").is_null()) {
    const auto& id = obj.at("id");
    if (id.is_string()) {
      ex.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      ex.id = std::to_string(id.get<long long>());
    } else {
      throw ValidationError(where + ": id", "must be a string or integer");
    }
  } else {
    ex.id = std::to_string(ordinal);
  }
  for (const auto& [k, v] : obj.items()) {
    if (k != "id" && k != "question" && k != "prompt" && k != "answer") ex.extras[k] = v;
  }
  return ex;
}

}  // namespace

TaskDataset parse_jsonl(std::string_view content, std::string name) {
  std::vector<TaskExample> examples;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const auto nl = content.find('\n', pos);
    std::string_view line =
        content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (trim(line).empty()) continue;

    const std::string where = "line " + std::to_string(line_no);
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where, std::string("invalid JSON: ") + e.what());
    }
    examples.push_back(example_from_object(obj, examples.size(), where));
  }
  if (examples.empty()) throw ValidationError("", "dataset contains no examples");
  return TaskDataset(std::move(name), std::move(examples));
}

TaskDataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading dataset file '" + path.string() + "'");
  return parse_jsonl(buf.str(), path.stem().string());
}

TaskDataset from_records(const std::vector<json>& records, std::string name) {
  if (records.empty()) throw ValidationError("", "dataset contains no examples");
  std::vector<TaskExample> examples;
  examples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ordered_json obj = ordered_json::parse(records[i].dump());
    examples.push_back(example_from_object(obj, i, "record " + std::to_string(i)));
  }
  return TaskDataset(std::move(name), std::move(examples));
}

std::string to_jsonl(const TaskDataset& dataset) {
  std::string out;
  for (const auto& ex : dataset) {
    ordered_json line;
    line["id"] = ex.id;
    line["question"] = ex.question;
    line["prompt"] = ex.prompt;
    line["answer"] = ex.answer;
    for (const auto& [k, v] : ex.extras.items()) line[k] = v;
    out += line.dump();
    out += '\n';
  }
  return out;
}

void save_jsonl(const TaskDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset file '" + path.string() + "'");
  out << to_jsonl(dataset);
  out.flush();
  if (!out) throw IoError("failed writing dataset file '" + path.string() + "'");
}

}  // namespace promptforge::dataio
