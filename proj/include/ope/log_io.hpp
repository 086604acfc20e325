// Copyright 2026 The ope-switch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OPE_LOG_IO_HPP
#define OPE_LOG_IO_HPP

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/core.hpp"

// Line-delimited log format. The first line is a header object
//   {"num_actions": K, "dim": d}
// and every following non-blank line is one record
//   {"features": [...], "action": a, "reward": r, "logging_prob": p}
// with an optional "logging_dist": [...] of length K. Doubles are written in
// shortest round-trip form, so write-then-read is exact.

namespace ope {

inline void write_log(std::ostream& out, const BanditLog& log) {
  nlohmann::json header = {{"num_actions", log.num_actions()}, {"dim", log.dim()}};
  out << header.dump() << '\n';
  for (const auto& r : log.records()) {
    nlohmann::json rec = {{"features", r.features},
                          {"action", r.action},
                          {"reward", r.reward},
                          {"logging_prob", r.logging_prob}};
    if (!r.logging_dist.empty()) {
      rec["logging_dist"] = r.logging_dist;
    }
    out << rec.dump() << '\n';
  }
}

inline BanditLog read_log(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t num_actions = 0;
  std::size_t dim = 0;
  bool have_header = false;
  std::vector<LogRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("log: malformed JSON: ") + e.what(), line_no);
    }
    try {
      if (!have_header) {
        num_actions = j.at("num_actions").get<std::size_t>();
        dim = j.at("dim").get<std::size_t>();
        have_header = true;
        continue;
      }
      LogRecord r;
      r.features = j.at("features").get<std::vector<double>>();
      r.action = j.at("action").get<std::size_t>();
      r.reward = j.at("reward").get<double>();
      r.logging_prob = j.at("logging_prob").get<double>();
      if (j.contains("logging_dist")) {
        r.logging_dist = j.at("logging_dist").get<std::vector<double>>();
      }
      if (r.features.size() != dim) {
        throw ParseError("log: feature length differs from header dim", line_no);
      }
      if (r.action >= num_actions) {
        throw ParseError("log: action outside [0, num_actions)", line_no);
      }
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("log: bad field: ") + e.what(), line_no);
    }
  }
  if (!have_header) {
    throw ParseError("log: missing header line", 0);
  }
  if (records.empty()) {
    throw ParseError("log: no records", 0);
  }
  return BanditLog(std::move(records), num_actions);
}

inline void save_log(const std::string& path, const BanditLog& log) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path);
  }
  write_log(out, log);
}

inline BanditLog load_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open log file: " + path);
  }
  return read_log(in);
}

}  // namespace ope

#endif  // OPE_LOG_IO_HPP
