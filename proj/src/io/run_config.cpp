#include "mner/io/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>

#include "mner/errors.hpp"
#include "mner/io/csv.hpp"

namespace mner::io {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing "; comment" or "# comment" preceded by whitespace.
std::string drop_comment(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == ';' || s[i] == '#') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) {
      return s.substr(0, i);
    }
  }
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  if (!parse_double(v, x)) throw InvalidConfig(key + ": '" + v + "' is not a number");
  return x;
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    std::string item = strip(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

RunConfig parse_run_config(std::istream& in) {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string section;
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip(drop_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidConfig("line " + std::to_string(line_no) + ": bad section header");
      section = strip(line.substr(1, line.size() - 2));
      sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidConfig("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    if (!sections[section].emplace(key, strip(line.substr(eq + 1))).second) {
      throw InvalidConfig("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"data", {"input", "area", "responses"}},
      {"estimation", {"alpha", "target", "target_file", "ell", "seed", "v_form"}},
      {"output", {"dir"}},
  };
  for (const auto& [sec, kv] : sections) {
    if (sec == "covariates") continue;
    const auto it = known.find(sec);
    if (it == known.end()) throw InvalidConfig("unknown section [" + sec + "]");
    for (const auto& [key, _] : kv) {
      if (!it->second.count(key)) throw InvalidConfig("unknown key '" + key + "' in [" + sec + "]");
    }
  }

  auto get = [&](const std::string& sec, const std::string& key) -> std::optional<std::string> {
    const auto s = sections.find(sec);
    if (s == sections.end()) return std::nullopt;
    const auto v = s->second.find(key);
    if (v == s->second.end()) return std::nullopt;
    return v->second;
  };

  RunConfig c;
  if (auto v = get("data", "input")) c.input = *v;
  if (auto v = get("data", "area")) c.area_column = *v;
  if (auto v = get("data", "responses")) c.responses = split_list(*v);

  const auto cov = sections.find("covariates");
  for (const auto& r : c.responses) {
    std::vector<std::string> cols;
    if (cov != sections.end()) {
      if (auto it = cov->second.find(r); it != cov->second.end()) {
        cols = split_list(it->second);
      } else if (auto all = cov->second.find("all"); all != cov->second.end()) {
        cols = split_list(all->second);
      }
    }
    c.covariates.push_back(std::move(cols));
  }
  if (cov != sections.end()) {
    for (const auto& [key, _] : cov->second) {
      if (key != "all" && std::find(c.responses.begin(), c.responses.end(), key) == c.responses.end()) {
        throw InvalidConfig("[covariates] names '" + key + "', which is not a response");
      }
    }
  }

  if (auto v = get("estimation", "alpha")) c.alpha = to_double("alpha", *v);
  if (auto v = get("estimation", "target")) {
    if (*v == "sample_mean") c.target = TargetSource::SampleMean;
    else if (*v == "file") c.target = TargetSource::File;
    else throw InvalidConfig("target must be sample_mean or file");
  }
  if (auto v = get("estimation", "target_file")) c.target_file = *v;
  if (auto v = get("estimation", "ell")) {
    for (const auto& item : split_list(*v)) c.ell.push_back(to_double("ell", item));
  }
  if (auto v = get("estimation", "seed")) {
    std::uint64_t seed = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), seed);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) throw InvalidConfig("seed must be an unsigned integer");
    c.seed = seed;
  }
  if (auto v = get("estimation", "v_form")) {
    if (*v == "printed") c.v_form = VarianceForm::Printed;
    else if (*v == "delta") c.v_form = VarianceForm::Delta;
    else throw InvalidConfig("v_form must be printed or delta");
  }
  if (auto v = get("output", "dir")) c.output_dir = *v;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config '" + path + "'");
  RunConfig c = parse_run_config(in);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(c.input);
  resolve(c.target_file);
  return c;
}

void RunConfig::validate() const {
  if (input.empty()) throw InvalidConfig("no input file given");
  if (area_column.empty()) throw InvalidConfig("no area column given");
  if (responses.empty()) throw InvalidConfig("at least one response column is required");
  if (covariates.size() != responses.size()) throw InvalidConfig("covariate lists do not match responses");
  for (std::size_t d = 0; d < responses.size(); ++d) {
    if (covariates[d].empty()) throw InvalidConfig("response '" + responses[d] + "' has no covariates");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("alpha must lie in (0, 1)");
  if (!ell.empty() && ell.size() != responses.size()) throw InvalidConfig("ell must have k entries");
  if (target == TargetSource::File && target_file.empty()) throw InvalidConfig("target = file needs target_file");
}

}  // namespace mner::io
