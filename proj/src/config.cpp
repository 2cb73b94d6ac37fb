#include "gelato/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gelato/common.hpp"
#include "gelato/graph.hpp"

namespace gelato {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"edges", ValueKind::kPath, "", "edge list file"},
      {"attrs", ValueKind::kPath, "", "attribute matrix file"},
      {"split", ValueKind::kPath, "", "split file"},
      {"model", ValueKind::kPath, "", "model checkpoint"},
      {"out", ValueKind::kString, ".", "output directory"},
      {"seed", ValueKind::kSeed, "0", "root seed"},
      {"threads", ValueKind::kInt, "1", "worker threads"},
      {"k", ValueKind::kInt, "10", "number of partition blocks"},
      {"imbalance", ValueKind::kReal, "0.05", "allowed block size imbalance"},
      {"regime", ValueKind::kString, "unbiased", "unbiased | biased | partitioned"},
      {"ratios", ValueKind::kRealList, "0.85,0.05,0.10", "train,valid,test fractions"},
      {"neg_per_pos", ValueKind::kReal, "1", "biased negatives per positive"},
      {"metric", ValueKind::kString, "autocov", "cn | aa | autocov"},
      {"t", ValueKind::kInt, "3", "random-walk length"},
      {"k_list", ValueKind::kIntList, "10,20,50,100", "ranking cutoffs"},
      {"lr", ValueKind::kReal, "0.001", "learning rate"},
      {"dropout", ValueKind::kReal, "0.5", "dropout rate"},
      {"epochs", ValueKind::kInt, "100", "training epochs"},
      {"batch_size", ValueKind::kInt, "512", "positives per step"},
      {"negatives_per_positive", ValueKind::kInt, "50", "contrast negatives per positive"},
      {"alpha", ValueKind::kReal, "0.5", "topology weight"},
      {"beta", ValueKind::kReal, "0.5", "learned weight share"},
      {"eta", ValueKind::kReal, "0.5", "augmentation ratio"},
      {"hidden", ValueKind::kInt, "128", "hidden layer width"},
      {"mode", ValueKind::kString, "undirected", "undirected | directed"},
      {"loss", ValueKind::kString, "npair", "npair | cross_entropy"},
      {"grid_search", ValueKind::kBool, "false", "search the default hyperparameter grid"},
      {"batch_rows", ValueKind::kInt, "256", "rows per autocovariance batch"},
      {"sbm_k", ValueKind::kInt, "4", "SBM blocks"},
      {"sbm_n", ValueKind::kInt, "50", "SBM nodes per block"},
      {"p", ValueKind::kReal, "0.3", "SBM intra-block probability"},
      {"q", ValueKind::kReal, "0.02", "SBM inter-block probability"},
      {"sigma", ValueKind::kReal, "-1", "attribute noise (negative: no attributes)"},
      {"runs", ValueKind::kInt, "100", "repetitions for verify lemma1"},
      {"k_sequence", ValueKind::kIntList, "2,4,8,16", "block counts for verify lemma2"},
      {"grid", ValueKind::kString, "default", "parameter grid for verify theorem1"},
  };
  return keys;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

bool parse_seed(const std::string& s, std::uint64_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

bool parse_double(const std::string& s, double& out) {
  try {
    out = parse_real(s);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::optional<std::string> check_value(const ConfigKey& key, const std::string& value) {
  std::int64_t i;
  std::uint64_t u;
  double d;
  switch (key.kind) {
    case ValueKind::kString:
    case ValueKind::kPath:
      return std::nullopt;
    case ValueKind::kInt:
      if (!parse_int(value, i)) return key.name + ": expected an integer, got '" + value + "'";
      return std::nullopt;
    case ValueKind::kSeed:
      if (!parse_seed(value, u)) {
        return key.name + ": expected a non-negative integer, got '" + value + "'";
      }
      return std::nullopt;
    case ValueKind::kReal:
      if (!parse_double(value, d)) return key.name + ": expected a number, got '" + value + "'";
      return std::nullopt;
    case ValueKind::kBool:
      if (value != "true" && value != "false") {
        return key.name + ": expected true or false, got '" + value + "'";
      }
      return std::nullopt;
    case ValueKind::kIntList:
      for (const auto& item : split_list(value)) {
        if (!parse_int(item, i)) return key.name + ": bad list item '" + item + "'";
      }
      return std::nullopt;
    case ValueKind::kRealList:
      for (const auto& item : split_list(value)) {
        if (!parse_double(item, d)) return key.name + ": bad list item '" + item + "'";
      }
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text, const std::string& origin,
                            std::vector<std::string>& problems) {
  ConfigMap out;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      problems.push_back(where + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    if (!find_key(key)) {
      problems.push_back(where + ": unknown key '" + key + "'");
      continue;
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap environment_overrides() {
  ConfigMap out;
  for (const auto& k : config_keys()) {
    std::string var = "GELATO_" + k.name;
    std::transform(var.begin(), var.end(), var.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (const char* value = std::getenv(var.c_str())) out[k.name] = value;
  }
  return out;
}

RunConfig RunConfig::resolve(const std::optional<std::filesystem::path>& file,
                             const ConfigMap& env, const ConfigMap& flags) {
  std::vector<std::string> problems;
  RunConfig cfg;
  for (const auto& k : config_keys()) cfg.values_[k.name] = k.default_value;

  auto apply = [&](const ConfigMap& layer, const std::string& origin) {
    for (const auto& [key, value] : layer) {
      if (!find_key(key)) {
        problems.push_back(origin + ": unknown key '" + key + "'");
        continue;
      }
      cfg.values_[key] = value;
      cfg.explicit_.insert(key);
    }
  };
  if (file) {
    std::ifstream in(*file);
    if (!in) {
      problems.push_back("cannot read config file " + file->string());
    } else {
      std::stringstream buf;
      buf << in.rdbuf();
      apply(parse_config_text(buf.str(), file->string(), problems), file->string());
    }
  }
  apply(env, "environment");
  apply(flags, "flags");
  for (const auto& k : config_keys()) {
    if (auto problem = check_value(k, cfg.values_[k.name])) problems.push_back(*problem);
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " configuration problem(s): ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw Error(ErrorCode::kParameter, msg);
  }
  return cfg;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kParameter, "unknown key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  std::int64_t v = 0;
  if (!parse_int(get(key), v)) throw Error(ErrorCode::kParameter, key + " is not an integer");
  return v;
}

std::uint64_t RunConfig::get_seed() const {
  std::uint64_t v = 0;
  if (!parse_seed(get("seed"), v)) {
    throw Error(ErrorCode::kParameter, "seed must be a non-negative integer");
  }
  return v;
}

double RunConfig::get_real(const std::string& key) const { return parse_real(get(key)); }

bool RunConfig::get_bool(const std::string& key) const { return get(key) == "true"; }

std::vector<std::int64_t> RunConfig::get_int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(get(key))) {
    std::int64_t v = 0;
    if (!parse_int(item, v)) throw Error(ErrorCode::kParameter, key + ": bad list item");
    out.push_back(v);
  }
  return out;
}

std::vector<double> RunConfig::get_real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) out.push_back(parse_real(item));
  return out;
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

}  // namespace gelato
