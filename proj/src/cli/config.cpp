// SPDX-License-Identifier: Apache-2.0
#include "fden/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fden/core/digest.hpp"
#include "fden/data/shapes.hpp"

namespace fden::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_type(const std::string& key, const std::string& value, const char* type, int line) {
  throw ConfigError(key + ": expected " + type + ", got '" + value + "'", line);
}

template <class T>
T parse_int(const std::string& key, const std::string& v, int line) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_type(key, v, "an integer", line);
  return out;
}

double parse_real(const std::string& key, const std::string& v, int line) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad_type(key, v, "a finite number", line);
  }
  return out;
}

bool parse_switch(const std::string& key, const std::string& v, int line) {
  if (v == "on" || v == "true") return true;
  if (v == "off" || v == "false") return false;
  bad_type(key, v, "on or off", line);
}

std::string real_text(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string& key, const std::string&, int)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field int_field(T ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
            c.*m = parse_int<T>(k, v, line);
          },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field real_field(double ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
            c.*m = parse_real(k, v, line);
          },
          [m](const ExperimentConfig& c) { return real_text(c.*m); }};
}

Field switch_field(bool ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
            c.*m = parse_switch(k, v, line);
          },
          [m](const ExperimentConfig& c) { return std::string(c.*m ? "on" : "off"); }};
}

using Table = std::vector<std::pair<std::string, Field>>;

const Table& table() {
  static const Table t = [] {
    using C = ExperimentConfig;
    Table f;
    f.emplace_back("dim", int_field(&C::dim));
    f.emplace_back("n_factors", int_field(&C::n_factors));
    f.emplace_back("alpha", real_field(&C::alpha));
    f.emplace_back("beta", real_field(&C::beta));
    f.emplace_back("gamma", real_field(&C::gamma));
    f.emplace_back("lambda", real_field(&C::lambda));
    f.emplace_back("lr", real_field(&C::lr));
    f.emplace_back("beta1", real_field(&C::beta1));
    f.emplace_back("beta2", real_field(&C::beta2));
    f.emplace_back("batch", int_field(&C::batch));
    f.emplace_back("steps", int_field(&C::steps));
    f.emplace_back("seed", int_field(&C::seed));
    f.emplace_back("grl", switch_field(&C::grl));
    f.emplace_back("factorizer", switch_field(&C::factorizer));
    f.emplace_back("marginal_mode",
                   Field{[](C& c, const std::string& k, const std::string& v, int line) {
                           if (v == "one_vs_all") {
                             c.marginal_mode = model::MarginalMode::one_vs_all;
                           } else if (v == "full_shuffle") {
                             c.marginal_mode = model::MarginalMode::full_shuffle;
                           } else {
                             bad_type(k, v, "one_vs_all or full_shuffle", line);
                           }
                         },
                         [](const C& c) {
                           return std::string(c.marginal_mode == model::MarginalMode::one_vs_all ? "one_vs_all"
                                                                                                 : "full_shuffle");
                         }});
    f.emplace_back("leaky_slope", real_field(&C::leaky_slope));
    f.emplace_back("init_sigma", real_field(&C::init_sigma));
    f.emplace_back("dropout", real_field(&C::dropout));
    f.emplace_back("phase_switch", int_field(&C::phase_switch));
    f.emplace_back("host_steps", int_field(&C::host_steps));
    f.emplace_back("host_batch", int_field(&C::host_batch));
    f.emplace_back("host_lr", real_field(&C::host_lr));
    f.emplace_back("test_fraction", real_field(&C::test_fraction));
    f.emplace_back("mi_samples", int_field(&C::mi_samples));
    f.emplace_back("mi_steps", int_field(&C::mi_steps));
    f.emplace_back("mi_batch", int_field(&C::mi_batch));
    f.emplace_back("mi_lr", real_field(&C::mi_lr));
    f.emplace_back("bins", int_field(&C::bins));
    f.emplace_back("train_votes", int_field(&C::train_votes));
    f.emplace_back("eval_votes", int_field(&C::eval_votes));
    f.emplace_back("vote_batch", int_field(&C::vote_batch));
    f.emplace_back("episodes", int_field(&C::episodes));
    f.emplace_back("ways", int_field(&C::ways));
    f.emplace_back("shots", int_field(&C::shots));
    f.emplace_back("fewshot_factor", int_field(&C::fewshot_factor));
    f.emplace_back("fewshot_classes",
                   Field{[](C& c, const std::string& k, const std::string& v, int line) {
                           std::vector<int> out;
                           std::stringstream in(v);
                           std::string item;
                           while (std::getline(in, item, ',')) out.push_back(parse_int<int>(k, trim(item), line));
                           if (out.empty()) bad_type(k, v, "a comma-separated list of integers", line);
                           c.fewshot_classes = out;
                         },
                         [](const C& c) {
                           std::string s;
                           for (std::size_t i = 0; i < c.fewshot_classes.size(); ++i) {
                             if (i) s += ',';
                             s += std::to_string(c.fewshot_classes[i]);
                           }
                           return s;
                         }});
    return f;
  }();
  return t;
}

const Field* find(const std::string& key) {
  for (const auto& [k, f] : table()) {
    if (k == key) return &f;
  }
  return nullptr;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : table()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_value(ExperimentConfig& c, const std::string& key, const std::string& value, int line) {
  const Field* f = find(key);
  if (!f) throw ConfigError("unknown key '" + key + "'", line);
  f->set(c, key, value, line);
}

std::string get_value(const ExperimentConfig& c, const std::string& key) {
  const Field* f = find(key);
  if (!f) throw ConfigError("unknown key '" + key + "'");
  return f->get(c);
}

void ExperimentConfig::validate() const {
  require(dim >= 1, "dim must be positive");
  require(n_factors >= 1 && n_factors <= data::kNumAttributes,
          "n_factors must be between 1 and " + std::to_string(data::kNumAttributes));
  for (auto [name, v] : {std::pair{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"lambda", lambda}}) {
    require(v >= 0.0, std::string(name) + " must be nonnegative");
  }
  require(lr > 0.0, "lr must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
  require(batch >= 2, "batch must be at least 2");
  require(steps >= 0, "steps must be nonnegative");
  require(seed >= 0, "seed must be nonnegative");
  require(leaky_slope >= 0.0 && leaky_slope < 1.0, "leaky_slope must lie in [0, 1)");
  require(init_sigma > 0.0, "init_sigma must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(phase_switch >= 0, "phase_switch must be nonnegative");
  require(host_steps >= 0 && host_batch >= 1 && host_lr > 0.0, "host_steps, host_batch and host_lr out of range");
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  require(mi_samples >= 1000, "mi_samples must be at least 1000");
  require(mi_steps >= 1 && mi_batch >= 2 && mi_lr > 0.0, "mi_steps, mi_batch and mi_lr out of range");
  require(bins >= 2, "bins must be at least 2");
  require(train_votes >= 1 && eval_votes >= 1 && vote_batch >= 2, "vote budgets out of range");
  require(episodes >= 1 && ways >= 2 && shots >= 1, "episodes, ways and shots out of range");
  require(fewshot_factor >= 0 && fewshot_factor <= n_factors, "fewshot_factor must name a factor (0..n_factors)");
  require(static_cast<int>(fewshot_classes.size()) >= ways, "fewshot_classes must list at least `ways` classes");
  const int identities = static_cast<int>(data::kScales.size()) * 3;
  for (std::size_t i = 0; i < fewshot_classes.size(); ++i) {
    const int k = fewshot_classes[i];
    require(k >= 0 && k < identities, "fewshot_classes entries must lie in 0.." + std::to_string(identities - 1));
    for (std::size_t j = 0; j < i; ++j) require(fewshot_classes[j] != k, "fewshot_classes has a repeated class");
  }
}

host::HostConfig ExperimentConfig::host() const {
  host::HostConfig h;
  h.dim = dim;
  h.steps = host_steps;
  h.batch = host_batch;
  h.lr = host_lr;
  h.leaky_slope = leaky_slope;
  return h;
}

model::FdenArch ExperimentConfig::arch() const {
  model::FdenArch a;
  a.dim = dim;
  a.classes.assign(data::kAttributeClasses.begin(), data::kAttributeClasses.begin() + n_factors);
  a.dropout = dropout;
  a.leaky_slope = leaky_slope;
  return a;
}

model::TrainConfig ExperimentConfig::train() const {
  model::TrainConfig t;
  t.alpha = alpha;
  t.beta = beta;
  t.gamma = gamma;
  t.lambda = lambda;
  t.adam = AdamConfig{lr, beta1, beta2, 1e-8};
  t.batch = batch;
  t.steps = steps;
  t.seed = static_cast<std::uint64_t>(seed);
  t.grl = grl;
  t.factorizer = factorizer;
  t.marginal = marginal_mode;
  t.phase_switch = phase_switch;
  return t;
}

metrics::MiEstimatorConfig ExperimentConfig::mi() const {
  metrics::MiEstimatorConfig m;
  m.steps = mi_steps;
  m.batch = mi_batch;
  m.lr = mi_lr;
  m.seed = static_cast<std::uint64_t>(seed);
  return m;
}

metrics::VoteConfig ExperimentConfig::votes() const {
  metrics::VoteConfig v;
  v.train_votes = train_votes;
  v.eval_votes = eval_votes;
  v.batch = vote_batch;
  v.seed = static_cast<std::uint64_t>(seed);
  return v;
}

metrics::EpisodeConfig ExperimentConfig::episode() const {
  metrics::EpisodeConfig e;
  e.ways = ways;
  e.shots = shots;
  e.episodes = episodes;
  e.class_pool = fewshot_classes;
  e.seed = static_cast<std::uint64_t>(seed);
  return e;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::map<std::string, int> lines;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + body + "'", line);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    set_value(base, key, value, line);
    lines[key] = line;
  }
  try {
    base.validate();
  } catch (const ConfigError& e) {
    // point at the line that set the offending key when there is one
    const std::string msg = e.what();
    for (const auto& [key, l] : lines) {
      if (msg.rfind(key, 0) == 0 && msg.size() > key.size() && (msg[key.size()] == ' ' || msg[key.size()] == ',')) {
        throw ConfigError(msg, l);
      }
    }
    throw;
  }
  return base;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

std::string serialize(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [key, f] : table()) out += key + " = " + f.get(c) + "\n";
  return out;
}

std::string config_digest(const ExperimentConfig& c) { return sha256_hex(serialize(c)); }

}  // namespace fden::cli
