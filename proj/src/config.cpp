#include "cerl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "cerl/envs.hpp"
#include "cerl/error.hpp"
#include "toml.hpp"

namespace cerl {

EvolutionConfig RunConfig::evolution() const {
  return EvolutionConfig{elites, tournament_size, crossover_fraction};
}

UcbConfig RunConfig::ucb() const { return UcbConfig{ucb_c, rollout_budget}; }

RunConfig paper_profile() {
  RunConfig c;
  c.profile = "paper";
  c.td3.hidden = {400, 300};
  c.buffer_capacity = 1000000;
  c.batch_size = 256;
  c.warmup = 256;
  c.max_env_steps = 1000000;
  return c;
}

namespace {

// Parsed right-hand side. Scalars keep their source text so integers convert
// without passing through double.
struct Value {
  enum class Kind { scalar, string, array } kind = Kind::scalar;
  std::string text;
  std::vector<std::string> items;
  std::size_t line = 0;
};

std::string scalar_text(const toml::node& n) {
  if (const auto* i = n.as_integer()) return std::to_string(i->get());
  if (const auto* f = n.as_floating_point()) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), f->get());
    return std::string(buf, p);
  }
  if (const auto* b = n.as_boolean()) return b->get() ? "true" : "false";
  return {};
}

Value to_value(const std::string& key, const toml::node& n) {
  Value v;
  v.line = n.source().begin.line;
  if (const auto* s = n.as_string()) {
    v.kind = Value::Kind::string;
    v.text = s->get();
  } else if (const auto* arr = n.as_array()) {
    v.kind = Value::Kind::array;
    for (const auto& item : *arr) {
      if (!item.is_number()) throw ConfigError(key + ": array elements must be numbers");
      v.items.push_back(scalar_text(item));
    }
  } else if (n.is_table()) {
    throw ConfigError(key + ": nested tables are not supported");
  } else {
    v.text = scalar_text(n);
  }
  return v;
}

// Flattens the document to "section.key"; keys above the first header belong to [run].
std::map<std::string, Value> parse_document(std::string_view text) {
  toml::table doc;
  try {
    doc = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ParseError(e.source().begin.line, std::string(e.description()));
  }
  std::map<std::string, Value> entries;
  const auto add = [&](const std::string& full, const toml::node& n) {
    Value v = to_value(full, n);
    if (entries.contains(full)) throw ParseError(v.line, "duplicate key " + full);
    entries.emplace(full, std::move(v));
  };
  for (const auto& [k, node] : doc) {
    if (const auto* table = node.as_table()) {
      for (const auto& [k2, n2] : *table) add(std::string(k.str()) + "." + std::string(k2.str()), n2);
    }
  }
  for (const auto& [k, node] : doc) {
    if (!node.is_table()) add("run." + std::string(k.str()), node);
  }
  return entries;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError(key + ": " + why);
}

double to_real(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) bad(key, "expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && p == end) return v;
  // Accept integral values written as reals, e.g. 1e6.
  const double d = to_real(key, s);
  if (d < 0.0 || d != std::floor(d) || d > 1.8e19) bad(key, "expected a non-negative integer, got '" + s + "'");
  return static_cast<std::uint64_t>(d);
}

std::string fmt_real(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const Value&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field real_field(std::string key, Member member) {
  return {key,
          [key, member](RunConfig& c, const Value& v) {
            if (v.kind != Value::Kind::scalar) bad(key, "expected a number");
            std::invoke(member, c) = to_real(key, v.text);
          },
          [member](const RunConfig& c) { return fmt_real(std::invoke(member, c)); }};
}

template <typename Member>
Field count_field(std::string key, Member member) {
  return {key,
          [key, member](RunConfig& c, const Value& v) {
            if (v.kind != Value::Kind::scalar) bad(key, "expected an integer");
            std::invoke(member, c) = static_cast<std::size_t>(to_count(key, v.text));
          },
          [member](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <typename Member>
Field string_field(std::string key, Member member) {
  return {key,
          [key, member](RunConfig& c, const Value& v) {
            if (v.kind != Value::Kind::string) bad(key, "expected a quoted string");
            std::invoke(member, c) = v.text;
          },
          [member](const RunConfig& c) { return quote(std::invoke(member, c)); }};
}

template <typename Member>
Field bool_field(std::string key, Member member) {
  return {key,
          [key, member](RunConfig& c, const Value& v) {
            if (v.kind != Value::Kind::scalar || (v.text != "true" && v.text != "false")) {
              bad(key, "expected true or false");
            }
            std::invoke(member, c) = v.text == "true";
          },
          [member](const RunConfig& c) { return std::string(std::invoke(member, c) ? "true" : "false"); }};
}

template <typename Member>
Field reals_field(std::string key, Member member) {
  return {key,
          [key, member](RunConfig& c, const Value& v) {
            if (v.kind != Value::Kind::array) bad(key, "expected an array");
            std::vector<double> out;
            for (const auto& it : v.items) out.push_back(to_real(key, it));
            std::invoke(member, c) = out;
          },
          [member](const RunConfig& c) {
            std::string s = "[";
            const auto& vs = std::invoke(member, c);
            for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? ", " : "") + fmt_real(vs[i]);
            return s + "]";
          }};
}

template <typename T, typename Member>
Field counts_field(std::string key, Member member) {
  return {key,
          [key, member](RunConfig& c, const Value& v) {
            if (v.kind != Value::Kind::array) bad(key, "expected an array");
            std::vector<T> out;
            for (const auto& it : v.items) out.push_back(static_cast<T>(to_count(key, it)));
            std::invoke(member, c) = out;
          },
          [member](const RunConfig& c) {
            std::string s = "[";
            const auto& vs = std::invoke(member, c);
            for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? ", " : "") + std::to_string(vs[i]);
            return s + "]";
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(string_field("run.profile", &RunConfig::profile));
    f.push_back(string_field("run.env", &RunConfig::env));
    f.push_back(string_field("run.algorithm", &RunConfig::algorithm));
    f.push_back(counts_field<std::uint64_t>("run.seeds", &RunConfig::seeds));
    f.push_back(count_field("run.max_env_steps", &RunConfig::max_env_steps));
    f.push_back(string_field("run.output_dir", &RunConfig::output_dir));
    f.push_back(count_field("run.workers", &RunConfig::workers));
    f.push_back(count_field("run.champion_episodes", &RunConfig::champion_episodes));
    f.push_back(bool_field("run.trajectory_dump", &RunConfig::trajectory_dump));
    f.push_back(bool_field("run.replay_snapshot", &RunConfig::replay_snapshot));

    f.push_back(reals_field("portfolio.gammas", &RunConfig::gammas));
    f.push_back(real_field("portfolio.alpha", &RunConfig::alpha));
    f.push_back(real_field("portfolio.ucb_c", &RunConfig::ucb_c));
    f.push_back(count_field("portfolio.rollout_budget", &RunConfig::rollout_budget));
    f.push_back(string_field("portfolio.manager", &RunConfig::manager));

    f.push_back(count_field("population.size", &RunConfig::population_size));
    f.push_back(count_field("population.elites", &RunConfig::elites));
    f.push_back(count_field("population.omega", &RunConfig::omega));
    f.push_back(count_field("population.tournament_size", &RunConfig::tournament_size));
    f.push_back(real_field("population.crossover_fraction", &RunConfig::crossover_fraction));

    auto mut = [](auto member) {
      return [member](RunConfig& c) -> double& { return std::invoke(member, c.mutation); };
    };
    auto mut_c = [](auto member) {
      return [member](const RunConfig& c) -> const double& { return std::invoke(member, c.mutation); };
    };
    for (auto [name, member] : {std::pair{"mutation.prob", &MutationConfig::mut_prob},
                                std::pair{"mutation.frac", &MutationConfig::mut_frac},
                                std::pair{"mutation.strength", &MutationConfig::mut_strength},
                                std::pair{"mutation.supermut_prob", &MutationConfig::supermut_prob},
                                std::pair{"mutation.reset_prob", &MutationConfig::reset_prob},
                                std::pair{"mutation.weight_limit", &MutationConfig::weight_limit}}) {
      const std::string key = name;
      auto get = mut_c(member);
      auto ref = mut(member);
      f.push_back({key,
                   [key, ref](RunConfig& c, const Value& v) {
                     if (v.kind != Value::Kind::scalar) bad(key, "expected a number");
                     ref(c) = to_real(key, v.text);
                   },
                   [get](const RunConfig& c) { return fmt_real(get(c)); }});
    }

    f.push_back({"td3.tau",
                 [](RunConfig& c, const Value& v) { c.td3.tau = to_real("td3.tau", v.text); },
                 [](const RunConfig& c) { return fmt_real(c.td3.tau); }});
    f.push_back({"td3.policy_delay",
                 [](RunConfig& c, const Value& v) {
                   c.td3.policy_delay = static_cast<std::size_t>(to_count("td3.policy_delay", v.text));
                 },
                 [](const RunConfig& c) { return std::to_string(c.td3.policy_delay); }});
    f.push_back({"td3.smoothing_sigma",
                 [](RunConfig& c, const Value& v) {
                   c.td3.smoothing_sigma = to_real("td3.smoothing_sigma", v.text);
                 },
                 [](const RunConfig& c) { return fmt_real(c.td3.smoothing_sigma); }});
    f.push_back({"td3.smoothing_clip",
                 [](RunConfig& c, const Value& v) {
                   c.td3.smoothing_clip = to_real("td3.smoothing_clip", v.text);
                 },
                 [](const RunConfig& c) { return fmt_real(c.td3.smoothing_clip); }});
    f.push_back({"td3.actor_lr",
                 [](RunConfig& c, const Value& v) { c.td3.actor_lr = to_real("td3.actor_lr", v.text); },
                 [](const RunConfig& c) { return fmt_real(c.td3.actor_lr); }});
    f.push_back({"td3.critic_lr",
                 [](RunConfig& c, const Value& v) { c.td3.critic_lr = to_real("td3.critic_lr", v.text); },
                 [](const RunConfig& c) { return fmt_real(c.td3.critic_lr); }});
    f.push_back({"td3.hidden",
                 [](RunConfig& c, const Value& v) {
                   if (v.kind != Value::Kind::array) bad("td3.hidden", "expected an array");
                   c.td3.hidden.clear();
                   for (const auto& it : v.items) {
                     c.td3.hidden.push_back(static_cast<std::size_t>(to_count("td3.hidden", it)));
                   }
                 },
                 [](const RunConfig& c) {
                   std::string s = "[";
                   for (std::size_t i = 0; i < c.td3.hidden.size(); ++i) {
                     s += (i ? ", " : "") + std::to_string(c.td3.hidden[i]);
                   }
                   return s + "]";
                 }});
    f.push_back({"td3.soft_update_every_step",
                 [](RunConfig& c, const Value& v) {
                   if (v.text != "true" && v.text != "false") {
                     bad("td3.soft_update_every_step", "expected true or false");
                   }
                   c.td3.soft_update_every_step = v.text == "true";
                 },
                 [](const RunConfig& c) {
                   return std::string(c.td3.soft_update_every_step ? "true" : "false");
                 }});
    f.push_back(count_field("td3.batch_size", &RunConfig::batch_size));
    f.push_back(count_field("td3.buffer_capacity", &RunConfig::buffer_capacity));
    f.push_back(real_field("td3.exploration_sigma", &RunConfig::exploration_sigma));
    f.push_back(count_field("td3.warmup", &RunConfig::warmup));
    return f;
  }();
  return table;
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void validate(const RunConfig& c) {
  if (c.profile != "desk" && c.profile != "paper") bad("run.profile", "must be \"desk\" or \"paper\"");
  const auto names = env_names();
  if (std::find(names.begin(), names.end(), c.env) == names.end()) {
    bad("run.env", "unknown environment '" + c.env + "'");
  }
  if (c.algorithm != "cerl" && c.algorithm != "td3") bad("run.algorithm", "must be \"cerl\" or \"td3\"");
  if (c.seeds.empty()) bad("run.seeds", "at least one seed is required");
  if (c.workers < 1) bad("run.workers", "must be >= 1");

  if (c.gammas.empty()) bad("portfolio.gammas", "at least one learner is required");
  for (double g : c.gammas) {
    if (!probability(g)) bad("portfolio.gammas", "discount rates must lie in [0, 1]");
  }
  if (c.algorithm == "td3" && c.gammas.size() != 1) {
    bad("portfolio.gammas", "an isolated td3 run takes exactly one discount rate");
  }
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) bad("portfolio.alpha", "must lie in (0, 1]");
  if (c.ucb_c < 0.0) bad("portfolio.ucb_c", "must be >= 0");
  if (c.rollout_budget < 1) bad("portfolio.rollout_budget", "must be >= 1");
  if (c.manager != "ucb" && c.manager != "constant") bad("portfolio.manager", "must be \"ucb\" or \"constant\"");

  if (c.population_size < 2) bad("population.size", "population needs at least 2 genomes");
  if (c.elites < 1 || c.elites >= c.population_size) bad("population.elites", "must satisfy 1 <= e < k");
  if (c.algorithm == "cerl" && c.gammas.size() > c.population_size) {
    bad("portfolio.gammas", "more learners than population slots");
  }
  if (c.tournament_size < 1) bad("population.tournament_size", "must be >= 1");
  if (!probability(c.crossover_fraction)) bad("population.crossover_fraction", "must lie in [0, 1]");

  if (!probability(c.mutation.mut_prob)) bad("mutation.prob", "must lie in [0, 1]");
  if (!probability(c.mutation.mut_frac)) bad("mutation.frac", "must lie in [0, 1]");
  if (c.mutation.mut_strength < 0.0) bad("mutation.strength", "must be >= 0");
  if (!probability(c.mutation.supermut_prob)) bad("mutation.supermut_prob", "must lie in [0, 1]");
  if (!probability(c.mutation.reset_prob)) bad("mutation.reset_prob", "must lie in [0, 1]");
  if (!(c.mutation.weight_limit > 0.0)) bad("mutation.weight_limit", "must be > 0");

  if (!probability(c.td3.tau)) bad("td3.tau", "must lie in [0, 1]");
  if (c.td3.policy_delay < 1) bad("td3.policy_delay", "must be >= 1");
  if (c.td3.smoothing_sigma < 0.0) bad("td3.smoothing_sigma", "must be >= 0");
  if (c.td3.smoothing_clip < 0.0) bad("td3.smoothing_clip", "must be >= 0");
  if (!(c.td3.actor_lr > 0.0)) bad("td3.actor_lr", "must be > 0");
  if (!(c.td3.critic_lr > 0.0)) bad("td3.critic_lr", "must be > 0");
  if (c.td3.hidden.empty()) bad("td3.hidden", "at least one hidden layer is required");
  for (auto h : c.td3.hidden) {
    if (h < 2) bad("td3.hidden", "layer-normalized hidden widths must be >= 2");
  }
  if (c.batch_size < 1) bad("td3.batch_size", "must be >= 1");
  if (c.buffer_capacity < c.batch_size) bad("td3.buffer_capacity", "must hold at least one batch");
  if (c.exploration_sigma < 0.0) bad("td3.exploration_sigma", "must be >= 0");
}

RunConfig parse_config(std::string_view text) {
  auto entries = parse_document(text);

  RunConfig cfg;
  if (auto it = entries.find("run.profile"); it != entries.end()) {
    if (it->second.kind != Value::Kind::string) bad("run.profile", "expected a quoted string");
    if (it->second.text == "paper") cfg = paper_profile();
    else if (it->second.text != "desk") bad("run.profile", "must be \"desk\" or \"paper\"");
  }

  for (const auto& [key, value] : entries) {
    const auto& table = fields();
    const auto f = std::find_if(table.begin(), table.end(), [&](const Field& x) { return x.key == key; });
    if (f == table.end()) bad(key, "unknown key (line " + std::to_string(value.line) + ")");
    f->set(cfg, value);
  }
  if (!entries.contains("population.elites")) cfg.elites = std::max<std::size_t>(1, cfg.population_size / 5);
  if (!entries.contains("td3.warmup")) cfg.warmup = cfg.batch_size;
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

}  // namespace cerl
