#include "mvsde/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mvsde {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::simulate: return "simulate";
    case Experiment::chaos: return "chaos";
    case Experiment::euler_rate: return "euler-rate";
    case Experiment::fg_rate: return "fg-rate";
    case Experiment::picard: return "picard";
    case Experiment::yw_check: return "yw-check";
    case Experiment::wasserstein: return "wasserstein";
  }
  throw ConfigError("corrupt experiment enum");
}

Experiment experiment_from(const std::string& name) {
  if (name == "simulate") return Experiment::simulate;
  if (name == "chaos") return Experiment::chaos;
  if (name == "euler-rate") return Experiment::euler_rate;
  if (name == "fg-rate") return Experiment::fg_rate;
  if (name == "picard") return Experiment::picard;
  if (name == "yw-check") return Experiment::yw_check;
  if (name == "wasserstein") return Experiment::wasserstein;
  throw ConfigError("unknown experiment '" + name + "'");
}

namespace {

// ---------------------------------------------------------------------------
// SAX DOM builder that rejects duplicate object keys (the stock parser
// silently keeps the last occurrence).  Duplicates report the JSON path,
// syntax errors the byte offset.

class DupCheckBuilder : public nlohmann::json_sax<json> {
 public:
  json root;
  std::string duplicate_error;
  std::string syntax_error;

  bool null() override { return place(nullptr); }
  bool boolean(bool v) override { return place(v); }
  bool number_integer(number_integer_t v) override { return place(v); }
  bool number_unsigned(number_unsigned_t v) override { return place(v); }
  bool number_float(number_float_t v, const string_t&) override { return place(v); }
  bool string(string_t& v) override { return place(v); }
  bool binary(binary_t& v) override { return place(v); }

  bool start_object(std::size_t) override {
    const std::string label = next_label();
    json* node = place_container(json::object());
    frames_.push_back(Frame{node, true, label, {}});
    return true;
  }

  bool key(string_t& k) override {
    Frame& top = frames_.back();
    if (!top.seen.insert(k).second) {
      duplicate_error = "duplicate key '" + k + "' at " + top.label;
      return false;
    }
    pending_key_ = k;
    return true;
  }

  bool end_object() override {
    frames_.pop_back();
    return true;
  }

  bool start_array(std::size_t) override {
    const std::string label = next_label();
    json* node = place_container(json::array());
    frames_.push_back(Frame{node, false, label, {}});
    return true;
  }

  bool end_array() override {
    frames_.pop_back();
    return true;
  }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    syntax_error = "malformed config at byte " + std::to_string(position) + ": " + ex.what();
    return false;
  }

 private:
  struct Frame {
    json* node;
    bool is_object;
    std::string label;  // JSON path of this container, e.g. $.init
    std::set<std::string> seen;
  };

  std::string next_label() const {
    if (frames_.empty()) return "$";
    const Frame& top = frames_.back();
    if (top.is_object) return top.label + "." + pending_key_;
    return top.label + "[" + std::to_string(top.node->size()) + "]";
  }

  template <typename V>
  bool place(V&& v) {
    *next_slot() = json(std::forward<V>(v));
    return true;
  }

  json* place_container(json&& container) {
    json* slot = next_slot();
    *slot = std::move(container);
    return slot;
  }

  json* next_slot() {
    if (frames_.empty()) return &root;
    Frame& top = frames_.back();
    if (top.is_object) return &(*top.node)[pending_key_];
    top.node->push_back(nullptr);
    return &top.node->back();
  }

  std::vector<Frame> frames_;
  std::string pending_key_;
};

json parse_json_strict(const std::string& text) {
  DupCheckBuilder builder;
  const bool ok = json::sax_parse(text, &builder);
  if (!builder.duplicate_error.empty()) throw ConfigError(builder.duplicate_error);
  if (!ok) {
    throw ConfigError(builder.syntax_error.empty() ? "malformed config document"
                                                   : builder.syntax_error);
  }
  return std::move(builder.root);
}

// ---------------------------------------------------------------------------
// Field reader with unknown-key rejection and typed, field-named errors.

class Fields {
 public:
  Fields(const json& obj, std::string context) : obj_(obj), ctx_(std::move(context)) {}

  void mark_used(const char* key) { used_.insert(key); }

  bool has(const char* key) const { return obj_.contains(key); }

  double number(const char* key, double fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(key, "must be a number");
    return v->get<double>();
  }

  int integer(const char* key, int fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_number_integer() && !v->is_number_unsigned()) fail(key, "must be an integer");
    const auto wide = v->get<long long>();
    if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max())
      fail(key, "out of integer range");
    return static_cast<int>(wide);
  }

  std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<long long>() >= 0)
      return static_cast<std::uint64_t>(v->get<long long>());
    fail(key, "must be a non-negative integer");
    return fallback;
  }

  std::string text(const char* key, std::string fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(key, "must be a string");
    return v->get<std::string>();
  }

  std::vector<double> number_list(const char* key, std::vector<double> fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_array()) fail(key, "must be an array of numbers");
    std::vector<double> out;
    out.reserve(v->size());
    for (const auto& item : *v) {
      if (!item.is_number()) fail(key, "must contain numbers only");
      out.push_back(item.get<double>());
    }
    return out;
  }

  std::vector<int> integer_list(const char* key, std::vector<int> fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_array()) fail(key, "must be an array of integers");
    std::vector<int> out;
    out.reserve(v->size());
    for (const auto& item : *v) {
      if (!item.is_number_integer() && !item.is_number_unsigned())
        fail(key, "must contain integers only");
      out.push_back(item.get<int>());
    }
    return out;
  }

  const json* object(const char* key) {
    const json* v = take(key);
    if (!v) return nullptr;
    if (!v->is_object()) fail(key, "must be an object");
    return v;
  }

  [[noreturn]] void fail(const char* key, const std::string& what) const {
    throw ConfigError(ctx_ + ": field '" + std::string(key) + "' " + what);
  }

  void require(bool ok, const char* key, const std::string& what) const {
    if (!ok) fail(key, what);
  }

  void finish() const {
    std::vector<std::string> unknown;
    for (const auto& item : obj_.items()) {
      if (!used_.count(item.key())) unknown.push_back(item.key());
    }
    if (!unknown.empty()) {
      std::sort(unknown.begin(), unknown.end());
      std::string list;
      for (const auto& k : unknown) {
        if (!list.empty()) list += ", ";
        list += "'" + k + "'";
      }
      throw ConfigError(ctx_ + ": unknown key(s) " + list);
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& obj_;
  std::string ctx_;
  std::set<std::string> used_;
};

bool is_power_of_two(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) return false;
  int e = 0;
  return std::frexp(h, &e) == 0.5;
}

InitialLaw parse_init(const json& node, const std::string& ctx) {
  Fields f(node, ctx + ".init");
  const std::string family = f.text("family", "gaussian");
  try {
    if (family == "point") {
      const double value = f.number("value", 0.0);
      f.finish();
      return InitialLaw::point(value);
    }
    if (family == "gaussian") {
      const double mean = f.number("mean", 0.0);
      const double sd = f.number("sd", 1.0);
      f.finish();
      return InitialLaw::gaussian(mean, sd);
    }
    if (family == "uniform") {
      const double lo = f.number("lo", 0.0);
      const double hi = f.number("hi", 1.0);
      f.finish();
      return InitialLaw::uniform(lo, hi);
    }
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ctx + ".init: " + ex.what());
  }
  throw ConfigError(ctx + ".init: unknown family '" + family + "'");
}

std::map<std::string, double> parse_params(const json& node, const std::string& ctx) {
  std::map<std::string, double> out;
  for (const auto& item : node.items()) {
    if (!item.value().is_number())
      throw ConfigError(ctx + ".params: field '" + item.key() + "' must be a number");
    out[item.key()] = item.value().get<double>();
  }
  return out;
}

void read_model_block(Fields& f, const json& root, const std::string& ctx, RunConfig& cfg) {
  cfg.model = f.text("model", cfg.model);
  f.mark_used("params");
  if (root.contains("params")) {
    if (!root["params"].is_object()) f.fail("params", "must be an object");
    cfg.params = parse_params(root["params"], ctx);
  }
  f.mark_used("init");
  if (root.contains("init")) {
    if (!root["init"].is_object()) f.fail("init", "must be an object");
    cfg.init = parse_init(root["init"], ctx);
  }
}

void read_grid(Fields& f, RunConfig& cfg) {
  cfg.T = f.number("T", cfg.T);
  f.require(std::isfinite(cfg.T) && cfg.T > 0.0, "T", "must be positive");
  cfg.h = f.number("h", cfg.h);
  f.require(std::isfinite(cfg.h) && cfg.h > 0.0, "h", "must be positive");
  f.require(cfg.h <= cfg.T * (1.0 + 1e-9), "h", "must not exceed T");
}

void read_replications(Fields& f, RunConfig& cfg) {
  cfg.R = f.integer("R", cfg.R);
  f.require(cfg.R >= 2, "R", "must be at least 2 (standard error needs replications)");
}

void read_moment_order(Fields& f, RunConfig& cfg) {
  cfg.p = f.number("p", cfg.p);
  f.require(cfg.p == 1.0 || cfg.p == 2.0, "p", "must be 1 or 2");
}

}  // namespace

RunConfig default_config(Experiment e) {
  RunConfig cfg;
  cfg.experiment = e;
  switch (e) {
    case Experiment::simulate:
      break;
    case Experiment::chaos:
      cfg.model = "M_CHAOS";
      cfg.N_list = {8, 32, 128};
      break;
    case Experiment::euler_rate:
      cfg.N = 256;
      cfg.h_list = {0x1.0p-4, 0x1.0p-5, 0x1.0p-6, 0x1.0p-7, 0x1.0p-8};
      cfg.h_ref = 0x1.0p-11;
      break;
    case Experiment::fg_rate:
      cfg.N_list = {16, 64, 256, 1024};
      break;
    case Experiment::picard:
      cfg.model = "M_CHAOS";
      break;
    case Experiment::yw_check:
    case Experiment::wasserstein:
      break;
  }
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  const json root = parse_json_strict(text);
  if (!root.is_object()) throw ConfigError("config: top-level document must be an object");
  if (!root.contains("experiment")) throw ConfigError("config: missing required key 'experiment'");
  if (!root["experiment"].is_string()) throw ConfigError("config: 'experiment' must be a string");
  const Experiment exp = experiment_from(root["experiment"].get<std::string>());
  const std::string ctx = experiment_name(exp);

  RunConfig cfg = default_config(exp);
  Fields f(root, ctx);
  f.mark_used("experiment");
  cfg.master_seed = f.unsigned_integer("master_seed", cfg.master_seed);
  cfg.out_dir = f.text("out", cfg.out_dir);

  switch (exp) {
    case Experiment::simulate: {
      read_model_block(f, root, ctx, cfg);
      read_grid(f, cfg);
      cfg.N = f.integer("N", cfg.N);
      f.require(cfg.N >= 1, "N", "must be at least 1");
      cfg.substeps = f.integer("substeps", cfg.substeps);
      f.require(cfg.substeps >= 1, "substeps", "must be at least 1");
      const std::string mode = f.text("mode", cfg.mode == StepMode::frozen ? "frozen" : "continuous");
      if (mode == "frozen") {
        cfg.mode = StepMode::frozen;
      } else if (mode == "continuous") {
        cfg.mode = StepMode::continuous;
      } else {
        f.fail("mode", "must be 'frozen' or 'continuous'");
      }
      break;
    }
    case Experiment::chaos: {
      read_model_block(f, root, ctx, cfg);
      read_grid(f, cfg);
      cfg.N_list = f.integer_list("N_list", cfg.N_list);
      f.require(!cfg.N_list.empty(), "N_list", "must not be empty");
      for (int n : cfg.N_list) f.require(n >= 1, "N_list", "entries must be at least 1");
      read_replications(f, cfg);
      read_moment_order(f, cfg);
      cfg.pool_factor = f.integer("pool_factor", cfg.pool_factor);
      f.require(cfg.pool_factor >= 1, "pool_factor", "must be at least 1");
      break;
    }
    case Experiment::euler_rate: {
      read_model_block(f, root, ctx, cfg);
      cfg.T = f.number("T", cfg.T);
      f.require(std::isfinite(cfg.T) && cfg.T > 0.0, "T", "must be positive");
      cfg.h_list = f.number_list("h_list", cfg.h_list);
      f.require(!cfg.h_list.empty(), "h_list", "must not be empty");
      for (double h : cfg.h_list)
        f.require(is_power_of_two(h), "h_list", "entries must be exact powers of two (dyadic steps)");
      cfg.h_ref = f.number("h_ref", cfg.h_ref);
      f.require(is_power_of_two(cfg.h_ref), "h_ref", "must be an exact power of two (dyadic step)");
      const double h_min = *std::min_element(cfg.h_list.begin(), cfg.h_list.end());
      f.require(cfg.h_ref < h_min / 4.0, "h_ref", "must be smaller than min(h_list)/4");
      cfg.N = f.integer("N", cfg.N);
      f.require(cfg.N >= 1, "N", "must be at least 1");
      read_replications(f, cfg);
      read_moment_order(f, cfg);
      break;
    }
    case Experiment::fg_rate: {
      f.mark_used("init");
      if (root.contains("init")) {
        if (!root["init"].is_object()) f.fail("init", "must be an object");
        cfg.init = parse_init(root["init"], ctx);
      }
      cfg.N_list = f.integer_list("N_list", cfg.N_list);
      f.require(cfg.N_list.size() >= 3, "N_list", "needs at least 3 cohort sizes to fit a rate");
      for (int n : cfg.N_list) f.require(n >= 1, "N_list", "entries must be at least 1");
      read_replications(f, cfg);
      break;
    }
    case Experiment::picard: {
      read_model_block(f, root, ctx, cfg);
      read_grid(f, cfg);
      cfg.M = f.integer("M", cfg.M);
      f.require(cfg.M >= 2, "M", "must be at least 2");
      cfg.tol = f.number("tol", cfg.tol);
      f.require(std::isfinite(cfg.tol) && cfg.tol > 0.0, "tol", "must be positive");
      cfg.k_max = f.integer("k_max", cfg.k_max);
      f.require(cfg.k_max >= 1, "k_max", "must be at least 1");
      break;
    }
    case Experiment::yw_check: {
      cfg.probes = f.integer("probes", cfg.probes);
      f.require(cfg.probes >= 1, "probes", "must be at least 1");
      cfg.eps_min = f.number("eps_min", cfg.eps_min);
      cfg.eps_max = f.number("eps_max", cfg.eps_max);
      f.require(cfg.eps_min > 0.0, "eps_min", "must be positive");
      f.require(cfg.eps_max > cfg.eps_min, "eps_max", "must exceed eps_min");
      f.require(cfg.eps_max <= 0.5, "eps_max", "must be at most 0.5");
      break;
    }
    case Experiment::wasserstein: {
      cfg.input_a = f.text("input_a", cfg.input_a);
      cfg.input_b = f.text("input_b", cfg.input_b);
      f.require(!cfg.input_a.empty(), "input_a", "is required (path to a cloud CSV)");
      f.require(!cfg.input_b.empty(), "input_b", "is required (path to a cloud CSV)");
      cfg.p = f.number("p", cfg.p);
      f.require(std::isfinite(cfg.p) && cfg.p > 0.0, "p", "must be positive");
      break;
    }
  }
  f.finish();
  return cfg;
}

namespace {

ordered_json init_json(const InitialLaw& init) {
  ordered_json j;
  switch (init.family) {
    case InitialLaw::Family::point:
      j["family"] = "point";
      j["value"] = init.a;
      break;
    case InitialLaw::Family::gaussian:
      j["family"] = "gaussian";
      j["mean"] = init.a;
      j["sd"] = init.b;
      break;
    case InitialLaw::Family::uniform:
      j["family"] = "uniform";
      j["lo"] = init.a;
      j["hi"] = init.b;
      break;
  }
  return j;
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  ordered_json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["master_seed"] = cfg.master_seed;
  if (!cfg.out_dir.empty()) j["out"] = cfg.out_dir;
  switch (cfg.experiment) {
    case Experiment::simulate:
      j["model"] = cfg.model;
      j["params"] = cfg.params;
      j["init"] = init_json(cfg.init);
      j["T"] = cfg.T;
      j["h"] = cfg.h;
      j["N"] = cfg.N;
      j["substeps"] = cfg.substeps;
      j["mode"] = cfg.mode == StepMode::frozen ? "frozen" : "continuous";
      break;
    case Experiment::chaos:
      j["model"] = cfg.model;
      j["params"] = cfg.params;
      j["init"] = init_json(cfg.init);
      j["T"] = cfg.T;
      j["h"] = cfg.h;
      j["N_list"] = cfg.N_list;
      j["R"] = cfg.R;
      j["p"] = cfg.p;
      j["pool_factor"] = cfg.pool_factor;
      break;
    case Experiment::euler_rate:
      j["model"] = cfg.model;
      j["params"] = cfg.params;
      j["init"] = init_json(cfg.init);
      j["T"] = cfg.T;
      j["h_list"] = cfg.h_list;
      j["h_ref"] = cfg.h_ref;
      j["N"] = cfg.N;
      j["R"] = cfg.R;
      j["p"] = cfg.p;
      break;
    case Experiment::fg_rate:
      j["init"] = init_json(cfg.init);
      j["N_list"] = cfg.N_list;
      j["R"] = cfg.R;
      break;
    case Experiment::picard:
      j["model"] = cfg.model;
      j["params"] = cfg.params;
      j["init"] = init_json(cfg.init);
      j["T"] = cfg.T;
      j["h"] = cfg.h;
      j["M"] = cfg.M;
      j["tol"] = cfg.tol;
      j["k_max"] = cfg.k_max;
      break;
    case Experiment::yw_check:
      j["probes"] = cfg.probes;
      j["eps_min"] = cfg.eps_min;
      j["eps_max"] = cfg.eps_max;
      break;
    case Experiment::wasserstein:
      j["input_a"] = cfg.input_a;
      j["input_b"] = cfg.input_b;
      j["p"] = cfg.p;
      break;
  }
  return j.dump(2) + "\n";
}

}  // namespace mvsde
