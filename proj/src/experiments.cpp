#include "simbeam/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "simbeam/baselines.hpp"
#include "simbeam/channel.hpp"

namespace simbeam {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::int64_t ns_since(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t).count();
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& parent, std::string name, bool required) : name_(std::move(name)) {
    auto it = parent.find(name_);
    if (it == parent.end()) {
      if (required) throw ConfigError(name_, "missing required section");
      return;
    }
    if (!it->is_object()) throw ConfigError(name_, "expected an object");
    obj_ = &*it;
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

  const json* find(const char* key, bool required) {
    known_.emplace_back(key);
    if (obj_ == nullptr) {
      if (required) throw ConfigError(path(key), "missing required field");
      return nullptr;
    }
    auto it = obj_->find(key);
    if (it == obj_->end()) {
      if (required) throw ConfigError(path(key), "missing required field");
      return nullptr;
    }
    return &*it;
  }

  void read(const char* key, int& out, bool required) {
    if (const json* v = find(key, required)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(path(key), "integer out of range");
      out = static_cast<int>(x);
    }
  }
  void read(const char* key, double& out, bool required) {
    if (const json* v = find(key, required)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out, bool required) {
    if (const json* v = find(key, required)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out, bool required) {
    if (const json* v = find(key, required)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void reject_unknown() const {
    if (obj_ == nullptr) return;
    for (const auto& item : obj_->items()) {
      if (std::find(known_.begin(), known_.end(), item.key()) == known_.end())
        throw ConfigError(path(item.key()), "unknown field");
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::vector<std::string> known_;
};

PhaseResolution parse_resolution(const json& v, const std::string& path) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "continuous" || s == "inf") return PhaseResolution::continuous();
    throw ConfigError(path, "expected a bit count or \"continuous\", got \"" + s + "\"");
  }
  if (!v.is_number_integer()) throw ConfigError(path, "expected a bit count or \"continuous\"");
  const auto bits = v.get<std::int64_t>();
  if (bits < 1 || bits > 16) throw ConfigError(path, "bit count must be in 1..16");
  return PhaseResolution::discrete(static_cast<int>(bits));
}

json resolution_json(PhaseResolution r) {
  if (r.is_continuous()) return "continuous";
  return r.bits;
}

template <class T>
std::vector<T> parse_int_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& e = v[i];
    const std::string p = path + "[" + std::to_string(i) + "]";
    if constexpr (std::is_unsigned_v<T>) {
      if (!e.is_number_unsigned()) throw ConfigError(p, "expected a non-negative integer");
    } else {
      if (!e.is_number_integer()) throw ConfigError(p, "expected an integer");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

json to_json(const ExperimentConfig& c) {
  json system = {{"K", c.system.K},
                 {"M", c.system.M},
                 {"N", c.system.N},
                 {"N_r", c.system.N_r},
                 {"L", c.system.L},
                 {"f_carrier", c.system.f_carrier},
                 {"thickness_lambda", c.system.thickness_lambda},
                 {"lattice", c.system.lattice == LatticeStep::half ? "half" : "full"}};
  json b = json::array();
  for (const auto& r : c.system.b) b.push_back(resolution_json(r));
  system["b"] = b;
  const auto& o = c.optimizer;
  return {{"system", system},
          {"power", {{"P_max_dBm", c.power.P_max_dBm}, {"sigma2_dBm", c.power.sigma2_dBm}}},
          {"users", {{"r_in", c.users.r_in}, {"r_out", c.users.r_out}}},
          {"optimizer",
           {{"power_tol", o.power_tol},
            {"power_max_iters", o.power_max_iters},
            {"admm_tol", o.admm_tol},
            {"admm_max_iters", o.admm_max_iters},
            {"beta_penalty", o.beta_penalty},
            {"penalty_scale", o.penalty_scale},
            {"outer_rel_tol", o.outer_rel_tol},
            {"max_iters", o.max_iters},
            {"early_stop", o.early_stop},
            {"acceptance_guard", o.acceptance_guard},
            {"max_filter_shrink", o.max_filter_shrink},
            {"polish_passes", o.polish_passes}}},
          {"run",
           {{"seeds", c.run.seeds},
            {"n_mc", c.run.n_mc},
            {"output_dir", c.run.output_dir},
            {"L_list", c.run.L_list},
            {"timing_reps", c.run.timing_reps},
            {"threads", c.run.threads}}}};
}

// Runs f(0..n-1) on up to `threads` workers. Results land in caller-owned
// slots, so the output order never depends on scheduling. The lowest-index
// failure is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + 16, v, 16);
  (void)ec;
  std::string s(buf, end);
  return std::string(16 - s.size(), '0') + s;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double stderr_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : stddev_of(v) / std::sqrt(static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double rate_at(const std::vector<HistoryRow>& history, int iter) {
  double r = history.empty() ? 0.0 : history.front().rate;
  for (const auto& row : history) {
    if (row.iter > iter) break;
    r = row.rate;
  }
  return r;
}

CsvTable runs_table(const std::vector<RunRecord>& records) {
  CsvTable t;
  t.header = {"config_hash", "seed", "L", "b", "outer_iters", "initial_rate", "final_rate", "mc_rate", "mc_stderr",
              "n_mc"};
  for (const auto& r : records) {
    t.rows.push_back({hex64(r.config_hash), std::to_string(r.seed), std::to_string(r.L), r.resolution.label(),
                      std::to_string(r.outer_iterations()),
                      format_number(r.history.empty() ? 0.0 : r.history.front().rate),
                      format_number(r.report.surrogate_sum_rate), format_number(r.report.mc_rate),
                      format_number(r.report.mc_stderr), std::to_string(r.report.n_mc)});
  }
  return t;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

ChannelModel make_model(const ExperimentConfig& config, std::uint64_t seed, int L) {
  const auto geom = build_geometry(geometry_params(config, L));
  const auto users =
      assign_users(seed, config.system.K, Annulus{config.users.r_in, config.users.r_out}, config.power.sigma2_W);
  return build_channel_model(geom, users);
}

}  // namespace

RunSection::RunSection() {
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
}

void ExperimentConfig::finalize() {
  auto require = [](bool ok, const char* path, const char* msg) {
    if (!ok) throw ConfigError(path, msg);
  };
  const auto& s = system;
  require(s.K >= 1, "system.K", "must be at least 1");
  require(s.M == s.K, "system.M", "must equal system.K");
  require(s.N >= 1, "system.N", "must be at least 1");
  require(s.N_r >= 1 && s.N_r <= s.N, "system.N_r", "must be in 1..system.N");
  require(s.N_r >= 1 && s.N % s.N_r == 0, "system.N_r", "must divide system.N");
  require(s.L >= 1, "system.L", "must be at least 1");
  require(!s.b.empty(), "system.b", "must list at least one resolution");
  require(std::isfinite(s.f_carrier) && s.f_carrier > 0.0, "system.f_carrier", "must be positive");
  require(std::isfinite(s.thickness_lambda) && s.thickness_lambda > 0.0, "system.thickness_lambda",
          "must be positive");
  require(std::isfinite(power.P_max_dBm), "power.P_max_dBm", "must be finite");
  require(std::isfinite(power.sigma2_dBm), "power.sigma2_dBm", "must be finite");
  require(users.r_in > 0.0, "users.r_in", "must be positive");
  require(users.r_out >= users.r_in, "users.r_out", "must be at least users.r_in");
  const auto& o = optimizer;
  require(o.power_tol >= 0.0, "optimizer.power_tol", "must be non-negative");
  require(o.power_max_iters >= 0, "optimizer.power_max_iters", "must be non-negative");
  require(o.admm_tol >= 0.0, "optimizer.admm_tol", "must be non-negative");
  require(o.admm_max_iters >= 0, "optimizer.admm_max_iters", "must be non-negative");
  require(o.penalty_scale > 0.0, "optimizer.penalty_scale", "must be positive");
  require(o.outer_rel_tol >= 0.0, "optimizer.outer_rel_tol", "must be non-negative");
  require(o.max_iters >= 0, "optimizer.max_iters", "must be non-negative");
  require(o.max_filter_shrink >= 1.0, "optimizer.max_filter_shrink", "must be at least 1");
  require(o.polish_passes >= 0, "optimizer.polish_passes", "must be non-negative");
  require(!run.seeds.empty(), "run.seeds", "must list at least one seed");
  require(run.n_mc >= 0, "run.n_mc", "must be non-negative");
  require(!run.L_list.empty(), "run.L_list", "must list at least one layer count");
  for (std::size_t i = 0; i < run.L_list.size(); ++i) {
    require(run.L_list[i] >= 1, "run.L_list", "entries must be at least 1");
    require(i == 0 || run.L_list[i] > run.L_list[i - 1], "run.L_list", "must be strictly ascending");
  }
  require(run.timing_reps >= 1, "run.timing_reps", "must be at least 1");
  require(run.threads >= 1, "run.threads", "must be at least 1");
  power.P_max_W = dbm_to_watts(power.P_max_dBm);
  power.sigma2_W = dbm_to_watts(power.sigma2_dBm);
}

std::uint64_t ExperimentConfig::hash() const {
  // FNV-1a over the canonical document.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(*this).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return to_json(*this) == to_json(other) && power.P_max_W == other.power.P_max_W &&
         power.sigma2_W == other.power.sigma2_W;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!root.is_object()) throw ConfigError("<document>", "expected a JSON object");
  for (const auto& item : root.items()) {
    const auto& k = item.key();
    if (k != "system" && k != "power" && k != "users" && k != "optimizer" && k != "run")
      throw ConfigError(k, "unknown section");
  }

  ExperimentConfig c;
  Section sys(root, "system", true);
  sys.read("K", c.system.K, true);
  sys.read("M", c.system.M, true);
  sys.read("N", c.system.N, true);
  sys.read("N_r", c.system.N_r, true);
  sys.read("L", c.system.L, true);
  if (const json* b = sys.find("b", true)) {
    c.system.b.clear();
    if (b->is_array()) {
      for (std::size_t i = 0; i < b->size(); ++i)
        c.system.b.push_back(parse_resolution((*b)[i], sys.path("b") + "[" + std::to_string(i) + "]"));
    } else {
      c.system.b.push_back(parse_resolution(*b, sys.path("b")));
    }
  }
  sys.read("f_carrier", c.system.f_carrier, false);
  sys.read("thickness_lambda", c.system.thickness_lambda, false);
  std::string lattice = "half";
  sys.read("lattice", lattice, false);
  if (lattice == "half") {
    c.system.lattice = LatticeStep::half;
  } else if (lattice == "full") {
    c.system.lattice = LatticeStep::full;
  } else {
    throw ConfigError(sys.path("lattice"), "expected \"half\" or \"full\"");
  }
  sys.reject_unknown();

  Section pw(root, "power", true);
  pw.read("P_max_dBm", c.power.P_max_dBm, true);
  pw.read("sigma2_dBm", c.power.sigma2_dBm, true);
  pw.reject_unknown();

  Section us(root, "users", true);
  us.read("r_in", c.users.r_in, true);
  us.read("r_out", c.users.r_out, true);
  us.reject_unknown();

  Section op(root, "optimizer", false);
  auto& o = c.optimizer;
  op.read("power_tol", o.power_tol, false);
  op.read("power_max_iters", o.power_max_iters, false);
  op.read("admm_tol", o.admm_tol, false);
  op.read("admm_max_iters", o.admm_max_iters, false);
  op.read("beta_penalty", o.beta_penalty, false);
  op.read("penalty_scale", o.penalty_scale, false);
  op.read("outer_rel_tol", o.outer_rel_tol, false);
  op.read("max_iters", o.max_iters, false);
  op.read("early_stop", o.early_stop, false);
  op.read("acceptance_guard", o.acceptance_guard, false);
  op.read("max_filter_shrink", o.max_filter_shrink, false);
  op.read("polish_passes", o.polish_passes, false);
  op.reject_unknown();

  Section rn(root, "run", false);
  if (const json* s = rn.find("seeds", false)) c.run.seeds = parse_int_list<std::uint64_t>(*s, rn.path("seeds"));
  rn.read("n_mc", c.run.n_mc, false);
  rn.read("output_dir", c.run.output_dir, false);
  if (const json* s = rn.find("L_list", false)) c.run.L_list = parse_int_list<int>(*s, rn.path("L_list"));
  rn.read("timing_reps", c.run.timing_reps, false);
  rn.read("threads", c.run.threads, false);
  rn.reject_unknown();

  c.finalize();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string emit_config(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

GeometryParams geometry_params(const ExperimentConfig& config, int L) {
  GeometryParams p;
  p.M = config.system.M;
  p.N = config.system.N;
  p.N_r = config.system.N_r;
  p.L = L;
  p.f_carrier = config.system.f_carrier;
  p.thickness = config.system.thickness_lambda * kSpeedOfLight / config.system.f_carrier;
  p.lattice_step = config.system.lattice;
  return p;
}

OptimizerConfig optimizer_config(const ExperimentConfig& config, PhaseResolution res) {
  const auto& o = config.optimizer;
  OptimizerConfig c;
  c.P_max = config.power.P_max_W;
  c.resolution = res;
  c.power_tol = o.power_tol;
  c.power_max_iters = o.power_max_iters;
  c.admm_tol = o.admm_tol;
  c.admm_max_iters = o.admm_max_iters;
  c.beta_penalty = o.beta_penalty;
  c.penalty_scale = o.penalty_scale;
  c.outer_rel_tol = o.outer_rel_tol;
  c.max_outer_iters = o.max_iters;
  c.early_stop = o.early_stop;
  c.acceptance_guard = o.acceptance_guard;
  c.max_filter_shrink = o.max_filter_shrink;
  c.polish_passes = o.polish_passes;
  return c;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::logic_error("to_csv: row width does not match header");
    line(row);
  }
  return out;
}

void emit_csv(const CsvTable& table, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const std::string text = to_csv(table);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("emit_csv: write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("emit_csv: cannot rename onto " + path.string());
  }
}

RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed, int L, PhaseResolution res, int n_mc) {
  RunRecord r;
  r.config_hash = config.hash();
  r.seed = seed;
  r.L = L;
  r.resolution = res;
  try {
    auto t = Clock::now();
    const ChannelModel model = make_model(config, seed, L);
    r.times.channel_ns = ns_since(t);

    t = Clock::now();
    AlgorithmResult result = run_algorithm1(model, optimizer_config(config, res), seed);
    r.times.optimize_ns = ns_since(t);
    r.history = std::move(result.state.history);
    r.report = std::move(result.report);

    if (n_mc > 0) {
      t = Clock::now();
      const auto g = effective_vectors(result.state.stack, model);
      const McEstimate mc = mc_ergodic_rate(g, model, result.state.power, seed, n_mc, 1);
      r.report.mc_rate = mc.mean;
      r.report.mc_stderr = mc.stderr_;
      r.report.n_mc = mc.n;
      r.times.evaluate_ns = ns_since(t);
    }
  } catch (const NumericError& e) {
    throw NumericError("seed " + std::to_string(seed) + ", L " + std::to_string(L) + ", b " + res.label() + ": " +
                       e.what());
  }
  return r;
}

StudyOutput run_convergence_study(const ExperimentConfig& config) {
  const auto& bs = config.system.b;
  const auto& seeds = config.run.seeds;
  const int n_seeds = static_cast<int>(seeds.size());
  const int n_jobs = static_cast<int>(bs.size()) * n_seeds;

  StudyOutput out;
  out.records.resize(n_jobs);
  parallel_for(n_jobs, config.run.threads, [&](int j) {
    out.records[j] = run_single(config, seeds[j % n_seeds], config.system.L, bs[j / n_seeds], 0);
  });

  out.summary.header = {"b", "iteration", "mean_rate", "median_rate", "stderr", "n_seeds"};
  for (std::size_t bi = 0; bi < bs.size(); ++bi) {
    for (int it = 1; it <= config.optimizer.max_iters; ++it) {
      std::vector<double> rates;
      for (int s = 0; s < n_seeds; ++s) rates.push_back(rate_at(out.records[bi * n_seeds + s].history, it));
      out.summary.rows.push_back({bs[bi].label(), std::to_string(it), format_number(mean_of(rates)),
                                  format_number(median_of(rates)), format_number(stderr_of(rates)),
                                  std::to_string(n_seeds)});
    }
  }
  out.runs = runs_table(out.records);
  return out;
}

StudyOutput run_layer_sweep(const ExperimentConfig& config, const std::vector<int>& L_list) {
  if (L_list.empty()) throw std::invalid_argument("run_layer_sweep: empty layer list");
  for (std::size_t i = 0; i < L_list.size(); ++i) {
    if (L_list[i] < 1 || (i > 0 && L_list[i] <= L_list[i - 1]))
      throw std::invalid_argument("run_layer_sweep: layer list must be positive and ascending");
  }
  const auto& bs = config.system.b;
  const auto& seeds = config.run.seeds;
  const int n_b = static_cast<int>(bs.size());
  const int n_L = static_cast<int>(L_list.size());
  const int n_seeds = static_cast<int>(seeds.size());
  // Job order is (seed, L, b), which is also the order of the runs table.
  const int n_jobs = n_seeds * n_L * n_b;

  StudyOutput out;
  out.records.resize(n_jobs);
  parallel_for(n_jobs, config.run.threads, [&](int j) {
    const int s = j / (n_L * n_b);
    const int li = (j / n_b) % n_L;
    const int bi = j % n_b;
    out.records[j] = run_single(config, seeds[s], L_list[li], bs[bi], config.run.n_mc);
  });

  out.summary.header = {"L", "b", "mean_rate", "stderr", "median_rate", "mean_mc_rate", "mean_outer_iters", "n_seeds"};
  for (int li = 0; li < n_L; ++li) {
    for (int bi = 0; bi < n_b; ++bi) {
      std::vector<double> rates, mc, iters;
      for (int s = 0; s < n_seeds; ++s) {
        const auto& r = out.records[(s * n_L + li) * n_b + bi];
        rates.push_back(r.report.surrogate_sum_rate);
        mc.push_back(r.report.mc_rate);
        iters.push_back(r.outer_iterations());
      }
      out.summary.rows.push_back({std::to_string(L_list[li]), bs[bi].label(), format_number(mean_of(rates)),
                                  format_number(stderr_of(rates)), format_number(median_of(rates)),
                                  format_number(mean_of(mc)), format_number(mean_of(iters)),
                                  std::to_string(n_seeds)});
    }
  }
  out.runs = runs_table(out.records);
  return out;
}

TimingOutput run_timing_study(const ExperimentConfig& config, const std::vector<int>& L_list) {
  const PhaseResolution res = config.system.b.front();
  const std::uint64_t seed = config.run.seeds.front();
  const OptimizerConfig opt = optimizer_config(config, res);
  const int reps = config.run.timing_reps;

  TimingOutput out;
  out.table.header = {"L",           "b",  "reps", "mean_runtime_s", "stddev_runtime_s", "mean_iter_s", "stddev_iter_s",
                      "mean_outer_iters", "rate"};
  for (int L : L_list) {
    const ChannelModel model = make_model(config, seed, L);
    (void)run_algorithm1(model, opt, seed);  // warm-up, not timed

    std::vector<double> runtime, per_iter, iters;
    TimingPoint pt;
    pt.L = L;
    pt.reps = reps;
    for (int r = 0; r < reps; ++r) {
      const auto t = Clock::now();
      const AlgorithmResult result = run_algorithm1(model, opt, seed);
      runtime.push_back(1e-9 * static_cast<double>(ns_since(t)));
      const auto& h = result.state.history;
      const int n_it = h.back().iter - h.front().iter;
      iters.push_back(n_it);
      per_iter.push_back(n_it > 0 ? 1e-9 * static_cast<double>(h.back().wall_ns - h.front().wall_ns) / n_it : 0.0);
      if (r == 0) {
        pt.rate = result.report.surrogate_sum_rate;
      } else if (result.report.surrogate_sum_rate != pt.rate) {
        pt.rate_stable = false;
      }
    }
    pt.mean_runtime_s = mean_of(runtime);
    pt.stddev_runtime_s = stddev_of(runtime);
    pt.mean_iter_s = mean_of(per_iter);
    pt.stddev_iter_s = stddev_of(per_iter);
    pt.mean_outer_iters = mean_of(iters);
    out.points.push_back(pt);
    out.table.rows.push_back({std::to_string(L), res.label(), std::to_string(reps), format_number(pt.mean_runtime_s),
                              format_number(pt.stddev_runtime_s), format_number(pt.mean_iter_s),
                              format_number(pt.stddev_iter_s), format_number(pt.mean_outer_iters),
                              format_number(pt.rate)});
  }
  return out;
}

double OracleCheckOutput::fraction_within(double ratio) const {
  if (rows.empty()) return 0.0;
  int ok = 0;
  for (const auto& r : rows) ok += r.proposed >= ratio * r.oracle;
  return static_cast<double>(ok) / static_cast<double>(rows.size());
}

OracleCheckOutput run_oracle_check(const ExperimentConfig& config) {
  const PhaseResolution res = config.system.b.front();
  if (res.is_continuous()) throw ConfigError("system.b", "oracle check needs a discrete resolution first");
  if (static_cast<long>(res.bits) * config.system.N * config.system.L > kOracleMaxBits)
    throw ConfigError("system.N", "oracle search space exceeds 2^" + std::to_string(kOracleMaxBits) + " stacks");

  const auto& seeds = config.run.seeds;
  const int n = static_cast<int>(seeds.size());
  const OptimizerConfig opt = optimizer_config(config, res);
  const auto grid = default_power_grid(config.system.K, config.power.P_max_W);
  const BaselineConfig base{config.power.P_max_W, res, config.hash()};

  OracleCheckOutput out;
  out.rows.resize(n);
  parallel_for(n, config.run.threads, [&](int i) {
    const ChannelModel model = make_model(config, seeds[i], config.system.L);
    const AlgorithmResult proposed = run_algorithm1(model, opt, seeds[i]);
    const OracleResult oracle = exhaustive_oracle(model, base, grid);
    const double on_grid = best_rate_on_grid(proposed.state.stack, model, grid, config.power.P_max_W);
    out.rows[i] = {seeds[i], on_grid, proposed.report.surrogate_sum_rate, oracle.rate, oracle.evaluated};
  });

  out.table.header = {"seed", "proposed_rate", "proposed_free_power_rate", "oracle_rate", "ratio", "evaluated"};
  for (const auto& r : out.rows) {
    out.table.rows.push_back({std::to_string(r.seed), format_number(r.proposed), format_number(r.proposed_free),
                              format_number(r.oracle),
                              format_number(r.oracle > 0.0 ? r.proposed / r.oracle : 1.0),
                              std::to_string(r.evaluated)});
  }
  return out;
}

}  // namespace simbeam
