#include "assistgrid/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace assistgrid {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::uint64_t fnv64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("invalid number '" + v + "' for '" + key + "'");
  }
}

int to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (...) {
    throw ConfigError("invalid integer '" + v + "' for '" + key + "'");
  }
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const std::uint64_t u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (...) {
    throw ConfigError("invalid seed '" + v + "' for '" + key + "'");
  }
}

void apply_run_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "layouts") {
    for (const std::string& p : split(value, ','))
      if (!trim(p).empty()) cfg.layouts.push_back(trim(p));
  } else if (key == "objectives") {
    for (const std::string& o : split(value, ',')) {
      const auto kind = objective_from_name(trim(o));
      if (!kind) throw ConfigError("unknown objective '" + trim(o) + "' in 'objectives'");
      cfg.objectives.push_back(*kind);
    }
  } else if (key == "seeds") {
    for (const std::string& s : split(value, ','))
      if (!trim(s).empty()) cfg.seeds.push_back(to_u64(trim(s), "seeds"));
  } else if (key == "phase1_epochs") {
    cfg.phase1_epochs = to_int(value, key);
  } else if (key == "phase2_epochs") {
    cfg.phase2_epochs = to_int(value, key);
  } else if (key == "window") {
    cfg.window = to_int(value, key);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "subsample") {
    cfg.subsample = to_int(value, key);
  } else if (key == "sweep_seed") {
    cfg.sweep_seed = to_u64(value, key);
  } else {
    throw ConfigError("unknown key '" + key + "' in [run]");
  }
}

void apply_ppo_key(PpoConfig& ppo, const std::string& key, const std::string& value) {
  if (key == "learning_rate") ppo.learning_rate = to_double(value, key);
  else if (key == "clip_epsilon") ppo.clip_epsilon = to_double(value, key);
  else if (key == "gamma") ppo.gamma = to_double(value, key);
  else if (key == "gae_lambda") ppo.gae_lambda = to_double(value, key);
  else if (key == "entropy_coef") ppo.entropy_coef = to_double(value, key);
  else if (key == "value_coef") ppo.value_coef = to_double(value, key);
  else if (key == "minibatches") ppo.minibatches = to_int(value, key);
  else if (key == "update_epochs") ppo.update_epochs = to_int(value, key);
  else if (key == "num_envs") ppo.num_envs = to_int(value, key);
  else if (key == "rollout_len") ppo.rollout_len = to_int(value, key);
  else if (key == "max_grad_norm") ppo.max_grad_norm = to_double(value, key);
  else throw ConfigError("unknown key '" + key + "' in [ppo]");
}

void apply_rollout_key(RolloutConfig& r, const std::string& key, const std::string& value) {
  if (key == "horizon") r.horizon = to_int(value, key);
  else if (key == "num_sequences") r.num_sequences = to_int(value, key);
  else if (key == "num_repeats") r.num_repeats = to_int(value, key);
  else if (key == "mode") {
    if (value == "frozen_sampled") r.mode = CounterfactualMode::FrozenSampled;
    else if (value == "frozen_greedy") r.mode = CounterfactualMode::FrozenGreedy;
    else throw ConfigError("unknown mode '" + value + "' in [rollout]");
  } else {
    throw ConfigError("unknown key '" + key + "' in [rollout]");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::string section = "run";
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "ppo" && section != "rollout")
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section == "run") apply_run_key(cfg, key, value);
    else if (section == "ppo") apply_ppo_key(cfg.ppo, key, value);
    else apply_rollout_key(cfg.rollout, key, value);
  }
  if (cfg.seeds.empty()) throw ConfigError("'seeds' must list at least one seed");
  if (cfg.objectives.empty()) throw ConfigError("'objectives' must list at least one objective");
  return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

std::string resolve_output_dir(const std::string& dir) {
  const char* root = std::getenv("ASSISTGRID_OUTPUT_ROOT");
  if (!root || !*root || std::filesystem::path(dir).is_absolute()) return dir;
  return (std::filesystem::path(root) / dir).string();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp);
    os << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

const char kCurvesHeader[] =
    "layout_id,objective,seed,epoch,user_obj,bystander_obj,user_reward,bystander_reward,"
    "freeze_freq,boxmove_freq";

std::string curves_csv(const std::string& layout_id, ObjectiveKind kind, std::uint64_t seed,
                       const std::vector<EpochRecord>& records) {
  std::ostringstream os;
  os << kCurvesHeader << "\n";
  for (const EpochRecord& r : records) {
    os << layout_id << ',' << objective_name(kind) << ',' << seed << ',' << r.epoch << ','
       << format_double(r.user_obj) << ',' << format_double(r.bystander_obj) << ','
       << format_double(r.user_reward) << ',' << format_double(r.bystander_reward) << ','
       << format_double(r.freeze_freq) << ',' << format_double(r.boxmove_freq) << "\n";
  }
  return os.str();
}

std::vector<CurveRow> parse_curves_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != kCurvesHeader)
    throw ConfigError("curves CSV header mismatch");
  std::vector<CurveRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 10)
      throw ConfigError("curves CSV line " + std::to_string(lineno) + ": expected 10 fields");
    CurveRow r;
    r.layout_id = f[0];
    r.objective = f[1];
    r.seed = to_u64(f[2], "seed");
    r.epoch = to_int(f[3], "epoch");
    r.user_obj = to_double(f[4], "user_obj");
    r.bystander_obj = to_double(f[5], "bystander_obj");
    r.user_reward = to_double(f[6], "user_reward");
    r.bystander_reward = to_double(f[7], "bystander_reward");
    r.freeze_freq = to_double(f[8], "freeze_freq");
    r.boxmove_freq = to_double(f[9], "boxmove_freq");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summary_csv(const std::vector<LayoutResult>& results) {
  std::ostringstream os;
  os << "layout_id,objective,window,user_delta,bystander_delta,disempowered,"
        "final_user_reward,final_bystander_reward\n";
  for (const LayoutResult& r : results) {
    os << r.layout_id << ',' << objective_name(r.kind) << ',' << r.change.window << ','
       << format_double(r.change.user_delta) << ',' << format_double(r.change.bystander_delta)
       << ',' << (r.disempowered ? 1 : 0) << ',' << format_double(r.final_user_reward) << ','
       << format_double(r.final_bystander_reward) << "\n";
  }
  return os.str();
}

std::string sweep_report_text(const SweepReport& report) {
  std::ostringstream os;
  for (const auto& [name, bucket] : report.by_objective)
    os << "objective=" << name << " total=" << bucket.total
       << " disempowered=" << bucket.disempowered
       << " fraction=" << format_double(bucket.fraction()) << "\n";
  if (report.has_joint_comparison) {
    os << "joint_bystander_increased_fraction="
       << format_double(report.bystander_increased_fraction) << "\n";
    os << "joint_bystander_unaffected_fraction="
       << format_double(report.bystander_unaffected_fraction) << "\n";
    os << "joint_vs_emp_bystander_delta t=" << format_double(report.bystander_delta_test.t)
       << " p=" << format_double(report.bystander_delta_test.p)
       << " d=" << format_double(report.bystander_delta_d) << "\n";
    os << "joint_vs_emp_user_reward t=" << format_double(report.user_reward_test.t)
       << " p=" << format_double(report.user_reward_test.p)
       << " d=" << format_double(report.user_reward_d) << "\n";
  }
  return os.str();
}

static constexpr char kPhase1Magic[4] = {'A', 'G', 'P', '1'};

void save_phase1(const PhaseOneResult& result, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kPhase1Magic, 4);
  save_policy(result.user, os);
  save_policy(result.bystander, os);
}

PhaseOneResult load_phase1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kPhase1Magic, 4) != 0)
    throw std::runtime_error("bad phase-1 cache magic in " + path);
  PhaseOneResult r;
  r.user = load_policy<float>(is);
  r.bystander = load_policy<float>(is);
  return r;
}

// ---------------------------------------------------------------------------
// SVG plotting

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Series {
  std::vector<double> mean, sd;  // indexed by epoch
};

Series reduce(const std::map<int, std::vector<double>>& per_epoch) {
  Series s;
  for (const auto& [epoch, vals] : per_epoch) {
    double m = 0;
    for (double v : vals) m += v;
    m /= static_cast<double>(vals.size());
    double var = 0;
    for (double v : vals) var += (v - m) * (v - m);
    var /= static_cast<double>(vals.size());
    s.mean.push_back(m);
    s.sd.push_back(std::sqrt(var));
  }
  return s;
}

struct Panel {
  double x0, y0, x1, y1;  // pixel box
  double lo = 0, hi = 1;  // value range
  int n = 1;              // epochs

  double px(int epoch) const {
    return n <= 1 ? (x0 + x1) / 2 : x0 + (x1 - x0) * epoch / static_cast<double>(n - 1);
  }
  double py(double v) const {
    return hi <= lo ? (y0 + y1) / 2 : y1 - (y1 - y0) * (v - lo) / (hi - lo);
  }
};

void emit_band(std::ostringstream& os, const Panel& p, const Series& s, const char* color) {
  os << "<path d=\"M";
  for (std::size_t i = 0; i < s.mean.size(); ++i)
    os << (i ? " L" : "") << fmt2(p.px(static_cast<int>(i))) << ' '
       << fmt2(p.py(s.mean[i] + s.sd[i]));
  for (std::size_t i = s.mean.size(); i > 0; --i)
    os << " L" << fmt2(p.px(static_cast<int>(i - 1))) << ' '
       << fmt2(p.py(s.mean[i - 1] - s.sd[i - 1]));
  os << " Z\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
}

void emit_line(std::ostringstream& os, const Panel& p, const Series& s, const char* color) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < s.mean.size(); ++i)
    os << (i ? " " : "") << fmt2(p.px(static_cast<int>(i))) << ',' << fmt2(p.py(s.mean[i]));
  os << "\"/>\n";
}

void emit_dashed(std::ostringstream& os, const Panel& p, double level, const char* color) {
  os << "<line x1=\"" << fmt2(p.x0) << "\" y1=\"" << fmt2(p.py(level)) << "\" x2=\""
     << fmt2(p.x1) << "\" y2=\"" << fmt2(p.py(level))
     << "\" stroke=\"" << color << "\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
}

constexpr const char* kUserColor = "#1f77b4";
constexpr const char* kBystanderColor = "#ff7f0e";

}  // namespace

std::string plot_svg(const std::vector<CurveRow>& rows) {
  if (rows.empty()) throw ConfigError("no curve rows to plot");

  // Group by objective; RandomBaseline rows become dashed levels.
  struct Group {
    std::map<int, std::vector<double>> uo, bo, ur, br;
  };
  std::map<std::string, Group> groups;
  std::vector<double> base_uo, base_bo, base_ur, base_br;
  int max_epoch = 0;
  for (const CurveRow& r : rows) {
    max_epoch = std::max(max_epoch, r.epoch);
    if (r.objective == objective_name(ObjectiveKind::RandomBaseline)) {
      base_uo.push_back(r.user_obj);
      base_bo.push_back(r.bystander_obj);
      base_ur.push_back(r.user_reward);
      base_br.push_back(r.bystander_reward);
      continue;
    }
    Group& g = groups[r.objective];
    g.uo[r.epoch].push_back(r.user_obj);
    g.bo[r.epoch].push_back(r.bystander_obj);
    g.ur[r.epoch].push_back(r.user_reward);
    g.br[r.epoch].push_back(r.bystander_reward);
  }
  auto level = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };

  Panel obj_panel{60, 40, 420, 320};
  Panel rew_panel{500, 40, 860, 320};
  obj_panel.n = rew_panel.n = max_epoch + 1;

  // Reduce all groups first so both panels can be scaled.
  std::map<std::string, std::array<Series, 4>> reduced;
  for (const auto& [name, g] : groups)
    reduced[name] = {reduce(g.uo), reduce(g.bo), reduce(g.ur), reduce(g.br)};

  std::vector<const Series*> obj_series, rew_series;
  for (const auto& [name, rs] : reduced) {
    obj_series.push_back(&rs[0]);
    obj_series.push_back(&rs[1]);
    rew_series.push_back(&rs[2]);
    rew_series.push_back(&rs[3]);
  }
  const bool has_base = !base_uo.empty();
  {
    double lo = 1e300, hi = -1e300;
    for (const Series* s : obj_series)
      for (std::size_t i = 0; i < s->mean.size(); ++i) {
        lo = std::min(lo, s->mean[i] - s->sd[i]);
        hi = std::max(hi, s->mean[i] + s->sd[i]);
      }
    if (has_base) {
      lo = std::min({lo, level(base_uo), level(base_bo)});
      hi = std::max({hi, level(base_uo), level(base_bo)});
    }
    if (lo > hi) { lo = 0; hi = 1; }
    const double pad = (hi - lo) * 0.05 + 1e-12;
    obj_panel.lo = lo - pad;
    obj_panel.hi = hi + pad;
  }
  {
    double lo = 1e300, hi = -1e300;
    for (const Series* s : rew_series)
      for (std::size_t i = 0; i < s->mean.size(); ++i) {
        lo = std::min(lo, s->mean[i] - s->sd[i]);
        hi = std::max(hi, s->mean[i] + s->sd[i]);
      }
    if (has_base) {
      lo = std::min({lo, level(base_ur), level(base_br)});
      hi = std::max({hi, level(base_ur), level(base_br)});
    }
    if (lo > hi) { lo = 0; hi = 1; }
    const double pad = (hi - lo) * 0.05 + 1e-12;
    rew_panel.lo = lo - pad;
    rew_panel.hi = hi + pad;
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" height=\"360\" "
        "viewBox=\"0 0 880 360\">\n";
  os << "<rect width=\"880\" height=\"360\" fill=\"white\"/>\n";
  for (const Panel* p : {&obj_panel, &rew_panel})
    os << "<rect x=\"" << fmt2(p->x0) << "\" y=\"" << fmt2(p->y0) << "\" width=\""
       << fmt2(p->x1 - p->x0) << "\" height=\"" << fmt2(p->y1 - p->y0)
       << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  os << "<text x=\"240\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">objective value</text>\n";
  os << "<text x=\"680\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">reward</text>\n";
  os << "<text x=\"240\" y=\"345\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"11\">epoch</text>\n";
  os << "<text x=\"680\" y=\"345\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"11\">epoch</text>\n";
  // Axis extents.
  os << "<text x=\"55\" y=\"320\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"10\">" << format_double(obj_panel.lo) << "</text>\n";
  os << "<text x=\"55\" y=\"48\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"10\">" << format_double(obj_panel.hi) << "</text>\n";
  os << "<text x=\"495\" y=\"320\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"10\">" << format_double(rew_panel.lo) << "</text>\n";
  os << "<text x=\"495\" y=\"48\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"10\">" << format_double(rew_panel.hi) << "</text>\n";

  for (const auto& [name, rs] : reduced) {
    emit_band(os, obj_panel, rs[0], kUserColor);
    emit_band(os, obj_panel, rs[1], kBystanderColor);
    emit_line(os, obj_panel, rs[0], kUserColor);
    emit_line(os, obj_panel, rs[1], kBystanderColor);
    emit_band(os, rew_panel, rs[2], kUserColor);
    emit_band(os, rew_panel, rs[3], kBystanderColor);
    emit_line(os, rew_panel, rs[2], kUserColor);
    emit_line(os, rew_panel, rs[3], kBystanderColor);
  }
  if (has_base) {
    emit_dashed(os, obj_panel, level(base_uo), kUserColor);
    emit_dashed(os, obj_panel, level(base_bo), kBystanderColor);
    emit_dashed(os, rew_panel, level(base_ur), kUserColor);
    emit_dashed(os, rew_panel, level(base_br), kBystanderColor);
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Reference layouts

const std::map<std::string, std::string>& reference_layouts() {
  static const std::map<std::string, std::string> layouts = {
      {"pushpull_ref",
       "variant: push_pull_adjacent\n"
       "episode_len: 50\n"
       "key_user: 2,3\n"
       "key_bystander: 7,1\n"
       "#########\n"
       "#UOR...K#\n"
       "##.##.#.#\n"
       "#.K.*.#.#\n"
       "#######B#\n"
       "#########\n"},
      {"push_ref",
       "variant: push_adjacent\n"
       "episode_len: 50\n"
       "key_user: 2,3\n"
       "key_bystander: 7,1\n"
       "#########\n"
       "#URO...K#\n"
       "##.##.#.#\n"
       "#.K.*.#.#\n"
       "#######B#\n"
       "#########\n"},
      {"moveany_ref",
       "variant: move_any\n"
       "episode_len: 50\n"
       "#######\n"
       "#U..OB#\n"
       "#.....#\n"
       "##.#.##\n"
       "#..#..#\n"
       "#*.#.*#\n"
       "#######\n"},
      {"freeze_ref",
       "variant: move_any_freeze\n"
       "episode_len: 50\n"
       "goal_user: 1,5\n"
       "goal_bystander: 1,2\n"
       "#######\n"
       "#....B#\n"
       "#*....#\n"
       "#U....#\n"
       "#.....#\n"
       "#*...O#\n"
       "#######\n"},
  };
  return layouts;
}

Layout load_layout_file(const std::string& path) {
  Layout l = parse_layout(read_file(path));
  l.id = std::filesystem::path(path).stem().string();
  return l;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

namespace {

// Runs phase 1 (cached) + phase 2 for every (objective, seed) of one layout.
// Appends LayoutResults (one per objective) and writes curve CSVs.
void run_layout_pipeline(const Layout& layout, const RunConfig& cfg, const std::string& out_dir,
                         std::vector<LayoutResult>& results, std::ostream& log) {
  namespace fs = std::filesystem;
  std::map<std::uint64_t, PhaseOneResult> phase1;
  for (std::uint64_t seed : cfg.seeds) {
    const std::string cache =
        (fs::path(out_dir) / ("phase1_" + layout.id + "_s" + std::to_string(seed) + ".ckpt"))
            .string();
    if (fs::exists(cache)) {
      phase1[seed] = load_phase1(cache);
      log << "phase1 " << layout.id << " seed " << seed << ": cached\n";
    } else {
      Rng rng(mix_seed(fnv64(layout.id), mix_seed(seed, 1)));
      phase1[seed] = train_humans_phase(layout, cfg.ppo, cfg.phase1_epochs, rng);
      save_phase1(phase1[seed], cache);
      log << "phase1 " << layout.id << " seed " << seed << ": trained\n";
    }
  }
  for (ObjectiveKind kind : cfg.objectives) {
    std::vector<RunCurves> per_seed;
    for (std::uint64_t seed : cfg.seeds) {
      Rng rng(mix_seed(fnv64(layout.id),
                       mix_seed(seed, 1000 + static_cast<std::uint64_t>(objective_index(kind)) +
                                          (kind == ObjectiveKind::JointEmpowerment ? 100 : 0) +
                                          (kind == ObjectiveKind::RandomBaseline ? 200 : 0))));
      const AssistantTrainResult r = train_assistant_phase(
          layout, phase1.at(seed), kind, cfg.ppo, cfg.rollout, cfg.phase2_epochs, rng, seed);
      const std::string stem = layout.id + "_" + objective_name(kind) + "_s" +
                               std::to_string(seed);
      write_file_atomic((fs::path(out_dir) / ("curves_" + stem + ".csv")).string(),
                        curves_csv(layout.id, kind, seed, r.records));
      if (kind != ObjectiveKind::RandomBaseline)
        save_policy_file(r.params,
                         (fs::path(out_dir) / ("assistant_" + stem + ".ckpt")).string());
      RunCurves curves;
      for (const EpochRecord& rec : r.records) {
        curves.user_obj.push_back(rec.user_obj);
        curves.bystander_obj.push_back(rec.bystander_obj);
        curves.user_reward.push_back(rec.user_reward);
        curves.bystander_reward.push_back(rec.bystander_reward);
      }
      per_seed.push_back(std::move(curves));
      log << "phase2 " << layout.id << " " << objective_name(kind) << " seed " << seed
          << ": done\n";
    }
    results.push_back(summarize_runs(layout.id, kind, per_seed, cfg.window));
  }
}

}  // namespace

int run_train(const RunConfig& cfg, std::ostream& log) {
  try {
    if (cfg.layouts.empty()) throw ConfigError("'layouts' must list at least one layout file");
    const std::string out_dir = resolve_output_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    std::vector<LayoutResult> results;
    for (const std::string& path : cfg.layouts) {
      const Layout layout = load_layout_file(path);
      run_layout_pipeline(layout, cfg, out_dir, results, log);
    }
    write_file_atomic((std::filesystem::path(out_dir) / "summary.csv").string(),
                      summary_csv(results));
    return 0;
  } catch (const NonFiniteLoss& e) {
    log << "training divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  }
}

int run_sweep(const RunConfig& cfg, const std::string& base_layout_path, std::ostream& log) {
  try {
    namespace fs = std::filesystem;
    const std::string out_dir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "layouts");
    const Layout base = load_layout_file(base_layout_path);
    std::vector<Layout> variations = generate_variations(base, cfg.sweep_seed, /*shuffle=*/true);
    if (cfg.subsample > 0 && static_cast<int>(variations.size()) > cfg.subsample)
      variations.resize(static_cast<std::size_t>(cfg.subsample));
    log << "sweep over " << variations.size() << " variations of " << base.id << "\n";
    std::vector<LayoutResult> results;
    for (const Layout& v : variations) {
      write_file_atomic((fs::path(out_dir) / "layouts" / (v.id + ".layout")).string(),
                        write_layout(v));
      run_layout_pipeline(v, cfg, out_dir, results, log);
    }
    write_file_atomic((fs::path(out_dir) / "sweep_summary.csv").string(), summary_csv(results));
    write_file_atomic((fs::path(out_dir) / "sweep_report.txt").string(),
                      sweep_report_text(aggregate_sweep(results)));
    return 0;
  } catch (const NonFiniteLoss& e) {
    log << "training divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  }
}

int run_oracle(const std::string& layout_path, int horizon, std::ostream& out) {
  try {
    const Layout layout = load_layout_file(layout_path);
    const GridState state = reset(layout);
    const FrozenPolicies none;
    for (AgentId subject : {AgentId::User, AgentId::Bystander}) {
      const char* who = subject == AgentId::User ? "user" : "bystander";
      for (ObjectiveKind kind : {ObjectiveKind::Empowerment, ObjectiveKind::DiscreteChoice,
                                 ObjectiveKind::EntropicChoice, ObjectiveKind::AvE}) {
        const ObjectiveEstimate e = exact_objective(state, kind, horizon, subject, none);
        out << who << " " << objective_name(kind) << " = " << format_double(e.value) << "\n";
      }
    }
    return 0;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_render(const std::string& layout_path, std::ostream& out) {
  try {
    const Layout layout = load_layout_file(layout_path);
    out << render_ascii(reset(layout));
    return 0;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_plot(const std::vector<std::string>& csv_paths, const std::string& out_path,
             std::ostream& log) {
  try {
    std::vector<CurveRow> rows;
    for (const std::string& p : csv_paths) {
      const std::vector<CurveRow> r = parse_curves_csv(read_file(p));
      rows.insert(rows.end(), r.begin(), r.end());
    }
    write_file_atomic(out_path, plot_svg(rows));
    log << "wrote " << out_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  }
}

int run_gen_layouts(const std::string& out_dir, std::ostream& log) {
  try {
    const std::string dir = resolve_output_dir(out_dir);
    std::filesystem::create_directories(dir);
    for (const auto& [id, text] : reference_layouts()) {
      write_file_atomic((std::filesystem::path(dir) / (id + ".layout")).string(), text);
      log << "wrote " << id << ".layout\n";
    }
    return 0;
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace assistgrid
