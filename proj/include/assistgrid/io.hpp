#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "assistgrid/analysis.hpp"
#include "assistgrid/grid.hpp"
#include "assistgrid/objectives.hpp"
#include "assistgrid/policy.hpp"
#include "assistgrid/trainer.hpp"

namespace assistgrid {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Line-oriented `key = value` config with [run], [ppo], and [rollout]
// sections. '#' starts a comment.
struct RunConfig {
  std::vector<std::string> layouts;
  std::vector<ObjectiveKind> objectives;
  std::vector<std::uint64_t> seeds;
  int phase1_epochs = 200;
  int phase2_epochs = 60;
  int window = 5;
  std::string output_dir = "out";
  int subsample = 20;          // sweep only
  std::uint64_t sweep_seed = 0;
  PpoConfig ppo;
  RolloutConfig rollout;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Resolves the configured output directory against the ASSISTGRID_OUTPUT_ROOT
// environment variable (relative dirs are placed under the root when set).
std::string resolve_output_dir(const std::string& dir);

// All floats in result files are printed with %.9g.
std::string format_double(double v);

// write-temp-then-rename so readers never see partial files.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

extern const char kCurvesHeader[];  // the 10-column curves schema

std::string curves_csv(const std::string& layout_id, ObjectiveKind kind, std::uint64_t seed,
                       const std::vector<EpochRecord>& records);

struct CurveRow {
  std::string layout_id;
  std::string objective;
  std::uint64_t seed = 0;
  int epoch = 0;
  double user_obj = 0, bystander_obj = 0;
  double user_reward = 0, bystander_reward = 0;
  double freeze_freq = 0, boxmove_freq = 0;
};

std::vector<CurveRow> parse_curves_csv(const std::string& text);

std::string summary_csv(const std::vector<LayoutResult>& results);
std::string sweep_report_text(const SweepReport& report);

// Phase-1 cache: frozen human policies for one (layout, seed).
void save_phase1(const PhaseOneResult& result, const std::string& path);
PhaseOneResult load_phase1(const std::string& path);

// Two panels (objective value, reward): per-human mean across seeds with a
// standard-deviation band, plus dashed RandomBaseline levels.
std::string plot_svg(const std::vector<CurveRow>& rows);

// Reference layouts shipped with the tool, keyed by id.
const std::map<std::string, std::string>& reference_layouts();

Layout load_layout_file(const std::string& path);

// Subcommand bodies; return process exit codes (0 ok, 2 config error,
// 3 training divergence).
int run_train(const RunConfig& cfg, std::ostream& log);
int run_sweep(const RunConfig& cfg, const std::string& base_layout_path, std::ostream& log);
int run_oracle(const std::string& layout_path, int horizon, std::ostream& out);
int run_render(const std::string& layout_path, std::ostream& out);
int run_plot(const std::vector<std::string>& csv_paths, const std::string& out_path,
             std::ostream& log);
int run_gen_layouts(const std::string& out_dir, std::ostream& log);

}  // namespace assistgrid
