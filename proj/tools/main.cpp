#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "assistgrid/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"assistgrid: multi-agent gridworld objective-training harness"};
  app.require_subcommand(1);

  std::string config_path, layout_path, out_path, out_dir = "layouts";
  std::vector<std::string> csv_paths;
  int horizon = 5;

  CLI::App* train = app.add_subcommand("train", "run the two-phase training pipeline");
  train->add_option("config", config_path, "run config file")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "train over layout variations");
  sweep->add_option("config", config_path, "run config file")->required();
  sweep->add_option("layout", layout_path, "base layout file")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "print exact objective values at reset");
  oracle->add_option("layout", layout_path, "layout file")->required();
  oracle->add_option("-T,--horizon", horizon, "rollout horizon");

  CLI::App* plot = app.add_subcommand("plot", "emit an SVG from curve CSVs");
  plot->add_option("csv", csv_paths, "curves CSV file(s)")->required();
  plot->add_option("-o,--output", out_path, "output SVG path")->required();

  CLI::App* render = app.add_subcommand("render", "print a layout's initial state");
  render->add_option("layout", layout_path, "layout file")->required();

  CLI::App* gen = app.add_subcommand("gen-layouts", "write the reference layout files");
  gen->add_option("-o,--output", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return assistgrid::run_train(assistgrid::load_run_config(config_path), std::cout);
    if (*sweep)
      return assistgrid::run_sweep(assistgrid::load_run_config(config_path), layout_path,
                                   std::cout);
    if (*oracle) return assistgrid::run_oracle(layout_path, horizon, std::cout);
    if (*plot) return assistgrid::run_plot(csv_paths, out_path, std::cout);
    if (*render) return assistgrid::run_render(layout_path, std::cout);
    if (*gen) return assistgrid::run_gen_layouts(out_dir, std::cout);
  } catch (const std::exception& e) {
    std::cout << "config error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
