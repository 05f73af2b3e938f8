#include "mvk/error.hpp"
#include "mvk/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

int exit_code(mvk::ErrorCode code) {
  switch (code) {
    case mvk::ErrorCode::ConfigError:
    case mvk::ErrorCode::InvalidArgument:
    case mvk::ErrorCode::InvalidIndexSet:
    case mvk::ErrorCode::MissingGroundTruth:
    case mvk::ErrorCode::ShapeMismatch:
      return kConfig;
    case mvk::ErrorCode::IoError:
      return kIo;
    default:
      return kNumerical;
  }
}

/// Flags shared by every pipeline subcommand; they override config keys.
struct Overrides {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t views = 0;
  double epsilon = 0.0;
  double gamma = 0.0;
  std::string fusion;
  std::string convention;
  int workers = 1;
  std::vector<CLI::Option*> given;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
    given = {
        app->add_option("--seed", seed, "random seed"),
        app->add_option("--out", out, "output directory"),
        app->add_option("--views", views, "number of views (zeta)")->check(CLI::PositiveNumber),
        app->add_option("--epsilon", epsilon, "kernel width"),
        app->add_option("--gamma", gamma, "numerical-rank threshold"),
        app->add_option("--fusion", fusion, "min, max or histogram")
            ->check(CLI::IsMember({"min", "max", "histogram"})),
        app->add_option("--convention", convention, "half or full")->check(CLI::IsMember({"half", "full"})),
        app->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber),
    };
  }

  mvk::ExperimentConfig resolve(const std::optional<std::string>& experiment) const {
    std::optional<std::filesystem::path> path;
    if (!config.empty()) path = config;
    auto c = mvk::load_config(path, experiment);
    nlohmann::json flags = nlohmann::json::object();
    if (given[0]->count()) flags["seed"] = seed;
    if (given[1]->count()) flags["out"] = out;
    if (given[2]->count()) flags["zeta"] = views;
    if (given[3]->count()) flags["epsilon"] = epsilon;
    if (given[4]->count()) flags["gamma"] = gamma;
    if (given[5]->count()) flags["fusion"] = fusion;
    if (given[6]->count()) flags["convention"] = convention;
    if (given[7]->count()) flags["workers"] = workers;
    mvk::apply_config_json(c, flags);
    return c;
  }
};

void print_results(const nlohmann::json& report) {
  std::cout << report["results"].dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view Mahalanobis kernels and diffusion maps"};
  app.require_subcommand(1);

  Overrides gen_o, ker_o, emb_o, eva_o, exp_o;
  std::string gen_name = "brownian_consensus";
  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
  gen->add_option("experiment", gen_name, "brownian_consensus, helix_singleview or flower_multiview");
  gen_o.attach(gen);

  std::string ker_manifest;
  std::string ker_name = "kernel.mvk";
  auto* ker = app.add_subcommand("kernel", "build the multi-view kernel of a dataset");
  ker->add_option("--manifest", ker_manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  ker->add_option("--name", ker_name, "kernel file name (.mvk binary or .csv)");
  ker_o.attach(ker);

  std::string emb_kernel;
  auto* emb = app.add_subcommand("embed", "diffusion-map embedding of a kernel");
  emb->add_option("--kernel", emb_kernel, "kernel file")->required()->check(CLI::ExistingFile);
  emb_o.attach(emb);

  std::string eva_kernel, eva_manifest, eva_embedding;
  auto* eva = app.add_subcommand("evaluate", "compare a kernel against ground truth");
  eva->add_option("--kernel", eva_kernel, "kernel file")->required()->check(CLI::ExistingFile);
  eva->add_option("--manifest", eva_manifest, "dataset manifest with ground truth")->required()->check(CLI::ExistingFile);
  eva->add_option("--embedding", eva_embedding, "embedding CSV")->check(CLI::ExistingFile);
  eva_o.attach(eva);

  std::string exp_name;
  auto* exp = app.add_subcommand("experiment", "run a named experiment end to end");
  exp->add_option("name", exp_name, "brownian_consensus, helix_singleview, flower_multiview or custom")->required();
  exp_o.attach(exp);

  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (app.got_subcommand("version")) {
      std::cout << "mvk " << MVK_VERSION << '\n';
    } else if (gen->parsed()) {
      print_results(mvk::generate_command(gen_o.resolve(gen_name)));
    } else if (ker->parsed()) {
      print_results(mvk::kernel_command(ker_o.resolve(std::nullopt), ker_manifest, ker_name));
    } else if (emb->parsed()) {
      print_results(mvk::embed_command(emb_o.resolve(std::nullopt), emb_kernel));
    } else if (eva->parsed()) {
      std::optional<std::filesystem::path> e;
      if (!eva_embedding.empty()) e = eva_embedding;
      print_results(mvk::evaluate_command(eva_o.resolve(std::nullopt), eva_kernel, eva_manifest, e));
    } else if (exp->parsed()) {
      print_results(mvk::run_experiment(exp_o.resolve(exp_name)));
    }
  } catch (const mvk::Error& e) {
    std::cerr << "mvk: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "mvk: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "mvk: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
