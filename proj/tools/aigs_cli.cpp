// Command-line front end: run, report, replay.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <aigs/aigs.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace aigs;

namespace {

enum Exit { kOk = 0, kGeneric = 1, kConfig = 2, kBackend = 3, kEnvironment = 4, kAborted = 5, kDivergence = 6, kUnreadable = 7 };

std::shared_ptr<llm::Backend> make_backend(const std::string& spec, const fs::path& config_dir) {
  if (spec.rfind("scripted:", 0) == 0) {
    std::string target = spec.substr(9);
    fs::path path = target;
    if (!fs::exists(path)) path = config_dir / "scenarios" / (target + ".json");
    if (!fs::exists(path)) throw ConfigError("scenario not found: " + target);
    return std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::from_file(path.string()));
  }
  if (spec == "live" || spec.rfind("live:", 0) == 0) {
    llm::HttpConfig hc;
    if (spec.size() > 5) hc.base_url = spec.substr(5);
    return std::make_shared<llm::HttpBackend>(hc);
  }
  throw ConfigError("unknown backend '" + spec + "' (expected scripted:<path|name> or live[:url])");
}

void print_report(const report::RunView& run, const std::string& format) {
  auto r = report::build_report(run);
  if (format == "json")
    std::cout << canonical(r) << "\n";
  else
    std::cout << report::render_text(r);
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets, const std::string& backend_spec,
            const std::string& out, const std::string& format, const std::optional<std::uint64_t>& seed,
            const std::string& templates_dir) {
  json raw = json::parse(read_file(config_path));
  for (auto& s : sets) orchestrator::apply_override(raw, s);
  if (seed) raw["seed"] = *seed;
  auto cfg = orchestrator::parse_config(raw);

  dsl::GrammarRegistry reg;
  dsl::register_builtin_grammars(reg);
  std::shared_ptr<envs::Environment> env = envs::make_environment(cfg.environment);
  auto backend = make_backend(backend_spec, fs::path(config_path).parent_path());
  auto templates = templates_dir.empty() ? agents::PromptTemplates::defaults()
                                         : agents::PromptTemplates::from_directory(templates_dir);

  fs::create_directories(out);
  auto log_path = (fs::path(out) / report::kLogFile).string();
  bool resume = fs::exists(log_path) && fs::file_size(log_path) > 0;
  auto log = resume ? store::EventLog::open(log_path) : store::EventLog::create(log_path);
  store::ResearchStore store(std::move(log), reg);
  write_file((fs::path(out) / report::kManifestFile).string(), canonical(orchestrator::make_manifest(cfg, reg)) + "\n");

  llm::Gateway gateway(backend, std::make_shared<llm::CostLedger>());
  orchestrator::Pipeline pipeline(cfg, env, gateway, reg, templates, store);
  int code = kOk;
  try {
    pipeline.run();
  } catch (const orchestrator::RunAborted& e) {
    std::cerr << "run aborted: " << e.what() << "\n";
    code = kAborted;
  } catch (const llm::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    code = kBackend;
  }
  auto view = report::load_run(out);
  report::write_reports(out, view);
  print_report(view, format);
  return code;
}

int cmd_report(const std::string& dir, const std::string& format) {
  auto view = report::load_run(dir);
  print_report(view, format);
  return kOk;
}

int cmd_replay(const std::string& dir) {
  auto view = report::load_run(dir);
  dsl::GrammarRegistry reg;
  dsl::register_builtin_grammars(reg);
  auto divergences = report::verify(view, reg);
  if (divergences.empty()) {
    std::cout << "verified: " << view.log.events().size() << " records, digest " << view.log.run_digest() << "\n";
    return kOk;
  }
  std::cout << "divergence at " << divergences.front().describe() << "\n";
  for (std::size_t k = 1; k < divergences.size(); ++k) std::cerr << "  also " << divergences[k].describe() << "\n";
  return kDivergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Research-pipeline orchestration engine"};
  app.require_subcommand(1);

  std::string config, backend = "live", out, format = "text", templates;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run (or resume) a research pipeline");
  run->add_option("--config", config, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--set", sets, "Override a config field, e.g. falsification.K=2");
  run->add_option("--backend", backend, "scripted:<path|name> or live[:url]");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));
  run->add_option("--seed", seed, "Run seed");
  run->add_option("--templates", templates, "Directory of prompt template overrides")->check(CLI::ExistingDirectory);

  std::string dir, report_format = "text";
  auto* rep = app.add_subcommand("report", "Print the report for a run directory");
  rep->add_option("dir", dir, "Run directory")->required();
  rep->add_option("--format", report_format, "Report format")->check(CLI::IsMember({"text", "json"}));

  std::string replay_dir;
  auto* rpl = app.add_subcommand("replay", "Verify a run directory by re-deriving computed fields");
  rpl->add_option("dir", replay_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config, sets, backend, out, format, seed, templates);
    if (*rep) return cmd_report(dir, report_format);
    return cmd_replay(replay_dir);
  } catch (const store::ChecksumError& e) {
    std::cerr << "unreadable log: " << e.what() << "\n";
    return kUnreadable;
  } catch (const store::GapError& e) {
    std::cerr << "unreadable log: " << e.what() << "\n";
    return kUnreadable;
  } catch (const store::DuplicateError& e) {
    std::cerr << "unreadable log: " << e.what() << "\n";
    return kUnreadable;
  } catch (const orchestrator::RunAborted& e) {
    std::cerr << "run aborted: " << e.what() << "\n";
    return kAborted;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const llm::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const EnvironmentError& e) {
    std::cerr << "environment error: " << e.what() << "\n";
    return kEnvironment;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeneric;
  }
}
