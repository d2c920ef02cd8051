#include "manifest.hpp"

#include <filesystem>
#include <fstream>

#include "rcs/errors.hpp"

namespace rcs::cli {

RunManifest::RunManifest(std::string subcommand, std::string out_dir)
    : subcommand_(std::move(subcommand)),
      out_dir_(std::move(out_dir)),
      config_(nlohmann::json::object()),
      start_(std::chrono::steady_clock::now()) {}

void RunManifest::set_config(const nlohmann::json& effective_config) { config_ = effective_config; }

void RunManifest::add_output(const std::string& path) { outputs_.push_back(path); }

void RunManifest::add_check(const std::string& name, bool pass) { checks_.emplace_back(name, pass); }

bool RunManifest::all_passed() const {
  for (const auto& [name, pass] : checks_) {
    if (!pass) return false;
  }
  return true;
}

nlohmann::json RunManifest::commit() const {
  nlohmann::json checks = nlohmann::json::object();
  for (const auto& [name, pass] : checks_) checks[name] = pass;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json record{{"subcommand", subcommand_},
                        {"config_hash", config_hash(config_)},
                        {"version", code_version()},
                        {"outputs", outputs_},
                        {"wall_seconds", wall},
                        {"checks", checks},
                        {"config", config_}};
  std::filesystem::create_directories(out_dir_);
  std::ofstream out(std::filesystem::path(out_dir_) / "manifest.jsonl", std::ios::app);
  if (!out) throw Error("manifest: cannot append in " + out_dir_);
  out << record.dump() << '\n';
  return record;
}

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string code_version() { return RCS_VERSION; }

CLI::Option* OptionBinder::flag(const std::string& name, bool& target, const std::string& help) {
  CLI::Option* opt = app_->add_flag("--" + name, target, help);
  appliers_.push_back([opt, name, &target](const nlohmann::json& js) {
    if (opt->count() == 0 && js.contains(name)) target = js.at(name).get<bool>();
  });
  return opt;
}

void OptionBinder::apply(const nlohmann::json& js) const {
  try {
    for (const auto& f : appliers_) f(js);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& js) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << js.dump(2) << '\n';
}

std::pair<int, int> parse_int_range(const std::string& text) {
  try {
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (lo > hi) throw ConfigError("range: empty range " + text);
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ConfigError("range: cannot parse '" + text + "'");
  }
}

}  // namespace rcs::cli
