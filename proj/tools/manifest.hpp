#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace rcs::cli {

/// One line of <out>/manifest.jsonl. Appended once per run.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::string out_dir);

  void set_config(const nlohmann::json& effective_config);
  void add_output(const std::string& path);
  void add_check(const std::string& name, bool pass);
  bool all_passed() const;

  /// Appends the record and returns it.
  nlohmann::json commit() const;

 private:
  std::string subcommand_;
  std::string out_dir_;
  nlohmann::json config_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, bool>> checks_;
  std::chrono::steady_clock::time_point start_;
};

/// FNV-1a over the compact JSON dump; stable across runs and platforms.
std::string config_hash(const nlohmann::json& config);

std::string code_version();

/// Registers `--flag` on `app` and remembers how to fill `target` from a
/// config-file key of the same name when the flag is absent.
class OptionBinder {
 public:
  explicit OptionBinder(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* bind(const std::string& flag, T& target, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + flag, target, help)->capture_default_str();
    appliers_.push_back([opt, flag, &target](const nlohmann::json& js) {
      if (opt->count() == 0 && js.contains(flag)) target = js.at(flag).get<T>();
    });
    return opt;
  }

  CLI::Option* flag(const std::string& flag, bool& target, const std::string& help);

  /// Fills unset options from `js`, then returns the effective values.
  void apply(const nlohmann::json& js) const;

 private:
  CLI::App* app_;
  std::vector<std::function<void(const nlohmann::json&)>> appliers_;
};

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& js);

/// Parses "a..b" or a single integer.
std::pair<int, int> parse_int_range(const std::string& text);

}  // namespace rcs::cli
