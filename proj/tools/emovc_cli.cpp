// SPDX-License-Identifier: Apache-2.0
//
// emovc command-line front end. Talks to the library only through the C API.
// Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emovc/emovc.h"

namespace {

struct Command {
  const char* name;
  const char* about;
  std::vector<std::string> keys;
};

const std::vector<std::string> kTrainKeys = {"corpus", "out", "source", "target", "steps", "batch", "crop", "lr_g",
                                             "lr_d", "lambda1", "lambda2", "rho", "seed", "checkpoint_interval", "resume"};
const std::vector<std::string> kEvalKeys = {"split", "exclude_c0", "dtw_band", "probe", "probe_steps", "wav_dir"};

std::vector<Command> commands() {
  auto join = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return {
      {"synth-corpus", "Render the synthetic emotional corpus",
       {"corpus", "emotions", "train_count", "val_count", "eval_count", "synth_seed"}},
      {"extract", "Analyse every corpus WAV into the feature cache", {"corpus"}},
      {"train", "Train a CycleGAN pair between two emotions", join(kTrainKeys, {"combo"})},
      {"convert", "Convert one WAV with a trained model", {"model", "input", "output", "direction"}},
      {"evaluate", "Score a trained model on a corpus split (both directions)",
       join({"model", "corpus", "out", "seed"}, kEvalKeys)},
      {"report", "Print the table of a saved report and redraw loss plots", {"out", "report"}},
      {"experiment", "Train and evaluate every feature combination", join(join(kTrainKeys, {"combos"}), kEvalKeys)},
  };
}

std::string dashed(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return key;
}

struct KeyDoc {
  std::string def, help;
};

std::map<std::string, KeyDoc> key_docs() {
  std::map<std::string, KeyDoc> out;
  for (std::size_t i = 0; i < emovc_config_key_count(); ++i) {
    const char *name = nullptr, *def = nullptr, *help = nullptr;
    emovc_config_key_info(i, &name, &def, &help);
    out[name] = {def, help};
  }
  return out;
}

using ConfigPtr = std::unique_ptr<emovc_config, decltype(&emovc_config_destroy)>;

// Problems with the configuration itself count as usage errors.
int usage_error(const std::string& message) {
  std::fprintf(stderr, "emovc: %s\n", message.c_str());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotional voice conversion with CycleGAN and CWT prosody features", "emovc"};
  app.set_version_flag("--version", std::string(emovc_version()));
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_file;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_file, "key = value config file applied before the flags");
  app.add_option("--set", overrides, "extra KEY=VALUE override (repeatable)");

  const auto docs = key_docs();
  std::map<std::string, std::string> values;  // key -> value given on the command line
  std::vector<std::pair<CLI::App*, std::pair<std::string, CLI::Option*>>> options;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.about);
    for (const auto& key : cmd.keys) {
      const auto& d = docs.at(key);
      const std::string desc = d.help + (d.def.empty() ? "" : " [default: " + d.def + "]");
      CLI::Option* opt = nullptr;
      if (d.def == "true" || d.def == "false")
        opt = sub->add_flag("--" + dashed(key) + "{true}", values[std::string(cmd.name) + "/" + key], desc);
      else
        opt = sub->add_option("--" + dashed(key), values[std::string(cmd.name) + "/" + key], desc);
      options.push_back({sub, {key, opt}});
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    std::fprintf(stderr, "%s", app.help().c_str());
    return 2;
  }
  const std::string name = chosen.front()->get_name();

  emovc_config* raw = nullptr;
  if (emovc_config_create(&raw) != EMOVC_OK) {
    std::fprintf(stderr, "emovc: %s\n", emovc_last_error());
    return 1;
  }
  ConfigPtr cfg(raw, emovc_config_destroy);
  if (!config_file.empty() && emovc_config_load(cfg.get(), config_file.c_str()) != EMOVC_OK)
    return usage_error(emovc_last_error());
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) return usage_error("--set expects KEY=VALUE, got '" + kv + "'");
    if (emovc_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()) != EMOVC_OK)
      return usage_error(emovc_last_error());
  }
  for (const auto& [sub, opt] : options) {
    if (sub->get_name() != name || opt.second->count() == 0) continue;
    if (emovc_config_set(cfg.get(), opt.first.c_str(), values[name + "/" + opt.first].c_str()) != EMOVC_OK)
      return usage_error(emovc_last_error());
  }

  const auto s = emovc_run(name.c_str(), cfg.get());
  if (s != EMOVC_OK) {
    std::fprintf(stderr, "emovc: %s failed (%s): %s\n", name.c_str(), emovc_status_name(s), emovc_last_error());
    return 1;
  }
  return 0;
}
