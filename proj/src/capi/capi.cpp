// SPDX-License-Identifier: Apache-2.0
#include "emovc/emovc.h"

#include <cstring>
#include <iostream>
#include <new>
#include <string>

#include "emovc/converter/converter.hpp"
#include "emovc/error.hpp"
#include "emovc/harness/commands.hpp"

struct emovc_config {
  emovc::harness::RunConfig cfg;
};

struct emovc_model {
  emovc::converter::ModelBundle bundle;
  std::string combo;
};

namespace {

thread_local std::string g_last_error;

emovc_status status_of(emovc::ErrorCode c) {
  switch (c) {
    case emovc::ErrorCode::contract_violation: return EMOVC_ERR_CONTRACT;
    case emovc::ErrorCode::non_finite: return EMOVC_ERR_NON_FINITE;
    case emovc::ErrorCode::degenerate: return EMOVC_ERR_DEGENERATE;
    case emovc::ErrorCode::configuration: return EMOVC_ERR_CONFIGURATION;
    case emovc::ErrorCode::io: return EMOVC_ERR_IO;
    case emovc::ErrorCode::insufficient_input: return EMOVC_ERR_INSUFFICIENT;
    case emovc::ErrorCode::undefined_metric: return EMOVC_ERR_UNDEFINED_METRIC;
  }
  return EMOVC_ERR_INTERNAL;
}

// Runs f, converting every exception into a status and a thread-local message.
template <class F>
emovc_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return EMOVC_OK;
  } catch (const emovc::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return EMOVC_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) emovc::fail(emovc::ErrorCode::contract_violation, std::string(what) + " must not be null");
}

}  // namespace

extern "C" {

const char* emovc_version(void) { return "0.1.0"; }

const char* emovc_last_error(void) { return g_last_error.c_str(); }

const char* emovc_status_name(emovc_status s) {
  switch (s) {
    case EMOVC_OK: return "ok";
    case EMOVC_ERR_CONTRACT: return "contract_violation";
    case EMOVC_ERR_NON_FINITE: return "non_finite";
    case EMOVC_ERR_DEGENERATE: return "degenerate";
    case EMOVC_ERR_CONFIGURATION: return "configuration";
    case EMOVC_ERR_IO: return "io";
    case EMOVC_ERR_INSUFFICIENT: return "insufficient_input";
    case EMOVC_ERR_UNDEFINED_METRIC: return "undefined_metric";
    case EMOVC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

emovc_status emovc_config_create(emovc_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new emovc_config{};
  });
}

void emovc_config_destroy(emovc_config* config) { delete config; }

emovc_status emovc_config_set(emovc_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->cfg.set(key, value);
  });
}

emovc_status emovc_config_load(emovc_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    config->cfg.load_file(path);
  });
}

emovc_status emovc_config_get(const emovc_config* config, const char* key, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    const std::string& v = config->cfg.get(key);
    if (needed) *needed = v.size() + 1;
    if (buf && cap > v.size()) std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

emovc_status emovc_config_hash(const emovc_config* config, uint64_t* out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = config->cfg.hash();
  });
}

size_t emovc_config_key_count(void) { return emovc::harness::config_keys().size(); }

emovc_status emovc_config_key_info(size_t index, const char** name, const char** default_value, const char** help) {
  return guarded([&] {
    const auto& keys = emovc::harness::config_keys();
    if (index >= keys.size()) emovc::fail(emovc::ErrorCode::contract_violation, "config key index out of range");
    if (name) *name = keys[index].name.c_str();
    if (default_value) *default_value = keys[index].default_value.c_str();
    if (help) *help = keys[index].help.c_str();
  });
}

emovc_status emovc_run(const char* command, const emovc_config* config) {
  namespace h = emovc::harness;
  return guarded([&] {
    need(command, "command");
    need(config, "config");
    const std::string cmd = command;
    const auto& c = config->cfg;
    if (cmd == "synth-corpus") {
      h::synth_corpus(c);
    } else if (cmd == "extract") {
      h::extract(c);
    } else if (cmd == "train") {
      h::train(c);
    } else if (cmd == "convert") {
      h::convert(c);
    } else if (cmd == "evaluate") {
      std::cout << emovc::evalkit::render_table(h::evaluate(c));
    } else if (cmd == "report") {
      std::cout << h::report(c);
    } else if (cmd == "experiment") {
      const auto r = h::experiment(c);
      std::cout << emovc::evalkit::render_table(r.reports);
      for (const auto& [name, why] : r.failures) std::cout << "FAILED " << name << ": " << why << '\n';
    } else {
      emovc::fail(emovc::ErrorCode::configuration, "unknown command '" + cmd + "'");
    }
    std::cout.flush();
  });
}

emovc_status emovc_model_load(const char* path, emovc_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto bundle = emovc::converter::load_bundle(path);
    const auto combo = emovc::model::combo_name(bundle.combo());
    *out = new emovc_model{std::move(bundle), combo};
  });
}

void emovc_model_destroy(emovc_model* model) { delete model; }

const char* emovc_model_combo(const emovc_model* model) { return model ? model->combo.c_str() : ""; }
const char* emovc_model_emotion_a(const emovc_model* model) { return model ? model->bundle.emotion_a.c_str() : ""; }
const char* emovc_model_emotion_b(const emovc_model* model) { return model ? model->bundle.emotion_b.c_str() : ""; }

emovc_status emovc_model_convert_wav(const emovc_model* model, const char* input_wav, const char* output_wav,
                                     emovc_direction direction) {
  return guarded([&] {
    need(model, "model");
    need(input_wav, "input_wav");
    need(output_wav, "output_wav");
    if (direction != EMOVC_A_TO_B && direction != EMOVC_B_TO_A)
      emovc::fail(emovc::ErrorCode::contract_violation, "direction must be EMOVC_A_TO_B or EMOVC_B_TO_A");
    const auto fs = emovc::dsp::analyze(emovc::dsp::read_wav(input_wav));
    const auto dir = direction == EMOVC_A_TO_B ? emovc::converter::Direction::a_to_b : emovc::converter::Direction::b_to_a;
    emovc::dsp::write_wav(output_wav, emovc::converter::convert_utterance(model->bundle, fs, dir).waveform);
  });
}

}  // extern "C"
