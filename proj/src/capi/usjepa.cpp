#include "usjepa.h"

#include <functional>
#include <string>

#include "core/config.hpp"
#include "core/pipeline.hpp"

struct usj_run {
  usjepa::RunConfig config;
  std::string summary;
  std::string last_error;
};

namespace {

usj_status classify(const std::exception& e, usj_run* run) {
  if (run) run->last_error = e.what();
  if (dynamic_cast<const usjepa::ConfigError*>(&e)) return USJ_ERR_CONFIG;
  if (dynamic_cast<const usjepa::IoError*>(&e)) return USJ_ERR_IO;
  return USJ_ERR_RUNTIME;
}

usj_status open_impl(usj_run** out_run, const std::function<usjepa::RunConfig()>& parse) {
  if (!out_run) return USJ_ERR_CONFIG;
  *out_run = nullptr;
  auto run = new usj_run();
  try {
    run->config = parse();
  } catch (const std::exception& e) {
    const usj_status status = classify(e, run);
    delete run;
    return status == USJ_OK ? USJ_ERR_CONFIG : status;
  }
  *out_run = run;
  return USJ_OK;
}

}  // namespace

extern "C" {

const char* usj_version(void) { return "usjepa 1.0.0"; }

usj_status usj_run_open(const char* config_path, usj_run** out_run) {
  if (!config_path) return USJ_ERR_CONFIG;
  const std::string path = config_path;
  return open_impl(out_run, [path] { return usjepa::parse_config_file(path); });
}

usj_status usj_run_open_json(const char* config_json, usj_run** out_run) {
  if (!config_json) return USJ_ERR_CONFIG;
  const std::string text = config_json;
  return open_impl(out_run, [text] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
      throw usjepa::ConfigError(std::string("config: ") + e.what());
    }
    return usjepa::parse_config_json(j);
  });
}

usj_status usj_run_set(usj_run* run, const char* key, const char* value) {
  if (!run) return USJ_ERR_CONFIG;
  if (!key || !value) {
    run->last_error = "null override key or value";
    return USJ_ERR_CONFIG;
  }
  try {
    usjepa::apply_override(run->config, key, value);
    run->last_error.clear();
    return USJ_OK;
  } catch (const std::exception& e) {
    return classify(e, run);
  }
}

usj_status usj_run_execute(usj_run* run, const char* mode) {
  if (!run) return USJ_ERR_CONFIG;
  if (!mode) {
    run->last_error = "null mode";
    return USJ_ERR_CONFIG;
  }
  try {
    run->summary = usjepa::run_mode(run->config, mode).dump(2);
    run->last_error.clear();
    return USJ_OK;
  } catch (const std::exception& e) {
    return classify(e, run);
  }
}

const char* usj_run_summary(const usj_run* run) { return run ? run->summary.c_str() : ""; }

const char* usj_run_last_error(const usj_run* run) { return run ? run->last_error.c_str() : ""; }

void usj_run_close(usj_run* run) { delete run; }

}  // extern "C"
