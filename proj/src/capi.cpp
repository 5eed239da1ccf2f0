#include "checkworthy.h"

#include <memory>
#include <string>
#include <vector>

#include "pipeline.hpp"

struct cw_pipeline {
  std::unique_ptr<cw::Pipeline> impl;
  std::string last_error;
  std::string last_output;
};

namespace {

cw_status status_of(cw::ErrorKind kind) {
  switch (kind) {
    case cw::ErrorKind::MissingInput:
      return CW_ERROR_MISSING_INPUT;
    case cw::ErrorKind::Dimension:
    case cw::ErrorKind::Integrity:
    case cw::ErrorKind::ModelFormat:
      return CW_ERROR_BAD_DATA;
    case cw::ErrorKind::MissingModel:
      return CW_ERROR_MISSING_MODEL;
    case cw::ErrorKind::UnknownId:
      return CW_ERROR_UNKNOWN_ID;
    default:
      return CW_ERROR;
  }
}

template <typename Fn>
cw_status run_stage(cw_pipeline* p, Fn&& stage) {
  if (p == nullptr) return CW_ERROR;
  if (!p->impl) {
    p->last_error = "pipeline handle was not opened successfully";
    return CW_ERROR;
  }
  try {
    p->last_output = stage(*p->impl);
    p->last_error.clear();
    return CW_OK;
  } catch (const cw::Error& e) {
    p->last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    p->last_error = e.what();
    return CW_ERROR;
  }
}

}  // namespace

extern "C" {

const char* cw_version(void) { return "0.1.0"; }

const char* cw_status_name(cw_status status) {
  switch (status) {
    case CW_OK:
      return "ok";
    case CW_ERROR:
      return "error";
    case CW_ERROR_MISSING_INPUT:
      return "missing-input";
    case CW_ERROR_BAD_DATA:
      return "bad-data";
    case CW_ERROR_MISSING_MODEL:
      return "missing-model";
    case CW_ERROR_UNKNOWN_ID:
      return "unknown-id";
  }
  return "unknown-status";
}

cw_status cw_pipeline_open(const char* config_path, const char* const* overrides,
                           size_t n_overrides, cw_pipeline** out) {
  if (out == nullptr) return CW_ERROR;
  auto handle = std::make_unique<cw_pipeline>();
  cw_status status = CW_OK;
  try {
    if (config_path == nullptr) {
      throw cw::Error(cw::ErrorKind::Config, "config path is null");
    }
    std::vector<std::string> override_list;
    for (size_t i = 0; i < n_overrides; ++i) {
      if (overrides == nullptr || overrides[i] == nullptr) {
        throw cw::Error(cw::ErrorKind::Config, "null override string");
      }
      override_list.emplace_back(overrides[i]);
    }
    cw::PipelineConfig config = cw::load_config(config_path, override_list);
    handle->impl = std::make_unique<cw::Pipeline>(std::move(config));
  } catch (const cw::Error& e) {
    handle->last_error = e.what();
    status = status_of(e.kind());
  } catch (const std::exception& e) {
    handle->last_error = e.what();
    status = CW_ERROR;
  }
  *out = handle.release();
  return status;
}

void cw_pipeline_close(cw_pipeline* pipeline) { delete pipeline; }

const char* cw_pipeline_last_error(const cw_pipeline* pipeline) {
  return pipeline == nullptr ? "null pipeline handle" : pipeline->last_error.c_str();
}

const char* cw_pipeline_last_output(const cw_pipeline* pipeline) {
  return pipeline == nullptr ? "" : pipeline->last_output.c_str();
}

cw_status cw_pipeline_extract(cw_pipeline* pipeline) {
  return run_stage(pipeline, [](cw::Pipeline& p) { return p.extract(); });
}

cw_status cw_pipeline_featurize(cw_pipeline* pipeline) {
  return run_stage(pipeline, [](cw::Pipeline& p) { return p.featurize(); });
}

cw_status cw_pipeline_train(cw_pipeline* pipeline) {
  return run_stage(pipeline, [](cw::Pipeline& p) { return p.train_models(); });
}

cw_status cw_pipeline_eval(cw_pipeline* pipeline) {
  return run_stage(pipeline, [](cw::Pipeline& p) { return p.evaluate(); });
}

cw_status cw_pipeline_predict(cw_pipeline* pipeline) {
  return run_stage(pipeline, [](cw::Pipeline& p) { return p.predict_submission(); });
}

cw_status cw_pipeline_explain(cw_pipeline* pipeline, const char* sentence_id) {
  if (sentence_id == nullptr) {
    if (pipeline != nullptr) pipeline->last_error = "sentence id is null";
    return CW_ERROR;
  }
  const std::string id = sentence_id;
  return run_stage(pipeline, [&id](cw::Pipeline& p) { return p.explain(id); });
}

}  // extern "C"
