#include "rydsim/rydsim.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "rydsim/config.hpp"
#include "rydsim/errors.hpp"
#include "rydsim/experiment.hpp"

struct rydsim_config {
  rydsim::RunConfig config;
};

struct rydsim_result {
  rydsim::ExperimentResult result;
  rydsim::RunConfig config;
  unsigned threads = 1;
};

namespace {

thread_local std::string g_last_error;

rydsim_status fail(rydsim_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <class Body>
rydsim_status guarded(Body&& body) {
  try {
    body();
    g_last_error.clear();
    return RYDSIM_OK;
  } catch (const rydsim::Error& e) {
    return fail(static_cast<rydsim_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RYDSIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RYDSIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RYDSIM_ERR_INTERNAL, "unknown exception");
  }
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void require(const void* pointer, const char* name) {
  if (!pointer) throw rydsim::DomainError(std::string(name) + " must not be null");
}

}  // namespace

extern "C" {

const char* rydsim_last_error(void) { return g_last_error.c_str(); }

const char* rydsim_version(void) { return "1.0.0"; }

void rydsim_string_free(char* text) { std::free(text); }

rydsim_status rydsim_config_default(rydsim_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new rydsim_config{};
  });
}

rydsim_status rydsim_config_load(const char* path, rydsim_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new rydsim_config{rydsim::load_config(path)};
  });
}

rydsim_status rydsim_config_parse(const char* text, rydsim_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new rydsim_config{rydsim::parse_config(text)};
  });
}

rydsim_status rydsim_config_set(rydsim_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    rydsim::set_config_value(config->config, key, value);
  });
}

rydsim_status rydsim_config_echo(const rydsim_config* config, char** out_text) {
  return guarded([&] {
    require(config, "config");
    require(out_text, "out_text");
    *out_text = duplicate(rydsim::echo_config(config->config));
  });
}

void rydsim_config_free(rydsim_config* config) { delete config; }

rydsim_status rydsim_run_experiment(const rydsim_config* config, const char* preset,
                                    unsigned threads, rydsim_result** out) {
  return guarded([&] {
    require(config, "config");
    require(preset, "preset");
    require(out, "out");
    const unsigned n = threads == 0 ? 1 : threads;
    auto result = std::make_unique<rydsim_result>();
    result->result = rydsim::run_experiment(rydsim::parse_preset(preset), config->config, n);
    result->config = config->config;
    result->threads = n;
    *out = result.release();
  });
}

rydsim_status rydsim_result_write(const rydsim_result* result, const char* out_dir, int svg) {
  return guarded([&] {
    require(result, "result");
    require(out_dir, "out_dir");
    rydsim::write_artifacts(result->result, result->config, out_dir, svg != 0, result->threads);
  });
}

rydsim_status rydsim_result_csv(const rydsim_result* result, char** out_text) {
  return guarded([&] {
    require(result, "result");
    require(out_text, "out_text");
    *out_text = duplicate(rydsim::series_csv(result->result.series));
  });
}

rydsim_status rydsim_result_json(const rydsim_result* result, char** out_text) {
  return guarded([&] {
    require(result, "result");
    require(out_text, "out_text");
    *out_text = duplicate(rydsim::metadata_json(result->result, result->config, result->threads));
  });
}

size_t rydsim_result_series_count(const rydsim_result* result) {
  return result ? result->result.series.size() : 0;
}

rydsim_status rydsim_result_series(const rydsim_result* result, size_t index, const double** x,
                                   const double** value, size_t* length) {
  return guarded([&] {
    require(result, "result");
    require(x, "x");
    require(value, "value");
    require(length, "length");
    if (index >= result->result.series.size()) {
      throw rydsim::DomainError("series index " + std::to_string(index) + " out of range");
    }
    const auto& s = result->result.series[index];
    *x = s.x.data();
    *value = s.value.data();
    *length = s.x.size();
  });
}

double rydsim_result_number_density(const rydsim_result* result) {
  return result ? result->result.density.number_density : 0.0;
}

double rydsim_result_wall_time(const rydsim_result* result) {
  return result ? result->result.wall_time_s : 0.0;
}

void rydsim_result_free(rydsim_result* result) { delete result; }

rydsim_status rydsim_calibrate_density(const rydsim_config* config, double target,
                                       unsigned threads, double* out_density) {
  return guarded([&] {
    require(config, "config");
    require(out_density, "out_density");
    rydsim::RunConfig copy = config->config;
    copy.cell.number_density.reset();
    copy.cell.target_transmission = target;
    if (!(target > 0.0 && target <= 1.0)) {
      throw rydsim::DomainError("target transmission must lie in (0, 1]");
    }
    *out_density = rydsim::resolve_density(copy, threads == 0 ? 1 : threads).number_density;
  });
}

rydsim_status rydsim_fit_slope(const double* x, const double* y, size_t n, int degree,
                               double* slope_out, double* residual_out) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(slope_out, "slope_out");
    const rydsim::SlopeCurve curve =
        rydsim::fit_slope(std::vector<double>(x, x + n), std::vector<double>(y, y + n), degree);
    std::copy(curve.slope.begin(), curve.slope.end(), slope_out);
    if (residual_out) *residual_out = curve.residual;
  });
}

rydsim_status rydsim_slopes_from_csv(const char* path, int degree, char** out_text) {
  return guarded([&] {
    require(path, "path");
    require(out_text, "out_text");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw rydsim::IoError(std::string("cannot open '") + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::vector<rydsim::Series> series = rydsim::parse_series_csv(buffer.str(), path);
    for (auto& s : series) {
      if (s.variable != rydsim::SweepVariable::kRfAmplitude) {
        throw rydsim::DomainError(std::string(path) + ": slopes need traces over the RF field");
      }
      s.value = rydsim::fit_slope(s.x, s.value, degree).slope;
    }
    *out_text = duplicate(rydsim::series_csv(series));
  });
}

rydsim_status rydsim_sensitivity(double slope, double power, double eta, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = rydsim::sensitivity(slope, power, eta);
  });
}

}  // extern "C"
