#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace offroad {

enum class Errc {
  invalid_disparity,
  out_of_range,
  dimension,
  encoding_arity,
  format,
  consistency,
  range,
  unknown_color,
  empty_dataset,
  shape,
  config,
  undefined_metric,
  usage,
  io,
};

std::string_view to_string(Errc code);

/// Exception type thrown by every module. The code identifies the failure
/// class so callers and tests can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_disparity: return "invalid disparity";
    case Errc::out_of_range: return "out of range";
    case Errc::dimension: return "dimension mismatch";
    case Errc::encoding_arity: return "encoding arity";
    case Errc::format: return "format error";
    case Errc::consistency: return "consistency error";
    case Errc::range: return "range error";
    case Errc::unknown_color: return "unknown color";
    case Errc::empty_dataset: return "empty dataset";
    case Errc::shape: return "shape error";
    case Errc::config: return "config error";
    case Errc::undefined_metric: return "undefined metric";
    case Errc::usage: return "usage error";
    case Errc::io: return "i/o error";
  }
  return "error";
}

}  // namespace offroad
