#pragma once

#include <stdexcept>
#include <string>

namespace shtnet {

enum class Errc {
  domain,
  invalid_geometry,
  invalid_subset,
  shape,
  too_short,
  numeric_domain,
  insufficient_resolution,
  cannot_subset,
  cannot_set_snr,
  weight_format,
  format,
  config,
  not_found,
  io,
};

const char* errc_name(Errc code) noexcept;

/// Library error. `code()` identifies the failure class; the CLI maps
/// Errc::io (read/write failure on an open file) to exit status 3 and
/// everything else, including missing inputs (Errc::not_found), to 2.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace shtnet
