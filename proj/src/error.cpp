#include "shtnet/error.hpp"

namespace shtnet {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::domain: return "domain error";
    case Errc::invalid_geometry: return "invalid geometry";
    case Errc::invalid_subset: return "invalid subset";
    case Errc::shape: return "shape error";
    case Errc::too_short: return "signal too short";
    case Errc::numeric_domain: return "numeric domain error";
    case Errc::insufficient_resolution: return "insufficient resolution";
    case Errc::cannot_subset: return "cannot subset";
    case Errc::cannot_set_snr: return "cannot set SNR";
    case Errc::weight_format: return "weight format error";
    case Errc::format: return "format error";
    case Errc::config: return "configuration error";
    case Errc::not_found: return "file not found";
    case Errc::io: return "I/O error";
  }
  return "error";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace shtnet
