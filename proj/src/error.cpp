#include "chardemand/error.hpp"

namespace chardemand {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::degenerate_cross_section: return "degenerate-cross-section";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::equilibrium_ill_posed: return "equilibrium-ill-posed";
    case ErrorKind::index: return "index";
    case ErrorKind::singleton_firm: return "singleton-firm";
    case ErrorKind::singular_design: return "singular-design";
    case ErrorKind::empty_window: return "empty-window";
    case ErrorKind::thin_cross_section: return "thin-cross-section";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::inconsistent_beliefs: return "inconsistent-beliefs";
    case ErrorKind::ill_conditioned_beliefs: return "ill-conditioned-beliefs";
    case ErrorKind::decomposition: return "decomposition";
    case ErrorKind::resample: return "resample";
    case ErrorKind::internal_consistency: return "internal-consistency";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string module, std::string operation,
             const std::string& cause)
    : std::runtime_error(module + "::" + operation + ": " + cause),
      kind_(kind),
      module_(std::move(module)),
      operation_(std::move(operation)),
      cause_(cause) {}

}  // namespace chardemand
