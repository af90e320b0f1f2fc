#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chardemand {

enum class ErrorKind {
  degenerate_cross_section,
  invalid_input,
  domain,
  equilibrium_ill_posed,
  index,
  singleton_firm,
  singular_design,
  empty_window,
  thin_cross_section,
  coverage,
  inconsistent_beliefs,
  ill_conditioned_beliefs,
  decomposition,
  resample,
  internal_consistency,
  parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries the module and operation that
// produced it so the CLI can print a structured diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string operation,
        const std::string& cause);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string operation_;
  std::string cause_;
};

}  // namespace chardemand
