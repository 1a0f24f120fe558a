#pragma once

#include <stdexcept>
#include <string>

namespace cforge {

// Single failure taxonomy for the whole engine. The CLI maps `usage` and
// `config` to exit code 1 and everything else to exit code 2.
enum class errc {
  usage,
  config,
  io,
  parse,
  schema,
  empty_input,
  degenerate_series,
  shape,
  contract,
  numeric,
  vocabulary,
  data,
  sample_size,
  rank,
  singular,
  domain,
  window,
  scheme,
  procedure,
};

const char* errc_name(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message);

  errc code() const { return code_; }

  // Stable one-line form, e.g. "error [schema]: duplicate (country, year) pair ESP,1960".
  std::string line() const;

 private:
  errc code_;
};

[[noreturn]] void fail(errc code, const std::string& message);

}  // namespace cforge
