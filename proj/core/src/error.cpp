#include "cforge/error.hpp"

namespace cforge {

const char* errc_name(errc code) {
  switch (code) {
    case errc::usage: return "usage";
    case errc::config: return "config";
    case errc::io: return "io";
    case errc::parse: return "parse";
    case errc::schema: return "schema";
    case errc::empty_input: return "empty-input";
    case errc::degenerate_series: return "degenerate-series";
    case errc::shape: return "shape";
    case errc::contract: return "contract";
    case errc::numeric: return "numeric";
    case errc::vocabulary: return "vocabulary";
    case errc::data: return "data";
    case errc::sample_size: return "sample-size";
    case errc::rank: return "rank";
    case errc::singular: return "singular";
    case errc::domain: return "domain";
    case errc::window: return "window";
    case errc::scheme: return "scheme";
    case errc::procedure: return "procedure";
  }
  return "unknown";
}

Error::Error(errc code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

std::string Error::line() const {
  return std::string("error [") + errc_name(code_) + "]: " + what();
}

void fail(errc code, const std::string& message) { throw Error(code, message); }

}  // namespace cforge
