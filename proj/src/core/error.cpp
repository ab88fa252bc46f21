#include "sinusseg/core/error.hpp"

namespace sinusseg {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::Row: return "row error";
    case ErrorKind::Empty: return "empty-annotation error";
    case ErrorKind::Degenerate: return "degenerate-polygon error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Count: return "count error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Pairing: return "pairing error";
    case ErrorKind::Divergence: return "divergence";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace sinusseg
